//! Bracketed, safeguarded Newton iteration for scalar monotone equations.

/// Finds a root of `f` inside `[a, b]`, where `f` returns `(value, derivative)`.
///
/// The bracket is kept across iterations; a Newton step that leaves it, or
/// that shrinks too slowly, is replaced by bisection. Returns `None` when the
/// end points do not bracket a sign change or the iteration cap is reached.
pub(crate) fn newton_bracketed<F>(
    mut f: F,
    a: f64,
    b: f64,
    guess: Option<f64>,
    tol: f64,
    max_iter: usize,
) -> Option<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (fa, _) = f(a);
    if fa == 0.0 {
        return Some(a);
    }
    let (fb, _) = f(b);
    if fb == 0.0 {
        return Some(b);
    }
    if fa.is_nan() || fb.is_nan() || (fa > 0.0) == (fb > 0.0) {
        return None;
    }
    // `neg` always holds the end with f < 0
    let (mut neg, mut pos) = if fa < 0.0 { (a, b) } else { (b, a) };
    let mut x = match guess {
        Some(g) if g > a.min(b) && g < a.max(b) => g,
        _ => 0.5 * (a + b),
    };
    let mut step_old = (b - a).abs();
    let mut step = step_old;

    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx.abs() <= tol {
            return Some(x);
        }
        if fx < 0.0 {
            neg = x;
        } else {
            pos = x;
        }
        let (lo, hi) = if neg < pos { (neg, pos) } else { (pos, neg) };
        if hi - lo <= 1e-14 * (1.0 + x.abs()) {
            return Some(x);
        }
        let newton = x - fx / dfx;
        let usable = dfx.is_finite()
            && dfx != 0.0
            && newton > lo
            && newton < hi
            && (2.0 * fx).abs() <= (step_old * dfx).abs();
        step_old = step;
        if usable {
            step = fx / dfx;
            x = newton;
        } else {
            step = 0.5 * (hi - lo);
            x = lo + step;
        }
    }
    None
}
