/// Flags a shading change when the steady-state power moves by more than a
/// relative threshold between two consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDropDetector {
    pub threshold: f64,
    last: Option<f64>,
}

impl Default for PowerDropDetector {
    fn default() -> Self {
        Self::new(0.05)
    }
}

impl PowerDropDetector {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            last: None,
        }
    }

    /// Feeds one power sample; returns true when a change is detected.
    pub fn observe(&mut self, p: f64) -> bool {
        let fired = match self.last {
            Some(prev) if prev.abs() > 0.0 => ((p - prev) / prev).abs() > self.threshold,
            _ => false,
        };
        self.last = Some(p);
        fired
    }

    pub fn reset(&mut self) {
        self.last = None;
    }
}
