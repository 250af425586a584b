use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gmppt::harness::{
    default_output_dir, oracle, parse_scenario, random_sweep, run_scenario, run_tracker, Algorithm,
    Scenario, SweepConfig,
};
use gmppt::plant::{calibrate_module, DatasheetSpec, PvArray};

#[derive(Parser)]
#[command(name = "gmppt", version, about = "PV array simulation and global MPP tracking")]
struct Cli {
    /// Directory for written files (default: $GMPPT_OUT_DIR, else the current directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Initial,
    Psc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Tracker {
    Proposed,
    Baseline11,
    #[value(name = "p-and-o")]
    PAndO,
}

impl From<Tracker> for Algorithm {
    fn from(t: Tracker) -> Self {
        match t {
            Tracker::Proposed => Algorithm::Proposed,
            Tracker::Baseline11 => Algorithm::Baseline11,
            Tracker::PAndO => Algorithm::PerturbObserve,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the I-V/P-V curve of a scenario as CSV.
    Curve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "psc")]
        pattern: Which,
        #[arg(long, default_value_t = 0.25)]
        dv: f64,
    },
    /// Run one tracker on the shaded plant; write its trace and summary.
    Track {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "proposed")]
        algorithm: Tracker,
    },
    /// Run the full timeline with every configured tracker and compare.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run the proposed tracker on seeded random shading scenarios.
    Sweep {
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Fit single-diode parameters to datasheet values.
    Calibrate {
        #[arg(long, default_value_t = 30.0)]
        v_oc: f64,
        #[arg(long, default_value_t = 8.7)]
        i_sc: f64,
        #[arg(long, default_value_t = 24.0)]
        v_mpp: f64,
        #[arg(long, default_value_t = 8.2)]
        i_mpp: f64,
    },
}

type CliResult = Result<(), String>;

fn load(path: &Path) -> Result<Scenario, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf, String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}

fn run(cli: Cli) -> CliResult {
    let dir = cli.out_dir.unwrap_or_else(default_output_dir);
    let err = |e: gmppt::Error| e.to_string();
    match cli.cmd {
        Cmd::Curve {
            scenario,
            pattern,
            dv,
        } => {
            let sc = load(&scenario)?;
            let (tag, pat) = match pattern {
                Which::Initial => ("initial", sc.initial_pattern.clone()),
                Which::Psc => ("psc", sc.psc_pattern.clone()),
            };
            if !(dv > 0.0) {
                return Err(format!("--dv must be positive, got {dv}"));
            }
            let plant = PvArray::new(sc.array, pat).map_err(err)?;
            let curve = plant.sample_curve(0.0, sc.array.v_oc_stc(), dv).map_err(err)?;
            let path = write(&dir, &format!("{}_{tag}_curve.csv", sc.name), &curve.to_csv())?;
            let mpp = curve.max_power().expect("non-empty curve");
            println!("wrote {} ({} points)", path.display(), curve.points.len());
            println!("max power {:.2} W at {:.2} V", mpp.p(), mpp.v);
        }
        Cmd::Track {
            scenario,
            algorithm,
        } => {
            let sc = load(&scenario)?;
            let a = Algorithm::from(algorithm);
            let plant = sc.psc_plant().map_err(err)?;
            let o = oracle(&plant).map_err(err)?;
            let v0 = 0.8 * sc.array.n_series as f64 * sc.tracker.v_oc_mod;
            let r = run_tracker(&sc, a, v0).map_err(err)?;
            let stem = format!("{}_{}", sc.name, a.as_str());
            let t = write(&dir, &format!("{stem}_trace.csv"), &r.trace.to_csv())?;
            let summary = r.summary(o.p()).to_kv();
            let s = write(&dir, &format!("{stem}_summary.txt"), &summary)?;
            print!("{summary}");
            println!("wrote {} and {}", t.display(), s.display());
        }
        Cmd::Compare { scenario } => {
            let sc = load(&scenario)?;
            let rep = run_scenario(&sc).map_err(err)?;
            let path = write(&dir, &format!("{}_compare.csv", sc.name), &rep.to_csv())?;
            print!("{}", rep.to_table());
            println!("wrote {}", path.display());
        }
        Cmd::Sweep { count, seed } => {
            let module = calibrate_module(DatasheetSpec::reference()).map_err(err)?;
            let rep = random_sweep(&SweepConfig::new(count, seed), module).map_err(err)?;
            let stem = format!("sweep_{seed}_{count}");
            let rows = write(&dir, &format!("{stem}.csv"), &rep.to_csv())?;
            let agg = rep.aggregate();
            let summary = write(&dir, &format!("{stem}_summary.txt"), &agg)?;
            print!("{agg}");
            println!("wrote {} and {}", rows.display(), summary.display());
        }
        Cmd::Calibrate {
            v_oc,
            i_sc,
            v_mpp,
            i_mpp,
        } => {
            let p = calibrate_module(DatasheetSpec::new(v_oc, i_sc, v_mpp, i_mpp)).map_err(err)?;
            println!("i_pv={:.9e}", p.i_pv);
            println!("i_o={:.9e}", p.i_o);
            println!("a_vt={:.9e}", p.a_vt);
            println!("r_s={:.9e}", p.r_s);
            println!("r_sh={:.9e}", p.r_sh);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
