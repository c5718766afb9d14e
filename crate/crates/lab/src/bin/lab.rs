//! Command-line front end. Exit codes: 0 pass, 1 criterion failure,
//! 2 usage, 3 precondition.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lkcurv::Error;
use lkcurv_lab::emit::{emit, Emit, Format};
use lkcurv_lab::{corpus, harness, CorpusEntry, LabConfig};

#[derive(Parser)]
#[command(name = "lab", about = "Local Lipschitz-Killing curvature experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON file with run defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: Format,
}

#[derive(Args, Clone)]
struct Budget {
    /// Comma-separated decreasing radii.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    radii: Option<Coords>,
    /// Monte Carlo samples per radius. For curvatures this is split evenly
    /// between planes and base points.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    planes: Option<usize>,
    #[arg(long)]
    fibers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus registry.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Λ_k^loc at a point.
    Curvature {
        #[arg(long)]
        set: String,
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        point: Coords,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        common: Common,
    },
    /// Θ_d at a point, d the dimension of the set.
    Density {
        #[arg(long)]
        set: String,
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        point: Coords,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        common: Common,
    },
    /// Λ_d^loc against Θ_d at a point.
    Consistency {
        #[arg(long)]
        set: String,
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        point: Coords,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        common: Common,
    },
    /// Λ_k^loc along a stratum.
    Sweep {
        #[arg(long)]
        set: String,
        /// Defaults to the entry's sweep stratum.
        #[arg(long)]
        stratum: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        continuity_tol: Option<f64>,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        common: Common,
    },
    /// Whitney (b), Kuo (r) and Verdier (w) for a pair of strata at a point.
    Regularity {
        #[arg(long)]
        set: String,
        /// Upper and lower stratum, "X,Y".
        #[arg(long)]
        pair: String,
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        at: Coords,
        #[command(flatten)]
        common: Common,
    },
    /// Flow of the stratified retraction field.
    Retract {
        #[arg(long)]
        set: String,
        #[arg(long)]
        r: f64,
        #[arg(long = "r-prime")]
        r_prime: f64,
        #[arg(long)]
        r0: Option<f64>,
        #[arg(long)]
        starts: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// ψ and tube growth quotients of a family's fibers over a (t, r) grid.
    Bounds {
        #[arg(long)]
        set: String,
        /// Parameter values, "t1,t2,...".
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        t: Coords,
        /// Radii, "r1,r2,...".
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        r: Coords,
        /// Tube radius as a fraction of r.
        #[arg(long, default_value_t = 0.125)]
        eps_ratio: f64,
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Recompute every numeric annotation of one entry or the whole corpus.
    Audit {
        /// All entries when omitted.
        #[arg(long)]
        set: Option<String>,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    List,
    /// Print an entry's source file.
    Show { id: String },
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse::<Format>().map_err(|e| e.to_string())
}

/// Comma-separated numbers.
#[derive(Clone, Debug)]
struct Coords(Vec<f64>);

fn parse_list(s: &str) -> Result<Coords, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Coords)
}

enum Failure {
    Criterion(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn config(common: &Common, budget: Option<&Budget>, curvature: bool) -> Result<LabConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => LabConfig::from_path(p)?,
        None => LabConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(b) = budget {
        if let Some(r) = &b.radii {
            cfg.radii = r.0.clone();
        }
        if let Some(n) = b.samples {
            if curvature {
                let side = (n as f64).sqrt().round().max(1.0) as usize;
                cfg.planes = side;
                cfg.fibers = side;
            } else {
                cfg.samples = n;
            }
        }
        if let Some(p) = b.planes {
            cfg.planes = p;
        }
        if let Some(f) = b.fibers {
            cfg.fibers = f;
        }
    }
    Ok(cfg)
}

fn write<T: Emit>(result: &T, common: &Common) -> Result<(), Failure> {
    Ok(emit(result, common.format, common.out.as_deref())?)
}

fn entry(id: &str) -> Result<CorpusEntry, Failure> {
    Ok(corpus::load(id)?)
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Corpus { action: CorpusAction::List } => {
            for e in corpus::load_all()? {
                println!("{}\t{}\t{}", e.id, e.declared_dim(), e.notes);
            }
            Ok(())
        }
        Command::Corpus { action: CorpusAction::Show { id } } => {
            let text = corpus::source(&id)?;
            print!("{text}");
            Ok(())
        }
        Command::Curvature { set, point, k, budget, common } => {
            let cfg = config(&common, Some(&budget), true)?;
            let p = harness::run_curvature(&entry(&set)?, &point.0, k, &cfg)?;
            write(&p, &common)
        }
        Command::Density { set, point, budget, common } => {
            let cfg = config(&common, Some(&budget), false)?;
            let p = harness::run_density(&entry(&set)?, &point.0, &cfg)?;
            write(&p, &common)
        }
        Command::Consistency { set, point, budget, common } => {
            let cfg = config(&common, Some(&budget), false)?;
            let r = harness::run_consistency(&entry(&set)?, &point.0, &cfg)?;
            write(&r, &common)?;
            if r.passed {
                Ok(())
            } else {
                Err(Failure::Criterion(format!(
                    "curvature and density differ by {:.4} > {:.4}",
                    r.difference, r.tolerance
                )))
            }
        }
        Command::Sweep { set, stratum, k, points, continuity_tol, budget, common } => {
            let mut cfg = config(&common, Some(&budget), true)?;
            if let Some(t) = continuity_tol {
                cfg.continuity_tol = t;
            }
            let e = entry(&set)?;
            let spec = e.sweep.clone();
            let stratum = stratum
                .or_else(|| spec.as_ref().map(|s| s.stratum.clone()))
                .ok_or_else(|| Error::Invalid(format!("{set} has no default sweep stratum; pass --stratum")))?;
            let k = k
                .or_else(|| spec.as_ref().map(|s| s.k))
                .ok_or_else(|| Error::Invalid(format!("{set} has no default sweep order; pass --k")))?;
            let s = harness::run_sweep(&e, &stratum, k, points.unwrap_or(cfg.sweep_points), &cfg)?;
            write(&s, &common)?;
            if s.degraded {
                Err(Failure::Criterion(format!("{} of {} sweep points inconclusive", s.inconclusive, s.t.len())))
            } else if !s.continuous {
                Err(Failure::Criterion(format!(
                    "max jump {:.4} exceeds {:.4} + 2·{:.4}",
                    s.max_jump, s.continuity_tol, s.jump_stderr
                )))
            } else {
                Ok(())
            }
        }
        Command::Regularity { set, pair, at, common } => {
            let cfg = config(&common, None, false)?;
            let (x, y) = pair
                .split_once(',')
                .ok_or_else(|| Error::Invalid(format!("--pair expects X,Y, got {pair}")))?;
            let run = harness::run_regularity(&entry(&set)?, x.trim(), y.trim(), &at.0, &cfg)?;
            write(&run, &common)?;
            if run.matches {
                Ok(())
            } else {
                Err(Failure::Criterion("verdicts differ from the annotated ones".into()))
            }
        }
        Command::Retract { set, r, r_prime, r0, starts, common } => {
            let cfg = config(&common, None, false)?;
            let rep = harness::run_retract(&entry(&set)?, r, r_prime, r0, starts.unwrap_or(cfg.retract_starts), &cfg)?;
            write(&rep, &common)?;
            if rep.bounds.violations.is_empty() {
                Ok(())
            } else {
                Err(Failure::Criterion(rep.bounds.violations.join("; ")))
            }
        }
        Command::Bounds { set, t, r, eps_ratio, samples, common } => {
            let mut cfg = config(&common, None, false)?;
            if let Some(n) = samples {
                cfg.samples = n;
            }
            let g = harness::run_bounds_grid(&entry(&set)?, &t.0, &r.0, eps_ratio, &cfg)?;
            write(&g, &common)?;
            if g.psi_sup.is_finite() && g.tube_sup.is_finite() {
                Ok(())
            } else {
                Err(Failure::Criterion("unbounded growth quotient".into()))
            }
        }
        Command::Audit { set, budget, common } => {
            let cfg = config(&common, Some(&budget), true)?;
            let entries = match set {
                Some(id) => vec![entry(&id)?],
                None => corpus::load_all()?,
            };
            let mut checks = Vec::new();
            for e in &entries {
                checks.extend(harness::audit_annotations(e, &cfg)?);
            }
            write(&checks, &common)?;
            let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.entry, c.what)).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Criterion(format!("annotations not reproduced: {}", failed.join("; "))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Criterion(msg)) => {
            eprintln!("criterion failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Invalid(_) | Error::Domain(_) => 2,
                Error::Precondition(_) | Error::EpsTooLarge(_) | Error::Unsupported(_) => 3,
                _ => 1,
            })
        }
    }
}
