use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use qst_cli::{record, run, CliError, ExperimentConfig};

const EXPERIMENTS: &str = "\
Experiments:
  spectrum              bound-state energy, gap and wavevector roots (analytic vs dense),
                        plus the four lowest instantaneous eigenvalues over the protocol
  eigen-flow            instantaneous eigenvalues with three-level energies and the
                        ground-manifold splitting
  operator-fidelity     midpoint dark-state operator fidelity vs J0/mu0 for several distances
  adiabaticity          adiabaticity profile, A_max and A_max*t_max vs distance and t_max
  evolve                population time series of A, B, defect mode and medium
  fidelity-sweep        final transfer fidelity vs t_max, full and three-level models
  min-time-vs-distance  minimal transfer time vs distance with a log-linear fit
  robustness            ensemble fidelity vs t_max under coupling disorder and dephasing

Times (t_max, t_max_grid, search bounds) are in units of pi/J0; gamma is in units of J0.
Lists are comma separated; t_max_grid also accepts start:stop:step.
Config files hold `key = value` lines using the flag names; flags override the file.
Exit codes: 0 success, 1 I/O error, 2 invalid configuration, 3 numerical failure.";

/// Adiabatic state transfer through a defected tight-binding chain.
#[derive(Debug, Parser)]
#[command(name = "qst", version, after_help = EXPERIMENTS)]
struct Args {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    n_sites: Option<String>,
    /// Defect depth(s) in units of J.
    #[arg(long)]
    mu0: Option<String>,
    /// Peak pulse amplitude in units of J.
    #[arg(long)]
    j0: Option<String>,
    /// Peak pulse amplitude(s) relative to mu0; ignored when --j0 is given.
    #[arg(long)]
    j0_over_mu0: Option<String>,
    /// Transfer distance(s) d = 2l + 3.
    #[arg(long, visible_alias = "d")]
    distance: Option<String>,
    /// Attachment offset(s) from the defect; alternative to --distance.
    #[arg(long, conflicts_with = "distance")]
    l: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    #[arg(long)]
    t_max_grid: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// Coupling disorder strength(s).
    #[arg(long)]
    delta: Option<String>,
    /// Disorder ensemble size.
    #[arg(long)]
    realizations: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<String>,
    /// Omit the timestamp header and wall-time column.
    #[arg(long)]
    no_timestamp: bool,
    /// Time samples per trajectory or eigenvalue flow.
    #[arg(long)]
    samples: Option<String>,
    /// full, effective or both.
    #[arg(long)]
    method: Option<String>,
    /// Tolerated transfer error for the minimal-time search.
    #[arg(long)]
    target_error: Option<String>,
    #[arg(long)]
    search_lower: Option<String>,
    #[arg(long)]
    search_upper: Option<String>,
}

impl Args {
    fn overrides(&self) -> Vec<(String, String)> {
        let pairs = [
            ("experiment", &self.experiment),
            ("n_sites", &self.n_sites),
            ("mu0", &self.mu0),
            ("j0", &self.j0),
            ("j0_over_mu0", &self.j0_over_mu0),
            ("distance", &self.distance),
            ("l", &self.l),
            ("t_max", &self.t_max),
            ("t_max_grid", &self.t_max_grid),
            ("gamma", &self.gamma),
            ("delta", &self.delta),
            ("realizations", &self.realizations),
            ("seed", &self.seed),
            ("jobs", &self.jobs),
            ("format", &self.format),
            ("out", &self.out),
            ("samples", &self.samples),
            ("method", &self.method),
            ("target_error", &self.target_error),
            ("search_lower", &self.search_lower),
            ("search_upper", &self.search_upper),
        ];
        let mut out: Vec<(String, String)> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        if self.no_timestamp {
            out.push(("no_timestamp".into(), "true".into()));
        }
        out
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let file_text = match &args.config {
        Some(p) => Some(std::fs::read_to_string(p)?),
        None => None,
    };
    let cfg = ExperimentConfig::from_sources(file_text.as_deref(), &args.overrides())?;
    let records = run(&cfg)?;

    let header = (!cfg.no_timestamp).then(|| {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        format!(
            "generated_unix_s={secs} experiment={}",
            cfg.experiment.name()
        )
    });
    let with_wall_time = !cfg.no_timestamp;
    match &cfg.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            record::write_records(
                &records,
                cfg.format,
                header.as_deref(),
                with_wall_time,
                &mut w,
            )?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            record::write_records(
                &records,
                cfg.format,
                header.as_deref(),
                with_wall_time,
                &mut w,
            )?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qst: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
