use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gossip_dp_cli::run::{bounds_record, bounds_rows, bounds_table, BOUNDS_HEADER};
use gossip_dp_cli::{apply_seed_override, parse_spec, run_experiment, Kind, SEED_ENV};

#[derive(Parser)]
#[command(
    name = "gossip-dp",
    version,
    about = "Privacy/speed experiments for muting-parameterized gossip"
)]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArgs {
    /// Experiment spec (`key = value` lines or a flat JSON object).
    spec: PathBuf,

    /// Output directory, replacing the spec's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump one run as `step,sender,receiver`.
    Trace(SpecArgs),
    /// Informed/active trajectories of the synchronous engine.
    Spread(SpecArgs),
    /// Source-location attack precision.
    Attack(SpecArgs),
    /// Monte Carlo estimates against closed forms.
    Validate(SpecArgs),
    /// Privacy and spreading-time summary table.
    Bounds {
        /// Spec file; without one, `--n` and `--f` print the table.
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        f: Option<usize>,
        /// Muting values for the generic rows.
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let (kind, spec, out) = match cli.command {
        Command::Trace(a) => (Kind::Trace, a.spec, a.out),
        Command::Spread(a) => (Kind::Spread, a.spec, a.out),
        Command::Attack(a) => (Kind::Attack, a.spec, a.out),
        Command::Validate(a) => (Kind::Validate, a.spec, a.out),
        Command::Bounds {
            spec: Some(spec),
            out,
            ..
        } => (Kind::Bounds, spec, out),
        Command::Bounds {
            spec: None,
            n,
            f,
            s,
            epsilon,
            ..
        } => return print_bounds(n, f, &s, epsilon),
    };
    execute(kind, spec, out)
}

fn print_bounds(n: Option<usize>, f: Option<usize>, s: &[f64], epsilon: f64) -> ExitCode {
    let (Some(n), Some(f)) = (n, f) else {
        eprintln!("error: bounds needs a spec file or both --n and --f");
        return ExitCode::from(2);
    };
    if n < 2
        || f > n - 2
        || s.iter().any(|v| !(0.0..=1.0).contains(v))
        || epsilon.is_nan()
        || epsilon < 0.0
    {
        eprintln!("error: need n >= 2, f <= n - 2, s in [0, 1] and epsilon >= 0");
        return ExitCode::from(2);
    }
    let rows = bounds_rows(n, f, s, epsilon);
    print!("{}", bounds_table(&rows, n, f));
    println!();
    let mut csv = csv::Writer::from_writer(std::io::stdout());
    let _ = csv.write_record(BOUNDS_HEADER);
    for row in &rows {
        let _ = csv.write_record(bounds_record(row, n, f));
    }
    let _ = csv.flush();
    ExitCode::SUCCESS
}

fn execute(kind: Kind, path: PathBuf, out: Option<PathBuf>) -> ExitCode {
    let mut spec = match parse_spec(&path) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    if spec.kind != kind {
        eprintln!(
            "error: {} describes a `{}` experiment, not `{}`",
            path.display(),
            spec.kind.as_str(),
            kind.as_str()
        );
        return ExitCode::from(2);
    }
    if let Err(e) = apply_seed_override(&mut spec, std::env::var(SEED_ENV).ok().as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if let Some(out) = out {
        spec.output = out;
    }
    match run_experiment(&spec) {
        Ok(report) => {
            for file in &report.files {
                println!("{}", file.display());
            }
            if spec.kind == Kind::Bounds {
                for &n in &spec.n {
                    for &frac in &spec.curious_fraction {
                        let f = gossip_dp_cli::spec::curious_count(n, frac);
                        for &eps in &spec.epsilon {
                            print!("\n{}", bounds_table(&bounds_rows(n, f, &spec.s, eps), n, f));
                        }
                    }
                }
            }
            for failure in &report.failures {
                eprintln!("failed: {failure}");
            }
            if report.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
