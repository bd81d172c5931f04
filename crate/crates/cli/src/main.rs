use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ffdist_core::harness::{
    emit, run, Command, ConfigError, ExperimentConfig, FieldParams, HarnessError, SetSpec,
    EXIT_USAGE,
};

/// Exact Fourier analysis and distance-set experiments over finite fields.
#[derive(Parser)]
#[command(name = "ffdist", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Verify field axioms plus trace and character identities.
    FieldCheck,
    /// Round-trip and Plancherel checks on seeded random grids.
    FourierCheck,
    /// Fourier decay of every level set of the polynomial.
    Decay,
    /// Univariate Weil sum of --poly, or an exhaustive sweep with --degree.
    Weil,
    /// Sweep of sum_x chi(s P(x) + m.x) over s != 0 and all m.
    Phase,
    /// Distance set of E and F with every verifier.
    Distance,
    /// Pinned distance sets for each y in F.
    Pinned,
    /// The lifted polynomial P(x) - x_{d+1}, its fibers, and the zero-slice check.
    Lift,
    /// Random sets over a grid of |E||F| targets, one CSV row per (grid point, trial).
    Scan,
}

#[derive(Args)]
struct Opts {
    /// Field order (a prime power).
    #[arg(long, global = true, conflicts_with = "p")]
    q: Option<u64>,
    /// Characteristic.
    #[arg(long, global = true)]
    p: Option<u64>,
    /// Extension degree.
    #[arg(long, global = true, requires = "p")]
    n: Option<u32>,
    /// Monic modulus coefficients a0,a1,...,1.
    #[arg(long, global = true, value_delimiter = ',')]
    modulus: Option<Vec<u32>>,
    #[arg(long, global = true, default_value_t = 2)]
    d: usize,
    #[arg(long, global = true)]
    poly: Option<String>,
    #[arg(long = "setE", global = true)]
    set_e: Option<String>,
    #[arg(long = "setF", global = true)]
    set_f: Option<String>,
    #[arg(long = "setE2", global = true)]
    set_e2: Option<String>,
    #[arg(long = "setF2", global = true)]
    set_f2: Option<String>,
    /// Restrict decay output to one level (by encoding).
    #[arg(long, global = true)]
    t: Option<u64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1)]
    trials: usize,
    /// Comma-separated targets for |E||F|.
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true, default_value_t = 3.0)]
    kappa_sharp: f64,
    #[arg(long, global = true, default_value_t = 3.0)]
    kappa_fallback: f64,
    /// Size-hypothesis constant.
    #[arg(long = "C", global = true, default_value_t = 1.0)]
    c: f64,
    #[arg(long, global = true, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, global = true, default_value_t = 0.25)]
    rmin: f64,
    /// Fraction of pins that must exceed q/2 distances.
    #[arg(long, global = true, default_value_t = 0.5)]
    pin_fraction: f64,
    /// Degree for the exhaustive Weil sweep.
    #[arg(long, global = true)]
    degree: Option<u32>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit timestamps so identical flags give identical bytes.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Reject exponents divisible by the characteristic before computing decay.
    #[arg(long, global = true)]
    check_hypothesis: bool,
    /// Assert that the d = 2 polynomial is not a function of one linear form.
    #[arg(long, global = true)]
    nondegenerate: bool,
}

fn command(cmd: Cmd) -> Command {
    match cmd {
        Cmd::FieldCheck => Command::FieldCheck,
        Cmd::FourierCheck => Command::FourierCheck,
        Cmd::Decay => Command::Decay,
        Cmd::Weil => Command::Weil,
        Cmd::Phase => Command::Phase,
        Cmd::Distance => Command::Distance,
        Cmd::Pinned => Command::Pinned,
        Cmd::Lift => Command::Lift,
        Cmd::Scan => Command::Scan,
    }
}

fn config(cli: Cli) -> Result<ExperimentConfig, ConfigError> {
    let o = cli.opts;
    let mut field = match (o.q, o.p) {
        (Some(q), _) => FieldParams::from_q(q)?,
        (None, Some(p)) => FieldParams {
            p,
            n: o.n.unwrap_or(1),
            modulus: None,
        },
        (None, None) => return Err(ConfigError::new("q", "give --q or --p [--n]")),
    };
    field.modulus = o.modulus;
    let set = |flag: &str, s: Option<String>| s.map(|s| SetSpec::parse(flag, &s)).transpose();
    let grid = match o.grid {
        Some(g) => g
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| ConfigError::new("grid", format!("`{v}` is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    let mut c = ExperimentConfig::new(command(cli.command), field);
    c.d = o.d;
    c.poly = o.poly;
    c.set_e = set("setE", o.set_e)?;
    c.set_f = set("setF", o.set_f)?;
    c.set_e2 = set("setE2", o.set_e2)?;
    c.set_f2 = set("setF2", o.set_f2)?;
    c.t = o.t;
    c.degree = o.degree;
    c.thresholds.kappa_sharp = o.kappa_sharp;
    c.thresholds.kappa_fallback = o.kappa_fallback;
    c.c = o.c;
    c.rho = o.rho;
    c.r_min = o.rmin;
    c.pin_fraction = o.pin_fraction;
    c.trials = o.trials;
    c.seed = o.seed;
    c.grid = grid;
    c.out = o.out;
    c.deterministic = o.deterministic;
    c.check_hypothesis = o.check_hypothesis;
    c.nondegenerate = o.nondegenerate;
    Ok(c)
}

fn fail(e: HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let config = match config(cli) {
        Ok(c) => c,
        Err(e) => return fail(e.into()),
    };
    let output = match run(&config) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    match emit(&output, &config) {
        Ok(text) => print!("{text}"),
        Err(e) => return fail(e),
    }
    ExitCode::from(output.exit_code as u8)
}
