use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use markov_adiabatic::battery::{self, CriterionOutcome};
use markov_adiabatic::continuous::{ContinuousScan, MixingGrid, StepPolicy};
use markov_adiabatic::discrete::{adiabatic_time_with_metric, Metric};
use markov_adiabatic::format::{write_distribution, write_matrix};
use markov_adiabatic::generate::{
    generate_chain, random_generator, random_stochastic, reversible_random, rng, Construction,
    RandomChainSpec, RNG_NAME,
};
use markov_adiabatic::hamiltonian::lazy_gap_relation;
use markov_adiabatic::ising::{adiabatic_ising_experiment, IsingExperimentConfig};
use markov_adiabatic::mixing::{mixing_curve, DEFAULT_CONTINUOUS_CAP, DEFAULT_DISCRETE_CAP};
use markov_adiabatic::{
    adiabatic_time_continuous, chain_to_hamiltonian, hamiltonian_to_chain, is_reversible,
    mixing_curve_continuous, mixing_time_bounds, reversible_spectrum, spectral_gap,
    stationary_distribution, validate_hamiltonian, Error, ErrorKind, Generator,
};

mod io;
mod model;

/// Experiments on finite Markov chains and their adiabatic evolution.
#[derive(Parser, Debug)]
#[command(name = "markov-adiabatic", version)]
struct Cli {
    #[command(flatten)]
    tolerances: Tolerances,

    #[command(subcommand)]
    command: Command,
}

/// Default tolerances, each overridable from the environment.
#[derive(Args, Debug, Clone, Copy)]
struct Tolerances {
    /// Allowed deviation of chain row sums from 1 when loading files.
    #[arg(
        long,
        global = true,
        env = "MARKOV_ADIABATIC_ROW_TOL",
        default_value_t = 1e-12
    )]
    row_tol: f64,

    /// Detailed-balance tolerance used to report reversibility.
    #[arg(
        long,
        global = true,
        env = "MARKOV_ADIABATIC_REVERSIBLE_TOL",
        default_value_t = 1e-10
    )]
    reversible_tol: f64,

    /// Poisson truncation budget per continuous-time evolution.
    #[arg(
        long,
        global = true,
        env = "MARKOV_ADIABATIC_SERIES_TOL",
        default_value_t = 1e-12
    )]
    series_tol: f64,

    /// Largest `λ·h` per integration substep when `--steps` is not given.
    #[arg(
        long,
        global = true,
        env = "MARKOV_ADIABATIC_RATE_STEP",
        default_value_t = 0.1
    )]
    rate_step: f64,

    /// Time grid for continuous mixing times.
    #[arg(
        long,
        global = true,
        env = "MARKOV_ADIABATIC_MIXING_RESOLUTION",
        default_value_t = 1e-3
    )]
    mixing_resolution: f64,

    /// Largest time searched for continuous mixing times.
    #[arg(long, global = true, env = "MARKOV_ADIABATIC_MIXING_CAP", default_value_t = DEFAULT_CONTINUOUS_CAP)]
    mixing_cap: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stationary law, spectrum, gap and mixing time of one chain.
    Analyze(AnalyzeArgs),
    /// Hamiltonian to chain or chain to Hamiltonian.
    Convert(ConvertArgs),
    /// Worst-case distance curve up to the mixing time.
    Mix(MixArgs),
    /// Discrete adiabatic time with its bound.
    AdiabaticDiscrete(DiscreteArgs),
    /// Continuous adiabatic time with its bound.
    AdiabaticContinuous(ContinuousArgs),
    /// Adiabatic Glauber dynamics between two Ising models.
    Ising(IsingArgs),
    /// Runs the validation battery.
    Suite(SuiteArgs),
}

#[derive(Args, Debug, Clone)]
struct RandomArgs {
    /// Generate random instances with this many states instead of reading files.
    #[arg(long, value_name = "N")]
    random: Option<usize>,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ConstructionArg {
    ReversibleRandom,
    BirthDeath,
    LazyRandomWalk,
}

impl From<ConstructionArg> for Construction {
    fn from(c: ConstructionArg) -> Self {
        match c {
            ConstructionArg::ReversibleRandom => Construction::ReversibleRandom,
            ConstructionArg::BirthDeath => Construction::BirthDeath,
            ConstructionArg::LazyRandomWalk => Construction::LazyRandomWalk,
        }
    }
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "random",
        conflicts_with = "random"
    )]
    chain: Option<PathBuf>,

    #[command(flatten)]
    random: RandomArgs,

    #[arg(long, value_enum, default_value = "reversible-random")]
    construction: ConstructionArg,

    #[arg(long, default_value_t = 0.25)]
    eps: f64,

    #[arg(long, default_value_t = DEFAULT_DISCRETE_CAP)]
    cap: usize,

    /// Also write the analyzed chain to this matrix file.
    #[arg(long, value_name = "FILE")]
    write_chain: Option<PathBuf>,

    /// Write the summary here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    H2p,
    P2h,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    direction: Direction,

    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Matrix file for the converted matrix; standard output when absent.
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Distribution file for the stationary law (h2p only).
    #[arg(long, value_name = "FILE")]
    stationary_output: Option<PathBuf>,

    /// Ground energy λ₀ of the rebuilt Hamiltonian (p2h only).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    ground_energy: f64,
}

#[derive(Args, Debug)]
struct MixArgs {
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "generator",
        conflicts_with = "generator"
    )]
    chain: Option<PathBuf>,

    /// Continuous-time generator file.
    #[arg(long, value_name = "FILE")]
    generator: Option<PathBuf>,

    #[arg(long, default_value_t = 0.25)]
    eps: f64,

    /// Largest step count searched (discrete chains).
    #[arg(long, default_value_t = DEFAULT_DISCRETE_CAP)]
    cap: usize,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MetricArg {
    Tv,
    Euclidean,
}

#[derive(Args, Debug)]
struct DiscreteArgs {
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "random",
        requires = "final_"
    )]
    initial: Option<PathBuf>,

    #[arg(
        long = "final",
        value_name = "FILE",
        required_unless_present = "random"
    )]
    final_: Option<PathBuf>,

    #[command(flatten)]
    random: RandomArgs,

    #[arg(long)]
    eps: f64,

    #[arg(long, default_value_t = 100_000)]
    cap: usize,

    #[arg(long, value_enum, default_value = "tv")]
    metric: MetricArg,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ScanArgs {
    /// Largest horizon tried; one grid step past the bound when absent.
    #[arg(long)]
    t_cap: Option<f64>,

    /// Horizon grid spacing; `t_mix(ε/2)/25` when absent.
    #[arg(long)]
    grid: Option<f64>,

    /// Fixed substep count per evolution; otherwise set by the rate step.
    #[arg(long)]
    steps: Option<usize>,

    /// Uniformization rate for the simulation.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct ContinuousArgs {
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "random",
        requires = "final_"
    )]
    initial: Option<PathBuf>,

    #[arg(
        long = "final",
        value_name = "FILE",
        required_unless_present = "random"
    )]
    final_: Option<PathBuf>,

    #[command(flatten)]
    random: RandomArgs,

    #[arg(long)]
    eps: f64,

    #[command(flatten)]
    scan: ScanArgs,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IsingArgs {
    #[arg(long, value_name = "MODEL")]
    init: PathBuf,

    #[arg(long = "final", value_name = "MODEL")]
    final_: PathBuf,

    #[arg(long)]
    eps: f64,

    #[command(flatten)]
    scan: ScanArgs,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    #[arg(long, default_value_t = battery::DEFAULT_SEED)]
    seed: u64,

    /// Run only these criteria (1 to 8).
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,

    /// CSV of per-criterion results.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Usage(String),
    /// A library error, prefixed with where it happened.
    Core(String, Error),
    SuiteFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Core(_, e) => match e.kind() {
                ErrorKind::Validation => 3,
                ErrorKind::CapExceeded => 4,
                ErrorKind::Numerical => 5,
            },
            CliError::SuiteFailed(_) => 6,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) | CliError::Usage(m) => f.write_str(m),
            CliError::Core(at, e) => write!(f, "{at}{e}"),
            CliError::SuiteFailed(n) => write!(f, "{n} criteria failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(String::new(), e)
    }
}

/// CSV body plus `# key: value` summary lines.
#[derive(Default)]
struct Report {
    csv: String,
    summary: Vec<(String, String)>,
}

impl Report {
    fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    fn summary_text(&self) -> String {
        self.summary
            .iter()
            .map(|(k, v)| format!("# {k}: {v}\n"))
            .collect()
    }

    /// CSV to `output` when given, otherwise CSV then summary on stdout.
    fn emit(&self, output: Option<&PathBuf>) -> Result<(), CliError> {
        match output {
            Some(path) => {
                io::write_atomic(path, &self.csv)?;
                print!("{}", self.summary_text());
            }
            None => print!("{}{}", self.csv, self.summary_text()),
        }
        Ok(())
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn check_eps(eps: f64) -> Result<(), CliError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--eps must lie in (0, 1), got {eps}"
        )))
    }
}

fn analyze(args: &AnalyzeArgs, tol: &Tolerances) -> Result<(), CliError> {
    check_eps(args.eps)?;
    let mut out = String::new();
    let p = match (&args.chain, args.random.random) {
        (Some(path), _) => io::read_chain(path, tol.row_tol)?,
        (None, Some(n)) => {
            let _ = writeln!(out, "generator: {RNG_NAME} seed {}", args.random.seed);
            generate_chain(&RandomChainSpec {
                n,
                construction: args.construction.into(),
                seed: args.random.seed,
            })
        }
        (None, None) => {
            return Err(CliError::Usage(
                "either --chain or --random is required".into(),
            ))
        }
    };
    if let Some(path) = &args.write_chain {
        io::write_atomic(path, &write_matrix(p.entries()))?;
    }
    let pi = stationary_distribution(&p)?;
    let reversible = is_reversible(&p, &pi, tol.reversible_tol)?;
    let t_mix = markov_adiabatic::mixing::mixing_time_with(&p, &pi, args.eps, args.cap)?;
    let _ = writeln!(out, "states: {}", p.dim());
    let _ = writeln!(out, "stationary: {}", join(pi.weights()));
    let _ = writeln!(out, "pi_min: {}", pi.min());
    let _ = writeln!(out, "reversible: {reversible}");
    let _ = writeln!(out, "eps: {}", args.eps);
    let _ = writeln!(out, "t_mix: {t_mix}");
    if reversible {
        let spectrum = reversible_spectrum(&p, &pi)?;
        let gap = spectral_gap(&spectrum)?;
        let _ = writeln!(out, "eigenvalues: {}", join(spectrum.eigenvalues()));
        let _ = writeln!(out, "gap: {}", gap.gap);
        let _ = writeln!(out, "relaxation_time: {}", gap.relaxation_time);
        if args.eps < 0.5 {
            let (lo, hi) = mixing_time_bounds(&gap, &pi, args.eps)?;
            let _ = writeln!(out, "t_mix_lower: {lo}");
            let _ = writeln!(out, "t_mix_upper: {hi}");
        }
    }
    match &args.output {
        Some(path) => io::write_atomic(path, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn convert(args: &ConvertArgs, tol: &Tolerances) -> Result<(), CliError> {
    let (matrix, summary) = match args.direction {
        Direction::H2p => {
            let h = validate_hamiltonian(io::read_matrix(&args.input)?)?;
            let c = hamiltonian_to_chain(&h)?;
            let (lazy_gap, predicted) = lazy_gap_relation(&h)?;
            if let Some(path) = &args.stationary_output {
                io::write_atomic(path, &write_distribution(c.stationary.weights()))?;
            }
            let mut s = String::new();
            let _ = writeln!(s, "# stationary: {}", join(c.stationary.weights()));
            let _ = writeln!(s, "# ground_energy: {}", c.ground_energy);
            let _ = writeln!(s, "# hamiltonian_gap: {}", c.hamiltonian_gap);
            let _ = writeln!(s, "# chain_gap: {}", c.chain_gap);
            let _ = writeln!(s, "# gap_relation_applies: {}", c.gap_relation_applies());
            let _ = writeln!(s, "# lazy_gap: {lazy_gap}");
            let _ = writeln!(s, "# lazy_gap_predicted: {predicted}");
            (c.chain.into_entries(), s)
        }
        Direction::P2h => {
            if args.stationary_output.is_some() {
                return Err(CliError::Usage(
                    "--stationary-output applies to h2p only".into(),
                ));
            }
            let p = io::read_chain(&args.input, tol.row_tol)?;
            let pi = stationary_distribution(&p)?;
            let h = chain_to_hamiltonian(&p, &pi, args.ground_energy)?;
            let mut s = String::new();
            let _ = writeln!(s, "# stationary: {}", join(pi.weights()));
            let _ = writeln!(s, "# ground_energy: {}", args.ground_energy);
            let _ = writeln!(s, "# energies: {}", join(&h.energies()));
            (h.entries().clone(), s)
        }
    };
    match &args.output {
        Some(path) => {
            io::write_atomic(path, &write_matrix(&matrix))?;
            print!("{summary}");
        }
        None => print!("{}{summary}", write_matrix(&matrix)),
    }
    Ok(())
}

fn mix(args: &MixArgs, tol: &Tolerances) -> Result<(), CliError> {
    check_eps(args.eps)?;
    let mut report = Report::default();
    report.csv.push_str("t,distance\n");
    if let Some(path) = &args.generator {
        let q = io::read_generator(path)?;
        let curve = mixing_curve_continuous(&q, args.eps, tol.mixing_cap, tol.mixing_resolution)?;
        for (t, d) in curve.times.iter().zip(&curve.distances) {
            let _ = writeln!(report.csv, "{t},{d}");
        }
        report.note("eps", args.eps);
        report.note("resolution", tol.mixing_resolution);
        report.note("t_mix", curve.times[curve.len() - 1]);
    } else {
        let path = args
            .chain
            .as_ref()
            .ok_or_else(|| CliError::Usage("--chain or --generator is required".into()))?;
        let p = io::read_chain(path, tol.row_tol)?;
        let pi = stationary_distribution(&p)?;
        let t_mix = markov_adiabatic::mixing::mixing_time_with(&p, &pi, args.eps, args.cap)?;
        let curve = mixing_curve(&p, &pi, t_mix)?;
        for (t, d) in curve.times.iter().zip(&curve.distances) {
            let _ = writeln!(report.csv, "{t},{d}");
        }
        report.note("eps", args.eps);
        report.note("t_mix", t_mix);
    }
    report.emit(args.output.as_ref())
}

fn curve_csv<T: std::fmt::Display>(curve: &[(T, f64)]) -> String {
    let mut csv = String::from("T,error\n");
    for (t, e) in curve {
        let _ = writeln!(csv, "{t},{e}");
    }
    csv
}

/// Prints the scanned curve before reporting a cap failure, so a run that
/// misses its target still leaves its data behind.
fn cap_failure<T: std::fmt::Display>(
    err: Error,
    curve: &[(T, f64)],
    output: Option<&PathBuf>,
    mut header: Report,
) -> CliError {
    header.csv = curve_csv(curve);
    if let Err(e) = header.emit(output) {
        return e;
    }
    err.into()
}

fn adiabatic_discrete(args: &DiscreteArgs, tol: &Tolerances) -> Result<(), CliError> {
    check_eps(args.eps)?;
    let mut report = Report::default();
    let (p_initial, p_final) = match (&args.initial, &args.final_, args.random.random) {
        (Some(a), Some(b), _) => (
            io::read_chain(a, tol.row_tol)?,
            io::read_chain(b, tol.row_tol)?,
        ),
        (None, None, Some(n)) => {
            report.note("generator", format!("{RNG_NAME} seed {}", args.random.seed));
            let mut r = rng(args.random.seed);
            let p_initial = random_stochastic(n, &mut r);
            let (p_final, _) = reversible_random(n, &mut r);
            (p_initial, p_final)
        }
        _ => {
            return Err(CliError::Usage(
                "give both --initial and --final, or --random".into(),
            ))
        }
    };
    let metric = match args.metric {
        MetricArg::Tv => Metric::TotalVariation,
        MetricArg::Euclidean => Metric::Euclidean,
    };
    report.note("eps", args.eps);
    match adiabatic_time_with_metric(&p_initial, &p_final, args.eps, args.cap, metric) {
        Ok(r) => {
            report.csv = curve_csv(&r.report.error_curve);
            report.note("measured_time", r.report.measured_time);
            report.note("t_mix_half", r.t_mix_half);
            report.note("K", r.bound.k);
            report.note("t_bound", r.bound.t_bound);
            report.emit(args.output.as_ref())
        }
        Err(Error::AdiabaticCapExceeded {
            cap,
            epsilon,
            curve,
        }) => {
            let shifted: Vec<(usize, f64)> = curve.iter().map(|&(t, e)| (t as usize, e)).collect();
            Err(cap_failure(
                Error::AdiabaticCapExceeded {
                    cap,
                    epsilon,
                    curve,
                },
                &shifted,
                args.output.as_ref(),
                report,
            ))
        }
        Err(e) => Err(e.into()),
    }
}

fn build_scan(
    q_init: &Generator,
    q_final: &Generator,
    eps: f64,
    args: &ScanArgs,
    tol: &Tolerances,
) -> Result<ContinuousScan, CliError> {
    let mixing = MixingGrid {
        t_cap: tol.mixing_cap,
        resolution: tol.mixing_resolution,
    };
    let mut scan = ContinuousScan::fitted(q_init, q_final, eps, mixing)?;
    if let Some(grid) = args.grid {
        scan.grid = grid;
    }
    if let Some(t_cap) = args.t_cap {
        scan.t_cap = t_cap;
    }
    scan.steps = match args.steps {
        Some(n) => StepPolicy::Fixed(n),
        None => StepPolicy::RateStep(tol.rate_step),
    };
    if args.lambda.is_some() {
        scan.lambda = args.lambda;
    }
    scan.tol = tol.series_tol;
    Ok(scan)
}

fn continuous_result(
    result: markov_adiabatic::Result<markov_adiabatic::continuous::ContinuousAdiabaticReport>,
    mut report: Report,
    output: Option<&PathBuf>,
) -> Result<(), CliError> {
    match result {
        Ok(r) => {
            report.csv = curve_csv(&r.report.error_curve);
            report.note("measured_time", r.report.measured_time);
            report.note("t_mix_half", r.bound.t_mix_half);
            report.note("lambda", r.bound.lambda);
            report.note("lambda_simulation", r.lambda_used);
            report.note("t_bound", r.bound.t_bound);
            report.emit(output)
        }
        Err(Error::AdiabaticCapExceeded {
            cap,
            epsilon,
            curve,
        }) => {
            let data = curve.clone();
            Err(cap_failure(
                Error::AdiabaticCapExceeded {
                    cap,
                    epsilon,
                    curve,
                },
                &data,
                output,
                report,
            ))
        }
        Err(e) => Err(e.into()),
    }
}

fn adiabatic_continuous(args: &ContinuousArgs, tol: &Tolerances) -> Result<(), CliError> {
    check_eps(args.eps)?;
    let mut report = Report::default();
    let (q_init, q_final) = match (&args.initial, &args.final_, args.random.random) {
        (Some(a), Some(b), _) => (io::read_generator(a)?, io::read_generator(b)?),
        (None, None, Some(n)) => {
            report.note("generator", format!("{RNG_NAME} seed {}", args.random.seed));
            let mut r = rng(args.random.seed);
            let q_init = random_generator(n, &mut r);
            (q_init, random_generator(n, &mut r))
        }
        _ => {
            return Err(CliError::Usage(
                "give both --initial and --final, or --random".into(),
            ))
        }
    };
    let scan = build_scan(&q_init, &q_final, args.eps, &args.scan, tol)?;
    report.note("eps", args.eps);
    report.note("grid", scan.grid);
    let result = adiabatic_time_continuous(&q_init, &q_final, args.eps, &scan);
    continuous_result(result, report, args.output.as_ref())
}

fn ising(args: &IsingArgs, tol: &Tolerances) -> Result<(), CliError> {
    check_eps(args.eps)?;
    let m_init = model::read_model(&args.init)?;
    let m_final = model::read_model(&args.final_)?;
    if m_init.n() != m_final.n() {
        return Err(CliError::Usage(format!(
            "models have {} and {} spins",
            m_init.n(),
            m_final.n()
        )));
    }
    let q_init = markov_adiabatic::glauber_generator(&m_init)?;
    let q_final = markov_adiabatic::glauber_generator(&m_final)?;
    let mut config = IsingExperimentConfig::for_spins(m_init.n(), 1.0, 1.0);
    let fitted = build_scan(&q_init, &q_final, args.eps, &args.scan, tol)?;
    config.scan = ContinuousScan {
        lambda: fitted.lambda.or(config.scan.lambda),
        ..fitted
    };
    let mut report = Report::default();
    report.note("spins", m_init.n());
    report.note("states", m_init.state_count());
    report.note("beta_init", m_init.beta());
    report.note("beta_final", m_final.beta());
    report.note("eps", args.eps);
    report.note("grid", config.scan.grid);
    match adiabatic_ising_experiment(&m_init, &m_final, args.eps, &config) {
        Ok(r) => {
            report.note("gibbs_final", join(r.gibbs_final.weights()));
            continuous_result(Ok(r.adiabatic), report, args.output.as_ref())
        }
        Err(e) => continuous_result(Err(e), report, args.output.as_ref()),
    }
}

fn suite(args: &SuiteArgs) -> Result<(), CliError> {
    type Runner = fn(u64) -> CriterionOutcome;
    let runners: [(u8, Runner); 8] = [
        (1, battery::relaxation_sandwich),
        (2, battery::conversion_identities),
        (3, battery::discrete_adiabatic),
        (4, battery::uniformization),
        (5, battery::continuous_adiabatic),
        (6, |_| battery::glauber_pipeline()),
        (7, battery::extreme_points),
        (8, |_| battery::worked_examples()),
    ];
    if let Some(bad) = args.only.iter().find(|id| !(1..=8).contains(*id)) {
        return Err(CliError::Usage(format!("no criterion {bad}")));
    }
    let selected: Vec<(u8, Runner)> = runners
        .into_iter()
        .filter(|(id, _)| args.only.is_empty() || args.only.contains(id))
        .collect();
    // criteria are independent; results are collected in criterion order
    let outcomes: Vec<CriterionOutcome> = std::thread::scope(|s| {
        let handles: Vec<_> = selected
            .iter()
            .map(|&(_, run)| s.spawn(move || run(args.seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion thread panicked"))
            .collect()
    });
    println!("# generator: {RNG_NAME} seed {}", args.seed);
    for o in &outcomes {
        println!("{o}");
    }
    if let Some(path) = &args.output {
        let mut csv = String::from("criterion,name,checks,violations,passed\n");
        for o in &outcomes {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                o.id,
                o.name,
                o.checks,
                o.violations,
                o.passed()
            );
        }
        io::write_atomic(path, &csv)?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    if failed > 0 {
        return Err(CliError::SuiteFailed(failed));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let tol = &cli.tolerances;
    for (name, v) in [
        ("--row-tol", tol.row_tol),
        ("--reversible-tol", tol.reversible_tol),
        ("--series-tol", tol.series_tol),
        ("--rate-step", tol.rate_step),
        ("--mixing-resolution", tol.mixing_resolution),
        ("--mixing-cap", tol.mixing_cap),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
        }
    }
    match &cli.command {
        Command::Analyze(a) => analyze(a, tol),
        Command::Convert(a) => convert(a, tol),
        Command::Mix(a) => mix(a, tol),
        Command::AdiabaticDiscrete(a) => adiabatic_discrete(a, tol),
        Command::AdiabaticContinuous(a) => adiabatic_continuous(a, tol),
        Command::Ising(a) => ising(a, tol),
        Command::Suite(a) => suite(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
