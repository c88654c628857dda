//! `annuli`: batch driver for the lattice-point experiments.
//!
//! Every subcommand prints a one-line JSON summary on stdout. `--out` writes
//! the per-row data (CSV with a `# ` header, or JSON) for plotting.

mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::result::Result;

use annuli::*;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use output::{print_summary, write_table, Cell, Format, Table};

#[derive(Parser, Debug)]
#[command(
    name = "annuli",
    version,
    about = "Lattice points in thin annuli: counts, ensembles, close pairs, Diophantine probes"
)]
struct Cli {
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Disc or annulus count, error term and sharp statistic
    Count(CountArgs),
    /// Ensemble of the sharp annulus statistic over random radii
    Distribution(DistributionArgs),
    /// Pairs of lattice points with close squared norms
    ClosePairs(ClosePairsArgs),
    /// Linear forms, polynomial values and square-root sums near zero
    Dioph(DiophArgs),
    /// Smoothed counting function and the sharp-vs-smooth second moment
    Smooth(SmoothArgs),
    /// Successive minima, box counts and stretched covolumes
    #[command(subcommand)]
    Geometry(GeometryCommand),
    /// Re-run the command recorded in an output file or config JSON
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// CSV or JSON output file, or a bare config object
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug, Clone, Copy, Serialize, Deserialize)]
struct LatticeArgs {
    /// Real part of the second basis vector [default: pi - 3]
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Imaginary part of the second basis vector [default: e/2]
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
}

impl LatticeArgs {
    fn lattice(&self) -> annuli::Result<LatticeSpec> {
        let g = LatticeSpec::generic();
        LatticeSpec::new(self.alpha.unwrap_or(g.alpha()), self.beta.unwrap_or(g.beta()))
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct OutputArgs {
    /// Write the per-row data to this file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of the --out file
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug, Serialize, Deserialize)]
struct CountArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    /// Disc radius, or inner radius of the annulus
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    /// Annulus width; the annulus is (t, t + rho]
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum WeightArg {
    Uniform,
    Smooth,
}

#[derive(Args, Debug, Serialize, Deserialize)]
struct DistributionArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Base radius: t = T(1+U) (uniform) or t = T·omega (smooth)
    #[arg(long = "T", id = "T", allow_negative_numbers = true)]
    #[serde(rename = "T")]
    t_base: f64,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// Fixed annulus width
    #[arg(long, conflicts_with = "rho_exponent", allow_negative_numbers = true)]
    rho: Option<f64>,
    /// Width rho = T^(-theta) [default: 0.1]
    #[arg(long, allow_negative_numbers = true)]
    rho_exponent: Option<f64>,
    #[arg(long, value_enum, default_value_t = WeightArg::Uniform)]
    weight: WeightArg,
    /// Highest normalized moment reported
    #[arg(long, default_value_t = MomentReport::DEFAULT_CAP)]
    moments: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize, Deserialize)]
struct ClosePairsArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// First norm range [R, 2R]; a comma list runs a scaling study
    #[arg(long = "R", id = "R", required = true, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(rename = "R")]
    r: Vec<f64>,
    /// Norm window: |l|² - |k|² in [0, delta]
    #[arg(long, allow_negative_numbers = true)]
    delta: f64,
    /// Write the pairs of the first R to --out instead of the counts
    #[arg(long)]
    list: bool,
    /// Also count a < Q1(v) < b on the shell T <= |v| <= 2T
    #[arg(long, allow_negative_numbers = true)]
    shell_t: Option<f64>,
    /// The interval (a, b) for --shell-t
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-0.5, 0.5])]
    window: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FilterArg {
    Primitive,
    All,
}

#[derive(Args, Debug, Serialize, Deserialize)]
struct DiophArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Reals of the form, as expressions (sqrt, pi, e, + - * /, parentheses)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "sqrt_sum")]
    tuple: Vec<String>,
    /// Largest coefficient height
    #[arg(long, default_value_t = 1000)]
    qmax: u64,
    /// Polynomial degree in the two tuple entries; 1 is the linear form
    #[arg(long, default_value_t = 1)]
    degree: u32,
    /// Square-root sum gap over dual vectors of the lattice instead
    #[arg(long, conflicts_with = "tuple")]
    sqrt_sum: bool,
    /// Dual norm bound for --sqrt-sum
    #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
    bound: f64,
    /// Number of square roots for --sqrt-sum (2 to 4)
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, value_enum, default_value_t = FilterArg::Primitive)]
    filter: FilterArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Serialize, Deserialize)]
struct SmoothArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Spectral cutoff; a comma list evaluates each value
    #[arg(long = "M", id = "M", required = true, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(rename = "M")]
    m: Vec<f64>,
    /// Inverse annulus width
    #[arg(long = "L", id = "L", allow_negative_numbers = true)]
    #[serde(rename = "L")]
    l: f64,
    /// Evaluate the smoothed count and statistic at one radius
    #[arg(long, required_unless_present = "T", conflicts_with = "T", allow_negative_numbers = true)]
    t: Option<f64>,
    /// Base radius of the sharp-vs-smooth second moment ensemble
    #[arg(long = "T", id = "T", allow_negative_numbers = true)]
    #[serde(rename = "T")]
    t_base: Option<f64>,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

/// Basis rows separated by `;`, entries by `,`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
struct Basis(Vec<Vec<f64>>);

fn parse_basis(s: &str) -> Result<Basis, String> {
    let rows = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
                .collect::<Result<Vec<f64>, String>>()
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(Basis(rows))
}

const IDENTITY_3: &str = "1,0,0;0,1,0;0,0,1";

#[derive(Subcommand, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum GeometryCommand {
    /// Covolume before and after scaling the last coordinate by t
    Stretch {
        #[arg(long, default_value = IDENTITY_3, value_parser = parse_basis, allow_hyphen_values = true)]
        basis: Basis,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
    },
    /// Successive minima with realizing vectors
    Minima {
        #[arg(long, default_value = IDENTITY_3, value_parser = parse_basis, allow_hyphen_values = true)]
        basis: Basis,
        /// How many minima [default: the rank]
        #[arg(long)]
        count: Option<usize>,
    },
    /// Lattice points in [1/tau, 2tau] x [-1,1]^(n-2) x [0, delta·h/2]
    Box {
        #[arg(long, default_value = IDENTITY_3, value_parser = parse_basis, allow_hyphen_values = true)]
        basis: Basis,
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        height: f64,
    },
}

enum Failure {
    Usage(String),
    Lib(annuli::Error),
    Io(std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Lib(annuli::Error::Budget { .. }) => 3,
            Failure::Lib(_) | Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<annuli::Error> for Failure {
    fn from(e: annuli::Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<(), Failure>;

fn budget() -> Result<Budget, Failure> {
    match std::env::var(Budget::ENV_VAR) {
        Ok(s) => s.trim().parse::<u64>().map(Budget).map_err(|_| {
            Failure::Usage(format!("{} must be a nonnegative integer, got {s:?}", Budget::ENV_VAR))
        }),
        Err(_) => Ok(Budget::default()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("annuli: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    dispatch(&cli.command, budget()?)
}

fn dispatch(config: &Command, budget: Budget) -> Outcome {
    match config {
        Command::Count(a) => count(a),
        Command::Distribution(a) => distribution(a, config),
        Command::ClosePairs(a) => close_pairs(a, config, budget),
        Command::Dioph(a) => dioph(a, config, budget),
        Command::Smooth(a) => smooth(a, config),
        Command::Geometry(g) => geometry(g, budget),
        Command::Replay(r) => dispatch(&load_config(&r.config)?, budget),
    }
}

/// Reads the run config from a CSV `# config:` line, the `config` field of a
/// JSON output file, or a file holding the config object alone.
fn load_config(path: &std::path::Path) -> Result<Command, Failure> {
    let text = std::fs::read_to_string(path)?;
    let bad = |m: String| Failure::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, m));
    let value: serde_json::Value = match text.lines().find_map(|l| l.strip_prefix("# config: ")) {
        Some(line) => serde_json::from_str(line),
        None => serde_json::from_str(&text),
    }
    .map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let value = match value.get("config") {
        Some(inner) => inner.clone(),
        None => value,
    };
    serde_json::from_value(value).map_err(|e| bad(format!("{}: not a run config: {e}", path.display())))
}

fn emit(output: &OutputArgs, config: &Command, table: &Table) -> Outcome {
    if let Some(path) = &output.out {
        write_table(path, output.format, config, table)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CountSummary {
    count: u64,
    t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    /// Area term of the disc or annulus.
    expected: f64,
    error_term: f64,
    /// Error term over √t; the sharp statistic for an annulus.
    statistic: f64,
}

fn count(a: &CountArgs) -> Outcome {
    let lat = LatticeSpec::new(a.alpha, a.beta)?;
    let summary = match a.rho {
        None => {
            let c = count_disc(&lat, a.t)?;
            let err = disc_error(&lat, a.t)?;
            CountSummary {
                count: c,
                t: a.t,
                rho: None,
                expected: c as f64 - err,
                error_term: err,
                statistic: normalized_disc_error(&lat, a.t)?,
            }
        }
        Some(rho) => {
            let q = AnnulusQuery::new(a.t, rho)?;
            let c = count_annulus(&lat, &q);
            let expected = q.expected_count(&lat);
            CountSummary {
                count: c,
                t: a.t,
                rho: Some(rho),
                expected,
                error_term: c as f64 - expected,
                statistic: sharp_statistic(&lat, &q),
            }
        }
    };
    print_summary(&summary)?;
    Ok(())
}

#[derive(Serialize)]
struct DistributionSummary {
    alpha: f64,
    beta: f64,
    #[serde(rename = "T")]
    t_base: f64,
    rho: f64,
    seed: u64,
    weighting: Weighting,
    variance_ratio: f64,
    report: MomentReport,
}

fn distribution(a: &DistributionArgs, config: &Command) -> Outcome {
    let lat = a.lattice.lattice()?;
    let rule = match (a.rho, a.rho_exponent) {
        (Some(r), _) => RhoRule::Fixed(r),
        (None, Some(e)) => RhoRule::Exponent(e),
        (None, None) => RhoRule::default(),
    };
    let weighting = match a.weight {
        WeightArg::Uniform => Weighting::Uniform,
        WeightArg::Smooth => Weighting::SmoothOmega,
    };
    let cfg = EnsembleConfig::new(a.t_base, a.samples, a.seed)
        .weighting(weighting)
        .rho_rule(rule);
    cfg.validate()?;
    if a.samples < 2 {
        return Err(annuli::Error::InvalidConfig("variance needs at least two samples".into()).into());
    }
    let rho = cfg.rho();
    let sigma2 = predicted_sigma_squared(&lat, rho);
    let series = sharp_series(&lat, &cfg)?;
    let report = MomentReport::from_series(&series, sigma2.sqrt(), a.moments)?;

    let mut table = Table::new(vec!["t", "value", "weight"]);
    for &(t, v, w) in &series.rows {
        table.push(vec![Cell::Real(t), Cell::Real(v), Cell::Real(w)]);
    }
    emit(&a.output, config, &table)?;
    print_summary(&DistributionSummary {
        alpha: lat.alpha(),
        beta: lat.beta(),
        t_base: a.t_base,
        rho,
        seed: a.seed,
        weighting,
        variance_ratio: report.variance / sigma2,
        report,
    })?;
    Ok(())
}

#[derive(Serialize)]
struct ShellSummary {
    #[serde(rename = "T")]
    t: f64,
    a: f64,
    b: f64,
    #[serde(flatten)]
    stats: ShellStats,
}

#[derive(Serialize)]
struct ClosePairsSummary {
    alpha: f64,
    beta: f64,
    delta: f64,
    rows: Vec<ClosePairRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shell: Option<ShellSummary>,
}

#[derive(Serialize)]
struct ClosePairRow {
    #[serde(rename = "R")]
    r: f64,
    count: u64,
    /// `count / (R δ ln R)`; absent when undefined.
    normalized: Option<f64>,
}

fn close_pairs(a: &ClosePairsArgs, config: &Command, budget: Budget) -> Outcome {
    let lat = a.lattice.lattice()?;
    let rows: Vec<ClosePairRow> = if a.r.len() > 1 {
        close_pair_scaling_study(&lat, &a.r, a.delta, budget)?
            .into_iter()
            .map(|s| ClosePairRow {
                r: s.r,
                count: s.count,
                normalized: Some(s.normalized),
            })
            .collect()
    } else {
        let r = a.r[0];
        let count = count_close_pairs(&lat, &ClosePairQuery::new(r, a.delta)?, budget)?;
        let norm = r * a.delta * r.ln();
        vec![ClosePairRow {
            r,
            count,
            normalized: (norm > 0.0).then(|| count as f64 / norm),
        }]
    };

    let shell = match a.shell_t {
        Some(t) => {
            if a.window.len() != 2 {
                return Err(Failure::Usage(format!("--window takes two values a,b, got {}", a.window.len())));
            }
            let form = QuadFormQ1::new(&lat);
            let stats = shell_solution_stats(&form, a.window[0], a.window[1], t, SHELL_T_CAP)?;
            Some(ShellSummary {
                t,
                a: a.window[0],
                b: a.window[1],
                stats,
            })
        }
        None => None,
    };

    if a.list {
        let form = QuadFormQ1::new(&lat);
        let pairs = close_pairs_list(&lat, &ClosePairQuery::new(a.r[0], a.delta)?, budget)?;
        let mut table = Table::new(vec!["k_m", "k_n", "l_m", "l_n", "q1"]);
        for (k, l) in pairs {
            table.push(vec![
                Cell::Int(k.m),
                Cell::Int(k.n),
                Cell::Int(l.m),
                Cell::Int(l.n),
                Cell::Real(form.evaluate([k.m, k.n, l.m, l.n])),
            ]);
        }
        emit(&a.output, config, &table)?;
    } else {
        let mut table = Table::new(vec!["R", "delta", "count", "normalized"]);
        for row in &rows {
            table.push(vec![
                Cell::Real(row.r),
                Cell::Real(a.delta),
                Cell::Int(row.count as i64),
                Cell::Real(row.normalized.unwrap_or(f64::NAN)),
            ]);
        }
        emit(&a.output, config, &table)?;
    }
    print_summary(&ClosePairsSummary {
        alpha: lat.alpha(),
        beta: lat.beta(),
        delta: a.delta,
        rows,
        shell,
    })?;
    Ok(())
}

#[derive(Serialize)]
struct FitSummary<'a> {
    tuple: &'a [String],
    values: Vec<f64>,
    degree: u32,
    qmax: u64,
    #[serde(flatten)]
    fit: ExponentFit,
}

#[derive(Serialize)]
struct GapSummary {
    alpha: f64,
    beta: f64,
    bound: f64,
    m: usize,
    filter: VectorFilter,
    #[serde(flatten)]
    gap: SqrtSumGap,
}

fn dioph(a: &DiophArgs, config: &Command, budget: Budget) -> Outcome {
    if a.sqrt_sum {
        let lat = a.lattice.lattice()?;
        let filter = match a.filter {
            FilterArg::Primitive => VectorFilter::Primitive,
            FilterArg::All => VectorFilter::AllNonnegative,
        };
        let gap = sqrt_sum_gap(&lat, a.bound, a.m, filter, budget)?;
        let mut table = Table::new(vec!["a", "b", "z", "sign"]);
        for ((p, &z), &s) in gap.points.iter().zip(&gap.norms).zip(&gap.signs) {
            table.push(vec![Cell::Int(p.a), Cell::Int(p.b), Cell::Real(z), Cell::Int(s as i64)]);
        }
        emit(&a.output, config, &table)?;
        print_summary(&GapSummary {
            alpha: lat.alpha(),
            beta: lat.beta(),
            bound: a.bound,
            m: a.m,
            filter,
            gap,
        })?;
        return Ok(());
    }

    let xs = a
        .tuple
        .iter()
        .map(|s| ExtReal::parse(s))
        .collect::<annuli::Result<Vec<_>>>()?;
    let fit = if a.degree == 1 {
        linear_form_minimum(&DiophQuery::linear(xs.clone(), a.qmax))?
    } else {
        if xs.len() != 2 {
            return Err(Failure::Usage(format!(
                "--degree {} takes exactly two tuple entries, got {}",
                a.degree,
                xs.len()
            )));
        }
        polynomial_minimum((&xs[0], &xs[1]), a.degree, a.qmax)?
    };
    let mut table = Table::new(vec!["q", "min_value"]);
    for &(q, v) in &fit.minima {
        table.push(vec![Cell::Int(q as i64), Cell::Real(v)]);
    }
    emit(&a.output, config, &table)?;
    print_summary(&FitSummary {
        tuple: &a.tuple,
        values: xs.iter().map(|x| x.value()).collect(),
        degree: a.degree,
        qmax: a.qmax,
        fit,
    })?;
    Ok(())
}

#[derive(Serialize)]
struct PointRow {
    #[serde(rename = "M")]
    m: f64,
    in_regime: bool,
    smooth_count: f64,
    sharp_count: u64,
    smooth_statistic: f64,
    smooth_statistic_two_call: f64,
    sharp_statistic: f64,
    spectral_sigma_squared: f64,
}

#[derive(Serialize)]
struct DifferenceRow {
    #[serde(rename = "M")]
    m: f64,
    second_moment: f64,
    /// `√M · ⟨|S − S̃|²⟩`
    scaled: f64,
}

#[derive(Serialize)]
struct SmoothSummary<R> {
    alpha: f64,
    beta: f64,
    #[serde(rename = "L")]
    l: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    t_base: Option<f64>,
    predicted_sigma_squared: f64,
    rows: Vec<R>,
}

fn smooth(a: &SmoothArgs, config: &Command) -> Outcome {
    let lat = a.lattice.lattice()?;
    let predicted = predicted_sigma_squared(&lat, 1.0 / a.l);
    let budget = Budget::from_env();
    if let Some(t) = a.t {
        let mut rows = Vec::new();
        let mut table = Table::new(vec![
            "M",
            "smooth_count",
            "sharp_count",
            "smooth_statistic",
            "sharp_statistic",
        ]);
        for &m in &a.m {
            let sp = SmoothingParams::new(m, a.l)?;
            let spectrum = DualSpectrum::new(&lat, &sp, budget)?;
            let row = PointRow {
                m,
                in_regime: sp.in_regime(),
                smooth_count: spectrum.disc_count(t)?,
                sharp_count: count_disc(&lat, t)?,
                smooth_statistic: spectrum.statistic(t)?,
                smooth_statistic_two_call: spectrum.statistic_two_call(t)?,
                sharp_statistic: sharp_statistic(&lat, &AnnulusQuery::new(t, sp.rho())?),
                spectral_sigma_squared: spectrum.diagonal_variance(),
            };
            table.push(vec![
                Cell::Real(m),
                Cell::Real(row.smooth_count),
                Cell::Int(row.sharp_count as i64),
                Cell::Real(row.smooth_statistic),
                Cell::Real(row.sharp_statistic),
            ]);
            rows.push(row);
        }
        emit(&a.output, config, &table)?;
        print_summary(&SmoothSummary {
            alpha: lat.alpha(),
            beta: lat.beta(),
            l: a.l,
            t: Some(t),
            t_base: None,
            predicted_sigma_squared: predicted,
            rows,
        })?;
    } else {
        let t_base = a.t_base.expect("clap requires --t or --T");
        let mut rows = Vec::new();
        let mut table = Table::new(vec!["M", "second_moment", "scaled"]);
        for &m in &a.m {
            let sp = SmoothingParams::new(m, a.l)?;
            let cfg = EnsembleConfig::new(t_base, a.samples, a.seed)
                .weighting(Weighting::SmoothOmega)
                .rho_rule(RhoRule::Fixed(sp.rho()));
            let second_moment = sharp_smooth_difference_moment(&lat, &sp, &cfg)?;
            let row = DifferenceRow {
                m,
                second_moment,
                scaled: m.sqrt() * second_moment,
            };
            table.push(vec![Cell::Real(m), Cell::Real(row.second_moment), Cell::Real(row.scaled)]);
            rows.push(row);
        }
        emit(&a.output, config, &table)?;
        print_summary(&SmoothSummary {
            alpha: lat.alpha(),
            beta: lat.beta(),
            l: a.l,
            t: None,
            t_base: Some(t_base),
            predicted_sigma_squared: predicted,
            rows,
        })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct StretchSummary {
    rank: usize,
    dimension: usize,
    t: f64,
    before: f64,
    after: f64,
    /// `t · before`
    bound: f64,
    holds: bool,
    equality: bool,
}

#[derive(Serialize)]
struct MinimaSummary {
    covolume: f64,
    product: f64,
    minkowski_lower: f64,
    minkowski_upper: f64,
    minima: Vec<MinimumVector>,
}

#[derive(Serialize)]
struct BoxSummary {
    count: u64,
    volume: f64,
    covolume: f64,
    expected: f64,
    deviation: f64,
}

fn geometry(g: &GeometryCommand, budget: Budget) -> Outcome {
    match g {
        GeometryCommand::Stretch { basis, t } => {
            let lat = GeneralLattice::new(basis.0.clone())?;
            let (before, after) = stretch_determinant_check(&lat, *t)?;
            let bound = t * before;
            print_summary(&StretchSummary {
                rank: lat.rank(),
                dimension: lat.dimension(),
                t: *t,
                before,
                after,
                bound,
                holds: after <= bound * (1.0 + 1e-9),
                equality: (after - bound).abs() <= 1e-12 * bound,
            })?;
        }
        GeometryCommand::Minima { basis, count } => {
            let lat = GeneralLattice::new(basis.0.clone())?;
            let n = count.unwrap_or(lat.rank());
            let minima = successive_minima(&lat, n, budget)?;
            let (lo, hi) = minkowski_bounds(lat.rank());
            let cov = lat.covolume();
            print_summary(&MinimaSummary {
                covolume: cov,
                product: minima.iter().map(|m| m.length).product(),
                minkowski_lower: lo * cov,
                minkowski_upper: hi * cov,
                minima,
            })?;
        }
        GeometryCommand::Box {
            basis,
            tau,
            delta,
            height,
        } => {
            let lat = GeneralLattice::new(basis.0.clone())?;
            let spec = BoxSpec::with_height(*tau, *delta, *height)?;
            let count = count_box_points(&lat, &spec, budget)?;
            let volume = spec.volume(lat.dimension());
            let covolume = lat.covolume();
            let expected = volume / covolume;
            print_summary(&BoxSummary {
                count,
                volume,
                covolume,
                expected,
                deviation: count as f64 - expected,
            })?;
        }
    }
    Ok(())
}
