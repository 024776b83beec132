//! Command-line front end for `antieig-core`.
//!
//! [`run`] parses an argument vector, executes one subcommand and writes a
//! single JSON document (or CSV table) to `out`; diagnostics go to `err`.
//! The binary is a thin wrapper so tests can drive it in-process.

pub mod io;
pub mod json;

use std::io::Write;
use std::path::PathBuf;

use antieig_core::antieigen::{mu1, MethodChoice};
use antieig_core::dissipativity::{check_equivalence, gamma_best, p_range, DECISION_BAND};
use antieig_core::linalg::{cexp, structural_predicates, StructuralFlags, C64};
use antieig_core::ou::{
    chapman_check, default_n_time, default_t_max, kernel_eval, mass_check, resolvent_probe, GridField, GridSpec,
    OuSpec,
};
use antieig_core::regions::{emit_region_table, region_rows, PGrid, RegionKind, RegionRow};
use antieig_core::sphere::{OptimizerOptions, DEFAULT_SEED};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::io::{pairs, MatrixDoc};

/// Environment variable capping the number of optimizer worker threads.
pub const THREADS_ENV: &str = "ANTIEIG_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] antieig_core::Error),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed JSON in {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("invalid input: {0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(antieig_core::Error::Input(_)) => 2,
            CliError::Core(antieig_core::Error::Numerical(_)) => 3,
            CliError::Core(antieig_core::Error::Precondition(_)) => 4,
            CliError::Read { .. } | CliError::Json { .. } | CliError::Usage(_) => 2,
            CliError::Output(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "antieig", version, about = "First antieigenvalues, Lp-dissipativity and OU heat-kernel probes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct OptimizerArgs {
    /// Number of random restarts.
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    /// Iteration cap per restart.
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Gradient-norm stopping tolerance.
    #[arg(long, default_value_t = 1e-10, allow_hyphen_values = true)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

impl OptimizerArgs {
    fn options(&self, threads: usize) -> OptimizerOptions {
        OptimizerOptions { restarts: self.restarts, max_iters: self.max_iters, tol: self.tol, seed: self.seed, threads }
    }
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Points per axis (default depends on d).
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Half-width of the box `[-L, L]^d`.
    #[arg(long = "grid-L", allow_hyphen_values = true)]
    pub grid_l: Option<f64>,
}

impl GridArgs {
    fn grid(&self, d: usize) -> Result<GridSpec, CliError> {
        let default = GridSpec::default_for(d)?;
        Ok(GridSpec::new(d, self.grid_n.unwrap_or(default.n), self.grid_l.unwrap_or(default.half_width))?)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// First antieigenvalue, witness and real angle.
    Mu1 {
        #[arg(long)]
        matrix: PathBuf,
        /// auto, brute, hermitian or normal.
        #[arg(long, default_value = "auto")]
        method: String,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        out: Option<OutFormat>,
    },
    /// Best constant of the reduced Lp-dissipativity functional.
    Gamma {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        out: Option<OutFormat>,
    },
    /// Compare the dissipativity verdict with the antieigenvalue criterion.
    Check {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        /// Half-width of the indeterminate band around zero margin.
        #[arg(long, default_value_t = DECISION_BAND)]
        band: f64,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        out: Option<OutFormat>,
    },
    /// Interval of exponents p for which the criterion holds.
    Prange {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long)]
        out: Option<OutFormat>,
    },
    /// Sector half-angles or condition-number windows over a p grid.
    Regions {
        /// sector or kappa.
        #[arg(long, default_value = "sector")]
        kind: String,
        /// `start:stop:step` or a comma-separated list.
        #[arg(long, default_value = "1.1:10:0.1")]
        p_grid: String,
        #[arg(long)]
        out: Option<OutFormat>,
    },
    /// Matrix heat kernel H(x, xi, t).
    KernelEval {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: Coords,
        #[arg(long, allow_hyphen_values = true)]
        xi: Coords,
        #[arg(long)]
        out: Option<OutFormat>,
    },
    /// Grid integral of the kernel against exp(-tB).
    KernelMass {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        /// Base point (default: origin).
        #[arg(long, allow_hyphen_values = true)]
        x: Option<Coords>,
        /// Also report the deviation on the grid with halved spacing.
        #[arg(long)]
        refine: bool,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<OutFormat>,
    },
    /// Chapman-Kolmogorov deviation of the kernel on sampled pairs.
    KernelChapman {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value_t = 8)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<OutFormat>,
    },
    /// Ratio ||(lambda - L)^{-1} g|| / ||g|| against the resolvent bound.
    KernelResolvent {
        #[arg(long)]
        spec: PathBuf,
        /// `RE,IM` or `RE`.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        lambda: C64,
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        /// Time horizon (default 14 / (Re lambda - beta_B)).
        #[arg(long, allow_hyphen_values = true)]
        t_max: Option<f64>,
        /// Even number of time steps.
        #[arg(long)]
        n_time: Option<usize>,
        /// Centre of the Gaussian right-hand side (default: origin).
        #[arg(long, allow_hyphen_values = true)]
        g_center: Option<Coords>,
        #[arg(long, default_value_t = 1.0)]
        g_width: f64,
        /// Plane-wave frequency along the first axis.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        g_freq: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<OutFormat>,
    },
    /// Re-emit a matrix document.
    Echo {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: Option<OutFormat>,
    },
}

fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("malformed number {t:?}")))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.iter().all(|x| x.is_finite()) { Ok(v) } else { Err("non-finite coordinate".into()) })
}

/// Comma-separated point coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Coords(pub Vec<f64>);

impl std::str::FromStr for Coords {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_vector(s).map(Self)
    }
}

fn parse_complex(s: &str) -> Result<C64, String> {
    match parse_vector(s)?[..] {
        [re] => Ok(C64::new(re, 0.0)),
        [re, im] => Ok(C64::new(re, im)),
        _ => Err(format!("expected RE,IM, got {s:?}")),
    }
}

/// Worker count: the machine's parallelism, capped by `ANTIEIG_THREADS`.
pub fn worker_threads() -> Result<usize, CliError> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n.min(available)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(available),
    }
}

fn path_str(p: &std::path::Path) -> String {
    p.to_string_lossy().into_owned()
}

fn json_only(out: Option<OutFormat>) -> Result<(), CliError> {
    match out {
        Some(OutFormat::Csv) => Err(CliError::Usage("csv output is only available for the regions table".into())),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct Structure {
    hermitian: bool,
    normal: bool,
    accretive: bool,
    strictly_accretive: bool,
    invertible: bool,
}

impl From<StructuralFlags> for Structure {
    fn from(f: StructuralFlags) -> Self {
        Self {
            hermitian: f.hermitian,
            normal: f.normal,
            accretive: f.accretive,
            strictly_accretive: f.strictly_accretive,
            invertible: f.invertible,
        }
    }
}

#[derive(Serialize)]
struct Mu1Report {
    mu1: f64,
    angle_rad: f64,
    method: &'static str,
    restarts_used: usize,
    witness: Vec<[f64; 2]>,
    structure: Structure,
}

#[derive(Serialize)]
struct GammaReport {
    p: f64,
    b: f64,
    gamma_best: f64,
    verdict: bool,
    tol_decide: f64,
    threshold: f64,
    mu1: Option<f64>,
    margin: Option<f64>,
    accretivity_constant: f64,
    restarts_used: usize,
    witness_w: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct CheckReport {
    p: f64,
    gamma_best: f64,
    mu1: Option<f64>,
    threshold: f64,
    invertible: bool,
    verdict_dissipativity: bool,
    verdict_antieigen: bool,
    agree: bool,
    margin: Option<f64>,
    band: f64,
    boundary_indeterminate: bool,
}

#[derive(Serialize)]
struct PRangeReport {
    mu1: Option<f64>,
    invertible: bool,
    empty: bool,
    p_lower: Option<f64>,
    /// `null` stands for `+∞`.
    p_upper: Option<f64>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum RegionJson {
    Sector { p: f64, half_angle_rad: f64 },
    Kappa { p: f64, c_left: Option<f64>, c_right: Option<f64>, unbounded: bool },
}

#[derive(Serialize)]
struct RegionsReport {
    kind: &'static str,
    rows: Vec<RegionJson>,
}

#[derive(Serialize)]
struct KernelReport {
    t: f64,
    x: Vec<f64>,
    xi: Vec<f64>,
    kernel: MatrixDoc,
}

#[derive(Serialize)]
struct GridReport {
    d: usize,
    n: usize,
    half_width: f64,
    spacing: f64,
}

impl From<&GridSpec> for GridReport {
    fn from(g: &GridSpec) -> Self {
        Self { d: g.d, n: g.n, half_width: g.half_width, spacing: g.spacing() }
    }
}

#[derive(Serialize)]
struct RefinedMass {
    grid: GridReport,
    deviation: f64,
}

#[derive(Serialize)]
struct MassJson {
    t: f64,
    x: Vec<f64>,
    grid: GridReport,
    deviation: f64,
    aliasing_estimate: f64,
    computed: MatrixDoc,
    expected: MatrixDoc,
    refined: Option<RefinedMass>,
}

#[derive(Serialize)]
struct ChapmanJson {
    t: f64,
    s: f64,
    grid: GridReport,
    pairs: usize,
    skipped: bool,
    deviation: Option<f64>,
}

#[derive(Serialize)]
struct ResolventJson {
    lambda: [f64; 2],
    p: f64,
    beta_b: f64,
    gap: f64,
    ratio: f64,
    bound: f64,
    within_slack: bool,
    norm_v: f64,
    norm_g: f64,
    t_max: f64,
    n_time: usize,
    truncation_estimate: f64,
    aliasing_estimate: f64,
    grid: GridReport,
}

/// Relative slack allowed on the grid resolvent bound.
pub const RESOLVENT_SLACK: f64 = 1e-2;

fn origin_or(point: &Option<Coords>, d: usize) -> Vec<f64> {
    point.as_ref().map_or_else(|| vec![0.0; d], |c| c.0.clone())
}

fn gaussian_rhs(spec: &OuSpec, grid: GridSpec, center: &[f64], width: f64, freq: f64) -> Result<GridField, CliError> {
    if center.len() != spec.dim() {
        return Err(CliError::Usage(format!("g-center has {} coordinates, expected {}", center.len(), spec.dim())));
    }
    if !(width > 0.0 && width.is_finite() && freq.is_finite()) {
        return Err(CliError::Usage("g-width must be positive and g-freq finite".into()));
    }
    let n = spec.components();
    Ok(GridField::from_fn(grid, n, |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
        vec![cexp(C64::new(-r2 / (2.0 * width * width), freq * x[0])); n]
    })?)
}

fn render<T: Serialize>(value: &T) -> Result<String, CliError> {
    json::to_json(value).map_err(|e| CliError::Output(e.into()))
}

/// Executes one command and returns the rendered output.
pub fn execute(command: &Command, threads: usize) -> Result<String, CliError> {
    match command {
        Command::Mu1 { matrix, method, opt, out } => {
            json_only(*out)?;
            let a = io::read_matrix(&path_str(matrix))?;
            let method: MethodChoice = method.parse()?;
            let result = mu1(&a, method, &opt.options(threads))?;
            render(&Mu1Report {
                mu1: result.mu1,
                angle_rad: result.angle_rad,
                method: result.method.as_str(),
                restarts_used: result.restarts_used,
                witness: pairs(&result.antieigenvector),
                structure: structural_predicates(&a)?.into(),
            })
        }
        Command::Gamma { matrix, p, opt, out } => {
            json_only(*out)?;
            let a = io::read_matrix(&path_str(matrix))?;
            let r = gamma_best(&a, *p, &opt.options(threads))?;
            render(&GammaReport {
                p: r.p,
                b: r.b,
                gamma_best: r.gamma_best,
                verdict: r.verdict,
                tol_decide: r.tol_decide,
                threshold: r.threshold,
                mu1: r.mu1,
                margin: r.margin,
                accretivity_constant: r.accretivity_constant,
                restarts_used: r.restarts_used,
                witness_w: pairs(&r.witness_w),
            })
        }
        Command::Check { matrix, p, band, opt, out } => {
            json_only(*out)?;
            if !(*band >= 0.0 && band.is_finite()) {
                return Err(CliError::Usage(format!("band must be finite and non-negative, got {band}")));
            }
            let a = io::read_matrix(&path_str(matrix))?;
            let r = check_equivalence(&a, *p, *band, &opt.options(threads))?;
            render(&CheckReport {
                p: r.p,
                gamma_best: r.gamma_best,
                mu1: r.mu1,
                threshold: r.threshold,
                invertible: r.invertible,
                verdict_dissipativity: r.verdict_dissipativity,
                verdict_antieigen: r.verdict_antieigen,
                agree: r.agree,
                margin: r.margin,
                band: *band,
                boundary_indeterminate: r.boundary_indeterminate,
            })
        }
        Command::Prange { matrix, opt, out } => {
            json_only(*out)?;
            let a = io::read_matrix(&path_str(matrix))?;
            let r = p_range(&a, &opt.options(threads))?;
            render(&PRangeReport {
                mu1: r.mu1,
                invertible: r.invertible,
                empty: r.interval.is_none(),
                p_lower: r.interval.map(|(lo, _)| lo),
                p_upper: r.interval.map(|(_, hi)| hi),
            })
        }
        Command::Regions { kind, p_grid, out } => {
            let kind: RegionKind = kind.parse()?;
            let grid: PGrid = p_grid.parse()?;
            match out.unwrap_or(OutFormat::Csv) {
                OutFormat::Csv => Ok(emit_region_table(kind, &grid)?),
                OutFormat::Json => {
                    let rows = region_rows(kind, &grid)?
                        .into_iter()
                        .map(|row| match row {
                            RegionRow::Sector { p, half_angle_rad } => RegionJson::Sector { p, half_angle_rad },
                            RegionRow::Kappa { p, window } => RegionJson::Kappa {
                                p,
                                c_left: window.map(|w| w.c_left),
                                c_right: window.map(|w| w.c_right),
                                unbounded: window.is_none(),
                            },
                        })
                        .collect();
                    let kind = match kind {
                        RegionKind::Sector => "sector",
                        RegionKind::Kappa => "kappa",
                    };
                    render(&RegionsReport { kind, rows })
                }
            }
        }
        Command::KernelEval { spec, t, x, xi, out } => {
            json_only(*out)?;
            let spec = io::read_spec(&path_str(spec))?;
            let h = kernel_eval(&spec, &x.0, &xi.0, *t)?;
            render(&KernelReport { t: *t, x: x.0.clone(), xi: xi.0.clone(), kernel: MatrixDoc::from_complex(&h) })
        }
        Command::KernelMass { spec, t, x, refine, grid, out } => {
            json_only(*out)?;
            let spec = io::read_spec(&path_str(spec))?;
            let grid = grid.grid(spec.dim())?;
            let x = origin_or(x, spec.dim());
            let r = mass_check(&spec, &x, *t, &grid)?;
            let refined = if *refine {
                let fine = grid.refined()?;
                Some(RefinedMass { grid: (&fine).into(), deviation: mass_check(&spec, &x, *t, &fine)?.deviation })
            } else {
                None
            };
            render(&MassJson {
                t: *t,
                x,
                grid: (&grid).into(),
                deviation: r.deviation,
                aliasing_estimate: r.aliasing_estimate,
                computed: MatrixDoc::from_complex(&r.computed),
                expected: MatrixDoc::from_complex(&r.expected),
                refined,
            })
        }
        Command::KernelChapman { spec, t, s, samples, seed, grid, out } => {
            json_only(*out)?;
            let spec = io::read_spec(&path_str(spec))?;
            let grid = grid.grid(spec.dim())?;
            let r = chapman_check(&spec, *t, *s, &grid, *samples, *seed)?;
            render(&ChapmanJson {
                t: *t,
                s: *s,
                grid: (&grid).into(),
                pairs: r.pairs,
                skipped: r.deviation.is_none(),
                deviation: r.deviation,
            })
        }
        Command::KernelResolvent { spec, lambda, p, t_max, n_time, g_center, g_width, g_freq, grid, out } => {
            json_only(*out)?;
            let spec = io::read_spec(&path_str(spec))?;
            let grid = grid.grid(spec.dim())?;
            let gap = lambda.re - spec.beta_b();
            let t_max = t_max.unwrap_or_else(|| default_t_max(gap));
            let n_time = n_time.unwrap_or_else(|| default_n_time(t_max));
            let g = gaussian_rhs(&spec, grid, &origin_or(g_center, spec.dim()), *g_width, *g_freq)?;
            let r = resolvent_probe(&spec, *lambda, &g, *p, t_max, n_time)?;
            render(&ResolventJson {
                lambda: [r.lambda.re, r.lambda.im],
                p: r.p,
                beta_b: spec.beta_b(),
                gap,
                ratio: r.ratio,
                bound: r.bound,
                within_slack: r.ratio <= r.bound * (1.0 + RESOLVENT_SLACK),
                norm_v: r.norm_v,
                norm_g: r.norm_g,
                t_max: r.t_max,
                n_time: r.n_time,
                truncation_estimate: r.truncation_estimate,
                aliasing_estimate: r.aliasing_estimate,
                grid: (&grid).into(),
            })
        }
        Command::Echo { matrix, out } => {
            json_only(*out)?;
            render(&io::read_matrix_doc(&path_str(matrix))?)
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let result = worker_threads().and_then(|threads| execute(&cli.command, threads));
    match result.and_then(|text| out.write_all(text.as_bytes()).map_err(CliError::from)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "antieig: {e}");
            e.exit_code()
        }
    }
}
