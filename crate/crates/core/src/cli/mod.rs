//! Command-line front end.
//!
//! Errors are printed with one of the prefixes `usage:`, `domain:`, `io:` or
//! `error:` (numerical failure). Usage and domain errors exit with status 2,
//! the others with 1.

pub mod config;
pub mod svg;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::coherence_map::{dgamma_ds, gamma_of_p, p_of_gamma};
use crate::qfi::{
    one_photon_qfi_with, total_per_photon_information_with, JForm, QfiConvention, QfiMethod,
};
use crate::simulate::{default_bracket, run_trials, TrialConfig};
use crate::spade::{direct_imaging_fisher, fisher_curve, total_fisher, Coherence};
use crate::{Error, SourcePair};
use config::{take_config_path, ConfigError, ConfigFile};
use svg::{line_plot, Series};

/// Header of the `reproduce-fig1` CSV.
pub const FIG1_HEADER: &str = "s_over_sigma,gamma,F_total_sigma2_over_N0";
/// Header of the `reproduce-fig2` CSV.
pub const FIG2_HEADER: &str = "s_over_sigma,p,gamma";

#[derive(Debug, Parser)]
#[command(
    name = "spade-fisher",
    version,
    about = "Fisher information of Hermite-Gaussian mode sorting for two partially coherent point sources"
)]
struct Cli {
    /// key=value file of flags for the subcommand; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classical Fisher information of mode sorting at one separation or along a sweep.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Fisher(FisherArgs),
    /// Degree of coherence at fixed symmetric-mode weight p, or the inverse map.
    #[command(
        name = "gamma-map",
        args_override_self = true,
        allow_negative_numbers = true
    )]
    GammaMap(GammaMapArgs),
    /// Quantum Fisher information of the weak thermal state.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Qfi(QfiArgs),
    /// Monte Carlo maximum-likelihood estimation against the Cramér-Rao bound.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Total Fisher information against separation for several fixed gamma.
    #[command(
        name = "reproduce-fig1",
        args_override_self = true,
        allow_negative_numbers = true
    )]
    ReproduceFig1(Fig1Args),
    /// Degree of coherence against separation for several fixed p.
    #[command(
        name = "reproduce-fig2",
        args_override_self = true,
        allow_negative_numbers = true
    )]
    ReproduceFig2(Fig2Args),
}

#[derive(Debug, Args)]
struct SceneArgs {
    /// Mean photon number per source, N0.
    #[arg(long, default_value_t = 1.0)]
    n0: f64,
    /// Width of the Gaussian point-spread function.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

#[derive(Debug, Args)]
struct GammaArgs {
    /// Real part of the degree of coherence.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Imaginary part of the degree of coherence.
    #[arg(long, default_value_t = 0.0)]
    gamma_imag: f64,
}

impl GammaArgs {
    fn complex(&self) -> Complex64 {
        Complex64::new(self.gamma, self.gamma_imag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file. CSV goes to standard output when absent. With
    /// `--format both` the extension is replaced by .csv and .svg.
    #[arg(long, short = 'o', value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct FisherArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    gamma: GammaArgs,
    /// Hold the symmetric-mode weight p fixed instead of gamma.
    #[arg(long, conflicts_with_all = ["gamma", "gamma_imag"])]
    p: Option<f64>,
    /// Separation (same units as sigma).
    #[arg(long, required_unless_present = "s_max", conflicts_with = "s_max")]
    s: Option<f64>,
    /// Sweep s over [0, s_max] (units of sigma) and write a CSV.
    #[arg(long)]
    s_max: Option<f64>,
    /// Grid points of the sweep.
    #[arg(long, default_value_t = 121)]
    points: usize,
    /// Highest Hermite-Gaussian mode index.
    #[arg(long, default_value_t = 20)]
    qmax: usize,
    /// Also print the Fisher information of direct imaging.
    #[arg(long)]
    direct: bool,
    /// Also print n_q and F_q for every mode.
    #[arg(long)]
    per_mode: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("direction").required(true).args(["p", "gamma"]))]
struct GammaMapArgs {
    /// Symmetric-mode weight; prints gamma(p, s).
    #[arg(long)]
    p: Option<f64>,
    /// Degree of coherence; prints the p that produces it at s.
    #[arg(long)]
    gamma: Option<f64>,
    /// Separation (same units as sigma).
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    Normalized,
    FrozenTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum JFormArg {
    Exact,
    SmallEpsilon,
}

#[derive(Debug, Args)]
struct QfiArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    gamma: GammaArgs,
    /// Separation (same units as sigma).
    #[arg(long)]
    s: f64,
    /// Number of temporal modes M.
    #[arg(long, default_value_t = 10_000)]
    m: usize,
    /// Form of the vacuum/one-photon correction J.
    #[arg(long, value_enum, default_value_t = JFormArg::Exact)]
    j_form: JFormArg,
    /// Differentiation convention for the one-photon state.
    #[arg(long, value_enum, default_value_t = ConventionArg::Normalized)]
    convention: ConventionArg,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    gamma: GammaArgs,
    /// True separation (same units as sigma).
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 20)]
    qmax: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Seed of the ChaCha8 generator; trial i uses stream i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lower end of the search bracket [default: max(1e-4 sigma, s/4)].
    #[arg(long)]
    s_lo: Option<f64>,
    /// Upper end of the search bracket [default: 4 s].
    #[arg(long)]
    s_hi: Option<f64>,
    /// Per-trial estimates as CSV.
    #[arg(long, short = 'o', value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Fig1Args {
    /// Degrees of coherence, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "-1,-0.5,0,0.5,1")]
    gammas: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    qmax: usize,
    /// Grid points on [0, s_max].
    #[arg(long, default_value_t = 121)]
    points: usize,
    /// Largest separation in units of sigma.
    #[arg(long, default_value_t = 6.0)]
    s_max: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct Fig2Args {
    /// Symmetric-mode weights, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    ps: Vec<f64>,
    #[arg(long, default_value_t = 121)]
    points: usize,
    #[arg(long, default_value_t = 6.0)]
    s_max: f64,
    #[command(flatten)]
    out: OutputArgs,
}

/// Flags that take no value, for config-file expansion.
const SWITCHES: &[&str] = &["direct", "per-mode"];

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
    Io(String),
    Numerical(String),
    /// The reader of standard output went away; exit quietly.
    Closed,
}

impl CliError {
    fn status(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Domain(_) => 2,
            Self::Io(_) | Self::Numerical(_) => 1,
            Self::Closed => 0,
        }
    }

    fn message(&self) -> String {
        match self {
            Self::Usage(m) => format!("usage: {m}"),
            Self::Domain(m) => format!("domain: {m}"),
            Self::Io(m) => format!("io: {m}"),
            Self::Numerical(m) => format!("error: {m}"),
            Self::Closed => String::new(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::Internal(_) => Self::Numerical(e.to_string()),
            _ => Self::Domain(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return Self::Closed;
        }
        Self::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Runs the tool on `args` (including the program name) and returns the
/// exit status.
pub fn run(args: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(args, out) {
        Ok(()) => 0,
        Err(CliError::Closed) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", e.message());
            e.status()
        }
    }
}

fn color_choice() -> ColorChoice {
    match std::env::var_os("NO_COLOR") {
        Some(v) if !v.is_empty() => ColorChoice::Never,
        _ => ColorChoice::Auto,
    }
}

fn expand_config(args: &[String]) -> CliResult<Vec<String>> {
    let mut args = args.to_vec();
    let Some(path) = take_config_path(&mut args) else {
        return Ok(args);
    };
    let file = ConfigFile::read(Path::new(&path)).map_err(|e| match e {
        ConfigError::Io(m) => CliError::Io(m),
        ConfigError::Syntax(m) => CliError::Usage(m),
    })?;
    // Config flags go right after the subcommand so that later command-line
    // occurrences override them.
    let Some(pos) = args
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|p| p + 2)
    else {
        return Err(CliError::Usage("--config needs a subcommand".into()));
    };
    let flags = file.to_flags(SWITCHES);
    args.splice(pos..pos, flags);
    Ok(args)
}

fn dispatch(args: &[String], out: &mut dyn Write) -> CliResult<()> {
    let args = expand_config(args)?;
    let matches = match Cli::command()
        .color(color_choice())
        .try_get_matches_from(&args)
    {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    write!(out, "{}", e.render())?;
                    Ok(())
                }
                _ => {
                    let text = e.render().to_string();
                    let text = text.trim_end().trim_start_matches("error: ");
                    Err(CliError::Usage(text.to_string()))
                }
            };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    match cli.command {
        Command::Fisher(a) => fisher(a, out),
        Command::GammaMap(a) => gamma_map(a, out),
        Command::Qfi(a) => qfi(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::ReproduceFig1(a) => reproduce_fig1(a, out),
        Command::ReproduceFig2(a) => reproduce_fig2(a, out),
    }
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn line(out: &mut dyn Write, key: &str, v: f64) -> CliResult<()> {
    writeln!(out, "{key} = {}", fmt_num(v))?;
    Ok(())
}

fn sweep_grid(s_max: f64, points: usize) -> crate::Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Domain("--points must be >= 2".into()));
    }
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(Error::Domain("--s-max must be > 0".into()));
    }
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| s_max * i as f64 / last).collect())
}

fn check_qmax(qmax: usize) -> CliResult<()> {
    if qmax < 1 {
        return Err(CliError::Domain("--qmax must be >= 1".into()));
    }
    Ok(())
}

fn write_file(path: &Path, body: &str) -> CliResult<()> {
    std::fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit(
    out: &mut dyn Write,
    args: &OutputArgs,
    csv: &str,
    svg: impl FnOnce() -> String,
) -> CliResult<()> {
    match (args.format, &args.output) {
        (Format::Csv, None) => out.write_all(csv.as_bytes())?,
        (Format::Csv, Some(p)) => write_file(p, csv)?,
        (Format::Svg, Some(p)) => write_file(p, &svg())?,
        (Format::Both, Some(p)) => {
            write_file(&p.with_extension("csv"), csv)?;
            write_file(&p.with_extension("svg"), &svg())?;
        }
        (_, None) => {
            return Err(CliError::Usage(
                "--output is required for svg output".into(),
            ))
        }
    }
    Ok(())
}

fn csv_rows(header: &str, rows: impl Iterator<Item = [f64; 3]>) -> String {
    let mut csv = String::from(header);
    csv.push('\n');
    for [a, b, c] in rows {
        csv.push_str(&format!("{},{},{}\n", fmt_num(a), fmt_num(b), fmt_num(c)));
    }
    csv
}

fn fisher(a: FisherArgs, out: &mut dyn Write) -> CliResult<()> {
    check_qmax(a.qmax)?;
    let sigma = a.scene.sigma;
    let coherence = match a.p {
        Some(p) => Coherence::fixed_p(p)?,
        None => {
            let g = a.gamma.complex();
            if !(g.norm_sqr() <= 1.0) {
                return Err(CliError::Domain("|gamma| must be <= 1".into()));
            }
            Coherence::FixedGamma(g)
        }
    };
    if let Some(s_max) = a.s_max {
        let grid: Vec<f64> = sweep_grid(s_max, a.points)?
            .into_iter()
            .map(|x| x * sigma)
            .collect();
        let report = fisher_curve(a.scene.n0, sigma, &[coherence], &grid, a.qmax)?.remove(0);
        let scale = sigma * sigma / a.scene.n0;
        let mut rows = Vec::with_capacity(grid.len());
        for (i, &s) in grid.iter().enumerate() {
            rows.push([
                s / sigma,
                coherence.gamma_at(s, sigma)?.re,
                report.total[i] * scale,
            ]);
        }
        let csv = csv_rows(FIG1_HEADER, rows.iter().copied());
        let label = match a.p {
            Some(p) => format!("p = {p}"),
            None => format!("γ = {}", a.gamma.gamma),
        };
        return emit(out, &a.out, &csv, || {
            let series = [Series {
                label,
                points: rows.iter().map(|r| (r[0], r[2])).collect(),
            }];
            line_plot(
                "Total Fisher information of mode sorting",
                "s / σ",
                "F σ² / N₀",
                &series,
            )
        });
    }
    let s = a.s.expect("clap requires --s without --s-max");
    let gamma = coherence.gamma_at(s, sigma)?;
    let model = SourcePair::new(a.scene.n0, s, sigma, gamma)?;
    let total = match coherence {
        Coherence::FixedGamma(_) => total_fisher(&model, a.qmax)?,
        Coherence::FixedP(_) => {
            fisher_curve(a.scene.n0, sigma, &[coherence], &[s], a.qmax)?[0].total[0]
        }
    };
    if a.p.is_some() {
        line(out, "gamma", gamma.re)?;
    }
    line(out, "F_total", total)?;
    line(
        out,
        "F_total_sigma2_over_N0",
        total * sigma * sigma / a.scene.n0,
    )?;
    if a.per_mode {
        let report = fisher_curve(a.scene.n0, sigma, &[coherence], &[s], a.qmax)?.remove(0);
        for q in 0..=a.qmax {
            line(out, &format!("n_{q}"), report.n_per_mode[0][q])?;
            line(out, &format!("F_{q}"), report.per_mode[0][q])?;
        }
    }
    if a.direct {
        line(out, "F_direct", direct_imaging_fisher(&model)?)?;
    }
    Ok(())
}

fn gamma_map(a: GammaMapArgs, out: &mut dyn Write) -> CliResult<()> {
    match (a.p, a.gamma) {
        (Some(p), _) => {
            line(out, "gamma", gamma_of_p(p, a.s, a.sigma)?)?;
            line(out, "dgamma_ds", dgamma_ds(p, a.s, a.sigma)?)?;
        }
        (None, Some(g)) => line(out, "p", p_of_gamma(g, a.s, a.sigma)?)?,
        (None, None) => unreachable!("clap enforces the direction group"),
    }
    Ok(())
}

fn qfi(a: QfiArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.m < 1 {
        return Err(CliError::Domain("--m must be >= 1".into()));
    }
    let model = SourcePair::new(a.scene.n0, a.s, a.scene.sigma, a.gamma.complex())?;
    let form = match a.j_form {
        JFormArg::Exact => JForm::Exact,
        JFormArg::SmallEpsilon => JForm::SmallEpsilon,
    };
    let report = total_per_photon_information_with(&model, a.m, form)?;
    line(out, "Q_rho1", report.q_rho1)?;
    if a.convention == ConventionArg::FrozenTrace {
        line(
            out,
            "Q_rho1_frozen_trace",
            one_photon_qfi_with(&model, QfiConvention::FrozenTrace)?.0,
        )?;
    }
    line(out, "epsilon", report.epsilon)?;
    line(out, "J", report.j_eps)?;
    line(out, "J_over_epsilon", report.per_photon_correction)?;
    line(out, "per_photon_total", report.per_photon_total)?;
    line(out, "total_information", report.total_information())?;
    let method = match report.method {
        QfiMethod::GramBasis => "gram-basis",
        QfiMethod::Grid => "grid",
        QfiMethod::CoincidenceLimit => "coincidence-limit",
    };
    writeln!(out, "method = {method}")?;
    writeln!(
        out,
        "correction_significant = {}",
        report.correction_significant
    )?;
    Ok(())
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    check_qmax(a.qmax)?;
    if a.trials < 1 {
        return Err(CliError::Domain("--trials must be >= 1".into()));
    }
    let model = SourcePair::new(a.scene.n0, a.s, a.scene.sigma, a.gamma.complex())?;
    let (lo, hi) = default_bracket(a.s, a.scene.sigma);
    let (lo, hi) = (a.s_lo.unwrap_or(lo), a.s_hi.unwrap_or(hi));
    if !(lo >= 0.0 && lo < a.s && a.s < hi && hi.is_finite()) {
        return Err(CliError::Domain(
            "--s-lo and --s-hi must satisfy 0 <= s_lo < s < s_hi".into(),
        ));
    }
    let config = TrialConfig::new(model, a.qmax, a.trials, a.seed)?.with_bracket(lo, hi)?;
    let r = run_trials(&config)?;
    line(out, "mean", r.mean)?;
    line(out, "bias", r.bias)?;
    line(out, "std_error", r.std_error)?;
    line(out, "variance", r.variance)?;
    line(out, "mse", r.mse)?;
    line(out, "F_total", r.fisher)?;
    line(out, "crb", r.crb)?;
    line(out, "mse_over_crb", r.mse_over_crb)?;
    writeln!(out, "informative_trials = {}", r.informative)?;
    writeln!(out, "loglik_violations = {}", r.loglik_violations)?;
    if let Some(path) = &a.output {
        let mut csv = String::from("trial,s_hat_over_sigma,loglik_at_estimate,loglik_at_truth\n");
        for (i, o) in r.outcomes.iter().enumerate() {
            let s_hat = o
                .estimate
                .map_or_else(|| "nan".to_string(), |s| fmt_num(s / a.scene.sigma));
            csv.push_str(&format!(
                "{i},{s_hat},{},{}\n",
                fmt_num(o.loglik_at_estimate),
                fmt_num(o.loglik_at_truth)
            ));
        }
        write_file(path, &csv)?;
    }
    Ok(())
}

/// Rows `(s/σ, γ, F σ²/N₀)` of the `reproduce-fig1` sweep, γ-major.
pub fn fig1_rows(
    gammas: &[f64],
    s_max: f64,
    points: usize,
    q_max: usize,
) -> crate::Result<Vec<[f64; 3]>> {
    let grid = sweep_grid(s_max, points)?;
    if gammas.is_empty() {
        return Err(Error::Domain("--gammas must not be empty".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(g.abs() <= 1.0)) {
        return Err(Error::Domain(format!(
            "|gamma| must be <= 1 (--gammas {g})"
        )));
    }
    let coherences: Vec<Coherence<f64>> =
        gammas.iter().map(|&g| Coherence::real_gamma(g)).collect();
    let reports = fisher_curve(1.0, 1.0, &coherences, &grid, q_max)?;
    let mut rows = Vec::with_capacity(gammas.len() * grid.len());
    for (&g, report) in gammas.iter().zip(&reports) {
        for (i, &s) in grid.iter().enumerate() {
            rows.push([s, g, report.total[i]]);
        }
    }
    Ok(rows)
}

/// Rows `(s/σ, p, γ)` of the `reproduce-fig2` sweep, p-major.
pub fn fig2_rows(ps: &[f64], s_max: f64, points: usize) -> crate::Result<Vec<[f64; 3]>> {
    let grid = sweep_grid(s_max, points)?;
    if ps.is_empty() {
        return Err(Error::Domain("--ps must not be empty".into()));
    }
    if let Some(p) = ps.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
        return Err(Error::Domain(format!("p must lie in [0, 1] (--ps {p})")));
    }
    let mut rows = Vec::with_capacity(ps.len() * grid.len());
    for &p in ps {
        for &s in &grid {
            rows.push([s, p, gamma_of_p(p, s, 1.0)?]);
        }
    }
    Ok(rows)
}

fn series_by_column(rows: &[[f64; 3]], key: usize, value: usize, name: &str) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    let mut last_key = f64::NAN;
    for r in rows {
        if series.is_empty() || r[key] != last_key {
            last_key = r[key];
            series.push(Series {
                label: format!("{name} = {}", r[key]),
                points: Vec::new(),
            });
        }
        series
            .last_mut()
            .expect("pushed above")
            .points
            .push((r[0], r[value]));
    }
    series
}

fn reproduce_fig1(a: Fig1Args, out: &mut dyn Write) -> CliResult<()> {
    check_qmax(a.qmax)?;
    let rows = fig1_rows(&a.gammas, a.s_max, a.points, a.qmax)?;
    let csv = csv_rows(FIG1_HEADER, rows.iter().copied());
    emit(out, &a.out, &csv, || {
        line_plot(
            "Total Fisher information in Hermite-Gaussian modes",
            "s / σ",
            "F σ² / N₀",
            &series_by_column(&rows, 1, 2, "γ"),
        )
    })
}

fn reproduce_fig2(a: Fig2Args, out: &mut dyn Write) -> CliResult<()> {
    let rows = fig2_rows(&a.ps, a.s_max, a.points)?;
    let csv = csv_rows(FIG2_HEADER, rows.iter().copied());
    emit(out, &a.out, &csv, || {
        line_plot(
            "Degree of coherence at fixed p",
            "s / σ",
            "γ",
            &series_by_column(&rows, 1, 2, "p"),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut argv = vec!["spade-fisher".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(&argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    fn value(out: &str, key: &str) -> f64 {
        let prefix = format!("{key} = ");
        out.lines()
            .find_map(|l| l.strip_prefix(&prefix))
            .unwrap()
            .parse()
            .unwrap()
    }

    #[test]
    fn fisher_flat_curve() {
        let (code, out, _) = run_capture(&["fisher", "--gamma", "0", "--s", "1", "--qmax", "20"]);
        assert_eq!(code, 0);
        assert!((value(&out, "F_total") - 0.5).abs() < 1e-6);
    }

    #[test]
    fn gamma_out_of_range() {
        let (code, _, err) = run_capture(&["fisher", "--gamma", "2", "--s", "1"]);
        assert_eq!(code, 2);
        assert_eq!(err.trim_end(), "domain: |gamma| must be <= 1");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("reproduce-fig1"));
        let (code, out, _) = run_capture(&["simulate", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("--seed"));
    }

    #[test]
    fn usage_errors() {
        for args in [
            &["frobnicate"][..],
            &["fisher", "--s", "x"],
            &["fisher"],
            &["gamma-map", "--s", "1"],
        ] {
            let (code, _, err) = run_capture(args);
            assert_eq!(code, 2, "{args:?}");
            assert!(err.starts_with("usage: "), "{args:?}: {err}");
        }
    }

    #[test]
    fn flag_names_in_domain_errors() {
        let (code, _, err) = run_capture(&["reproduce-fig1", "--qmax", "0"]);
        assert_eq!(code, 2);
        assert!(err.contains("--qmax"), "{err}");
        let (_, _, err) = run_capture(&["reproduce-fig2", "--points", "1"]);
        assert!(err.starts_with("domain: --points"), "{err}");
    }

    #[test]
    fn fig_csv_layout() {
        let (code, out, _) = run_capture(&["reproduce-fig1"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], FIG1_HEADER);
        assert_eq!(lines.len(), 1 + 5 * 121);
        assert!(!out.contains('\r'));
        let (_, out, _) = run_capture(&["reproduce-fig2", "--ps", "0.5", "--points", "3"]);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], FIG2_HEADER);
        assert!(lines[1].ends_with(&fmt_num(-1.0)));
    }

    #[test]
    fn svg_requires_output_and_writes_files() {
        let (code, _, err) = run_capture(&["reproduce-fig2", "--format", "svg"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("usage:"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fig2.out");
        let (code, _, _) = run_capture(&[
            "reproduce-fig2",
            "--format",
            "both",
            "-o",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(std::fs::read_to_string(dir.path().join("fig2.csv"))
            .unwrap()
            .starts_with(FIG2_HEADER));
        assert!(std::fs::read_to_string(dir.path().join("fig2.svg"))
            .unwrap()
            .contains("<polyline"));
    }

    #[test]
    fn unwritable_output_is_io_error() {
        let (code, _, err) = run_capture(&["reproduce-fig2", "-o", "/nonexistent-dir/x.csv"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("io: "), "{err}");
    }

    #[test]
    fn config_file_under_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "# scene\ngamma=-0.5\ns=0\nqmax=20\n").unwrap();
        let c = cfg.to_str().unwrap();
        let (code, out, _) = run_capture(&["fisher", "--config", c]);
        assert_eq!(code, 0);
        assert!((value(&out, "F_total") - 0.75).abs() < 1e-12);
        let (_, out, _) = run_capture(&["--config", c, "fisher", "--gamma", "1"]);
        assert_eq!(value(&out, "F_total"), 0.0);
        let (code, _, err) = run_capture(&["fisher", "--config", "/nonexistent.cfg"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("io: "));
    }

    #[test]
    fn other_subcommands_run() {
        let (code, out, _) = run_capture(&["gamma-map", "--p", "0.5", "--s", "0"]);
        assert_eq!(code, 0);
        assert_eq!(value(&out, "gamma"), -1.0);
        let (code, out, _) = run_capture(&["gamma-map", "--gamma", "0", "--s", "1"]);
        assert_eq!(code, 0);
        assert!(value(&out, "p") > 0.5);
        let (code, out, _) = run_capture(&[
            "qfi",
            "--gamma",
            "0",
            "--s",
            "1",
            "--convention",
            "frozen-trace",
        ]);
        assert_eq!(code, 0, "{out}");
        assert!((value(&out, "Q_rho1") - 0.25).abs() < 1e-10);
        assert!(out.contains("method = gram-basis"));
        let (code, out, _) = run_capture(&[
            "fisher",
            "--p",
            "0.5",
            "--s",
            "1",
            "--direct",
            "--per-mode",
            "--qmax",
            "4",
        ]);
        assert_eq!(code, 0);
        assert!(out.contains("F_4 = ") && out.contains("F_direct = "));
        let (code, out, _) = run_capture(&[
            "simulate", "--n0", "1000", "--s", "1", "--trials", "20", "--seed", "3",
        ]);
        assert_eq!(code, 0);
        assert_eq!(value(&out, "informative_trials"), 20.0);
        let (code, _, err) = run_capture(&["qfi", "--n0", "1000", "--s", "1", "--m", "100"]);
        assert_eq!(code, 2);
        assert!(
            err.starts_with("domain: ") && err.contains("temporal mode count M"),
            "{err}"
        );
    }

    #[test]
    fn fisher_sweep_matches_fig1() {
        let (_, sweep, _) = run_capture(&["fisher", "--gamma", "-0.5", "--s-max", "6"]);
        let (_, fig, _) = run_capture(&["reproduce-fig1", "--gammas", "-0.5"]);
        assert_eq!(sweep, fig);
    }
}
