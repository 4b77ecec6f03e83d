//! Scenario runner and pipeline comparison for the `jcphase` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use jcphase::jc_reference::{
    amplitude_observables, closed_form_amplitudes, coherent_cutoff, pure_state_density, AtomLevel, DensityTrajectory,
    InitialState, JcError, JcParameters, ScenarioConfig,
};
use jcphase::phase_space::{self, initial_coefficients, PhaseError};
use jcphase::solvers::{
    integrate_canonical_on_grid, separable_coefficients, separable_constants, standard_constants, standard_fpe_solution,
    SolverError,
};
use jcphase::{Observables, C64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const OBSERVABLE_COLUMNS: [&str; 10] =
    ["t", "P0", "P1", "P2", "P12", "re_rho12", "im_rho12", "nbar", "norm", "truncation_mass"];
pub const STANDARD_COLUMNS: [&str; 4] = ["t", "max_abs_phi1", "max_abs_phi2", "max_abs_phi"];

/// Columns checked by `compare`; diagnostics are pipeline-specific and skipped.
const COMPARED_COLUMNS: usize = 9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("truncation leak at t = {t}: top bands reach {mass:e}; increase --n-max")]
    TruncationLeak { t: f64, mass: f64 },
    #[error("tolerance exceeded: {0}")]
    Tolerance(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::TruncationLeak { .. } => 4,
            CliError::Tolerance(_) => 2,
            CliError::Io { .. } | CliError::Numerical(_) => 1,
        }
    }
}

impl From<JcError> for CliError {
    fn from(e: JcError) -> Self {
        match e {
            JcError::InvalidParameter(_) | JcError::NotNormalized(_) | JcError::CutoffTooSmall { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<PhaseError> for CliError {
    fn from(e: PhaseError) -> Self {
        match e {
            PhaseError::Reference(j) => j.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::TruncationLeak { t, mass } => CliError::TruncationLeak { t, mass },
            SolverError::InvalidInput(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Scenario {
    Rabi,
    CollapseRevival,
    DivergenceDemo,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Pipeline {
    QoClosed,
    QoMatrix,
    Stenholm,
    CanonicalOde,
    StandardFpe,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::QoClosed => "qo_closed",
            Pipeline::QoMatrix => "qo_matrix",
            Pipeline::Stenholm => "stenholm",
            Pipeline::CanonicalOde => "canonical_ode",
            Pipeline::StandardFpe => "standard_fpe",
        }
    }

    /// Accuracy the pipeline is held to, for row checks and comparisons.
    pub fn tolerance(self) -> f64 {
        match self {
            Pipeline::QoClosed | Pipeline::Stenholm => 1e-10,
            Pipeline::QoMatrix => 1e-8,
            Pipeline::CanonicalOde => 1e-6,
            Pipeline::StandardFpe => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Atom {
    #[value(alias = "1")]
    Lower,
    #[value(alias = "2")]
    Upper,
}

impl From<Atom> for AtomLevel {
    fn from(a: Atom) -> Self {
        match a {
            Atom::Lower => AtomLevel::Lower,
            Atom::Upper => AtomLevel::Upper,
        }
    }
}

/// Coherent amplitude given as `re` or `re,im`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}"));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got {s:?}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaValue {
    Real(f64),
    Complex([f64; 2]),
}

impl EtaValue {
    fn value(self) -> C64 {
        match self {
            EtaValue::Real(r) => C64::new(r, 0.0),
            EtaValue::Complex([re, im]) => C64::new(re, im),
        }
    }
}

/// Every setting that a config file or the command line can supply.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub scenario: Option<Scenario>,
    pub pipeline: Option<Pipeline>,
    pub omega_rabi: Option<f64>,
    pub detuning: Option<f64>,
    pub cavity_omega: Option<f64>,
    pub eta: Option<EtaValue>,
    pub fock_m: Option<usize>,
    pub atom: Option<Atom>,
    /// Explicit amplitudes; only valid with the custom scenario.
    pub initial: Option<InitialState>,
    pub n_max: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub sample_step: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Settings {
    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(self, over: Settings) -> Settings {
        Settings {
            scenario: over.scenario.or(self.scenario),
            pipeline: over.pipeline.or(self.pipeline),
            omega_rabi: over.omega_rabi.or(self.omega_rabi),
            detuning: over.detuning.or(self.detuning),
            cavity_omega: over.cavity_omega.or(self.cavity_omega),
            eta: over.eta.or(self.eta),
            fock_m: over.fock_m.or(self.fock_m),
            atom: over.atom.or(self.atom),
            initial: over.initial.or(self.initial),
            n_max: over.n_max.or(self.n_max),
            dt: over.dt.or(self.dt),
            t_end: over.t_end.or(self.t_end),
            sample_step: over.sample_step.or(self.sample_step),
            out: over.out.or(self.out),
            format: over.format.or(self.format),
        }
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    /// Vacuum Rabi frequency.
    #[arg(long)]
    pub omega_rabi: Option<f64>,
    /// Atomic frequency minus cavity frequency.
    #[arg(long, allow_hyphen_values = true)]
    pub detuning: Option<f64>,
    #[arg(long)]
    pub cavity_omega: Option<f64>,
    /// Coherent amplitude, `re` or `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub eta: Option<C64>,
    /// Photon number of a Fock initial state.
    #[arg(long)]
    pub fock_m: Option<usize>,
    #[arg(long, value_enum)]
    pub atom: Option<Atom>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Integrator step for canonical_ode.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Spacing of output rows.
    #[arg(long)]
    pub sample_step: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file with the same keys as the flags (snake_case); flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl CommonArgs {
    fn settings(&self, pipeline: Option<Pipeline>) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        let flags = Settings {
            scenario: self.scenario,
            pipeline,
            omega_rabi: self.omega_rabi,
            detuning: self.detuning,
            cavity_omega: self.cavity_omega,
            eta: self.eta.map(|c| EtaValue::Complex([c.re, c.im])),
            fock_m: self.fock_m,
            atom: self.atom,
            initial: None,
            n_max: self.n_max,
            dt: self.dt,
            t_end: self.t_end,
            sample_step: self.sample_step,
            out: self.out.clone(),
            format: self.format,
        };
        Ok(file.overridden_by(flags))
    }
}

#[derive(Debug, Parser)]
#[command(name = "jcphase", version, about = "Jaynes-Cummings dynamics through phase-space and reference pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one pipeline and write its time series.
    Run {
        #[arg(long, value_enum)]
        pipeline: Option<Pipeline>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run two pipelines on the same scenario and report their differences.
    Compare {
        #[arg(long, value_enum)]
        pipeline_a: Pipeline,
        #[arg(long, value_enum)]
        pipeline_b: Pipeline,
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub scenario: Scenario,
    pub pipeline: Pipeline,
    pub cfg: ScenarioConfig,
    pub dt: f64,
    pub t_end: f64,
    pub sample_step: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

struct ScenarioDefaults {
    pipeline: Pipeline,
    initial: Option<InitialState>,
    t_end: f64,
    sample_step: f64,
}

fn scenario_defaults(s: Scenario) -> ScenarioDefaults {
    let fock = |photons| Some(InitialState::Fock { photons, level: AtomLevel::Lower });
    match s {
        Scenario::Rabi => ScenarioDefaults { pipeline: Pipeline::QoClosed, initial: fock(1), t_end: 20.0, sample_step: 0.05 },
        Scenario::CollapseRevival => ScenarioDefaults {
            pipeline: Pipeline::Stenholm,
            initial: Some(InitialState::Coherent { eta: C64::new(5.0, 0.0), level: AtomLevel::Lower }),
            t_end: 100.0,
            sample_step: 0.05,
        },
        Scenario::DivergenceDemo => {
            ScenarioDefaults { pipeline: Pipeline::StandardFpe, initial: fock(4), t_end: 10.0, sample_step: 0.1 }
        }
        Scenario::Custom => ScenarioDefaults { pipeline: Pipeline::QoClosed, initial: None, t_end: 10.0, sample_step: 0.1 },
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Applies scenario defaults and checks consistency.
pub fn resolve(s: &Settings) -> Result<RunSpec, CliError> {
    let scenario = s.scenario.unwrap_or(Scenario::Custom);
    let d = scenario_defaults(scenario);
    let pipeline = s.pipeline.unwrap_or(d.pipeline);
    if pipeline == Pipeline::StandardFpe && !matches!(scenario, Scenario::DivergenceDemo | Scenario::Custom) {
        return Err(CliError::Config("standard_fpe runs only with the divergence_demo or custom scenario".into()));
    }
    let given = [s.eta.is_some(), s.fock_m.is_some(), s.initial.is_some()].iter().filter(|b| **b).count();
    if given > 1 {
        return Err(CliError::Config("give at most one of eta, fock_m and initial".into()));
    }
    if s.initial.is_some() && scenario != Scenario::Custom {
        return Err(CliError::Config("explicit initial amplitudes need the custom scenario".into()));
    }
    let mut initial = if let Some(eta) = s.eta {
        InitialState::Coherent { eta: eta.value(), level: AtomLevel::Lower }
    } else if let Some(m) = s.fock_m {
        InitialState::Fock { photons: m, level: AtomLevel::Lower }
    } else if let Some(i) = &s.initial {
        i.clone()
    } else {
        d.initial.ok_or_else(|| CliError::Config("custom scenario needs eta, fock_m or initial".into()))?
    };
    if let Some(atom) = s.atom {
        match &mut initial {
            InitialState::Fock { level, .. } | InitialState::Coherent { level, .. } => *level = atom.into(),
            InitialState::Custom { .. } => {
                return Err(CliError::Config("atom cannot be combined with explicit amplitudes".into()))
            }
        }
    }
    if let InitialState::Coherent { eta, .. } = initial {
        if !(eta.re.is_finite() && eta.im.is_finite()) {
            return Err(CliError::Config("eta must be finite".into()));
        }
    }
    let n_max = s.n_max.unwrap_or(match &initial {
        InitialState::Fock { photons, .. } => photons + 3,
        InitialState::Coherent { eta, .. } => coherent_cutoff(*eta),
        InitialState::Custom { lower, upper } => lower.len().max(upper.len() + 1).saturating_sub(1).max(1),
    });
    let params = JcParameters {
        rabi: s.omega_rabi.unwrap_or(1.0),
        detuning: s.detuning.unwrap_or(0.0),
        cavity_omega: s.cavity_omega.unwrap_or(5.0),
    };
    let cfg = ScenarioConfig { params, initial, n_max };
    cfg.validate()?;
    let t_end = s.t_end.unwrap_or(d.t_end);
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(CliError::Config(format!("t_end must be non-negative, got {t_end}")));
    }
    Ok(RunSpec {
        scenario,
        pipeline,
        cfg,
        dt: positive("dt", s.dt.unwrap_or(1e-3))?,
        t_end,
        sample_step: positive("sample_step", s.sample_step.unwrap_or(d.sample_step))?,
        out: s.out.clone(),
        format: s.format.unwrap_or(Format::Csv),
    })
}

/// Output times `0, step, 2 step, ...` up to `t_end`.
pub fn sample_times(spec: &RunSpec) -> Vec<f64> {
    let n = (spec.t_end / spec.sample_step + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * spec.sample_step).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: Scenario,
    pub pipeline: Pipeline,
    pub omega_rabi: f64,
    pub detuning: f64,
    pub cavity_omega: f64,
    pub atom_omega: f64,
    pub initial: InitialState,
    pub n_max: usize,
    pub dt: f64,
    pub t_end: f64,
    pub sample_step: f64,
    pub row_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp_weight_omitted: Option<bool>,
    pub columns: Vec<&'static str>,
}

pub fn emit_series_metadata(spec: &RunSpec) -> Metadata {
    let p = &spec.cfg.params;
    let tol = spec.pipeline.tolerance();
    let standard = spec.pipeline == Pipeline::StandardFpe;
    Metadata {
        tool: "jcphase",
        version: env!("CARGO_PKG_VERSION"),
        scenario: spec.scenario,
        pipeline: spec.pipeline,
        omega_rabi: p.rabi,
        detuning: p.detuning,
        cavity_omega: p.cavity_omega,
        atom_omega: p.atom_omega(),
        initial: spec.cfg.initial.clone(),
        n_max: spec.cfg.n_max,
        dt: spec.dt,
        t_end: spec.t_end,
        sample_step: spec.sample_step,
        row_tolerance: tol.is_finite().then_some(tol),
        exp_weight_omitted: standard.then_some(true),
        columns: if standard { STANDARD_COLUMNS.to_vec() } else { OBSERVABLE_COLUMNS.to_vec() },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub metadata: Metadata,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.metadata.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let meta = serde_json::to_string(&self.metadata).expect("metadata serializes");
        writeln!(out, "# {meta}").unwrap();
        writeln!(out, "{}", self.metadata.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = serde_json::json!({ "metadata": self.metadata, "rows": self.rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("series serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn observable_row(t: f64, o: &Observables, truncation: f64) -> Vec<f64> {
    vec![t, o.p0, o.p1, o.p2, o.p12, o.rho12.re, o.rho12.im, o.nbar, o.total(), truncation]
}

fn check_row(t: f64, o: &Observables, tol: f64) -> Result<(), CliError> {
    let sum = (o.total() - 1.0).abs();
    let conj = (o.rho21 - o.rho12.conj()).norm();
    if sum > tol || conj > tol {
        return Err(CliError::Tolerance(format!(
            "row at t = {t}: probability sum off by {sum:e}, coherence conjugation off by {conj:e} (limit {tol:e})"
        )));
    }
    Ok(())
}

fn observable_rows(spec: &RunSpec, times: &[f64]) -> Result<Vec<(f64, Observables, f64)>, CliError> {
    let cfg = &spec.cfg;
    let p = &cfg.params;
    let rows = match spec.pipeline {
        Pipeline::QoClosed => times
            .iter()
            .map(|&t| {
                let s = closed_form_amplitudes(cfg, t)?;
                Ok((t, amplitude_observables(&s, p), s.top_band_mass()))
            })
            .collect::<Result<Vec<_>, CliError>>()?,
        Pipeline::QoMatrix => {
            let rho0 = pure_state_density(&cfg.initial_amplitudes()?, p);
            let traj = DensityTrajectory::new(p, cfg.n_max, &rho0)?;
            times
                .iter()
                .map(|&t| Ok((t, traj.observables(t)?, traj.top_band_mass(t))))
                .collect::<Result<Vec<_>, CliError>>()?
        }
        Pipeline::Stenholm => {
            let c = separable_constants(&cfg.initial_amplitudes()?, p);
            times
                .iter()
                .map(|&t| {
                    let s = separable_coefficients(&c, t);
                    (t, phase_space::observables(&s), s.top_band_mass())
                })
                .collect()
        }
        Pipeline::CanonicalOde => {
            let s0 = initial_coefficients(cfg)?;
            integrate_canonical_on_grid(&s0, p, times, spec.dt)?
                .iter()
                .map(|s| (s.t, phase_space::observables(s), s.top_band_mass()))
                .collect()
        }
        Pipeline::StandardFpe => unreachable!("handled separately"),
    };
    Ok(rows)
}

/// Computes the time series described by `spec`.
pub fn run(spec: &RunSpec) -> Result<Series, CliError> {
    let times = sample_times(spec);
    let metadata = emit_series_metadata(spec);
    if spec.pipeline == Pipeline::StandardFpe {
        let c = standard_constants(&spec.cfg.initial_amplitudes()?, &spec.cfg.params);
        let rows = times
            .iter()
            .map(|&t| {
                let s = standard_fpe_solution(&c, t);
                let m1 = s.phi1.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let m2 = s.phi2.iter().map(|v| v.norm()).fold(0.0, f64::max);
                vec![t, m1, m2, m1.max(m2)]
            })
            .collect();
        return Ok(Series { metadata, rows });
    }
    let tol = spec.pipeline.tolerance();
    let mut rows = Vec::with_capacity(times.len());
    for (t, o, trunc) in observable_rows(spec, &times)? {
        check_row(t, &o, tol)?;
        rows.push(observable_row(t, &o, trunc));
    }
    Ok(Series { metadata, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnDiff {
    pub column: &'static str,
    pub max_abs: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub pipeline_a: Pipeline,
    pub pipeline_b: Pipeline,
    pub tolerance: f64,
    pub rows: usize,
    pub columns: Vec<ColumnDiff>,
    pub passed: bool,
}

impl CompareReport {
    pub fn max_abs(&self) -> f64 {
        self.columns.iter().map(|c| c.max_abs).fold(0.0, f64::max)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut out = String::new();
                let meta = serde_json::json!({
                    "pipeline_a": self.pipeline_a,
                    "pipeline_b": self.pipeline_b,
                    "tolerance": self.tolerance,
                    "rows": self.rows,
                    "passed": self.passed,
                });
                writeln!(out, "# {meta}").unwrap();
                writeln!(out, "column,max_abs,rms").unwrap();
                for c in &self.columns {
                    writeln!(out, "{},{:.16e},{:.16e}", c.column, c.max_abs, c.rms).unwrap();
                }
                out
            }
        }
    }
}

/// Tolerance for a pipeline pair: the looser of the two.
pub fn pair_tolerance(a: Pipeline, b: Pipeline) -> f64 {
    a.tolerance().max(b.tolerance())
}

pub fn compare_series(a: &Series, b: &Series) -> Result<CompareReport, CliError> {
    let (pa, pb) = (a.metadata.pipeline, b.metadata.pipeline);
    if a.metadata.columns != b.metadata.columns || a.metadata.columns != OBSERVABLE_COLUMNS {
        return Err(CliError::Config("only observable pipelines can be compared".into()));
    }
    if a.rows.len() != b.rows.len() || a.rows.iter().zip(&b.rows).any(|(x, y)| x[0] != y[0]) {
        return Err(CliError::Config("time grids differ".into()));
    }
    let n = a.rows.len().max(1) as f64;
    let columns: Vec<ColumnDiff> = (1..COMPARED_COLUMNS)
        .map(|i| {
            let diffs: Vec<f64> = a.rows.iter().zip(&b.rows).map(|(x, y)| (x[i] - y[i]).abs()).collect();
            ColumnDiff {
                column: OBSERVABLE_COLUMNS[i],
                max_abs: diffs.iter().copied().fold(0.0, f64::max),
                rms: (diffs.iter().map(|d| d * d).sum::<f64>() / n).sqrt(),
            }
        })
        .collect();
    let tolerance = pair_tolerance(pa, pb);
    let passed = columns.iter().all(|c| c.max_abs <= tolerance);
    Ok(CompareReport { pipeline_a: pa, pipeline_b: pb, tolerance, rows: a.rows.len(), columns, passed })
}

/// Runs both pipelines on `spec` and compares them.
pub fn compare(spec: &RunSpec, a: Pipeline, b: Pipeline) -> Result<CompareReport, CliError> {
    if a == Pipeline::StandardFpe || b == Pipeline::StandardFpe {
        return Err(CliError::Config("standard_fpe produces no observables to compare".into()));
    }
    let sa = run(&RunSpec { pipeline: a, ..spec.clone() })?;
    let sb = run(&RunSpec { pipeline: b, ..spec.clone() })?;
    compare_series(&sa, &sb)
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<Option<String>, CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
            Ok(None)
        }
        None => Ok(Some(text.to_owned())),
    }
}

/// Executes a parsed command line. Returns text for stdout, if any.
pub fn execute(cli: &Cli) -> Result<Option<String>, CliError> {
    match &cli.command {
        Command::Run { pipeline, common } => {
            let spec = resolve(&common.settings(*pipeline)?)?;
            let series = run(&spec)?;
            write_output(&spec.out, &series.render(spec.format))
        }
        Command::Compare { pipeline_a, pipeline_b, common } => {
            let spec = resolve(&common.settings(Some(*pipeline_a))?)?;
            let report = compare(&spec, *pipeline_a, *pipeline_b)?;
            let text = report.render(spec.format);
            let printed = write_output(&spec.out, &text)?;
            if !report.passed {
                if let Some(t) = printed {
                    print!("{t}");
                }
                return Err(CliError::Tolerance(format!(
                    "{} vs {}: max difference {:e} exceeds {:e}",
                    pipeline_a.name(),
                    pipeline_b.name(),
                    report.max_abs(),
                    report.tolerance
                )));
            }
            Ok(printed)
        }
    }
}
