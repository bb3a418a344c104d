//! Batch front end: JSON run configuration, pipeline assembly, CSV and
//! JSON emitters with reproducible formatting.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::{self, BoundaryGeometry, GeometryOptions, Subspace, TripletMaps};
use crate::nevanlinna::{self, BoundaryParameter};
use crate::presets;
use crate::propagate::{Propagator, PropagatorSpec};
use crate::quad::QuadSpec;
use crate::spectral::{self, DistributionFunction, InversionOptions};
use crate::system::{self, CoefficientField, Dimensions, SymmetricSystem};
use crate::{C64, CMat, CVec, Result, SpecfunError};

pub type ComplexJson = [f64; 2];
pub type MatrixJson = Vec<Vec<ComplexJson>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub tau: TauConfig,
    #[serde(default)]
    pub parameter: ParameterConfig,
    #[serde(default)]
    pub grids: GridsConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub function: FunctionConfig,
    /// Spectral parameter for the resolvent cross-check, `[re, im]`.
    #[serde(default)]
    pub resolvent_lambda: Option<ComplexJson>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub nu: usize,
    pub nu_hat: usize,
    pub interval: [f64; 2],
    pub b: FieldConfig,
    pub delta: FieldConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldConfig {
    Constant { value: MatrixJson },
    Polynomial { coefficients: Vec<MatrixJson> },
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<MatrixJson> },
    Tabulated { times: Vec<f64>, values: Vec<MatrixJson> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauConfig {
    /// Spanning vectors, not necessarily orthonormal.
    pub vectors: Vec<Vec<ComplexJson>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ParameterConfig {
    Preset { preset: String },
    Explicit { c0: MatrixJson, c1: MatrixJson },
}

impl Default for ParameterConfig {
    fn default() -> Self {
        ParameterConfig::Preset { preset: "dirichlet".to_string() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsConfig {
    #[serde(default)]
    pub lambda: Vec<ComplexJson>,
    #[serde(default = "default_s_window")]
    pub s_window: [f64; 2],
    #[serde(default = "default_s_resolution")]
    pub s_resolution: f64,
    #[serde(default = "default_epsilon_schedule")]
    pub epsilon_schedule: Vec<f64>,
    #[serde(default = "default_admissibility_y")]
    pub admissibility_y: Vec<f64>,
}

fn default_s_window() -> [f64; 2] {
    [-8.0, 8.0]
}

fn default_s_resolution() -> f64 {
    0.25
}

fn default_epsilon_schedule() -> Vec<f64> {
    InversionOptions::default().epsilon_schedule
}

fn default_admissibility_y() -> Vec<f64> {
    nevanlinna::default_y_grid()
}

impl Default for GridsConfig {
    fn default() -> Self {
        GridsConfig {
            lambda: Vec::new(),
            s_window: default_s_window(),
            s_resolution: default_s_resolution(),
            epsilon_schedule: default_epsilon_schedule(),
            admissibility_y: default_admissibility_y(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_panels")]
    pub panels: usize,
    #[serde(default = "default_nodes")]
    pub nodes_per_panel: usize,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default = "default_min_jump")]
    pub min_jump: f64,
}

fn default_rtol() -> f64 {
    1e-10
}
fn default_atol() -> f64 {
    1e-12
}
fn default_panels() -> usize {
    256
}
fn default_nodes() -> usize {
    32
}
fn default_rank_tol() -> f64 {
    1e-9
}
fn default_min_jump() -> f64 {
    1e-3
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        TolerancesConfig {
            rtol: default_rtol(),
            atol: default_atol(),
            panels: default_panels(),
            nodes_per_panel: default_nodes(),
            rank_tol: default_rank_tol(),
            min_jump: default_min_jump(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionConfig {
    /// Built-in smooth test function vanishing at both endpoints.
    Smooth,
    /// Constant vector in the state space.
    Constant { value: Vec<ComplexJson> },
    /// `φ_U(·, s) h` for a real `s` and model-space coefficients `h`.
    SolutionFrame { s: f64, coefficients: Vec<ComplexJson> },
}

impl Default for FunctionConfig {
    fn default() -> Self {
        FunctionConfig::Smooth
    }
}

fn parse_c(z: &ComplexJson) -> C64 {
    C64::new(z[0], z[1])
}

fn parse_matrix(m: &MatrixJson, rows: usize, cols: usize, what: &str) -> Result<CMat> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(SpecfunError::Config(format!("{what}: expected a {rows}x{cols} complex matrix")));
    }
    Ok(CMat::from_fn(rows, cols, |r, c| parse_c(&m[r][c])))
}

fn parse_field(cfg: &FieldConfig, n: usize, what: &str) -> Result<CoefficientField> {
    match cfg {
        FieldConfig::Constant { value } => Ok(CoefficientField::Constant(parse_matrix(value, n, n, what)?)),
        FieldConfig::Polynomial { coefficients } => {
            if coefficients.is_empty() {
                return Err(SpecfunError::Config(format!("{what}: polynomial needs at least one coefficient")));
            }
            let coeffs = coefficients
                .iter()
                .map(|m| parse_matrix(m, n, n, what))
                .collect::<Result<Vec<_>>>()?;
            Ok(CoefficientField::Polynomial(coeffs))
        }
        FieldConfig::PiecewiseConstant { breaks, values } => {
            let vals = values.iter().map(|m| parse_matrix(m, n, n, what)).collect::<Result<Vec<_>>>()?;
            Ok(CoefficientField::PiecewiseConstant { breaks: breaks.clone(), values: vals })
        }
        FieldConfig::Tabulated { times, values } => {
            let vals = values.iter().map(|m| parse_matrix(m, n, n, what)).collect::<Result<Vec<_>>>()?;
            Ok(CoefficientField::Tabulated { times: times.clone(), values: vals })
        }
    }
}

/// Everything the commands need, assembled from a parsed configuration.
pub struct Pipeline {
    pub sys: SymmetricSystem,
    pub tau: Subspace,
    pub geom: BoundaryGeometry,
    pub triplet: TripletMaps,
    pub param: BoundaryParameter,
    pub spec: PropagatorSpec,
    pub lambda_grid: Vec<C64>,
    pub s_grid: Vec<f64>,
    pub inversion: InversionOptions,
    pub admissibility_y: Vec<f64>,
    pub function: FunctionConfig,
    pub resolvent_lambda: C64,
}

/// Builds the domain objects; schema-level problems come back as
/// `Config`/`ShapeMismatch` errors, numerical admissibility problems as
/// their own variants.
pub fn build_pipeline(config: &RunConfig) -> Result<Pipeline> {
    let dims = Dimensions::new(config.system.nu, config.system.nu_hat)
        .map_err(|e| SpecfunError::Config(e.to_string()))?;
    let n = dims.n();
    let b = parse_field(&config.system.b, n, "system.b")?;
    let delta = parse_field(&config.system.delta, n, "system.delta")?;
    let sys = SymmetricSystem::new(dims, (config.system.interval[0], config.system.interval[1]), b, delta)?;

    if config.tau.vectors.is_empty() {
        return Err(SpecfunError::Config("tau.vectors must not be empty".into()));
    }
    let k = config.tau.vectors.len();
    let mut vectors = CMat::zeros(n, k);
    for (col, v) in config.tau.vectors.iter().enumerate() {
        if v.len() != n {
            return Err(SpecfunError::Config(format!("tau vector {col} must have {n} entries")));
        }
        for (row, z) in v.iter().enumerate() {
            vectors[(row, col)] = parse_c(z);
        }
    }
    let tau = Subspace::from_spanning(&vectors)?;

    let mut spec = PropagatorSpec::default();
    spec.tol.rtol = config.tolerances.rtol;
    spec.tol.atol = config.tolerances.atol;
    spec.quad = QuadSpec::new(config.tolerances.panels, config.tolerances.nodes_per_panel);

    let mut geo_opts = GeometryOptions::default();
    geo_opts.rank_tol = config.tolerances.rank_tol;
    geo_opts.prop = spec.clone();
    let geom = boundary::build_geometry(&sys, &tau, &geo_opts)?;
    let triplet = boundary::build_triplet(&geom);

    let hdot = geom.hdot_dim();
    let param = match &config.parameter {
        ParameterConfig::Preset { preset } => match preset.as_str() {
            "dirichlet" => BoundaryParameter::dirichlet(hdot),
            "neumann" => BoundaryParameter::neumann(hdot),
            other => return Err(SpecfunError::Config(format!("unknown parameter preset '{other}'"))),
        },
        ParameterConfig::Explicit { c0, c1 } => {
            let c0 = parse_matrix(c0, hdot, hdot, "parameter.c0")?;
            let c1 = parse_matrix(c1, hdot, hdot, "parameter.c1")?;
            BoundaryParameter::constant(c0, c1)?
        }
    };

    let [s_lo, s_hi] = config.grids.s_window;
    if !(s_lo < s_hi) {
        return Err(SpecfunError::Config("grids.s_window must be increasing".into()));
    }
    let step = config.grids.s_resolution;
    if !(step > 0.0) {
        return Err(SpecfunError::Config("grids.s_resolution must be positive".into()));
    }
    let count = ((s_hi - s_lo) / step).round().max(1.0) as usize;
    let s_grid: Vec<f64> = (0..=count).map(|i| s_lo + (s_hi - s_lo) * i as f64 / count as f64).collect();

    let mut inversion = InversionOptions::default();
    inversion.epsilon_schedule = config.grids.epsilon_schedule.clone();
    inversion.min_jump = config.tolerances.min_jump;

    Ok(Pipeline {
        sys,
        tau,
        geom,
        triplet,
        param,
        spec,
        lambda_grid: config.grids.lambda.iter().map(parse_c).collect(),
        s_grid,
        inversion,
        admissibility_y: config.grids.admissibility_y.clone(),
        function: config.function.clone(),
        resolvent_lambda: config
            .resolvent_lambda
            .as_ref()
            .map(parse_c)
            .unwrap_or_else(|| C64::new(0.0, 1.0)),
    })
}

/// Worker count for the inner sweeps, capped by `SPECFUN_THREADS`.
pub fn thread_count() -> usize {
    if let Ok(v) = std::env::var("SPECFUN_THREADS") {
        if let Ok(k) = v.parse::<usize>() {
            return k.max(1);
        }
    }
    std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1).min(8)
}

/// Order-preserving parallel map over a slice.
fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = thread_count().min(items.len().max(1));
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for part in items.chunks(chunk) {
            let f = &f;
            handles.push(scope.spawn(move || part.iter().map(f).collect::<Vec<R>>()));
        }
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn matrix_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliCommand {
    Validate,
    SampleM,
    Invert,
    Fourier,
    ResolventCheck,
    Report,
}

/// Runs one command; returns the process exit code
/// (0 success, 1 numerical or validation failure, 2 usage or schema
/// error).
pub fn run(cmd: CliCommand, config_path: &Path, out_dir: &Path) -> i32 {
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return 2;
        }
    };
    let config: RunConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            return 2;
        }
    };
    if let Err(e) = fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create output directory {}: {e}", out_dir.display());
        return 2;
    }
    match dispatch(cmd, &config, out_dir) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SpecfunError::Config(_) | SpecfunError::ShapeMismatch(_) | SpecfunError::InvalidInput(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cmd: CliCommand, config: &RunConfig, out_dir: &Path) -> Result<i32> {
    match cmd {
        CliCommand::Validate => cmd_validate(config, out_dir),
        _ => {
            let pipeline = build_pipeline(config)?;
            match cmd {
                CliCommand::SampleM => cmd_sample_m(&pipeline, out_dir),
                CliCommand::Invert => cmd_invert(&pipeline, out_dir),
                CliCommand::Fourier => cmd_fourier(&pipeline, out_dir),
                CliCommand::ResolventCheck => cmd_resolvent_check(&pipeline, out_dir),
                CliCommand::Report => cmd_report(&pipeline, out_dir),
                CliCommand::Validate => unreachable!(),
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    passed: bool,
    system_ok: bool,
    system_violations: Vec<String>,
    companion_neutral: bool,
    tau_definite: bool,
    parameter_valid: bool,
    parameter_violations: Vec<String>,
}

fn cmd_validate(config: &RunConfig, out_dir: &Path) -> Result<i32> {
    // Schema-level assembly happens first; numerical checks afterwards so
    // that every failure is itemized rather than fatal.
    let dims = Dimensions::new(config.system.nu, config.system.nu_hat)
        .map_err(|e| SpecfunError::Config(e.to_string()))?;
    let n = dims.n();
    let b = parse_field(&config.system.b, n, "system.b")?;
    let delta = parse_field(&config.system.delta, n, "system.delta")?;
    let sys = SymmetricSystem::new(dims, (config.system.interval[0], config.system.interval[1]), b, delta)?;

    if config.tau.vectors.is_empty() {
        return Err(SpecfunError::Config("tau.vectors must not be empty".into()));
    }
    let mut vectors = CMat::zeros(n, config.tau.vectors.len());
    for (col, v) in config.tau.vectors.iter().enumerate() {
        if v.len() != n {
            return Err(SpecfunError::Config(format!("tau vector {col} must have {n} entries")));
        }
        for (row, z) in v.iter().enumerate() {
            vectors[(row, col)] = parse_c(z);
        }
    }
    let tau = Subspace::from_spanning(&vectors)?;

    let grid = system::default_sample_grid(&sys, 64);
    let validation = system::validate_system(&sys, &grid, 1e-10);
    let companion = boundary::j_companion(sys.j(), &tau);
    let companion_neutral = boundary::is_neutral(sys.j(), &companion, 1e-10);
    let spec = PropagatorSpec::default();
    let tau_definite = if validation.passed {
        system::tau_definite(&sys, &tau, C64::new(0.0, 1.0), config.tolerances.rank_tol, &spec)?
    } else {
        false
    };

    let lambda_samples: Vec<C64> = if config.grids.lambda.is_empty() {
        vec![C64::new(0.0, 1.0), C64::new(0.0, 2.0), C64::new(1.0, 1.0)]
    } else {
        config.grids.lambda.iter().map(parse_c).collect()
    };
    // Parameter shapes depend on the geometry; validate against the
    // boundary space dimension when the geometry is constructible.
    let (parameter_valid, parameter_violations) = if companion_neutral && tau_definite {
        let mut geo_opts = GeometryOptions::default();
        geo_opts.rank_tol = config.tolerances.rank_tol;
        let geom = boundary::build_geometry(&sys, &tau, &geo_opts)?;
        let hdot = geom.hdot_dim();
        let param = match &config.parameter {
            ParameterConfig::Preset { preset } => match preset.as_str() {
                "dirichlet" => BoundaryParameter::dirichlet(hdot),
                "neumann" => BoundaryParameter::neumann(hdot),
                other => return Err(SpecfunError::Config(format!("unknown parameter preset '{other}'"))),
            },
            ParameterConfig::Explicit { c0, c1 } => {
                let c0 = parse_matrix(c0, hdot, hdot, "parameter.c0")?;
                let c1 = parse_matrix(c1, hdot, hdot, "parameter.c1")?;
                BoundaryParameter::constant(c0, c1)?
            }
        };
        let report = nevanlinna::validate_pair(&param, &lambda_samples, 1e-9);
        (
            report.valid,
            report.violations.iter().map(|(l, msg)| format!("lambda {l}: {msg}")).collect(),
        )
    } else {
        (false, vec!["geometry not constructible, parameter not checked".to_string()])
    };

    let report = ValidateReport {
        passed: validation.passed && companion_neutral && tau_definite && parameter_valid,
        system_ok: validation.passed,
        system_violations: validation.violations.iter().map(|v| v.to_string()).collect(),
        companion_neutral,
        tau_definite,
        parameter_valid,
        parameter_violations,
    };
    write_json(out_dir, "validate_report.json", &report)?;
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_sample_m(pipe: &Pipeline, out_dir: &Path) -> Result<i32> {
    let dim = pipe.geom.h0_dim();
    let mut header = String::from("lambda_re,lambda_im,status");
    for r in 0..dim {
        for c in 0..dim {
            header.push_str(&format!(",m_{r}_{c}_re,m_{r}_{c}_im"));
        }
    }
    header.push('\n');
    let rows: Vec<String> = parallel_map(&pipe.lambda_grid, |&lambda| {
        match nevanlinna::m_tau_formula(&pipe.sys, &pipe.geom, &pipe.triplet, &pipe.param, lambda, &pipe.spec) {
            Ok(sample) => {
                let mut row = format!("{},{},ok", fmt_float(lambda.re), fmt_float(lambda.im));
                for r in 0..dim {
                    for c in 0..dim {
                        row.push_str(&format!(
                            ",{},{}",
                            fmt_float(sample.value[(r, c)].re),
                            fmt_float(sample.value[(r, c)].im)
                        ));
                    }
                }
                row.push('\n');
                row
            }
            Err(e) => {
                let kind = match e {
                    SpecfunError::SingularTransform { .. } => "singular-transform",
                    SpecfunError::SingularBvp { .. } => "singular-bvp",
                    SpecfunError::LambdaTooReal { .. } => "lambda-too-real",
                    _ => "error",
                };
                let mut row = format!("{},{},{kind}", fmt_float(lambda.re), fmt_float(lambda.im));
                for _ in 0..2 * dim * dim {
                    row.push(',');
                }
                row.push('\n');
                row
            }
        }
    });
    let mut csv = header;
    for row in rows {
        csv.push_str(&row);
    }
    write_text(out_dir, "m_samples.csv", &csv)?;
    Ok(0)
}

fn invert_sigma(pipe: &Pipeline) -> Result<DistributionFunction> {
    let sampler = |lambda: C64| {
        nevanlinna::m_tau_formula(&pipe.sys, &pipe.geom, &pipe.triplet, &pipe.param, lambda, &pipe.spec)
            .map(|s| s.value)
    };
    spectral::stieltjes_invert(&sampler, &pipe.s_grid, &pipe.inversion)
}

#[derive(Debug, Serialize)]
struct JumpJson {
    location: f64,
    matrix: MatrixJson,
}

#[derive(Debug, Serialize)]
struct JumpsFile {
    grid: Vec<f64>,
    jumps: Vec<JumpJson>,
    cell_flags: Vec<Option<String>>,
}

fn sigma_csv(sigma: &DistributionFunction) -> String {
    let dim = sigma.dim();
    let mut out = String::from("s");
    for r in 0..dim {
        for c in 0..dim {
            out.push_str(&format!(",sigma_{r}_{c}_re,sigma_{r}_{c}_im"));
        }
    }
    out.push('\n');
    for (i, &s) in sigma.grid.iter().enumerate() {
        out.push_str(&fmt_float(s));
        for r in 0..dim {
            for c in 0..dim {
                out.push_str(&format!(
                    ",{},{}",
                    fmt_float(sigma.values[i][(r, c)].re),
                    fmt_float(sigma.values[i][(r, c)].im)
                ));
            }
        }
        out.push('\n');
    }
    out
}

fn cmd_invert(pipe: &Pipeline, out_dir: &Path) -> Result<i32> {
    let sigma = invert_sigma(pipe)?;
    write_text(out_dir, "sigma.csv", &sigma_csv(&sigma))?;
    let jumps = JumpsFile {
        grid: sigma.grid.clone(),
        jumps: sigma
            .jumps
            .iter()
            .map(|j| JumpJson { location: j.location, matrix: matrix_json(&j.matrix) })
            .collect(),
        cell_flags: sigma.cell_flags.clone(),
    };
    write_json(out_dir, "jumps.json", &jumps)?;
    Ok(0)
}

/// Resolves the configured test function and hands it to the
/// continuation; solution-frame functions borrow a propagator local to
/// this call.
fn with_function<R>(
    pipe: &Pipeline,
    k: impl FnOnce(&(dyn Fn(f64) -> CVec + Sync)) -> Result<R>,
) -> Result<R> {
    let n = pipe.sys.n();
    let (a, b) = pipe.sys.interval();
    match &pipe.function {
        FunctionConfig::Smooth => {
            let f = presets::smooth_test_function(n, a, b);
            k(&f)
        }
        FunctionConfig::Constant { value } => {
            if value.len() != n {
                return Err(SpecfunError::Config(format!("function.value must have {n} entries")));
            }
            let v = CVec::from_fn(n, |i, _| parse_c(&value[i]));
            let f = move |_t: f64| v.clone();
            k(&f)
        }
        FunctionConfig::SolutionFrame { s, coefficients } => {
            let h0 = pipe.geom.h0_dim();
            if coefficients.len() != h0 {
                return Err(SpecfunError::Config(format!("function.coefficients must have {h0} entries")));
            }
            let h = CVec::from_fn(h0, |i, _| parse_c(&coefficients[i]));
            let init = pipe.geom.u() * h;
            let prop = Propagator::new(&pipe.sys, C64::new(*s, 0.0), pipe.spec.clone());
            let f = move |t: f64| match prop.value_at(t) {
                Ok(y) => y * &init,
                Err(_) => CVec::from_element(n, C64::new(f64::NAN, 0.0)),
            };
            k(&f)
        }
    }
}

#[derive(Debug, Serialize)]
struct FourierReport {
    parseval_lhs: f64,
    parseval_rhs: f64,
    defect: f64,
}

fn cmd_fourier(pipe: &Pipeline, out_dir: &Path) -> Result<i32> {
    let sigma = invert_sigma(pipe)?;
    let (csv, report) = with_function(pipe, |f| {
        // Evaluate on the configured grid plus the detected jumps.
        let mut s_eval = pipe.s_grid.clone();
        s_eval.extend(sigma.jumps.iter().map(|j| j.location));
        s_eval.sort_by(|x, y| x.partial_cmp(y).unwrap());
        s_eval.dedup();
        let result = spectral::fourier_transform(&pipe.sys, &pipe.geom, f, &s_eval, Some(&sigma), &pipe.spec)?;
        let dim = pipe.geom.h0_dim();
        let mut csv = String::from("s");
        for i in 0..dim {
            csv.push_str(&format!(",fhat_{i}_re,fhat_{i}_im"));
        }
        csv.push('\n');
        for (i, &s) in result.s_eval.iter().enumerate() {
            csv.push_str(&fmt_float(s));
            for j in 0..dim {
                csv.push_str(&format!(
                    ",{},{}",
                    fmt_float(result.f_hat[i][j].re),
                    fmt_float(result.f_hat[i][j].im)
                ));
            }
            csv.push('\n');
        }
        let lhs = result.parseval_lhs.unwrap_or(f64::NAN);
        let rhs = result.parseval_rhs;
        let defect = if rhs.abs() < 1e-14 { 0.0 } else { (lhs - rhs).abs() / rhs };
        Ok((csv, FourierReport { parseval_lhs: lhs, parseval_rhs: rhs, defect }))
    })?;
    write_text(out_dir, "fhat.csv", &csv)?;
    write_json(out_dir, "fourier_report.json", &report)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct ResolventReport {
    lambda: ComplexJson,
    relative_difference: f64,
    ode_residual: f64,
    bc_residual: f64,
}

fn cmd_resolvent_check(pipe: &Pipeline, out_dir: &Path) -> Result<i32> {
    let lambda = pipe.resolvent_lambda;
    let check = with_function(pipe, |f| {
        spectral::resolvent_crosscheck(&pipe.sys, &pipe.geom, &pipe.triplet, &pipe.param, lambda, f, &pipe.spec)
    })?;
    let report = ResolventReport {
        lambda: [lambda.re, lambda.im],
        relative_difference: check.relative_difference,
        ode_residual: check.ode_residual,
        bc_residual: check.bc_residual,
    };
    write_json(out_dir, "resolvent_check.json", &report)?;
    Ok(0)
}

fn cmd_report(pipe: &Pipeline, out_dir: &Path) -> Result<i32> {
    let report = spectral::existence_report(&pipe.sys, &pipe.tau, &pipe.spec)?;
    write_json(out_dir, "report.json", &report)?;
    Ok(0)
}

fn write_text(out_dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::write(out_dir.join(name), content)
        .map_err(|e| SpecfunError::Config(format!("cannot write {name}: {e}")))
}

fn write_json<T: Serialize>(out_dir: &Path, name: &str, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| SpecfunError::Config(format!("cannot serialize {name}: {e}")))?;
    write_text(out_dir, name, &(text + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameter_is_the_dirichlet_preset() {
        let cfg: ParameterConfig = Default::default();
        assert!(matches!(cfg, ParameterConfig::Preset { ref preset } if preset == "dirichlet"));
    }

    #[test]
    fn minimal_config_parses_and_builds() {
        let text = r#"{
            "system": {
                "nu": 1, "nu_hat": 0, "interval": [0.0, 1.0],
                "b": {"kind": "constant", "value": [[[0,0],[0,0]],[[0,0],[0,0]]]},
                "delta": {"kind": "constant", "value": [[[1,0],[0,0]],[[0,0],[1,0]]]}
            },
            "tau": {"vectors": [[[1,0],[0,0]]]}
        }"#;
        let config: RunConfig = serde_json::from_str(text).unwrap();
        let pipeline = build_pipeline(&config).unwrap();
        assert_eq!(pipeline.geom.h0_dim(), 1);
        assert!(pipeline.param.is_constant());
    }

    #[test]
    fn shape_errors_are_schema_errors() {
        let text = r#"{
            "system": {
                "nu": 1, "nu_hat": 0, "interval": [0.0, 1.0],
                "b": {"kind": "constant", "value": [[[0,0]]]},
                "delta": {"kind": "constant", "value": [[[1,0],[0,0]],[[0,0],[1,0]]]}
            },
            "tau": {"vectors": [[[1,0],[0,0]]]}
        }"#;
        let config: RunConfig = serde_json::from_str(text).unwrap();
        assert!(matches!(build_pipeline(&config), Err(SpecfunError::Config(_))));
    }

    #[test]
    fn float_formatting_has_seventeen_significant_digits() {
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(-0.25), "-2.5000000000000000e-1");
    }
}
