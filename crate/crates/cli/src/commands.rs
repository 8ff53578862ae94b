//! Subcommand implementations. Each writes its CSV artifacts into the output
//! directory and returns a one-line summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use afc_core::propagation::{extract_train, gaussian_spectrum, propagate, Extraction};
use afc_core::protocol::{
    single_pass_closed, two_pass_closed, write_protocol_report, ProtocolRow, Simulation,
};
use afc_core::susceptibility::{symmetric_grid, ComplexResponse, Response, DEFAULT_HARMONICS};
use afc_core::sweep::{sweep, Axis, Evaluator, Objective, Point, SweepRequest};
use afc_core::train::{coefficients_numeric, harmonic_train, series_coefficients_square};
use afc_core::{
    CombShape, Error, Execution, FrequencyGrid, MediumResponse, MediumSpec, Model,
    NormalizedUnits, PulseSpec, TrainCoefficients,
};

use crate::config::{EvaluatorChoice, ModelChoice, RunConfig, PROTOCOL_GAMMA};
use crate::reproduce;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for numerical failures, 1 for everything the user can fix.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Quadrature { .. }) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Transfer,
    Propagate,
    Train,
    Protocol,
    Sweep,
    Reproduce(String),
}

#[derive(Clone, Debug)]
pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub physical: Option<NormalizedUnits>,
    pub exec: Execution,
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
    /// Tolerance checks that did not hold; any entry means exit code 2.
    pub failures: Vec<String>,
}

pub(crate) fn write_artifact<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf, CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let io = |source| CliError::Io {
        path: path.clone(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut w = BufWriter::new(File::create(&path).map_err(io)?);
    body(&mut w).and_then(|_| w.flush()).map_err(io)?;
    Ok(path)
}

/// Model for the configured comb. A `grid` selects the window-matched series
/// for the default ideal square comb, which is what a sampled grid can carry.
pub fn resolve_model(cfg: &RunConfig, gamma: f64, grid: Option<FrequencyGrid>) -> Model {
    let broadened = match cfg.model {
        ModelChoice::Auto => gamma > 0.0,
        ModelChoice::Ideal => false,
        ModelChoice::Broadened => true,
    };
    match (broadened, cfg.finite_comb) {
        (true, true) => Model::Broadened,
        (true, false) => Model::BroadenedPeriodic,
        (false, true) => Model::IdealExact,
        (false, false) if cfg.shape != CombShape::Square => Model::IdealPeriodic,
        (false, false) => match grid {
            Some(g) if cfg.harmonics == DEFAULT_HARMONICS => Model::windowed_series(g, 1.0),
            _ => Model::IdealSeries {
                harmonics: cfg.harmonics,
            },
        },
    }
}

fn response_at(r: &MediumResponse, nu: f64) -> afc_core::Result<Response> {
    match r.response(nu) {
        // on a sharp edge report the mean of the one-sided limits
        Err(Error::SingularEdge { .. }) => {
            let h = 1e-9 * r.comb.nu0;
            let (a, b) = (r.response(nu - h)?, r.response(nu + h)?);
            Ok(Response::new(0.5 * (a.absorption + b.absorption), 0.5 * (a.dispersion + b.dispersion)))
        }
        other => other,
    }
}

pub fn run(command: &Command, ctx: &Context) -> Result<Outcome, CliError> {
    match command {
        Command::Spectrum => spectrum(ctx),
        Command::Transfer => transfer(ctx),
        Command::Propagate => propagate_pulse(ctx),
        Command::Train => train(ctx),
        Command::Protocol => protocol(ctx),
        Command::Sweep => run_sweep(ctx),
        Command::Reproduce(target) => reproduce::run(target, ctx),
    }
}

fn spectrum(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let gamma = cfg.gamma_or(0.0);
    let model = resolve_model(cfg, gamma, None);
    let r = MediumResponse::new(cfg.comb(gamma), MediumSpec::new(cfg.d_p), model)?;
    let nu = symmetric_grid(cfg.spectrum_span, cfg.spectrum_points);
    let data = ComplexResponse::from_fn(nu, ctx.exec, |x| response_at(&r, x))?;
    let path = write_artifact(&ctx.out_dir, "spectrum.csv", |w| data.write_csv(w, ctx.physical))?;
    let peak = data.absorption.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome {
        summary: format!("model={} points={} max_absorption={peak:.6}", model.name(), data.len()),
        artifacts: vec![path],
        failures: vec![],
    })
}

fn transfer(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let gamma = cfg.gamma_or(0.0);
    let grid = cfg.grid()?;
    let model = resolve_model(cfg, gamma, Some(grid));
    let h = MediumResponse::new(cfg.comb(gamma), MediumSpec::new(cfg.d_p), model)?.sample(grid, ctx.exec)?;
    let path = write_artifact(&ctx.out_dir, "transfer.csv", |w| h.write_csv(w, ctx.physical))?;
    Ok(Outcome {
        summary: format!("model={} samples={} max_gain={:.6}", model.name(), grid.samples, h.max_gain()),
        artifacts: vec![path],
        failures: vec![],
    })
}

fn propagate_pulse(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let gamma = cfg.gamma_or(0.0);
    let grid = cfg.grid()?;
    let model = resolve_model(cfg, gamma, Some(grid));
    let comb = cfg.comb(gamma);
    let h = MediumResponse::new(comb, MediumSpec::new(cfg.d_p), model)?.sample(grid, ctx.exec)?;
    let input = gaussian_spectrum(&PulseSpec::gaussian(cfg.sigma), grid)?;
    let out = propagate(&input, &h)?;
    let t = comb.delay_time();
    let train = extract_train(&out, Extraction::new(t, cfg.k_max))?;
    for w in &train.warnings {
        eprintln!("warning: {w}");
    }
    let end = (cfg.k_max as f64 + 0.5) * t;
    let trace = write_artifact(&ctx.out_dir, "trace.csv", |w| {
        out.write_trace_csv(w, t, -0.5 * t, end, ctx.physical)
    })?;
    let pulses = write_artifact(&ctx.out_dir, "train.csv", |w| train.write_csv(w))?;
    Ok(Outcome {
        summary: format!(
            "I1={:.6} dominant={}",
            train.intensity(1).unwrap_or(0.0),
            train.dominant_echo().unwrap_or(0)
        ),
        artifacts: vec![trace, pulses],
        failures: vec![],
    })
}

/// Train coefficients from the closed forms where they exist, by quadrature
/// otherwise.
pub fn train_coefficients(cfg: &RunConfig, gamma: f64) -> Result<TrainCoefficients, CliError> {
    let model = resolve_model(cfg, gamma, None);
    let comb = cfg.comb(gamma);
    let t = match (cfg.shape, model) {
        (CombShape::Square, Model::IdealSeries { .. }) => series_coefficients_square(cfg.d_p, cfg.finesse, cfg.k_max)?,
        (CombShape::Harmonic, m) if !m.is_broadened() => harmonic_train(cfg.d_p, cfg.k_max)?,
        (_, m) => coefficients_numeric(&MediumResponse::new(comb, MediumSpec::new(cfg.d_p), m)?, cfg.k_max)?,
    };
    Ok(t)
}

fn train(ctx: &Context) -> Result<Outcome, CliError> {
    let t = train_coefficients(&ctx.config, ctx.config.gamma_or(0.0))?;
    let path = write_artifact(&ctx.out_dir, "train.csv", |w| t.write_csv(w))?;
    Ok(Outcome {
        summary: format!("I1={:.6}", t.intensity(1)),
        artifacts: vec![path],
        failures: vec![],
    })
}

fn protocol(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let gamma = cfg.gamma_or(PROTOCOL_GAMMA);
    let grid = cfg.grid()?;
    let comb = cfg.comb(gamma);
    let medium = MediumSpec::new(cfg.d_p);
    let model = resolve_model(cfg, gamma, Some(grid));
    let sim = Simulation::new(comb, medium, model)?.grid(grid).k_max(cfg.k_max);
    let input = PulseSpec::gaussian(cfg.sigma);
    let (name, closed, simulated) = if cfg.two_pass {
        ("two_pass", two_pass_closed(&comb, &medium)?, sim.two_pass(&input)?)
    } else {
        ("single_pass", single_pass_closed(&comb, &medium)?, sim.single_pass(&input)?)
    };
    let row = ProtocolRow {
        protocol: name.into(),
        finesse: comb.finesse(),
        d_p: cfg.d_p,
        gamma_over_nu0: gamma / comb.nu0,
        closed_form: closed.efficiency,
        simulated: Some(simulated.efficiency),
    };
    let path = write_artifact(&ctx.out_dir, "protocol.csv", |w| write_protocol_report(w, &[row]))?;
    if let Some(l) = simulated.ledger {
        eprintln!(
            "energy ledger: first_pass={:.4} first_prompt={:.4} first_echoes={:.4} second_prompt={:.4} second_echoes={:.4} combined_echoes={:.4}",
            l.first_pass, l.first_prompt, l.first_echoes, l.second_prompt, l.second_echoes, l.combined_echoes
        );
    }
    let mut failures = vec![];
    let rel = simulated.efficiency / closed.efficiency - 1.0;
    if !(rel.abs() <= cfg.tolerance) {
        failures.push(format!(
            "simulated efficiency {:.6} differs from the closed form {:.6} by {:.2}% (tolerance {:.2}%)",
            simulated.efficiency,
            closed.efficiency,
            100.0 * rel,
            100.0 * cfg.tolerance
        ));
    }
    Ok(Outcome {
        summary: format!("efficiency={:.4} closed_form={:.4}", simulated.efficiency, closed.efficiency),
        artifacts: vec![path],
        failures,
    })
}

pub fn sweep_request(cfg: &RunConfig, gamma: f64) -> SweepRequest {
    let fixed = Point {
        shape: cfg.shape,
        finesse: cfg.finesse,
        d_p: cfg.d_p,
        gamma,
    };
    let axis = Axis {
        param: cfg.sweep_param,
        min: cfg.sweep_min,
        max: cfg.sweep_max,
        steps: cfg.sweep_steps,
        scale: cfg.sweep_scale,
    };
    let mut req = SweepRequest::new(cfg.objective, fixed, vec![axis]);
    if cfg.evaluator == EvaluatorChoice::Simulated {
        req.evaluator = Evaluator::Simulated {
            model: resolve_model(cfg, gamma, None),
            sigma: cfg.sigma,
        };
    }
    req
}

fn run_sweep(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let req = sweep_request(cfg, cfg.gamma_or(0.0)).exec(ctx.exec);
    let result = sweep(&req)?;
    let path = write_artifact(&ctx.out_dir, "sweep.csv", |w| result.write_csv(w))?;
    let failed = result.rows.iter().filter(|r| r.status.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows failed; see the status column", result.rows.len());
    }
    let objective = match cfg.objective {
        Objective::FirstEcho => "first_echo",
        Objective::TwoPass => "two_pass",
    };
    Ok(Outcome {
        summary: format!(
            "objective={objective} {}",
            result.argmax_summary().unwrap_or_else(|| "argmax: none".into())
        ),
        artifacts: vec![path],
        failures: vec![],
    })
}
