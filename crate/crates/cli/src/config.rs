//! `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored, unknown or repeated keys are
//! errors, and every error carries its 1-based line number. [`RunConfig::canonical`]
//! prints every key with its value so a run can be reproduced from the echo.

use std::fmt;
use std::str::FromStr;

use afc_core::propagation::{FrequencyGrid, DEFAULT_SAMPLES, DEFAULT_SIGMA, DEFAULT_SPAN_SIGMAS};
use afc_core::susceptibility::DEFAULT_HARMONICS;
use afc_core::sweep::{Objective, Param, Scale};
use afc_core::{CombShape, CombSpec};

/// Homogeneous rate used by `protocol` when `gamma` is not given.
pub const PROTOCOL_GAMMA: f64 = 0.005;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelChoice {
    /// Broadened when `gamma > 0`, ideal otherwise.
    Auto,
    Ideal,
    Broadened,
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::Auto => "auto",
            ModelChoice::Ideal => "ideal",
            ModelChoice::Broadened => "broadened",
        }
    }
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(ModelChoice::Auto),
            "ideal" => Ok(ModelChoice::Ideal),
            "broadened" => Ok(ModelChoice::Broadened),
            _ => Err(format!("unknown model `{s}` (expected auto, ideal or broadened)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvaluatorChoice {
    ClosedForm,
    Simulated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub shape: CombShape,
    pub finesse: f64,
    pub d_p: f64,
    /// `None` when not given: 0 everywhere except `protocol`, which uses
    /// [`PROTOCOL_GAMMA`].
    pub gamma: Option<f64>,
    pub sigma: f64,
    pub pairs: usize,
    pub samples: usize,
    pub span_sigmas: f64,
    pub harmonics: usize,
    pub model: ModelChoice,
    /// Use the finite `2N + 2`-peak comb instead of the infinite one.
    pub finite_comb: bool,
    pub k_max: usize,
    /// Relative agreement required between closed form and simulation.
    pub tolerance: f64,
    pub two_pass: bool,
    pub spectrum_span: f64,
    pub spectrum_points: usize,
    pub objective: Objective,
    pub evaluator: EvaluatorChoice,
    pub sweep_param: Param,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_steps: usize,
    pub sweep_scale: Scale,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            shape: CombShape::Square,
            finesse: 5.0,
            d_p: 10.0,
            gamma: None,
            sigma: DEFAULT_SIGMA,
            pairs: afc_core::comb::DEFAULT_PAIR_COUNT,
            samples: DEFAULT_SAMPLES,
            span_sigmas: DEFAULT_SPAN_SIGMAS,
            harmonics: DEFAULT_HARMONICS,
            model: ModelChoice::Auto,
            finite_comb: false,
            k_max: 3,
            tolerance: 0.01,
            two_pass: false,
            spectrum_span: 3.0,
            spectrum_points: 1201,
            objective: Objective::FirstEcho,
            evaluator: EvaluatorChoice::ClosedForm,
            sweep_param: Param::OpticalDepth,
            sweep_min: 0.0,
            sweep_max: 30.0,
            sweep_steps: 301,
            sweep_scale: Scale::Linear,
        }
    }
}

const KEYS: [&str; 23] = [
    "shape",
    "finesse",
    "d_p",
    "gamma",
    "sigma",
    "pairs",
    "samples",
    "span_sigmas",
    "harmonics",
    "model",
    "finite_comb",
    "k_max",
    "tolerance",
    "two_pass",
    "spectrum_span",
    "spectrum_points",
    "objective",
    "evaluator",
    "sweep_param",
    "sweep_min",
    "sweep_max",
    "sweep_steps",
    "sweep_scale",
];

fn number(value: &str) -> Result<f64, String> {
    match value.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("`{value}` is not a finite number")),
    }
}

fn count(value: &str) -> Result<usize, String> {
    value
        .parse::<usize>()
        .map_err(|_| format!("`{value}` is not a non-negative integer"))
}

fn flag(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{value}` is not a boolean")),
    }
}

fn require(ok: bool, key: &str, value: impl fmt::Display, invariant: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("{key} = {value} violates {invariant}"))
    }
}

impl RunConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "shape" => self.shape = value.parse().map_err(|e: afc_core::Error| e.to_string())?,
            "finesse" => {
                let f = number(value)?;
                require(f >= 1.0, key, f, "F >= 1")?;
                self.finesse = f;
            }
            "d_p" => {
                let d = number(value)?;
                require(d >= 0.0, key, d, "d_p >= 0")?;
                self.d_p = d;
            }
            "gamma" => {
                let g = number(value)?;
                require(g >= 0.0, key, g, "gamma >= 0")?;
                self.gamma = Some(g);
            }
            "sigma" => {
                let s = number(value)?;
                require(s > 0.0, key, s, "sigma > 0")?;
                self.sigma = s;
            }
            "pairs" => self.pairs = count(value)?,
            "samples" => {
                let n = count(value)?;
                require(n >= 16 && n.is_power_of_two(), key, n, "samples is a power of two >= 16")?;
                self.samples = n;
            }
            "span_sigmas" => {
                let s = number(value)?;
                require(s >= 2.0, key, s, "span_sigmas >= 2")?;
                self.span_sigmas = s;
            }
            "harmonics" => {
                let k = count(value)?;
                require(k >= 1, key, k, "K >= 1")?;
                self.harmonics = k;
            }
            "model" => self.model = value.parse()?,
            "finite_comb" => self.finite_comb = flag(value)?,
            "k_max" => {
                let k = count(value)?;
                require(k >= 1, key, k, "k_max >= 1")?;
                self.k_max = k;
            }
            "tolerance" => {
                let t = number(value)?;
                require(t > 0.0, key, t, "tolerance > 0")?;
                self.tolerance = t;
            }
            "two_pass" => self.two_pass = flag(value)?,
            "spectrum_span" => {
                let s = number(value)?;
                require(s > 0.0, key, s, "spectrum_span > 0")?;
                self.spectrum_span = s;
            }
            "spectrum_points" => {
                let n = count(value)?;
                require(n >= 2, key, n, "spectrum_points >= 2")?;
                self.spectrum_points = n;
            }
            "objective" => {
                self.objective = match value {
                    "first_echo" => Objective::FirstEcho,
                    "two_pass" => Objective::TwoPass,
                    _ => return Err(format!("unknown objective `{value}` (expected first_echo or two_pass)")),
                }
            }
            "evaluator" => {
                self.evaluator = match value {
                    "closed_form" => EvaluatorChoice::ClosedForm,
                    "simulated" => EvaluatorChoice::Simulated,
                    _ => return Err(format!("unknown evaluator `{value}` (expected closed_form or simulated)")),
                }
            }
            "sweep_param" => self.sweep_param = value.parse().map_err(|e: afc_core::Error| e.to_string())?,
            "sweep_min" => self.sweep_min = number(value)?,
            "sweep_max" => self.sweep_max = number(value)?,
            "sweep_steps" => {
                let n = count(value)?;
                require(n >= 2, key, n, "steps >= 2")?;
                self.sweep_steps = n;
            }
            "sweep_scale" => {
                self.sweep_scale = match value {
                    "linear" => Scale::Linear,
                    "log" => Scale::Log,
                    _ => return Err(format!("unknown scale `{value}` (expected linear or log)")),
                }
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Checks that need more than one key.
    fn validate(&self) -> Result<(), String> {
        require(
            self.sweep_min < self.sweep_max,
            "sweep_min",
            self.sweep_min,
            "sweep_min < sweep_max",
        )?;
        if self.sweep_scale == Scale::Log {
            require(self.sweep_min > 0.0, "sweep_min", self.sweep_min, "sweep_min > 0 on a log axis")?;
        }
        Ok(())
    }

    pub fn gamma_or(&self, default: f64) -> f64 {
        self.gamma.unwrap_or(default)
    }

    pub fn comb(&self, gamma: f64) -> CombSpec {
        CombSpec::with_finesse(self.shape, self.finesse)
            .pairs(self.pairs)
            .gamma(gamma)
    }

    pub fn grid(&self) -> afc_core::Result<FrequencyGrid> {
        FrequencyGrid::new(self.span_sigmas * self.sigma, self.samples)
    }

    /// Every key in a fixed order, one per line. Parsing the result gives
    /// back the same configuration.
    pub fn canonical(&self) -> String {
        let f = afc_core::csv::format_f64;
        let b = |x: bool| if x { "true" } else { "false" };
        let mut lines = vec![
            format!("shape = {}", self.shape.name()),
            format!("finesse = {}", f(self.finesse)),
            format!("d_p = {}", f(self.d_p)),
            match self.gamma {
                Some(g) => format!("gamma = {}", f(g)),
                None => format!("# gamma unset: 0, or {} for protocol", f(PROTOCOL_GAMMA)),
            },
            format!("sigma = {}", f(self.sigma)),
            format!("pairs = {}", self.pairs),
            format!("samples = {}", self.samples),
            format!("span_sigmas = {}", f(self.span_sigmas)),
            format!("harmonics = {}", self.harmonics),
            format!("model = {}", self.model.name()),
            format!("finite_comb = {}", b(self.finite_comb)),
            format!("k_max = {}", self.k_max),
            format!("tolerance = {}", f(self.tolerance)),
            format!("two_pass = {}", b(self.two_pass)),
            format!("spectrum_span = {}", f(self.spectrum_span)),
            format!("spectrum_points = {}", self.spectrum_points),
        ];
        lines.push(format!(
            "objective = {}",
            match self.objective {
                Objective::FirstEcho => "first_echo",
                Objective::TwoPass => "two_pass",
            }
        ));
        lines.push(format!(
            "evaluator = {}",
            match self.evaluator {
                EvaluatorChoice::ClosedForm => "closed_form",
                EvaluatorChoice::Simulated => "simulated",
            }
        ));
        lines.push(format!("sweep_param = {}", self.sweep_param));
        lines.push(format!("sweep_min = {}", f(self.sweep_min)));
        lines.push(format!("sweep_max = {}", f(self.sweep_max)));
        lines.push(format!("sweep_steps = {}", self.sweep_steps));
        lines.push(format!(
            "sweep_scale = {}",
            match self.sweep_scale {
                Scale::Linear => "linear",
                Scale::Log => "log",
            }
        ));
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

/// Parses configuration text; absent keys keep their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<(&str, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::at(n, format!("expected `key = value`, found `{line}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::at(n, format!("expected `key = value`, found `{line}`")));
        }
        let Some(known) = KEYS.iter().find(|k| **k == key) else {
            return Err(ConfigError::at(n, format!("unknown key `{key}`")));
        };
        if let Some((_, first)) = seen.iter().find(|(k, _)| k == known) {
            return Err(ConfigError::at(n, format!("`{key}` already set on line {first}")));
        }
        seen.push((known, n));
        cfg.set(key, value).map_err(|m| ConfigError::at(n, m))?;
    }
    cfg.validate().map_err(|message| ConfigError { line: None, message })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.shape, CombShape::Square);
        assert_eq!((cfg.finesse, cfg.d_p, cfg.sigma), (5.0, 10.0, 5.0));
        assert_eq!((cfg.pairs, cfg.samples, cfg.span_sigmas), (9, 1 << 14, 4.0));
        assert_eq!(cfg.gamma_or(0.0), 0.0);
    }

    #[test]
    fn basic_keys() {
        let cfg = parse_config("shape = square\nfinesse = 5\nd_p = 10").unwrap();
        assert_eq!(cfg.gamma, None);
        let cfg = parse_config("# comment\n\ngamma = 0.01  # trailing\nmodel=broadened\n").unwrap();
        assert_eq!(cfg.gamma, Some(0.01));
        assert_eq!(cfg.model, ModelChoice::Broadened);
    }

    #[test]
    fn errors_carry_lines_and_invariants() {
        let e = parse_config("finesse = 0.5").unwrap_err();
        assert_eq!(e.line, Some(1));
        assert!(e.message.contains("F >= 1"), "{e}");
        let e = parse_config("d_p = 1\n\nbogus = 2").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().contains("unknown key `bogus`"));
        assert_eq!(parse_config("d_p = 1\nd_p = 2").unwrap_err().line, Some(2));
        assert_eq!(parse_config("samples = 1000").unwrap_err().line, Some(1));
        assert_eq!(parse_config("just words").unwrap_err().line, Some(1));
        assert!(parse_config("d_p = nan").is_err());
        assert!(parse_config("sweep_min = 5\nsweep_max = 1").unwrap_err().message.contains("sweep_min < sweep_max"));
    }

    #[test]
    fn canonical_echo_is_idempotent() {
        for text in ["", "gamma = 0.005\nshape = lorentzian\nfinesse = 10", "sweep_scale = log\nsweep_min = 0.1"] {
            let cfg = parse_config(text).unwrap();
            let echo = cfg.canonical();
            let again = parse_config(&echo).unwrap();
            assert_eq!(again, cfg);
            assert_eq!(again.canonical(), echo);
        }
    }
}
