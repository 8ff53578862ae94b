//! Grid sweeps of protocol efficiency over `(d_p, F, gamma)` with a
//! golden-section refinement of the best grid point.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::comb::{CombShape, CombSpec};
use crate::csv::{format_f64, CsvWriter, Field};
use crate::exec::{self, Execution};
use crate::propagation::{MediumSpec, Model, PulseSpec, DEFAULT_SIGMA};
use crate::protocol::{self, Simulation};
use crate::train;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// First-echo intensity of a single pass.
    FirstEcho,
    /// Recombined echo intensity of the two-pass protocol.
    TwoPass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Param {
    OpticalDepth,
    Finesse,
    /// Homogeneous rate in units of `nu0`.
    Gamma,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::OpticalDepth => "d_p",
            Param::Finesse => "F",
            Param::Gamma => "gamma_over_nu0",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d_p" | "d" => Ok(Param::OpticalDepth),
            "F" | "finesse" => Ok(Param::Finesse),
            "gamma" | "gamma_over_nu0" => Ok(Param::Gamma),
            _ => Err(Error::Invalid(format!("unknown sweep parameter `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub scale: Scale,
}

impl Axis {
    pub fn linear(param: Param, min: f64, max: f64, steps: usize) -> Self {
        Self {
            param,
            min,
            max,
            steps,
            scale: Scale::Linear,
        }
    }

    pub fn log(param: Param, min: f64, max: f64, steps: usize) -> Self {
        Self {
            scale: Scale::Log,
            ..Self::linear(param, min, max, steps)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::domain("steps", self.steps as f64, "steps >= 2"));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::Invalid(format!("axis {}: need min < max", self.param)));
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return Err(Error::domain("min", self.min, "min > 0 on a log axis"));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            return self.max;
        }
        let s = i as f64 / (self.steps - 1) as f64;
        match self.scale {
            Scale::Linear => self.min + s * (self.max - self.min),
            Scale::Log => self.min * (self.max / self.min).powf(s),
        }
    }
}

/// A point in parameter space (`nu0 = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub shape: CombShape,
    pub finesse: f64,
    pub d_p: f64,
    pub gamma: f64,
}

impl Point {
    pub fn square(finesse: f64, d_p: f64, gamma: f64) -> Self {
        Self {
            shape: CombShape::Square,
            finesse,
            d_p,
            gamma,
        }
    }

    fn with(mut self, param: Param, v: f64) -> Self {
        match param {
            Param::OpticalDepth => self.d_p = v,
            Param::Finesse => self.finesse = v,
            Param::Gamma => self.gamma = v,
        }
        self
    }

    fn get(&self, param: Param) -> f64 {
        match param {
            Param::OpticalDepth => self.d_p,
            Param::Finesse => self.finesse,
            Param::Gamma => self.gamma,
        }
    }

    fn comb(&self) -> CombSpec {
        CombSpec::with_finesse(self.shape, self.finesse).gamma(self.gamma)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Evaluator {
    ClosedForm,
    Simulated { model: Model, sigma: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRequest {
    pub objective: Objective,
    pub axes: Vec<Axis>,
    pub fixed: Point,
    pub evaluator: Evaluator,
    pub exec: Execution,
    /// Golden-section refinement of the grid argmax.
    pub refine: bool,
}

impl SweepRequest {
    pub fn new(objective: Objective, fixed: Point, axes: Vec<Axis>) -> Self {
        Self {
            objective,
            axes,
            fixed,
            evaluator: Evaluator::ClosedForm,
            exec: Execution::default(),
            refine: true,
        }
    }

    pub fn simulated(mut self, model: Model) -> Self {
        self.evaluator = Evaluator::Simulated {
            model,
            sigma: DEFAULT_SIGMA,
        };
        self
    }

    pub fn exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn refine(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Invalid("sweep needs at least one axis".into()));
        }
        for (i, a) in self.axes.iter().enumerate() {
            a.validate()?;
            if self.axes[..i].iter().any(|b| b.param == a.param) {
                return Err(Error::Invalid(format!("axis {} given twice", a.param)));
            }
        }
        Ok(())
    }

    fn row_count(&self) -> usize {
        self.axes.iter().map(|a| a.steps).product()
    }

    /// Axis indices of row `r`; the last axis varies fastest.
    fn indices(&self, mut r: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (slot, a) in idx.iter_mut().zip(&self.axes).rev() {
            *slot = r % a.steps;
            r /= a.steps;
        }
        idx
    }

    fn point(&self, idx: &[usize]) -> Point {
        self.axes
            .iter()
            .zip(idx)
            .fold(self.fixed, |p, (a, &i)| p.with(a.param, a.value(i)))
    }
}

/// Efficiency and prompt intensity at `p`.
pub fn evaluate(objective: Objective, evaluator: Evaluator, p: &Point) -> Result<(f64, f64)> {
    let comb = p.comb();
    let medium = MediumSpec::new(p.d_p);
    let result = match evaluator {
        Evaluator::ClosedForm => match objective {
            Objective::FirstEcho => protocol::single_pass_closed(&comb, &medium)?,
            Objective::TwoPass => protocol::two_pass_closed(&comb, &medium)?,
        },
        Evaluator::Simulated { model, sigma } => {
            let sim = Simulation::new(comb, medium, model)?;
            let input = PulseSpec::gaussian(sigma);
            match objective {
                Objective::FirstEcho => sim.single_pass(&input)?,
                Objective::TwoPass => sim.two_pass(&input)?,
            }
        }
    };
    Ok((result.efficiency, result.prompt_out.norm_sqr()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub values: Vec<f64>,
    /// Error message when the evaluator failed for this row.
    pub status: std::result::Result<(), String>,
    pub efficiency: f64,
    pub prompt_intensity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArgMax {
    pub row: usize,
    pub values: Vec<f64>,
    pub efficiency: f64,
    /// Golden-section refined location and value.
    pub refined: Option<(Vec<f64>, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub axes: Vec<Param>,
    pub rows: Vec<SweepRow>,
    pub argmax: Option<ArgMax>,
}

/// Evaluates every grid point (row-parallel, rows in axis order) and
/// locates the maximum.
pub fn sweep(request: &SweepRequest) -> Result<SweepResult> {
    request.validate()?;
    let n = request.row_count();
    let rows: Vec<SweepRow> = exec::map_indexed(request.exec, n, |r| {
        let idx = request.indices(r);
        let p = request.point(&idx);
        let values: Vec<f64> = request.axes.iter().map(|a| p.get(a.param)).collect();
        match evaluate(request.objective, request.evaluator, &p) {
            Ok((efficiency, prompt_intensity)) => SweepRow {
                values,
                status: Ok(()),
                efficiency,
                prompt_intensity,
            },
            Err(e) => SweepRow {
                values,
                status: Err(e.to_string()),
                efficiency: f64::NAN,
                prompt_intensity: f64::NAN,
            },
        }
    });
    let best = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.status.is_ok())
        .fold(None::<(usize, f64)>, |acc, (i, r)| match acc {
            Some((_, e)) if e >= r.efficiency => acc,
            _ => Some((i, r.efficiency)),
        });
    let argmax = match best {
        None => None,
        Some((row, efficiency)) => {
            let refined = if request.refine {
                Some(refine(request, &request.indices(row))?)
            } else {
                None
            };
            Some(ArgMax {
                row,
                values: rows[row].values.clone(),
                efficiency,
                refined,
            })
        }
    };
    Ok(SweepResult {
        axes: request.axes.iter().map(|a| a.param).collect(),
        rows,
        argmax,
    })
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Coordinate-wise golden-section search inside the grid cells adjacent to
/// the argmax, to `1e-4` relative.
fn refine(request: &SweepRequest, idx: &[usize]) -> Result<(Vec<f64>, f64)> {
    let mut p = request.point(idx);
    let f = |p: &Point| evaluate(request.objective, request.evaluator, p).map(|r| r.0);
    let mut best = f(&p)?;
    for (axis, &i) in request.axes.iter().zip(idx) {
        let mut a = axis.value(i.saturating_sub(1));
        let mut b = axis.value((i + 1).min(axis.steps - 1));
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = f(&p.with(axis.param, c))?;
        let mut fd = f(&p.with(axis.param, d))?;
        let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        while (b - a) > 1e-4 * scale * 0.1 {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = f(&p.with(axis.param, c))?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = f(&p.with(axis.param, d))?;
            }
        }
        let x = 0.5 * (a + b);
        let fx = f(&p.with(axis.param, x))?;
        if fx > best {
            best = fx;
            p = p.with(axis.param, x);
        }
    }
    Ok((request.axes.iter().map(|a| p.get(a.param)).collect(), best))
}

impl SweepResult {
    /// Header of axis names, then `efficiency,prompt_intensity,status`;
    /// trailing `# argmax: ...` comment.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = CsvWriter::new(out);
        let mut header: Vec<&str> = self.axes.iter().map(|p| p.name()).collect();
        header.extend(["efficiency", "prompt_intensity", "status"]);
        w.header(&header)?;
        for r in &self.rows {
            let mut fields: Vec<Field> = r.values.iter().map(|v| Field::from(*v)).collect();
            fields.push(r.efficiency.into());
            fields.push(r.prompt_intensity.into());
            fields.push(match &r.status {
                Ok(()) => "ok".into(),
                Err(e) => e.clone().into(),
            });
            w.row(&fields)?;
        }
        if let Some(text) = self.argmax_summary() {
            w.comment(&format!("argmax: {text}"))?;
        }
        Ok(())
    }

    /// `d_p=10, efficiency=0.459` style summary of the (refined) maximum.
    pub fn argmax_summary(&self) -> Option<String> {
        let m = self.argmax.as_ref()?;
        let (values, eff) = match &m.refined {
            Some((v, e)) => (v, *e),
            None => (&m.values, m.efficiency),
        };
        let mut parts: Vec<String> = self
            .axes
            .iter()
            .zip(values)
            .map(|(p, v)| format!("{}={}", p.name(), format_f64(*v)))
            .collect();
        parts.push(format!("efficiency={}", format_f64(eff)));
        if m.refined.is_some() {
            let grid: Vec<String> = self
                .axes
                .iter()
                .zip(&m.values)
                .map(|(p, v)| format!("{}={}", p.name(), format_f64(*v)))
                .collect();
            parts.push(format!("grid {} efficiency={}", grid.join(" "), format_f64(m.efficiency)));
        }
        Some(parts.join(", "))
    }
}

/// One point of the square comb's single-pass optimum curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalPoint {
    pub inv_finesse: f64,
    /// Optimal depth `d_p = 2F`.
    pub d_opt: f64,
    pub i_gl: f64,
}

/// `I_gl(F)` at `d_p = 2F` for each `1/F` in `(0, 1/2]`.
pub fn optimal_curve(inv_finesse_grid: &[f64]) -> Result<Vec<OptimalPoint>> {
    inv_finesse_grid
        .iter()
        .map(|&x| {
            if !(x > 0.0 && x <= 0.5) {
                return Err(Error::domain("1/F", x, "0 < 1/F <= 1/2"));
            }
            let f = 1.0 / x;
            Ok(OptimalPoint {
                inv_finesse: x,
                d_opt: 2.0 * f,
                i_gl: train::global_maximum(f)?,
            })
        })
        .collect()
}

/// Columns `inv_finesse,d_opt,I_gl`.
pub fn write_optimal_curve<W: Write>(out: W, points: &[OptimalPoint]) -> io::Result<()> {
    let mut w = CsvWriter::new(out);
    w.header(&["inv_finesse", "d_opt", "I_gl"])?;
    for p in points {
        w.numbers(&[p.inv_finesse, p.d_opt, p.i_gl])?;
    }
    Ok(())
}
