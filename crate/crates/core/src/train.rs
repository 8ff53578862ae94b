//! Coefficients of the output pulse train `E_out(t) = C0 sum_k a_k E_in(t - kT)`.
//!
//! `prompt_factor` is `C0 = exp(-A0 d_p / 2)` and `a_k` multiplies the copy
//! delayed by `kT`, with `a_0 = 1`.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::comb::CombShape;
use crate::csv::{CsvWriter, Field};
use crate::propagation::{MediumResponse, Model};
use crate::quad;
use crate::susceptibility::{self, Response};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Quadrature,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainCoefficients {
    pub prompt_factor: f64,
    pub a: Vec<Complex64>,
    pub provenance: Provenance,
}

impl TrainCoefficients {
    pub fn k_max(&self) -> usize {
        self.a.len() - 1
    }

    /// Amplitude of the pulse delayed by `kT`, in units of `E0`.
    pub fn amplitude(&self, k: usize) -> Complex64 {
        self.a[k] * self.prompt_factor
    }

    pub fn intensity(&self, k: usize) -> f64 {
        self.amplitude(k).norm_sqr()
    }

    pub fn intensities(&self) -> Vec<f64> {
        (0..self.a.len()).map(|k| self.intensity(k)).collect()
    }

    /// Multiplies `a_k` by `exp(-k gamma T)`.
    pub fn with_decay(mut self, gamma_t: f64) -> Self {
        for (k, a) in self.a.iter_mut().enumerate() {
            *a *= (-(k as f64) * gamma_t).exp();
        }
        self
    }

    /// Columns `k,coefficient`, where the coefficient is `a_k C0`; complex
    /// trains get an extra `coefficient_im` column.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let complex = self.a.iter().any(|a| a.im != 0.0);
        let mut w = CsvWriter::new(out);
        if complex {
            w.header(&["k", "coefficient", "coefficient_im"])?;
        } else {
            w.header(&["k", "coefficient"])?;
        }
        for k in 0..self.a.len() {
            let c = self.amplitude(k);
            let mut row = vec![Field::from(k), c.re.into()];
            if complex {
                row.push(c.im.into());
            }
            w.row(&row)?;
        }
        Ok(())
    }
}

fn check_depth(d_p: f64) -> Result<()> {
    if d_p >= 0.0 && d_p.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("d_p", d_p, "d_p >= 0"))
    }
}

fn check_finesse(finesse: f64) -> Result<()> {
    if finesse >= 1.0 && finesse.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("finesse", finesse, "F >= 1"))
    }
}

/// `(A0, A1)` with `C0 = exp(-A0 d_p/2)` and `C1 = C0 A1 d_p/2`.
///
/// `A1` includes the homogeneous factor `exp(-gamma T)`; the Lorentzian comb
/// additionally carries its own `exp(-pi/F)` dephasing. The harmonic comb
/// ignores `finesse` (it is always 2).
pub fn shape_coefficients(shape: CombShape, finesse: f64, gamma_t: f64) -> Result<(f64, f64)> {
    if !(gamma_t >= 0.0 && gamma_t.is_finite()) {
        return Err(Error::domain("gamma_t", gamma_t, "gamma T >= 0"));
    }
    let decay = (-gamma_t).exp();
    Ok(match shape {
        CombShape::Harmonic => (0.5, 0.5 * decay),
        CombShape::Square => {
            check_finesse(finesse)?;
            (1.0 / finesse, 2.0 / PI * (PI / finesse).sin() * decay)
        }
        CombShape::Lorentzian => {
            check_finesse(finesse)?;
            (PI / (2.0 * finesse), PI / finesse * (-PI / finesse).exp() * decay)
        }
    })
}

/// `C0`: amplitude factor of the prompt pulse.
pub fn prompt_coefficient(shape: CombShape, d_p: f64, finesse: f64) -> Result<f64> {
    check_depth(d_p)?;
    let (a0, _) = shape_coefficients(shape, finesse, 0.0)?;
    Ok((-a0 * d_p / 2.0).exp())
}

/// `C1`: amplitude factor of the first delayed pulse.
pub fn first_echo_coefficient(shape: CombShape, d_p: f64, finesse: f64, gamma_t: f64) -> Result<f64> {
    check_depth(d_p)?;
    let (a0, a1) = shape_coefficients(shape, finesse, gamma_t)?;
    Ok((-a0 * d_p / 2.0).exp() * a1 * d_p / 2.0)
}

/// `I1 = C1^2`: first-echo efficiency of a single pass.
pub fn first_echo_intensity(shape: CombShape, d_p: f64, finesse: f64, gamma_t: f64) -> Result<f64> {
    Ok(first_echo_coefficient(shape, d_p, finesse, gamma_t)?.powi(2))
}

/// `I_gl = (2F/pi)^2 sin^2(pi/F) e^-2`, the square comb's first-echo
/// intensity at the optimal depth `d_p = 2F`.
pub fn global_maximum(finesse: f64) -> Result<f64> {
    check_finesse(finesse)?;
    Ok((2.0 * finesse / PI * (PI / finesse).sin()).powi(2) * (-2.0f64).exp())
}

/// Coefficients of `exp(sum_{k>=1} b_k z^k)` as a power series in `z`, from
/// `n a_n = sum_{k=1..n} k b_k a_{n-k}`. `b[0]` is `b_1`.
pub fn exp_series(b: &[Complex64], k_max: usize) -> Vec<Complex64> {
    let mut a = vec![Complex64::new(0.0, 0.0); k_max + 1];
    a[0] = Complex64::new(1.0, 0.0);
    for n in 1..=k_max {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..=n.min(b.len()) {
            acc += b[k - 1] * (k as f64) * a[n - k];
        }
        a[n] = acc / n as f64;
    }
    a
}

/// Exponent harmonics of the square comb,
/// `b_k = -(d_p/(k pi)) (-1)^k sin(k pi/F)`, `k = 1..=count`.
pub fn square_exponent_harmonics(d_p: f64, finesse: f64, count: usize) -> Vec<Complex64> {
    (1..=count)
        .map(|k| {
            let kf = k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(-d_p / (kf * PI) * sign * (kf * PI / finesse).sin(), 0.0)
        })
        .collect()
}

/// Square-comb `a_k` for the ideal (unbroadened, infinite) comb. Exact for
/// every `k`: `a_k` only involves `b_1..b_k`.
pub fn series_coefficients_square(d_p: f64, finesse: f64, k_max: usize) -> Result<TrainCoefficients> {
    check_depth(d_p)?;
    check_finesse(finesse)?;
    if k_max < 1 {
        return Err(Error::domain("k_max", k_max as f64, "k_max >= 1"));
    }
    let b = square_exponent_harmonics(d_p, finesse, k_max);
    let mut a = exp_series(&b, k_max);
    for c in &mut a {
        c.im = 0.0;
    }
    Ok(TrainCoefficients {
        prompt_factor: (-d_p / (2.0 * finesse)).exp(),
        a,
        provenance: Provenance::ClosedForm,
    })
}

/// Square-comb echo intensities `I_k = a_k^2 exp(-d_p/F)`, `k = 1..=k_max`,
/// for each depth.
pub fn intensity_table(finesse: f64, depths: &[f64], k_max: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    depths
        .iter()
        .map(|&d| {
            let t = series_coefficients_square(d, finesse, k_max)?;
            Ok((d, (1..=k_max).map(|k| t.intensity(k)).collect()))
        })
        .collect()
}

/// Columns `d_p,I1,...,I<k_max>`.
pub fn write_intensity_table<W: Write>(out: W, rows: &[(f64, Vec<f64>)]) -> io::Result<()> {
    let k_max = rows.first().map_or(0, |r| r.1.len());
    let names: Vec<String> = std::iter::once("d_p".to_string())
        .chain((1..=k_max).map(|k| format!("I{k}")))
        .collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut w = CsvWriter::new(out);
    w.header(&names)?;
    for (d, i) in rows {
        let mut v = vec![*d];
        v.extend(i);
        w.numbers(&v)?;
    }
    Ok(())
}

/// Harmonic comb: `a_k = (d_p/4)^k / k!` with `C0 = exp(-d_p/4)`.
pub fn harmonic_train(d_p: f64, k_max: usize) -> Result<TrainCoefficients> {
    check_depth(d_p)?;
    let x = d_p / 4.0;
    let mut a = Vec::with_capacity(k_max + 1);
    let mut term = 1.0;
    for k in 0..=k_max {
        if k > 0 {
            term *= x / k as f64;
        }
        a.push(Complex64::new(term, 0.0));
    }
    Ok(TrainCoefficients {
        prompt_factor: (-x).exp(),
        a,
        provenance: Provenance::ClosedForm,
    })
}

/// Points per period for trapezoid evaluation of a `harmonics`-term series.
fn trapezoid_points(harmonics: usize) -> usize {
    (16 * harmonics).next_power_of_two().max(4096)
}

/// `a_k C0 = (1/2nu0) ∫_{-nu0}^{nu0} H(nu) exp(-i k pi nu/nu0) dnu` by
/// quadrature of the analytic response.
///
/// For models with finitely many peaks the integral over the central period
/// is an approximation whose error falls off as `1/N`. The returned
/// `prompt_factor` is `|a_0 C0|` and `a_k` is scaled accordingly.
pub fn coefficients_numeric(response: &MediumResponse, k_max: usize) -> Result<TrainCoefficients> {
    let nu0 = response.comb.nu0;
    let raw: Vec<Complex64> = match response.model {
        Model::IdealSeries { harmonics } if response.comb.shape == CombShape::Square => {
            let m = trapezoid_points(harmonics);
            let h: Vec<Complex64> = (0..m)
                .map(|j| response.transfer(nu0 * (-1.0 + 2.0 * j as f64 / m as f64)))
                .collect::<Result<_>>()?;
            (0..=k_max)
                .map(|k| {
                    // exp(-i k pi nu/nu0) on the same nodes
                    let step = Complex64::from_polar(1.0, -2.0 * PI * k as f64 / m as f64);
                    let mut phase = Complex64::from_polar(1.0, PI * k as f64);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for v in &h {
                        acc += v * phase;
                        phase *= step;
                    }
                    acc / m as f64
                })
                .collect()
        }
        _ => {
            let breaks = period_breakpoints(response);
            (0..=k_max)
                .map(|k| {
                    let est = quad::integrate(
                        |nu| {
                            let h = response.transfer(nu).unwrap_or(Complex64::new(0.0, 0.0));
                            h * Complex64::from_polar(1.0, -(k as f64) * PI * nu / nu0)
                        },
                        &breaks,
                        quad::Options {
                            abs_tol: 1e-12,
                            max_segments: 20_000,
                        },
                    )?;
                    Ok(est.value / (2.0 * nu0))
                })
                .collect::<Result<_>>()?
        }
    };
    let c0 = raw[0].norm();
    if c0 == 0.0 {
        return Err(Error::Invalid("prompt coefficient vanishes".into()));
    }
    Ok(TrainCoefficients {
        prompt_factor: c0,
        a: raw.iter().map(|v| v / c0).collect(),
        provenance: Provenance::Quadrature,
    })
}

/// `[-nu0, nu0]` split at the square-peak edges `±(nu0 - delta)` and the
/// window center.
fn period_breakpoints(response: &MediumResponse) -> Vec<f64> {
    let c = &response.comb;
    let mut b = vec![-c.nu0, 0.0, c.nu0];
    if matches!(c.shape, CombShape::Square | CombShape::Lorentzian) {
        let e = c.nu0 - c.half_width;
        b.extend([-e, e]);
        if c.gamma > 0.0 && response.model.is_broadened() {
            for s in [1.0, 10.0] {
                for x in [-e - s * c.gamma, -e + s * c.gamma, e - s * c.gamma, e + s * c.gamma] {
                    if x.abs() < c.nu0 {
                        b.push(x);
                    }
                }
            }
        }
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `A0` and the first-harmonic coefficient `A1` of the broadened square comb.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BroadenedCoefficients {
    /// `(1/2nu0) ∫ eps'' dnu` over one period.
    pub a0: f64,
    /// `-(1/nu0) ∫ eps'' cos(pi nu/nu0) dnu`: absorption only.
    pub a1: f64,
    /// `-(1/2nu0) ∫ (eps'' - i eps') exp(-i pi nu/nu0) dnu`: full response.
    pub a1_full: Complex64,
    /// `(2/pi) sin(pi delta/nu0) exp(-pi gamma/nu0)`.
    pub a1_closed: f64,
}

/// `A0`/`A1` of the square comb with half-width `delta` and homogeneous rate
/// `gamma` by quadrature over the central period. `pairs = None` uses the
/// infinite comb, `Some(n)` the comb with `2n + 2` peaks.
pub fn broadened_a_coefficients(
    delta: f64,
    nu0: f64,
    gamma: f64,
    pairs: Option<usize>,
) -> Result<BroadenedCoefficients> {
    let response = |nu: f64| -> Result<Response> {
        match pairs {
            Some(n) if gamma > 0.0 => susceptibility::epsilon_broadened(nu, delta, nu0, gamma, n),
            Some(n) => susceptibility::chi_square_exact(nu / nu0, delta / nu0, n),
            None => susceptibility::epsilon_broadened_periodic(nu, delta, nu0, gamma),
        }
    };
    response(0.0)?;
    let e = nu0 - delta;
    let mut breaks = vec![-nu0, -e, 0.0, e, nu0];
    if gamma > 0.0 {
        for s in [1.0, 10.0, 100.0] {
            for x in [-e - s * gamma, -e + s * gamma, e - s * gamma, e + s * gamma] {
                if x.abs() < nu0 {
                    breaks.push(x);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let opts = quad::Options {
        abs_tol: 1e-12,
        max_segments: 20_000,
    };
    // singular edges (gamma = 0) are never hit by Kronrod nodes; map them to 0
    let eval = |nu: f64| response(nu).ok().filter(|r| r.is_finite());
    let a0 = quad::integrate_real(|nu| eval(nu).map_or(0.0, |r| r.absorption), &breaks, opts)?.0 / (2.0 * nu0);
    let a1 = -quad::integrate_real(
        |nu| eval(nu).map_or(0.0, |r| r.absorption * (PI * nu / nu0).cos()),
        &breaks,
        opts,
    )?
    .0 / nu0;
    let full = quad::integrate(
        |nu| {
            eval(nu).map_or(Complex64::new(0.0, 0.0), |r| {
                r.exponent() * Complex64::from_polar(1.0, -PI * nu / nu0)
            })
        },
        &breaks,
        opts,
    )?;
    Ok(BroadenedCoefficients {
        a0,
        a1,
        a1_full: -full.value / (2.0 * nu0),
        a1_closed: 2.0 / PI * (PI * delta / nu0).sin() * (-PI * gamma / nu0).exp(),
    })
}
