//! Absorption and dispersion of the comb media.
//!
//! All responses are normalized to the absorption at the center of an
//! isolated, unbroadened peak, so the complex attenuation exponent is
//! `absorption - i * dispersion` and a field transfer is
//! `exp(-(d_p / 2) * (absorption - i * dispersion))`.

mod kramers_kronig;

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::comb::{CombShape, CombSpec};
use crate::csv::CsvWriter;
use crate::exec::{self, Execution};
use crate::quad;
use crate::units::NormalizedUnits;
use crate::{Error, Result};

pub use kramers_kronig::{kramers_kronig, Boundary, KramersKronig};

/// Default number of harmonics for the square-comb Fourier series.
pub const DEFAULT_HARMONICS: usize = 2000;

/// Distance from a square-peak edge (in units of `nu0`) treated as "on" it.
pub const EDGE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Response {
    pub absorption: f64,
    pub dispersion: f64,
}

impl Response {
    pub fn new(absorption: f64, dispersion: f64) -> Self {
        Self {
            absorption,
            dispersion,
        }
    }

    /// `absorption - i * dispersion`.
    pub fn exponent(&self) -> Complex64 {
        Complex64::new(self.absorption, -self.dispersion)
    }

    pub fn is_finite(&self) -> bool {
        self.absorption.is_finite() && self.dispersion.is_finite()
    }
}

fn check_inv_finesse(inv_finesse: f64) -> Result<()> {
    if inv_finesse > 0.0 && inv_finesse < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("inv_finesse", inv_finesse, "0 < 1/F < 1"))
    }
}

fn check_broadened(delta: f64, nu0: f64, gamma: f64) -> Result<()> {
    if !(nu0 > 0.0) {
        return Err(Error::domain("nu0", nu0, "nu0 > 0"));
    }
    if !(delta > 0.0 && delta < nu0) {
        return Err(Error::domain("delta", delta, "0 < delta < nu0"));
    }
    if !(gamma >= 0.0) {
        return Err(Error::domain("gamma", gamma, "gamma >= 0"));
    }
    Ok(())
}

/// Truncated Fourier series of the ideal square comb, `nu` in units of `nu0`.
///
/// Absorption: `1/F + (2/pi) sum (-1)^k sin(k pi/F) cos(k pi nu) / k`,
/// dispersion: `-(2/pi) sum (-1)^k sin(k pi/F) sin(k pi nu) / k`.
pub fn chi_square_series(nu: f64, inv_finesse: f64, harmonics: usize) -> Result<Response> {
    check_inv_finesse(inv_finesse)?;
    if harmonics == 0 {
        return Err(Error::Invalid("series needs at least one harmonic".into()));
    }
    let sum = square_harmonic_sum(nu, inv_finesse, harmonics);
    Ok(Response::new(inv_finesse + sum.re, -sum.im))
}

/// `sum_{k=1..K} c_k exp(i k pi nu)` with `c_k = (2/pi)(-1)^k sin(k pi/F)/k`.
pub(crate) fn square_harmonic_sum(nu: f64, inv_finesse: f64, harmonics: usize) -> Complex64 {
    // phasor recurrences for exp(i k pi nu) and exp(i k pi delta)
    let step = Complex64::from_polar(1.0, PI * nu);
    let step_d = Complex64::from_polar(1.0, PI * inv_finesse);
    let mut z = Complex64::new(1.0, 0.0);
    let mut zd = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut sign = 1.0;
    for k in 1..=harmonics {
        z *= step;
        zd *= step_d;
        sign = -sign;
        acc += z * (sign * zd.im / k as f64);
    }
    acc * (2.0 / PI)
}

/// Ideal square comb with `2N + 2` peaks: indicator absorption and the
/// `gamma -> 0` logarithmic dispersion. On a peak edge the absorption is 1/2
/// and the dispersion is returned as a signed infinity.
pub fn chi_square_exact(nu: f64, inv_finesse: f64, pairs: usize) -> Result<Response> {
    check_inv_finesse(inv_finesse)?;
    let d = inv_finesse;
    let n = pairs as i64;
    let mut absorption = 0.0;
    let mut dispersion = 0.0;
    for k in -n - 1..=n {
        let c = (2 * k + 1) as f64;
        let upper = nu + d + c;
        let lower = nu - d + c;
        if upper.abs() < EDGE_TOLERANCE {
            return Ok(Response::new(0.5, f64::INFINITY));
        }
        if lower.abs() < EDGE_TOLERANCE {
            return Ok(Response::new(0.5, f64::NEG_INFINITY));
        }
        if upper > 0.0 && lower < 0.0 {
            absorption += 1.0;
        }
        dispersion -= (upper.abs() / lower.abs()).ln() / PI;
    }
    Ok(Response::new(absorption, dispersion))
}

/// `atan(a) - atan(b)` without cancellation for large arguments.
fn atan_diff(a: f64, b: f64) -> f64 {
    let ab = a * b;
    let base = ((a - b) / (1.0 + ab)).atan();
    if ab > -1.0 {
        base
    } else if a > 0.0 {
        base + PI
    } else {
        base - PI
    }
}

/// Square comb convolved with the homogeneous Lorentzian (finite `2N + 2`
/// peaks): absorption from arctangent differences, dispersion from the
/// logarithmic sum.
pub fn epsilon_broadened(nu: f64, delta: f64, nu0: f64, gamma: f64, pairs: usize) -> Result<Response> {
    check_broadened(delta, nu0, gamma)?;
    if !(gamma > 0.0) {
        return Err(Error::domain("gamma", gamma, "gamma > 0 for the broadened comb"));
    }
    let n = pairs as i64;
    let g2 = gamma * gamma;
    let mut absorption = 0.0;
    let mut dispersion = 0.0;
    for k in -n - 1..=n {
        let c = (2 * k + 1) as f64 * nu0;
        let upper = nu + delta + c;
        let lower = nu - delta + c;
        absorption += atan_diff(upper / gamma, lower / gamma);
        dispersion -= ((upper * upper + g2) / (lower * lower + g2)).ln();
    }
    Ok(Response::new(absorption / PI, dispersion / (2.0 * PI)))
}

/// Infinite-comb (`N -> infinity`) limit of [`epsilon_broadened`], in closed
/// form:
/// `absorption - i dispersion = d + (i/pi)[ln(1 + e^{i pi d} w) - ln(1 + e^{-i pi d} w)]`
/// with `d = delta/nu0` and `w = exp(i pi (nu + i gamma)/nu0)`.
/// With `gamma = 0` this is the ideal square comb; its edges are singular.
pub fn epsilon_broadened_periodic(nu: f64, delta: f64, nu0: f64, gamma: f64) -> Result<Response> {
    check_broadened(delta, nu0, gamma)?;
    let d = delta / nu0;
    let w = Complex64::from_polar((-PI * gamma / nu0).exp(), PI * nu / nu0);
    let up = Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, PI * d) * w;
    let dn = Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, -PI * d) * w;
    if gamma == 0.0 && (up.norm() < 1e-12 || dn.norm() < 1e-12) {
        return Err(Error::SingularEdge { nu });
    }
    let z = Complex64::new(d, 0.0) + Complex64::new(0.0, 1.0 / PI) * (up.ln() - dn.ln());
    Ok(Response::new(z.re, -z.im))
}

/// Residual absorption at a transparency-window center,
/// `(4/pi) sum_{k=0..N} gamma delta / ((2k+1)^2 nu0^2 - delta^2)`.
pub fn epsilon_window_center(delta: f64, nu0: f64, gamma: f64, pairs: usize) -> Result<f64> {
    check_broadened(delta, nu0, gamma)?;
    // smallest terms first
    let sum: f64 = (0..=pairs)
        .rev()
        .map(|k| {
            let c = (2 * k + 1) as f64 * nu0;
            gamma * delta / (c * c - delta * delta)
        })
        .sum();
    Ok(4.0 / PI * sum)
}

/// Absorption at a peak center reduced by homogeneous broadening,
/// `1 - (2/pi)[gamma/delta - 2 gamma delta / (4 nu0^2 - delta^2)]`.
pub fn epsilon_peak_center(delta: f64, nu0: f64, gamma: f64) -> Result<f64> {
    check_broadened(delta, nu0, gamma)?;
    Ok(1.0 - 2.0 / PI * (gamma / delta - 2.0 * gamma * delta / (4.0 * nu0 * nu0 - delta * delta)))
}

/// Numerical Lorentzian average `(i/pi) ∫ n(D) / (nu + D + i gamma) dD` over
/// `window`, for an arbitrary population profile. Interior `breakpoints`
/// should mark discontinuities of `n`.
pub fn convolve_population<F>(
    population: F,
    nu: f64,
    gamma: f64,
    window: (f64, f64),
    breakpoints: &[f64],
    abs_tol: f64,
) -> Result<Response>
where
    F: Fn(f64) -> f64,
{
    if !(gamma > 0.0) {
        return Err(Error::domain("gamma", gamma, "gamma > 0 for the Lorentzian average"));
    }
    let (lo, hi) = window;
    let mut points: Vec<f64> = vec![lo, hi];
    points.extend(breakpoints.iter().copied().filter(|x| *x > lo && *x < hi));
    // the kernel pole sits at D = -nu
    for s in [0.0, -1.0, 1.0, -10.0, 10.0, -100.0, 100.0] {
        let x = -nu + s * gamma;
        if x > lo && x < hi {
            points.push(x);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let g2 = gamma * gamma;
    let est = quad::integrate(
        |d| {
            let n = population(d);
            if n == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let x = nu + d;
            Complex64::new(gamma, x) * (n / (x * x + g2))
        },
        &points,
        quad::Options {
            abs_tol,
            max_segments: 20_000,
        },
    )?;
    let z = est.value / PI;
    Ok(Response::new(z.re, -z.im))
}

/// Lorentzian average of a comb's population difference, by adaptive
/// quadrature. The window covers every peak plus `max(20 gamma, 20 Gamma)`.
pub fn lorentzian_convolution(comb: &CombSpec, nu: f64) -> Result<Response> {
    comb.validate()?;
    if !(comb.gamma > 0.0) {
        return Err(Error::domain("gamma", comb.gamma, "gamma > 0 for the Lorentzian average"));
    }
    let (window, breaks) = match comb.shape {
        CombShape::Square => {
            let edge = comb.extent() + 20.0 * comb.gamma;
            let breaks: Vec<f64> = comb
                .peak_centers()
                .iter()
                .flat_map(|c| [c - comb.half_width, c + comb.half_width])
                .collect();
            (edge, breaks)
        }
        CombShape::Lorentzian => {
            let edge = comb.extent() + 20.0 * comb.gamma.max(comb.half_width);
            let breaks: Vec<f64> = comb
                .peak_centers()
                .iter()
                .flat_map(|c| [c - comb.half_width, *c, c + comb.half_width])
                .collect();
            (edge, breaks)
        }
        CombShape::Harmonic => {
            let edge = (2 * comb.pair_count + 2) as f64 * comb.nu0;
            let m = 2 * comb.pair_count as i64 + 2;
            let breaks: Vec<f64> = (-m..=m).map(|k| k as f64 * comb.nu0).collect();
            (edge, breaks)
        }
    };
    convolve_population(
        |d| comb.population_unchecked(d),
        nu,
        comb.gamma,
        (-window, window),
        &breaks,
        1e-9,
    )
}

/// Uniform grid symmetric about zero: `points` samples on `[-half_span, half_span]`.
pub fn symmetric_grid(half_span: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2, "grid needs at least two points");
    let m = (points - 1) as f64;
    (0..points)
        .map(|i| half_span * (2.0 * i as f64 - m) / m)
        .collect()
}

/// Sampled absorption/dispersion pair on a frequency grid in units of `nu0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexResponse {
    pub nu: Vec<f64>,
    pub absorption: Vec<f64>,
    pub dispersion: Vec<f64>,
}

impl ComplexResponse {
    pub fn from_fn<F>(nu: Vec<f64>, exec: Execution, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<Response> + Sync + Send,
    {
        let values: Vec<Response> = exec::map_slice(exec, &nu, |x| f(*x))
            .into_iter()
            .collect::<Result<_>>()?;
        Ok(Self {
            absorption: values.iter().map(|r| r.absorption).collect(),
            dispersion: values.iter().map(|r| r.dispersion).collect(),
            nu,
        })
    }

    /// Fourier-series square comb (normalized units).
    pub fn square_series(nu: Vec<f64>, inv_finesse: f64, harmonics: usize, exec: Execution) -> Result<Self> {
        Self::from_fn(nu, exec, |x| chi_square_series(x, inv_finesse, harmonics))
    }

    /// Broadened square comb (normalized units, `nu0 = 1`).
    pub fn broadened(nu: Vec<f64>, delta: f64, gamma: f64, pairs: usize, exec: Execution) -> Result<Self> {
        Self::from_fn(nu, exec, |x| epsilon_broadened(x, delta, 1.0, gamma, pairs))
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// Columns `nu_over_nu0,absorption,dispersion`; with `physical` the
    /// frequency column is converted and named `nu`.
    pub fn write_csv<W: Write>(&self, out: W, physical: Option<NormalizedUnits>) -> io::Result<()> {
        let mut w = CsvWriter::new(out);
        match physical {
            None => w.header(&["nu_over_nu0", "absorption", "dispersion"])?,
            Some(_) => w.header(&["nu", "absorption", "dispersion"])?,
        }
        for i in 0..self.len() {
            let nu = match physical {
                Some(u) => u.freq_to_physical(self.nu[i]),
                None => self.nu[i],
            };
            w.numbers(&[nu, self.absorption[i], self.dispersion[i]])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_window_and_peak() {
        let r = chi_square_series(0.0, 0.1, 2000).unwrap();
        assert!(r.absorption.abs() < 1e-3);
        assert!(r.dispersion.abs() < 1e-15);
        let p = chi_square_series(1.0, 0.1, 2000).unwrap();
        assert!((p.absorption - 1.0).abs() < 2e-3);
    }

    #[test]
    fn series_domain() {
        assert!(chi_square_series(0.0, 0.0, 10).is_err());
        assert!(chi_square_series(0.0, 1.0, 10).is_err());
        assert!(chi_square_series(0.0, 0.2, 0).is_err());
    }

    #[test]
    fn exact_values() {
        let r = chi_square_exact(0.0, 0.1, 9).unwrap();
        assert_eq!(r.absorption, 0.0);
        assert!(r.dispersion.abs() < 1e-14);
        assert_eq!(chi_square_exact(1.0, 0.1, 9).unwrap().absorption, 1.0);
        let edge = chi_square_exact(0.9, 0.1, 9).unwrap();
        assert_eq!(edge.absorption, 0.5);
        assert!(!edge.is_finite());
    }

    #[test]
    fn peak_center_reduction() {
        let v = epsilon_peak_center(0.1, 1.0, 0.01).unwrap();
        assert!((v - 0.937).abs() < 1e-3);
        assert_eq!(epsilon_peak_center(0.1, 1.0, 0.0).unwrap(), 1.0);
        let full = epsilon_broadened(1.0, 0.1, 1.0, 0.01, 9).unwrap().absorption;
        assert!((full - v).abs() < 1e-3);
    }

    #[test]
    fn window_center_zero_without_broadening() {
        assert_eq!(epsilon_window_center(0.1, 1.0, 0.0, 9).unwrap(), 0.0);
    }

    #[test]
    fn broadened_requires_gamma() {
        assert!(epsilon_broadened(0.0, 0.1, 1.0, 0.0, 9).is_err());
        assert!(epsilon_broadened(0.0, 1.1, 1.0, 0.01, 9).is_err());
    }

    #[test]
    fn atan_diff_matches_direct() {
        for (a, b) in [(2.0, -2.0), (-3.0, 4.0), (1910.0, 1890.0), (0.5, 0.25), (-5.0, -7.0)] {
            let direct = f64::atan(a) - f64::atan(b);
            assert!((atan_diff(a, b) - direct).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn periodic_form_matches_large_n_sum() {
        for nu in [0.0, 0.3, 0.8, 1.0, 1.7] {
            let p = epsilon_broadened_periodic(nu, 0.2, 1.0, 0.005).unwrap();
            let s = epsilon_broadened(nu, 0.2, 1.0, 0.005, 20_000).unwrap();
            assert!((p.absorption - s.absorption).abs() < 1e-7, "{nu}");
            assert!((p.dispersion - s.dispersion).abs() < 1e-4, "{nu}");
        }
    }

    #[test]
    fn symmetric_grid_is_exactly_symmetric() {
        let g = symmetric_grid(3.0, 601);
        for i in 0..g.len() {
            assert_eq!(g[i], -g[g.len() - 1 - i]);
        }
        assert_eq!(g[300], 0.0);
    }

    #[test]
    fn csv_header() {
        let r = ComplexResponse::square_series(symmetric_grid(1.0, 3), 0.1, 50, Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf, None).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("nu_over_nu0,absorption,dispersion\n"));
        assert_eq!(s.lines().count(), 4);
    }
}
