//! Discrete principal-value Hilbert transform relating absorption to
//! dispersion: `dispersion(nu) = (1/pi) P ∫ absorption(x) / (x - nu) dx`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::exec::{self, Execution};
use crate::{Error, Result};

/// How the sampled absorption continues outside the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Absorption falls off; the integral is taken over the window only.
    Decaying,
    /// The grid spans whole periods (its last sample repeats the first).
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KramersKronig {
    pub dispersion: Vec<f64>,
    /// Estimated contribution of absorption beyond the window, taken over the
    /// central half of the grid. Zero for periodic input.
    pub truncation_estimate: f64,
}

fn check_grid(nu: &[f64], absorption: &[f64]) -> Result<f64> {
    if nu.len() != absorption.len() {
        return Err(Error::GridMismatch(format!(
            "{} frequencies vs {} absorption samples",
            nu.len(),
            absorption.len()
        )));
    }
    if nu.len() < 4 {
        return Err(Error::Invalid("Kramers-Kronig grid needs at least 4 points".into()));
    }
    let m = nu.len();
    let step = (nu[m - 1] - nu[0]) / (m - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::Invalid("grid must be increasing".into()));
    }
    let tol = 1e-9 * step.max(nu[m - 1].abs());
    if nu.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > tol) {
        return Err(Error::Invalid("grid must be uniform".into()));
    }
    if (nu[0] + nu[m - 1]).abs() > tol {
        return Err(Error::Invalid("grid must be symmetric about zero".into()));
    }
    Ok(step)
}

/// Transforms sampled absorption into dispersion. A warning is logged when
/// the truncation estimate exceeds `tolerance`.
pub fn kramers_kronig(
    absorption: &[f64],
    nu: &[f64],
    boundary: Boundary,
    tolerance: f64,
    exec: Execution,
) -> Result<KramersKronig> {
    let step = check_grid(nu, absorption)?;
    let out = match boundary {
        Boundary::Periodic => periodic(absorption),
        Boundary::Decaying => decaying(absorption, nu, step, exec),
    };
    if out.truncation_estimate > tolerance {
        log::warn!(
            "Kramers-Kronig window truncation estimate {:e} exceeds tolerance {:e}",
            out.truncation_estimate,
            tolerance
        );
    }
    Ok(out)
}

/// Multiplies each Fourier mode `exp(i a x)` by `i sgn(a)`.
fn periodic(absorption: &[f64]) -> KramersKronig {
    let m = absorption.len() - 1;
    let mut buf: Vec<Complex64> = absorption[..m].iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let fwd: Arc<dyn rustfft::Fft<f64>> = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    fwd.process(&mut buf);
    // rustfft's forward kernel is exp(-2 pi i k n / m): bin k < m/2 carries exp(+i a x), a > 0
    for (k, c) in buf.iter_mut().enumerate() {
        let factor = if k == 0 || 2 * k == m {
            Complex64::new(0.0, 0.0)
        } else if 2 * k < m {
            Complex64::new(0.0, 1.0)
        } else {
            Complex64::new(0.0, -1.0)
        };
        *c *= factor / m as f64;
    }
    inv.process(&mut buf);
    let mut dispersion: Vec<f64> = buf.iter().map(|c| c.re).collect();
    dispersion.push(dispersion[0]);
    KramersKronig {
        dispersion,
        truncation_estimate: 0.0,
    }
}

/// Singularity-subtracted midpoint rule on cells of width `step`:
/// `(1/pi)[sum_{i!=j} (f_i - f_j) h / (x_i - x_j) + f'_j h + f_j ln((b - x_j)/(x_j - a))]`.
fn decaying(f: &[f64], x: &[f64], step: f64, exec: Execution) -> KramersKronig {
    let m = f.len();
    let a = x[0] - 0.5 * step;
    let b = x[m - 1] + 0.5 * step;
    let deriv = |j: usize| -> f64 {
        if j == 0 {
            (f[1] - f[0]) / step
        } else if j == m - 1 {
            (f[m - 1] - f[m - 2]) / step
        } else {
            (f[j + 1] - f[j - 1]) / (2.0 * step)
        }
    };
    let dispersion = exec::map_indexed(exec, m, |j| {
        let fj = f[j];
        let xj = x[j];
        let mut s = 0.0;
        for i in 0..m {
            if i != j {
                s += (f[i] - fj) / (x[i] - xj);
            }
        }
        (s * step + deriv(j) * step + fj * ((b - xj) / (xj - a)).ln()) / PI
    });
    let len = b - a;
    let (fa, fb) = (f[0].abs(), f[m - 1].abs());
    let truncation_estimate = (m / 4..=3 * m / 4)
        .map(|j| {
            let xj = x[j];
            (fa * (1.0 + len / (xj - a)).ln() + fb * (1.0 + len / (b - xj)).ln()) / PI
        })
        .fold(0.0, f64::max);
    KramersKronig {
        dispersion,
        truncation_estimate,
    }
}
