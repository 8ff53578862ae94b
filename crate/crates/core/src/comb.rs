//! Population-difference profiles of the three comb shapes.
//!
//! Every shape is centered on a transparency window: `nu = 0` is a window
//! center and the absorption peaks sit at odd multiples of `nu0`.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Default number of peak pairs beyond the central pair; `2N + 2 = 20` peaks.
pub const DEFAULT_PAIR_COUNT: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CombShape {
    Harmonic,
    Lorentzian,
    Square,
}

impl CombShape {
    pub fn name(self) -> &'static str {
        match self {
            CombShape::Harmonic => "harmonic",
            CombShape::Lorentzian => "lorentzian",
            CombShape::Square => "square",
        }
    }
}

impl std::str::FromStr for CombShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "harmonic" => Ok(CombShape::Harmonic),
            "lorentzian" | "lorentz" => Ok(CombShape::Lorentzian),
            "square" => Ok(CombShape::Square),
            other => Err(Error::Invalid(format!(
                "unknown comb shape `{other}` (expected harmonic, lorentzian or square)"
            ))),
        }
    }
}

/// Comb geometry plus the homogeneous coherence decay rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CombSpec {
    pub shape: CombShape,
    /// Half the peak spacing.
    pub nu0: f64,
    /// Peak half-width: `delta` for square peaks, `Gamma` for Lorentzians.
    /// Ignored by the harmonic comb.
    pub half_width: f64,
    /// `N`; the finite comb has `2N + 2` peaks. Ignored by the harmonic comb.
    pub pair_count: usize,
    /// Homogeneous decay rate `gamma` of the atomic coherence.
    pub gamma: f64,
}

impl CombSpec {
    pub fn square(nu0: f64, delta: f64) -> Self {
        Self {
            shape: CombShape::Square,
            nu0,
            half_width: delta,
            pair_count: DEFAULT_PAIR_COUNT,
            gamma: 0.0,
        }
    }

    pub fn lorentzian(nu0: f64, peak_half_width: f64) -> Self {
        Self {
            shape: CombShape::Lorentzian,
            half_width: peak_half_width,
            ..Self::square(nu0, peak_half_width)
        }
    }

    pub fn harmonic(nu0: f64) -> Self {
        Self {
            shape: CombShape::Harmonic,
            half_width: 0.5 * nu0,
            ..Self::square(nu0, 0.5 * nu0)
        }
    }

    /// Comb in normalized units (`nu0 = 1`) with the requested finesse.
    /// The harmonic comb ignores `finesse`.
    pub fn with_finesse(shape: CombShape, finesse: f64) -> Self {
        match shape {
            CombShape::Square => Self::square(1.0, 1.0 / finesse),
            CombShape::Lorentzian => Self::lorentzian(1.0, 1.0 / finesse),
            CombShape::Harmonic => Self::harmonic(1.0),
        }
    }

    pub fn pairs(mut self, n: usize) -> Self {
        self.pair_count = n;
        self
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu0 > 0.0 && self.nu0.is_finite()) {
            return Err(Error::domain("nu0", self.nu0, "nu0 > 0"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::domain("gamma", self.gamma, "gamma >= 0"));
        }
        if self.shape != CombShape::Harmonic
            && !(self.half_width > 0.0 && self.half_width < self.nu0)
        {
            return Err(Error::domain(
                "half_width",
                self.half_width,
                "0 < half_width < nu0",
            ));
        }
        Ok(())
    }

    /// `F_H = 2`, `F_L = nu0 / Gamma`, `F_S = nu0 / delta`.
    pub fn finesse(&self) -> f64 {
        match self.shape {
            CombShape::Harmonic => 2.0,
            _ => self.nu0 / self.half_width,
        }
    }

    pub fn inv_finesse(&self) -> f64 {
        1.0 / self.finesse()
    }

    /// Echo delay `T = pi / nu0`.
    pub fn delay_time(&self) -> f64 {
        PI / self.nu0
    }

    /// `gamma * T`, the homogeneous dephasing accumulated over one delay.
    pub fn gamma_t(&self) -> f64 {
        self.gamma * self.delay_time()
    }

    /// Centers `(2k + 1) nu0` for `k = -N-1 ..= N`, ascending.
    pub fn peak_centers(&self) -> Vec<f64> {
        let n = self.pair_count as i64;
        (-n - 1..=n).map(|k| (2 * k + 1) as f64 * self.nu0).collect()
    }

    /// Outermost frequency covered by the finite comb's peaks.
    pub fn extent(&self) -> f64 {
        (2 * self.pair_count + 1) as f64 * self.nu0 + self.half_width
    }

    /// `n(Delta)`. Square-peak edges are half-valued.
    pub fn population_difference(&self, delta: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.population_unchecked(delta))
    }

    pub(crate) fn population_unchecked(&self, delta: f64) -> f64 {
        match self.shape {
            CombShape::Harmonic => 0.5 * (1.0 - (PI * delta / self.nu0).cos()),
            CombShape::Lorentzian => {
                let g2 = self.half_width * self.half_width;
                self.peak_centers()
                    .iter()
                    .map(|c| g2 / ((delta + c).powi(2) + g2))
                    .sum()
            }
            CombShape::Square => {
                let d = self.half_width;
                self.peak_centers()
                    .iter()
                    .map(|c| {
                        let x = (delta - c).abs();
                        if x < d {
                            1.0
                        } else if x == d {
                            0.5
                        } else {
                            0.0
                        }
                    })
                    .sum()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_values() {
        let c = CombSpec::harmonic(1.0);
        assert_eq!(c.population_difference(0.0).unwrap(), 0.0);
        assert!((c.population_difference(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(c.finesse(), 2.0);
    }

    #[test]
    fn square_values() {
        let c = CombSpec::square(1.0, 0.1);
        assert_eq!(c.population_difference(1.0).unwrap(), 1.0);
        assert_eq!(c.population_difference(1.0 + 1.01 * 0.1).unwrap(), 0.0);
        assert_eq!(c.population_difference(0.0).unwrap(), 0.0);
        assert!((c.finesse() - 10.0).abs() < 1e-12);
        assert_eq!(c.peak_centers().len(), 20);
    }

    #[test]
    fn lorentzian_peak_slightly_above_one() {
        let c = CombSpec::lorentzian(1.0, 0.1).pairs(200);
        let n = c.population_difference(1.0).unwrap();
        // neighbour wings: sum over odd distances 2m of G^2/(4m^2), both sides
        let wings: f64 = (1..2000)
            .map(|m| 0.01 / (4.0 * (m * m) as f64 + 0.01))
            .sum::<f64>();
        assert!(n > 1.0 && n < 1.0 + 2.0 * wings + 1e-6);
        assert!((c.finesse() - 10.0).abs() < 1e-12);
        let c5 = CombSpec::lorentzian(1.0, 0.2);
        assert!((c5.finesse() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(CombSpec::square(1.0, 1.2).validate().is_err());
        assert!(CombSpec::square(-1.0, 0.1).validate().is_err());
        assert!(CombSpec::square(1.0, 0.1).gamma(-0.1).validate().is_err());
        assert!(CombSpec::harmonic(1.0).validate().is_ok());
        assert!(CombSpec::square(1.0, 0.0).population_difference(0.0).is_err());
    }

    #[test]
    fn delay_is_pi_over_nu0() {
        assert!((CombSpec::square(2.0, 0.1).delay_time() - PI / 2.0).abs() < 1e-15);
    }
}
