use std::f64::consts::PI;

/// Conversion between physical units and the normalized units used in every
/// output file: frequencies in `nu0`, times in `T = pi / nu0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedUnits {
    pub nu0: f64,
}

impl NormalizedUnits {
    pub fn new(nu0: f64) -> Self {
        Self { nu0 }
    }

    pub fn delay_time(&self) -> f64 {
        PI / self.nu0
    }

    pub fn freq_to_normalized(&self, nu: f64) -> f64 {
        nu / self.nu0
    }

    pub fn freq_to_physical(&self, x: f64) -> f64 {
        x * self.nu0
    }

    pub fn time_to_normalized(&self, t: f64) -> f64 {
        t / self.delay_time()
    }

    pub fn time_to_physical(&self, x: f64) -> f64 {
        x * self.delay_time()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_for_representable_ratios() {
        let u = NormalizedUnits::new(2.0);
        for x in [0.0, 0.5, 1.0, 3.0, -7.25, 1024.0] {
            assert_eq!(u.freq_to_normalized(u.freq_to_physical(x)), x);
        }
        let unit = NormalizedUnits::new(1.0);
        assert_eq!(unit.time_to_physical(1.0), PI);
        assert_eq!(unit.time_to_normalized(PI), 1.0);
    }

    #[test]
    fn mhz_example() {
        // 2 nu0 = 2 MHz: T = pi microseconds
        let u = NormalizedUnits::new(1.0);
        assert!((u.freq_to_normalized(0.005) - 0.005).abs() < 1e-15);
        assert!((u.delay_time() - PI).abs() < 1e-15);
    }
}
