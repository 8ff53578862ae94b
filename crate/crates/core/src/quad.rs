//! Globally adaptive 21-point Gauss-Kronrod quadrature for complex-valued
//! integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Clone, Copy, Debug)]
pub struct Options {
    /// Absolute tolerance on the modulus of the integral.
    pub abs_tol: f64,
    pub max_segments: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            max_segments: 4000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub segments: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    for j in 0..10 {
        let x = half * XGK[j];
        let sum = f(center - x) + f(center + x);
        kronrod += sum * WGK[j];
        if j % 2 == 1 {
            gauss += sum * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).norm())
}

/// Integrates `f` over consecutive intervals `[p0, p1], [p1, p2], ...`.
/// Interior breakpoints should sit on discontinuities and sharp features.
pub fn integrate<F>(f: F, breakpoints: &[f64], opts: Options) -> Result<Estimate>
where
    F: Fn(f64) -> Complex64,
{
    if breakpoints.len() < 2 {
        return Err(Error::Invalid("quadrature needs at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (value, error) = gk21(&f, a, b);
        heap.push(Segment { a, b, value, error });
    }
    loop {
        let total_err: f64 = heap.iter().map(|s| s.error).sum();
        if total_err <= opts.abs_tol || heap.len() >= opts.max_segments {
            let value = heap.iter().map(|s| s.value).sum();
            let estimate = Estimate {
                value,
                error: total_err,
                segments: heap.len(),
            };
            if total_err > opts.abs_tol {
                return Err(Error::Quadrature {
                    estimate: total_err,
                    tolerance: opts.abs_tol,
                });
            }
            return Ok(estimate);
        }
        let worst = heap.pop().expect("non-empty segment heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in f64
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk21(&f, a, b);
            heap.push(Segment { a, b, value, error });
        }
    }
}

/// Real-valued convenience wrapper.
pub fn integrate_real<F>(f: F, breakpoints: &[f64], opts: Options) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let est = integrate(|x| Complex64::new(f(x), 0.0), breakpoints, opts)?;
    Ok((est.value.re, est.error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate_real(|x| x.powi(7) - 3.0 * x * x, &[-1.0, 2.0], Options::default()).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn narrow_lorentzian() {
        let g = 1e-4;
        let (v, _) = integrate_real(
            |x| g / PI / (x * x + g * g),
            &[-1.0, -10.0 * g, 0.0, 10.0 * g, 1.0],
            Options::default(),
        )
        .unwrap();
        let exact = 2.0 * (1.0 / g).atan() / PI;
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn complex_oscillatory() {
        let est = integrate(
            |x| Complex64::new(0.0, 3.0 * x).exp(),
            &[0.0, PI],
            Options::default(),
        )
        .unwrap();
        // ∫ e^{3ix} = (e^{3i pi} - 1) / 3i = -2 / 3i = 2i/3
        assert!((est.value - Complex64::new(0.0, 2.0 / 3.0)).norm() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let err = integrate_real(
            |x| 1.0 / x.abs().sqrt().max(1e-300),
            &[-1.0, 1.0],
            Options {
                abs_tol: 1e-14,
                max_segments: 8,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
