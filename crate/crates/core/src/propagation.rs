//! Frequency-domain propagation of slowly varying envelopes through the comb
//! medium, and extraction of the resulting pulse train.
//!
//! The carrier is never represented and the small `i nu l / c` phase is
//! omitted. Intensities are normalized to the peak intensity of the input as
//! it is represented on the frequency grid: the spectral window truncates the
//! Gaussian, and the same truncation applies to every output pulse.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::comb::{CombShape, CombSpec};
use crate::csv::{CsvWriter, Field};
use crate::exec::{self, Execution};
use crate::susceptibility::{self, Response, DEFAULT_HARMONICS};
use crate::units::NormalizedUnits;
use crate::{Error, Result};

/// Default Gaussian rate `sigma` in units of `nu0` (`E(t) = E0 exp(-sigma^2 t^2)`).
pub const DEFAULT_SIGMA: f64 = 5.0;
/// Default spectral half-span in units of `sigma`.
pub const DEFAULT_SPAN_SIGMAS: f64 = 4.0;
pub const DEFAULT_SAMPLES: usize = 1 << 14;
/// Grid spacing must be at most `min(sigma, nu0) / RESOLUTION_FACTOR`.
pub const RESOLUTION_FACTOR: f64 = 64.0;
/// Largest energy fraction allowed in the outer edge slices of the time window.
pub const OVERFLOW_THRESHOLD: f64 = 1e-8;
/// Minimum `sigma * T` for clean separation of successive echoes.
pub const MIN_SEPARATION: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MediumSpec {
    /// `d_p`: Beer-law exponent at an absorption-peak center.
    pub peak_optical_depth: f64,
}

impl MediumSpec {
    pub fn new(peak_optical_depth: f64) -> Self {
        Self { peak_optical_depth }
    }

    pub fn validate(&self) -> Result<()> {
        if self.peak_optical_depth >= 0.0 && self.peak_optical_depth.is_finite() {
            Ok(())
        } else {
            Err(Error::domain("d_p", self.peak_optical_depth, "d_p >= 0"))
        }
    }
}

/// How the medium response is evaluated.
///
/// The ideal variants ignore `gamma`. `IdealSeries` is the truncated Fourier
/// series of the square comb, `IdealExact` the closed form for `2N + 2`
/// peaks, `IdealPeriodic` the closed form for infinitely many peaks.
/// `Broadened` and `BroadenedPeriodic` average over the homogeneous
/// Lorentzian of width `gamma`, for `2N + 2` and infinitely many peaks.
/// The harmonic comb has a single closed form for every model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    IdealSeries { harmonics: usize },
    IdealExact,
    IdealPeriodic,
    Broadened,
    BroadenedPeriodic,
}

impl Model {
    pub fn ideal() -> Self {
        Model::IdealSeries {
            harmonics: DEFAULT_HARMONICS,
        }
    }

    /// Series with as many harmonics as the time window of `grid` holds
    /// without aliasing: `window / (8 T)`, at least 16.
    ///
    /// A truncated series reproduces the ideal comb's `a_k` exactly for
    /// `k <= K` but exp of it carries echo content out to several `K`; with
    /// `K = 2000` that content wraps onto the first pulses of a `2^14` grid.
    pub fn windowed_series(grid: FrequencyGrid, nu0: f64) -> Self {
        let delay = PI / nu0;
        let harmonics = ((grid.time_window() / (8.0 * delay)) as usize).max(16);
        Model::IdealSeries { harmonics }
    }

    pub fn is_broadened(self) -> bool {
        matches!(self, Model::Broadened | Model::BroadenedPeriodic)
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Model::IdealSeries { .. } | Model::IdealPeriodic | Model::BroadenedPeriodic)
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::IdealSeries { .. } => "ideal-series",
            Model::IdealExact => "ideal-exact",
            Model::IdealPeriodic => "ideal-periodic",
            Model::Broadened => "broadened",
            Model::BroadenedPeriodic => "broadened-periodic",
        }
    }
}

/// Uniform frequency grid `nu_j = -half_span + j * spacing`, `j < samples`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyGrid {
    pub half_span: f64,
    pub samples: usize,
}

impl FrequencyGrid {
    pub fn new(half_span: f64, samples: usize) -> Result<Self> {
        if !(half_span > 0.0 && half_span.is_finite()) {
            return Err(Error::domain("half_span", half_span, "half_span > 0"));
        }
        if samples < 16 || !samples.is_power_of_two() {
            return Err(Error::domain(
                "samples",
                samples as f64,
                "samples must be a power of two >= 16",
            ));
        }
        Ok(Self { half_span, samples })
    }

    /// `(-4 sigma, 4 sigma)` sampled with `2^14` points.
    pub fn for_pulse(sigma: f64) -> Self {
        Self {
            half_span: DEFAULT_SPAN_SIGMAS * sigma,
            samples: DEFAULT_SAMPLES,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_span / self.samples as f64
    }

    pub fn frequency(&self, j: usize) -> f64 {
        -self.half_span + j as f64 * self.spacing()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.samples).map(|j| self.frequency(j)).collect()
    }

    /// Sample spacing of the conjugate time grid, `pi / half_span`.
    pub fn time_step(&self) -> f64 {
        PI / self.half_span
    }

    /// Period of the conjugate time grid, `2 pi / spacing`.
    pub fn time_window(&self) -> f64 {
        2.0 * PI / self.spacing()
    }

    pub fn check_resolution(&self, scale: f64) -> Result<()> {
        let limit = scale / RESOLUTION_FACTOR;
        if self.spacing() > limit {
            Err(Error::GridResolution {
                spacing: self.spacing(),
                limit,
            })
        } else {
            Ok(())
        }
    }
}

/// Analytic medium response: evaluates the attenuation exponent at any
/// frequency for a given comb, depth and model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MediumResponse {
    pub comb: CombSpec,
    pub medium: MediumSpec,
    pub model: Model,
}

impl MediumResponse {
    pub fn new(comb: CombSpec, medium: MediumSpec, model: Model) -> Result<Self> {
        comb.validate()?;
        medium.validate()?;
        if let Model::IdealSeries { harmonics: 0 } = model {
            return Err(Error::Invalid("series model needs at least one harmonic".into()));
        }
        Ok(Self {
            comb,
            medium,
            model,
        })
    }

    fn effective_gamma(&self) -> f64 {
        if self.model.is_broadened() {
            self.comb.gamma
        } else {
            0.0
        }
    }

    /// Peak-normalized absorption and dispersion at `nu`.
    pub fn response(&self, nu: f64) -> Result<Response> {
        let c = &self.comb;
        let gamma = self.effective_gamma();
        match c.shape {
            CombShape::Square => {
                let x = nu / c.nu0;
                let inv_f = c.half_width / c.nu0;
                let r = match self.model {
                    Model::IdealSeries { harmonics } => {
                        susceptibility::chi_square_series(x, inv_f, harmonics)?
                    }
                    Model::Broadened if gamma > 0.0 => {
                        susceptibility::epsilon_broadened(nu, c.half_width, c.nu0, gamma, c.pair_count)?
                    }
                    Model::IdealPeriodic | Model::BroadenedPeriodic => {
                        susceptibility::epsilon_broadened_periodic(nu, c.half_width, c.nu0, gamma)?
                    }
                    _ => susceptibility::chi_square_exact(x, inv_f, c.pair_count)?,
                };
                if !r.is_finite() {
                    return Err(Error::SingularEdge { nu });
                }
                Ok(r)
            }
            CombShape::Harmonic => {
                // (1/2)(1 - exp(-pi gamma/nu0) exp(i pi nu/nu0))
                let z = Complex64::from_polar((-PI * gamma / c.nu0).exp(), PI * nu / c.nu0);
                let e = (Complex64::new(1.0, 0.0) - z) * 0.5;
                Ok(Response::new(e.re, -e.im))
            }
            CombShape::Lorentzian if self.model.is_infinite() => {
                // sum over all odd centers: -(pi/2nu0) tan(pi x/2nu0)
                let x = Complex64::new(nu, c.half_width + gamma) * (PI / (2.0 * c.nu0));
                let e = Complex64::new(0.0, c.half_width) * (-PI / (2.0 * c.nu0)) * x.tan();
                Ok(Response::new(e.re, -e.im))
            }
            CombShape::Lorentzian => {
                // each peak: i Gamma / (nu + c + i (Gamma + gamma))
                let width = c.half_width + gamma;
                let e: Complex64 = c
                    .peak_centers()
                    .iter()
                    .map(|center| {
                        Complex64::new(0.0, c.half_width) / Complex64::new(nu + center, width)
                    })
                    .sum();
                Ok(Response::new(e.re, -e.im))
            }
        }
    }

    /// `ln H(nu) = -(d_p / 2)(absorption - i dispersion)`.
    pub fn log_transfer(&self, nu: f64) -> Result<Complex64> {
        let r = self.response(nu)?;
        Ok(r.exponent() * (-0.5 * self.medium.peak_optical_depth))
    }

    pub fn transfer(&self, nu: f64) -> Result<Complex64> {
        Ok(self.log_transfer(nu)?.exp())
    }

    /// True when the response is exactly periodic in `nu` with period `2 nu0`.
    pub fn is_periodic(&self) -> bool {
        match self.comb.shape {
            CombShape::Harmonic => true,
            _ => self.model.is_infinite(),
        }
    }

    /// True when the comb has sharp edges (unbroadened square peaks), whose
    /// echo tail decays only as `1/k`.
    pub fn has_sharp_edges(&self) -> bool {
        self.comb.shape == CombShape::Square && self.effective_gamma() == 0.0
    }

    pub fn sample(&self, grid: FrequencyGrid, exec: Execution) -> Result<TransferFunction> {
        grid.check_resolution(self.comb.nu0)?;
        let eta = 1e-9 * self.comb.nu0;
        let values: Vec<Complex64> = exec::map_indexed(exec, grid.samples, |j| {
            let nu = grid.frequency(j);
            match self.transfer(nu) {
                // a sample on a sharp edge takes the mean of the one-sided limits
                Err(Error::SingularEdge { .. }) => Ok((self.transfer(nu - eta)? + self.transfer(nu + eta)?) * 0.5),
                other => other,
            }
        })
        .into_iter()
        .collect::<Result<_>>()?;
        Ok(TransferFunction {
            grid,
            values,
            sharp_edges: self.has_sharp_edges(),
        })
    }
}

/// Sampled complex frequency response of the medium.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
    /// Set for unbroadened square combs; see [`MediumResponse::has_sharp_edges`].
    pub sharp_edges: bool,
}

impl TransferFunction {
    pub fn identity(grid: FrequencyGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(1.0, 0.0); grid.samples],
            sharp_edges: false,
        }
    }

    pub fn max_gain(&self) -> f64 {
        self.values.iter().map(|h| h.norm()).fold(0.0, f64::max)
    }

    /// Columns `nu_over_nu0,re_h,im_h,abs_h`; with `physical` the frequency
    /// column is converted and named `nu`.
    pub fn write_csv<W: Write>(&self, out: W, physical: Option<NormalizedUnits>) -> io::Result<()> {
        let mut w = CsvWriter::new(out);
        let first = if physical.is_some() { "nu" } else { "nu_over_nu0" };
        w.header(&[first, "re_h", "im_h", "abs_h"])?;
        for (j, h) in self.values.iter().enumerate() {
            let nu = self.grid.frequency(j);
            let nu = physical.map_or(nu, |u| u.freq_to_physical(nu));
            w.numbers(&[nu, h.re, h.im, h.norm()])?;
        }
        Ok(())
    }
}

/// `H(nu)` for a comb on a grid.
pub fn build_transfer(comb: &CombSpec, medium: &MediumSpec, grid: FrequencyGrid, model: Model) -> Result<TransferFunction> {
    MediumResponse::new(*comb, *medium, model)?.sample(grid, Execution::default())
}

/// Gaussian input `E0 exp(i phase) exp(-sigma^2 (t - center)^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSpec {
    pub amplitude: f64,
    pub sigma: f64,
    pub center: f64,
    pub phase: f64,
}

impl PulseSpec {
    pub fn gaussian(sigma: f64) -> Self {
        Self {
            amplitude: 1.0,
            sigma,
            center: 0.0,
            phase: 0.0,
        }
    }

    pub fn centered_at(mut self, t: f64) -> Self {
        self.center = t;
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn envelope(&self, t: f64) -> Complex64 {
        let s = self.sigma * (t - self.center);
        Complex64::from_polar(self.amplitude * (-s * s).exp(), self.phase)
    }

    /// Analytic spectrum `E0 e^{i phase} (sqrt(pi)/sigma) exp(-nu^2/4sigma^2) e^{i nu center}`.
    pub fn spectrum_at(&self, nu: f64) -> Complex64 {
        let mag = self.amplitude * PI.sqrt() / self.sigma * (-nu * nu / (4.0 * self.sigma * self.sigma)).exp();
        Complex64::from_polar(mag, self.phase + nu * self.center)
    }
}

/// Normalization carried along with a field: `I0 = amplitude^2`, and the
/// fraction `band_gain` of a unit Gaussian peak that survives the spectral
/// window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reference {
    pub amplitude: f64,
    pub band_gain: f64,
    pub sigma: f64,
    /// Arrival time of the (first) input pulse; delays are counted from here.
    pub origin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
    pub reference: Reference,
}

impl Spectrum {
    pub fn scaled(&self, c: Complex64) -> Spectrum {
        Spectrum {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            reference: self.reference,
        }
    }

    /// Sum of two fields on the same grid; keeps `self`'s reference.
    pub fn add(&self, other: &Spectrum) -> Result<Spectrum> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Spectrum {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            reference: self.reference,
        })
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = reference;
        self
    }

    pub fn to_time(&self) -> TimeSignal {
        TimeSignal::from_spectrum(self.grid, self.values.clone(), self.reference)
    }
}

fn same_grid(a: &FrequencyGrid, b: &FrequencyGrid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!("{a:?} vs {b:?}")))
    }
}

/// Samples the analytic Gaussian spectrum on `grid`.
pub fn gaussian_spectrum(pulse: &PulseSpec, grid: FrequencyGrid) -> Result<Spectrum> {
    if !(pulse.sigma > 0.0 && pulse.sigma.is_finite()) {
        return Err(Error::domain("sigma", pulse.sigma, "sigma > 0"));
    }
    if !(pulse.amplitude >= 0.0 && pulse.amplitude.is_finite()) {
        return Err(Error::domain("amplitude", pulse.amplitude, "amplitude >= 0"));
    }
    grid.check_resolution(pulse.sigma)?;
    if grid.half_span < 2.0 * pulse.sigma {
        return Err(Error::Aliasing(format!(
            "spectral half-span {} cuts the pulse spectrum (need >= 2 sigma = {})",
            grid.half_span,
            2.0 * pulse.sigma
        )));
    }
    let extent = pulse.center.abs() + 10.0 / pulse.sigma;
    if extent > 0.25 * grid.time_window() {
        return Err(Error::Aliasing(format!(
            "pulse at t = {} does not fit the time window {}",
            pulse.center,
            grid.time_window()
        )));
    }
    let values = (0..grid.samples).map(|j| pulse.spectrum_at(grid.frequency(j))).collect();
    let band_sum: f64 = (0..grid.samples)
        .map(|j| {
            let nu = grid.frequency(j);
            (-nu * nu / (4.0 * pulse.sigma * pulse.sigma)).exp()
        })
        .sum();
    let band_gain = grid.spacing() / (2.0 * PI) * PI.sqrt() / pulse.sigma * band_sum;
    Ok(Spectrum {
        grid,
        values,
        reference: Reference {
            amplitude: pulse.amplitude,
            band_gain,
            sigma: pulse.sigma,
            origin: pulse.center,
        },
    })
}

/// Complex envelope on the conjugate time grid, time-ordered: sample `i` is
/// at `t = (i - M/2) dt`. The spectrum is kept for exact off-grid evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSignal {
    pub grid: FrequencyGrid,
    pub spectrum: Vec<Complex64>,
    pub samples: Vec<Complex64>,
    pub reference: Reference,
}

impl TimeSignal {
    pub fn from_spectrum(grid: FrequencyGrid, spectrum: Vec<Complex64>, reference: Reference) -> Self {
        let m = grid.samples;
        let mut buf = spectrum.clone();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let scale = grid.spacing() / (2.0 * PI);
        let mut samples = vec![Complex64::new(0.0, 0.0); m];
        for (k, v) in buf.into_iter().enumerate() {
            // bin k is time k*dt (k < M/2) or (k - M)*dt
            let i = (k + m / 2) % m;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            samples[i] = v * (scale * sign);
        }
        Self {
            grid,
            spectrum,
            samples,
            reference,
        }
    }

    pub fn from_samples(grid: FrequencyGrid, samples: Vec<Complex64>, reference: Reference) -> Self {
        let m = grid.samples;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (i, s) in samples.iter().enumerate() {
            let k = (i + m / 2) % m;
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            buf[k] = s * sign;
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        let dt = grid.time_step();
        let spectrum = buf.into_iter().map(|v| v * dt).collect();
        Self {
            grid,
            spectrum,
            samples,
            reference,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.grid.time_step()
    }

    pub fn time(&self, i: usize) -> f64 {
        (i as f64 - (self.grid.samples / 2) as f64) * self.dt()
    }

    /// Nearest sample index to `t`, clamped to the window.
    pub fn index_of(&self, t: f64) -> usize {
        let i = (t / self.dt()).round() + (self.grid.samples / 2) as f64;
        i.clamp(0.0, (self.grid.samples - 1) as f64) as usize
    }

    /// Exact band-limited field at an arbitrary time.
    pub fn at(&self, t: f64) -> Complex64 {
        let step = Complex64::from_polar(1.0, -self.grid.spacing() * t);
        let mut phase = Complex64::from_polar(1.0, self.grid.half_span * t);
        let mut acc = Complex64::new(0.0, 0.0);
        for v in &self.spectrum {
            acc += v * phase;
            phase *= step;
        }
        acc * (self.grid.spacing() / (2.0 * PI))
    }

    /// Scale mapping raw field values to units of the reference `E0`.
    fn unit(&self) -> f64 {
        1.0 / (self.reference.band_gain * self.reference.amplitude)
    }

    /// Field at `t` in units of `E0`.
    pub fn normalized_at(&self, t: f64) -> Complex64 {
        self.at(t) * self.unit()
    }

    pub fn normalized(&self, i: usize) -> Complex64 {
        self.samples[i] * self.unit()
    }

    /// `|E|^2 / I0` at sample `i`.
    pub fn intensity(&self, i: usize) -> f64 {
        self.normalized(i).norm_sqr()
    }

    /// `∫ |E|^2 dt` over the window.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.dt()
    }

    /// Fraction of the energy in the outer 1/64 of the window on each side.
    pub fn edge_fraction(&self) -> f64 {
        let m = self.samples.len();
        let e = m / 64;
        let total: f64 = self.samples.iter().map(|s| s.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let edge: f64 = self.samples[..e]
            .iter()
            .chain(&self.samples[m - e..])
            .map(|s| s.norm_sqr())
            .sum();
        edge / total
    }

    /// Zeroes everything outside `[start, end)`, so adjacent gates partition
    /// the samples.
    pub fn gate(&self, start: f64, end: f64) -> TimeSignal {
        let samples = (0..self.len())
            .map(|i| {
                let t = self.time(i);
                if t >= start && t < end {
                    self.samples[i]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        TimeSignal::from_samples(self.grid, samples, self.reference)
    }

    /// Delays the field by `delay` and multiplies it by `exp(i phase)`.
    pub fn shifted(&self, delay: f64, phase: f64) -> TimeSignal {
        let spectrum = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(j, v)| v * Complex64::from_polar(1.0, self.grid.frequency(j) * delay + phase))
            .collect();
        TimeSignal::from_spectrum(self.grid, spectrum, self.reference)
    }

    pub fn add(&self, other: &TimeSignal) -> Result<TimeSignal> {
        same_grid(&self.grid, &other.grid)?;
        Ok(TimeSignal {
            grid: self.grid,
            spectrum: self.spectrum.iter().zip(&other.spectrum).map(|(a, b)| a + b).collect(),
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            reference: self.reference,
        })
    }

    pub fn to_spectrum(&self) -> Spectrum {
        Spectrum {
            grid: self.grid,
            values: self.spectrum.clone(),
            reference: self.reference,
        }
    }

    /// Columns `t_over_T,intensity_over_I0,real_amp,imag_amp` over
    /// `[t_start, t_end]`; amplitudes in units of `E0`.
    pub fn write_trace_csv<W: Write>(
        &self,
        out: W,
        delay: f64,
        t_start: f64,
        t_end: f64,
        physical: Option<NormalizedUnits>,
    ) -> io::Result<()> {
        let mut w = CsvWriter::new(out);
        match physical {
            None => w.header(&["t_over_T", "intensity_over_I0", "real_amp", "imag_amp"])?,
            Some(_) => w.header(&["t", "intensity_over_I0", "real_amp", "imag_amp"])?,
        }
        let lo = self.index_of(t_start);
        let hi = self.index_of(t_end);
        for i in lo..=hi {
            let a = self.normalized(i);
            let t = match physical {
                Some(u) => u.time_to_physical(self.time(i) / delay),
                None => self.time(i) / delay,
            };
            w.numbers(&[t, a.norm_sqr(), a.re, a.im])?;
        }
        Ok(())
    }
}

/// Multiplies by `H` and returns to the time domain. Fails with
/// [`Error::WindowOverflow`] when more than [`OVERFLOW_THRESHOLD`] of the
/// energy reaches the window edge, unless the transfer has sharp edges, whose
/// `1/k` echo tail always reaches it (then the fraction is only logged).
pub fn propagate(spectrum: &Spectrum, transfer: &TransferFunction) -> Result<TimeSignal> {
    same_grid(&spectrum.grid, &transfer.grid)?;
    let out: Vec<Complex64> = spectrum
        .values
        .iter()
        .zip(&transfer.values)
        .map(|(e, h)| e * h)
        .collect();
    let signal = TimeSignal::from_spectrum(spectrum.grid, out, spectrum.reference);
    let fraction = signal.edge_fraction();
    if fraction > OVERFLOW_THRESHOLD {
        if transfer.sharp_edges {
            log::debug!("sharp-edged comb: {fraction:e} of the energy at the window edge");
        } else {
            return Err(Error::WindowOverflow { fraction });
        }
    }
    Ok(signal)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainEntry {
    pub k: usize,
    /// Field at the pulse maximum in units of `E0`.
    pub amplitude: Complex64,
    /// Peak intensity in units of `I0`.
    pub intensity: f64,
    /// Nominal arrival `origin + k T`.
    pub arrival: f64,
    /// Located intensity maximum.
    pub peak_time: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PulseTrain {
    pub entries: Vec<TrainEntry>,
    pub warnings: Vec<String>,
}

impl PulseTrain {
    pub fn intensity(&self, k: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.k == k).map(|e| e.intensity)
    }

    pub fn amplitude(&self, k: usize) -> Option<Complex64> {
        self.entries.iter().find(|e| e.k == k).map(|e| e.amplitude)
    }

    pub fn total_intensity(&self) -> f64 {
        self.entries.iter().map(|e| e.intensity).sum()
    }

    /// Delay index (k >= 1) of the strongest echo.
    pub fn dominant_echo(&self) -> Option<usize> {
        self.entries
            .iter()
            .filter(|e| e.k >= 1)
            .max_by(|a, b| a.intensity.total_cmp(&b.intensity))
            .map(|e| e.k)
    }

    /// Columns `k,re_amp,im_amp,intensity`.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = CsvWriter::new(out);
        w.header(&["k", "re_amp", "im_amp", "intensity"])?;
        for e in &self.entries {
            w.row(&[
                Field::from(e.k),
                e.amplitude.re.into(),
                e.amplitude.im.into(),
                e.intensity.into(),
            ])?;
        }
        Ok(())
    }
}

/// Options for [`extract_train`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extraction {
    /// Echo spacing `T`.
    pub delay: f64,
    pub k_max: usize,
    /// Search window per pulse as a fraction of `T`, centered on `origin + kT`.
    pub window_fraction: f64,
    /// Time of the `k = 0` pulse; `None` uses the signal's reference origin.
    pub origin: Option<f64>,
}

impl Extraction {
    pub fn new(delay: f64, k_max: usize) -> Self {
        Self {
            delay,
            k_max,
            window_fraction: 1.0,
            origin: None,
        }
    }

    pub fn origin(mut self, t: f64) -> Self {
        self.origin = Some(t);
        self
    }

    pub fn window_fraction(mut self, w: f64) -> Self {
        self.window_fraction = w;
        self
    }
}

/// Locates the pulse maximum near each `origin + kT`: discrete maximum,
/// three-point parabolic refinement, then exact evaluation of the field there.
pub fn extract_train(signal: &TimeSignal, opts: Extraction) -> Result<PulseTrain> {
    let sigma = signal.reference.sigma;
    if sigma * opts.delay < MIN_SEPARATION {
        return Err(Error::Overlap(format!(
            "sigma*T = {} < {MIN_SEPARATION}: echoes are not separated",
            sigma * opts.delay
        )));
    }
    if !(opts.window_fraction > 0.0 && opts.window_fraction <= 1.0) {
        return Err(Error::domain("window_fraction", opts.window_fraction, "0 < w <= 1"));
    }
    let origin = opts.origin.unwrap_or(signal.reference.origin);
    let half = 0.5 * opts.window_fraction * opts.delay;
    let last = origin + opts.k_max as f64 * opts.delay + half;
    if last >= 0.5 * signal.grid.time_window() - signal.dt() {
        return Err(Error::WindowOverflow { fraction: 1.0 });
    }
    let dt = signal.dt();
    let mut entries = Vec::with_capacity(opts.k_max + 1);
    for k in 0..=opts.k_max {
        let arrival = origin + k as f64 * opts.delay;
        let lo = signal.index_of(arrival - half);
        let hi = signal.index_of(arrival + half);
        let imax = (lo..=hi)
            .max_by(|a, b| signal.intensity(*a).total_cmp(&signal.intensity(*b)))
            .unwrap_or(lo);
        let mut peak_time = signal.time(imax);
        if imax > 0 && imax + 1 < signal.len() {
            let (ym, y0, yp) = (
                signal.intensity(imax - 1),
                signal.intensity(imax),
                signal.intensity(imax + 1),
            );
            let curv = ym - 2.0 * y0 + yp;
            if curv < 0.0 {
                peak_time += (0.5 * (ym - yp) / curv).clamp(-0.5, 0.5) * dt;
            }
        }
        let amplitude = signal.normalized_at(peak_time);
        entries.push(TrainEntry {
            k,
            amplitude,
            intensity: amplitude.norm_sqr(),
            arrival,
            peak_time,
        });
    }
    let mut warnings = Vec::new();
    for pair in entries.windows(2) {
        let smaller = pair[0].intensity.min(pair[1].intensity);
        if smaller < 1e-6 {
            continue;
        }
        let lo = signal.index_of(pair[0].peak_time) + 1;
        let hi = signal.index_of(pair[1].peak_time);
        let valley = (lo..hi).map(|i| signal.intensity(i)).fold(f64::INFINITY, f64::min);
        if valley.is_finite() && valley > 0.01 * smaller {
            let msg = format!(
                "pulses k={} and k={} overlap: valley {:.3e} vs peak {:.3e}",
                pair[0].k, pair[1].k, valley, smaller
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok(PulseTrain { entries, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::for_pulse(DEFAULT_SIGMA)
    }

    #[test]
    fn empty_medium_is_identity() {
        let comb = CombSpec::square(1.0, 0.2);
        let h = build_transfer(&comb, &MediumSpec::new(0.0), grid(), Model::ideal()).unwrap();
        assert!(h.values.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn beer_law_at_peak_center() {
        let comb = CombSpec::square(1.0, 0.2);
        let r = MediumResponse::new(comb, MediumSpec::new(10.0), Model::IdealExact).unwrap();
        assert!((r.transfer(1.0).unwrap().norm() - (-5.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn broadened_window_transmission() {
        let comb = CombSpec::square(1.0, 0.1).gamma(0.01);
        let r = MediumResponse::new(comb, MediumSpec::new(20.0), Model::Broadened).unwrap();
        let t = r.transfer(0.0).unwrap().norm_sqr();
        assert!((t - 0.97).abs() < 0.005, "{t}");
    }

    #[test]
    fn coarse_grid_rejected() {
        let comb = CombSpec::square(1.0, 0.2);
        let g = FrequencyGrid::new(20.0, 256).unwrap();
        assert!(matches!(
            build_transfer(&comb, &MediumSpec::new(1.0), g, Model::ideal()),
            Err(Error::GridResolution { .. })
        ));
        assert!(FrequencyGrid::new(20.0, 1000).is_err());
    }

    #[test]
    fn gaussian_spectrum_peak_and_shift() {
        let g = grid();
        let s = gaussian_spectrum(&PulseSpec::gaussian(5.0), g).unwrap();
        let mid = g.samples / 2;
        assert_eq!(g.frequency(mid), 0.0);
        assert!(s.values.iter().all(|v| v.im.abs() < 1e-15 && v.re > 0.0));
        let peak = s.values.iter().map(|v| v.re).fold(0.0, f64::max);
        assert_eq!(peak, s.values[mid].re);
        let t = PI;
        let shifted = gaussian_spectrum(&PulseSpec::gaussian(5.0).centered_at(t), g).unwrap();
        for j in (0..g.samples).step_by(97) {
            let want = s.values[j] * Complex64::from_polar(1.0, g.frequency(j) * t);
            assert!((shifted.values[j] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn time_round_trip() {
        let g = FrequencyGrid::new(8.0 * DEFAULT_SIGMA, DEFAULT_SAMPLES).unwrap();
        let p = PulseSpec::gaussian(DEFAULT_SIGMA).centered_at(0.7).with_phase(0.3);
        let sig = gaussian_spectrum(&p, g).unwrap().to_time();
        let err: f64 = (0..sig.len())
            .map(|i| (sig.samples[i] - p.envelope(sig.time(i))).norm_sqr())
            .sum::<f64>()
            / sig.len() as f64;
        assert!(err.sqrt() < 1e-9, "{}", err.sqrt());
        let back = TimeSignal::from_samples(g, sig.samples.clone(), sig.reference);
        let diff: f64 = back.spectrum.iter().zip(&sig.spectrum).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        let e = (sig.at(0.7) - p.envelope(0.7)).norm();
        assert!(e < 1e-7, "{e}");
    }

    #[test]
    fn identity_train() {
        let g = grid();
        let s = gaussian_spectrum(&PulseSpec::gaussian(DEFAULT_SIGMA), g).unwrap();
        let out = propagate(&s, &TransferFunction::identity(g)).unwrap();
        let train = extract_train(&out, Extraction::new(PI, 3)).unwrap();
        assert!((train.entries[0].amplitude - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        for e in &train.entries[1..] {
            assert!(e.intensity < 1e-6);
        }
        assert!(train.warnings.is_empty());
    }

    #[test]
    fn unseparated_pulses_rejected() {
        let g = FrequencyGrid::for_pulse(1.0);
        let s = gaussian_spectrum(&PulseSpec::gaussian(1.0), FrequencyGrid::new(g.half_span, 1 << 16).unwrap()).unwrap();
        let out = s.to_time();
        assert!(matches!(extract_train(&out, Extraction::new(PI, 2)), Err(Error::Overlap(_))));
    }
}
