//! Storage protocols built from one or two passes through the same comb.
//!
//! In the two-pass protocol the prompt pulse of the first pass is sent
//! through an identical comb and its first echo is recombined with the first
//! echo of the first pass. Recombination is ideal (equal arrival time and
//! phase) unless a [`Mismatch`] is supplied.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::comb::CombSpec;
use crate::csv::{CsvWriter, Field};
use crate::propagation::{
    self, extract_train, gaussian_spectrum, Extraction, FrequencyGrid, MediumResponse, MediumSpec, Model,
    PulseSpec, PulseTrain, Reference, Spectrum, TimeSignal, TrainEntry, TransferFunction,
};
use crate::train::shape_coefficients;
use crate::{Error, Result};

/// Energies of the field components, as fractions of the input energy.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct EnergyLedger {
    pub input: f64,
    /// Everything leaving the first pass.
    pub first_pass: f64,
    pub first_prompt: f64,
    pub first_echoes: f64,
    /// Prompt left after the second pass (lost).
    pub second_prompt: f64,
    pub second_echoes: f64,
    /// Echo field after recombination.
    pub combined_echoes: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolResult {
    /// Prompt amplitude after the last pass, in units of `E0`.
    pub prompt_out: Complex64,
    /// Train of each pass.
    pub echoes: Vec<PulseTrain>,
    /// Recombined echo train (two-pass simulation only).
    pub combined: Option<PulseTrain>,
    pub combined_echo_intensity: f64,
    pub efficiency: f64,
    pub ledger: Option<EnergyLedger>,
}

fn entry(k: usize, amplitude: f64, delay: f64) -> TrainEntry {
    TrainEntry {
        k,
        amplitude: Complex64::new(amplitude, 0.0),
        intensity: amplitude * amplitude,
        arrival: k as f64 * delay,
        peak_time: k as f64 * delay,
    }
}

fn closed_parts(comb: &CombSpec, medium: &MediumSpec) -> Result<(f64, f64)> {
    comb.validate()?;
    medium.validate()?;
    let (a0, a1) = shape_coefficients(comb.shape, comb.finesse(), comb.gamma_t())?;
    let d = medium.peak_optical_depth;
    Ok(((-a0 * d / 2.0).exp(), a1 * d / 2.0))
}

/// Two-term single pass: prompt `C0 = exp(-A0 d/2)`, echo `C0 A1 d/2`,
/// with `A1` carrying `exp(-gamma T)`.
pub fn single_pass_closed(comb: &CombSpec, medium: &MediumSpec) -> Result<ProtocolResult> {
    let (c0, g) = closed_parts(comb, medium)?;
    let t = comb.delay_time();
    let c1 = c0 * g;
    Ok(ProtocolResult {
        prompt_out: Complex64::new(c0, 0.0),
        echoes: vec![PulseTrain {
            entries: vec![entry(0, c0, t), entry(1, c1, t)],
            warnings: Vec::new(),
        }],
        combined: None,
        combined_echo_intensity: c1 * c1,
        efficiency: c1 * c1,
        ledger: None,
    })
}

/// Two-term two-pass result: the recombined echo has amplitude
/// `(A1 d/2)(exp(-A0 d/2) + exp(-A0 d))`.
pub fn two_pass_closed(comb: &CombSpec, medium: &MediumSpec) -> Result<ProtocolResult> {
    let (c0, g) = closed_parts(comb, medium)?;
    let t = comb.delay_time();
    let amp = g * (c0 + c0 * c0);
    Ok(ProtocolResult {
        prompt_out: Complex64::new(c0 * c0, 0.0),
        echoes: vec![
            PulseTrain {
                entries: vec![entry(0, c0, t), entry(1, c0 * g, t)],
                warnings: Vec::new(),
            },
            PulseTrain {
                entries: vec![entry(0, c0 * c0, t), entry(1, c0 * c0 * g, t)],
                warnings: Vec::new(),
            },
        ],
        combined: None,
        combined_echo_intensity: amp * amp,
        efficiency: amp * amp,
        ledger: None,
    })
}

/// Delay and phase error of the second arm at recombination.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mismatch {
    pub delay: f64,
    pub phase: f64,
}

/// Full-simulation driver for the protocols.
///
/// `Model::ideal()` (the default-length series) is replaced by
/// [`Model::windowed_series`] for the grid in use; other models are used
/// as given.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub response: MediumResponse,
    /// `None` uses `(-4 sigma, 4 sigma)` with `2^14` samples.
    pub grid: Option<FrequencyGrid>,
    pub k_max: usize,
    pub mismatch: Mismatch,
    /// Largest accepted `|mismatch.delay|`; default `T/4`.
    pub delay_tolerance: f64,
}

impl Simulation {
    pub fn new(comb: CombSpec, medium: MediumSpec, model: Model) -> Result<Self> {
        let response = MediumResponse::new(comb, medium, model)?;
        Ok(Self {
            response,
            grid: None,
            k_max: 3,
            mismatch: Mismatch::default(),
            delay_tolerance: 0.25 * comb.delay_time(),
        })
    }

    pub fn grid(mut self, grid: FrequencyGrid) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn mismatch(mut self, mismatch: Mismatch) -> Self {
        self.mismatch = mismatch;
        self
    }

    pub fn delay_tolerance(mut self, tolerance: f64) -> Self {
        self.delay_tolerance = tolerance;
        self
    }

    fn delay(&self) -> f64 {
        self.response.comb.delay_time()
    }

    fn grid_for(&self, sigma: f64) -> FrequencyGrid {
        self.grid.unwrap_or_else(|| FrequencyGrid::for_pulse(sigma))
    }

    fn transfer(&self, grid: FrequencyGrid) -> Result<TransferFunction> {
        let model = match self.response.model {
            // the window-matched series is what the grid can represent
            Model::IdealSeries { harmonics } if harmonics == crate::susceptibility::DEFAULT_HARMONICS => {
                Model::windowed_series(grid, self.response.comb.nu0)
            }
            m => m,
        };
        MediumResponse { model, ..self.response }.sample(grid, Default::default())
    }

    fn check_alignment(&self) -> Result<()> {
        let m = self.mismatch;
        if !m.delay.is_finite() || !m.phase.is_finite() {
            return Err(Error::Alignment("mismatch must be finite".into()));
        }
        if m.delay.abs() > self.delay_tolerance {
            return Err(Error::Alignment(format!(
                "arm delay mismatch {} exceeds tolerance {}",
                m.delay, self.delay_tolerance
            )));
        }
        Ok(())
    }

    pub fn single_pass(&self, input: &PulseSpec) -> Result<ProtocolResult> {
        let grid = self.grid_for(input.sigma);
        let h = self.transfer(grid)?;
        let spectrum = gaussian_spectrum(input, grid)?;
        let (result, _) = self.single_pass_field(&spectrum, &h)?;
        Ok(result)
    }

    fn single_pass_field(&self, spectrum: &Spectrum, h: &TransferFunction) -> Result<(ProtocolResult, TimeSignal)> {
        let t = self.delay();
        let t0 = spectrum.reference.origin;
        let input_energy = spectrum.to_time().energy();
        let out = propagation::propagate(spectrum, h)?;
        let train = extract_train(&out, Extraction::new(t, self.k_max))?;
        let echoes = out.gate(t0 + 0.5 * t, f64::INFINITY);
        let prompt = out.gate(t0 - 0.5 * t, t0 + 0.5 * t);
        let eff = train.intensity(1).unwrap_or(0.0);
        let ledger = EnergyLedger {
            input: 1.0,
            first_pass: out.energy() / input_energy,
            first_prompt: prompt.energy() / input_energy,
            first_echoes: echoes.energy() / input_energy,
            ..Default::default()
        };
        Ok((
            ProtocolResult {
                prompt_out: train.amplitude(0).unwrap_or_default(),
                echoes: vec![train],
                combined: None,
                combined_echo_intensity: eff,
                efficiency: eff,
                ledger: Some(ledger),
            },
            out,
        ))
    }

    pub fn two_pass(&self, input: &PulseSpec) -> Result<ProtocolResult> {
        let grid = self.grid_for(input.sigma);
        let h = self.transfer(grid)?;
        let spectrum = gaussian_spectrum(input, grid)?;
        Ok(self.two_pass_field(&spectrum, &h)?.0)
    }

    /// Returns the result and the recombined echo field.
    fn two_pass_field(&self, spectrum: &Spectrum, h: &TransferFunction) -> Result<(ProtocolResult, TimeSignal)> {
        self.check_alignment()?;
        let t = self.delay();
        let t0 = spectrum.reference.origin;
        let input_energy = spectrum.to_time().energy();
        let (first, out1) = self.single_pass_field(spectrum, h)?;
        let prompt1 = out1.gate(t0 - 0.5 * t, t0 + 0.5 * t);
        let echoes1 = out1.gate(t0 + 0.5 * t, f64::INFINITY);
        let out2 = propagation::propagate(&prompt1.to_spectrum(), h)?;
        let prompt2 = out2.gate(t0 - 0.5 * t, t0 + 0.5 * t);
        let echoes2 = out2.gate(t0 + 0.5 * t, f64::INFINITY);
        let second = extract_train(&out2, Extraction::new(t, self.k_max))?;
        let arm = if self.mismatch == Mismatch::default() {
            echoes2.clone()
        } else {
            echoes2.shifted(self.mismatch.delay, self.mismatch.phase)
        };
        let combined_field = echoes1.add(&arm)?;
        let combined = extract_train(&combined_field, Extraction::new(t, self.k_max))?;
        let eff = combined.intensity(1).unwrap_or(0.0);
        let mut ledger = first.ledger.unwrap_or_default();
        ledger.second_prompt = prompt2.energy() / input_energy;
        ledger.second_echoes = echoes2.energy() / input_energy;
        ledger.combined_echoes = combined_field.energy() / input_energy;
        let mut echoes = first.echoes;
        let prompt_out = second.amplitude(0).unwrap_or_default();
        echoes.push(second);
        Ok((
            ProtocolResult {
                prompt_out,
                echoes,
                combined: Some(combined),
                combined_echo_intensity: eff,
                efficiency: eff,
                ledger: Some(ledger),
            },
            combined_field,
        ))
    }

    /// Simulated storage of a time-bin qubit. Bin amplitudes are read at the
    /// intensity maxima near `t0 -+ tau/2` (prompt) and `t0 + T -+ tau/2`
    /// (delayed), in units of the qubit's unit amplitude.
    pub fn timebin(&self, qubit: &TimeBinQubit, passes: Passes) -> Result<TimeBinOutput> {
        qubit.check_bins(self.delay())?;
        let grid = self.grid_for(qubit.sigma);
        let h = self.transfer(grid)?;
        let spectrum = qubit.spectrum(grid)?;
        let t = self.delay();
        let early = -0.5 * qubit.tau;
        let bins = |signal: &TimeSignal, k: usize| -> Result<(Complex64, Complex64)> {
            let train = extract_train(
                signal,
                Extraction::new(qubit.tau, 1)
                    .origin(early + k as f64 * t)
                    .window_fraction(1.0),
            )?;
            Ok((train.entries[0].amplitude, train.entries[1].amplitude))
        };
        let (prompt_field, delayed_field) = match passes {
            Passes::One => {
                let out = propagation::propagate(&spectrum, &h)?;
                (out.clone(), out)
            }
            Passes::Two => {
                self.check_alignment()?;
                let out1 = propagation::propagate(&spectrum, &h)?;
                let gate = (early - 0.5 * (t - qubit.tau), -early + 0.5 * (t - qubit.tau));
                let prompt1 = out1.gate(gate.0, gate.1);
                let out2 = propagation::propagate(&prompt1.to_spectrum(), &h)?;
                let echoes1 = out1.gate(gate.1, f64::INFINITY);
                let echoes2 = out2.gate(gate.1, f64::INFINITY);
                let arm = echoes2.shifted(self.mismatch.delay, self.mismatch.phase);
                (out2, echoes1.add(&arm)?)
            }
        };
        let (c1p, c2p) = bins(&prompt_field, 0)?;
        let (c1d, c2d) = bins(&delayed_field, 1)?;
        // the relative phase is reported separately from c2
        let unphase = Complex64::from_polar(1.0, -qubit.phi);
        Ok(TimeBinOutput::new(passes, c1p, c2p * unphase, c1d, c2d * unphase, qubit.phi))
    }
}

/// Simulated single pass on the default grid with `k_max = 3`.
pub fn single_pass(input: &PulseSpec, comb: &CombSpec, medium: &MediumSpec, model: Model) -> Result<ProtocolResult> {
    Simulation::new(*comb, *medium, model)?.single_pass(input)
}

/// Simulated two-pass protocol on the default grid with ideal recombination.
pub fn two_pass_interfere(input: &PulseSpec, comb: &CombSpec, medium: &MediumSpec, model: Model) -> Result<ProtocolResult> {
    Simulation::new(*comb, *medium, model)?.two_pass(input)
}

/// Minimum separation of neighboring bins, in units of `1/sigma`.
pub const MIN_BIN_SEPARATION: f64 = 6.0;

/// Two Gaussian pulses `c1 E(t + tau/2) + c2 e^{i phi} E(t - tau/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeBinQubit {
    pub c1: Complex64,
    pub c2: Complex64,
    pub phi: f64,
    pub tau: f64,
    pub sigma: f64,
}

impl TimeBinQubit {
    pub fn new(c1: Complex64, c2: Complex64, phi: f64, tau: f64, sigma: f64) -> Result<Self> {
        let q = Self { c1, c2, phi, tau, sigma };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let norm = self.c1.norm_sqr() + self.c2.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::domain("|c1|^2 + |c2|^2", norm, "= 1"));
        }
        if !self.phi.is_finite() {
            return Err(Error::domain("phi", self.phi, "finite"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::domain("sigma", self.sigma, "sigma > 0"));
        }
        if !(self.tau * self.sigma >= MIN_BIN_SEPARATION) {
            return Err(Error::Overlap(format!(
                "tau*sigma = {} < {MIN_BIN_SEPARATION}",
                self.tau * self.sigma
            )));
        }
        Ok(())
    }

    /// Both bins must also clear the neighboring bins after a delay `T`.
    pub fn check_bins(&self, delay: f64) -> Result<()> {
        self.validate()?;
        if !(self.tau < delay) {
            return Err(Error::domain("tau", self.tau, "tau < T"));
        }
        if (delay - self.tau) * self.sigma < MIN_BIN_SEPARATION {
            return Err(Error::Overlap(format!(
                "(T - tau)*sigma = {} < {MIN_BIN_SEPARATION}: delayed early bin meets the late prompt bin",
                (delay - self.tau) * self.sigma
            )));
        }
        Ok(())
    }

    /// Input spectrum; the reference amplitude is the qubit's unit amplitude.
    pub fn spectrum(&self, grid: FrequencyGrid) -> Result<Spectrum> {
        let early = PulseSpec::gaussian(self.sigma)
            .centered_at(-0.5 * self.tau)
            .with_amplitude(self.c1.norm())
            .with_phase(self.c1.arg());
        let late = PulseSpec::gaussian(self.sigma)
            .centered_at(0.5 * self.tau)
            .with_amplitude(self.c2.norm())
            .with_phase(self.c2.arg() + self.phi);
        let unit = gaussian_spectrum(&PulseSpec::gaussian(self.sigma), grid)?;
        let s = gaussian_spectrum(&early, grid)?.add(&gaussian_spectrum(&late, grid)?)?;
        Ok(s.with_reference(Reference {
            amplitude: 1.0,
            origin: 0.0,
            ..unit.reference
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Passes {
    One,
    Two,
}

/// Bin amplitudes after storage; `c2p`/`c2d` exclude the relative phase `phi`,
/// which is carried separately.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeBinOutput {
    pub passes: Passes,
    pub c1p: Complex64,
    pub c2p: Complex64,
    pub c1d: Complex64,
    pub c2d: Complex64,
    pub phi: f64,
    /// `|c1d|^2`, `|c2d|^2`.
    pub p1d: f64,
    pub p2d: f64,
}

impl TimeBinOutput {
    fn new(passes: Passes, c1p: Complex64, c2p: Complex64, c1d: Complex64, c2d: Complex64, phi: f64) -> Self {
        Self {
            passes,
            c1p,
            c2p,
            c1d,
            c2d,
            phi,
            p1d: c1d.norm_sqr(),
            p2d: c2d.norm_sqr(),
        }
    }

    /// Probability of finding the photon in the delayed pair.
    pub fn delayed_probability(&self) -> f64 {
        self.p1d + self.p2d
    }
}

/// Closed-form bin amplitudes. One pass: `Cjp = Cj e^{-A0 d/2}`,
/// `Cjd = Cjp A1 d/2`. Two passes: `Cjd = Cjp (1 + e^{-A0 d/2}) A1 d/2` and
/// the prompt bins carry `e^{-A0 d}`.
pub fn timebin_transform(qubit: &TimeBinQubit, comb: &CombSpec, medium: &MediumSpec, passes: Passes) -> Result<TimeBinOutput> {
    qubit.check_bins(comb.delay_time())?;
    let (c0, g) = closed_parts(comb, medium)?;
    let (c1p, c2p) = (qubit.c1 * c0, qubit.c2 * c0);
    Ok(match passes {
        Passes::One => TimeBinOutput::new(passes, c1p, c2p, c1p * g, c2p * g, qubit.phi),
        Passes::Two => {
            let f = (1.0 + c0) * g;
            TimeBinOutput::new(passes, c1p * c0, c2p * c0, c1p * f, c2p * f, qubit.phi)
        }
    })
}

/// One row of the protocol report.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolRow {
    pub protocol: String,
    pub finesse: f64,
    pub d_p: f64,
    pub gamma_over_nu0: f64,
    pub closed_form: f64,
    pub simulated: Option<f64>,
}

/// Columns `protocol,F,d_p,gamma_over_nu0,efficiency_closed_form,efficiency_simulated`;
/// a missing simulation is written as `nan`.
pub fn write_protocol_report<W: Write>(out: W, rows: &[ProtocolRow]) -> io::Result<()> {
    let mut w = CsvWriter::new(out);
    w.header(&[
        "protocol",
        "F",
        "d_p",
        "gamma_over_nu0",
        "efficiency_closed_form",
        "efficiency_simulated",
    ])?;
    for r in rows {
        w.row(&[
            Field::Text(r.protocol.clone()),
            r.finesse.into(),
            r.d_p.into(),
            r.gamma_over_nu0.into(),
            r.closed_form.into(),
            r.simulated.unwrap_or(f64::NAN).into(),
        ])?;
    }
    Ok(())
}

/// `exp(-2 gamma T)` intensity factor for a comb with half-period `nu0`.
pub fn decay_intensity_factor(gamma: f64, nu0: f64) -> f64 {
    (-2.0 * PI * gamma / nu0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::CombShape;

    #[test]
    fn closed_forms() {
        let comb = CombSpec::with_finesse(CombShape::Square, 5.0).gamma(0.005);
        let m = MediumSpec::new(10.0);
        let s = single_pass_closed(&comb, &m).unwrap();
        let t = two_pass_closed(&comb, &m).unwrap();
        assert!((s.efficiency - 0.4591).abs() < 1e-4);
        assert!((t.efficiency - 0.8590).abs() < 1e-4);
        let empty = two_pass_closed(&comb, &MediumSpec::new(0.0)).unwrap();
        assert_eq!(empty.efficiency, 0.0);
    }

    #[test]
    fn qubit_validation() {
        let h = Complex64::new(0.5f64.sqrt(), 0.0);
        assert!(TimeBinQubit::new(h, h, 0.3, 1.5, 5.0).is_ok());
        assert!(TimeBinQubit::new(h, h * 2.0, 0.3, 1.5, 5.0).is_err());
        assert!(matches!(TimeBinQubit::new(h, h, 0.3, 1.0, 5.0), Err(Error::Overlap(_))));
        let q = TimeBinQubit::new(h, h, 0.3, 2.9, 5.0).unwrap();
        assert!(matches!(q.check_bins(PI), Err(Error::Overlap(_))));
    }

    #[test]
    fn excessive_mismatch_rejected() {
        let comb = CombSpec::with_finesse(CombShape::Square, 5.0);
        let sim = Simulation::new(comb, MediumSpec::new(10.0), Model::ideal())
            .unwrap()
            .mismatch(Mismatch { delay: 1.0, phase: 0.0 });
        assert!(matches!(sim.two_pass(&PulseSpec::gaussian(5.0)), Err(Error::Alignment(_))));
    }
}
