//! Simulation and analysis of weak-pulse storage in atomic-frequency-comb
//! (AFC) media.
//!
//! Frequencies are expressed in the same unit as the comb half-period `nu0`
//! (most callers use `nu0 = 1`), and times in the reciprocal unit, so the
//! echo delay is `T = pi / nu0`. Field spectra follow the transform pair
//! `F(nu) = ∫ f(t) exp(i nu t) dt`, `f(t) = (1/2pi) ∫ F(nu) exp(-i nu t) dnu`,
//! under which a delay by `kT` multiplies a spectrum by `exp(i k pi nu / nu0)`.
//!
//! Module map:
//! - [`comb`]: population-difference profiles and finesse.
//! - [`susceptibility`]: absorption/dispersion of ideal and broadened combs,
//!   and a numerical Kramers-Kronig transform.
//! - [`propagation`]: transfer functions, DFT propagation and pulse-train
//!   extraction.
//! - [`train`]: closed-form and quadrature train coefficients.
//! - [`protocol`]: single-pass, two-pass and time-bin storage.
//! - [`sweep`]: parameter sweeps and optimum search.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod comb;
pub mod csv;
mod error;
pub mod exec;
pub mod propagation;
pub mod protocol;
pub mod quad;
pub mod susceptibility;
pub mod sweep;
pub mod train;
pub mod units;

pub use comb::{CombShape, CombSpec};
pub use error::{Error, Result};
pub use exec::Execution;
pub use propagation::{
    FrequencyGrid, MediumResponse, MediumSpec, Model, PulseSpec, PulseTrain, Spectrum,
    TimeSignal, TransferFunction,
};


pub use protocol::{ProtocolResult, TimeBinQubit};
pub use train::{Provenance, TrainCoefficients};
pub use units::NormalizedUnits;

pub use num_complex::Complex64;
