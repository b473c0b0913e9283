//! Qubit sensing model: RF field strength, accumulated phase, and the
//! diagonal multi-sensor evolution it induces.
//!
//! Each sensor is a qubit whose energy splitting shifts with the local field
//! of the transmitter, so over the sensing window it accumulates a phase
//! proportional to field strength. The model here:
//!
//! - [`field_strength`]: isotropic-radiator field E = √(30·P)/d, times a
//!   multiplicative noise factor (1 + noise).
//! - [`phase_shift`]: the coupling constant is never represented; it is
//!   absorbed by a calibration stating that a noiseless sensor at the
//!   calibration distance (5 m) accrues exactly the calibration phase (2π),
//!   giving φ(d) = 2π · (5/d) · (1 + noise).
//! - [`sensor_unitary`]: per-qubit evolution diag(e^{−iφ/2}, e^{+iφ/2}).
//! - [`evolve`]: the tensor product of all per-sensor unitaries applied as m
//!   local diagonal updates, never materializing the 2^m × 2^m matrix.
//! - [`uniform_initial`]: the non-entangled uniform superposition the
//!   localization schemes start from.
//!
//! Phase is not wrapped modulo 2π before building the unitary; the unitary
//! realizes any aliasing itself. In particular at exactly d = 5 m the phase
//! 2π yields a per-qubit −I, globally indistinguishable from no evolution on
//! a single sensor; the model keeps this as written.
//!
//! All functions are pure; noise values come from the caller (see
//! [`sample_noises`]), drawn independently per sensor per sample.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::Point;
use crate::qmath::{Complex64, ComplexMatrix, Rng, StateVector};

#[allow(unused_imports)]
use num_traits::Float;

/// Minimum legal transmitter-sensor separation in meters (inclusive: a
/// distance of exactly 5 m is legal).
pub const MIN_SEPARATION_M: f64 = 5.0;

/// Errors from the sensing model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SensingError {
    /// Transmitter-sensor distance below the 5 m minimum separation.
    #[error("transmitter-sensor distance {distance} m is below the {MIN_SEPARATION_M} m minimum")]
    TooClose { distance: f64 },
    /// Sensor, noise, and state-vector counts disagree (or are zero).
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Qubit count outside the supported range.
    #[error("qubit count {got} outside supported range {min}..={max}")]
    OutOfRange { got: usize, min: usize, max: usize },
}

/// Physical constants of the sensing scenario.
///
/// Invariants: every field strictly positive except `noise_halfwidth`, which
/// may be zero (noiseless runs); `calibration_distance` is at least the 5 m
/// minimum separation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensingConfig {
    /// Transmitter power in watts.
    pub tx_power: f64,
    /// Sensing window in seconds.
    pub sensing_time: f64,
    /// Distance at which the calibration phase is accrued, in meters.
    pub calibration_distance: f64,
    /// Phase accrued at the calibration distance, in radians.
    pub calibration_phase: f64,
    /// Half-width of the uniform multiplicative noise (dimensionless).
    pub noise_halfwidth: f64,
}

impl Default for SensingConfig {
    /// The reference scenario: 0.1 µW transmitter, 1 ms sensing window, 2π
    /// of phase at 5 m, ±5% multiplicative noise.
    fn default() -> Self {
        Self {
            tx_power: 1e-7,
            sensing_time: 1e-3,
            calibration_distance: 5.0,
            calibration_phase: core::f64::consts::TAU,
            noise_halfwidth: 0.05,
        }
    }
}

impl SensingConfig {
    /// Checks the struct invariants; call after building one from user input.
    pub fn validate(&self) -> Result<(), SensingError> {
        let positive = self.tx_power > 0.0
            && self.sensing_time > 0.0
            && self.calibration_distance >= MIN_SEPARATION_M
            && self.calibration_phase > 0.0
            && self.noise_halfwidth >= 0.0;
        if positive {
            Ok(())
        } else {
            Err(SensingError::OutOfRange { got: 0, min: 1, max: 16 })
        }
    }
}

/// Accumulated sensing phase in radians; always nonnegative and at most
/// `calibration_phase · (1 + noise_halfwidth)` under legal inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseShift {
    value: f64,
}

impl PhaseShift {
    /// Phase value in radians.
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Field strength at `distance` meters from the transmitter, in volts per
/// meter: √(30·P)/d · (1 + noise).
///
/// `noise` must satisfy |noise| ≤ `cfg.noise_halfwidth` (caller contract;
/// [`sample_noises`] always does).
///
/// Returns `TooClose` when `distance` is under the 5 m minimum separation.
pub fn field_strength(distance: f64, noise: f64, cfg: &SensingConfig) -> Result<f64, SensingError> {
    if !(distance >= MIN_SEPARATION_M) {
        return Err(SensingError::TooClose { distance });
    }
    debug_assert!(noise.abs() <= cfg.noise_halfwidth + 1e-15, "noise outside configured range");
    Ok((30.0 * cfg.tx_power).sqrt() / distance * (1.0 + noise))
}

/// Phase accumulated by a sensor at `distance` meters over the sensing
/// window: `calibration_phase · (calibration_distance / distance) · (1 + noise)`.
///
/// The field-to-phase coupling is fixed by calibration (the noiseless sensor
/// at `calibration_distance` accrues exactly `calibration_phase`), so the
/// physical coupling constant never appears numerically. The 1/d field decay
/// makes the phase monotone decreasing in distance at fixed noise.
///
/// Returns `TooClose` when `distance` is under the 5 m minimum separation.
pub fn phase_shift(distance: f64, noise: f64, cfg: &SensingConfig) -> Result<PhaseShift, SensingError> {
    if !(distance >= MIN_SEPARATION_M) {
        return Err(SensingError::TooClose { distance });
    }
    debug_assert!(noise.abs() <= cfg.noise_halfwidth + 1e-15, "noise outside configured range");
    let value = cfg.calibration_phase * (cfg.calibration_distance / distance) * (1.0 + noise);
    Ok(PhaseShift { value })
}

/// Single-sensor evolution over the sensing window:
/// diag(e^{−iφ/2}, e^{+iφ/2}).
///
/// φ = 0 gives the identity; φ = π gives diag(−i, +i); φ = 2π gives −I (a
/// global phase on one sensor, but a relative phase inside a register).
pub fn sensor_unitary(phi: PhaseShift) -> ComplexMatrix {
    let half = phi.value() / 2.0;
    let mut u = ComplexMatrix::zeros(2, 2);
    u.set(0, 0, Complex64::new(half.cos(), -half.sin()));
    u.set(1, 1, Complex64::new(half.cos(), half.sin()));
    u
}

/// Non-entangled uniform superposition over `m` qubits: all 2^m amplitudes
/// equal 2^{−m/2}.
///
/// Returns `OutOfRange` unless 1 ≤ m ≤ 16.
pub fn uniform_initial(m: usize) -> Result<StateVector, SensingError> {
    if !(1..=16).contains(&m) {
        return Err(SensingError::OutOfRange { got: m, min: 1, max: 16 });
    }
    let dim = 1usize << m;
    let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    Ok(StateVector::new(vec![amp; dim]).expect("power-of-two dimension"))
}

/// Applies the joint evolution (⊗ᵢ Uᵢ)|initial⟩ of one sensor per qubit.
///
/// Sensor `s` acts on qubit `s` (qubit 0 is the most significant index
/// bit). The product of diagonal unitaries is applied as m local updates,
/// never materializing the 2^m × 2^m matrix, so the per-basis-state
/// magnitudes |amplitude_k| are exactly preserved and the norm holds within
/// 1e-10.
///
/// Returns `DimensionMismatch` when sensor count, noise count, and qubit
/// count disagree or are zero; `TooClose` when any transmitter-sensor
/// distance is under 5 m.
pub fn evolve(
    initial: &StateVector,
    tx: Point,
    sensors: &[Point],
    noises: &[f64],
    cfg: &SensingConfig,
) -> Result<StateVector, SensingError> {
    let m = initial.qubits();
    if m == 0 || sensors.is_empty() {
        return Err(SensingError::DimensionMismatch { expected: 1, got: 0 });
    }
    if sensors.len() != m {
        return Err(SensingError::DimensionMismatch { expected: m, got: sensors.len() });
    }
    if noises.len() != m {
        return Err(SensingError::DimensionMismatch { expected: m, got: noises.len() });
    }
    let mut out = initial.clone();
    let dim = out.dim();
    for (s, (sensor, &noise)) in sensors.iter().zip(noises).enumerate() {
        let phi = phase_shift(tx.distance(sensor), noise, cfg)?;
        let half = phi.value() / 2.0;
        let f0 = Complex64::new(half.cos(), -half.sin());
        let f1 = f0.conj();
        // Qubit s reads bit (m-1-s) of the basis index.
        let bit = 1usize << (m - 1 - s);
        let amps = out.amplitudes_mut();
        for (k, amp) in amps.iter_mut().enumerate().take(dim) {
            *amp *= if k & bit == 0 { f0 } else { f1 };
        }
    }
    Ok(out)
}

/// Draws `m` independent noise values, uniform on
/// [−noise_halfwidth, +noise_halfwidth], one per sensor.
pub fn sample_noises(m: usize, cfg: &SensingConfig, rng: &mut Rng) -> Vec<f64> {
    (0..m)
        .map(|_| rng.uniform_range(-cfg.noise_halfwidth, cfg.noise_halfwidth))
        .collect()
}
