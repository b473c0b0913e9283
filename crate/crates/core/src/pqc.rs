//! Parameterized-circuit learning: U3/CU3 ring blocks, Pauli-Z feature
//! extraction, linear heads, losses, exact adjoint gradients, Adam training,
//! and the one-level / two-level learned localization pipelines.
//!
//! A circuit is a fixed topology of repeated blocks; each block applies one
//! trainable U3 rotation per qubit followed by a ring of trainable CU3
//! entanglers (0→1, 1→2, …, m−1→0). The per-qubit Pauli-Z expectations of
//! the output state feed a linear head that is either a classifier (class
//! scores, softmax cross-entropy) or a regressor (two coordinates, mean
//! squared error in area-normalized space).
//!
//! - [`apply_circuit`]: local 2×2 statevector updates, qubit 0 most
//!   significant, controlled gates conditioned on control = |1⟩.
//! - [`batch_gradients`]: exact reverse-mode adjoint differentiation. The
//!   backward pass walks gates last-to-first, un-applying each gate to
//!   recover its input state, accumulating 2·Re⟨λ|(∂U)|φ⟩ per angle, and
//!   pulling the adjoint vector back through the gate. The derivative of a
//!   controlled gate vanishes on the control = |0⟩ subspace.
//! - [`train`]: Adam (β₁ = 0.9, β₂ = 0.999, ε = 1e-8) over shuffled
//!   mini-batches with per-epoch loss recording; bit-reproducible for a
//!   fixed seed.
//! - [`pqc_one`]: evolve the sensed state, run the model; classifiers
//!   return the predicted cell's center, regressors a point clamped to the
//!   area.
//! - [`pqc_two`]: a coarse classifier over blocks picks B̂ from the coarse
//!   sensors, then the fine model of B̂ runs on a fresh evolved state over
//!   that block's four fine sensors. Single-cell blocks short-circuit the
//!   fine stage (block and cell ids coincide).
//!
//! Expectations are computed exactly from the statevector by default;
//! [`z_expectations_sampled`] provides the finite-shot empirical variant.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{GridGeometry, Point, SensorLayout, TxLocation};
use crate::qmath::{Complex64, ComplexMatrix, Rng, StateVector};
use crate::sensing::{evolve, sample_noises, uniform_initial, SensingConfig, SensingError};

#[allow(unused_imports)]
use num_traits::Float;

/// Largest register a learned pipeline may sense at once.
pub const MAX_PQC_QUBITS: usize = 16;

/// Default number of circuit blocks.
pub const DEFAULT_CIRCUIT_BLOCKS: usize = 4;

/// Adam first-moment decay rate.
pub const ADAM_BETA1: f64 = 0.9;

/// Adam second-moment decay rate.
pub const ADAM_BETA2: f64 = 0.999;

/// Adam denominator offset.
pub const ADAM_EPSILON: f64 = 1e-8;

/// Errors from circuit construction, training, and the learned pipelines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PqcError {
    /// More qubits than a learned pipeline supports.
    #[error("{got} qubits exceed the {max}-qubit circuit limit")]
    TooManyQubits { got: usize, max: usize },
    /// Operand dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A loss or gradient was requested over no samples.
    #[error("batch is empty")]
    EmptyBatch,
    /// A classifier sample carries a label outside the head's range.
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    /// No fine model was supplied for the block the coarse stage chose.
    #[error("no fine model for block {block_id}")]
    MissingFineModel { block_id: usize },
    /// The layout carries no fine sensors for the block the coarse stage
    /// chose.
    #[error("layout has no fine sensors for block {block_id}")]
    MissingFineSensors { block_id: usize },
    /// Propagated sensing failure.
    #[error(transparent)]
    Sensing(#[from] SensingError),
}

/// One gate in a circuit's fixed topology; angles live in [`CircuitSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    /// Single-qubit rotation on `qubit`.
    U3 { qubit: usize },
    /// Rotation on `target` applied when `control` is |1⟩.
    CU3 { control: usize, target: usize },
}

/// Circuit topology plus its trainable angles.
///
/// Each block holds m U3 gates (qubits 0..m) followed by m CU3 gates in
/// ring order (0→1, …, m−1→0), three angles (θ, φ, λ) per gate, so the
/// angle count is blocks·m·6. A single-qubit circuit has no ring (a gate
/// cannot control itself) and degenerates to one U3 per block.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CircuitSpec {
    qubits: usize,
    blocks: usize,
    angles: Vec<f64>,
}

impl CircuitSpec {
    /// Builds a circuit with all angles zero (every gate the identity).
    pub fn new(qubits: usize, blocks: usize) -> Result<Self, PqcError> {
        if qubits == 0 || blocks == 0 {
            return Err(PqcError::DimensionMismatch { expected: 1, got: 0 });
        }
        if qubits > MAX_PQC_QUBITS {
            return Err(PqcError::TooManyQubits { got: qubits, max: MAX_PQC_QUBITS });
        }
        let gates_per_block = if qubits == 1 { 1 } else { 2 * qubits };
        let angles = vec![0.0; blocks * gates_per_block * 3];
        Ok(CircuitSpec { qubits, blocks, angles })
    }

    /// Builds a circuit with explicit angles (length must match the
    /// topology).
    pub fn with_angles(qubits: usize, blocks: usize, angles: Vec<f64>) -> Result<Self, PqcError> {
        let mut spec = CircuitSpec::new(qubits, blocks)?;
        if angles.len() != spec.angles.len() {
            return Err(PqcError::DimensionMismatch {
                expected: spec.angles.len(),
                got: angles.len(),
            });
        }
        spec.angles = angles;
        Ok(spec)
    }

    /// Number of qubits the circuit acts on.
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// Number of repeated blocks.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Gates per block: 2m for the U3 row plus the CU3 ring, 1 when m = 1.
    pub fn gates_per_block(&self) -> usize {
        if self.qubits == 1 {
            1
        } else {
            2 * self.qubits
        }
    }

    /// Total gate count.
    pub fn gate_count(&self) -> usize {
        self.blocks * self.gates_per_block()
    }

    /// Total trainable angle count (three per gate).
    pub fn angle_count(&self) -> usize {
        self.angles.len()
    }

    /// The `g`-th gate in application order.
    pub fn gate(&self, g: usize) -> Gate {
        debug_assert!(g < self.gate_count());
        let pos = g % self.gates_per_block();
        if pos < self.qubits {
            Gate::U3 { qubit: pos }
        } else {
            let control = pos - self.qubits;
            Gate::CU3 { control, target: (control + 1) % self.qubits }
        }
    }

    /// Gates in application order.
    pub fn gates(&self) -> impl Iterator<Item = Gate> + '_ {
        (0..self.gate_count()).map(move |g| self.gate(g))
    }

    /// All angles, grouped three per gate in application order.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Mutable access to the angles.
    pub fn angles_mut(&mut self) -> &mut [f64] {
        &mut self.angles
    }
}

/// What a linear head predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum HeadKind {
    /// Class scores over cells or blocks; softmax cross-entropy loss.
    Classifier,
    /// Two normalized coordinates; mean-squared-error loss.
    Regression,
}

/// Fully connected layer from Pauli-Z expectations to predictions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearHead {
    kind: HeadKind,
    outputs: usize,
    inputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LinearHead {
    /// Builds a head from explicit parameters. `weights` is outputs×inputs
    /// row-major; regression heads must have exactly two outputs.
    pub fn new(
        kind: HeadKind,
        outputs: usize,
        inputs: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, PqcError> {
        if outputs == 0 || inputs == 0 {
            return Err(PqcError::DimensionMismatch { expected: 1, got: 0 });
        }
        if kind == HeadKind::Regression && outputs != 2 {
            return Err(PqcError::DimensionMismatch { expected: 2, got: outputs });
        }
        if weights.len() != outputs * inputs {
            return Err(PqcError::DimensionMismatch {
                expected: outputs * inputs,
                got: weights.len(),
            });
        }
        if bias.len() != outputs {
            return Err(PqcError::DimensionMismatch { expected: outputs, got: bias.len() });
        }
        Ok(LinearHead { kind, outputs, inputs, weights, bias })
    }

    /// Builds an all-zero head.
    pub fn zeroed(kind: HeadKind, outputs: usize, inputs: usize) -> Result<Self, PqcError> {
        LinearHead::new(kind, outputs, inputs, vec![0.0; outputs * inputs], vec![0.0; outputs])
    }

    /// Prediction kind.
    pub fn kind(&self) -> HeadKind {
        self.kind
    }

    /// Output count (classes, or 2 for regression).
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Input count (one Pauli-Z expectation per qubit).
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Weight matrix, outputs×inputs row-major.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Bias vector.
    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// W·z + b.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.inputs);
        let mut out = self.bias.clone();
        for (o, out_o) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            for (w, zq) in row.iter().zip(z) {
                *out_o += w * zq;
            }
        }
        out
    }
}

/// A trained (or trainable) localization model: circuit, head, and the
/// per-axis scale that maps normalized regression outputs back to meters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PqcModel {
    circuit: CircuitSpec,
    head: LinearHead,
    coord_scale: f64,
}

impl PqcModel {
    /// Assembles a model; the head's input count must equal the circuit's
    /// qubit count, and the coordinate scale must be positive and finite.
    pub fn new(circuit: CircuitSpec, head: LinearHead, coord_scale: f64) -> Result<Self, PqcError> {
        if head.inputs != circuit.qubits {
            return Err(PqcError::DimensionMismatch {
                expected: circuit.qubits,
                got: head.inputs,
            });
        }
        assert!(
            coord_scale.is_finite() && coord_scale > 0.0,
            "coordinate scale must be positive and finite"
        );
        Ok(PqcModel { circuit, head, coord_scale })
    }

    /// The circuit.
    pub fn circuit(&self) -> &CircuitSpec {
        &self.circuit
    }

    /// The prediction head.
    pub fn head(&self) -> &LinearHead {
        &self.head
    }

    /// Meters per normalized coordinate unit (the area's side length).
    pub fn coord_scale(&self) -> f64 {
        self.coord_scale
    }
}

/// One training example: an evolved sensor state, its class label (cell or
/// block index), and the transmitter coordinates in meters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    /// Evolved sensor state for one noisy observation.
    pub state: StateVector,
    /// Cell index (one-level / fine) or block index (coarse).
    pub label: usize,
    /// True transmitter position, used as the regression target.
    pub coords: Point,
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    /// Adam learning rate.
    pub learning_rate: f64,
    /// Mini-batch size.
    pub batch_size: usize,
    /// Number of passes over the dataset.
    pub epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 1e-2, batch_size: 32, epochs: 80 }
    }
}

/// A trained model together with its per-epoch training-loss record.
#[derive(Debug, Clone)]
pub struct TrainRecord {
    /// The final-epoch model.
    pub model: PqcModel,
    /// Mean training loss per epoch, in epoch order.
    pub epoch_losses: Vec<f64>,
}

/// Gradient of a batch loss with respect to every trainable parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// The batch loss itself.
    pub loss: f64,
    /// d loss / d angle, aligned with [`CircuitSpec::angles`].
    pub angles: Vec<f64>,
    /// d loss / d weight, aligned with [`LinearHead::weights`].
    pub weights: Vec<f64>,
    /// d loss / d bias, aligned with [`LinearHead::bias`].
    pub bias: Vec<f64>,
}

/// The U3 gate matrix
/// [[cos(θ/2), −e^{iλ} sin(θ/2)], [e^{iφ} sin(θ/2), e^{i(φ+λ)} cos(θ/2)]].
pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> ComplexMatrix {
    let e = u3_entries(theta, phi, lambda);
    ComplexMatrix::new(2, 2, e.to_vec()).expect("2x2 entry count is fixed")
}

fn u3_entries(theta: f64, phi: f64, lambda: f64) -> [Complex64; 4] {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    let eiphi = Complex64::new(phi.cos(), phi.sin());
    let eilam = Complex64::new(lambda.cos(), lambda.sin());
    [Complex64::new(c, 0.0), -eilam * s, eiphi * s, eiphi * eilam * c]
}

fn u3_adjoint_entries(e: &[Complex64; 4]) -> [Complex64; 4] {
    [e[0].conj(), e[2].conj(), e[1].conj(), e[3].conj()]
}

/// d U3 / d angle `j` (0 = θ, 1 = φ, 2 = λ) as a dense 2×2. Not unitary.
fn u3_derivative_entries(theta: f64, phi: f64, lambda: f64, j: usize) -> [Complex64; 4] {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    let eiphi = Complex64::new(phi.cos(), phi.sin());
    let eilam = Complex64::new(lambda.cos(), lambda.sin());
    let i = Complex64::new(0.0, 1.0);
    match j {
        0 => [
            Complex64::new(-s / 2.0, 0.0),
            -eilam * (c / 2.0),
            eiphi * (c / 2.0),
            -eiphi * eilam * (s / 2.0),
        ],
        1 => [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), i * eiphi * s, i * eiphi * eilam * c],
        2 => [Complex64::new(0.0, 0.0), -i * eilam * s, Complex64::new(0.0, 0.0), i * eiphi * eilam * c],
        _ => unreachable!("a gate has exactly three angles"),
    }
}

/// Applies a 2×2 update to `target` (qubit 0 most significant).
fn apply_single(amps: &mut [Complex64], qubits: usize, target: usize, u: &[Complex64; 4]) {
    let stride = 1usize << (qubits - 1 - target);
    let mut base = 0;
    while base < amps.len() {
        for i0 in base..base + stride {
            let i1 = i0 + stride;
            let a = amps[i0];
            let b = amps[i1];
            amps[i0] = u[0] * a + u[1] * b;
            amps[i1] = u[2] * a + u[3] * b;
        }
        base += 2 * stride;
    }
}

/// Applies a 2×2 update to `target` on the subspace where `control` is |1⟩.
fn apply_controlled(
    amps: &mut [Complex64],
    qubits: usize,
    control: usize,
    target: usize,
    u: &[Complex64; 4],
) {
    debug_assert_ne!(control, target);
    let stride = 1usize << (qubits - 1 - target);
    let cmask = 1usize << (qubits - 1 - control);
    let mut base = 0;
    while base < amps.len() {
        for i0 in base..base + stride {
            if i0 & cmask == 0 {
                continue;
            }
            let i1 = i0 + stride;
            let a = amps[i0];
            let b = amps[i1];
            amps[i0] = u[0] * a + u[1] * b;
            amps[i1] = u[2] * a + u[3] * b;
        }
        base += 2 * stride;
    }
}

fn apply_gate(amps: &mut [Complex64], qubits: usize, gate: Gate, u: &[Complex64; 4]) {
    match gate {
        Gate::U3 { qubit } => apply_single(amps, qubits, qubit, u),
        Gate::CU3 { control, target } => apply_controlled(amps, qubits, control, target, u),
    }
}

/// 2·Re⟨λ|(∂U)|φ⟩ for one gate derivative, without materializing (∂U)|φ⟩.
///
/// For a controlled gate the derivative annihilates the control = |0⟩
/// subspace, so only control = |1⟩ pairs contribute.
fn derivative_overlap(
    lam: &[Complex64],
    phi: &[Complex64],
    qubits: usize,
    gate: Gate,
    du: &[Complex64; 4],
) -> f64 {
    let (target, cmask) = match gate {
        Gate::U3 { qubit } => (qubit, 0usize),
        Gate::CU3 { control, target } => (target, 1usize << (qubits - 1 - control)),
    };
    let stride = 1usize << (qubits - 1 - target);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut base = 0;
    while base < phi.len() {
        for i0 in base..base + stride {
            if i0 & cmask != cmask {
                continue;
            }
            let i1 = i0 + stride;
            let a = phi[i0];
            let b = phi[i1];
            acc += lam[i0].conj() * (du[0] * a + du[1] * b);
            acc += lam[i1].conj() * (du[2] * a + du[3] * b);
        }
        base += 2 * stride;
    }
    2.0 * acc.re
}

/// Runs the circuit on `input`, returning the output state.
///
/// Gates are applied in listed order as local 2×2 updates; norm is
/// preserved to within 1e-10 for every parameter setting.
pub fn apply_circuit(spec: &CircuitSpec, input: &StateVector) -> Result<StateVector, PqcError> {
    if input.qubits() != spec.qubits {
        return Err(PqcError::DimensionMismatch { expected: spec.qubits, got: input.qubits() });
    }
    let mut out = input.clone();
    let amps = out.amplitudes_mut();
    for (g, gate) in spec.gates().enumerate() {
        let u = u3_entries(spec.angles[3 * g], spec.angles[3 * g + 1], spec.angles[3 * g + 2]);
        apply_gate(amps, spec.qubits, gate, &u);
    }
    debug_assert!((out.norm_sqr() - input.norm_sqr()).abs() < 1e-10);
    Ok(out)
}

/// Per-qubit Pauli-Z expectations: component q is Σ_k (±1)|amp_k|² with
/// sign + when bit q of k (qubit 0 most significant) is 0.
pub fn z_expectations(state: &StateVector) -> Vec<f64> {
    let m = state.qubits();
    let mut z = vec![0.0; m];
    for (k, amp) in state.amplitudes().iter().enumerate() {
        let p = amp.norm_sqr();
        for (q, zq) in z.iter_mut().enumerate() {
            if k & (1usize << (m - 1 - q)) == 0 {
                *zq += p;
            } else {
                *zq -= p;
            }
        }
    }
    z
}

/// Finite-shot empirical Pauli-Z expectations: draws `shots` basis states
/// from the Born distribution and returns (n₀ − n₁)/shots per qubit.
pub fn z_expectations_sampled(state: &StateVector, shots: usize, rng: &mut Rng) -> Vec<f64> {
    assert!(shots >= 1, "at least one shot is required");
    let m = state.qubits();
    let total = state.norm_sqr();
    let mut sums = vec![0i64; m];
    for _ in 0..shots {
        let u = rng.uniform() * total;
        let mut acc = 0.0;
        let mut drawn = state.dim() - 1;
        for (k, amp) in state.amplitudes().iter().enumerate() {
            acc += amp.norm_sqr();
            if u < acc {
                drawn = k;
                break;
            }
        }
        for (q, sum) in sums.iter_mut().enumerate() {
            if drawn & (1usize << (m - 1 - q)) == 0 {
                *sum += 1;
            } else {
                *sum -= 1;
            }
        }
    }
    sums.iter().map(|&s| s as f64 / shots as f64).collect()
}

/// Runs the model on an evolved state: class scores for classifiers,
/// coordinates in meters (unclamped) for regressors.
pub fn forward(model: &PqcModel, state: &StateVector) -> Result<Vec<f64>, PqcError> {
    let evolved = apply_circuit(&model.circuit, state)?;
    let z = z_expectations(&evolved);
    let mut out = model.head.apply(&z);
    if model.head.kind == HeadKind::Regression {
        for v in &mut out {
            *v *= model.coord_scale;
        }
    }
    Ok(out)
}

/// Index of the largest score, ties broken toward the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    assert!(!scores.is_empty(), "argmax of no scores");
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Draws a fresh model: angles uniform on [−π, π], head weights uniform on
/// [−1/√m, 1/√m], bias zero.
pub fn init_model(
    qubits: usize,
    blocks: usize,
    kind: HeadKind,
    outputs: usize,
    coord_scale: f64,
    rng: &mut Rng,
) -> Result<PqcModel, PqcError> {
    let mut circuit = CircuitSpec::new(qubits, blocks)?;
    for a in circuit.angles_mut() {
        *a = rng.uniform_range(-core::f64::consts::PI, core::f64::consts::PI);
    }
    let bound = 1.0 / (qubits as f64).sqrt();
    let weights = (0..outputs * qubits).map(|_| rng.uniform_range(-bound, bound)).collect();
    let head = LinearHead::new(kind, outputs, qubits, weights, vec![0.0; outputs])?;
    PqcModel::new(circuit, head, coord_scale)
}

fn validate_batch(model: &PqcModel, batch: &[&Sample]) -> Result<(), PqcError> {
    if batch.is_empty() {
        return Err(PqcError::EmptyBatch);
    }
    for sample in batch {
        if sample.state.qubits() != model.circuit.qubits {
            return Err(PqcError::DimensionMismatch {
                expected: model.circuit.qubits,
                got: sample.state.qubits(),
            });
        }
        if model.head.kind == HeadKind::Classifier && sample.label >= model.head.outputs {
            return Err(PqcError::LabelOutOfRange {
                label: sample.label,
                classes: model.head.outputs,
            });
        }
    }
    Ok(())
}

/// Per-sample loss and d loss / d raw-output, excluding the 1/batch factor.
///
/// Classifier: softmax cross-entropy on the scores (max-shifted for
/// stability). Regression: squared error against area-normalized targets,
/// averaged over the two coordinates.
fn sample_loss_grad(model: &PqcModel, raw: &[f64], sample: &Sample, gs: &mut [f64]) -> f64 {
    match model.head.kind {
        HeadKind::Classifier => {
            let mx = raw.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let mut sum = 0.0;
            for (g, &s) in gs.iter_mut().zip(raw) {
                *g = (s - mx).exp();
                sum += *g;
            }
            for g in gs.iter_mut() {
                *g /= sum;
            }
            gs[sample.label] -= 1.0;
            sum.ln() - (raw[sample.label] - mx)
        }
        HeadKind::Regression => {
            let tx = sample.coords.x / model.coord_scale;
            let ty = sample.coords.y / model.coord_scale;
            let d0 = raw[0] - tx;
            let d1 = raw[1] - ty;
            gs[0] = d0;
            gs[1] = d1;
            (d0 * d0 + d1 * d1) / 2.0
        }
    }
}

fn loss_refs(model: &PqcModel, batch: &[&Sample]) -> Result<f64, PqcError> {
    validate_batch(model, batch)?;
    let mut gs = vec![0.0; model.head.outputs];
    let mut total = 0.0;
    for sample in batch {
        let evolved = apply_circuit(&model.circuit, &sample.state)?;
        let raw = model.head.apply(&z_expectations(&evolved));
        total += sample_loss_grad(model, &raw, sample, &mut gs);
    }
    Ok(total / batch.len() as f64)
}

/// Mean loss of the model over a batch (see [`sample_loss_grad`] for the
/// per-kind definition).
pub fn batch_loss(model: &PqcModel, batch: &[Sample]) -> Result<f64, PqcError> {
    let refs: Vec<&Sample> = batch.iter().collect();
    loss_refs(model, &refs)
}

fn gradients_refs(model: &PqcModel, batch: &[&Sample]) -> Result<Gradients, PqcError> {
    validate_batch(model, batch)?;
    let m = model.circuit.qubits;
    let out = model.head.outputs;
    let inv_batch = 1.0 / batch.len() as f64;
    let mut grads = Gradients {
        loss: 0.0,
        angles: vec![0.0; model.circuit.angle_count()],
        weights: vec![0.0; out * m],
        bias: vec![0.0; out],
    };
    let mut gs = vec![0.0; out];
    let mut gz = vec![0.0; m];
    for sample in batch {
        let mut psi = apply_circuit(&model.circuit, &sample.state)?;
        let z = z_expectations(&psi);
        let raw = model.head.apply(&z);
        grads.loss += sample_loss_grad(model, &raw, sample, &mut gs) * inv_batch;
        for g in gs.iter_mut() {
            *g *= inv_batch;
        }
        for o in 0..out {
            grads.bias[o] += gs[o];
            for q in 0..m {
                grads.weights[o * m + q] += gs[o] * z[q];
            }
        }
        for (q, gzq) in gz.iter_mut().enumerate() {
            *gzq = (0..out).map(|o| gs[o] * model.head.weights[o * m + q]).sum();
        }
        // λ = Σ_q gz_q Z_q |ψ⟩: the loss gradient with respect to ⟨ψ|.
        let mut lam: Vec<Complex64> = psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(k, &amp)| {
                let mut c = 0.0;
                for (q, &gzq) in gz.iter().enumerate() {
                    if k & (1usize << (m - 1 - q)) == 0 {
                        c += gzq;
                    } else {
                        c -= gzq;
                    }
                }
                amp * c
            })
            .collect();
        // Walk gates last-to-first: un-apply the gate to recover its input
        // state, take the three angle overlaps, then pull λ back through.
        let phi = psi.amplitudes_mut();
        for g in (0..model.circuit.gate_count()).rev() {
            let gate = model.circuit.gate(g);
            let (t, p, l) = (
                model.circuit.angles[3 * g],
                model.circuit.angles[3 * g + 1],
                model.circuit.angles[3 * g + 2],
            );
            let udag = u3_adjoint_entries(&u3_entries(t, p, l));
            apply_gate(phi, m, gate, &udag);
            for j in 0..3 {
                let du = u3_derivative_entries(t, p, l, j);
                grads.angles[3 * g + j] += derivative_overlap(&lam, phi, m, gate, &du);
            }
            apply_gate(&mut lam, m, gate, &udag);
        }
    }
    Ok(grads)
}

/// Exact gradient of [`batch_loss`] with respect to every trainable
/// parameter, via reverse-mode adjoint differentiation of the statevector
/// simulation.
pub fn batch_gradients(model: &PqcModel, batch: &[Sample]) -> Result<Gradients, PqcError> {
    let refs: Vec<&Sample> = batch.iter().collect();
    gradients_refs(model, &refs)
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    beta1_t: f64,
    beta2_t: f64,
}

impl AdamState {
    fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], beta1_t: 1.0, beta2_t: 1.0 }
    }

    fn begin_step(&mut self) -> (f64, f64) {
        self.beta1_t *= ADAM_BETA1;
        self.beta2_t *= ADAM_BETA2;
        (1.0 - self.beta1_t, 1.0 - self.beta2_t)
    }

    fn update(&mut self, offset: usize, lr: f64, bc: (f64, f64), params: &mut [f64], grads: &[f64]) {
        for (i, (p, &g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.m[offset + i];
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            let v = &mut self.v[offset + i];
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / bc.0) / ((*v / bc.1).sqrt() + ADAM_EPSILON);
        }
    }
}

/// Trains the model with Adam over shuffled mini-batches.
///
/// Records the running mean training loss of each epoch (sample-weighted
/// over its batches). With a fixed-seed generator the result is
/// bit-reproducible; with a zero learning rate the parameters come back
/// unchanged.
pub fn train(
    model: PqcModel,
    dataset: &[Sample],
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<TrainRecord, PqcError> {
    assert!(config.batch_size >= 1, "batch size must be at least 1");
    assert!(
        config.learning_rate.is_finite() && config.learning_rate >= 0.0,
        "learning rate must be finite and non-negative"
    );
    let refs: Vec<&Sample> = dataset.iter().collect();
    validate_batch(&model, &refs)?;
    let mut model = model;
    let n_angles = model.circuit.angle_count();
    let n_weights = model.head.weights.len();
    let n_bias = model.head.bias.len();
    let mut adam = AdamState::new(n_angles + n_weights + n_bias);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &dataset[i]).collect();
            let grads = gradients_refs(&model, &batch)?;
            epoch_loss += grads.loss * chunk.len() as f64;
            let bc = adam.begin_step();
            adam.update(0, config.learning_rate, bc, model.circuit.angles_mut(), &grads.angles);
            adam.update(n_angles, config.learning_rate, bc, &mut model.head.weights, &grads.weights);
            adam.update(
                n_angles + n_weights,
                config.learning_rate,
                bc,
                &mut model.head.bias,
                &grads.bias,
            );
        }
        epoch_losses.push(epoch_loss / dataset.len() as f64);
    }
    Ok(TrainRecord { model, epoch_losses })
}

/// Outcome of a one-level learned localization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqcOneOutcome {
    /// Predicted transmitter position in meters.
    pub predicted: Point,
    /// Predicted cell (argmax class, or the cell containing the regressed
    /// point).
    pub cell_id: usize,
}

/// One-level learned localization: evolve a fresh noisy state over the
/// sensors, run the model. Classifiers return the predicted cell's center;
/// regressors return the predicted point clamped to the area.
pub fn pqc_one(
    model: &PqcModel,
    tx: &TxLocation,
    grid: &GridGeometry,
    sensors: &[Point],
    cfg: &SensingConfig,
    rng: &mut Rng,
) -> Result<PqcOneOutcome, PqcError> {
    if sensors.len() > MAX_PQC_QUBITS {
        return Err(PqcError::TooManyQubits { got: sensors.len(), max: MAX_PQC_QUBITS });
    }
    if sensors.len() != model.circuit.qubits {
        return Err(PqcError::DimensionMismatch {
            expected: model.circuit.qubits,
            got: sensors.len(),
        });
    }
    let noises = sample_noises(sensors.len(), cfg, rng);
    let state = evolve(&uniform_initial(sensors.len())?, tx.point(), sensors, &noises, cfg)?;
    let outputs = forward(model, &state)?;
    Ok(match model.head.kind {
        HeadKind::Classifier => {
            let cell = argmax(&outputs);
            debug_assert!(cell < grid.cell_count());
            PqcOneOutcome { predicted: grid.cell_center(cell), cell_id: cell }
        }
        HeadKind::Regression => {
            let side = grid.side_length();
            let p = Point::new(outputs[0].clamp(0.0, side), outputs[1].clamp(0.0, side));
            PqcOneOutcome { predicted: p, cell_id: grid.cell_of(p) }
        }
    })
}

/// Outcome of a two-level learned localization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqcTwoOutcome {
    /// Predicted transmitter position in meters.
    pub predicted: Point,
    /// Predicted cell.
    pub cell_id: usize,
    /// Block chosen by the coarse stage.
    pub block_id: usize,
}

/// Two-level learned localization.
///
/// The coarse classifier picks a block B̂ from a fresh evolved state over
/// the coarse sensors; the fine model of B̂ then runs on a fresh evolved
/// state over that block's four fine sensors. Fine classifier labels index
/// the block's cells in ascending cell-id order. When blocks are single
/// cells the fine stage short-circuits (block and cell ids coincide).
pub fn pqc_two(
    coarse: &PqcModel,
    fine: &BTreeMap<usize, PqcModel>,
    tx: &TxLocation,
    grid: &GridGeometry,
    layout: &SensorLayout,
    cfg: &SensingConfig,
    rng: &mut Rng,
) -> Result<PqcTwoOutcome, PqcError> {
    assert!(
        coarse.head.kind == HeadKind::Classifier,
        "the coarse stage requires a classifier over blocks"
    );
    let sensors = layout.coarse();
    if sensors.len() > MAX_PQC_QUBITS {
        return Err(PqcError::TooManyQubits { got: sensors.len(), max: MAX_PQC_QUBITS });
    }
    if sensors.len() != coarse.circuit.qubits {
        return Err(PqcError::DimensionMismatch {
            expected: coarse.circuit.qubits,
            got: sensors.len(),
        });
    }
    let noises = sample_noises(sensors.len(), cfg, rng);
    let state = evolve(&uniform_initial(sensors.len())?, tx.point(), sensors, &noises, cfg)?;
    let block = argmax(&forward(coarse, &state)?);
    debug_assert!(block < grid.block_count());
    if grid.block_side() == 1 {
        return Ok(PqcTwoOutcome {
            predicted: grid.cell_center(block),
            cell_id: block,
            block_id: block,
        });
    }
    let fine_model = fine.get(&block).ok_or(PqcError::MissingFineModel { block_id: block })?;
    let fine_sensors =
        layout.fine_of(block).ok_or(PqcError::MissingFineSensors { block_id: block })?;
    if fine_sensors.len() != fine_model.circuit.qubits {
        return Err(PqcError::DimensionMismatch {
            expected: fine_model.circuit.qubits,
            got: fine_sensors.len(),
        });
    }
    let noises = sample_noises(fine_sensors.len(), cfg, rng);
    let state =
        evolve(&uniform_initial(fine_sensors.len())?, tx.point(), fine_sensors, &noises, cfg)?;
    let outputs = forward(fine_model, &state)?;
    Ok(match fine_model.head.kind {
        HeadKind::Classifier => {
            let cells = grid.cells_in_block(block);
            let local = argmax(&outputs);
            debug_assert!(local < cells.len());
            let cell = cells[local];
            PqcTwoOutcome { predicted: grid.cell_center(cell), cell_id: cell, block_id: block }
        }
        HeadKind::Regression => {
            let side = grid.side_length();
            let p = Point::new(outputs[0].clamp(0.0, side), outputs[1].clamp(0.0, side));
            PqcTwoOutcome { predicted: p, cell_id: grid.cell_of(p), block_id: block }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{deploy_sensors, make_grid, sample_tx, Setting};
    use crate::qmath::{expectation, kron};
    use alloc::format;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use core::f64::consts::PI;

    fn rng(seed: u64) -> Rng {
        Rng::new(seed)
    }

    fn random_state(qubits: usize, rng: &mut Rng) -> StateVector {
        let dim = 1usize << qubits;
        let mut amps: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector::new(amps).unwrap()
    }

    fn basis_state(qubits: usize, index: usize) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector::new(amps).unwrap()
    }

    fn random_circuit(qubits: usize, blocks: usize, rng: &mut Rng) -> CircuitSpec {
        let mut spec = CircuitSpec::new(qubits, blocks).unwrap();
        for a in spec.angles_mut() {
            *a = rng.uniform_range(-PI, PI);
        }
        spec
    }

    #[test]
    fn u3_zero_angles_is_identity() {
        let u = u3_matrix(0.0, 0.0, 0.0);
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(u.get(r, c).re, want, epsilon = 1e-15);
                assert_abs_diff_eq!(u.get(r, c).im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn u3_pi_zero_pi_is_pauli_x_up_to_phase() {
        let u = u3_matrix(PI, 0.0, PI);
        // |tr(X† U)| / 2 = 1 exactly when U is X up to a global phase.
        let overlap = u.get(0, 1) + u.get(1, 0);
        assert_abs_diff_eq!(overlap.norm() / 2.0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn u3_with_clamped_phases_matches_x_rotation_exponential() {
        // Independent oracle: exp(−iθX/2) summed as a power series with the
        // scaled-term recurrence term_k = term_{k−1}·(−iθ/2)X/k.
        let x = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        for &theta in &[0.3, 1.0, PI / 2.0, 2.5] {
            let mut series = ComplexMatrix::identity(2);
            let mut term = ComplexMatrix::identity(2);
            for k in 1..40 {
                let next = term.mul(&x).unwrap();
                let scale = Complex64::new(0.0, -theta / 2.0) / k as f64;
                term = ComplexMatrix::zeros(2, 2);
                for r in 0..2 {
                    for c in 0..2 {
                        term.set(r, c, next.get(r, c) * scale);
                        series.set(r, c, series.get(r, c) + term.get(r, c));
                    }
                }
            }
            let u = u3_matrix(theta, -PI / 2.0, PI / 2.0);
            assert!(u.frobenius_distance(&series) < 1e-12, "theta {theta}");
        }
    }

    #[test]
    fn u3_is_unitary_for_random_angles() {
        let mut r = rng(11);
        for _ in 0..25 {
            let u = u3_matrix(
                r.uniform_range(-PI, PI),
                r.uniform_range(-PI, PI),
                r.uniform_range(-PI, PI),
            );
            let prod = u.adjoint().mul(&u).unwrap();
            assert!(prod.frobenius_distance(&ComplexMatrix::identity(2)) < 1e-12);
        }
    }

    #[test]
    fn circuit_topology_follows_block_and_ring_order() {
        let spec = CircuitSpec::new(3, 2).unwrap();
        assert_eq!(spec.gate_count(), 12);
        assert_eq!(spec.angle_count(), 2 * 3 * 6);
        let gates: Vec<Gate> = spec.gates().collect();
        assert_eq!(gates[0], Gate::U3 { qubit: 0 });
        assert_eq!(gates[2], Gate::U3 { qubit: 2 });
        assert_eq!(gates[3], Gate::CU3 { control: 0, target: 1 });
        assert_eq!(gates[5], Gate::CU3 { control: 2, target: 0 });
        assert_eq!(gates[6], Gate::U3 { qubit: 0 });
        assert_eq!(gates[11], Gate::CU3 { control: 2, target: 0 });
    }

    #[test]
    fn single_qubit_circuit_has_no_entanglers() {
        let spec = CircuitSpec::new(1, 2).unwrap();
        assert_eq!(spec.gate_count(), 2);
        assert_eq!(spec.angle_count(), 6);
        assert!(spec.gates().all(|g| g == Gate::U3 { qubit: 0 }));
    }

    #[test]
    fn circuit_construction_rejects_bad_shapes() {
        assert_eq!(
            CircuitSpec::new(17, 4),
            Err(PqcError::TooManyQubits { got: 17, max: 16 })
        );
        assert!(CircuitSpec::new(0, 4).is_err());
        assert!(CircuitSpec::new(4, 0).is_err());
        assert_eq!(
            CircuitSpec::with_angles(2, 1, vec![0.0; 5]),
            Err(PqcError::DimensionMismatch { expected: 12, got: 5 })
        );
    }

    #[test]
    fn zero_angle_circuit_is_the_identity() {
        let spec = CircuitSpec::new(4, 2).unwrap();
        let mut r = rng(12);
        let input = random_state(4, &mut r);
        let output = apply_circuit(&spec, &input).unwrap();
        for (a, b) in input.amplitudes().iter().zip(output.amplitudes()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-15);
        }
    }

    /// Dense oracle: one two-qubit block as an explicit 4×4 matrix built
    /// from kron and control projectors, qubit 0 most significant.
    #[test]
    fn two_qubit_block_matches_dense_matrix_oracle() {
        let mut r = rng(13);
        for _ in 0..25 {
            let spec = random_circuit(2, 1, &mut r);
            let a = spec.angles();
            let eye = ComplexMatrix::identity(2);
            let p0 = ComplexMatrix::new(
                2,
                2,
                vec![
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                ],
            )
            .unwrap();
            let p1 = ComplexMatrix::new(
                2,
                2,
                vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                ],
            )
            .unwrap();
            let add = |x: &ComplexMatrix, y: &ComplexMatrix| {
                let mut s = x.clone();
                for r in 0..4 {
                    for c in 0..4 {
                        s.set(r, c, s.get(r, c) + y.get(r, c));
                    }
                }
                s
            };
            let u0 = u3_matrix(a[0], a[1], a[2]);
            let u1 = u3_matrix(a[3], a[4], a[5]);
            let cu01 = u3_matrix(a[6], a[7], a[8]);
            let cu10 = u3_matrix(a[9], a[10], a[11]);
            let g0 = kron(&u0, &eye);
            let g1 = kron(&eye, &u1);
            // Control on qubit 0 (most significant): P0⊗I + P1⊗U.
            let g2 = add(&kron(&p0, &eye), &kron(&p1, &cu01));
            // Control on qubit 1: I⊗P0 + U⊗P1.
            let g3 = add(&kron(&eye, &p0), &kron(&cu10, &p1));
            let dense = g3.mul(&g2).unwrap().mul(&g1).unwrap().mul(&g0).unwrap();
            let input = random_state(2, &mut r);
            let want = dense.mul_vec(input.amplitudes()).unwrap();
            let got = apply_circuit(&spec, &input).unwrap();
            for (w, g) in want.iter().zip(got.amplitudes()) {
                assert_abs_diff_eq!(w.re, g.re, epsilon = 1e-10);
                assert_abs_diff_eq!(w.im, g.im, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn apply_circuit_preserves_norm_for_random_parameters() {
        let mut r = rng(14);
        for _ in 0..50 {
            let m = 1 + r.below(4) as usize;
            let blocks = 1 + r.below(3) as usize;
            let spec = random_circuit(m, blocks, &mut r);
            let input = random_state(m, &mut r);
            let output = apply_circuit(&spec, &input).unwrap();
            assert_abs_diff_eq!(output.norm_sqr(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn apply_circuit_rejects_dimension_mismatch() {
        let spec = CircuitSpec::new(3, 1).unwrap();
        let input = basis_state(2, 0);
        assert_eq!(
            apply_circuit(&spec, &input),
            Err(PqcError::DimensionMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn z_expectations_of_basis_and_uniform_states() {
        let zeros = basis_state(3, 0);
        assert_eq!(z_expectations(&zeros), vec![1.0, 1.0, 1.0]);
        let uniform = uniform_initial(3).unwrap();
        for z in z_expectations(&uniform) {
            assert_abs_diff_eq!(z, 0.0, epsilon = 1e-15);
        }
    }

    /// Observable oracle: each component must equal ⟨ψ| I⊗…⊗Z⊗…⊗I |ψ⟩
    /// with Z at the matching kron position.
    #[test]
    fn z_expectations_match_observable_oracle() {
        let mut r = rng(15);
        let eye = ComplexMatrix::identity(2);
        let zmat = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        )
        .unwrap();
        for _ in 0..10 {
            let state = random_state(3, &mut r);
            let z = z_expectations(&state);
            for q in 0..3 {
                let mut obs = if q == 0 { zmat.clone() } else { eye.clone() };
                for pos in 1..3 {
                    let factor = if pos == q { &zmat } else { &eye };
                    obs = kron(&obs, factor);
                }
                let want = expectation(&state, &obs).unwrap();
                assert_abs_diff_eq!(z[q], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sampled_z_expectations_concentrate_on_the_exact_values() {
        let mut r = rng(16);
        let state = uniform_initial(2).unwrap();
        let sampled = z_expectations_sampled(&state, 10_000, &mut r);
        // Each estimate has standard error 1/√shots = 0.01.
        for z in sampled {
            assert!(z.abs() < 0.05, "sampled expectation {z} too far from 0");
        }
        let basis = basis_state(2, 2);
        assert_eq!(z_expectations_sampled(&basis, 100, &mut r), vec![-1.0, 1.0]);
    }

    #[test]
    fn zero_head_gives_uniform_scores_and_lowest_index_argmax() {
        let circuit = CircuitSpec::new(2, 1).unwrap();
        let head = LinearHead::zeroed(HeadKind::Classifier, 4, 2).unwrap();
        let model = PqcModel::new(circuit, head, 20.0).unwrap();
        let scores = forward(&model, &uniform_initial(2).unwrap()).unwrap();
        assert_eq!(scores, vec![0.0; 4]);
        assert_eq!(argmax(&scores), 0);
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 0.5]), 1);
    }

    /// Diagonal sensing evolution never moves amplitude between basis
    /// states, so with zero circuit parameters the expectations stay 0 and
    /// the prediction collapses to the bias.
    #[test]
    fn zero_circuit_on_evolved_uniform_state_predicts_bias_alone() {
        let cfg = SensingConfig::default();
        let grid = make_grid(4).unwrap();
        let layout = deploy_sensors(&grid, 4).unwrap();
        let mut r = rng(17);
        let noises = sample_noises(4, &cfg, &mut r);
        let state = evolve(
            &uniform_initial(4).unwrap(),
            Point::new(12.0, 7.0),
            layout.coarse(),
            &noises,
            &cfg,
        )
        .unwrap();
        let circuit = CircuitSpec::new(4, 4).unwrap();
        let mut weights = vec![0.0; 3 * 4];
        for (i, w) in weights.iter_mut().enumerate() {
            *w = 0.3 * (i as f64 + 1.0);
        }
        let head =
            LinearHead::new(HeadKind::Classifier, 3, 4, weights, vec![0.7, -0.2, 0.4]).unwrap();
        let model = PqcModel::new(circuit, head, grid.side_length()).unwrap();
        for z in z_expectations(&apply_circuit(model.circuit(), &state).unwrap()) {
            assert_abs_diff_eq!(z, 0.0, epsilon = 1e-12);
        }
        let scores = forward(&model, &state).unwrap();
        assert_abs_diff_eq!(scores[0], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(scores[1], -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(scores[2], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn uniform_scores_give_log_class_count_loss() {
        let circuit = CircuitSpec::new(2, 1).unwrap();
        let head = LinearHead::zeroed(HeadKind::Classifier, 5, 2).unwrap();
        let model = PqcModel::new(circuit, head, 20.0).unwrap();
        let batch = vec![Sample {
            state: uniform_initial(2).unwrap(),
            label: 3,
            coords: Point::new(5.0, 5.0),
        }];
        let loss = batch_loss(&model, &batch).unwrap();
        assert_abs_diff_eq!(loss, (5.0f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn regression_loss_is_zero_when_bias_hits_the_target() {
        let circuit = CircuitSpec::new(2, 1).unwrap();
        let head =
            LinearHead::new(HeadKind::Regression, 2, 2, vec![0.0; 4], vec![0.25, 0.75]).unwrap();
        let model = PqcModel::new(circuit, head, 40.0).unwrap();
        let batch = vec![Sample {
            state: uniform_initial(2).unwrap(),
            label: 0,
            coords: Point::new(10.0, 30.0),
        }];
        assert_abs_diff_eq!(batch_loss(&model, &batch).unwrap(), 0.0, epsilon = 1e-15);
    }

    /// Straightforward re-implementation oracle for both loss kinds.
    #[test]
    fn batch_loss_matches_reimplementation_oracle() {
        let mut r = rng(18);
        for kind in [HeadKind::Classifier, HeadKind::Regression] {
            let out = if kind == HeadKind::Classifier { 4 } else { 2 };
            let model = init_model(3, 2, kind, out, 40.0, &mut r).unwrap();
            let batch: Vec<Sample> = (0..6)
                .map(|_| Sample {
                    state: random_state(3, &mut r),
                    label: r.below(out as u64) as usize,
                    coords: Point::new(r.uniform_range(0.0, 40.0), r.uniform_range(0.0, 40.0)),
                })
                .collect();
            let got = batch_loss(&model, &batch).unwrap();
            let mut want = 0.0;
            for s in &batch {
                let outputs =
                    model.head().apply(&z_expectations(&apply_circuit(model.circuit(), &s.state).unwrap()));
                match kind {
                    HeadKind::Classifier => {
                        let total: f64 = outputs.iter().map(|v| v.exp()).sum();
                        want -= (outputs[s.label].exp() / total).ln();
                    }
                    HeadKind::Regression => {
                        let dx = outputs[0] - s.coords.x / 40.0;
                        let dy = outputs[1] - s.coords.y / 40.0;
                        want += (dx * dx + dy * dy) / 2.0;
                    }
                }
            }
            want /= batch.len() as f64;
            assert_abs_diff_eq!(got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn loss_and_gradients_reject_bad_batches() {
        let mut r = rng(19);
        let model = init_model(2, 1, HeadKind::Classifier, 4, 20.0, &mut r).unwrap();
        assert_eq!(batch_loss(&model, &[]), Err(PqcError::EmptyBatch));
        let bad_label = vec![Sample {
            state: uniform_initial(2).unwrap(),
            label: 4,
            coords: Point::new(5.0, 5.0),
        }];
        assert_eq!(
            batch_gradients(&model, &bad_label),
            Err(PqcError::LabelOutOfRange { label: 4, classes: 4 })
        );
        let bad_dim = vec![Sample {
            state: uniform_initial(3).unwrap(),
            label: 0,
            coords: Point::new(5.0, 5.0),
        }];
        assert_eq!(
            batch_loss(&model, &bad_dim),
            Err(PqcError::DimensionMismatch { expected: 2, got: 3 })
        );
    }

    #[test]
    fn zero_weight_head_kills_all_circuit_gradients() {
        let mut r = rng(20);
        let circuit = random_circuit(3, 2, &mut r);
        let head =
            LinearHead::new(HeadKind::Classifier, 4, 3, vec![0.0; 12], vec![0.3, -0.1, 0.2, 0.0])
                .unwrap();
        let model = PqcModel::new(circuit, head, 40.0).unwrap();
        let batch: Vec<Sample> = (0..4)
            .map(|_| Sample {
                state: random_state(3, &mut r),
                label: r.below(4) as usize,
                coords: Point::new(5.0, 5.0),
            })
            .collect();
        let grads = batch_gradients(&model, &batch).unwrap();
        assert!(grads.angles.iter().all(|&g| g == 0.0));
        // The bias gradient is still live: the loss depends on the bias.
        assert!(grads.bias.iter().any(|&g| g != 0.0));
    }

    /// Closed-form oracle: for U3(θ, φ, λ)|0⟩ the Z expectation is cos θ,
    /// so a squared loss z² has dL/dθ = −2 cos θ sin θ and no φ/λ
    /// dependence.
    #[test]
    fn single_u3_gradient_matches_closed_form() {
        for &theta in &[0.2, 0.9, 1.7, 2.8] {
            let circuit = CircuitSpec::with_angles(1, 1, vec![theta, 0.4, -0.8]).unwrap();
            let head =
                LinearHead::new(HeadKind::Regression, 2, 1, vec![1.0, 1.0], vec![0.0, 0.0])
                    .unwrap();
            let model = PqcModel::new(circuit, head, 1.0).unwrap();
            let batch = vec![Sample {
                state: basis_state(1, 0),
                label: 0,
                coords: Point::new(0.0, 0.0),
            }];
            let grads = batch_gradients(&model, &batch).unwrap();
            let want = -2.0 * theta.cos() * theta.sin();
            assert_abs_diff_eq!(grads.angles[0], want, epsilon = 1e-8);
            assert_abs_diff_eq!(grads.angles[1], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(grads.angles[2], 0.0, epsilon = 1e-12);
        }
    }

    fn finite_difference_check(model: &PqcModel, batch: &[Sample]) {
        let grads = batch_gradients(model, batch).unwrap();
        let step = 1e-5;
        let close = |analytic: f64, fd: f64, what: &str| {
            let diff = (analytic - fd).abs();
            let scale = analytic.abs().max(fd.abs());
            assert!(
                diff < 1e-7 || diff / scale < 1e-4,
                "{what}: analytic {analytic} vs finite difference {fd}"
            );
        };
        for i in 0..model.circuit().angle_count() {
            let mut plus = model.clone();
            plus.circuit.angles[i] += step;
            let mut minus = model.clone();
            minus.circuit.angles[i] -= step;
            let fd = (batch_loss(&plus, batch).unwrap() - batch_loss(&minus, batch).unwrap())
                / (2.0 * step);
            close(grads.angles[i], fd, &format!("angle {i}"));
        }
        for i in 0..model.head().weights().len() {
            let mut plus = model.clone();
            plus.head.weights[i] += step;
            let mut minus = model.clone();
            minus.head.weights[i] -= step;
            let fd = (batch_loss(&plus, batch).unwrap() - batch_loss(&minus, batch).unwrap())
                / (2.0 * step);
            close(grads.weights[i], fd, &format!("weight {i}"));
        }
        for i in 0..model.head().bias().len() {
            let mut plus = model.clone();
            plus.head.bias[i] += step;
            let mut minus = model.clone();
            minus.head.bias[i] -= step;
            let fd = (batch_loss(&plus, batch).unwrap() - batch_loss(&minus, batch).unwrap())
                / (2.0 * step);
            close(grads.bias[i], fd, &format!("bias {i}"));
        }
    }

    /// Central finite differences as the independent gradient oracle over
    /// random circuits of 1–4 qubits, both head kinds.
    #[test]
    fn gradients_match_finite_differences() {
        let mut r = rng(21);
        for trial in 0..50 {
            let m = 1 + (trial % 4);
            let blocks = 1 + r.below(2) as usize;
            let kind = if trial % 2 == 0 { HeadKind::Classifier } else { HeadKind::Regression };
            let out = if kind == HeadKind::Classifier { 2 + r.below(3) as usize } else { 2 };
            let model = init_model(m, blocks, kind, out, 40.0, &mut r).unwrap();
            let batch: Vec<Sample> = (0..1 + r.below(4) as usize)
                .map(|_| Sample {
                    state: random_state(m, &mut r),
                    label: r.below(out as u64) as usize,
                    coords: Point::new(r.uniform_range(0.0, 40.0), r.uniform_range(0.0, 40.0)),
                })
                .collect();
            finite_difference_check(&model, &batch);
        }
    }

    /// The four-qubit two-block batch-of-eight instance from the gradient
    /// contract, checked against the same oracle.
    #[test]
    fn four_qubit_two_block_batch_gradient_matches_finite_differences() {
        let mut r = rng(22);
        for kind in [HeadKind::Classifier, HeadKind::Regression] {
            let out = if kind == HeadKind::Classifier { 6 } else { 2 };
            let model = init_model(4, 2, kind, out, 40.0, &mut r).unwrap();
            let batch: Vec<Sample> = (0..8)
                .map(|_| Sample {
                    state: random_state(4, &mut r),
                    label: r.below(out as u64) as usize,
                    coords: Point::new(r.uniform_range(0.0, 40.0), r.uniform_range(0.0, 40.0)),
                })
                .collect();
            finite_difference_check(&model, &batch);
        }
    }

    #[test]
    fn argmax_is_invariant_under_score_shifts() {
        let mut r = rng(23);
        for _ in 0..50 {
            let scores: Vec<f64> = (0..6).map(|_| r.uniform_range(-2.0, 2.0)).collect();
            let shift = r.uniform_range(-10.0, 10.0);
            let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
            assert_eq!(argmax(&scores), argmax(&shifted));
        }
    }

    #[test]
    fn init_model_draws_parameters_in_the_documented_ranges() {
        let mut r = rng(24);
        for _ in 0..10 {
            let model = init_model(4, 4, HeadKind::Classifier, 16, 40.0, &mut r).unwrap();
            assert!(model.circuit().angles().iter().all(|a| (-PI..PI).contains(a)));
            let bound = 0.5;
            assert!(model.head().weights().iter().all(|w| (-bound..bound).contains(w)));
            assert!(model.head().bias().iter().all(|&b| b == 0.0));
            assert!(model.circuit().angles().iter().any(|&a| a != 0.0));
        }
    }

    fn discrete_dataset(
        grid: &GridGeometry,
        sensors: &[Point],
        per_cell: usize,
        cfg: &SensingConfig,
        rng: &mut Rng,
    ) -> Vec<Sample> {
        let mut samples = Vec::new();
        for cell in 0..grid.cell_count() {
            let center = grid.cell_center(cell);
            for _ in 0..per_cell {
                let noises = sample_noises(sensors.len(), cfg, rng);
                let state = evolve(
                    &uniform_initial(sensors.len()).unwrap(),
                    center,
                    sensors,
                    &noises,
                    cfg,
                )
                .unwrap();
                samples.push(Sample { state, label: cell, coords: center });
            }
        }
        samples
    }

    fn fit_accuracy(model: &PqcModel, samples: &[Sample]) -> f64 {
        let hits = samples
            .iter()
            .filter(|s| argmax(&forward(model, &s.state).unwrap()) == s.label)
            .count();
        hits as f64 / samples.len() as f64
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let cfg = SensingConfig::default();
        let grid = make_grid(2).unwrap();
        let layout = deploy_sensors(&grid, 4).unwrap();
        let mut r = rng(25);
        let dataset = discrete_dataset(&grid, layout.coarse(), 3, &cfg, &mut r);
        let model = init_model(4, 2, HeadKind::Classifier, 4, 20.0, &mut r).unwrap();
        let frozen = model.clone();
        let config = TrainConfig { learning_rate: 0.0, batch_size: 4, epochs: 3 };
        let record = train(model, &dataset, &config, &mut r).unwrap();
        assert_eq!(record.model, frozen);
        assert_eq!(record.epoch_losses.len(), 3);
    }

    /// Small-instance separability: a 2×2 grid with four sensors must be
    /// fit perfectly within the default epoch budget.
    #[test]
    fn two_by_two_classifier_training_reaches_full_accuracy() {
        let cfg = SensingConfig::default();
        let grid = make_grid(2).unwrap();
        let layout = deploy_sensors(&grid, 4).unwrap();
        let mut data_rng = rng(26).stream(0, 0);
        let dataset = discrete_dataset(&grid, layout.coarse(), 30, &cfg, &mut data_rng);
        let mut train_rng = rng(26).stream(1, 0);
        let model =
            init_model(4, DEFAULT_CIRCUIT_BLOCKS, HeadKind::Classifier, 4, 20.0, &mut train_rng)
                .unwrap();
        let config = TrainConfig { epochs: 80, ..TrainConfig::default() };
        let record = train(model, &dataset, &config, &mut train_rng).unwrap();
        assert!(record.epoch_losses.iter().all(|l| l.is_finite()));
        assert_eq!(record.epoch_losses.len(), 80);
        assert_abs_diff_eq!(fit_accuracy(&record.model, &dataset), 1.0);
    }

    /// Fit-quality check on a 4×4 toy model: the trained classifier must
    /// recover at least 95% of its own training labels.
    #[test]
    fn four_by_four_toy_model_fits_its_training_set() {
        let cfg = SensingConfig::default();
        let grid = make_grid(4).unwrap();
        let layout = deploy_sensors(&grid, 8).unwrap();
        let mut data_rng = rng(27).stream(0, 0);
        let dataset = discrete_dataset(&grid, layout.coarse(), 25, &cfg, &mut data_rng);
        let mut train_rng = rng(27).stream(1, 0);
        let model =
            init_model(8, DEFAULT_CIRCUIT_BLOCKS, HeadKind::Classifier, 16, 40.0, &mut train_rng)
                .unwrap();
        let config = TrainConfig { epochs: 20, ..TrainConfig::default() };
        let record = train(model, &dataset, &config, &mut train_rng).unwrap();
        let accuracy = fit_accuracy(&record.model, &dataset);
        assert!(accuracy >= 0.95, "training fit accuracy {accuracy}");
    }

    #[test]
    fn training_is_bit_reproducible_for_a_fixed_seed() {
        let cfg = SensingConfig::default();
        let grid = make_grid(2).unwrap();
        let layout = deploy_sensors(&grid, 4).unwrap();
        let run = || {
            let mut data_rng = rng(28).stream(0, 0);
            let dataset = discrete_dataset(&grid, layout.coarse(), 5, &cfg, &mut data_rng);
            let mut train_rng = rng(28).stream(1, 0);
            let model =
                init_model(4, 2, HeadKind::Classifier, 4, 20.0, &mut train_rng).unwrap();
            let config = TrainConfig { epochs: 5, batch_size: 8, ..TrainConfig::default() };
            train(model, &dataset, &config, &mut train_rng).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.model, b.model);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn one_level_classifier_returns_the_predicted_cell_center() {
        let cfg = SensingConfig::default();
        let grid = make_grid(4).unwrap();
        let layout = deploy_sensors(&grid, 4).unwrap();
        let circuit = CircuitSpec::new(4, 1).unwrap();
        let head = LinearHead::zeroed(HeadKind::Classifier, 16, 4).unwrap();
        let model = PqcModel::new(circuit, head, grid.side_length()).unwrap();
        let mut r = rng(29);
        let tx = sample_tx(&grid, 9, Setting::Discrete, &mut r, &layout).unwrap();
        let outcome = pqc_one(&model, &tx, &grid, layout.coarse(), &cfg, &mut r).unwrap();
        // All-zero scores tie toward class 0, whose cell center is (5, 5).
        assert_eq!(outcome.cell_id, 0);
        assert_relative_eq!(outcome.predicted.x, 5.0);
        assert_relative_eq!(outcome.predicted.y, 5.0);
    }

    #[test]
    fn one_level_regression_clamps_to_the_area() {
        let cfg = SensingConfig::default();
        let grid = make_grid(2).unwrap();
        let layout = deploy_sensors(&grid, 4).unwrap();
        let circuit = CircuitSpec::new(4, 1).unwrap();
        let head =
            LinearHead::new(HeadKind::Regression, 2, 4, vec![0.0; 8], vec![10.0, -3.0]).unwrap();
        let model = PqcModel::new(circuit, head, grid.side_length()).unwrap();
        let mut r = rng(30);
        let tx = sample_tx(&grid, 0, Setting::Discrete, &mut r, &layout).unwrap();
        let outcome = pqc_one(&model, &tx, &grid, layout.coarse(), &cfg, &mut r).unwrap();
        // Raw outputs (200, −60) meters clamp to the 20 m area.
        assert_relative_eq!(outcome.predicted.x, 20.0);
        assert_relative_eq!(outcome.predicted.y, 0.0);
        assert_eq!(outcome.cell_id, grid.cell_of(Point::new(20.0, 0.0)));
    }

    #[test]
    fn one_level_rejects_sensor_count_mismatch() {
        let cfg = SensingConfig::default();
        let grid = make_grid(4).unwrap();
        let layout = deploy_sensors(&grid, 8).unwrap();
        let circuit = CircuitSpec::new(4, 1).unwrap();
        let head = LinearHead::zeroed(HeadKind::Classifier, 16, 4).unwrap();
        let model = PqcModel::new(circuit, head, grid.side_length()).unwrap();
        let mut r = rng(31);
        let tx = sample_tx(&grid, 0, Setting::Discrete, &mut r, &layout).unwrap();
        assert_eq!(
            pqc_one(&model, &tx, &grid, layout.coarse(), &cfg, &mut r),
            Err(PqcError::DimensionMismatch { expected: 4, got: 8 })
        );
    }

    #[test]
    fn two_level_runs_the_fine_model_of_the_chosen_block() {
        let cfg = SensingConfig::default();
        let grid = make_grid(4).unwrap();
        let layout = deploy_sensors(&grid, 8).unwrap();
        let coarse = PqcModel::new(
            CircuitSpec::new(8, 1).unwrap(),
            LinearHead::zeroed(HeadKind::Classifier, 4, 8).unwrap(),
            grid.side_length(),
        )
        .unwrap();
        let mut fine = BTreeMap::new();
        fine.insert(
            0,
            PqcModel::new(
                CircuitSpec::new(4, 1).unwrap(),
                LinearHead::zeroed(HeadKind::Classifier, 4, 4).unwrap(),
                grid.side_length(),
            )
            .unwrap(),
        );
        let mut r = rng(32);
        let tx = sample_tx(&grid, 5, Setting::Discrete, &mut r, &layout).unwrap();
        let outcome = pqc_two(&coarse, &fine, &tx, &grid, &layout, &cfg, &mut r).unwrap();
        // Zero scores pick block 0; its lowest cell id is 0, center (5, 5).
        assert_eq!(outcome.block_id, 0);
        assert_eq!(outcome.cell_id, 0);
        assert_relative_eq!(outcome.predicted.x, 5.0);
        assert_relative_eq!(outcome.predicted.y, 5.0);
        // A block without a fine model is an error.
        let empty = BTreeMap::new();
        assert_eq!(
            pqc_two(&coarse, &empty, &tx, &grid, &layout, &cfg, &mut r),
            Err(PqcError::MissingFineModel { block_id: 0 })
        );
    }

    #[test]
    fn two_level_short_circuits_single_cell_blocks() {
        let cfg = SensingConfig::default();
        let grid = make_grid(2).unwrap();
        let layout = deploy_sensors(&grid, 4).unwrap().coarse_only();
        let coarse = PqcModel::new(
            CircuitSpec::new(4, 1).unwrap(),
            LinearHead::zeroed(HeadKind::Classifier, 4, 4).unwrap(),
            grid.side_length(),
        )
        .unwrap();
        let fine = BTreeMap::new();
        let mut r = rng(33);
        let tx = sample_tx(&grid, 3, Setting::Discrete, &mut r, &layout).unwrap();
        let outcome = pqc_two(&coarse, &fine, &tx, &grid, &layout, &cfg, &mut r).unwrap();
        assert_eq!(outcome.block_id, 0);
        assert_eq!(outcome.cell_id, 0);
        assert_relative_eq!(outcome.predicted.x, 5.0);
        assert_relative_eq!(outcome.predicted.y, 5.0);
    }
}
