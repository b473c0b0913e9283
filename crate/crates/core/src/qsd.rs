//! Quantum state discrimination: pretty-good-measurement construction,
//! measurement simulation, multi-shot majority voting, and the one-level /
//! two-level localization pipelines.
//!
//! Localization by discrimination treats each candidate location as a known
//! "target" sensor state (the noiseless evolution for a transmitter at that
//! point) and asks which target the actually sensed state matches:
//!
//! - [`build_pgm`]: E_i = q_i ρ^{−1/2} ρ_i ρ^{−1/2} with ρ = Σ q_i ρ_i. For
//!   pure targets every element is rank-1, so the POVM is stored in factored
//!   form y_i = √q_i ρ^{−1/2}|ψ_i⟩ and outcome probabilities are plain inner
//!   products. When ρ is rank-deficient a remainder element E_⊥ = I − Π is
//!   appended and mapped to a "reject" outcome so completeness holds exactly.
//! - [`measure`]: one Born-rule draw from ⟨ψ|E_i|ψ⟩.
//! - [`discriminate_multishot`]: evolves a fresh noisy state per shot
//!   (transmitter fixed, noise redrawn) and returns the modal outcome, ties
//!   broken toward the lowest index.
//! - [`qsd_one`] / [`OneLevelDiscriminator`]: one PGM over all cell centers.
//! - [`qsd_two`] / [`TwoLevelDiscriminator`]: a PGM over block centers
//!   sensed by the coarse sensors picks a block, then a per-block PGM over
//!   that block's cell centers sensed by its four fine sensors picks the
//!   cell. The fine stage never queries sensors outside the chosen block's
//!   four, and single-cell blocks short-circuit it (one candidate needs no
//!   sensing).
//!
//! A winning reject outcome resolves to the lowest-index candidate (the
//! argmax of the uniform priors), keeping pipelines total.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{GridGeometry, Point, SensorLayout, TxLocation};
use crate::qmath::{pinv_sqrt, Complex64, ComplexMatrix, QmathError, Rng, StateVector};
use crate::sensing::{evolve, sample_noises, uniform_initial, SensingConfig, SensingError};

#[allow(unused_imports)]
use num_traits::Float;

/// Largest register any single discrimination instance may use.
pub const MAX_QSD_QUBITS: usize = 8;

/// Default number of measurement repetitions per discrimination.
pub const DEFAULT_SHOTS: usize = 1000;

/// Errors from POVM construction, measurement, and the pipelines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QsdError {
    /// More sensors than a single discrimination instance supports.
    #[error("{got} qubits exceed the {max}-qubit discrimination limit")]
    TooManyQubits { got: usize, max: usize },
    /// A target state has (numerically) zero norm.
    #[error("target state {index} has zero norm")]
    DegenerateTargets { index: usize },
    /// No target states were supplied.
    #[error("target set is empty")]
    EmptyTargets,
    /// Outcome probabilities failed the normalization check.
    #[error("outcome probabilities sum to {sum}, not 1 within 1e-8 (corrupted POVM or state)")]
    NotNormalized { sum: f64 },
    /// Operand dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// The layout carries no fine sensors for the block the coarse stage
    /// chose.
    #[error("layout has no fine sensors for block {block_id}")]
    MissingFineSensors { block_id: usize },
    /// Propagated sensing failure.
    #[error(transparent)]
    Sensing(#[from] SensingError),
    /// Propagated linear-algebra failure.
    #[error(transparent)]
    Math(#[from] QmathError),
}

/// Candidate target states with their priors and physical locations.
///
/// Invariants: priors sum to 1 within 1e-12 and are all positive; every
/// state has the same qubit count; states, priors, and locations have equal
/// length.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TargetStateSet {
    states: Vec<StateVector>,
    priors: Vec<f64>,
    locations: Vec<Point>,
}

impl TargetStateSet {
    /// Builds a target set with explicit priors.
    pub fn new(
        states: Vec<StateVector>,
        priors: Vec<f64>,
        locations: Vec<Point>,
    ) -> Result<Self, QsdError> {
        if states.is_empty() {
            return Err(QsdError::EmptyTargets);
        }
        if priors.len() != states.len() {
            return Err(QsdError::DimensionMismatch { expected: states.len(), got: priors.len() });
        }
        if locations.len() != states.len() {
            return Err(QsdError::DimensionMismatch {
                expected: states.len(),
                got: locations.len(),
            });
        }
        let dim = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(QsdError::DimensionMismatch { expected: dim, got: bad.dim() });
        }
        let sum: f64 = priors.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || priors.iter().any(|&q| q <= 0.0) {
            return Err(QsdError::NotNormalized { sum });
        }
        Ok(Self { states, priors, locations })
    }

    /// Builds a target set with uniform priors.
    pub fn uniform(states: Vec<StateVector>, locations: Vec<Point>) -> Result<Self, QsdError> {
        let n = states.len();
        if n == 0 {
            return Err(QsdError::EmptyTargets);
        }
        let priors = vec![1.0 / n as f64; n];
        Self::new(states, priors, locations)
    }

    /// Target states.
    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    /// Prior probabilities.
    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// Physical candidate locations.
    pub fn locations(&self) -> &[Point] {
        &self.locations
    }

    /// Number of candidates.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// True when the set is empty (constructors forbid this).
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Qubit count shared by all targets.
    pub fn qubits(&self) -> usize {
        self.states[0].qubits()
    }

    /// The lowest index among maximal priors: where a reject outcome
    /// resolves (for uniform priors, candidate 0).
    pub fn prior_argmax(&self) -> usize {
        let mut best = 0;
        for (i, &q) in self.priors.iter().enumerate() {
            if q > self.priors[best] {
                best = i;
            }
        }
        best
    }
}

/// Noiseless target states: the evolved sensor state for a transmitter at
/// each candidate point.
pub fn noiseless_targets(
    candidates: &[Point],
    sensors: &[Point],
    cfg: &SensingConfig,
) -> Result<Vec<StateVector>, QsdError> {
    let m = sensors.len();
    let initial = uniform_initial(m).map_err(QsdError::Sensing)?;
    let zeros = vec![0.0; m];
    candidates
        .iter()
        .map(|&c| {
            evolve(&initial, c, sensors, &zeros, cfg).map_err(QsdError::Sensing)
        })
        .collect()
}

/// A pretty-good measurement over pure targets, stored in factored rank-1
/// form plus an optional remainder element.
///
/// Invariants (verified by tests on the dense form): every element is
/// Hermitian PSD within 1e-8 and the elements sum to the identity within
/// 1e-8 Frobenius.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Povm {
    dim: usize,
    /// y_i = √q_i · ρ^{−1/2} |ψ_i⟩; E_i = |y_i⟩⟨y_i|.
    factors: Vec<Vec<Complex64>>,
    /// Whether a remainder element E_⊥ = I − Σ E_i is appended.
    reject: bool,
}

impl Povm {
    /// Hilbert-space dimension 2^m.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of outcomes, including the reject outcome when present.
    pub fn outcome_count(&self) -> usize {
        self.factors.len() + usize::from(self.reject)
    }

    /// Number of target-aligned outcomes (excluding reject).
    pub fn target_count(&self) -> usize {
        self.factors.len()
    }

    /// Index of the reject outcome, when the POVM has one.
    pub fn reject_index(&self) -> Option<usize> {
        self.reject.then_some(self.factors.len())
    }

    /// Born-rule outcome probabilities ⟨ψ|E_i|ψ⟩ for `state`, renormalized.
    ///
    /// Returns `NotNormalized` when the raw probabilities sum outside
    /// 1 ± 1e-8 (a corrupted POVM or unnormalized state), and
    /// `DimensionMismatch` when the state dimension differs.
    pub fn probabilities(&self, state: &StateVector) -> Result<Vec<f64>, QsdError> {
        if state.dim() != self.dim {
            return Err(QsdError::DimensionMismatch { expected: self.dim, got: state.dim() });
        }
        let amps = state.amplitudes();
        let mut probs = Vec::with_capacity(self.outcome_count());
        let mut covered = 0.0;
        for y in &self.factors {
            let mut overlap = Complex64::new(0.0, 0.0);
            for (a, b) in y.iter().zip(amps) {
                overlap += a.conj() * b;
            }
            let p = overlap.norm_sqr();
            covered += p;
            probs.push(p);
        }
        if self.reject {
            // Σ_i E_i is the support projector Π, so the remainder
            // probability ⟨ψ|(I − Π)|ψ⟩ is exactly 1 − Σ p_i for a
            // normalized state; clamp the tiny negative residue.
            probs.push((1.0 - covered).max(0.0));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-8 {
            return Err(QsdError::NotNormalized { sum });
        }
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(probs)
    }

    /// Dense matrix of element `i` (the remainder element for the reject
    /// index). Intended for validation and serialization; measurement never
    /// materializes these.
    pub fn element(&self, i: usize) -> ComplexMatrix {
        if i < self.factors.len() {
            let mut e = ComplexMatrix::zeros(self.dim, self.dim);
            e.add_scaled_outer(&self.factors[i], 1.0).expect("factor length matches dim");
            e
        } else {
            debug_assert!(self.reject && i == self.factors.len());
            let mut support = ComplexMatrix::zeros(self.dim, self.dim);
            for y in &self.factors {
                support.add_scaled_outer(y, 1.0).expect("factor length matches dim");
            }
            let mut e = ComplexMatrix::identity(self.dim);
            for r in 0..self.dim {
                for c in 0..self.dim {
                    let v = e.get(r, c) - support.get(r, c);
                    e.set(r, c, v);
                }
            }
            e
        }
    }

    /// All elements in dense form, remainder last.
    pub fn dense_elements(&self) -> Vec<ComplexMatrix> {
        (0..self.outcome_count()).map(|i| self.element(i)).collect()
    }
}

/// Builds the pretty-good measurement for a target set:
/// E_i = q_i ρ^{−1/2} |ψ_i⟩⟨ψ_i| ρ^{−1/2} with ρ = Σ q_i |ψ_i⟩⟨ψ_i| and the
/// inverse square root taken on ρ's support.
///
/// When ρ is rank-deficient (always, when there are fewer targets than
/// dimensions), a remainder element E_⊥ = I − Π_support is appended and
/// reported through [`Povm::reject_index`], so completeness holds exactly.
///
/// Returns `TooManyQubits` beyond 8 qubits and `DegenerateTargets` when a
/// target has zero norm.
pub fn build_pgm(targets: &TargetStateSet) -> Result<Povm, QsdError> {
    let m = targets.qubits();
    if m > MAX_QSD_QUBITS {
        return Err(QsdError::TooManyQubits { got: m, max: MAX_QSD_QUBITS });
    }
    if let Some(bad) = targets.states().iter().position(|s| s.norm_sqr() < 1e-12) {
        return Err(QsdError::DegenerateTargets { index: bad });
    }
    let dim = targets.states()[0].dim();
    let mut rho = ComplexMatrix::zeros(dim, dim);
    for (state, &q) in targets.states().iter().zip(targets.priors()) {
        rho.add_scaled_outer(state.amplitudes(), q)?;
    }
    // Negative tol selects the scale-free default support cutoff.
    let root = pinv_sqrt(&rho, -1.0)?;
    let mut factors = Vec::with_capacity(targets.len());
    let mut support_trace = 0.0;
    for (state, &q) in targets.states().iter().zip(targets.priors()) {
        let mut y = root.mul_vec(state.amplitudes())?;
        let scale = q.sqrt();
        for a in y.iter_mut() {
            *a *= scale;
        }
        support_trace += y.iter().map(|a| a.norm_sqr()).sum::<f64>();
        factors.push(y);
    }
    // Σ E_i is the projector onto ρ's support, whose trace is the rank; a
    // deficit against the full dimension calls for the remainder element.
    let reject = support_trace < dim as f64 - 0.5;
    Ok(Povm { dim, factors, reject })
}

/// Diagnostic probability of error of a POVM against its target set:
/// Σ_i q_i Σ_{j≠i} ⟨ψ_i|E_j|ψ_i⟩.
pub fn probability_of_error(povm: &Povm, targets: &TargetStateSet) -> Result<f64, QsdError> {
    if targets.len() > povm.target_count() {
        return Err(QsdError::DimensionMismatch {
            expected: povm.target_count(),
            got: targets.len(),
        });
    }
    let mut poe = 0.0;
    for (i, (state, &q)) in targets.states().iter().zip(targets.priors()).enumerate() {
        let probs = povm.probabilities(state)?;
        poe += q * (1.0 - probs[i]);
    }
    Ok(poe)
}

/// Draws one measurement outcome from the Born distribution ⟨ψ|E_i|ψ⟩.
///
/// Returns errors from [`Povm::probabilities`].
pub fn measure(state: &StateVector, povm: &Povm, rng: &mut Rng) -> Result<usize, QsdError> {
    let probs = povm.probabilities(state)?;
    let u = rng.uniform();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(probs.len() - 1)
}

/// Modal index with ties broken toward the lowest index.
fn modal(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Repeats sense-and-measure `shots` times against a fixed transmitter and
/// returns the most frequent outcome (lowest index on ties).
///
/// Every shot evolves a fresh state from the uniform initial register with
/// fresh per-sensor noise draws, then measures it; the transmitter never
/// moves between shots. The modal outcome ranges over all POVM outcomes,
/// including the reject outcome when present.
///
/// `shots` must be at least 1.
pub fn discriminate_multishot(
    tx: &TxLocation,
    sensors: &[Point],
    povm: &Povm,
    targets: &TargetStateSet,
    shots: usize,
    cfg: &SensingConfig,
    rng: &mut Rng,
) -> Result<usize, QsdError> {
    assert!(shots >= 1, "at least one shot is required");
    let m = targets.qubits();
    if sensors.len() != m {
        return Err(QsdError::DimensionMismatch { expected: m, got: sensors.len() });
    }
    let initial = uniform_initial(m).map_err(QsdError::Sensing)?;
    let mut counts = vec![0usize; povm.outcome_count()];
    for _ in 0..shots {
        let noises = sample_noises(m, cfg, rng);
        let state = evolve(&initial, tx.point(), sensors, &noises, cfg)?;
        let outcome = measure(&state, povm, rng)?;
        counts[outcome] += 1;
    }
    Ok(modal(&counts))
}

/// Outcome of a one-level localization: the winning cell and its center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneLevelOutcome {
    /// Predicted transmitter position (a cell center).
    pub predicted: Point,
    /// Row-major index of the predicted cell.
    pub cell_id: usize,
}

/// One-level pipeline: a single PGM over every cell center, sensed by the
/// coarse sensors. Build once, localize many times.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OneLevelDiscriminator {
    targets: TargetStateSet,
    povm: Povm,
    sensors: Vec<Point>,
    shots: usize,
}

impl OneLevelDiscriminator {
    /// Builds cell-center targets (noiseless evolution) and their PGM.
    ///
    /// Returns `TooManyQubits` when the layout has more than 8 coarse
    /// sensors.
    pub fn build(
        grid: &GridGeometry,
        layout: &SensorLayout,
        shots: usize,
        cfg: &SensingConfig,
    ) -> Result<Self, QsdError> {
        let sensors = layout.coarse().to_vec();
        if sensors.len() > MAX_QSD_QUBITS {
            return Err(QsdError::TooManyQubits { got: sensors.len(), max: MAX_QSD_QUBITS });
        }
        let locations = grid.cell_centers();
        let states = noiseless_targets(&locations, &sensors, cfg)?;
        let targets = TargetStateSet::uniform(states, locations)?;
        let povm = build_pgm(&targets)?;
        Ok(Self { targets, povm, sensors, shots })
    }

    /// The PGM over all cell centers.
    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    /// The cell-center target set.
    pub fn targets(&self) -> &TargetStateSet {
        &self.targets
    }

    /// Localizes one transmitter: multi-shot discrimination over all cell
    /// centers; a winning reject outcome resolves to the lowest-index
    /// candidate.
    pub fn localize(
        &self,
        tx: &TxLocation,
        cfg: &SensingConfig,
        rng: &mut Rng,
    ) -> Result<OneLevelOutcome, QsdError> {
        let outcome = discriminate_multishot(
            tx,
            &self.sensors,
            &self.povm,
            &self.targets,
            self.shots,
            cfg,
            rng,
        )?;
        let cell_id = if Some(outcome) == self.povm.reject_index() {
            self.targets.prior_argmax()
        } else {
            outcome
        };
        Ok(OneLevelOutcome { predicted: self.targets.locations()[cell_id], cell_id })
    }
}

/// Outcome of a two-level localization: chosen block, winning cell, center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelOutcome {
    /// Predicted transmitter position (a cell center).
    pub predicted: Point,
    /// Row-major index of the predicted cell.
    pub cell_id: usize,
    /// Block chosen by the coarse stage.
    pub block_id: usize,
}

/// Per-block fine stage: the cell-center targets of one block and their PGM,
/// sensed by the block's four fine sensors.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
struct FineStage {
    targets: TargetStateSet,
    povm: Povm,
    sensors: Vec<Point>,
    cell_ids: Vec<usize>,
}

/// Two-level pipeline: a PGM over block centers (coarse sensors) picks a
/// block, then that block's PGM over its cell centers (its four fine
/// sensors) picks the cell. All stages are built eagerly so localization
/// never rebuilds a POVM.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoLevelDiscriminator {
    coarse_targets: TargetStateSet,
    coarse_povm: Povm,
    coarse_sensors: Vec<Point>,
    /// One fine stage per block, indexed by block id; None when blocks are
    /// single cells (the fine stage short-circuits).
    fine: Vec<Option<FineStage>>,
    shots: usize,
    single_cell_blocks: bool,
}

impl TwoLevelDiscriminator {
    /// Builds the block-center PGM and one per-block cell-center PGM.
    ///
    /// With single-cell blocks (block side 1) the fine stages are omitted:
    /// picking the block already picks its only cell, so its center is
    /// returned without further sensing.
    pub fn build(
        grid: &GridGeometry,
        layout: &SensorLayout,
        shots: usize,
        cfg: &SensingConfig,
    ) -> Result<Self, QsdError> {
        let coarse_sensors = layout.coarse().to_vec();
        if coarse_sensors.len() > MAX_QSD_QUBITS {
            return Err(QsdError::TooManyQubits { got: coarse_sensors.len(), max: MAX_QSD_QUBITS });
        }
        let block_locations = grid.block_centers();
        let coarse_states = noiseless_targets(&block_locations, &coarse_sensors, cfg)?;
        let coarse_targets = TargetStateSet::uniform(coarse_states, block_locations)?;
        let coarse_povm = build_pgm(&coarse_targets)?;

        let single_cell_blocks = grid.block_side() == 1;
        let mut fine = Vec::with_capacity(grid.block_count());
        for b in 0..grid.block_count() {
            if single_cell_blocks {
                fine.push(None);
                continue;
            }
            let sensors = layout
                .fine_of(b)
                .ok_or(QsdError::MissingFineSensors { block_id: b })?
                .to_vec();
            let cell_ids = grid.cells_in_block(b);
            let locations: Vec<Point> = cell_ids.iter().map(|&c| grid.cell_center(c)).collect();
            let states = noiseless_targets(&locations, &sensors, cfg)?;
            let targets = TargetStateSet::uniform(states, locations)?;
            let povm = build_pgm(&targets)?;
            fine.push(Some(FineStage { targets, povm, sensors, cell_ids }));
        }
        Ok(Self { coarse_targets, coarse_povm, coarse_sensors, fine, shots, single_cell_blocks })
    }

    /// The block-center PGM of the coarse stage.
    pub fn coarse_povm(&self) -> &Povm {
        &self.coarse_povm
    }

    /// The block-center target set of the coarse stage.
    pub fn coarse_targets(&self) -> &TargetStateSet {
        &self.coarse_targets
    }

    /// Number of per-block fine stages (counting short-circuited ones).
    pub fn fine_stage_count(&self) -> usize {
        self.fine.len()
    }

    /// The fine-stage PGM of `block_id`, when that stage exists.
    pub fn fine_povm(&self, block_id: usize) -> Option<&Povm> {
        self.fine.get(block_id)?.as_ref().map(|f| &f.povm)
    }

    /// The fine-stage target set of `block_id`, when that stage exists.
    pub fn fine_targets(&self, block_id: usize) -> Option<&TargetStateSet> {
        self.fine.get(block_id)?.as_ref().map(|f| &f.targets)
    }

    /// Number of fine-stage candidates for `block_id` (0 when the stage is
    /// short-circuited).
    pub fn fine_target_count(&self, block_id: usize) -> usize {
        self.fine[block_id].as_ref().map_or(0, |f| f.targets.len())
    }

    /// True when single-cell blocks make the fine stage unnecessary.
    pub fn short_circuits_fine_stage(&self) -> bool {
        self.single_cell_blocks
    }

    /// Localizes one transmitter: coarse stage over block centers, then the
    /// chosen block's fine stage over its cell centers with fresh evolved
    /// states. Reject outcomes resolve to the lowest-index candidate of
    /// their stage.
    pub fn localize(
        &self,
        tx: &TxLocation,
        cfg: &SensingConfig,
        rng: &mut Rng,
    ) -> Result<TwoLevelOutcome, QsdError> {
        let coarse_outcome = discriminate_multishot(
            tx,
            &self.coarse_sensors,
            &self.coarse_povm,
            &self.coarse_targets,
            self.shots,
            cfg,
            rng,
        )?;
        let block_id = if Some(coarse_outcome) == self.coarse_povm.reject_index() {
            self.coarse_targets.prior_argmax()
        } else {
            coarse_outcome
        };
        let Some(stage) = &self.fine[block_id] else {
            // Single-cell block: its center is its only cell's center.
            let predicted = self.coarse_targets.locations()[block_id];
            return Ok(TwoLevelOutcome { predicted, cell_id: block_id_to_cell_single(self, block_id), block_id });
        };
        let fine_outcome = discriminate_multishot(
            tx,
            &stage.sensors,
            &stage.povm,
            &stage.targets,
            self.shots,
            cfg,
            rng,
        )?;
        let idx = if Some(fine_outcome) == stage.povm.reject_index() {
            stage.targets.prior_argmax()
        } else {
            fine_outcome
        };
        Ok(TwoLevelOutcome {
            predicted: stage.targets.locations()[idx],
            cell_id: stage.cell_ids[idx],
            block_id,
        })
    }
}

/// With block side 1, block ids and cell ids coincide index-for-index.
fn block_id_to_cell_single(_d: &TwoLevelDiscriminator, block_id: usize) -> usize {
    block_id
}

/// One-level localization of a single transmitter (convenience wrapper that
/// builds the pipeline and runs it once; reuse [`OneLevelDiscriminator`]
/// for repeated evaluation).
pub fn qsd_one(
    grid: &GridGeometry,
    layout: &SensorLayout,
    tx: &TxLocation,
    shots: usize,
    cfg: &SensingConfig,
    rng: &mut Rng,
) -> Result<Point, QsdError> {
    Ok(OneLevelDiscriminator::build(grid, layout, shots, cfg)?.localize(tx, cfg, rng)?.predicted)
}

/// Two-level localization of a single transmitter (convenience wrapper; see
/// [`TwoLevelDiscriminator`] for the cached form).
pub fn qsd_two(
    grid: &GridGeometry,
    layout: &SensorLayout,
    tx: &TxLocation,
    shots: usize,
    cfg: &SensingConfig,
    rng: &mut Rng,
) -> Result<Point, QsdError> {
    Ok(TwoLevelDiscriminator::build(grid, layout, shots, cfg)?.localize(tx, cfg, rng)?.predicted)
}
