//! Invariant validation of persisted measurements and models.
//!
//! A persisted artifact bypasses the library's constructors when it is
//! deserialized, so [`inspect_artifact`] re-derives every invariant from
//! the raw data: POVM completeness (element sum equals identity within
//! 1e-8 Frobenius, with the remainder's positivity guaranteed by support
//! idempotency within a dimension-scaled bound), target normalization and
//! prior normalization, Born-rule normalization on a probe state, and
//! model parameter-count/finiteness consistency. Each check reports
//! pass/fail with a diagnostic detail.

use qloc_core::pqc::{HeadKind, PqcModel};
use qloc_core::qmath::{ComplexMatrix, StateVector};
use qloc_core::qsd::{Povm, TargetStateSet};
use qloc_core::sensing::uniform_initial;

use crate::artifacts::{Artifact, Payload};

/// Outcome of one invariant check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    /// What was checked, prefixed by the component ("povm completeness").
    pub name: String,
    pub passed: bool,
    /// Measured residual or counts backing the verdict.
    pub detail: String,
}

impl CheckReport {
    fn new(name: String, passed: bool, detail: String) -> Self {
        CheckReport { name, passed, detail }
    }
}

/// Frobenius norm of (sum of all POVM elements) minus identity.
fn completeness_residual(povm: &Povm) -> f64 {
    let dim = povm.dim();
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for element in povm.dense_elements() {
        for r in 0..dim {
            for c in 0..dim {
                let v = sum.get(r, c) + element.get(r, c);
                sum.set(r, c, v);
            }
        }
    }
    sum.frobenius_distance(&ComplexMatrix::identity(dim))
}

/// Frobenius norm of Π² − Π for the support projector Π = Σ|y_i⟩⟨y_i|.
///
/// Idempotency is what makes the remainder element I − Π positive
/// semidefinite, so it stands in for a PSD check of the reject outcome.
fn support_idempotency_residual(povm: &Povm) -> f64 {
    let dim = povm.dim();
    let mut support = ComplexMatrix::zeros(dim, dim);
    for i in 0..povm.target_count() {
        let element = povm.element(i);
        for r in 0..dim {
            for c in 0..dim {
                let v = support.get(r, c) + element.get(r, c);
                support.set(r, c, v);
            }
        }
    }
    let squared = support.mul(&support).expect("square matrix product");
    squared.frobenius_distance(&support)
}

/// Checks one POVM: finite entries, completeness, remainder positivity,
/// and Born-rule normalization on the uniform-superposition probe state.
pub fn check_povm(label: &str, povm: &Povm, expected_targets: usize) -> Vec<CheckReport> {
    let mut reports = Vec::new();

    let finite = povm
        .dense_elements()
        .iter()
        .all(|e| (0..povm.dim()).all(|r| (0..povm.dim()).all(|c| {
            let v = e.get(r, c);
            v.re.is_finite() && v.im.is_finite()
        })));
    reports.push(CheckReport::new(
        format!("{label} entries finite"),
        finite,
        format!("{} outcomes of dimension {}", povm.outcome_count(), povm.dim()),
    ));

    reports.push(CheckReport::new(
        format!("{label} target count"),
        povm.target_count() == expected_targets,
        format!("{} targets (expected {expected_targets})", povm.target_count()),
    ));

    let residual = completeness_residual(povm);
    reports.push(CheckReport::new(
        format!("{label} completeness"),
        residual <= 1e-8,
        format!("|sum(E) - I|_F = {residual:.3e}"),
    ));

    if povm.reject_index().is_some() {
        let idem = support_idempotency_residual(povm);
        // The inverse square root behind the outcome factors amplifies
        // roundoff near the support cutoff, and the residual accumulates
        // it across the dimension; corruption lands orders of magnitude
        // above this bound (a single tampered entry already costs ~1e-1).
        let tolerance = 1e-8 * povm.dim() as f64;
        reports.push(CheckReport::new(
            format!("{label} remainder positivity"),
            idem <= tolerance,
            format!("support idempotency residual {idem:.3e}"),
        ));
    }

    let qubits = povm.dim().trailing_zeros() as usize;
    let probe_ok = usize::is_power_of_two(povm.dim())
        && match uniform_initial(qubits) {
            Ok(probe) => povm.probabilities(&probe).is_ok(),
            Err(_) => false,
        };
    reports.push(CheckReport::new(
        format!("{label} born rule normalizes"),
        probe_ok,
        String::from("probabilities of the uniform probe state sum to 1"),
    ));

    reports
}

/// Checks one target set: matching lengths, unit-norm states, normalized
/// priors.
pub fn check_targets(label: &str, targets: &TargetStateSet) -> Vec<CheckReport> {
    let mut reports = Vec::new();
    let n = targets.len();
    let lengths_ok = targets.priors().len() == n && targets.locations().len() == n;
    reports.push(CheckReport::new(
        format!("{label} field lengths"),
        lengths_ok,
        format!(
            "{n} states, {} priors, {} locations",
            targets.priors().len(),
            targets.locations().len()
        ),
    ));
    let worst_norm = targets
        .states()
        .iter()
        .map(|s: &StateVector| (s.norm_sqr() - 1.0).abs())
        .fold(0.0f64, f64::max);
    reports.push(CheckReport::new(
        format!("{label} state norms"),
        worst_norm <= 1e-8,
        format!("max |norm^2 - 1| = {worst_norm:.3e}"),
    ));
    let prior_sum: f64 = targets.priors().iter().sum();
    reports.push(CheckReport::new(
        format!("{label} priors normalized"),
        (prior_sum - 1.0).abs() <= 1e-8 && targets.priors().iter().all(|&q| q > 0.0),
        format!("sum = {prior_sum:.12}"),
    ));
    reports
}

/// Checks one model: parameter counts, finiteness, head/circuit dimension
/// agreement, and the regression-output contract.
pub fn check_model(label: &str, model: &PqcModel) -> Vec<CheckReport> {
    let mut reports = Vec::new();
    let circuit = model.circuit();
    let head = model.head();

    reports.push(CheckReport::new(
        format!("{label} angle count"),
        circuit.angles().len() == circuit.angle_count(),
        format!(
            "{} angles for {} qubits x {} blocks (expected {})",
            circuit.angles().len(),
            circuit.qubits(),
            circuit.blocks(),
            circuit.angle_count()
        ),
    ));
    reports.push(CheckReport::new(
        format!("{label} angles finite"),
        circuit.angles().iter().all(|a| a.is_finite()),
        format!("{} angles", circuit.angles().len()),
    ));
    reports.push(CheckReport::new(
        format!("{label} head dimensions"),
        head.inputs() == circuit.qubits()
            && head.weights().len() == head.outputs() * head.inputs()
            && head.bias().len() == head.outputs()
            && head.outputs() >= 1,
        format!(
            "{} -> {} ({} weights, {} biases)",
            head.inputs(),
            head.outputs(),
            head.weights().len(),
            head.bias().len()
        ),
    ));
    reports.push(CheckReport::new(
        format!("{label} head finite"),
        head.weights().iter().chain(head.bias()).all(|w| w.is_finite()),
        String::from("weights and biases"),
    ));
    if head.kind() == HeadKind::Regression {
        reports.push(CheckReport::new(
            format!("{label} regression outputs"),
            head.outputs() == 2,
            format!("{} outputs (expected 2)", head.outputs()),
        ));
    }
    reports.push(CheckReport::new(
        format!("{label} coordinate scale"),
        model.coord_scale().is_finite() && model.coord_scale() > 0.0,
        format!("{}", model.coord_scale()),
    ));
    reports
}

/// Validates every invariant of a persisted artifact.
pub fn inspect_artifact(artifact: &Artifact) -> Vec<CheckReport> {
    match &artifact.payload {
        Payload::QsdOne(d) => {
            let mut reports = check_targets("targets", d.targets());
            reports.extend(check_povm("povm", d.povm(), d.targets().len()));
            reports.push(CheckReport::new(
                String::from("dimension agreement"),
                d.povm().dim() == d.targets().states()[0].dim(),
                format!("povm dim {}, target dim {}", d.povm().dim(), d.targets().states()[0].dim()),
            ));
            reports
        }
        Payload::QsdTwo(d) => {
            let mut reports = check_targets("coarse targets", d.coarse_targets());
            reports.extend(check_povm("coarse povm", d.coarse_povm(), d.coarse_targets().len()));
            let blocks = d.fine_stage_count();
            let present = (0..blocks).filter(|&b| d.fine_povm(b).is_some()).count();
            let expected = if d.short_circuits_fine_stage() { 0 } else { blocks };
            reports.push(CheckReport::new(
                String::from("fine stage coverage"),
                present == expected,
                format!("{present} of {blocks} stages present (expected {expected})"),
            ));
            for b in 0..blocks {
                let (Some(povm), Some(targets)) = (d.fine_povm(b), d.fine_targets(b)) else {
                    continue;
                };
                reports.extend(check_targets(&format!("fine-{b} targets"), targets));
                reports.extend(check_povm(&format!("fine-{b} povm"), povm, targets.len()));
            }
            reports
        }
        Payload::PqcOne { model, epoch_losses } => {
            let mut reports = check_model("model", model);
            reports.push(loss_history_check(epoch_losses, 1));
            reports
        }
        Payload::PqcTwo { coarse, fine, epoch_losses } => {
            let mut reports = check_model("coarse", coarse);
            reports.push(CheckReport::new(
                String::from("coarse is a classifier"),
                coarse.head().kind() == HeadKind::Classifier,
                format!("kind {:?}", coarse.head().kind()),
            ));
            let mut ids: Vec<usize> = fine.iter().map(|(b, _)| *b).collect();
            let before = ids.len();
            ids.sort_unstable();
            ids.dedup();
            reports.push(CheckReport::new(
                String::from("fine block ids unique"),
                ids.len() == before,
                format!("{before} fine models"),
            ));
            for (b, model) in fine {
                reports.extend(check_model(&format!("fine-{b}"), model));
            }
            reports.push(loss_history_check(epoch_losses, 1 + fine.len()));
            reports
        }
    }
}

/// One model-count/finiteness check over the stored loss history.
fn loss_history_check(epoch_losses: &[Vec<f64>], expected_models: usize) -> CheckReport {
    let finite = epoch_losses.iter().flatten().all(|l| l.is_finite());
    CheckReport::new(
        String::from("loss history"),
        epoch_losses.len() == expected_models && finite,
        format!("{} models (expected {expected_models}), losses finite: {finite}", epoch_losses.len()),
    )
}
