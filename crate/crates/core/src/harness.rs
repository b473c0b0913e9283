//! Experiment harness: dataset generation, scheme construction, evaluation,
//! and the localization metrics (mean error, cell-classification accuracy,
//! error CDF).
//!
//! The harness turns an [`ExperimentConfig`] into a ready-to-query
//! [`Predictor`] ([`build_scheme`]) and drives it over a deterministic
//! evaluation set ([`evaluate`]): one transmitter per cell per repetition,
//! at the cell center (discrete) or uniformly inside the cell (continuous).
//!
//! Reproducibility rests on disjoint derived random streams from one root
//! seed: training data, training initialization/shuffling, per-transmitter
//! evaluation sampling, and per-transmitter localization noise each draw
//! from their own stream, so evaluation never reuses training noise and
//! per-transmitter work can run in any order (or in parallel) without
//! changing a single byte of the result.
//!
//! Transmitter sampling keeps the minimum sensor separation against exactly
//! the sensors that may sense that transmitter: the coarse set for
//! one-level schemes, coarse plus fine for two-level schemes (coarse alone
//! when single-cell blocks short-circuit the fine stage), and one block's
//! fine quartet for that block's fine training set.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{
    deploy_sensors, make_grid, sample_tx, GeometryError, GridGeometry, Point, SensorLayout,
    Setting, TxLocation,
};
use crate::pqc::{
    init_model, pqc_one, pqc_two, train, HeadKind, PqcError, PqcModel, Sample, TrainConfig,
    DEFAULT_CIRCUIT_BLOCKS,
};
use crate::qmath::Rng;
use crate::qsd::{
    OneLevelDiscriminator, QsdError, TwoLevelDiscriminator, DEFAULT_SHOTS, MAX_QSD_QUBITS,
};
use crate::sensing::{evolve, sample_noises, uniform_initial, SensingConfig, SensingError};

#[allow(unused_imports)]
use num_traits::Float;

/// Stream purpose: training-set sampling and noise (index 0 for the
/// one-level or coarse set, 1 + b for block b's fine set).
pub const STREAM_TRAIN_DATA: u32 = 0;

/// Stream purpose: model initialization and mini-batch shuffling (same
/// index scheme as [`STREAM_TRAIN_DATA`]).
pub const STREAM_TRAIN_INIT: u32 = 1;

/// Stream purpose: evaluation transmitter sampling, indexed per
/// transmitter.
pub const STREAM_EVAL_TX: u32 = 2;

/// Stream purpose: evaluation localization noise and measurement, indexed
/// per transmitter.
pub const STREAM_EVAL_LOCALIZE: u32 = 3;

/// Default training samples per cell.
pub const DEFAULT_SAMPLES_PER_CELL: usize = 100;

/// Default evaluation repetitions in the continuous setting.
pub const DEFAULT_CONTINUOUS_REPETITIONS: usize = 1;

/// Default evaluation repetitions in the discrete setting.
pub const DEFAULT_DISCRETE_REPETITIONS: usize = 10;

/// Errors from configuration validation, dataset generation, scheme
/// construction, and evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    /// A configuration field is unusable; the message names it.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// The layout carries no fine sensors for a requested block.
    #[error("layout has no fine sensors for block {block_id}")]
    MissingFineSensors { block_id: usize },
    /// Propagated geometry failure.
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    /// Propagated sensing failure.
    #[error(transparent)]
    Sensing(#[from] SensingError),
    /// Propagated discrimination failure.
    #[error(transparent)]
    Qsd(#[from] QsdError),
    /// Propagated circuit-learning failure.
    #[error(transparent)]
    Pqc(#[from] PqcError),
}

/// The four localization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Scheme {
    /// One-level state discrimination: one measurement over all cells.
    QsdOne,
    /// Two-level state discrimination: block stage, then in-block stage.
    QsdTwo,
    /// One-level trained circuit over all cells (or coordinates).
    PqcOne,
    /// Two-level trained circuits: block classifier, then per-block model.
    PqcTwo,
}

impl Scheme {
    /// Canonical kebab-case name.
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::QsdOne => "qsd-one",
            Scheme::QsdTwo => "qsd-two",
            Scheme::PqcOne => "pqc-one",
            Scheme::PqcTwo => "pqc-two",
        }
    }

    /// Whether this is a discrimination (measurement-only) scheme.
    pub fn is_qsd(&self) -> bool {
        matches!(self, Scheme::QsdOne | Scheme::QsdTwo)
    }

    /// Whether this scheme runs a coarse stage before a fine stage.
    pub fn is_two_level(&self) -> bool {
        matches!(self, Scheme::QsdTwo | Scheme::PqcTwo)
    }

    /// Largest supported coarse sensor count.
    pub fn max_sensors(&self) -> usize {
        if self.is_qsd() {
            MAX_QSD_QUBITS
        } else {
            crate::pqc::MAX_PQC_QUBITS
        }
    }
}

impl core::fmt::Display for Scheme {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Scheme {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qsd-one" => Ok(Scheme::QsdOne),
            "qsd-two" => Ok(Scheme::QsdTwo),
            "pqc-one" => Ok(Scheme::PqcOne),
            "pqc-two" => Ok(Scheme::PqcTwo),
            other => Err(HarnessError::InvalidConfig(format!(
                "unknown scheme \"{other}\"; expected qsd-one, qsd-two, pqc-one, or pqc-two"
            ))),
        }
    }
}

/// Everything that defines one reproducible experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentConfig {
    /// Grid side in cells (n×n cells of 10 m).
    pub grid_n: usize,
    /// Deployed coarse sensor count (4, 8, or 16).
    pub sensors: usize,
    /// Localization scheme.
    pub scheme: Scheme,
    /// Transmitter placement: cell centers or uniform within cells.
    pub setting: Setting,
    /// Predictor variant for learned schemes; discrimination schemes are
    /// always classifiers.
    pub variant: HeadKind,
    /// Measurement repetitions per discrimination stage.
    pub shots: usize,
    /// Training samples per cell for learned schemes.
    pub samples_per_cell: usize,
    /// Override for the coarse-stage training set of two-level learned
    /// schemes; `None` falls back to `samples_per_cell`. The coarse stage
    /// holds the full sensor register, so its dataset can dwarf the
    /// per-block fine datasets; this knob shrinks it independently.
    pub coarse_samples_per_cell: Option<usize>,
    /// Circuit blocks for learned schemes.
    pub blocks: usize,
    /// Training hyperparameters for learned schemes.
    pub train: TrainConfig,
    /// Evaluation repetitions (each covers every cell once).
    pub repetitions: usize,
    /// Root seed; all random streams derive from it.
    pub seed: u64,
}

impl ExperimentConfig {
    /// A config with the documented defaults for everything but the four
    /// required choices.
    pub fn new(grid_n: usize, sensors: usize, scheme: Scheme, setting: Setting) -> Self {
        ExperimentConfig {
            grid_n,
            sensors,
            scheme,
            setting,
            variant: Self::default_variant(scheme, setting),
            shots: DEFAULT_SHOTS,
            samples_per_cell: DEFAULT_SAMPLES_PER_CELL,
            coarse_samples_per_cell: None,
            blocks: DEFAULT_CIRCUIT_BLOCKS,
            train: TrainConfig::default(),
            repetitions: Self::default_repetitions(setting),
            seed: 0,
        }
    }

    /// Default predictor variant: discrimination schemes classify; learned
    /// schemes classify in the discrete setting and regress in the
    /// continuous one.
    pub fn default_variant(scheme: Scheme, setting: Setting) -> HeadKind {
        if scheme.is_qsd() {
            HeadKind::Classifier
        } else {
            match setting {
                Setting::Discrete => HeadKind::Classifier,
                Setting::Continuous => HeadKind::Regression,
            }
        }
    }

    /// Default evaluation repetitions: 1 continuous, 10 discrete.
    pub fn default_repetitions(setting: Setting) -> usize {
        match setting {
            Setting::Continuous => DEFAULT_CONTINUOUS_REPETITIONS,
            Setting::Discrete => DEFAULT_DISCRETE_REPETITIONS,
        }
    }

    /// Checks every field, naming the offending one in the error.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let grid = make_grid(self.grid_n).map_err(|e| {
            HarnessError::InvalidConfig(format!("grid_n {}: {e}", self.grid_n))
        })?;
        if ![4, 8, 16].contains(&self.sensors) {
            return Err(HarnessError::InvalidConfig(format!(
                "sensors {} unsupported; expected 4, 8, or 16",
                self.sensors
            )));
        }
        deploy_sensors(&grid, self.sensors).map_err(|e| {
            HarnessError::InvalidConfig(format!(
                "sensors {} on a {n}x{n} grid: {e}",
                self.sensors,
                n = self.grid_n
            ))
        })?;
        if self.sensors > self.scheme.max_sensors() {
            return Err(HarnessError::InvalidConfig(format!(
                "{} supports at most {} sensors, got {}",
                self.scheme,
                self.scheme.max_sensors(),
                self.sensors
            )));
        }
        if self.scheme.is_qsd() && self.variant == HeadKind::Regression {
            return Err(HarnessError::InvalidConfig(format!(
                "{} has no regression variant",
                self.scheme
            )));
        }
        if self.shots == 0 {
            return Err(HarnessError::InvalidConfig(String::from("shots must be at least 1")));
        }
        if self.samples_per_cell == 0 {
            return Err(HarnessError::InvalidConfig(String::from(
                "samples_per_cell must be at least 1",
            )));
        }
        if self.coarse_samples_per_cell == Some(0) {
            return Err(HarnessError::InvalidConfig(String::from(
                "coarse_samples_per_cell must be at least 1 when set",
            )));
        }
        if self.blocks == 0 {
            return Err(HarnessError::InvalidConfig(String::from("blocks must be at least 1")));
        }
        if self.train.batch_size == 0 {
            return Err(HarnessError::InvalidConfig(String::from(
                "train.batch_size must be at least 1",
            )));
        }
        if !(self.train.learning_rate.is_finite() && self.train.learning_rate >= 0.0) {
            return Err(HarnessError::InvalidConfig(format!(
                "train.learning_rate {} must be finite and non-negative",
                self.train.learning_rate
            )));
        }
        if self.repetitions == 0 {
            return Err(HarnessError::InvalidConfig(String::from(
                "repetitions must be at least 1",
            )));
        }
        Ok(())
    }
}

/// One evaluated transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TxRecord {
    /// True transmitter position.
    pub tx: Point,
    /// Predicted position.
    pub predicted: Point,
    /// Euclidean localization error in meters.
    pub l_err: f64,
    /// Cell containing the transmitter.
    pub true_cell: usize,
    /// Predicted cell.
    pub pred_cell: usize,
    /// Block containing the transmitter.
    pub true_block: usize,
    /// Block of the prediction (the coarse stage's choice for two-level
    /// schemes; the block containing the predicted cell otherwise).
    pub pred_block: usize,
}

/// One point of the empirical error CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CdfPoint {
    /// Localization error in meters.
    pub l_err: f64,
    /// Fraction of transmitters with error ≤ `l_err`.
    pub cum_prob: f64,
}

/// Per-transmitter records plus their aggregates.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunResult {
    /// One record per evaluated transmitter, in evaluation order.
    pub records: Vec<TxRecord>,
    /// Mean localization error in meters.
    pub mean_l_err: f64,
    /// Fraction of transmitters whose predicted cell is the true cell.
    pub cc_acc: f64,
    /// Empirical CDF of the errors, ascending, ending at 1.
    pub cdf: Vec<CdfPoint>,
}

/// Computes the aggregates of a set of records.
pub fn aggregate(records: Vec<TxRecord>) -> RunResult {
    if records.is_empty() {
        return RunResult { records, mean_l_err: 0.0, cc_acc: 0.0, cdf: Vec::new() };
    }
    let n = records.len() as f64;
    let mean_l_err = records.iter().map(|r| r.l_err).sum::<f64>() / n;
    let hits = records.iter().filter(|r| r.pred_cell == r.true_cell).count();
    let mut errors: Vec<f64> = records.iter().map(|r| r.l_err).collect();
    errors.sort_unstable_by(f64::total_cmp);
    let cdf = errors
        .iter()
        .enumerate()
        .map(|(i, &l_err)| CdfPoint { l_err, cum_prob: (i + 1) as f64 / n })
        .collect();
    RunResult { records, mean_l_err, cc_acc: hits as f64 / n, cdf }
}

/// Anything that can localize one transmitter observation.
///
/// Implementations return the predicted position, cell, and block.
pub trait Localizer {
    /// Localizes one transmitter from fresh sensing noise.
    fn localize(
        &self,
        tx: &TxLocation,
        grid: &GridGeometry,
        layout: &SensorLayout,
        cfg: &SensingConfig,
        rng: &mut Rng,
    ) -> Result<(Point, usize, usize), HarnessError>;

    /// The sensors a sampled transmitter must keep its separation from
    /// (exactly those that may sense it). Defaults to the coarse set.
    fn sampling_layout(&self, grid: &GridGeometry, layout: &SensorLayout) -> SensorLayout {
        let _ = grid;
        layout.coarse_only()
    }
}

/// A built, ready-to-query localization scheme.
#[derive(Debug, Clone)]
pub enum Predictor {
    /// One-level discrimination.
    QsdOne(OneLevelDiscriminator),
    /// Two-level discrimination.
    QsdTwo(TwoLevelDiscriminator),
    /// One-level trained circuit.
    PqcOne(PqcModel),
    /// Two-level trained circuits.
    PqcTwo {
        /// Block classifier over the coarse sensors.
        coarse: PqcModel,
        /// Fine model per block; empty when blocks are single cells.
        fine: BTreeMap<usize, PqcModel>,
    },
}

impl Predictor {
    /// The scheme this predictor implements.
    pub fn scheme(&self) -> Scheme {
        match self {
            Predictor::QsdOne(_) => Scheme::QsdOne,
            Predictor::QsdTwo(_) => Scheme::QsdTwo,
            Predictor::PqcOne(_) => Scheme::PqcOne,
            Predictor::PqcTwo { .. } => Scheme::PqcTwo,
        }
    }
}

impl Localizer for Predictor {
    fn localize(
        &self,
        tx: &TxLocation,
        grid: &GridGeometry,
        layout: &SensorLayout,
        cfg: &SensingConfig,
        rng: &mut Rng,
    ) -> Result<(Point, usize, usize), HarnessError> {
        match self {
            Predictor::QsdOne(d) => {
                let o = d.localize(tx, cfg, rng)?;
                Ok((o.predicted, o.cell_id, grid.block_of_cell(o.cell_id)))
            }
            Predictor::QsdTwo(d) => {
                let o = d.localize(tx, cfg, rng)?;
                Ok((o.predicted, o.cell_id, o.block_id))
            }
            Predictor::PqcOne(model) => {
                let o = pqc_one(model, tx, grid, layout.coarse(), cfg, rng)?;
                Ok((o.predicted, o.cell_id, grid.block_of_cell(o.cell_id)))
            }
            Predictor::PqcTwo { coarse, fine } => {
                let o = pqc_two(coarse, fine, tx, grid, layout, cfg, rng)?;
                Ok((o.predicted, o.cell_id, o.block_id))
            }
        }
    }

    fn sampling_layout(&self, grid: &GridGeometry, layout: &SensorLayout) -> SensorLayout {
        if self.scheme().is_two_level() && grid.block_side() > 1 {
            layout.clone()
        } else {
            layout.coarse_only()
        }
    }
}

/// Samples one transmitter in a cell and evolves the state the given
/// sensors observe, respecting the separation mask.
fn sample_observation(
    grid: &GridGeometry,
    cell: usize,
    setting: Setting,
    sensors: &[Point],
    mask: &SensorLayout,
    cfg: &SensingConfig,
    rng: &mut Rng,
) -> Result<(TxLocation, crate::qmath::StateVector), HarnessError> {
    let tx = sample_tx(grid, cell, setting, rng, mask)?;
    let noises = sample_noises(sensors.len(), cfg, rng);
    let state = evolve(&uniform_initial(sensors.len())?, tx.point(), sensors, &noises, cfg)?;
    Ok((tx, state))
}

/// Training set for one-level learned schemes: `samples_per_cell` draws per
/// cell, sensed by the coarse sensors, labeled by cell.
pub fn one_level_dataset(
    grid: &GridGeometry,
    layout: &SensorLayout,
    setting: Setting,
    samples_per_cell: usize,
    cfg: &SensingConfig,
    rng: &mut Rng,
) -> Result<Vec<Sample>, HarnessError> {
    assert!(samples_per_cell >= 1, "at least one sample per cell is required");
    let mask = layout.coarse_only();
    let mut samples = Vec::with_capacity(grid.cell_count() * samples_per_cell);
    for cell in 0..grid.cell_count() {
        for _ in 0..samples_per_cell {
            let (tx, state) =
                sample_observation(grid, cell, setting, layout.coarse(), &mask, cfg, rng)?;
            samples.push(Sample { state, label: cell, coords: tx.point() });
        }
    }
    Ok(samples)
}

/// Training set for the coarse stage of two-level learned schemes: like
/// [`one_level_dataset`] but labeled by block.
pub fn coarse_dataset(
    grid: &GridGeometry,
    layout: &SensorLayout,
    setting: Setting,
    samples_per_cell: usize,
    cfg: &SensingConfig,
    rng: &mut Rng,
) -> Result<Vec<Sample>, HarnessError> {
    assert!(samples_per_cell >= 1, "at least one sample per cell is required");
    let mask = layout.coarse_only();
    let mut samples = Vec::with_capacity(grid.cell_count() * samples_per_cell);
    for cell in 0..grid.cell_count() {
        for _ in 0..samples_per_cell {
            let (tx, state) =
                sample_observation(grid, cell, setting, layout.coarse(), &mask, cfg, rng)?;
            samples.push(Sample { state, label: tx.block_id, coords: tx.point() });
        }
    }
    Ok(samples)
}

/// Training set for one block's fine stage: `samples_per_cell` draws per
/// cell of the block, sensed by its four fine sensors, labeled by the
/// cell's position in the block's ascending cell list.
pub fn fine_dataset(
    grid: &GridGeometry,
    layout: &SensorLayout,
    block_id: usize,
    setting: Setting,
    samples_per_cell: usize,
    cfg: &SensingConfig,
    rng: &mut Rng,
) -> Result<Vec<Sample>, HarnessError> {
    assert!(samples_per_cell >= 1, "at least one sample per cell is required");
    let sensors =
        layout.fine_of(block_id).ok_or(HarnessError::MissingFineSensors { block_id })?;
    let mask = SensorLayout::from_sensors(sensors.to_vec());
    let cells = grid.cells_in_block(block_id);
    let mut samples = Vec::with_capacity(cells.len() * samples_per_cell);
    for (label, &cell) in cells.iter().enumerate() {
        for _ in 0..samples_per_cell {
            let (tx, state) =
                sample_observation(grid, cell, setting, sensors, &mask, cfg, rng)?;
            samples.push(Sample { state, label, coords: tx.point() });
        }
    }
    Ok(samples)
}

/// A built scheme plus the training-loss history of every model trained
/// for it (empty for discrimination schemes; coarse first, then fine
/// blocks ascending).
#[derive(Debug, Clone)]
pub struct BuiltScheme {
    /// The ready-to-query predictor.
    pub predictor: Predictor,
    /// Per-epoch training losses of each trained model.
    pub training_losses: Vec<Vec<f64>>,
}

/// Builds the configured scheme: discrimination schemes construct their
/// measurements from noiseless targets; learned schemes generate training
/// data and train on it, all from streams derived from the root generator.
pub fn build_scheme(
    exp: &ExperimentConfig,
    grid: &GridGeometry,
    layout: &SensorLayout,
    cfg: &SensingConfig,
    root: &Rng,
) -> Result<BuiltScheme, HarnessError> {
    exp.validate()?;
    match exp.scheme {
        Scheme::QsdOne => Ok(BuiltScheme {
            predictor: Predictor::QsdOne(OneLevelDiscriminator::build(
                grid, layout, exp.shots, cfg,
            )?),
            training_losses: Vec::new(),
        }),
        Scheme::QsdTwo => Ok(BuiltScheme {
            predictor: Predictor::QsdTwo(TwoLevelDiscriminator::build(
                grid, layout, exp.shots, cfg,
            )?),
            training_losses: Vec::new(),
        }),
        Scheme::PqcOne => {
            let mut data_rng = root.stream(STREAM_TRAIN_DATA, 0);
            let dataset = one_level_dataset(
                grid,
                layout,
                exp.setting,
                exp.samples_per_cell,
                cfg,
                &mut data_rng,
            )?;
            let outputs = match exp.variant {
                HeadKind::Classifier => grid.cell_count(),
                HeadKind::Regression => 2,
            };
            let mut train_rng = root.stream(STREAM_TRAIN_INIT, 0);
            let model = init_model(
                layout.coarse().len(),
                exp.blocks,
                exp.variant,
                outputs,
                grid.side_length(),
                &mut train_rng,
            )?;
            let record = train(model, &dataset, &exp.train, &mut train_rng)?;
            Ok(BuiltScheme {
                predictor: Predictor::PqcOne(record.model),
                training_losses: vec![record.epoch_losses],
            })
        }
        Scheme::PqcTwo => {
            let mut data_rng = root.stream(STREAM_TRAIN_DATA, 0);
            let dataset = coarse_dataset(
                grid,
                layout,
                exp.setting,
                exp.coarse_samples_per_cell.unwrap_or(exp.samples_per_cell),
                cfg,
                &mut data_rng,
            )?;
            let mut train_rng = root.stream(STREAM_TRAIN_INIT, 0);
            let model = init_model(
                layout.coarse().len(),
                exp.blocks,
                HeadKind::Classifier,
                grid.block_count(),
                grid.side_length(),
                &mut train_rng,
            )?;
            let record = train(model, &dataset, &exp.train, &mut train_rng)?;
            let mut training_losses = vec![record.epoch_losses];
            let coarse = record.model;
            let mut fine = BTreeMap::new();
            if grid.block_side() > 1 {
                let outputs = match exp.variant {
                    HeadKind::Classifier => grid.cells_per_block(),
                    HeadKind::Regression => 2,
                };
                for block in 0..grid.block_count() {
                    let mut data_rng = root.stream(STREAM_TRAIN_DATA, 1 + block as u32);
                    let dataset = fine_dataset(
                        grid,
                        layout,
                        block,
                        exp.setting,
                        exp.samples_per_cell,
                        cfg,
                        &mut data_rng,
                    )?;
                    let mut train_rng = root.stream(STREAM_TRAIN_INIT, 1 + block as u32);
                    let model = init_model(
                        4,
                        exp.blocks,
                        exp.variant,
                        outputs,
                        grid.side_length(),
                        &mut train_rng,
                    )?;
                    let record = train(model, &dataset, &exp.train, &mut train_rng)?;
                    training_losses.push(record.epoch_losses);
                    fine.insert(block, record.model);
                }
            }
            Ok(BuiltScheme { predictor: Predictor::PqcTwo { coarse, fine }, training_losses })
        }
    }
}

/// Evaluates one transmitter of the evaluation set.
///
/// `index` enumerates repetitions × cells row-major (cell = index mod cell
/// count); sampling and localization each use their own stream derived
/// from the root generator and the index, so calls are order-independent.
pub fn evaluate_tx<L: Localizer>(
    predictor: &L,
    grid: &GridGeometry,
    layout: &SensorLayout,
    setting: Setting,
    cfg: &SensingConfig,
    root: &Rng,
    index: u32,
) -> Result<TxRecord, HarnessError> {
    let cell = index as usize % grid.cell_count();
    let mask = predictor.sampling_layout(grid, layout);
    let mut tx_rng = root.stream(STREAM_EVAL_TX, index);
    let tx = sample_tx(grid, cell, setting, &mut tx_rng, &mask)?;
    let mut loc_rng = root.stream(STREAM_EVAL_LOCALIZE, index);
    let (predicted, pred_cell, pred_block) = predictor.localize(&tx, grid, layout, cfg, &mut loc_rng)?;
    let p = tx.point();
    Ok(TxRecord {
        tx: p,
        predicted,
        l_err: p.distance(&predicted),
        true_cell: tx.cell_id,
        pred_cell,
        true_block: tx.block_id,
        pred_block,
    })
}

/// Evaluates the predictor over the full evaluation set: every cell once
/// per repetition (centers when discrete, one uniform draw per cell when
/// continuous), aggregating the records.
pub fn evaluate<L: Localizer>(
    predictor: &L,
    grid: &GridGeometry,
    layout: &SensorLayout,
    setting: Setting,
    repetitions: usize,
    cfg: &SensingConfig,
    root: &Rng,
) -> Result<RunResult, HarnessError> {
    assert!(repetitions >= 1, "at least one repetition is required");
    let total = repetitions * grid.cell_count();
    let mut records = Vec::with_capacity(total);
    for index in 0..total {
        records.push(evaluate_tx(predictor, grid, layout, setting, cfg, root, index as u32)?);
    }
    Ok(aggregate(records))
}

/// Builds and evaluates one experiment end to end from its config: grid,
/// layout, scheme, then the full evaluation. The canonical serial path;
/// byte-determinism follows from the stream discipline.
pub fn run_scheme(
    exp: &ExperimentConfig,
    cfg: &SensingConfig,
) -> Result<(BuiltScheme, RunResult), HarnessError> {
    let grid = make_grid(exp.grid_n)?;
    let layout = deploy_sensors(&grid, exp.sensors)?;
    let root = Rng::new(exp.seed);
    let built = build_scheme(exp, &grid, &layout, cfg, &root)?;
    let result = evaluate(
        &built.predictor,
        &grid,
        &layout,
        exp.setting,
        exp.repetitions,
        cfg,
        &root,
    )?;
    Ok((built, result))
}
