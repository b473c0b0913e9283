//! Fingerprinted cache for built measurements and trained models.
//!
//! An artifact file stores one ready-to-query predictor (and its training
//! loss history) under `cache/<scheme>-<fingerprint>.json`. The fingerprint
//! hashes everything the artifact depends on: grid, sensor count, scheme,
//! setting, variant, shots, dataset size, circuit layout, training
//! hyperparameters, sensing constants, and the seed. Sweeps and repeated
//! runs therefore reuse expensive artifacts exactly when reuse cannot
//! change the result, and `eval` builds on a cache miss so `train`/
//! `build-pgm` are conveniences, not prerequisites.
//!
//! Artifacts serialize floats at full round-trip precision: a reloaded
//! predictor is bit-identical to the freshly built one, which the
//! byte-determinism guarantee relies on.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qloc_core::geometry::{GridGeometry, SensorLayout};
use qloc_core::harness::{build_scheme, BuiltScheme, ExperimentConfig, Predictor, Scheme};
use qloc_core::pqc::PqcModel;
use qloc_core::qmath::Rng;
use qloc_core::qsd::{OneLevelDiscriminator, TwoLevelDiscriminator};
use qloc_core::sensing::SensingConfig;

use crate::{CliError, Logger};

/// Artifact file schema version.
pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

/// The persisted predictor, tagged by scheme.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Payload {
    /// One-level discrimination pipeline.
    #[serde(rename = "qsd-one")]
    QsdOne(OneLevelDiscriminator),
    /// Two-level discrimination pipeline.
    #[serde(rename = "qsd-two")]
    QsdTwo(TwoLevelDiscriminator),
    /// One-level trained model with its per-epoch losses.
    #[serde(rename = "pqc-one")]
    PqcOne { model: PqcModel, epoch_losses: Vec<Vec<f64>> },
    /// Coarse plus per-block fine models with their per-epoch losses
    /// (coarse first, then blocks ascending).
    #[serde(rename = "pqc-two")]
    PqcTwo {
        coarse: PqcModel,
        fine: Vec<(usize, PqcModel)>,
        epoch_losses: Vec<Vec<f64>>,
    },
}

impl Payload {
    /// The scheme this payload implements.
    pub fn scheme(&self) -> Scheme {
        match self {
            Payload::QsdOne(_) => Scheme::QsdOne,
            Payload::QsdTwo(_) => Scheme::QsdTwo,
            Payload::PqcOne { .. } => Scheme::PqcOne,
            Payload::PqcTwo { .. } => Scheme::PqcTwo,
        }
    }
}

/// One cached artifact file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    pub format_version: u32,
    /// Hash of everything the payload was built from.
    pub fingerprint: String,
    pub payload: Payload,
}

/// 64-bit FNV-1a over a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// The canonical key string the fingerprint hashes; stable field order,
/// full-precision floats. The coarse-stage sample override joins the key
/// only when it actually changes the build, so setting it to the shared
/// value (or leaving it unset) keeps existing cache entries valid.
pub fn fingerprint_key(exp: &ExperimentConfig, cfg: &SensingConfig) -> String {
    let mut key = format!(
        "artifact-v{ARTIFACT_FORMAT_VERSION};scheme={};grid={};sensors={};setting={};\
         variant={};shots={};spc={};blocks={};lr={};batch={};epochs={};seed={};\
         power={};time={};cal_d={};cal_phi={};noise={}",
        exp.scheme.as_str(),
        exp.grid_n,
        exp.sensors,
        crate::config::setting_str(exp.setting),
        crate::config::variant_str(exp.variant),
        exp.shots,
        exp.samples_per_cell,
        exp.blocks,
        exp.train.learning_rate,
        exp.train.batch_size,
        exp.train.epochs,
        exp.seed,
        cfg.tx_power,
        cfg.sensing_time,
        cfg.calibration_distance,
        cfg.calibration_phase,
        cfg.noise_halfwidth,
    );
    if let Some(coarse) = exp.coarse_samples_per_cell {
        if coarse != exp.samples_per_cell {
            key.push_str(&format!(";cspc={coarse}"));
        }
    }
    key
}

/// Hex fingerprint of an experiment's buildable artifact.
pub fn fingerprint(exp: &ExperimentConfig, cfg: &SensingConfig) -> String {
    format!("{:016x}", fnv1a64(fingerprint_key(exp, cfg).as_bytes()))
}

/// Cache path of the artifact for `scheme` with `fingerprint`.
pub fn artifact_path(cache_dir: &Path, scheme: Scheme, fingerprint: &str) -> PathBuf {
    cache_dir.join(format!("{}-{}.json", scheme.as_str(), fingerprint))
}

/// Converts a built scheme into its persistable payload.
pub fn payload_from_built(built: &BuiltScheme) -> Payload {
    match &built.predictor {
        Predictor::QsdOne(d) => Payload::QsdOne(d.clone()),
        Predictor::QsdTwo(d) => Payload::QsdTwo(d.clone()),
        Predictor::PqcOne(model) => Payload::PqcOne {
            model: model.clone(),
            epoch_losses: built.training_losses.clone(),
        },
        Predictor::PqcTwo { coarse, fine } => Payload::PqcTwo {
            coarse: coarse.clone(),
            fine: fine.iter().map(|(&b, m)| (b, m.clone())).collect(),
            epoch_losses: built.training_losses.clone(),
        },
    }
}

/// Converts a loaded payload back into a predictor plus loss history.
pub fn payload_into_built(payload: Payload) -> BuiltScheme {
    match payload {
        Payload::QsdOne(d) => BuiltScheme {
            predictor: Predictor::QsdOne(d),
            training_losses: Vec::new(),
        },
        Payload::QsdTwo(d) => BuiltScheme {
            predictor: Predictor::QsdTwo(d),
            training_losses: Vec::new(),
        },
        Payload::PqcOne { model, epoch_losses } => BuiltScheme {
            predictor: Predictor::PqcOne(model),
            training_losses: epoch_losses,
        },
        Payload::PqcTwo { coarse, fine, epoch_losses } => BuiltScheme {
            predictor: Predictor::PqcTwo {
                coarse,
                fine: fine.into_iter().collect::<BTreeMap<usize, PqcModel>>(),
            },
            training_losses: epoch_losses,
        },
    }
}

/// Writes an artifact file (creating the cache directory).
pub fn save_artifact(path: &Path, artifact: &Artifact) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::File::create(path)?;
    serde_json::to_writer(std::io::BufWriter::new(file), artifact)
        .map_err(|e| CliError::Runtime(format!("cannot write artifact {}: {e}", path.display())))
}

/// Reads and structurally validates an artifact file.
pub fn load_artifact(path: &Path) -> Result<Artifact, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read artifact {}: {e}", path.display()))
    })?;
    let artifact: Artifact = serde_json::from_str(&text).map_err(|e| {
        CliError::Validation(format!("artifact {} is malformed: {e}", path.display()))
    })?;
    if artifact.format_version != ARTIFACT_FORMAT_VERSION {
        return Err(CliError::Validation(format!(
            "artifact {}: format_version {} is not supported (expected {ARTIFACT_FORMAT_VERSION})",
            path.display(),
            artifact.format_version
        )));
    }
    Ok(artifact)
}

/// Loads the experiment's artifact from the cache, or builds and caches it.
///
/// Returns the built scheme, the artifact path, and whether the cache hit.
pub fn ensure_built(
    exp: &ExperimentConfig,
    grid: &GridGeometry,
    layout: &SensorLayout,
    cfg: &SensingConfig,
    cache_dir: &Path,
    log: &Logger,
) -> Result<(BuiltScheme, PathBuf, bool), CliError> {
    let fp = fingerprint(exp, cfg);
    let path = artifact_path(cache_dir, exp.scheme, &fp);
    if path.exists() {
        let artifact = load_artifact(&path)?;
        if artifact.fingerprint != fp {
            return Err(CliError::Runtime(format!(
                "artifact {} does not match its fingerprint (found {}, expected {fp}); \
                 remove the file and rerun",
                path.display(),
                artifact.fingerprint
            )));
        }
        if artifact.payload.scheme() != exp.scheme {
            return Err(CliError::Runtime(format!(
                "artifact {} holds a {} payload but the config asks for {}; \
                 remove the file and rerun",
                path.display(),
                artifact.payload.scheme(),
                exp.scheme
            )));
        }
        log.debug(format!("cache hit: {}", path.display()));
        return Ok((payload_into_built(artifact.payload), path, true));
    }
    log.info(format!("building {} (cache miss)", exp.scheme));
    let root = Rng::new(exp.seed);
    let built = build_scheme(exp, grid, layout, cfg, &root)?;
    let artifact = Artifact {
        format_version: ARTIFACT_FORMAT_VERSION,
        fingerprint: fp,
        payload: payload_from_built(&built),
    };
    save_artifact(&path, &artifact)?;
    log.debug(format!("cached: {}", path.display()));
    Ok((built, path, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qloc_core::geometry::{deploy_sensors, make_grid, Setting};

    #[test]
    fn fnv_matches_reference_vectors() {
        // Published FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn fingerprint_tracks_every_build_input() {
        let cfg = SensingConfig::default();
        let base = ExperimentConfig::new(4, 8, Scheme::PqcTwo, Setting::Discrete);
        let fp = fingerprint(&base, &cfg);
        let mut variations = Vec::new();
        let mut v = base;
        v.grid_n = 8;
        variations.push(v);
        let mut v = base;
        v.sensors = 4;
        variations.push(v);
        let mut v = base;
        v.scheme = Scheme::PqcOne;
        variations.push(v);
        let mut v = base;
        v.setting = Setting::Continuous;
        variations.push(v);
        let mut v = base;
        v.shots = 77;
        variations.push(v);
        let mut v = base;
        v.samples_per_cell = 5;
        variations.push(v);
        let mut v = base;
        v.train.epochs = 7;
        variations.push(v);
        let mut v = base;
        v.seed = 1;
        variations.push(v);
        for variation in variations {
            assert_ne!(fingerprint(&variation, &cfg), fp, "{variation:?}");
        }
        let mut other_cfg = cfg;
        other_cfg.noise_halfwidth = 0.01;
        assert_ne!(fingerprint(&base, &other_cfg), fp);
        // Repetitions only shape evaluation, never the artifact.
        let mut v = base;
        v.repetitions = 99;
        assert_eq!(fingerprint(&v, &cfg), fp);
        // A coarse-stage override only matters when it differs from the
        // shared per-cell count.
        let mut v = base;
        v.coarse_samples_per_cell = Some(v.samples_per_cell);
        assert_eq!(fingerprint(&v, &cfg), fp);
        v.coarse_samples_per_cell = Some(v.samples_per_cell + 1);
        assert_ne!(fingerprint(&v, &cfg), fp);
    }

    #[test]
    fn artifacts_round_trip_and_cache_hits_reload_identically() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().join("cache");
        let cfg = SensingConfig::default();
        let mut exp = ExperimentConfig::new(2, 4, Scheme::QsdOne, Setting::Discrete);
        exp.shots = 50;
        let grid = make_grid(2).unwrap();
        let layout = deploy_sensors(&grid, 4).unwrap();
        let log = Logger::new(true, false);

        let (_, path, hit) = ensure_built(&exp, &grid, &layout, &cfg, &cache, &log).unwrap();
        assert!(!hit);
        let first = std::fs::read(&path).unwrap();

        let (built, path2, hit2) = ensure_built(&exp, &grid, &layout, &cfg, &cache, &log).unwrap();
        assert!(hit2);
        assert_eq!(path, path2);
        assert!(matches!(built.predictor, Predictor::QsdOne(_)));

        // Re-saving the reloaded payload is byte-identical.
        let reloaded = load_artifact(&path).unwrap();
        let rewritten = dir.path().join("rewritten.json");
        save_artifact(&rewritten, &reloaded).unwrap();
        assert_eq!(first, std::fs::read(&rewritten).unwrap());
    }

    #[test]
    fn pqc_two_payload_preserves_fine_block_ids() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().join("cache");
        let cfg = SensingConfig::default();
        let mut exp = ExperimentConfig::new(4, 8, Scheme::PqcTwo, Setting::Discrete);
        exp.samples_per_cell = 2;
        exp.train.epochs = 1;
        let grid = make_grid(4).unwrap();
        let layout = deploy_sensors(&grid, 8).unwrap();
        let log = Logger::new(true, false);
        let (built, path, _) = ensure_built(&exp, &grid, &layout, &cfg, &cache, &log).unwrap();
        let reloaded = payload_into_built(load_artifact(&path).unwrap().payload);
        match (&built.predictor, &reloaded.predictor) {
            (Predictor::PqcTwo { coarse, fine }, Predictor::PqcTwo { coarse: c2, fine: f2 }) => {
                assert_eq!(coarse, c2);
                assert_eq!(fine.keys().collect::<Vec<_>>(), f2.keys().collect::<Vec<_>>());
                assert_eq!(fine, f2);
            }
            other => panic!("wrong predictors {other:?}"),
        }
        assert_eq!(built.training_losses, reloaded.training_losses);
    }

    #[test]
    fn fingerprint_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().join("cache");
        let cfg = SensingConfig::default();
        let mut exp = ExperimentConfig::new(2, 4, Scheme::QsdOne, Setting::Discrete);
        exp.shots = 10;
        let grid = make_grid(2).unwrap();
        let layout = deploy_sensors(&grid, 4).unwrap();
        let log = Logger::new(true, false);
        let (_, path, _) = ensure_built(&exp, &grid, &layout, &cfg, &cache, &log).unwrap();
        let mut artifact = load_artifact(&path).unwrap();
        artifact.fingerprint = String::from("0000000000000000");
        save_artifact(&path, &artifact).unwrap();
        let err = ensure_built(&exp, &grid, &layout, &cfg, &cache, &log).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("fingerprint"), "{err}");
    }
}
