//! The JSON experiment config: strict schema, dotted overrides, resolution.
//!
//! A config file names the experiment (`grid.n`, `sensors`, `scheme`,
//! `setting`) and may pin any default (`variant`, `shots`,
//! `samples_per_cell`, `blocks`, `train.*`, `repetitions`, `seed`); a
//! `sweep` section drives the `sweep` subcommand. Unknown keys are hard
//! errors, both in the file and through `--set key=value` overrides, so a
//! typo never silently runs the wrong experiment. Manifests written next
//! to results carry the fully resolved config plus a `manifest` metadata
//! block, and load back through the same schema, which is what makes
//! "re-feed the manifest, get the same run" work.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qloc_core::geometry::Setting;
use qloc_core::harness::{ExperimentConfig, Scheme};
use qloc_core::pqc::HeadKind;

use crate::format::json_str;
use crate::CliError;

/// Schema version accepted by this binary.
pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// `grid` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Grid side in cells.
    pub n: usize,
}

/// `train` section; absent fields keep their defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub epochs: Option<usize>,
}

/// Which config field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Vary `grid.n`.
    Grid,
    /// Vary `sensors`.
    Sensors,
}

impl SweepAxis {
    /// Name used in run directories and messages.
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Grid => "grid",
            SweepAxis::Sensors => "sensors",
        }
    }
}

/// `sweep` section: the varied axis, its values, and the schemes to run at
/// each value (defaulting to the config's scheme).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
    #[serde(default)]
    pub schemes: Option<Vec<Scheme>>,
}

/// The on-disk config schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub format_version: u32,
    pub grid: GridSection,
    pub sensors: usize,
    pub scheme: Scheme,
    pub setting: Setting,
    #[serde(default)]
    pub variant: Option<HeadKind>,
    #[serde(default)]
    pub shots: Option<usize>,
    #[serde(default)]
    pub samples_per_cell: Option<usize>,
    #[serde(default)]
    pub coarse_samples_per_cell: Option<usize>,
    #[serde(default)]
    pub blocks: Option<usize>,
    #[serde(default)]
    pub train: Option<TrainSection>,
    #[serde(default)]
    pub repetitions: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    /// Metadata block of a re-fed manifest; ignored on load.
    #[serde(default)]
    pub manifest: Option<serde_json::Value>,
}

/// A resolved experiment plus any default-override warnings to surface.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub exp: ExperimentConfig,
    pub warnings: Vec<String>,
}

/// Loads a config file and applies `--set` overrides and the `--seed` flag.
///
/// Every failure is a validation error naming the file (and key, for
/// overrides).
pub fn load_config(path: &Path, sets: &[String], seed: Option<u64>) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Validation(format!("config {} is not valid JSON: {e}", path.display()))
    })?;
    for set in sets {
        apply_override(&mut value, set)?;
    }
    if let Some(seed) = seed {
        let obj = value.as_object_mut().ok_or_else(|| {
            CliError::Validation(format!("config {} must be a JSON object", path.display()))
        })?;
        obj.insert(String::from("seed"), serde_json::json!(seed));
    }
    let config: FileConfig = serde_json::from_value(value).map_err(|e| {
        CliError::Validation(format!("config {}: {e}", path.display()))
    })?;
    if config.format_version != CONFIG_FORMAT_VERSION {
        return Err(CliError::Validation(format!(
            "config {}: format_version {} is not supported (expected {CONFIG_FORMAT_VERSION})",
            path.display(),
            config.format_version
        )));
    }
    Ok(config)
}

/// Applies one dotted `key=value` override onto the raw config tree.
///
/// The value is parsed as JSON when possible (numbers, booleans, arrays)
/// and taken as a string otherwise. Keys that the schema does not know are
/// rejected when the tree is deserialized.
pub fn apply_override(root: &mut serde_json::Value, set: &str) -> Result<(), CliError> {
    let (path, raw) = set.split_once('=').ok_or_else(|| {
        CliError::Validation(format!("--set {set}: expected key=value"))
    })?;
    let segments: Vec<&str> = path.split('.').collect();
    if path.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Validation(format!("--set {set}: empty key segment")));
    }
    let value: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(String::from(raw)));
    let mut cursor = root;
    for segment in &segments[..segments.len() - 1] {
        let obj = cursor.as_object_mut().ok_or_else(|| {
            CliError::Validation(format!("--set {path}: {segment} is not inside an object"))
        })?;
        cursor = obj
            .entry(String::from(*segment))
            .or_insert_with(|| serde_json::Value::Object(serde_json::Map::new()));
    }
    let last = segments[segments.len() - 1];
    let obj = cursor.as_object_mut().ok_or_else(|| {
        CliError::Validation(format!("--set {path}: {last} is not inside an object"))
    })?;
    obj.insert(String::from(last), value);
    Ok(())
}

/// Lowercase name of a setting.
pub fn setting_str(setting: Setting) -> &'static str {
    match setting {
        Setting::Continuous => "continuous",
        Setting::Discrete => "discrete",
    }
}

/// Lowercase name of a head kind.
pub fn variant_str(variant: HeadKind) -> &'static str {
    match variant {
        HeadKind::Classifier => "classifier",
        HeadKind::Regression => "regression",
    }
}

/// Fills defaults to produce the experiment this config describes.
///
/// An explicit `variant` that breaks the default pairing (classifier for
/// discrete, regression for continuous) is honored with a warning for the
/// learned schemes; core validation rejects it for discrimination schemes.
pub fn resolve(file: &FileConfig) -> Resolved {
    let mut exp = ExperimentConfig::new(file.grid.n, file.sensors, file.scheme, file.setting);
    let mut warnings = Vec::new();
    if let Some(variant) = file.variant {
        let default = ExperimentConfig::default_variant(file.scheme, file.setting);
        if variant != default && !file.scheme.is_qsd() {
            warnings.push(format!(
                "variant {} overrides the default {} pairing for {} in the {} setting",
                variant_str(variant),
                variant_str(default),
                file.scheme,
                setting_str(file.setting),
            ));
        }
        exp.variant = variant;
    }
    if let Some(shots) = file.shots {
        exp.shots = shots;
    }
    if let Some(spc) = file.samples_per_cell {
        exp.samples_per_cell = spc;
    }
    if file.coarse_samples_per_cell.is_some() {
        exp.coarse_samples_per_cell = file.coarse_samples_per_cell;
    }
    if let Some(blocks) = file.blocks {
        exp.blocks = blocks;
    }
    if let Some(train) = &file.train {
        if let Some(lr) = train.learning_rate {
            exp.train.learning_rate = lr;
        }
        if let Some(batch) = train.batch_size {
            exp.train.batch_size = batch;
        }
        if let Some(epochs) = train.epochs {
            exp.train.epochs = epochs;
        }
    }
    if let Some(reps) = file.repetitions {
        exp.repetitions = reps;
    }
    if let Some(seed) = file.seed {
        exp.seed = seed;
    }
    Resolved { exp, warnings }
}

/// Resolves one sweep combination: the file config with the scheme and the
/// swept axis value substituted (defaults re-derive per scheme).
pub fn resolve_combo(
    file: &FileConfig,
    scheme: Scheme,
    axis: SweepAxis,
    value: usize,
) -> Resolved {
    let mut combo = file.clone();
    combo.scheme = scheme;
    match axis {
        SweepAxis::Grid => combo.grid.n = value,
        SweepAxis::Sensors => combo.sensors = value,
    }
    resolve(&combo)
}

/// The resolved config as JSON object fields (no surrounding braces), one
/// per line with the given indent: the canonical config echo shared by
/// summaries and manifests. Loading these fields back yields `exp` again.
pub fn config_fields_json(
    exp: &ExperimentConfig,
    sweep: Option<&SweepSection>,
    indent: &str,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("{indent}\"format_version\": {CONFIG_FORMAT_VERSION},\n"));
    out.push_str(&format!("{indent}\"grid\": {{ \"n\": {} }},\n", exp.grid_n));
    out.push_str(&format!("{indent}\"sensors\": {},\n", exp.sensors));
    out.push_str(&format!("{indent}\"scheme\": {},\n", json_str(exp.scheme.as_str())));
    out.push_str(&format!("{indent}\"setting\": {},\n", json_str(setting_str(exp.setting))));
    out.push_str(&format!("{indent}\"variant\": {},\n", json_str(variant_str(exp.variant))));
    out.push_str(&format!("{indent}\"shots\": {},\n", exp.shots));
    out.push_str(&format!("{indent}\"samples_per_cell\": {},\n", exp.samples_per_cell));
    if let Some(coarse) = exp.coarse_samples_per_cell {
        out.push_str(&format!("{indent}\"coarse_samples_per_cell\": {coarse},\n"));
    }
    out.push_str(&format!("{indent}\"blocks\": {},\n", exp.blocks));
    out.push_str(&format!(
        "{indent}\"train\": {{ \"learning_rate\": {}, \"batch_size\": {}, \"epochs\": {} }},\n",
        exp.train.learning_rate, exp.train.batch_size, exp.train.epochs
    ));
    out.push_str(&format!("{indent}\"repetitions\": {},\n", exp.repetitions));
    out.push_str(&format!("{indent}\"seed\": {}", exp.seed));
    if let Some(sweep) = sweep {
        out.push_str(",\n");
        let values: Vec<String> = sweep.values.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!(
            "{indent}\"sweep\": {{ \"axis\": {}, \"values\": [{}]",
            json_str(sweep.axis.as_str()),
            values.join(", ")
        ));
        if let Some(schemes) = &sweep.schemes {
            let names: Vec<String> = schemes.iter().map(|s| json_str(s.as_str())).collect();
            out.push_str(&format!(", \"schemes\": [{}]", names.join(", ")));
        }
        out.push_str(" }");
    }
    out
}
