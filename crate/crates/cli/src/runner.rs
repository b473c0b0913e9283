//! Subcommand implementations: gen-data, build-pgm, train, eval, sweep.
//!
//! Every command resolves and validates its config, does its work, and
//! writes a manifest (the fully resolved config plus command, format
//! versions, and wall time) beside its outputs; the manifest loads back as
//! a config that reproduces the run. Evaluation parallelizes over
//! transmitters with rayon, and because each transmitter draws from its own
//! derived random streams, the parallel records match the serial path
//! byte for byte. Wall time appears only in the manifest, so every other
//! output file is byte-identical across repeated runs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use qloc_core::geometry::{deploy_sensors, make_grid, GridGeometry, SensorLayout, Setting};
use qloc_core::harness::{
    aggregate, coarse_dataset, evaluate_tx, fine_dataset, one_level_dataset, ExperimentConfig,
    HarnessError, Localizer, RunResult, Scheme, TxRecord, STREAM_TRAIN_DATA,
};
use qloc_core::pqc::Sample;
use qloc_core::qmath::Rng;
use qloc_core::sensing::SensingConfig;

use crate::artifacts::{ensure_built, fingerprint, ARTIFACT_FORMAT_VERSION};
use crate::config::{
    config_fields_json, resolve, resolve_combo, setting_str, variant_str, FileConfig,
    SweepSection, CONFIG_FORMAT_VERSION,
};
use crate::format::{cdf_csv, g9, json_str, records_csv, sweep_csv, SweepRow};
use crate::{CliError, Logger};

/// Version of summary.json, the CSV tables, and the info files.
pub const RESULTS_FORMAT_VERSION: u32 = 1;

/// Version of the JSON-lines dataset files.
pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Everything a command needs besides its config.
#[derive(Debug, Clone)]
pub struct Ctx {
    /// Output directory; outputs and the cache live here.
    pub out: PathBuf,
    /// Worker cap for parallel evaluation (None: rayon's default).
    pub threads: Option<usize>,
    pub log: Logger,
}

impl Ctx {
    fn cache_dir(&self) -> PathBuf {
        self.out.join("cache")
    }
}

/// Resolves, surfaces warnings, validates, and prepares the geometry.
fn prepare(
    file: &FileConfig,
    log: &Logger,
) -> Result<(ExperimentConfig, GridGeometry, SensorLayout, SensingConfig), CliError> {
    let resolved = resolve(file);
    for warning in &resolved.warnings {
        log.info(format!("warning: {warning}"));
    }
    let exp = resolved.exp;
    exp.validate()?;
    let grid = make_grid(exp.grid_n).map_err(HarnessError::from)?;
    let layout = deploy_sensors(&grid, exp.sensors).map_err(HarnessError::from)?;
    Ok((exp, grid, layout, SensingConfig::default()))
}

/// Evaluates the full evaluation set in parallel; byte-identical to the
/// serial `harness::evaluate` because every transmitter only touches its
/// own derived streams and records are collected in index order.
pub fn evaluate_parallel<L: Localizer + Sync>(
    predictor: &L,
    grid: &GridGeometry,
    layout: &SensorLayout,
    setting: Setting,
    repetitions: usize,
    cfg: &SensingConfig,
    root: &Rng,
    threads: Option<usize>,
) -> Result<RunResult, CliError> {
    let total = (repetitions * grid.cell_count()) as u32;
    let run = || -> Result<Vec<TxRecord>, HarnessError> {
        (0..total)
            .into_par_iter()
            .map(|index| evaluate_tx(predictor, grid, layout, setting, cfg, root, index))
            .collect()
    };
    let records = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(format!("cannot build thread pool: {e}")))?
            .install(run),
        None => run(),
    }?;
    Ok(aggregate(records))
}

/// Writes `manifest.json` beside the outputs: the resolved config (which
/// reproduces the run when re-fed) plus command, format versions, and the
/// only wall-time record of the run.
fn write_manifest(
    out: &Path,
    exp: &ExperimentConfig,
    sweep: Option<&SweepSection>,
    command: &str,
    started: Instant,
) -> Result<(), CliError> {
    let mut s = String::from("{\n");
    s.push_str(&config_fields_json(exp, sweep, "  "));
    s.push_str(",\n  \"manifest\": {\n");
    s.push_str(&format!("    \"command\": {},\n", json_str(command)));
    s.push_str(&format!(
        "    \"format_versions\": {{ \"config\": {CONFIG_FORMAT_VERSION}, \
         \"results\": {RESULTS_FORMAT_VERSION}, \"artifact\": {ARTIFACT_FORMAT_VERSION}, \
         \"dataset\": {DATASET_FORMAT_VERSION} }},\n"
    ));
    s.push_str(&format!("    \"wall_time_seconds\": {:.3}\n", started.elapsed().as_secs_f64()));
    s.push_str("  }\n}\n");
    std::fs::write(out.join("manifest.json"), s)?;
    Ok(())
}

/// Writes one run's `summary.json`: config echo plus aggregates.
fn write_summary(path: &Path, exp: &ExperimentConfig, result: &RunResult) -> Result<(), CliError> {
    let mut s = String::from("{\n");
    s.push_str(&format!("  \"format_version\": {RESULTS_FORMAT_VERSION},\n"));
    s.push_str("  \"config\": {\n");
    s.push_str(&config_fields_json(exp, None, "    "));
    s.push_str("\n  },\n");
    s.push_str("  \"aggregates\": {\n");
    s.push_str(&format!("    \"records\": {},\n", result.records.len()));
    s.push_str(&format!("    \"mean_l_err\": {},\n", g9(result.mean_l_err)));
    s.push_str(&format!("    \"cc_acc\": {}\n", g9(result.cc_acc)));
    s.push_str("  }\n}\n");
    std::fs::write(path, s)?;
    Ok(())
}

/// Writes one run's result files into `dir`.
fn write_run_results(
    dir: &Path,
    exp: &ExperimentConfig,
    result: &RunResult,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("records.csv"), records_csv(&result.records))?;
    std::fs::write(dir.join("cdf.csv"), cdf_csv(&result.cdf))?;
    write_summary(&dir.join("summary.json"), exp, result)?;
    Ok(())
}

/// `eval`: build or load the scheme, evaluate every transmitter, write
/// summary, records, CDF, and manifest.
pub fn cmd_eval(file: &FileConfig, ctx: &Ctx) -> Result<(), CliError> {
    let started = Instant::now();
    let (exp, grid, layout, cfg) = prepare(file, &ctx.log)?;
    let (built, _, hit) = ensure_built(&exp, &grid, &layout, &cfg, &ctx.cache_dir(), &ctx.log)?;
    ctx.log.debug(format!("artifact cache {}", if hit { "hit" } else { "miss" }));
    let root = Rng::new(exp.seed);
    let result = evaluate_parallel(
        &built.predictor,
        &grid,
        &layout,
        exp.setting,
        exp.repetitions,
        &cfg,
        &root,
        ctx.threads,
    )?;
    write_run_results(&ctx.out, &exp, &result)?;
    write_manifest(&ctx.out, &exp, file.sweep.as_ref(), "eval", started)?;
    if ctx.log.level >= 0 {
        println!(
            "eval {} {n}x{n} grid, {} sensors, {}: records={} mean_l_err={} cc_acc={}",
            exp.scheme,
            exp.sensors,
            setting_str(exp.setting),
            result.records.len(),
            g9(result.mean_l_err),
            g9(result.cc_acc),
            n = exp.grid_n,
        );
    }
    Ok(())
}

/// Writes samples as JSON lines (one sample per line, full precision).
fn write_jsonl(path: &Path, samples: &[Sample]) -> Result<(), CliError> {
    use std::io::Write;
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for sample in samples {
        serde_json::to_writer(&mut w, sample)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        writeln!(w)?;
    }
    Ok(())
}

/// `gen-data`: materialize the training datasets the configured scheme
/// would train on (one file per dataset).
pub fn cmd_gen_data(file: &FileConfig, ctx: &Ctx) -> Result<(), CliError> {
    let started = Instant::now();
    let (exp, grid, layout, cfg) = prepare(file, &ctx.log)?;
    std::fs::create_dir_all(&ctx.out)?;
    let root = Rng::new(exp.seed);
    let mut written: Vec<(String, usize)> = Vec::new();
    if exp.scheme.is_two_level() {
        let mut rng = root.stream(STREAM_TRAIN_DATA, 0);
        let coarse_spc = exp.coarse_samples_per_cell.unwrap_or(exp.samples_per_cell);
        let coarse = coarse_dataset(&grid, &layout, exp.setting, coarse_spc, &cfg, &mut rng)?;
        write_jsonl(&ctx.out.join("coarse.jsonl"), &coarse)?;
        written.push((String::from("coarse.jsonl"), coarse.len()));
        if grid.block_side() > 1 {
            for block in 0..grid.block_count() {
                let mut rng = root.stream(STREAM_TRAIN_DATA, 1 + block as u32);
                let fine = fine_dataset(
                    &grid,
                    &layout,
                    block,
                    exp.setting,
                    exp.samples_per_cell,
                    &cfg,
                    &mut rng,
                )?;
                let name = format!("fine-{block}.jsonl");
                write_jsonl(&ctx.out.join(&name), &fine)?;
                written.push((name, fine.len()));
            }
        }
    } else {
        let mut rng = root.stream(STREAM_TRAIN_DATA, 0);
        let dataset =
            one_level_dataset(&grid, &layout, exp.setting, exp.samples_per_cell, &cfg, &mut rng)?;
        write_jsonl(&ctx.out.join("dataset.jsonl"), &dataset)?;
        written.push((String::from("dataset.jsonl"), dataset.len()));
    }
    write_manifest(&ctx.out, &exp, file.sweep.as_ref(), "gen-data", started)?;
    let total: usize = written.iter().map(|(_, n)| n).sum();
    if ctx.log.level >= 0 {
        let names: Vec<&str> = written.iter().map(|(n, _)| n.as_str()).collect();
        println!(
            "gen-data {}: {total} samples across {} file(s): {}",
            exp.scheme,
            written.len(),
            names.join(", ")
        );
    }
    Ok(())
}

/// `build-pgm`: build (or reuse) the discrimination artifact and record
/// where it lives.
pub fn cmd_build_pgm(file: &FileConfig, ctx: &Ctx) -> Result<(), CliError> {
    let started = Instant::now();
    let (exp, grid, layout, cfg) = prepare(file, &ctx.log)?;
    if !exp.scheme.is_qsd() {
        return Err(CliError::Validation(format!(
            "build-pgm requires a discrimination scheme (qsd-one or qsd-two); got {}; \
             use train for learned schemes",
            exp.scheme
        )));
    }
    let (built, path, hit) = ensure_built(&exp, &grid, &layout, &cfg, &ctx.cache_dir(), &ctx.log)?;
    ctx.log.debug(format!("artifact cache {}", if hit { "hit" } else { "miss" }));
    let file_name = path.file_name().expect("artifact file name").to_string_lossy();

    let mut s = String::from("{\n");
    s.push_str(&format!("  \"format_version\": {RESULTS_FORMAT_VERSION},\n"));
    s.push_str(&format!("  \"kind\": {},\n", json_str(exp.scheme.as_str())));
    s.push_str(&format!("  \"fingerprint\": {},\n", json_str(&fingerprint(&exp, &cfg))));
    s.push_str(&format!("  \"artifact\": {},\n", json_str(&format!("cache/{file_name}"))));
    match &built.predictor {
        qloc_core::harness::Predictor::QsdOne(d) => {
            s.push_str(&format!("  \"targets\": {},\n", d.targets().len()));
            s.push_str(&format!("  \"outcomes\": {}\n", d.povm().outcome_count()));
        }
        qloc_core::harness::Predictor::QsdTwo(d) => {
            s.push_str(&format!("  \"coarse_targets\": {},\n", d.coarse_targets().len()));
            s.push_str(&format!("  \"coarse_outcomes\": {},\n", d.coarse_povm().outcome_count()));
            let present =
                (0..d.fine_stage_count()).filter(|&b| d.fine_povm(b).is_some()).count();
            s.push_str(&format!("  \"fine_stages\": {present}\n"));
        }
        _ => unreachable!("qsd schemes produce qsd predictors"),
    }
    s.push_str("}\n");
    std::fs::write(ctx.out.join("povm.json"), s)?;
    write_manifest(&ctx.out, &exp, file.sweep.as_ref(), "build-pgm", started)?;
    if ctx.log.level >= 0 {
        println!("build-pgm {}: artifact cache/{file_name}", exp.scheme);
    }
    Ok(())
}

/// `train`: train (or reuse) the learned-scheme models and record the loss
/// history.
pub fn cmd_train(file: &FileConfig, ctx: &Ctx) -> Result<(), CliError> {
    let started = Instant::now();
    let (exp, grid, layout, cfg) = prepare(file, &ctx.log)?;
    if exp.scheme.is_qsd() {
        return Err(CliError::Validation(format!(
            "train requires a learned scheme (pqc-one or pqc-two); got {}; \
             use build-pgm for discrimination schemes",
            exp.scheme
        )));
    }
    let (built, path, hit) = ensure_built(&exp, &grid, &layout, &cfg, &ctx.cache_dir(), &ctx.log)?;
    ctx.log.debug(format!("artifact cache {}", if hit { "hit" } else { "miss" }));
    let file_name = path.file_name().expect("artifact file name").to_string_lossy();

    let names: Vec<String> = match exp.scheme {
        Scheme::PqcOne => vec![String::from("model")],
        Scheme::PqcTwo => {
            let mut names = vec![String::from("coarse")];
            names.extend((1..built.training_losses.len()).map(|i| format!("fine-{}", i - 1)));
            names
        }
        _ => unreachable!("learned schemes only"),
    };
    let mut s = String::from("{\n");
    s.push_str(&format!("  \"format_version\": {RESULTS_FORMAT_VERSION},\n"));
    s.push_str(&format!("  \"kind\": {},\n", json_str(exp.scheme.as_str())));
    s.push_str(&format!("  \"fingerprint\": {},\n", json_str(&fingerprint(&exp, &cfg))));
    s.push_str(&format!("  \"artifact\": {},\n", json_str(&format!("cache/{file_name}"))));
    s.push_str("  \"models\": [\n");
    for (i, (name, losses)) in names.iter().zip(&built.training_losses).enumerate() {
        let final_loss = losses.last().copied().unwrap_or(f64::NAN);
        let curve: Vec<String> = losses.iter().map(|&l| g9(l)).collect();
        s.push_str(&format!(
            "    {{ \"name\": {}, \"epochs\": {}, \"final_loss\": {}, \"losses\": [{}] }}{}\n",
            json_str(name),
            losses.len(),
            g9(final_loss),
            curve.join(", "),
            if i + 1 < names.len() { "," } else { "" },
        ));
    }
    s.push_str("  ]\n}\n");
    std::fs::write(ctx.out.join("training.json"), s)?;
    write_manifest(&ctx.out, &exp, file.sweep.as_ref(), "train", started)?;
    if ctx.log.level >= 0 {
        let finals: Vec<String> = names
            .iter()
            .zip(&built.training_losses)
            .map(|(n, l)| format!("{n}={}", g9(l.last().copied().unwrap_or(f64::NAN))))
            .collect();
        println!("train {}: artifact cache/{file_name}; final losses: {}", exp.scheme, finals.join(" "));
    }
    Ok(())
}

/// `sweep`: run every (axis value, scheme) combination, write per-run
/// results under `runs/`, and emit the aggregate table.
pub fn cmd_sweep(file: &FileConfig, ctx: &Ctx) -> Result<(), CliError> {
    let started = Instant::now();
    let sweep = file.sweep.as_ref().ok_or_else(|| {
        CliError::Validation(String::from("sweep requires a sweep section in the config"))
    })?;
    if sweep.values.is_empty() {
        return Err(CliError::Validation(String::from("sweep.values must not be empty")));
    }
    let schemes = sweep.schemes.clone().unwrap_or_else(|| vec![file.scheme]);
    if schemes.is_empty() {
        return Err(CliError::Validation(String::from("sweep.schemes must not be empty")));
    }
    let cfg = SensingConfig::default();
    let mut rows = Vec::new();
    for &value in &sweep.values {
        for &scheme in &schemes {
            let resolved = resolve_combo(file, scheme, sweep.axis, value);
            for warning in &resolved.warnings {
                ctx.log.info(format!("warning: {warning}"));
            }
            let exp = resolved.exp;
            exp.validate().map_err(|e| {
                CliError::Validation(format!(
                    "sweep combination {}={value}, scheme {scheme}: {e}",
                    sweep.axis.as_str()
                ))
            })?;
            let grid = make_grid(exp.grid_n).map_err(HarnessError::from)?;
            let layout = deploy_sensors(&grid, exp.sensors).map_err(HarnessError::from)?;
            ctx.log.info(format!(
                "sweep: {}={value} scheme {scheme} ({} cells)",
                sweep.axis.as_str(),
                grid.cell_count()
            ));
            let (built, _, _) =
                ensure_built(&exp, &grid, &layout, &cfg, &ctx.cache_dir(), &ctx.log)?;
            let root = Rng::new(exp.seed);
            let result = evaluate_parallel(
                &built.predictor,
                &grid,
                &layout,
                exp.setting,
                exp.repetitions,
                &cfg,
                &root,
                ctx.threads,
            )?;
            let run_dir = ctx
                .out
                .join("runs")
                .join(format!("{}-{}{value}", scheme.as_str(), sweep.axis.as_str()));
            write_run_results(&run_dir, &exp, &result)?;
            ctx.log.info(format!(
                "  mean_l_err={} cc_acc={}",
                g9(result.mean_l_err),
                g9(result.cc_acc)
            ));
            rows.push(SweepRow {
                grid_n: exp.grid_n,
                sensors: exp.sensors,
                scheme: String::from(scheme.as_str()),
                setting: String::from(setting_str(exp.setting)),
                variant: String::from(variant_str(exp.variant)),
                records: result.records.len(),
                mean_l_err: result.mean_l_err,
                cc_acc: result.cc_acc,
            });
        }
    }
    std::fs::create_dir_all(&ctx.out)?;
    std::fs::write(ctx.out.join("sweep.csv"), sweep_csv(&rows))?;
    let exp = resolve(file).exp;
    write_manifest(&ctx.out, &exp, Some(sweep), "sweep", started)?;
    if ctx.log.level >= 0 {
        println!("sweep: {} combinations -> sweep.csv", rows.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{GridSection, SweepAxis};
    use qloc_core::harness::{evaluate, run_scheme};

    fn ctx(dir: &Path) -> Ctx {
        Ctx { out: dir.to_path_buf(), threads: Some(2), log: Logger::new(true, false) }
    }

    fn qsd_file(scheme: Scheme, setting: Setting) -> FileConfig {
        FileConfig {
            format_version: 1,
            grid: GridSection { n: 2 },
            sensors: 4,
            scheme,
            setting,
            variant: None,
            shots: Some(60),
            samples_per_cell: None,
            coarse_samples_per_cell: None,
            blocks: None,
            train: None,
            repetitions: Some(2),
            seed: Some(23),
            sweep: None,
            manifest: None,
        }
    }

    #[test]
    fn parallel_evaluation_matches_the_serial_path() {
        let mut exp = ExperimentConfig::new(4, 8, Scheme::QsdTwo, Setting::Continuous);
        exp.shots = 40;
        exp.repetitions = 2;
        exp.seed = 9;
        let cfg = SensingConfig::default();
        let (built, serial) = run_scheme(&exp, &cfg).unwrap();
        let grid = make_grid(4).unwrap();
        let layout = deploy_sensors(&grid, 8).unwrap();
        let root = Rng::new(exp.seed);
        let parallel = evaluate_parallel(
            &built.predictor,
            &grid,
            &layout,
            exp.setting,
            exp.repetitions,
            &cfg,
            &root,
            Some(3),
        )
        .unwrap();
        assert_eq!(serial, parallel);
        // And the core serial evaluate agrees too.
        let direct = evaluate(
            &built.predictor,
            &grid,
            &layout,
            exp.setting,
            exp.repetitions,
            &cfg,
            &root,
        )
        .unwrap();
        assert_eq!(direct, parallel);
    }

    #[test]
    fn eval_writes_results_and_byte_identical_reruns() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = ctx(dir.path());
        let file = qsd_file(Scheme::QsdOne, Setting::Discrete);
        cmd_eval(&file, &ctx).unwrap();
        for name in ["summary.json", "records.csv", "cdf.csv", "manifest.json"] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        let summary = std::fs::read(dir.path().join("summary.json")).unwrap();
        let records = std::fs::read(dir.path().join("records.csv")).unwrap();
        let cdf = std::fs::read(dir.path().join("cdf.csv")).unwrap();

        cmd_eval(&file, &ctx).unwrap();
        assert_eq!(summary, std::fs::read(dir.path().join("summary.json")).unwrap());
        assert_eq!(records, std::fs::read(dir.path().join("records.csv")).unwrap());
        assert_eq!(cdf, std::fs::read(dir.path().join("cdf.csv")).unwrap());
    }

    #[test]
    fn manifest_re_fed_reproduces_the_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let ctx1 = ctx(&dir.path().join("a"));
        let file = qsd_file(Scheme::QsdTwo, Setting::Discrete);
        cmd_eval(&file, &ctx1).unwrap();
        let records = std::fs::read(dir.path().join("a/records.csv")).unwrap();

        let manifest_path = dir.path().join("a/manifest.json");
        let refed = crate::config::load_config(&manifest_path, &[], None).unwrap();
        let ctx2 = ctx(&dir.path().join("b"));
        cmd_eval(&refed, &ctx2).unwrap();
        assert_eq!(records, std::fs::read(dir.path().join("b/records.csv")).unwrap());
        assert_eq!(
            std::fs::read(dir.path().join("a/summary.json")).unwrap(),
            std::fs::read(dir.path().join("b/summary.json")).unwrap(),
        );
    }

    #[test]
    fn gen_data_writes_the_two_level_files() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = ctx(dir.path());
        let mut file = qsd_file(Scheme::PqcTwo, Setting::Discrete);
        file.grid = GridSection { n: 4 };
        file.sensors = 8;
        file.samples_per_cell = Some(2);
        cmd_gen_data(&file, &ctx).unwrap();
        assert!(dir.path().join("coarse.jsonl").exists());
        for b in 0..4 {
            assert!(dir.path().join(format!("fine-{b}.jsonl")).exists());
        }
        let coarse = std::fs::read_to_string(dir.path().join("coarse.jsonl")).unwrap();
        assert_eq!(coarse.lines().count(), 32);
        let first: serde_json::Value = serde_json::from_str(coarse.lines().next().unwrap()).unwrap();
        assert_eq!(first["label"], 0);
        assert!(first["state"]["amplitudes"].as_array().unwrap().len() == 256);

        // The coarse override shrinks only the coarse file.
        let shrunk = tempfile::tempdir().unwrap();
        let shrunk_ctx = self::ctx(shrunk.path());
        file.coarse_samples_per_cell = Some(1);
        cmd_gen_data(&file, &shrunk_ctx).unwrap();
        let coarse = std::fs::read_to_string(shrunk.path().join("coarse.jsonl")).unwrap();
        assert_eq!(coarse.lines().count(), 16);
        assert_eq!(
            std::fs::read(dir.path().join("fine-2.jsonl")).unwrap(),
            std::fs::read(shrunk.path().join("fine-2.jsonl")).unwrap(),
        );
    }

    #[test]
    fn gen_data_one_level_counts_match() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = ctx(dir.path());
        let mut file = qsd_file(Scheme::PqcOne, Setting::Continuous);
        file.samples_per_cell = Some(3);
        cmd_gen_data(&file, &ctx).unwrap();
        let data = std::fs::read_to_string(dir.path().join("dataset.jsonl")).unwrap();
        assert_eq!(data.lines().count(), 12);
    }

    #[test]
    fn build_pgm_rejects_learned_schemes_and_writes_info() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = ctx(dir.path());
        let mut file = qsd_file(Scheme::PqcOne, Setting::Discrete);
        let err = cmd_build_pgm(&file, &ctx).unwrap_err();
        assert_eq!(err.exit_code(), 1);

        file.scheme = Scheme::QsdOne;
        cmd_build_pgm(&file, &ctx).unwrap();
        let info: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("povm.json")).unwrap())
                .unwrap();
        assert_eq!(info["kind"], "qsd-one");
        assert_eq!(info["targets"], 4);
        let artifact = dir.path().join(info["artifact"].as_str().unwrap());
        assert!(artifact.exists());
    }

    #[test]
    fn train_rejects_qsd_and_records_losses() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = ctx(dir.path());
        let mut file = qsd_file(Scheme::QsdOne, Setting::Discrete);
        let err = cmd_train(&file, &ctx).unwrap_err();
        assert_eq!(err.exit_code(), 1);

        file.scheme = Scheme::PqcTwo;
        file.grid = GridSection { n: 4 };
        file.sensors = 8;
        file.samples_per_cell = Some(2);
        file.train = Some(crate::config::TrainSection {
            learning_rate: None,
            batch_size: None,
            epochs: Some(2),
        });
        cmd_train(&file, &ctx).unwrap();
        let info: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("training.json")).unwrap(),
        )
        .unwrap();
        let models = info["models"].as_array().unwrap();
        assert_eq!(models.len(), 5);
        assert_eq!(models[0]["name"], "coarse");
        assert_eq!(models[1]["name"], "fine-0");
        assert_eq!(models[0]["epochs"], 2);
        assert!(models[0]["final_loss"].is_number());
    }

    #[test]
    fn sweep_emits_one_row_per_combination_and_reuses_the_cache() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = ctx(dir.path());
        let mut file = qsd_file(Scheme::QsdOne, Setting::Discrete);
        file.sweep = Some(SweepSection {
            axis: SweepAxis::Grid,
            values: vec![2, 4],
            schemes: Some(vec![Scheme::QsdOne, Scheme::QsdTwo]),
        });
        file.sensors = 8;
        cmd_sweep(&file, &ctx).unwrap();
        let table = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 5, "{table}");
        assert_eq!(lines[0], "grid_n,sensors,scheme,setting,variant,records,mean_l_err,cc_acc");
        assert!(lines[1].starts_with("2,8,qsd-one,discrete,classifier,8,"));
        assert!(lines[2].starts_with("2,8,qsd-two,discrete,classifier,8,"));
        assert!(lines[3].starts_with("4,8,qsd-one,discrete,classifier,32,"));
        for (scheme, n) in [("qsd-one", 2), ("qsd-two", 2), ("qsd-one", 4), ("qsd-two", 4)] {
            let run = dir.path().join("runs").join(format!("{scheme}-grid{n}"));
            assert!(run.join("summary.json").exists(), "{run:?}");
            assert!(run.join("records.csv").exists());
        }
        // Four artifacts cached, reused on a rerun (byte-identical table).
        cmd_sweep(&file, &ctx).unwrap();
        assert_eq!(table, std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap());
    }

    #[test]
    fn sweep_requires_a_sweep_section_and_valid_combos() {
        let dir = tempfile::tempdir().unwrap();
        let ctx = ctx(dir.path());
        let file = qsd_file(Scheme::QsdOne, Setting::Discrete);
        let err = cmd_sweep(&file, &ctx).unwrap_err();
        assert_eq!(err.exit_code(), 1);

        let mut bad = file.clone();
        bad.sweep = Some(SweepSection {
            axis: SweepAxis::Sensors,
            values: vec![16],
            schemes: Some(vec![Scheme::QsdOne]),
        });
        let err = cmd_sweep(&bad, &ctx).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("sensors=16"), "{err}");
    }
}
