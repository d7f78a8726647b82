//! Command-line front end: `simulate`, `train`, `detect` and `evaluate`.
//!
//! Exit codes: 0 ok, 1 other failure, 2 config, 3 io, 4 fingerprint,
//! 5 missing input, 6 label mismatch.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, Profile, Seeds};
use crate::detector::{auc, roc_curve, train_likelihood_baseline};
use crate::error::{Error, Result};
use crate::experiment::{BankSpec, Campaign, Experiment, Scorer};
use crate::formats::{self, dataset, ensemble, report, ReportSummary};
use crate::sample::SampleMatrix;
use crate::sigproc::Fingerprint;
use crate::vae::train_ensemble;

#[derive(Debug, Parser)]
#[command(name = "gwdetect", version, about = "Guided-wave damage detection with a simulation-trained VAE ensemble")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// TOML configuration; keys it omits come from the profile.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in profile: paper_scale or desk_scale.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// Master seed; every role seed derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replace existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Adv,
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Vae,
    Likelihood,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate training corpora and an emulated measurement campaign.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Train a VAE ensemble or the likelihood comparator on simulated data.
    Train {
        #[command(flatten)]
        common: Common,
        /// Directory written by `simulate`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "adv")]
        variant: Variant,
        #[arg(long, value_enum, default_value = "vae")]
        model: ModelKind,
        /// Keep members already present in the output and train the rest.
        #[arg(long)]
        resume: bool,
    },
    /// Score measurements against a calibration bank.
    Detect {
        #[command(flatten)]
        common: Common,
        /// Directory written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Measurement set directory.
        #[arg(long)]
        measurements: PathBuf,
        /// Calibration bank set directory containing `bank.json`.
        #[arg(long)]
        bank: PathBuf,
    },
    /// Recompute metrics from report CSVs against ground-truth labels.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Report CSV files written by `detect`.
        #[arg(long, required = true, num_args = 1..)]
        reports: Vec<PathBuf>,
        /// Set manifest (or its directory) holding the true labels.
        #[arg(long)]
        labels: PathBuf,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Io { .. } | Error::Format(_) | Error::Json(_) => 3,
        Error::FingerprintMismatch { .. } => 4,
        Error::MissingInput(_) => 5,
        Error::LabelMismatch(_) => 6,
        _ => 1,
    }
}

/// Parse `args`, run the command and return its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { common } => simulate(&common),
        Command::Train {
            common,
            data,
            variant,
            model,
            resume,
        } => train(&common, &data, variant, model, resume),
        Command::Detect {
            common,
            model,
            measurements,
            bank,
        } => detect(&common, &model, &measurements, &bank),
        Command::Evaluate { common, reports, labels } => evaluate(&common, &reports, &labels),
    }
}

const CONFIG_FILE: &str = "config.toml";
const DATA_MANIFEST: &str = "manifest.json";
const MODEL_MANIFEST: &str = "model.json";
const BANK_FILE: &str = "bank.json";
const LIKELIHOOD_FILE: &str = "likelihood.gwnn";

/// Resolve the configuration: an explicit file, else `fallback` (a config
/// saved next to earlier outputs), else the profile. `--seed` overrides.
fn resolve_config(common: &Common, fallback: Option<&Path>) -> Result<ExperimentConfig> {
    let profile: Profile = common.profile.as_deref().unwrap_or("desk_scale").parse()?;
    let mut config = match (&common.config, fallback) {
        (Some(path), _) => ExperimentConfig::load(path, profile)?,
        (None, Some(path)) if path.exists() => ExperimentConfig::load(path, profile)?,
        _ => ExperimentConfig::for_profile(profile),
    };
    if let Some(seed) = common.seed {
        config.seeds = Seeds::from_master(seed);
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(common: &Common) -> Result<&Path> {
    common
        .out
        .as_deref()
        .ok_or_else(|| Error::Config("--out is required for this command".into()))
}

/// Refuse to write into a non-empty directory unless forced.
fn claim_output(dir: &Path, marker: &str, force: bool) -> Result<()> {
    let marker = dir.join(marker);
    if marker.exists() && !force {
        return Err(Error::io(
            &marker,
            std::io::Error::new(std::io::ErrorKind::AlreadyExists, "output exists; pass --force to replace it"),
        ));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_config(dir: &Path, config: &ExperimentConfig) -> Result<()> {
    formats::write_atomic(&dir.join(CONFIG_FILE), config.to_toml()?.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataManifest {
    pub format: String,
    pub config_hash: String,
    pub fingerprint: String,
    pub seeds: Seeds,
    /// Set name to directory, relative to the manifest.
    pub sets: BTreeMap<String, String>,
}

fn simulate(common: &Common) -> Result<()> {
    let config = resolve_config(common, None)?;
    let out = out_dir(common)?;
    claim_output(out, DATA_MANIFEST, common.force)?;
    let exp = Experiment::new(config.clone())?;
    let hash = config.hash()?;
    let fp = exp.preprocessor.fingerprint().0.clone();
    let mut sets = BTreeMap::new();
    let mut save = |name: &str, samples: &[SampleMatrix], seed: u64| -> Result<()> {
        let dir = out.join(name);
        dataset::save_set(&dir, name, samples, &hash, &fp, seed)?;
        sets.insert(name.to_string(), name.to_string());
        println!("{name}: {} samples", samples.len());
        Ok(())
    };
    let adv = exp.simulate_adversarial()?;
    save("adv/train", &adv.train, config.seeds.dataset)?;
    save("adv/validation", &adv.validation, config.seeds.dataset)?;
    let ideal = exp.simulate_ideal()?;
    save("ideal/train", &ideal.train, config.seeds.dataset)?;
    save("ideal/validation", &ideal.validation, config.seeds.dataset)?;
    let sequence = exp.sequence()?;
    let bank = BankSpec::draw(&sequence, config.seeds.detection)?;
    let (refs, tests): (Vec<SampleMatrix>, Vec<SampleMatrix>) =
        sequence.into_iter().partition(|s| bank.ids().contains(&s.meta.id));
    save("bank", &refs, config.seeds.sequence)?;
    formats::write_json(&out.join("bank").join(BANK_FILE), &bank)?;
    save("sequence", &tests, config.seeds.sequence)?;
    write_config(out, &config)?;
    formats::write_json(
        &out.join(DATA_MANIFEST),
        &DataManifest {
            format: "gwdetect data v1".into(),
            config_hash: hash.clone(),
            fingerprint: fp,
            seeds: config.seeds.clone(),
            sets,
        },
    )?;
    println!("config hash {hash}");
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub kind: ModelKind,
    pub variant: Variant,
    pub method: String,
    pub config_hash: String,
    pub fingerprint: String,
}

pub fn method_name(kind: ModelKind, variant: Variant) -> &'static str {
    match (kind, variant) {
        (ModelKind::Vae, Variant::Adv) => "VAE-adv",
        (ModelKind::Vae, Variant::Ideal) => "VAE-ideal",
        (ModelKind::Likelihood, Variant::Adv) => "Likelihood-adv",
        (ModelKind::Likelihood, Variant::Ideal) => "Likelihood-ideal",
    }
}

fn variant_dir(variant: Variant) -> &'static str {
    match variant {
        Variant::Adv => "adv",
        Variant::Ideal => "ideal",
    }
}

fn train(common: &Common, data: &Path, variant: Variant, kind: ModelKind, resume: bool) -> Result<()> {
    let config = resolve_config(common, Some(&data.join(CONFIG_FILE)))?;
    let out = out_dir(common)?;
    let manifest: DataManifest = formats::read_json(&data.join(DATA_MANIFEST))?;
    let exp = Experiment::new(config.clone())?;
    Fingerprint(manifest.fingerprint.clone()).ensure_matches(exp.preprocessor.fingerprint())?;
    claim_output(out, MODEL_MANIFEST, common.force || resume)?;
    let load = |name: &str| -> Result<Vec<SampleMatrix>> {
        let (m, samples) = dataset::load_set(&data.join(variant_dir(variant)).join(name))?;
        Fingerprint(m.fingerprint).ensure_matches(exp.preprocessor.fingerprint())?;
        Ok(samples)
    };
    let train_set = exp.prepare_training(&load("train")?)?;
    let val_set = exp.prepare_training(&load("validation")?)?;
    let hash = config.hash()?;
    let fp = exp.preprocessor.fingerprint().clone();
    match kind {
        ModelKind::Vae => {
            let n = config.detector.ensemble_size;
            let existing = if resume { ensemble::load_members(out, n, &fp)? } else { Vec::new() };
            let log_path = out.join("training_log.csv");
            // Keep the history of members that are not retrained.
            let mut records = Vec::new();
            if !existing.is_empty() && log_path.exists() {
                let kept: Vec<usize> = existing.iter().map(|(i, _)| *i).collect();
                records = formats::read_training_log(&log_path)?;
                records.retain(|r| kept.contains(&r.member));
            }
            if !existing.is_empty() {
                println!("resuming with {} of {n} members present", existing.len());
            }
            let (model, logs) = train_ensemble(
                &config.vae,
                &train_set,
                &val_set,
                n,
                config.seeds.ensemble,
                &hash,
                existing,
                |i, vae, log| {
                    println!("member {i}: validation ELBO {:.4} -> {:.4}", log.initial_val_elbo, log.final_val_elbo());
                    ensemble::save_member(out, i, vae, &fp)
                },
            )?;
            formats::save_ensemble(out, &model)?;
            records.extend(logs.iter().flat_map(|l| l.epochs.iter().copied()));
            formats::write_log_records(&log_path, &records)?;
        }
        ModelKind::Likelihood => {
            let model = train_likelihood_baseline(&train_set, &config.detector.likelihood, config.seeds.likelihood)?;
            formats::save_likelihood(&out.join(LIKELIHOOD_FILE), &model)?;
        }
    }
    write_config(out, &config)?;
    formats::write_json(
        &out.join(MODEL_MANIFEST),
        &ModelManifest {
            kind,
            variant,
            method: method_name(kind, variant).into(),
            config_hash: hash,
            fingerprint: fp.0,
        },
    )?;
    println!("{} saved to {}", method_name(kind, variant), out.display());
    Ok(())
}

fn detect(common: &Common, model_dir: &Path, measurements: &Path, bank_dir: &Path) -> Result<()> {
    let config = resolve_config(common, Some(&model_dir.join(CONFIG_FILE)))?;
    let out = out_dir(common)?;
    let model: ModelManifest = formats::read_json(&model_dir.join(MODEL_MANIFEST))?;
    let exp = Experiment::new(config.clone())?;
    let fp = exp.preprocessor.fingerprint();
    Fingerprint(model.fingerprint.clone()).ensure_matches(fp)?;
    let bank_path = bank_dir.join(BANK_FILE);
    if !bank_path.exists() {
        return Err(Error::MissingInput(format!("calibration bank {} does not exist", bank_path.display())));
    }
    let bank: BankSpec = formats::read_json(&bank_path)?;
    let (bank_manifest, mut raw) = dataset::load_set(bank_dir)?;
    let (test_manifest, tests) = dataset::load_set(measurements)?;
    for m in [&bank_manifest, &test_manifest] {
        Fingerprint(m.fingerprint.clone()).ensure_matches(fp)?;
    }
    raw.extend(tests);
    let campaign = Campaign::assemble(&exp.preprocessor, &raw, &bank)?;
    let ensemble;
    let likelihood;
    let scorer = match model.kind {
        ModelKind::Vae => {
            ensemble = formats::load_ensemble(model_dir)?;
            Scorer::Vae {
                ensemble: &ensemble,
                seed: config.seeds.detection,
            }
        }
        ModelKind::Likelihood => {
            likelihood = formats::load_likelihood(&model_dir.join(LIKELIHOOD_FILE))?;
            Scorer::Likelihood(&likelihood)
        }
    };
    let result = campaign.detect(&exp.preprocessor, scorer, config.detector.histogram_bins)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let stem = model.method.to_lowercase();
    let [csv, ..] = report::report_paths(out, &stem);
    if csv.exists() && !common.force {
        return Err(Error::io(
            &csv,
            std::io::Error::new(std::io::ErrorKind::AlreadyExists, "report exists; pass --force to replace it"),
        ));
    }
    let labels: Vec<Option<bool>> = result.report.samples.iter().map(|s| Some(s.label)).collect();
    let summary = ReportSummary::new(&model.method, &result.report, &result.threshold, &model.config_hash, &fp.0);
    formats::write_report(out, &stem, &result.report, &labels, &summary)?;
    println!(
        "{}: tau_0 {:.6}, {} samples, {} flagged",
        model.method,
        result.threshold.tau_0,
        result.report.samples.len(),
        result.report.samples.iter().filter(|s| s.decision).count()
    );
    if result.threshold.inverted {
        println!("warning: the damaged calibration entry does not score above the undamaged one");
    }
    Ok(())
}

/// Metrics recomputed from one report CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: String,
    pub p_d: Option<f64>,
    pub p_fa: Option<f64>,
    pub auc: Option<f64>,
    pub samples: usize,
}

/// Check a report against ground truth and recompute its metrics.
pub fn metrics_from_rows(method: &str, rows: &[report::ReportRow], truth: &BTreeMap<u64, bool>) -> Result<MethodMetrics> {
    let mut taus = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    let (mut hits, mut alarms, mut pos) = (0usize, 0usize, 0usize);
    for row in rows {
        let label = *truth
            .get(&row.sample_id)
            .ok_or_else(|| Error::LabelMismatch(format!("{method}: sample {} has no label", row.sample_id)))?;
        if let Some(stated) = report::parse_label(&row.label)? {
            if stated != label {
                return Err(Error::LabelMismatch(format!(
                    "{method}: sample {} is labelled {} in the report but {} in the labels",
                    row.sample_id,
                    report::label_text(stated),
                    report::label_text(label)
                )));
            }
        }
        let decision = report::parse_label(&row.decision)?
            .ok_or_else(|| Error::Format(format!("{method}: sample {} has no decision", row.sample_id)))?;
        pos += usize::from(label);
        hits += usize::from(label && decision);
        alarms += usize::from(!label && decision);
        taus.push(row.tau);
        labels.push(label);
    }
    let neg = rows.len() - pos;
    Ok(MethodMetrics {
        method: method.into(),
        p_d: (pos > 0).then(|| hits as f64 / pos as f64),
        p_fa: (neg > 0).then(|| alarms as f64 / neg as f64),
        auc: auc(&roc_curve(&taus, &labels)),
        samples: rows.len(),
    })
}

fn fmt_rate(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.3}"))
}

/// Table with one row per method in the order VAE-adv, VAE-ideal,
/// Likelihood-adv, Likelihood-ideal, then any others.
pub fn comparison_table(metrics: &[MethodMetrics]) -> String {
    let order = ["VAE-adv", "VAE-ideal", "Likelihood-adv", "Likelihood-ideal"];
    let rank = |m: &MethodMetrics| order.iter().position(|o| *o == m.method).unwrap_or(order.len());
    let mut rows: Vec<&MethodMetrics> = metrics.iter().collect();
    rows.sort_by_key(|m| rank(m));
    let mut out = format!("{:<18} {:>7} {:>7} {:>7}\n", "Method", "p_d", "p_fa", "AUC");
    for m in rows {
        out.push_str(&format!(
            "{:<18} {:>7} {:>7} {:>7}\n",
            m.method,
            fmt_rate(m.p_d),
            fmt_rate(m.p_fa),
            fmt_rate(m.auc)
        ));
    }
    out
}

fn evaluate(common: &Common, reports: &[PathBuf], labels: &Path) -> Result<()> {
    let manifest_path = if labels.is_dir() { labels.join(dataset::MANIFEST) } else { labels.to_path_buf() };
    let set: dataset::SetManifest = formats::read_json(&manifest_path)?;
    let truth: BTreeMap<u64, bool> = set.labels().into_iter().collect();
    let mut metrics = Vec::new();
    for path in reports {
        let rows = formats::read_report_csv(path)?;
        let summary_path = path.with_extension("json");
        let method = if summary_path.exists() {
            formats::read_json::<ReportSummary>(&summary_path)?.method
        } else {
            path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        };
        metrics.push(metrics_from_rows(&method, &rows, &truth)?);
    }
    let table = comparison_table(&metrics);
    print!("{table}");
    if let Some(out) = &common.out {
        claim_output(out, "evaluation.json", common.force)?;
        formats::write_json(&out.join("evaluation.json"), &metrics)?;
        formats::write_atomic(&out.join("evaluation.txt"), table.as_bytes())?;
    }
    Ok(())
}
