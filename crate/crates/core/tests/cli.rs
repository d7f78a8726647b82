//! The command-line workflow end to end on a reduced configuration.

mod common;

use common::tree;
use gwdetect::cli::{run, DataManifest};
use gwdetect::formats::{self, read_report_csv, save_set, ReportSummary};
use std::fs;
use std::path::{Path, PathBuf};

const SMALL: &str = r#"
profile = "desk_scale"

[wave_sim]
total_samples = 40

[vae]
epochs = 2

[detector]
ensemble_size = 2

[detector.likelihood]
epochs = 2

[sequence]
length = 14
onset = 7
"#;

fn gw(args: &[&dyn AsRef<std::ffi::OsStr>]) -> i32 {
    let mut full = vec![std::ffi::OsString::from("gwdetect")];
    full.extend(args.iter().map(|a| a.as_ref().to_os_string()));
    run(full)
}

struct Workspace {
    _root: tempfile::TempDir,
    config: PathBuf,
    data: PathBuf,
    vae: PathBuf,
    lik: PathBuf,
    reports: PathBuf,
}

fn workspace() -> Workspace {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("small.toml");
    fs::write(&config, SMALL).unwrap();
    let p = |name: &str| root.path().join(name);
    Workspace {
        config,
        data: p("data"),
        vae: p("vae"),
        lik: p("lik"),
        reports: p("reports"),
        _root: root,
    }
}

fn simulate_and_train(w: &Workspace) {
    assert_eq!(gw(&[&"simulate", &"--config", &w.config, &"--out", &w.data]), 0);
    assert_eq!(gw(&[&"train", &"--data", &w.data, &"--out", &w.vae]), 0);
    assert_eq!(gw(&[&"train", &"--data", &w.data, &"--model", &"likelihood", &"--out", &w.lik]), 0);
}

#[test]
fn full_workflow_and_exit_codes() {
    let w = workspace();
    simulate_and_train(&w);
    let manifest: DataManifest = formats::read_json(&w.data.join("manifest.json")).unwrap();
    assert_eq!(manifest.sets.len(), 6);
    assert!(w.vae.join("member_00.gwnn").exists() && w.vae.join("member_01.gwnn").exists());
    let log = fs::read_to_string(w.vae.join("training_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + 2 * 2);

    // Existing outputs are not replaced silently.
    assert_eq!(gw(&[&"simulate", &"--config", &w.config, &"--out", &w.data]), 3);

    let seq = w.data.join("sequence");
    let bank = w.data.join("bank");
    for model in [&w.vae, &w.lik] {
        assert_eq!(
            gw(&[&"detect", &"--model", model, &"--measurements", &seq, &"--bank", &bank, &"--out", &w.reports]),
            0
        );
    }
    for stem in ["vae-adv", "likelihood-adv"] {
        let rows = read_report_csv(&w.reports.join(format!("{stem}.csv"))).unwrap();
        // Three of the fourteen measurements form the bank.
        assert_eq!(rows.len(), 11);
        let summary: ReportSummary = formats::read_json(&w.reports.join(format!("{stem}.json"))).unwrap();
        let hits = rows.iter().filter(|r| r.decision == "damaged" && r.label == "damaged").count();
        let alarms = rows.iter().filter(|r| r.decision == "damaged" && r.label == "undamaged").count();
        assert_eq!((hits, alarms), (summary.detections, summary.false_alarms));
        for r in &rows {
            assert_eq!(r.decision == "damaged", r.tau >= summary.tau_0);
        }
        assert!(w.reports.join(format!("{stem}_histogram.csv")).exists());
        assert!(w.reports.join(format!("{stem}_roc.csv")).exists());
    }

    let eval = w.reports.join("eval");
    let csvs = [w.reports.join("vae-adv.csv"), w.reports.join("likelihood-adv.csv")];
    assert_eq!(gw(&[&"evaluate", &"--reports", &csvs[0], &csvs[1], &"--labels", &seq, &"--out", &eval]), 0);
    let table = fs::read_to_string(eval.join("evaluation.txt")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("Method") && lines[0].contains("p_d") && lines[0].contains("p_fa"));
    assert!(lines[1].starts_with("VAE-adv") && lines[2].starts_with("Likelihood-adv"));
    let metrics: Vec<gwdetect::cli::MethodMetrics> = formats::read_json(&eval.join("evaluation.json")).unwrap();
    let summary: ReportSummary = formats::read_json(&w.reports.join("vae-adv.json")).unwrap();
    assert_eq!((metrics[0].p_d, metrics[0].p_fa), (summary.p_d, summary.p_fa));

    // Labels of another set do not cover the report.
    assert_eq!(gw(&[&"evaluate", &"--reports", &csvs[0], &"--labels", &bank]), 6);

    // A missing bank.
    let nowhere = w.reports.join("no_bank");
    assert_eq!(
        gw(&[&"detect", &"--model", &w.vae, &"--measurements", &seq, &"--bank", &nowhere, &"--out", &w.reports]),
        5
    );

    // An empty measurement set gives an empty report.
    let empty = w.reports.join("empty_set");
    save_set(&empty, "empty", &[], &manifest.config_hash, &manifest.fingerprint, 0).unwrap();
    let empty_out = w.reports.join("empty");
    assert_eq!(
        gw(&[&"detect", &"--model", &w.vae, &"--measurements", &empty, &"--bank", &bank, &"--out", &empty_out]),
        0
    );
    assert!(read_report_csv(&empty_out.join("vae-adv.csv")).unwrap().is_empty());

    // A preprocessing change invalidates the trained model.
    let changed = w.reports.join("changed.toml");
    fs::write(&changed, format!("{SMALL}\n[sigproc.filter]\ncenter_frequency = 40000.0\n")).unwrap();
    let elsewhere = w.reports.join("elsewhere");
    assert_eq!(
        gw(&[
            &"detect", &"--config", &changed, &"--model", &w.vae, &"--measurements", &seq, &"--bank", &bank, &"--out",
            &elsewhere
        ]),
        4
    );
    assert_eq!(gw(&[&"train", &"--config", &changed, &"--data", &w.data, &"--out", &elsewhere]), 4);

    // Broken configuration.
    let broken = w.reports.join("broken.toml");
    fs::write(&broken, "[wave_sim]\nbins = \"many\"\n").unwrap();
    assert_eq!(gw(&[&"simulate", &"--config", &broken, &"--out", &elsewhere]), 2);
    assert_eq!(gw(&[&"simulate", &"--profile", &"laptop", &"--out", &elsewhere]), 2);
}

#[test]
fn resume_trains_only_missing_members_and_reruns_are_identical() {
    let w = workspace();
    simulate_and_train(&w);
    let original = tree(&w.vae);
    // Slot 0 holds a foreign but compatible member; resuming must keep it.
    let foreign = original[Path::new("member_01.gwnn")].clone();
    fs::write(w.vae.join("member_00.gwnn"), &foreign).unwrap();
    fs::remove_file(w.vae.join("member_01.gwnn")).unwrap();
    assert_eq!(gw(&[&"train", &"--data", &w.data, &"--out", &w.vae, &"--resume"]), 0);
    let resumed = tree(&w.vae);
    assert_eq!(resumed[Path::new("member_00.gwnn")], foreign);
    assert_eq!(resumed[Path::new("member_01.gwnn")], original[Path::new("member_01.gwnn")]);
    assert_eq!(resumed[Path::new("training_log.csv")], original[Path::new("training_log.csv")]);

    let data = tree(&w.data);
    assert_eq!(gw(&[&"simulate", &"--config", &w.config, &"--out", &w.data, &"--force"]), 0);
    assert_eq!(tree(&w.data), data);
}
