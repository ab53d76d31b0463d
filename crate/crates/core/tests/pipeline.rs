use std::fs::{self, File};
use std::io::BufReader;

use boolanneal::chimera::apply_embedding;
use boolanneal::harness::{self, ExperimentConfig, Report};
use boolanneal::ising::decode_function;
use boolanneal::postprocess::majority_vote_decode;
use boolanneal::sampler::{self, SampleSet};
use boolanneal::{Embedding, Execution, IsingModel};

fn small_sweep(dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset("exp-bent-n4-sweep").unwrap();
    cfg.coupler_strengths = vec![1.0, 0.25];
    cfg.reads = 60;
    cfg.sweeps = 200;
    cfg.repetitions = 2;
    cfg.output_dir = Some(dir.to_path_buf());
    cfg
}

#[test]
fn rows_recompute_from_persisted_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sweep(dir.path());
    let report = harness::run_experiment(&cfg).unwrap();
    assert_eq!(report.repetitions.len(), 4);

    let embedding = Embedding::read_json(File::open(dir.path().join("embedding.json")).unwrap()).unwrap();
    for row in &report.repetitions {
        let base = dir.path().join(&row.setting);
        let logical = IsingModel::read_json(File::open(base.join("model.json")).unwrap()).unwrap();
        let physical = apply_embedding(&logical, &embedding, cfg.chain_strength).unwrap();
        let path = base.join(format!("rep-{:03}.samples.jsonl", row.repetition));
        let stored = SampleSet::read_jsonl(BufReader::new(File::open(path).unwrap())).unwrap();

        let schedule = cfg.schedule().with_seed(row.seed);
        let again = sampler::sample_with(&physical.model, cfg.solver, &schedule, Execution::Sequential).unwrap();
        assert_eq!(again, stored, "{} rep {}", row.setting, row.repetition);

        let mut bent = 0;
        let mut total = 0;
        for (i, s) in stored.samples.iter().enumerate() {
            let d = majority_vote_decode(&s.spins, &embedding, row.seed, i).unwrap();
            let tt = decode_function(&d.spins, cfg.n).unwrap();
            total += s.multiplicity;
            if tt.walsh().is_bent().unwrap() {
                bent += s.multiplicity;
            }
        }
        assert_eq!(total, cfg.reads);
        let pct = 100.0 * bent as f64 / total as f64;
        assert!((row.metrics["bent_frequency_pct"] - pct).abs() < 1e-9);
    }
}

#[test]
fn emitted_report_matches_returned_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sweep(dir.path());
    let report = harness::run_experiment(&cfg).unwrap();
    let json = fs::read_to_string(dir.path().join("exp-bent-n4-sweep.json")).unwrap();
    assert_eq!(Report::from_json(&json).unwrap(), report);
    let csv = fs::read_to_string(dir.path().join("exp-bent-n4-sweep.csv")).unwrap();
    assert_eq!(csv, report.to_csv());
    let kv = fs::read_to_string(dir.path().join("config.txt")).unwrap();
    let mut parsed = ExperimentConfig::parse_kv(&kv).unwrap();
    parsed.output_dir = cfg.output_dir.clone();
    assert_eq!(parsed, cfg);
}

#[test]
fn logical_pipeline_reports_known_bent_functions() {
    let mut cfg = ExperimentConfig::preset("exp-bent-n2").unwrap();
    cfg.repetitions = 3;
    cfg.reads = 200;
    cfg.sweeps = 200;
    let report = harness::run_experiment_with(&cfg, Execution::Sequential).unwrap();
    assert!(!report.functions.is_empty());
    for hex in &report.functions {
        let tt = boolanneal::TruthTable::from_hex(2, hex).unwrap();
        assert_eq!(tt.nonlinearity(), 1);
    }
    assert_eq!(report, harness::run_experiment_with(&cfg, Execution::Parallel).unwrap());
}
