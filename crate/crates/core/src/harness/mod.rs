//! Reproducible experiments: encode, embed, sample, repair, refine and
//! tabulate, with every intermediate optionally persisted.

mod config;
mod report;

pub use config::{EmbeddingScheme, ExperimentConfig, Pipeline, RepairKind, PRESETS};
pub use report::{emit, reference_table, EmitFormat, RepetitionRow, Report, Table};

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use crate::chimera::{self, apply_embedding, Embedding, PhysicalModel};
use crate::error::StageExt;
use crate::ising::{self, CriteriaSpec, IsingModel};
use crate::par::{self, Execution};
use crate::postprocess::{self, expand_broken_chains, majority_vote_decode, DecodedRecord, Readout, Target};
use crate::sampler::{self, derive_seed, SampleSet};
use crate::{Error, Result, Stage, TruthTable};

/// One decoded readout with whether every chain came back intact.
#[derive(Debug, Clone)]
struct Decoded {
    readout: Readout,
    intact: bool,
}

struct Setting {
    label: String,
    cells: Vec<String>,
    logical: IsingModel,
    physical: Option<PhysicalModel>,
}

struct JobOutcome {
    metrics: BTreeMap<String, f64>,
    /// Criterion-satisfying functions, per named bucket.
    found: BTreeMap<String, BTreeSet<TruthTable>>,
}

fn fmt_num(v: f64) -> String {
    format!("{}", (v * 100.0).round() / 100.0)
}

fn build_embedding(cfg: &ExperimentConfig) -> Result<Option<Embedding>> {
    Ok(match cfg.embedding {
        EmbeddingScheme::None => None,
        EmbeddingScheme::Bipartite => Some(chimera::embed_bipartite(cfg.n)?),
        EmbeddingScheme::Clique => Some(chimera::embed_clique(1 << cfg.n)?),
        EmbeddingScheme::Composite => Some(chimera::embed_composite(cfg.n)?),
    })
}

fn build_settings(cfg: &ExperimentConfig, embedding: Option<&Embedding>) -> Result<Vec<Setting>> {
    let mut out = Vec::new();
    let lower = |logical: &IsingModel| -> Result<Option<PhysicalModel>> {
        embedding.map(|e| apply_embedding(logical, e, cfg.chain_strength)).transpose().stage(Stage::Embed)
    };
    match cfg.pipeline {
        Pipeline::Bent | Pipeline::LocalSearch | Pipeline::Balanced => {
            for &s in &cfg.coupler_strengths {
                let logical = if cfg.pipeline == Pipeline::Balanced {
                    ising::encode_resiliency(cfg.n, cfg.resiliency_order, s, cfg.balancedness)
                } else {
                    ising::encode_nonlinearity(cfg.n, s)
                }
                .stage(Stage::Encode)?;
                let physical = lower(&logical)?;
                out.push(Setting { label: format!("coupler-{s}"), cells: vec![s.to_string()], logical, physical });
            }
        }
        Pipeline::Resilient => {
            for &(sn, sr) in &cfg.weight_grid {
                let spec = CriteriaSpec {
                    n: cfg.n,
                    nonlinearity_strength: sn,
                    resiliency_order: Some(cfg.resiliency_order),
                    resiliency_strength: sr,
                    include_balancedness: cfg.balancedness,
                };
                let logical = spec.build().stage(Stage::Encode)?;
                let physical = lower(&logical)?;
                out.push(Setting {
                    label: format!("weights-{sn}-{sr}"),
                    cells: vec![sn.to_string(), sr.to_string()],
                    logical,
                    physical,
                });
            }
        }
    }
    Ok(out)
}

fn decode(cfg: &ExperimentConfig, set: &SampleSet, embedding: Option<&Embedding>, seed: u64) -> Result<Vec<Decoded>> {
    let mut out = Vec::with_capacity(set.samples.len());
    for (i, s) in set.samples.iter().enumerate() {
        let Some(e) = embedding else {
            let function = ising::decode_function(&s.spins, cfg.n)?;
            out.push(Decoded { readout: Readout { function, energy: s.energy, multiplicity: s.multiplicity }, intact: true });
            continue;
        };
        let majority = majority_vote_decode(&s.spins, e, seed, i)?;
        let intact = majority.broken_chains == 0;
        let assignments = match cfg.repair {
            RepairKind::Expand if !intact => expand_broken_chains(&s.spins, e, cfg.expand_cap, seed, i)?,
            _ => vec![majority.spins],
        };
        for spins in assignments {
            let function = ising::decode_function(&spins, cfg.n)?;
            out.push(Decoded { readout: Readout { function, energy: s.energy, multiplicity: s.multiplicity }, intact });
        }
    }
    Ok(out)
}

fn persist_samples(dir: &Path, label: &str, rep: usize, set: &SampleSet, embedding: Option<&Embedding>, seed: u64) -> Result<()> {
    let base = dir.join(label);
    set.write_jsonl(BufWriter::new(File::create(base.join(format!("rep-{rep:03}.samples.jsonl")))?))?;
    if let Some(e) = embedding {
        let decoded = postprocess::decode_sample_set(set, e, seed, Execution::Sequential)?;
        let mut text = String::new();
        for d in &decoded {
            text.push_str(&serde_json::to_string(&DecodedRecord::new(d, set))?);
            text.push('\n');
        }
        fs::write(base.join(format!("rep-{rep:03}.decoded.jsonl")), text)?;
    }
    Ok(())
}

fn persist_models(dir: &Path, settings: &[Setting], embedding: Option<&Embedding>) -> Result<()> {
    fs::create_dir_all(dir)?;
    if let Some(e) = embedding {
        e.write_json(BufWriter::new(File::create(dir.join("embedding.json"))?))?;
    }
    for s in settings {
        let sub = dir.join(&s.label);
        fs::create_dir_all(&sub)?;
        s.logical.write_json(BufWriter::new(File::create(sub.join("model.json"))?))?;
        if let Some(p) = &s.physical {
            p.write_json(BufWriter::new(File::create(sub.join("physical.json"))?), "../embedding.json")?;
        }
    }
    Ok(())
}

fn frequency(decoded: &[Decoded], accepts: impl Fn(&TruthTable) -> bool) -> (f64, BTreeSet<TruthTable>) {
    let total: usize = decoded.iter().map(|d| d.readout.multiplicity).sum();
    let mut hits = 0;
    let mut distinct = BTreeSet::new();
    for d in decoded {
        if accepts(&d.readout.function) {
            hits += d.readout.multiplicity;
            distinct.insert(d.readout.function.clone());
        }
    }
    let pct = if total == 0 { 0.0 } else { 100.0 * hits as f64 / total as f64 };
    (pct, distinct)
}

fn is_bent(tt: &TruthTable) -> bool {
    tt.walsh().is_bent().unwrap_or(false)
}

fn range_key(k: usize, (lo, hi): (u32, u32)) -> String {
    format!("top-{k}_range-{lo}-{hi}")
}

fn range_label((lo, hi): (u32, u32)) -> String {
    if lo == hi {
        lo.to_string()
    } else {
        format!("{lo}-{hi}")
    }
}

fn analyze(cfg: &ExperimentConfig, decoded: &[Decoded], exec: Execution) -> Result<JobOutcome> {
    let mut metrics = BTreeMap::new();
    let mut found = BTreeMap::new();
    let total: usize = decoded.iter().map(|d| d.readout.multiplicity).sum();
    metrics.insert("readouts".to_string(), total as f64);
    match cfg.pipeline {
        Pipeline::Bent => {
            let (pct, bent) = frequency(decoded, is_bent);
            metrics.insert("bent_frequency_pct".into(), pct);
            metrics.insert("distinct_bent".into(), bent.len() as f64);
            found.insert("bent".to_string(), bent);
        }
        Pipeline::Balanced => {
            let order = cfg.resiliency_order;
            let (pct, hits) = frequency(decoded, |tt| {
                let p = tt.resiliency_profile();
                (!cfg.balancedness || p.balanced) && p.ci_order >= order
            });
            metrics.insert("balanced_frequency_pct".into(), pct);
            metrics.insert("distinct_balanced".into(), hits.len() as f64);
            found.insert("balanced".to_string(), hits);
        }
        Pipeline::LocalSearch => {
            let (_, initial) = frequency(decoded, is_bent);
            metrics.insert("initialized".into(), initial.len() as f64);
            let readouts: Vec<Readout> = decoded.iter().map(|d| d.readout.clone()).collect();
            for &k in &cfg.top_k {
                for &range in &cfg.nl_ranges {
                    let h = postprocess::harvest(&readouts, range, k, Target::Bent, exec).stage(Stage::Harvest)?;
                    let mut all = initial.clone();
                    all.extend(h.functions);
                    let key = range_key(k, range);
                    metrics.insert(format!("optimized_{key}"), all.len() as f64);
                    found.insert(key, all);
                }
            }
            found.insert("initialized".to_string(), initial);
        }
        Pipeline::Resilient => {
            let order = cfg.resiliency_order;
            let meets = |tt: &TruthTable| {
                let p = tt.resiliency_profile();
                match order {
                    0 => p.balanced,
                    m => p.resiliency.is_some_and(|r| r >= m),
                }
            };
            let intact: Vec<Decoded> = decoded.iter().filter(|d| d.intact).cloned().collect();
            let (_, initial) = frequency(&intact, meets);
            let (_, optimized) = frequency(decoded, meets);
            let best = optimized.iter().map(|f| f.nonlinearity()).max().unwrap_or(0);
            metrics.insert("initialized".into(), initial.len() as f64);
            metrics.insert("optimized".into(), optimized.len() as f64);
            metrics.insert("best_nonlinearity".into(), best as f64);
            metrics.insert("intact_readouts".into(), intact.iter().map(|d| d.readout.multiplicity).sum::<usize>() as f64);
            found.insert("optimized".to_string(), optimized);
        }
    }
    Ok(JobOutcome { metrics, found })
}

fn mean(rows: &[&JobOutcome], key: &str) -> f64 {
    rows.iter().map(|r| r.metrics.get(key).copied().unwrap_or(0.0)).sum::<f64>() / rows.len().max(1) as f64
}

fn union(rows: &[&JobOutcome], key: &str) -> BTreeSet<TruthTable> {
    rows.iter().flat_map(|r| r.found.get(key).into_iter().flatten().cloned()).collect()
}

fn tabulate(cfg: &ExperimentConfig, settings: &[Setting], outcomes: &[JobOutcome]) -> (Table, BTreeSet<TruthTable>) {
    let reps = cfg.repetitions;
    let per_setting: Vec<Vec<&JobOutcome>> =
        (0..settings.len()).map(|s| outcomes[s * reps..(s + 1) * reps].iter().collect()).collect();
    let mut functions = BTreeSet::new();
    let table = match cfg.pipeline {
        Pipeline::Bent => {
            let sweep = cfg.experiment == "exp-bent-n4-sweep";
            let mut t = if sweep {
                Table::new(&["coupler_strength", "bent_frequency_pct"])
            } else {
                Table::new(&["coupler_strength", "readouts", "bent_frequency_pct", "distinct_bent"])
            };
            for (s, rows) in settings.iter().zip(&per_setting) {
                let bent = union(rows, "bent");
                let pct = fmt_num(mean(rows, "bent_frequency_pct"));
                let mut row = s.cells.clone();
                if sweep {
                    row.push(pct);
                } else {
                    row.extend([fmt_num(mean(rows, "readouts")), pct, bent.len().to_string()]);
                }
                t.push(row);
                functions.extend(bent);
            }
            t
        }
        Pipeline::Balanced => {
            let mut t = Table::new(&["coupler_strength", "balanced_frequency_pct", "distinct_balanced"]);
            for (s, rows) in settings.iter().zip(&per_setting) {
                let hits = union(rows, "balanced");
                let mut row = s.cells.clone();
                row.extend([fmt_num(mean(rows, "balanced_frequency_pct")), hits.len().to_string()]);
                t.push(row);
                functions.extend(hits);
            }
            t
        }
        Pipeline::LocalSearch => {
            let n4 = cfg.experiment == "exp-localsearch-n4";
            let n6 = cfg.experiment == "exp-bent-n6-localsearch";
            let mut t = if n4 {
                Table::new(&["coupler_strength", "initialized", "optimized"])
            } else if n6 {
                Table::new(&["coupler_strength", "readouts", "optimized_range", "numbers"])
            } else {
                Table::new(&["coupler_strength", "readouts", "optimized_range", "initialized", "optimized", "numbers"])
            };
            for (s, rows) in settings.iter().zip(&per_setting) {
                functions.extend(union(rows, "initialized"));
                for (i, &k) in cfg.top_k.iter().enumerate() {
                    for (j, &range) in cfg.nl_ranges.iter().enumerate() {
                        let key = range_key(k, range);
                        let all = union(rows, &key);
                        let optimized = fmt_num(mean(rows, &format!("optimized_{key}")));
                        let mut row = s.cells.clone();
                        if n4 {
                            if i == 0 && j == 0 {
                                row.extend([fmt_num(mean(rows, "initialized")), optimized]);
                                t.push(row);
                            }
                        } else if n6 {
                            row.extend([k.to_string(), range_label(range), all.len().to_string()]);
                            t.push(row);
                        } else {
                            row.extend([
                                k.to_string(),
                                range_label(range),
                                fmt_num(mean(rows, "initialized")),
                                optimized,
                                all.len().to_string(),
                            ]);
                            t.push(row);
                        }
                        functions.extend(all);
                    }
                }
            }
            t
        }
        Pipeline::Resilient => {
            let mut t = Table::new(&["strength_n", "strength_r", "initialized", "optimized"]);
            for (s, rows) in settings.iter().zip(&per_setting) {
                let mut row = s.cells.clone();
                row.extend([fmt_num(mean(rows, "initialized")), fmt_num(mean(rows, "optimized"))]);
                t.push(row);
                functions.extend(union(rows, "optimized"));
            }
            t
        }
    };
    (table, functions)
}

/// Runs a configured experiment end to end.
///
/// Every (setting, repetition) pair samples with its own derived seed, so
/// the report is identical for any execution mode.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run_experiment_with(cfg, Execution::Auto)
}

pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Execution) -> Result<Report> {
    let started = Instant::now();
    cfg.validate().stage(Stage::Config)?;
    let embedding = build_embedding(cfg).stage(Stage::Embed)?;
    let settings = build_settings(cfg, embedding.as_ref())?;
    if let Some(dir) = &cfg.output_dir {
        persist_models(dir, &settings, embedding.as_ref()).stage(Stage::Persist)?;
        fs::write(dir.join("config.txt"), cfg.to_kv()).map_err(Error::from).stage(Stage::Persist)?;
    }
    let reps = cfg.repetitions;
    let schedule = cfg.schedule();
    let jobs = settings.len() * reps;
    let results = par::map_indices(jobs, exec, |job| -> Result<(RepetitionRow, JobOutcome)> {
        let (s, rep) = (job / reps, job % reps);
        let setting = &settings[s];
        let seed = derive_seed(cfg.seed, s as u64, rep as u64);
        let model = setting.physical.as_ref().map_or(&setting.logical, |p| &p.model);
        let set = sampler::sample_with(model, cfg.solver, &schedule.clone().with_seed(seed), exec).stage(Stage::Sample)?;
        if let Some(dir) = &cfg.output_dir {
            persist_samples(dir, &setting.label, rep, &set, embedding.as_ref(), seed).stage(Stage::Persist)?;
        }
        let decoded = decode(cfg, &set, embedding.as_ref(), seed).stage(Stage::Decode)?;
        let outcome = analyze(cfg, &decoded, exec)?;
        let row = RepetitionRow { setting: setting.label.clone(), repetition: rep, seed, metrics: outcome.metrics.clone() };
        Ok((row, outcome))
    });
    let mut rows = Vec::with_capacity(jobs);
    let mut outcomes = Vec::with_capacity(jobs);
    for r in results {
        let (row, outcome) = r?;
        rows.push(row);
        outcomes.push(outcome);
    }
    let (table, functions) = tabulate(cfg, &settings, &outcomes);
    let report = Report {
        experiment: cfg.experiment.clone(),
        config: cfg.clone(),
        seed: cfg.seed,
        repetitions: rows,
        table,
        reference: reference_table(&cfg.experiment),
        functions: functions.iter().map(TruthTable::to_hex).collect(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    if let Some(dir) = &cfg.output_dir {
        emit(&report, dir, EmitFormat::Both).stage(Stage::Persist)?;
    }
    Ok(report)
}

/// Outcome of a logical nonlinearity search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Bent functions read straight off the sampler.
    pub initial: BTreeSet<TruthTable>,
    /// Initial plus everything the harvest produced.
    pub found: BTreeSet<TruthTable>,
    pub summaries: Vec<postprocess::HarvestSummary>,
}

/// Samples the logical nonlinearity model `runs` times and harvests each
/// run for bent functions.
pub fn search(
    n: usize,
    strength: f64,
    schedule: &sampler::Schedule,
    runs: usize,
    nl_range: (u32, u32),
    top_k: usize,
    exec: Execution,
) -> Result<SearchOutcome> {
    let model = ising::encode_nonlinearity(n, strength).stage(Stage::Encode)?;
    let mut initial = BTreeSet::new();
    let mut found = BTreeSet::new();
    let mut summaries = Vec::new();
    for run in 0..runs {
        let sched = schedule.clone().with_seed(derive_seed(schedule.seed, 0, run as u64));
        let set = sampler::sample_sa_with(&model, &sched, exec).stage(Stage::Sample)?;
        let readouts = postprocess::logical_readouts(&set, n).stage(Stage::Decode)?;
        initial.extend(readouts.iter().map(|r| &r.function).filter(|f| is_bent(f)).cloned());
        let h = postprocess::harvest(&readouts, nl_range, top_k, Target::Bent, exec).stage(Stage::Harvest)?;
        found.extend(h.functions);
        summaries.push(h.summary);
    }
    found.extend(initial.iter().cloned());
    Ok(SearchOutcome { initial, found, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(name: &str) -> ExperimentConfig {
        let mut c = ExperimentConfig::preset(name).unwrap();
        c.reads = 40;
        c.sweeps = 100;
        c.repetitions = 2;
        c
    }

    #[test]
    fn empty_sweep_fails_at_config_stage() {
        let mut c = small("exp-bent-n4-sweep");
        c.coupler_strengths.clear();
        let err = run_experiment(&c).unwrap_err();
        assert_eq!(err.stage(), Some(Stage::Config));
        assert!(err.to_string().starts_with("[config]"));
    }

    #[test]
    fn sweep_table_shape() {
        let r = run_experiment(&small("exp-bent-n4-sweep")).unwrap();
        assert_eq!(r.table.columns, vec!["coupler_strength", "bent_frequency_pct"]);
        assert_eq!(r.table.column("coupler_strength").unwrap(), vec!["2", "1", "0.5", "0.25", "0.1"]);
        assert_eq!(r.repetitions.len(), 10);
        assert!(r.to_csv().starts_with("coupler_strength,bent_frequency_pct\n"));
    }

    #[test]
    fn execution_mode_does_not_change_reports() {
        let c = small("exp-resilient-n4");
        let a = run_experiment_with(&c, Execution::Sequential).unwrap();
        let b = run_experiment_with(&c, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn json_round_trip() {
        let r = run_experiment(&small("exp-localsearch-n4")).unwrap();
        assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
        assert_eq!(r.table.columns, vec!["coupler_strength", "initialized", "optimized"]);
    }
}
