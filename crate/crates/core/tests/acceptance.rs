//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed. Independent reference computations (naive
//! Walsh sums, affine distances, brute-force minimisation) live here rather
//! than in the library.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use boolanneal::chimera::{self, apply_embedding, validate_embedding};
use boolanneal::harness::{self, emit, EmitFormat, ExperimentConfig};
use boolanneal::ising::{self, CriteriaSpec};
use boolanneal::oracle::{self, Predicate};
use boolanneal::postprocess::{self, majority_vote_decode, Target};
use boolanneal::sampler::{self, derive_seed};
use boolanneal::{Execution, Schedule, TruthTable};

type Outcome = Result<String, String>;

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn random_tt(n: usize, rng: &mut impl Rng) -> TruthTable {
    TruthTable::new(n, (0..1usize << n).map(|_| rng.random()).collect()).unwrap()
}

fn naive_walsh(tt: &TruthTable) -> Vec<i64> {
    let len = tt.len();
    (0..len)
        .map(|a| {
            (0..len)
                .map(|x| {
                    let e = tt.get(x) as u32 + (a & x).count_ones();
                    if e.is_multiple_of(2) {
                        1
                    } else {
                        -1
                    }
                })
                .sum()
        })
        .collect()
}

fn affine_distance_nl(tt: &TruthTable) -> u32 {
    let len = tt.len();
    let mut best = len;
    for a in 0..len {
        let d = (0..len).filter(|&x| tt.get(x) != ((a & x).count_ones() % 2 == 1)).count();
        best = best.min(d).min(len - d);
    }
    best as u32
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_secs {
        Ok(())
    } else {
        Err(format!("took {:.1}s, budget {limit_secs}s", elapsed.as_secs_f64()))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus() -> Vec<TruthTable> {
    let mut r = rng(1);
    [2, 4, 6, 8].iter().flat_map(|&n| (0..1000).map(|_| random_tt(n, &mut r)).collect::<Vec<_>>()).collect()
}

fn c01_transform() -> Outcome {
    let start = Instant::now();
    let corpus = corpus();
    for tt in &corpus {
        ensure(tt.walsh().coefficients() == naive_walsh(tt).as_slice(), || format!("mismatch on {tt:?}"))?;
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!("{} functions, n in {{2,4,6,8}}", corpus.len()))
}

fn c02_parseval() -> Outcome {
    for tt in corpus() {
        let n = tt.n();
        let sum: i64 = tt.walsh().coefficients().iter().map(|w| w * w).sum();
        ensure(sum == 1i64 << (2 * n), || format!("sum of squares {sum} on {tt:?}"))?;
    }
    Ok("sum W^2 = 2^(2n) on 4000 functions".into())
}

fn c03_nonlinearity() -> Outcome {
    let start = Instant::now();
    for idx in 0..1u64 << 16 {
        let tt = TruthTable::from_index(4, idx).unwrap();
        ensure(tt.nonlinearity() == affine_distance_nl(&tt), || format!("nl mismatch on {tt}"))?;
    }
    within(start.elapsed(), 30.0)?;
    Ok("65536 four-variable functions".into())
}

fn c04_count_n2() -> Outcome {
    let count = oracle::count_bent(2).map_err(|e| e.to_string())?;
    ensure(count == 8, || format!("counted {count}"))?;
    Ok("8 bent of 16".into())
}

fn c05_count_n4() -> Outcome {
    let start = Instant::now();
    let bent: BTreeSet<TruthTable> = oracle::list(4, Predicate::Bent).map_err(|e| e.to_string())?.into_iter().collect();
    for f in &bent {
        ensure(bent.contains(&f.complement()), || format!("complement of {f} missing"))?;
        ensure(naive_walsh(f).iter().all(|w| w.abs() == 4), || format!("{f} has |W| != 4"))?;
    }
    within(start.elapsed(), 60.0)?;
    let count = bent.len() as f64;
    let table = 2f64.powf(9.8);
    Ok(format!(
        "{} bent; delta vs 894: {:+}; delta vs 2^9.8 ({table:.1}): {:+.1}",
        bent.len(),
        count - 894.0,
        count - table
    ))
}

fn c06_exact_ground_states() -> Outcome {
    let start = Instant::now();
    let oracle_bent: BTreeSet<TruthTable> = oracle::list(2, Predicate::Bent).unwrap().into_iter().collect();
    for s in [1.0, 0.25] {
        let set = sampler::solve_exact(&ising::encode_nonlinearity(2, s).unwrap()).map_err(|e| e.to_string())?;
        ensure(set.samples.len() == 8, || format!("{} ground states at s = {s}", set.samples.len()))?;
        ensure(set.samples.iter().all(|x| x.energy == -8.0 * s), || format!("ground energy off at s = {s}"))?;
        let decoded: BTreeSet<TruthTable> =
            set.samples.iter().map(|x| ising::decode_function(&x.spins, 2).unwrap()).collect();
        ensure(decoded == oracle_bent, || format!("decoded set {decoded:?}"))?;
    }
    within(start.elapsed(), 1.0)?;
    Ok("8 ground states at -8*s, decoding to the 8 bent functions".into())
}

fn c07_resiliency_identity() -> Outcome {
    let model = ising::encode_resiliency(2, 1, 0.5, true).unwrap();
    for idx in 0..16 {
        let tt = TruthTable::from_index(2, idx).unwrap();
        let spins = tt.sign_vector().entries().to_vec();
        let h = model.energy(&spins).unwrap() - model.offset();
        let w = naive_walsh(&tt);
        let f_corr = w[1] * w[1] + w[2] * w[2];
        let sum_b: i64 = spins.iter().map(|&b| b as i64).sum();
        ensure(2.0 * h + 12.0 == (f_corr + sum_b * sum_b) as f64, || format!("identity fails on {tt}"))?;
    }
    Ok("2H + 12 = f_corr + (sum b)^2 on all 16 functions".into())
}

fn c08_resiliency_ground_truth() -> Outcome {
    let start = Instant::now();
    let resilient: BTreeSet<TruthTable> = oracle::list(4, Predicate::ResilientAtLeast(1)).unwrap().into_iter().collect();
    let model = ising::encode_resiliency(4, 1, 0.125, true).unwrap();
    for idx in 0..1u64 << 16 {
        let tt = TruthTable::from_index(4, idx).unwrap();
        let e = model.energy(tt.sign_vector().entries()).unwrap();
        if resilient.contains(&tt) {
            ensure(e == 0.0, || format!("{tt} is 1-resilient but has energy {e}"))?;
        } else {
            ensure(e > 0.0, || format!("{tt} is not 1-resilient but has energy {e}"))?;
        }
    }
    within(start.elapsed(), 60.0)?;
    Ok(format!("zero exactly on the {} oracle 1-resilient functions", resilient.len()))
}

fn c09_combined_ground_states() -> Outcome {
    let start = Instant::now();
    let model = CriteriaSpec::new(4).build().unwrap();
    let mut best = f64::INFINITY;
    let mut energies = Vec::with_capacity(1 << 16);
    for idx in 0..1u64 << 16 {
        let tt = TruthTable::from_index(4, idx).unwrap();
        let e = model.energy(&ising::nonlinearity_assignment(&tt)).unwrap();
        best = best.min(e);
        energies.push((tt, e));
    }
    let tol = 1e-9;
    let minimizers: BTreeSet<TruthTable> = energies.into_iter().filter(|(_, e)| *e <= best + tol).map(|(t, _)| t).collect();
    let max_nl = oracle::max_nl_given_resiliency(4, 1).unwrap();
    ensure(max_nl == Some(4), || format!("oracle max nl of 1-resilient: {max_nl:?}"))?;
    let expected: BTreeSet<TruthTable> =
        oracle::list(4, Predicate::ResilientWithNl { order: 1, nonlinearity: 4 }).unwrap().into_iter().collect();
    ensure(minimizers == expected, || format!("{} minimizers vs {} expected", minimizers.len(), expected.len()))?;
    within(start.elapsed(), 120.0)?;
    Ok(format!("{} ground states = 1-resilient functions with nl 4", expected.len()))
}

fn c10_embedding_counts() -> Outcome {
    for (n, qubits) in [(2, 8), (4, 128), (6, 2048), (8, 1 << 15)] {
        let e = chimera::embed_bipartite(n).map_err(|e| e.to_string())?;
        ensure(e.num_qubits_used() == qubits, || format!("n={n}: {} qubits", e.num_qubits_used()))?;
        let logical = ising::encode_nonlinearity(n, 1.0).unwrap();
        let report = validate_embedding(&e, e.graph(), &logical);
        ensure(report.passed(), || format!("n={n}: {:?}", report.violations))?;
    }
    let clique = chimera::embed_clique(16).unwrap();
    ensure(clique.chains().len() == 16 && clique.chains().iter().all(|c| c.len() == 8), || "clique chain shape".into())?;
    let report = validate_embedding(&clique, clique.graph(), &ising::encode_resiliency(4, 0, 1.0, true).unwrap());
    ensure(report.passed(), || format!("clique: {:?}", report.violations))?;
    let composite = chimera::embed_composite(4).unwrap();
    let report = validate_embedding(&composite, composite.graph(), &CriteriaSpec::new(4).build().unwrap());
    ensure(report.passed(), || format!("composite: {:?}", report.violations))?;
    Ok("bipartite 8/128/2048/32768 qubits, clique 16 x 8, all validate".into())
}

fn c11_lowering() -> Outcome {
    let mut r = rng(11);
    let cases: [(usize, usize); 2] = [(2, 0), (4, 1000)];
    for (n, samples) in cases {
        let logical = ising::encode_nonlinearity(n, 0.25).unwrap();
        let e = chimera::embed_bipartite(n).unwrap();
        let p = apply_embedding(&logical, &e, -1.0).unwrap();
        let chain_term = -(p.chain_edge_count() as f64);
        let spins = logical.num_spins();
        let assignments: Vec<Vec<i8>> = if samples == 0 {
            (0..1u32 << spins).map(|m| (0..spins).map(|i| if m >> i & 1 == 1 { -1 } else { 1 }).collect()).collect()
        } else {
            (0..samples).map(|_| (0..spins).map(|_| if r.random() { 1 } else { -1 }).collect()).collect()
        };
        for a in &assignments {
            let diff = p.model.energy(&e.lift(a).unwrap()).unwrap() - logical.energy(a).unwrap();
            ensure(diff == chain_term, || format!("n={n}: difference {diff} vs {chain_term}"))?;
        }
    }
    Ok("physical - logical = chain term (exhaustive n=2, 1000 random n=4)".into())
}

fn c12_sampler_n2() -> Outcome {
    let start = Instant::now();
    let model = ising::encode_nonlinearity(2, 1.0).unwrap();
    let oracle_bent: BTreeSet<TruthTable> = oracle::list(2, Predicate::Bent).unwrap().into_iter().collect();
    let mut good = 0;
    for seed in 0..100 {
        let set = sampler::sample_sa(&model, &Schedule::default().with_seed(seed)).unwrap();
        let found: BTreeSet<TruthTable> = set
            .samples
            .iter()
            .map(|s| ising::decode_function(&s.spins, 2).unwrap())
            .filter(|f| oracle_bent.contains(f))
            .collect();
        good += (found.len() == 8) as usize;
    }
    ensure(good >= 95, || format!("only {good} of 100 seeds recovered all 8"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("{good} of 100 seeds recovered all 8 bent functions"))
}

fn c13_sampler_n4() -> Outcome {
    let start = Instant::now();
    let total = oracle::count_bent(4).unwrap() as usize;
    let schedule = Schedule::default().with_seed(13);
    let outcome = harness::search(4, 0.25, &schedule, 10, (4, 6), 1000, Execution::Auto).map_err(|e| e.to_string())?;
    let found = outcome.found.len();
    ensure(outcome.found.iter().all(|f| f.walsh().is_bent().unwrap()), || "non-bent in harvest".into())?;
    ensure(found * 10 >= total * 9, || format!("found {found} of {total}"))?;
    within(start.elapsed(), 300.0)?;
    Ok(format!("{found} of {total} distinct bent ({} before harvest)", outcome.initial.len()))
}

fn c14_coupler_trend() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::preset("exp-bent-n4-sweep").unwrap();
    cfg.coupler_strengths = vec![0.25, 2.0];
    let report = harness::run_experiment(&cfg).map_err(|e| e.to_string())?;
    let freq: Vec<f64> =
        report.table.column("bent_frequency_pct").unwrap().iter().map(|v| v.parse::<f64>().unwrap()).collect();
    ensure(freq[0] > freq[1], || format!("frequency at 0.25 = {}%, at 2 = {}%", freq[0], freq[1]))?;
    within(start.elapsed(), 600.0)?;
    Ok(format!("bent frequency {}% at 0.25 vs {}% at 2 (10 runs, chain -1)", freq[0], freq[1]))
}

fn c15_local_search() -> Outcome {
    let mut r = rng(15);
    for i in 0..10_000 {
        let n = 2 + i % 5;
        let tt = random_tt(n, &mut r);
        let climbed = postprocess::hill_climb(&tt);
        ensure(climbed.nonlinearity() >= tt.nonlinearity(), || format!("{tt} decreased"))?;
    }
    let report = harness::run_experiment(&ExperimentConfig::preset("exp-localsearch-n4").unwrap()).map_err(|e| e.to_string())?;
    for row in &report.repetitions {
        let before = row.metrics["initialized"];
        let after = row.metrics.iter().find(|(k, _)| k.starts_with("optimized_")).map(|(_, v)| *v).unwrap();
        ensure(after >= before, || format!("{} rep {}: {after} < {before}", row.setting, row.repetition))?;
    }
    Ok(format!(
        "10000 climbs monotone; n=4 harvest never loses bent functions ({} runs; table {:?})",
        report.repetitions.len(),
        report.table.rows
    ))
}

fn c16_chain_repair() -> Outcome {
    let mut r = rng(16);
    let embeddings = [chimera::embed_clique(16).unwrap(), chimera::embed_bipartite(6).unwrap()];
    for case in 0..1000 {
        let e = &embeddings[case % 2];
        let logical: Vec<i8> = (0..e.chains().len()).map(|_| if r.random() { 1 } else { -1 }).collect();
        let mut physical = e.lift(&logical).unwrap();
        for chain in e.chains() {
            let k = r.random_range(0..=3.min((chain.len() - 1) / 2));
            let mut picked = BTreeSet::new();
            while picked.len() < k {
                picked.insert(chain[r.random_range(0..chain.len())]);
            }
            for q in picked {
                physical[q] = -physical[q];
            }
        }
        let decoded = majority_vote_decode(&physical, e, case as u64, 0).unwrap();
        ensure(decoded.spins == logical, || format!("case {case} decoded wrongly"))?;
    }
    Ok("1000 randomized cases, up to 3 flips per chain".into())
}

fn c17_n6_smoke() -> Outcome {
    let start = Instant::now();
    let e = chimera::embed_bipartite(6).unwrap();
    ensure(e.num_qubits_used() == 2048, || format!("{} qubits", e.num_qubits_used()))?;
    let logical = ising::encode_nonlinearity(6, 0.1).unwrap();
    ensure(validate_embedding(&e, e.graph(), &logical).passed(), || "n=6 embedding invalid".into())?;
    let p = apply_embedding(&logical, &e, -1.0).unwrap();
    let mut found = BTreeSet::new();
    let mut in_range = 0;
    for run in 0..10 {
        let seed = derive_seed(17, 0, run);
        let set = sampler::sample_sa(&p.model, &Schedule::default().with_seed(seed)).unwrap();
        let decoded = postprocess::decode_sample_set(&set, &e, seed, Execution::Auto).unwrap();
        let readouts = postprocess::embedded_readouts(&decoded, &set, 6).unwrap();
        let h = postprocess::harvest(&readouts, (25, 27), 1000, Target::Bent, Execution::Auto).unwrap();
        in_range += h.summary.in_range;
        found.extend(h.functions);
    }
    ensure(!found.is_empty(), || format!("no bent function from {in_range} readouts in range"))?;
    within(start.elapsed(), 900.0)?;
    Ok(format!("{} distinct bent from {in_range} readouts with nl in [25,27]", found.len()))
}

fn c18_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut configs = Vec::new();
    for preset in ["exp-bent-n2", "exp-resilient-n4", "exp-balanced-n4", "exp-localsearch-n4"] {
        let mut c = ExperimentConfig::preset(preset).unwrap();
        c.reads = 100;
        c.sweeps = 200;
        c.repetitions = 2;
        configs.push(c);
    }
    for c in configs {
        let mut bytes = Vec::new();
        for (i, exec) in [Execution::Sequential, Execution::Parallel, Execution::Auto].into_iter().enumerate() {
            let mut c = c.clone();
            c.output_dir = Some(dir.path().join(format!("{}-{i}", c.experiment)));
            let report = harness::run_experiment_with(&c, exec).map_err(|e| e.to_string())?;
            let out = dir.path().join(format!("emit-{}-{i}", c.experiment));
            let files = emit(&report, &out, EmitFormat::Both).map_err(|e| e.to_string())?;
            let again = emit(&report, &out.join("again"), EmitFormat::Both).map_err(|e| e.to_string())?;
            let read = |fs: &[std::path::PathBuf]| fs.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>();
            ensure(read(&files) == read(&again), || "two emits differ".into())?;
            let mut samples: Vec<_> = std::fs::read_dir(c.output_dir.as_ref().unwrap().join(&report.repetitions[0].setting))
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            samples.sort();
            // Emitted reports embed the output directory in the config echo,
            // so compare with it cleared.
            let mut neutral = report.clone();
            neutral.config.output_dir = None;
            bytes.push((neutral.to_json(), neutral.to_csv(), read(&samples)));
        }
        ensure(bytes.windows(2).all(|w| w[0] == w[1]), || format!("{} re-runs differ", c.experiment))?;
    }
    Ok("4 pipelines x 3 execution modes: identical reports and sample files".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 18] = [
        ("transform correctness", c01_transform),
        ("Parseval", c02_parseval),
        ("nonlinearity oracle equivalence", c03_nonlinearity),
        ("counts n=2", c04_count_n2),
        ("counts n=4", c05_count_n4),
        ("Ising ground truth n=2", c06_exact_ground_states),
        ("resiliency encoding identity", c07_resiliency_identity),
        ("resiliency ground truth n=4", c08_resiliency_ground_truth),
        ("combined-criteria ground states n=4", c09_combined_ground_states),
        ("embedding counts", c10_embedding_counts),
        ("lowering exactness", c11_lowering),
        ("sampler recovery n=2", c12_sampler_n2),
        ("sampler recovery n=4 logical", c13_sampler_n4),
        ("coupler-strength trend", c14_coupler_trend),
        ("local-search monotonicity and lift", c15_local_search),
        ("chain repair", c16_chain_repair),
        ("n=6 smoke", c17_n6_smoke),
        ("determinism", c18_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f.parse() == Ok(id) || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
