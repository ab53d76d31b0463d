//! Ground-state search for Ising models.
//!
//! Each read is an independent restart with its own generator, seeded from
//! `(seed, read index)`, so the merged [`SampleSet`] is identical whether
//! reads run sequentially or on the rayon pool.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::ising::IsingModel;
use crate::par::{self, Execution};
use crate::{Error, Result};

/// Largest model [`solve_exact`] will enumerate.
pub const MAX_EXACT_SPINS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Exact,
    Sa,
    Sqa,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Exact => "exact",
            Solver::Sa => "sa",
            Solver::Sqa => "sqa",
        })
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Solver::Exact),
            "sa" => Ok(Solver::Sa),
            "sqa" => Ok(Solver::Sqa),
            other => Err(Error::InvalidParameter(format!("unknown solver '{other}'"))),
        }
    }
}

/// Annealing schedule shared by the SA and SQA samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub reads: usize,
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub trotter_slices: usize,
    pub gamma_start: f64,
    pub gamma_end: f64,
    /// Physical temperature of the path-integral sampler.
    pub temperature: f64,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            reads: 1000,
            sweeps: 1000,
            beta_start: 0.1,
            beta_end: 10.0,
            trotter_slices: 32,
            gamma_start: 3.0,
            gamma_end: 0.01,
            temperature: 0.05,
            seed: 0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

impl Schedule {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_reads(mut self, reads: usize) -> Self {
        self.reads = reads;
        self
    }

    pub fn with_sweeps(mut self, sweeps: usize) -> Self {
        self.sweeps = sweeps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.reads == 0 || self.sweeps == 0 {
            return Err(Error::InvalidParameter("reads and sweeps must be at least 1".into()));
        }
        positive("beta_start", self.beta_start)?;
        positive("beta_end", self.beta_end)?;
        positive("gamma_start", self.gamma_start)?;
        positive("gamma_end", self.gamma_end)?;
        positive("temperature", self.temperature)
    }

    fn validate_sqa(&self) -> Result<()> {
        self.validate()?;
        if self.trotter_slices < 2 {
            return Err(Error::InvalidParameter("SQA needs at least 2 Trotter slices".into()));
        }
        Ok(())
    }
}

/// `steps` values from `start` to `end`, equally spaced in log scale.
pub fn geometric_ramp(start: f64, end: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![end];
    }
    let (a, b) = (start.ln(), end.ln());
    (0..steps).map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub spins: Vec<i8>,
    pub energy: f64,
    pub multiplicity: usize,
}

/// Distinct readouts sorted by energy (then spins), with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub model_hash: String,
    pub solver: Solver,
    pub schedule: Option<Schedule>,
    pub seed: u64,
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn total_reads(&self) -> usize {
        self.samples.iter().map(|s| s.multiplicity).sum()
    }

    pub fn lowest_energy(&self) -> Option<f64> {
        self.samples.first().map(|s| s.energy)
    }

    /// Merges raw reads into distinct samples. Energies are re-evaluated
    /// against the model.
    fn from_reads(model: &IsingModel, solver: Solver, schedule: Option<Schedule>, seed: u64, reads: Vec<Vec<i8>>) -> Self {
        let mut counts: BTreeMap<Vec<i8>, usize> = BTreeMap::new();
        for r in reads {
            *counts.entry(r).or_insert(0) += 1;
        }
        let mut samples: Vec<Sample> = counts
            .into_iter()
            .map(|(spins, multiplicity)| Sample { energy: model.energy_unchecked(&spins), spins, multiplicity })
            .collect();
        samples.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.spins.cmp(&b.spins)));
        SampleSet { model_hash: model.content_hash(), solver, schedule, seed, samples }
    }

    /// Line-oriented form: one header record, then one record per sample.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = SampleSetHeader {
            model_hash: self.model_hash.clone(),
            solver: self.solver,
            schedule: self.schedule.clone(),
            seed: self.seed,
        };
        serde_json::to_writer(&mut w, &header)?;
        writeln!(w)?;
        for s in &self.samples {
            serde_json::to_writer(
                &mut w,
                &SampleRecord { spins: spins_to_string(&s.spins), energy: s.energy, multiplicity: s.multiplicity },
            )?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header: SampleSetHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(Error::Format("empty sample file".into())),
        };
        let mut samples = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SampleRecord = serde_json::from_str(&line)?;
            samples.push(Sample { spins: spins_from_string(&rec.spins)?, energy: rec.energy, multiplicity: rec.multiplicity });
        }
        Ok(SampleSet { model_hash: header.model_hash, solver: header.solver, schedule: header.schedule, seed: header.seed, samples })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleSetHeader {
    model_hash: String,
    solver: Solver,
    schedule: Option<Schedule>,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct SampleRecord {
    pub spins: String,
    pub energy: f64,
    pub multiplicity: usize,
}

pub fn spins_to_string(spins: &[i8]) -> String {
    spins.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

pub fn spins_from_string(s: &str) -> Result<Vec<i8>> {
    s.chars()
        .map(|c| match c {
            '+' => Ok(1),
            '-' => Ok(-1),
            other => Err(Error::Format(format!("spin character '{other}'"))),
        })
        .collect()
}

/// Compressed adjacency of a model for fast local-field evaluation.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub(crate) bias: Vec<f64>,
    start: Vec<usize>,
    neighbor: Vec<usize>,
    weight: Vec<f64>,
}

impl Compiled {
    pub fn new(model: &IsingModel) -> Self {
        let n = model.num_spins();
        let mut bias = vec![0.0; n];
        for (&i, &h) in model.linear() {
            bias[i] = h;
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(i, j), &v) in model.couplers() {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        let mut start = Vec::with_capacity(n + 1);
        let (mut neighbor, mut weight) = (Vec::new(), Vec::new());
        start.push(0);
        for list in adj {
            for (j, v) in list {
                neighbor.push(j);
                weight.push(v);
            }
            start.push(neighbor.len());
        }
        Self { bias, start, neighbor, weight }
    }

    pub fn len(&self) -> usize {
        self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bias.is_empty()
    }

    /// `h_i + Σ_j J_ij σ_j`.
    #[inline]
    pub fn local_field(&self, i: usize, spins: &[i8]) -> f64 {
        let mut f = self.bias[i];
        for k in self.start[i]..self.start[i + 1] {
            f += self.weight[k] * spins[self.neighbor[k]] as f64;
        }
        f
    }

    /// Flips spin `i` and moves its neighbors' cached local fields.
    #[inline]
    fn flip(&self, i: usize, spins: &mut [i8], fields: &mut [f64]) {
        let step = -2.0 * spins[i] as f64;
        spins[i] = -spins[i];
        let range = self.start[i]..self.start[i + 1];
        for (&j, &w) in self.neighbor[range.clone()].iter().zip(&self.weight[range]) {
            fields[j] += step * w;
        }
    }

    fn energy(&self, spins: &[i8]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.len() {
            let mut pair = 0.0;
            for k in self.start[i]..self.start[i + 1] {
                if self.neighbor[k] > i {
                    pair += self.weight[k] * spins[self.neighbor[k]] as f64;
                }
            }
            e += spins[i] as f64 * (self.bias[i] + pair);
        }
        e
    }
}

fn read_rng(seed: u64, read: usize) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(derive_seed(seed, u64::MAX, read as u64))
}

fn random_spins(rng: &mut Xoshiro256PlusPlus, n: usize) -> Vec<i8> {
    (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}

/// Every assignment attaining the global minimum, found by Gray-code
/// enumeration.
pub fn solve_exact(model: &IsingModel) -> Result<SampleSet> {
    let n = model.num_spins();
    if n > MAX_EXACT_SPINS {
        return Err(Error::TooManySpins(n));
    }
    let compiled = Compiled::new(model);
    let mut spins = vec![1i8; n];
    let mut e = compiled.energy(&spins);
    let mut best = e;
    let mut candidates: Vec<u32> = vec![0];
    let tolerance = 1e-9 * (1.0 + model.couplers().values().chain(model.linear().values()).map(|v| v.abs()).sum::<f64>());
    let mut gray = 0u32;
    for step in 1u64..(1u64 << n) {
        let bit = step.trailing_zeros() as usize;
        e -= 2.0 * spins[bit] as f64 * compiled.local_field(bit, &spins);
        spins[bit] = -spins[bit];
        gray ^= 1 << bit;
        if e < best - tolerance {
            best = e;
            candidates.clear();
            candidates.push(gray);
        } else if e <= best + tolerance {
            candidates.push(gray);
        }
    }
    let states: Vec<Vec<i8>> =
        candidates.into_iter().map(|g| (0..n).map(|i| if g >> i & 1 == 1 { -1 } else { 1 }).collect()).collect();
    let exact_min = states.iter().map(|s| model.energy_unchecked(s)).fold(f64::INFINITY, f64::min);
    let ground: Vec<Vec<i8>> = states.into_iter().filter(|s| model.energy_unchecked(s) == exact_min).collect();
    Ok(SampleSet::from_reads(model, Solver::Exact, None, 0, ground))
}

/// Runs `solver` on `model`. The exact solver ignores the schedule.
pub fn sample_with(model: &IsingModel, solver: Solver, schedule: &Schedule, exec: Execution) -> Result<SampleSet> {
    match solver {
        Solver::Exact => solve_exact(model),
        Solver::Sa => sample_sa_with(model, schedule, exec),
        Solver::Sqa => sample_sqa_with(model, schedule, exec),
    }
}

/// Seed of an independent sub-run, e.g. one repetition of one setting.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    use crate::postprocess::splitmix64;
    splitmix64(base ^ splitmix64(a.wrapping_mul(0x1000_0001) ^ splitmix64(b)))
}

pub fn sample_sa(model: &IsingModel, schedule: &Schedule) -> Result<SampleSet> {
    sample_sa_with(model, schedule, Execution::Auto)
}

/// Simulated annealing: random start, single-spin Metropolis sweeps over a
/// geometric inverse-temperature ramp, final state per read.
pub fn sample_sa_with(model: &IsingModel, schedule: &Schedule, exec: Execution) -> Result<SampleSet> {
    schedule.validate()?;
    let compiled = Compiled::new(model);
    let betas = geometric_ramp(schedule.beta_start, schedule.beta_end, schedule.sweeps);
    let reads = par::map_indices(schedule.reads, exec, |r| {
        let mut rng = read_rng(schedule.seed, r);
        anneal_read(&compiled, &betas, &mut rng)
    });
    Ok(SampleSet::from_reads(model, Solver::Sa, Some(schedule.clone()), schedule.seed, reads))
}

/// Metropolis test for a scaled energy change. Moves costing more than
/// `REJECT_ABOVE` are refused without drawing, as `e^-40` is below the
/// resolution of a uniform `f64`.
#[inline]
fn accept(scaled_delta: f64, rng: &mut Xoshiro256PlusPlus) -> bool {
    const REJECT_ABOVE: f64 = 40.0;
    scaled_delta <= 0.0 || (scaled_delta < REJECT_ABOVE && rng.random::<f64>() < (-scaled_delta).exp())
}

fn anneal_read(compiled: &Compiled, betas: &[f64], rng: &mut Xoshiro256PlusPlus) -> Vec<i8> {
    let n = compiled.len();
    let mut spins = random_spins(rng, n);
    let mut fields: Vec<f64> = (0..n).map(|i| compiled.local_field(i, &spins)).collect();
    for &beta in betas {
        let scale = -2.0 * beta;
        for i in 0..n {
            if accept(scale * spins[i] as f64 * fields[i], rng) {
                compiled.flip(i, &mut spins, &mut fields);
            }
        }
    }
    spins
}

pub fn sample_sqa(model: &IsingModel, schedule: &Schedule) -> Result<SampleSet> {
    sample_sqa_with(model, schedule, Execution::Auto)
}

/// Path-integral simulated quantum annealing.
///
/// `P` replicas of the classical system sit on a ring at temperature `P·T`,
/// coupled ferromagnetically through
/// `J⊥ = -(P·T/2)·ln tanh(Γ/(P·T))` while the transverse field `Γ` decays
/// geometrically. Each read reports its lowest-energy replica.
pub fn sample_sqa_with(model: &IsingModel, schedule: &Schedule, exec: Execution) -> Result<SampleSet> {
    schedule.validate_sqa()?;
    let compiled = Compiled::new(model);
    let p = schedule.trotter_slices;
    let pt = p as f64 * schedule.temperature;
    let couplings: Vec<f64> = geometric_ramp(schedule.gamma_start, schedule.gamma_end, schedule.sweeps)
        .into_iter()
        .map(|gamma| -0.5 * pt * (gamma / pt).tanh().ln())
        .collect();
    let reads = par::map_indices(schedule.reads, exec, |r| {
        let mut rng = read_rng(schedule.seed, r);
        sqa_read(&compiled, p, pt, &couplings, &mut rng)
    });
    Ok(SampleSet::from_reads(model, Solver::Sqa, Some(schedule.clone()), schedule.seed, reads))
}

fn sqa_read(compiled: &Compiled, slices: usize, pt: f64, couplings: &[f64], rng: &mut Xoshiro256PlusPlus) -> Vec<i8> {
    let n = compiled.len();
    let mut replicas: Vec<Vec<i8>> = (0..slices).map(|_| random_spins(rng, n)).collect();
    let mut fields: Vec<Vec<f64>> =
        replicas.iter().map(|rep| (0..n).map(|i| compiled.local_field(i, rep)).collect()).collect();
    let beta = 1.0 / pt;
    for &j_perp in couplings {
        for k in 0..slices {
            let (prev, next) = ((k + slices - 1) % slices, (k + 1) % slices);
            for i in 0..n {
                let s = replicas[k][i] as f64;
                let classical = -2.0 * s * fields[k][i];
                let quantum = 2.0 * j_perp * s * (replicas[prev][i] + replicas[next][i]) as f64;
                if accept(beta * (classical + quantum), rng) {
                    compiled.flip(i, &mut replicas[k], &mut fields[k]);
                }
            }
        }
    }
    let mut best = 0;
    let mut best_e = f64::INFINITY;
    for (k, rep) in replicas.iter().enumerate() {
        let e = compiled.energy(rep);
        if e < best_e {
            best_e = e;
            best = k;
        }
    }
    replicas.swap_remove(best)
}
