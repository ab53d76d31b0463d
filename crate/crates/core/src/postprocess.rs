//! From physical readouts to refined Boolean functions.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::boolfun::{hadamard_sign, TruthTable};
use crate::chimera::Embedding;
use crate::ising::decode_function;
use crate::par::{self, Execution};
use crate::sampler::SampleSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairMethod {
    /// Every chain was unanimous; nothing was repaired.
    None,
    Majority,
    /// Majority vote where at least one split chain needed the seeded coin.
    MajorityTieBreak,
    Expansion,
}

impl fmt::Display for RepairMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepairMethod::None => "none",
            RepairMethod::Majority => "majority",
            RepairMethod::MajorityTieBreak => "majority-tie-break",
            RepairMethod::Expansion => "expansion",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedSample {
    pub spins: Vec<i8>,
    pub broken_chains: usize,
    /// Index of the physical sample inside its sample set.
    pub origin: usize,
    pub repair: RepairMethod,
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded coin for a split chain; depends only on (seed, sample, chain).
fn tie_coin(seed: u64, origin: usize, chain: usize) -> i8 {
    let h = splitmix64(seed ^ splitmix64(origin as u64 ^ splitmix64(chain as u64)));
    if h & 1 == 0 {
        1
    } else {
        -1
    }
}

fn check_coverage(sample: &[i8], embedding: &Embedding) -> Result<()> {
    let needed = embedding.graph().num_qubits();
    if sample.len() != needed {
        return Err(Error::LengthMismatch { expected: needed, got: sample.len() });
    }
    Ok(())
}

/// Chain value by sign of its spin sum; a 50/50 split takes the seeded coin.
pub fn majority_vote_decode(sample: &[i8], embedding: &Embedding, seed: u64, origin: usize) -> Result<DecodedSample> {
    check_coverage(sample, embedding)?;
    let mut broken = 0;
    let mut ties = false;
    let spins = embedding
        .chains()
        .iter()
        .enumerate()
        .map(|(c, chain)| {
            let sum: i64 = chain.iter().map(|&q| sample[q] as i64).sum();
            if sum.unsigned_abs() as usize != chain.len() {
                broken += 1;
            }
            match sum.signum() {
                1 => 1,
                -1 => -1,
                _ => {
                    ties = true;
                    tie_coin(seed, origin, c)
                }
            }
        })
        .collect();
    let repair = match (broken, ties) {
        (0, _) => RepairMethod::None,
        (_, true) => RepairMethod::MajorityTieBreak,
        _ => RepairMethod::Majority,
    };
    Ok(DecodedSample { spins, broken_chains: broken, origin, repair })
}

/// Logical assignments reachable by choosing either value for every broken
/// chain. The first entry is the majority-vote decode; the rest follow a
/// Gray code over the broken chains in index order, truncated at `cap`.
pub fn expand_broken_chains(
    sample: &[i8],
    embedding: &Embedding,
    cap: usize,
    seed: u64,
    origin: usize,
) -> Result<Vec<Vec<i8>>> {
    if cap == 0 {
        return Err(Error::InvalidParameter("expansion cap must be at least 1".into()));
    }
    let base = majority_vote_decode(sample, embedding, seed, origin)?;
    let broken: Vec<usize> = embedding
        .chains()
        .iter()
        .enumerate()
        .filter(|(_, chain)| {
            let first = sample[chain[0]];
            chain.iter().any(|&q| sample[q] != first)
        })
        .map(|(c, _)| c)
        .collect();
    let total = if broken.len() >= usize::BITS as usize { usize::MAX } else { 1usize << broken.len() };
    let count = total.min(cap);
    let mut out = Vec::with_capacity(count);
    let mut current = base.spins;
    out.push(current.clone());
    for t in 1..count {
        let c = broken[t.trailing_zeros() as usize];
        current[c] = -current[c];
        out.push(current.clone());
    }
    Ok(out)
}

/// Decodes every sample of a physical run by majority vote.
pub fn decode_sample_set(set: &SampleSet, embedding: &Embedding, seed: u64, exec: Execution) -> Result<Vec<DecodedSample>> {
    par::map_indices(set.samples.len(), exec, |i| majority_vote_decode(&set.samples[i].spins, embedding, seed, i))
        .into_iter()
        .collect()
}

/// Steepest-ascent hill climbing on nonlinearity over single-bit flips.
///
/// Flipping entry `u` moves every coefficient by `-2·b_u·(-1)^(a·u)`, so a
/// neighbor is scored in `O(2^n)` from the current spectrum. Ties go to the
/// lowest index; the climb stops when no flip strictly improves.
pub fn hill_climb(tt: &TruthTable) -> TruthTable {
    let mut current = tt.clone();
    let mut walsh: Vec<i64> = tt.walsh().coefficients().to_vec();
    let size = walsh.len();
    let mut max_abs = walsh.iter().map(|w| w.unsigned_abs()).max().unwrap_or(0);
    loop {
        let mut best: Option<(usize, u64)> = None;
        for u in 0..size {
            let step = if current.get(u) { 2 } else { -2 };
            let mut m = 0u64;
            for (a, &w) in walsh.iter().enumerate() {
                m = m.max((w + step * hadamard_sign(a, u)).unsigned_abs());
                if best.is_some_and(|(_, b)| m >= b) || m >= max_abs {
                    break;
                }
            }
            if m < max_abs && best.is_none_or(|(_, b)| m < b) {
                best = Some((u, m));
            }
        }
        let Some((u, m)) = best else { return current };
        let step = if current.get(u) { 2 } else { -2 };
        for (a, w) in walsh.iter_mut().enumerate() {
            *w += step * hadamard_sign(a, u);
        }
        current.flip(u);
        max_abs = m;
    }
}

/// A decoded function with the energy of the readout it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub function: TruthTable,
    pub energy: f64,
    pub multiplicity: usize,
}

/// Which refined functions a harvest keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Bent,
    NonlinearityAtLeast(u32),
}

impl Target {
    pub fn accepts(&self, tt: &TruthTable) -> bool {
        let ws = tt.walsh();
        match *self {
            Target::Bent => ws.is_bent().unwrap_or(false),
            Target::NonlinearityAtLeast(t) => ws.nonlinearity() >= t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestSummary {
    pub total_reads: usize,
    pub in_range: usize,
    pub distinct_found: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Harvest {
    pub functions: BTreeSet<TruthTable>,
    pub summary: HarvestSummary,
}

impl Harvest {
    pub fn hex_list(&self) -> Vec<String> {
        self.functions.iter().map(TruthTable::to_hex).collect()
    }
}

/// Refines the `top_k` lowest-energy readouts whose nonlinearity lies in
/// `nl_range` (inclusive) and keeps the distinct results meeting `target`.
pub fn harvest(readouts: &[Readout], nl_range: (u32, u32), top_k: usize, target: Target, exec: Execution) -> Result<Harvest> {
    if top_k == 0 {
        return Err(Error::InvalidParameter("top_k must be at least 1".into()));
    }
    let mut order: Vec<&Readout> = readouts.iter().collect();
    order.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let total_reads = readouts.iter().map(|r| r.multiplicity).sum();
    let (lo, hi) = nl_range;
    let mut remaining = top_k;
    let mut in_range = 0;
    let mut candidates = BTreeSet::new();
    for r in order {
        if remaining == 0 {
            break;
        }
        let take = r.multiplicity.min(remaining);
        remaining -= take;
        let nl = r.function.nonlinearity();
        if lo <= nl && nl <= hi {
            in_range += take;
            candidates.insert(r.function.clone());
        }
    }
    let candidates: Vec<TruthTable> = candidates.into_iter().collect();
    let functions: BTreeSet<TruthTable> =
        par::map_slice(&candidates, exec, hill_climb).into_iter().filter(|f| target.accepts(f)).collect();
    let distinct_found = functions.len();
    Ok(Harvest { functions, summary: HarvestSummary { total_reads, in_range, distinct_found } })
}

/// Readouts of a logical run on a design model.
pub fn logical_readouts(set: &SampleSet, n: usize) -> Result<Vec<Readout>> {
    set.samples
        .iter()
        .map(|s| Ok(Readout { function: decode_function(&s.spins, n)?, energy: s.energy, multiplicity: s.multiplicity }))
        .collect()
}

/// Readouts of a physical run, decoded by majority vote. The energy is the
/// physical energy of the originating sample.
pub fn embedded_readouts(decoded: &[DecodedSample], set: &SampleSet, n: usize) -> Result<Vec<Readout>> {
    decoded
        .iter()
        .map(|d| {
            let s = &set.samples[d.origin];
            Ok(Readout { function: decode_function(&d.spins, n)?, energy: s.energy, multiplicity: s.multiplicity })
        })
        .collect()
}

/// Decoded-sample record: the sample-file fields plus repair details.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedRecord {
    pub spins: String,
    pub energy: f64,
    pub multiplicity: usize,
    pub broken_chains: usize,
    pub repair_method: RepairMethod,
}

impl DecodedRecord {
    pub fn new(d: &DecodedSample, set: &SampleSet) -> Self {
        let s = &set.samples[d.origin];
        Self {
            spins: crate::sampler::spins_to_string(&d.spins),
            energy: s.energy,
            multiplicity: s.multiplicity,
            broken_chains: d.broken_chains,
            repair_method: d.repair,
        }
    }
}
