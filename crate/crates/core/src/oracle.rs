//! Exhaustive ground truth over all `2^(2^n)` functions for `n <= 4`.
//!
//! Nothing here goes through the fast transforms of [`crate::boolfun`]
//! except where a predicate is stated in terms of them; the naive routines
//! are the independent side of the cross-checks.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boolfun::{parity, TruthTable};
use crate::par::{self, Execution};
use crate::{Error, Result};

pub const MAX_ORACLE_N: usize = 4;

type CustomFn = Arc<dyn Fn(&TruthTable) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum Predicate {
    Any,
    Bent,
    Balanced,
    CiOrderAtLeast(usize),
    ResilientAtLeast(usize),
    /// Resiliency order exactly `m`.
    ResilientExactly(usize),
    ResilientWithNl { order: usize, nonlinearity: u32 },
    Custom(String, CustomFn),
}

impl Predicate {
    pub fn custom(name: impl Into<String>, f: impl Fn(&TruthTable) -> bool + Send + Sync + 'static) -> Self {
        Predicate::Custom(name.into(), Arc::new(f))
    }

    pub fn matches(&self, tt: &TruthTable) -> bool {
        let resiliency = || tt.resiliency_profile().resiliency;
        match self {
            Predicate::Any => true,
            Predicate::Bent => tt.walsh().is_bent().unwrap_or(false),
            Predicate::Balanced => tt.weight() * 2 == tt.len(),
            Predicate::CiOrderAtLeast(m) => tt.resiliency_profile().ci_order >= *m,
            Predicate::ResilientAtLeast(m) => resiliency().is_some_and(|r| r >= *m),
            Predicate::ResilientExactly(m) => resiliency() == Some(*m),
            Predicate::ResilientWithNl { order, nonlinearity } => {
                resiliency().is_some_and(|r| r >= *order) && tt.nonlinearity() >= *nonlinearity
            }
            Predicate::Custom(_, f) => f(tt),
        }
    }

    /// Parses `any`, `bent`, `balanced`, `ci:M`, `resilient:M`,
    /// `resilient-exact:M` and `resilient-nl:M:T`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<usize> {
            parts.get(i).and_then(|p| p.parse().ok()).ok_or_else(|| Error::InvalidParameter(format!("bad predicate '{s}'")))
        };
        Ok(match parts[0] {
            "any" => Predicate::Any,
            "bent" => Predicate::Bent,
            "balanced" => Predicate::Balanced,
            "ci" => Predicate::CiOrderAtLeast(num(1)?),
            "resilient" => Predicate::ResilientAtLeast(num(1)?),
            "resilient-exact" => Predicate::ResilientExactly(num(1)?),
            "resilient-nl" => Predicate::ResilientWithNl { order: num(1)?, nonlinearity: num(2)? as u32 },
            _ => return Err(Error::InvalidParameter(format!("unknown predicate '{s}'"))),
        })
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Any => f.write_str("any"),
            Predicate::Bent => f.write_str("bent"),
            Predicate::Balanced => f.write_str("balanced"),
            Predicate::CiOrderAtLeast(m) => write!(f, "ci:{m}"),
            Predicate::ResilientAtLeast(m) => write!(f, "resilient:{m}"),
            Predicate::ResilientExactly(m) => write!(f, "resilient-exact:{m}"),
            Predicate::ResilientWithNl { order, nonlinearity } => write!(f, "resilient-nl:{order}:{nonlinearity}"),
            Predicate::Custom(name, _) => write!(f, "custom:{name}"),
        }
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone)]
pub struct CriterionQuery {
    pub n: usize,
    pub predicate: Predicate,
}

impl CriterionQuery {
    pub fn new(n: usize, predicate: Predicate) -> Self {
        Self { n, predicate }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub count: u64,
    pub functions: Option<Vec<TruthTable>>,
}

fn check_bound(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ORACLE_N {
        return Err(Error::OracleBound(n));
    }
    Ok(())
}

const CHUNK: u64 = 4096;

/// Scans every truth table; the list is returned (in index order) when
/// `collect` is set.
pub fn enumerate(query: &CriterionQuery, collect: bool) -> Result<Enumeration> {
    enumerate_with(query, collect, Execution::Auto)
}

pub fn enumerate_with(query: &CriterionQuery, collect: bool, exec: Execution) -> Result<Enumeration> {
    check_bound(query.n)?;
    let n = query.n;
    let total = 1u64 << (1 << n);
    let (count, functions) = par::fold_chunks(
        total,
        CHUNK,
        exec,
        |range| {
            let mut count = 0u64;
            let mut list = Vec::new();
            for idx in range {
                let tt = TruthTable::from_index(n, idx).expect("index in range");
                if query.predicate.matches(&tt) {
                    count += 1;
                    if collect {
                        list.push(tt);
                    }
                }
            }
            (count, list)
        },
        |(c1, mut l1), (c2, l2)| {
            l1.extend(l2);
            (c1 + c2, l1)
        },
    )
    .unwrap_or_default();
    Ok(Enumeration { count, functions: collect.then_some(functions) })
}

pub fn count(n: usize, predicate: Predicate) -> Result<u64> {
    Ok(enumerate(&CriterionQuery::new(n, predicate), false)?.count)
}

pub fn list(n: usize, predicate: Predicate) -> Result<Vec<TruthTable>> {
    Ok(enumerate(&CriterionQuery::new(n, predicate), true)?.functions.unwrap_or_default())
}

pub fn count_bent(n: usize) -> Result<u64> {
    if !n.is_multiple_of(2) {
        return Err(Error::OddVariables(n));
    }
    count(n, Predicate::Bent)
}

/// Largest nonlinearity among m-resilient functions, if any exist.
pub fn max_nl_given_resiliency(n: usize, order: usize) -> Result<Option<u32>> {
    check_bound(n)?;
    let best = par::fold_chunks(
        1u64 << (1 << n),
        CHUNK,
        Execution::Auto,
        |range| {
            range
                .filter_map(|idx| {
                    let tt = TruthTable::from_index(n, idx).expect("index in range");
                    tt.resiliency_profile().resiliency.filter(|&r| r >= order).map(|_| nonlinearity_naive(&tt))
                })
                .max()
        },
        |a, b| a.max(b),
    );
    Ok(best.flatten())
}

/// Number of functions per exact resiliency order.
pub fn resiliency_histogram(n: usize) -> Result<BTreeMap<usize, u64>> {
    check_bound(n)?;
    let mut out = BTreeMap::new();
    for idx in 0..1u64 << (1 << n) {
        let tt = TruthTable::from_index(n, idx)?;
        if let Some(r) = tt.resiliency_profile().resiliency {
            *out.entry(r).or_insert(0) += 1;
        }
    }
    Ok(out)
}

/// `W_f(a)` by direct summation over all inputs, `O(4^n)`.
pub fn walsh_naive(tt: &TruthTable) -> Vec<i64> {
    let len = tt.len();
    (0..len)
        .map(|a| (0..len).map(|x| if tt.get(x) ^ parity(a & x) { -1 } else { 1 }).sum())
        .collect()
}

/// Minimum Hamming distance to the `2^(n+1)` affine functions `a·x ⊕ c`.
pub fn nonlinearity_naive(tt: &TruthTable) -> u32 {
    let len = tt.len();
    (0..len)
        .map(|a| {
            let d = (0..len).filter(|&x| tt.get(x) != parity(a & x)).count();
            d.min(len - d)
        })
        .min()
        .unwrap_or(0) as u32
}

/// Count compared with an externally reported figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub n: usize,
    pub predicate: String,
    pub count: u64,
    pub reference: Option<f64>,
    pub delta: Option<f64>,
}

impl CountReport {
    pub fn new(n: usize, predicate: &Predicate, count: u64, claim: Option<f64>) -> Self {
        Self { n, predicate: predicate.to_string(), count, reference: claim, delta: claim.map(|c| count as f64 - c) }
    }
}

impl fmt::Display for CountReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} {}: {}", self.n, self.predicate, self.count)?;
        if let (Some(c), Some(d)) = (self.reference, self.delta) {
            write!(f, " (reported {c}, delta {d:+})")?;
        }
        Ok(())
    }
}

/// Reference counts quoted alongside oracle results.
pub fn reported_count(n: usize, predicate: &Predicate) -> Option<f64> {
    match (n, predicate) {
        (2, Predicate::Bent) => Some(8.0),
        (4, Predicate::Bent) => Some(894.0),
        (4, Predicate::ResilientAtLeast(1)) => Some(222.0),
        _ => None,
    }
}
