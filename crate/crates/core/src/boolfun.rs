//! Boolean functions and their cryptographic profile.
//!
//! Inputs are indexed by `u = x_1·2^(n-1) + … + x_n`, so `x_1` is the most
//! significant bit and the truth table lists `f(0,…,0), f(0,…,1), …,
//! f(1,…,1)`. Walsh coefficients and ANF monomials use the same bit masks,
//! which makes the Hadamard entry for `(a, x)` simply
//! `(-1)^popcount(a & x)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported variable count.
pub const MAX_VARIABLES: usize = 16;

#[inline]
pub(crate) fn parity(x: usize) -> bool {
    x.count_ones() & 1 == 1
}

/// `(-1)^popcount(a & x)`.
#[inline]
pub fn hadamard_sign(a: usize, x: usize) -> i64 {
    if parity(a & x) {
        -1
    } else {
        1
    }
}

/// In-place fast Walsh–Hadamard butterfly (Sylvester ordering, unnormalized).
pub fn fwht_in_place(values: &mut [i64]) {
    let len = values.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in values.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Binary Möbius transform over GF(2), in place. It is an involution.
pub fn mobius_in_place(values: &mut [bool]) {
    let len = values.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in values.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter().zip(hi.iter_mut()) {
                *b ^= *a;
            }
        }
        h *= 2;
    }
}

fn check_n(n: usize) -> Result<()> {
    if (1..=MAX_VARIABLES).contains(&n) {
        Ok(())
    } else {
        Err(Error::VariableCount(n))
    }
}

/// An n-variable Boolean function given by its 2^n outputs.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthTable {
    n: usize,
    bits: Vec<bool>,
}

impl TruthTable {
    pub fn new(n: usize, bits: Vec<bool>) -> Result<Self> {
        check_n(n)?;
        if bits.len() != 1 << n {
            return Err(Error::TruthTableLength { n, expected: 1 << n, got: bits.len() });
        }
        Ok(Self { n, bits })
    }

    /// Builds a table from 0/1 values; any other value is rejected.
    pub fn from_bits(n: usize, bits: &[u8]) -> Result<Self> {
        let bits = bits
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidParameter(format!("truth table entry {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, bits)
    }

    pub fn zero(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self { n, bits: vec![false; 1 << n] })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Result<Self> {
        check_n(n)?;
        Ok(Self { n, bits: (0..1 << n).map(f).collect() })
    }

    /// Function whose hex serialization is the `2^n`-bit integer `index`
    /// (entry 0 is the most significant bit). Requires `n <= 6`.
    pub fn from_index(n: usize, index: u64) -> Result<Self> {
        if !(1..=6).contains(&n) {
            return Err(Error::VariableCount(n));
        }
        let len = 1usize << n;
        if len < 64 && index >> len != 0 {
            return Err(Error::InvalidParameter(format!("index {index} exceeds 2^{len}")));
        }
        Ok(Self { n, bits: (0..len).map(|u| (index >> (len - 1 - u)) & 1 == 1).collect() })
    }

    /// Inverse of [`TruthTable::from_index`].
    pub fn to_index(&self) -> Option<u64> {
        (self.n <= 6).then(|| self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, u: usize) -> bool {
        self.bits[u]
    }

    /// Hamming weight of the table.
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn flip(&mut self, u: usize) {
        self.bits[u] = !self.bits[u];
    }

    pub fn complement(&self) -> Self {
        Self { n: self.n, bits: self.bits.iter().map(|b| !b).collect() }
    }

    /// Uppercase hex: entry 0 first, four entries per digit, most
    /// significant bit first. Tables shorter than a nibble are zero padded.
    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|nibble| {
                let v = (0..4).fold(0u32, |acc, i| (acc << 1) | nibble.get(i).copied().unwrap_or(false) as u32);
                char::from_digit(v, 16).unwrap().to_ascii_uppercase()
            })
            .collect()
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<Self> {
        check_n(n)?;
        let len = 1usize << n;
        let digits = len.div_ceil(4);
        let hex = hex.trim();
        if hex.len() != digits {
            return Err(Error::Hex(format!("n = {n} needs {digits} hex digits, got {}", hex.len())));
        }
        let mut bits = Vec::with_capacity(digits * 4);
        for c in hex.chars() {
            let v = c.to_digit(16).ok_or_else(|| Error::Hex(format!("'{c}' is not a hex digit")))?;
            bits.extend((0..4).rev().map(|i| (v >> i) & 1 == 1));
        }
        if bits[len..].iter().any(|&b| b) {
            return Err(Error::Hex("padding bits must be zero".into()));
        }
        bits.truncate(len);
        Ok(Self { n, bits })
    }

    /// Parses hex, inferring `n` from the digit count (`n >= 2`).
    pub fn parse_hex(hex: &str) -> Result<Self> {
        let digits = hex.trim().len();
        let bits = digits * 4;
        if digits == 0 || !bits.is_power_of_two() {
            return Err(Error::Hex(format!("{digits} hex digits do not describe a truth table")));
        }
        Self::from_hex(bits.trailing_zeros() as usize, hex)
    }

    /// `b_u = 1 - 2·λ_u`.
    pub fn sign_vector(&self) -> SignVector {
        SignVector { n: self.n, entries: self.bits.iter().map(|&b| if b { -1 } else { 1 }).collect() }
    }

    pub fn walsh(&self) -> WalshSpectrum {
        self.sign_vector().walsh()
    }

    pub fn anf(&self) -> AnfForm {
        let mut coefficients = self.bits.clone();
        mobius_in_place(&mut coefficients);
        AnfForm { n: self.n, coefficients }
    }

    pub fn nonlinearity(&self) -> u32 {
        self.walsh().nonlinearity()
    }

    pub fn resiliency_profile(&self) -> ResiliencyProfile {
        self.walsh().resiliency_profile()
    }

    pub fn analyze(&self) -> Analysis {
        let ws = self.walsh();
        let profile = ws.resiliency_profile();
        Analysis {
            n: self.n,
            tt_hex: self.to_hex(),
            nonlinearity: ws.nonlinearity(),
            bent: ws.is_bent().ok(),
            balanced: profile.balanced,
            ci_order: profile.ci_order,
            resiliency: profile.resiliency,
            degree: self.anf().degree(),
        }
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable(n={}, {})", self.n, self.to_hex())
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// The ±1 image of a truth table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignVector {
    n: usize,
    entries: Vec<i8>,
}

impl SignVector {
    pub fn new(n: usize, entries: Vec<i8>) -> Result<Self> {
        check_n(n)?;
        if entries.len() != 1 << n {
            return Err(Error::TruthTableLength { n, expected: 1 << n, got: entries.len() });
        }
        if let Some(bad) = entries.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!("sign entry {bad} is not ±1")));
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    /// `λ_u = (1 - b_u) / 2`.
    pub fn to_truth_table(&self) -> TruthTable {
        TruthTable { n: self.n, bits: self.entries.iter().map(|&s| s < 0).collect() }
    }

    pub fn walsh(&self) -> WalshSpectrum {
        let mut coefficients: Vec<i64> = self.entries.iter().map(|&s| s as i64).collect();
        fwht_in_place(&mut coefficients);
        WalshSpectrum { n: self.n, coefficients }
    }
}

/// Walsh coefficients `W_f(a) = Σ_x (-1)^(f(x) ⊕ a·x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalshSpectrum {
    n: usize,
    coefficients: Vec<i64>,
}

impl WalshSpectrum {
    /// Wraps raw coefficients. Only the length is checked; use
    /// [`WalshSpectrum::satisfies_parseval`] to test realizability.
    pub fn new(n: usize, coefficients: Vec<i64>) -> Result<Self> {
        check_n(n)?;
        if coefficients.len() != 1 << n {
            return Err(Error::TruthTableLength { n, expected: 1 << n, got: coefficients.len() });
        }
        Ok(Self { n, coefficients })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    pub fn get(&self, a: usize) -> i64 {
        self.coefficients[a]
    }

    pub fn max_abs(&self) -> u64 {
        self.coefficients.iter().map(|w| w.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn abs_sum(&self) -> u64 {
        self.coefficients.iter().map(|w| w.unsigned_abs()).sum()
    }

    pub fn sum_of_squares(&self) -> u64 {
        self.coefficients.iter().map(|w| (w * w) as u64).sum()
    }

    pub fn satisfies_parseval(&self) -> bool {
        self.sum_of_squares() == 1u64 << (2 * self.n)
    }

    /// `2^(n-1) - max|W| / 2`.
    pub fn nonlinearity(&self) -> u32 {
        let half = 1u64 << (self.n - 1);
        half.saturating_sub(self.max_abs() / 2) as u32
    }

    /// All `|W(a)| = 2^(n/2)`. Only defined for even `n`.
    pub fn is_bent(&self) -> Result<bool> {
        if !self.n.is_multiple_of(2) {
            return Err(Error::OddVariables(self.n));
        }
        let target = 1u64 << (self.n / 2);
        Ok(self.coefficients.iter().all(|w| w.unsigned_abs() == target))
    }

    pub fn resiliency_profile(&self) -> ResiliencyProfile {
        let balanced = self.coefficients[0] == 0;
        let ci_order = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .filter(|&(_, &w)| w != 0)
            .map(|(a, _)| a.count_ones() as usize - 1)
            .min()
            .unwrap_or(self.n);
        ResiliencyProfile { balanced, ci_order, resiliency: balanced.then_some(ci_order) }
    }

    /// Inverse transform back to the sign vector. Fails if the coefficients
    /// are not the spectrum of a Boolean function.
    pub fn inverse(&self) -> Result<SignVector> {
        let mut v = self.coefficients.clone();
        fwht_in_place(&mut v);
        let scale = 1i64 << self.n;
        let entries = v
            .into_iter()
            .map(|x| match x / scale {
                1 if x % scale == 0 => Ok(1i8),
                -1 if x % scale == 0 => Ok(-1i8),
                _ => Err(Error::InvalidParameter("coefficients are not a Walsh spectrum".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SignVector { n: self.n, entries })
    }
}

/// ANF coefficients indexed by monomial mask (bit `n - i` set ⇔ `x_i` present).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnfForm {
    n: usize,
    coefficients: Vec<bool>,
}

impl AnfForm {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[bool] {
        &self.coefficients
    }

    /// Masks of the monomials present, in increasing order.
    pub fn monomials(&self) -> Vec<usize> {
        self.coefficients.iter().enumerate().filter(|(_, &c)| c).map(|(u, _)| u).collect()
    }

    /// Largest monomial weight; the zero function has degree 0.
    pub fn degree(&self) -> usize {
        self.monomials().into_iter().map(|u| u.count_ones() as usize).max().unwrap_or(0)
    }

    pub fn to_truth_table(&self) -> TruthTable {
        let mut bits = self.coefficients.clone();
        mobius_in_place(&mut bits);
        TruthTable { n: self.n, bits }
    }

    /// Renders a monomial mask as `x1x3`, or `1` for the constant term.
    pub fn monomial_name(&self, u: usize) -> String {
        if u == 0 {
            return "1".into();
        }
        (1..=self.n).filter(|i| u >> (self.n - i) & 1 == 1).map(|i| format!("x{i}")).collect()
    }
}

impl fmt::Display for AnfForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.monomials().into_iter().map(|u| self.monomial_name(u)).collect();
        if terms.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&terms.join(" + "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResiliencyProfile {
    pub balanced: bool,
    /// Largest `m` with `W(a) = 0` for every `1 <= wt(a) <= m`.
    pub ci_order: usize,
    /// `ci_order` when balanced.
    pub resiliency: Option<usize>,
}

/// Summary record for one function. `bent` is `None` for odd `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analysis {
    pub n: usize,
    pub tt_hex: String,
    pub nonlinearity: u32,
    pub bent: Option<bool>,
    pub balanced: bool,
    pub ci_order: usize,
    pub resiliency: Option<usize>,
    pub degree: usize,
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "truth table   {} (n = {})", self.tt_hex, self.n)?;
        writeln!(f, "nonlinearity  {}", self.nonlinearity)?;
        match self.bent {
            Some(b) => writeln!(f, "bent          {}", if b { "yes" } else { "no" })?,
            None => writeln!(f, "bent          n/a (odd n)")?,
        }
        writeln!(f, "balanced      {}", if self.balanced { "yes" } else { "no" })?;
        writeln!(f, "ci order      {}", self.ci_order)?;
        match self.resiliency {
            Some(m) => writeln!(f, "resiliency    {m}")?,
            None => writeln!(f, "resiliency    none (unbalanced)")?,
        }
        write!(f, "degree        {}", self.degree)
    }
}
