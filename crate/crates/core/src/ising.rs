//! Logical Ising models for Boolean-function criteria.
//!
//! Energies follow `H = offset + Σ h_i σ_i + Σ_{i<j} J_ij σ_i σ_j` and are
//! minimized. For a design over `n` variables the first `2^n` spins are the
//! function spins `b_x`; the nonlinearity encoding appends `2^n` ancillas,
//! one per Walsh coefficient.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::boolfun::{hadamard_sign, TruthTable, WalshSpectrum};
use crate::{Error, Result};

/// Spin-layout tag: the model's first `2^variables` spins are function spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinLayout {
    pub variables: usize,
}

impl SpinLayout {
    pub fn function_spins(&self) -> usize {
        1 << self.variables
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    num_spins: usize,
    linear: BTreeMap<usize, f64>,
    couplers: BTreeMap<(usize, usize), f64>,
    offset: f64,
    layout: Option<SpinLayout>,
}

impl IsingModel {
    pub fn new(num_spins: usize) -> Self {
        Self { num_spins, linear: BTreeMap::new(), couplers: BTreeMap::new(), offset: 0.0, layout: None }
    }

    pub fn with_layout(mut self, variables: usize) -> Self {
        self.layout = Some(SpinLayout { variables });
        self
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn layout(&self) -> Option<SpinLayout> {
        self.layout
    }

    pub fn linear(&self) -> &BTreeMap<usize, f64> {
        &self.linear
    }

    pub fn couplers(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.couplers
    }

    pub fn coupler(&self, i: usize, j: usize) -> f64 {
        self.couplers.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    pub fn set_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    /// Adds to the bias of spin `i`; a bias that sums to zero is dropped.
    pub fn add_linear(&mut self, i: usize, h: f64) -> Result<()> {
        if i >= self.num_spins {
            return Err(Error::InvalidParameter(format!("spin {i} out of range for {} spins", self.num_spins)));
        }
        let v = self.linear.entry(i).or_insert(0.0);
        *v += h;
        if *v == 0.0 {
            self.linear.remove(&i);
        }
        Ok(())
    }

    /// Adds to the coupler on the unordered pair `{i, j}`; a coupler that
    /// sums to zero is dropped.
    pub fn add_coupler(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i == j {
            return Err(Error::InvalidParameter(format!("self-coupler on spin {i}")));
        }
        if i.max(j) >= self.num_spins {
            return Err(Error::InvalidParameter(format!(
                "coupler ({i}, {j}) out of range for {} spins",
                self.num_spins
            )));
        }
        let key = (i.min(j), i.max(j));
        let v = self.couplers.entry(key).or_insert(0.0);
        *v += value;
        if *v == 0.0 {
            self.couplers.remove(&key);
        }
        Ok(())
    }

    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.num_spins {
            return Err(Error::LengthMismatch { expected: self.num_spins, got: spins.len() });
        }
        Ok(self.energy_unchecked(spins))
    }

    /// Energy without the length check. Terms are summed in key order so the
    /// value is reproducible bit for bit.
    pub(crate) fn energy_unchecked(&self, spins: &[i8]) -> f64 {
        let mut e = self.offset;
        for (&i, &h) in &self.linear {
            e += h * spins[i] as f64;
        }
        for (&(i, j), &v) in &self.couplers {
            e += v * (spins[i] * spins[j]) as f64;
        }
        e
    }

    /// SHA-256 of the interchange serialization, used to tie sample files
    /// to the model that produced them.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(&ModelFile::from(self)).expect("model serialization is infallible");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile::from(self)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, &self.to_file())?;
        writeln!(w)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(r)?;
        file.try_into()
    }
}

/// Model interchange record. Indices are 0-based; `n` records the spin
/// layout when the model encodes a design problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub num_spins: usize,
    pub offset: f64,
    pub linear: Vec<(usize, f64)>,
    pub couplers: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl From<&IsingModel> for ModelFile {
    fn from(m: &IsingModel) -> Self {
        Self {
            num_spins: m.num_spins,
            offset: m.offset,
            linear: m.linear.iter().map(|(&i, &h)| (i, h)).collect(),
            couplers: m.couplers.iter().map(|(&(i, j), &v)| (i, j, v)).collect(),
            n: m.layout.map(|l| l.variables),
        }
    }
}

impl TryFrom<ModelFile> for IsingModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let mut m = IsingModel::new(f.num_spins);
        m.offset = f.offset;
        m.layout = f.n.map(|variables| SpinLayout { variables });
        for (i, h) in f.linear {
            if m.linear.contains_key(&i) {
                return Err(Error::Format(format!("duplicate bias for spin {i}")));
            }
            m.add_linear(i, h)?;
        }
        for (i, j, v) in f.couplers {
            if m.couplers.contains_key(&(i.min(j), i.max(j))) {
                return Err(Error::Format(format!("duplicate coupler ({i}, {j})")));
            }
            m.add_coupler(i, j, v)?;
        }
        Ok(m)
    }
}

fn check_strength(name: &str, s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {s}")))
    }
}

/// Bent-function Hamiltonian: `Σ_a σ_anc(a) · s · Σ_x (-1)^(a·x) b_x`.
///
/// For fixed function spins the ancilla minimum is `-s·Σ_a |W_f(a)|`,
/// which is smallest exactly when `f` is bent.
pub fn encode_nonlinearity(n: usize, strength: f64) -> Result<IsingModel> {
    if !n.is_multiple_of(2) {
        return Err(Error::OddVariables(n));
    }
    if !(2..=8).contains(&n) {
        return Err(Error::VariableCount(n));
    }
    check_strength("nonlinearity strength", strength)?;
    let size = 1usize << n;
    let mut m = IsingModel::new(2 * size).with_layout(n);
    for x in 0..size {
        for a in 0..size {
            m.couplers.insert((x, size + a), strength * hadamard_sign(a, x) as f64);
        }
    }
    Ok(m)
}

/// Multiplicity `c(d) = Σ_{a∈A} (-1)^(a·d)` of the coupler between function
/// spins `x` and `y` with `x ⊕ y = d`, for every `d`.
pub fn resiliency_coefficients(n: usize, order: usize, include_balancedness: bool) -> Vec<i64> {
    let size = 1usize << n;
    let targeted: Vec<usize> = (0..size)
        .filter(|&a| {
            let w = a.count_ones() as usize;
            (w >= 1 && w <= order) || (a == 0 && include_balancedness)
        })
        .collect();
    (0..size).map(|d| targeted.iter().map(|&a| hadamard_sign(a, d)).sum()).collect()
}

/// Penalty `s·Σ_{a∈A} W_f(a)²` over `A = {1 <= wt(a) <= m}` plus `a = 0`
/// when balancedness is requested.
///
/// Expanding the square gives `J_xy = 2·s·c(x ⊕ y)` for `x < y` and the
/// diagonal constant `s·|A|·2^n`, kept as the model offset so the energy is
/// zero exactly when every targeted coefficient vanishes.
pub fn encode_resiliency(n: usize, order: usize, strength: f64, include_balancedness: bool) -> Result<IsingModel> {
    if !(1..=8).contains(&n) {
        return Err(Error::VariableCount(n));
    }
    if order > n {
        return Err(Error::InvalidParameter(format!("resiliency order {order} exceeds n = {n}")));
    }
    if order == 0 && !include_balancedness {
        return Err(Error::InvalidParameter("no resiliency criterion selected".into()));
    }
    check_strength("resiliency strength", strength)?;
    let size = 1usize << n;
    let c = resiliency_coefficients(n, order, include_balancedness);
    let targeted = c[0];
    let mut m = IsingModel::new(size).with_layout(n);
    for x in 0..size {
        for y in x + 1..size {
            let cxy = c[x ^ y];
            if cxy != 0 {
                m.couplers.insert((x, y), 2.0 * strength * cxy as f64);
            }
        }
    }
    m.offset = strength * (targeted as f64) * size as f64;
    Ok(m)
}

/// Sums models that share the function-spin prefix.
pub fn combine(parts: &[IsingModel]) -> Result<IsingModel> {
    let first = parts.first().ok_or_else(|| Error::InvalidParameter("nothing to combine".into()))?;
    let layout = first.layout;
    for p in parts {
        if p.layout != layout {
            return Err(Error::LayoutMismatch(format!("{:?} vs {:?}", p.layout, layout)));
        }
    }
    if layout.is_none() && parts.len() > 1 {
        return Err(Error::LayoutMismatch("models without a spin layout cannot be combined".into()));
    }
    let num_spins = parts.iter().map(|p| p.num_spins).max().unwrap_or(0);
    let mut out = IsingModel::new(num_spins);
    out.layout = layout;
    for p in parts {
        for (&i, &h) in &p.linear {
            out.add_linear(i, h)?;
        }
        for (&(i, j), &v) in &p.couplers {
            out.add_coupler(i, j, v)?;
        }
        out.offset += p.offset;
    }
    Ok(out)
}

/// Ancilla values minimizing the nonlinearity energy: `-sign(W(a))`,
/// with `+1` where `W(a) = 0`.
pub fn optimal_ancilla(ws: &WalshSpectrum) -> Vec<i8> {
    ws.coefficients().iter().map(|&w| if w > 0 { -1 } else { 1 }).collect()
}

/// Function spins followed by their optimal ancillas.
pub fn nonlinearity_assignment(tt: &TruthTable) -> Vec<i8> {
    let mut spins = tt.sign_vector().entries().to_vec();
    spins.extend(optimal_ancilla(&tt.walsh()));
    spins
}

/// Reads the function from the first `2^n` spins: `λ_u = (1 - σ_u) / 2`.
pub fn decode_function(spins: &[i8], n: usize) -> Result<TruthTable> {
    let size = 1usize << n;
    if spins.len() < size {
        return Err(Error::LengthMismatch { expected: size, got: spins.len() });
    }
    TruthTable::new(n, spins[..size].iter().map(|&s| s < 0).collect())
}

/// Ground energy of [`encode_nonlinearity`]: `-s·2^(3n/2)`.
pub fn nonlinearity_ground_energy(n: usize, strength: f64) -> f64 {
    -strength * (1u64 << (3 * n / 2)) as f64
}

/// Criterion weights for a combined design. Defaults to `s_N = 0.05`,
/// `s_R = 0.125`, 1-resilient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaSpec {
    pub n: usize,
    pub nonlinearity_strength: f64,
    pub resiliency_order: Option<usize>,
    pub resiliency_strength: f64,
    pub include_balancedness: bool,
}

impl CriteriaSpec {
    pub fn new(n: usize) -> Self {
        Self { n, nonlinearity_strength: 0.05, resiliency_order: Some(1), resiliency_strength: 0.125, include_balancedness: true }
    }

    pub fn bent(n: usize, strength: f64) -> Self {
        Self { n, nonlinearity_strength: strength, resiliency_order: None, resiliency_strength: 0.0, include_balancedness: false }
    }

    fn wants_resiliency(&self) -> bool {
        self.resiliency_strength > 0.0 && (self.resiliency_order.unwrap_or(0) > 0 || self.include_balancedness)
    }

    pub fn build(&self) -> Result<IsingModel> {
        let mut parts = Vec::new();
        if self.nonlinearity_strength > 0.0 {
            parts.push(encode_nonlinearity(self.n, self.nonlinearity_strength)?);
        }
        if self.wants_resiliency() {
            parts.push(encode_resiliency(
                self.n,
                self.resiliency_order.unwrap_or(0),
                self.resiliency_strength,
                self.include_balancedness,
            )?);
        }
        if parts.is_empty() {
            return Err(Error::InvalidParameter("no criterion enabled".into()));
        }
        combine(&parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_assignments(len: usize) -> impl Iterator<Item = Vec<i8>> {
        (0..1u32 << len).map(move |m| (0..len).map(|i| if m >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    #[test]
    fn two_variable_bent_model_matches_printed_hamiltonian() {
        let m = encode_nonlinearity(2, 1.0).unwrap();
        assert_eq!(m.num_spins(), 8);
        assert_eq!(m.couplers().len(), 16);
        // rows of the printed Hamiltonian, 1-based spins 5..8 against 1..4
        let printed = [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]];
        for (a, row) in printed.iter().enumerate() {
            for (x, &sign) in row.iter().enumerate() {
                assert_eq!(m.coupler(x, 4 + a), sign as f64);
            }
        }
        assert_eq!(m.coupler(1, 5), -1.0);
        assert_eq!(m.coupler(0, 4), 1.0);
        assert!(m.linear().is_empty());
    }

    #[test]
    fn four_variable_bent_ground_energy() {
        for n in [2, 4, 6] {
            let m = encode_nonlinearity(n, 0.5).unwrap();
            assert_eq!(m.coupler(0, 1 << n), 0.5);
        }
        let m = encode_nonlinearity(4, 1.0).unwrap();
        assert_eq!((m.num_spins(), m.couplers().len()), (32, 256));
        let f = TruthTable::parse_hex("111E").unwrap();
        assert_eq!(m.energy(&nonlinearity_assignment(&f)).unwrap(), -64.0);
        assert_eq!(nonlinearity_ground_energy(4, 1.0), -64.0);
    }

    #[test]
    fn nonlinearity_encoding_errors() {
        assert!(matches!(encode_nonlinearity(3, 1.0), Err(Error::OddVariables(3))));
        assert!(encode_nonlinearity(4, 0.0).is_err());
        assert!(encode_nonlinearity(4, -1.0).is_err());
        assert!(encode_nonlinearity(10, 1.0).is_err());
    }

    #[test]
    fn resiliency_model_matches_printed_signs() {
        let m = encode_resiliency(2, 1, 0.5, true).unwrap();
        let printed = [((0, 1), 1.0), ((0, 2), 1.0), ((0, 3), -1.0), ((1, 2), -1.0), ((1, 3), 1.0), ((2, 3), 1.0)];
        assert_eq!(m.couplers().len(), 6);
        for ((i, j), v) in printed {
            assert_eq!(m.coupler(i, j), v, "pair ({i},{j})");
        }
        assert_eq!(m.offset(), 6.0);
    }

    #[test]
    fn balancedness_alone_is_a_uniform_complete_graph() {
        let s = 0.25;
        let m = encode_resiliency(3, 0, s, true).unwrap();
        assert_eq!(m.couplers().len(), 8 * 7 / 2);
        assert!(m.couplers().values().all(|&v| v == 2.0 * s));
        // energy is s·(Σb)²
        for spins in all_assignments(8) {
            let sum: i32 = spins.iter().map(|&s| s as i32).sum();
            assert_eq!(m.energy(&spins).unwrap(), s * (sum * sum) as f64);
        }
    }

    #[test]
    fn resiliency_coefficient_example() {
        let c = resiliency_coefficients(4, 1, true);
        assert_eq!(c[0b0001], 3);
        assert_eq!(c[0], 5);
    }

    #[test]
    fn resiliency_encoding_errors() {
        assert!(encode_resiliency(2, 3, 1.0, true).is_err());
        assert!(encode_resiliency(2, 0, 1.0, false).is_err());
        assert!(encode_resiliency(2, 1, 0.0, true).is_err());
    }

    #[test]
    fn energy_examples() {
        let m = encode_nonlinearity(2, 1.0).unwrap();
        assert_eq!(m.energy(&[1, -1, 1, 1, -1, -1, 1, -1]).unwrap(), -8.0);

        let mut unit = encode_resiliency(2, 1, 0.5, true).unwrap();
        assert_eq!(unit.energy(&[1, -1, -1, 1]).unwrap(), 0.0);
        unit.set_offset(0.0);
        assert_eq!(unit.energy(&[1, -1, -1, 1]).unwrap(), -6.0);

        let mut single = IsingModel::new(2);
        single.add_coupler(0, 1, 1.0).unwrap();
        assert_eq!(single.energy(&[1, 1]).unwrap(), 1.0);
        assert!(single.energy(&[1]).is_err());
    }

    #[test]
    fn optimal_ancilla_examples() {
        let ws = WalshSpectrum::new(2, vec![2, 2, -2, 2]).unwrap();
        assert_eq!(optimal_ancilla(&ws), vec![-1, -1, 1, -1]);
        let ws = WalshSpectrum::new(2, vec![4, 0, 0, 0]).unwrap();
        assert_eq!(optimal_ancilla(&ws), vec![-1, 1, 1, 1]);
    }

    #[test]
    fn ancilla_choice_is_optimal_for_every_two_variable_function() {
        let m = encode_nonlinearity(2, 0.75).unwrap();
        for idx in 0..16 {
            let f = TruthTable::from_index(2, idx).unwrap();
            let mut spins = f.sign_vector().entries().to_vec();
            let best = all_assignments(4)
                .map(|anc| {
                    spins.truncate(4);
                    spins.extend(anc);
                    m.energy(&spins).unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            let e = m.energy(&nonlinearity_assignment(&f)).unwrap();
            assert_eq!(e, best);
            assert_eq!(e, -0.75 * f.walsh().abs_sum() as f64);
        }
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_function(&[1, -1, 1, 1, 1, 1], 2).unwrap().bits(), &[false, true, false, false]);
        assert_eq!(decode_function(&[1; 8], 2).unwrap(), TruthTable::zero(2).unwrap());
        assert_eq!(decode_function(&[-1, -1, 1, -1], 2).unwrap().bits(), &[true, true, false, true]);
        assert!(decode_function(&[1, 1, 1], 2).is_err());
    }

    #[test]
    fn combine_behaviour() {
        let a = encode_nonlinearity(2, 1.0).unwrap();
        assert_eq!(combine(std::slice::from_ref(&a)).unwrap(), a);

        let mut p = IsingModel::new(3).with_layout(1);
        p.add_coupler(0, 1, 1.0).unwrap();
        let mut q = IsingModel::new(3).with_layout(1);
        q.add_coupler(1, 0, -1.0).unwrap();
        q.add_coupler(1, 2, 0.5).unwrap();
        let c = combine(&[p, q]).unwrap();
        assert_eq!(c.couplers().len(), 1);
        assert_eq!(c.coupler(1, 2), 0.5);

        let r = encode_resiliency(4, 1, 1.0, true).unwrap();
        assert!(matches!(combine(&[a, r]), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn combined_criteria_model_shape() {
        let m = CriteriaSpec::new(4).build().unwrap();
        assert_eq!(m.num_spins(), 32);
        assert_eq!(m.layout(), Some(SpinLayout { variables: 4 }));
        assert!(CriteriaSpec { nonlinearity_strength: 0.0, resiliency_strength: 0.0, ..CriteriaSpec::new(4) }
            .build()
            .is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let m = CriteriaSpec::new(2).build().unwrap();
        let mut buf = Vec::new();
        m.write_json(&mut buf).unwrap();
        let back = IsingModel::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.content_hash(), m.content_hash());
        let dup = r#"{"num_spins":2,"offset":0,"linear":[],"couplers":[[0,1,1.0],[1,0,2.0]]}"#;
        assert!(IsingModel::read_json(dup.as_bytes()).is_err());
    }
}
