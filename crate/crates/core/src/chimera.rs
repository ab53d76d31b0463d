//! Chimera topology, structured chain embeddings and model lowering.
//!
//! A Chimera graph is an `M × N` grid of unit cells, each a complete
//! bipartite `K_{L,L}`. Qubit `k` of the left half (side 0) couples to the
//! same qubit in the cells above and below; qubit `k` of the right half
//! (side 1) couples to the cells left and right. Qubit ids are
//! `((row·N) + col)·2L + side·L + k`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::ising::IsingModel;
use crate::{Error, Result};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChimeraGraph {
    #[serde(rename = "M")]
    pub rows: usize,
    #[serde(rename = "N")]
    pub cols: usize,
    #[serde(rename = "L")]
    pub half: usize,
}

/// Position of a qubit inside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QubitCoord {
    pub row: usize,
    pub col: usize,
    pub side: usize,
    pub k: usize,
}

impl ChimeraGraph {
    pub fn new(rows: usize, cols: usize, half: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || half == 0 {
            return Err(Error::InvalidParameter(format!("chimera dimensions must be positive, got ({rows}, {cols}, {half})")));
        }
        Ok(Self { rows, cols, half })
    }

    /// The 16 × 16 × 4 grid of a 2000-qubit device.
    pub fn dwave_2000q() -> Self {
        Self { rows: 16, cols: 16, half: 4 }
    }

    pub fn num_qubits(&self) -> usize {
        self.rows * self.cols * 2 * self.half
    }

    pub fn num_edges(&self) -> usize {
        let (m, n, l) = (self.rows, self.cols, self.half);
        m * n * l * l + (m - 1) * n * l + m * (n - 1) * l
    }

    pub fn qubit(&self, row: usize, col: usize, side: usize, k: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols && side < 2 && k < self.half);
        ((row * self.cols) + col) * 2 * self.half + side * self.half + k
    }

    pub fn coord(&self, q: usize) -> QubitCoord {
        let cell = q / (2 * self.half);
        let within = q % (2 * self.half);
        QubitCoord { row: cell / self.cols, col: cell % self.cols, side: within / self.half, k: within % self.half }
    }

    pub fn contains(&self, q: usize) -> bool {
        q < self.num_qubits()
    }

    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        let c = self.coord(q);
        let mut out: Vec<usize> = (0..self.half).map(|k| self.qubit(c.row, c.col, 1 - c.side, k)).collect();
        if c.side == LEFT {
            if c.row > 0 {
                out.push(self.qubit(c.row - 1, c.col, LEFT, c.k));
            }
            if c.row + 1 < self.rows {
                out.push(self.qubit(c.row + 1, c.col, LEFT, c.k));
            }
        } else {
            if c.col > 0 {
                out.push(self.qubit(c.row, c.col - 1, RIGHT, c.k));
            }
            if c.col + 1 < self.cols {
                out.push(self.qubit(c.row, c.col + 1, RIGHT, c.k));
            }
        }
        out
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        if !self.contains(a) || !self.contains(b) || a == b {
            return false;
        }
        let (ca, cb) = (self.coord(a), self.coord(b));
        if (ca.row, ca.col) == (cb.row, cb.col) {
            return ca.side != cb.side;
        }
        if ca.side != cb.side || ca.k != cb.k {
            return false;
        }
        match ca.side {
            LEFT => ca.col == cb.col && ca.row.abs_diff(cb.row) == 1,
            _ => ca.row == cb.row && ca.col.abs_diff(cb.col) == 1,
        }
    }

    /// All edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..self.num_qubits())
            .flat_map(|a| self.neighbors(a).into_iter().filter(move |&b| a < b).map(move |b| (a, b)))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Top-left cell of an embedding's block inside a larger graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellOrigin {
    pub row: usize,
    pub col: usize,
}

/// Logical spin → chain of physical qubits, plus the physical edge that
/// carries each logical coupler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    n: usize,
    graph: ChimeraGraph,
    chains: Vec<Vec<usize>>,
    coupler_sites: BTreeMap<(usize, usize), (usize, usize)>,
}

impl Embedding {
    pub fn new(
        n: usize,
        graph: ChimeraGraph,
        chains: Vec<Vec<usize>>,
        coupler_sites: BTreeMap<(usize, usize), (usize, usize)>,
    ) -> Self {
        Self { n, graph, chains, coupler_sites }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn graph(&self) -> &ChimeraGraph {
        &self.graph
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn chains_mut(&mut self) -> &mut Vec<Vec<usize>> {
        &mut self.chains
    }

    pub fn coupler_sites(&self) -> &BTreeMap<(usize, usize), (usize, usize)> {
        &self.coupler_sites
    }

    pub fn coupler_sites_mut(&mut self) -> &mut BTreeMap<(usize, usize), (usize, usize)> {
        &mut self.coupler_sites
    }

    /// Physical edge for the logical pair, oriented as `(qubit in chain i,
    /// qubit in chain j)`.
    pub fn site(&self, i: usize, j: usize) -> Option<(usize, usize)> {
        if i <= j {
            self.coupler_sites.get(&(i, j)).copied()
        } else {
            self.coupler_sites.get(&(j, i)).map(|&(a, b)| (b, a))
        }
    }

    pub fn num_qubits_used(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    /// Map from physical qubit to the chain that owns it.
    pub fn owner_map(&self) -> HashMap<usize, usize> {
        self.chains.iter().enumerate().flat_map(|(c, qs)| qs.iter().map(move |&q| (q, c))).collect()
    }

    /// Graph edges with both ends inside the same chain, per chain.
    pub fn chain_edges(&self) -> Vec<Vec<(usize, usize)>> {
        self.chains
            .iter()
            .map(|chain| {
                let members: BTreeSet<usize> = chain.iter().copied().collect();
                let members = &members;
                let mut edges: Vec<(usize, usize)> = members
                    .iter()
                    .flat_map(|&a| {
                        self.graph.neighbors(a).into_iter().filter(move |b| a < *b && members.contains(b)).map(move |b| (a, b))
                    })
                    .collect();
                edges.sort_unstable();
                edges
            })
            .collect()
    }

    /// Physical state with every chain set to its logical value; qubits
    /// outside all chains are `+1`.
    pub fn lift(&self, logical: &[i8]) -> Result<Vec<i8>> {
        if logical.len() != self.chains.len() {
            return Err(Error::LengthMismatch { expected: self.chains.len(), got: logical.len() });
        }
        let mut phys = vec![1i8; self.graph.num_qubits()];
        for (chain, &s) in self.chains.iter().zip(logical) {
            for &q in chain {
                phys[q] = s;
            }
        }
        Ok(phys)
    }

    pub fn to_file(&self) -> EmbeddingFile {
        EmbeddingFile {
            n: self.n,
            chains: self.chains.clone(),
            coupler_sites: self.coupler_sites.iter().map(|(&(i, j), &(a, b))| (i, j, a, b)).collect(),
            graph: self.graph,
        }
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.to_file())?;
        writeln!(w)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let f: EmbeddingFile = serde_json::from_reader(r)?;
        Ok(f.into())
    }
}

/// Embedding interchange record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingFile {
    pub n: usize,
    pub chains: Vec<Vec<usize>>,
    pub coupler_sites: Vec<(usize, usize, usize, usize)>,
    pub graph: ChimeraGraph,
}

impl From<EmbeddingFile> for Embedding {
    fn from(f: EmbeddingFile) -> Self {
        Embedding {
            n: f.n,
            graph: f.graph,
            chains: f.chains,
            coupler_sites: f.coupler_sites.into_iter().map(|(i, j, a, b)| ((i, j), (a, b))).collect(),
        }
    }
}

fn require_block(graph: &ChimeraGraph, origin: CellOrigin, rows: usize, cols: usize) -> Result<()> {
    if graph.half != 4 {
        return Err(Error::Embedding(format!("structured embeddings need L = 4 cells, got L = {}", graph.half)));
    }
    if origin.row + rows > graph.rows || origin.col + cols > graph.cols {
        return Err(Error::Embedding(format!(
            "grid too small: need a {rows}×{cols} cell block at ({}, {}) in a {}×{} grid",
            origin.row, origin.col, graph.rows, graph.cols
        )));
    }
    Ok(())
}

/// Cells per side of the bipartite block for `n` variables.
pub fn bipartite_block(n: usize) -> usize {
    1 << (n - 2)
}

/// Bipartite (nonlinearity) embedding on the smallest grid that holds it.
pub fn embed_bipartite(n: usize) -> Result<Embedding> {
    if !n.is_multiple_of(2) {
        return Err(Error::OddVariables(n));
    }
    if !(2..=10).contains(&n) {
        return Err(Error::VariableCount(n));
    }
    let side = bipartite_block(n);
    embed_bipartite_on(n, ChimeraGraph::new(side, side, 4)?, CellOrigin::default())
}

/// Function spin `4r + k` runs along right-half qubit `k` of block row `r`;
/// ancilla `4c + k` runs down left-half qubit `k` of block column `c`.
/// Function/ancilla pairs meet at exactly one in-cell edge.
pub fn embed_bipartite_on(n: usize, graph: ChimeraGraph, origin: CellOrigin) -> Result<Embedding> {
    if !n.is_multiple_of(2) {
        return Err(Error::OddVariables(n));
    }
    if n < 2 {
        return Err(Error::VariableCount(n));
    }
    let side = bipartite_block(n);
    require_block(&graph, origin, side, side)?;
    let size = 1usize << n;
    let cell = |r: usize, c: usize| (origin.row + r, origin.col + c);
    let mut chains = Vec::with_capacity(2 * size);
    for x in 0..size {
        let (r, k) = (x / 4, x % 4);
        chains.push((0..side).map(|c| {
            let (row, col) = cell(r, c);
            graph.qubit(row, col, RIGHT, k)
        }).collect());
    }
    for a in 0..size {
        let (c, k) = (a / 4, a % 4);
        chains.push((0..side).map(|r| {
            let (row, col) = cell(r, c);
            graph.qubit(row, col, LEFT, k)
        }).collect());
    }
    let mut sites = BTreeMap::new();
    for x in 0..size {
        for a in 0..size {
            let (row, col) = cell(x / 4, a / 4);
            sites.insert((x, size + a), (graph.qubit(row, col, RIGHT, x % 4), graph.qubit(row, col, LEFT, a % 4)));
        }
    }
    Ok(Embedding { n, graph, chains, coupler_sites: sites })
}

/// Clique embedding for `k` logical spins on the smallest grid that holds it.
pub fn embed_clique(k: usize) -> Result<Embedding> {
    if k == 0 || !k.is_multiple_of(4) {
        return Err(Error::InvalidParameter(format!("clique size {k} must be a positive multiple of 4")));
    }
    let m = k / 4;
    embed_clique_on(k, ChimeraGraph::new(m, m, 4)?, CellOrigin::default())
}

/// L-shaped chains: spin `4p + k` takes left-half qubit `k` down block
/// column `p` and right-half qubit `k` across block row `p`, joined inside
/// diagonal cell `(p, p)`. Spins `i < j` couple in cell `(p_j, p_i)`.
pub fn embed_clique_on(k: usize, graph: ChimeraGraph, origin: CellOrigin) -> Result<Embedding> {
    if !k.is_multiple_of(4) {
        return Err(Error::InvalidParameter(format!("clique size {k} must be a multiple of 4")));
    }
    let m = k / 4;
    require_block(&graph, origin, m, m)?;
    let q = |r: usize, c: usize, side: usize, kk: usize| graph.qubit(origin.row + r, origin.col + c, side, kk);
    let chains: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let (p, kk) = (i / 4, i % 4);
            (0..m).map(|r| q(r, p, LEFT, kk)).chain((0..m).map(|c| q(p, c, RIGHT, kk))).collect()
        })
        .collect();
    let mut sites = BTreeMap::new();
    for i in 0..k {
        for j in i + 1..k {
            let (pi, pj) = (i / 4, j / 4);
            sites.insert((i, j), (q(pj, pi, LEFT, i % 4), q(pj, pi, RIGHT, j % 4)));
        }
    }
    let n = k.next_power_of_two().trailing_zeros() as usize;
    Ok(Embedding { n, graph, chains, coupler_sites: sites })
}

/// Joins the clique chains of the function spins onto their bipartite
/// chains. Both embeddings must live on the same graph in disjoint cells,
/// and each function chain must touch its clique chain through one edge.
pub fn compose_embeddings(bipartite: &Embedding, clique: &Embedding) -> Result<Embedding> {
    if clique.chains.is_empty() {
        return Ok(bipartite.clone());
    }
    if bipartite.graph != clique.graph {
        return Err(Error::Embedding("embeddings live on different graphs".into()));
    }
    let owner = bipartite.owner_map();
    if let Some(q) = clique.chains.iter().flatten().find(|q| owner.contains_key(q)) {
        return Err(Error::Embedding(format!("regions overlap at qubit {q}")));
    }
    let functions = clique.chains.len();
    if functions > bipartite.chains.len() {
        return Err(Error::Embedding("clique has more spins than the bipartite part".into()));
    }
    let graph = bipartite.graph;
    let mut chains = bipartite.chains.clone();
    for (i, extra) in clique.chains.iter().enumerate() {
        let linked = bipartite.chains[i].iter().any(|&a| extra.iter().any(|&b| graph.has_edge(a, b)));
        if !linked {
            return Err(Error::Embedding(format!("no edge connects the two chains of function spin {i}")));
        }
        chains[i].extend_from_slice(extra);
    }
    let mut sites = bipartite.coupler_sites.clone();
    for (&pair, &site) in &clique.coupler_sites {
        if sites.insert(pair, site).is_some() {
            return Err(Error::Embedding(format!("pair {pair:?} is sited twice")));
        }
    }
    Ok(Embedding { n: bipartite.n, graph, chains, coupler_sites: sites })
}

/// Nonlinearity block on the left, clique block immediately to its right.
/// Every function chain runs along a block row, so it meets the clique
/// chain of the same spin through one horizontal coupler.
pub fn embed_composite(n: usize) -> Result<Embedding> {
    if !n.is_multiple_of(2) {
        return Err(Error::OddVariables(n));
    }
    if n < 2 {
        return Err(Error::VariableCount(n));
    }
    let side = bipartite_block(n);
    let graph = ChimeraGraph::new(side, 2 * side, 4)?;
    let bip = embed_bipartite_on(n, graph, CellOrigin::default())?;
    let clique = embed_clique_on(1 << n, graph, CellOrigin { row: 0, col: side })?;
    compose_embeddings(&bip, &clique)
}

/// Physical Ising model on a Chimera graph, with the embedding kept for
/// decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalModel {
    pub model: IsingModel,
    pub chain_strength: f64,
    pub embedding: Embedding,
}

impl PhysicalModel {
    pub fn graph(&self) -> &ChimeraGraph {
        self.embedding.graph()
    }

    pub fn chain_edge_count(&self) -> usize {
        self.embedding.chain_edges().iter().map(Vec::len).sum()
    }

    /// Energy contributed by intact chains: `chain_strength × chain edges`.
    pub fn aligned_chain_energy(&self) -> f64 {
        self.chain_strength * self.chain_edge_count() as f64
    }

    pub fn write_json<W: Write>(&self, mut w: W, embedding_ref: &str) -> Result<()> {
        let file = PhysicalModelFile {
            model: self.model.to_file(),
            chain_strength: self.chain_strength,
            embedding: embedding_ref.to_string(),
        };
        serde_json::to_writer(&mut w, &file)?;
        writeln!(w)?;
        Ok(())
    }
}

/// Physical model record: the model interchange fields plus the chain
/// strength and a reference (path) to the embedding file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalModelFile {
    #[serde(flatten)]
    pub model: crate::ising::ModelFile,
    pub chain_strength: f64,
    pub embedding: String,
}

/// Lowers a logical model: each coupler on its site, every intra-chain edge
/// at `chain_strength`, biases split evenly along chains.
pub fn apply_embedding(logical: &IsingModel, embedding: &Embedding, chain_strength: f64) -> Result<PhysicalModel> {
    if chain_strength >= 0.0 || !chain_strength.is_finite() {
        return Err(Error::InvalidParameter(format!("chain strength must be negative, got {chain_strength}")));
    }
    if logical.num_spins() > embedding.chains.len() {
        return Err(Error::Embedding(format!(
            "model has {} spins but the embedding only {} chains",
            logical.num_spins(),
            embedding.chains.len()
        )));
    }
    let graph = embedding.graph;
    let mut phys = IsingModel::new(graph.num_qubits());
    phys.set_offset(logical.offset());
    for (&i, &h) in logical.linear() {
        let chain = &embedding.chains[i];
        for &q in chain {
            phys.add_linear(q, h / chain.len() as f64)?;
        }
    }
    for (&(i, j), &v) in logical.couplers() {
        let (a, b) = embedding.site(i, j).ok_or_else(|| Error::Embedding(format!("logical coupler ({i}, {j}) has no site")))?;
        if !graph.has_edge(a, b) {
            return Err(Error::Embedding(format!("site ({a}, {b}) of coupler ({i}, {j}) is not a graph edge")));
        }
        phys.add_coupler(a, b, v)?;
    }
    for edges in embedding.chain_edges() {
        for (a, b) in edges {
            phys.add_coupler(a, b, chain_strength)?;
        }
    }
    Ok(PhysicalModel { model: phys, chain_strength, embedding: embedding.clone() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    QubitOutOfRange { chain: usize, qubit: usize },
    SharedQubit { qubit: usize, chains: (usize, usize) },
    EmptyChain { chain: usize },
    DisconnectedChain { chain: usize },
    MissingChain { spin: usize },
    UncoveredCoupler { i: usize, j: usize },
    SiteNotAnEdge { i: usize, j: usize, qa: usize, qb: usize },
    SiteOutsideChains { i: usize, j: usize, qa: usize, qb: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn connected(graph: &ChimeraGraph, chain: &[usize]) -> bool {
    let members: BTreeSet<usize> = chain.iter().copied().collect();
    let Some(&start) = chain.first() else { return false };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(q) = queue.pop_front() {
        for nb in graph.neighbors(q) {
            if members.contains(&nb) && seen.insert(nb) {
                queue.push_back(nb);
            }
        }
    }
    seen.len() == members.len()
}

/// Checks chain disjointness, chain connectivity and coupler coverage.
pub fn validate_embedding(embedding: &Embedding, graph: &ChimeraGraph, logical: &IsingModel) -> ValidationReport {
    let mut violations = Vec::new();
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (c, chain) in embedding.chains.iter().enumerate() {
        if chain.is_empty() {
            violations.push(Violation::EmptyChain { chain: c });
            continue;
        }
        let mut in_range = true;
        for &q in chain {
            if !graph.contains(q) {
                violations.push(Violation::QubitOutOfRange { chain: c, qubit: q });
                in_range = false;
                continue;
            }
            if let Some(&other) = owner.get(&q) {
                violations.push(Violation::SharedQubit { qubit: q, chains: (other, c) });
            } else {
                owner.insert(q, c);
            }
        }
        if in_range && !connected(graph, chain) {
            violations.push(Violation::DisconnectedChain { chain: c });
        }
    }
    for spin in embedding.chains.len()..logical.num_spins() {
        violations.push(Violation::MissingChain { spin });
    }
    for &(i, j) in logical.couplers().keys() {
        match embedding.site(i, j) {
            None => violations.push(Violation::UncoveredCoupler { i, j }),
            Some((qa, qb)) => {
                let inside = |chain: usize, q: usize| embedding.chains.get(chain).is_some_and(|c| c.contains(&q));
                if !graph.has_edge(qa, qb) {
                    violations.push(Violation::SiteNotAnEdge { i, j, qa, qb });
                } else if !inside(i, qa) || !inside(j, qb) {
                    violations.push(Violation::SiteOutsideChains { i, j, qa, qb });
                }
            }
        }
    }
    ValidationReport { violations }
}
