//! Strong CRLCC: degree reduction of a δ-local expander into chains of m
//! nodes, the grouped encoder, and the expansion-testing local corrector.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::Rng;

use crate::bits::{BitStr, Bits};
use crate::codeword::{Layout, ReceivedWord, Region};
use crate::error::{param, Error, Result};
use crate::expander_graph::{build_local_expander, Direction, LocalExpanderDag};
use crate::hashing::{label_dag, label_node, HashSeed, Label};
use crate::inner_ecc::{Ecc, Rate};
use crate::query::{Color, Decision, QueryLog, Verdict};
use crate::weak_crlcc::tester_samples;

pub const MAGIC: &[u8; 4] = b"CRS1";
pub const VERSION: u32 = 1;

/// G₀ with every meta-node u expanded into the chain u_1..u_m. Node u_j of G
/// has index (u-1)·m + j.
#[derive(Clone, Debug, PartialEq)]
pub struct MetaGraph {
    meta: LocalExpanderDag,
    m: usize,
    parents: Vec<Vec<u32>>,
    children: Vec<Vec<u32>>,
    /// For each meta-edge (u, v) in lexicographic order, the concrete edge
    /// (u_m, v_j) as node indices.
    meta_edges: Vec<((usize, usize), (usize, usize))>,
    receiver: HashMap<(usize, usize), usize>,
}

pub fn reduce_degree(g0: LocalExpanderDag) -> Result<MetaGraph> {
    let m = g0.max_indegree().max(g0.max_outdegree()) + 1;
    reduce_degree_with(g0, m)
}

/// ReduceDegree with an explicit chain length m ≥ indeg(G₀) + 1.
pub fn reduce_degree_with(g0: LocalExpanderDag, m: usize) -> Result<MetaGraph> {
    if m < 2 || m < g0.max_indegree() + 1 {
        return param(format!("chain length {m} below indeg(G0)+1 = {}", g0.max_indegree() + 1));
    }
    let t = g0.node_count();
    let id = |u: usize, j: usize| (u - 1) * m + j;
    let mut parents: Vec<Vec<u32>> = vec![Vec::new(); t * m];
    for u in 1..=t {
        for j in 1..m {
            parents[id(u, j + 1) - 1].push(id(u, j) as u32);
            if j + 1 != m {
                parents[id(u, m) - 1].push(id(u, j) as u32);
            }
        }
    }
    let mut meta_edges = Vec::new();
    let mut receiver = HashMap::new();
    for (u, v) in g0.edges() {
        let Some(j) = (1..m).find(|&j| parents[id(v, j) - 1].len() <= 1) else {
            return Err(Error::Internal(format!("no free slot in meta-node {v}")));
        };
        parents[id(v, j) - 1].push(id(u, m) as u32);
        meta_edges.push(((u, v), (id(u, m), id(v, j))));
        receiver.insert((u, v), j);
    }
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); t * m];
    for (x, ps) in parents.iter_mut().enumerate() {
        ps.sort_unstable();
        for &p in ps.iter() {
            children[p as usize - 1].push(x as u32 + 1);
        }
    }
    Ok(MetaGraph { meta: g0, m, parents, children, meta_edges, receiver })
}

impl MetaGraph {
    pub fn meta(&self) -> &LocalExpanderDag {
        &self.meta
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> usize {
        self.meta.node_count()
    }

    pub fn node_count(&self) -> usize {
        self.parents.len()
    }

    pub fn node(&self, u: usize, j: usize) -> usize {
        (u - 1) * self.m + j
    }

    /// (meta-node, position in chain) of node x.
    pub fn split(&self, x: usize) -> (usize, usize) {
        ((x - 1) / self.m + 1, (x - 1) % self.m + 1)
    }

    pub fn parents_of(&self, x: usize) -> &[u32] {
        &self.parents[x - 1]
    }

    pub fn children_of(&self, x: usize) -> &[u32] {
        &self.children[x - 1]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (x, cs) in self.children.iter().enumerate() {
            out.extend(cs.iter().map(|&c| (x + 1, c as usize)));
        }
        out
    }

    pub fn meta_edges(&self) -> &[((usize, usize), (usize, usize))] {
        &self.meta_edges
    }

    /// j such that meta-edge (u, v) became (u_m, v_j).
    pub fn receiver(&self, u: usize, v: usize) -> Option<usize> {
        self.receiver.get(&(u, v)).copied()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrongConfig {
    pub t: usize,
    pub ell: usize,
    pub beta: usize,
    pub rate: Rate,
    pub delta: f64,
    /// Defaults to δ/(10·d_δ).
    pub alpha: Option<f64>,
    /// Defaults to 1600·d_δ.
    pub kappa: Option<u32>,
    pub epsilon: f64,
    pub graph_seed: u64,
}

impl Default for StrongConfig {
    fn default() -> Self {
        StrongConfig {
            t: 16,
            ell: 256,
            beta: 1,
            rate: Rate::new(1, 4),
            delta: 0.05,
            alpha: None,
            kappa: None,
            epsilon: 0.5,
            graph_seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrongCodeParams {
    pub k: usize,
    pub ell: usize,
    pub beta: usize,
    pub rate: Rate,
    pub m: usize,
    pub t: usize,
    pub delta: f64,
    pub alpha: f64,
    pub kappa: u32,
    pub d_delta: usize,
    pub n: usize,
    pub epsilon: f64,
    pub graph_seed: u64,
}

impl StrongCodeParams {
    /// Whether α and κ sit in the ranges the analysis assumes.
    pub fn in_theorem_regime(&self) -> bool {
        let d = self.d_delta as f64;
        self.delta < 1.0 / 16.0
            && self.alpha >= self.delta / (20.0 * d) - 1e-12
            && self.alpha <= self.delta / (10.0 * d) + 1e-12
            && self.kappa as f64 >= 1600.0 * d
    }
}

pub struct StrongCode {
    params: StrongCodeParams,
    graph: MetaGraph,
    t_ecc: Ecc,
    u_ecc: Ecc,
    seed: HashSeed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrongCodeword {
    pub bits: Bits,
    pub labels: Vec<Label>,
    pub layout: Layout,
}

impl StrongCodeword {
    pub fn block(&self, j: usize) -> &BitStr {
        &self.bits[self.layout.range(j)]
    }
}

impl StrongCode {
    pub fn new(cfg: &StrongConfig, seed: HashSeed) -> Result<StrongCode> {
        if cfg.t < 2 {
            return param("t must be at least 2");
        }
        let g0 = build_local_expander(cfg.t, cfg.delta, cfg.graph_seed)?;
        StrongCode::with_graph(cfg, reduce_degree(g0)?, seed)
    }

    pub fn with_graph(cfg: &StrongConfig, graph: MetaGraph, seed: HashSeed) -> Result<StrongCode> {
        if graph.t() != cfg.t {
            return param(format!("meta-graph has {} nodes, t = {}", graph.t(), cfg.t));
        }
        if !(cfg.delta > 0.0 && cfg.delta < 1.0 / 16.0) {
            return param(format!("delta {} outside (0, 1/16)", cfg.delta));
        }
        if cfg.beta == 0 || cfg.epsilon <= 0.0 {
            return param("beta and epsilon must be positive");
        }
        let m = graph.m();
        let t_ecc = Ecc::new(cfg.beta * m * cfg.ell, cfg.rate)?;
        let u_ecc = Ecc::new(m * cfg.ell, cfg.rate)?;
        let d_delta = graph.meta().measured_d_delta().max(1);
        let alpha = cfg.alpha.unwrap_or(cfg.delta / (10.0 * d_delta as f64));
        let kappa = cfg.kappa.unwrap_or(1600 * d_delta as u32);
        if alpha <= 0.0 || kappa == 0 {
            return param("alpha and kappa must be positive");
        }
        let n = cfg.t * (t_ecc.block_bits() + 2 * u_ecc.block_bits());
        let params = StrongCodeParams {
            k: cfg.t * cfg.beta * m * cfg.ell,
            ell: cfg.ell,
            beta: cfg.beta,
            rate: cfg.rate,
            m,
            t: cfg.t,
            delta: cfg.delta,
            alpha,
            kappa,
            d_delta,
            n,
            epsilon: cfg.epsilon,
            graph_seed: cfg.graph_seed,
        };
        Ok(StrongCode { params, graph, t_ecc, u_ecc, seed })
    }

    pub fn params(&self) -> &StrongCodeParams {
        &self.params
    }

    pub fn graph(&self) -> &MetaGraph {
        &self.graph
    }

    pub fn message_ecc(&self) -> &Ecc {
        &self.t_ecc
    }

    pub fn label_ecc(&self) -> &Ecc {
        &self.u_ecc
    }

    pub fn seed(&self) -> &HashSeed {
        &self.seed
    }

    pub fn layout(&self) -> Layout {
        Layout {
            units: self.params.t,
            message_block_bits: self.t_ecc.block_bits(),
            label_block_bits: self.u_ecc.block_bits(),
        }
    }

    /// Δ_J (the smaller of the two block codes) as a fraction.
    pub fn decode_radius(&self) -> f64 {
        self.t_ecc.params().decode_radius.min(self.u_ecc.params().decode_radius)
    }

    /// Adversary budget Δ_J·k/κ in bits.
    pub fn budget(&self) -> usize {
        (self.decode_radius() * self.params.k as f64 / self.params.kappa as f64).floor() as usize
    }

    pub fn ecc_for(&self, j: usize) -> &Ecc {
        match self.layout().region(j) {
            Region::Message => &self.t_ecc,
            _ => &self.u_ecc,
        }
    }

    pub fn encode(&self, x: &BitStr) -> Result<StrongCodeword> {
        let p = &self.params;
        if x.len() != p.k {
            return Err(Error::Length { expected: p.k, got: x.len() });
        }
        let chunk = p.beta * p.ell;
        let chunks: Vec<Bits> = x.chunks(chunk).map(|c| c.to_bitvec()).collect();
        let labels = label_dag(self.graph.node_count(), |v| self.graph.parents_of(v), &self.seed, &chunks, chunk, p.ell)?;
        let mut bits = Bits::with_capacity(p.n);
        for group in x.chunks(chunk * p.m) {
            bits.extend_from_bitslice(&self.t_ecc.encode(group)?);
        }
        let mut last = Bits::new();
        for group in labels.chunks(p.m) {
            let mut u = Bits::with_capacity(p.m * p.ell);
            for l in group {
                u.extend_from_bitslice(l.bits());
            }
            last = self.u_ecc.encode(&u)?;
            bits.extend_from_bitslice(&last);
        }
        for _ in 0..p.t {
            bits.extend_from_bitslice(&last);
        }
        Ok(StrongCodeword { bits, labels, layout: self.layout() })
    }

    /// Meta-node of bit i: the block's own meta-node in the message and label
    /// regions, t in the repetition region.
    pub fn metanode(&self, i: usize) -> usize {
        let l = self.layout();
        let j = l.block_of(i);
        match l.region(j) {
            Region::Message => j,
            Region::Label => j - self.params.t,
            Region::Repetition => self.params.t,
        }
    }

    pub fn received<'a>(&'a self, w: &'a BitStr) -> Result<StrongWord<'a>> {
        let word = ReceivedWord::new(w, self.layout(), &self.t_ecc, &self.u_ecc)?;
        Ok(StrongWord {
            code: self,
            word,
            nodes: (0..self.graph.node_count()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn tester_samples(&self) -> usize {
        tester_samples(self.params.t, self.params.epsilon)
    }

    /// Repetition samples for Dec_=t: ⌈log₂(n)^{1+ε}⌉.
    pub fn repetition_samples(&self) -> usize {
        tester_samples(self.params.n, self.params.epsilon)
    }
}

/// Colors of G₀ edges from any source.
pub trait EdgeColorOracle {
    fn meta(&self) -> &LocalExpanderDag;
    fn edge_color(&self, u: usize, v: usize, log: &mut QueryLog) -> Color;
}

/// Edge colors fixed in advance: listed edges are red.
pub struct PlantedEdges<'a> {
    pub graph: &'a LocalExpanderDag,
    pub red: &'a std::collections::HashSet<(usize, usize)>,
}

impl EdgeColorOracle for PlantedEdges<'_> {
    fn meta(&self) -> &LocalExpanderDag {
        self.graph
    }

    fn edge_color(&self, u: usize, v: usize, _log: &mut QueryLog) -> Color {
        Color::from_green(!self.red.contains(&(u, v)))
    }
}

/// IsLocalExpander: at every scale 2^p and in both directions, sample edges of
/// the interval expander with replacement, scale the red fraction by the
/// interval's edge count, and reject if the estimate exceeds (5/2)·δ·2^p.
/// Out-of-range interval pairs are skipped.
pub fn is_local_expander_with<C, R>(colors: &C, u: usize, delta: f64, samples: usize, rng: &mut R, log: &mut QueryLog) -> Decision
where
    C: EdgeColorOracle + ?Sized,
    R: Rng + ?Sized,
{
    let g = colors.meta();
    let t = g.node_count();
    let mut p = 1u32;
    while 2usize << p <= 2 * t {
        for dir in [Direction::Descendant, Direction::Ancestor] {
            let Ok(h) = g.interval_expander_dir(u, p, dir) else { continue };
            let reds = (0..samples)
                .filter(|_| {
                    let (a, b) = h.sample(rng);
                    colors.edge_color(a, b, log).is_red()
                })
                .count();
            let estimate = reds as f64 / samples as f64 * h.edges.len() as f64;
            if estimate > 2.5 * delta * (1u64 << p) as f64 {
                return Decision::Reject;
            }
        }
        p += 1;
    }
    Decision::Accept
}

/// A received word under the strong code with memoized block decodes and
/// node colors.
pub struct StrongWord<'a> {
    code: &'a StrongCode,
    word: ReceivedWord<'a>,
    nodes: Vec<OnceLock<Color>>,
}

/// Blocks charged once per tester call.
#[derive(Default)]
struct Reads(Vec<usize>);

impl Reads {
    fn add(&mut self, j: usize) {
        if !self.0.contains(&j) {
            self.0.push(j);
        }
    }

    fn charge(self, word: &ReceivedWord<'_>, log: &mut QueryLog) {
        for j in self.0 {
            log.read_block(j, word.layout().block_len(j));
        }
    }
}

impl<'a> StrongWord<'a> {
    pub fn code(&self) -> &StrongCode {
        self.code
    }

    pub fn word(&self) -> &ReceivedWord<'a> {
        &self.word
    }

    fn label_of(&self, x: usize) -> Option<&BitStr> {
        let (u, j) = self.code.graph.split(x);
        let ell = self.code.params.ell;
        self.word.decoded(self.code.params.t + u).map(|b| &b[(j - 1) * ell..j * ell])
    }

    fn node_reads(&self, x: usize, reads: &mut Reads) {
        let t = self.code.params.t;
        let (u, _) = self.code.graph.split(x);
        reads.add(u);
        reads.add(t + u);
        for &p in self.code.graph.parents_of(x) {
            reads.add(t + self.code.graph.split(p as usize).0);
        }
    }

    fn node_color_uncharged(&self, x: usize) -> Color {
        *self.nodes[x - 1].get_or_init(|| {
            let p = &self.code.params;
            let (u, j) = self.code.graph.split(x);
            let chunk = p.beta * p.ell;
            let Some(t_block) = self.word.decoded(u) else { return Color::Red };
            let Some(own) = self.label_of(x) else { return Color::Red };
            let mut parents = Vec::new();
            for &q in self.code.graph.parents_of(x) {
                match self.label_of(q as usize) {
                    Some(l) => parents.push(l),
                    None => return Color::Red,
                }
            }
            let h = label_node(&self.code.seed, p.ell, &t_block[(j - 1) * chunk..j * chunk], parents);
            Color::from_green(h.bits() == own)
        })
    }

    /// Color of node x of G (1-based), charging its data, label and parent
    /// label blocks.
    pub fn node_color(&self, x: usize, log: &mut QueryLog) -> Color {
        let mut reads = Reads::default();
        self.node_reads(x, &mut reads);
        reads.charge(&self.word, log);
        self.node_color_uncharged(x)
    }

    /// IsGreenMeta: the final node is green and at least 2/3 of the chain is.
    pub fn is_green_meta(&self, u: usize, log: &mut QueryLog) -> Color {
        let g = &self.code.graph;
        let m = g.m();
        let mut reads = Reads::default();
        for j in 1..=m {
            self.node_reads(g.node(u, j), &mut reads);
        }
        reads.charge(&self.word, log);
        let greens = (1..=m).filter(|&j| !self.node_color_uncharged(g.node(u, j)).is_red()).count();
        let final_green = !self.node_color_uncharged(g.node(u, m)).is_red();
        Color::from_green(final_green && 3 * greens >= 2 * m)
    }

    /// IsGreenEdge: both concrete endpoints u_m and v_u are green.
    pub fn is_green_edge(&self, u: usize, v: usize, log: &mut QueryLog) -> Color {
        let g = &self.code.graph;
        let Some(j) = g.receiver(u, v) else { return Color::Red };
        let (a, b) = (g.node(u, g.m()), g.node(v, j));
        let mut reads = Reads::default();
        self.node_reads(a, &mut reads);
        self.node_reads(b, &mut reads);
        reads.charge(&self.word, log);
        Color::from_green(!self.node_color_uncharged(a).is_red() && !self.node_color_uncharged(b).is_red())
    }

    pub fn is_local_expander<R: Rng + ?Sized>(&self, u: usize, rng: &mut R, log: &mut QueryLog) -> Decision {
        is_local_expander_with(self, u, self.code.params.delta, self.code.tester_samples(), rng, log)
    }

    /// Plurality decode of sampled blocks 2t..=3t: the reconstructed U_t.
    pub fn reconstruct_last<R: Rng + ?Sized>(&self, rng: &mut R, log: &mut QueryLog) -> Option<Bits> {
        let t = self.code.params.t;
        self.word.plurality(2 * t, 3 * t, self.code.repetition_samples(), rng, log)
    }

    pub fn dec_eq_t<R: Rng + ?Sized>(&self, i: usize, rng: &mut R, log: &mut QueryLog) -> Verdict {
        match self.reconstruct_last(rng, log) {
            Some(u_t) => {
                let block = self.code.u_ecc.encode(&u_t).expect("label group length");
                Verdict::Bit(block[self.word.layout().offset_in_block(i)])
            }
            None => Verdict::Bottom,
        }
    }

    /// Gate for meta-node t's own data: every node of t must be green against
    /// the reconstructed U_t, and t must pass the expansion test with it.
    fn gate_last<R: Rng + ?Sized>(&self, rng: &mut R, log: &mut QueryLog) -> bool {
        let Some(u_t) = self.reconstruct_last(rng, log) else { return false };
        let shadow = Shadow { word: self, last: &u_t };
        shadow.all_green(log) && shadow.expander(rng, log) == Decision::Accept
    }

    fn gate_lt<R: Rng + ?Sized>(&self, u: usize, rng: &mut R, log: &mut QueryLog) -> bool {
        if self.is_local_expander(u, rng, log) == Decision::Reject {
            return false;
        }
        if 4 * u < 3 * self.code.params.t {
            return true;
        }
        let Some(u_t) = self.reconstruct_last(rng, log) else { return false };
        Shadow { word: self, last: &u_t }.expander(rng, log) == Decision::Accept
    }

    /// Dec_<t for bits whose meta-node is below t.
    pub fn dec_lt_t<R: Rng + ?Sized>(&self, i: usize, rng: &mut R, log: &mut QueryLog) -> Verdict {
        let u = self.code.metanode(i);
        if !self.gate_lt(u, rng, log) {
            return Verdict::Bottom;
        }
        self.reencoded_bit(i)
    }

    fn reencoded_bit(&self, i: usize) -> Verdict {
        let l = self.word.layout();
        match self.word.reencoded(l.block_of(i)) {
            Some(b) => Verdict::Bit(b[l.offset_in_block(i)]),
            None => Verdict::Bottom,
        }
    }

    pub fn decode<R: Rng + ?Sized>(&self, i: usize, rng: &mut R, log: &mut QueryLog) -> Result<Verdict> {
        let p = &self.code.params;
        if i == 0 || i > p.n {
            return param(format!("bit index {i} outside [1, {}]", p.n));
        }
        let j = self.word.layout().block_of(i);
        Ok(if j >= 2 * p.t {
            self.dec_eq_t(i, rng, log)
        } else if j == p.t {
            if self.gate_last(rng, log) {
                self.reencoded_bit(i)
            } else {
                Verdict::Bottom
            }
        } else {
            self.dec_lt_t(i, rng, log)
        })
    }

    /// Message bit i (1-based): gate on its meta-node, then return the bit of
    /// ECCD of the grouped message block.
    pub fn decode_message<R: Rng + ?Sized>(&self, i: usize, rng: &mut R, log: &mut QueryLog) -> Result<Verdict> {
        let p = &self.code.params;
        if i == 0 || i > p.k {
            return param(format!("message index {i} outside [1, {}]", p.k));
        }
        let group = p.beta * p.m * p.ell;
        let u = (i - 1) / group + 1;
        let ok = if u == p.t { self.gate_last(rng, log) } else { self.gate_lt(u, rng, log) };
        if !ok {
            return Ok(Verdict::Bottom);
        }
        Ok(match self.word.decoded(u) {
            Some(x) => Verdict::Bit(x[(i - 1) % group]),
            None => Verdict::Bottom,
        })
    }
}

impl EdgeColorOracle for StrongWord<'_> {
    fn meta(&self) -> &LocalExpanderDag {
        self.code.graph.meta()
    }

    fn edge_color(&self, u: usize, v: usize, log: &mut QueryLog) -> Color {
        self.is_green_edge(u, v, log)
    }
}

/// A strong word seen with U_t replaced by a reconstructed block.
struct Shadow<'w, 'a, 'l> {
    word: &'w StrongWord<'a>,
    last: &'l Bits,
}

impl Shadow<'_, '_, '_> {
    /// Nodes that touch meta-node t are recomputed against the substituted
    /// block; the rest reuse the word's memo.
    fn node_green(&self, x: usize) -> bool {
        let w = self.word;
        let p = &w.code.params;
        let g = &w.code.graph;
        let ell = p.ell;
        let chunk = p.beta * ell;
        let label = |y: usize| -> Option<&BitStr> {
            let (u, j) = g.split(y);
            let b = if u == p.t { Some(self.last.as_bitslice()) } else { w.word.decoded(p.t + u).map(|b| b.as_bitslice()) };
            b.map(|b| &b[(j - 1) * ell..j * ell])
        };
        let (u, j) = g.split(x);
        if u != p.t && g.parents_of(x).iter().all(|&q| g.split(q as usize).0 != p.t) {
            return !w.node_color_uncharged(x).is_red();
        }
        let Some(t_block) = w.word.decoded(u) else { return false };
        let Some(own) = label(x) else { return false };
        let mut parents = Vec::new();
        for &q in g.parents_of(x) {
            match label(q as usize) {
                Some(l) => parents.push(l),
                None => return false,
            }
        }
        label_node(&w.code.seed, ell, &t_block[(j - 1) * chunk..j * chunk], parents).bits() == own
    }

    fn charge_nodes(&self, xs: &[usize], log: &mut QueryLog) {
        let t = self.word.code.params.t;
        let g = &self.word.code.graph;
        let mut reads = Reads::default();
        for &x in xs {
            let (u, _) = g.split(x);
            reads.add(u);
            if u != t {
                reads.add(t + u);
            }
            for &q in g.parents_of(x) {
                let pu = g.split(q as usize).0;
                if pu != t {
                    reads.add(t + pu);
                }
            }
        }
        reads.charge(&self.word.word, log);
    }

    fn all_green(&self, log: &mut QueryLog) -> bool {
        let g = &self.word.code.graph;
        let t = self.word.code.params.t;
        let xs: Vec<usize> = (1..=g.m()).map(|j| g.node(t, j)).collect();
        self.charge_nodes(&xs, log);
        xs.iter().all(|&x| self.node_green(x))
    }

    fn expander<R: Rng + ?Sized>(&self, rng: &mut R, log: &mut QueryLog) -> Decision {
        let p = &self.word.code.params;
        is_local_expander_with(self, p.t, p.delta, self.word.code.tester_samples(), rng, log)
    }
}

impl EdgeColorOracle for Shadow<'_, '_, '_> {
    fn meta(&self) -> &LocalExpanderDag {
        self.word.code.graph.meta()
    }

    fn edge_color(&self, u: usize, v: usize, log: &mut QueryLog) -> Color {
        let g = &self.word.code.graph;
        let Some(j) = g.receiver(u, v) else { return Color::Red };
        let (a, b) = (g.node(u, g.m()), g.node(v, j));
        self.charge_nodes(&[a, b], log);
        Color::from_green(self.node_green(a) && self.node_green(b))
    }
}

pub fn strong_encode(code: &StrongCode, x: &BitStr) -> Result<StrongCodeword> {
    code.encode(x)
}

pub fn strong_decode<R: Rng + ?Sized>(code: &StrongCode, w: &BitStr, i: usize, rng: &mut R) -> Result<(Verdict, QueryLog)> {
    let word = code.received(w)?;
    let mut log = QueryLog::new();
    let v = word.decode(i, rng, &mut log)?;
    Ok((v, log))
}

pub fn strong_decode_message<R: Rng + ?Sized>(code: &StrongCode, w: &BitStr, i: usize, rng: &mut R) -> Result<(Verdict, QueryLog)> {
    let word = code.received(w)?;
    let mut log = QueryLog::new();
    let v = word.decode_message(i, rng, &mut log)?;
    Ok((v, log))
}

/// Header fields of a `CRS1` file.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongHeader {
    pub k: u64,
    pub ell: u32,
    pub m: u32,
    pub t: u64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rate: f64,
    pub kappa: u32,
    pub graph_seed: u64,
    pub hash_seed: [u8; 32],
}

impl StrongHeader {
    pub fn of(code: &StrongCode) -> StrongHeader {
        let p = &code.params;
        StrongHeader {
            k: p.k as u64,
            ell: p.ell as u32,
            m: p.m as u32,
            t: p.t as u64,
            delta: p.delta,
            alpha: p.alpha,
            beta: p.beta as f64,
            rate: *p.rate.numer() as f64 / *p.rate.denom() as f64,
            kappa: p.kappa,
            graph_seed: p.graph_seed,
            hash_seed: code.seed.key(),
        }
    }

    pub fn config(&self) -> Result<StrongConfig> {
        let fmt = |m: String| Error::Format(m);
        if self.beta.fract() != 0.0 || self.beta < 1.0 {
            return Err(fmt(format!("beta {} is not a positive integer", self.beta)));
        }
        let rate = rate_from_f64(self.rate).ok_or_else(|| fmt(format!("rate {} is not a small fraction", self.rate)))?;
        Ok(StrongConfig {
            t: self.t as usize,
            ell: self.ell as usize,
            beta: self.beta as usize,
            rate,
            delta: self.delta,
            alpha: Some(self.alpha),
            kappa: Some(self.kappa),
            epsilon: StrongConfig::default().epsilon,
            graph_seed: self.graph_seed,
        })
    }

    pub fn seed(&self) -> HashSeed {
        HashSeed::from_bytes(&self.hash_seed, 256).expect("32-byte seed")
    }

    /// Rebuilds the code and checks it against the recorded k and m.
    pub fn code(&self) -> Result<StrongCode> {
        let code = StrongCode::new(&self.config()?, self.seed())?;
        if code.params.m != self.m as usize || code.params.k as u64 != self.k {
            return Err(Error::Format(format!(
                "rebuilt code has m={}, k={}; header says m={}, k={}",
                code.params.m, code.params.k, self.m, self.k
            )));
        }
        Ok(code)
    }
}

fn rate_from_f64(r: f64) -> Option<Rate> {
    (1..=1024u64).find_map(|d| {
        let n = (r * d as f64).round();
        ((n / d as f64 - r).abs() < 1e-12 && n >= 1.0).then(|| Rate::new(n as u64, d))
    })
}

pub fn write_file(header: &StrongHeader, bits: &BitStr) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&header.k.to_le_bytes());
    out.extend_from_slice(&header.ell.to_le_bytes());
    out.extend_from_slice(&header.m.to_le_bytes());
    out.extend_from_slice(&header.t.to_le_bytes());
    for f in [header.delta, header.alpha, header.beta, header.rate] {
        out.extend_from_slice(&f.to_le_bytes());
    }
    out.extend_from_slice(&header.kappa.to_le_bytes());
    out.extend_from_slice(&header.graph_seed.to_le_bytes());
    out.extend_from_slice(&header.hash_seed);
    out.extend_from_slice(&crate::bits::to_bytes(bits));
    out
}

/// Parses a `CRS1` file. The bit count is k·(β+2)/(β·R); the body must hold
/// exactly that many bits.
pub fn read_file(bytes: &[u8]) -> Result<(StrongHeader, Bits)> {
    let mut r = crate::bits::Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not a CRS1 file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let header = StrongHeader {
        k: r.u64()?,
        ell: r.u32()?,
        m: r.u32()?,
        t: r.u64()?,
        delta: r.f64()?,
        alpha: r.f64()?,
        beta: r.f64()?,
        rate: r.f64()?,
        kappa: r.u32()?,
        graph_seed: r.u64()?,
        hash_seed: r.take(32)?.try_into().expect("32 bytes"),
    };
    let cfg = header.config()?;
    let group = header.t as u128 * header.m as u128 * header.ell as u128;
    let (num, den) = (*cfg.rate.numer() as u128, *cfg.rate.denom() as u128);
    let bits = group * (cfg.beta as u128 + 2) * den;
    if bits % num != 0 || bits / num > usize::MAX as u128 / 2 {
        return Err(Error::Format("inconsistent header sizes".into()));
    }
    let n = (bits / num) as usize;
    let body = r.rest();
    if body.len() != n.div_ceil(8) {
        return Err(Error::Format(format!("body has {} bytes, expected {}", body.len(), n.div_ceil(8))));
    }
    Ok((header, crate::bits::from_bytes(body, n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::random_bits;
    use crate::hashing::gen_seeded;
    use crate::oracles::{oracle_strong_colors, oracle_tampered_set};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn small(t: usize, beta: usize, rate: Rate) -> StrongCode {
        let cfg = StrongConfig { t, ell: 32, beta, rate, ..StrongConfig::default() };
        StrongCode::new(&cfg, gen_seeded(128, 3).unwrap()).unwrap()
    }

    fn forge(w: &mut Bits, code: &StrongCode, j: usize, rng: &mut ChaCha8Rng) {
        let ecc = code.ecc_for(j);
        let r = code.layout().range(j);
        w[r].copy_from_bitslice(&ecc.encode(&random_bits(rng, ecc.message_bits())).unwrap());
    }

    #[test]
    fn two_node_path_reduces_by_hand() {
        let g0 = LocalExpanderDag::from_edges(2, 0.05, 1, 0, &[(1, 2)]).unwrap();
        let g = reduce_degree(g0).unwrap();
        assert_eq!(g.m(), 2);
        assert_eq!(g.edges(), vec![(1, 2), (2, 3), (3, 4)]);
        assert_eq!(g.meta_edges(), &[((1, 2), (2, 3))]);
        assert_eq!(g.receiver(1, 2), Some(1));
    }

    #[test]
    fn reduced_graph_shape() {
        let g0 = build_local_expander(40, 0.05, 2).unwrap();
        let meta_edges = g0.edges();
        let g = reduce_degree(g0).unwrap();
        let m = g.m();
        for x in 1..=g.node_count() {
            let (u, j) = g.split(x);
            assert_eq!(g.node(u, j), x);
            if j < m {
                assert!(g.parents_of(x).len() <= 2, "node {u}_{j}");
            }
            if j > 1 {
                assert!(g.parents_of(x).contains(&(g.node(u, j - 1) as u32)));
                assert!(g.parents_of(g.node(u, m)).contains(&(g.node(u, j - 1) as u32)));
            }
            assert!(g.parents_of(x).iter().all(|&p| (p as usize) < x));
        }
        let cross: Vec<(usize, usize)> = g
            .edges()
            .into_iter()
            .filter(|&(a, b)| g.split(a).0 != g.split(b).0)
            .collect();
        assert_eq!(cross.len(), meta_edges.len());
        for &((u, v), (a, b)) in g.meta_edges() {
            assert_eq!((g.split(a), g.split(b).0), ((u, m), v));
            assert!(cross.contains(&(a, b)));
        }
        let back: Vec<(usize, usize)> = g.meta_edges().iter().map(|e| e.0).collect();
        assert_eq!(back, meta_edges);
    }

    #[test]
    fn rates_are_exact() {
        for (beta, rate, expect) in [(1, Rate::new(1, 4), Rate::new(1, 12)), (4, Rate::new(1, 2), Rate::new(1, 3)), (8, Rate::new(1, 2), Rate::new(2, 5))] {
            let code = small(4, beta, rate);
            let p = code.params();
            assert_eq!(Rate::new(p.k as u64, p.n as u64), expect);
            assert_eq!(expect, rate * Rate::from_integer(beta as u64) / Rate::from_integer(beta as u64 + 2));
        }
    }

    #[test]
    fn metanode_map() {
        let code = small(8, 1, Rate::new(1, 4));
        let k = code.params().k;
        assert_eq!(code.metanode(1), 1);
        assert_eq!(code.metanode(4 * k), 8);
        assert_eq!(code.metanode(4 * k + 1), 1);
        assert_eq!(code.metanode(8 * k), 8);
        assert_eq!(code.metanode(8 * k + 1), 8);
        assert_eq!(code.metanode(code.params().n), 8);
    }

    #[test]
    fn honest_word_decodes_everywhere() {
        for (beta, rate) in [(1, Rate::new(1, 4)), (4, Rate::new(1, 2))] {
            let code = small(8, beta, rate);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let x = random_bits(&mut rng, code.params().k);
            let c = code.encode(&x).unwrap();
            let l = code.layout();
            for j in 2 * 8..=24 {
                assert_eq!(c.block(j), c.block(16));
            }
            let word = code.received(&c.bits).unwrap();
            for j in 1..=l.block_count() {
                let r = l.range(j);
                for i in [r.start + 1, r.end] {
                    let v = word.decode(i, &mut rng, &mut QueryLog::new()).unwrap();
                    assert_eq!(v, Verdict::Bit(c.bits[i - 1]), "block {j}");
                }
            }
            for i in [1, 2, code.params().k / 2, code.params().k] {
                let v = word.decode_message(i, &mut rng, &mut QueryLog::new()).unwrap();
                assert_eq!(v, Verdict::Bit(x[i - 1]));
            }
            let colors = oracle_strong_colors(&code, &c.bits).unwrap();
            assert_eq!(colors.red_meta_count(), 0);
            assert!(oracle_tampered_set(&code, &c.bits, &c.bits).unwrap().is_empty());
        }
    }

    #[test]
    fn tampered_label_block_reddens_meta_node() {
        let code = small(8, 1, Rate::new(1, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = code.encode(&random_bits(&mut rng, code.params().k)).unwrap();
        let mut w = c.bits.clone();
        forge(&mut w, &code, 8 + 3, &mut rng);
        assert_eq!(oracle_tampered_set(&code, &c.bits, &w).unwrap(), vec![3]);
        let colors = oracle_strong_colors(&code, &w).unwrap();
        assert!(colors.meta_red[2]);
        let word = code.received(&w).unwrap();
        for u in 1..=8 {
            assert_eq!(word.is_green_meta(u, &mut QueryLog::new()).is_red(), colors.meta_red[u - 1]);
        }
        // every outgoing meta-edge of 3 is red, since 3_m is red
        for &((a, b), _) in code.graph().meta_edges() {
            let red = word.is_green_edge(a, b, &mut QueryLog::new()).is_red();
            if a == 3 || b == 3 {
                assert!(red);
            }
            assert_eq!(red, colors.red_edges(&code).contains(&(a, b)));
        }
        let i = code.layout().range(3).start + 1;
        assert_eq!(word.decode(i, &mut rng, &mut QueryLog::new()).unwrap(), Verdict::Bottom);
    }

    #[test]
    fn two_thirds_rule_on_forged_sources() {
        let code = small(8, 1, Rate::new(1, 4));
        let m = code.params().m;
        let g = code.graph();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = code.encode(&random_bits(&mut rng, code.params().k)).unwrap();
        let mut w = c.bits.clone();
        // forge sources until more than m/3 receiving nodes of meta-node 8 break
        let mut hit = HashSet::new();
        for u in 1..8 {
            if 3 * hit.len() > m {
                break;
            }
            forge(&mut w, &code, 8 + u, &mut rng);
            hit.insert(g.receiver(u, 8).unwrap());
        }
        let colors = oracle_strong_colors(&code, &w).unwrap();
        assert!(!colors.node_red[g.node(8, m) - 1]);
        assert!(colors.meta_red[7]);
        let word = code.received(&w).unwrap();
        assert!(word.is_green_meta(8, &mut QueryLog::new()).is_red());
    }

    #[test]
    fn unrelated_corruption_keeps_edge_green() {
        let code = small(8, 1, Rate::new(1, 4));
        let g = code.graph();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = code.encode(&random_bits(&mut rng, code.params().k)).unwrap();
        let mut w = c.bits.clone();
        forge(&mut w, &code, 8 + 2, &mut rng);
        let word = code.received(&w).unwrap();
        let clean: Vec<(usize, usize)> = g
            .meta_edges()
            .iter()
            .filter(|&&((a, b), (_, y))| a != 2 && b != 2 && g.parents_of(y).iter().all(|&p| g.split(p as usize).0 != 2))
            .map(|e| e.0)
            .collect();
        assert!(!clean.is_empty());
        for (a, b) in clean {
            assert_eq!(word.is_green_edge(a, b, &mut QueryLog::new()), Color::Green);
        }
        assert_eq!(word.is_green_edge(2, 7, &mut QueryLog::new()), Color::Red);
    }

    #[test]
    fn expander_tester_extremes() {
        let g = build_local_expander(64, 0.05, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let none = HashSet::new();
        let planted = PlantedEdges { graph: &g, red: &none };
        for u in [1, 20, 64] {
            assert_eq!(is_local_expander_with(&planted, u, 0.05, 19, &mut rng, &mut QueryLog::new()), Decision::Accept);
        }
        let all: HashSet<_> = g.edges().into_iter().collect();
        let planted = PlantedEdges { graph: &g, red: &all };
        assert_eq!(is_local_expander_with(&planted, 20, 0.05, 19, &mut rng, &mut QueryLog::new()), Decision::Reject);
    }

    #[test]
    fn repetition_majority_survives_minority_forgery() {
        let code = small(16, 1, Rate::new(1, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = code.encode(&random_bits(&mut rng, code.params().k)).unwrap();
        let mut w = c.bits.clone();
        for j in 33..=34 {
            forge(&mut w, &code, j, &mut rng);
        }
        let word = code.received(&w).unwrap();
        let i = code.params().n - 3;
        for _ in 0..30 {
            assert_eq!(word.decode(i, &mut rng, &mut QueryLog::new()).unwrap(), Verdict::Bit(c.bits[i - 1]));
        }
    }

    #[test]
    fn file_round_trip() {
        let code = small(4, 1, Rate::new(1, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_bits(&mut rng, code.params().k);
        let c = code.encode(&x).unwrap();
        let h = StrongHeader::of(&code);
        let bytes = write_file(&h, &c.bits);
        let (h2, bits) = read_file(&bytes).unwrap();
        assert_eq!(h2, h);
        assert_eq!(bits, c.bits);
        let again = h2.code().unwrap();
        assert_eq!(again.encode(&x).unwrap().bits, c.bits);
        assert!(read_file(&bytes[..bytes.len() - 2]).is_err());
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let cfg = StrongConfig { t: 4, ell: 32, delta: 0.1, ..StrongConfig::default() };
        assert!(StrongCode::new(&cfg, gen_seeded(128, 1).unwrap()).is_err());
        let cfg = StrongConfig { t: 4, ell: 32, ..StrongConfig::default() };
        let code = StrongCode::new(&cfg, gen_seeded(128, 1).unwrap()).unwrap();
        assert!(code.params().in_theorem_regime());
        let cfg = StrongConfig { kappa: Some(4), ..cfg };
        let code = StrongCode::new(&cfg, gen_seeded(128, 1).unwrap()).unwrap();
        assert!(!code.params().in_theorem_regime());
    }
}
