//! Weak CRLCC: rate-1/12 encoder and the local corrector built from the
//! green-node and α-goodness testers.

use rand::Rng;

use crate::bits::{BitStr, Bits};
use crate::codeword::{Layout, ReceivedWord, Region};
use crate::error::{param, Error, Result};
use crate::expander_graph::{build_local_expander, LocalExpanderDag};
use crate::hashing::{label_graph, label_node, HashSeed, Label};
use crate::inner_ecc::{Ecc, Rate};
use crate::query::{Color, ColorOracle, Decision, QueryLog, Verdict};

pub const MAGIC: &[u8; 4] = b"CRW1";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct WeakConfig {
    pub k_prime: usize,
    pub ell: usize,
    pub delta: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub graph_seed: u64,
}

impl Default for WeakConfig {
    fn default() -> Self {
        WeakConfig { k_prime: 16, ell: 256, delta: 0.01, alpha: 0.5, epsilon: 0.5, graph_seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakCodeParams {
    pub k: usize,
    pub ell: usize,
    pub k_prime: usize,
    pub delta: f64,
    pub alpha: f64,
    pub n: usize,
    pub block_bits: usize,
    pub epsilon: f64,
    pub graph_seed: u64,
}

pub struct WeakCode {
    params: WeakCodeParams,
    graph: LocalExpanderDag,
    ecc: Ecc,
    seed: HashSeed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakCodeword {
    pub bits: Bits,
    pub labels: Vec<Label>,
    pub layout: Layout,
}

impl WeakCodeword {
    pub fn block(&self, j: usize) -> &BitStr {
        &self.bits[self.layout.range(j)]
    }
}

impl WeakCode {
    pub fn new(cfg: &WeakConfig, seed: HashSeed) -> Result<WeakCode> {
        if cfg.k_prime < 2 {
            return param("k' must be at least 2");
        }
        let graph = build_local_expander(cfg.k_prime, cfg.delta, cfg.graph_seed)?;
        WeakCode::with_graph(cfg, graph, seed)
    }

    /// Uses a prebuilt graph on k' nodes (building is the slow part).
    pub fn with_graph(cfg: &WeakConfig, graph: LocalExpanderDag, seed: HashSeed) -> Result<WeakCode> {
        if graph.node_count() != cfg.k_prime {
            return param(format!("graph has {} nodes, k' = {}", graph.node_count(), cfg.k_prime));
        }
        if !(cfg.alpha > 0.0 && cfg.alpha < 0.75) {
            return param(format!("alpha {} outside (0, 3/4)", cfg.alpha));
        }
        if cfg.epsilon <= 0.0 {
            return param("epsilon must be positive");
        }
        let ecc = Ecc::new(cfg.ell, Rate::new(1, 4))?;
        let block_bits = ecc.block_bits();
        let k = cfg.k_prime * cfg.ell;
        let params = WeakCodeParams {
            k,
            ell: cfg.ell,
            k_prime: cfg.k_prime,
            delta: cfg.delta,
            alpha: cfg.alpha,
            n: 3 * cfg.k_prime * block_bits,
            block_bits,
            epsilon: cfg.epsilon,
            graph_seed: cfg.graph_seed,
        };
        Ok(WeakCode { params, graph, ecc, seed })
    }

    pub fn params(&self) -> &WeakCodeParams {
        &self.params
    }

    pub fn graph(&self) -> &LocalExpanderDag {
        &self.graph
    }

    pub fn ecc(&self) -> &Ecc {
        &self.ecc
    }

    pub fn seed(&self) -> &HashSeed {
        &self.seed
    }

    pub fn layout(&self) -> Layout {
        Layout {
            units: self.params.k_prime,
            message_block_bits: self.params.block_bits,
            label_block_bits: self.params.block_bits,
        }
    }

    /// Adversary budget Δ_J·k/4 in bits.
    pub fn budget(&self) -> usize {
        (self.ecc.params().decode_radius * self.params.k as f64 / 4.0).floor() as usize
    }

    pub fn encode(&self, x: &BitStr) -> Result<WeakCodeword> {
        let p = &self.params;
        if x.len() != p.k {
            return Err(Error::Length { expected: p.k, got: x.len() });
        }
        let chunks: Vec<Bits> = x.chunks(p.ell).map(|c| c.to_bitvec()).collect();
        let labels = label_graph(&self.graph, &self.seed, &chunks, p.ell, p.ell)?;
        let mut bits = Bits::with_capacity(p.n);
        for c in &chunks {
            bits.extend_from_bitslice(&self.ecc.encode(c)?);
        }
        for l in &labels {
            bits.extend_from_bitslice(&self.ecc.encode(l.bits())?);
        }
        let last = self.ecc.encode(labels[p.k_prime - 1].bits())?;
        for _ in 0..p.k_prime {
            bits.extend_from_bitslice(&last);
        }
        Ok(WeakCodeword { bits, labels, layout: self.layout() })
    }

    pub fn received<'a>(&'a self, w: &'a BitStr) -> Result<WeakWord<'a>> {
        let word = ReceivedWord::new(w, self.layout(), &self.ecc, &self.ecc)?;
        let colors = (0..self.params.k_prime).map(|_| std::sync::OnceLock::new()).collect();
        Ok(WeakWord { code: self, word, colors })
    }

    /// First bit index handled by Dec1: the start of block 2k'.
    pub fn dec1_threshold(&self) -> usize {
        8 * self.params.k - 4 * self.params.ell + 1
    }

    /// Samples per interval in IsGood: ⌈log₂(k')^{1+ε}⌉.
    pub fn is_good_samples(&self) -> usize {
        tester_samples(self.params.k_prime, self.params.epsilon)
    }

    /// Dec1 samples: max(32, ⌈log₂³ k'⌉), capped at max(32, k').
    pub fn dec1_samples(&self) -> usize {
        let kp = self.params.k_prime;
        let raw = (kp as f64).log2().powi(3).ceil() as usize;
        raw.max(32).min(kp.max(32))
    }
}

pub(crate) fn tester_samples(units: usize, epsilon: f64) -> usize {
    ((units as f64).log2().powf(1.0 + epsilon).ceil() as usize).max(1)
}

/// IsGood over any color source: reject if v is red or if, at some scale
/// 2^p, the sampled red fraction of [v-2^p+1, v] or [v, v+2^p-1] (clipped to
/// [1, units]) exceeds 3α/8.
pub fn is_good_with<C, R>(colors: &C, v: usize, alpha: f64, samples: usize, rng: &mut R, log: &mut QueryLog) -> Decision
where
    C: ColorOracle + ?Sized,
    R: Rng + ?Sized,
{
    let n = colors.units();
    if colors.color(v, log).is_red() {
        return Decision::Reject;
    }
    let scales = (usize::BITS - (n - 1).leading_zeros()).max(1);
    let limit = 3.0 * alpha / 8.0;
    for p in 1..=scales {
        let w = 1usize << p;
        let windows = [(v.saturating_sub(w - 1).max(1), v), (v, (v + w - 1).min(n))];
        for (lo, hi) in windows {
            let reds = (0..samples).filter(|_| colors.color(rng.gen_range(lo..=hi), log).is_red()).count();
            if reds as f64 / samples as f64 > limit {
                return Decision::Reject;
            }
        }
    }
    Decision::Accept
}

/// A received word under the weak code, with per-word memoized decodes and
/// node colors. Shareable across threads; each decoder call brings its own
/// RNG and query log.
pub struct WeakWord<'a> {
    code: &'a WeakCode,
    word: ReceivedWord<'a>,
    colors: Vec<std::sync::OnceLock<Color>>,
}

impl<'a> WeakWord<'a> {
    pub fn code(&self) -> &WeakCode {
        self.code
    }

    pub fn word(&self) -> &ReceivedWord<'a> {
        &self.word
    }

    fn charge_green(&self, v: usize, own_label: bool, log: &mut QueryLog) {
        let kp = self.code.params.k_prime;
        let b = self.code.params.block_bits;
        log.read_block(v, b);
        if own_label {
            log.read_block(kp + v, b);
        }
        for &p in self.code.graph.parents_of(v) {
            log.read_block(kp + p as usize, b);
        }
    }

    fn green_against(&self, v: usize, label: Option<&BitStr>) -> Color {
        let kp = self.code.params.k_prime;
        let Some(x) = self.word.decoded(v) else { return Color::Red };
        let Some(label) = label else { return Color::Red };
        let mut parents = Vec::new();
        for &p in self.code.graph.parents_of(v) {
            match self.word.decoded(kp + p as usize) {
                Some(l) => parents.push(l.as_bitslice()),
                None => return Color::Red,
            }
        }
        let h = label_node(&self.code.seed, self.code.params.ell, x, parents);
        Color::from_green(h.bits() == label)
    }

    /// IsGreen: ECCD of blocks v, k'+v and every parent's label block
    /// succeeds and the decoded label equals the hash replay.
    pub fn is_green(&self, v: usize, log: &mut QueryLog) -> Color {
        self.charge_green(v, true, log);
        *self.colors[v - 1].get_or_init(|| {
            let kp = self.code.params.k_prime;
            self.green_against(v, self.word.decoded(kp + v).map(|l| l.as_bitslice()))
        })
    }

    pub fn is_good<R: Rng + ?Sized>(&self, v: usize, rng: &mut R, log: &mut QueryLog) -> Decision {
        let view = LabelOverride { word: self, last: None, last_color: Default::default() };
        is_good_with(&view, v, self.code.params.alpha, self.code.is_good_samples(), rng, log)
    }

    /// Plurality decode of sampled repetition blocks 2k'..=3k': the
    /// reconstructed ℓ_{k'}.
    pub fn reconstruct_last_label<R: Rng + ?Sized>(&self, rng: &mut R, log: &mut QueryLog) -> Option<Bits> {
        let kp = self.code.params.k_prime;
        self.word.plurality(2 * kp, 3 * kp, self.code.dec1_samples(), rng, log)
    }

    pub fn dec1<R: Rng + ?Sized>(&self, i: usize, rng: &mut R, log: &mut QueryLog) -> Verdict {
        match self.reconstruct_last_label(rng, log) {
            Some(label) => {
                let block = self.code.ecc.encode(&label).expect("label length");
                Verdict::Bit(block[self.word.layout().offset_in_block(i)])
            }
            None => Verdict::Bottom,
        }
    }

    /// Runs IsGood on k' (against the reconstructed last label) and on v.
    fn gate<R: Rng + ?Sized>(&self, v: usize, rng: &mut R, log: &mut QueryLog) -> bool {
        let Some(last) = self.reconstruct_last_label(rng, log) else { return false };
        let view = LabelOverride { word: self, last: Some(&last), last_color: Default::default() };
        let p = &self.code.params;
        let samples = self.code.is_good_samples();
        is_good_with(&view, p.k_prime, p.alpha, samples, rng, log) == Decision::Accept
            && is_good_with(&view, v, p.alpha, samples, rng, log) == Decision::Accept
    }

    pub fn dec2<R: Rng + ?Sized>(&self, i: usize, rng: &mut R, log: &mut QueryLog) -> Verdict {
        let kp = self.code.params.k_prime;
        let j = self.word.layout().block_of(i);
        let v = match j % kp {
            0 => kp,
            r => r,
        };
        if !self.gate(v, rng, log) {
            return Verdict::Bottom;
        }
        match self.word.reencoded(j) {
            Some(block) => Verdict::Bit(block[self.word.layout().offset_in_block(i)]),
            None => Verdict::Bottom,
        }
    }

    /// Local correction of codeword bit i (1-based).
    pub fn decode<R: Rng + ?Sized>(&self, i: usize, rng: &mut R, log: &mut QueryLog) -> Result<Verdict> {
        if i == 0 || i > self.code.params.n {
            return param(format!("bit index {i} outside [1, {}]", self.code.params.n));
        }
        Ok(if i >= self.code.dec1_threshold() { self.dec1(i, rng, log) } else { self.dec2(i, rng, log) })
    }

    /// Local decoding of message bit i (1-based): gate on node ⌈i/ℓ⌉, then
    /// return the bit of ECCD of its message block.
    pub fn decode_message<R: Rng + ?Sized>(&self, i: usize, rng: &mut R, log: &mut QueryLog) -> Result<Verdict> {
        let p = &self.code.params;
        if i == 0 || i > p.k {
            return param(format!("message index {i} outside [1, {}]", p.k));
        }
        let v = (i - 1) / p.ell + 1;
        if !self.gate(v, rng, log) {
            return Ok(Verdict::Bottom);
        }
        Ok(match self.word.decoded(v) {
            Some(x) => Verdict::Bit(x[(i - 1) % p.ell]),
            None => Verdict::Bottom,
        })
    }

    pub fn region_of(&self, i: usize) -> Region {
        let l = self.word.layout();
        l.region(l.block_of(i))
    }
}

/// Node colors of a weak word, optionally judging node k' against a
/// reconstructed label instead of block 2k'.
struct LabelOverride<'w, 'a> {
    word: &'w WeakWord<'a>,
    last: Option<&'w Bits>,
    /// Color of k' under `last`, hashed once per view.
    last_color: std::sync::OnceLock<Color>,
}

impl ColorOracle for LabelOverride<'_, '_> {
    fn units(&self) -> usize {
        self.word.code.params.k_prime
    }

    fn color(&self, v: usize, log: &mut QueryLog) -> Color {
        match self.last {
            Some(last) if v == self.units() => {
                self.word.charge_green(v, false, log);
                *self.last_color.get_or_init(|| self.word.green_against(v, Some(last)))
            }
            _ => self.word.is_green(v, log),
        }
    }
}

pub fn weak_encode(code: &WeakCode, x: &BitStr) -> Result<WeakCodeword> {
    code.encode(x)
}

/// One-shot correction of bit i with a fresh query log.
pub fn weak_decode<R: Rng + ?Sized>(code: &WeakCode, w: &BitStr, i: usize, rng: &mut R) -> Result<(Verdict, QueryLog)> {
    let word = code.received(w)?;
    let mut log = QueryLog::new();
    let v = word.decode(i, rng, &mut log)?;
    Ok((v, log))
}

pub fn weak_decode_message<R: Rng + ?Sized>(code: &WeakCode, w: &BitStr, i: usize, rng: &mut R) -> Result<(Verdict, QueryLog)> {
    let word = code.received(w)?;
    let mut log = QueryLog::new();
    let v = word.decode_message(i, rng, &mut log)?;
    Ok((v, log))
}

/// Header fields of a `CRW1` file.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakHeader {
    pub k: u64,
    pub ell: u32,
    pub delta: f64,
    pub alpha: f64,
    pub graph_seed: u64,
    pub hash_seed: [u8; 32],
}

impl WeakHeader {
    pub fn of(code: &WeakCode) -> WeakHeader {
        let p = &code.params;
        WeakHeader {
            k: p.k as u64,
            ell: p.ell as u32,
            delta: p.delta,
            alpha: p.alpha,
            graph_seed: p.graph_seed,
            hash_seed: code.seed.key(),
        }
    }

    pub fn config(&self) -> Result<WeakConfig> {
        let ell = self.ell as usize;
        if ell == 0 || self.k % self.ell as u64 != 0 {
            return Err(Error::Format(format!("k={} not a multiple of ell={}", self.k, self.ell)));
        }
        Ok(WeakConfig {
            k_prime: (self.k / self.ell as u64) as usize,
            ell,
            delta: self.delta,
            alpha: self.alpha,
            epsilon: WeakConfig::default().epsilon,
            graph_seed: self.graph_seed,
        })
    }

    pub fn seed(&self) -> HashSeed {
        HashSeed::from_bytes(&self.hash_seed, 256).expect("32-byte seed")
    }
}

pub fn write_file(header: &WeakHeader, bits: &BitStr) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&header.k.to_le_bytes());
    out.extend_from_slice(&header.ell.to_le_bytes());
    out.extend_from_slice(&header.delta.to_le_bytes());
    out.extend_from_slice(&header.alpha.to_le_bytes());
    out.extend_from_slice(&header.graph_seed.to_le_bytes());
    out.extend_from_slice(&header.hash_seed);
    out.extend_from_slice(&crate::bits::to_bytes(bits));
    out
}

/// Parses a `CRW1` file; the bit count follows from k and ell (n = 12k at
/// the default rate).
pub fn read_file(bytes: &[u8]) -> Result<(WeakHeader, Bits)> {
    let mut r = crate::bits::Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not a CRW1 file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let header = WeakHeader {
        k: r.u64()?,
        ell: r.u32()?,
        delta: r.f64()?,
        alpha: r.f64()?,
        graph_seed: r.u64()?,
        hash_seed: r.take(32)?.try_into().expect("32 bytes"),
    };
    let n = header
        .k
        .checked_mul(12)
        .ok_or_else(|| Error::Format("k too large".into()))? as usize;
    let body = r.rest();
    if body.len() != n.div_ceil(8) {
        return Err(Error::Format(format!("body has {} bytes, expected {}", body.len(), n.div_ceil(8))));
    }
    Ok((header, crate::bits::from_bytes(body, n)))
}
