//! Exhaustive reference implementations used as ground truth: exact
//! δ-expansion by subset enumeration, exact α-goodness, reachability, and the
//! full-information color and tamper oracles for both codes.

use crate::bits::{BitStr, Bits};
use crate::error::{Error, Result};
use crate::expander_graph::{ceil_fraction, LocalExpanderDag};
use crate::hashing::label_node;
use crate::strong_crlcc::StrongCode;
use crate::weak_crlcc::WeakCode;

/// Largest interval side the subset-enumeration oracle accepts.
pub const MAX_ORACLE_SIDE: usize = 24;

/// `masks[i]` is the right-neighborhood of left vertex i as a bitmask over
/// `r` right vertices. True iff every `need`-subset X of the left side has
/// fewer than `need` right vertices outside N(X), i.e. every pair of
/// `need`-subsets is joined by an edge.
pub fn expander_masks(masks: &[u32], r: usize, need: usize) -> bool {
    fn rec(masks: &[u32], start: usize, left: usize, union: u32, r: usize, need: usize) -> bool {
        if union.count_ones() as usize > r - need {
            return true;
        }
        if left == 0 {
            return false;
        }
        for i in start..=masks.len() - left {
            if !rec(masks, i + 1, left - 1, union | masks[i], r, need) {
                return false;
            }
        }
        true
    }
    if need > r || need > masks.len() {
        return true;
    }
    rec(masks, 0, need, 0, r, need)
}

/// Exact δ-expander check of the bipartite graph induced by `edges` on the
/// equal-length intervals `a` and `b` (edge orientation ignored).
pub fn oracle_delta_expander(edges: &[(usize, usize)], a: (usize, usize), b: (usize, usize), delta: f64) -> Result<bool> {
    let r = a.1 + 1 - a.0;
    if b.1 + 1 - b.0 != r {
        return Err(Error::Param("intervals differ in length".into()));
    }
    if r > MAX_ORACLE_SIDE {
        return Err(Error::Refused(format!("interval side {r} exceeds {MAX_ORACLE_SIDE}")));
    }
    let inside = |x: usize, iv: (usize, usize)| x >= iv.0 && x <= iv.1;
    let mut masks = vec![0u32; r];
    for &(u, v) in edges {
        for (x, y) in [(u, v), (v, u)] {
            if inside(x, a) && inside(y, b) {
                masks[x - a.0] |= 1 << (y - b.0);
            }
        }
    }
    Ok(expander_masks(&masks, r, ceil_fraction(delta, r)))
}

fn pair_masks(g: &LocalExpanderDag, a: usize, b: usize, r: usize, keep: &dyn Fn(usize, usize) -> bool) -> Vec<u32> {
    (a..a + r)
        .map(|x| {
            g.children_of(x)
                .iter()
                .map(|&y| y as usize)
                .filter(|&y| y >= b && y < b + r && keep(x, y))
                .fold(0u32, |m, y| m | 1 << (y - b))
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct ExpansionReport {
    pub pairs_checked: usize,
    pub failures: Vec<(usize, usize)>,
}

impl ExpansionReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks every adjacent interval pair ([v, v+r-1], [v+r, v+2r-1]) for r ≤
/// `max_r`. Ancestor pairs around a node w are exactly the descendant pairs
/// starting at w-2r+1, so this covers both families of the local-expansion
/// definition. Failures are reported as (v, r).
pub fn verify_local_expansion(g: &LocalExpanderDag, delta: f64, max_r: usize) -> Result<ExpansionReport> {
    verify_local_expansion_with(g, delta, max_r, &|_, _| true)
}

/// As `verify_local_expansion`, restricted to the edges accepted by `keep`.
pub fn verify_local_expansion_with(
    g: &LocalExpanderDag,
    delta: f64,
    max_r: usize,
    keep: &dyn Fn(usize, usize) -> bool,
) -> Result<ExpansionReport> {
    if max_r > MAX_ORACLE_SIDE {
        return Err(Error::Refused(format!("r = {max_r} exceeds {MAX_ORACLE_SIDE}")));
    }
    let n = g.node_count();
    let mut report = ExpansionReport::default();
    for r in 1..=max_r {
        let need = ceil_fraction(delta, r);
        for v in 1..=n {
            if v + 2 * r - 1 > n {
                break;
            }
            report.pairs_checked += 1;
            if !expander_masks(&pair_masks(g, v, v + r, r, keep), r, need) {
                report.failures.push((v, r));
            }
        }
    }
    Ok(report)
}

/// Local expansion around a single node `u` for radii up to `max_r`, in
/// both directions, restricted to the edges accepted by `keep`.
pub fn local_expansion_around(
    g: &LocalExpanderDag,
    u: usize,
    delta: f64,
    max_r: usize,
    keep: &dyn Fn(usize, usize) -> bool,
) -> bool {
    let n = g.node_count();
    (1..=max_r.min(MAX_ORACLE_SIDE)).all(|r| {
        let need = ceil_fraction(delta, r);
        let desc = u + 2 * r - 1 > n || expander_masks(&pair_masks(g, u, u + r, r, keep), r, need);
        let anc = u < 2 * r || expander_masks(&pair_masks(g, u + 1 - 2 * r, u + 1 - r, r, keep), r, need);
        desc && anc
    })
}

/// α-good under S (`bad[v-1]`): v ∉ S and every interval [v-r+1, v] and
/// [v, v+r-1] inside [1, n] holds at most αr members of S.
pub fn oracle_alpha_good(bad: &[bool], v: usize, alpha: f64) -> bool {
    let n = bad.len();
    if bad[v - 1] {
        return false;
    }
    let tol = 1e-9;
    let mut count = 0usize;
    for r in 1..=v {
        count += bad[v - r] as usize;
        if count as f64 > alpha * r as f64 + tol {
            return false;
        }
    }
    count = 0;
    for r in 1..=(n - v + 1) {
        count += bad[v + r - 2] as usize;
        if count as f64 > alpha * r as f64 + tol {
            return false;
        }
    }
    true
}

/// Independent formulation over prefix sums: the window counts are
/// differences of cumulative counts.
pub fn oracle_alpha_good_windows(bad: &[bool], v: usize, alpha: f64) -> bool {
    let n = bad.len();
    let mut prefix = vec![0i64; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + bad[i] as i64;
    }
    if prefix[v] - prefix[v - 1] != 0 {
        return false;
    }
    let ok = |lo: usize, hi: usize| {
        let c = prefix[hi] - prefix[lo - 1];
        (c as f64) <= alpha * (hi + 1 - lo) as f64 + 1e-9
    };
    (1..=v).all(|lo| ok(lo, v)) && (v..=n).all(|hi| ok(v, hi))
}

pub fn alpha_good_set(bad: &[bool], alpha: f64) -> Vec<bool> {
    (1..=bad.len()).map(|v| oracle_alpha_good(bad, v, alpha)).collect()
}

/// Forward reachability from `u` over nodes 1..=n using `succ`, skipping
/// nodes marked in `removed`. Returns a 1-based membership vector (index 0
/// unused).
pub fn reachable_from<F, I>(n: usize, u: usize, removed: &[bool], succ: F) -> Vec<bool>
where
    F: Fn(usize) -> I,
    I: IntoIterator<Item = usize>,
{
    let mut seen = vec![false; n + 1];
    if removed.get(u - 1).copied().unwrap_or(false) {
        return seen;
    }
    let mut stack = vec![u];
    seen[u] = true;
    while let Some(x) = stack.pop() {
        for y in succ(x) {
            if !seen[y] && !removed.get(y - 1).copied().unwrap_or(false) {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

/// Pairs (u, v), u < v, both α-good under S, with no path u → v in G - S.
pub fn disconnected_good_pairs(g: &LocalExpanderDag, bad: &[bool], alpha: f64) -> Vec<(usize, usize)> {
    let n = g.node_count();
    let good = alpha_good_set(bad, alpha);
    let mut out = Vec::new();
    for u in 1..=n {
        if !good[u - 1] {
            continue;
        }
        let reach = reachable_from(n, u, bad, |x| g.children_of(x).iter().map(|&y| y as usize).collect::<Vec<_>>());
        for v in u + 1..=n {
            if good[v - 1] && !reach[v] {
                out.push((u, v));
            }
        }
    }
    out
}

/// Exact weak node colors by decoding every block and replaying every hash.
/// `red[v-1]` is true for red nodes.
pub fn oracle_green_set(code: &WeakCode, w: &BitStr) -> Result<Vec<bool>> {
    let p = code.params();
    if w.len() != p.n {
        return Err(Error::Length { expected: p.n, got: w.len() });
    }
    let b = p.block_bits;
    let blocks: Vec<Option<Bits>> = (0..2 * p.k_prime)
        .map(|j| code.ecc().decode(&w[j * b..(j + 1) * b]))
        .collect::<Result<_>>()?;
    let mut red = vec![false; p.k_prime];
    for v in 1..=p.k_prime {
        let label = &blocks[p.k_prime + v - 1];
        let parents: Option<Vec<&BitStr>> = code
            .graph()
            .parents_of(v)
            .iter()
            .map(|&u| blocks[p.k_prime + u as usize - 1].as_deref())
            .collect();
        red[v - 1] = match (&blocks[v - 1], label, parents) {
            (Some(x), Some(l), Some(ps)) => label_node(code.seed(), p.ell, x, ps).bits() != l.as_bitslice(),
            _ => true,
        };
    }
    Ok(red)
}

/// Exact strong colors: per node of G, per meta-node, and per meta-edge (in
/// the order of `MetaGraph::meta_edges`). `true` means red.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongColors {
    pub node_red: Vec<bool>,
    pub meta_red: Vec<bool>,
    pub edge_red: Vec<bool>,
}

impl StrongColors {
    pub fn red_meta_count(&self) -> usize {
        self.meta_red.iter().filter(|&&r| r).count()
    }

    /// Red meta-edges as (u, v) pairs.
    pub fn red_edges(&self, code: &StrongCode) -> std::collections::HashSet<(usize, usize)> {
        code.graph()
            .meta_edges()
            .iter()
            .zip(&self.edge_red)
            .filter(|(_, &r)| r)
            .map(|(e, _)| e.0)
            .collect()
    }
}

pub fn oracle_strong_colors(code: &StrongCode, w: &BitStr) -> Result<StrongColors> {
    let p = code.params();
    let layout = code.layout();
    if w.len() != layout.len() {
        return Err(Error::Length { expected: layout.len(), got: w.len() });
    }
    let g = code.graph();
    let decoded: Vec<Option<Bits>> = (1..=2 * p.t)
        .map(|j| code.ecc_for(j).decode(&w[layout.range(j)]))
        .collect::<Result<_>>()?;
    let chunk = p.beta * p.ell;
    let label = |x: usize| {
        let (u, j) = g.split(x);
        decoded[p.t + u - 1].as_ref().map(|b| &b[(j - 1) * p.ell..j * p.ell])
    };
    let node_red: Vec<bool> = (1..=g.node_count())
        .map(|x| {
            let (u, j) = g.split(x);
            let data = decoded[u - 1].as_ref().map(|b| &b[(j - 1) * chunk..j * chunk]);
            let parents: Option<Vec<&BitStr>> = g.parents_of(x).iter().map(|&q| label(q as usize)).collect();
            match (data, label(x), parents) {
                (Some(d), Some(l), Some(ps)) => label_node(code.seed(), p.ell, d, ps).bits() != l,
                _ => true,
            }
        })
        .collect();
    let meta_red = (1..=p.t)
        .map(|u| {
            let greens = (1..=p.m).filter(|&j| !node_red[g.node(u, j) - 1]).count();
            node_red[g.node(u, p.m) - 1] || 3 * greens < 2 * p.m
        })
        .collect();
    let edge_red = g.meta_edges().iter().map(|&(_, (a, b))| node_red[a - 1] || node_red[b - 1]).collect();
    Ok(StrongColors { node_red, meta_red, edge_red })
}

/// Meta-nodes owning a tampered block (ECC(ECCD(w_j)) ≠ c_j, decode
/// failures included). Repetition blocks belong to meta-node t.
pub fn oracle_tampered_set(code: &StrongCode, c: &BitStr, w: &BitStr) -> Result<Vec<usize>> {
    let layout = code.layout();
    if c.len() != layout.len() || w.len() != layout.len() {
        return Err(Error::Length { expected: layout.len(), got: w.len() });
    }
    let t = code.params().t;
    let mut out = Vec::new();
    for j in 1..=layout.block_count() {
        let r = layout.range(j);
        let tampered = code.ecc_for(j).reencode(&w[r.clone()])?.map_or(true, |b| b.as_bitslice() != &c[r]);
        let u = if j <= t { j } else if j <= 2 * t { j - t } else { t };
        if tampered && !out.contains(&u) {
            out.push(u);
        }
    }
    out.sort_unstable();
    Ok(out)
}
