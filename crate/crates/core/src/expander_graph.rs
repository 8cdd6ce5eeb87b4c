//! Randomized δ-local expander DAGs built from dyadic two-phase overlays of
//! random regular bipartite graphs on top of the path 1 → 2 → … → n.

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{param, Error, Result};
use crate::oracles::expander_masks;

/// Probe size used when a build calibrates its own overlay degree.
pub const DEFAULT_PROBE: usize = 12;
pub const CALIBRATION_TRIALS: usize = 50;
pub const MAX_DEGREE: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct LocalExpanderDag {
    n: usize,
    delta: f64,
    overlay_degree: usize,
    rng_seed: u64,
    parents: Vec<Vec<u32>>,
    children: Vec<Vec<u32>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Left = [u, u+2^p-1], right = [u+2^p, u+2^(p+1)-1].
    Descendant,
    /// Left = [u-2^p+1, u], right = [u-2^(p+1)+1, u-2^p]; edges run right → left.
    Ancestor,
}

/// Edges of G between two adjacent length-2^p intervals. `left` is the
/// interval containing the anchor node; edges are stored as (tail, head).
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalExpander {
    pub left: (usize, usize),
    pub right: (usize, usize),
    pub direction: Direction,
    pub edges: Vec<(usize, usize)>,
    pub max_indegree: usize,
}

impl IntervalExpander {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        self.edges[rng.gen_range(0..self.edges.len())]
    }
}

/// Random d-regular bipartite graph on [0, size) × [0, size) as the union of
/// `d` edge-disjoint random perfect matchings; complete when `d ≥ size`.
/// Each matching starts as a uniform permutation and conflicting positions
/// are repaired by random transpositions. Returns per-left neighbor lists.
pub(crate) fn random_bipartite<R: Rng + ?Sized>(size: usize, d: usize, rng: &mut R) -> Vec<Vec<usize>> {
    if d >= size {
        return vec![(0..size).collect(); size];
    }
    let mut used = vec![vec![false; size]; size];
    let mut adj = vec![Vec::with_capacity(d); size];
    let mut perm: Vec<usize> = (0..size).collect();
    for _ in 0..d {
        'restart: loop {
            perm.shuffle(rng);
            for _ in 0..64 * size {
                let bad: Vec<usize> = (0..size).filter(|&i| used[i][perm[i]]).collect();
                if bad.is_empty() {
                    break 'restart;
                }
                let i = bad[rng.gen_range(0..bad.len())];
                let j = rng.gen_range(0..size);
                if !used[i][perm[j]] && !used[j][perm[i]] {
                    perm.swap(i, j);
                }
            }
        }
        for (i, &j) in perm.iter().enumerate() {
            used[i][j] = true;
            adj[i].push(j);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

/// Interval pairs of side r ≤ 1/δ must be complete bipartite, so every edge
/// shorter than 2/δ is forced. A scale-2^p overlay hosts lengths in
/// (2^(p-1), 2^p]; it is made complete whenever it hosts a forced length.
pub fn forced_complete(delta: f64, size: usize) -> bool {
    delta * (size as f64) < 4.0
}

pub(crate) fn ceil_fraction(delta: f64, r: usize) -> usize {
    ((delta * r as f64 - 1e-9).ceil() as usize).max(1)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) || !delta.is_finite() {
        return param(format!("delta {delta} outside (0, 1)"));
    }
    Ok(())
}

/// Smallest per-overlay degree d such that `CALIBRATION_TRIALS` random
/// d-regular bipartite graphs on probe×probe nodes are all exact δ-expanders.
pub fn calibrate_degree(delta: f64, probe_size: usize, rng_seed: u64) -> Result<usize> {
    check_delta(delta)?;
    if probe_size == 0 || probe_size > crate::oracles::MAX_ORACLE_SIDE {
        return param(format!("probe size {probe_size} outside 1..={}", crate::oracles::MAX_ORACLE_SIDE));
    }
    let need = ceil_fraction(delta, probe_size);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0xca11_b8a7e);
    for d in 1..=MAX_DEGREE {
        let trials = if d >= probe_size { 1 } else { CALIBRATION_TRIALS };
        let ok = (0..trials).all(|_| {
            let adj = random_bipartite(probe_size, d, &mut rng);
            let masks: Vec<u32> = adj.iter().map(|ns| ns.iter().fold(0u32, |m, &j| m | 1 << j)).collect();
            expander_masks(&masks, probe_size, need)
        });
        if ok {
            return Ok(d);
        }
    }
    Err(Error::Calibration { delta, max: MAX_DEGREE })
}

/// Builds the graph with a degree calibrated at `DEFAULT_PROBE`.
pub fn build_local_expander(n: usize, delta: f64, rng_seed: u64) -> Result<LocalExpanderDag> {
    check_delta(delta)?;
    if delta >= 0.25 + 1e-12 {
        return param(format!("delta {delta} must be below 1/4"));
    }
    let d = calibrate_degree(delta, DEFAULT_PROBE, rng_seed)?;
    LocalExpanderDag::with_degree(n, delta, d, rng_seed)
}

impl LocalExpanderDag {
    pub fn with_degree(n: usize, delta: f64, overlay_degree: usize, rng_seed: u64) -> Result<LocalExpanderDag> {
        if n < 1 {
            return param("graph needs at least one node");
        }
        check_delta(delta)?;
        if overlay_degree == 0 {
            return param("overlay degree must be positive");
        }
        let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
        for v in 1..n {
            children[v - 1].push(v as u32 + 1);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut p = 1;
        while 2usize << p <= n {
            let size = 1usize << p;
            let degree = if forced_complete(delta, size) { size } else { overlay_degree };
            let mut starts = Vec::new();
            for offset in [0, size / 2] {
                let mut a = 1 + offset;
                while a + 2 * size - 1 <= n {
                    starts.push(a);
                    a += size;
                }
                // Mirror the head at the tail when n is not aligned.
                if n >= 2 * size + offset {
                    let a = n + 1 - 2 * size - offset;
                    if !starts.contains(&a) {
                        starts.push(a);
                    }
                }
            }
            for a in starts {
                let adj = random_bipartite(size, degree, &mut rng);
                for (i, ns) in adj.iter().enumerate() {
                    for &j in ns {
                        children[a + i - 1].push((a + size + j) as u32);
                    }
                }
            }
            p += 1;
        }
        let mut parents: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, cs) in children.iter_mut().enumerate() {
            cs.sort_unstable();
            cs.dedup();
            for &v in cs.iter() {
                parents[v as usize - 1].push(u as u32 + 1);
            }
        }
        Ok(LocalExpanderDag { n, delta, overlay_degree, rng_seed, parents, children })
    }

    /// Builds a graph from an explicit edge list (used when reading files).
    pub fn from_edges(n: usize, delta: f64, overlay_degree: usize, rng_seed: u64, edges: &[(usize, usize)]) -> Result<LocalExpanderDag> {
        let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == 0 || v > n || u >= v {
                return Err(Error::Format(format!("edge ({u},{v}) is not a forward edge in 1..={n}")));
            }
            children[u - 1].push(v as u32);
        }
        let mut parents: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, cs) in children.iter_mut().enumerate() {
            cs.sort_unstable();
            cs.dedup();
            for &v in cs.iter() {
                parents[v as usize - 1].push(u as u32 + 1);
            }
        }
        Ok(LocalExpanderDag { n, delta, overlay_degree, rng_seed, parents, children })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn overlay_degree(&self) -> usize {
        self.overlay_degree
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Parents of `v` in ascending order; panics when out of range.
    pub fn parents_of(&self, v: usize) -> &[u32] {
        &self.parents[v - 1]
    }

    pub fn children_of(&self, v: usize) -> &[u32] {
        &self.children[v - 1]
    }

    pub fn parents(&self, v: usize) -> Result<&[u32]> {
        self.check_node(v)?;
        Ok(self.parents_of(v))
    }

    pub fn children(&self, v: usize) -> Result<&[u32]> {
        self.check_node(v)?;
        Ok(self.children_of(v))
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v == 0 || v > self.n {
            return param(format!("node {v} outside 1..={}", self.n));
        }
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u >= 1 && u <= self.n && self.children[u - 1].binary_search(&(v as u32)).is_ok()
    }

    /// All edges in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(u, cs)| cs.iter().map(move |&v| (u + 1, v as usize)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn max_indegree(&self) -> usize {
        self.parents.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_outdegree(&self) -> usize {
        self.children.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Interval pair at scale 2^p around `u` in the given direction, or None
    /// when it leaves [1, n].
    pub fn interval_pair(&self, u: usize, p: u32, dir: Direction) -> Option<((usize, usize), (usize, usize))> {
        let size = 1usize.checked_shl(p)?;
        match dir {
            Direction::Descendant => {
                let end = u.checked_add(2 * size)?.checked_sub(1)?;
                (u >= 1 && end <= self.n).then_some(((u, u + size - 1), (u + size, end)))
            }
            Direction::Ancestor => {
                let start = (u + 1).checked_sub(2 * size)?;
                (start >= 1 && u <= self.n).then_some(((u + 1 - size, u), (start, u - size)))
            }
        }
    }

    pub fn interval_expander(&self, u: usize, p: u32) -> Result<IntervalExpander> {
        self.interval_expander_dir(u, p, Direction::Descendant)
    }

    pub fn interval_expander_dir(&self, u: usize, p: u32, dir: Direction) -> Result<IntervalExpander> {
        let Some((left, right)) = self.interval_pair(u, p, dir) else {
            return param(format!("interval pair at u={u}, p={p} leaves [1, {}]", self.n));
        };
        let (tails, heads) = match dir {
            Direction::Descendant => (left, right),
            Direction::Ancestor => (right, left),
        };
        let mut edges = Vec::new();
        let mut indeg = vec![0usize; heads.1 - heads.0 + 1];
        for t in tails.0..=tails.1 {
            for &h in self.children_of(t) {
                let h = h as usize;
                if h >= heads.0 && h <= heads.1 {
                    edges.push((t, h));
                    indeg[h - heads.0] += 1;
                }
            }
        }
        let max_indegree = indeg.into_iter().max().unwrap_or(0);
        Ok(IntervalExpander { left, right, direction: dir, edges, max_indegree })
    }

    /// d_δ: the largest head indegree over every in-range interval expander.
    pub fn measured_d_delta(&self) -> usize {
        let mut best = 0;
        let mut p = 0;
        while 2usize << p <= self.n {
            for u in 1..=self.n {
                if let Ok(h) = self.interval_expander(u, p) {
                    best = best.max(h.max_indegree);
                }
            }
            p += 1;
        }
        best
    }

    /// `CRLCC-DAG v1`: magic "CDAG", u32 version, u64 n, f64 delta, u32 degree,
    /// u64 seed, then (u64, u64) edges; little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(36 + 16 * self.edge_count());
        out.extend_from_slice(b"CDAG");
        out.extend_from_slice(&1u32.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&self.delta.to_le_bytes());
        out.extend_from_slice(&(self.overlay_degree as u32).to_le_bytes());
        out.extend_from_slice(&self.rng_seed.to_le_bytes());
        for (u, v) in self.edges() {
            out.extend_from_slice(&(u as u64).to_le_bytes());
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<LocalExpanderDag> {
        let fmt = |m: &str| Error::Format(m.to_string());
        if bytes.len() < 36 || &bytes[..4] != b"CDAG" {
            return Err(fmt("missing CDAG header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        if u32_at(4) != 1 {
            return Err(fmt("unsupported CDAG version"));
        }
        let n = u64_at(8) as usize;
        let delta = f64::from_bits(u64_at(16));
        let degree = u32_at(24) as usize;
        let seed = u64_at(28);
        let body = &bytes[36..];
        if body.len() % 16 != 0 {
            return Err(fmt("truncated edge list"));
        }
        let edges: Vec<(usize, usize)> = body
            .chunks(16)
            .map(|c| {
                (
                    u64::from_le_bytes(c[..8].try_into().unwrap()) as usize,
                    u64::from_le_bytes(c[8..].try_into().unwrap()) as usize,
                )
            })
            .collect();
        LocalExpanderDag::from_edges(n, delta, degree, seed, &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_nodes_have_backbone() {
        let g = build_local_expander(2, 0.1, 1).unwrap();
        assert_eq!(g.edges(), vec![(1, 2)]);
        assert!(g.parents(1).unwrap().is_empty());
        assert!(g.parents(3).is_err());
    }

    #[test]
    fn forward_edges_and_sorted_parents() {
        let g = build_local_expander(100, 0.2, 3).unwrap();
        for (u, v) in g.edges() {
            assert!(u < v);
        }
        for v in 1..=100 {
            assert!(g.parents_of(v).windows(2).all(|w| w[0] < w[1]));
            if v > 1 {
                assert!(g.parents_of(v).contains(&(v as u32 - 1)));
            }
        }
    }

    #[test]
    fn deterministic() {
        let a = build_local_expander(200, 0.2, 11).unwrap();
        let b = build_local_expander(200, 0.2, 11).unwrap();
        let c = build_local_expander(200, 0.2, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn overlays_are_regular() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (size, d) in [(16, 5), (12, 11), (64, 12), (4, 4)] {
            let adj = random_bipartite(size, d, &mut rng);
            assert!(adj.iter().all(|a| a.len() == d.min(size)));
            let mut indeg = vec![0; size];
            adj.iter().flatten().for_each(|&j| indeg[j] += 1);
            assert!(indeg.iter().all(|&c| c == d.min(size)));
        }
    }

    #[test]
    fn calibration_monotone_in_delta() {
        let loose = calibrate_degree(0.25, 12, 1).unwrap();
        let tight = calibrate_degree(0.01, 12, 1).unwrap();
        assert!(tight > loose, "{tight} vs {loose}");
        assert!(calibrate_degree(0.1, 30, 1).is_err());
    }

    #[test]
    fn interval_expander_contract() {
        let g = build_local_expander(64, 0.25, 7).unwrap();
        let h = g.interval_expander(1, 0).unwrap();
        assert_eq!(h.edges, vec![(1, 2)]);
        for u in 1..=33 {
            let h = g.interval_expander(u, 4).unwrap();
            assert!(h.edges.len() <= 16 * h.max_indegree);
            for &(a, b) in &h.edges {
                assert!(g.has_edge(a, b));
                assert!(a >= h.left.0 && a <= h.left.1 && b >= h.right.0 && b <= h.right.1);
            }
            let m = g.interval_expander_dir(u + 31, 4, Direction::Ancestor).unwrap();
            assert_eq!(m.left, (u + 16, u + 31));
            assert_eq!(m.right, (u, u + 15));
            assert_eq!(m.edges, h.edges);
        }
        assert!(g.interval_expander(40, 4).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let g = build_local_expander(50, 0.05, 9).unwrap();
        let back = LocalExpanderDag::from_bytes(&g.to_bytes()).unwrap();
        assert_eq!(g, back);
        assert!(LocalExpanderDag::from_bytes(b"XXXX").is_err());
    }
}

#[cfg(test)]
mod expansion {
    use super::*;
    use crate::oracles::verify_local_expansion;

    #[test]
    fn n64_quarter_is_local_expander_up_to_r12() {
        let g = build_local_expander(64, 0.25, 7).unwrap();
        let rep = verify_local_expansion(&g, 0.25, 12).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures);
    }

    #[test]
    fn small_graphs_certified_for_their_own_delta() {
        for (n, delta, seed) in [(128, 0.25, 1), (100, 0.2, 2), (128, 0.05, 3), (128, 0.01, 4), (96, 0.125, 5)] {
            let g = build_local_expander(n, delta, seed).unwrap();
            let rep = verify_local_expansion(&g, delta, 12).unwrap();
            assert!(rep.passed(), "n={n} delta={delta}: {:?}", &rep.failures[..rep.failures.len().min(5)]);
        }
    }

    #[test]
    fn one_half_probe_four() {
        // A single perfect matching on 4+4 is not a 1/2-expander (see the
        // oracle tests), so calibration must go beyond 1.
        let d = calibrate_degree(0.5, 4, 1).unwrap();
        assert!((2..=4).contains(&d));
    }

    #[test]
    fn indegree_grows_logarithmically() {
        let mut prev = None;
        for k in 10..=14u32 {
            let g = build_local_expander(1 << k, 0.01, 5).unwrap();
            let d = g.max_indegree() as f64;
            if let Some(p) = prev {
                let bound = (k as f64 / (k - 1) as f64) * 1.5;
                assert!(d / p <= bound, "2^{k}: {d} after {p}");
            }
            prev = Some(d);
        }
    }
}
