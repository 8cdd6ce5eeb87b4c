//! Seeded hash H(s, ·) and recursive DAG labeling.

use rand::{rngs::OsRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::bits::{from_bytes, to_bytes, Bits, BitStr};
use crate::error::{param, Result};
use crate::expander_graph::LocalExpanderDag;

/// Domain tag separating labeling hashes from any other use of the seed.
const LABEL_TAG: u8 = 0x4c;

pub const DEFAULT_ELL: usize = 256;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HashSeed {
    bytes: Vec<u8>,
    lambda: u32,
}

impl HashSeed {
    pub fn from_bytes(bytes: &[u8], lambda: u32) -> Result<HashSeed> {
        if bytes.len() < 16 || bytes.len() > 32 {
            return param(format!("seed length {} outside 16..=32 bytes", bytes.len()));
        }
        Ok(HashSeed { bytes: bytes.to_vec(), lambda })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    /// The 32-byte key actually prefixed to hash inputs (seed zero-padded), so
    /// that the fixed-width serialized form hashes identically.
    pub fn key(&self) -> [u8; 32] {
        let mut k = [0u8; 32];
        k[..self.bytes.len()].copy_from_slice(&self.bytes);
        k
    }
}

/// Gen(1^λ) from the operating system RNG.
pub fn gen(lambda: u32) -> Result<HashSeed> {
    gen_with_rng(lambda, &mut OsRng)
}

/// Gen(1^λ) driven by an explicit RNG (test mode).
pub fn gen_with_rng<R: RngCore + ?Sized>(lambda: u32, rng: &mut R) -> Result<HashSeed> {
    if lambda != 128 && lambda != 256 {
        return param(format!("unsupported lambda {lambda}"));
    }
    let mut bytes = vec![0u8; lambda as usize / 8];
    rng.fill_bytes(&mut bytes);
    Ok(HashSeed { bytes, lambda })
}

pub fn gen_seeded(lambda: u32, rng_seed: u64) -> Result<HashSeed> {
    gen_with_rng(lambda, &mut ChaCha20Rng::seed_from_u64(rng_seed))
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Label {
    bits: Bits,
}

impl Label {
    pub fn from_bits(bits: Bits) -> Label {
        Label { bits }
    }

    pub fn bits(&self) -> &BitStr {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// H(s, data) truncated to `ell` bits; lengths above 256 extend SHA-256 in
/// counter mode.
pub fn hash_bits(s: &HashSeed, data: &[u8], ell: usize) -> Label {
    let key = s.key();
    let mut out = Vec::with_capacity(ell.div_ceil(8));
    if ell <= 256 {
        let mut h = Sha256::new();
        h.update(key);
        h.update([LABEL_TAG]);
        h.update(data);
        out.extend_from_slice(&h.finalize());
    } else {
        let mut ctr = 0u32;
        while out.len() * 8 < ell {
            let mut h = Sha256::new();
            h.update(key);
            h.update([LABEL_TAG]);
            h.update(ctr.to_le_bytes());
            h.update(data);
            out.extend_from_slice(&h.finalize());
            ctr += 1;
        }
    }
    Label { bits: from_bytes(&out, ell) }
}

pub fn hash(s: &HashSeed, data: &[u8]) -> Label {
    hash_bits(s, data, DEFAULT_ELL)
}

/// Hash input x_v ∘ ℓ_{v_1} ∘ … ∘ ℓ_{v_d}.
pub fn label_input<'a>(x: &BitStr, parents: impl IntoIterator<Item = &'a BitStr>) -> Vec<u8> {
    let mut all = x.to_bitvec();
    for p in parents {
        all.extend_from_bitslice(p);
    }
    to_bytes(&all)
}

pub fn label_node<'a>(
    s: &HashSeed,
    ell: usize,
    x: &BitStr,
    parents: impl IntoIterator<Item = &'a BitStr>,
) -> Label {
    hash_bits(s, &label_input(x, parents), ell)
}

/// ℓ_v = H(s, x_v ∘ parent labels in ascending order), in topological order.
pub fn label_graph(g: &LocalExpanderDag, s: &HashSeed, x: &[Bits], chunk_bits: usize, ell: usize) -> Result<Vec<Label>> {
    if x.len() != g.node_count() {
        return param(format!("{} chunks for {} nodes", x.len(), g.node_count()));
    }
    label_dag(g.node_count(), |v| g.parents_of(v), s, x, chunk_bits, ell)
}

/// Labeling over any DAG given by a 1-based parent function whose parents
/// precede their children.
pub fn label_dag<'p, F>(n: usize, parents: F, s: &HashSeed, x: &[Bits], chunk_bits: usize, ell: usize) -> Result<Vec<Label>>
where
    F: Fn(usize) -> &'p [u32],
{
    if x.len() != n {
        return param(format!("{} chunks for {} nodes", x.len(), n));
    }
    if let Some(c) = x.iter().find(|c| c.len() != chunk_bits) {
        return param(format!("chunk of {} bits, expected {chunk_bits}", c.len()));
    }
    let mut labels: Vec<Label> = Vec::with_capacity(n);
    for v in 1..=n {
        let ps = parents(v);
        let lab = label_node(s, ell, &x[v - 1], ps.iter().map(|&p| labels[p as usize - 1].bits()));
        labels.push(lab);
    }
    Ok(labels)
}
