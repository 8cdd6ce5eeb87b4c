//! Concatenated binary code: an outer systematic Reed-Solomon code whose
//! symbols are bytes (GF(2^8)) or byte pairs (GF(2^16)), each byte protected by
//! a short systematic binary inner code decoded by exhaustive nearest-codeword
//! search. Exact block lengths are reached by shortening the zero padding of
//! the message and puncturing trailing parity bits.
//!
//! The guaranteed decoding radius is computed from the layout: an outer symbol
//! can only be wrong if one of its inner words received at least half of its
//! (restricted) minimum distance in flips, and the outer decoder corrects any
//! `(n-k)/2` wrong symbols.

use std::sync::OnceLock;

use num_rational::Ratio;

use crate::bits::{Bits, BitStr};
use crate::error::{param, Error, Result};
use crate::gf::Field;
use crate::rs::ReedSolomon;

pub type Rate = Ratio<u64>;

/// Short systematic binary code carrying one byte: word bits 0..8 are the
/// data bits, bits 8..n the parity bits.
pub struct InnerCode {
    pub n: usize,
    pub min_distance: u32,
    parity: [u16; 8],
    nearest: Vec<u8>,
}

impl InnerCode {
    fn build(n: usize, parity: [u16; 8]) -> InnerCode {
        let mut code = InnerCode { n, min_distance: 0, parity, nearest: Vec::new() };
        let words: Vec<u32> = (0..256u32).map(|b| code.encode_byte(b as u8) as u32).collect();
        code.min_distance = words[1..].iter().map(|w| w.count_ones()).min().unwrap_or(n as u32);
        code.nearest = (0..1u32 << n)
            .map(|r| {
                let mut best = (u32::MAX, 0u8);
                for (b, &w) in words.iter().enumerate() {
                    let d = (w ^ r).count_ones();
                    if d < best.0 {
                        best = (d, b as u8);
                    }
                }
                best.1
            })
            .collect();
        code
    }

    /// Shortened quadratic-residue code of length 17: [16, 8, 5].
    pub fn qr16() -> &'static InnerCode {
        static C: OnceLock<InnerCode> = OnceLock::new();
        C.get_or_init(|| InnerCode::build(16, [0x39, 0x72, 0xe4, 0xf1, 0xdb, 0x8f, 0x27, 0x4e]))
    }

    /// [12, 8, 3].
    pub fn short12() -> &'static InnerCode {
        static C: OnceLock<InnerCode> = OnceLock::new();
        C.get_or_init(|| InnerCode::build(12, [0xe, 0x5, 0xb, 0xf, 0xd, 0x3, 0x6, 0xc]))
    }

    /// The uncoded byte, [8, 8, 1].
    pub fn identity() -> &'static InnerCode {
        static C: OnceLock<InnerCode> = OnceLock::new();
        C.get_or_init(|| InnerCode::build(8, [0; 8]))
    }

    pub fn encode_byte(&self, b: u8) -> u16 {
        let mut par = 0u16;
        for i in 0..8 {
            if b >> i & 1 == 1 {
                par ^= self.parity[i];
            }
        }
        b as u16 | par << 8
    }

    pub fn decode_full(&self, word: u16) -> u8 {
        self.nearest[word as usize]
    }

    /// Nearest data byte using only the positions in `kept`, with data bits at
    /// or above `data_bits` known to be zero.
    fn decode_partial(&self, word: u16, kept: u16, data_bits: u32) -> u8 {
        let mut best = (u32::MAX, 0u8);
        for b in 0..(1u32 << data_bits) {
            let d = ((self.encode_byte(b as u8) ^ word) & kept).count_ones();
            if d < best.0 {
                best = (d, b as u8);
            }
        }
        best.1
    }

    fn full_mask(&self) -> u16 {
        ((1u32 << self.n) - 1) as u16
    }

    /// Minimum weight of a nonzero candidate restricted to `kept`, or None when
    /// the only candidate is zero.
    fn restricted_distance(&self, kept: u16, data_bits: u32) -> Option<u32> {
        self.nearest_neighbor(kept, data_bits).map(|(_, d)| d)
    }

    /// A nonzero data byte whose codeword has minimum weight on `kept`.
    fn nearest_neighbor(&self, kept: u16, data_bits: u32) -> Option<(u8, u32)> {
        (1..(1u32 << data_bits))
            .map(|b| (b as u8, (self.encode_byte(b as u8) & kept).count_ones()))
            .min_by_key(|&(_, d)| d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EccParams {
    pub rate: Rate,
    pub message_bits: usize,
    pub block_bits: usize,
    /// Δ_J as a fraction of `block_bits`.
    pub decode_radius: f64,
    /// ⌊Δ_J · block_bits⌋: every error pattern of at most this weight is corrected.
    pub radius_bits: usize,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    kept: u16,
    offset: usize,
    data_bits: u32,
}

pub struct Ecc {
    params: EccParams,
    inner: &'static InnerCode,
    rs: ReedSolomon,
    sym_bytes: usize,
    slots: Vec<Slot>,
    /// Output position of each kept inner bit, in slot order. Message data
    /// bits come first so the block is systematic at the bit level.
    perm: Vec<u32>,
}

impl std::fmt::Debug for Ecc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ecc")
            .field("params", &self.params)
            .field("inner_n", &self.inner.n)
            .field("rs", &(self.rs.n, self.rs.k, self.rs.field.bits))
            .finish()
    }
}

fn choose_inner(rate: Rate) -> &'static InnerCode {
    let r = *rate.numer() as f64 / *rate.denom() as f64;
    if 2.0 * r <= 0.75 {
        InnerCode::qr16()
    } else if 1.5 * r <= 0.75 {
        InnerCode::short12()
    } else {
        InnerCode::identity()
    }
}

impl Ecc {
    pub fn new(message_bits: usize, rate: Rate) -> Result<Ecc> {
        if message_bits == 0 {
            return param("message_bits must be positive");
        }
        if *rate.numer() == 0 || rate >= Rate::from_integer(1) {
            return param(format!("rate {rate} outside (0,1)"));
        }
        let scaled = message_bits as u64 * rate.denom();
        if scaled % rate.numer() != 0 {
            return param(format!("{message_bits} message bits not divisible by rate {rate}"));
        }
        let block_bits = (scaled / rate.numer()) as usize;
        let inner = choose_inner(rate);

        for (field, sym_bytes) in [(Field::gf256(), 1usize), (Field::gf65536(), 2)] {
            let sym_bits = 8 * sym_bytes;
            let k = message_bits.div_ceil(sym_bits);
            let mut slots = Vec::new();
            let mut offset = 0usize;
            for q in 0..k * sym_bytes {
                let data_bits = message_bits.saturating_sub(8 * q).min(8) as u32;
                let kept = if data_bits == 0 {
                    0
                } else {
                    inner.full_mask() & !(0xffu16 & !((1u16 << data_bits) - 1))
                };
                slots.push(Slot { kept, offset, data_bits });
                offset += kept.count_ones() as usize;
            }
            let data_len = offset;
            if data_len > block_bits {
                return param(format!("rate {rate} too high for the inner code"));
            }
            let per_parity_symbol = sym_bytes * inner.n;
            let parity_symbols = (block_bits - data_len).div_ceil(per_parity_symbol);
            let n = k + parity_symbols;
            if n > field.order {
                continue;
            }
            let mut excess = data_len + parity_symbols * per_parity_symbol - block_bits;
            let mut parity_slots = vec![(inner.full_mask(), 8u32); parity_symbols * sym_bytes];
            for (kept, _) in parity_slots.iter_mut().rev() {
                while excess > 0 && *kept != 0 {
                    let top = 15 - kept.leading_zeros();
                    *kept &= !(1u16 << top);
                    excess -= 1;
                }
            }
            for (kept, data_bits) in parity_slots {
                slots.push(Slot { kept, offset, data_bits });
                offset += kept.count_ones() as usize;
            }
            debug_assert_eq!(offset, block_bits);
            let mut perm = Vec::with_capacity(block_bits);
            let (mut front, mut back) = (0u32, message_bits as u32);
            for (q, slot) in slots.iter().enumerate() {
                for j in (0..inner.n).filter(|j| slot.kept >> j & 1 == 1) {
                    let at = if q < k * sym_bytes && j < 8 { &mut front } else { &mut back };
                    perm.push(*at);
                    *at += 1;
                }
            }

            let rs = ReedSolomon::new(field, n, k);
            let mut ecc = Ecc {
                params: EccParams {
                    rate,
                    message_bits,
                    block_bits,
                    decode_radius: 0.0,
                    radius_bits: 0,
                },
                inner,
                rs,
                sym_bytes,
                slots,
                perm,
            };
            let radius = ecc.guaranteed_radius();
            if radius == 0 {
                return param(format!(
                    "code for {message_bits} bits at rate {rate} has zero decoding radius"
                ));
            }
            ecc.params.radius_bits = radius;
            ecc.params.decode_radius = radius as f64 / block_bits as f64;
            return Ok(ecc);
        }
        param(format!("{message_bits} message bits exceed the supported block size"))
    }

    fn guaranteed_radius(&self) -> usize {
        let mut costs: Vec<u64> = self
            .slots
            .chunks(self.sym_bytes)
            .map(|sym| {
                sym.iter()
                    .filter_map(|s| self.inner.restricted_distance(s.kept, s.data_bits))
                    .map(|d| d.div_ceil(2) as u64)
                    .min()
                    .unwrap_or(u64::MAX)
            })
            .collect();
        costs.sort_unstable();
        let t = self.rs.parity_len() / 2;
        let needed = &costs[..(t + 1).min(costs.len())];
        if needed.len() < t + 1 || needed.contains(&u64::MAX) {
            return self.params.block_bits;
        }
        let total: u64 = needed.iter().sum();
        (total.saturating_sub(1) as usize).min(self.params.block_bits)
    }

    pub fn params(&self) -> &EccParams {
        &self.params
    }

    pub fn message_bits(&self) -> usize {
        self.params.message_bits
    }

    pub fn block_bits(&self) -> usize {
        self.params.block_bits
    }

    pub fn radius_bits(&self) -> usize {
        self.params.radius_bits
    }

    /// Outer code dimensions (n, k, symbol bits) and inner code length.
    pub fn shape(&self) -> (usize, usize, u32, usize) {
        (self.rs.n, self.rs.k, self.rs.field.bits, self.inner.n)
    }

    fn symbols_from_message(&self, m: &BitStr) -> Vec<u16> {
        let mut bytes = crate::bits::to_bytes(m);
        bytes.resize(self.rs.k * self.sym_bytes, 0);
        if self.sym_bytes == 1 {
            bytes.into_iter().map(u16::from).collect()
        } else {
            bytes.chunks(2).map(|c| c[0] as u16 | (c[1] as u16) << 8).collect()
        }
    }

    fn slot_byte(&self, symbols: &[u16], q: usize) -> u8 {
        let s = symbols[q / self.sym_bytes];
        (s >> (8 * (q % self.sym_bytes))) as u8
    }

    pub fn encode(&self, m: &BitStr) -> Result<Bits> {
        if m.len() != self.params.message_bits {
            return Err(Error::Length { expected: self.params.message_bits, got: m.len() });
        }
        let cw = self.rs.encode(&self.symbols_from_message(m));
        let mut out = Bits::repeat(false, self.params.block_bits);
        for (q, slot) in self.slots.iter().enumerate() {
            let word = self.inner.encode_byte(self.slot_byte(&cw, q));
            let mut pos = slot.offset;
            for j in 0..self.inner.n {
                if slot.kept >> j & 1 == 1 {
                    out.set(self.perm[pos] as usize, word >> j & 1 == 1);
                    pos += 1;
                }
            }
        }
        Ok(out)
    }

    /// Returns the decoded message, or `Ok(None)` on decode-failure.
    pub fn decode(&self, w: &BitStr) -> Result<Option<Bits>> {
        if w.len() != self.params.block_bits {
            return Err(Error::Length { expected: self.params.block_bits, got: w.len() });
        }
        let mut bytes = Vec::with_capacity(self.slots.len());
        for slot in &self.slots {
            let mut word = 0u16;
            let mut pos = slot.offset;
            for j in 0..self.inner.n {
                if slot.kept >> j & 1 == 1 {
                    if w[self.perm[pos] as usize] {
                        word |= 1 << j;
                    }
                    pos += 1;
                }
            }
            let b = if slot.kept == self.inner.full_mask() && slot.data_bits == 8 {
                self.inner.decode_full(word)
            } else if slot.kept == 0 {
                0
            } else {
                self.inner.decode_partial(word, slot.kept, slot.data_bits)
            };
            bytes.push(b);
        }
        let mut symbols: Vec<u16> = if self.sym_bytes == 1 {
            bytes.iter().map(|&b| b as u16).collect()
        } else {
            bytes.chunks(2).map(|c| c[0] as u16 | (c[1] as u16) << 8).collect()
        };
        if !self.rs.decode_in_place(&mut symbols) {
            return Ok(None);
        }
        let msg_bytes: Vec<u8> = symbols[..self.rs.k]
            .iter()
            .flat_map(|&s| (0..self.sym_bytes).map(move |q| (s >> (8 * q)) as u8))
            .collect();
        let full = Bits::from_vec(msg_bytes);
        if full[self.params.message_bits..].any() {
            return Ok(None);
        }
        Ok(Some(full[..self.params.message_bits].to_bitvec()))
    }

    /// Block positions (0-based) of a cheap error pattern that defeats the
    /// decoder: in t+1 of the cheapest outer symbols, ⌊d/2⌋+1 flips move one
    /// inner word strictly closer to a neighboring codeword. `pick` chooses
    /// among equally cheap symbols.
    pub fn kill_pattern<R: rand::Rng + ?Sized>(&self, pick: &mut R) -> Vec<usize> {
        let mut options: Vec<(u32, u64, Vec<usize>)> = Vec::new();
        for sym in self.slots.chunks(self.sym_bytes) {
            let best = sym
                .iter()
                .enumerate()
                .filter_map(|(q, slot)| self.inner.nearest_neighbor(slot.kept, slot.data_bits).map(|(b, d)| (d, q, b)))
                .min_by_key(|&(d, _, _)| d);
            let Some((d, q, b)) = best else { continue };
            let slot = sym[q];
            let word = self.inner.encode_byte(b);
            let mut flips = Vec::new();
            let mut pos = slot.offset;
            for j in 0..self.inner.n {
                if slot.kept >> j & 1 == 1 {
                    if word >> j & 1 == 1 && flips.len() < (d / 2 + 1) as usize {
                        flips.push(self.perm[pos] as usize);
                    }
                    pos += 1;
                }
            }
            options.push((d / 2 + 1, pick.gen(), flips));
        }
        options.sort_unstable_by_key(|o| (o.0, o.1));
        let t = self.rs.parity_len() / 2;
        let mut out: Vec<usize> = options.into_iter().take(t + 1).flat_map(|o| o.2).collect();
        out.sort_unstable();
        out
    }

    /// ECC(ECCD(w)), or `Ok(None)` when decoding fails.
    pub fn reencode(&self, w: &BitStr) -> Result<Option<Bits>> {
        match self.decode(w)? {
            Some(m) => self.encode(&m).map(Some),
            None => Ok(None),
        }
    }
}

pub fn ecc_encode(ecc: &Ecc, m: &BitStr) -> Result<Bits> {
    ecc.encode(m)
}

pub fn ecc_decode(ecc: &Ecc, w: &BitStr) -> Result<Option<Bits>> {
    ecc.decode(w)
}

pub fn reencode(ecc: &Ecc, w: &BitStr) -> Result<Option<Bits>> {
    ecc.reencode(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::random_bits;
    use bitvec::prelude::*;
    use rand::{seq::index::sample, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quarter() -> Rate {
        Rate::new(1, 4)
    }

    #[test]
    fn inner_codes_have_designed_distance() {
        assert_eq!(InnerCode::qr16().min_distance, 5);
        assert_eq!(InnerCode::short12().min_distance, 3);
        assert_eq!(InnerCode::identity().min_distance, 1);
    }

    #[test]
    fn block_length_is_exact() {
        for mb in [8, 10, 16, 40, 128, 256, 1024, 8192] {
            let e = Ecc::new(mb, quarter()).unwrap();
            assert_eq!(e.block_bits(), 4 * mb);
            assert!(e.radius_bits() > 0);
        }
        let e = Ecc::new(1024, Rate::new(1, 2)).unwrap();
        assert_eq!(e.block_bits(), 2048);
    }

    #[test]
    fn zero_encodes_to_zero_and_is_systematic() {
        let e = Ecc::new(128, quarter()).unwrap();
        let z = Bits::repeat(false, 128);
        assert!(e.encode(&z).unwrap().not_any());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_bits(&mut rng, 128);
        let c = e.encode(&m).unwrap();
        assert_eq!(c[..128], m[..]);
        for (mb, rate) in [(10, quarter()), (4096, quarter()), (600, Rate::new(1, 2))] {
            let e = Ecc::new(mb, rate).unwrap();
            let m = random_bits(&mut rng, mb);
            assert_eq!(e.encode(&m).unwrap()[..mb], m[..]);
        }
    }

    #[test]
    fn decodes_within_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (mb, rate) in [(8, quarter()), (10, quarter()), (128, quarter()), (512, Rate::new(1, 2)), (4096, quarter())] {
            let e = Ecc::new(mb, rate).unwrap();
            for _ in 0..20 {
                let m = random_bits(&mut rng, mb);
                let c = e.encode(&m).unwrap();
                let mut w = c.clone();
                for p in sample(&mut rng, e.block_bits(), e.radius_bits()) {
                    let b = w[p];
                    w.set(p, !b);
                }
                assert_eq!(e.decode(&w).unwrap().as_ref(), Some(&m), "mb={mb}");
                assert_eq!(e.reencode(&w).unwrap(), Some(c));
            }
        }
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let e = Ecc::new(8, quarter()).unwrap();
        assert!(e.encode(bits![u8, Lsb0; 0; 7]).is_err());
        assert!(e.decode(bits![u8, Lsb0; 0; 31]).is_err());
    }

    #[test]
    fn all_ones_never_panics() {
        for mb in [8, 10, 128] {
            let e = Ecc::new(mb, quarter()).unwrap();
            let w = Bits::repeat(true, e.block_bits());
            let _ = e.decode(&w).unwrap();
        }
    }

    #[test]
    fn uneven_rate_rejected() {
        assert!(Ecc::new(10, Rate::new(3, 4)).is_err());
        assert!(Ecc::new(16, Rate::new(1, 3)).is_ok());
    }

    #[test]
    fn kill_pattern_exceeds_radius_and_breaks_decoding() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (mb, rate) in [(128, quarter()), (256, quarter()), (4096, quarter()), (512, Rate::new(1, 2))] {
            let e = Ecc::new(mb, rate).unwrap();
            for _ in 0..5 {
                let m = random_bits(&mut rng, mb);
                let mut w = e.encode(&m).unwrap();
                let kill = e.kill_pattern(&mut rng);
                assert!(kill.len() > e.radius_bits(), "{mb}: {} vs {}", kill.len(), e.radius_bits());
                assert!(kill.len() <= 2 * (e.radius_bits() + 1));
                for &p in &kill {
                    let b = w[p];
                    w.set(p, !b);
                }
                assert_ne!(e.decode(&w).unwrap(), Some(m));
            }
        }
    }
}
