//! Block layout shared by the weak and strong codes, and a memoizing view of
//! a received word.

use std::ops::Range;
use std::sync::OnceLock;

use crate::bits::{BitStr, Bits};
use crate::error::{Error, Result};
use crate::inner_ecc::Ecc;
use crate::query::QueryLog;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Message,
    Label,
    Repetition,
}

/// `units` message blocks, then `units` label blocks, then `units` copies of
/// the last label block. Blocks and bits are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub units: usize,
    pub message_block_bits: usize,
    pub label_block_bits: usize,
}

impl Layout {
    pub fn block_count(&self) -> usize {
        3 * self.units
    }

    pub fn len(&self) -> usize {
        self.units * (self.message_block_bits + 2 * self.label_block_bits)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn message_region_bits(&self) -> usize {
        self.units * self.message_block_bits
    }

    pub fn region(&self, j: usize) -> Region {
        if j <= self.units {
            Region::Message
        } else if j <= 2 * self.units {
            Region::Label
        } else {
            Region::Repetition
        }
    }

    pub fn block_len(&self, j: usize) -> usize {
        match self.region(j) {
            Region::Message => self.message_block_bits,
            _ => self.label_block_bits,
        }
    }

    /// 0-based bit range of block j.
    pub fn range(&self, j: usize) -> Range<usize> {
        let mb = self.message_region_bits();
        let start = if j <= self.units {
            (j - 1) * self.message_block_bits
        } else {
            mb + (j - self.units - 1) * self.label_block_bits
        };
        start..start + self.block_len(j)
    }

    /// Block holding 1-based bit i.
    pub fn block_of(&self, i: usize) -> usize {
        let mb = self.message_region_bits();
        if i <= mb {
            (i - 1) / self.message_block_bits + 1
        } else {
            self.units + (i - mb - 1) / self.label_block_bits + 1
        }
    }

    /// 0-based position of bit i inside its block.
    pub fn offset_in_block(&self, i: usize) -> usize {
        i - 1 - self.range(self.block_of(i)).start
    }
}

/// A received word with lazily decoded, shared block decodes. Reads are
/// charged to the caller's [`QueryLog`]; the decode itself happens once.
pub struct ReceivedWord<'a> {
    w: &'a BitStr,
    layout: Layout,
    message_ecc: &'a Ecc,
    label_ecc: &'a Ecc,
    decoded: Vec<OnceLock<Option<Bits>>>,
    reencoded: Vec<OnceLock<Option<Bits>>>,
}

impl<'a> ReceivedWord<'a> {
    pub fn new(w: &'a BitStr, layout: Layout, message_ecc: &'a Ecc, label_ecc: &'a Ecc) -> Result<ReceivedWord<'a>> {
        if w.len() != layout.len() {
            return Err(Error::Length { expected: layout.len(), got: w.len() });
        }
        let decoded = (0..layout.block_count()).map(|_| OnceLock::new()).collect();
        let reencoded = (0..layout.block_count()).map(|_| OnceLock::new()).collect();
        Ok(ReceivedWord { w, layout, message_ecc, label_ecc, decoded, reencoded })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn bits(&self) -> &BitStr {
        self.w
    }

    pub fn ecc_for(&self, j: usize) -> &'a Ecc {
        match self.layout.region(j) {
            Region::Message => self.message_ecc,
            _ => self.label_ecc,
        }
    }

    pub fn block(&self, j: usize) -> &BitStr {
        &self.w[self.layout.range(j)]
    }

    /// ECCD of block j without charging a read.
    pub fn decoded(&self, j: usize) -> Option<&Bits> {
        self.decoded[j - 1]
            .get_or_init(|| self.ecc_for(j).decode(self.block(j)).expect("block length fixed by layout"))
            .as_ref()
    }

    /// ECCD of block j, charging the whole block to `log`.
    pub fn read(&self, j: usize, log: &mut QueryLog) -> Option<&Bits> {
        log.read_block(j, self.layout.block_len(j));
        self.decoded(j)
    }

    /// ECC(ECCD(block j)), uncharged.
    pub fn reencoded(&self, j: usize) -> Option<&Bits> {
        self.reencoded[j - 1]
            .get_or_init(|| self.decoded(j).map(|m| self.ecc_for(j).encode(m).expect("decoded length fixed")))
            .as_ref()
    }
}

impl ReceivedWord<'_> {
    /// Decodes `samples` blocks drawn uniformly with replacement from `lo..=hi`
    /// and returns the most frequent decoded message (earliest seen wins ties).
    /// None when every sample fails to decode.
    pub fn plurality<R: rand::Rng + ?Sized>(
        &self,
        lo: usize,
        hi: usize,
        samples: usize,
        rng: &mut R,
        log: &mut QueryLog,
    ) -> Option<Bits> {
        let mut tally: Vec<(&Bits, usize)> = Vec::new();
        for _ in 0..samples {
            let j = rng.gen_range(lo..=hi);
            if let Some(m) = self.read(j, log) {
                match tally.iter_mut().find(|(b, _)| *b == m) {
                    Some(e) => e.1 += 1,
                    None => tally.push((m, 1)),
                }
            }
        }
        let best = tally.iter().map(|e| e.1).max()?;
        tally.into_iter().find(|e| e.1 == best).map(|e| e.0.clone())
    }
}
