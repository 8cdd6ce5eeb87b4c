//! Decoder verdicts and per-call accounting of oracle reads.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Bit(bool),
    Bottom,
}

impl Verdict {
    pub fn bit(self) -> Option<bool> {
        match self {
            Verdict::Bit(b) => Some(b),
            Verdict::Bottom => None,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Bit(b) => write!(f, "{}", *b as u8),
            Verdict::Bottom => write!(f, "⊥"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Color {
    Green,
    Red,
}

impl Color {
    pub fn is_red(self) -> bool {
        self == Color::Red
    }

    pub fn from_green(green: bool) -> Color {
        if green {
            Color::Green
        } else {
            Color::Red
        }
    }
}

/// Reads issued by one decoder call. `issued` counts every bit the algorithm
/// reads, including re-reads of a block it has read before; `distinct` counts
/// each bit position once. Decoded blocks are memoized by the caller, so
/// re-reads cost no recomputation, but they are still charged to `issued`.
#[derive(Clone, Debug, Default)]
pub struct QueryLog {
    pub issued: u64,
    /// Bitset over 1-based block indices.
    seen: Vec<u64>,
    touched: usize,
    pub distinct: u64,
}

impl QueryLog {
    pub fn new() -> QueryLog {
        QueryLog::default()
    }

    pub fn read_block(&mut self, block: usize, bits: usize) {
        self.issued += bits as u64;
        let (word, bit) = (block / 64, 1u64 << (block % 64));
        if word >= self.seen.len() {
            self.seen.resize(word + 1, 0);
        }
        if self.seen[word] & bit == 0 {
            self.seen[word] |= bit;
            self.touched += 1;
            self.distinct += bits as u64;
        }
    }

    pub fn blocks_touched(&self) -> usize {
        self.touched
    }
}

/// Anything that can color nodes 1..=units, possibly by reading a word.
pub trait ColorOracle {
    fn units(&self) -> usize;
    fn color(&self, v: usize, log: &mut QueryLog) -> Color;
}

/// Colors fixed in advance; `red[v-1]` marks red nodes. Costs no reads.
pub struct PlantedColors<'a>(pub &'a [bool]);

impl ColorOracle for PlantedColors<'_> {
    fn units(&self) -> usize {
        self.0.len()
    }

    fn color(&self, v: usize, _log: &mut QueryLog) -> Color {
        Color::from_green(!self.0[v - 1])
    }
}
