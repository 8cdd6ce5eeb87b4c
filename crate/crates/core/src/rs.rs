//! Systematic Reed-Solomon codes over GF(2^8) or GF(2^16) with errors-only
//! Berlekamp-Massey decoding. Codeword symbol `i` is the coefficient of
//! x^(n-1-i); the message occupies symbols `0..k`, parity `k..n`.

use crate::gf::Field;

pub struct ReedSolomon {
    pub field: &'static Field,
    pub n: usize,
    pub k: usize,
    /// Monic generator, highest degree first; roots alpha^1..alpha^(n-k).
    gen: Vec<u16>,
}

impl ReedSolomon {
    pub fn new(field: &'static Field, n: usize, k: usize) -> ReedSolomon {
        assert!(k >= 1 && k <= n && n <= field.order, "invalid RS({n},{k})");
        let mut gen = vec![1u16];
        for j in 1..=(n - k) {
            let root = field.alpha_pow(j as i64);
            let mut next = vec![0u16; gen.len() + 1];
            for (i, &g) in gen.iter().enumerate() {
                next[i] ^= g;
                next[i + 1] ^= field.mul(g, root);
            }
            gen = next;
        }
        ReedSolomon { field, n, k, gen }
    }

    pub fn parity_len(&self) -> usize {
        self.n - self.k
    }

    pub fn encode(&self, msg: &[u16]) -> Vec<u16> {
        assert_eq!(msg.len(), self.k);
        let nk = self.parity_len();
        let f = self.field;
        let mut rem = vec![0u16; nk];
        for &m in msg {
            let fb = m ^ rem.first().copied().unwrap_or(0);
            if nk > 0 {
                rem.rotate_left(1);
                rem[nk - 1] = 0;
                if fb != 0 {
                    for j in 0..nk {
                        rem[j] ^= f.mul(fb, self.gen[j + 1]);
                    }
                }
            }
        }
        let mut out = msg.to_vec();
        out.extend_from_slice(&rem);
        out
    }

    fn syndromes(&self, word: &[u16]) -> Vec<u16> {
        let f = self.field;
        (1..=self.parity_len())
            .map(|j| {
                let x = f.alpha_pow(j as i64);
                word.iter().fold(0u16, |acc, &c| f.mul(acc, x) ^ c)
            })
            .collect()
    }

    /// Corrects up to (n-k)/2 symbol errors in place. Returns false when the
    /// word is detectably beyond the decoding radius.
    pub fn decode_in_place(&self, word: &mut [u16]) -> bool {
        assert_eq!(word.len(), self.n);
        let f = self.field;
        // Cheap exact check for the common clean case.
        if self.encode(&word[..self.k])[self.k..] == word[self.k..] {
            return true;
        }
        let synd = self.syndromes(word);
        let nk = synd.len();

        // Berlekamp-Massey; polynomials lowest degree first.
        let mut c = vec![1u16];
        let mut b = vec![1u16];
        let mut l = 0usize;
        let mut shift = 1usize;
        let mut bscale = 1u16;
        for step in 0..nk {
            let mut d = synd[step];
            for i in 1..=l.min(c.len() - 1) {
                d ^= f.mul(c[i], synd[step - i]);
            }
            if d == 0 {
                shift += 1;
                continue;
            }
            let coef = f.div(d, bscale);
            let mut next = c.clone();
            if next.len() < b.len() + shift {
                next.resize(b.len() + shift, 0);
            }
            for (i, &bi) in b.iter().enumerate() {
                next[i + shift] ^= f.mul(coef, bi);
            }
            if 2 * l <= step {
                b = c;
                l = step + 1 - l;
                bscale = d;
                shift = 1;
            } else {
                shift += 1;
            }
            c = next;
        }
        c.truncate(l + 1);
        if 2 * l > nk || c.len() != l + 1 || c[l] == 0 {
            return false;
        }

        // Chien search over the (possibly shortened) positions.
        let mut positions = Vec::with_capacity(l);
        for i in 0..self.n {
            let power = (self.n - 1 - i) as i64;
            let xinv = f.alpha_pow(-power);
            let v = c.iter().rev().fold(0u16, |acc, &ci| f.mul(acc, xinv) ^ ci);
            if v == 0 {
                positions.push(i);
            }
        }
        if positions.len() != l {
            return false;
        }

        // Omega = S(x) * Lambda(x) mod x^(n-k), then Forney.
        let mut omega = vec![0u16; nk];
        for (i, &ci) in c.iter().enumerate() {
            for (j, &sj) in synd.iter().enumerate() {
                if i + j < nk {
                    omega[i + j] ^= f.mul(ci, sj);
                }
            }
        }
        for &i in &positions {
            let power = (self.n - 1 - i) as i64;
            let xinv = f.alpha_pow(-power);
            let num = omega.iter().rev().fold(0u16, |acc, &o| f.mul(acc, xinv) ^ o);
            // Lambda'(x) keeps only odd-degree terms in characteristic 2.
            let x2 = f.mul(xinv, xinv);
            let mut den = 0u16;
            let mut xp = 1u16;
            for deg in (1..c.len()).step_by(2) {
                den ^= f.mul(c[deg], xp);
                xp = f.mul(xp, x2);
            }
            if den == 0 {
                return false;
            }
            word[i] ^= f.div(num, den);
        }
        self.syndromes(word).iter().all(|&s| s == 0)
    }
}
