//! Binary extension fields GF(2^8) and GF(2^16) with log/antilog tables.

use std::sync::OnceLock;

pub struct Field {
    pub bits: u32,
    /// Multiplicative group order 2^bits - 1.
    pub order: usize,
    exp: Vec<u16>,
    log: Vec<u32>,
}

impl Field {
    fn build(bits: u32, poly: u32) -> Field {
        let order = (1usize << bits) - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u32; order + 1];
        let mut x: u32 = 1;
        for i in 0..order {
            exp[i] = x as u16;
            log[x as usize] = i as u32;
            x <<= 1;
            if x & (1 << bits) != 0 {
                x ^= poly;
            }
            assert!(x != 1 || i == order - 1, "polynomial {poly:#x} is not primitive");
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Field { bits, order, exp, log }
    }

    pub fn gf256() -> &'static Field {
        static F: OnceLock<Field> = OnceLock::new();
        F.get_or_init(|| Field::build(8, 0x11d))
    }

    pub fn gf65536() -> &'static Field {
        static F: OnceLock<Field> = OnceLock::new();
        F.get_or_init(|| Field::build(16, 0x1100b))
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    #[inline]
    pub fn inv(&self, a: u16) -> u16 {
        assert!(a != 0, "inverse of zero");
        self.exp[(self.order - self.log[a as usize] as usize) % self.order]
    }

    #[inline]
    pub fn div(&self, a: u16, b: u16) -> u16 {
        self.mul(a, self.inv(b))
    }

    /// alpha^e for any integer exponent.
    #[inline]
    pub fn alpha_pow(&self, e: i64) -> u16 {
        self.exp[e.rem_euclid(self.order as i64) as usize]
    }
}
