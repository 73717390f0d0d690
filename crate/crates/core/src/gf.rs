//! Arithmetic over GF(2^q) for q ≤ 8, backed by log/antilog tables.
//!
//! Elements are represented by their integer value in the polynomial basis:
//! bit `t` of the value is the coefficient of `x^t`. The value 0 is the zero
//! element and the generator `α` is the value 2 (the polynomial `x`).

use crate::error::{Error, Result};

/// Default primitive polynomial for GF(256): x^8 + x^4 + x^3 + x^2 + 1.
pub const POLY_GF256: u32 = 0x11D;
/// Primitive polynomial for GF(16): x^4 + x + 1.
pub const POLY_GF16: u32 = 0b1_0011;

/// A finite field GF(2^q) with precomputed log/antilog tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    q: u32,
    poly: u32,
    /// exp[i] = α^i for i in 0..2·(2^q − 1), doubled so sums of logs index directly.
    exp: Vec<u8>,
    /// log[x] = i with α^i = x; log[0] is unused.
    log: Vec<u16>,
}

impl Field {
    /// Builds GF(2^q) from a primitive polynomial given as a bitmask
    /// (bit q must be set).
    pub fn new(q: u32, poly: u32) -> Result<Self> {
        if !(1..=8).contains(&q) {
            return Err(Error::InvalidField(format!("bit width {q} outside 1..=8")));
        }
        if poly >> q != 1 {
            return Err(Error::InvalidField(format!(
                "polynomial {poly:#b} is not of degree {q}"
            )));
        }
        let order = 1usize << q;
        let cycle = order - 1;
        let mut exp = vec![0u8; 2 * cycle];
        let mut log = vec![0u16; order];
        let mut x: u32 = 1;
        for i in 0..cycle {
            if i > 0 && x == 1 {
                return Err(Error::InvalidField(format!(
                    "polynomial {poly:#b} is not primitive (cycle length {i})"
                )));
            }
            exp[i] = x as u8;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << q) != 0 {
                x ^= poly;
            }
        }
        if x != 1 {
            return Err(Error::InvalidField(format!(
                "polynomial {poly:#b} is not primitive"
            )));
        }
        for i in cycle..2 * cycle {
            exp[i] = exp[i - cycle];
        }
        Ok(Field { q, poly, exp, log })
    }

    /// GF(256) with the conventional RS-255 polynomial 0x11D.
    pub fn gf256() -> Self {
        Self::new(8, POLY_GF256).expect("0x11D is primitive")
    }

    /// GF(16) with x^4 + x + 1.
    pub fn gf16() -> Self {
        Self::new(4, POLY_GF16).expect("x^4+x+1 is primitive")
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Number of field elements, 2^q.
    pub fn size(&self) -> usize {
        1 << self.q
    }

    /// Multiplicative order of α, 2^q − 1.
    pub fn cycle_len(&self) -> usize {
        (1 << self.q) - 1
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    pub fn inv(&self, a: u8) -> Result<u8> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let l = self.log[a as usize] as usize;
        Ok(self.exp[(self.cycle_len() - l) % self.cycle_len()])
    }

    /// a / b. Panics in debug builds when b is zero.
    #[inline]
    pub fn div(&self, a: u8, b: u8) -> u8 {
        debug_assert!(b != 0, "division by zero in GF(2^q)");
        if a == 0 {
            0
        } else {
            let c = self.cycle_len();
            self.exp[self.log[a as usize] as usize + c - self.log[b as usize] as usize]
        }
    }

    /// a^e for any integer exponent; 0^0 = 1 and 0^e = 0 for e ≠ 0.
    pub fn pow(&self, a: u8, e: i64) -> u8 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let c = self.cycle_len() as i64;
        let l = (self.log[a as usize] as i64 * e).rem_euclid(c);
        self.exp[l as usize]
    }

    /// α^i, reduced modulo the cycle length.
    #[inline]
    pub fn alpha_pow(&self, i: i64) -> u8 {
        self.exp[i.rem_euclid(self.cycle_len() as i64) as usize]
    }

    /// Discrete log of a nonzero element.
    #[inline]
    pub fn log(&self, a: u8) -> usize {
        debug_assert!(a != 0);
        self.log[a as usize] as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Carry-less multiply followed by reduction modulo the field polynomial.
    fn clmul_reduce(a: u32, b: u32, q: u32, poly: u32) -> u32 {
        let mut prod = 0u32;
        for t in 0..q {
            if b >> t & 1 == 1 {
                prod ^= a << t;
            }
        }
        for deg in (q..2 * q).rev() {
            if prod >> deg & 1 == 1 {
                prod ^= poly << (deg - q);
            }
        }
        prod
    }

    // Order of x modulo poly by repeated polynomial long division.
    fn order_of_x(q: u32, poly: u32) -> usize {
        let mut r = 1u32;
        for i in 1..=(1usize << q) {
            r <<= 1;
            if r >> q & 1 == 1 {
                r ^= poly;
            }
            if r == 1 {
                return i;
            }
        }
        0
    }

    #[test]
    fn cycle_lengths() {
        assert_eq!(order_of_x(4, 0b10011), 15);
        assert_eq!(order_of_x(8, 0x11D), 255);
        assert_eq!(Field::new(4, 0b10011).unwrap().cycle_len(), 15);
        assert_eq!(Field::new(8, 0x11D).unwrap().cycle_len(), 255);
    }

    #[test]
    fn rejects_non_primitive() {
        assert_ne!(order_of_x(4, 0b11111), 15);
        assert!(Field::new(4, 0b11111).is_err());
        assert!(Field::new(4, 0b111).is_err());
        assert!(Field::new(9, 0x211).is_err());
    }

    #[test]
    fn gf16_mul_example() {
        let f = Field::gf16();
        assert_eq!(clmul_reduce(2, 8, 4, 0b10011), 3);
        assert_eq!(f.mul(2, 8), 3);
    }

    #[test]
    fn table_invariants() {
        for (q, poly) in [(1, 0b11), (2, 0b111), (3, 0b1011), (4, 0b10011), (8, 0x11D)] {
            let f = Field::new(q, poly).unwrap();
            for x in 1..f.size() {
                assert_eq!(f.exp[f.log[x] as usize] as usize, x);
            }
            for i in 0..3 * f.cycle_len() as i64 {
                assert_eq!(f.alpha_pow(i), f.alpha_pow(i % f.cycle_len() as i64));
            }
        }
    }

    #[test]
    fn mul_matches_clmul_exhaustive_small() {
        for (q, poly) in [(2, 0b111), (3, 0b1011), (4, 0b10011)] {
            let f = Field::new(q, poly).unwrap();
            for a in 0..f.size() as u32 {
                for b in 0..f.size() as u32 {
                    assert_eq!(f.mul(a as u8, b as u8) as u32, clmul_reduce(a, b, q, poly));
                }
            }
        }
    }

    #[test]
    fn field_axioms_gf16() {
        let f = Field::gf16();
        for a in 0..16u8 {
            assert_eq!(f.add(a, a), 0);
            if a != 0 {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                assert_eq!(f.div(a, a), 1);
            }
            for b in 0..16u8 {
                for c in 0..16u8 {
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
        assert!(matches!(f.inv(0), Err(Error::ZeroInverse)));
    }

    #[test]
    fn pow_consistency() {
        let f = Field::gf256();
        for a in 1..=255u8 {
            let mut acc = 1u8;
            for e in 0..10 {
                assert_eq!(f.pow(a, e), acc);
                acc = f.mul(acc, a);
            }
            assert_eq!(f.mul(f.pow(a, -3), f.pow(a, 3)), 1);
        }
        assert_eq!(f.pow(0, 0), 1);
        assert_eq!(f.pow(0, 5), 0);
    }

    proptest::proptest! {
        #[test]
        fn gf256_distributive(a: u8, b: u8, c: u8) {
            let f = Field::gf256();
            proptest::prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            proptest::prop_assert_eq!(f.mul(a, b) as u32, clmul_reduce(a as u32, b as u32, 8, 0x11D));
        }
    }
}
