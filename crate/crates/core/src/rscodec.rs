//! Reed-Solomon encoding and bounded-distance error-and-erasure decoding.
//!
//! Codewords are polynomials `c(x) = Σ c_i x^i` over GF(2^q) with position `i`
//! carrying the locator `α^i`. The generator polynomial has the narrow-sense
//! roots `α^1 … α^(n−k)`. Encoding is systematic: positions `0..n−k` hold the
//! parity and positions `n−k..n` hold the message verbatim.
//!
//! [`RsCode::decode_ee`] is a Berlekamp-Massey decoder whose register is seeded
//! with the erasure locator, followed by Chien search and Forney's formula. It
//! is strictly bounded-distance: a codeword is returned only when
//! `2ν + e < n − k + 1`, where `ν` counts the disagreements in unerased positions.

use crate::error::{Error, Result};
use crate::gf::Field;

/// A received word after hard decisions; `symbols[i]` is ignored where `erased[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardDecisionWord {
    pub symbols: Vec<u8>,
    pub erased: Vec<bool>,
}

impl HardDecisionWord {
    pub fn new(symbols: Vec<u8>) -> Self {
        let erased = vec![false; symbols.len()];
        HardDecisionWord { symbols, erased }
    }

    pub fn with_erasures(symbols: Vec<u8>, erased: Vec<bool>) -> Self {
        debug_assert_eq!(symbols.len(), erased.len());
        HardDecisionWord { symbols, erased }
    }

    pub fn erasure_count(&self) -> usize {
        self.erased.iter().filter(|&&e| e).count()
    }
}

/// An (n, k) Reed-Solomon code over GF(2^q).
#[derive(Debug, Clone)]
pub struct RsCode {
    field: Field,
    n: usize,
    k: usize,
    /// Monic generator, ascending coefficients, degree n − k.
    generator: Vec<u8>,
}

impl RsCode {
    /// Builds an (n, k) code; `n` may be at most 2^q − 1 (shortened codes allowed).
    pub fn new(field: Field, n: usize, k: usize) -> Result<Self> {
        if n > field.cycle_len() || n == 0 {
            return Err(Error::InvalidCode(format!(
                "n = {n} must lie in 1..={}",
                field.cycle_len()
            )));
        }
        if k == 0 || k >= n {
            return Err(Error::InvalidCode(format!("k = {k} must lie in 1..{n}")));
        }
        let mut generator = vec![1u8];
        for j in 1..=(n - k) {
            let root = field.alpha_pow(j as i64);
            let mut next = vec![0u8; generator.len() + 1];
            for (i, &g) in generator.iter().enumerate() {
                next[i + 1] ^= g;
                next[i] ^= field.mul(g, root);
            }
            generator = next;
        }
        Ok(RsCode {
            field,
            n,
            k,
            generator,
        })
    }

    /// The (255, 239) code over GF(256) with polynomial 0x11D.
    pub fn rs255_239() -> Self {
        Self::new(Field::gf256(), 255, 239).expect("valid parameters")
    }

    /// The (15, 11) code over GF(16).
    pub fn rs15_11() -> Self {
        Self::new(Field::gf16(), 15, 11).expect("valid parameters")
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    /// Number of parity symbols, n − k.
    pub fn parity_len(&self) -> usize {
        self.n - self.k
    }

    pub fn d_min(&self) -> usize {
        self.n - self.k + 1
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn generator(&self) -> &[u8] {
        &self.generator
    }

    /// Systematic encoding; the message occupies the last k positions.
    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                got: message.len(),
            });
        }
        let f = &self.field;
        let p = self.parity_len();
        // LFSR division of m(x)·x^p by the monic generator.
        let mut rem = vec![0u8; p];
        for &m in message.iter().rev() {
            let fb = m ^ rem[p - 1];
            for j in (1..p).rev() {
                rem[j] = rem[j - 1] ^ f.mul(fb, self.generator[j]);
            }
            rem[0] = f.mul(fb, self.generator[0]);
        }
        let mut cw = rem;
        cw.extend_from_slice(message);
        Ok(cw)
    }

    /// Syndromes S_1..S_(n−k), S_j = r(α^j).
    pub fn syndromes(&self, word: &[u8]) -> Vec<u8> {
        debug_assert_eq!(word.len(), self.n);
        let f = &self.field;
        (1..=self.parity_len())
            .map(|j| {
                let x = f.alpha_pow(j as i64);
                word.iter().rev().fold(0u8, |acc, &c| f.mul(acc, x) ^ c)
            })
            .collect()
    }

    /// Adds the syndrome contribution of `value` placed at `position`.
    pub fn add_syndrome_term(&self, synd: &mut [u8], position: usize, value: u8) {
        if value == 0 {
            return;
        }
        let f = &self.field;
        let lv = f.log(value) as i64;
        for (j, s) in synd.iter_mut().enumerate() {
            *s ^= f.alpha_pow(lv + (j as i64 + 1) * position as i64);
        }
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n && self.syndromes(word).iter().all(|&s| s == 0)
    }

    /// Bounded-distance error-and-erasure decoding. Returns `None` on failure.
    pub fn decode_ee(&self, word: &HardDecisionWord) -> Option<Vec<u8>> {
        if word.symbols.len() != self.n || word.erased.len() != self.n {
            return None;
        }
        let zeroed: Vec<u8> = word
            .symbols
            .iter()
            .zip(&word.erased)
            .map(|(&s, &e)| if e { 0 } else { s })
            .collect();
        let synd = self.syndromes(&zeroed);
        self.decode_with_syndromes(&zeroed, &word.erased, &synd)
    }

    /// Decoding core. `zeroed` must carry 0 at every erased position and
    /// `synd` must be its syndromes; callers running many trials on related
    /// words can maintain the syndromes incrementally.
    pub fn decode_with_syndromes(
        &self,
        zeroed: &[u8],
        erased: &[bool],
        synd: &[u8],
    ) -> Option<Vec<u8>> {
        let f = &self.field;
        let nk = self.parity_len();
        let erasures: Vec<usize> = (0..self.n).filter(|&i| erased[i]).collect();
        let e = erasures.len();
        if e > nk {
            return None;
        }
        if e == 0 && synd.iter().all(|&s| s == 0) {
            return Some(zeroed.to_vec());
        }

        // Erasure locator Γ(x) = Π (1 − α^i x).
        let mut gamma = Vec::with_capacity(nk + 1);
        gamma.push(1u8);
        for &i in &erasures {
            let xi = f.alpha_pow(i as i64);
            gamma.push(0);
            for j in (1..gamma.len()).rev() {
                gamma[j] ^= f.mul(gamma[j - 1], xi);
            }
        }

        // Berlekamp-Massey on the remaining syndromes, register seeded with Γ.
        let mut lambda = gamma.clone();
        let mut b = gamma;
        let mut len = e;
        for r in (e + 1)..=nk {
            let mut delta = 0u8;
            for (j, &lj) in lambda.iter().enumerate() {
                if j < r {
                    delta ^= f.mul(lj, synd[r - j - 1]);
                }
            }
            b.insert(0, 0);
            if delta != 0 {
                let mut next = lambda.clone();
                if next.len() < b.len() {
                    next.resize(b.len(), 0);
                }
                for (j, &bj) in b.iter().enumerate() {
                    next[j] ^= f.mul(delta, bj);
                }
                if 2 * len < r + e {
                    let inv = f.inv(delta).ok()?;
                    b = lambda.iter().map(|&c| f.mul(c, inv)).collect();
                    len = r + e - len;
                }
                lambda = next;
            }
        }
        while lambda.len() > 1 && *lambda.last().unwrap() == 0 {
            lambda.pop();
        }
        let deg = lambda.len() - 1;
        if deg != len || deg > nk {
            return None;
        }

        // Chien search over the code positions.
        let mut roots = Vec::with_capacity(deg);
        for i in 0..self.n {
            let xinv = f.alpha_pow(-(i as i64));
            let v = lambda.iter().rev().fold(0u8, |acc, &c| f.mul(acc, xinv) ^ c);
            if v == 0 {
                roots.push(i);
            }
        }
        if roots.len() != deg {
            return None;
        }

        // Forney: Ω = S·Λ mod x^(n−k); Y_i = Ω(X_i⁻¹) / Λ'(X_i⁻¹).
        let mut omega = vec![0u8; nk];
        for (i, &li) in lambda.iter().enumerate() {
            for (j, &sj) in synd.iter().enumerate() {
                if i + j < nk {
                    omega[i + j] ^= f.mul(li, sj);
                }
            }
        }
        let mut corrected = zeroed.to_vec();
        for &pos in &roots {
            let xinv = f.alpha_pow(-(pos as i64));
            let num = omega.iter().rev().fold(0u8, |acc, &c| f.mul(acc, xinv) ^ c);
            let mut den = 0u8;
            let mut xp = 1u8;
            for j in (1..lambda.len()).step_by(2) {
                den ^= f.mul(lambda[j], xp);
                xp = f.mul(xp, f.mul(xinv, xinv));
            }
            if den == 0 {
                return None;
            }
            corrected[pos] ^= f.div(num, den);
        }

        if !self.is_codeword(&corrected) {
            return None;
        }
        let nu = (0..self.n)
            .filter(|&i| !erased[i] && corrected[i] != zeroed[i])
            .count();
        if 2 * nu + e < self.d_min() {
            Some(corrected)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_message(code: &RsCode, rng: &mut impl Rng) -> Vec<u8> {
        let size = code.field().size() as u32;
        (0..code.k()).map(|_| rng.random_range(0..size) as u8).collect()
    }

    // Direct evaluation of every generator root on the codeword polynomial.
    fn syndrome_oracle(code: &RsCode, cw: &[u8]) -> bool {
        let f = code.field();
        (1..=code.parity_len()).all(|j| {
            let mut acc = 0u8;
            for (i, &c) in cw.iter().enumerate() {
                acc ^= f.mul(c, f.pow(f.alpha_pow(j as i64), i as i64));
            }
            acc == 0
        })
    }

    #[test]
    fn generator_degree_and_roots() {
        let code = RsCode::rs15_11();
        assert_eq!(code.generator().len(), 5);
        assert_eq!(*code.generator().last().unwrap(), 1);
        let f = code.field();
        for j in 1..=4 {
            let x = f.alpha_pow(j);
            let v = code.generator().iter().rev().fold(0u8, |acc, &c| f.mul(acc, x) ^ c);
            assert_eq!(v, 0);
        }
    }

    #[test]
    fn encode_basic_properties() {
        let code = RsCode::rs15_11();
        assert_eq!(code.encode(&[0; 11]).unwrap(), vec![0; 15]);
        assert!(code.encode(&[0; 10]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let msg = random_message(&code, &mut rng);
            let cw = code.encode(&msg).unwrap();
            assert_eq!(&cw[4..], &msg[..]);
            assert!(syndrome_oracle(&code, &cw));
            assert!(code.is_codeword(&cw));
            assert_eq!(code.encode(&cw[4..]).unwrap(), cw);
        }
    }

    #[test]
    fn is_codeword_cases() {
        let code = RsCode::rs255_239();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = code.encode(&random_message(&code, &mut rng)).unwrap();
        let b = code.encode(&random_message(&code, &mut rng)).unwrap();
        assert!(code.is_codeword(&a));
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        assert!(code.is_codeword(&sum));
        let mut flipped = a.clone();
        flipped[100] ^= 0x5A;
        assert!(!code.is_codeword(&flipped));
        assert!(!code.is_codeword(&a[..254]));
    }

    #[test]
    fn incremental_syndromes_match() {
        let code = RsCode::rs255_239();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut w: Vec<u8> = (0..255).map(|_| rng.random()).collect();
        let mut s = code.syndromes(&w);
        for _ in 0..20 {
            let pos = rng.random_range(0..255);
            let v: u8 = rng.random();
            code.add_syndrome_term(&mut s, pos, v);
            w[pos] ^= v;
        }
        assert_eq!(s, code.syndromes(&w));
    }

    fn corrupt(
        code: &RsCode,
        cw: &[u8],
        nu: usize,
        e: usize,
        rng: &mut impl Rng,
    ) -> HardDecisionWord {
        let n = code.n();
        let size = code.field().size() as u32;
        let idx = sample(rng, n, nu + e).into_vec();
        let mut word = HardDecisionWord::new(cw.to_vec());
        for &i in &idx[..nu] {
            word.symbols[i] ^= rng.random_range(1..size) as u8;
        }
        for &i in &idx[nu..] {
            word.erased[i] = true;
            word.symbols[i] = rng.random_range(0..size) as u8;
        }
        word
    }

    #[test]
    fn decode_examples_15_11() {
        let code = RsCode::rs15_11();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let cw = code.encode(&random_message(&code, &mut rng)).unwrap();
            assert_eq!(code.decode_ee(&HardDecisionWord::new(cw.clone())), Some(cw.clone()));
            let w = corrupt(&code, &cw, 1, 2, &mut rng);
            assert_eq!(code.decode_ee(&w), Some(cw.clone()));
            let w = corrupt(&code, &cw, 2, 1, &mut rng);
            assert_ne!(code.decode_ee(&w), Some(cw.clone()));
            let w = corrupt(&code, &cw, 0, 4, &mut rng);
            assert_eq!(code.decode_ee(&w), Some(cw.clone()));
            let w = corrupt(&code, &cw, 0, 5, &mut rng);
            assert_eq!(code.decode_ee(&w), None);
        }
    }

    #[test]
    fn decode_255_239_radius() {
        let code = RsCode::rs255_239();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (nu, e) in [(8, 0), (7, 2), (0, 16), (3, 10), (1, 14)] {
            let cw = code.encode(&random_message(&code, &mut rng)).unwrap();
            let w = corrupt(&code, &cw, nu, e, &mut rng);
            assert_eq!(code.decode_ee(&w), Some(cw), "nu={nu} e={e}");
        }
        for (nu, e) in [(9, 0), (8, 1), (7, 3)] {
            let cw = code.encode(&random_message(&code, &mut rng)).unwrap();
            let w = corrupt(&code, &cw, nu, e, &mut rng);
            let out = code.decode_ee(&w);
            assert_ne!(out.as_ref(), Some(&cw));
            if let Some(c) = out {
                assert!(code.is_codeword(&c));
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(300))]
        #[test]
        fn decode_output_is_codeword_in_region(seed: u64, nu in 0usize..5, e in 0usize..6) {
            let code = RsCode::rs15_11();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cw = code.encode(&random_message(&code, &mut rng)).unwrap();
            let w = corrupt(&code, &cw, nu, e, &mut rng);
            let out = code.decode_ee(&w);
            proptest::prop_assert_eq!(out.as_ref() == Some(&cw), 2 * nu + e < 5);
            if let Some(c) = out {
                proptest::prop_assert!(code.is_codeword(&c));
                let dist = (0..15).filter(|&i| !w.erased[i] && w.symbols[i] != c[i]).count();
                proptest::prop_assert!(2 * dist + e < 5);
            }
        }
    }
}
