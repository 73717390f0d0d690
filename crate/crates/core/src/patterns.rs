//! Erasure-pattern sets for multiple-trial decoding.
//!
//! Patterns are built in reliability order (entry `r` is the r-th least
//! reliable position) and moved to codeword order with [`to_codeword_coords`]
//! just before decoding.

use std::io::{self, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::ErasurePattern;
use crate::rdengine::RdPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSet {
    pub patterns: Vec<ErasurePattern>,
    /// log2 of the pattern count.
    pub rate_bits: f64,
    pub scheme: String,
    /// Whether the first pattern is the deterministic hard-decision pattern
    /// rather than a sample.
    pub forced_hd: bool,
}

impl PatternSet {
    fn from_patterns(patterns: Vec<ErasurePattern>, scheme: impl Into<String>, forced_hd: bool) -> Self {
        PatternSet {
            rate_bits: (patterns.len() as f64).log2(),
            patterns,
            scheme: scheme.into(),
            forced_hd,
        }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn hard_decision(n: usize) -> Self {
        Self::from_patterns(vec![ErasurePattern::hard_decision(n)], "BM", true)
    }

    /// Text dump: a `#` header line, then one pattern per line.
    /// Letters above 9 are written as `a`, `b`, ….
    pub fn write_dump<W: Write>(&self, mut w: W, seed: u64) -> io::Result<()> {
        writeln!(
            w,
            "# scheme={} R={} count={} seed={} forced_hd={}",
            self.scheme,
            self.rate_bits,
            self.len(),
            seed,
            self.forced_hd
        )?;
        let mut line = String::new();
        for p in &self.patterns {
            line.clear();
            line.extend(p.letters.iter().map(|&l| {
                std::char::from_digit(u32::from(l), 36).expect("letter below 36")
            }));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Erase 0, 2, 4, …, d_min − 1 least reliable positions.
pub fn gmd_set(n: usize, d_min: usize) -> Result<PatternSet> {
    if d_min.is_multiple_of(2) || d_min > n + 1 {
        return Err(Error::InvalidArgument(format!(
            "GMD needs odd d_min ≤ n + 1, got {d_min}"
        )));
    }
    let patterns = (0..=(d_min - 1) / 2)
        .map(|j| {
            let mut p = ErasurePattern::hard_decision(n);
            p.letters[..(2 * j).min(n)].iter_mut().for_each(|l| *l = 0);
            p
        })
        .collect();
    Ok(PatternSet::from_patterns(patterns, "GMD", true))
}

/// All even-size erasure sets of at most `f` positions among the `l` least reliable.
pub fn sed_set(l: usize, f: usize, n: usize) -> Result<PatternSet> {
    if f > l || l > n || l > 30 {
        return Err(Error::InvalidArgument(format!("SED({l},{f}) invalid for n = {n}")));
    }
    let mut patterns = Vec::new();
    for w in (0..=f).step_by(2) {
        let mut comb: Vec<usize> = (0..w).collect();
        loop {
            let mut p = ErasurePattern::hard_decision(n);
            for &i in &comb {
                p.letters[i] = 0;
            }
            patterns.push(p);
            // next combination in lexicographic order
            let Some(i) = (0..w).rev().find(|&i| comb[i] < l - w + i) else {
                break;
            };
            comb[i] += 1;
            for j in i + 1..w {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    Ok(PatternSet::from_patterns(patterns, format!("SED({l},{f})"), true))
}

/// Letters with smaller test-channel mass are never drawn.
const NEGLIGIBLE: f64 = 1e-12;

/// Per-position samplers over erasure letters `first_letter + column`.
struct LetterSampler {
    dists: Vec<Option<WeightedIndex<f64>>>,
    fixed: Vec<u8>,
    first_letter: u8,
}

impl LetterSampler {
    fn new(q_dists: &[Vec<f64>], first_letter: u8) -> Result<Self> {
        let mut dists = Vec::with_capacity(q_dists.len());
        let mut fixed = Vec::with_capacity(q_dists.len());
        for q in q_dists {
            let nonzero: Vec<usize> = (0..q.len()).filter(|&k| q[k] > NEGLIGIBLE).collect();
            if nonzero.len() == 1 {
                dists.push(None);
                fixed.push(first_letter + nonzero[0] as u8);
            } else {
                let w = WeightedIndex::new(q.iter().map(|&v| if v > NEGLIGIBLE { v } else { 0.0 }))
                    .map_err(|e| Error::InvalidArgument(format!("test-channel distribution: {e}")))?;
                dists.push(Some(w));
                fixed.push(0);
            }
        }
        Ok(LetterSampler {
            dists,
            fixed,
            first_letter,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ErasurePattern {
        let letters = self
            .dists
            .iter()
            .zip(&self.fixed)
            .map(|(d, &f)| match d {
                Some(d) => self.first_letter + d.sample(rng) as u8,
                None => f,
            })
            .collect();
        ErasurePattern { letters }
    }
}

/// 2^R patterns drawn position by position from the test-channel input
/// distributions of `rd`. Column `c` of a distribution maps to erasure letter
/// `first_letter + c`. With `force_hd` the first pattern is the plain
/// hard-decision pattern instead of a sample.
pub fn random_set<R: Rng + ?Sized>(
    rd: &RdPoint,
    rate: u32,
    first_letter: u8,
    force_hd: bool,
    rng: &mut R,
) -> Result<PatternSet> {
    if rate > 30 {
        return Err(Error::TooLarge(1 << 30));
    }
    let count = 1usize << rate;
    let sampler = LetterSampler::new(&rd.q_dists, first_letter)?;
    let mut patterns = Vec::with_capacity(count);
    if force_hd {
        patterns.push(ErasurePattern::hard_decision(rd.q_dists.len()));
    }
    while patterns.len() < count {
        patterns.push(sampler.sample(rng));
    }
    Ok(PatternSet::from_patterns(patterns, format!("RD({rate})"), force_hd))
}

/// An l-ary covering code with letters in `1..=l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringCode {
    pub n_c: usize,
    pub k_c: usize,
    pub t_c: usize,
    pub l: usize,
    pub codewords: Vec<Vec<u8>>,
}

impl CoveringCode {
    /// Largest distance from any word in {1..l}^{n_c} to the nearest codeword.
    /// Exhaustive, so only for short codes.
    pub fn covering_radius(&self) -> usize {
        let total = self.l.pow(self.n_c as u32);
        let mut word = vec![1u8; self.n_c];
        let mut radius = 0;
        for mut idx in 0..total {
            for w in word.iter_mut() {
                *w = (idx % self.l) as u8 + 1;
                idx /= self.l;
            }
            radius = radius.max(self.nearest(&word).1);
        }
        radius
    }

    /// Index of and Hamming distance to the nearest codeword (first on ties).
    pub fn nearest(&self, word: &[u8]) -> (usize, usize) {
        self.codewords
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.iter().zip(word).filter(|(a, b)| a != b).count()))
            .min_by_key(|&(i, d)| (d, i))
            .expect("non-empty code")
    }
}

/// Binary Hamming (7,4) code in systematic form, bit 0 written as letter 1
/// and bit 1 as letter 2.
pub fn hamming74() -> CoveringCode {
    const PARITY: [[u8; 3]; 4] = [[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]];
    let codewords = (0..16u8)
        .map(|m| {
            let data: Vec<u8> = (0..4).map(|i| (m >> (3 - i)) & 1).collect();
            let mut cw = data.clone();
            for j in 0..3 {
                cw.push((0..4).fold(0, |acc, i| acc ^ (data[i] & PARITY[i][j])));
            }
            cw.iter().map(|b| b + 1).collect()
        })
        .collect();
    CoveringCode {
        n_c: 7,
        k_c: 4,
        t_c: 1,
        l: 2,
        codewords,
    }
}

/// Covering codewords on the n_c least reliable positions, each paired with
/// every tail of a shared random set of rate R − k_c·log2(l) drawn from
/// `rd_tail` (which covers the remaining n − n_c positions).
pub fn covering_hybrid_set<R: Rng + ?Sized>(
    cov: &CoveringCode,
    rd_tail: &RdPoint,
    rate: u32,
    tail_first_letter: u8,
    force_hd: bool,
    rng: &mut R,
) -> Result<PatternSet> {
    let head_bits = cov.k_c as f64 * (cov.l as f64).log2();
    let tail_rate = rate as f64 - head_bits;
    if tail_rate < -1e-9 || (tail_rate - tail_rate.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "rate {rate} leaves a non-integral or negative tail rate {tail_rate}"
        )));
    }
    let tails = random_set(rd_tail, tail_rate.round() as u32, tail_first_letter, force_hd, rng)?;
    let mut patterns = Vec::with_capacity(cov.codewords.len() * tails.len());
    for cw in &cov.codewords {
        for t in &tails.patterns {
            let mut letters = cw.clone();
            letters.extend_from_slice(&t.letters);
            patterns.push(ErasurePattern { letters });
        }
    }
    let mut set = PatternSet::from_patterns(patterns, format!("COV({rate})"), force_hd);
    set.rate_bits = rate as f64;
    Ok(set)
}

/// Moves a reliability-ordered pattern to codeword order: `out[σ(i)] = in[i]`.
pub fn to_codeword_coords(p: &ErasurePattern, sigma: &[usize]) -> ErasurePattern {
    let mut letters = vec![0; p.letters.len()];
    for (i, &pos) in sigma.iter().enumerate() {
        letters[pos] = p.letters[i];
    }
    ErasurePattern { letters }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{distortion, error_only_measure, ErrorPattern};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn binom(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn gmd_shape() {
        let s = gmd_set(255, 17).unwrap();
        assert_eq!(s.len(), 9);
        assert!(s.patterns[0].letters.iter().all(|&l| l == 1));
        let second = &s.patterns[1].letters;
        assert_eq!(&second[..3], &[0, 0, 1]);
        assert_eq!(second.iter().filter(|&&l| l == 0).count(), 2);
        assert_eq!(s.patterns[8].letters.iter().filter(|&&l| l == 0).count(), 16);
        assert!(gmd_set(255, 16).is_err());
    }

    #[test]
    fn sed_small() {
        let s = sed_set(3, 2, 4).unwrap();
        let got: Vec<Vec<u8>> = s.patterns.iter().map(|p| p.letters.clone()).collect();
        assert_eq!(got, vec![vec![1, 1, 1, 1], vec![0, 0, 1, 1], vec![0, 1, 0, 1], vec![1, 0, 0, 1]]);
        assert_eq!(sed_set(5, 0, 8).unwrap().len(), 1);
    }

    #[test]
    fn sed_counts() {
        let s = sed_set(12, 12, 255).unwrap();
        assert_eq!(s.len(), 2048);
        assert!((s.rate_bits - 11.0).abs() < 1e-12);
        for (l, f) in [(6, 4), (9, 5), (10, 10)] {
            let want: u64 = (0..=f).step_by(2).map(|e| binom(l, e)).sum();
            assert_eq!(sed_set(l as usize, f as usize, 20).unwrap().len() as u64, want);
        }
        let mut uniq: Vec<_> = s.patterns.iter().map(|p| p.letters.clone()).collect();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 2048);
    }

    fn point(q: Vec<Vec<f64>>) -> RdPoint {
        RdPoint {
            s: -1.0,
            rate: 0.0,
            distortion: 0.0,
            q_dists: q,
        }
    }

    #[test]
    fn random_degenerate_and_rate_zero() {
        let rd = point(vec![vec![0.0, 1.0, 0.0]; 10]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_set(&rd, 5, 0, false, &mut rng).unwrap();
        assert_eq!(s.len(), 32);
        assert!(s.patterns.iter().all(|p| p.letters.iter().all(|&l| l == 1)));
        let rd = point(vec![vec![0.5, 0.5]; 10]);
        let s = random_set(&rd, 0, 0, true, &mut rng).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.patterns[0], ErasurePattern::hard_decision(10));
    }

    #[test]
    fn random_frequencies() {
        let q = vec![vec![0.1, 0.6, 0.3], vec![0.5, 0.25, 0.25], vec![0.02, 0.97, 0.01]];
        let rd = point(q.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = random_set(&rd, 14, 0, false, &mut rng).unwrap();
        let n = s.len() as f64;
        for (i, qi) in q.iter().enumerate() {
            for (k, &qk) in qi.iter().enumerate() {
                let c = s.patterns.iter().filter(|p| p.letters[i] == k as u8).count() as f64;
                let sd = (n * qk * (1.0 - qk)).sqrt();
                assert!((c - n * qk).abs() <= 3.0 * sd + 1.0, "pos {i} letter {k}: {c}");
            }
        }
    }

    #[test]
    fn random_set_is_seeded() {
        let rd = point(vec![vec![0.3, 0.7]; 30]);
        let a = random_set(&rd, 6, 0, true, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = random_set(&rd, 6, 0, true, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hamming_code() {
        let h = hamming74();
        assert_eq!(h.codewords.len(), 16);
        assert!(h.codewords.contains(&vec![2, 1, 1, 2, 1, 1, 2]));
        assert_eq!(h.covering_radius(), 1);
        let mut d = usize::MAX;
        for (i, a) in h.codewords.iter().enumerate() {
            for b in &h.codewords[i + 1..] {
                d = d.min(a.iter().zip(b).filter(|(x, y)| x != y).count());
            }
        }
        assert_eq!(d, 3);
    }

    #[test]
    fn hybrid_counts() {
        let h = hamming74();
        let tail = point(vec![vec![0.2, 0.8]; 248]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s4 = covering_hybrid_set(&h, &tail, 4, 1, true, &mut rng).unwrap();
        assert_eq!(s4.len(), 16);
        assert!(s4.patterns.iter().all(|p| p.len() == 255 && p.letters[7..].iter().all(|&l| l == 1)));
        let s11 = covering_hybrid_set(&h, &tail, 11, 1, true, &mut rng).unwrap();
        assert_eq!(s11.len(), 2048);
        assert!(covering_hybrid_set(&h, &tail, 3, 1, true, &mut rng).is_err());
    }

    #[test]
    fn split_covering_bound() {
        let h = hamming74();
        let dm = error_only_measure(7, 3, 2);
        let tail = point(Vec::new());
        let set = covering_hybrid_set(&h, &tail, 4, 1, true, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for idx in 0..3usize.pow(7) {
            let letters: Vec<u8> = (0..7).map(|i| ((idx / 3usize.pow(i)) % 3) as u8).collect();
            let z = letters.iter().filter(|&&l| l == 0).count();
            let x = ErrorPattern { letters };
            let best = set
                .patterns
                .iter()
                .map(|p| distortion(&x, p, &dm).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(best <= (h.t_c + z) as f64);
        }
    }

    #[test]
    fn coordinate_translation() {
        let p = ErasurePattern { letters: vec![0, 1, 1] };
        assert_eq!(to_codeword_coords(&p, &[0, 1, 2]), p);
        let out = to_codeword_coords(&p, &[1, 2, 0]);
        assert_eq!(out.letters, vec![1, 0, 1]);
        let sigma = [4, 0, 3, 1, 2];
        let p = ErasurePattern { letters: vec![5, 6, 7, 8, 9] };
        let c = to_codeword_coords(&p, &sigma);
        let back: Vec<u8> = sigma.iter().map(|&pos| c.letters[pos]).collect();
        assert_eq!(back, p.letters);
    }

    #[test]
    fn dump_format() {
        let s = sed_set(3, 2, 4).unwrap();
        let mut buf = Vec::new();
        s.write_dump(&mut buf, 7).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# scheme=SED(3,2)"));
        assert_eq!(&lines[1..], &["1111", "0011", "0101", "1001"]);
    }
}
