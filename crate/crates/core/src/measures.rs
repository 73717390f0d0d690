//! Distortion measures between error patterns and erasure patterns, the
//! allowable multiplicity types for symbol-level ASD, and the score/cost
//! threshold oracle for algebraic soft-decision decoding.
//!
//! Every measure keeps its letter-by-letter matrix as integers scaled by a
//! common denominator, so the strict test `d(x, x̂) < threshold` is exact.
//!
//! Letters follow one convention throughout:
//!
//! * error letter `j ≥ 1`: the j-th most likely symbol is the transmitted one;
//!   error letter 0: none of the top `l` is.
//! * erasure letter 1 is always the plain hard-decision choice. For mBM
//!   measures letter 0 erases and letter `j` uses the j-th most likely symbol;
//!   for error-only measures letters run over `1..=l`; for ASD measures letter
//!   `t` selects the t-th allowable multiplicity type.
//!
//! Patterns are stored in reliability order: entry `r` belongs to the r-th
//! least reliable position.

use serde::{Deserialize, Serialize};

use crate::channel::{BitReliability, ReliabilityView};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorPattern {
    pub letters: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErasurePattern {
    pub letters: Vec<u8>,
}

impl ErasurePattern {
    pub fn hard_decision(len: usize) -> Self {
        ErasurePattern {
            letters: vec![1; len],
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// Per-column multiplicities `(m_1, …, m_l)` over the top-l symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiplicityType(pub Vec<u32>);

impl MultiplicityType {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Membership test for A(m, l) with l = self.len().
    pub fn is_allowable(&self, m: u32) -> bool {
        let m = m as i64;
        let v: Vec<i64> = self.0.iter().map(|&x| x as i64).collect();
        if v.iter().sum::<i64>() > m {
            return false;
        }
        let nonzero: Vec<i64> = v.iter().copied().filter(|&x| x != 0).collect();
        let min_nz = nonzero.iter().copied().min().unwrap_or(0);
        let lhs: i64 = v.iter().map(|&x| x * (m - x)).sum();
        let rhs = (m + 1) * (nonzero.len() as i64 - 1) * min_nz;
        lhs <= rhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MeasureKind {
    /// mBM-l; l = 1 is the conventional error-and-erasure measure.
    Mbm { l: usize },
    BitLevel,
    ErrorOnly { l: usize },
    Asd { m: u32, types: Vec<MultiplicityType> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionMeasure {
    kind: MeasureKind,
    rows: usize,
    cols: usize,
    /// Erasure letter of column 0 (0 for mBM and bit-level, 1 otherwise).
    offset: u8,
    /// Row-major `rows × (offset + cols)` table indexed by raw letters.
    table: Vec<i64>,
    scale: i64,
    threshold: i64,
}

impl DistortionMeasure {
    fn build(
        kind: MeasureKind,
        rows: usize,
        cols: usize,
        offset: u8,
        scale: i64,
        threshold: i64,
        entry: impl Fn(usize, usize) -> i64,
    ) -> Self {
        let stride = offset as usize + cols;
        let mut table = vec![0i64; rows * stride];
        for x in 0..rows {
            for c in 0..cols {
                table[x * stride + offset as usize + c] = entry(x, c);
            }
        }
        DistortionMeasure {
            kind,
            rows,
            cols,
            offset,
            table,
            scale,
            threshold,
        }
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// Error alphabet size.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Erasure alphabet size.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Smallest erasure letter.
    pub fn first_letter(&self) -> u8 {
        self.offset
    }

    /// All erasure letters in column order.
    pub fn erasure_letters(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.cols).map(move |c| self.offset + c as u8)
    }

    #[inline]
    fn stride(&self) -> usize {
        self.offset as usize + self.cols
    }

    /// δ(x, x̂) multiplied by [`Self::scale`].
    #[inline]
    pub fn delta_scaled(&self, x: u8, xh: u8) -> i64 {
        self.table[x as usize * self.stride() + xh as usize]
    }

    pub fn delta(&self, x: u8, xh: u8) -> f64 {
        self.delta_scaled(x, xh) as f64 / self.scale as f64
    }

    /// Δ as real numbers, `rows × cols`, columns in erasure-letter order.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|x| {
                self.erasure_letters()
                    .map(|c| self.delta(x as u8, c))
                    .collect()
            })
            .collect()
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn threshold(&self) -> f64 {
        self.threshold as f64 / self.scale as f64
    }

    pub fn threshold_scaled(&self) -> i64 {
        self.threshold
    }

    fn check_letters(&self, x: &[u8], xh: &[u8]) -> Result<()> {
        if x.len() != xh.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                got: xh.len(),
            });
        }
        if let Some(&bad) = x.iter().find(|&&a| a as usize >= self.rows) {
            return Err(Error::AlphabetMismatch {
                letter: bad as usize,
                size: self.rows,
            });
        }
        let hi = self.offset as usize + self.cols;
        if let Some(&bad) = xh
            .iter()
            .find(|&&a| (a as usize) < self.offset as usize || a as usize >= hi)
        {
            return Err(Error::AlphabetMismatch {
                letter: bad as usize,
                size: self.cols,
            });
        }
        Ok(())
    }

    /// Scaled distortion without alphabet checks, for hot loops.
    #[inline]
    pub fn distortion_scaled_unchecked(&self, x: &[u8], xh: &[u8]) -> i64 {
        let stride = self.stride();
        x.iter()
            .zip(xh)
            .map(|(&a, &b)| self.table[a as usize * stride + b as usize])
            .sum()
    }
}

/// Conventional error-and-erasure measure: Δ = [[1, 2], [1, 0]], threshold n − k + 1.
pub fn conventional_measure(n: usize, k: usize) -> DistortionMeasure {
    mbm_measure(n, k, 1)
}

/// mBM-l: erase or pick one of the top-l symbols as hard decision.
pub fn mbm_measure(n: usize, k: usize, l: usize) -> DistortionMeasure {
    assert!((1..256).contains(&l), "mBM alphabet size l = {l} out of range");
    DistortionMeasure::build(
        MeasureKind::Mbm { l },
        l + 1,
        l + 1,
        0,
        1,
        (n - k + 1) as i64,
        |x, c| {
            if c == 0 {
                1
            } else if x == c {
                0
            } else {
                2
            }
        },
    )
}

/// Bit-level ASD measure Δ = [[1, 3], [1, 0]] with threshold (n − k + 1)/2.
pub fn bitlevel_measure(n: usize, k: usize) -> Result<DistortionMeasure> {
    // k/n ≥ 2/3 + 1/n
    if 3 * k < 2 * n + 3 {
        return Err(Error::RateConstraint(format!(
            "bit-level ASD requires k/n ≥ 2/3 + 1/n, got ({n},{k})"
        )));
    }
    Ok(DistortionMeasure::build(
        MeasureKind::BitLevel,
        2,
        2,
        0,
        2,
        (n - k + 1) as i64,
        |x, c| match (x, c) {
            (0, 0) | (1, 0) => 2,
            (0, 1) => 6,
            _ => 0,
        },
    ))
}

/// Error-only decoding over the top-l symbols; threshold (n − k + 1)/2.
pub fn error_only_measure(n: usize, k: usize, l: usize) -> DistortionMeasure {
    assert!((1..256).contains(&l), "error-only alphabet size l = {l} out of range");
    DistortionMeasure::build(
        MeasureKind::ErrorOnly { l },
        l + 1,
        l,
        1,
        2,
        (n - k + 1) as i64,
        |x, c| if x == c + 1 { 0 } else { 2 },
    )
}

/// All allowable multiplicity types A(m, l), lexicographically descending.
pub fn allowable_types(m: u32, l: usize) -> Vec<MultiplicityType> {
    fn rec(m: u32, l: usize, prefix: &mut Vec<u32>, remaining: u32, out: &mut Vec<MultiplicityType>) {
        if prefix.len() == l {
            let t = MultiplicityType(prefix.clone());
            if t.is_allowable(m) {
                out.push(t);
            }
            return;
        }
        for v in (0..=remaining).rev() {
            prefix.push(v);
            rec(m, l, prefix, remaining - v, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, l, &mut Vec::with_capacity(l), m, &mut out);
    out
}

/// Checks k/n ≥ 1/n + m(m+3)/((m+1)(m+2)).
pub fn asd_rate_ok(n: usize, k: usize, m: u32) -> bool {
    let m = m as u128;
    (k as u128 - 1) * (m + 1) * (m + 2) >= n as u128 * m * (m + 3)
}

/// Symbol-level ASD measure for the given multiplicity types (letter t ↔ types[t−1]).
pub fn asd_measure(
    n: usize,
    k: usize,
    m: u32,
    types: &[MultiplicityType],
) -> Result<DistortionMeasure> {
    if m == 0 || k < 2 {
        return Err(Error::InvalidArgument("ASD needs m ≥ 1 and k ≥ 2".into()));
    }
    if !asd_rate_ok(n, k, m) {
        return Err(Error::RateConstraint(format!(
            "ASD with m = {m} requires k/n ≥ 1/n + m(m+3)/((m+1)(m+2)), got ({n},{k})"
        )));
    }
    let l = types.first().map_or(0, |t| t.0.len());
    if l == 0 {
        return Err(Error::InvalidArgument("empty multiplicity type list".into()));
    }
    for t in types {
        if t.0.len() != l || !t.is_allowable(m) {
            return Err(Error::NotAllowable(t.0.clone()));
        }
    }
    let mi = m as i64;
    let scale = mi * (mi + 1);
    let mu: Vec<i64> = types
        .iter()
        .map(|t| scale + t.0.iter().map(|&r| r as i64 * (r as i64 + 1)).sum::<i64>())
        .collect();
    Ok(DistortionMeasure::build(
        MeasureKind::Asd {
            m,
            types: types.to_vec(),
        },
        l + 1,
        types.len(),
        1,
        scale,
        (n - k + 1) as i64 * scale,
        |x, c| {
            if x == 0 {
                mu[c]
            } else {
                mu[c] - 2 * types[c].0[x - 1] as i64 * (mi + 1)
            }
        },
    ))
}

/// The reduced mASD-2a type set {(2,0), (1,1), (0,0)}.
pub fn masd_2a_types() -> Vec<MultiplicityType> {
    vec![
        MultiplicityType(vec![2, 0]),
        MultiplicityType(vec![1, 1]),
        MultiplicityType(vec![0, 0]),
    ]
}

/// Genie error pattern in reliability order over the top-l symbols.
pub fn extract_error_pattern(codeword: &[u8], view: &ReliabilityView, l: usize) -> ErrorPattern {
    let letters = view
        .sigma()
        .iter()
        .map(|&pos| {
            let pi = view.pi(pos);
            let c = codeword[pos];
            pi.iter()
                .take(l)
                .position(|&s| s == c)
                .map_or(0, |r| (r + 1) as u8)
        })
        .collect();
    ErrorPattern { letters }
}

/// Genie bit-level error pattern (1 = hard-decision bit correct) in bit-reliability order.
pub fn extract_bit_error_pattern(codeword: &[u8], bits: &BitReliability, q: u32) -> ErrorPattern {
    let q = q as usize;
    let letters = bits
        .sigma
        .iter()
        .map(|&b| {
            let tx = (codeword[b / q] >> (b % q)) & 1;
            u8::from(bits.hard_bits[b] == tx)
        })
        .collect();
    ErrorPattern { letters }
}

pub fn distortion(x: &ErrorPattern, xh: &ErasurePattern, dm: &DistortionMeasure) -> Result<f64> {
    dm.check_letters(&x.letters, &xh.letters)?;
    Ok(dm.distortion_scaled_unchecked(&x.letters, &xh.letters) as f64 / dm.scale as f64)
}

/// Strict threshold test `d(x, x̂) < threshold`, evaluated in scaled integers.
pub fn succeeds(x: &ErrorPattern, xh: &ErasurePattern, dm: &DistortionMeasure) -> bool {
    x.letters.len() == xh.letters.len()
        && dm.check_letters(&x.letters, &xh.letters).is_ok()
        && dm.distortion_scaled_unchecked(&x.letters, &xh.letters) < dm.threshold
}

/// Column-major `2^q × n` multiplicity matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityMatrix {
    size: usize,
    n: usize,
    data: Vec<u32>,
}

impl MultiplicityMatrix {
    pub fn zeros(size: usize, n: usize) -> Self {
        MultiplicityMatrix {
            size,
            n,
            data: vec![0; size * n],
        }
    }

    #[inline]
    pub fn get(&self, symbol: usize, position: usize) -> u32 {
        self.data[position * self.size + symbol]
    }

    pub fn set(&mut self, symbol: usize, position: usize, value: u32) {
        self.data[position * self.size + symbol] = value;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_entry(&self) -> u32 {
        self.data.iter().copied().max().unwrap_or(0)
    }
}

/// Multiplicity matrix from a symbol-level ASD erasure pattern.
pub fn build_multiplicity_matrix(
    xh: &ErasurePattern,
    view: &ReliabilityView,
    types: &[MultiplicityType],
    q: u32,
) -> Result<MultiplicityMatrix> {
    let n = view.n();
    if xh.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: xh.len(),
        });
    }
    let mut mm = MultiplicityMatrix::zeros(1 << q, n);
    for (r, &letter) in xh.letters.iter().enumerate() {
        let t = letter
            .checked_sub(1)
            .and_then(|t| types.get(t as usize))
            .ok_or(Error::AlphabetMismatch {
                letter: letter as usize,
                size: types.len(),
            })?;
        let pos = view.sigma()[r];
        for (j, &mult) in t.0.iter().enumerate() {
            if mult > 0 {
                mm.set(view.symbol(pos, j) as usize, pos, mult);
            }
        }
    }
    Ok(mm)
}

/// Bit-level MAS: multiplicity 2 on the hard-decision symbol when no bit is
/// erased, 1 on both candidates when one bit is erased, nothing otherwise.
/// `bit_pattern` is in bit-reliability order (letter 0 = erased bit).
pub fn bit_multiplicity_matrix(
    bit_pattern: &ErasurePattern,
    bits: &BitReliability,
    q: u32,
) -> Result<MultiplicityMatrix> {
    let q = q as usize;
    let total = bits.hard_bits.len();
    if bit_pattern.len() != total {
        return Err(Error::LengthMismatch {
            expected: total,
            got: bit_pattern.len(),
        });
    }
    let n = total / q;
    let mut erased = vec![false; total];
    for (r, &letter) in bit_pattern.letters.iter().enumerate() {
        erased[bits.sigma[r]] = letter == 0;
    }
    let mut mm = MultiplicityMatrix::zeros(1 << q, n);
    for i in 0..n {
        let hd = (0..q).fold(0usize, |acc, t| acc | (bits.hard_bits[i * q + t] as usize) << t);
        let er: Vec<usize> = (0..q).filter(|&t| erased[i * q + t]).collect();
        match er.len() {
            0 => mm.set(hd, i, 2),
            1 => {
                mm.set(hd, i, 1);
                mm.set(hd ^ (1 << er[0]), i, 1);
            }
            _ => {}
        }
    }
    Ok(mm)
}

/// Score S_M(c) = Σ_j M[c_j][j].
pub fn score(mm: &MultiplicityMatrix, codeword: &[u8]) -> u64 {
    codeword
        .iter()
        .enumerate()
        .map(|(j, &c)| mm.get(c as usize, j) as u64)
        .sum()
}

/// Cost C_M = ½ ΣΣ m(m+1).
pub fn cost(mm: &MultiplicityMatrix) -> u64 {
    mm.data.iter().map(|&m| m as u64 * (m as u64 + 1)).sum::<u64>() / 2
}

/// ASD list-membership condition T(S) > C with a(k−1) < S ≤ (a+1)(k−1).
///
/// The admissible `a` is unique for S > 0, so it is computed directly.
pub fn asd_condition2(score: u64, cost: u64, k: usize) -> bool {
    if score == 0 || k < 2 {
        return false;
    }
    let km1 = (k - 1) as i128;
    let s = score as i128;
    let a = (s - 1) / km1;
    debug_assert!(a * km1 < s && s <= (a + 1) * km1);
    // (a+1)(S − a(k−1)/2) > C, doubled to stay integral
    (a + 1) * (2 * s - a * km1) > 2 * cost as i128
}
