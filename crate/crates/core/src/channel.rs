//! BPSK over AWGN, symbol/bit a-posteriori probabilities and reliability order.
//!
//! Bit `t` of symbol `i` is sent at index `i·q + t`; bit 0 maps to +1 and bit 1
//! to −1. With unit energy per coded bit the noise variance is
//! `σ² = 1 / (2·(k/n)·Eb/N0)`, i.e. `Es = (k/n)·q·Eb` per symbol.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub ebno_db: f64,
    pub code_rate: f64,
    pub q: u32,
}

impl ChannelConfig {
    pub fn new(ebno_db: f64, code_rate: f64, q: u32) -> Result<Self> {
        if !ebno_db.is_finite() {
            return Err(Error::InvalidArgument(format!("Eb/N0 {ebno_db} dB is not finite")));
        }
        if !(code_rate > 0.0 && code_rate < 1.0) {
            return Err(Error::InvalidArgument(format!("code rate {code_rate} outside (0,1)")));
        }
        if !(1..=8).contains(&q) {
            return Err(Error::InvalidArgument(format!("q = {q} outside 1..=8")));
        }
        Ok(ChannelConfig {
            ebno_db,
            code_rate,
            q,
        })
    }

    /// Noise variance per real dimension, N0/2.
    pub fn noise_variance(&self) -> f64 {
        let ebno = 10f64.powf(self.ebno_db / 10.0);
        1.0 / (2.0 * self.code_rate * ebno)
    }
}

/// Noise-free BPSK image of a codeword.
pub fn modulate(codeword: &[u8], q: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(codeword.len() * q as usize);
    for &s in codeword {
        for t in 0..q {
            out.push(if (s >> t) & 1 == 0 { 1.0 } else { -1.0 });
        }
    }
    out
}

/// Adds white Gaussian noise of standard deviation `sigma` to a modulated word.
pub fn transmit_with_sigma<R: Rng + ?Sized>(
    codeword: &[u8],
    q: u32,
    sigma: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = modulate(codeword, q);
    if sigma > 0.0 {
        for y in &mut out {
            let z: f64 = rng.sample(StandardNormal);
            *y += sigma * z;
        }
    }
    out
}

pub fn transmit<R: Rng + ?Sized>(cfg: &ChannelConfig, codeword: &[u8], rng: &mut R) -> Vec<f64> {
    transmit_with_sigma(codeword, cfg.q, cfg.noise_variance().sqrt(), rng)
}

/// Column-major a-posteriori probability matrix: `get(j, i) = Pr(c_i = j | r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AppMatrix {
    size: usize,
    n: usize,
    data: Vec<f64>,
}

impl AppMatrix {
    /// Builds a matrix from rows indexed by symbol, columns by position.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut data = vec![0.0; size * n];
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (i, &p) in row.iter().enumerate() {
                if p.is_nan() || p < 0.0 {
                    return Err(Error::InvalidArgument(format!("negative probability {p}")));
                }
                data[i * size + j] = p;
            }
        }
        Ok(AppMatrix { size, n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Alphabet size, 2^q.
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, symbol: usize, position: usize) -> f64 {
        self.data[position * self.size + symbol]
    }

    pub fn column(&self, position: usize) -> &[f64] {
        &self.data[position * self.size..(position + 1) * self.size]
    }
}

/// Symbol posteriors from the received reals, assuming the q bits of a symbol
/// are independent given the channel output.
pub fn symbol_app(cfg: &ChannelConfig, received: &[f64]) -> AppMatrix {
    let q = cfg.q as usize;
    let size = 1usize << q;
    let n = received.len() / q;
    let scale = 2.0 / cfg.noise_variance();
    let mut data = vec![0.0; size * n];
    let mut llr = vec![0.0; q];
    for i in 0..n {
        for t in 0..q {
            llr[t] = scale * received[i * q + t];
        }
        let col = &mut data[i * size..(i + 1) * size];
        // log-weight of a symbol relative to the all-zero bit pattern
        col[0] = 0.0;
        for t in 0..q {
            let half = 1 << t;
            for s in 0..half {
                col[s + half] = col[s] - llr[t];
            }
        }
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in col.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in col.iter_mut() {
            *v /= sum;
        }
    }
    AppMatrix { size, n, data }
}

/// Per-column symbol ranks `π_i` and the position order `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityView {
    size: usize,
    /// ranked[i·size + r] = symbol holding rank r (0 = most likely) at position i.
    ranked: Vec<u8>,
    /// sigma[r] = position that is the r-th least reliable (0-based).
    sigma: Vec<usize>,
    /// top[i] = probability of the most likely symbol at position i.
    top: Vec<f64>,
}

fn rank_column(col: &[f64]) -> Vec<u8> {
    let mut idx: Vec<u8> = (0..col.len()).map(|j| j as u8).collect();
    idx.sort_by(|&a, &b| {
        col[b as usize]
            .partial_cmp(&col[a as usize])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

fn sort_ascending_stable(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Sorts each column in decreasing probability and the positions by increasing
/// top-symbol probability. Ties go to the lower index.
pub fn reliability(app: &AppMatrix) -> ReliabilityView {
    let size = app.size();
    let mut ranked = Vec::with_capacity(size * app.n());
    let mut top = Vec::with_capacity(app.n());
    for i in 0..app.n() {
        let col = app.column(i);
        let r = rank_column(col);
        top.push(col[r[0] as usize]);
        ranked.extend_from_slice(&r);
    }
    let sigma = sort_ascending_stable(&top);
    ReliabilityView {
        size,
        ranked,
        sigma,
        top,
    }
}

impl ReliabilityView {
    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Symbol with 0-based rank `rank` at codeword position `position`.
    #[inline]
    pub fn symbol(&self, position: usize, rank: usize) -> u8 {
        self.ranked[position * self.size + rank]
    }

    /// The full rank order π_i of a position (0-based symbol values).
    pub fn pi(&self, position: usize) -> &[u8] {
        &self.ranked[position * self.size..(position + 1) * self.size]
    }

    /// Rank of `symbol` at `position`, 0-based.
    pub fn rank_of(&self, position: usize, symbol: u8) -> usize {
        self.pi(position)
            .iter()
            .position(|&s| s == symbol)
            .expect("symbol in alphabet")
    }

    /// σ: `sigma()[r]` is the r-th least reliable position.
    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn top_probability(&self, position: usize) -> f64 {
        self.top[position]
    }

    /// Hard-decision word (rank-0 symbol at each position).
    pub fn hard_decisions(&self) -> Vec<u8> {
        (0..self.n()).map(|i| self.symbol(i, 0)).collect()
    }
}

/// Bit-level reliabilities and their ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct BitReliability {
    /// Pr(hard-decision bit is correct | r) per bit index.
    pub posteriors: Vec<f64>,
    pub hard_bits: Vec<u8>,
    /// sigma[r] = bit index that is the r-th least reliable.
    pub sigma: Vec<usize>,
}

pub fn bit_app(cfg: &ChannelConfig, received: &[f64]) -> BitReliability {
    let scale = 2.0 / cfg.noise_variance();
    let posteriors: Vec<f64> = received
        .iter()
        .map(|&y| 1.0 / (1.0 + (-(scale * y).abs()).exp()))
        .collect();
    let hard_bits = received.iter().map(|&y| u8::from(y < 0.0)).collect();
    let sigma = sort_ascending_stable(&posteriors);
    BitReliability {
        posteriors,
        hard_bits,
        sigma,
    }
}
