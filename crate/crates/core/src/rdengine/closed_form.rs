//! Closed-form rate-distortion functions for binary-alphabet components.
//!
//! Each component is described by `p_i`, the probability that the hard
//! decision at that position is correct (source letter 1).

use crate::error::{Error, Result};

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

fn check_probs(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::InvalidArgument("probability outside [0, 1]".into()));
    }
    Ok(())
}

/// Reverse water-filling solution for the conventional (erase-or-keep) measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ConventionalSolution {
    pub rate: f64,
    pub distortion: f64,
    /// Water level.
    pub level: f64,
    /// Per-position shifted distortion `min(level, min(p_i, 1 − p_i))`.
    pub d_tilde: Vec<f64>,
    /// Per-position test-channel input `[Pr(erase), Pr(keep)]`.
    pub q_dists: Vec<[f64; 2]>,
}

/// Solution at water level `level` in [0, 1/2].
pub fn closedform_conventional_at_level(p: &[f64], level: f64) -> Result<ConventionalSolution> {
    check_probs(p)?;
    if !(0.0..=0.5).contains(&level) {
        return Err(Error::InvalidArgument(format!("water level {level} outside [0, 1/2]")));
    }
    let mut rate = 0.0;
    let mut distortion = 0.0;
    let mut d_tilde = Vec::with_capacity(p.len());
    let mut q_dists = Vec::with_capacity(p.len());
    for &pi in p {
        let cap = pi.min(1.0 - pi);
        let dt = level.min(cap);
        rate += (h2(pi) - h2(dt)).max(0.0);
        distortion += dt + 1.0 - pi;
        let q0 = if dt >= cap {
            // inactive: single-letter reproduction
            if pi <= 0.5 { 1.0 } else { 0.0 }
        } else {
            ((1.0 - pi - dt) / (1.0 - 2.0 * dt)).clamp(0.0, 1.0)
        };
        d_tilde.push(dt);
        q_dists.push([q0, 1.0 - q0]);
    }
    Ok(ConventionalSolution {
        rate,
        distortion,
        level,
        d_tilde,
        q_dists,
    })
}

/// Solution with total distortion `d_total`, the water level being solved
/// exactly from the sorted caps.
pub fn closedform_conventional(p: &[f64], d_total: f64) -> Result<ConventionalSolution> {
    check_probs(p)?;
    let n = p.len();
    let shift: f64 = p.iter().map(|pi| 1.0 - pi).sum();
    let mut caps: Vec<f64> = p.iter().map(|&pi| pi.min(1.0 - pi)).collect();
    caps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total_cap: f64 = caps.iter().sum();
    let t = d_total - shift;
    if t < -1e-12 || t > total_cap + 1e-12 {
        return Err(Error::InfeasibleDistortion {
            target: d_total,
            min: shift,
            max: shift + total_cap,
        });
    }
    let t = t.clamp(0.0, total_cap);
    // Σ_i min(λ, c_i) = t, piecewise linear in λ
    let mut prefix = 0.0;
    let mut level = caps.last().copied().unwrap_or(0.0);
    for (m, &c) in caps.iter().enumerate() {
        let at_c = prefix + (n - m) as f64 * c;
        if at_c >= t {
            level = (t - prefix) / (n - m) as f64;
            break;
        }
        prefix += c;
    }
    closedform_conventional_at_level(p, level.clamp(0.0, 0.5))
}

/// Solution for the bit-level measure at parameter `lambda` in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct BitLevelSolution {
    pub rate: f64,
    pub distortion: f64,
    pub lambda: f64,
    pub rates: Vec<f64>,
    pub distortions: Vec<f64>,
    /// Per-position `[Pr(erase), Pr(keep)]`.
    pub q_dists: Vec<[f64; 2]>,
}

pub fn closedform_bitlevel(p: &[f64], lambda: f64) -> Result<BitLevelSolution> {
    check_probs(p)?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside (0, 1)")));
    }
    let l = lambda;
    let g = 1.0 + l + l * l;
    let hi = (1.0 + l) / g;
    let lo = l * (1.0 + l) / g;
    let hl = h2(l / (1.0 + l));
    let mut rates = Vec::with_capacity(p.len());
    let mut distortions = Vec::with_capacity(p.len());
    let mut q_dists = Vec::with_capacity(p.len());
    for &pi in p {
        let r = h2(pi) - h2(hi) + (pi - hi) * hl;
        if r > 0.0 && pi > lo && pi < hi {
            rates.push(r);
            distortions.push((1.0 + 2.0 * l + 3.0 * l * l) / g - pi * (1.0 + 2.0 * l) / (1.0 + l));
            let q0 = ((1.0 + l) - pi * g) / (1.0 - l * l);
            q_dists.push([q0, 1.0 - q0]);
        } else {
            rates.push(0.0);
            let keep = 3.0 * (1.0 - pi);
            if keep < 1.0 {
                distortions.push(keep);
                q_dists.push([0.0, 1.0]);
            } else {
                distortions.push(1.0);
                q_dists.push([1.0, 0.0]);
            }
        }
    }
    Ok(BitLevelSolution {
        rate: rates.iter().sum(),
        distortion: distortions.iter().sum(),
        lambda,
        rates,
        distortions,
        q_dists,
    })
}

/// Bit-level solution with total distortion `d_total`, by bisection on λ.
pub fn closedform_bitlevel_at_distortion(p: &[f64], d_total: f64) -> Result<BitLevelSolution> {
    let (mut a, mut b) = (1e-12, 1.0 - 1e-12);
    let dmin = closedform_bitlevel(p, a)?.distortion;
    let dmax = closedform_bitlevel(p, b)?.distortion;
    if d_total < dmin - 1e-9 || d_total > dmax + 1e-9 {
        return Err(Error::InfeasibleDistortion {
            target: d_total,
            min: dmin,
            max: dmax,
        });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if closedform_bitlevel(p, m)?.distortion < d_total {
            a = m;
        } else {
            b = m;
        }
    }
    closedform_bitlevel(p, 0.5 * (a + b))
}
