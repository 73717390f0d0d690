//! Rate-distortion computation for sources made of independent, non-identical
//! components.
//!
//! The slope parameter `s < 0` is in nats per unit distortion: the test channel
//! at slope `s` is `Q(k|j) ∝ q_k · exp(s·δ(j, k))`. Rates are reported in bits.
//!
//! [`factored_rd`] runs Blahut-Arimoto independently on every component at a
//! common slope and sums rates and distortions. [`ba_direct_super`] runs the
//! same iteration on the product alphabet and exists to check the factorization
//! on tiny sources.

pub mod closed_form;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::DistortionMeasure;

pub use closed_form::{
    closedform_bitlevel, closedform_bitlevel_at_distortion, closedform_conventional,
    closedform_conventional_at_level, BitLevelSolution, ConventionalSolution,
};

/// Per-position source distributions over the error alphabet, indexed by
/// reliability rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub dists: Vec<Vec<f64>>,
}

impl SourceModel {
    pub fn new(dists: Vec<Vec<f64>>) -> Result<Self> {
        let alphabet = dists.first().map_or(0, Vec::len);
        for d in &dists {
            if d.len() != alphabet {
                return Err(Error::LengthMismatch {
                    expected: alphabet,
                    got: d.len(),
                });
            }
            if d.iter().any(|&p| p.is_nan() || p < 0.0) {
                return Err(Error::InvalidArgument("negative source probability".into()));
            }
            let s: f64 = d.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "source distribution sums to {s}"
                )));
            }
        }
        Ok(SourceModel { dists })
    }

    pub fn n(&self) -> usize {
        self.dists.len()
    }

    pub fn alphabet(&self) -> usize {
        self.dists.first().map_or(0, Vec::len)
    }

    /// Components `range` of this model, as a new model.
    pub fn slice(&self, range: std::ops::Range<usize>) -> SourceModel {
        SourceModel {
            dists: self.dists[range].to_vec(),
        }
    }
}

/// A point on the rate-distortion curve together with the per-position
/// test-channel input distributions that achieve it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub s: f64,
    pub rate: f64,
    pub distortion: f64,
    pub q_dists: Vec<Vec<f64>>,
}

/// Result of Blahut-Arimoto on a single component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPoint {
    pub rate: f64,
    pub distortion: f64,
    pub q: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaOptions {
    /// Stop once the objective bound gap (nats) is below this.
    pub tol: f64,
    pub max_iters: usize,
    /// After `max_iters`, a gap larger than this is reported as non-convergence.
    pub fail_above: f64,
}

impl Default for BaOptions {
    fn default() -> Self {
        BaOptions {
            tol: 1e-13,
            max_iters: 200_000,
            fail_above: 1e-9,
        }
    }
}

/// Blahut-Arimoto state for one component with zero-probability source
/// letters removed.
pub(crate) struct BaKernel {
    p: Vec<f64>,
    delta: Vec<Vec<f64>>,
    /// a[j][k] = exp(s·δ(j,k))
    a: Vec<Vec<f64>>,
    cols: usize,
}

impl BaKernel {
    pub(crate) fn new(p: &[f64], delta: &[Vec<f64>], s: f64) -> Self {
        let cols = delta.first().map_or(0, Vec::len);
        let mut kp = Vec::new();
        let mut kd = Vec::new();
        for (j, &pj) in p.iter().enumerate() {
            if pj > 0.0 {
                kp.push(pj);
                kd.push(delta[j].clone());
            }
        }
        let a = kd
            .iter()
            .map(|row| row.iter().map(|&d| (s * d).exp()).collect())
            .collect();
        BaKernel {
            p: kp,
            delta: kd,
            a,
            cols,
        }
    }

    /// Test channel Q(k|j) for input distribution q.
    pub(crate) fn channel(&self, q: &[f64]) -> Vec<Vec<f64>> {
        self.a
            .iter()
            .map(|row| {
                let z: f64 = row.iter().zip(q).map(|(a, q)| a * q).sum();
                row.iter().zip(q).map(|(a, q)| a * q / z).collect()
            })
            .collect()
    }

    #[cfg(test)]
    /// One iteration q ← Σ_j p_j Q(·|j).
    pub(crate) fn step(&self, q: &[f64], next: &mut [f64]) {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (row, &pj) in self.a.iter().zip(&self.p) {
            let z: f64 = row.iter().zip(q).map(|(a, q)| a * q).sum();
            let w = pj / z;
            for k in 0..self.cols {
                next[k] += w * row[k] * q[k];
            }
        }
    }

    /// Mutual information (bits), distortion and output marginal of the channel induced by q.
    pub(crate) fn evaluate(&self, q: &[f64]) -> (f64, f64, Vec<f64>) {
        let ch = self.channel(q);
        let mut out = vec![0.0; self.cols];
        for (row, &pj) in ch.iter().zip(&self.p) {
            for k in 0..self.cols {
                out[k] += pj * row[k];
            }
        }
        let mut rate = 0.0;
        let mut dist = 0.0;
        for (j, row) in ch.iter().enumerate() {
            for k in 0..self.cols {
                let qk = row[k];
                if qk > 0.0 {
                    rate += self.p[j] * qk * (qk / out[k]).log2();
                    dist += self.p[j] * qk * self.delta[j][k];
                }
            }
        }
        (rate.max(0.0), dist, out)
    }

    /// Z_j = Σ_k q_k a_jk and c_k = Σ_j p_j a_jk / Z_j.
    fn sums(&self, q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z: Vec<f64> = self
            .a
            .iter()
            .map(|row| row.iter().zip(q).map(|(a, q)| a * q).sum())
            .collect();
        let mut c = vec![0.0; self.cols];
        for ((row, &pj), &zj) in self.a.iter().zip(&self.p).zip(&z) {
            for k in 0..self.cols {
                c[k] += pj * row[k] / zj;
            }
        }
        (z, c)
    }

    /// Gap between the upper and lower bounds on the objective, in nats.
    fn gap(q: &[f64], c: &[f64]) -> f64 {
        let max = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ln();
        let avg: f64 = q
            .iter()
            .zip(c)
            .filter(|(q, _)| **q > 0.0)
            .map(|(q, c)| q * c * c.ln())
            .sum();
        (max - avg).max(0.0)
    }

    fn dual(&self, q: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.p)
            .map(|(row, pj)| pj * row.iter().zip(q).map(|(a, q)| a * q).sum::<f64>().ln())
            .sum()
    }

    /// One active-set Newton step on the dual Σ_j p_j ln Z_j over the simplex.
    /// Returns false when no ascent was possible.
    fn newton_step(&self, q: &mut [f64]) -> bool {
        let (_, c) = self.sums(q);
        let mut changed = false;
        for k in 0..self.cols {
            if q[k] == 0.0 && c[k] > 1.0 + 1e-10 {
                // improving letter re-enters the support
                q[k] = 1e-9;
                changed = true;
            } else if q[k] > 0.0 && q[k] < 1e-13 && c[k] < 1.0 {
                // decaying letter leaves it
                q[k] = 0.0;
                changed = true;
            }
        }
        if changed {
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= total);
        }
        let support: Vec<usize> = (0..self.cols).filter(|&k| q[k] > 0.0).collect();
        let m = support.len();
        if m < 2 {
            return changed;
        }
        let (z, c) = self.sums(q);
        // KKT system [H 1; 1ᵀ 0] [d; ν] = [−g; 0]
        let dim = m + 1;
        let mut sys = vec![vec![0.0; dim + 1]; dim];
        for (u, &ku) in support.iter().enumerate() {
            for (v, &kv) in support.iter().enumerate() {
                sys[u][v] = -self
                    .a
                    .iter()
                    .zip(&self.p)
                    .zip(&z)
                    .map(|((row, pj), zj)| pj * row[ku] * row[kv] / (zj * zj))
                    .sum::<f64>();
            }
            sys[u][m] = 1.0;
            sys[m][u] = 1.0;
            sys[u][dim] = -c[ku];
        }
        let scale = (0..m).map(|u| sys[u][u].abs()).fold(0.0, f64::max);
        for u in 0..m {
            sys[u][u] -= 1e-12 * scale;
        }
        let Some(sol) = solve_dense(sys) else {
            return changed;
        };
        let d = &sol[..m];
        let mut t_max = 1.0f64;
        let mut blocking = Vec::new();
        for (u, &k) in support.iter().enumerate() {
            if d[u] < 0.0 {
                let t = -q[k] / d[u];
                if t < t_max {
                    t_max = t;
                    blocking.clear();
                }
                if t <= t_max {
                    blocking.push(k);
                }
            }
        }
        if t_max < 1e-10 {
            // degenerate step: the direction leaves the face right away
            for &k in &blocking {
                q[k] = 0.0;
            }
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= total);
            return true;
        }
        let g0 = self.dual(q);
        let mut t = t_max;
        for _ in 0..40 {
            let mut trial = q.to_vec();
            for (u, &k) in support.iter().enumerate() {
                trial[k] = (q[k] + t * d[u]).max(0.0);
            }
            if t == t_max {
                for &k in &blocking {
                    trial[k] = 0.0;
                }
            }
            let s: f64 = trial.iter().sum();
            trial.iter_mut().for_each(|v| *v /= s);
            if self.dual(&trial) >= g0 {
                q.copy_from_slice(&trial);
                return true;
            }
            t *= 0.5;
        }
        changed
    }

    /// Blahut-Arimoto from the uniform input, finished by Newton steps on the
    /// dual. Stops once the bound gap drops below `opts.tol` nats.
    pub(crate) fn solve(&self, opts: &BaOptions) -> Result<ComponentPoint> {
        const WARMUP: usize = 300;
        const RETRY: usize = 25;
        let mut q = vec![1.0 / self.cols as f64; self.cols];
        let mut next = vec![0.0; self.cols];
        let mut iters = 0;
        let mut gap = f64::INFINITY;
        let mut newton_left = 400;
        let mut ba_until = WARMUP;
        while iters < opts.max_iters {
            let (_, c) = self.sums(&q);
            gap = Self::gap(&q, &c);
            if gap <= opts.tol {
                break;
            }
            iters += 1;
            if iters > ba_until && newton_left > 0 {
                newton_left -= 1;
                if self.newton_step(&mut q) {
                    continue;
                }
                ba_until = iters + RETRY;
            }
            for k in 0..self.cols {
                next[k] = q[k] * c[k];
            }
            std::mem::swap(&mut q, &mut next);
        }
        if gap > opts.tol && gap > opts.fail_above {
            return Err(Error::NonConvergence {
                iters,
                residual: gap,
            });
        }
        let (rate, distortion, q) = self.evaluate(&q);
        Ok(ComponentPoint {
            rate,
            distortion,
            q,
            iterations: iters,
        })
    }
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Blahut-Arimoto for a single component at slope `s`.
pub fn ba_component(p: &[f64], dm: &DistortionMeasure, s: f64) -> Result<ComponentPoint> {
    ba_component_with(p, &dm.matrix(), s, &BaOptions::default())
}

pub fn ba_component_with(
    p: &[f64],
    delta: &[Vec<f64>],
    s: f64,
    opts: &BaOptions,
) -> Result<ComponentPoint> {
    if s.is_nan() || s >= 0.0 {
        return Err(Error::InvalidArgument(format!("slope {s} must be negative")));
    }
    if p.len() != delta.len() {
        return Err(Error::LengthMismatch {
            expected: delta.len(),
            got: p.len(),
        });
    }
    BaKernel::new(p, delta, s).solve(opts)
}

fn check_model(src: &SourceModel, dm: &DistortionMeasure) -> Result<()> {
    if src.alphabet() != dm.rows() {
        return Err(Error::LengthMismatch {
            expected: dm.rows(),
            got: src.alphabet(),
        });
    }
    Ok(())
}

/// Rate-distortion point of the whole source at slope `s`, computed one
/// component at a time.
pub fn factored_rd(src: &SourceModel, dm: &DistortionMeasure, s: f64) -> Result<RdPoint> {
    check_model(src, dm)?;
    if s.is_nan() || s >= 0.0 {
        return Err(Error::InvalidArgument(format!("slope {s} must be negative")));
    }
    let delta = dm.matrix();
    let opts = BaOptions::default();
    let parts: Vec<ComponentPoint> = src
        .dists
        .par_iter()
        .map(|p| BaKernel::new(p, &delta, s).solve(&opts))
        .collect::<Result<_>>()?;
    let mut rate = 0.0;
    let mut distortion = 0.0;
    let mut q_dists = Vec::with_capacity(parts.len());
    for c in parts {
        rate += c.rate;
        distortion += c.distortion;
        q_dists.push(c.q);
    }
    Ok(RdPoint {
        s,
        rate,
        distortion,
        q_dists,
    })
}

/// Limit point s → 0⁻: every component uses the single letter with the least
/// expected distortion (lowest letter on ties), at rate 0.
pub fn rate_zero_point(src: &SourceModel, dm: &DistortionMeasure) -> Result<RdPoint> {
    check_model(src, dm)?;
    let delta = dm.matrix();
    let mut distortion = 0.0;
    let mut q_dists = Vec::with_capacity(src.n());
    for p in &src.dists {
        let mut best = (f64::INFINITY, 0);
        for k in 0..dm.cols() {
            let e: f64 = p.iter().zip(&delta).map(|(pj, row)| pj * row[k]).sum();
            if e < best.0 - 1e-15 {
                best = (e, k);
            }
        }
        distortion += best.0;
        let mut q = vec![0.0; dm.cols()];
        q[best.1] = 1.0;
        q_dists.push(q);
    }
    Ok(RdPoint {
        s: 0.0,
        rate: 0.0,
        distortion,
        q_dists,
    })
}

/// Minimum distortion, reached as s → −∞: each source letter reproduced by its
/// cheapest erasure letter.
pub fn min_distortion(src: &SourceModel, dm: &DistortionMeasure) -> f64 {
    let delta = dm.matrix();
    src.dists
        .iter()
        .map(|p| {
            p.iter()
                .zip(&delta)
                .map(|(pj, row)| pj * row.iter().cloned().fold(f64::INFINITY, f64::min))
                .sum::<f64>()
        })
        .sum()
}

/// Blahut-Arimoto on the product alphabet. Exponential in `n`; refuses
/// sources with more than 10^4 super-letters on either side.
pub fn ba_direct_super(src: &SourceModel, dm: &DistortionMeasure, s: f64) -> Result<RdPoint> {
    check_model(src, dm)?;
    if s.is_nan() || s >= 0.0 {
        return Err(Error::InvalidArgument(format!("slope {s} must be negative")));
    }
    let n = src.n();
    let rows = dm.rows();
    let cols = dm.cols();
    let nj = (rows as f64).powi(n as i32);
    let nk = (cols as f64).powi(n as i32);
    if nj > 1e4 || nk > 1e4 {
        return Err(Error::TooLarge(nj.max(nk) as usize));
    }
    let (nj, nk) = (nj as usize, nk as usize);
    let delta = dm.matrix();
    let digits = |mut idx: usize, base: usize| -> Vec<usize> {
        (0..n)
            .map(|_| {
                let d = idx % base;
                idx /= base;
                d
            })
            .collect()
    };
    let jd: Vec<Vec<usize>> = (0..nj).map(|j| digits(j, rows)).collect();
    let kd: Vec<Vec<usize>> = (0..nk).map(|k| digits(k, cols)).collect();
    let p: Vec<f64> = jd
        .iter()
        .map(|js| js.iter().enumerate().map(|(i, &j)| src.dists[i][j]).product())
        .collect();
    let big: Vec<Vec<f64>> = jd
        .iter()
        .map(|js| {
            kd.iter()
                .map(|ks| (0..n).map(|i| delta[js[i]][ks[i]]).sum())
                .collect()
        })
        .collect();
    let opts = BaOptions {
        max_iters: 1_000_000,
        ..BaOptions::default()
    };
    let point = ba_component_with(&p, &big, s, &opts)?;
    let mut q_dists = vec![vec![0.0; cols]; n];
    for (k, ks) in kd.iter().enumerate() {
        for i in 0..n {
            q_dists[i][ks[i]] += point.q[k];
        }
    }
    Ok(RdPoint {
        s,
        rate: point.rate,
        distortion: point.distortion,
        q_dists,
    })
}

/// Default slope grid for curve sweeps: 120 points, log-spaced over [−12, −0.05].
pub fn slope_grid() -> Vec<f64> {
    log_slopes(0.05, 12.0, 120)
}

/// `count` slopes −exp(t), t evenly spaced in [ln lo, ln hi], ordered from
/// the steepest to the flattest.
pub fn log_slopes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (hi.ln(), lo.ln());
    (0..count)
        .map(|i| {
            let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
            -(a + (b - a) * t).exp()
        })
        .collect()
}

/// Sweeps the slope grid and appends the rate-zero point.
pub fn rd_curve(src: &SourceModel, dm: &DistortionMeasure, slopes: &[f64]) -> Result<Vec<RdPoint>> {
    let mut pts = slopes
        .iter()
        .map(|&s| factored_rd(src, dm, s))
        .collect::<Result<Vec<_>>>()?;
    pts.push(rate_zero_point(src, dm)?);
    pts.sort_by(|a, b| a.rate.partial_cmp(&b.rate).unwrap().then(b.distortion.partial_cmp(&a.distortion).unwrap()));
    Ok(pts)
}

/// Linear interpolation of D at `rate` along a curve sorted by rate.
/// Returns `None` outside the swept range.
pub fn interpolate_distortion(curve: &[RdPoint], rate: f64) -> Option<f64> {
    let first = curve.first()?;
    if rate < first.rate {
        return None;
    }
    for w in curve.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if rate >= a.rate && rate <= b.rate {
            if b.rate - a.rate < 1e-15 {
                return Some(a.distortion.min(b.distortion));
            }
            let t = (rate - a.rate) / (b.rate - a.rate);
            return Some(a.distortion + t * (b.distortion - a.distortion));
        }
    }
    let last = curve.last()?;
    (rate == last.rate).then_some(last.distortion)
}

/// Linear interpolation of R at distortion `d` along a curve sorted by rate.
pub fn interpolate_rate(curve: &[RdPoint], d: f64) -> Option<f64> {
    for w in curve.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (hi, lo) = (a.distortion, b.distortion);
        if d <= hi && d >= lo {
            if hi - lo < 1e-15 {
                return Some(a.rate);
            }
            let t = (hi - d) / (hi - lo);
            return Some(a.rate + t * (b.rate - a.rate));
        }
    }
    None
}

const SLOPE_MIN: f64 = 1e-3;
const SLOPE_MAX: f64 = 200.0;

/// Bisection on log|s| for a monotone quantity `f(point)` that increases with |s|.
fn bisect_slope(
    src: &SourceModel,
    dm: &DistortionMeasure,
    target: f64,
    key: impl Fn(&RdPoint) -> f64,
    tol: f64,
) -> Result<(RdPoint, RdPoint, RdPoint)> {
    let mut lo = factored_rd(src, dm, -SLOPE_MIN)?;
    let mut hi = factored_rd(src, dm, -1.0)?;
    while key(&hi) < target && -hi.s < SLOPE_MAX {
        lo = hi;
        hi = factored_rd(src, dm, (lo.s * 2.0).max(-SLOPE_MAX))?;
    }
    let mut best = if (key(&lo) - target).abs() < (key(&hi) - target).abs() {
        lo.clone()
    } else {
        hi.clone()
    };
    for _ in 0..80 {
        if (key(&best) - target).abs() <= tol {
            break;
        }
        let mid_s = -((-lo.s).ln() * 0.5 + (-hi.s).ln() * 0.5).exp();
        let mid = factored_rd(src, dm, mid_s)?;
        if (key(&mid) - target).abs() < (key(&best) - target).abs() {
            best = mid.clone();
        }
        if key(&mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi.s - lo.s).abs() < 1e-12 * lo.s.abs() {
            break;
        }
    }
    Ok((best, lo, hi))
}

/// The point at the steepest supported slope, i.e. the largest rate this
/// engine reaches for the source.
pub fn max_rate_point(src: &SourceModel, dm: &DistortionMeasure) -> Result<RdPoint> {
    factored_rd(src, dm, -SLOPE_MAX)
}

/// The curve point whose rate is within 0.01 bits of `target` (bits).
///
/// Targets at or below 0.01 return the exact rate-zero point. Where the
/// curve has a linear segment the rate jumps as a function of slope; the
/// closest achievable point is returned then.
pub fn rd_at_rate(src: &SourceModel, dm: &DistortionMeasure, target: f64) -> Result<RdPoint> {
    const TOL: f64 = 0.01;
    if target < 0.0 {
        return Err(Error::InvalidArgument(format!("negative target rate {target}")));
    }
    if target <= TOL {
        return rate_zero_point(src, dm);
    }
    let (best, _, hi) = bisect_slope(src, dm, target, |p| p.rate, TOL)?;
    if hi.rate < target - TOL {
        return Err(Error::UnreachableRate {
            target,
            max: hi.rate,
        });
    }
    Ok(best)
}

/// The curve point whose distortion is closest to `target` (within 1e−6 when continuous).
pub fn rd_at_distortion(src: &SourceModel, dm: &DistortionMeasure, target: f64) -> Result<RdPoint> {
    let zero = rate_zero_point(src, dm)?;
    if target >= zero.distortion {
        return Ok(zero);
    }
    let min = min_distortion(src, dm);
    if target < min {
        return Err(Error::InfeasibleDistortion {
            target,
            min,
            max: zero.distortion,
        });
    }
    let (best, _, _) = bisect_slope(src, dm, -target, |p| -p.distortion, 1e-6)?;
    Ok(best)
}
