//! Training and per-frame multiple-trial decoding.
//!
//! Training transmits random codewords, sorts every APP matrix by symbol rank
//! and by position reliability, and averages the sorted matrices. The averaged
//! matrix gives the per-rank error-pattern source used to compute R-D points,
//! which in turn drive random erasure-pattern generation at decode time.
//!
//! Every frame draws its randomness from its own ChaCha stream keyed by
//! `(seed, frame index)`, so results do not depend on thread count.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, bit_app, reliability, symbol_app, ChannelConfig, ReliabilityView};
use crate::error::{Error, Result};
use crate::measures::{
    allowable_types, asd_measure, bitlevel_measure, conventional_measure, error_only_measure,
    extract_bit_error_pattern, extract_error_pattern, masd_2a_types, mbm_measure, DistortionMeasure,
    ErasurePattern, ErrorPattern,
};
use crate::patterns::{covering_hybrid_set, gmd_set, hamming74, random_set, sed_set, PatternSet};
use crate::rdengine::{max_rate_point, rd_at_rate, RdPoint, SourceModel};
use crate::rscodec::RsCode;

/// Independent random stream for frame `index` under master `seed`.
pub fn frame_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn random_codeword<R: Rng + ?Sized>(code: &RsCode, rng: &mut R) -> Vec<u8> {
    let mask = ((1u16 << code.q()) - 1) as u8;
    let msg: Vec<u8> = (0..code.k()).map(|_| rng.random::<u8>() & mask).collect();
    code.encode(&msg).expect("message length matches k")
}

/// Averages of reliability-sorted APP statistics over the training frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedProfile {
    pub n: usize,
    pub k: usize,
    pub q: u32,
    pub ebno_db: f64,
    pub tau: usize,
    pub seed: u64,
    /// p_bar[r][j]: mean probability of the (j+1)-th most likely symbol at
    /// the r-th least reliable position.
    pub p_bar: Vec<Vec<f64>>,
    /// Mean Pr(hard-decision bit correct) at the b-th least reliable bit.
    pub bit_p: Vec<f64>,
}

impl TrainedProfile {
    /// Error-letter source over the top-l symbols: letter j ≥ 1 has the mass of
    /// rank j, letter 0 the remainder.
    pub fn symbol_source(&self, l: usize) -> Result<SourceModel> {
        if l == 0 || l > self.p_bar.first().map_or(0, Vec::len) {
            return Err(Error::InvalidArgument(format!("top-l size {l} out of range")));
        }
        let dists = self
            .p_bar
            .iter()
            .map(|col| {
                let top: f64 = col[..l].iter().sum();
                let mut d = Vec::with_capacity(l + 1);
                d.push((1.0 - top).max(0.0));
                d.extend_from_slice(&col[..l]);
                let s: f64 = d.iter().sum();
                d.iter_mut().for_each(|v| *v /= s);
                d
            })
            .collect();
        SourceModel::new(dists)
    }

    /// Bit source: letter 1 = hard-decision bit correct.
    pub fn bit_source(&self) -> Result<SourceModel> {
        SourceModel::new(self.bit_p.iter().map(|&p| vec![1.0 - p, p]).collect())
    }
}

const TRAIN_BLOCK: usize = 16;

/// Phase-one training over `tau` random codewords.
pub fn train(code: &RsCode, cfg: &ChannelConfig, tau: usize, seed: u64) -> Result<TrainedProfile> {
    if tau == 0 {
        return Err(Error::InvalidArgument("tau must be at least 1".into()));
    }
    let n = code.n();
    let size = 1usize << code.q();
    let nbits = n * code.q() as usize;
    let blocks: Vec<(Vec<f64>, Vec<f64>)> = (0..tau.div_ceil(TRAIN_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut sym = vec![0.0; n * size];
            let mut bit = vec![0.0; nbits];
            for t in b * TRAIN_BLOCK..((b + 1) * TRAIN_BLOCK).min(tau) {
                let mut rng = frame_rng(seed, t as u64);
                let cw = random_codeword(code, &mut rng);
                let rx = channel::transmit(cfg, &cw, &mut rng);
                let app = symbol_app(cfg, &rx);
                let view = reliability(&app);
                for (r, &pos) in view.sigma().iter().enumerate() {
                    for (j, &s) in view.pi(pos).iter().enumerate() {
                        sym[r * size + j] += app.get(s as usize, pos);
                    }
                }
                let bits = bit_app(cfg, &rx);
                for (r, &b) in bits.sigma.iter().enumerate() {
                    bit[r] += bits.posteriors[b];
                }
            }
            (sym, bit)
        })
        .collect();
    let mut sym = vec![0.0; n * size];
    let mut bit = vec![0.0; nbits];
    for (s, b) in blocks {
        sym.iter_mut().zip(s).for_each(|(a, v)| *a += v);
        bit.iter_mut().zip(b).for_each(|(a, v)| *a += v);
    }
    let norm = 1.0 / tau as f64;
    Ok(TrainedProfile {
        n,
        k: code.k(),
        q: code.q(),
        ebno_db: cfg.ebno_db,
        tau,
        seed,
        p_bar: sym.chunks(size).map(|c| c.iter().map(|v| v * norm).collect()).collect(),
        bit_p: bit.iter().map(|v| v * norm).collect(),
    })
}

/// Decoding schemes. Rates are in bits (log2 of the pattern count).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Single hard-decision BM decoding.
    Bm,
    Gmd,
    Sed { l: usize, f: usize },
    Mbm { l: usize, rate: u32 },
    /// Hamming (7,4) covering on the 7 least reliable positions, random tail.
    MbmHm74 { rate: u32 },
    /// Multiple bit-level ASD (oracle only).
    BitAsd { rate: u32 },
    /// Multiple symbol-level ASD with A(m, m) (oracle only).
    Masd { m: u32, rate: u32 },
    /// Multiple symbol-level ASD with types {(2,0), (1,1), (0,0)} (oracle only).
    Masd2a { rate: u32 },
}

impl Scheme {
    /// Number of top symbols an error letter distinguishes.
    pub fn top_l(&self) -> usize {
        match *self {
            Scheme::Bm | Scheme::Gmd | Scheme::Sed { .. } => 1,
            Scheme::Mbm { l, .. } => l,
            Scheme::MbmHm74 { .. } | Scheme::Masd2a { .. } => 2,
            Scheme::Masd { m, .. } => m as usize,
            Scheme::BitAsd { .. } => 1,
        }
    }

    pub fn rate(&self) -> Option<u32> {
        match *self {
            Scheme::Mbm { rate, .. }
            | Scheme::MbmHm74 { rate }
            | Scheme::BitAsd { rate }
            | Scheme::Masd { rate, .. }
            | Scheme::Masd2a { rate } => Some(rate),
            _ => None,
        }
    }

    /// Schemes without an implemented decoder are evaluated by the distortion oracle.
    pub fn oracle_only(&self) -> bool {
        matches!(self, Scheme::BitAsd { .. } | Scheme::Masd { .. } | Scheme::Masd2a { .. })
    }

    pub fn is_bit_level(&self) -> bool {
        matches!(self, Scheme::BitAsd { .. })
    }

    pub fn measure(&self, n: usize, k: usize) -> Result<DistortionMeasure> {
        match *self {
            Scheme::Bm | Scheme::Gmd | Scheme::Sed { .. } => Ok(conventional_measure(n, k)),
            Scheme::Mbm { l, .. } => Ok(mbm_measure(n, k, l)),
            Scheme::MbmHm74 { .. } => Ok(error_only_measure(n, k, 2)),
            Scheme::BitAsd { .. } => bitlevel_measure(n, k),
            Scheme::Masd { m, .. } => asd_measure(n, k, m, &allowable_types(m, m as usize)),
            Scheme::Masd2a { .. } => asd_measure(n, k, 2, &masd_2a_types()),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Scheme::Bm => write!(f, "BM"),
            Scheme::Gmd => write!(f, "GMD"),
            Scheme::Sed { l, f: ff } => write!(f, "SED({l},{ff})"),
            Scheme::Mbm { l, rate } => write!(f, "mBM-{l}({rate})"),
            Scheme::MbmHm74 { rate } => write!(f, "mBM-HM74({rate})"),
            Scheme::BitAsd { rate } => write!(f, "m-b-ASD({rate})"),
            Scheme::Masd { m, rate } => write!(f, "mASD-{m}({rate})"),
            Scheme::Masd2a { rate } => write!(f, "mASD-2a({rate})"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown scheme '{s}'"));
        let s = s.trim();
        match s {
            "BM" => return Ok(Scheme::Bm),
            "GMD" => return Ok(Scheme::Gmd),
            _ => {}
        }
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let head = &s[..open];
        let nums: Vec<u32> = inner
            .split(',')
            .map(|v| v.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let one = || if nums.len() == 1 { Ok(nums[0]) } else { Err(bad()) };
        match head {
            "SED" if nums.len() == 2 => Ok(Scheme::Sed {
                l: nums[0] as usize,
                f: nums[1] as usize,
            }),
            "mBM-HM74" => Ok(Scheme::MbmHm74 { rate: one()? }),
            "m-b-ASD" => Ok(Scheme::BitAsd { rate: one()? }),
            "mASD-2a" => Ok(Scheme::Masd2a { rate: one()? }),
            _ => {
                if let Some(l) = head.strip_prefix("mBM-") {
                    let l: usize = l.parse().map_err(|_| bad())?;
                    Ok(Scheme::Mbm { l, rate: one()? })
                } else if let Some(m) = head.strip_prefix("mASD-") {
                    let m: u32 = m.parse().map_err(|_| bad())?;
                    Ok(Scheme::Masd { m, rate: one()? })
                } else {
                    Err(bad())
                }
            }
        }
    }
}

/// A scheme with its measure and, for R-D schemes, the trained test channel.
#[derive(Debug, Clone)]
pub struct PreparedScheme {
    pub scheme: Scheme,
    pub measure: DistortionMeasure,
    /// Test channel over all positions (mBM, ASD) or over the tail (HM74).
    pub rd: Option<RdPoint>,
    fixed: Option<PatternSet>,
}

/// R-D point at `rate`, or the maximum-rate point when the source cannot
/// support that many bits (the set then simply holds duplicates).
fn rd_for_rate(src: &SourceModel, dm: &DistortionMeasure, rate: u32) -> Result<RdPoint> {
    match rd_at_rate(src, dm, rate as f64) {
        Err(Error::UnreachableRate { .. }) => max_rate_point(src, dm),
        other => other,
    }
}

pub fn prepare(scheme: Scheme, code: &RsCode, profile: &TrainedProfile) -> Result<PreparedScheme> {
    let (n, k) = (code.n(), code.k());
    if profile.n != n || profile.k != k {
        return Err(Error::InvalidArgument("profile was trained for another code".into()));
    }
    let measure = scheme.measure(n, k)?;
    let (rd, fixed) = match scheme {
        Scheme::Bm => (None, Some(PatternSet::hard_decision(n))),
        Scheme::Gmd => (None, Some(gmd_set(n, code.d_min())?)),
        Scheme::Sed { l, f } => (None, Some(sed_set(l, f, n)?)),
        Scheme::Mbm { l, rate } => (Some(rd_for_rate(&profile.symbol_source(l)?, &measure, rate)?), None),
        Scheme::MbmHm74 { rate } => {
            let cov = hamming74();
            let tail_rate = rate.checked_sub(cov.k_c as u32).ok_or_else(|| {
                Error::InvalidArgument(format!("{scheme} needs R ≥ {}", cov.k_c))
            })?;
            let tail_src = profile.symbol_source(2)?.slice(cov.n_c..n);
            (Some(rd_for_rate(&tail_src, &measure, tail_rate)?), None)
        }
        Scheme::BitAsd { rate } => (Some(rd_for_rate(&profile.bit_source()?, &measure, rate)?), None),
        Scheme::Masd { rate, .. } | Scheme::Masd2a { rate } => (
            Some(rd_for_rate(&profile.symbol_source(scheme.top_l())?, &measure, rate)?),
            None,
        ),
    };
    Ok(PreparedScheme {
        scheme,
        measure,
        rd,
        fixed,
    })
}

impl PreparedScheme {
    /// A fresh pattern set (or the scheme's fixed set).
    pub fn pattern_set<R: Rng + ?Sized>(&self, force_hd: bool, rng: &mut R) -> Result<PatternSet> {
        if let Some(fixed) = &self.fixed {
            return Ok(fixed.clone());
        }
        let rd = self.rd.as_ref().expect("R-D scheme has a test channel");
        let rate = self.scheme.rate().expect("R-D scheme has a rate");
        let mut set = match self.scheme {
            Scheme::MbmHm74 { .. } => covering_hybrid_set(&hamming74(), rd, rate, 1, force_hd, rng)?,
            _ => random_set(rd, rate, self.measure.first_letter(), force_hd, rng)?,
        };
        set.scheme = self.scheme.to_string();
        Ok(set)
    }

    /// Genie error pattern of `codeword` under this scheme's letters.
    pub fn error_pattern(&self, codeword: &[u8], view: &ReliabilityView, cfg: &ChannelConfig, rx: &[f64]) -> ErrorPattern {
        if self.scheme.is_bit_level() {
            extract_bit_error_pattern(codeword, &bit_app(cfg, rx), cfg.q)
        } else {
            extract_error_pattern(codeword, view, self.scheme.top_l())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub chosen: Option<Vec<u8>>,
    /// Distinct codewords produced by the trials, in order of discovery.
    pub candidates: Vec<Vec<u8>>,
    /// Trials actually run (duplicate patterns are skipped).
    pub trials_run: usize,
}

/// Runs one BM error-and-erasure trial per distinct pattern and picks the ML
/// candidate. Letter 0 erases, letter j uses the j-th most likely symbol.
pub fn decode_frame(code: &RsCode, received: &[f64], pset: &PatternSet, view: &ReliabilityView) -> DecodeResult {
    let n = code.n();
    let hd = view.hard_decisions();
    let base = code.syndromes(&hd);
    let sigma = view.sigma();
    let mut seen: HashSet<&[u8]> = HashSet::with_capacity(pset.len());
    let mut candidates: Vec<Vec<u8>> = Vec::new();
    let mut trials = 0;
    let mut word = hd.clone();
    let mut erased = vec![false; n];
    let mut touched = Vec::new();
    for p in &pset.patterns {
        if p.len() != n || !seen.insert(&p.letters) {
            continue;
        }
        trials += 1;
        let mut synd = base.clone();
        for (r, &letter) in p.letters.iter().enumerate() {
            if letter == 1 {
                continue;
            }
            let pos = sigma[r];
            let sym = if letter == 0 {
                erased[pos] = true;
                0
            } else {
                view.symbol(pos, letter as usize - 1)
            };
            code.add_syndrome_term(&mut synd, pos, hd[pos] ^ sym);
            word[pos] = sym;
            touched.push(pos);
        }
        if let Some(c) = code.decode_with_syndromes(&word, &erased, &synd) {
            if !candidates.contains(&c) {
                candidates.push(c);
            }
        }
        for &pos in &touched {
            word[pos] = hd[pos];
            erased[pos] = false;
        }
        touched.clear();
    }
    let chosen = ml_select(&candidates, received, code.q()).ok().cloned();
    DecodeResult {
        chosen,
        candidates,
        trials_run: trials,
    }
}

/// Candidate whose BPSK image is closest to `received` in squared Euclidean
/// distance; the first one wins ties.
pub fn ml_select<'a>(candidates: &'a [Vec<u8>], received: &[f64], q: u32) -> Result<&'a Vec<u8>> {
    let mut best: Option<(f64, &Vec<u8>)> = None;
    for c in candidates {
        let d: f64 = channel::modulate(c, q)
            .iter()
            .zip(received)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, c));
        }
    }
    best.map(|(_, c)| c).ok_or(Error::EmptyCandidates)
}

/// Smallest distortion between `x` and any pattern of the set.
pub fn min_distortion(x: &ErrorPattern, pset: &PatternSet, dm: &DistortionMeasure) -> f64 {
    pset.patterns
        .iter()
        .filter(|p| p.len() == x.letters.len())
        .map(|p| dm.distortion_scaled_unchecked(&x.letters, &p.letters))
        .min()
        .map_or(f64::INFINITY, |d| d as f64 / dm.scale() as f64)
}

/// Genie decoding: success iff some pattern is within the measure's threshold.
pub fn oracle_decode(x: &ErrorPattern, pset: &PatternSet, dm: &DistortionMeasure) -> bool {
    pset.patterns.iter().any(|p| {
        p.len() == x.letters.len() && dm.distortion_scaled_unchecked(&x.letters, &p.letters) < dm.threshold_scaled()
    })
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(errors: usize, frames: usize) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = frames as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerOptions {
    pub frames: usize,
    pub seed: u64,
    /// Use the distortion oracle instead of running the decoder.
    pub oracle: bool,
    /// Draw one pattern set and reuse it for every frame.
    pub fixed_set: bool,
    /// Put the hard-decision pattern first in random sets.
    pub force_hd: bool,
}

impl FerOptions {
    pub fn new(frames: usize, seed: u64) -> Self {
        FerOptions {
            frames,
            seed,
            oracle: false,
            fixed_set: false,
            force_hd: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub min_distortion: f64,
    pub candidates: usize,
    pub success: bool,
    /// The decoder returned a wrong codeword.
    pub miscorrection: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerResult {
    pub scheme: String,
    pub rate: Option<u32>,
    pub oracle: bool,
    pub frames: usize,
    pub errors: usize,
    pub failures: usize,
    pub miscorrections: usize,
    pub fer: f64,
    pub ci95: (f64, f64),
    pub log: Vec<FrameRecord>,
}

/// Frame-error-rate simulation. Frame `i` uses stream `i` of `opts.seed`;
/// the pattern set of a frame is drawn from that stream after the channel.
pub fn fer_experiment(
    code: &RsCode,
    cfg: &ChannelConfig,
    prepared: &PreparedScheme,
    opts: &FerOptions,
) -> Result<FerResult> {
    if opts.frames == 0 {
        return Err(Error::InvalidArgument("at least one frame is required".into()));
    }
    let oracle = opts.oracle || prepared.scheme.oracle_only();
    let shared = if opts.fixed_set {
        // stream u64::MAX is reserved for the shared set
        Some(prepared.pattern_set(opts.force_hd, &mut frame_rng(opts.seed, u64::MAX))?)
    } else {
        None
    };
    let log: Vec<FrameRecord> = (0..opts.frames)
        .into_par_iter()
        .map(|frame| -> Result<FrameRecord> {
            let mut rng = frame_rng(opts.seed, frame as u64);
            let cw = random_codeword(code, &mut rng);
            let rx = channel::transmit(cfg, &cw, &mut rng);
            let view = reliability(&symbol_app(cfg, &rx));
            let own;
            let pset = match &shared {
                Some(s) => s,
                None => {
                    own = prepared.pattern_set(opts.force_hd, &mut rng)?;
                    &own
                }
            };
            let x = prepared.error_pattern(&cw, &view, cfg, &rx);
            let min_d = min_distortion(&x, pset, &prepared.measure);
            if oracle {
                let success = oracle_decode(&x, pset, &prepared.measure);
                Ok(FrameRecord {
                    frame,
                    min_distortion: min_d,
                    candidates: usize::from(success),
                    success,
                    miscorrection: false,
                })
            } else {
                let res = decode_frame(code, &rx, pset, &view);
                let success = res.chosen.as_deref() == Some(&cw[..]);
                Ok(FrameRecord {
                    frame,
                    min_distortion: min_d,
                    candidates: res.candidates.len(),
                    success,
                    miscorrection: res.chosen.is_some() && !success,
                })
            }
        })
        .collect::<Result<_>>()?;
    let errors = log.iter().filter(|r| !r.success).count();
    let miscorrections = log.iter().filter(|r| r.miscorrection).count();
    Ok(FerResult {
        scheme: prepared.scheme.to_string(),
        rate: prepared.scheme.rate(),
        oracle,
        frames: opts.frames,
        errors,
        failures: errors - miscorrections,
        miscorrections,
        fer: errors as f64 / opts.frames as f64,
        ci95: wilson_interval(errors, opts.frames),
        log,
    })
}

/// Erasure pattern that erases exactly the given reliability ranks.
pub fn erasing_ranks(n: usize, ranks: &[usize]) -> ErasurePattern {
    let mut p = ErasurePattern::hard_decision(n);
    for &r in ranks {
        p.letters[r] = 0;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(code: &RsCode) -> ChannelConfig {
        ChannelConfig::new(40.0, code.rate(), code.q()).unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        let all = [
            Scheme::Bm,
            Scheme::Gmd,
            Scheme::Sed { l: 12, f: 12 },
            Scheme::Mbm { l: 2, rate: 11 },
            Scheme::MbmHm74 { rate: 11 },
            Scheme::BitAsd { rate: 8 },
            Scheme::Masd { m: 3, rate: 11 },
            Scheme::Masd2a { rate: 4 },
        ];
        for s in all {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert!("mBM-x(3)".parse::<Scheme>().is_err());
        assert!("SED(3)".parse::<Scheme>().is_err());
    }

    #[test]
    fn training_on_clean_channel() {
        let code = RsCode::rs15_11();
        let prof = train(&code, &quiet(&code), 20, 1).unwrap();
        for col in &prof.p_bar {
            assert!(col[0] > 1.0 - 1e-9);
            assert!((col.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        let src = prof.symbol_source(1).unwrap();
        assert!(src.dists.iter().all(|d| d[1] > 1.0 - 1e-9));
    }

    #[test]
    fn training_shape_and_determinism() {
        let code = RsCode::rs15_11();
        let cfg = ChannelConfig::new(4.0, code.rate(), code.q()).unwrap();
        let a = train(&code, &cfg, 50, 3).unwrap();
        let b = train(&code, &cfg, 50, 3).unwrap();
        assert_eq!(a, b);
        for col in &a.p_bar {
            assert!((col.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(col.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        }
        for w in a.p_bar.windows(2) {
            assert!(w[0][0] <= w[1][0] + 1e-12);
        }
        assert!(a.bit_p.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn clean_frame_decodes_to_transmitted() {
        let code = RsCode::rs15_11();
        let cfg = quiet(&code);
        let mut rng = frame_rng(5, 0);
        let cw = random_codeword(&code, &mut rng);
        let rx = channel::transmit(&cfg, &cw, &mut rng);
        let view = reliability(&symbol_app(&cfg, &rx));
        let res = decode_frame(&code, &rx, &sed_set(4, 4, 15).unwrap(), &view);
        assert_eq!(res.chosen.as_deref(), Some(&cw[..]));
        assert_eq!(res.trials_run, 8);
    }

    /// Received word with hard decisions equal to `cw` except at `errors`,
    /// where the decision is flipped in bit 0 and made the least reliable.
    fn frame_with_errors(code: &RsCode, cw: &[u8], errors: &[usize]) -> (Vec<f64>, ChannelConfig) {
        let cfg = ChannelConfig::new(5.0, code.rate(), code.q()).unwrap();
        let q = code.q() as usize;
        let mut rx = channel::modulate(cw, code.q());
        for (i, y) in rx.iter_mut().enumerate() {
            *y *= 1.0 + 0.001 * (i % 7) as f64;
        }
        for (e, &pos) in errors.iter().enumerate() {
            rx[pos * q] = -rx[pos * q] * (0.01 + 0.001 * e as f64);
        }
        (rx, cfg)
    }

    #[test]
    fn erasing_two_of_nine_errors() {
        let code = RsCode::rs255_239();
        let mut rng = frame_rng(8, 0);
        let cw = random_codeword(&code, &mut rng);
        let errs = [3, 40, 77, 100, 150, 160, 200, 230, 254];
        let (rx, cfg) = frame_with_errors(&code, &cw, &errs);
        let view = reliability(&symbol_app(&cfg, &rx));
        // the nine errors are the nine least reliable positions
        let mut lrp: Vec<usize> = view.sigma()[..9].to_vec();
        lrp.sort();
        assert_eq!(lrp, errs);
        let hd_only = decode_frame(&code, &rx, &PatternSet::hard_decision(255), &view);
        assert_ne!(hd_only.chosen.as_deref(), Some(&cw[..]));
        let mut set = PatternSet::hard_decision(255);
        set.patterns.push(erasing_ranks(255, &[0, 1]));
        let res = decode_frame(&code, &rx, &set, &view);
        assert!(res.candidates.contains(&cw));
        assert_eq!(res.chosen.as_deref(), Some(&cw[..]));
    }

    #[test]
    fn ml_selection() {
        let code = RsCode::rs15_11();
        let mut rng = frame_rng(1, 1);
        let a = random_codeword(&code, &mut rng);
        let b = random_codeword(&code, &mut rng);
        let rx = channel::modulate(&a, code.q());
        assert_eq!(ml_select(&[b.clone(), a.clone()], &rx, 4).unwrap(), &a);
        assert_eq!(ml_select(std::slice::from_ref(&a), &rx, 4).unwrap(), &a);
        assert_eq!(ml_select(&[b.clone(), a.clone(), b.clone(), a.clone()], &rx, 4).unwrap(), &a);
        assert!(matches!(ml_select(&[], &rx, 4), Err(Error::EmptyCandidates)));
    }

    #[test]
    fn oracle_hd_identity() {
        let dm = conventional_measure(255, 239);
        let hd = PatternSet::hard_decision(255);
        for t in 0..12 {
            let mut letters = vec![1u8; 255];
            letters[..t].iter_mut().for_each(|l| *l = 0);
            let x = ErrorPattern { letters };
            assert_eq!(oracle_decode(&x, &hd, &dm), 2 * t < 17);
        }
        let dm = error_only_measure(255, 239, 2);
        let x = ErrorPattern { letters: vec![2; 255] };
        let set = PatternSet {
            patterns: vec![ErasurePattern { letters: vec![2; 255] }],
            rate_bits: 0.0,
            scheme: "x".into(),
            forced_hd: false,
        };
        assert!(oracle_decode(&x, &set, &dm));
    }

    #[test]
    fn wilson() {
        let (lo, hi) = wilson_interval(0, 100);
        assert!(lo.abs() < 1e-12);
        assert!((hi - 0.0370).abs() < 1e-3);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn hd_set_matches_plain_bm() {
        let code = RsCode::rs15_11();
        let cfg = ChannelConfig::new(3.0, code.rate(), code.q()).unwrap();
        for f in 0..300 {
            let mut rng = frame_rng(13, f);
            let cw = random_codeword(&code, &mut rng);
            let rx = channel::transmit(&cfg, &cw, &mut rng);
            let view = reliability(&symbol_app(&cfg, &rx));
            let plain = code.decode_ee(&crate::rscodec::HardDecisionWord::new(view.hard_decisions()));
            let multi = decode_frame(&code, &rx, &PatternSet::hard_decision(15), &view);
            assert_eq!(plain, multi.chosen);
        }
    }

    #[test]
    fn oracle_agrees_with_decoder_list() {
        let code = RsCode::rs15_11();
        let cfg = ChannelConfig::new(4.0, code.rate(), code.q()).unwrap();
        let prof = train(&code, &cfg, 200, 2).unwrap();
        for scheme in [Scheme::Mbm { l: 1, rate: 3 }, Scheme::Mbm { l: 2, rate: 4 }, Scheme::Gmd, Scheme::Sed { l: 4, f: 4 }] {
            let prep = prepare(scheme, &code, &prof).unwrap();
            for f in 0..500 {
                let mut rng = frame_rng(21, f);
                let cw = random_codeword(&code, &mut rng);
                let rx = channel::transmit(&cfg, &cw, &mut rng);
                let view = reliability(&symbol_app(&cfg, &rx));
                let pset = prep.pattern_set(true, &mut rng).unwrap();
                let x = prep.error_pattern(&cw, &view, &cfg, &rx);
                let res = decode_frame(&code, &rx, &pset, &view);
                assert_eq!(oracle_decode(&x, &pset, &prep.measure), res.candidates.contains(&cw), "{scheme} frame {f}");
            }
        }
    }

    #[test]
    fn fer_clean_channel_is_zero_and_thread_independent() {
        let code = RsCode::rs15_11();
        let cfg = quiet(&code);
        let prof = train(&code, &cfg, 10, 0).unwrap();
        let prep = prepare(Scheme::Mbm { l: 2, rate: 3 }, &code, &prof).unwrap();
        let r = fer_experiment(&code, &cfg, &prep, &FerOptions::new(50, 4)).unwrap();
        assert_eq!(r.errors, 0);

        let noisy = ChannelConfig::new(3.0, code.rate(), code.q()).unwrap();
        let prof = train(&code, &noisy, 100, 0).unwrap();
        let prep = prepare(Scheme::Mbm { l: 2, rate: 3 }, &code, &prof).unwrap();
        let a = fer_experiment(&code, &noisy, &prep, &FerOptions::new(200, 4)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| fer_experiment(&code, &noisy, &prep, &FerOptions::new(200, 4)).unwrap());
        assert_eq!(a, b);
        assert!(a.errors > 0);
    }

    #[test]
    fn oracle_fer_is_monotone_in_the_set() {
        let code = RsCode::rs15_11();
        let cfg = ChannelConfig::new(3.0, code.rate(), code.q()).unwrap();
        let dm = conventional_measure(15, 11);
        let small = sed_set(4, 2, 15).unwrap();
        let big = sed_set(6, 4, 15).unwrap();
        let mut fails = (0, 0);
        for f in 0..400 {
            let mut rng = frame_rng(30, f);
            let cw = random_codeword(&code, &mut rng);
            let rx = channel::transmit(&cfg, &cw, &mut rng);
            let view = reliability(&symbol_app(&cfg, &rx));
            let x = extract_error_pattern(&cw, &view, 1);
            let (a, b) = (oracle_decode(&x, &small, &dm), oracle_decode(&x, &big, &dm));
            assert!(!a || b);
            fails.0 += usize::from(!a);
            fails.1 += usize::from(!b);
        }
        assert!(fails.1 <= fails.0);
    }
}
