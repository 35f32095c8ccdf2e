//! Mixing times of `X_n mod q` in total variation, scans over moduli, and
//! the slowly mixing family `q = aᵏ − 1`.
//!
//! Distances use the halved convention `½‖μ_n mod q − u_q‖ ∈ [0, 1)`.
//! Normalized mixing times are `t_mix·H / ln q`, base-free and ≈ 1 at the
//! cutoff; `t_mix / log₂ q` is reported alongside.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{is_prime, primes_up_to};
use crate::error::{Error, Result};
use crate::walk::{rng_for, ModChain, WalkParams};

/// Default mixing threshold for `½TV`.
pub const DEFAULT_EPS: f64 = 0.25;

/// Largest modulus evolved densely.
pub const DENSE_Q_MAX: u64 = 1 << 26;

/// Slack allowed when checking that `½TV` never increases.
pub const MONOTONE_TOL: f64 = 1e-12;

/// Margin above the cutoff past which a modulus counts as exceptional in a scan.
pub const DEFAULT_EXCEPTIONAL_MARGIN: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingRecord {
    pub q: u64,
    pub is_prime: bool,
    pub log2_q: f64,
    /// First `n` with `½TV ≤ ε`, or `None` if not reached by `n_max`.
    pub t_mix: Option<u32>,
    /// `t_mix·H / ln q`.
    pub normalized: Option<f64>,
    /// `t_mix / log₂ q`.
    pub normalized_log2: Option<f64>,
    /// `½TV` at the last evaluated step.
    pub final_tv: f64,
    pub steps_evaluated: u32,
    /// First `n` with `¼·q‖μ_n mod q − u_q‖₂² ≤ ε²`, which certifies `½TV ≤ ε`.
    pub certified_at: Option<u32>,
    /// Whether every step satisfied `½TV_n ≤ ½TV_{n−1} + MONOTONE_TOL`.
    pub monotone: bool,
    /// `(n, ½TV)` for `n = 0..=steps_evaluated`, when requested.
    pub tv_samples: Option<Vec<(u32, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveOptions {
    pub n_max: u32,
    pub eps: f64,
    /// Keep stepping to `n_max` after the threshold is crossed.
    pub full: bool,
    pub keep_samples: bool,
}

impl CurveOptions {
    pub fn new(n_max: u32, eps: f64) -> Self {
        Self {
            n_max,
            eps,
            full: false,
            keep_samples: true,
        }
    }
}

fn validate_q(p: &WalkParams, q: u64) -> Result<()> {
    if q < 2 {
        return Err(Error::BadModulus { min: 2, got: q });
    }
    if !p.coprime_to(q) {
        return Err(Error::NotCoprime { q, a: p.a() });
    }
    if q > DENSE_Q_MAX {
        return Err(Error::CapExceeded {
            what: "modulus for dense evolution",
            got: q,
            cap: DENSE_Q_MAX,
        });
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("ε must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// `½‖μ_n mod q − u_q‖` step by step until it drops to `ε` (or through
/// `n_max` with `opts.full`). `h` is the entropy rate used for normalization.
pub fn tv_curve_with(p: &WalkParams, q: u64, h: f64, opts: CurveOptions) -> Result<MixingRecord> {
    validate_q(p, q)?;
    check_eps(opts.eps)?;
    let mut chain = ModChain::<f64>::new(p, q)?;
    let mut tv = chain.half_tv();
    let mut samples = opts.keep_samples.then(|| vec![(0u32, tv)]);
    let mut t_mix = (tv <= opts.eps).then_some(0);
    let cert_level = opts.eps * opts.eps;
    let mut certified_at = (0.25 * chain.scaled_l2_dist_sq() <= cert_level).then_some(0);
    let mut monotone = true;
    let mut n = 0;
    while n < opts.n_max && (opts.full || t_mix.is_none()) {
        chain.step();
        n += 1;
        let next = chain.half_tv();
        if next > tv + MONOTONE_TOL {
            monotone = false;
        }
        tv = next;
        if let Some(s) = samples.as_mut() {
            s.push((n, tv));
        }
        if t_mix.is_none() && tv <= opts.eps {
            t_mix = Some(n);
        }
        if certified_at.is_none() && 0.25 * chain.scaled_l2_dist_sq() <= cert_level {
            certified_at = Some(n);
        }
    }
    debug_assert!(monotone, "½TV increased along the chain for q = {q}");
    let ln_q = (q as f64).ln();
    Ok(MixingRecord {
        q,
        is_prime: is_prime(q),
        log2_q: (q as f64).log2(),
        t_mix,
        normalized: t_mix.map(|t| t as f64 * h / ln_q),
        normalized_log2: t_mix.map(|t| t as f64 / (q as f64).log2()),
        final_tv: tv,
        steps_evaluated: n,
        certified_at,
        monotone,
        tv_samples: samples,
    })
}

/// TV curve up to the mixing time, keeping the samples.
pub fn tv_curve(p: &WalkParams, q: u64, n_max: u32, eps: f64, h: f64) -> Result<MixingRecord> {
    tv_curve_with(p, q, h, CurveOptions::new(n_max, eps))
}

/// `½TV` of `μ_n mod q` at a single `n`.
pub fn half_tv_at(p: &WalkParams, q: u64, n: u32) -> Result<f64> {
    validate_q(p, q)?;
    let mut chain = ModChain::<f64>::new(p, q)?;
    for _ in 0..n {
        chain.step();
    }
    Ok(chain.half_tv())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub q: u64,
    pub delta: f64,
    pub h_ref: f64,
    /// `⌊(1−δ)·ln q / H⌋`.
    pub n: u32,
    pub half_tv: f64,
    /// Atoms of `μ_n mod q`.
    pub support_mod_q: u64,
    /// `1 − |supp μ_n mod q| / q`, a lower bound on `½TV` by counting.
    pub counting_bound: f64,
    /// `½TV < 0.9` while `log₂ q ≥ 20`.
    pub violation: bool,
}

/// Checks that `μ_n mod q` is still far from uniform below the cutoff.
pub fn lower_bound_check(p: &WalkParams, q: u64, delta: f64, h_ref: f64) -> Result<LowerBoundReport> {
    if h_ref.is_nan() || h_ref <= 0.0 {
        return Err(Error::InvalidArgument(format!("H_ref must be positive, got {h_ref}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("δ must lie in [0, 1], got {delta}")));
    }
    validate_q(p, q)?;
    let n = ((1.0 - delta) * (q as f64).ln() / h_ref).floor() as u32;
    let mut chain = ModChain::<f64>::new(p, q)?;
    for _ in 0..n {
        chain.step();
    }
    let half_tv = chain.half_tv();
    let support = chain.masses().iter().filter(|&&m| m > 0.0).count() as u64;
    Ok(LowerBoundReport {
        q,
        delta,
        h_ref,
        n,
        half_tv,
        support_mod_q: support,
        counting_bound: 1.0 - support as f64 / q as f64,
        violation: (q as f64).log2() >= 20.0 && half_tv < 0.9,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "stride")]
pub enum QFilter {
    Odd,
    Prime,
    CoprimeToA,
    /// `q_min, q_min + s, q_min + 2s, …`, skipping those not coprime to `a`.
    Stride(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanConfig {
    pub q_min: u64,
    pub q_max: u64,
    pub eps: f64,
    pub filter: QFilter,
    /// Entropy rate used for normalization, in nats.
    pub h_ref: f64,
    pub n_max: u32,
    /// Worker threads; `0` uses the global pool.
    pub workers: usize,
    pub exceptional_margin: f64,
    pub keep_curves: bool,
}

impl ScanConfig {
    pub fn new(q_min: u64, q_max: u64, filter: QFilter, h_ref: f64) -> Self {
        Self {
            q_min,
            q_max,
            eps: DEFAULT_EPS,
            filter,
            h_ref,
            n_max: 4000,
            workers: 0,
            exceptional_margin: DEFAULT_EXCEPTIONAL_MARGIN,
            keep_curves: false,
        }
    }
}

/// Moduli in `[q_min, q_max]` selected by `filter` and coprime to `a`.
pub fn scan_moduli(p: &WalkParams, q_min: u64, q_max: u64, filter: QFilter) -> Vec<u64> {
    let lo = q_min.max(2);
    if lo > q_max {
        return Vec::new();
    }
    let keep = |q: &u64| p.coprime_to(*q);
    match filter {
        QFilter::Odd => (lo..=q_max).filter(|q| q % 2 == 1).filter(keep).collect(),
        QFilter::Prime => (lo..=q_max).filter(|&q| is_prime(q)).filter(keep).collect(),
        QFilter::CoprimeToA => (lo..=q_max).filter(keep).collect(),
        QFilter::Stride(s) => (lo..=q_max).step_by(s.max(1) as usize).filter(keep).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantiles {
    pub count: usize,
    pub min: f64,
    pub q10: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = prob * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Quantiles {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self {
            count: v.len(),
            min: v[0],
            q10: quantile_sorted(&v, 0.10),
            q25: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q75: quantile_sorted(&v, 0.75),
            q90: quantile_sorted(&v, 0.90),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    /// Quantiles of `t_mix·H / ln q` over mixed records.
    pub normalized: Option<Quantiles>,
    /// Quantiles of `t_mix / log₂ q`.
    pub normalized_log2: Option<Quantiles>,
    pub unmixed: usize,
    /// Records with `normalized > 1 + margin` or unmixed.
    pub exceptional: usize,
    /// `Σ (ln p)/p` over exceptional prime moduli.
    pub exceptional_prime_weight: f64,
    pub non_monotone: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingReport {
    pub a: u64,
    pub step: String,
    pub config: ScanConfig,
    pub records: Vec<MixingRecord>,
    /// Moduli whose evaluation failed, with the reason.
    pub failures: Vec<(u64, String)>,
    pub aggregates: Aggregates,
}

fn is_exceptional(r: &MixingRecord, margin: f64) -> bool {
    r.normalized.is_none_or(|x| x > 1.0 + margin)
}

/// Summary statistics of a set of records.
pub fn aggregate(records: &[MixingRecord], margin: f64) -> Aggregates {
    let exceptional: Vec<&MixingRecord> =
        records.iter().filter(|r| is_exceptional(r, margin)).collect();
    Aggregates {
        normalized: Quantiles::of(records.iter().filter_map(|r| r.normalized)),
        normalized_log2: Quantiles::of(records.iter().filter_map(|r| r.normalized_log2)),
        unmixed: records.iter().filter(|r| r.t_mix.is_none()).count(),
        exceptional: exceptional.len(),
        exceptional_prime_weight: exceptional
            .iter()
            .filter(|r| r.is_prime)
            .map(|r| (r.q as f64).ln() / r.q as f64)
            .sum(),
        non_monotone: records.iter().filter(|r| !r.monotone).count(),
    }
}

/// Runs `f` on a pool of `workers` threads, or on the current pool when `workers` is 0.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Mixing times over every selected modulus, in increasing order of `q`.
pub fn mixing_scan(p: &WalkParams, cfg: &ScanConfig) -> Result<MixingReport> {
    check_eps(cfg.eps)?;
    let moduli = scan_moduli(p, cfg.q_min, cfg.q_max, cfg.filter);
    scan_list(p, cfg, &moduli)
}

/// Like [`mixing_scan`] over an explicit list of moduli.
pub fn scan_list(p: &WalkParams, cfg: &ScanConfig, moduli: &[u64]) -> Result<MixingReport> {
    check_eps(cfg.eps)?;
    let opts = CurveOptions {
        n_max: cfg.n_max,
        eps: cfg.eps,
        full: false,
        keep_samples: cfg.keep_curves,
    };
    let results: Vec<(u64, Result<MixingRecord>)> = with_workers(cfg.workers, || {
        moduli
            .par_iter()
            .map(|&q| (q, tv_curve_with(p, q, cfg.h_ref, opts)))
            .collect()
    })?;
    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (q, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((q, e.to_string())),
        }
    }
    let aggregates = aggregate(&records, cfg.exceptional_margin);
    Ok(MixingReport {
        a: p.a(),
        step: p.step().to_string(),
        config: cfg.clone(),
        records,
        failures,
        aggregates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRow {
    pub k: u32,
    pub q: u64,
    pub record: MixingRecord,
    /// Median of `normalized` over random moduli of matching size.
    pub random_median: Option<f64>,
    pub random_count: usize,
    /// `normalized(aᵏ − 1) / random_median`.
    pub excess_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub eps: f64,
    pub comparison_samples: usize,
    pub seed: u64,
    pub rows: Vec<FamilyRow>,
    /// Whether the excess ratio never decreases with `k` (reported, not required).
    pub excess_non_decreasing: bool,
}

/// Random odd moduli coprime to `a` in `[⌊0.9q⌋, ⌈1.1q⌉]`, excluding `q`.
pub fn matching_moduli(p: &WalkParams, q: u64, count: usize, seed: u64) -> Vec<u64> {
    let lo = ((q as f64 * 0.9).floor() as u64).max(3);
    let hi = ((q as f64 * 1.1).ceil() as u64).max(lo + 2);
    let mut rng = rng_for(seed, q);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < 100 * count + 1000 {
        attempts += 1;
        let c = rng.gen_range(lo..=hi);
        if c != q && c % 2 == 1 && p.coprime_to(c) {
            out.push(c);
        }
    }
    out
}

/// Mixing time of `q = aᵏ − 1` for each `k`, against random odd moduli of
/// the same size.
pub fn exceptional_family_scan(
    p: &WalkParams,
    ks: impl IntoIterator<Item = u32>,
    eps: f64,
    h_ref: f64,
    comparison_samples: usize,
    seed: u64,
    n_max: u32,
) -> Result<FamilyReport> {
    check_eps(eps)?;
    let mut rows = Vec::new();
    for k in ks {
        let q = (p.a() as u128).checked_pow(k).map(|v| v - 1).filter(|&v| v <= u64::MAX as u128);
        let Some(q) = q.map(|v| v as u64) else {
            return Err(Error::CapExceeded { what: "aᵏ − 1", got: u64::MAX, cap: DENSE_Q_MAX });
        };
        if q < 2 {
            // k = 1 with a = 2 gives the trivial group; nothing to mix.
            continue;
        }
        let mut opts = CurveOptions::new(n_max, eps);
        opts.keep_samples = false;
        let record = tv_curve_with(p, q, h_ref, opts)?;
        let others = matching_moduli(p, q, comparison_samples, seed);
        let others: Vec<Option<f64>> = others
            .par_iter()
            .map(|&c| tv_curve_with(p, c, h_ref, opts).ok().and_then(|r| r.normalized))
            .collect();
        let norms: Vec<f64> = others.iter().flatten().copied().collect();
        let random_median = Quantiles::of(norms.iter().copied()).map(|s| s.median);
        let excess_ratio = match (record.normalized, random_median) {
            (Some(x), Some(m)) if m > 0.0 => Some(x / m),
            _ => None,
        };
        rows.push(FamilyRow {
            k,
            q,
            record,
            random_median,
            random_count: norms.len(),
            excess_ratio,
        });
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.excess_ratio).collect();
    let excess_non_decreasing = ratios.windows(2).all(|w| w[1] >= w[0]);
    Ok(FamilyReport {
        eps,
        comparison_samples,
        seed,
        rows,
        excess_non_decreasing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimeDensityReport {
    pub n: u32,
    pub eps: f64,
    pub p_max: u64,
    /// `(½ − ε)·H·n`; primes with `ln p` above this are excluded.
    pub log_cutoff: f64,
    pub primes_checked: usize,
    /// Primes with `½TV(μ_n mod p) ≥ ε`.
    pub exceptional: Vec<u64>,
    /// `Σ (ln p)/p` over the exceptional primes.
    pub weighted_sum: f64,
    /// `Σ (ln p)/p` over all checked primes.
    pub mertens_total: f64,
}

impl PrimeDensityReport {
    pub fn ratio(&self) -> f64 {
        if self.mertens_total > 0.0 {
            self.weighted_sum / self.mertens_total
        } else {
            0.0
        }
    }
}

/// Weighted density of primes `p ≤ p_max`, `ln p ≤ (½ − ε)Hn`, coprime to
/// `a`, at which `μ_n mod p` is still `ε`-far from uniform.
pub fn exceptional_prime_density(
    p: &WalkParams,
    n: u32,
    eps: f64,
    p_max: u64,
    h_ref: f64,
) -> Result<PrimeDensityReport> {
    check_eps(eps)?;
    if h_ref.is_nan() || h_ref <= 0.0 {
        return Err(Error::InvalidArgument(format!("H_ref must be positive, got {h_ref}")));
    }
    let log_cutoff = (0.5 - eps) * h_ref * n as f64;
    let bound = if log_cutoff <= 0.0 {
        0
    } else {
        (log_cutoff.exp().floor() as u64).min(p_max).min(DENSE_Q_MAX)
    };
    let primes: Vec<u64> = primes_up_to(bound)
        .into_iter()
        .filter(|&q| p.coprime_to(q) && (q as f64).ln() <= log_cutoff)
        .collect();
    let opts = CurveOptions {
        n_max: n,
        eps,
        full: false,
        keep_samples: false,
    };
    // ½TV is non-increasing in n, so stopping at the first crossing is exact.
    let far: Vec<bool> = primes
        .par_iter()
        .map(|&q| {
            tv_curve_with(p, q, h_ref, opts)
                .map(|r| r.t_mix.is_none() && r.final_tv >= eps)
        })
        .collect::<Result<_>>()?;
    let exceptional: Vec<u64> = primes
        .iter()
        .zip(&far)
        .filter(|(_, &f)| f)
        .map(|(&q, _)| q)
        .collect();
    let weight = |q: &u64| (*q as f64).ln() / *q as f64;
    Ok(PrimeDensityReport {
        n,
        eps,
        p_max,
        log_cutoff,
        primes_checked: primes.len(),
        weighted_sum: exceptional.iter().map(weight).sum(),
        mertens_total: primes.iter().map(weight).sum(),
        exceptional,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::StepLaw;

    const H: f64 = 0.6853602759724677;

    #[test]
    fn trivial_cases() {
        let p = WalkParams::model();
        let r = tv_curve(&p, 3, 10, 0.25, H).unwrap();
        assert_eq!(r.t_mix, Some(1));
        let s = r.tv_samples.unwrap();
        assert!((s[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert!(s[1].1 < 1e-15);
        assert!(tv_curve(&p, 4, 10, 0.25, H).is_err());
        assert!(tv_curve(&p, 1, 10, 0.25, H).is_err());
        assert!(tv_curve(&p, 5, 10, 1.5, H).is_err());
    }

    #[test]
    fn q5_matches_enumeration() {
        let p = WalkParams::model();
        let r = tv_curve_with(&p, 5, H, CurveOptions { full: true, ..CurveOptions::new(8, 0.25) })
            .unwrap();
        let samples = r.tv_samples.unwrap();
        for n in 0..=8u32 {
            let mut counts = [0u64; 5];
            for code in 0..3u64.pow(n) {
                let (mut c, mut x) = (code, 0i64);
                for i in 0..n {
                    x += ((c % 3) as i64 - 1) * 2i64.pow(i);
                    c /= 3;
                }
                counts[x.rem_euclid(5) as usize] += 1;
            }
            let total = 3f64.powi(n as i32);
            let tv: f64 = 0.5 * counts.iter().map(|&c| (c as f64 / total - 0.2).abs()).sum::<f64>();
            assert!((samples[n as usize].1 - tv).abs() < 1e-12, "n = {n}");
        }
        let first = samples.iter().find(|s| s.1 <= 0.25).unwrap().0;
        assert_eq!(r.t_mix, Some(first));
    }

    #[test]
    fn certificate_implies_mixing() {
        let p = WalkParams::model();
        for q in (3..400).step_by(2) {
            let r = tv_curve_with(&p, q, H, CurveOptions { full: true, ..CurveOptions::new(40, 0.25) })
                .unwrap();
            assert!(r.monotone);
            if let Some(c) = r.certified_at {
                assert!(r.t_mix.unwrap() <= c);
            }
        }
    }

    #[test]
    fn lower_bound_basics() {
        let p = WalkParams::model();
        let r = lower_bound_check(&p, 1001, 1.0, H).unwrap();
        assert_eq!(r.n, 0);
        assert!((r.half_tv - (1.0 - 1.0 / 1001.0)).abs() < 1e-15);
        let r = lower_bound_check(&p, 100_003, 0.1, H).unwrap();
        assert!(r.half_tv >= r.counting_bound - 1e-12);
        assert!(r.support_mod_q <= 2 * (1u64 << r.n) + 1);
        assert!(!r.violation);
    }

    #[test]
    fn scan_filters_nest() {
        let p = WalkParams::model();
        let mut cfg = ScanConfig::new(1001, 1301, QFilter::Odd, H);
        cfg.workers = 1;
        let odd = mixing_scan(&p, &cfg).unwrap();
        cfg.filter = QFilter::Prime;
        let prime = mixing_scan(&p, &cfg).unwrap();
        assert!(prime.records.iter().all(|r| r.is_prime));
        for r in &prime.records {
            assert!(odd.records.contains(r));
        }
        let qs: Vec<u64> = odd.records.iter().map(|r| r.q).collect();
        assert!(qs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(scan_moduli(&p, 1001, 1100, QFilter::Stride(10)).len(), 10);
        assert_eq!(scan_moduli(&p, 1000, 1100, QFilter::Stride(10)).len(), 0);
        assert!(scan_moduli(&p, 2, 20, QFilter::CoprimeToA).iter().all(|q| q % 2 == 1));
    }

    #[test]
    fn scan_is_independent_of_workers() {
        let p = WalkParams::model();
        let mut cfg = ScanConfig::new(3001, 3201, QFilter::Odd, H);
        cfg.workers = 1;
        let a = mixing_scan(&p, &cfg).unwrap();
        cfg.workers = 3;
        let b = mixing_scan(&p, &cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.aggregates, aggregate(&a.records, cfg.exceptional_margin));
    }

    #[test]
    fn quantile_interpolation() {
        let q = Quantiles::of([4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(q.median, 2.5);
        assert_eq!(q.min, 1.0);
        assert_eq!(q.max, 4.0);
        assert!((q.q25 - 1.75).abs() < 1e-15);
        assert!(Quantiles::of([]).is_none());
    }

    #[test]
    fn family_small_k() {
        let p = WalkParams::model();
        let rep = exceptional_family_scan(&p, 1..=4, 0.25, H, 5, 1, 200).unwrap();
        // k = 1 is the trivial group and is skipped.
        assert_eq!(rep.rows.first().map(|r| r.k), Some(2));
        assert_eq!(rep.rows[0].q, 3);
        assert_eq!(rep.rows[0].record.t_mix, Some(1));
    }

    #[test]
    fn prime_density_limits() {
        let p = WalkParams::model();
        let deep = exceptional_prime_density(&p, 400, 0.25, 2000, H).unwrap();
        assert!(deep.primes_checked > 0);
        assert_eq!(deep.weighted_sum, 0.0);
        assert!(!deep.exceptional.contains(&2));
        // p_max binds for every n here, so the prime set is fixed.
        let mut last = f64::INFINITY;
        for n in [40, 60, 80, 120] {
            let r = exceptional_prime_density(&p, n, 0.25, 500, H).unwrap();
            assert!(r.weighted_sum <= last + 1e-15);
            last = r.weighted_sum;
        }
    }

    #[test]
    fn general_law_is_accepted() {
        let p = WalkParams::new(3, StepLaw::new([(-2, 1), (0, 3), (5, 2)]).unwrap()).unwrap();
        let r = tv_curve(&p, 101, 200, 0.25, 1.0).unwrap();
        assert!(r.t_mix.is_some());
        assert!(tv_curve(&p, 102, 200, 0.25, 1.0).is_err());
    }
}
