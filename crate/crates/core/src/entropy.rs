//! Entropy of `μ_n`, estimators of the rate `H(a, μ) = lim H(μ_n)/n`, and
//! concentration of `−log μ_n({X_n})` around `H(μ_n)`.
//!
//! All entropies are in nats.

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hhms;
use crate::measures::{LatticeMeasure, StepLaw};
use crate::scalar::{ksum, neg_xlogx, KahanSum, Mass};
use crate::walk::{
    evolve_exact, evolve_exact_each, log_point_mass, rng_for, sample_endpoint_with, StepSampler,
    WalkParams, DEFAULT_EXACT_SITES,
};

/// Samples per Monte-Carlo block; each block gets its own generator stream.
pub const SMB_BLOCK: usize = 1024;

/// Levels used when the closed form serves as ground truth.
pub const REFERENCE_LEVELS: u32 = 26;

/// Site budget for the exact fallback in [`reference_rate`].
pub const REFERENCE_SITES: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactIncrement,
    Cesaro,
    SmbMonteCarlo,
    HhmsClosedForm,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactIncrement => "exact-increment",
            Method::Cesaro => "cesaro",
            Method::SmbMonteCarlo => "smb-monte-carlo",
            Method::HhmsClosedForm => "hhms-closed-form",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyEstimate {
    /// Nats per step.
    pub value: f64,
    /// Standard error for Monte-Carlo; a heuristic width for exact methods.
    pub standard_error: f64,
    pub method: Method,
    pub n_used: u32,
    /// Zero for exact methods.
    pub samples: u64,
}

impl EntropyEstimate {
    pub fn bits(&self) -> f64 {
        self.value / std::f64::consts::LN_2
    }
}

fn dense_entropy(masses: &[f64]) -> f64 {
    ksum(masses.iter().map(|&m| neg_xlogx(m)))
}

/// `H(μ_n)` for `n = 0..=n_max`.
pub fn entropy_curve(p: &WalkParams, n_max: u32) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_max as usize + 1);
    evolve_exact_each::<f64, _>(p, n_max, DEFAULT_EXACT_SITES, |_, _, m| {
        out.push(dense_entropy(m))
    })?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimates {
    pub increment: EntropyEstimate,
    pub cesaro: EntropyEstimate,
    /// `H(μ_{n+1}) − H(μ_n)` for `n = 0..n_max`.
    pub increments: Vec<f64>,
}

/// Increment and Cesàro estimates at `n_max`. The error width is
/// `|Δ_{n_max} − Δ_{n_max−1}|`, a heuristic, not a bound.
pub fn rate_exact(p: &WalkParams, n_max: u32) -> Result<RateEstimates> {
    if n_max < 4 {
        return Err(Error::InvalidArgument(format!("rate_exact needs n_max ≥ 4, got {n_max}")));
    }
    Ok(rates_from_curve(&entropy_curve(p, n_max)?))
}

fn rates_from_curve(curve: &[f64]) -> RateEstimates {
    let n = curve.len() - 1;
    let increments: Vec<f64> = curve.windows(2).map(|w| w[1] - w[0]).collect();
    let width = (increments[n - 1] - increments[n - 2]).abs();
    RateEstimates {
        increment: EntropyEstimate {
            value: increments[n - 1],
            standard_error: width,
            method: Method::ExactIncrement,
            n_used: n as u32,
            samples: 0,
        },
        cesaro: EntropyEstimate {
            value: curve[n] / n as f64,
            standard_error: width,
            method: Method::Cesaro,
            n_used: n as u32,
            samples: 0,
        },
        increments,
    }
}

/// Monte-Carlo estimate of `H(μ_n)/n` as the mean of `−log μ_n({X_n})/n`
/// over sampled endpoints. Blocks of [`SMB_BLOCK`] samples draw from
/// independent streams of `seed`, so the result does not depend on the
/// thread count.
pub fn smb_estimate(p: &WalkParams, n: u32, samples: u64, seed: u64) -> Result<EntropyEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("smb_estimate needs n ≥ 1".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("smb_estimate needs at least one sample".into()));
    }
    let sampler = StepSampler::new(p.step());
    let blocks = samples.div_ceil(SMB_BLOCK as u64);
    let partial: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = rng_for(seed, block);
            let count = (samples - block * SMB_BLOCK as u64).min(SMB_BLOCK as u64);
            let mut m = Moments::default();
            for _ in 0..count {
                let x = sample_endpoint_with(p, &sampler, n, &mut rng);
                m.push(-log_point_mass(p, n, &x) / n as f64);
            }
            m
        })
        .collect();
    let mut total = Moments::default();
    for m in &partial {
        total.merge(m);
    }
    let mean = total.mean;
    let m = samples as f64;
    let var = if samples > 1 { total.m2 / (m - 1.0) } else { 0.0 };
    Ok(EntropyEstimate {
        value: mean,
        standard_error: (var / m).sqrt(),
        method: Method::SmbMonteCarlo,
        n_used: n,
        samples,
    })
}

/// Running count, mean and centred second moment (Welford, merged pairwise).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, z: f64) {
        self.count += 1.0;
        let d = z - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (z - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        self.mean += d * other.count / n;
        self.m2 += other.m2 + d * d * self.count * other.count / n;
        self.count = n;
    }
}

/// `−log μ_n({x})` for a sampled endpoint; exposed for diagnostics.
pub fn surprisal(p: &WalkParams, n: u32, x: &BigInt) -> f64 {
    -log_point_mass(p, n, x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub n: u32,
    pub entropy: f64,
    /// `Var[−log μ_n({X_n})]`.
    pub variance: f64,
    /// `(α, μ_n{x : |−log μ_n({x}) − H(μ_n)| ≥ αn})`.
    pub tails: Vec<(f64, f64)>,
}

impl ConcentrationRow {
    /// `tail·α²·n` for each α, the quantity bounded by the SMB constant.
    pub fn tail_products(&self) -> Vec<(f64, f64)> {
        self.tails
            .iter()
            .map(|&(alpha, t)| (alpha, t * alpha * alpha * self.n as f64))
            .collect()
    }
}

fn concentration_at(n: u32, masses: &[f64], alphas: &[f64]) -> ConcentrationRow {
    let h = dense_entropy(masses);
    let mut second = KahanSum::default();
    let mut tails = vec![KahanSum::default(); alphas.len()];
    for &m in masses {
        if m <= 0.0 {
            continue;
        }
        let dev = -m.ln() - h;
        second.add(m * dev * dev);
        for (t, &alpha) in tails.iter_mut().zip(alphas) {
            if dev.abs() >= alpha * n as f64 {
                t.add(m);
            }
        }
    }
    ConcentrationRow {
        n,
        entropy: h,
        variance: second.value(),
        tails: alphas.iter().zip(&tails).map(|(&a, t)| (a, t.value())).collect(),
    }
}

/// Entropy, variance of the surprisal, and tail masses for `n = 1..=n_max`,
/// from one exact evolution.
pub fn concentration_profile(
    p: &WalkParams,
    n_max: u32,
    alphas: &[f64],
) -> Result<Vec<ConcentrationRow>> {
    let mut rows = Vec::with_capacity(n_max as usize);
    evolve_exact_each::<f64, _>(p, n_max, DEFAULT_EXACT_SITES, |k, _, m| {
        if k > 0 {
            rows.push(concentration_at(k, m, alphas));
        }
    })?;
    Ok(rows)
}

/// `μ_n{x : |−log μ_n({x}) − H(μ_n)| ≥ αn}`, exactly from `μ_n`.
pub fn smb_tail(p: &WalkParams, n: u32, alpha: f64) -> Result<f64> {
    let mu = evolve_exact::<f64>(p, n)?;
    Ok(concentration_at(n, mu.dense(), &[alpha]).tails[0].1)
}

/// `Var[−log μ_n({X_n})] = Σ μ_n(x)(log μ_n(x))² − H(μ_n)²`, exactly from `μ_n`.
pub fn efron_stein_variance(p: &WalkParams, n: u32) -> Result<f64> {
    let mu = evolve_exact::<f64>(p, n)?;
    Ok(concentration_at(n, mu.dense(), &[]).variance)
}

/// `μ_n` conditioned on its typical set.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalSetMeasure<T> {
    pub n: u32,
    pub alpha: f64,
    /// `H(μ_n)` in nats.
    pub entropy: f64,
    pub measure: LatticeMeasure<T>,
    /// `μ_n(Sᶜ)`.
    pub discarded_mass: T,
    /// `‖μ_n − ν_n‖`, computed in the scalar type.
    pub l1_to_base: T,
    /// Smallest and largest atom of `ν_n`.
    pub min_atom: f64,
    pub max_atom: f64,
}

impl<T: Mass> TypicalSetMeasure<T> {
    /// `exp(H(μ_n) + αn) / (1 − discarded)`.
    pub fn support_bound(&self) -> f64 {
        (self.entropy + self.alpha * self.n as f64).exp() / (1.0 - self.discarded_mass.to_f64())
    }

    /// Whether every atom lies in `[e^{−H−αn}, e^{−H+αn}/(1 − discarded)]`.
    pub fn atoms_in_window(&self) -> bool {
        let an = self.alpha * self.n as f64;
        let keep = 1.0 - self.discarded_mass.to_f64();
        let lo = -self.entropy - an;
        let hi = -self.entropy + an - keep.ln();
        let eps = 1e-12 * (1.0 + self.entropy.abs() + an);
        self.measure
            .iter()
            .all(|(_, m)| (lo - eps..=hi + eps).contains(&m.to_f64().ln()))
    }
}

/// `ν_n(A) = μ_n(A ∩ S)/μ_n(S)` with `S = {x : |−log μ_n({x}) − H(μ_n)| < αn}`.
/// The set is chosen from double-precision logarithms; the conditioning and
/// the distances are then carried out in `T`.
pub fn truncate_typical<T: Mass>(
    p: &WalkParams,
    n: u32,
    alpha: f64,
) -> Result<TypicalSetMeasure<T>> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidArgument(format!("α must be positive, got {alpha}")));
    }
    let mu = evolve_exact::<T>(p, n)?;
    let h = ksum(mu.dense().iter().map(|m| neg_xlogx(m.to_f64())));
    let window = alpha * n as f64;
    let (kept, dropped): (Vec<_>, Vec<_>) = mu
        .iter()
        .map(|(x, m)| (x, m.clone()))
        .partition(|(_, m)| (-m.to_f64().ln() - h).abs() < window);
    if kept.is_empty() {
        return Err(Error::EmptyTypicalSet(alpha));
    }
    let kept_mass = T::sum_of(kept.iter().map(|(_, m)| m.clone()));
    let discarded = T::sum_of(dropped.into_iter().map(|(_, m)| m));
    let nu = LatticeMeasure::from_atoms(
        kept.into_iter().map(|(x, m)| (x, m / kept_mass.clone())),
    )?;
    let l1 = mu.l1_distance(&nu);
    let (mut min_atom, mut max_atom) = (f64::INFINITY, 0.0f64);
    for (_, m) in nu.iter() {
        let m = m.to_f64();
        min_atom = min_atom.min(m);
        max_atom = max_atom.max(m);
    }
    Ok(TypicalSetMeasure {
        n,
        alpha,
        entropy: h,
        measure: nu,
        discarded_mass: discarded,
        l1_to_base: l1,
        min_atom,
        max_atom,
    })
}

/// Whether `(a, μ)` is the case with a closed form: `a = 2`, uniform on {−1, 0, 1}.
pub fn has_closed_form(p: &WalkParams) -> bool {
    p.a() == 2 && *p.step() == StepLaw::model()
}

/// Ground-truth rate for reports: the closed form in the model case,
/// otherwise the exact increment at the largest `n` within [`REFERENCE_SITES`].
pub fn reference_rate(p: &WalkParams) -> Result<EntropyEstimate> {
    if has_closed_form(p) {
        let r = hhms::entropy_ratio(REFERENCE_LEVELS)?;
        return Ok(EntropyEstimate {
            value: r.entropy_nats,
            standard_error: 1.5 * r.series.remainder,
            method: Method::HhmsClosedForm,
            n_used: REFERENCE_LEVELS,
            samples: 0,
        });
    }
    let mut n = 4;
    while p.exact_window(n + 1).is_some_and(|w| w <= REFERENCE_SITES) {
        n += 1;
    }
    let mut curve = Vec::with_capacity(n as usize + 1);
    evolve_exact_each::<f64, _>(p, n, REFERENCE_SITES.max(p.exact_window(n).unwrap_or(0)), |_, _, m| {
        curve.push(dense_entropy(m))
    })?;
    Ok(rates_from_curve(&curve).increment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn binary(a: u64) -> WalkParams {
        WalkParams::new(a, StepLaw::uniform(&[0, 1]).unwrap()).unwrap()
    }

    #[test]
    fn small_curve_values() {
        let c = entropy_curve(&WalkParams::model(), 2).unwrap();
        assert_eq!(c[0], 0.0);
        assert!((c[1] - 3f64.ln()).abs() < 1e-15);
        assert!((c[2] - (9f64.ln() - 4.0 / 9.0 * 2f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn binary_digits_are_exact() {
        let r = rate_exact(&binary(2), 16).unwrap();
        for d in &r.increments {
            assert!((d - 2f64.ln()).abs() < 1e-12);
        }
        let r = rate_exact(&binary(10), 6).unwrap();
        for d in &r.increments {
            assert!((d - 2f64.ln()).abs() < 1e-12);
        }
        assert!(rate_exact(&binary(2), 3).is_err());
    }

    #[test]
    fn increments_obey_rate_bounds() {
        let laws = [
            WalkParams::model(),
            WalkParams::new(3, StepLaw::new([(-2, 1), (0, 3), (5, 2)]).unwrap()).unwrap(),
            WalkParams::new(2, StepLaw::new([(0, 1), (1, 3)]).unwrap()).unwrap(),
            WalkParams::new(5, StepLaw::uniform(&[-1, 0, 1]).unwrap()).unwrap(),
        ];
        for p in &laws {
            let log_a = (p.a() as f64).ln();
            let r = rate_exact(p, 12).unwrap();
            for d in &r.increments {
                assert!(*d > 0.0 && *d <= p.step().entropy() + 1e-12);
            }
            for d in &r.increments[4..] {
                assert!(*d <= log_a + 1e-12, "{d} vs log a = {log_a}");
            }
        }
    }

    #[test]
    fn early_increments_can_exceed_log_a() {
        // Only the limit is capped by log a: the first increment is H(μ).
        let r = rate_exact(&WalkParams::model(), 6).unwrap();
        let ln2 = 2f64.ln();
        assert!((r.increments[0] - 3f64.ln()).abs() < 1e-15);
        assert!(r.increments[1] > ln2 && r.increments[2] > ln2);
        assert!(r.increments[3] < ln2);
    }

    #[test]
    fn smb_degenerate_case_is_constant() {
        let e = smb_estimate(&binary(2), 40, 3000, 7).unwrap();
        assert!((e.value - 2f64.ln()).abs() < 1e-12);
        assert_eq!(e.standard_error, 0.0);
        assert_eq!(e.samples, 3000);
        assert_eq!(e.method.as_str(), "smb-monte-carlo");
    }

    #[test]
    fn smb_is_deterministic_and_blockwise() {
        let p = WalkParams::model();
        let a = smb_estimate(&p, 10, 2500, 3).unwrap();
        let b = smb_estimate(&p, 10, 2500, 3).unwrap();
        assert_eq!(a, b);
        let c = smb_estimate(&p, 10, 2500, 4).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn smb_agrees_with_exact_at_small_n() {
        let p = WalkParams::model();
        let exact = entropy_curve(&p, 12).unwrap()[12] / 12.0;
        let e = smb_estimate(&p, 12, 100_000, 2024).unwrap();
        assert!((e.value - exact).abs() < 3.0 * e.standard_error, "{e:?} vs {exact}");
    }

    #[test]
    fn tails_and_variance() {
        assert_eq!(smb_tail(&binary(2), 10, 0.05).unwrap(), 0.0);
        assert!(efron_stein_variance(&binary(2), 10).unwrap().abs() < 1e-20);
        assert_eq!(smb_tail(&WalkParams::model(), 10, 1e6).unwrap(), 0.0);
        let p = WalkParams::new(2, StepLaw::new([(-1, 1), (0, 2), (1, 1)]).unwrap()).unwrap();
        let probs = [0.25f64, 0.5, 0.25];
        let h: f64 = probs.iter().map(|&x| -x * x.ln()).sum();
        let var: f64 = probs.iter().map(|&x| x * (x.ln() + h).powi(2)).sum();
        assert!((efron_stein_variance(&p, 1).unwrap() - var).abs() < 1e-15);
    }

    #[test]
    fn profile_matches_single_calls() {
        let p = WalkParams::model();
        let rows = concentration_profile(&p, 10, &[0.1, 0.2]).unwrap();
        assert_eq!(rows.len(), 10);
        let r = &rows[9];
        assert_eq!(r.n, 10);
        assert_eq!(r.tails[0].1, smb_tail(&p, 10, 0.1).unwrap());
        assert_eq!(r.variance, efron_stein_variance(&p, 10).unwrap());
    }

    #[test]
    fn typical_set_exact_identity() {
        let p = WalkParams::model();
        let t = truncate_typical::<BigRational>(&p, 8, 0.1).unwrap();
        let two = BigRational::from_integer(2.into());
        assert_eq!(t.l1_to_base, two * t.discarded_mass.clone());
        assert!(t.measure.is_probability());
        assert!(t.atoms_in_window());
        assert!((t.measure.support_len() as f64) <= t.support_bound());
        let tail = smb_tail(&p, 8, 0.1).unwrap();
        assert!((t.discarded_mass.to_f64() - tail).abs() < 1e-15);
    }

    #[test]
    fn typical_set_edge_cases() {
        let p = WalkParams::model();
        let t = truncate_typical::<f64>(&p, 10, 1e3).unwrap();
        assert_eq!(t.discarded_mass, 0.0);
        assert!(t.measure.l1_distance(&evolve_exact::<f64>(&p, 10).unwrap()) < 1e-13);
        assert!(matches!(
            truncate_typical::<f64>(&binary(2), 6, 1e-9),
            Ok(t) if t.discarded_mass.is_zero()
        ));
        // Two-point law with unequal weights: every atom is atypical at tiny α.
        let q = WalkParams::new(2, StepLaw::new([(0, 1), (1, 2)]).unwrap()).unwrap();
        assert!(matches!(truncate_typical::<f64>(&q, 1, 1e-9), Err(Error::EmptyTypicalSet(_))));
        assert!(truncate_typical::<f64>(&p, 4, 0.0).is_err());
    }

    #[test]
    fn reference_uses_closed_form_for_model() {
        let r = reference_rate(&WalkParams::model()).unwrap();
        assert_eq!(r.method, Method::HhmsClosedForm);
        assert!((r.bits() - 0.9887658714).abs() < 1e-8);
        let b = reference_rate(&binary(3)).unwrap();
        assert_eq!(b.method, Method::ExactIncrement);
        assert!((b.value - 2f64.ln()).abs() < 1e-12);
    }
}
