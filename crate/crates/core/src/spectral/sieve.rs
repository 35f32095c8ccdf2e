//! Fourier-multiplier projections on ℤ/qℤ and the sums they feed.
//!
//! For `q₀ | q`, `π_q ν = ν mod q` keeps the frequencies `r/s` with `s | q`,
//! and `P_q^{(q₀)} ν` keeps those with `[s, q₀] = q` (`r/s` in lowest terms).
//! Measures on ℤ/q₁ℤ with `q₁ | q` are embedded in ℤ/qℤ as measures uniform
//! on the fibres of `ℤ/qℤ → ℤ/q₁ℤ`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::{dft, inverse_dft, measure_char_rational};
use crate::arith::{divisor_count, divisors, gcd, lcm, mobius};
use crate::error::{Error, Result};
use crate::measures::{CyclicDistribution, LatticeMeasure};
use crate::scalar::ksum;
use crate::walk::{evolve_exact, rng_for, WalkParams};

/// Largest modulus `project` accepts by default.
pub const DEFAULT_PROJECT_MAX: u64 = 1_000_000;

/// Reduced denominator of `r/q`.
fn denominator(r: u64, q: u64) -> u64 {
    q / gcd(r, q)
}

/// `ν mod q` split into the components `P_s^{(q₀)} ν`, `q₀ | s | q`.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectionDecomposition {
    pub q: u64,
    pub q0: u64,
    /// Component for each `s` with `q₀ | s | q`, as a signed vector on ℤ/qℤ.
    pub components: BTreeMap<u64, Vec<f64>>,
    /// `d(q/q₀)`.
    pub divisor_bound: u64,
    /// `μ(d)` for every `d | q/q₀`.
    pub mobius: BTreeMap<u64, i64>,
}

impl ProjectionDecomposition {
    /// `Σ_s P_s^{(q₀)} ν`, which reconstructs `ν mod q`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.q as usize];
        for comp in self.components.values() {
            for (o, c) in out.iter_mut().zip(comp) {
                *o += c;
            }
        }
        out
    }

    /// The top component `P_q^{(q₀)} ν`.
    pub fn top(&self) -> &[f64] {
        &self.components[&self.q]
    }
}

fn check_divides(q: u64, q0: u64) -> Result<()> {
    if q0 == 0 || !q.is_multiple_of(q0) {
        return Err(Error::NotDivisor { q0, q });
    }
    Ok(())
}

/// Projection of a distribution on ℤ/qℤ; each component is computed by
/// masking the spectrum and inverting the DFT.
pub fn project(nu: &CyclicDistribution<f64>, q0: u64) -> Result<ProjectionDecomposition> {
    let q = nu.modulus();
    check_divides(q, q0)?;
    if q > DEFAULT_PROJECT_MAX {
        return Err(Error::CapExceeded {
            what: "projection modulus",
            got: q,
            cap: DEFAULT_PROJECT_MAX,
        });
    }
    let spectrum = dft(nu.masses());
    let mut components = BTreeMap::new();
    for s in divisors(q).into_iter().filter(|s| s % q0 == 0) {
        let masked: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(r, &f)| {
                if lcm(denominator(r as u64, q), q0) == s {
                    f
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        components.insert(s, inverse_dft(&masked).into_iter().map(|z| z.re).collect());
    }
    let mobius = divisors(q / q0).into_iter().map(|d| (d, mobius(d))).collect();
    Ok(ProjectionDecomposition {
        q,
        q0,
        components,
        divisor_bound: divisor_count(q / q0),
        mobius,
    })
}

/// `π_{q₁} ν` embedded in ℤ/qℤ (uniform on fibres), for `q₁ | q`.
pub fn embedded_reduction(nu: &CyclicDistribution<f64>, q1: u64) -> Vec<f64> {
    let q = nu.modulus();
    let mut coarse = vec![0.0; q1 as usize];
    for (x, &m) in nu.masses().iter().enumerate() {
        coarse[x % q1 as usize] += m;
    }
    let fibre = (q / q1) as f64;
    (0..q as usize).map(|x| coarse[x % q1 as usize] / fibre).collect()
}

/// `P_q^{(q₀)} ν` on the physical side by Möbius inversion over the divisor
/// lattice: `Σ_{q₀ | q₁ | q} μ(q/q₁)·π_{q₁} ν`.
pub fn mobius_projection(nu: &CyclicDistribution<f64>, q0: u64) -> Result<Vec<f64>> {
    let q = nu.modulus();
    check_divides(q, q0)?;
    let mut out = vec![0.0; q as usize];
    for q1 in divisors(q).into_iter().filter(|d| d % q0 == 0) {
        let c = mobius(q / q1);
        if c == 0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(embedded_reduction(nu, q1)) {
            *o += c as f64 * v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct NormCheckReport {
    pub q: u64,
    pub q0: u64,
    pub trials: usize,
    pub divisor_bound: u64,
    /// Largest `‖π_q ν‖₁ / ‖ν‖₁` seen.
    pub max_pi_ratio: f64,
    /// Largest `‖P_q^{(q₀)} ν‖₁ / ‖ν‖₁` seen.
    pub max_p_ratio: f64,
    pub violations: usize,
}

fn random_probability<R: Rng>(q: u64, rng: &mut R) -> CyclicDistribution<f64> {
    let mut w = vec![0.0; q as usize];
    // Alternate between a few point masses and dense noise.
    if rng.gen_bool(0.5) {
        let atoms = rng.gen_range(1..=4.min(q));
        for _ in 0..atoms {
            w[rng.gen_range(0..q) as usize] += rng.gen::<f64>() + 1e-3;
        }
    } else {
        for v in w.iter_mut() {
            *v = -rng.gen::<f64>().ln();
        }
    }
    let total: f64 = w.iter().sum();
    CyclicDistribution::new(w.into_iter().map(|v| v / total).collect()).expect("normalized")
}

/// Random check of `‖π_q‖ ≤ 1` and `‖P_q^{(q₀)}‖ ≤ d(q/q₀)` in the ℓ¹ operator norm.
pub fn operator_norm_checks(q: u64, q0: u64, trials: usize, seed: u64) -> Result<NormCheckReport> {
    check_divides(q, q0)?;
    let mut rng = rng_for(seed, q ^ (q0 << 32));
    let bound = divisor_count(q / q0);
    let mut report = NormCheckReport {
        q,
        q0,
        trials,
        divisor_bound: bound,
        max_pi_ratio: 0.0,
        max_p_ratio: 0.0,
        violations: 0,
    };
    let mut check = |nu: &CyclicDistribution<f64>| -> Result<()> {
        let dec = project(nu, q0)?;
        let pi_norm = ksum(dec.reconstruct().iter().map(|v| v.abs()));
        let p_norm = ksum(dec.top().iter().map(|v| v.abs()));
        report.max_pi_ratio = report.max_pi_ratio.max(pi_norm);
        report.max_p_ratio = report.max_p_ratio.max(p_norm);
        if pi_norm > 1.0 + 1e-9 || p_norm > bound as f64 + 1e-9 {
            report.violations += 1;
        }
        Ok(())
    };
    check(&CyclicDistribution::dirac(q, 0))?;
    for _ in 1..trials {
        check(&random_probability(q, &mut rng))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct LargeSieveReport {
    pub q0: u64,
    pub big_q: u64,
    /// Half-width `N` of the window `[−N, N]` containing the support.
    pub half_width: u64,
    /// Number of fractions `r/s` summed over.
    pub fractions: u64,
    /// `Σ_{q ∈ [Q/2, Q], q₀ | q} q‖P_q^{(q₀)} ν‖₂²`.
    pub lhs: f64,
    /// `(Q² + 2N)·‖ν‖₂²`.
    pub rhs: f64,
}

impl LargeSieveReport {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// Evaluates both sides of the large sieve inequality restricted to
/// `q ∈ [Q/2, Q]`, `q₀ | q`.
///
/// `q‖P_q^{(q₀)}ν‖₂²` is the sum of `|ν̂(r/s)|²` over `s | q` with
/// `[s, q₀] = q` and `r` coprime to `s`; all `ν̂(r/s)` for one `s` come from
/// one DFT of `ν mod s`.
pub fn large_sieve_sum(nu: &LatticeMeasure<f64>, q0: u64, big_q: u64) -> Result<LargeSieveReport> {
    if q0 == 0 || big_q < 2 * q0 {
        return Err(Error::InvalidArgument(format!("need Q ≥ 2q₀, got Q = {big_q}, q₀ = {q0}")));
    }
    let half_width = nu.min_site().unsigned_abs().max(nu.max_site().unsigned_abs()).max(1);
    let mut lhs_terms = Vec::new();
    let mut fractions = 0u64;
    for q in big_q.div_ceil(2)..=big_q {
        if q % q0 != 0 {
            continue;
        }
        for s in divisors(q) {
            if lcm(s, q0) != q {
                continue;
            }
            let spectrum = spectrum_of_reduction(nu, s);
            for r in 0..s {
                if gcd(r, s) == 1 {
                    lhs_terms.push(spectrum[r as usize].norm_sqr());
                    fractions += 1;
                }
            }
        }
    }
    let rhs = ((big_q * big_q) as f64 + 2.0 * half_width as f64) * nu.l2_norm_sq();
    Ok(LargeSieveReport {
        q0,
        big_q,
        half_width,
        fractions,
        lhs: ksum(lhs_terms),
        rhs,
    })
}

/// `ν̂(r/s)` for `r = 0..s−1`, via the DFT of `ν mod s`.
fn spectrum_of_reduction(nu: &LatticeMeasure<f64>, s: u64) -> Vec<Complex64> {
    let mut folded = vec![0.0; s as usize];
    let si = s as i64;
    for (x, &m) in nu.iter() {
        folded[x.rem_euclid(si) as usize] += m;
    }
    dft(&folded)
}

/// `ν^{(m)} = (1/(m+1))·Σ_{i=0}^{m} μ_i * (m_{aⁱ})_*ν * (m_{a^{i+n}})_*μ_{m−i}`.
pub fn multiplicity_average(
    p: &WalkParams,
    nu: &LatticeMeasure<f64>,
    n: u32,
    m: u32,
) -> Result<LatticeMeasure<f64>> {
    let laws: Vec<LatticeMeasure<f64>> = (0..=m).map(|i| evolve_exact(p, i)).collect::<Result<_>>()?;
    let a = p.a() as i64;
    let weight = 1.0 / (m + 1) as f64;
    let mut acc = LatticeMeasure::empty();
    for i in 0..=m {
        let head = &laws[i as usize];
        let mid = nu.pushforward_scale(checked_pow(a, i)?)?;
        let tail = laws[(m - i) as usize].pushforward_scale(checked_pow(a, i + n)?)?;
        let term = tail.convolve(&head.convolve(&mid));
        acc = acc.add(&term.scaled(&weight));
    }
    Ok(acc)
}

fn checked_pow(a: i64, e: u32) -> Result<i64> {
    a.checked_pow(e)
        .ok_or_else(|| Error::InvalidArgument(format!("{a}^{e} overflows")))
}

/// Both sides of `|ν̂^{(m)}(ξ)|² ≤ (1/(m+1))·Σ_{i≤m} |ν̂(aⁱξ)|²` at `ξ = r/s`.
pub fn multiplicity_cauchy_schwarz(
    p: &WalkParams,
    nu: &LatticeMeasure<f64>,
    averaged: &LatticeMeasure<f64>,
    m: u32,
    r: u64,
    s: u64,
) -> (f64, f64) {
    let lhs = measure_char_rational(averaged, r, s).norm_sqr();
    let a = p.a() % s;
    let mut k = r % s;
    let mut terms = Vec::with_capacity(m as usize + 1);
    for _ in 0..=m {
        terms.push(measure_char_rational(nu, k, s).norm_sqr());
        k = ((k as u128 * a as u128) % s as u128) as u64;
    }
    (lhs, ksum(terms) / (m + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::is_prime;
    use crate::walk::evolve_mod;

    fn sample(q: u64, seed: u64) -> CyclicDistribution<f64> {
        random_probability(q, &mut rng_for(seed, 0))
    }

    #[test]
    fn prime_top_component_is_distance_to_uniform() {
        for q in [5u64, 13, 101] {
            assert!(is_prime(q));
            let nu = sample(q, q);
            let dec = project(&nu, 1).unwrap();
            for (x, &v) in dec.top().iter().enumerate() {
                assert!((v - (nu.masses()[x] - 1.0 / q as f64)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partition_and_mobius() {
        for q in [12u64, 30, 36] {
            for q0 in divisors(q) {
                for seed in 0..5 {
                    let nu = sample(q, seed);
                    let dec = project(&nu, q0).unwrap();
                    for (a, b) in dec.reconstruct().iter().zip(nu.masses()) {
                        assert!((a - b).abs() < 1e-10);
                    }
                    let mob = mobius_projection(&nu, q0).unwrap();
                    for (a, b) in dec.top().iter().zip(&mob) {
                        assert!((a - b).abs() < 1e-10, "q={q} q0={q0}");
                    }
                }
            }
        }
    }

    /// The coefficient μ(q₁/q₀) (instead of μ(q/q₁)) does not give `P_q^{(q₀)}`.
    #[test]
    fn literal_mobius_coefficient_fails() {
        let literal = |nu: &CyclicDistribution<f64>, q0: u64| {
            let q = nu.modulus();
            let mut out = vec![0.0; q as usize];
            for q1 in divisors(q).into_iter().filter(|d| d % q0 == 0) {
                let c = mobius(q1 / q0) as f64;
                for (o, v) in out.iter_mut().zip(embedded_reduction(nu, q1)) {
                    *o += c * v;
                }
            }
            out
        };
        let nu = sample(30, 3);
        let top = project(&nu, 1).unwrap().top().to_vec();
        let lit = literal(&nu, 1);
        // μ(30) = −1, so the literal sum is exactly −P.
        for (a, b) in top.iter().zip(&lit) {
            assert!((a + b).abs() < 1e-10);
        }
        let nu = sample(12, 3);
        let top = project(&nu, 1).unwrap().top().to_vec();
        let lit = literal(&nu, 1);
        assert!(top.iter().zip(&lit).any(|(a, b)| (a - b).abs() > 1e-3));
    }

    #[test]
    fn components_have_disjoint_fourier_support() {
        let nu = sample(36, 11);
        let dec = project(&nu, 2).unwrap();
        let spectra: Vec<(u64, Vec<Complex64>)> =
            dec.components.iter().map(|(&s, v)| (s, dft(v))).collect();
        for r in 0..36u64 {
            let live: Vec<u64> = spectra
                .iter()
                .filter(|(_, f)| f[r as usize].norm() > 1e-12)
                .map(|(s, _)| *s)
                .collect();
            assert!(live.len() <= 1, "r = {r}: {live:?}");
            if let Some(&s) = live.first() {
                assert_eq!(s, lcm(denominator(r, 36), 2));
            }
        }
    }

    #[test]
    fn project_rejects_non_divisor() {
        let nu = sample(12, 0);
        assert!(matches!(project(&nu, 5), Err(Error::NotDivisor { .. })));
    }

    #[test]
    fn norm_checks() {
        let dirac = project(&CyclicDistribution::dirac(30, 0), 1).unwrap();
        assert!((ksum(dirac.reconstruct().iter().map(|v| v.abs())) - 1.0).abs() < 1e-12);
        let r = operator_norm_checks(30, 1, 200, 5).unwrap();
        assert_eq!(r.divisor_bound, 8);
        assert_eq!(r.violations, 0);
        assert!(r.max_p_ratio <= 8.0);
        let r = operator_norm_checks(31, 1, 200, 5).unwrap();
        assert!(r.max_p_ratio <= 2.0 + 1e-12);
    }

    #[test]
    fn large_sieve_dirac_counts_fractions() {
        let r = large_sieve_sum(&LatticeMeasure::dirac(0), 1, 16).unwrap();
        // q = 8..16: Σ φ(q) = 4+6+4+10+4+12+6+8+8.
        assert_eq!(r.fractions, 62);
        assert!((r.lhs - 62.0).abs() < 1e-9);
        assert!(r.lhs <= r.rhs);
    }

    #[test]
    fn large_sieve_uniform_interval() {
        let n = 1000;
        let nu = LatticeMeasure::from_atoms((0..=n).map(|x| (x, 1.0 / (n + 1) as f64))).unwrap();
        let r = large_sieve_sum(&nu, 1, 64).unwrap();
        assert!(r.ratio() <= 1.0);
        let r3 = large_sieve_sum(&nu, 3, 64).unwrap();
        assert!(r3.ratio() <= 1.0);
        assert!(large_sieve_sum(&nu, 40, 64).is_err());
    }

    #[test]
    fn multiplicity_average_basics() {
        let p = WalkParams::model();
        let nu: LatticeMeasure<f64> = evolve_exact(&p, 5).unwrap();
        let same = multiplicity_average(&p, &nu, 5, 0).unwrap();
        assert!(same.l1_distance(&nu) < 1e-15);
        let avg = multiplicity_average(&p, &nu, 5, 3).unwrap();
        assert!((avg.total() - 1.0).abs() < 1e-12);
        // With ν = μ_n the average is exactly μ_{n+m}.
        let target: LatticeMeasure<f64> = evolve_exact(&p, 8).unwrap();
        assert!(avg.l1_distance(&target) < 1e-12);
        let (lhs, rhs) = multiplicity_cauchy_schwarz(&p, &nu, &avg, 3, 5, 17);
        assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn mod_and_projection_consistency() {
        let p = WalkParams::model();
        let d = evolve_mod::<f64>(&p, 30, 6).unwrap();
        let dec = project(&d, 1).unwrap();
        assert!(dec.components.len() == 8);
    }
}
