//! Fourier side: characteristic functions, the product formula for `μ̂_n`,
//! ℓ² distances to uniform, and the digit-count bound for small moduli.
//!
//! Transforms use `μ̂(ξ) = Σ_x μ({x})·e(−ξx)` with `e(t) = exp(2πit)`, and on
//! ℤ/qℤ the same normalization, so the inversion carries the `1/q`.
//! Frequencies `r/q` are carried as integer pairs; `aⁱ·r mod q` is reduced
//! exactly before any trigonometric call.

mod sieve;

pub use sieve::*;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::arith::gcd;
use crate::error::{Error, Result};
use crate::measures::{LatticeMeasure, StepLaw};
use crate::scalar::ksum;
use crate::walk::WalkParams;

/// Largest modulus for which DFTs are evaluated directly.
pub const DIRECT_DFT_MAX: usize = 4096;

/// `e(−t) = exp(−2πit)`.
#[inline]
fn e_neg(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -TAU * t)
}

/// `μ̂(ξ)` for real `ξ`.
pub fn step_char(step: &StepLaw, xi: f64) -> Complex64 {
    step.probabilities()
        .map(|(b, p)| p * e_neg((xi * b as f64).rem_euclid(1.0)))
        .sum()
}

/// `μ̂(r/q)` with the phase `r·b mod q` reduced exactly.
pub fn step_char_rational(step: &StepLaw, r: u64, q: u64) -> Complex64 {
    let qi = q as i128;
    step.probabilities()
        .map(|(b, p)| {
            let k = (r as i128 * b as i128).rem_euclid(qi);
            p * e_neg(k as f64 / q as f64)
        })
        .sum()
}

/// `μ̂_n(ξ) = Π_{i<n} μ̂(aⁱξ)` for real `ξ`.
pub fn walk_char(p: &WalkParams, n: u32, xi: f64) -> Complex64 {
    let mut x = xi.rem_euclid(1.0);
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        acc *= step_char(p.step(), x);
        x = (x * p.a() as f64).rem_euclid(1.0);
    }
    acc
}

/// `μ̂_n(r/q)` with exact frequency arithmetic.
pub fn walk_char_rational(p: &WalkParams, n: u32, r: u64, q: u64) -> Complex64 {
    let mut k = r % q;
    let a = p.a() % q;
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        if k == 0 {
            break;
        }
        acc *= step_char_rational(p.step(), k, q);
        k = ((k as u128 * a as u128) % q as u128) as u64;
    }
    acc
}

/// The amplitudes `μ̂_n(r/q)` for `r = 0..q−1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSlice {
    pub modulus: u64,
    pub amplitudes: Vec<Complex64>,
}

impl SpectrumSlice {
    /// Evaluated through the product formula, `O(n·q·|supp μ|)`.
    pub fn of_walk(p: &WalkParams, q: u64, n: u32) -> Self {
        let amplitudes = (0..q).map(|r| walk_char_rational(p, n, r, q)).collect();
        Self {
            modulus: q,
            amplitudes,
        }
    }

    /// Evaluated as the DFT of a distribution on ℤ/qℤ.
    pub fn of_masses(masses: &[f64]) -> Self {
        Self {
            modulus: masses.len() as u64,
            amplitudes: dft(masses),
        }
    }

    /// `Σ_{r≠0} |amplitude(r)|²`.
    pub fn nonzero_energy(&self) -> f64 {
        ksum(self.amplitudes.iter().skip(1).map(|z| z.norm_sqr()))
    }
}

/// `F(r) = Σ_x p(x)·e(−rx/q)`.
pub fn dft(masses: &[f64]) -> Vec<Complex64> {
    let q = masses.len();
    if q <= DIRECT_DFT_MAX {
        direct_dft(masses)
    } else {
        fast_dft(masses)
    }
}

pub(crate) fn twiddles(q: usize) -> Vec<Complex64> {
    (0..q).map(|k| e_neg(k as f64 / q as f64)).collect()
}

/// `O(q²)` evaluation with twiddles indexed by `r·x mod q`.
pub fn direct_dft(masses: &[f64]) -> Vec<Complex64> {
    let q = masses.len();
    let tw = twiddles(q);
    (0..q)
        .map(|r| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut k = 0usize;
            for &m in masses {
                if m != 0.0 {
                    acc += m * tw[k];
                }
                k += r;
                if k >= q {
                    k -= q;
                }
            }
            acc
        })
        .collect()
}

pub fn fast_dft(masses: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = masses.iter().map(|&m| Complex64::new(m, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// `p(x) = (1/q)·Σ_r F(r)·e(rx/q)`.
pub fn inverse_dft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let q = spectrum.len();
    if q <= DIRECT_DFT_MAX {
        let tw = twiddles(q);
        (0..q)
            .map(|x| {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut k = 0usize;
                for f in spectrum {
                    acc += f * tw[k].conj();
                    k += x;
                    if k >= q {
                        k -= q;
                    }
                }
                acc / q as f64
            })
            .collect()
    } else {
        let mut buf = spectrum.to_vec();
        FftPlanner::new().plan_fft_inverse(q).process(&mut buf);
        buf.into_iter().map(|z| z / q as f64).collect()
    }
}

/// `ν̂(r/s)` for a measure on ℤ, frequency reduced exactly.
pub fn measure_char_rational(m: &LatticeMeasure<f64>, r: u64, s: u64) -> Complex64 {
    let si = s as i128;
    let tw_step = r as i128 % si;
    let mut k = (m.min_site() as i128 * tw_step).rem_euclid(si);
    let mut acc = Complex64::new(0.0, 0.0);
    for &mass in m.dense() {
        if mass != 0.0 {
            acc += mass * e_neg(k as f64 / s as f64);
        }
        k += tw_step;
        if k >= si {
            k -= si;
        }
    }
    acc
}

/// `q·‖μ_n mod q − u_q‖₂² = Σ_{r≠0} |μ̂_n(r/q)|²`, computed spectrally.
pub fn l2_dist_sq_mod(p: &WalkParams, q: u64, n: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::BadModulus { min: 2, got: q });
    }
    Ok(ksum((1..q).map(|r| walk_char_rational(p, n, r, q).norm_sqr())))
}

/// Number of `i` in `1..n` for which it is *not* the case that
/// `ξ_i = ξ_{i+1} ∈ {0, a−1}`.
pub fn digit_activity(digits: &[u32], a: u32) -> usize {
    digits
        .windows(2)
        .filter(|w| !(w[0] == w[1] && (w[0] == 0 || w[0] == a - 1)))
        .count()
}

/// First `n` base-`a` digits of `r/q ∈ [0, 1)`.
pub fn fraction_digits(r: u64, q: u64, a: u64, n: usize) -> Vec<u32> {
    let mut rem = (r % q) as u128;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        rem *= a as u128;
        out.push((rem / q as u128) as u32);
        rem %= q as u128;
    }
    out
}

/// Certified upper bound on `ρ = sup{|μ̂(ξ)| : ‖ξ‖ ≥ a⁻²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharSupCertificate {
    /// Largest `|μ̂|` seen on the grid.
    pub grid_max: f64,
    pub grid_step: f64,
    /// Lipschitz constant `2π·E|b|` of `ξ ↦ μ̂(ξ)`.
    pub lipschitz: f64,
    /// `grid_max + lipschitz·grid_step/2`, capped at 1.
    pub certified: f64,
}

/// Grid search over `[a⁻², ½]` (enough, since `|μ̂(−ξ)| = |μ̂(ξ)|`)
/// inflated by the Lipschitz error of the grid.
pub fn char_sup_off_origin(step: &StepLaw, a: u64, grid_step: f64) -> CharSupCertificate {
    let lo = 1.0 / (a * a) as f64;
    let hi = 0.5;
    let cells = ((hi - lo) / grid_step).ceil() as usize;
    let h = (hi - lo) / cells as f64;
    let grid_max = (0..=cells)
        .map(|i| step_char(step, lo + i as f64 * h).norm())
        .fold(0.0, f64::max);
    let lipschitz = TAU * step.mean_abs();
    CharSupCertificate {
        grid_max,
        grid_step: h,
        lipschitz,
        certified: (grid_max + lipschitz * h / 2.0).min(1.0),
    }
}

/// Largest `c` with `|μ̂(ξ)| ≤ exp(−c‖ξ‖²)` on a grid of `(0, ½]`.
pub fn gaussian_decay_constant(step: &StepLaw, grid_points: usize) -> f64 {
    (1..=grid_points)
        .map(|i| {
            let xi = 0.5 * i as f64 / grid_points as f64;
            -step_char(step, xi).norm().ln() / (xi * xi)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallModuliBound {
    pub q: u64,
    pub n: u32,
    /// `n₀ = ⌈log_a q⌉`.
    pub block: u32,
    /// `k = ⌊n/n₀⌋`.
    pub blocks: u32,
    pub rho: f64,
    /// `a·((1 + a·ρ^{2k})^{n₀} − 1)`.
    pub bound: f64,
}

/// Explicit upper bound on `q·‖μ_n mod q − u_q‖₂²` for `gcd(q, a) = 1`.
///
/// Each digit position `i` counted by [`digit_activity`] has `‖a^{i−1}ξ‖ ≥ a⁻²`
/// and contributes a factor at most `ρ`; for `r ≠ 0` the first `n₀` digits of
/// `r/q` are never constant in `{0, a−1}`, so every term has activity ≥ 1.
pub fn small_moduli_bound(p: &WalkParams, q: u64, n: u32) -> Result<SmallModuliBound> {
    let cert = char_sup_off_origin(p.step(), p.a(), 1e-6);
    small_moduli_bound_with(p, q, n, cert.certified)
}

pub fn small_moduli_bound_with(p: &WalkParams, q: u64, n: u32, rho: f64) -> Result<SmallModuliBound> {
    if gcd(q, p.a()) != 1 {
        return Err(Error::NotCoprime { q, a: p.a() });
    }
    if q < 2 {
        return Err(Error::BadModulus { min: 2, got: q });
    }
    let a = p.a();
    let mut block = 0u32;
    let mut pow = 1u128;
    while pow < q as u128 {
        pow *= a as u128;
        block += 1;
    }
    let blocks = n / block;
    let af = a as f64;
    let x = af * rho.powi(2 * blocks as i32);
    // (1 + x)^n₀ − 1 without cancellation for tiny x.
    let bound = af * (block as f64 * x.ln_1p()).exp_m1();
    Ok(SmallModuliBound {
        q,
        n,
        block,
        blocks,
        rho,
        bound,
    })
}
