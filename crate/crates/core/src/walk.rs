//! Evolution of `X_{n+1} = a·X_n + b_n` on ℤ and on ℤ/qℤ.
//!
//! `X_n = Σ_{i<n} b_i·a^i`, so the law `μ_n` satisfies `μ_n = μ * (m_a)_* μ_{n−1}`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::gcd;
use crate::error::{Error, Result};
use crate::measures::{CyclicDistribution, LatticeMeasure, StepLaw};
use crate::scalar::Mass;

/// Largest support window `evolve_exact` will allocate by default (2²⁷ sites,
/// i.e. n = 26 for a = 2 and steps in {−1, 0, 1}).
pub const DEFAULT_EXACT_SITES: u64 = 1 << 27;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkParams {
    a: u64,
    step: StepLaw,
}

impl WalkParams {
    pub fn new(a: u64, step: StepLaw) -> Result<Self> {
        if a < 2 {
            return Err(Error::BadMultiplier(a));
        }
        Ok(Self { a, step })
    }

    /// `a = 2`, steps uniform on {−1, 0, 1}.
    pub fn model() -> Self {
        Self::new(2, StepLaw::model()).expect("valid")
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn step(&self) -> &StepLaw {
        &self.step
    }

    pub fn coprime_to(&self, q: u64) -> bool {
        gcd(q, self.a) == 1
    }

    /// `B = ⌈max|b| / (a − 1)⌉`, the bound on the carry of the digit DP.
    pub fn carry_bound(&self) -> i64 {
        let m = self.step.max_abs();
        m.div_ceil(self.a - 1) as i64
    }

    /// Number of sites in the window `[min_b·(aⁿ−1)/(a−1), max_b·(aⁿ−1)/(a−1)]`,
    /// or `None` on overflow.
    pub fn exact_window(&self, n: u32) -> Option<u64> {
        let geom = (self.a as u128).checked_pow(n)?.checked_sub(1)? / (self.a as u128 - 1);
        let width = (self.step.max_offset() - self.step.min_offset()) as u128;
        u64::try_from(width.checked_mul(geom)?.checked_add(1)?).ok()
    }
}

/// Exact law `μ_n` with the default size cap.
pub fn evolve_exact<T: Mass>(p: &WalkParams, n: u32) -> Result<LatticeMeasure<T>> {
    evolve_exact_capped(p, n, DEFAULT_EXACT_SITES)
}

/// Exact law `μ_n`, refusing if the support window exceeds `max_sites`.
pub fn evolve_exact_capped<T: Mass>(
    p: &WalkParams,
    n: u32,
    max_sites: u64,
) -> Result<LatticeMeasure<T>> {
    check_window(p, n, max_sites)?;
    let mut ev = ExactStepper::new(p);
    for _ in 0..n {
        ev.step();
    }
    LatticeMeasure::from_dense(ev.origin, ev.cur)
}

/// Calls `visit(k, origin, masses)` with the dense window of `μ_k` for
/// `k = 0..=n_max`, evolving once.
pub fn evolve_exact_each<T: Mass, F: FnMut(u32, i64, &[T])>(
    p: &WalkParams,
    n_max: u32,
    max_sites: u64,
    mut visit: F,
) -> Result<()> {
    check_window(p, n_max, max_sites)?;
    let mut ev = ExactStepper::new(p);
    visit(0, ev.origin, &ev.cur);
    for k in 1..=n_max {
        ev.step();
        visit(k, ev.origin, &ev.cur);
    }
    Ok(())
}

fn check_window(p: &WalkParams, n: u32, max_sites: u64) -> Result<()> {
    let window = p.exact_window(n).unwrap_or(u64::MAX);
    if window > max_sites {
        return Err(Error::CapExceeded {
            what: "support window of μ_n",
            got: window,
            cap: max_sites,
        });
    }
    Ok(())
}

struct ExactStepper<T> {
    a: usize,
    atoms: Vec<(usize, T)>,
    span: usize,
    bmin: i64,
    origin: i64,
    cur: Vec<T>,
}

impl<T: Mass> ExactStepper<T> {
    fn new(p: &WalkParams) -> Self {
        let bmin = p.step.min_offset();
        Self {
            a: p.a as usize,
            atoms: p
                .step
                .probabilities_as::<T>()
                .into_iter()
                .map(|(b, w)| ((b - bmin) as usize, w))
                .collect(),
            span: (p.step.max_offset() - bmin) as usize,
            bmin,
            origin: 0,
            cur: vec![T::one()],
        }
    }

    fn step(&mut self) {
        let len = (self.cur.len() - 1) * self.a + self.span + 1;
        let mut next = vec![T::zero(); len];
        for (i, m) in self.cur.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            let base = i * self.a;
            for (off, w) in &self.atoms {
                let j = base + off;
                next[j] = next[j].clone() + m.clone() * w.clone();
            }
        }
        self.origin = self.origin * self.a as i64 + self.bmin;
        self.cur = next;
    }
}

/// Incremental forward evolution of `X_n mod q`.
#[derive(Debug, Clone)]
pub struct ModChain<T> {
    q: usize,
    a_mod: usize,
    atoms: Vec<(usize, T)>,
    cur: Vec<T>,
    next: Vec<T>,
    steps: u64,
}

impl<T: Mass> ModChain<T> {
    pub fn new(p: &WalkParams, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::BadModulus { min: 1, got: 0 });
        }
        let qi = q as i64;
        let atoms = p
            .step
            .probabilities_as::<T>()
            .into_iter()
            .map(|(b, w)| (b.rem_euclid(qi) as usize, w))
            .collect();
        let mut cur = vec![T::zero(); q as usize];
        cur[0] = T::one();
        Ok(Self {
            q: q as usize,
            a_mod: (p.a % q) as usize,
            atoms,
            cur,
            next: vec![T::zero(); q as usize],
            steps: 0,
        })
    }

    /// Applies `next(a·x + b mod q) += μ(b)·cur(x)`.
    pub fn step(&mut self) {
        let q = self.q;
        for v in self.next.iter_mut() {
            *v = T::zero();
        }
        let mut base = 0usize;
        for x in 0..q {
            let m = &self.cur[x];
            if !m.is_zero() {
                for (b, w) in &self.atoms {
                    let mut j = base + b;
                    if j >= q {
                        j -= q;
                    }
                    self.next[j] = self.next[j].clone() + m.clone() * w.clone();
                }
            }
            base += self.a_mod;
            if base >= q {
                base -= q;
            }
        }
        std::mem::swap(&mut self.cur, &mut self.next);
        self.steps += 1;
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn masses(&self) -> &[T] {
        &self.cur
    }

    pub fn distribution(&self) -> CyclicDistribution<T> {
        CyclicDistribution::from_vec_unchecked(self.cur.clone())
    }

    pub fn into_distribution(self) -> CyclicDistribution<T> {
        CyclicDistribution::from_vec_unchecked(self.cur)
    }
}

impl ModChain<f64> {
    /// `½‖μ_n mod q − u_q‖` of the current state.
    pub fn half_tv(&self) -> f64 {
        let u = 1.0 / self.q as f64;
        0.5 * crate::scalar::ksum(self.cur.iter().map(|&m| (m - u).abs()))
    }

    /// `q·‖μ_n mod q − u_q‖₂²` of the current state.
    pub fn scaled_l2_dist_sq(&self) -> f64 {
        let u = 1.0 / self.q as f64;
        self.q as f64 * crate::scalar::ksum(self.cur.iter().map(|&m| (m - u) * (m - u)))
    }
}

/// Law of `X_n mod q`. Works for any `q ≥ 1`; `gcd(a, q) ≠ 1` is allowed
/// here (see [`WalkParams::coprime_to`]).
pub fn evolve_mod<T: Mass>(p: &WalkParams, q: u64, n: u32) -> Result<CyclicDistribution<T>> {
    let mut chain = ModChain::new(p, q)?;
    for _ in 0..n {
        chain.step();
    }
    Ok(chain.into_distribution())
}

fn base_digits(x: &BigInt, a: u64, n: u32) -> (Vec<i64>, BigInt) {
    let a_big = BigInt::from(a);
    let mut rest = x.clone();
    let mut digits = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let (q, r) = rest.div_mod_floor(&a_big);
        digits.push(r.to_i64().expect("digit fits"));
        rest = q;
    }
    (digits, rest)
}

/// `log μ_n({x})`, or `−∞` when `x` is unreachable.
///
/// Runs a dynamic program over the base-a digits `d_i` of `x` with a carry
/// `c`: at position `i` a step `b` is admissible when `c + b ≡ d_i (mod a)`,
/// and the carry becomes `(c + b − d_i)/a`. After `n` positions the carry must
/// equal `⌊x / aⁿ⌋`. Starting from 0 the carry never leaves `[−B, B]`.
/// The state vector is rescaled each step, so the result does not underflow.
pub fn log_point_mass(p: &WalkParams, n: u32, x: &BigInt) -> f64 {
    let bound = p.carry_bound();
    let (digits, top) = base_digits(x, p.a, n);
    if top.abs() > BigInt::from(bound) {
        return f64::NEG_INFINITY;
    }
    let top = top.to_i64().unwrap();
    let a = p.a as i64;
    let width = (2 * bound + 1) as usize;
    let atoms: Vec<(i64, f64)> = p.step.probabilities().collect();
    let mut cur = vec![0.0f64; width];
    let mut next = vec![0.0f64; width];
    cur[bound as usize] = 1.0;
    let mut log_scale = 0.0f64;
    for &d in &digits {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (ci, &m) in cur.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let c = ci as i64 - bound;
            for &(b, w) in &atoms {
                let s = c + b - d;
                if s.rem_euclid(a) != 0 {
                    continue;
                }
                let nc = s.div_euclid(a);
                debug_assert!(nc.abs() <= bound, "carry {nc} escaped [−{bound}, {bound}]");
                next[(nc + bound) as usize] += m * w;
            }
        }
        std::mem::swap(&mut cur, &mut next);
        let peak = cur.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return f64::NEG_INFINITY;
        }
        if peak < 1e-200 {
            cur.iter_mut().for_each(|v| *v /= peak);
            log_scale += peak.ln();
        }
    }
    let m = cur[(top + bound) as usize];
    if m == 0.0 {
        f64::NEG_INFINITY
    } else {
        m.ln() + log_scale
    }
}

/// `μ_n({x})` in double precision.
pub fn point_mass(p: &WalkParams, n: u32, x: i64) -> f64 {
    log_point_mass(p, n, &BigInt::from(x)).exp()
}

/// Draws offsets from a [`StepLaw`] by inverse CDF on the integer weights.
#[derive(Debug, Clone)]
pub struct StepSampler {
    offsets: Vec<i64>,
    cumulative: Vec<u64>,
    total: u64,
}

impl StepSampler {
    pub fn new(step: &StepLaw) -> Self {
        let mut acc = 0;
        let mut cumulative = Vec::with_capacity(step.len());
        for &(_, w) in step.atoms() {
            acc += w;
            cumulative.push(acc);
        }
        Self {
            offsets: step.offsets().collect(),
            cumulative,
            total: acc,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u = rng.gen_range(0..self.total);
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.offsets[i]
    }
}

/// The deterministic generator used everywhere: ChaCha8 keyed by `seed`,
/// with `stream` selecting an independent substream.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `b_0, …, b_{n−1}` and returns `Σ b_i·aⁱ`.
pub fn sample_endpoint_with<R: Rng + ?Sized>(
    p: &WalkParams,
    sampler: &StepSampler,
    n: u32,
    rng: &mut R,
) -> BigInt {
    let steps: Vec<i64> = (0..n).map(|_| sampler.draw(rng)).collect();
    let a = BigInt::from(p.a);
    let mut x = BigInt::zero();
    for &b in steps.iter().rev() {
        x = x * &a + b;
    }
    x
}

/// One endpoint `X_n` from a fresh generator seeded with `seed`.
pub fn sample_endpoint(p: &WalkParams, n: u32, seed: u64) -> BigInt {
    let sampler = StepSampler::new(&p.step);
    sample_endpoint_with(p, &sampler, n, &mut rng_for(seed, 0))
}
