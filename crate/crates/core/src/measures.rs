//! Finitely supported measures on ℤ and on ℤ/qℤ.
//!
//! [`StepLaw`] holds the step distribution with exact integer weights.
//! [`LatticeMeasure`] is a measure on ℤ stored as a dense window over
//! `[origin, origin + len)`; [`CyclicDistribution`] is a dense probability
//! vector on ℤ/qℤ. Both are generic over the [`Mass`] scalar.
//!
//! Norms follow the unnormalized convention: `‖p − r‖ = Σ|p − r|`, so two
//! probability measures are at distance at most 2. [`CyclicDistribution::half_tv_distance`]
//! gives the ½-normalized total variation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::gcd;
use crate::error::{Error, Result};
use crate::scalar::{ksum, neg_xlogx, Mass};

/// Tolerance on the total mass of a measure on ℤ.
pub const LATTICE_TOL: f64 = 1e-12;
/// Tolerance on the total mass of a distribution on ℤ/qℤ.
pub const CYCLIC_TOL: f64 = 1e-10;

/// A finitely supported step distribution with integer weights.
///
/// The probability of offset `b` is `weight(b) / total`. Construction enforces
/// that the support is not contained in a coset of a proper subgroup of ℤ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepLaw {
    atoms: Vec<(i64, u64)>,
    total: u64,
}

impl StepLaw {
    pub fn new<I: IntoIterator<Item = (i64, u64)>>(atoms: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (b, w) in atoms {
            if w == 0 {
                return Err(Error::ZeroWeight(b));
            }
            if map.insert(b, w).is_some() {
                return Err(Error::DuplicateOffset(b));
            }
        }
        let atoms: Vec<(i64, u64)> = map.into_iter().collect();
        let Some(&(first, _)) = atoms.first() else {
            return Err(Error::EmptyStepLaw);
        };
        let g = atoms
            .iter()
            .fold(0u64, |g, &(b, _)| gcd(g, (b - first).unsigned_abs()));
        if g != 1 {
            return Err(Error::GcdViolation(g));
        }
        let total = atoms.iter().map(|&(_, w)| w).sum();
        Ok(Self { atoms, total })
    }

    /// Uniform law on the given offsets.
    pub fn uniform(offsets: &[i64]) -> Result<Self> {
        Self::new(offsets.iter().map(|&b| (b, 1)))
    }

    /// The model case: uniform on {−1, 0, 1}.
    pub fn model() -> Self {
        Self::uniform(&[-1, 0, 1]).expect("valid law")
    }

    /// Atoms `(offset, weight)` in increasing offset order.
    pub fn atoms(&self) -> &[(i64, u64)] {
        &self.atoms
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn offsets(&self) -> impl Iterator<Item = i64> + '_ {
        self.atoms.iter().map(|&(b, _)| b)
    }

    /// `(offset, probability)` pairs.
    pub fn probabilities(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.atoms
            .iter()
            .map(|&(b, w)| (b, w as f64 / self.total as f64))
    }

    pub fn probabilities_as<T: Mass>(&self) -> Vec<(i64, T)> {
        self.atoms
            .iter()
            .map(|&(b, w)| (b, T::from_ratio(w, self.total)))
            .collect()
    }

    pub fn prob(&self, b: i64) -> f64 {
        self.atoms
            .iter()
            .find(|&&(x, _)| x == b)
            .map_or(0.0, |&(_, w)| w as f64 / self.total as f64)
    }

    /// Smallest atom probability, the constant `c` of the variance lemma.
    pub fn min_prob(&self) -> f64 {
        let w = self.atoms.iter().map(|&(_, w)| w).min().unwrap_or(0);
        w as f64 / self.total as f64
    }

    pub fn min_offset(&self) -> i64 {
        self.atoms[0].0
    }

    pub fn max_offset(&self) -> i64 {
        self.atoms[self.atoms.len() - 1].0
    }

    /// `max_b |b|`.
    pub fn max_abs(&self) -> u64 {
        self.min_offset()
            .unsigned_abs()
            .max(self.max_offset().unsigned_abs())
    }

    /// `E|b|`.
    pub fn mean_abs(&self) -> f64 {
        self.probabilities().map(|(b, p)| p * b.unsigned_abs() as f64).sum()
    }

    /// Shannon entropy `H(μ)` in nats.
    pub fn entropy(&self) -> f64 {
        ksum(self.probabilities().map(|(_, p)| neg_xlogx(p)))
    }

    pub fn to_measure<T: Mass>(&self) -> LatticeMeasure<T> {
        LatticeMeasure::from_atoms(self.probabilities_as::<T>()).expect("step law is a probability")
    }
}

/// Renders as `offset:weight,offset:weight,...`, the grammar accepted by the CLI.
impl fmt::Display for StepLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (b, w)) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}:{w}")?;
        }
        Ok(())
    }
}

/// A finitely supported nonnegative measure on ℤ.
///
/// Masses are stored densely on `[origin, origin + masses.len())`; the window
/// is trimmed so that both ends carry positive mass.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMeasure<T> {
    origin: i64,
    masses: Vec<T>,
    total: T,
}

impl<T: Mass> LatticeMeasure<T> {
    pub fn empty() -> Self {
        Self {
            origin: 0,
            masses: Vec::new(),
            total: T::zero(),
        }
    }

    pub fn dirac(x: i64) -> Self {
        Self {
            origin: x,
            masses: vec![T::one()],
            total: T::one(),
        }
    }

    /// Builds a measure from a dense window starting at `origin`.
    pub fn from_dense(origin: i64, masses: Vec<T>) -> Result<Self> {
        if masses.iter().any(|m| m.is_negative()) {
            return Err(Error::InvalidArgument("negative mass".into()));
        }
        let total = T::sum_of(masses.iter().cloned());
        if total.to_f64() > 1.0 + LATTICE_TOL {
            return Err(Error::InvalidArgument(format!(
                "total mass {} exceeds 1",
                total.to_f64()
            )));
        }
        let mut out = Self {
            origin,
            masses,
            total,
        };
        out.trim();
        Ok(out)
    }

    /// Builds a measure from `(site, mass)` pairs; repeated sites accumulate.
    pub fn from_atoms<I: IntoIterator<Item = (i64, T)>>(atoms: I) -> Result<Self> {
        let mut map: BTreeMap<i64, T> = BTreeMap::new();
        for (x, m) in atoms {
            let e = map.entry(x).or_insert_with(T::zero);
            *e = e.clone() + m;
        }
        let (Some(&lo), Some(&hi)) = (map.keys().next(), map.keys().next_back()) else {
            return Ok(Self::empty());
        };
        let mut masses = vec![T::zero(); (hi - lo + 1) as usize];
        for (x, m) in map {
            masses[(x - lo) as usize] = m;
        }
        Self::from_dense(lo, masses)
    }

    fn trim(&mut self) {
        let Some(first) = self.masses.iter().position(|m| !m.is_zero()) else {
            self.masses.clear();
            self.origin = 0;
            return;
        };
        let last = self.masses.iter().rposition(|m| !m.is_zero()).unwrap();
        self.masses.truncate(last + 1);
        self.masses.drain(..first);
        self.origin += first as i64;
    }

    pub fn total(&self) -> &T {
        &self.total
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn is_probability(&self) -> bool {
        (self.total.to_f64() - 1.0).abs() <= LATTICE_TOL
    }

    /// Lowest site of the support window (meaningless when empty).
    pub fn min_site(&self) -> i64 {
        self.origin
    }

    pub fn max_site(&self) -> i64 {
        self.origin + self.masses.len() as i64 - 1
    }

    /// Dense masses over `[min_site, max_site]`, zeros included.
    pub fn dense(&self) -> &[T] {
        &self.masses
    }

    pub fn get(&self, x: i64) -> T {
        let i = x - self.origin;
        if i < 0 || i >= self.masses.len() as i64 {
            T::zero()
        } else {
            self.masses[i as usize].clone()
        }
    }

    /// `(site, mass)` for every site of positive mass.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &T)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(move |(i, m)| (self.origin + i as i64, m))
    }

    pub fn support_len(&self) -> usize {
        self.masses.iter().filter(|m| !m.is_zero()).count()
    }

    /// `(m1 * m2)(x) = Σ_y m1(y)·m2(x − y)`.
    pub fn convolve(&self, other: &Self) -> Self {
        if self.is_empty() || other.is_empty() {
            return Self::empty();
        }
        let mut out = vec![T::zero(); self.masses.len() + other.masses.len() - 1];
        for (i, a) in self.masses.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.masses.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        let total = self.total.clone() * other.total.clone();
        let mut m = Self {
            origin: self.origin + other.origin,
            masses: out,
            total,
        };
        m.trim();
        m
    }

    /// Push-forward under `x ↦ kx`.
    pub fn pushforward_scale(&self, k: i64) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroScale);
        }
        if self.is_empty() {
            return Ok(Self::empty());
        }
        let span = (self.masses.len() - 1) * k.unsigned_abs() as usize + 1;
        let mut out = vec![T::zero(); span];
        let origin = if k > 0 {
            self.origin * k
        } else {
            self.max_site() * k
        };
        for (x, m) in self.iter() {
            out[(x * k - origin) as usize] = m.clone();
        }
        Ok(Self {
            origin,
            masses: out,
            total: self.total.clone(),
        })
    }

    /// Push-forward under `x ↦ x + s`.
    pub fn translate(&self, s: i64) -> Self {
        Self {
            origin: self.origin + s,
            ..self.clone()
        }
    }

    /// `m(x + qℤ)` for each residue.
    pub fn reduce_mod(&self, q: u64) -> Result<CyclicDistribution<T>> {
        if q == 0 {
            return Err(Error::BadModulus { min: 1, got: q });
        }
        if !self.is_probability() {
            return Err(Error::NotProbability("lattice measure", self.total.to_f64()));
        }
        let mut out = vec![T::zero(); q as usize];
        let qi = q as i64;
        let mut r = self.origin.rem_euclid(qi) as usize;
        for m in &self.masses {
            if !m.is_zero() {
                out[r] = out[r].clone() + m.clone();
            }
            r += 1;
            if r == q as usize {
                r = 0;
            }
        }
        CyclicDistribution::new(out)
    }

    /// `Σ_x m(x)²`.
    pub fn l2_norm_sq(&self) -> T {
        T::sum_of(self.masses.iter().map(|m| m.clone() * m.clone()))
    }

    /// Shannon entropy in nats, `0·log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        ksum(self.masses.iter().map(|m| neg_xlogx(m.to_f64())))
    }

    /// `Σ_x m(x)·c` as a new measure.
    pub fn scaled(&self, c: &T) -> Self {
        let mut out = Self {
            origin: self.origin,
            masses: self.masses.iter().map(|m| m.clone() * c.clone()).collect(),
            total: self.total.clone() * c.clone(),
        };
        out.trim();
        out
    }

    /// Sitewise sum.
    pub fn add(&self, other: &Self) -> Self {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let lo = self.origin.min(other.origin);
        let hi = self.max_site().max(other.max_site());
        let masses: Vec<T> = (lo..=hi).map(|x| self.get(x) + other.get(x)).collect();
        Self {
            origin: lo,
            masses,
            total: self.total.clone() + other.total.clone(),
        }
    }

    /// `‖m1 − m2‖ = Σ_x |m1(x) − m2(x)|`.
    pub fn l1_distance(&self, other: &Self) -> T {
        if self.is_empty() && other.is_empty() {
            return T::zero();
        }
        let lo = self.origin.min(other.origin);
        let hi = self.max_site().max(other.max_site());
        T::sum_of((lo..=hi).map(|x| (self.get(x) - other.get(x)).abs()))
    }

    /// Converts the masses into another scalar type via `f64`.
    pub fn to_f64_measure(&self) -> LatticeMeasure<f64> {
        LatticeMeasure {
            origin: self.origin,
            masses: self.masses.iter().map(Mass::to_f64).collect(),
            total: self.total.to_f64(),
        }
    }
}

/// A probability vector on ℤ/qℤ.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicDistribution<T> {
    mass: Vec<T>,
}

impl<T: Mass> CyclicDistribution<T> {
    pub fn new(mass: Vec<T>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::BadModulus { min: 1, got: 0 });
        }
        if mass.iter().any(|m| m.is_negative()) {
            return Err(Error::InvalidArgument("negative mass".into()));
        }
        let total = T::sum_of(mass.iter().cloned());
        if (total.to_f64() - 1.0).abs() > CYCLIC_TOL {
            return Err(Error::NotProbability("cyclic distribution", total.to_f64()));
        }
        Ok(Self { mass })
    }

    /// No validation; for vectors produced by mass-preserving updates.
    pub(crate) fn from_vec_unchecked(mass: Vec<T>) -> Self {
        Self { mass }
    }

    pub fn uniform(q: u64) -> Self {
        Self {
            mass: vec![T::from_ratio(1, q); q as usize],
        }
    }

    pub fn dirac(q: u64, x: u64) -> Self {
        let mut mass = vec![T::zero(); q as usize];
        mass[(x % q) as usize] = T::one();
        Self { mass }
    }

    pub fn modulus(&self) -> u64 {
        self.mass.len() as u64
    }

    pub fn masses(&self) -> &[T] {
        &self.mass
    }

    pub fn into_masses(self) -> Vec<T> {
        self.mass
    }

    pub fn get(&self, x: u64) -> &T {
        &self.mass[(x % self.modulus()) as usize]
    }

    fn check_modulus(&self, other: &Self) -> Result<()> {
        if self.modulus() != other.modulus() {
            return Err(Error::ModulusMismatch(self.modulus(), other.modulus()));
        }
        Ok(())
    }

    /// Unnormalized distance `‖p − r‖ = Σ_x |p(x) − r(x)| ∈ [0, 2]`.
    pub fn tv_distance(&self, other: &Self) -> Result<T> {
        self.check_modulus(other)?;
        Ok(T::sum_of(
            self.mass
                .iter()
                .zip(&other.mass)
                .map(|(a, b)| (a.clone() - b.clone()).abs()),
        ))
    }

    /// `½‖p − r‖ ∈ [0, 1]`.
    pub fn half_tv_distance(&self, other: &Self) -> Result<T> {
        let two = T::one() + T::one();
        Ok(self.tv_distance(other)? / two)
    }

    /// `½‖p − u_q‖`.
    pub fn half_tv_to_uniform(&self) -> T {
        let u = T::from_ratio(1, self.modulus());
        let two = T::one() + T::one();
        T::sum_of(self.mass.iter().map(|m| (m.clone() - u.clone()).abs())) / two
    }

    pub fn l2_norm_sq(&self) -> T {
        T::sum_of(self.mass.iter().map(|m| m.clone() * m.clone()))
    }

    /// `‖p − u_q‖₂²`.
    pub fn l2_dist_sq_to_uniform(&self) -> T {
        let u = T::from_ratio(1, self.modulus());
        T::sum_of(self.mass.iter().map(|m| {
            let d = m.clone() - u.clone();
            d.clone() * d
        }))
    }

    pub fn entropy(&self) -> f64 {
        ksum(self.mass.iter().map(|m| neg_xlogx(m.to_f64())))
    }

    /// Convolution on ℤ/qℤ.
    pub fn cyclic_convolve(&self, other: &Self) -> Result<Self> {
        self.check_modulus(other)?;
        let q = self.mass.len();
        let mut out = vec![T::zero(); q];
        for (i, a) in self.mass.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.mass.iter().enumerate() {
                let k = (i + j) % q;
                out[k] = out[k].clone() + a.clone() * b.clone();
            }
        }
        Ok(Self { mass: out })
    }

    /// Number of residues with positive mass.
    pub fn support_len(&self) -> usize {
        self.mass.iter().filter(|m| !m.is_zero()).count()
    }

    pub fn to_f64_distribution(&self) -> CyclicDistribution<f64> {
        CyclicDistribution {
            mass: self.mass.iter().map(Mass::to_f64).collect(),
        }
    }
}

impl<T: Mass> CyclicDistribution<T> {
    pub fn is_normalized(&self) -> bool {
        let s = T::sum_of(self.mass.iter().cloned());
        (s - T::one()).to_f64().abs() <= CYCLIC_TOL
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    type Q = BigRational;

    fn q(n: u64, d: u64) -> Q {
        Q::from_ratio(n, d)
    }

    fn u3<T: Mass>() -> LatticeMeasure<T> {
        StepLaw::model().to_measure()
    }

    #[test]
    fn step_law_validation() {
        assert!(StepLaw::uniform(&[0, 2]).is_err());
        assert_eq!(StepLaw::uniform(&[0, 2]), Err(Error::GcdViolation(2)));
        assert_eq!(StepLaw::uniform(&[5]), Err(Error::GcdViolation(0)));
        assert_eq!(StepLaw::new([(0, 1), (0, 2)]), Err(Error::DuplicateOffset(0)));
        assert_eq!(StepLaw::new([(0, 0), (1, 2)]), Err(Error::ZeroWeight(0)));
        assert_eq!(StepLaw::new(Vec::new()), Err(Error::EmptyStepLaw));
        let s = StepLaw::new([(3, 2), (-1, 1), (4, 1)]).unwrap();
        assert_eq!(s.total(), 4);
        assert_eq!(s.min_prob(), 0.25);
        assert_eq!(s.min_offset(), -1);
        assert_eq!(s.to_string(), "-1:1,3:2,4:1");
    }

    #[test]
    fn convolution_examples() {
        let m = u3::<Q>();
        let d0 = LatticeMeasure::<Q>::dirac(0);
        assert_eq!(d0.convolve(&m), m);
        let mm = m.convolve(&m);
        assert_eq!(mm.min_site(), -2);
        assert_eq!(mm.dense(), &[q(1, 9), q(2, 9), q(3, 9), q(2, 9), q(1, 9)]);
        assert_eq!(mm.l2_norm_sq(), q(19, 81));
        let p = LatticeMeasure::<Q>::dirac(3).convolve(&LatticeMeasure::dirac(5));
        assert_eq!(p, LatticeMeasure::dirac(8));
        assert!(LatticeMeasure::<f64>::empty().convolve(&u3()).is_empty());
    }

    #[test]
    fn pushforward_examples() {
        let d = LatticeMeasure::<Q>::dirac(1).pushforward_scale(2).unwrap();
        assert_eq!(d, LatticeMeasure::dirac(2));
        let s = u3::<Q>().pushforward_scale(2).unwrap();
        let expect = LatticeMeasure::from_atoms([(-2, q(1, 3)), (0, q(1, 3)), (2, q(1, 3))]).unwrap();
        assert_eq!(s, expect);
        let neg = u3::<Q>().convolve(&u3()).pushforward_scale(-3).unwrap();
        assert_eq!(neg.get(-6), q(1, 9));
        assert_eq!(neg.get(6), q(1, 9));
        assert_eq!(neg.get(3), q(2, 9));
        assert_eq!(u3::<f64>().pushforward_scale(0), Err(Error::ZeroScale));
    }

    #[test]
    fn reduce_mod_examples() {
        let r = LatticeMeasure::<Q>::dirac(7).reduce_mod(5).unwrap();
        assert_eq!(r, CyclicDistribution::dirac(5, 2));
        assert_eq!(u3::<Q>().reduce_mod(3).unwrap(), CyclicDistribution::uniform(3));
        let half = LatticeMeasure::from_atoms([(0, q(1, 2))]).unwrap();
        assert!(matches!(half.reduce_mod(3), Err(Error::NotProbability(..))));
        // μ₂ for a = 2 against the 9 outcomes b₁ + 2b₂ mod 5.
        let mu2 = u3::<Q>().convolve(&u3::<Q>().pushforward_scale(2).unwrap());
        let mut counts = [0u64; 5];
        for b1 in -1i64..=1 {
            for b2 in -1i64..=1 {
                counts[(b1 + 2 * b2).rem_euclid(5) as usize] += 1;
            }
        }
        let expect = CyclicDistribution::new(counts.iter().map(|&c| q(c, 9)).collect()).unwrap();
        assert_eq!(mu2.reduce_mod(5).unwrap(), expect);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(LatticeMeasure::<f64>::dirac(0).entropy(), 0.0);
        assert!((u3::<f64>().entropy() - 3f64.ln()).abs() < 1e-15);
        let mu2 = u3::<f64>().convolve(&u3::<f64>().pushforward_scale(2).unwrap());
        let expect = 9f64.ln() - 4.0 / 9.0 * 2f64.ln();
        assert!((mu2.entropy() - expect).abs() < 1e-14);
    }

    #[test]
    fn cyclic_norms() {
        let u = CyclicDistribution::<Q>::uniform(7);
        assert_eq!(u.l2_norm_sq(), q(1, 7));
        assert_eq!(u.tv_distance(&u).unwrap(), q(0, 1));
        let d = CyclicDistribution::<Q>::dirac(7, 0);
        assert_eq!(d.tv_distance(&u).unwrap(), q(12, 7));
        assert_eq!(d.half_tv_to_uniform(), q(6, 7));
        let other = CyclicDistribution::<Q>::uniform(5);
        assert_eq!(d.tv_distance(&other), Err(Error::ModulusMismatch(7, 5)));
        assert!(CyclicDistribution::new(vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn half_tv_by_enumeration_q5_n3() {
        let mut counts = [0u64; 5];
        for b0 in -1i64..=1 {
            for b1 in -1i64..=1 {
                for b2 in -1i64..=1 {
                    counts[(b0 + 2 * b1 + 4 * b2).rem_euclid(5) as usize] += 1;
                }
            }
        }
        // counts = [5, 5, 6, 6, 5], so ½Σ|c/27 − 1/5| = 2/45.
        let p = CyclicDistribution::new(counts.iter().map(|&c| q(c, 27)).collect()).unwrap();
        assert_eq!(p.half_tv_to_uniform(), q(6, 135));
    }

    fn arb_measure() -> impl Strategy<Value = LatticeMeasure<f64>> {
        prop::collection::vec((-20i64..20, 1u32..100), 1..8).prop_map(|atoms| {
            let total: u32 = atoms.iter().map(|&(_, w)| w).sum();
            LatticeMeasure::from_atoms(atoms.into_iter().map(|(x, w)| (x, w as f64 / total as f64)))
                .unwrap()
        })
    }

    fn close(a: &LatticeMeasure<f64>, b: &LatticeMeasure<f64>, tol: f64) -> bool {
        let lo = a.min_site().min(b.min_site());
        let hi = a.max_site().max(b.max_site());
        (lo..=hi).all(|x| (a.get(x) - b.get(x)).abs() <= tol)
    }

    proptest! {
        #[test]
        fn convolution_commutative_associative(a in arb_measure(), b in arb_measure(), c in arb_measure()) {
            prop_assert!(close(&a.convolve(&b), &b.convolve(&a), 1e-12));
            prop_assert!(close(&a.convolve(&b).convolve(&c), &a.convolve(&b.convolve(&c)), 1e-12));
        }

        #[test]
        fn reduction_commutes_with_convolution(a in arb_measure(), b in arb_measure(), q in 1u64..30) {
            let lhs = a.convolve(&b).reduce_mod(q).unwrap();
            let rhs = a.reduce_mod(q).unwrap().cyclic_convolve(&b.reduce_mod(q).unwrap()).unwrap();
            for (x, y) in lhs.masses().iter().zip(rhs.masses()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn entropy_and_l2_invariant_under_relabeling(a in arb_measure(), k in prop::sample::select(vec![-5i64, -2, -1, 1, 2, 3, 7]), s in -50i64..50) {
            let b = a.pushforward_scale(k).unwrap().translate(s);
            prop_assert!((a.entropy() - b.entropy()).abs() <= 1e-12);
            prop_assert!((a.l2_norm_sq() - b.l2_norm_sq()).abs() <= 1e-12);
        }

        #[test]
        fn l1_bounded_by_sqrt_q_l2(ws in prop::collection::vec(0u32..50, 2..60)) {
            prop_assume!(ws.iter().any(|&w| w > 0));
            let total: u32 = ws.iter().sum();
            let p = CyclicDistribution::new(ws.iter().map(|&w| w as f64 / total as f64).collect()).unwrap();
            let q = p.modulus() as f64;
            let l1 = 2.0 * p.half_tv_to_uniform();
            prop_assert!(l1 <= q.sqrt() * p.l2_dist_sq_to_uniform().sqrt() + 1e-12);
        }
    }
}
