//! Bounded weight sequences `(w_n)` and their Cesàro statistics.

use std::f64::consts::TAU;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the sieve length for Möbius weights.
pub const MOEBIUS_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("n_max must be at least 1")]
    EmptyPrefix,
    #[error("requested {requested} terms but the cap for this weight is {cap}")]
    TooLong { requested: usize, cap: usize },
    #[error("invalid weight parameters: {0}")]
    InvalidSpec(String),
    #[error("grid value {n} exceeds the {len} cached terms")]
    GridOutOfRange { n: usize, len: usize },
    #[error("grid must be non-empty and strictly increasing")]
    BadGrid,
}

/// A weight generator. Every kind is deterministic given its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant { re: f64, #[serde(default)] im: f64 },
    /// `w_n = λ^{-n}` with `λ = e^{2πi·turns}`.
    Phase { turns: f64 },
    /// `w_n = e^{2πi β^n}` for rational `β = num/den > 1`, computed exactly
    /// mod 1 with big integers (quadratic cost, capped at 200 000 terms).
    LacunaryExp { num: u64, den: u64 },
    /// `w_n = e^{2πi P(n)}`, `P(n) = Σ c_k n^k`; each term is reduced mod 1
    /// before exponentiation.
    PolyPhase { coefficients: Vec<f64> },
    /// Independent fair `±1` signs from a seeded ChaCha8 stream.
    BernoulliPm1 { seed: u64 },
    /// `w_n = μ(n)` for `n >= 1` and `w_0 = 0`.
    Moebius,
    /// Periodic extension of a finite table.
    CustomTable { values: Vec<[f64; 2]> },
    /// `base` on the residue class `n ≡ residue (mod modulus)`, 0 elsewhere.
    ResidueMasked { base: Box<WeightSpec>, modulus: usize, residue: usize },
}

impl WeightSpec {
    fn validate(&self) -> Result<(), WeightError> {
        let bad = |m: &str| Err(WeightError::InvalidSpec(m.into()));
        match self {
            WeightSpec::LacunaryExp { num, den } if *den == 0 || num <= den => bad("lacunary_exp needs num > den > 0"),
            WeightSpec::PolyPhase { coefficients } if coefficients.len() > 4 => bad("poly_phase supports degree <= 3"),
            WeightSpec::CustomTable { values } if values.is_empty() => bad("custom_table is empty"),
            WeightSpec::ResidueMasked { modulus, residue, .. } if *modulus == 0 || residue >= modulus => {
                bad("residue_masked needs residue < modulus")
            }
            WeightSpec::ResidueMasked { base, .. } => base.validate(),
            _ => Ok(()),
        }
    }

    /// Upper bound on `|w_n|`.
    pub fn bound(&self) -> f64 {
        match self {
            WeightSpec::Constant { re, im } => Complex64::new(*re, *im).norm(),
            WeightSpec::CustomTable { values } => values.iter().map(|v| Complex64::new(v[0], v[1]).norm()).fold(0.0, f64::max),
            WeightSpec::ResidueMasked { base, .. } => base.bound(),
            _ => 1.0,
        }
    }

    fn cap(&self) -> usize {
        match self {
            WeightSpec::Moebius => MOEBIUS_CAP,
            WeightSpec::LacunaryExp { .. } => 200_000,
            WeightSpec::ResidueMasked { base, .. } => base.cap(),
            _ => usize::MAX,
        }
    }

    fn values(&self, n_max: usize) -> Vec<Complex64> {
        match self {
            WeightSpec::Constant { re, im } => vec![Complex64::new(*re, *im); n_max],
            WeightSpec::Phase { turns } => (0..n_max).map(|n| unit(-frac(turns * n as f64))).collect(),
            WeightSpec::LacunaryExp { num, den } => lacunary_phases(*num, *den, n_max).into_iter().map(unit).collect(),
            WeightSpec::PolyPhase { coefficients } => (0..n_max).map(|n| unit(poly_phase(coefficients, n as u64))).collect(),
            WeightSpec::BernoulliPm1 { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..n_max).map(|_| Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0)).collect()
            }
            WeightSpec::Moebius => moebius_sieve(n_max).into_iter().map(|m| Complex64::new(f64::from(m), 0.0)).collect(),
            WeightSpec::CustomTable { values } => {
                (0..n_max).map(|n| {
                    let v = values[n % values.len()];
                    Complex64::new(v[0], v[1])
                }).collect()
            }
            WeightSpec::ResidueMasked { base, modulus, residue } => {
                let mut v = base.values(n_max);
                for (n, x) in v.iter_mut().enumerate() {
                    if n % modulus != *residue {
                        *x = Complex64::zero();
                    }
                }
                v
            }
        }
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

fn unit(turns: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * turns)
}

/// Fractional parts of `(num/den)^n`, exact before the final division.
fn lacunary_phases(num: u64, den: u64, n_max: usize) -> Vec<f64> {
    let (mut p, mut q) = (BigUint::from(1u8), BigUint::from(1u8));
    let (num, den) = (BigUint::from(num), BigUint::from(den));
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let r = &p % &q;
        out.push(ratio_to_f64(&r, &q));
        p *= &num;
        q *= &den;
    }
    out
}

/// `r / q` for `0 <= r < q` rounded to an f64, using the top bits only.
fn ratio_to_f64(r: &BigUint, q: &BigUint) -> f64 {
    let shift = q.bits().saturating_sub(60);
    let (r, q) = (r >> shift, q >> shift);
    r.to_f64().unwrap_or(0.0) / q.to_f64().unwrap_or(1.0)
}

/// `P(n) mod 1`. `n^k` is kept exact in a u128 and split into 16-bit limbs
/// `m_i`, so each `c·2^{16i}` is reduced mod 1 exactly before multiplying.
fn poly_phase(coefficients: &[f64], n: u64) -> f64 {
    let mut total = 0.0;
    let mut power: u128 = 1;
    for &c in coefficients {
        let mut scale = c;
        let mut rest = power;
        while rest > 0 {
            let limb = (rest & 0xffff) as f64;
            total = frac(total + frac(frac(scale) * limb));
            rest >>= 16;
            scale = frac(scale) * 65536.0;
        }
        power = power.saturating_mul(u128::from(n));
    }
    total
}

/// `μ(0..n_max)` by a linear sieve, with `μ(0) = 0`.
pub fn moebius_sieve(n_max: usize) -> Vec<i8> {
    let mut mu = vec![0i8; n_max];
    if n_max > 1 {
        mu[1] = 1;
    }
    let mut is_composite = vec![false; n_max];
    let mut primes: Vec<usize> = Vec::new();
    for i in 2..n_max {
        if !is_composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let m = i * p;
            if m >= n_max {
                break;
            }
            is_composite[m] = true;
            if i % p == 0 {
                mu[m] = 0;
                break;
            }
            mu[m] = -mu[i];
        }
    }
    mu
}

/// A cached prefix `w_0, ..., w_{n_max-1}` of a weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    spec: WeightSpec,
    values: Vec<Complex64>,
}

/// Generates the first `n_max` terms of `spec`.
pub fn generate(spec: &WeightSpec, n_max: usize) -> Result<WeightSequence, WeightError> {
    if n_max == 0 {
        return Err(WeightError::EmptyPrefix);
    }
    spec.validate()?;
    if n_max > spec.cap() {
        return Err(WeightError::TooLong { requested: n_max, cap: spec.cap() });
    }
    Ok(WeightSequence { spec: spec.clone(), values: spec.values(n_max) })
}

impl WeightSequence {
    /// Wraps explicit values as a custom table of exactly that length.
    pub fn from_values(values: Vec<Complex64>) -> Result<Self, WeightError> {
        if values.is_empty() {
            return Err(WeightError::EmptyPrefix);
        }
        let spec = WeightSpec::CustomTable { values: values.iter().map(|v| [v.re, v.im]).collect() };
        Ok(WeightSequence { spec, values })
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<Complex64> {
        self.values.get(n).copied()
    }

    /// `max_n |w_n|` over the cached prefix.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|w| w.norm()).fold(0.0, f64::max)
    }

    /// Real weights used by the correlated-pair constructions: `Re w` when
    /// its Cesàro average of `|Re w_n|` is positive on the cached prefix,
    /// otherwise `Im w`.
    pub fn real_part_policy(&self) -> Vec<f64> {
        let re: Vec<f64> = self.values.iter().map(|w| w.re).collect();
        if re.iter().any(|x| *x != 0.0) {
            re
        } else {
            self.values.iter().map(|w| w.im).collect()
        }
    }

    /// Regenerates the prefix from the spec and compares bit for bit.
    pub fn matches_spec(&self) -> bool {
        self.spec.values(self.values.len()) == self.values
    }
}

fn check_grid(grid: &[usize], len: usize) -> Result<(), WeightError> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(WeightError::BadGrid);
    }
    let last = *grid.last().expect("non-empty");
    if last > len {
        return Err(WeightError::GridOutOfRange { n: last, len });
    }
    Ok(())
}

/// Powers of two up to `n_max`, with `n_max` itself appended when missing.
pub fn geometric_grid(n_max: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = std::iter::successors(Some(1usize), |&n| n.checked_mul(2)).take_while(|&n| n <= n_max).collect();
    if grid.last() != Some(&n_max) && n_max > 0 {
        grid.push(n_max);
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NontrivialityIndex {
    pub grid: Vec<usize>,
    /// `(1/N) Σ_{n<N} |w_n|` at each grid point.
    pub averages: Vec<f64>,
    /// Maximum of the averages at grid points `>= N` (tail surrogate for limsup).
    pub tail_maxima: Vec<f64>,
}

/// Cesàro averages of `|w_n|` on a grid.
pub fn nontriviality_index(w: &WeightSequence, grid: &[usize]) -> Result<NontrivialityIndex, WeightError> {
    check_grid(grid, w.len())?;
    let mut averages = Vec::with_capacity(grid.len());
    let mut sum = crate::birkhoff::KahanSum::default();
    let mut n = 0;
    for &target in grid {
        while n < target {
            sum.add(w.values[n].norm());
            n += 1;
        }
        averages.push(sum.value() / target as f64);
    }
    let mut tail_maxima = averages.clone();
    for i in (0..tail_maxima.len().saturating_sub(1)).rev() {
        tail_maxima[i] = tail_maxima[i].max(tail_maxima[i + 1]);
    }
    Ok(NontrivialityIndex { grid: grid.to_vec(), averages, tail_maxima })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueAverages {
    pub j0: usize,
    pub q: usize,
    pub grid: Vec<usize>,
    /// `averages[j][i]` is `(1/N) Σ_{n<N} |w_{qn+j}|` at `N = grid[i]`.
    pub averages: Vec<Vec<f64>>,
}

/// The residue class `j0` mod `q` whose final-grid Cesàro average of
/// `|w_{qn+j}|` is largest (smallest `j` on ties).
pub fn best_residue(w: &WeightSequence, q: usize, grid: &[usize]) -> Result<ResidueAverages, WeightError> {
    if q == 0 {
        return Err(WeightError::InvalidSpec("q must be positive".into()));
    }
    check_grid(grid, usize::MAX)?;
    let last = *grid.last().expect("checked");
    if q * (last - 1) + (q - 1) >= w.len() {
        return Err(WeightError::GridOutOfRange { n: q * last, len: w.len() });
    }
    let averages: Vec<Vec<f64>> = (0..q)
        .map(|j| {
            let mut sum = crate::birkhoff::KahanSum::default();
            let mut n = 0;
            grid.iter()
                .map(|&target| {
                    while n < target {
                        sum.add(w.values[q * n + j].norm());
                        n += 1;
                    }
                    sum.value() / target as f64
                })
                .collect()
        })
        .collect();
    let mut j0 = 0;
    for j in 1..q {
        if averages[j].last() > averages[j0].last() {
            j0 = j;
        }
    }
    Ok(ResidueAverages { j0, q, grid: grid.to_vec(), averages })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moebius_values() {
        let mu = moebius_sieve(31);
        assert_eq!([mu[1], mu[2], mu[3], mu[4], mu[6]], [1, -1, -1, 0, 1]);
        assert_eq!([mu[0], mu[12], mu[30], mu[29]], [0, 0, -1, -1]);
    }

    #[test]
    fn moebius_matches_factorisation() {
        let mu = moebius_sieve(2000);
        for n in 1..2000usize {
            let primes = crate::horseshoe::prime_factors(n);
            let squarefree = primes.iter().all(|p| n % (p * p) != 0);
            let expected = if squarefree { if primes.len().is_multiple_of(2) { 1 } else { -1 } } else { 0 };
            assert_eq!(mu[n], expected, "mu({n})");
        }
    }

    #[test]
    fn phase_one_is_constant() {
        let w = generate(&WeightSpec::Phase { turns: 0.0 }, 10).unwrap();
        assert!(w.values().iter().all(|&x| x == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn bernoulli_is_reproducible() {
        let spec = WeightSpec::BernoulliPm1 { seed: 7 };
        let w = generate(&spec, 1000).unwrap();
        assert!(w.values().iter().all(|x| x.im == 0.0 && x.re.abs() == 1.0));
        assert!(w.matches_spec());
        assert_eq!(generate(&spec, 1000).unwrap(), w);
        let idx = nontriviality_index(&w, &geometric_grid(1000)).unwrap();
        assert!(idx.averages.iter().all(|&a| a == 1.0));
    }

    #[test]
    fn trivial_and_alternating_weights() {
        let alt = generate(&WeightSpec::CustomTable { values: vec![[1.0, 0.0], [-1.0, 0.0]] }, 64).unwrap();
        assert!(nontriviality_index(&alt, &[1, 7, 64]).unwrap().averages.iter().all(|&a| a == 1.0));
        let zero = generate(&WeightSpec::Constant { re: 0.0, im: 0.0 }, 64).unwrap();
        assert!(nontriviality_index(&zero, &[1, 7, 64]).unwrap().averages.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn residue_selection() {
        let even = generate(&WeightSpec::CustomTable { values: vec![[1.0, 0.0], [0.0, 0.0]] }, 100).unwrap();
        let r = best_residue(&even, 2, &[10, 50]).unwrap();
        assert_eq!(r.j0, 0);
        assert_eq!(r.averages[0].last(), Some(&1.0));
        assert_eq!(best_residue(&even, 1, &[100]).unwrap().j0, 0);

        let mu = generate(&WeightSpec::Moebius, 400_000).unwrap();
        let r = best_residue(&mu, 4, &geometric_grid(100_000)).unwrap();
        assert!(r.j0 == 1 || r.j0 == 3);
        assert_eq!(r.averages[0].last(), Some(&0.0));
    }

    #[test]
    fn bounds_hold() {
        let specs = [
            WeightSpec::Phase { turns: 0.3 },
            WeightSpec::LacunaryExp { num: 3, den: 2 },
            WeightSpec::PolyPhase { coefficients: vec![0.1, 0.0, std::f64::consts::SQRT_2] },
            WeightSpec::BernoulliPm1 { seed: 1 },
            WeightSpec::Moebius,
            WeightSpec::Constant { re: 0.6, im: 0.8 },
        ];
        for spec in specs {
            let w = generate(&spec, 3000).unwrap();
            assert!(w.max_abs() <= spec.bound() + 1e-12, "{spec:?}");
        }
    }

    #[test]
    fn lacunary_phase_is_exact_for_small_powers() {
        // (3/2)^n mod 1: 0, 1/2, 1/4, 3/8, 1/16
        let phases = lacunary_phases(3, 2, 5);
        assert_eq!(phases, vec![0.0, 0.5, 0.25, 0.375, 0.0625]);
    }

    #[test]
    fn poly_phase_reduction() {
        // P(n) = 3n^2/8 is exact in binary; n^2 overflows the f64 mantissa.
        let c = [0.0, 0.0, 0.375];
        for n in [1u64, 4, 1_000_000, 1_000_000_007, 3_000_000_019] {
            let expected = ((3 * u128::from(n) * u128::from(n)) % 8) as f64 / 8.0;
            assert_eq!(poly_phase(&c, n), expected, "n = {n}");
        }
    }

    #[test]
    fn spec_json_shape() {
        let spec: WeightSpec = serde_json::from_str(r#"{"kind":"bernoulli_pm1","seed":7}"#).unwrap();
        assert_eq!(spec, WeightSpec::BernoulliPm1 { seed: 7 });
        let masked: WeightSpec =
            serde_json::from_str(r#"{"kind":"residue_masked","base":{"kind":"moebius"},"modulus":4,"residue":1}"#).unwrap();
        let w = generate(&masked, 12).unwrap();
        assert_eq!(w.values()[5].re, -1.0);
        assert_eq!(w.values()[6].re, 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(generate(&WeightSpec::Moebius, 0), Err(WeightError::EmptyPrefix));
        assert!(matches!(generate(&WeightSpec::Moebius, MOEBIUS_CAP + 1), Err(WeightError::TooLong { .. })));
        assert!(matches!(generate(&WeightSpec::LacunaryExp { num: 1, den: 2 }, 4), Err(WeightError::InvalidSpec(_))));
        let w = generate(&WeightSpec::Moebius, 10).unwrap();
        assert!(matches!(nontriviality_index(&w, &[5, 20]), Err(WeightError::GridOutOfRange { .. })));
        assert_eq!(nontriviality_index(&w, &[5, 5]), Err(WeightError::BadGrid));
    }
}
