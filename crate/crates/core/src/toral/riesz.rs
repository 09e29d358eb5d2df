//! Riesz products `ν_a = Π (1 + Re(a_n e^{2πi⟨h_{qn}, x⟩}))`: exact Fourier
//! coefficients, a truncated sampler and the weighted-limit check.

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lacunary::{psi_sequence, FrequencyPlan};
use super::{norm_f64, ToralAffineMap, ToralError};
use crate::birkhoff::{ComplexSum, KahanSum};
use crate::weights::WeightSequence;

/// Largest truncation depth accepted by the sampler.
pub const MAX_SAMPLER_DEPTH: usize = 16;
/// Rejection sampling is refused below this acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-6;
/// Accepted samples produced by one RNG stream.
const CHUNK: usize = 2048;
const DYADIC_BITS: u32 = 53;
const DYADIC_MASK: u64 = (1 << DYADIC_BITS) - 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszSpec {
    pub plan: FrequencyPlan,
    pub r: f64,
    /// Truncation depth `K`: the product runs over `n < K`.
    pub depth: usize,
    pub seed: u64,
    /// `a_n` for `n < K`.
    pub coefficients: Vec<Complex64>,
}

impl RieszSpec {
    /// `a_n = r` for every `n`.
    pub fn constant(plan: FrequencyPlan, r: f64, depth: usize, seed: u64) -> Result<Self, ToralError> {
        Self::check(r, depth)?;
        Ok(RieszSpec { plan, r, depth, seed, coefficients: vec![Complex64::new(r, 0.0); depth] })
    }

    /// `a_n = r e^{i arg w_{qn} + 2πi ψ_{qn}}`, matching the phase of the
    /// summand `w_{qn} f(T^{qn} x)` for `f = e^{2πi⟨h_0, x⟩}`.
    pub fn weighted(
        plan: FrequencyPlan,
        r: f64,
        depth: usize,
        seed: u64,
        w: &WeightSequence,
        map: &ToralAffineMap,
    ) -> Result<Self, ToralError> {
        Self::check(r, depth)?;
        if map.matrix != plan.matrix {
            return Err(ToralError::Invalid("map and plan use different matrices".into()));
        }
        let q = plan.q;
        if w.len() <= q * (depth - 1) {
            return Err(ToralError::Invalid(format!("weight needs more than {} terms", q * (depth - 1))));
        }
        let psi = psi_sequence(map, &plan.h0, q * (depth - 1) + 1)?;
        let coefficients = (0..depth)
            .map(|n| {
                let wn = w.values()[q * n];
                let arg = if wn == Complex64::zero() { 0.0 } else { wn.arg() };
                Complex64::from_polar(r, arg + TAU * rational_to_f64(&psi[q * n]))
            })
            .collect();
        Ok(RieszSpec { plan, r, depth, seed, coefficients })
    }

    fn check(r: f64, depth: usize) -> Result<(), ToralError> {
        if !(0.0..=1.0).contains(&r) {
            return Err(ToralError::Invalid(format!("r = {r} must lie in [0, 1]")));
        }
        if depth == 0 {
            return Err(ToralError::Invalid("depth K must be positive".into()));
        }
        Ok(())
    }

    /// `h_{qn}` for `n < K`.
    pub fn frequencies(&self) -> Result<Vec<Vec<BigInt>>, ToralError> {
        self.plan.lacunary_terms(self.depth)
    }
}

fn rational_to_f64(x: &num_rational::BigRational) -> f64 {
    x.numer().to_f64().unwrap_or(0.0) / x.denom().to_f64().unwrap_or(1.0)
}

/// `ν̂_a(k) = ∫ e^{−2πi⟨k, x⟩} dν_a`.
///
/// When `k = Σ ε_n h_{qn}` (`ε_n ∈ {−1, 0, 1}`, `n < K`) the value is
/// `Π a_n^{(ε_n)}` with `a^{(1)} = a/2`, `a^{(−1)} = conj(a)/2`; otherwise 0.
/// Representations are enumerated exhaustively (pruned by norms), so a
/// second representation is reported rather than silently ignored.
pub fn riesz_coefficient(spec: &RieszSpec, k: &[BigInt]) -> Result<Complex64, ToralError> {
    let terms = spec.frequencies()?;
    if k.len() != spec.plan.h0.len() {
        return Err(ToralError::Dimension { expected: spec.plan.h0.len(), got: k.len() });
    }
    // reach[n] bounds ‖Σ_{m<n} ε_m h_{qm}‖.
    let mut reach = vec![0.0; terms.len() + 1];
    for n in 0..terms.len() {
        reach[n + 1] = reach[n] + norm_f64(&terms[n]);
    }
    let mut found: Vec<Vec<i8>> = Vec::new();
    let mut eps = vec![0i8; terms.len()];
    search(&terms, &reach, k.to_vec(), terms.len(), &mut eps, &mut found);
    match found.len() {
        0 => Ok(Complex64::zero()),
        1 => Ok(found[0].iter().zip(&spec.coefficients).fold(Complex64::new(1.0, 0.0), |acc, (&e, a)| {
            acc * match e {
                1 => a / 2.0,
                -1 => a.conj() / 2.0,
                _ => Complex64::new(1.0, 0.0),
            }
        })),
        _ => Err(ToralError::Integrity(format!(
            "frequency has several representations ({:?} and {:?}); the plan is not dissociate",
            found[0], found[1]
        ))),
    }
}

fn search(terms: &[Vec<BigInt>], reach: &[f64], rem: Vec<BigInt>, n: usize, eps: &mut [i8], found: &mut Vec<Vec<i8>>) {
    if found.len() > 1 {
        return;
    }
    if n == 0 {
        if rem.iter().all(Zero::is_zero) {
            found.push(eps.to_vec());
        }
        return;
    }
    let slack = 1e-9 * reach[n] + 1e-9;
    if norm_f64(&rem) > reach[n] + slack {
        return;
    }
    let t = &terms[n - 1];
    for e in [0i8, 1, -1] {
        let next: Vec<BigInt> = match e {
            1 => rem.iter().zip(t).map(|(a, b)| a - b).collect(),
            -1 => rem.iter().zip(t).map(|(a, b)| a + b).collect(),
            _ => rem.clone(),
        };
        eps[n - 1] = e;
        search(terms, reach, next, n - 1, eps, found);
    }
    eps[n - 1] = 0;
}

/// `v mod 2^53`.
fn dyadic_residue(v: &BigInt) -> u64 {
    v.mod_floor(&(BigInt::one() << DYADIC_BITS)).to_u64().expect("below 2^53")
}

/// `⟨h, x⟩ mod 1` for `x = k / 2^53`, exact.
fn phase(h: &[u64], k: &[u64]) -> f64 {
    let dot = h.iter().zip(k).fold(0u64, |acc, (&a, &b)| (acc + ((a as u128 * b as u128) as u64 & DYADIC_MASK)) & DYADIC_MASK);
    dot as f64 / (1u64 << DYADIC_BITS) as f64
}

fn to_dyadic(x: f64) -> u64 {
    (x * (1u64 << DYADIC_BITS) as f64) as u64
}

/// Prepared partial product `P_K(x) = Π_{n<K} (1 + |a_n| cos(2π⟨h_{qn}, x⟩ + arg a_n))`.
struct PartialProduct {
    freqs: Vec<Vec<u64>>,
    moduli: Vec<f64>,
    args: Vec<f64>,
}

impl PartialProduct {
    fn new(spec: &RieszSpec) -> Result<Self, ToralError> {
        let freqs = spec.frequencies()?.iter().map(|h| h.iter().map(dyadic_residue).collect()).collect();
        Ok(PartialProduct {
            freqs,
            moduli: spec.coefficients.iter().map(|a| a.norm()).collect(),
            args: spec.coefficients.iter().map(|a| a.arg()).collect(),
        })
    }

    fn density(&self, k: &[u64]) -> f64 {
        self.freqs
            .iter()
            .zip(self.moduli.iter().zip(&self.args))
            .map(|(h, (m, a))| 1.0 + m * (TAU * phase(h, k) + a).cos())
            .product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszSamples {
    /// Points of `[0, 1)` on the dyadic grid `k / 2^53`.
    pub points: Vec<f64>,
    pub proposals: u64,
    pub acceptance_rate: f64,
    pub depth: usize,
    pub seed: u64,
}

/// Samples from the depth-`K` partial product on `T^1` by rejection
/// against the uniform law with envelope `(1 + r)^K`.
///
/// Chunk `c` of the output comes from the ChaCha8 stream `(seed, c)`, so the
/// result does not depend on the number of worker threads.
pub fn riesz_sample(spec: &RieszSpec, count: usize, seed: u64) -> Result<RieszSamples, ToralError> {
    if spec.plan.h0.len() != 1 {
        return Err(ToralError::Unsupported("exact sampling is implemented for d = 1 only".into()));
    }
    let rmax = spec.coefficients.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let envelope = (1.0 + rmax).powi(spec.depth as i32);
    let rate = 1.0 / envelope;
    if rate < MIN_ACCEPTANCE {
        return Err(ToralError::EnvelopeTooLoose { rate, min: MIN_ACCEPTANCE });
    }
    if spec.depth > MAX_SAMPLER_DEPTH {
        return Err(ToralError::Unsupported(format!("depth {} > {MAX_SAMPLER_DEPTH}", spec.depth)));
    }
    let product = PartialProduct::new(spec)?;
    let chunks: Vec<(Vec<f64>, u64)> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let want = CHUNK.min(count - c * CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut points = Vec::with_capacity(want);
            let mut proposals = 0u64;
            while points.len() < want {
                proposals += 1;
                let k = rng.random::<u64>() >> (64 - DYADIC_BITS);
                let u: f64 = rng.random();
                if u * envelope < product.density(&[k]) {
                    points.push(k as f64 / (1u64 << DYADIC_BITS) as f64);
                }
            }
            (points, proposals)
        })
        .collect();
    let proposals: u64 = chunks.iter().map(|c| c.1).sum();
    let points: Vec<f64> = chunks.into_iter().flat_map(|c| c.0).collect();
    let acceptance_rate = if proposals == 0 { 1.0 } else { points.len() as f64 / proposals as f64 };
    Ok(RieszSamples { points, proposals, acceptance_rate, depth: spec.depth, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEstimate {
    pub k: String,
    pub mean: Complex64,
    /// Standard error of the complex mean, `sqrt(E|Z − mean|^2 / n)`.
    pub stderr: f64,
}

/// Monte-Carlo estimate of `ν̂(k) = E e^{−2πikx}` on `T^1`.
pub fn empirical_coefficient(points: &[f64], k: &BigInt) -> CoefficientEstimate {
    let h = [dyadic_residue(k)];
    let values: Vec<Complex64> = points.iter().map(|&x| Complex64::from_polar(1.0, -TAU * phase(&h, &[to_dyadic(x)]))).collect();
    let (mean, stderr) = mean_and_stderr(&values, None);
    CoefficientEstimate { k: k.to_string(), mean, stderr }
}

/// Sample mean with its standard error; with `weights`, the self-normalized
/// importance estimate and its delta-method standard error.
fn mean_and_stderr(values: &[Complex64], weights: Option<&[f64]>) -> (Complex64, f64) {
    let n = values.len() as f64;
    match weights {
        None => {
            let mut s = ComplexSum::default();
            values.iter().for_each(|&v| s.add(v));
            let mean = s.value() / n;
            let mut var = KahanSum::default();
            values.iter().for_each(|v| var.add((v - mean).norm_sqr()));
            let stderr = if values.len() > 1 { (var.value() / (n - 1.0) / n).sqrt() } else { 0.0 };
            (mean, stderr)
        }
        Some(w) => {
            let mut s = ComplexSum::default();
            let mut total = KahanSum::default();
            for (v, &wi) in values.iter().zip(w) {
                s.add(v * wi);
                total.add(wi);
            }
            let mean = s.value() / total.value();
            let mut var = KahanSum::default();
            for (v, &wi) in values.iter().zip(w) {
                var.add(wi * wi * (v - mean).norm_sqr());
            }
            (mean, var.value().sqrt() / total.value())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingPath {
    /// Rejection sampling from the partial product (`d = 1`).
    Exact,
    /// Uniform samples reweighted by the partial product (`d >= 2`).
    Importance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    #[serde(rename = "K")]
    pub k: usize,
    pub path: SamplingPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueEstimate {
    pub residue: usize,
    pub estimate: Complex64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedLimitReport {
    /// `(r/2) (1/N) Σ_{n<N} |w_{qn}|`.
    pub target: f64,
    /// Sample mean of `A_N(x) = (1/N) Σ_{n<N} w_{qn} f(T^{qn} x)`.
    pub estimate: Complex64,
    pub stderr: f64,
    /// Sample mean of `|A_N(x)|`; biased upwards by the fluctuations of
    /// `A_N`, so it is reported but not compared with the target.
    pub mean_modulus: f64,
    pub n_samples: usize,
    pub n: usize,
    pub q: usize,
    pub truncation: Truncation,
    /// Residues `p != 0`, where the expected average is 0.
    pub cross_residues: Vec<ResidueEstimate>,
    pub caveat: Option<String>,
    /// `A_N(x)` for each sample (exported to CSV).
    #[serde(skip)]
    pub per_sample: Vec<Complex64>,
}

impl WeightedLimitReport {
    /// `|estimate − target| / stderr`.
    pub fn z_score(&self) -> f64 {
        let dev = (self.estimate - Complex64::new(self.target, 0.0)).norm();
        if self.stderr == 0.0 {
            if dev < 1e-12 { 0.0 } else { f64::INFINITY }
        } else {
            dev / self.stderr
        }
    }

    /// The main estimate within `sigmas` standard errors of the target and
    /// every cross residue within `sigmas` standard errors of 0.
    pub fn consistent(&self, sigmas: f64) -> bool {
        self.z_score() <= sigmas && self.cross_residues.iter().all(|c| c.estimate.norm() <= sigmas * c.stderr + 1e-12)
    }
}

/// Per-sample averages `(1/N) Σ_{n<N} w_{qn+p} e^{2πi(⟨h_{qn+p}, x⟩ + ψ_{qn+p})}`.
fn residue_averages(
    map: &ToralAffineMap,
    w: &WeightSequence,
    plan: &FrequencyPlan,
    n: usize,
    p: usize,
    points: &[Vec<u64>],
) -> Result<Vec<Complex64>, ToralError> {
    let q = plan.q;
    let freqs: Vec<Vec<u64>> = plan.residue_terms(p, n)?.iter().map(|h| h.iter().map(dyadic_residue).collect()).collect();
    let psi = psi_sequence(map, &plan.h0, q * (n - 1) + p + 1)?;
    let psi: Vec<f64> = (0..n).map(|j| rational_to_f64(&psi[q * j + p])).collect();
    let weights: Vec<Complex64> = (0..n).map(|j| w.values()[q * j + p]).collect();
    Ok(points
        .par_iter()
        .map(|k| {
            let mut s = ComplexSum::default();
            for j in 0..n {
                s.add(weights[j] * Complex64::from_polar(1.0, TAU * (phase(&freqs[j], k) + psi[j])));
            }
            s.value() / n as f64
        })
        .collect())
}

/// Monte-Carlo check of the weighted limit for `f = e^{2πi⟨h_0, x⟩}`
/// under `ν_a`, at finite `N`: the mean of `A_N` is compared with
/// `(r/2)(1/N) Σ |w_{qn}|`, and the residues `p` in `cross` with 0.
pub fn verify_weighted_limit(
    map: &ToralAffineMap,
    w: &WeightSequence,
    spec: &RieszSpec,
    n: usize,
    samples: usize,
    cross: &[usize],
) -> Result<WeightedLimitReport, ToralError> {
    let plan = &spec.plan;
    let q = plan.q;
    if map.matrix != plan.matrix {
        return Err(ToralError::Invalid("map and plan use different matrices".into()));
    }
    if n == 0 || samples < 2 {
        return Err(ToralError::Invalid("need N >= 1 and at least 2 samples".into()));
    }
    if let Some(&p) = cross.iter().find(|&&p| p == 0 || p >= q) {
        return Err(ToralError::Invalid(format!("cross residue {p} must lie in 1..{q}")));
    }
    let top = cross.iter().copied().max().unwrap_or(0);
    if w.len() <= q * (n - 1) + top {
        return Err(ToralError::Invalid(format!("weight needs more than {} terms", q * (n - 1) + top)));
    }
    let d = plan.h0.len();
    let (path, points, weights, caveat) = if d == 1 {
        if n > spec.depth {
            return Err(ToralError::TruncationExceeded { n, k: spec.depth });
        }
        let s = riesz_sample(spec, samples, spec.seed)?;
        let points: Vec<Vec<u64>> = s.points.iter().map(|&x| vec![to_dyadic(x)]).collect();
        (SamplingPath::Exact, points, None, None)
    } else {
        let product = PartialProduct::new(spec)?;
        let points: Vec<Vec<u64>> = (0..samples.div_ceil(CHUNK))
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(c as u64);
                let want = CHUNK.min(samples - c * CHUNK);
                (0..want).map(move |_| (0..d).map(|_| rng.random::<u64>() >> (64 - DYADIC_BITS)).collect::<Vec<u64>>()).collect::<Vec<_>>()
            })
            .collect();
        let weights: Vec<f64> = points.par_iter().map(|k| product.density(k)).collect();
        let caveat = format!(
            "d = {d}: uniform samples reweighted by the depth-{} partial product; frequencies beyond the truncation carry a bias",
            spec.depth
        );
        (SamplingPath::Importance, points, Some(weights), Some(caveat))
    };

    let main = residue_averages(map, w, plan, n, 0, &points)?;
    let (estimate, stderr) = mean_and_stderr(&main, weights.as_deref());
    let moduli: Vec<Complex64> = main.iter().map(|a| Complex64::new(a.norm(), 0.0)).collect();
    let mean_modulus = mean_and_stderr(&moduli, weights.as_deref()).0.re;
    let mut mass = KahanSum::default();
    (0..n).for_each(|j| mass.add(w.values()[q * j].norm()));
    let target = spec.r / 2.0 * mass.value() / n as f64;

    let cross_residues = cross
        .iter()
        .map(|&p| {
            let values = residue_averages(map, w, plan, n, p, &points)?;
            let (estimate, stderr) = mean_and_stderr(&values, weights.as_deref());
            Ok(ResidueEstimate { residue: p, estimate, stderr })
        })
        .collect::<Result<Vec<_>, ToralError>>()?;

    Ok(WeightedLimitReport {
        target,
        estimate,
        stderr,
        mean_modulus,
        n_samples: points.len(),
        n,
        q,
        truncation: Truncation { k: spec.depth, path },
        cross_residues,
        caveat,
        per_sample: main,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toral::IntMatrix;

    fn spec(m: i64, q: usize, r: f64, k: usize) -> RieszSpec {
        let plan = FrequencyPlan::new(IntMatrix::from_i64(&[vec![m]]).unwrap(), vec![BigInt::from(1)], q, k).unwrap();
        RieszSpec::constant(plan, r, k, 1).unwrap()
    }

    fn c(k: i64, s: &RieszSpec) -> Complex64 {
        riesz_coefficient(s, &[BigInt::from(k)]).unwrap()
    }

    #[test]
    fn fourier_oracle() {
        let s = spec(4, 1, 0.5, 12);
        assert_eq!(c(0, &s), Complex64::new(1.0, 0.0));
        assert_eq!(c(1, &s), Complex64::new(0.25, 0.0));
        assert_eq!(c(5, &s), Complex64::new(0.0625, 0.0));
        assert_eq!(c(-15, &s), Complex64::new(0.0625, 0.0));
        // 3 = 4 − 1 is a signed sum; 2 is not.
        assert_eq!(c(3, &s), Complex64::new(0.0625, 0.0));
        assert_eq!(c(2, &s), Complex64::zero());
        assert_eq!(c(1 << 24, &s), Complex64::zero());
    }

    #[test]
    fn ambiguous_frequency_is_an_integrity_error() {
        let s = spec(2, 1, 0.5, 4);
        assert!(matches!(riesz_coefficient(&s, &[BigInt::from(3)]), Err(ToralError::Integrity(_))));
    }

    #[test]
    fn zero_r_is_uniform() {
        let s = spec(4, 1, 0.0, 8);
        let out = riesz_sample(&s, 5000, 9).unwrap();
        assert_eq!((out.points.len() as u64, out.proposals), (5000, 5000));
        let e = empirical_coefficient(&out.points, &BigInt::from(1));
        assert!(e.mean.norm() < 4.0 * e.stderr);
    }

    #[test]
    fn sampler_is_deterministic_across_thread_counts() {
        let s = spec(4, 1, 0.5, 6);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| riesz_sample(&s, 5000, 3).unwrap());
        let b = riesz_sample(&s, 5000, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn envelope_guard() {
        assert!(riesz_sample(&spec(4, 1, 1.0, 16), 10, 1).is_ok());
        assert!(matches!(riesz_sample(&spec(4, 1, 0.5, 17), 10, 1), Err(ToralError::Unsupported(_))));
        assert!(matches!(riesz_sample(&spec(4, 1, 1.0, 20), 10, 1), Err(ToralError::EnvelopeTooLoose { .. })));
    }

    #[test]
    fn truncation_refused() {
        let s = spec(4, 1, 0.5, 6);
        let map = ToralAffineMap::linear(IntMatrix::from_i64(&[vec![4]]).unwrap()).unwrap();
        let w = crate::weights::generate(&crate::weights::WeightSpec::Constant { re: 1.0, im: 0.0 }, 20).unwrap();
        assert_eq!(
            verify_weighted_limit(&map, &w, &s, 7, 100, &[]).unwrap_err(),
            ToralError::TruncationExceeded { n: 7, k: 6 }
        );
    }

    #[test]
    fn weighted_coefficients_follow_weight_phase() {
        let plan = FrequencyPlan::new(IntMatrix::from_i64(&[vec![3]]).unwrap(), vec![BigInt::from(1)], 1, 4).unwrap();
        let map = ToralAffineMap::from_i64(&[vec![3]], &[(1, 2)]).unwrap();
        let w = crate::weights::generate(&crate::weights::WeightSpec::CustomTable { values: vec![[-1.0, 0.0]] }, 8).unwrap();
        let s = RieszSpec::weighted(plan, 0.5, 4, 0, &w, &map).unwrap();
        // arg(−1) = π and ψ = 0, 1/2, 0, 1/2.
        let expected = [-0.5, 0.5, -0.5, 0.5];
        for (a, e) in s.coefficients.iter().zip(expected) {
            assert!((a - Complex64::new(e, 0.0)).norm() < 1e-12);
        }
    }
}
