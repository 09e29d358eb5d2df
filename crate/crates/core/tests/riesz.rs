use std::f64::consts::TAU;

use bohr_core::toral::{
    empirical_coefficient, riesz_coefficient, riesz_sample, FrequencyPlan, IntMatrix, RieszSpec, ToralAffineMap,
};
use bohr_core::weights::{generate, WeightSpec};
use num_bigint::BigInt;
use num_complex::Complex64;

/// `∫ e^{−2πikx} Π_n (1 + Re(a_n e^{2πi h_n x})) dx` by an equispaced sum
/// with more nodes than twice the degree, which is exact for trigonometric
/// polynomials.
fn quadrature(freqs: &[i64], coeffs: &[Complex64], k: i64) -> Complex64 {
    let degree: i64 = freqs.iter().map(|h| h.abs()).sum::<i64>() + k.abs();
    let m = (2 * degree + 1).max(8) as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let x = j as f64 / m as f64;
        let density: f64 = freqs
            .iter()
            .zip(coeffs)
            .map(|(&h, a)| 1.0 + (a * Complex64::from_polar(1.0, TAU * h as f64 * x)).re)
            .product();
        acc += Complex64::from_polar(density, -TAU * k as f64 * x);
    }
    acc / m as f64
}

fn plan(m: i64, q: usize) -> FrequencyPlan {
    FrequencyPlan::new(IntMatrix::from_i64(&[vec![m]]).unwrap(), vec![BigInt::from(1)], q, 8).unwrap()
}

#[test]
fn coefficients_match_quadrature() {
    let map = ToralAffineMap::from_i64(&[vec![3]], &[(2, 7)]).unwrap();
    let w = generate(&WeightSpec::PolyPhase { coefficients: vec![0.1, 0.25, 0.0625] }, 20).unwrap();
    let spec = RieszSpec::weighted(plan(3, 1), 0.7, 5, 0, &w, &map).unwrap();
    let freqs: Vec<i64> = (0..5).map(|n| 3i64.pow(n)).collect();
    for k in -130..=130 {
        let exact = riesz_coefficient(&spec, &[BigInt::from(k)]).unwrap();
        let oracle = quadrature(&freqs, &spec.coefficients, k);
        assert!((exact - oracle).norm() < 1e-12, "k = {k}: {exact} vs {oracle}");
    }
}

#[test]
fn split_plan_uses_every_qth_frequency() {
    let spec = RieszSpec::constant(plan(2, 2), 0.5, 4, 0).unwrap();
    let freqs: Vec<i64> = (0..4).map(|n| 4i64.pow(n)).collect();
    for k in -90..=90 {
        let exact = riesz_coefficient(&spec, &[BigInt::from(k)]).unwrap();
        assert!((exact - quadrature(&freqs, &spec.coefficients, k)).norm() < 1e-12);
    }
}

#[test]
fn sampler_reproduces_low_order_coefficients() {
    let depth = 6;
    let spec = RieszSpec::constant(plan(4, 1), 0.8, depth, 0).unwrap();
    let samples = riesz_sample(&spec, 100_000, 21).unwrap();
    let freqs: Vec<i64> = (0..depth as u32).map(|n| 4i64.pow(n)).collect();

    let mut ks = vec![0i64, 2, 7];
    for i in 0..depth {
        ks.push(freqs[i]);
        for j in i + 1..depth {
            for (s, t) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                ks.push(s * freqs[i] + t * freqs[j]);
            }
        }
    }
    for k in ks {
        let exact = riesz_coefficient(&spec, &[BigInt::from(k)]).unwrap();
        let est = empirical_coefficient(&samples.points, &BigInt::from(k));
        assert!((est.mean - exact).norm() <= 4.5 * est.stderr + 1e-9, "k = {k}: {} vs {exact} ± {}", est.mean, est.stderr);
    }
    let expected_rate = 1.0 / 1.8f64.powi(depth as i32);
    assert!((samples.acceptance_rate - expected_rate).abs() < 0.1 * expected_rate);
}
