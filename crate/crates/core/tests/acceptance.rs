//! Acceptance suite. Run with `cargo test -p bohr-core --test acceptance`;
//! each criterion prints one PASS/FAIL line (written straight to stdout, so
//! it shows without `--nocapture`).

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::time::{Duration, Instant};

use bohr_core::birkhoff::{fullshift_pair, lift_consistency, ue_control, weighted_average_series, Point, SystemHandle};
use bohr_core::horseshoe::{
    build_horseshoe_in_cylinder, disjointify, refine_cylinder, solve_residue_cover, CodedHorseshoe, DegeneratePolicy,
    DEFAULT_MAX_DEPTH,
};
use bohr_core::symbolic::{Sidedness, Word};
use bohr_core::toral::{
    classify, empirical_coefficient, lacunarity_and_split_check, riesz_coefficient, riesz_sample, spectral_analysis,
    verify_weighted_limit, FrequencyPlan, IntMatrix, MatrixClass, RieszSpec, ToralAffineMap,
};
use bohr_core::weights::{generate, geometric_grid, WeightSpec};
use num_bigint::BigInt;
use num_complex::Complex64;

fn w(s: &str) -> Word {
    s.parse().unwrap()
}

/// Independent re-verification of a generator set: for every offset
/// `1 <= j < τ` and every concatenation `abc`, neither the window at `j` nor
/// the one at `τ + j` is a generator; one-sided sets also need pairwise
/// distinct suffixes from every position.
fn brute_force_certificate(gens: &[Word], sidedness: Sidedness) -> Result<(), String> {
    let tau = gens[0].len();
    if gens.iter().any(|g| g.len() != tau) || gens[0] == gens[1] {
        return Err("generators must be distinct and of equal length".into());
    }
    let mut text = vec![0u8; 3 * tau];
    for a in gens {
        for b in gens {
            for c in gens {
                text[..tau].copy_from_slice(a.symbols());
                text[tau..2 * tau].copy_from_slice(b.symbols());
                text[2 * tau..].copy_from_slice(c.symbols());
                for j in 1..tau {
                    for start in [j, tau + j] {
                        if gens.iter().any(|g| g.symbols() == &text[start..start + tau]) {
                            return Err(format!("window at offset {start} is a generator"));
                        }
                    }
                }
            }
        }
    }
    if sidedness == Sidedness::OneSided {
        for n in 1..tau {
            if gens[0].symbols()[n..] == gens[1].symbols()[n..] {
                return Err(format!("suffixes from {n} coincide"));
            }
        }
    }
    Ok(())
}

fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn squarefree(n: usize) -> bool {
    n >= 1 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d * d))
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn criterion_1() -> Outcome {
    let table = [
        ("0000", "00001"),
        ("0001", "0001"),
        ("0010", "0010111"),
        ("0011", "0011"),
        ("0100", "0100111"),
        ("0101", "010111"),
        ("0110", "0110111"),
        ("0111", "0111"),
    ];
    for (c, expected) in table {
        let r = refine_cylinder(&w(c), Sidedness::OneSided).map_err(|e| e.to_string())?;
        if r.refined.to_string() != expected {
            return Err(format!("[{c}] -> [{}], expected [{expected}]", r.refined));
        }
        let relabelled = refine_cylinder(&w(c).flip_binary(), Sidedness::OneSided).map_err(|e| e.to_string())?;
        if relabelled.refined != w(expected).flip_binary() {
            return Err(format!("relabelled [{c}] gives [{}]", relabelled.refined));
        }
    }
    Ok("8 cylinders and their relabellings match".into())
}

fn criterion_2() -> Outcome {
    let mut count = 0;
    for len in 1..=4 {
        for bits in 0u32..1 << len {
            let c = Word::new((0..len).map(|i| ((bits >> (len - 1 - i)) & 1) as u8).collect());
            for sidedness in [Sidedness::OneSided, Sidedness::TwoSided] {
                let (h, cert) =
                    build_horseshoe_in_cylinder(&c, sidedness, DegeneratePolicy::PreRefine).map_err(|e| format!("[{c}]: {e}"))?;
                if !cert.is_full() || !h.generators().iter().all(|g| g.symbols().starts_with(c.symbols())) {
                    return Err(format!("[{c}]: certificate not full or generators outside the cylinder"));
                }
                brute_force_certificate(h.generators(), sidedness).map_err(|e| format!("[{c}]: {e}"))?;
            }
            count += 1;
        }
    }
    Ok(format!("{count} cylinders, one- and two-sided, re-verified"))
}

fn criterion_3() -> Outcome {
    let mut summary = Vec::new();
    for n in [2usize, 3, 4, 6] {
        let mut g1 = Word::constant(0, n - 1);
        g1.push(1);
        let input = CodedHorseshoe::new(vec![Word::constant(0, n), g1], Sidedness::OneSided).map_err(|e| e.to_string())?;
        let out = disjointify(&input, DEFAULT_MAX_DEPTH).map_err(|e| format!("N = {n}: {e}"))?;
        let tau = out.order();
        if tau % n != 0 || !out.certificate.is_full() {
            return Err(format!("N = {n}: τ = {tau} is not a full certificate of a multiple of N"));
        }
        brute_force_certificate(out.horseshoe.generators(), Sidedness::OneSided).map_err(|e| format!("N = {n}: {e}"))?;
        if n == 6 {
            let step1: Vec<usize> = out.certificate.trace.iter().filter(|t| t.stage == "step1").filter_map(|t| t.s).collect();
            let step2 = out.certificate.trace.iter().filter(|t| t.stage == "step2").count();
            // Step 1 displaces by N/p for p = 3 and p = 2.
            if step1 != [2, 3] || step2 == 0 {
                return Err(format!("N = 6 trace: step1 {step1:?}, {step2} step2 passes"));
            }
        }
        summary.push(format!("N={n}: τ={tau}"));
    }
    Ok(summary.join(", "))
}

fn criterion_4() -> Outcome {
    let mut entries = 0;
    for modulus in 2..=200usize {
        let sol = solve_residue_cover(modulus).map_err(|e| e.to_string())?;
        for n in 1..modulus {
            let e = sol.entry(n).ok_or(format!("N = {modulus}: no entry for n = {n}"))?;
            if !is_prime(e.prime) || modulus % e.prime != 0 || (n * e.x) % modulus != modulus / e.prime {
                return Err(format!("N = {modulus}, n = {n}: x = {}, p = {}", e.x, e.prime));
            }
            entries += 1;
        }
    }
    Ok(format!("{entries} entries checked"))
}

fn criterion_5() -> Outcome {
    let n = 100_000;
    let mu = generate(&WeightSpec::Moebius, n).map_err(|e| e.to_string())?;
    let pair = fullshift_pair(&mu).map_err(|e| e.to_string())?;
    let series = weighted_average_series(
        &SystemHandle::FullShift { symbols: 2 },
        &pair.observable,
        &Point::Symbolic(pair.point.clone()),
        &pair.weight,
        &[n],
    )
    .map_err(|e| e.to_string())?;
    let count = (1..n).filter(|&k| squarefree(k)).count();
    let sieve = count as f64 / n as f64;
    let avg = series.last();
    let (dev, density) = ((avg - Complex64::new(sieve, 0.0)).norm(), (sieve - 6.0 / (PI * PI)).abs());
    if dev > 1e-12 || density > 0.01 {
        return Err(format!("average {avg}, squarefree count {sieve}, |6/π² − count| = {density}"));
    }
    Ok(format!("A_N = {:.12}, |A_N − count| = {dev:.1e}, |A_N − 6/π²| = {density:.1e}", avg.re))
}

fn criterion_6() -> Outcome {
    let input = CodedHorseshoe::new(vec![w("00"), w("01")], Sidedness::OneSided).map_err(|e| e.to_string())?;
    let cert = disjointify(&input, DEFAULT_MAX_DEPTH).map_err(|e| e.to_string())?;
    let tau = cert.order();
    let (n, j0) = (10_000usize, 5);
    let base = WeightSpec::BernoulliPm1 { seed: 2024 };
    let spec = WeightSpec::ResidueMasked { base: Box::new(base), modulus: tau, residue: j0 };
    let wt = generate(&spec, tau * (n + 1)).map_err(|e| e.to_string())?;
    let report = lift_consistency(&cert, &wt, 2, &[n]).map_err(|e| e.to_string())?;
    let diff = report.differences[0];
    let bound = 2.0 * tau as f64 / n as f64;
    let ambient = report.ambient[0].re;
    if tau != 8 || report.j0 != j0 || diff > bound || ambient < 0.95 / tau as f64 {
        return Err(format!("τ = {tau}, j0 = {}, diff = {diff:.3e}, ambient = {ambient}", report.j0));
    }
    Ok(format!("τ = 8, j0 = {j0}, diff = {diff:.2e} <= {bound:.1e}, ambient A = {ambient:.6} >= 0.95/τ"))
}

fn criterion_7() -> Outcome {
    let b = IntMatrix::companion(&[1, -3, 3, -3]).map_err(|e| e.to_string())?;
    let u = (3.0 + 5f64.sqrt()) / 2.0;
    let oracle = ((u + (u * u - 4.0).sqrt()) / 2.0).ln();
    let s = spectral_analysis(&b).map_err(|e| e.to_string())?;
    let c = classify(&b).map_err(|e| e.to_string())?;
    let dev = (s.entropy - oracle).abs();
    if dev > 1e-6 || c.class != MatrixClass::PartiallyHyperbolic || c.horseshoe_free != Some(true) {
        return Err(format!("entropy {} (oracle {oracle}), class {:?}, horseshoe_free {:?}", s.entropy, c.class, c.horseshoe_free));
    }
    Ok(format!("entropy {:.9} vs closed form {oracle:.9}, partially hyperbolic, horseshoe-free", s.entropy))
}

fn criterion_8() -> Outcome {
    let check = |m: i64| {
        let plan = FrequencyPlan::new(IntMatrix::from_i64(&[vec![m]]).unwrap(), vec![BigInt::from(1)], 1, 8).unwrap();
        lacunarity_and_split_check(&plan).unwrap()
    };
    for m in [3, 4] {
        if !check(m).dissociate_ok {
            return Err(format!("({m}^n) reported a collision"));
        }
    }
    let two = check(2);
    let witness = two.collision.ok_or("(2^n) passed without a collision")?;
    let value = |eps: &[i8]| -> i64 { eps.iter().enumerate().map(|(j, &e)| e as i64 * (1 << j)).sum() };
    if two.dissociate_ok || witness.left == witness.right || value(&witness.left) != value(&witness.right) {
        return Err(format!("bad witness {witness:?}"));
    }
    if witness.sum != [BigInt::from(value(&witness.left))] {
        return Err("witness sum disagrees with its sign patterns".into());
    }
    Ok(format!("3^n, 4^n dissociate at D = 8; 2^n collides: {:?} ~ {:?}", witness.left, witness.right))
}

fn four_plan(q: usize) -> FrequencyPlan {
    FrequencyPlan::new(IntMatrix::from_i64(&[vec![4]]).unwrap(), vec![BigInt::from(1)], q, 8).unwrap()
}

fn criterion_9() -> Outcome {
    let spec = RieszSpec::constant(four_plan(1), 0.5, 12, 9).map_err(|e| e.to_string())?;
    let samples = riesz_sample(&spec, 100_000, 9).map_err(|e| e.to_string())?;
    // Closed forms: a product of r/2 per frequency in the signed
    // representation; 3 = 4 − 1 is representable, 2 is not.
    let expected = [(0, 1.0), (1, 0.25), (4, 0.25), (16, 0.25), (5, 0.0625), (3, 0.0625), (2, 0.0)];
    let mut worst: f64 = 0.0;
    for (k, value) in expected {
        let k_big = BigInt::from(k);
        let exact = riesz_coefficient(&spec, std::slice::from_ref(&k_big)).map_err(|e| e.to_string())?;
        if (exact - Complex64::new(value, 0.0)).norm() > 1e-15 {
            return Err(format!("coefficient at {k} is {exact}, closed form {value}"));
        }
        let est = empirical_coefficient(&samples.points, &k_big);
        let z = (est.mean - exact).norm() / est.stderr.max(1e-300);
        if (est.mean - exact).norm() > 4.0 * est.stderr + 1e-12 {
            return Err(format!("k = {k}: estimate {} vs {value} ± {}", est.mean, est.stderr));
        }
        worst = worst.max(if k == 0 { 0.0 } else { z });
    }
    Ok(format!("7 frequencies within 4 stderr (worst {worst:.2}); k = 3 checked against 0.0625, k = 2 against 0"))
}

fn criterion_10() -> Outcome {
    let map = ToralAffineMap::from_i64(&[vec![4]], &[]).map_err(|e| e.to_string())?;
    let ones = generate(&WeightSpec::Constant { re: 1.0, im: 0.0 }, 64).map_err(|e| e.to_string())?;
    let spec = RieszSpec::constant(four_plan(1), 0.5, 12, 10).map_err(|e| e.to_string())?;
    let main = verify_weighted_limit(&map, &ones, &spec, 12, 100_000, &[]).map_err(|e| e.to_string())?;
    if (main.target - 0.25).abs() > 1e-15 || main.z_score() > 3.0 {
        return Err(format!("estimate {} vs {} ± {}", main.estimate, main.target, main.stderr));
    }
    let split = RieszSpec::constant(four_plan(2), 0.5, 12, 11).map_err(|e| e.to_string())?;
    let cross = verify_weighted_limit(&map, &ones, &split, 12, 100_000, &[1]).map_err(|e| e.to_string())?;
    let c = &cross.cross_residues[0];
    if c.estimate.norm() > 3.0 * c.stderr || cross.z_score() > 3.0 {
        return Err(format!("cross residue {} ± {}, main z = {:.2}", c.estimate, c.stderr, cross.z_score()));
    }
    Ok(format!(
        "mean {:.5} vs 0.25 (z = {:.2}); residue 1 of q = 2: |{:.1e}| <= 3·{:.1e}",
        main.estimate.re,
        main.z_score(),
        c.estimate.norm(),
        c.stderr
    ))
}

fn criterion_11() -> Outcome {
    let alpha = (5f64.sqrt() - 1.0) / 2.0;
    let beta = 1.0 / 3.0;
    let grid = geometric_grid(1_000_000);
    let report = ue_control(alpha, beta, 1, &grid).map_err(|e| e.to_string())?;
    // |(1/N) Σ e^{2πinθ}| = |sin(πNθ)| / (N |sin(πθ)|).
    let theta = alpha - beta;
    for (i, &n) in grid.iter().enumerate() {
        let closed = (PI * n as f64 * theta).sin().abs() / (n as f64 * (PI * theta).sin().abs());
        if (report.moduli[i] - closed).abs() > 1e-9 {
            return Err(format!("N = {n}: |A_N| = {} vs closed form {closed}", report.moduli[i]));
        }
    }
    let gap = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, TAU * theta)).norm();
    if !report.bound_holds || report.max_ratio > 1.0 + 1e-9 || gap == 0.0 {
        return Err(format!("max ratio {}", report.max_ratio));
    }
    Ok(format!("{} grid points up to 10^6, max ratio {:.6}", grid.len(), report.max_ratio))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("rank-4 refinement table", criterion_1, Duration::from_millis(50)),
        ("horseshoes in all cylinders of rank 1-4", criterion_2, Duration::from_secs(1)),
        ("disjointify for N in {2,3,4,6}", criterion_3, Duration::from_secs(60)),
        ("residue cover for N <= 200", criterion_4, Duration::from_secs(5)),
        ("Moebius correlated-pair identity", criterion_5, Duration::from_secs(2)),
        ("lift through a first-return certificate", criterion_6, Duration::from_secs(5)),
        ("toral entropy and classification", criterion_7, Duration::from_secs(1)),
        ("dissociateness at horizon 8", criterion_8, Duration::from_secs(10)),
        ("Riesz coefficients vs Monte-Carlo", criterion_9, Duration::from_secs(60)),
        ("finite-N weighted limit and cross residue", criterion_10, Duration::from_secs(60)),
        ("uniquely ergodic negative control", criterion_11, Duration::from_secs(2)),
    ];
    let mut failures = Vec::new();
    let mut stdout = std::io::stdout().lock();
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > *budget => Err(format!("{detail}; over the {budget:?} budget")),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        writeln!(stdout, "acceptance {:>2} {tag} {name} [{elapsed:.2?}]: {detail}", i + 1).unwrap();
        if outcome.is_err() {
            failures.push(i + 1);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
