//! Integer and rational polynomials, coefficients in increasing degree.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ToralError;

/// Largest degree handled by the irreducibility test.
pub const MAX_IRREDUCIBILITY_DEGREE: usize = 6;
/// Coefficient bound beyond which factor enumeration is refused.
const MAX_FACTOR_BOUND: i64 = 2_000;

pub type RatPoly = Vec<BigRational>;

fn trim(mut p: RatPoly) -> RatPoly {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

pub fn to_rational(p: &[BigInt]) -> RatPoly {
    trim(p.iter().map(|c| BigRational::from_integer(c.clone())).collect())
}

fn degree(p: &RatPoly) -> usize {
    p.len() - 1
}

fn is_zero(p: &RatPoly) -> bool {
    p.len() == 1 && p[0].is_zero()
}

fn derivative(p: &RatPoly) -> RatPoly {
    if p.len() == 1 {
        return vec![BigRational::zero()];
    }
    trim(p.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(BigInt::from(i))).collect())
}

fn monic(p: &RatPoly) -> RatPoly {
    let lead = p.last().expect("non-empty").clone();
    p.iter().map(|c| c / &lead).collect()
}

/// Quotient and remainder over `Q`.
fn divrem(a: &RatPoly, b: &RatPoly) -> (RatPoly, RatPoly) {
    let mut r = a.clone();
    if degree(a) < degree(b) {
        return (vec![BigRational::zero()], r);
    }
    let db = degree(b);
    let lead = b[db].clone();
    let mut q = vec![BigRational::zero(); degree(a) - db + 1];
    for i in (0..q.len()).rev() {
        let c = &r[i + db] / &lead;
        for (j, bj) in b.iter().enumerate() {
            r[i + j] -= &c * bj;
        }
        q[i] = c;
    }
    r.truncate(db.max(1));
    (trim(q), trim(r))
}

fn gcd(a: &RatPoly, b: &RatPoly) -> RatPoly {
    let (mut a, mut b) = (a.clone(), b.clone());
    while !is_zero(&b) {
        let (_, r) = divrem(&a, &b);
        a = b;
        b = r;
    }
    monic(&a)
}

fn sub(a: &RatPoly, b: &RatPoly) -> RatPoly {
    let n = a.len().max(b.len());
    trim((0..n).map(|i| a.get(i).cloned().unwrap_or_default() - b.get(i).cloned().unwrap_or_default()).collect())
}

/// Yun's square-free decomposition: `f = Π a_i^i` with square-free, pairwise
/// coprime monic `a_i`. Returns the non-constant `(a_i, i)`.
pub fn squarefree_decomposition(f: &[BigInt]) -> Vec<(RatPoly, usize)> {
    let f = monic(&to_rational(f));
    let df = derivative(&f);
    let a0 = gcd(&f, &df);
    let mut b = divrem(&f, &a0).0;
    let c = divrem(&df, &a0).0;
    let mut d = sub(&c, &derivative(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while degree(&b) > 0 {
        let a = gcd(&b, &d);
        let next_b = divrem(&b, &a).0;
        let next_c = divrem(&d, &a).0;
        if degree(&a) > 0 {
            out.push((a, i));
        }
        d = sub(&next_c, &derivative(&next_b));
        b = next_b;
        i += 1;
    }
    out
}

fn eval(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::zero(), |acc, c| acc * z + c)
}

/// Simultaneous root finding (Aberth–Ehrlich) for a polynomial with simple
/// roots, followed by Newton polishing.
pub fn roots_simple(p: &RatPoly) -> Vec<Complex64> {
    let p = monic(p);
    let n = degree(&p);
    let coeffs: Vec<Complex64> = p.iter().map(|c| Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0)).collect();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![-coeffs[0]];
    }
    let deriv: Vec<Complex64> = coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
    let radius = 1.0 + coeffs[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(radius * 0.5, 0.4 + std::f64::consts::TAU * k as f64 / n as f64)).collect();
    for _ in 0..1000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let ratio = eval(&coeffs, z[i]) / eval(&deriv, z[i]);
            let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-16 {
            break;
        }
    }
    for root in &mut z {
        for _ in 0..3 {
            let step = eval(&coeffs, *root) / eval(&deriv, *root);
            if step.is_finite() {
                *root -= step;
            }
        }
        // Real factors have conjugate-symmetric roots; snap tiny imaginary parts.
        if root.im.abs() < 1e-14 * (1.0 + root.re.abs()) {
            root.im = 0.0;
        }
    }
    z
}

/// All complex roots with multiplicities, via the square-free decomposition.
pub fn roots_with_multiplicity(f: &[BigInt]) -> Vec<(Complex64, usize)> {
    squarefree_decomposition(f).iter().flat_map(|(a, m)| roots_simple(a).into_iter().map(move |z| (z, *m))).collect()
}

fn divisors(n: &BigInt) -> Result<Vec<BigInt>, ToralError> {
    let n = n.abs();
    let limit = n.to_u64().filter(|&v| v <= 1_000_000_000_000).ok_or_else(|| {
        ToralError::Unsupported("constant term too large to enumerate divisors".into())
    })?;
    let mut out = Vec::new();
    let mut i = 1u64;
    while i * i <= limit {
        if limit % i == 0 {
            out.push(BigInt::from(i));
            if i * i != limit {
                out.push(BigInt::from(limit / i));
            }
        }
        i += 1;
    }
    Ok(out.into_iter().flat_map(|d| [d.clone(), -d]).collect())
}

/// Exact division of integer polynomials by a monic divisor.
fn divides_monic(f: &[BigInt], g: &[BigInt]) -> bool {
    let dg = g.len() - 1;
    if f.len() < g.len() {
        return false;
    }
    let mut r = f.to_vec();
    for i in (0..=(f.len() - g.len())).rev() {
        let c = r[i + dg].clone();
        if c.is_zero() {
            continue;
        }
        for (j, gj) in g.iter().enumerate() {
            r[i + j] -= &c * gj;
        }
    }
    r[..dg].iter().all(Zero::is_zero)
}

/// Irreducibility over `Q` of a monic integer polynomial of degree at most 6.
///
/// Rational roots are integer divisors of the constant term; monic factors
/// of degree 2 and 3 are enumerated with constant term dividing `f(0)` and
/// other coefficients within the Mignotte bound `C(k, i) · ‖f‖_2`.
pub fn is_irreducible(f: &[BigInt]) -> Result<bool, ToralError> {
    let n = f.len() - 1;
    if !f[n].is_one() {
        return Err(ToralError::Invalid("irreducibility test expects a monic polynomial".into()));
    }
    if n > MAX_IRREDUCIBILITY_DEGREE {
        return Err(ToralError::Unsupported(format!("irreducibility for degree {n} > {MAX_IRREDUCIBILITY_DEGREE}")));
    }
    if n <= 1 {
        return Ok(true);
    }
    if f[0].is_zero() {
        return Ok(false);
    }
    let divs = divisors(&f[0])?;
    if divs.iter().any(|r| divides_monic(f, &[-r.clone(), BigInt::one()])) {
        return Ok(false);
    }
    let norm = f.iter().map(|c| c.to_f64().unwrap_or(f64::INFINITY).powi(2)).sum::<f64>().sqrt();
    for k in 2..=n / 2 {
        let bounds: Vec<i64> = (1..k)
            .map(|i| (binomial(k, i) as f64 * norm).floor())
            .map(|b| if b > MAX_FACTOR_BOUND as f64 { Err(()) } else { Ok(b as i64) })
            .collect::<Result<_, _>>()
            .map_err(|_| ToralError::Unsupported("Mignotte bound too large for enumeration".into()))?;
        for c0 in &divs {
            let mut middle: Vec<i64> = bounds.iter().map(|b| -b).collect();
            loop {
                let mut g = vec![c0.clone()];
                g.extend(middle.iter().map(|&v| BigInt::from(v)));
                g.push(BigInt::one());
                if divides_monic(f, &g) {
                    return Ok(false);
                }
                if !advance(&mut middle, &bounds) {
                    break;
                }
            }
        }
    }
    Ok(true)
}

/// Odometer over `[-b_i, b_i]`; returns false after the last state.
fn advance(v: &mut [i64], bounds: &[i64]) -> bool {
    for (x, &b) in v.iter_mut().zip(bounds) {
        if *x < b {
            *x += 1;
            return true;
        }
        *x = -b;
    }
    false
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> Vec<BigInt> {
        c.iter().map(|&v| BigInt::from(v)).collect()
    }

    #[test]
    fn odometer_visits_every_point_once() {
        let bounds = [2i64, 1];
        let mut v = vec![-2i64, -1];
        let mut seen = vec![v.clone()];
        while advance(&mut v, &bounds) {
            seen.push(v.clone());
        }
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 5 * 3);
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&p(&[1, -3, 3, -3, 1])).unwrap());
        assert!(is_irreducible(&p(&[-1, -1, 1])).unwrap());
        // (z^2 + 1)(z^2 + z + 1)
        assert!(!is_irreducible(&p(&[1, 1, 2, 1, 1])).unwrap());
        // (z - 1)^3
        assert!(!is_irreducible(&p(&[-1, 3, -3, 1])).unwrap());
        // (z^3 - 2)(z^3 + z + 1)
        assert!(!is_irreducible(&p(&[-2, -2, 0, -1, 1, 0, 1])).unwrap());
        assert!(matches!(is_irreducible(&p(&[1, 0, 0, 0, 0, 0, 0, 1])), Err(ToralError::Unsupported(_))));
    }

    #[test]
    fn squarefree_parts() {
        // (z - 1)^2 (z + 2)
        let parts = squarefree_decomposition(&p(&[2, -3, 0, 1]));
        assert_eq!(parts.len(), 2);
        assert_eq!((degree(&parts[0].0), parts[0].1), (1, 1));
        assert_eq!((degree(&parts[1].0), parts[1].1), (1, 2));
        let roots = roots_with_multiplicity(&p(&[2, -3, 0, 1]));
        let total: usize = roots.iter().map(|r| r.1).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn roots_of_known_polynomials() {
        let golden = roots_simple(&to_rational(&p(&[-1, -1, 1])));
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(golden.iter().any(|z| (z - phi).norm() < 1e-14));
        let cyclotomic = roots_simple(&to_rational(&p(&[1, 1, 1, 1, 1])));
        assert!(cyclotomic.iter().all(|z| (z.norm() - 1.0).abs() < 1e-13));
    }
}
