use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::poly::{is_irreducible, roots_with_multiplicity};
use super::{is_unimodular, IntMatrix, ToralError};

/// Tolerance for `|λ| = 1`.
pub const UNIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub multiplicity: usize,
}

impl Eigenvalue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub dim: usize,
    pub determinant: String,
    /// `det(zI − B)`, increasing degree.
    pub char_poly: Vec<String>,
    /// Distinct eigenvalues, by decreasing modulus.
    pub eigenvalues: Vec<Eigenvalue>,
    /// `Σ_{|λ|>1} log|λ|` with multiplicity, in nats.
    pub entropy: f64,
    pub spectral_radius: f64,
    pub leading_eigenvalue: Complex64,
    /// Unit eigenvector of `B` for the leading eigenvalue, largest entry real.
    pub leading_eigenvector: Vec<Complex64>,
    /// Spectral norm of the matrix of unit eigenvectors (one per distinct
    /// eigenvalue): a surrogate for the norm of the Jordan change of basis.
    pub transform_norm: f64,
    /// Largest distance between the polynomial roots and the eigenvalues
    /// of an independent Schur-form computation.
    pub cross_check_deviation: f64,
}

impl SpectralData {
    pub fn eigenvalues_with_multiplicity(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.eigenvalues.iter().flat_map(|e| std::iter::repeat_n(e.value(), e.multiplicity))
    }

    pub fn unit_circle_count(&self) -> usize {
        self.eigenvalues.iter().filter(|e| (e.modulus - 1.0).abs() <= UNIT_TOL).map(|e| e.multiplicity).sum()
    }

    pub fn expanding_count(&self) -> usize {
        self.eigenvalues.iter().filter(|e| e.modulus > 1.0 + UNIT_TOL).map(|e| e.multiplicity).sum()
    }
}

fn complex_matrix(b: &IntMatrix) -> DMatrix<Complex64> {
    let f = b.to_f64();
    DMatrix::from_fn(b.dim(), b.dim(), |i, j| Complex64::new(f[i][j], 0.0))
}

/// Inverse iteration for an eigenvector of `a` near `lambda`.
fn eigenvector(a: &DMatrix<Complex64>, lambda: Complex64) -> Vec<Complex64> {
    let d = a.nrows();
    let shift = lambda + Complex64::new(1e-10, 1e-10) * (1.0 + lambda.norm());
    let m = a - DMatrix::identity(d, d) * shift;
    let lu = m.lu();
    let mut v = DVector::from_fn(d, |i, _| Complex64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64));
    for _ in 0..4 {
        if let Some(next) = lu.solve(&v) {
            let n = next.norm();
            if n.is_finite() && n > 0.0 {
                v = next / Complex64::new(n, 0.0);
            }
        }
    }
    let k = (0..d).max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm())).unwrap_or(0);
    let phase = v[k] / v[k].norm();
    v.iter().map(|z| z / phase).collect()
}

/// Eigenvalues, entropy and leading eigenvector of an integer matrix.
///
/// Roots of the characteristic polynomial come from its square-free factors
/// (exact over `Q`) and are cross-checked against nalgebra's Schur form.
pub fn spectral_analysis(b: &IntMatrix) -> Result<SpectralData, ToralError> {
    let det = b.det();
    if det.is_zero() {
        return Err(ToralError::Singular);
    }
    let cp = b.char_poly();
    let mut eig: Vec<Eigenvalue> = roots_with_multiplicity(&cp)
        .into_iter()
        .map(|(z, m)| Eigenvalue { re: z.re, im: z.im, modulus: z.norm(), multiplicity: m })
        .collect();
    eig.sort_by(|a, b| b.modulus.total_cmp(&a.modulus).then(b.re.total_cmp(&a.re)).then(b.im.total_cmp(&a.im)));

    let entropy = eig.iter().filter(|e| e.modulus > 1.0 + UNIT_TOL).map(|e| e.multiplicity as f64 * e.modulus.ln()).sum();
    let leading = eig[0].value();

    let a = complex_matrix(b);
    let schur: Vec<Complex64> = {
        let f = b.to_f64();
        DMatrix::from_fn(b.dim(), b.dim(), |i, j| f[i][j]).complex_eigenvalues().iter().copied().collect()
    };
    let mut pool: Vec<Complex64> = eig.iter().flat_map(|e| std::iter::repeat_n(e.value(), e.multiplicity)).collect();
    let mut deviation = 0.0f64;
    for z in schur {
        let (k, dist) = pool
            .iter()
            .enumerate()
            .map(|(k, w)| (k, (w - z).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("same number of roots");
        deviation = deviation.max(dist);
        pool.swap_remove(k);
    }

    let vectors: Vec<Vec<Complex64>> = eig.iter().map(|e| eigenvector(&a, e.value())).collect();
    let t = DMatrix::from_fn(b.dim(), vectors.len(), |i, j| vectors[j][i]);
    let transform_norm = t.singular_values().iter().copied().fold(0.0, f64::max);

    Ok(SpectralData {
        dim: b.dim(),
        determinant: det.to_string(),
        char_poly: cp.iter().map(ToString::to_string).collect(),
        spectral_radius: eig[0].modulus,
        leading_eigenvalue: leading,
        leading_eigenvector: vectors[0].clone(),
        eigenvalues: eig,
        entropy,
        transform_norm,
        cross_check_deviation: deviation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixClass {
    /// No eigenvalue on the unit circle.
    Hyperbolic,
    /// Some eigenvalues on the unit circle, some outside it.
    PartiallyHyperbolic,
    /// No eigenvalue outside the unit disc: zero entropy.
    NoExpansion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: MatrixClass,
    pub entropy: f64,
    pub unit_circle_eigenvalues: usize,
    pub expanding_eigenvalues: usize,
    /// `None` when the test does not apply (no expansion, or a
    /// partially hyperbolic map that is not an automorphism).
    pub irreducible: Option<bool>,
    pub horseshoe_free: Option<bool>,
}

/// Hyperbolicity class and the horseshoe-free test for automorphisms:
/// irreducible characteristic polynomial with some but not all eigenvalues
/// on the unit circle.
pub fn classify(b: &IntMatrix) -> Result<Classification, ToralError> {
    let s = spectral_analysis(b)?;
    let unit = s.unit_circle_count();
    let expanding = s.expanding_count();
    let class = if expanding == 0 {
        MatrixClass::NoExpansion
    } else if unit == 0 {
        MatrixClass::Hyperbolic
    } else {
        MatrixClass::PartiallyHyperbolic
    };
    let (irreducible, horseshoe_free) = match class {
        MatrixClass::NoExpansion => (None, None),
        MatrixClass::Hyperbolic => (None, Some(false)),
        MatrixClass::PartiallyHyperbolic if is_unimodular(b) => {
            let cp: Vec<BigInt> = b.char_poly();
            let irr = is_irreducible(&cp)?;
            (Some(irr), Some(irr && unit < s.dim))
        }
        MatrixClass::PartiallyHyperbolic => (None, None),
    };
    Ok(Classification {
        class,
        entropy: s.entropy,
        unit_circle_eigenvalues: unit,
        expanding_eigenvalues: expanding,
        irreducible,
        horseshoe_free,
    })
}

/// The canonical basis vector `e_i` maximizing `|⟨v_{1,1}, e_i⟩|` (first
/// index on ties), among those above `10^-8`.
pub fn choose_h0(s: &SpectralData) -> Vec<BigInt> {
    let v = &s.leading_eigenvector;
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].norm() > v[best].norm() + 1e-12 {
            best = i;
        }
    }
    debug_assert!(v[best].norm() > 1e-8);
    (0..v.len()).map(|i| BigInt::from(u8::from(i == best))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_i64(rows).unwrap()
    }

    #[test]
    fn known_entropies() {
        assert!((spectral_analysis(&m(&[vec![2]])).unwrap().entropy - 2f64.ln()).abs() < 1e-12);
        let fib = spectral_analysis(&m(&[vec![1, 1], vec![1, 0]])).unwrap();
        assert!((fib.entropy - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
        assert!(fib.cross_check_deviation < 1e-12);
    }

    #[test]
    fn quartic_example() {
        let aa = IntMatrix::companion(&[1, -3, 3, -3]).unwrap();
        let s = spectral_analysis(&aa).unwrap();
        // z + 1/z = u with u^2 - 3u + 1 = 0; the largest root solves z + 1/z = (3 + √5)/2.
        let u = (3.0 + 5f64.sqrt()) / 2.0;
        let z = (u + (u * u - 4.0).sqrt()) / 2.0;
        assert!((s.entropy - z.ln()).abs() < 1e-10);
        assert_eq!(s.unit_circle_count(), 2);
        let c = classify(&aa).unwrap();
        assert_eq!(c.class, MatrixClass::PartiallyHyperbolic);
        assert_eq!(c.horseshoe_free, Some(true));
    }

    #[test]
    fn classes() {
        let cat = classify(&m(&[vec![2, 1], vec![1, 1]])).unwrap();
        assert_eq!((cat.class, cat.horseshoe_free), (MatrixClass::Hyperbolic, Some(false)));
        let id = classify(&IntMatrix::identity(3)).unwrap();
        assert_eq!((id.class, id.horseshoe_free, id.entropy), (MatrixClass::NoExpansion, None, 0.0));
        // Reducible partially hyperbolic: cat map ⊕ rotation by a quarter turn.
        let split = m(&[vec![2, 1, 0, 0], vec![1, 1, 0, 0], vec![0, 0, 0, -1], vec![0, 0, 1, 0]]);
        let c = classify(&split).unwrap();
        assert_eq!((c.class, c.irreducible, c.horseshoe_free), (MatrixClass::PartiallyHyperbolic, Some(false), Some(false)));
    }

    #[test]
    fn leading_vector_and_h0() {
        let fib = spectral_analysis(&m(&[vec![1, 1], vec![1, 0]])).unwrap();
        assert_eq!(choose_h0(&fib), vec![BigInt::from(1), BigInt::from(0)]);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let v = &fib.leading_eigenvector;
        assert!((v[0].re / v[1].re - phi).abs() < 1e-9);
        let diag = spectral_analysis(&m(&[vec![1, 0], vec![0, 2]])).unwrap();
        assert_eq!(choose_h0(&diag), vec![BigInt::from(0), BigInt::from(1)]);
        assert_eq!(choose_h0(&spectral_analysis(&m(&[vec![2]])).unwrap()), vec![BigInt::from(1)]);
    }

    #[test]
    fn singular_rejected() {
        assert_eq!(spectral_analysis(&m(&[vec![1, 2], vec![2, 4]])), Err(ToralError::Singular));
    }
}
