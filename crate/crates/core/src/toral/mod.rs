//! Integer matrices, affine maps of the torus `T^d = R^d / Z^d`, their
//! spectra, lacunary frequency orbits and Riesz products.

mod lacunary;
pub mod poly;
mod riesz;
mod spectral;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use lacunary::{
    choose_plan, frequency_orbit, frequency_orbit_by_squaring, lacunarity_and_split_check, psi_sequence,
    CollisionWitness, FrequencyPlan, LacunarityReport, MAX_HORIZON, Q_MAX,
};
pub use riesz::{
    empirical_coefficient, riesz_coefficient, riesz_sample, verify_weighted_limit, CoefficientEstimate,
    ResidueEstimate, RieszSamples, RieszSpec, SamplingPath, Truncation, WeightedLimitReport, MAX_SAMPLER_DEPTH,
    MIN_ACCEPTANCE,
};
pub use spectral::{choose_h0, classify, spectral_analysis, Classification, Eigenvalue, MatrixClass, SpectralData, UNIT_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToralError {
    #[error("matrix must be square and non-empty")]
    NotSquare,
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("integrity violation: {0}")]
    Integrity(String),
    #[error("acceptance rate {rate:e} is below {min:e}; reduce K or r")]
    EnvelopeTooLoose { rate: f64, min: f64 },
    #[error("N = {n} exceeds the truncation depth K = {k}")]
    TruncationExceeded { n: usize, k: usize },
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("cannot parse number {0:?}")]
    Parse(String),
}

/// A square matrix of arbitrary-precision integers.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: Vec<Vec<BigInt>>,
}

impl IntMatrix {
    pub fn new(rows: Vec<Vec<BigInt>>) -> Result<Self, ToralError> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(ToralError::NotSquare);
        }
        Ok(IntMatrix { rows })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self, ToralError> {
        Self::new(rows.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect())
    }

    pub fn identity(d: usize) -> Self {
        let rows = (0..d).map(|i| (0..d).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect();
        IntMatrix { rows }
    }

    /// Companion matrix of the monic polynomial `z^d + c_{d-1} z^{d-1} + ... + c_0`,
    /// given `c_0, ..., c_{d-1}`.
    pub fn companion(lower: &[i64]) -> Result<Self, ToralError> {
        let d = lower.len();
        if d == 0 {
            return Err(ToralError::NotSquare);
        }
        let mut rows = vec![vec![BigInt::zero(); d]; d];
        for i in 1..d {
            rows[i][i - 1] = BigInt::one();
        }
        for (i, &c) in lower.iter().enumerate() {
            rows[i][d - 1] = BigInt::from(-c);
        }
        Ok(IntMatrix { rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigInt {
        &self.rows[i][j]
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim();
        IntMatrix { rows: (0..d).map(|i| (0..d).map(|j| self.rows[j][i].clone()).collect()).collect() }
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        self.rows.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let d = self.dim();
        let rows = (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|k| &self.rows[i][k] * &other.rows[k][j]).sum()).collect())
            .collect();
        IntMatrix { rows }
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, mut n: u64) -> IntMatrix {
        let mut result = IntMatrix::identity(self.dim());
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        result
    }

    fn trace(&self) -> BigInt {
        (0..self.dim()).map(|i| self.rows[i][i].clone()).sum()
    }

    /// Determinant by fraction-free Bareiss elimination.
    pub fn det(&self) -> BigInt {
        let d = self.dim();
        let mut a = self.rows.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..d.saturating_sub(1) {
            if a[k][k].is_zero() {
                match (k + 1..d).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..d {
                for j in k + 1..d {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[d - 1][d - 1]
    }

    /// Characteristic polynomial `det(zI − B)`, coefficients in increasing
    /// degree (Faddeev–LeVerrier; every division is exact).
    pub fn char_poly(&self) -> Vec<BigInt> {
        let d = self.dim();
        let mut c = vec![BigInt::zero(); d + 1];
        c[d] = BigInt::one();
        let mut m = IntMatrix { rows: vec![vec![BigInt::zero(); d]; d] };
        for k in 1..=d {
            let mut next = self.mul(&m);
            for i in 0..d {
                next.rows[i][i] += &c[d - k + 1];
            }
            m = next;
            let t = self.mul(&m).trace();
            c[d - k] = -(t / BigInt::from(k));
        }
        c
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        use num_traits::ToPrimitive;
        self.rows.iter().map(|r| r.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()).collect()
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter().map(|r| r.iter().map(ToString::to_string).collect::<Vec<_>>())).finish()
    }
}

/// JSON integers, or strings for values beyond `i64`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntRepr {
    Small(i64),
    Big(String),
}

impl From<&BigInt> for IntRepr {
    fn from(v: &BigInt) -> Self {
        use num_traits::ToPrimitive;
        v.to_i64().map_or_else(|| IntRepr::Big(v.to_string()), IntRepr::Small)
    }
}

impl TryFrom<IntRepr> for BigInt {
    type Error = ToralError;
    fn try_from(r: IntRepr) -> Result<Self, ToralError> {
        match r {
            IntRepr::Small(v) => Ok(BigInt::from(v)),
            IntRepr::Big(s) => BigInt::from_str(s.trim()).map_err(|_| ToralError::Parse(s)),
        }
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<IntRepr>> = self.rows.iter().map(|r| r.iter().map(IntRepr::from).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<IntRepr>>::deserialize(d)?;
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(BigInt::try_from).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        IntMatrix::new(rows).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn parse_rational(s: &str) -> Result<BigRational, ToralError> {
    BigRational::from_str(s.trim()).map_err(|_| ToralError::Parse(s.into()))
}

mod rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(ToString::to_string).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        Vec::<String>::deserialize(d)?.iter().map(|s| parse_rational(s).map_err(serde::de::Error::custom)).collect()
    }
}

/// `x ↦ Bx + b mod Z^d` with a rational translation `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToralAffineMap {
    pub matrix: IntMatrix,
    #[serde(with = "rational_vec", default)]
    pub translation: Vec<BigRational>,
}

impl ToralAffineMap {
    pub fn new(matrix: IntMatrix, translation: Vec<BigRational>) -> Result<Self, ToralError> {
        let translation =
            if translation.is_empty() { vec![BigRational::zero(); matrix.dim()] } else { translation };
        if translation.len() != matrix.dim() {
            return Err(ToralError::Dimension { expected: matrix.dim(), got: translation.len() });
        }
        if matrix.det().is_zero() {
            return Err(ToralError::Singular);
        }
        Ok(ToralAffineMap { matrix, translation })
    }

    pub fn linear(matrix: IntMatrix) -> Result<Self, ToralError> {
        Self::new(matrix, Vec::new())
    }

    /// Convenience constructor; the translation is given as `(num, den)` pairs.
    pub fn from_i64(rows: &[Vec<i64>], translation: &[(i64, i64)]) -> Result<Self, ToralError> {
        if translation.iter().any(|&(_, den)| den == 0) {
            return Err(ToralError::Invalid("zero denominator".into()));
        }
        let b = translation.iter().map(|&(n, d)| BigRational::new(n.into(), d.into())).collect();
        Self::new(IntMatrix::from_i64(rows)?, b)
    }

    /// Checks the invariants after deserialization.
    pub fn validated(self) -> Result<Self, ToralError> {
        Self::new(self.matrix, self.translation)
    }

    /// `(B^{n−1} + ... + B + I) b mod 1`.
    pub fn translation_orbit_sum(&self, n: usize) -> Vec<BigRational> {
        let d = self.matrix.dim();
        let mut s = vec![BigRational::zero(); d];
        for _ in 0..n {
            s = (0..d)
                .map(|i| {
                    let v: BigRational = (0..d)
                        .map(|j| BigRational::from_integer(self.matrix.rows[i][j].clone()) * &s[j])
                        .sum::<BigRational>()
                        + &self.translation[i];
                    frac_rational(&v)
                })
                .collect();
        }
        s
    }
}

/// `x − floor(x)`.
pub(crate) fn frac_rational(x: &BigRational) -> BigRational {
    let (n, d) = (x.numer(), x.denom());
    BigRational::new(n.mod_floor(d), d.clone())
}

pub(crate) fn norm_f64(v: &[BigInt]) -> f64 {
    use num_traits::ToPrimitive;
    v.iter().map(|x| x.to_f64().unwrap_or(f64::INFINITY).powi(2)).sum::<f64>().sqrt()
}

pub(crate) fn is_unimodular(b: &IntMatrix) -> bool {
    b.det().abs().is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_and_char_poly() {
        let b = IntMatrix::from_i64(&[vec![2, 1], vec![1, 1]]).unwrap();
        assert_eq!(b.det(), BigInt::from(1));
        assert_eq!(b.char_poly(), vec![BigInt::from(1), BigInt::from(-3), BigInt::from(1)]);
        let aa = IntMatrix::companion(&[1, -3, 3, -3]).unwrap();
        let expected: Vec<BigInt> = [1, -3, 3, -3, 1].iter().map(|&v| BigInt::from(v)).collect();
        assert_eq!(aa.char_poly(), expected);
        assert_eq!(aa.det(), BigInt::from(1));
        let zero_pivot = IntMatrix::from_i64(&[vec![0, 1, 2], vec![1, 0, 3], vec![4, -3, 8]]).unwrap();
        assert_eq!(zero_pivot.det(), BigInt::from(-2));
    }

    #[test]
    fn char_poly_constant_term_is_signed_det() {
        let b = IntMatrix::from_i64(&[vec![3, 1, 4], vec![1, 5, 9], vec![2, 6, 5]]).unwrap();
        let c = b.char_poly();
        assert_eq!(-c[0].clone(), b.det());
    }

    #[test]
    fn json_roundtrip() {
        let map: ToralAffineMap =
            serde_json::from_str(r#"{"matrix": [[2, 1], [1, "1"]], "translation": ["1/3", "0"]}"#).unwrap();
        let map = map.validated().unwrap();
        assert_eq!(map.translation[0], BigRational::new(1.into(), 3.into()));
        let back: ToralAffineMap = serde_json::from_str(&serde_json::to_string(&map).unwrap()).unwrap();
        assert_eq!(back, map);
        assert!(matches!(ToralAffineMap::from_i64(&[vec![1, 1], vec![1, 1]], &[]), Err(ToralError::Singular)));
        assert!(serde_json::from_str::<IntMatrix>("[[1, 2]]").is_err());
    }

    #[test]
    fn translation_sum() {
        let map = ToralAffineMap::from_i64(&[vec![2]], &[(1, 3)]).unwrap();
        // S_1 b = 1/3, S_2 b = 2/3 + 1/3 = 1 ≡ 0, S_3 b = 1/3.
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(map.translation_orbit_sum(1), vec![third.clone()]);
        assert_eq!(map.translation_orbit_sum(2), vec![BigRational::zero()]);
        assert_eq!(map.translation_orbit_sum(3), vec![third]);
    }

    #[test]
    fn pow_matches_iterated_product() {
        let b = IntMatrix::from_i64(&[vec![1, 1], vec![1, 0]]).unwrap();
        let mut p = IntMatrix::identity(2);
        for _ in 0..13 {
            p = p.mul(&b);
        }
        assert_eq!(b.pow(13), p);
        assert_eq!(p.entry(0, 1), &BigInt::from(233));
    }
}
