//! Frequency orbits `h_n = B*^n h_0`, dissociateness and the residue split.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::spectral::{choose_h0, spectral_analysis};
use super::{frac_rational, norm_f64, IntMatrix, ToralAffineMap, ToralError};

/// Largest horizon for the `3^D` brute force.
pub const MAX_HORIZON: usize = 12;
/// Largest split `q` tried by [`choose_plan`].
pub const Q_MAX: usize = 16;

fn check_dim(b: &IntMatrix, v: &[BigInt]) -> Result<(), ToralError> {
    if v.len() != b.dim() {
        return Err(ToralError::Dimension { expected: b.dim(), got: v.len() });
    }
    Ok(())
}

/// `h_0, ..., h_{n_max−1}` with `h_{n+1} = B^T h_n`, exact.
pub fn frequency_orbit(b: &IntMatrix, h0: &[BigInt], n_max: usize) -> Result<Vec<Vec<BigInt>>, ToralError> {
    check_dim(b, h0)?;
    let bt = b.transpose();
    let mut out = Vec::with_capacity(n_max);
    let mut h = h0.to_vec();
    for _ in 0..n_max {
        let next = bt.mul_vec(&h);
        out.push(std::mem::replace(&mut h, next));
    }
    Ok(out)
}

/// The same orbit computed independently as `(B^T)^n h_0` by repeated squaring.
pub fn frequency_orbit_by_squaring(b: &IntMatrix, h0: &[BigInt], n_max: usize) -> Result<Vec<Vec<BigInt>>, ToralError> {
    check_dim(b, h0)?;
    let bt = b.transpose();
    Ok((0..n_max).map(|n| bt.pow(n as u64).mul_vec(h0)).collect())
}

/// `ψ_n = ⟨h_0, (B^{n−1} + ... + B + I) b⟩ mod 1` for `n < n_max` (`ψ_0 = 0`).
pub fn psi_sequence(map: &ToralAffineMap, h0: &[BigInt], n_max: usize) -> Result<Vec<BigRational>, ToralError> {
    check_dim(&map.matrix, h0)?;
    let d = map.matrix.dim();
    let mut s = vec![BigRational::zero(); d];
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let psi: BigRational = h0.iter().zip(&s).map(|(h, x)| BigRational::from_integer(h.clone()) * x).sum();
        out.push(frac_rational(&psi));
        s = (0..d)
            .map(|i| {
                let v: BigRational = (0..d)
                    .map(|j| BigRational::from_integer(map.matrix.entry(i, j).clone()) * &s[j])
                    .sum::<BigRational>()
                    + &map.translation[i];
                frac_rational(&v)
            })
            .collect();
    }
    Ok(out)
}

mod bigint_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(ToString::to_string).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse::<BigInt>().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// A lacunary frequency sequence split into `q` residue classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPlan {
    pub matrix: IntMatrix,
    #[serde(with = "bigint_vec")]
    pub h0: Vec<BigInt>,
    pub q: usize,
    /// Smallest ratio `‖h_{q(j+1)}‖ / ‖h_{qj}‖` within the horizon.
    pub theta: f64,
    /// Separation used by the split check; `None` when `q = 1`.
    pub delta: Option<f64>,
    /// Number of terms `D` of each residue class that were checked.
    pub horizon: usize,
}

impl FrequencyPlan {
    pub fn new(matrix: IntMatrix, h0: Vec<BigInt>, q: usize, horizon: usize) -> Result<Self, ToralError> {
        if q == 0 || horizon == 0 {
            return Err(ToralError::Invalid("q and the horizon must be positive".into()));
        }
        check_dim(&matrix, &h0)?;
        if h0.iter().all(Zero::is_zero) {
            return Err(ToralError::Invalid("h0 must be nonzero".into()));
        }
        let mut plan = FrequencyPlan { matrix, h0, q, theta: 0.0, delta: None, horizon };
        let terms = plan.lacunary_terms(horizon)?;
        plan.theta = terms.windows(2).map(|w| norm_f64(&w[1]) / norm_f64(&w[0])).fold(f64::INFINITY, f64::min);
        Ok(plan)
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    /// `h_{qn}` for `n < count`.
    pub fn lacunary_terms(&self, count: usize) -> Result<Vec<Vec<BigInt>>, ToralError> {
        self.residue_terms(0, count)
    }

    /// `h_{qn+k}` for `n < count`.
    pub fn residue_terms(&self, k: usize, count: usize) -> Result<Vec<Vec<BigInt>>, ToralError> {
        let orbit = frequency_orbit(&self.matrix, &self.h0, self.q * count + k)?;
        Ok(orbit.into_iter().skip(k).step_by(self.q).take(count).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionWitness {
    /// Two distinct sign patterns `ε ∈ {−1, 0, 1}^D` ...
    pub left: Vec<i8>,
    pub right: Vec<i8>,
    /// ... with the same sum `Σ ε_j h_{qj}`.
    #[serde(with = "bigint_vec")]
    pub sum: Vec<BigInt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LacunarityReport {
    pub q: usize,
    pub horizon: usize,
    pub theta: f64,
    pub dissociate_ok: bool,
    pub collision: Option<CollisionWitness>,
    /// Smallest distance from `H_k` (`1 <= k < q`) to the truncated `H_0^*`.
    pub min_gap_classes: Option<f64>,
    /// Smallest distance from a nonzero difference `a − b`, `a ∈ H_k`,
    /// `b ∈ H_l` (`1 <= k, l < q`), to the truncated `H_0^*`.
    pub min_gap_differences: Option<f64>,
    pub delta: Option<f64>,
    /// Every gap is at least `delta` (positive when no `delta` is set).
    pub split_ok: bool,
}

impl LacunarityReport {
    pub fn min_gap(&self) -> Option<f64> {
        match (self.min_gap_classes, self.min_gap_differences) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// All `3^D` signed sums, tagged with their pattern index in base 3
/// (digit `j` is `ε_j + 1`).
fn signed_sums(terms: &[Vec<BigInt>]) -> Vec<(Vec<BigInt>, usize)> {
    let d = terms.first().map_or(0, Vec::len);
    let mut sums = vec![(vec![BigInt::zero(); d], 0usize)];
    let mut weight = 1;
    for t in terms {
        let mut next = Vec::with_capacity(sums.len() * 3);
        for (s, idx) in &sums {
            next.push((s.iter().zip(t).map(|(a, b)| a - b).collect(), *idx));
            next.push((s.clone(), idx + weight));
            next.push((s.iter().zip(t).map(|(a, b)| a + b).collect(), idx + 2 * weight));
        }
        sums = next;
        weight *= 3;
    }
    sums
}

fn pattern(mut idx: usize, len: usize) -> Vec<i8> {
    (0..len)
        .map(|_| {
            let digit = (idx % 3) as i8 - 1;
            idx /= 3;
            digit
        })
        .collect()
}

fn dist2(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact Euclidean distance from `p` to the nearest point of `sorted`
/// (sorted by first coordinate), scanning outward from `p`'s position.
fn nearest(sorted: &[Vec<BigInt>], p: &[BigInt]) -> f64 {
    let start = sorted.partition_point(|s| s[0] < p[0]);
    let mut best: Option<BigInt> = None;
    let within = |s: &Vec<BigInt>, best: &Option<BigInt>| {
        best.as_ref().is_none_or(|b| {
            let gap = &s[0] - &p[0];
            &(&gap * &gap) <= b
        })
    };
    for s in sorted[start..].iter() {
        if !within(s, &best) {
            break;
        }
        let d = dist2(s, p);
        if best.as_ref().is_none_or(|b| &d < b) {
            best = Some(d);
        }
    }
    for s in sorted[..start].iter().rev() {
        if !within(s, &best) {
            break;
        }
        let d = dist2(s, p);
        if best.as_ref().is_none_or(|b| &d < b) {
            best = Some(d);
        }
    }
    best.map_or(f64::INFINITY, |b| b.to_f64().unwrap_or(f64::INFINITY).sqrt())
}

/// Brute-force dissociateness of `(h_{qj})_{j<D}` and the residue split.
pub fn lacunarity_and_split_check(plan: &FrequencyPlan) -> Result<LacunarityReport, ToralError> {
    let horizon = plan.horizon;
    if horizon > MAX_HORIZON {
        return Err(ToralError::Unsupported(format!("horizon {horizon} > {MAX_HORIZON}")));
    }
    let q = plan.q;
    let orbit = frequency_orbit(&plan.matrix, &plan.h0, q * horizon)?;
    let base: Vec<Vec<BigInt>> = orbit.iter().step_by(q).cloned().collect();

    let mut sums = signed_sums(&base);
    sums.sort();
    let collision = sums.windows(2).find(|w| w[0].0 == w[1].0).map(|w| {
        let (a, b) = (pattern(w[0].1, horizon), pattern(w[1].1, horizon));
        CollisionWitness { left: a, right: b, sum: w[0].0.clone() }
    });
    let points: Vec<Vec<BigInt>> = sums.into_iter().map(|(s, _)| s).collect();

    let others: Vec<&Vec<BigInt>> = orbit.iter().enumerate().filter(|(n, _)| n % q != 0).map(|(_, h)| h).collect();
    let min_gap_classes = others.iter().map(|h| nearest(&points, h)).reduce(f64::min);
    let mut min_gap_differences: Option<f64> = None;
    for a in &others {
        for b in &others {
            let diff: Vec<BigInt> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
            if diff.iter().all(Zero::is_zero) {
                continue;
            }
            let g = nearest(&points, &diff);
            min_gap_differences = Some(min_gap_differences.map_or(g, |m| m.min(g)));
        }
    }

    let mut report = LacunarityReport {
        q,
        horizon,
        theta: plan.theta,
        dissociate_ok: collision.is_none(),
        collision,
        min_gap_classes,
        min_gap_differences,
        delta: plan.delta,
        split_ok: false,
    };
    report.split_ok = match (report.min_gap(), plan.delta) {
        (None, _) => true,
        (Some(g), Some(delta)) => g >= delta,
        (Some(g), None) => g > 0.0,
    };
    Ok(report)
}

/// Searches `q = 1, ..., 16` for the smallest split whose finite-horizon
/// checks pass, with `h_0` from the leading eigenvector and `δ` half the
/// observed minimal gap.
pub fn choose_plan(b: &IntMatrix, horizon: usize) -> Result<(FrequencyPlan, LacunarityReport), ToralError> {
    let spectral = spectral_analysis(b)?;
    if spectral.spectral_radius <= 1.0 + super::UNIT_TOL {
        return Err(ToralError::Unsupported("no expanding direction".into()));
    }
    let h0 = choose_h0(&spectral);
    for q in 1..=Q_MAX {
        let plan = FrequencyPlan::new(b.clone(), h0.clone(), q, horizon)?;
        let report = lacunarity_and_split_check(&plan)?;
        if report.dissociate_ok && report.split_ok {
            let plan = match report.min_gap() {
                Some(g) => plan.with_delta(g / 2.0),
                None => plan,
            };
            let report = LacunarityReport { delta: plan.delta, ..report };
            return Ok((plan, report));
        }
    }
    Err(ToralError::Unsupported(format!("no split q <= {Q_MAX} passes at horizon {horizon}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(m: i64, q: usize, horizon: usize) -> FrequencyPlan {
        FrequencyPlan::new(IntMatrix::from_i64(&[vec![m]]).unwrap(), vec![BigInt::from(1)], q, horizon).unwrap()
    }

    #[test]
    fn orbits() {
        let two = IntMatrix::from_i64(&[vec![2]]).unwrap();
        let orbit = frequency_orbit(&two, &[BigInt::from(1)], 10).unwrap();
        assert!(orbit.iter().enumerate().all(|(n, h)| h[0] == BigInt::from(1u64 << n)));
        let fib = IntMatrix::from_i64(&[vec![1, 1], vec![1, 0]]).unwrap();
        let h0 = vec![BigInt::from(1), BigInt::from(0)];
        let orbit = frequency_orbit(&fib, &h0, 6).unwrap();
        assert_eq!(orbit[5], vec![BigInt::from(8), BigInt::from(5)]);
        assert_eq!(frequency_orbit_by_squaring(&fib, &h0, 40).unwrap(), frequency_orbit(&fib, &h0, 40).unwrap());
    }

    #[test]
    fn psi_vanishes_without_translation() {
        let map = ToralAffineMap::from_i64(&[vec![2, 1], vec![1, 1]], &[]).unwrap();
        let psi = psi_sequence(&map, &[BigInt::from(1), BigInt::from(0)], 20).unwrap();
        assert!(psi.iter().all(Zero::is_zero));
        let shifted = ToralAffineMap::from_i64(&[vec![3]], &[(1, 2)]).unwrap();
        // S_n b = (3^n − 1)/4 mod 1 for b = 1/2: 0, 1/2, 0, 1/2, ...
        let psi = psi_sequence(&shifted, &[BigInt::from(1)], 4).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(psi, vec![BigRational::zero(), half.clone(), BigRational::zero(), half]);
    }

    #[test]
    fn dissociate_powers() {
        assert!(lacunarity_and_split_check(&scalar(3, 1, 8)).unwrap().dissociate_ok);
        assert!(lacunarity_and_split_check(&scalar(4, 1, 8)).unwrap().dissociate_ok);
        let two = lacunarity_and_split_check(&scalar(2, 1, 3)).unwrap();
        assert!(!two.dissociate_ok);
        let witness = two.collision.unwrap();
        let value = |p: &[i8]| p.iter().enumerate().map(|(j, &e)| i64::from(e) << j).sum::<i64>();
        assert_ne!(witness.left, witness.right);
        assert_eq!(value(&witness.left), value(&witness.right));
        assert_eq!(witness.sum, vec![BigInt::from(value(&witness.left))]);
    }

    #[test]
    fn split_for_powers_of_four() {
        let r = lacunarity_and_split_check(&scalar(4, 2, 6).with_delta(1.0)).unwrap();
        assert!(r.split_ok && r.dissociate_ok);
        assert!(r.min_gap().unwrap() >= 1.0);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let plan = FrequencyPlan::new(
            IntMatrix::from_i64(&[vec![2, 1], vec![1, 1]]).unwrap(),
            vec![BigInt::from(1), BigInt::from(0)],
            1,
            5,
        )
        .unwrap();
        let mut points: Vec<Vec<BigInt>> = signed_sums(&plan.lacunary_terms(5).unwrap()).into_iter().map(|p| p.0).collect();
        points.sort();
        for x in -30i64..30 {
            for y in [-7i64, 0, 11] {
                let p = vec![BigInt::from(x), BigInt::from(y)];
                let brute = points.iter().map(|s| dist2(s, &p).to_f64().unwrap().sqrt()).fold(f64::INFINITY, f64::min);
                assert_eq!(nearest(&points, &p), brute);
            }
        }
    }

    #[test]
    fn plan_selection() {
        let (plan, report) = choose_plan(&IntMatrix::from_i64(&[vec![4]]).unwrap(), 6).unwrap();
        assert_eq!((plan.q, plan.delta), (1, None));
        assert!(report.dissociate_ok);
        let (plan, report) = choose_plan(&IntMatrix::from_i64(&[vec![2]]).unwrap(), 6).unwrap();
        assert!(plan.q >= 2 && report.split_ok && plan.delta.unwrap() > 0.0);
        assert!(matches!(
            lacunarity_and_split_check(&scalar(3, 1, 13)),
            Err(ToralError::Unsupported(_))
        ));
    }
}
