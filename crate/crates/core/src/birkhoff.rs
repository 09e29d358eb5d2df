//! Weighted Birkhoff averages `A_N = (1/N) Σ_{n<N} w_n f(T^n x)`.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::horseshoe::{CertifiedHorseshoe, CodedHorseshoe, HorseshoeError};
use crate::symbolic::{window, PointSpec, Sidedness, SymbolicError, Word};
use crate::toral::{psi_sequence, ToralAffineMap, ToralError};
use crate::weights::{best_residue, WeightError, WeightSequence};

/// Torus points are read on the dyadic grid `k / 2^53`.
const DYADIC_BITS: u32 = 53;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BirkhoffError {
    #[error("point does not belong to the system: {0}")]
    Mismatch(String),
    #[error("grid value {n} exceeds the {len} cached weights")]
    GridOutOfRange { n: usize, len: usize },
    #[error("grid must be non-empty, positive and strictly increasing")]
    BadGrid,
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("certificate does not cover every offset 1..{tau}")]
    IncompleteCertificate { tau: usize },
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Horseshoe(#[from] HorseshoeError),
    #[error(transparent)]
    Toral(#[from] ToralError),
}

/// Neumaier's compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexSum {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

#[derive(Debug, Clone)]
pub enum SystemHandle {
    FullShift { symbols: u8 },
    /// `(K, σ^τ)` for a horseshoe `K` of order τ, read in ambient coordinates.
    CodedSubshift { horseshoe: CodedHorseshoe },
    ToralAffine(ToralAffineMap),
    CircleRotation { alpha: f64 },
}

impl SystemHandle {
    fn describe(&self) -> String {
        match self {
            SystemHandle::FullShift { symbols } => format!("full_shift({symbols})"),
            SystemHandle::CodedSubshift { horseshoe } => {
                format!("coded_subshift({}, tau {})", horseshoe.generators().iter().map(Word::to_string).collect::<Vec<_>>().join("|"), horseshoe.order())
            }
            SystemHandle::ToralAffine(map) => format!("toral_affine(d = {})", map.matrix.dim()),
            SystemHandle::CircleRotation { alpha } => format!("circle_rotation({alpha})"),
        }
    }

    /// Ambient shift performed by one step of a symbolic system.
    fn step(&self) -> Option<usize> {
        match self {
            SystemHandle::FullShift { .. } => Some(1),
            SystemHandle::CodedSubshift { horseshoe } => Some(horseshoe.order()),
            _ => None,
        }
    }

    /// `T^n x`.
    pub fn image(&self, x: &Point, n: usize) -> Result<Point, BirkhoffError> {
        match (self, x) {
            (SystemHandle::FullShift { .. } | SystemHandle::CodedSubshift { .. }, Point::Symbolic(p)) => {
                let by = self.step().expect("symbolic") * n;
                Ok(Point::Symbolic(p.clone().shifted(by as i64)?))
            }
            (SystemHandle::CircleRotation { alpha }, Point::Torus(c)) if c.len() == 1 => {
                Ok(Point::Torus(vec![frac(c[0] + frac(frac(*alpha) * n as f64))]))
            }
            (SystemHandle::ToralAffine(map), Point::Torus(c)) if c.len() == map.matrix.dim() => {
                Ok(Point::Torus(toral_image(map, c, n)?))
            }
            _ => Err(BirkhoffError::Mismatch(self.describe())),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Point {
    Symbolic(PointSpec),
    /// Coordinates in `[0, 1)`.
    Torus(Vec<f64>),
}

/// Continuous observables; symbolic ones are locally constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// `1_[plus] − 1_[minus]`.
    CylinderIndicatorDiff { plus: Word, minus: Word },
    /// Value looked up from the first `len` symbols; words missing from the
    /// table take the value 0.
    LocallyConstant { len: usize, table: Vec<(Word, [f64; 2])> },
    /// `e^{2πi⟨h, x⟩}` on a torus.
    Character { h: Vec<i64> },
    /// `inner` on windows made of `depth` generators, 0 on every other window.
    CodedExtension { generators: Vec<Word>, depth: usize, inner: Box<Observable> },
}

impl Observable {
    pub fn sup_norm(&self) -> f64 {
        match self {
            Observable::CylinderIndicatorDiff { .. } | Observable::Character { .. } => 1.0,
            Observable::LocallyConstant { table, .. } => {
                table.iter().map(|(_, v)| Complex64::new(v[0], v[1]).norm()).fold(0.0, f64::max)
            }
            Observable::CodedExtension { inner, .. } => inner.sup_norm(),
        }
    }

    /// Number of leading symbols the value depends on.
    pub fn window_len(&self) -> Option<usize> {
        match self {
            Observable::CylinderIndicatorDiff { plus, minus } => Some(plus.len().max(minus.len())),
            Observable::LocallyConstant { len, .. } => Some(*len),
            Observable::Character { .. } => None,
            Observable::CodedExtension { generators, depth, .. } => Some(generators[0].len() * depth),
        }
    }

    fn validate(&self) -> Result<(), BirkhoffError> {
        let bad = |m: &str| Err(BirkhoffError::InvalidObservable(m.into()));
        match self {
            Observable::CylinderIndicatorDiff { plus, minus } if plus.is_empty() || minus.is_empty() || plus == minus => {
                bad("cylinders must be non-empty and distinct")
            }
            Observable::LocallyConstant { len, table } if *len == 0 || table.iter().any(|(w, _)| w.len() != *len) => {
                bad("table words must all have the declared length")
            }
            Observable::CodedExtension { generators, depth, inner } => {
                let tau = generators.first().map_or(0, Word::len);
                if tau == 0 || *depth == 0 || generators.iter().any(|g| g.len() != tau) {
                    return bad("coded extension needs equal-length generators and depth >= 1");
                }
                match inner.window_len() {
                    Some(len) if len <= tau * depth => inner.validate(),
                    _ => bad("inner observable must be locally constant within the extension window"),
                }
            }
            _ => Ok(()),
        }
    }
}

/// Symbolic observable with table lookups prepared once.
enum Compiled {
    Diff { plus: Word, minus: Word },
    Table { len: usize, table: HashMap<Word, Complex64> },
    Extension { generators: Vec<Word>, depth: usize, inner: Box<Compiled> },
}

impl Compiled {
    fn new(f: &Observable) -> Result<Self, BirkhoffError> {
        f.validate()?;
        Ok(match f {
            Observable::CylinderIndicatorDiff { plus, minus } => Compiled::Diff { plus: plus.clone(), minus: minus.clone() },
            Observable::LocallyConstant { len, table } => Compiled::Table {
                len: *len,
                table: table.iter().map(|(w, v)| (w.clone(), Complex64::new(v[0], v[1]))).collect(),
            },
            Observable::CodedExtension { generators, depth, inner } => Compiled::Extension {
                generators: generators.clone(),
                depth: *depth,
                inner: Box::new(Compiled::new(inner)?),
            },
            Observable::Character { .. } => {
                return Err(BirkhoffError::Mismatch("characters are defined on tori only".into()));
            }
        })
    }

    fn len(&self) -> usize {
        match self {
            Compiled::Diff { plus, minus } => plus.len().max(minus.len()),
            Compiled::Table { len, .. } => *len,
            Compiled::Extension { generators, depth, .. } => generators[0].len() * depth,
        }
    }

    /// Value on a point whose leading symbols are `w` (`w.len() >= self.len()`).
    fn eval(&self, w: &[u8]) -> Complex64 {
        match self {
            Compiled::Diff { plus, minus } => {
                let hit = |c: &Word| w.starts_with(c.symbols());
                Complex64::new(f64::from(u8::from(hit(plus))) - f64::from(u8::from(hit(minus))), 0.0)
            }
            Compiled::Table { len, table } => table.get(&Word::from(&w[..*len])).copied().unwrap_or_default(),
            Compiled::Extension { generators, depth, inner } => {
                let tau = generators[0].len();
                let compatible = w[..tau * depth].chunks(tau).all(|b| generators.iter().any(|g| g.symbols() == b));
                if compatible {
                    inner.eval(w)
                } else {
                    Complex64::zero()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub system: String,
    pub observable: String,
    pub point: String,
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageSeries {
    pub grid: Vec<usize>,
    pub averages: Vec<Complex64>,
    pub metadata: SeriesMetadata,
}

impl AverageSeries {
    pub fn last(&self) -> Complex64 {
        *self.averages.last().expect("grid is non-empty")
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.averages.iter().map(|a| a.norm()).collect()
    }
}

fn check_grid(grid: &[usize], len: usize) -> Result<usize, BirkhoffError> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BirkhoffError::BadGrid);
    }
    let last = *grid.last().expect("non-empty");
    if last > len {
        return Err(BirkhoffError::GridOutOfRange { n: last, len });
    }
    Ok(last)
}

fn describe_point(x: &Point) -> String {
    match x {
        Point::Symbolic(p) => {
            let head = (0..16).map_while(|i| p.symbol_at(i).ok()).collect::<Vec<_>>();
            format!("symbolic {}...", Word::new(head))
        }
        Point::Torus(c) => format!("torus {c:?}"),
    }
}

/// Partial weighted averages on `grid`, each term `w_n f(T^n x)` evaluated
/// exactly in order and accumulated with compensated summation.
pub fn weighted_average_series(
    sys: &SystemHandle,
    f: &Observable,
    x: &Point,
    w: &WeightSequence,
    grid: &[usize],
) -> Result<AverageSeries, BirkhoffError> {
    let n_max = check_grid(grid, w.len())?;
    let values = observable_orbit(sys, f, x, n_max)?;
    let mut sum = ComplexSum::default();
    let mut averages = Vec::with_capacity(grid.len());
    let mut n = 0;
    for &target in grid {
        while n < target {
            sum.add(w.values()[n] * values[n]);
            n += 1;
        }
        averages.push(sum.value() / target as f64);
    }
    let metadata = SeriesMetadata {
        system: sys.describe(),
        observable: serde_json::to_string(f).expect("observable serializes"),
        point: describe_point(x),
        weight: serde_json::to_string(w.spec()).expect("weight spec serializes"),
    };
    Ok(AverageSeries { grid: grid.to_vec(), averages, metadata })
}

/// `f(T^n x)` for `n < n_max`.
pub fn observable_orbit(sys: &SystemHandle, f: &Observable, x: &Point, n_max: usize) -> Result<Vec<Complex64>, BirkhoffError> {
    match (sys, x) {
        (SystemHandle::FullShift { .. } | SystemHandle::CodedSubshift { .. }, Point::Symbolic(p)) => {
            if let SystemHandle::FullShift { symbols } = sys {
                if *symbols < 2 {
                    return Err(BirkhoffError::Mismatch("full shift needs at least 2 symbols".into()));
                }
            }
            let g = Compiled::new(f)?;
            let step = sys.step().expect("symbolic");
            let len = g.len();
            // One pass over the needed prefix of x.
            let total = step * n_max.saturating_sub(1) + len;
            let symbols = window(p, 0, total)?;
            if let SystemHandle::FullShift { symbols: m } = sys {
                symbols.check_alphabet(*m)?;
            }
            let s = symbols.symbols();
            Ok((0..n_max).map(|n| g.eval(&s[n * step..n * step + len])).collect())
        }
        (SystemHandle::CircleRotation { alpha }, Point::Torus(c)) => {
            let h = match f {
                Observable::Character { h } if h.len() == 1 && c.len() == 1 => h[0] as f64,
                _ => return Err(BirkhoffError::Mismatch("circle rotations take one-dimensional characters".into())),
            };
            let base = frac(h * c[0]);
            let step = frac(h * frac(*alpha));
            Ok((0..n_max).map(|n| cis(base + frac(step * n as f64))).collect())
        }
        (SystemHandle::ToralAffine(map), Point::Torus(c)) => {
            let h = match f {
                Observable::Character { h } if h.len() == map.matrix.dim() && c.len() == h.len() => h,
                _ => return Err(BirkhoffError::Mismatch("toral maps take characters of matching dimension".into())),
            };
            toral_character_orbit(map, h, c, n_max)
        }
        _ => Err(BirkhoffError::Mismatch(sys.describe())),
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

fn cis(turns: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * turns)
}

fn dyadic(coords: &[f64]) -> Result<Vec<BigInt>, BirkhoffError> {
    coords
        .iter()
        .map(|&x| {
            if !(0.0..1.0).contains(&x) {
                return Err(BirkhoffError::Mismatch(format!("torus coordinate {x} outside [0, 1)")));
            }
            Ok(BigInt::from((x * f64::from(1u32 << 26) * f64::from(1u32 << 27)).round() as u64))
        })
        .collect()
}

fn modulus() -> BigInt {
    BigInt::one() << DYADIC_BITS
}

/// `e^{2πi⟨h, T^n x⟩} = e^{2πi(⟨B*^n h, x⟩ + ψ_n)}`. With `x` on the dyadic
/// grid only `B*^n h mod 2^53` matters, so the orbit stays bounded.
fn toral_character_orbit(map: &ToralAffineMap, h: &[i64], x: &[f64], n_max: usize) -> Result<Vec<Complex64>, BirkhoffError> {
    let k = dyadic(x)?;
    let m = modulus();
    let bt = map.matrix.transpose();
    let h0: Vec<BigInt> = h.iter().map(|&v| BigInt::from(v)).collect();
    let psi = psi_sequence(map, &h0, n_max)?;
    let mut hn: Vec<BigInt> = h0.iter().map(|v| v.mod_floor(&m)).collect();
    let scale = m.to_f64().expect("2^53 fits");
    let mut out = Vec::with_capacity(n_max);
    for psi_n in psi.iter().take(n_max) {
        let dot: BigInt = hn.iter().zip(&k).map(|(a, b)| a * b).sum::<BigInt>().mod_floor(&m);
        let phase = dot.to_f64().expect("below 2^53") / scale;
        let psi_f = psi_n.numer().to_f64().unwrap_or(0.0) / psi_n.denom().to_f64().unwrap_or(1.0);
        out.push(cis(frac(phase + psi_f)));
        hn = bt.mul_vec(&hn).into_iter().map(|v| v.mod_floor(&m)).collect();
    }
    Ok(out)
}

/// `T^n x` for a toral affine map, exact on the dyadic grid of `x` and the
/// rational translation, rounded to f64 at the end.
fn toral_image(map: &ToralAffineMap, x: &[f64], n: usize) -> Result<Vec<f64>, BirkhoffError> {
    let m = modulus();
    let mut k = dyadic(x)?;
    for _ in 0..n {
        k = map.matrix.mul_vec(&k).into_iter().map(|v| v.mod_floor(&m)).collect();
    }
    let scale = m.to_f64().expect("2^53 fits");
    let shift = map.translation_orbit_sum(n);
    Ok(k.iter()
        .zip(shift)
        .map(|(v, s)| frac(v.to_f64().expect("below 2^53") / scale + s.numer().to_f64().unwrap_or(0.0) / s.denom().to_f64().unwrap_or(1.0)))
        .collect())
}

/// A function/point pair correlated to a real weight.
#[derive(Debug, Clone)]
pub struct CorrelatedPair {
    pub observable: Observable,
    pub point: PointSpec,
    /// The real weight the pair is built for.
    pub weight: WeightSequence,
}

/// `f = 1_[0] − 1_[1]` and `x_n = 0` iff `w_n >= 0`, so that
/// `w_n f(σ^n x) = |w_n|` for every cached `n`.
pub fn fullshift_pair(w: &WeightSequence) -> Result<CorrelatedPair, BirkhoffError> {
    let real = w.real_part_policy();
    let signs = Word::new(real.iter().map(|&v| u8::from(v < 0.0)).collect());
    let point = PointSpec::eventually_periodic(signs, Word::constant(0, 1), Sidedness::OneSided)?;
    let observable = Observable::CylinderIndicatorDiff { plus: Word::constant(0, 1), minus: Word::constant(1, 1) };
    let weight = WeightSequence::from_values(real.into_iter().map(|v| Complex64::new(v, 0.0)).collect())?;
    Ok(CorrelatedPair { observable, point, weight })
}

#[derive(Debug, Clone)]
pub struct LiftedPair {
    /// Locally constant extension of `g` by 0 off `K`.
    pub observable: Observable,
    /// `σ^s x0` with `s = (τ − j0) mod τ`.
    pub point: PointSpec,
    pub j0: usize,
    pub tau: usize,
    pub shift: usize,
    /// `v_n = w_{τn − s}` (0 when `τn < s`): the weight seen by the coded
    /// system, so that `τN · A^{ambient}_{τN}` and `N · A^{coded}_N` differ
    /// by at most the single term `v_N g(T^N x0)`.
    pub coded_weight: WeightSequence,
}

/// Lifts a pair `(g, x0)` on `(K, σ^τ)` to the ambient shift.
///
/// `j0` is the residue class mod τ carrying the largest Cesàro mass of
/// `|w|`. The certificate must cover every offset: that is what makes the
/// windows at non-multiples of τ incompatible with `K`, so the extension
/// vanishes there.
pub fn lift_pair(
    cert: &CertifiedHorseshoe,
    g: &Observable,
    x0: &PointSpec,
    w: &WeightSequence,
    depth: usize,
) -> Result<LiftedPair, BirkhoffError> {
    let tau = cert.order();
    if !cert.certificate.is_full() || cert.certificate.generators != cert.horseshoe.generators() {
        return Err(BirkhoffError::IncompleteCertificate { tau });
    }
    cert.certificate.verify()?;
    let generators = cert.horseshoe.generators().to_vec();
    let observable = Observable::CodedExtension { generators, depth, inner: Box::new(g.clone()) };
    observable.validate()?;

    let blocks = w.len() / tau;
    if blocks == 0 {
        return Err(BirkhoffError::GridOutOfRange { n: tau, len: w.len() });
    }
    let j0 = best_residue(w, tau, &[blocks])?.j0;
    let shift = (tau - j0) % tau;
    let coded: Vec<Complex64> = (0..)
        .map(|n: usize| (tau * n).checked_sub(shift).map(|m| w.get(m)).unwrap_or(Some(Complex64::zero())))
        .map_while(|v| v)
        .collect();
    let coded_weight = WeightSequence::from_values(coded)?;
    let point = x0.clone().shifted(shift as i64)?;
    Ok(LiftedPair { observable, point, j0, tau, shift, coded_weight })
}

/// The point of `K` whose block `n` is `g_0` when `Re v_n >= 0` and `g_1`
/// otherwise, correlating `1_[g_0] − 1_[g_1]` with `v`.
pub fn correlated_coded_point(h: &CodedHorseshoe, v: &WeightSequence) -> Result<PointSpec, BirkhoffError> {
    let choices = Word::new(v.values().iter().map(|z| u8::from(z.re < 0.0)).collect());
    let choices = PointSpec::eventually_periodic(choices, Word::constant(0, 1), h.sidedness())?;
    Ok(PointSpec::block_stream(choices, h.generators().to_vec())?)
}

/// Ambient against coded averages for the lift of `1_[g_0] − 1_[g_1]`
/// correlated with the coded weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftReport {
    pub generators: Vec<Word>,
    pub tau: usize,
    pub j0: usize,
    pub shift: usize,
    pub depth: usize,
    /// Coded times `N`; the ambient averages are taken at `τN`.
    pub grid: Vec<usize>,
    pub ambient: Vec<Complex64>,
    /// `(1/τ) A^{coded}_N`.
    pub coded_scaled: Vec<Complex64>,
    pub differences: Vec<f64>,
    /// `2 sup|g| max|w| / N`.
    pub bounds: Vec<f64>,
    pub holds: bool,
}

pub fn lift_consistency(
    cert: &CertifiedHorseshoe,
    w: &WeightSequence,
    depth: usize,
    grid: &[usize],
) -> Result<LiftReport, BirkhoffError> {
    let tau = cert.order();
    let generators = cert.horseshoe.generators().to_vec();
    let g = Observable::CylinderIndicatorDiff { plus: generators[0].clone(), minus: generators[1].clone() };
    // The first lift only fixes j0 and the coded weight; the point is then
    // correlated with that weight and lifted again.
    let placeholder = PointSpec::block_stream(
        PointSpec::eventually_periodic(Word::default(), Word::constant(0, 1), cert.horseshoe.sidedness())?,
        generators.clone(),
    )?;
    let first = lift_pair(cert, &g, &placeholder, w, depth)?;
    let x0 = correlated_coded_point(&cert.horseshoe, &first.coded_weight)?;
    let lifted = lift_pair(cert, &g, &x0, w, depth)?;

    check_grid(grid, lifted.coded_weight.len())?;
    let ambient_grid: Vec<usize> = grid.iter().map(|&n| tau * n).collect();
    let ambient = weighted_average_series(
        &SystemHandle::FullShift { symbols: 2 },
        &lifted.observable,
        &Point::Symbolic(lifted.point.clone()),
        w,
        &ambient_grid,
    )?;
    let coded = weighted_average_series(
        &SystemHandle::CodedSubshift { horseshoe: cert.horseshoe.clone() },
        &g,
        &Point::Symbolic(x0),
        &lifted.coded_weight,
        grid,
    )?;
    let coded_scaled: Vec<Complex64> = coded.averages.iter().map(|a| a / tau as f64).collect();
    let differences: Vec<f64> = ambient.averages.iter().zip(&coded_scaled).map(|(a, c)| (a - c).norm()).collect();
    let c = 2.0 * g.sup_norm() * w.max_abs();
    let bounds: Vec<f64> = grid.iter().map(|&n| c / n as f64).collect();
    let holds = differences.iter().zip(&bounds).all(|(d, b)| d <= b);
    Ok(LiftReport {
        generators,
        tau,
        j0: lifted.j0,
        shift: lifted.shift,
        depth,
        grid: grid.to_vec(),
        ambient: ambient.averages,
        coded_scaled,
        differences,
        bounds,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeReport {
    pub alpha: f64,
    pub beta: f64,
    pub h: i64,
    pub grid: Vec<usize>,
    pub moduli: Vec<f64>,
    /// `|A_N| · N · |1 − e^{2πi(hα−β)}| / 2` at each grid point.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub bound_holds: bool,
    /// `k` with `|k| <= 50` and `β ≈ kα (mod 1)`.
    pub resonances: Vec<i64>,
}

/// Relative slack allowed in `ratio <= 1` for rounding in the sum.
pub const UE_RATIO_TOLERANCE: f64 = 1e-9;

/// Weighted averages of `e^{2πihx}` along the rotation by `α` with weight
/// `e^{−2πiβn}`, against the geometric-sum bound `2 / (N|1 − e^{2πi(hα−β)}|)`.
pub fn ue_control(alpha: f64, beta: f64, h: i64, grid: &[usize]) -> Result<UeReport, BirkhoffError> {
    let n_max = check_grid(grid, usize::MAX)?;
    let w = crate::weights::generate(&crate::weights::WeightSpec::Phase { turns: beta }, n_max)?;
    let sys = SystemHandle::CircleRotation { alpha };
    let series = if h == 0 {
        let ones = WeightSequence::from_values(vec![Complex64::new(1.0, 0.0); n_max])?;
        weighted_series_with(&ones, &w, grid)
    } else {
        weighted_average_series(&sys, &Observable::Character { h: vec![h] }, &Point::Torus(vec![0.0]), &w, grid)?
    };
    let gap = (Complex64::new(1.0, 0.0) - cis(frac(h as f64 * alpha - beta))).norm();
    let moduli = series.moduli();
    let ratios: Vec<f64> = moduli.iter().zip(grid).map(|(a, &n)| a * n as f64 * gap / 2.0).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let resonances = (-50i64..=50)
        .filter(|&k| {
            let d = frac(beta - k as f64 * alpha);
            d.min(1.0 - d) < 1e-9
        })
        .collect();
    Ok(UeReport { alpha, beta, h, grid: grid.to_vec(), moduli, ratios, max_ratio, bound_holds: max_ratio <= 1.0 + UE_RATIO_TOLERANCE, resonances })
}

/// Averages of `w_n v_n` (the constant observable).
fn weighted_series_with(ones: &WeightSequence, w: &WeightSequence, grid: &[usize]) -> AverageSeries {
    let mut sum = ComplexSum::default();
    let mut n = 0;
    let averages = grid
        .iter()
        .map(|&target| {
            while n < target {
                sum.add(ones.values()[n] * w.values()[n]);
                n += 1;
            }
            sum.value() / target as f64
        })
        .collect();
    let metadata = SeriesMetadata {
        system: "constant observable".into(),
        observable: "1".into(),
        point: String::new(),
        weight: serde_json::to_string(w.spec()).expect("weight spec serializes"),
    };
    AverageSeries { grid: grid.to_vec(), averages, metadata }
}
