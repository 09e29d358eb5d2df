//! Horseshoes with disjoint steps inside an arbitrary cylinder of the binary
//! full shift.

use serde::{Deserialize, Serialize};

use super::{CodedHorseshoe, DisjointStepsCertificate, HorseshoeError, TraceStep};
use crate::symbolic::{self_overlap_free, Sidedness, Word};

/// A sub-cylinder `C' ⊂ C` whose shifts `σ^n(C')`, `1 <= n < |C'|`, miss `C'`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinedCylinder {
    pub original: Word,
    pub refined: Word,
    /// Smallest shift at which the original cylinder overlaps itself
    /// (`|C|` when it never does).
    pub n0: usize,
    pub sidedness: Sidedness,
}

/// What to do with a rank-1 cylinder, where the construction has no `1`
/// after the leading `0` to anchor on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    /// Append the opposite symbol first (`[0] -> [01]`).
    #[default]
    PreRefine,
    Reject,
}

fn check_binary(c: &Word) -> Result<(), HorseshoeError> {
    if c.is_empty() || c.check_alphabet(2).is_err() {
        return Err(HorseshoeError::NotBinary(c.clone()));
    }
    Ok(())
}

/// Runs `f` on the word relabelled so that it starts with 0, then undoes the
/// relabelling on every word of the result via `unflip`.
fn normalised<T>(c: &Word, f: impl FnOnce(&Word) -> T, unflip: impl FnOnce(T) -> T) -> T {
    if c.symbols()[0] == 0 {
        f(c)
    } else {
        unflip(f(&c.flip_binary()))
    }
}

fn refine_normalised(c: &Word) -> (Word, usize) {
    let m = c.len();
    let n0 = (1..m).find(|&n| !self_overlap_free(c, n).expect("offset in range")).unwrap_or(m);
    if n0 == m {
        (c.clone(), n0)
    } else {
        (c.concat(&Word::constant(1, n0)), n0)
    }
}

/// Extends `C` to a sub-cylinder with no self-overlaps.
///
/// `n0` is the least shift at which `C` overlaps itself; when `n0 < |C|` the
/// refined cylinder is `C 1^{n0}` (with 0 and 1 swapped when `C` starts
/// with 1), otherwise `C` itself. Overlaps of anchored two-sided cylinders are
/// decided by the same comparison, so both sidednesses share this path.
pub fn refine_cylinder(c: &Word, sidedness: Sidedness) -> Result<RefinedCylinder, HorseshoeError> {
    check_binary(c)?;
    let (refined, n0) = normalised(c, refine_normalised, |(w, n0)| (w.flip_binary(), n0));
    Ok(RefinedCylinder { original: c.clone(), refined, n0, sidedness })
}

/// Builds a horseshoe with disjoint steps inside the cylinder `[c]`.
///
/// With `y = C'` the refined cylinder (rank `n*`) and `n1` the position of
/// its first `1`, the generators are `y 10` and `y 11`: both start with
/// `0^{n1} 1` and no window of two concatenated generators at an offset
/// `1 <= j < n* + 2` reproduces that prefix together with `C'`. The returned
/// certificate covers all offsets, plus suffix injectivity for one-sided
/// horseshoes.
pub fn build_horseshoe_in_cylinder(
    c: &Word,
    sidedness: Sidedness,
    policy: DegeneratePolicy,
) -> Result<(CodedHorseshoe, DisjointStepsCertificate), HorseshoeError> {
    check_binary(c)?;
    let c = if c.len() == 1 {
        match policy {
            DegeneratePolicy::PreRefine => {
                let mut extended = c.clone();
                extended.push(1 - c.symbols()[0]);
                extended
            }
            DegeneratePolicy::Reject => return Err(HorseshoeError::ConstantWord(c.clone())),
        }
    } else {
        c.clone()
    };

    let build = |c: &Word| {
        let (y, _) = refine_normalised(c);
        let n1 = y.symbols().iter().position(|&s| s == 1).expect("refined cylinder of rank >= 2 contains a 1");
        let g0 = y.concat(&"10".parse().expect("literal"));
        let g1 = y.concat(&"11".parse().expect("literal"));
        (vec![g0, g1], n1)
    };
    let (generators, n1) =
        normalised(&c, build, |(gens, n1)| (gens.iter().map(Word::flip_binary).collect(), n1));

    let tau = generators[0].len();
    let injectivity = match sidedness {
        Sidedness::OneSided => 1..tau,
        Sidedness::TwoSided => 0..0,
    };
    let trace = vec![TraceStep {
        stage: "cylinder".into(),
        mode: None,
        s: None,
        witness: Some(c.clone()),
        multiplier: tau,
        tau,
    }];
    let certificate = DisjointStepsCertificate::certify(&generators, 1..tau, injectivity, sidedness, trace)?;
    let horseshoe = CodedHorseshoe::new(generators, sidedness)?.with_marker_len(n1);
    Ok((horseshoe, certificate))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn rank_four_table() {
        let table = [
            ("0000", "00001", 1),
            ("0001", "0001", 4),
            ("0010", "0010111", 3),
            ("0011", "0011", 4),
            ("0100", "0100111", 3),
            ("0101", "010111", 2),
            ("0110", "0110111", 3),
            ("0111", "0111", 4),
        ];
        for (c, refined, n0) in table {
            let r = refine_cylinder(&w(c), Sidedness::OneSided).unwrap();
            assert_eq!((r.refined.to_string().as_str(), r.n0), (refined, n0), "cylinder {c}");
            let flipped = refine_cylinder(&w(c).flip_binary(), Sidedness::TwoSided).unwrap();
            assert_eq!(flipped.refined, w(refined).flip_binary());
        }
    }

    #[test]
    fn refined_cylinder_is_overlap_free() {
        for len in 1..=7usize {
            for bits in 0..(1u32 << len) {
                let c = Word::new((0..len).map(|i| ((bits >> i) & 1) as u8).collect());
                let r = refine_cylinder(&c, Sidedness::OneSided).unwrap();
                assert_eq!(&r.refined.symbols()[..len], c.symbols());
                for n in 1..r.refined.len() {
                    assert!(self_overlap_free(&r.refined, n).unwrap(), "{c} -> {} at {n}", r.refined);
                }
            }
        }
    }

    #[test]
    fn horseshoe_examples() {
        let (h, cert) = build_horseshoe_in_cylinder(&w("01"), Sidedness::OneSided, DegeneratePolicy::PreRefine).unwrap();
        assert_eq!(h.generators(), &[w("0110"), w("0111")]);
        assert_eq!((cert.tau, h.marker_len()), (4, Some(1)));
        assert_eq!(cert.offsets_checked, vec![1, 2, 3]);

        let (h, cert) = build_horseshoe_in_cylinder(&w("0101"), Sidedness::OneSided, DegeneratePolicy::PreRefine).unwrap();
        assert_eq!(h.generators(), &[w("01011110"), w("01011111")]);
        assert_eq!(cert.tau, 8);

        let (h, _) = build_horseshoe_in_cylinder(&w("0"), Sidedness::OneSided, DegeneratePolicy::PreRefine).unwrap();
        assert_eq!(h.generators(), &[w("0110"), w("0111")]);

        let (h, _) = build_horseshoe_in_cylinder(&w("1"), Sidedness::OneSided, DegeneratePolicy::PreRefine).unwrap();
        assert_eq!(h.generators(), &[w("1001"), w("1000")]);
    }

    #[test]
    fn degenerate_cylinder_rejected_on_request() {
        let err = build_horseshoe_in_cylinder(&w("0"), Sidedness::OneSided, DegeneratePolicy::Reject).unwrap_err();
        assert_eq!(err, HorseshoeError::ConstantWord(w("0")));
        assert!(build_horseshoe_in_cylinder(&w("0000"), Sidedness::OneSided, DegeneratePolicy::Reject).is_ok());
        assert!(matches!(refine_cylinder(&w(""), Sidedness::OneSided), Err(HorseshoeError::NotBinary(_))));
        assert!(matches!(refine_cylinder(&w("012"), Sidedness::OneSided), Err(HorseshoeError::NotBinary(_))));
    }
}
