//! Horseshoes with disjoint steps inside binary full shifts.
//!
//! A horseshoe is described by two distinct generator words of common length
//! τ; the set `K = {g0, g1}^∞` is `σ^τ`-invariant and `(K, σ^τ)` is conjugate
//! to the full shift through the generator choices. A
//! [`DisjointStepsCertificate`] records the offsets `j` at which
//! `K ∩ σ^j(K) = ∅` has been checked by finite window comparisons; a full
//! certificate covers every `1 <= j < τ`, making τ the first return time of K.

mod cylinder;
mod displacement;
mod residue;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symbolic::{
    common_length, pair_window_disjoint_offsets, pair_window_disjointness, suffix_injectivity,
    triple_window_disjointness, BlockCode, Sidedness, SymbolicError, Word,
};

pub use cylinder::{build_horseshoe_in_cylinder, refine_cylinder, DegeneratePolicy, RefinedCylinder};
pub use displacement::{
    disjointify, find_displacement_witness, refine_avoiding, DisplacementMode, DisplacementTask,
    DisplacementWitness, DEFAULT_MAX_DEPTH,
};
pub use residue::{prime_factors, solve_residue_cover, ResidueCoverEntry, ResidueCoverSolution};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HorseshoeError {
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("cylinder {0} is constant of rank 1 and pre-refinement is disabled")]
    ConstantWord(Word),
    #[error("horseshoe constructions need a binary word, got {0}")]
    NotBinary(Word),
    #[error("a horseshoe needs two distinct generators of equal length")]
    InvalidGenerators,
    #[error("certificate check failed at offset {offset}: {reason}")]
    CertificateFailure { offset: usize, reason: String },
    #[error("no displacement witness up to depth {max_depth} ({context})")]
    DepthExceeded { max_depth: usize, context: String },
    #[error("invalid displacement task: {0}")]
    InvalidTask(String),
    #[error("horseshoe lacks certified offset {0} required by the task")]
    MissingCertificate(usize),
    #[error("witness {0} does not avoid the displaced steps")]
    InvalidWitness(Word),
    #[error("N must be at least 2 (got {0})")]
    ModulusTooSmall(usize),
}

/// A full-shift subsystem `{g0, g1}^∞` with return time τ = `|g0|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedHorseshoe {
    generators: Vec<Word>,
    /// Length of the shared `0`-run (or `1`-run after relabelling) that
    /// prefixes the generators built inside a cylinder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    marker_len: Option<usize>,
    /// Realises binary generators inside a larger ambient alphabet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ambient_code: Option<BlockCode>,
    #[serde(default)]
    sidedness: Sidedness,
}

impl CodedHorseshoe {
    pub fn new(generators: Vec<Word>, sidedness: Sidedness) -> Result<Self, HorseshoeError> {
        common_length(&generators)?;
        if generators.len() != 2 || generators[0] == generators[1] {
            return Err(HorseshoeError::InvalidGenerators);
        }
        Ok(CodedHorseshoe { generators, marker_len: None, ambient_code: None, sidedness })
    }

    pub fn with_marker_len(mut self, n1: usize) -> Self {
        self.marker_len = Some(n1);
        self
    }

    pub fn with_ambient_code(mut self, code: BlockCode) -> Self {
        self.ambient_code = Some(code);
        self
    }

    pub fn generators(&self) -> &[Word] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.generators[0].len()
    }

    pub fn marker_len(&self) -> Option<usize> {
        self.marker_len
    }

    pub fn ambient_code(&self) -> Option<&BlockCode> {
        self.ambient_code.as_ref()
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    /// The concatenation `g_{c_0} g_{c_1} ...` for a binary choice word.
    pub fn encode_choices(&self, choices: &Word) -> Result<Word, HorseshoeError> {
        choices.check_alphabet(2)?;
        let mut out = Vec::with_capacity(choices.len() * self.order());
        for &c in choices.symbols() {
            out.extend_from_slice(self.generators[c as usize].symbols());
        }
        Ok(Word::new(out))
    }

    /// Generators pushed through the ambient block code, if one is attached.
    pub fn ambient_generators(&self) -> Result<Vec<Word>, HorseshoeError> {
        match &self.ambient_code {
            Some(code) => Ok(self.generators.iter().map(|g| code.encode(g)).collect::<Result<_, _>>()?),
            None => Ok(self.generators.clone()),
        }
    }
}

/// One refinement recorded while building a certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub stage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<DisplacementMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Word>,
    /// Factor by which the generator length grew in this step.
    pub multiplier: usize,
    pub tau: usize,
}

/// Offsets at which `K ∩ σ^j(K) = ∅` has been checked for `K = generators^∞`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointStepsCertificate {
    pub generators: Vec<Word>,
    pub tau: usize,
    pub offsets_checked: Vec<usize>,
    pub injectivity_checked: Vec<usize>,
    #[serde(default)]
    pub sidedness: Sidedness,
    #[serde(default)]
    pub trace: Vec<TraceStep>,
}

impl DisjointStepsCertificate {
    /// Runs the window checks for the requested offsets and fails on the
    /// first one that does not hold.
    pub fn certify(
        generators: &[Word],
        offsets: impl IntoIterator<Item = usize>,
        injectivity: impl IntoIterator<Item = usize>,
        sidedness: Sidedness,
        trace: Vec<TraceStep>,
    ) -> Result<Self, HorseshoeError> {
        let tau = common_length(generators)?;
        let offsets: BTreeSet<usize> = offsets.into_iter().collect();
        let injectivity: BTreeSet<usize> = injectivity.into_iter().collect();
        let disjoint = pair_window_disjoint_offsets(generators)?;
        for &j in &offsets {
            if j == 0 || j >= tau {
                return Err(SymbolicError::OffsetOutOfRange { n: j, max: tau - 1 }.into());
            }
            if !disjoint[j] {
                return Err(HorseshoeError::CertificateFailure {
                    offset: j,
                    reason: "a shifted window equals a generator".into(),
                });
            }
        }
        for &n in &injectivity {
            if !suffix_injectivity(generators, n)? {
                return Err(HorseshoeError::CertificateFailure { offset: n, reason: "suffixes collide".into() });
            }
        }
        Ok(DisjointStepsCertificate {
            generators: generators.to_vec(),
            tau,
            offsets_checked: offsets.into_iter().collect(),
            injectivity_checked: injectivity.into_iter().collect(),
            sidedness,
            trace,
        })
    }

    /// Covers every offset `1..τ`, so τ is a first return time.
    pub fn is_full(&self) -> bool {
        self.offsets_checked.len() + 1 == self.tau
            && self.offsets_checked.iter().enumerate().all(|(i, &j)| j == i + 1)
    }

    pub fn covers(&self, offset: usize) -> bool {
        self.offsets_checked.binary_search(&offset).is_ok()
    }

    pub fn covers_injectivity(&self, offset: usize) -> bool {
        self.injectivity_checked.binary_search(&offset).is_ok()
    }

    /// Re-checks every recorded claim from the generators alone, one offset
    /// at a time with direct window comparisons (pair windows for one-sided
    /// certificates, three-generator windows for two-sided ones).
    pub fn verify(&self) -> Result<(), HorseshoeError> {
        let tau = common_length(&self.generators)?;
        if self.generators.len() != 2 || self.generators[0] == self.generators[1] {
            return Err(HorseshoeError::InvalidGenerators);
        }
        if tau != self.tau {
            return Err(HorseshoeError::CertificateFailure {
                offset: 0,
                reason: format!("tau {} does not match generator length {tau}", self.tau),
            });
        }
        if self.offsets_checked.windows(2).any(|w| w[0] >= w[1])
            || self.injectivity_checked.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(HorseshoeError::CertificateFailure { offset: 0, reason: "offset lists must be strictly increasing".into() });
        }
        for &j in &self.offsets_checked {
            let ok = match self.sidedness {
                Sidedness::OneSided => pair_window_disjointness(&self.generators, j)?,
                Sidedness::TwoSided => triple_window_disjointness(&self.generators, j)?,
            };
            if !ok {
                return Err(HorseshoeError::CertificateFailure { offset: j, reason: "window equals a generator".into() });
            }
        }
        for &n in &self.injectivity_checked {
            if !suffix_injectivity(&self.generators, n)? {
                return Err(HorseshoeError::CertificateFailure { offset: n, reason: "suffixes collide".into() });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialises")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// A horseshoe together with the certificate describing its checked steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertifiedHorseshoe {
    pub horseshoe: CodedHorseshoe,
    pub certificate: DisjointStepsCertificate,
}

impl CertifiedHorseshoe {
    /// Wraps a horseshoe with an empty certificate (no steps checked yet).
    pub fn uncertified(horseshoe: CodedHorseshoe) -> Self {
        let certificate = DisjointStepsCertificate {
            generators: horseshoe.generators().to_vec(),
            tau: horseshoe.order(),
            offsets_checked: Vec::new(),
            injectivity_checked: Vec::new(),
            sidedness: horseshoe.sidedness(),
            trace: Vec::new(),
        };
        CertifiedHorseshoe { horseshoe, certificate }
    }

    pub fn order(&self) -> usize {
        self.horseshoe.order()
    }
}

/// Re-verifies a serialized certificate.
pub fn verify(json: &str) -> Result<DisjointStepsCertificate, VerifyError> {
    let cert = DisjointStepsCertificate::from_json(json).map_err(|e| VerifyError::Malformed(e.to_string()))?;
    cert.verify().map_err(VerifyError::Rejected)?;
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error("certificate rejected: {0}")]
    Rejected(HorseshoeError),
}
