//! Displacement search and the refinement loop that turns any horseshoe of
//! order N into one with disjoint steps and order `M·N`.
//!
//! Each refinement works in code coordinates: a cylinder `[c]` of choice
//! words whose ambient image avoids the displaced steps `σ^{kq+s}(Λ)` is
//! found by search, a horseshoe with disjoint steps is built inside `[c]`,
//! and its generators are pushed through the current generators.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    build_horseshoe_in_cylinder, prime_factors, solve_residue_cover, CertifiedHorseshoe, CodedHorseshoe,
    DegeneratePolicy, DisjointStepsCertificate, HorseshoeError, TraceStep,
};
use crate::symbolic::{prefix_matches, Sidedness, Word};

pub const DEFAULT_MAX_DEPTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplacementMode {
    /// Target offset `s` with `n·s mod q ∈ J` for some `n >= 1`.
    Disp1,
    /// Target offset `s` dividing `q`; also tracks suffix injectivity.
    Disp2,
}

/// Refinement request for a horseshoe of order `p·q` whose offsets `kq`
/// (`1 <= k < p`) and `kq + j` (`j ∈ J`) are already certified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplacementTask {
    pub p: usize,
    pub q: usize,
    pub j: BTreeSet<usize>,
    pub s: usize,
    pub mode: DisplacementMode,
}

impl DisplacementTask {
    pub fn validate(&self) -> Result<(), HorseshoeError> {
        let invalid = |msg: String| Err(HorseshoeError::InvalidTask(msg));
        if self.p == 0 || self.q == 0 {
            return invalid("p and q must be positive".into());
        }
        if self.s == 0 || self.s >= self.q {
            return invalid(format!("need 1 <= s < q, got s = {}, q = {}", self.s, self.q));
        }
        if let Some(&bad) = self.j.iter().find(|&&j| j == 0 || j > self.q) {
            return invalid(format!("J must lie in 1..={}, found {bad}", self.q));
        }
        match self.mode {
            DisplacementMode::Disp2 if !self.q.is_multiple_of(self.s) => invalid(format!("s = {} does not divide q = {}", self.s, self.q)),
            DisplacementMode::Disp1 if self.reaching_multiplier().is_none() => {
                invalid(format!("no multiple of s = {} lands in J mod {}", self.s, self.q))
            }
            _ => Ok(()),
        }
    }

    /// Smallest `n >= 1` with `n·s mod q ∈ J` (residue 0 read as `q`).
    pub fn reaching_multiplier(&self) -> Option<usize> {
        (1..=self.q).find(|&n| {
            let r = (n * self.s) % self.q;
            self.j.contains(&if r == 0 { self.q } else { r })
        })
    }

    fn order(&self) -> usize {
        self.p * self.q
    }

    fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.p).map(move |k| k * self.q + self.s)
    }

    /// Offsets certified on a horseshoe of order `p_total·q` by this task's
    /// hypotheses (`s` excluded).
    fn base_offsets(&self, p_total: usize) -> BTreeSet<usize> {
        let tau = p_total * self.q;
        let mut offsets: BTreeSet<usize> = (1..p_total).map(|k| k * self.q).collect();
        for k in 0..p_total {
            offsets.extend(self.j.iter().map(|&j| k * self.q + j).filter(|&t| t < tau));
        }
        offsets
    }
}

/// A choice word `c` whose ambient cylinder `[π(c)]` misses every displaced step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplacementWitness {
    pub choices: Word,
    pub word: Word,
}

/// Decides, for every offset `t < L`, whether `u` occurs at position `t` of
/// some concatenation of generators. Blocks of a concatenation are chosen
/// independently, so each overlapped block is checked on its own.
struct OffsetMatcher {
    block_len: usize,
    word_len: usize,
    head: Vec<bool>,
    block: Vec<bool>,
}

impl OffsetMatcher {
    fn new(u: &[u8], generators: &[Word]) -> Self {
        let (block_len, word_len) = (generators[0].len(), u.len());
        let mut head = vec![false; block_len];
        let mut block = vec![false; word_len];
        for g in generators {
            let from_g = prefix_matches(u, g.symbols());
            for (t, flag) in head.iter_mut().enumerate() {
                *flag |= from_g[t] >= (block_len - t).min(word_len);
            }
            let from_u = prefix_matches(g.symbols(), u);
            for (a, flag) in block.iter_mut().enumerate() {
                *flag |= from_u[a] >= block_len.min(word_len - a);
            }
        }
        OffsetMatcher { block_len, word_len, head, block }
    }

    fn occurs_at(&self, t: usize) -> bool {
        if !self.head[t] {
            return false;
        }
        let mut a = self.block_len - t;
        while a < self.word_len {
            if !self.block[a] {
                return false;
            }
            a += self.block_len;
        }
        true
    }
}

fn avoids_targets(h: &CodedHorseshoe, task: &DisplacementTask, word: &Word) -> bool {
    let matcher = OffsetMatcher::new(word.symbols(), h.generators());
    task.targets().all(|t| !matcher.occurs_at(t))
}

fn check_shape(h: &CertifiedHorseshoe, task: &DisplacementTask) -> Result<(), HorseshoeError> {
    task.validate()?;
    if h.order() != task.order() {
        return Err(HorseshoeError::InvalidTask(format!("horseshoe order {} is not p·q = {}", h.order(), task.order())));
    }
    Ok(())
}

fn choice_word(bits: u64, depth: usize) -> Word {
    Word::new((0..depth).map(|i| ((bits >> (depth - 1 - i)) & 1) as u8).collect())
}

/// Searches code cylinders by increasing depth, lexicographically within a
/// depth, for one whose ambient cylinder avoids `σ^{kq+s}(Λ)` for all
/// `0 <= k < p`.
pub fn find_displacement_witness(
    h: &CertifiedHorseshoe,
    task: &DisplacementTask,
    max_depth: usize,
) -> Result<DisplacementWitness, HorseshoeError> {
    check_shape(h, task)?;
    if let Some(k) = (1..task.p).find(|k| !h.certificate.covers(k * task.q)) {
        return Err(HorseshoeError::MissingCertificate(k * task.q));
    }
    for depth in 1..=max_depth.min(63) {
        for bits in 0..(1u64 << depth) {
            let choices = choice_word(bits, depth);
            let word = h.horseshoe.encode_choices(&choices)?;
            if avoids_targets(&h.horseshoe, task, &word) {
                return Ok(DisplacementWitness { choices, word });
            }
        }
    }
    Err(HorseshoeError::DepthExceeded {
        max_depth,
        context: format!("s = {}, q = {}, p = {}", task.s, task.q, task.p),
    })
}

fn refine_with_stage(
    h: &CertifiedHorseshoe,
    task: &DisplacementTask,
    witness: &DisplacementWitness,
    stage: &str,
) -> Result<CertifiedHorseshoe, HorseshoeError> {
    check_shape(h, task)?;
    for offset in task.base_offsets(task.p) {
        if !h.certificate.covers(offset) {
            return Err(HorseshoeError::MissingCertificate(offset));
        }
    }
    if task.mode == DisplacementMode::Disp2 && task.p > 1 && !h.certificate.covers_injectivity((task.p - 1) * task.q) {
        return Err(HorseshoeError::MissingCertificate((task.p - 1) * task.q));
    }
    if h.horseshoe.encode_choices(&witness.choices)? != witness.word || !avoids_targets(&h.horseshoe, task, &witness.word) {
        return Err(HorseshoeError::InvalidWitness(witness.choices.clone()));
    }

    let sidedness = h.horseshoe.sidedness();
    let (code, _) = build_horseshoe_in_cylinder(&witness.choices, sidedness, DegeneratePolicy::PreRefine)?;
    let multiplier = code.order();
    let generators = code.generators().iter().map(|c| h.horseshoe.encode_choices(c)).collect::<Result<Vec<_>, _>>()?;

    let p_total = task.p * multiplier;
    let tau = p_total * task.q;
    let mut offsets = task.base_offsets(p_total);
    offsets.extend((0..p_total).map(|k| k * task.q + task.s));
    let injectivity = match (task.mode, sidedness) {
        (DisplacementMode::Disp2, Sidedness::OneSided) => vec![(p_total - 1) * task.q],
        _ => vec![],
    };
    let mut trace = h.certificate.trace.clone();
    trace.push(TraceStep {
        stage: stage.into(),
        mode: Some(task.mode),
        s: Some(task.s),
        witness: Some(witness.choices.clone()),
        multiplier,
        tau,
    });
    let certificate = DisjointStepsCertificate::certify(&generators, offsets, injectivity, sidedness, trace)?;
    let mut horseshoe = CodedHorseshoe::new(generators, sidedness)?;
    if let Some(code) = h.horseshoe.ambient_code() {
        horseshoe = horseshoe.with_ambient_code(code.clone());
    }
    Ok(CertifiedHorseshoe { horseshoe, certificate })
}

/// Builds `Λ' ⊂ Λ ∩ [witness]` of order `M·p·q` whose certificate covers
/// `kq` (`1 <= k < pM`) and `kq + j` for `j ∈ J ∪ {s}` (`0 <= k < pM`).
pub fn refine_avoiding(
    h: &CertifiedHorseshoe,
    task: &DisplacementTask,
    witness: &DisplacementWitness,
) -> Result<CertifiedHorseshoe, HorseshoeError> {
    refine_with_stage(h, task, witness, "refine")
}

fn refine_step(
    current: &CertifiedHorseshoe,
    task: &DisplacementTask,
    max_depth: usize,
    stage: &str,
) -> Result<CertifiedHorseshoe, HorseshoeError> {
    let witness = find_displacement_witness(current, task, max_depth).map_err(|e| match e {
        HorseshoeError::DepthExceeded { max_depth, context } => {
            HorseshoeError::DepthExceeded { max_depth, context: format!("{stage}: {context}") }
        }
        other => other,
    })?;
    refine_with_stage(current, task, &witness, stage)
}

/// Refines a horseshoe of order N into one with disjoint steps of order `M·N`.
///
/// Step 1 displaces by `N/p` for every prime `p | N` (largest prime first);
/// step 2 displaces by every remaining residue `k`, each reachable from some
/// `N/p` by a multiple of `k`.
pub fn disjointify(h: &CodedHorseshoe, max_depth: usize) -> Result<CertifiedHorseshoe, HorseshoeError> {
    let n = h.order();
    let mut current = CertifiedHorseshoe::uncertified(h.clone());
    if n == 1 {
        return Ok(current);
    }
    let mut primes = prime_factors(n);
    primes.reverse();
    let mut p = 1;
    let mut j = BTreeSet::new();

    for &prime in &primes {
        let s = n / prime;
        let mut task = DisplacementTask { p, q: n, j: j.clone(), s, mode: DisplacementMode::Disp2 };
        if p > 1 && !current.certificate.covers_injectivity((p - 1) * n) {
            task.mode = DisplacementMode::Disp1;
            if task.reaching_multiplier().is_none() {
                return Err(HorseshoeError::CertificateFailure {
                    offset: (p - 1) * n,
                    reason: "injectivity lost and no disp1 route for s".into(),
                });
            }
        }
        let next = refine_step(&current, &task, max_depth, "step1")?;
        p *= next.order() / current.order();
        j.insert(s);
        current = next;
    }

    let cover = solve_residue_cover(n)?;
    let minimal: BTreeSet<usize> = primes.iter().map(|&prime| n / prime).collect();
    for k in (1..n).filter(|k| !minimal.contains(k)) {
        let entry = cover.entry(k).expect("cover has an entry for every residue");
        debug_assert!(j.contains(&(k * entry.x % n)));
        let task = DisplacementTask { p, q: n, j: j.clone(), s: k, mode: DisplacementMode::Disp1 };
        let next = refine_step(&current, &task, max_depth, "step2")?;
        p *= next.order() / current.order();
        j.insert(k);
        current = next;
    }

    let tau = current.order();
    let injectivity = match h.sidedness() {
        Sidedness::OneSided => 1..tau,
        Sidedness::TwoSided => 0..0,
    };
    let certificate = DisjointStepsCertificate::certify(
        current.horseshoe.generators(),
        1..tau,
        injectivity,
        h.sidedness(),
        current.certificate.trace.clone(),
    )?;
    Ok(CertifiedHorseshoe { horseshoe: current.horseshoe, certificate })
}
