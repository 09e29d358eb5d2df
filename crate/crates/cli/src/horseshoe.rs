use bohr_core::horseshoe::{
    self, build_horseshoe_in_cylinder, disjointify, CodedHorseshoe, DegeneratePolicy, DisjointStepsCertificate,
    DEFAULT_MAX_DEPTH,
};
use bohr_core::symbolic::{Sidedness, Word};
use clap::Subcommand;
use serde::Serialize;

use crate::error::CliError;
use crate::output::Emitter;

#[derive(Subcommand, Debug)]
pub enum HorseshoeCmd {
    /// Horseshoe with disjoint steps inside a binary cylinder.
    Build {
        #[arg(long)]
        cylinder: Word,
        #[arg(long)]
        two_sided: bool,
        /// Fail on rank-1 cylinders instead of pre-refining [a] to [a ā].
        #[arg(long)]
        reject_degenerate: bool,
    },
    /// Turns a horseshoe of order N into one with a full first-return certificate.
    Disjointify {
        /// Comma-separated generators of equal length.
        #[arg(long, value_delimiter = ',', conflicts_with = "order", required_unless_present = "order")]
        generators: Option<Vec<Word>>,
        /// Shorthand for the generators 0^N and 0^(N-1)1.
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        two_sided: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        max_depth: usize,
    },
    /// Re-checks a certificate (bare, or the `certificate` field of a report).
    Verify { certificate: String },
}

fn sidedness(two_sided: bool) -> Sidedness {
    if two_sided {
        Sidedness::TwoSided
    } else {
        Sidedness::OneSided
    }
}

#[derive(Serialize)]
struct BuildReport<'a> {
    cylinder: &'a Word,
    generators: &'a [Word],
    tau: usize,
    marker_len: Option<usize>,
    certificate: &'a DisjointStepsCertificate,
}

#[derive(Serialize)]
struct DisjointifyReport<'a> {
    input_generators: &'a [Word],
    input_order: usize,
    generators: &'a [Word],
    tau: usize,
    multiplier: usize,
    certificate: &'a DisjointStepsCertificate,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    valid: bool,
    tau: usize,
    generators: &'a [Word],
    full: bool,
}

pub fn run(cmd: HorseshoeCmd, out: &mut Emitter) -> Result<(), CliError> {
    match cmd {
        HorseshoeCmd::Build { cylinder, two_sided, reject_degenerate } => {
            let policy = if reject_degenerate { DegeneratePolicy::Reject } else { DegeneratePolicy::PreRefine };
            let (h, certificate) = build_horseshoe_in_cylinder(&cylinder, sidedness(two_sided), policy)?;
            out.report(&BuildReport {
                cylinder: &cylinder,
                generators: h.generators(),
                tau: h.order(),
                marker_len: h.marker_len(),
                certificate: &certificate,
            })
        }
        HorseshoeCmd::Disjointify { generators, order, two_sided, max_depth } => {
            let generators = match (generators, order) {
                (Some(g), _) => g,
                (None, Some(n)) if n >= 1 => {
                    let mut g1 = Word::constant(0, n - 1);
                    g1.push(1);
                    vec![Word::constant(0, n), g1]
                }
                _ => return Err(CliError::Malformed("--order must be at least 1".into())),
            };
            let input = CodedHorseshoe::new(generators, sidedness(two_sided))?;
            let certified = disjointify(&input, max_depth)?;
            out.report(&DisjointifyReport {
                input_generators: input.generators(),
                input_order: input.order(),
                generators: certified.horseshoe.generators(),
                tau: certified.order(),
                multiplier: certified.order() / input.order(),
                certificate: &certified.certificate,
            })
        }
        HorseshoeCmd::Verify { certificate } => {
            let text = out.input(&certificate)?;
            let mut value: serde_json::Value = serde_json::from_str(&text)?;
            if let Some(inner) = value.get_mut("certificate") {
                value = inner.take();
            }
            let cert = horseshoe::verify(&value.to_string())?;
            out.report(&VerifyReport { valid: true, tau: cert.tau, generators: &cert.generators, full: cert.is_full() })
        }
    }
}
