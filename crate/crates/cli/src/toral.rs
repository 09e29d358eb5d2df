use bohr_core::toral::{
    choose_h0, choose_plan, classify, lacunarity_and_split_check, spectral_analysis, verify_weighted_limit,
    Classification, FrequencyPlan, IntMatrix, LacunarityReport, RieszSpec, SpectralData, ToralAffineMap,
    WeightedLimitReport,
};
use bohr_core::weights::{generate, WeightSpec};
use clap::Subcommand;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::config::{seeded, MapConfig};
use crate::error::CliError;
use crate::output::Emitter;

/// Standard errors allowed between a Monte-Carlo estimate and its target.
pub const VERIFY_SIGMAS: f64 = 3.0;

#[derive(Subcommand, Debug)]
pub enum ToralCmd {
    /// Characteristic polynomial, spectrum, entropy and classification.
    Analyze {
        /// Matrix JSON (bare rows or a map with `matrix`), file or inline.
        #[arg(long)]
        matrix: String,
    },
    Classify {
        #[arg(long)]
        matrix: String,
    },
    /// Lacunary frequency plan: the smallest passing q, or a check of --q.
    Plan {
        #[arg(long)]
        matrix: String,
        #[arg(long, default_value_t = 8)]
        horizon: usize,
        #[arg(long)]
        q: Option<usize>,
        /// Comma-separated integer start frequency (default from the leading eigenvector).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        h0: Option<Vec<i64>>,
    },
    /// Monte-Carlo check of the weighted limit under a Riesz product.
    RieszVerify {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    spectral: &'a SpectralData,
    classification: &'a Classification,
}

#[derive(Serialize)]
struct PlanReport<'a> {
    plan: &'a FrequencyPlan,
    report: &'a LacunarityReport,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
enum CoefficientKind {
    Constant,
    #[default]
    Weighted,
}

fn eight() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RieszConfig {
    map: MapConfig,
    weight: WeightSpec,
    r: f64,
    /// Truncation depth K.
    depth: usize,
    n: usize,
    samples: usize,
    #[serde(default)]
    q: Option<usize>,
    #[serde(default)]
    h0: Option<Vec<i64>>,
    #[serde(default = "eight")]
    horizon: usize,
    #[serde(default)]
    coefficients: CoefficientKind,
    #[serde(default)]
    cross: Vec<usize>,
}

#[derive(Serialize)]
struct RieszReport<'a> {
    seed: u64,
    r: f64,
    coefficients: CoefficientKind,
    plan: &'a FrequencyPlan,
    lacunarity: &'a LacunarityReport,
    limit: &'a WeightedLimitReport,
    z_score: f64,
    consistent: bool,
}

fn matrix(out: &mut Emitter, arg: &str) -> Result<ToralAffineMap, CliError> {
    out.parse::<MapConfig>(arg)?.build()
}

fn plan_for(b: &IntMatrix, horizon: usize, q: Option<usize>, h0: Option<Vec<i64>>) -> Result<(FrequencyPlan, LacunarityReport), CliError> {
    let Some(q) = q else { return Ok(choose_plan(b, horizon)?) };
    let h0 = match h0 {
        Some(h) => h.into_iter().map(BigInt::from).collect(),
        None => choose_h0(&spectral_analysis(b)?),
    };
    let plan = FrequencyPlan::new(b.clone(), h0, q, horizon)?;
    let report = lacunarity_and_split_check(&plan)?;
    let plan = match (report.dissociate_ok && report.split_ok, report.min_gap()) {
        (true, Some(g)) => plan.with_delta(g / 2.0),
        _ => plan,
    };
    let report = LacunarityReport { delta: plan.delta, ..report };
    Ok((plan, report))
}

fn require_passing(report: &LacunarityReport) -> Result<(), CliError> {
    if !report.dissociate_ok {
        return Err(CliError::Failed(format!("frequencies are not dissociate at horizon {}", report.horizon)));
    }
    if !report.split_ok {
        return Err(CliError::Failed(format!("split q = {} is not separated at horizon {}", report.q, report.horizon)));
    }
    Ok(())
}

pub fn run(cmd: ToralCmd, out: &mut Emitter) -> Result<(), CliError> {
    match cmd {
        ToralCmd::Analyze { matrix: arg } => {
            let map = matrix(out, &arg)?;
            let spectral = spectral_analysis(&map.matrix)?;
            let classification = classify(&map.matrix)?;
            out.report(&AnalyzeReport { spectral: &spectral, classification: &classification })
        }
        ToralCmd::Classify { matrix: arg } => {
            let map = matrix(out, &arg)?;
            out.report(&classify(&map.matrix)?)
        }
        ToralCmd::Plan { matrix: arg, horizon, q, h0 } => {
            let map = matrix(out, &arg)?;
            let (plan, report) = plan_for(&map.matrix, horizon, q, h0)?;
            out.report(&PlanReport { plan: &plan, report: &report })?;
            require_passing(&report)
        }
        ToralCmd::RieszVerify { config, seed } => {
            let cfg: RieszConfig = out.parse(&config)?;
            out.seed(seed);
            let map = cfg.map.build()?;
            let spec = seeded(out, cfg.weight, Some(seed))?;
            let (plan, lacunarity) = plan_for(&map.matrix, cfg.horizon, cfg.q, cfg.h0)?;
            require_passing(&lacunarity)?;
            let top = cfg.cross.iter().copied().max().unwrap_or(0);
            let needed = (plan.q * cfg.n).max(plan.q * cfg.depth) + top + 1;
            let w = generate(&spec, needed)?;
            let riesz = match cfg.coefficients {
                CoefficientKind::Constant => RieszSpec::constant(plan.clone(), cfg.r, cfg.depth, seed)?,
                CoefficientKind::Weighted => RieszSpec::weighted(plan.clone(), cfg.r, cfg.depth, seed, &w, &map)?,
            };
            let limit = verify_weighted_limit(&map, &w, &riesz, cfg.n, cfg.samples, &cfg.cross)?;
            let consistent = limit.consistent(VERIFY_SIGMAS);
            out.report(&RieszReport {
                seed,
                r: cfg.r,
                coefficients: cfg.coefficients,
                plan: &plan,
                lacunarity: &lacunarity,
                limit: &limit,
                z_score: limit.z_score(),
                consistent,
            })?;
            let rows = limit
                .per_sample
                .iter()
                .enumerate()
                .map(|(i, a)| vec![i.to_string(), a.re.to_string(), a.im.to_string(), a.norm().to_string()]);
            out.table("toral-riesz-verify", &["sample", "re", "im", "abs"], rows)?;
            if !consistent {
                return Err(CliError::Failed(format!(
                    "estimate is {:.2} standard errors from the target (allowed {VERIFY_SIGMAS})",
                    limit.z_score()
                )));
            }
            Ok(())
        }
    }
}
