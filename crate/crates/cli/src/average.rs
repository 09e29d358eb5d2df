use bohr_core::birkhoff::{
    fullshift_pair, lift_consistency, weighted_average_series, AverageSeries, LiftReport, Point, SystemHandle,
};
use bohr_core::horseshoe::{self, CertifiedHorseshoe, CodedHorseshoe};
use bohr_core::weights::{generate, nontriviality_index, NontrivialityIndex, WeightSpec};
use clap::Subcommand;
use serde::Serialize;

use crate::config::{seeded, weight_spec, GridArgs, RunConfig};
use crate::error::CliError;
use crate::output::Emitter;

#[derive(Subcommand, Debug)]
pub enum AverageCmd {
    /// Weighted averages for a system/observable/point/weight config.
    Run {
        #[arg(long)]
        config: String,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// The full-shift pair correlated to the real part of a weight.
    Pair {
        #[arg(long)]
        weight: String,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Lifts the correlated pair of a certified horseshoe to the full shift;
    /// the grid counts coded steps.
    Lift {
        /// Certificate JSON, bare or inside a `horseshoe` report.
        #[arg(long)]
        certificate: String,
        #[arg(long)]
        weight: String,
        #[command(flatten)]
        grid: GridArgs,
        /// Generators read by the lifted observable.
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Serialize)]
struct PairReport<'a> {
    spec: &'a WeightSpec,
    series: &'a AverageSeries,
    /// Cesàro averages of |Re w| (or |Im w|), which the series equals.
    cesaro: &'a NontrivialityIndex,
}

fn series_rows(series: &AverageSeries) -> impl Iterator<Item = Vec<String>> + '_ {
    series.grid.iter().zip(&series.averages).map(|(n, a)| vec![n.to_string(), a.re.to_string(), a.im.to_string(), a.norm().to_string()])
}

const SERIES_HEADER: [&str; 4] = ["N", "re", "im", "abs"];

pub fn run(cmd: AverageCmd, out: &mut Emitter) -> Result<(), CliError> {
    match cmd {
        AverageCmd::Run { config, grid, seed } => {
            let cfg: RunConfig = out.parse(&config)?;
            let spec = seeded(out, cfg.weight, seed)?;
            let grid = grid.resolve(out)?;
            let w = generate(&spec, *grid.last().expect("non-empty grid"))?;
            let sys = cfg.system.build()?;
            let x = cfg.point.build()?;
            let series = weighted_average_series(&sys, &cfg.observable, &x, &w, &grid)?;
            out.report(&series)?;
            out.table("average-run", &SERIES_HEADER, series_rows(&series))
        }
        AverageCmd::Pair { weight, grid, seed } => {
            let spec = weight_spec(out, &weight, seed)?;
            let grid = grid.resolve(out)?;
            let w = generate(&spec, *grid.last().expect("non-empty grid"))?;
            let pair = fullshift_pair(&w)?;
            let series = weighted_average_series(
                &SystemHandle::FullShift { symbols: 2 },
                &pair.observable,
                &Point::Symbolic(pair.point.clone()),
                &pair.weight,
                &grid,
            )?;
            let cesaro = nontriviality_index(&pair.weight, &grid)?;
            out.report(&PairReport { spec: &spec, series: &series, cesaro: &cesaro })?;
            out.table("average-pair", &SERIES_HEADER, series_rows(&series))
        }
        AverageCmd::Lift { certificate, weight, grid, depth, seed } => {
            let text = out.input(&certificate)?;
            let mut value: serde_json::Value = serde_json::from_str(&text)?;
            if let Some(inner) = value.get_mut("certificate") {
                value = inner.take();
            }
            let certificate = horseshoe::verify(&value.to_string())?;
            let h = CodedHorseshoe::new(certificate.generators.clone(), certificate.sidedness)?;
            let cert = CertifiedHorseshoe { horseshoe: h, certificate };
            let spec = weight_spec(out, &weight, seed)?;
            let grid = grid.resolve(out)?;
            let n_max = *grid.last().expect("non-empty grid");
            let w = generate(&spec, cert.order() * (n_max + 1))?;
            let report: LiftReport = lift_consistency(&cert, &w, depth, &grid)?;
            out.report(&report)?;
            let rows = (0..grid.len()).map(|i| {
                let (a, c) = (report.ambient[i], report.coded_scaled[i]);
                vec![
                    grid[i].to_string(),
                    a.re.to_string(),
                    a.im.to_string(),
                    c.re.to_string(),
                    c.im.to_string(),
                    report.differences[i].to_string(),
                    report.bounds[i].to_string(),
                ]
            });
            out.table("average-lift", &["N", "ambient_re", "ambient_im", "coded_re", "coded_im", "diff", "bound"], rows)?;
            if !report.holds {
                return Err(CliError::Failed("lifted averages leave the 2 sup|g| max|w| / N band".into()));
            }
            Ok(())
        }
    }
}
