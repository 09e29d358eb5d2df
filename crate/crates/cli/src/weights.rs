use bohr_core::weights::{best_residue, generate, nontriviality_index, NontrivialityIndex, ResidueAverages, WeightSpec};
use clap::Subcommand;
use serde::Serialize;

use crate::config::{weight_spec, GridArgs};
use crate::error::CliError;
use crate::output::Emitter;

#[derive(Subcommand, Debug)]
pub enum WeightsCmd {
    /// Generates w_0..w_{n-1}; CSV columns n, re, im.
    Gen {
        /// Weight spec: a JSON file or inline JSON.
        #[arg(long)]
        weight: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cesàro averages of |w_n|, and per-residue averages with --q.
    Index {
        #[arg(long)]
        weight: String,
        #[command(flatten)]
        grid: GridArgs,
        /// Residue modulus; weights are then generated up to q·N.
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Serialize)]
struct GenReport<'a> {
    spec: &'a WeightSpec,
    n: usize,
    bound: f64,
    max_abs: f64,
}

#[derive(Serialize)]
struct IndexReport<'a> {
    spec: &'a WeightSpec,
    nontriviality: &'a NontrivialityIndex,
    residues: Option<ResidueAverages>,
}

pub fn run(cmd: WeightsCmd, out: &mut Emitter) -> Result<(), CliError> {
    match cmd {
        WeightsCmd::Gen { weight, n, seed } => {
            let spec = weight_spec(out, &weight, seed)?;
            let w = generate(&spec, n)?;
            out.report(&GenReport { spec: &spec, n, bound: spec.bound(), max_abs: w.max_abs() })?;
            let rows = w.values().iter().enumerate().map(|(i, z)| vec![i.to_string(), z.re.to_string(), z.im.to_string()]);
            out.table("weights-gen", &["n", "re", "im"], rows)
        }
        WeightsCmd::Index { weight, grid, q, seed } => {
            let spec = weight_spec(out, &weight, seed)?;
            let grid = grid.resolve(out)?;
            let n_max = *grid.last().expect("non-empty grid");
            let w = generate(&spec, n_max * q.unwrap_or(1))?;
            let index = nontriviality_index(&w, &grid)?;
            let residues = q.map(|q| best_residue(&w, q, &grid)).transpose()?;
            out.report(&IndexReport { spec: &spec, nontriviality: &index, residues: residues.clone() })?;
            let q = residues.as_ref().map_or(0, |r| r.q);
            let mut header = vec!["N".to_string(), "average".into(), "tail_max".into()];
            header.extend((0..q).map(|j| format!("residue_{j}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows = (0..grid.len()).map(|i| {
                let mut row = vec![grid[i].to_string(), index.averages[i].to_string(), index.tail_maxima[i].to_string()];
                if let Some(r) = &residues {
                    row.extend(r.averages.iter().map(|a| a[i].to_string()));
                }
                row
            });
            out.table("weights-index", &header, rows)
        }
    }
}
