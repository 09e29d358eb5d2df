use bohr_core::birkhoff::ue_control;
use clap::Subcommand;

use crate::config::GridArgs;
use crate::error::CliError;
use crate::output::Emitter;

#[derive(Subcommand, Debug)]
pub enum ControlCmd {
    /// Phase-weighted averages of e^{2πihx} along a circle rotation against
    /// the geometric-sum bound.
    Rotation {
        /// Rotation number; the default is the golden mean (√5 − 1)/2.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        h: i64,
        #[command(flatten)]
        grid: GridArgs,
    },
}

pub fn run(cmd: ControlCmd, out: &mut Emitter) -> Result<(), CliError> {
    match cmd {
        ControlCmd::Rotation { alpha, beta, h, grid } => {
            let alpha = alpha.unwrap_or_else(|| (5f64.sqrt() - 1.0) / 2.0);
            let grid = grid.resolve(out)?;
            let report = ue_control(alpha, beta, h, &grid)?;
            out.report(&report)?;
            let rows = (0..grid.len())
                .map(|i| vec![grid[i].to_string(), report.moduli[i].to_string(), report.ratios[i].to_string()]);
            out.table("control-rotation", &["N", "abs", "ratio"], rows)?;
            if !report.bound_holds {
                return Err(CliError::Failed(format!("max ratio {} exceeds 1", report.max_ratio)));
            }
            Ok(())
        }
    }
}
