//! Coincidence fringes of the reference run at φ_s = 0 and φ_s = −π/2, with
//! the fitted visibility and phase of each.

use std::f64::consts::FRAC_PI_2;

use isoqubit::commands::{cmd_fringes, Mode};
use isoqubit::config::RunConfig;

fn main() -> isoqubit::error::Result<()> {
    let model = RunConfig::reference().resolve()?;
    let table = cmd_fringes(&model, &[0.0, -FRAC_PI_2], &model.fringe_grid, Mode::Analytic)?;
    println!("{:>8} {:>8} {:>12}", "phi_s", "phi_i", "P(coinc)");
    for row in &table.rows {
        println!("{:>8.4} {:>8.4} {:>12.5e}", row.phi_s, row.phi_i, row.value);
    }
    for summary in &table.fits {
        println!("φ_s = {:+.4}: V = {:.6}, phase = {:+.6}", summary.phi_s, summary.fit.visibility, summary.fit.phase);
    }
    Ok(())
}
