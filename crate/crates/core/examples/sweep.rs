//! Sweeps the fringe amplitude through the classical threshold and writes
//! the table as CSV.

use isoqubit::commands::{cmd_sweep, linspace, Mode};
use isoqubit::config::RunConfig;
use isoqubit::output::{render_csv, Payload};

fn main() -> isoqubit::error::Result<()> {
    let config = RunConfig::reference();
    let table = cmd_sweep(&config, "fringe_override.upsilon", &linspace(0.5, 1.0, 6), Mode::Analytic)?;
    print!("{}", render_csv(&Payload::Sweep(table))?);
    Ok(())
}
