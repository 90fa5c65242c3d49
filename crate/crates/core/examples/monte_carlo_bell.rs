//! Simulated Bell measurement at the reference statistics, with and without
//! subtraction of accidental coincidences.

use std::time::Instant;

use isoqubit::commands::simulate;
use isoqubit::config::RunConfig;
use isoqubit::montecarlo::estimate_bell;

fn main() -> isoqubit::error::Result<()> {
    let model = RunConfig::reference().resolve()?;
    let start = Instant::now();
    let ledger = simulate(&model, &model.angles.settings())?;
    println!("{} trials per setting in {:.2} s", model.trials.n_trials, start.elapsed().as_secs_f64());
    for subtract in [true, false] {
        let bell = estimate_bell(&ledger, &model.angles, subtract)?;
        let label = if subtract { "accidentals subtracted" } else { "raw counts" };
        println!("{label:>22}: S = {:.3} ± {:.3}", bell.s, bell.s_error);
        for c in bell.e_values {
            println!("{:>22}  E = {:+.3} ± {:.3}", "", c.e, c.stderr);
        }
    }
    let mut csv = Vec::new();
    ledger.write_csv(&mut csv)?;
    println!("\n{}", String::from_utf8_lossy(&csv).lines().take(5).collect::<Vec<_>>().join("\n"));
    Ok(())
}
