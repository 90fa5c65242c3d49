//! Runs the configuration checks on the reference run and on a run with a
//! strong write pulse, where the lowest-order rates become unreliable.

use isoqubit::commands::cmd_validate;
use isoqubit::config::RunConfig;

fn main() -> isoqubit::error::Result<()> {
    let reference = RunConfig::reference();
    for (label, config) in [("reference", reference.clone()), ("χ = 0.5", reference.with_parameter("write.target_chi", 0.5)?)] {
        println!("{label} (config {})", &config.hash()[..12]);
        for check in cmd_validate(&config).checks {
            println!("  {:<28} {:?}  {}", check.name, check.status, check.detail);
        }
    }
    Ok(())
}
