//! Propagates the state through the detection losses and compares the exact
//! coincidence and singles probabilities with the lowest-order expressions.

use std::f64::consts::{FRAC_PI_4, PI};

use isoqubit::ensemble::InteractionParams;
use isoqubit::quantum::{
    build_entangled_state, coincidence_rate_perturbative, default_cutoff, signal_singles_perturbative, DetectedState,
    EfficiencyBudget, FringeModel, Mode, DEFAULT_LEAKAGE_BOUND,
};

fn main() -> isoqubit::error::Result<()> {
    let budget = EfficiencyBudget::uniform(0.5);
    let fringe = FringeModel::new(0.86, 0.0)?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "chi", "exact max", "approx max", "exact min", "approx min");
    for chi in [0.02, 0.05, 0.1, 0.2, 0.3] {
        let params = InteractionParams::from_chi_eta(chi, FRAC_PI_4)?;
        let state = build_entangled_state(&params, default_cutoff(chi, DEFAULT_LEAKAGE_BOUND)?)?;
        let detected = DetectedState::new(&state, &budget)?;
        let rate = |delta: f64| {
            (detected.coincidence_rate(&fringe, 0.0, delta), coincidence_rate_perturbative(&params, &budget, &fringe, 0.0, delta))
        };
        let (top, bottom) = (rate(0.0), rate(PI));
        println!("{chi:>6} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}", top.0, top.1, bottom.0, bottom.1);
        if chi == 0.1 {
            println!(
                "        signal singles {:.4e} (lowest order {:.4e})",
                detected.signal_singles(),
                signal_singles_perturbative(&params, &budget)
            );
        }
    }

    let params = InteractionParams::from_chi_eta(0.1, FRAC_PI_4)?;
    let rho = build_entangled_state(&params, 6)?.to_density().apply_loss(Mode::Spin85, 0.25)?;
    println!("\nafter 25% retrieval efficiency on spin85: P(1 excitation) = {:.6e}", rho.population(Mode::Spin85, 1));
    Ok(())
}
