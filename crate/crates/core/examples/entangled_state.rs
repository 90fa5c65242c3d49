//! Builds the truncated two-mode squeezed state and lists its largest
//! amplitudes in the mode order (signal85, signal87, spin85, spin87).

use std::f64::consts::FRAC_PI_4;

use isoqubit::ensemble::InteractionParams;
use isoqubit::quantum::{build_entangled_state, default_cutoff, DEFAULT_LEAKAGE_BOUND};

fn main() -> isoqubit::error::Result<()> {
    let params = InteractionParams::from_chi_eta(0.2, FRAC_PI_4)?;
    let n_max = default_cutoff(params.chi_total, DEFAULT_LEAKAGE_BOUND)?;
    let state = build_entangled_state(&params, n_max)?;
    println!("n_max = {n_max}, norm² = {:.15}, leakage = {:.3e}", state.norm_sqr(), state.leakage());

    let mut amplitudes: Vec<_> = state.iter().map(|(occ, a)| (*occ, a.norm())).collect();
    amplitudes.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (occ, a) in amplitudes.iter().take(8) {
        println!("{occ:?}  {a:.6e}");
    }
    Ok(())
}
