//! Correlations and the CHSH parameter at the canonical angles, for the
//! reference fringe and for a few reduced fringe amplitudes.

use isoqubit::bell::{analytic_bell, BellAngles};
use isoqubit::quantum::FringeModel;

fn main() -> isoqubit::error::Result<()> {
    for upsilon in [1.0, 0.86, 0.75, 1.0 / 2f64.sqrt(), 0.5] {
        let fringe = FringeModel::new(upsilon, 0.0)?;
        let result = analytic_bell(&fringe, &BellAngles::canonical(fringe.phi_0));
        let e: Vec<String> = result.e_values.iter().map(|c| format!("{:+.4}", c.e)).collect();
        let verdict = if result.violates_classical_bound() { "violates" } else { "respects" };
        println!("Υ = {upsilon:.4}: E = [{}], S = {:.4} ({verdict} |S| ≤ 2)", e.join(", "), result.s);
    }
    Ok(())
}
