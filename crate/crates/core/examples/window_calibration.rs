//! Chooses the coincidence window so that the fringe minimum sits a given
//! factor above the accidental floor set by the detector singles rates.

use isoqubit::config::RunConfig;
use isoqubit::montecarlo::{calibrate_window, floor_ratio};

fn main() -> isoqubit::error::Result<()> {
    let model = RunConfig::reference().resolve()?;
    let background = model.background;
    println!("singles: D1 {:?} Hz, D2 {:?} Hz", background.rates_d1_hz, background.rates_d2_hz);
    for target in [1.5, 2.0, 2.5, 4.0, 10.0] {
        let window = calibrate_window(&model.params, &model.budget, &model.fringe, &background, target)?;
        let check = floor_ratio(&model.params, &model.budget, &model.fringe, &background.with_window(window));
        println!("minimum/floor {target:>5.1}: window {window:.4e} s (ratio {check:.6})");
    }
    Ok(())
}
