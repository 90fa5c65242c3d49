//! Mode overlaps, interaction strengths and the modulator frequency plan of
//! the reference run.

use isoqubit::config::RunConfig;
use isoqubit::ensemble::angular_to_mhz;

fn main() -> isoqubit::error::Result<()> {
    let model = RunConfig::reference().resolve()?;
    let p = &model.params;
    println!("overlap A:   85Rb {:.6e}  87Rb {:.6e}", p.a_85, p.a_87);
    println!("coupling χ:  85Rb {:.6}  87Rb {:.6}  total {:.6}", p.chi_85, p.chi_87, p.chi_total);
    println!("mixing η = {:.6} rad, cos²η = {:.6}", p.eta, p.eta.cos().powi(2));
    println!("write sidebands: n_w = {:.4e} / {:.4e}", model.write.n_w_85, model.write.n_w_87);
    println!(
        "modulators: δω_w = {:.3} MHz, δω_s = {:.3} MHz, δω_i = {:.3} MHz",
        angular_to_mhz(model.plan.delta_omega_w),
        angular_to_mhz(model.plan.delta_omega_s),
        angular_to_mhz(model.plan.delta_omega_i)
    );
    Ok(())
}
