//! Clebsch-Gordan coefficients and the write-transition coupling products
//! of both rubidium isotopes.

use isoqubit::angular::{clebsch_gordan, CouplingTable, HalfInt, Helicity};
use isoqubit::config::RunConfig;

fn main() -> isoqubit::error::Result<()> {
    let half = HalfInt::from_twice(1);
    let one = HalfInt::from_int(1);
    let triplet = clebsch_gordan(half, half, one, half, -half, HalfInt::ZERO)?;
    println!("<1/2 1/2; 1/2 -1/2 | 1 0> = {triplet:.15}");

    let model = RunConfig::reference().resolve()?;
    for (name, table) in [("85Rb", &model.coupling_85), ("87Rb", &model.coupling_87)] {
        println!("\n{name}: cos²θ = {:.15}", table.cos2_theta()?);
        print_table(table);
    }
    Ok(())
}

fn print_table(table: &CouplingTable) {
    for ((m, alpha), x) in &table.x_values {
        if *x != 0.0 {
            let sign = if *alpha == Helicity::Plus { "+" } else { "-" };
            println!("  X(m = {m:>4}, α = {sign}) = {x:+.12}");
        }
    }
}
