//! Second cumulant of an order-2 tuple sum on a two-atom space, with the
//! per-partition breakdown. Run: cargo run --example cumulant

use poisson_chaos::error::Error;
use poisson_chaos::measure::{Kernel, MeasureSpace, Method};
use poisson_chaos::moments::joint_cumulant;

fn main() -> Result<(), Error> {
    let space = MeasureSpace::finite_atomic("pair", vec![0.6, 0.4])?;
    let k = Kernel::constant(2, 1.0);
    let cum = joint_cumulant(&space, 1.5, &[k.clone(), k], Method::Exact)?;
    println!("kappa_2 = {:.6}", cum.value);
    for term in &cum.terms {
        println!("  {} ({} blocks): {:.6}", term.partition, term.blocks, term.value);
    }
    Ok(())
}
