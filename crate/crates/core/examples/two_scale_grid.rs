//! Two-scale grids: refinement coefficients, the reference function Θ_G on a
//! grid refined inside Ω, and a partition of unity on matching nodes.

use approxqi::nodes::IndexBox;
use approxqi::partition::{build_theta, build_two_scale, generate_two_scale, refinement_coeffs, theta_scan, PartitionConfig, Region};

fn main() -> approxqi::Result<()> {
    let r = refinement_coeffs(0.5, 2.0, 1)?;
    println!("|S| = {}, tail {:.3e} < bound {:.3e}", r.indices.len(), r.tail, r.tail_bound);

    let omega = Region::new(vec![-10.0], vec![10.0]);
    let grid = build_two_scale(&omega, 1.0, 0.5, 2.0, IndexBox::new(vec![-30], vec![30]))?;
    let reference = grid.reference_function();
    let mut sup = 0.0f64;
    for i in 0..=1000 {
        let x = -12.0 + 24.0 * i as f64 / 1000.0;
        sup = sup.max((reference(&[x]) - 1.0).abs());
    }
    println!("Z2 has {} coarse cells, sup|Θ_G - 1| on [-12, 12] = {sup:.3e}", grid.z2.len());

    let nodes = generate_two_scale(&grid, 0.5, 3)?;
    let (theta, diag) = build_theta(&grid, &nodes, &PartitionConfig::default())?;
    let scan = theta_scan(&theta, &[-12.0], &[12.0], 2401)?;
    println!("{} nodes, {} local systems, sup|Θ - 1| = {:.3e}", nodes.len(), diag.local_systems, scan.sup);
    Ok(())
}
