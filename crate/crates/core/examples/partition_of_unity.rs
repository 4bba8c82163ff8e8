//! Builds the approximate partition of unity Θ on a perturbed 1-D layout and
//! shows how sup|Θ − 1| falls with the polynomial degree L until it reaches
//! the saturation level of the Gaussian series.

use approxqi::nodes::{generate_perturbed_grid, IndexBox};
use approxqi::partition::{build_theta, saturation_reference, theta_scan, PartitionConfig, TwoScaleGrid};

fn main() -> approxqi::Result<()> {
    let work = IndexBox::new(vec![-20], vec![20]);
    let nodes = generate_perturbed_grid(1, 1.0, 0.5, &work, 0)?;
    let grid = TwoScaleGrid::single_scale(1.0, 2.0, work);
    println!("saturation at x = 0: {:.3e}", saturation_reference(2.0, 8)(0.0));
    for degree in 1..=4 {
        let cfg = PartitionConfig {
            degree,
            count: 5,
            ..PartitionConfig::default()
        };
        let (theta, diag) = build_theta(&grid, &nodes, &cfg)?;
        let scan = theta_scan(&theta, &[-5.0], &[5.0], 1001)?;
        println!(
            "L = {degree}: sup|Θ-1| = {:.3e}, {} local systems, max Q/bound {:.2e}",
            scan.sup, diag.local_systems, diag.max_q_over_bound
        );
    }
    Ok(())
}
