//! Second-order quasi-interpolation of scattered data built on the partition
//! of unity: error ratio ≈ 4 under h-halving.

use approxqi::nodes::{generate_perturbed_grid, IndexBox};
use approxqi::partition::{build_theta, PartitionConfig, TwoScaleGrid};
use approxqi::scattered::{build_pjk, PARTITION_CUTOFF};
use approxqi::star::StarParams;

fn sup_error(h: f64) -> approxqi::Result<f64> {
    let u = |x: f64| (2.0 * x).sin() / (1.0 + x * x);
    let m = (3.0 / h) as i64;
    let pad = (10.0 / h) as i64;
    let work = IndexBox::new(vec![-m - pad], vec![m + pad]);
    let nodes = generate_perturbed_grid(1, h, 0.5, &work, 0)?;
    let grid = TwoScaleGrid::single_scale(h, 2.0, work);
    let cfg = PartitionConfig {
        lstsq_cutoff: PARTITION_CUTOFF,
        ..PartitionConfig::default()
    };
    let (theta, _) = build_theta(&grid, &nodes, &cfg)?;
    let qi = build_pjk(&theta, &nodes, &StarParams::new(2))?;
    let data: Vec<f64> = nodes.points().map(|x| u(x[0])).collect();
    let mut worst = 0.0f64;
    for i in 0..=200 {
        let x = -1.0 + 2.0 * i as f64 / 200.0;
        worst = worst.max((qi.evaluate(&data, &[x])? - u(x)).abs());
    }
    Ok(worst)
}

fn main() -> approxqi::Result<()> {
    let e1 = sup_error(1.0 / 16.0)?;
    let e2 = sup_error(1.0 / 32.0)?;
    println!("h = 1/16: {e1:.3e}, h = 1/32: {e2:.3e}, ratio {:.2}", e1 / e2);
    Ok(())
}
