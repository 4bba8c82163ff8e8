//! Cubature of ∫ g(|x − y|) u(y) dy by integrating the quasi-interpolant
//! exactly atom by atom, with two evaluation paths for each atom.

use approxqi::cubature::{
    atom_convolution, atom_convolution_bessel, cubature_eval, RadialKernel, TensorRule, DEFAULT_GH_ORDER,
};
use approxqi::nodes::{generate_perturbed_grid, IndexBox};
use approxqi::partition::{build_theta, PartitionConfig, TwoScaleGrid};
use approxqi::scattered::{build_pjk, PARTITION_CUTOFF};
use approxqi::star::StarParams;
use approxqi::Polynomial;

fn main() -> approxqi::Result<()> {
    let kernel = RadialKernel::gauss();
    let one = Polynomial::constant(1, 1.0);
    let gh = atom_convolution(&kernel, &[0.0], 0.25, &one, &[0.4], &TensorRule::new(1, 20));
    let bessel = atom_convolution_bessel(&kernel, &[0.0], 0.25, 1.0, &[0.4])?;
    println!("degree-0 atom: Gauss-Hermite {gh:.15e}, Bessel {bessel:.15e}");

    let h = 1.0 / 16.0;
    let work = IndexBox::new(vec![-200], vec![200]);
    let nodes = generate_perturbed_grid(1, h, 0.5, &work, 0)?;
    let grid = TwoScaleGrid::single_scale(h, 2.0, work);
    let cfg = PartitionConfig {
        lstsq_cutoff: PARTITION_CUTOFF,
        ..PartitionConfig::default()
    };
    let (theta, _) = build_theta(&grid, &nodes, &cfg)?;
    let qi = build_pjk(&theta, &nodes, &StarParams::new(2))?;
    let data: Vec<f64> = nodes.points().map(|x| (-x[0] * x[0]).exp()).collect();
    for x in [-0.5, 0.0, 0.5] {
        let v = cubature_eval(&qi, &data, &kernel, &[x], DEFAULT_GH_ORDER)?;
        let exact = (std::f64::consts::PI / 2.0).sqrt() * (-x * x / 2.0).exp();
        println!("x = {x:+.1}: cubature {v:.10}, exact {exact:.10}, error {:.2e}", v - exact);
    }
    Ok(())
}
