//! Closed-form Gaussian inner products and the kernels B and C of the local
//! systems, checked against direct quadrature.

use approxqi::gauss::{gaussian_moment, inner_product, kernel_b, kernel_c, GaussianTerm};
use approxqi::quadrature::integrate;
use approxqi::{MultiIndex, Polynomial};

fn main() -> approxqi::Result<()> {
    let a = GaussianTerm::new(vec![0.2], 1.0, Polynomial::from_terms(1, [(MultiIndex::new(vec![1]), 1.0)]));
    let b = GaussianTerm::new(vec![-0.5], 0.5, Polynomial::constant(1, 2.0));
    let exact = inner_product(&a, &b);
    let numeric = integrate(|t| a.value(&[t]) * b.value(&[t]), -12.0, 12.0, 1e-13, 1e-15)?;
    println!("<a, b> closed form {exact:+.15e}, quadrature {numeric:+.15e}");

    for k in 0..5 {
        let m = gaussian_moment(&MultiIndex::new(vec![k]), 1.0);
        println!("∫ t^{k} e^(-t²) dt = {m:.12}");
    }

    let zero = MultiIndex::new(vec![0, 0]);
    let e1 = MultiIndex::new(vec![1, 0]);
    let x = [0.3, -0.1];
    let y = [-0.2, 0.4];
    println!("B_(0,0)(x, y) = {:.12}", kernel_b(&zero, &zero, &x, &y));
    println!("B_(e1,e1)(x, y) = {:.12}", kernel_b(&e1, &e1, &x, &y));
    println!("C_(e1,0)(x, y) with D = 2, D0 = 1.5: {:.12}", kernel_c(&e1, &zero, &x, &y, 2.0, 1.5)?);
    Ok(())
}
