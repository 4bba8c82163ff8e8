//! Multi-indices, Hermite polynomials and the S_β polynomials that turn
//! x^β e^{−|x|²} into a differential operator applied to e^{−|x|²}.

use approxqi::gauss::{apply_diffop, GaussianTerm};
use approxqi::{enumerate_multiindices, hermite, s_beta, MultiIndex, Polynomial};

fn main() {
    let betas = enumerate_multiindices(2, 0, 2);
    println!("multi-indices of R^2 with |β| ≤ 2: {betas:?}");

    for k in 0..5 {
        let b = MultiIndex::new(vec![k]);
        println!("H_{k}(0.7) = {:+.6}   S_{k} = {:?}", hermite(&b, &[0.7]), s_beta(&b));
    }

    // x^β e^{−|x|²} = S_β(∂) e^{−|x|²}
    let beta = MultiIndex::new(vec![2, 1]);
    let g = GaussianTerm::gaussian(vec![0.0, 0.0], 1.0);
    let lhs = GaussianTerm::new(vec![0.0, 0.0], 1.0, Polynomial::monomial(beta.clone(), 1.0));
    let rhs = apply_diffop(&s_beta(&beta), 1.0, &g);
    for x in [[0.3, -0.4], [1.1, 0.2], [-0.8, 0.9]] {
        println!("x = {x:?}: x^β e^-|x|² = {:+.12e}, S_β(∂)e^-|x|² = {:+.12e}", lhs.value(&x), rhs.value(&x));
    }
}
