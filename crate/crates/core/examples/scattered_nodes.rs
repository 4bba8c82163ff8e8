//! Perturbed grids, stars and the node-set conditions.

use approxqi::conditions::{check_conditions, ConditionParams};
use approxqi::nodes::{generate_perturbed_grid, IndexBox};
use approxqi::star::{build_star, StarParams};

fn main() -> approxqi::Result<()> {
    let h = 1.0 / 16.0;
    let nodes = generate_perturbed_grid(2, h, 0.5, &IndexBox::cube(2, -20, 20), 7)?;
    println!("{} nodes, first {:?}", nodes.len(), nodes.point(0));

    let params = StarParams::new(3);
    let owner = nodes.nearest(&[0.0, 0.0]).expect("non-empty");
    let star = build_star(&nodes, owner, h, &params)?;
    println!("star of node {owner}: members {:?}, det V = {:.4}", star.members, star.det);

    let report = check_conditions(
        &nodes,
        &ConditionParams {
            h,
            kappa1: 0.5,
            index_box: IndexBox::cube(2, -16, 16),
            star: params,
        },
        None,
    );
    println!("condition 1: {} (worst gap {:.3} h)", report.condition1.holds, report.condition1.worst_gap);
    println!("condition 2a: {} (min |det| {:.3})", report.condition2a.holds, report.condition2a.min_det);
    println!("condition 2b: {} uncovered nodes", report.condition2b_uncovered.len());
    println!("condition 3: {}", report.condition3.holds);

    // punch a hole: condition 1 now fails with a witness
    let holed = nodes.without(|_, x| x[0].abs() < 0.1 && x[1].abs() < 0.1);
    let r = check_conditions(
        &holed,
        &ConditionParams {
            h,
            kappa1: 0.5,
            index_box: IndexBox::cube(2, -16, 16),
            star: StarParams::new(2),
        },
        None,
    );
    println!("with a hole: condition 1 {} witness {:?}", r.condition1.holds, r.condition1.witness);
    Ok(())
}
