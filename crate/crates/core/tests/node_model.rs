mod common;

use approxqi::conditions::{check_conditions, condition4, ConditionParams};
use approxqi::nodes::{generate_perturbed_grid, IndexBox, NodeSet};
use approxqi::partition::{build_two_scale, generate_two_scale, Region};
use approxqi::star::{build_star, StarParams};
use approxqi::Error;
use common::*;
use proptest::prelude::*;

#[test]
fn one_node_per_ball_1d() {
    let h = 1.0 / 32.0;
    let nodes = generate_perturbed_grid(1, h, 0.5, &IndexBox::new(vec![0], vec![32]), 4).unwrap();
    assert_eq!(nodes.len(), 33);
    for i in 0..33 {
        let j = nodes.grid_index(i).unwrap()[0] as f64;
        let x = nodes.point(i)[0];
        assert!((x - h * j).abs() < h / 2.0);
    }
}

#[test]
fn seeded_generation_is_deterministic() {
    let bx = IndexBox::cube(2, -5, 5);
    let a = generate_perturbed_grid(2, 0.1, 0.5, &bx, 77).unwrap();
    let b = generate_perturbed_grid(2, 0.1, 0.5, &bx, 77).unwrap();
    assert!(a.points().zip(b.points()).all(|(p, q)| p == q));
}

#[test]
fn grid_2d_satisfies_condition_one() {
    let h = 1.0 / 16.0;
    let nodes = generate_perturbed_grid(2, h, 0.5, &IndexBox::cube(2, 0, 16), 1).unwrap();
    assert_eq!(nodes.len(), 289);
    let r = check_conditions(
        &nodes,
        &ConditionParams {
            h,
            kappa1: 0.5,
            index_box: IndexBox::cube(2, 0, 16),
            star: StarParams::new(2),
        },
        None,
    );
    assert!(r.condition1.holds);
}

#[test]
fn fourth_order_stencil_of_fig2() {
    let h = 1.0 / 32.0;
    let nodes = generate_perturbed_grid(1, h, 0.5, &IndexBox::new(vec![0], vec![32]), 2).unwrap();
    let params = StarParams::with_stencil(4, vec![vec![-2], vec![-1], vec![1]]);
    for owner in 2..31 {
        let s = build_star(&nodes, owner, h, &params).unwrap();
        assert_eq!(s.vandermonde.shape(), (3, 3));
        assert!(s.det.abs() > 1e-3);
    }
}

#[test]
fn duplicate_nodes_have_no_star() {
    let nodes = NodeSet::from_points(&[vec![0.0], vec![0.0]], 1.0).unwrap();
    let r = build_star(&nodes, 0, 1.0, &StarParams::new(2));
    assert!(matches!(r, Err(Error::StarNotFound { .. })), "{r:?}");
}

#[test]
fn hole_violates_condition_one() {
    let h = 1.0 / 16.0;
    let nodes = generate_perturbed_grid(2, h, 0.5, &IndexBox::cube(2, -10, 10), 3).unwrap();
    let holed = nodes.without(|_, x| (x[0] * x[0] + x[1] * x[1]).sqrt() < 3.0 * h);
    let r = check_conditions(
        &holed,
        &ConditionParams {
            h,
            kappa1: 0.5,
            index_box: IndexBox::cube(2, -6, 6),
            star: StarParams::new(2),
        },
        None,
    );
    assert!(!r.condition1.holds);
    let w = r.condition1.witness.unwrap();
    assert!(w.iter().all(|v| v.abs() <= 3), "{w:?}");
}

#[test]
fn two_scale_nodes_meet_condition_four() {
    let grid = build_two_scale(&Region::new(vec![-6.0], vec![6.0]), 1.0, 0.5, 2.0, IndexBox::new(vec![-20], vec![20])).unwrap();
    for seed in 0..5 {
        let nodes = generate_two_scale(&grid, 0.5, seed).unwrap();
        assert!(condition4(&nodes, &grid, 0.5).unwrap().holds);
    }
}

#[test]
fn node_csv_round_trip() {
    let nodes = generate_perturbed_grid(2, 0.25, 0.5, &IndexBox::cube(2, 0, 3), 9).unwrap();
    let mut buf = Vec::new();
    nodes.write_csv(&mut buf).unwrap();
    let back = NodeSet::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), nodes.len());
    assert!(back.points().zip(nodes.points()).all(|(a, b)| a == b));
    assert_eq!(back.scales(), nodes.scales());
}

#[test]
fn conditions_hold_over_fifty_seeds() {
    for seed in 0..50 {
        conditions_hold(1, 3, seed).unwrap();
        conditions_hold(2, 2, seed).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn taylor_data_are_recovered(n in 1usize..=2, order in 2u32..=4, seed in any::<u64>()) {
        let h = 0.1;
        let nodes = generate_perturbed_grid(n, h, 0.5, &IndexBox::cube(n, -6, 6), seed).unwrap();
        let owner = nodes.nearest(&vec![0.0; n]).unwrap();
        let res = lambda_reproduction(&nodes, owner, h, &StarParams::new(order), seed);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn stars_are_deterministic(n in 1usize..=2, seed in any::<u64>()) {
        let nodes = generate_perturbed_grid(n, 0.2, 0.5, &IndexBox::cube(n, -5, 5), seed).unwrap();
        let owner = nodes.nearest(&vec![0.0; n]).unwrap();
        let p = StarParams::new(3);
        let a = build_star(&nodes, owner, 0.2, &p).unwrap();
        let b = build_star(&nodes, owner, 0.2, &p).unwrap();
        prop_assert_eq!(a.members, b.members);
        prop_assert_eq!(a.inverse, b.inverse);
    }

    #[test]
    fn generation_stays_in_balls(n in 1usize..=3, kappa in 0.01f64..=0.5, seed in any::<u64>()) {
        let h = 0.3;
        let nodes = generate_perturbed_grid(n, h, kappa, &IndexBox::cube(n, -2, 2), seed).unwrap();
        for i in 0..nodes.len() {
            let j = nodes.grid_index(i).unwrap();
            let d: f64 = nodes.point(i).iter().zip(j).map(|(x, &k)| (x - h * k as f64).powi(2)).sum::<f64>().sqrt();
            prop_assert!(d <= kappa * h);
        }
    }
}
