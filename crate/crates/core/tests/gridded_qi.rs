mod common;

use approxqi::experiments::{run_table1, ExperimentConfig};
use approxqi::gridded::{blend_qi_1d, generating_eta, GriddedQI, GriddedQIConfig};
use approxqi::nodes::{generate_perturbed_grid, IndexBox, NodeSet};
use approxqi::quadrature::integrate;
use approxqi::star::StarParams;
use common::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn x2(x: f64) -> f64 {
    x * x
}

fn x4(x: f64) -> f64 {
    x.powi(4)
}

fn runge(x: f64) -> f64 {
    1.0 / (1.0 + x * x)
}

#[test]
fn generating_functions() {
    let e1 = generating_eta(1, 1);
    let mass = integrate(|x| e1.eval(&[x]), -12.0, 12.0, 1e-14, 0.0).unwrap();
    assert!((mass - 1.0).abs() < 1e-12);
    let e2 = generating_eta(2, 1);
    let m2 = integrate(|x| x * x * e2.eval(&[x]), -12.0, 12.0, 1e-12, 1e-14).unwrap();
    assert!(m2.abs() < 1e-10);
    let e = generating_eta(1, 2);
    for x in [[0.0f64, 0.0], [0.3, -1.1], [2.0, 0.5]] {
        let want = (-(x[0] * x[0] + x[1] * x[1])).exp() / PI;
        assert!((e.eval(&x) - want).abs() < 1e-15);
    }
}

#[test]
fn lambda_reproduces_constants_and_linears() {
    let h = 1.0 / 16.0;
    let nodes = generate_perturbed_grid(1, h, 0.5, &IndexBox::new(vec![-20], vec![36]), 5).unwrap();
    let qi = GriddedQI::new(&nodes, GriddedQIConfig::new(h, 2.0, 2), StarParams::new(2)).unwrap();
    let one = vec![1.0; nodes.len()];
    let lin: Vec<f64> = nodes.points().map(|x| 3.0 * x[0] - 0.25).collect();
    for j in -5..=20 {
        assert!((qi.lambda(&one, &[j]).unwrap() - 1.0).abs() < 1e-13);
        let want = 3.0 * h * j as f64 - 0.25;
        assert!((qi.lambda(&lin, &[j]).unwrap() - want).abs() < 1e-13);
    }
}

#[test]
fn lambda_is_point_value_on_exact_grid() {
    let h = 0.1;
    let pts: Vec<Vec<f64>> = (-10..=10).map(|j| vec![h * j as f64]).collect();
    let nodes = NodeSet::from_points(&pts, h).unwrap();
    let data: Vec<f64> = pts.iter().map(|x| runge(x[0]).exp()).collect();
    let qi = GriddedQI::new(&nodes, GriddedQIConfig::new(h, 2.0, 4), StarParams::new(4)).unwrap();
    for j in -6..=6 {
        let want = runge(h * j as f64).exp();
        assert!((qi.lambda(&data, &[j]).unwrap() - want).abs() < 1e-13);
    }
}

#[test]
fn constants_reach_the_saturation_floor() {
    let h = 1.0 / 32.0;
    let nodes = generate_perturbed_grid(1, h, 0.5, &IndexBox::new(vec![-20], vec![52]), 8).unwrap();
    let qi = GriddedQI::new(&nodes, GriddedQIConfig::new(h, 2.0, 2), StarParams::new(2)).unwrap();
    let one = vec![1.0; nodes.len()];
    let floor = 2.0 * (-2.0 * PI * PI).exp();
    for i in 0..=64 {
        let x = i as f64 / 64.0;
        let v = qi.evaluate(&one, &[x]).unwrap();
        assert!((v - 1.0).abs() <= floor * 1.01, "x={x} v-1={:e}", v - 1.0);
    }
}

#[test]
fn table1_seed0_matches_published_values() {
    let published = [
        (2.0, [-6.2e-3f64, -1.6e-3, -3.9e-4, -9.8e-5, -2.4e-5]),
        (4.0, [-1.3e-2, -3.3e-3, -8.3e-4, -2.1e-4, -5.2e-5]),
    ];
    let mut cfg = ExperimentConfig::defaults_for("table1").unwrap();
    cfg.seeds = 1;
    let t = run_table1(&cfg).unwrap();
    let (ds, errs) = (t.column("D").unwrap(), t.column("error").unwrap());
    for (d, want) in published {
        let got: Vec<f64> = ds.iter().zip(&errs).filter(|(x, _)| **x == d).map(|(_, e)| *e).collect();
        assert_eq!(got.len(), 5);
        for (g, w) in got.iter().zip(want) {
            assert!(g.signum() == w.signum() && (g / w).max(w / g) <= 2.5, "D={d}: {g:e} vs {w:e}");
        }
        for k in 1..5 {
            let r = got[k - 1] / got[k];
            assert!((3.3..=4.8).contains(&r), "D={d} ratio {r}");
        }
    }
}

#[test]
fn second_order_for_x2() {
    let o = gridded_order(&GriddedSetup::fig1(), x2, 11).unwrap();
    assert!((1.5..=2.5).contains(&o), "{o}");
}

#[test]
fn fourth_order_for_x4() {
    let o = gridded_order(&GriddedSetup::fig2(), x4, 11).unwrap();
    assert!((3.5..=4.5).contains(&o), "{o}");
}

#[test]
fn larger_d_does_not_beat_the_order_term() {
    let d2 = GriddedSetup::fig1();
    let d4 = GriddedSetup { d: 4.0, ..GriddedSetup::fig1() };
    for seed in 0..5 {
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let e2 = gridded_sup_error(&d2, h, 6.0, runge, seed).unwrap();
            let e4 = gridded_sup_error(&d4, h, 6.0, runge, seed).unwrap();
            let r = e4 / e2;
            assert!((1.0 / 3.0..=3.0).contains(&r), "seed {seed} h {h}: {e4:e}/{e2:e}");
        }
    }
}

#[test]
fn truncation_tail_is_gaussian_small() {
    // The first neglected term at ρ_cut = 4 is of size e^{-16}.
    for d in [2.0, 4.0] {
        for seed in 0..3 {
            let c = truncation_change(d, 4.0, 8.0, seed).unwrap();
            assert!(c <= (-16.0f64).exp(), "D={d}: {c:e}");
            let c = truncation_change(d, 6.0, 12.0, seed).unwrap();
            assert!(c <= 1e-10, "D={d}: {c:e}");
        }
    }
}

#[test]
fn blend_reproduces_linears_and_converges() {
    let hat = |nodes: &[f64], j: usize, t: f64| {
        // exact partition: piecewise-linear hat on the scaled nodes
        let y = nodes[j] + t;
        let left = if j > 0 { nodes[j - 1] } else { f64::NEG_INFINITY };
        let right = nodes.get(j + 1).copied().unwrap_or(f64::INFINITY);
        if y <= left || y >= right {
            0.0
        } else if y <= nodes[j] {
            if left.is_finite() { (y - left) / (nodes[j] - left) } else { 1.0 }
        } else if right.is_finite() {
            (right - y) / (right - nodes[j])
        } else {
            1.0
        }
    };
    let mk = |h: f64| -> Vec<f64> {
        let m = (1.0 / h).round() as i64;
        (-2..=m + 2).map(|j| j as f64 + 0.3 * ((j * 7919 % 13) as f64 / 13.0 - 0.5)).collect()
    };
    let err = |h: f64, u: &dyn Fn(f64) -> f64| {
        let xs = mk(h);
        let vals: Vec<f64> = xs.iter().map(|&x| u(h * x)).collect();
        (0..=200)
            .map(|i| {
                let x = i as f64 / 200.0;
                (blend_qi_1d(&xs, &vals, |j, t| hat(&xs, j, t), h, x) - u(x)).abs()
            })
            .fold(0.0, f64::max)
    };
    assert!(err(0.1, &|_| 1.0) < 1e-14);
    assert!(err(0.1, &|x| 2.0 * x - 1.0) < 1e-13);
    let r = err(1.0 / 32.0, &x2) / err(1.0 / 64.0, &x2);
    assert!((3.5..=4.5).contains(&r), "{r}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evaluation_is_linear_in_data(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0, x in 0.0f64..1.0) {
        let h = 1.0 / 16.0;
        let nodes = generate_perturbed_grid(1, h, 0.5, &IndexBox::new(vec![-16], vec![32]), seed).unwrap();
        let qi = GriddedQI::new(&nodes, GriddedQIConfig::new(h, 2.0, 2), StarParams::new(2)).unwrap();
        let u: Vec<f64> = nodes.points().map(|p| runge(p[0])).collect();
        let v: Vec<f64> = nodes.points().map(|p| p[0].sin()).collect();
        let w: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect();
        let lhs = qi.evaluate(&w, &[x]).unwrap();
        let rhs = a * qi.evaluate(&u, &[x]).unwrap() + b * qi.evaluate(&v, &[x]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn linears_are_reproduced_to_the_floor(seed in any::<u64>(), a in -2.0f64..2.0, x in 0.0f64..1.0) {
        let h = 1.0 / 16.0;
        let nodes = generate_perturbed_grid(1, h, 0.5, &IndexBox::new(vec![-16], vec![32]), seed).unwrap();
        let qi = GriddedQI::new(&nodes, GriddedQIConfig::new(h, 2.0, 2), StarParams::new(2)).unwrap();
        let u: Vec<f64> = nodes.points().map(|p| a * p[0] + 1.0).collect();
        let err = (qi.evaluate(&u, &[x]).unwrap() - (a * x + 1.0)).abs();
        // Poisson-summation floor of the constant and linear parts
        prop_assert!(err <= 1e-7 * (1.0 + a.abs()), "{:e}", err);
    }
}
