//! Independent reference computations for derived quantities.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;

use spectral_bounds::analytic::{analytic_spectrum, box_spectrum};
use spectral_bounds::bounds;
use spectral_bounds::fdm::{self, DiscreteLaplacian, SolverConfig};
use spectral_bounds::geometry::{parse_mask, DomainSpec};
use spectral_bounds::special;

/// `J_n(x)` from its integral representation, trapezoid rule.
fn bessel_integral(n: u32, x: f64) -> f64 {
    let m = 600;
    let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
    let h = PI / m as f64;
    let mut s = 0.5 * (f(0.0) + f(PI));
    for i in 1..m {
        s += f(i as f64 * h);
    }
    s * h / PI
}

#[test]
fn bessel_values_match_integral_representation() {
    for n in 0..=6 {
        for i in 0..=80 {
            let x = 0.25 * i as f64;
            let a = special::bessel_j(n as f64, x).unwrap();
            let b = bessel_integral(n, x);
            assert!((a - b).abs() < 1e-12, "J_{n}({x}): {a} vs {b}");
        }
    }
}

#[test]
fn bessel_zeros_are_roots() {
    for nu in [0.0, 0.5, 1.0, 2.5, 7.0, 10.0] {
        let table = special::bessel_zeros(nu, 100).unwrap();
        for z in table.zeros {
            assert!(special::bessel_j(nu, z).unwrap().abs() <= 1e-10, "nu = {nu}, z = {z}");
        }
    }
    // half-integer order: J_{1/2}(x) ∝ sin x / √x
    for k in 1..=20 {
        let z = special::bessel_zero(0.5, k).unwrap();
        assert!((z - k as f64 * PI).abs() < 1e-10);
    }
}

#[test]
fn box_spectrum_matches_enumeration() {
    let lengths = [1.0, 1.3, 0.7];
    let mut all = Vec::new();
    for i in 1..=30 {
        for j in 1..=30 {
            for k in 1..=30 {
                let q = |m: usize, a: f64| (m as f64 * PI / a).powi(2);
                all.push(q(i, lengths[0]) + q(j, lengths[1]) + q(k, lengths[2]));
            }
        }
    }
    all.sort_by(f64::total_cmp);
    let s = box_spectrum(&lengths, 500).unwrap();
    for (a, b) in s.eigenvalues().iter().zip(&all) {
        assert!(((a - b) / b).abs() < 1e-14);
    }
}

#[test]
fn lanczos_matches_dense_solve_on_l_shape() {
    let mut text = String::from("MASK2D 12 12 0.1\n");
    for row in 0..12 {
        let line: Vec<&str> = (0..12).map(|c| if row < 6 && c >= 6 { "0" } else { "1" }).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    let op = DiscreteLaplacian::from_mask(parse_mask(&text).unwrap());
    let dense = SymmetricEigen::new(op.to_dense());
    let mut exact: Vec<f64> = dense.eigenvalues.iter().copied().collect();
    exact.sort_by(f64::total_cmp);
    let s = fdm::smallest_eigs(&op, &SolverConfig::new(12)).unwrap();
    for (a, b) in s.eigenvalues().iter().zip(&exact) {
        assert!(((a - b) / b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn disk_single_bound_ratio() {
    let disk = analytic_spectrum(&DomainSpec::ball_with_volume(2, 1.0).unwrap(), 1).unwrap();
    let ev = bounds::eval_liyau_single(&disk, 1).unwrap();
    let j = 2.404_825_557_695_773_f64;
    assert!((ev.sharpness - j * j / 2.0).abs() < 1e-12);
    assert!((ev.sharpness - 2.89).abs() < 5e-3);
}

#[test]
fn ground_state_exceeds_weyl_constant() {
    for d in 1..=20 {
        let j = special::faber_krahn_zero(d).unwrap();
        assert!(4.0 * d as f64 / (d as f64 + 2.0) < j * j, "d = {d}");
    }
}

#[test]
fn thm2_admissibility_matches_float_test() {
    for d in 1..=4 {
        for n in 1..=300usize {
            for l in 1..=2 * n {
                let (nf, lf) = (n as f64, l as f64);
                let lhs = (nf + lf).powf(2.0 / d as f64) * lf;
                let rhs = nf.powf(1.0 + 2.0 / d as f64);
                if ((lhs - rhs) / rhs).abs() > 1e-9 {
                    assert_eq!(bounds::thm2_admissible(n, l, d), lhs >= rhs, "n = {n}, l = {l}, d = {d}");
                }
            }
        }
    }
}
