use std::f64::consts::PI;

use num_complex::Complex64;
use rimflow_core::evolve::{Frame, Params};
use rimflow_core::spectral::*;
use rimflow_core::spectrum::*;
use rimflow_core::steady::{expansion_hdelta, newton_steady};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn lat(k: usize, l: usize, ell: f64) -> Lattice {
    Lattice::new(k, l, ell).unwrap()
}

fn steady_state(delta: f64, ell: f64, lattice: Lattice) -> (SpectralField, Params) {
    let p = Params::new(1.0, delta, ell, 1.0).unwrap();
    let h = newton_steady(&p, &expansion_hdelta(1.0, 1.0, delta, lattice).unwrap(), 1e-13).unwrap().field;
    (h, p)
}

fn spectrum_at(delta: f64, ell: f64, lattice: Lattice) -> SpectrumReport {
    let (h, p) = steady_state(delta, ell, lattice);
    eigensolve(&assemble_ldelta(&h, &p, Frame::Lab).unwrap()).unwrap()
}

/// Hausdorff distance with each gap scaled by `max(1, |p|)`.
fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_way = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min) / p.norm().max(1.0))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[test]
fn closed_form_examples() {
    for (m, g) in [(1.0, 1.0), (0.7, 2.5)] {
        assert_eq!(lambda_closed_form(1, 0, m, g, PI / 2.0), c(0.0, -1.0));
    }
    assert_eq!(lambda_closed_form(0, 1, 1.0, 1.0, PI), c(0.0, 0.0));
    assert_eq!(lambda_closed_form(2, 0, 1.0, 1.0, PI / 2.0), c(-12.0, -2.0));
}

#[test]
fn l0_diagonal_is_the_closed_form() {
    let l = lat(4, 4, PI / 2.0);
    let op = assemble_l0(1.0, 1.0, l, Frame::Lab);
    for (i, &(k, ll)) in op.modes.iter().enumerate() {
        assert_eq!(op.matrix[(i, i)], lambda_closed_form(k, ll as i64, 1.0, 1.0, PI / 2.0));
    }
    let co = assemble_l0(1.0, 1.0, l, Frame::Comoving);
    for (i, &(k, ll)) in co.modes.iter().enumerate() {
        let lab = lambda_closed_form(k, ll as i64, 1.0, 1.0, PI / 2.0);
        assert_eq!(co.matrix[(i, i)], lab + c(0.0, k as f64));
    }
}

#[test]
fn l0_eigenvalues_reproduce_the_closed_form() {
    for ell in [PI / 2.0, PI, 1.5 * PI] {
        let op = assemble_l0(1.0, 1.0, lat(8, 8, ell), Frame::Lab);
        let rep = eigensolve(&op).unwrap();
        assert_eq!(rep.eigenpairs.len(), op.modes.len());
        for e in &rep.eigenpairs {
            let (k, l) = e.dominant;
            let exact = lambda_closed_form(k, l as i64, 1.0, 1.0, ell);
            assert!((e.lambda - exact).norm() <= 1e-10 * exact.norm().max(1.0), "{k},{l}: {} vs {exact}", e.lambda);
            assert!(e.residual <= 1e-12);
        }
    }
}

#[test]
fn long_cylinder_has_one_unstable_axial_mode() {
    let ell = 1.5 * PI;
    let rep = eigensolve(&assemble_l0(1.0, 1.0, lat(8, 8, ell), Frame::Lab)).unwrap();
    // On the even half-lattice, e^{+-i zeta} are the single mode cos zeta.
    assert_eq!(rep.unstable, 1);
    let top = &rep.eigenpairs[0];
    assert_eq!(top.dominant, (0, 1));
    assert!((top.lambda.re - (4.0 / 9.0) * (5.0 / 9.0)).abs() < 1e-14);
}

#[test]
fn critical_length_kernel() {
    let op = assemble_l0(1.0, 1.0, lat(6, 6, PI), Frame::Lab);
    let zero_re: Vec<(i64, usize)> =
        op.modes.iter().enumerate().filter(|(i, _)| op.matrix[(*i, *i)].re == 0.0).map(|(_, m)| *m).collect();
    assert_eq!(zero_re, vec![(-1, 0), (0, 1), (1, 0)]);
}

#[test]
fn ldelta_reduces_to_l0_without_gravity() {
    let l = lat(6, 4, PI / 2.0);
    let h = SpectralField::constant(l, 1.3);
    let p = Params::new(0.8, 0.0, PI / 2.0, 1.3).unwrap();
    for frame in [Frame::Lab, Frame::Comoving] {
        let a = assemble_ldelta(&h, &p, frame).unwrap();
        let b = assemble_l0(1.3, 0.8, l, frame);
        let diff = (&a.matrix - &b.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-12 * b.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max), "{diff}");
    }
}

#[test]
fn ldelta_spectrum_is_closed_under_conjugation() {
    let rep = spectrum_at(0.05, PI / 2.0, lat(12, 2, PI / 2.0));
    let ev = rep.eigenvalues();
    for z in &ev {
        let best = ev.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
        assert!(best <= 1e-9 * z.norm().max(1.0), "{z} has no partner ({best})");
    }
    assert!(rep.max_residual() <= 1e-8);
}

#[test]
fn short_cylinder_with_gravity_is_stable() {
    let rep = spectrum_at(0.02, PI / 2.0, lat(12, 2, PI / 2.0));
    assert_eq!(rep.unstable, 0);
    assert_eq!(rep.critical, 0);
    let near_rotation: Vec<&Eigenpair> = rep
        .eigenpairs
        .iter()
        .filter(|e| (e.lambda - c(0.0, 1.0)).norm() < 1e-3 || (e.lambda + c(0.0, 1.0)).norm() < 1e-3)
        .collect();
    assert_eq!(near_rotation.len(), 2);
    // The next slowest modes at ell = pi/2 are (2,0) and (0,1) with s(s-1) = 12.
    for e in &rep.eigenpairs {
        if near_rotation.iter().all(|n| n.lambda != e.lambda) {
            assert!(e.lambda.re <= -10.0, "{}", e.lambda);
        }
    }
}

#[test]
fn long_cylinder_with_gravity_is_unstable() {
    let rep = spectrum_at(0.02, 1.5 * PI, lat(12, 4, 1.5 * PI));
    assert!(rep.unstable >= 1);
    assert!(rep.eigenpairs[0].lambda.re > 0.0);
}

#[test]
fn spectrum_is_continuous_in_gravity() {
    let l = lat(12, 2, PI / 2.0);
    let a = spectrum_at(0.02, PI / 2.0, l).eigenvalues();
    let b = spectrum_at(0.021, PI / 2.0, l).eigenvalues();
    let d = hausdorff(&a, &b);
    assert!(d < 1e-2, "Hausdorff distance {d}");
    let slow = |v: &[Complex64]| v.iter().copied().filter(|z| z.re > -50.0).collect::<Vec<_>>();
    let d = hausdorff(&slow(&a), &slow(&b));
    assert!(d < 1e-3, "slow part moved by {d}");
}

#[test]
fn second_order_coefficient() {
    let l2 = lambda2(1.0, 1.0);
    assert!((l2 - c(-81.0 / 145.0, -115.5 / 145.0)).norm() < 1e-15);
    let z = critical_eigenvalue_expansion(1.0, 1.0, 0.1);
    assert!((z - (c(0.0, 1.0) + c(-0.55862069, -0.79655172) * 0.01)).norm() < 1e-10);
    assert_eq!(critical_eigenvalue_expansion(1.0, 1.0, 0.0), c(0.0, 1.0));
    let z = critical_eigenvalue_expansion(1.0, 0.0, 0.2);
    assert!((z - c(0.0, 1.0 - 7.5 * 0.04)).norm() < 1e-15);
    assert!((first_mode_correction(1.0, 1.0) - c(3.0, -36.0) / 145.0).norm() < 1e-16);
}

fn critical_error(delta: f64) -> f64 {
    let ell = PI / 2.0;
    let rep = spectrum_at(delta, ell, lat(24, 2, ell));
    // The -i branch is the conjugate of i + delta^2 lambda_2.
    let target = critical_eigenvalue_expansion(1.0, 1.0, delta).conj();
    (rep.nearest(target).unwrap().lambda - target).norm()
}

#[test]
fn critical_eigenvalue_follows_the_expansion() {
    let (e1, e2) = (critical_error(0.04), critical_error(0.02));
    assert!(e1 < 1e-5 && e2 < 1e-6, "{e1} {e2}");
    // At least cubic decay of the remainder.
    assert!(e1 / e2 >= 8.0 * 0.7, "ratio {}", e1 / e2);
}

// H_{-delta}(theta) = H_delta(theta + pi), so the spectrum is even in delta
// and the remainder after the delta^2 term is of fourth order.
#[test]
fn critical_eigenvalue_remainder_is_fourth_order() {
    let ratio = critical_error(0.04) / critical_error(0.02);
    assert!((ratio / 16.0 - 1.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn diagonal_input_has_exact_pairs() {
    let op = assemble_l0(1.0, 1.0, lat(4, 2, PI / 2.0), Frame::Comoving);
    let rep = eigensolve(&op).unwrap();
    assert!(rep.max_residual() < 1e-13);
    assert_eq!(rep.stable + rep.critical + rep.unstable, op.modes.len());
    let mut diag: Vec<f64> = (0..op.modes.len()).map(|i| op.matrix[(i, i)].re).collect();
    diag.sort_by(|a, b| b.total_cmp(a));
    for (e, d) in rep.eigenpairs.iter().zip(&diag) {
        assert!((e.lambda.re - d).abs() < 1e-12 * d.abs().max(1.0));
    }
}

#[test]
fn classification_band() {
    assert_eq!(classify(c(5e-9, 1.0)), Stability::Critical);
    assert_eq!(classify(c(-2e-8, 0.0)), Stability::Stable);
    assert_eq!(classify(c(2e-8, 0.0)), Stability::Unstable);
}
