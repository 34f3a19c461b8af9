use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;
use rimflow_core::spectral::*;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn lat(k: usize, l: usize, ell: f64) -> Lattice {
    Lattice::new(k, l, ell).unwrap()
}

/// Real field from a flat list of (re, im) pairs, one per stored mode with k >= 0.
fn field_from_params(lattice: Lattice, params: &[(f64, f64)], decay: f64) -> SpectralField {
    let mut f = SpectralField::zeros(lattice);
    let mut it = params.iter();
    for k in 0..=lattice.k_max() as i64 {
        for l in 0..=lattice.l_max() {
            let &(re, im) = it.next().unwrap();
            let w = (-(decay) * ((k * k) as f64 + (l * l) as f64).sqrt()).exp();
            f.set(k, l, c(re * w, im * w));
        }
    }
    f
}

fn random_field(k: usize, l: usize, ell: f64) -> impl Strategy<Value = SpectralField> {
    let n = (k + 1) * (l + 1);
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n).prop_map(move |p| field_from_params(lat(k, l, ell), &p, 0.3))
}

/// Direct point evaluation of the represented function.
fn eval(f: &SpectralField, theta: f64, zeta: f64) -> Complex64 {
    let lattice = f.lattice();
    let (km, lm) = (lattice.k_max() as i64, lattice.l_max() as i64);
    let mut sum = ZERO;
    for k in -km..=km {
        for l in -lm..=lm {
            sum += f.get(k, l) * Complex64::from_polar(1.0, k as f64 * theta + l as f64 * zeta);
        }
    }
    sum
}

/// Mobility operator by direct convolution over the full signed lattice.
fn mobility_oracle(u: &SpectralField, v: &SpectralField) -> SpectralField {
    let lattice = *v.lattice();
    let s = lattice.axial_scale();
    let (ku, lu) = (u.lattice().k_max() as i64, u.lattice().l_max() as i64);
    let (kv, lv) = (lattice.k_max() as i64, lattice.l_max() as i64);
    let mut out = SpectralField::zeros_complex(lattice);
    for p in -ku..=ku {
        for q in -lu..=lu {
            for k in -kv..=kv {
                for l in -lv..=lv {
                    let (ko, lo) = (k + p, l + q);
                    if ko.abs() > kv || lo < 0 || lo > lv {
                        continue;
                    }
                    let sym = 1.0 - (k * k) as f64 - s * s * (l * l) as f64;
                    let div = -((k * ko) as f64 + s * s * (l * lo) as f64);
                    let idx = lattice.index(ko, lo as usize);
                    out.coeffs_mut()[idx] += u.get(p, q) * v.get(k, l) * sym * div;
                }
            }
        }
    }
    out
}

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn analyze_single_axial_mode() {
    let g = GridField::from_fn(16, 16, |_, z| z.cos()).unwrap();
    let f = analyze(&g, 4, 4, PI).unwrap();
    for (k, l) in f.lattice().modes() {
        let expect = if (k, l) == (0, 1) { c(0.5, 0.0) } else { ZERO };
        assert!((f.get(k, l as i64) - expect).norm() < 1e-14, "mode ({k},{l})");
    }
}

#[test]
fn analyze_constant() {
    let g = GridField::from_fn(12, 12, |_, _| 3.0).unwrap();
    let f = analyze(&g, 3, 3, PI).unwrap();
    assert!((f.get(0, 0) - c(3.0, 0.0)).norm() < 1e-14);
    assert!(f.coeffs().iter().filter(|z| z.norm() > 1e-14).count() == 1);
}

#[test]
fn analyze_sin_theta_cos_zeta() {
    let g = GridField::from_fn(16, 12, |t, z| t.sin() * z.cos()).unwrap();
    let f = analyze(&g, 4, 3, PI).unwrap();
    assert!((f.get(1, 1) - c(0.0, -0.25)).norm() < 1e-14);
    assert!((f.get(-1, 1) - c(0.0, 0.25)).norm() < 1e-14);
    assert!(f.is_real());
}

#[test]
fn analyze_rejects_odd_in_zeta() {
    let g = GridField::from_fn(16, 16, |t, z| t.cos() + 0.1 * z.sin()).unwrap();
    assert!(matches!(analyze(&g, 4, 4, PI), Err(rimflow_core::RimflowError::NonEven { .. })));
}

#[test]
fn synthesize_constant_and_cosine() {
    let l = lat(3, 3, PI);
    let g = synthesize(&SpectralField::constant(l, 0.7), 8, 8).unwrap();
    assert!(g.values().iter().all(|v| (v - 0.7).abs() < 1e-15));

    let mut f = SpectralField::zeros(l);
    f.set(1, 0, c(0.5, 0.0));
    let g = synthesize(&f, 8, 8).unwrap();
    let (dt, _) = g.spacing();
    for i in 0..8 {
        for j in 0..8 {
            assert!((g.at(i, j) - (i as f64 * dt).cos()).abs() < 1e-15);
        }
    }
}

#[test]
fn synthesize_rejects_coarse_grid() {
    let f = SpectralField::zeros(lat(4, 4, PI));
    assert!(synthesize(&f, 8, 10).is_err());
    assert!(synthesize(&f, 10, 9).is_err());
}

#[test]
fn laplacian_examples() {
    let mut f = SpectralField::zeros(lat(3, 3, PI));
    f.set(0, 1, c(0.5, 0.0));
    let lf = laplacian_ell(&f);
    assert!((lf.get(0, 1) - c(-0.5, 0.0)).norm() < 1e-15);

    let mut f = SpectralField::zeros(lat(3, 3, 1.7));
    f.set(1, 0, c(1.0, 0.0));
    let lf = laplacian_ell(&f);
    assert_eq!(lf.get(1, 0), c(-1.0, 0.0));
    assert_eq!(lf.get(-1, 0), c(-1.0, 0.0));

    // cos 2 theta + cos 2 zeta at ell = 2 pi.
    let mut f = SpectralField::zeros(lat(3, 3, 2.0 * PI));
    f.set(2, 0, c(0.5, 0.0));
    f.set(0, 2, c(0.5, 0.0));
    let lf = laplacian_ell(&f);
    assert!((lf.get(2, 0) - c(-2.0, 0.0)).norm() < 1e-15);
    assert!((lf.get(0, 2) - c(-0.5, 0.0)).norm() < 1e-15);
}

#[test]
fn divergence_of_gradient_is_laplacian() {
    let mut f = SpectralField::zeros(lat(4, 4, 2.3));
    f.set(1, 2, c(0.3, -0.2));
    f.set(3, 0, c(0.1, 0.05));
    f.set(0, 4, c(-0.4, 0.0));
    let (gt, gz) = gradient_ell(&f);
    let div = divergence_ell(&gt, &gz).unwrap();
    assert!(max_diff(&div, &laplacian_ell(&f)) < 1e-14);
}

#[test]
fn mobility_constant_mobility_kernel_mode() {
    let l = lat(4, 4, PI);
    let one = SpectralField::constant(l, 1.0);
    let mut v = SpectralField::zeros_complex(l);
    v.set(1, 0, c(1.0, 0.0));
    assert!(mobility_apply(&one, &v).max_abs() < 1e-14);
}

#[test]
fn mobility_constant_mobility_second_harmonic() {
    let l = lat(4, 4, PI);
    let one = SpectralField::constant(l, 1.0);
    let mut v = SpectralField::zeros_complex(l);
    v.set(2, 0, c(1.0, 0.0));
    let out = mobility_apply(&one, &v);
    assert!((out.get(2, 0) - c(12.0, 0.0)).norm() < 1e-12);
    assert!(out.coeffs().iter().map(|z| z.norm()).sum::<f64>() - 12.0 < 1e-12);
}

#[test]
fn mobility_matches_convolution_oracle_k8() {
    let l = lat(8, 8, PI);
    let mut u = SpectralField::constant(l, 1.0);
    u.set(1, 0, c(0.5, 0.0));
    let mut v = SpectralField::zeros(l);
    v.set(2, 0, c(0.5, 0.0));
    let out = mobility_apply(&u, &v);
    let oracle = mobility_oracle(&u, &v);
    assert!(max_diff(&out, &oracle) < 1e-12);
    assert_eq!(out.get(0, 0), ZERO);
}

#[test]
fn cube_is_exact() {
    let l = lat(2, 2, 2.0);
    let mut h = SpectralField::constant(l, 1.0);
    h.set(1, 1, c(0.1, 0.2));
    h.set(2, 0, c(-0.05, 0.0));
    let h3 = cube(&h);
    for &(t, z) in &[(0.3, 1.1), (2.0, 5.5), (4.4, 0.2)] {
        let direct = eval(&h, t, z).powi(3);
        assert!((eval(&h3, t, z) - direct).norm() < 1e-13);
    }
}

#[test]
fn energy_examples() {
    let l = lat(4, 4, PI);
    assert_eq!(energy(&SpectralField::constant(l, 2.0)), 0.0);
    let mut f = SpectralField::constant(l, 2.0);
    f.set(1, 0, c(0.15, 0.0));
    assert!(energy(&f).abs() < 1e-16);
    let mut f = SpectralField::constant(l, 2.0);
    let amp = 0.3;
    f.set(2, 0, c(amp / 2.0, 0.0));
    assert!((energy(&f) - 0.75 * amp * amp).abs() < 1e-15);
}

/// Trapezoidal quadrature of `1/2 avg(|grad h|^2 - h^2) + m^2/2`, with the
/// derivatives evaluated pointwise from the trigonometric sum.
fn energy_quadrature(f: &SpectralField, n: usize) -> f64 {
    let lattice = f.lattice();
    let s = lattice.axial_scale();
    let (km, lm) = (lattice.k_max() as i64, lattice.l_max() as i64);
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (t, z) = (TAU * i as f64 / n as f64, TAU * j as f64 / n as f64);
            let (mut h, mut ht, mut hz) = (ZERO, ZERO, ZERO);
            for k in -km..=km {
                for l in -lm..=lm {
                    let e = f.get(k, l) * Complex64::from_polar(1.0, k as f64 * t + l as f64 * z);
                    h += e;
                    ht += e * c(0.0, k as f64);
                    hz += e * c(0.0, s * l as f64);
                }
            }
            acc += ht.re * ht.re + hz.re * hz.re - h.re * h.re;
        }
    }
    let m = f.mean();
    0.5 * acc / (n * n) as f64 + 0.5 * m * m
}

#[test]
fn energy_matches_quadrature_oracle() {
    let mut f = SpectralField::constant(lat(3, 3, 2.5), 1.0);
    f.set(2, 0, c(0.1, 0.0));
    let e = energy(&f);
    assert!((e - 0.75 * 0.04).abs() < 1e-15);
    assert!((energy_quadrature(&f, 16) - e).abs() < 1e-13);

    f.set(1, 2, c(0.03, -0.07));
    f.set(0, 3, c(0.02, 0.0));
    f.set(-3, 1, c(0.01, 0.04));
    assert!((energy_quadrature(&f, 16) - energy(&f)).abs() < 1e-13);
}

#[test]
fn projections_example() {
    let l = lat(4, 4, PI);
    let mut f = SpectralField::constant(l, 5.0);
    f.set(1, 0, c(1.5, 0.0));
    f.set(0, 1, c(0.5, 0.0));
    f.set(2, 0, c(0.5, 0.0));
    let p1 = project_p1(&f);
    let mut expect = SpectralField::zeros(l);
    expect.set(1, 0, c(1.5, 0.0));
    expect.set(0, 1, c(0.5, 0.0));
    assert_eq!(p1, expect);

    let mut g = SpectralField::zeros(l);
    g.set(2, 0, c(0.5, 0.0));
    assert_eq!(project_p1(&g).max_abs(), 0.0);
}

#[test]
fn projection_drops_axial_mode_away_from_pi() {
    let mut f = SpectralField::zeros(lat(3, 3, PI / 2.0));
    f.set(0, 1, c(0.5, 0.0));
    f.set(1, 0, c(0.5, 0.0));
    let p1 = project_p1(&f);
    assert_eq!(p1.get(0, 1), ZERO);
    assert_eq!(p1.get(1, 0), c(0.5, 0.0));
}

#[test]
fn norm_examples() {
    let l = lat(3, 3, PI);
    let m = SpectralField::constant(l, 1.3);
    for s in [0.0, 1.0, 2.5, 4.0] {
        assert!((sobolev_norm(&m, s) - 1.3).abs() < 1e-15);
    }
    let mut f = SpectralField::zeros(l);
    f.set(1, 0, c(0.5, 0.0));
    assert!((sobolev_norm(&f, 0.0) - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((sobolev_norm(&f, 1.0) - 1.0).abs() < 1e-15);
    assert!((homogeneous_norm(&f, 1.0) - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn manifold_distance_examples() {
    let l = lat(4, 4, PI);
    let mut f = SpectralField::constant(l, 1.0);
    f.set(1, 0, c(0.05, 0.0));
    f.set(0, 1, c(0.025, 0.0));
    assert_eq!(manifold_distance(&f), 0.0);

    let amp = 0.2;
    let mut f = SpectralField::constant(l, 1.0);
    f.set(2, 0, c(amp / 2.0, 0.0));
    assert!((manifold_distance(&f) - amp * 2.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn snapshot_format_round_trip() {
    let mut f = SpectralField::constant(lat(3, 2, 2.0 * PI), 1.0);
    f.set(1, 1, c(0.1 / 3.0, -1e-17));
    f.set(-2, 2, c(0.25, 0.125));
    let text = field_to_string(&f);
    assert!(text.starts_with("rimflow-field v1 K=3 L=2 ell=6.283185307179586\n"));
    assert_eq!(text.lines().count(), 1 + 7 * 3);
    let back = read_field(text.as_bytes()).unwrap();
    assert_eq!(back, f);
}

#[test]
fn snapshot_missing_modes_are_zero() {
    let text = "rimflow-field v1 K=2 L=2 ell=3.0\n0 0 1.5 0\n1 1 0.25 0\n-1 1 0.25 0\n";
    let f = read_field(text.as_bytes()).unwrap();
    assert!(f.is_real());
    assert_eq!(f.mean(), 1.5);
    assert_eq!(f.get(2, 0), ZERO);
    assert!(read_field("rimflow-field v1 K=2 L=2 ell=3.0\n3 0 1 0\n".as_bytes()).is_err());
    assert!(read_field("rimflow-field v2 K=2 L=2 ell=3.0\n".as_bytes()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_synthesize_analyze(f in random_field(5, 4, 2.2)) {
        let (n0, n1) = default_grid_size(f.lattice());
        let g = synthesize(&f, n0, n1).unwrap();
        let back = analyze(&g, 5, 4, 2.2).unwrap();
        prop_assert!(max_diff(&back, &f) < 1e-12);
    }

    #[test]
    fn parseval(f in random_field(4, 4, PI)) {
        let g = synthesize(&f, 18, 18).unwrap();
        let mean_sq = g.values().iter().map(|v| v * v).sum::<f64>() / g.values().len() as f64;
        let n = sobolev_norm(&f, 0.0).powi(2);
        prop_assert!((mean_sq - n).abs() <= 1e-10 * n);
    }

    #[test]
    fn projection_parseval(f in random_field(4, 4, PI)) {
        let p1 = project_p1(&f);
        let p2 = project_pgeq2(&f);
        let mut recombined = &p1 + &p2;
        recombined += &SpectralField::constant(*f.lattice(), f.mean());
        prop_assert_eq!(&recombined, &f);
        let lhs = p1.l2_norm_sq() + p2.l2_norm_sq() + f.mean().powi(2);
        prop_assert!((lhs - f.l2_norm_sq()).abs() < 1e-14);
    }

    #[test]
    fn products_stay_real(f in random_field(4, 3, 1.9), g in random_field(4, 3, 1.9)) {
        let p = product(&[&f, &g], *f.lattice());
        prop_assert!(p.is_real());
        prop_assert!(p.reality_defect() < 1e-15);
        let m = mobility_apply(&cube(&f), &g);
        prop_assert!(m.is_real());
        prop_assert_eq!(m.get(0, 0), ZERO);
    }

    #[test]
    fn mobility_constant_is_diagonal(v in random_field(5, 5, 2.7), c0 in 0.3..1.8f64) {
        let lattice = *v.lattice();
        let u = SpectralField::constant(lattice, c0.powi(3));
        let out = mobility_apply(&u, &v);
        let expect = v.map_modes(|k, l| {
            let s = lattice.wavenumber_sq(k, l as i64);
            c(c0.powi(3) * s * (s - 1.0), 0.0)
        });
        prop_assert!(max_diff(&out, &expect) < 1e-12 * expect.max_abs().max(1.0));
    }

    #[test]
    fn mobility_matches_oracle_k4(u in random_field(4, 4, 2.0), v in random_field(4, 4, 2.0)) {
        let out = mobility_apply(&u, &v);
        let oracle = mobility_oracle(&u, &v);
        prop_assert!(max_diff(&out, &oracle) < 1e-12 * oracle.max_abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn energy_distance_sandwich(f in random_field(6, 6, PI)) {
        let e = energy(&f);
        let d = manifold_distance(&f);
        prop_assert!(e >= 0.0);
        prop_assert!(e.sqrt() / (PI * 2f64.sqrt()) <= d * (1.0 + 1e-12));
        prop_assert!(d <= (6.0 * e).sqrt() * (1.0 + 1e-12));
    }
}

/// Equivalence constants for `|grad(lap f + f)|_{H^1}` against `|f|_{H^4}`
/// on fields without mean or neutral modes at ell = pi.
const LOWER: f64 = 0.27;
const UPPER: f64 = 1.0;

fn signed_h1_sq(g: &SignedField) -> f64 {
    let lattice = g.lattice();
    let (km, lm) = (lattice.k_max() as i64, lattice.l_max() as i64);
    let mut sum = 0.0;
    for k in -km..=km {
        for l in -lm..=lm {
            sum += (1.0 + (k * k + l * l) as f64) * g.get(k, l).norm_sqr();
        }
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn norm_equivalence_off_kernel(f in random_field(6, 6, PI)) {
        let f = project_pgeq2(&f);
        prop_assume!(f.max_abs() > 1e-6);
        let w = &laplacian_ell(&f) + &f;
        let (gt, gz) = gradient_ell(&w);
        let lhs = (signed_h1_sq(&gt) + signed_h1_sq(&gz)).sqrt();
        let h4 = sobolev_norm(&f, 4.0);
        prop_assert!(LOWER * h4 <= lhs, "lower bound: {} vs {}", lhs, h4);
        prop_assert!(lhs <= UPPER * h4, "upper bound: {} vs {}", lhs, h4);
    }
}
