//! Slow dynamics on the manifold of neutral steady states at the critical
//! length `ell = pi`: the inner linear problems, the reduced vector field, and
//! its integration.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, RimflowError};
use crate::linalg::BandMatrix;
use crate::spectral::{
    cube, d_theta, grid_min, mobility_apply, mobility_apply_to, product, project_p1, project_pgeq2, Lattice,
    SpectralField,
};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coordinates `(a1, b)` of `m + a1 e^{i theta} + conj(a1) e^{-i theta} + b cos zeta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManifoldPoint {
    pub a1: Complex64,
    pub b: f64,
    pub m: f64,
}

impl ManifoldPoint {
    pub fn new(a1: Complex64, b: f64, m: f64) -> Result<Self> {
        let x = Self { a1, b, m };
        x.check(0.0)?;
        Ok(x)
    }

    /// `2|a1| + |b|`; the film is positive iff this is below `m`.
    pub fn extent(&self) -> f64 {
        2.0 * self.a1.norm() + self.b.abs()
    }

    /// Fails unless `extent < m (1 - margin)`.
    pub fn check(&self, margin: f64) -> Result<()> {
        if !(self.m > 0.0) {
            return Err(RimflowError::InvalidParameter("mass must be positive".into()));
        }
        let limit = self.m * (1.0 - margin);
        if !(self.extent() < limit) {
            return Err(RimflowError::ValidityExit { extent: self.extent(), limit });
        }
        Ok(())
    }

    /// Reads the coordinates of a field's neutral modes.
    pub fn from_field(h: &SpectralField) -> Self {
        Self { a1: h.get(1, 0), b: 2.0 * h.get(0, 1).re, m: h.mean() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeConfig {
    pub k_max: usize,
    pub l_max: usize,
    pub tau_end: f64,
    pub dtau: f64,
    /// Absolute tolerance for the step-halving error estimate.
    pub tol: f64,
    /// Integration stops once `2|a1| + |b| >= m (1 - margin)`.
    pub margin: f64,
    /// Bound on the inner-solve residuals, checked on every evaluation.
    pub residual_cap: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self { k_max: 16, l_max: 16, tau_end: 5.0, dtau: 1e-2, tol: 1e-9, margin: 0.05, residual_cap: 1e-10 }
    }
}

impl OdeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(RimflowError::InvalidParameter(what.to_string()));
        if self.k_max < 8 || self.l_max < 8 {
            return bad("slow-manifold truncation needs K, L >= 8");
        }
        if !(self.tau_end > 0.0 && self.dtau > 0.0 && self.tol > 0.0) {
            return bad("tau_end, dtau and tol must be positive");
        }
        if !(0.0..1.0).contains(&self.margin) {
            return bad("margin must lie in [0, 1)");
        }
        Ok(())
    }

    fn lattice(&self, b: f64) -> Lattice {
        // b = 0 is invariant and every field is then independent of zeta.
        let l_max = if b == 0.0 { 0 } else { self.l_max };
        Lattice::raw(self.k_max, l_max, std::f64::consts::PI)
    }
}

pub fn manifold_to_field(x: &ManifoldPoint, lattice: Lattice) -> Result<SpectralField> {
    x.check(0.0)?;
    if !lattice.is_ell_pi() {
        return Err(RimflowError::InvalidParameter("the slow manifold lives at ell = pi".into()));
    }
    if x.b != 0.0 && lattice.l_max() == 0 {
        return Err(RimflowError::InvalidParameter("axial amplitude needs L >= 1".into()));
    }
    let mut h = SpectralField::constant(lattice, x.m);
    h.set(1, 0, x.a1);
    if lattice.l_max() > 0 {
        h.set(0, 1, Complex64::new(0.5 * x.b, 0.0));
    }
    Ok(h)
}

/// Banded matrix of `shift + gamma A(u)` on `lattice`, where
/// `A(u) v = div(u grad(lap v + v))`, assembled from the convolution
/// structure of `u`.
pub fn mobility_band(u: &SpectralField, lattice: Lattice, gamma: f64, shift: Complex64) -> BandMatrix {
    let (ku, lu) = u.support(1e-15);
    let (ku, lu) = (ku as i64, lu as i64);
    let (km, lm) = (lattice.k_max() as i64, lattice.l_max() as i64);
    let width = (ku * (lm + 1) + lu) as usize;
    let a2 = lattice.axial_scale().powi(2);
    let mut band = BandMatrix::zeros(lattice.len(), width, width);
    for (j, (k, l)) in lattice.modes().enumerate() {
        band.add(j, j, shift);
        let signs: &[i64] = if l == 0 { &[1] } else { &[1, -1] };
        for &sg in signs {
            let ls = sg * l as i64;
            let w = 1.0 - lattice.wavenumber_sq(k, ls);
            if w == 0.0 {
                continue;
            }
            for p in -ku..=ku {
                let ko = k + p;
                if ko.abs() > km {
                    continue;
                }
                for q in -lu..=lu {
                    let lo = ls + q;
                    if lo < 0 || lo > lm {
                        continue;
                    }
                    let c = u.get(p, q);
                    if c == ZERO {
                        continue;
                    }
                    let div = -((k * ko) as f64 + a2 * (ls * lo) as f64);
                    band.add(lattice.index(ko, lo as usize), j, c * (gamma * w * div));
                }
            }
        }
    }
    band
}

fn solve_band(band: BandMatrix, rhs: &SpectralField) -> Result<SpectralField> {
    let lu = band.factor().map_err(|_| RimflowError::Solver("singular inner system".into()))?;
    let mut x = rhs.coeffs().to_vec();
    lu.solve(&mut x);
    if !x.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        return Err(RimflowError::Solver("non-finite inner solution".into()));
    }
    SpectralField::from_coeffs(*rhs.lattice(), x, false)
}

fn check_base(h0: &SpectralField) -> Result<()> {
    if !h0.lattice().is_ell_pi() {
        return Err(RimflowError::InvalidParameter("the slow manifold lives at ell = pi".into()));
    }
    if !h0.is_real() {
        return Err(RimflowError::InvalidParameter("base state must be real".into()));
    }
    let min_h = grid_min(h0);
    if !(min_h > 0.0) {
        return Err(RimflowError::Positivity { min_h });
    }
    Ok(())
}

/// Shifts the theta index: `out[k, l] = f[k - shift, l]` (multiplication by
/// `e^{i shift theta}`), projected onto `out`.
fn theta_shift(f: &SpectralField, shift: i64, out: Lattice) -> SpectralField {
    let mut g = SpectralField::zeros_complex(out);
    for (idx, (k, l)) in out.modes().enumerate() {
        g.coeffs_mut()[idx] = f.get(k - shift, l as i64);
    }
    g
}

/// Solves `shift G + gamma A(H0^3) G = rhs` on the lattice of `rhs`.
fn solve_shifted(h0: &SpectralField, rhs: &SpectralField, gamma: f64, shift: Complex64) -> Result<SpectralField> {
    let h3 = cube(h0);
    solve_band(mobility_band(&h3, *rhs.lattice(), gamma, shift), rhs)
}

/// `i G1 + gamma A(H0^3) G1 = 1/2 (H0^3 e^{i theta})_theta`.
pub fn solve_g1(h0: &SpectralField, gamma: f64) -> Result<SpectralField> {
    check_base(h0)?;
    let lat = *h0.lattice();
    let h3 = cube(h0);
    let rhs = d_theta(&theta_shift(&h3, 1, lat)) * 0.5;
    solve_band(mobility_band(&h3, lat, gamma, I), &rhs)
}

/// `2i G2 + gamma A(H0^3) G2 = V`.
pub fn solve_g2(h0: &SpectralField, v: &SpectralField, gamma: f64) -> Result<SpectralField> {
    check_base(h0)?;
    solve_shifted(h0, &v.clone().into_complex(), gamma, 2.0 * I)
}

/// `H0^2 G1` without truncation.
fn h0_sq_times(h0: &SpectralField, g: &SpectralField) -> SpectralField {
    let (lh, lg) = (h0.lattice(), g.lattice());
    product(&[h0, h0, g], lg.with_truncation(2 * lh.k_max() + lg.k_max(), 2 * lh.l_max() + lg.l_max()))
}

/// Slow forcing `U`, real by construction.
pub fn compute_u(h0: &SpectralField, g1: &SpectralField, gamma: f64) -> Result<SpectralField> {
    let lat = *g1.lattice();
    let g1b = g1.conj_field();
    let u1 = h0_sq_times(h0, g1);
    let u2 = h0_sq_times(h0, &g1b);
    let mut u = &mobility_apply_to(&u1, &g1b, lat) + &mobility_apply_to(&u2, g1, lat);
    u = u * (-3.0 * gamma);
    let transport = &theta_shift(&u1, -1, lat) + &theta_shift(&u2, 1, lat);
    u += &(d_theta(&transport) * 1.5);
    let scale = g1.abs_sum().powi(2)
        * h0.abs_sum().powi(2)
        * (1.0 + gamma)
        * (1.0 + lat.wavenumber_sq(lat.k_max() as i64, lat.l_max() as i64)).powi(2);
    let defect = u.reality_defect_abs();
    if defect > 1e-10 * scale.max(1.0) {
        return Err(RimflowError::RealityViolation { defect });
    }
    Ok(u.into_real())
}

/// Second-harmonic forcing `V`.
pub fn compute_v(h0: &SpectralField, g1: &SpectralField, gamma: f64) -> SpectralField {
    let lat = *g1.lattice();
    let u1 = h0_sq_times(h0, g1);
    let mut v = mobility_apply_to(&u1, g1, lat) * (-3.0 * gamma);
    v += &(d_theta(&theta_shift(&u1, 1, lat)) * 1.5);
    v.into_complex()
}

/// Modes fixed to zero in the W problem: the mean and the neutral modes.
fn constrained(lattice: &Lattice) -> Vec<usize> {
    let mut out = vec![lattice.index(0, 0), lattice.index(1, 0), lattice.index(-1, 0)];
    if lattice.l_max() >= 1 {
        out.push(lattice.index(0, 1));
    }
    out
}

/// `gamma P A(H0^3) W = P U` with `P` the projection onto modes of order
/// at least two, and `W` in the range of `P`.
pub fn solve_w(h0: &SpectralField, u: &SpectralField, gamma: f64) -> Result<SpectralField> {
    check_base(h0)?;
    let lat = *u.lattice();
    let h3 = cube(h0);
    let mut band = mobility_band(&h3, lat, gamma, ZERO);
    let mut rhs = project_pgeq2(u).into_complex();
    for idx in constrained(&lat) {
        band.set_identity_row(idx, Complex64::new(1.0, 0.0));
        rhs.coeffs_mut()[idx] = ZERO;
    }
    let mut w = solve_band(band, &rhs)?;
    for idx in constrained(&lat) {
        w.coeffs_mut()[idx] = ZERO;
    }
    Ok(w.into_real())
}

/// Intermediate fields of one reduced vector-field evaluation.
#[derive(Clone, Debug)]
pub struct SlowFields {
    pub h0: SpectralField,
    pub g1: SpectralField,
    pub u: SpectralField,
    pub w: SpectralField,
    /// `P1 [U - gamma A(H0^3) W]`.
    pub velocity: SpectralField,
    pub g1_residual: f64,
    pub w_residual: f64,
}

pub fn slow_fields(x: &ManifoldPoint, gamma: f64, cfg: &OdeConfig) -> Result<SlowFields> {
    let lat = cfg.lattice(x.b);
    let h0 = manifold_to_field(x, lat)?;
    let g1 = solve_g1(&h0, gamma)?;
    let u = compute_u(&h0, &g1, gamma)?;
    let w = solve_w(&h0, &u, gamma)?;
    let h3 = cube(&h0);
    let aw = mobility_apply(&h3, &w);
    let velocity = project_p1(&(&u - &(&aw * gamma)));

    let g1_rhs = d_theta(&theta_shift(&h3, 1, lat)) * 0.5;
    let g1_res = &(&g1.scale_complex(I) + &(mobility_apply(&h3, &g1) * gamma)) - &g1_rhs;
    let w_res = project_pgeq2(&(&(&aw * gamma) - &u));
    Ok(SlowFields { g1_residual: g1_res.l2_norm(), w_residual: w_res.l2_norm(), h0, g1, u, w, velocity })
}

/// Reduced vector field `(da1/dtau, db/dtau)`.
pub fn ode_rhs(x: &ManifoldPoint, gamma: f64, cfg: &OdeConfig) -> Result<(Complex64, f64)> {
    let f = slow_fields(x, gamma, cfg)?;
    let worst = f.g1_residual.max(f.w_residual);
    if worst > cfg.residual_cap {
        return Err(RimflowError::Solver(format!("inner-solve residual {worst:.3e} exceeds {:.1e}", cfg.residual_cap)));
    }
    let db = if f.velocity.lattice().l_max() > 0 { 2.0 * f.velocity.get(0, 1).re } else { 0.0 };
    Ok((f.velocity.get(1, 0), db))
}

/// Linearisation of the reduced vector field about the constant film.
pub fn linearized_rhs(x: &ManifoldPoint, gamma: f64) -> (Complex64, f64) {
    let (rho, phi) = linear_rates(x.m, gamma);
    let b_rate = axial_rate(x.m, gamma);
    (x.a1 * Complex64::new(rho, phi), b_rate * x.b)
}

/// Radial decay rate and angular velocity of `a1` near the origin.
pub fn linear_rates(m: f64, gamma: f64) -> (f64, f64) {
    let d = 1.0 + 144.0 * gamma * gamma * m.powi(6);
    (-81.0 * gamma * m.powi(7) / d, (108.0 * gamma * gamma * m.powi(10) + 7.5 * m.powi(4)) / d)
}

/// Linear rate of the axial amplitude `b`.
pub fn axial_rate(m: f64, gamma: f64) -> f64 {
    -9.0 * gamma * m.powi(7) / (2.0 + 8.0 * gamma * gamma * m.powi(6))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OdeExit {
    Completed,
    ValidityExit,
}

impl OdeExit {
    pub fn label(&self) -> &'static str {
        match self {
            OdeExit::Completed => "completed",
            OdeExit::ValidityExit => "validity_exit",
        }
    }
}

#[derive(Clone, Debug)]
pub struct OdeTrajectory {
    pub x0: ManifoldPoint,
    /// `(tau, a1, b)` after every accepted step.
    pub samples: Vec<(f64, Complex64, f64)>,
    pub exit: OdeExit,
    pub evaluations: usize,
}

type State = (Complex64, f64);

fn axpy(y: State, h: f64, k: State) -> State {
    (y.0 + k.0 * h, y.1 + k.1 * h)
}

struct Rk4<'a> {
    gamma: f64,
    m: f64,
    cfg: &'a OdeConfig,
    evaluations: usize,
}

impl Rk4<'_> {
    fn f(&mut self, y: State) -> Result<State> {
        self.evaluations += 1;
        ode_rhs(&ManifoldPoint { a1: y.0, b: y.1, m: self.m }, self.gamma, self.cfg)
    }

    fn step(&mut self, y: State, k1: State, h: f64) -> Result<State> {
        let k2 = self.f(axpy(y, 0.5 * h, k1))?;
        let k3 = self.f(axpy(y, 0.5 * h, k2))?;
        let k4 = self.f(axpy(y, h, k3))?;
        Ok((
            y.0 + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0),
            y.1 + (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) * (h / 6.0),
        ))
    }
}

/// Classical RK4 in slow time with step halving: a step is accepted when one
/// full step and two half steps agree to `cfg.tol`.
pub fn integrate_ode(x0: &ManifoldPoint, gamma: f64, cfg: &OdeConfig) -> Result<OdeTrajectory> {
    cfg.validate()?;
    if !(gamma > 0.0) {
        return Err(RimflowError::InvalidParameter("gamma must be positive".into()));
    }
    x0.check(cfg.margin)?;
    let mut rk = Rk4 { gamma, m: x0.m, cfg, evaluations: 0 };
    let mut y: State = (x0.a1, x0.b);
    let mut tau = 0.0;
    let mut h = cfg.dtau;
    let mut samples = vec![(0.0, y.0, y.1)];
    let mut exit = OdeExit::Completed;
    while tau < cfg.tau_end - 1e-12 * cfg.tau_end {
        let hs = h.min(cfg.tau_end - tau);
        let k1 = rk.f(y)?;
        let full = rk.step(y, k1, hs);
        let half = rk.step(y, k1, 0.5 * hs).and_then(|mid| {
            let k1m = rk.f(mid)?;
            rk.step(mid, k1m, 0.5 * hs)
        });
        let (full, half) = match (full, half) {
            (Ok(f), Ok(s)) => (f, s),
            (Err(e), _) | (_, Err(e)) => {
                if matches!(e, RimflowError::ValidityExit { .. } | RimflowError::Positivity { .. })
                    && hs > 1e-6 * cfg.dtau
                {
                    h = 0.5 * hs;
                    continue;
                }
                return Err(e);
            }
        };
        let err = (full.0 - half.0).norm() + (full.1 - half.1).abs();
        if err > cfg.tol && hs > 1e-6 * cfg.dtau {
            h = 0.5 * hs;
            continue;
        }
        y = half;
        tau += hs;
        samples.push((tau, y.0, y.1));
        if err < cfg.tol / 32.0 {
            h = (2.0 * h).min(cfg.dtau);
        }
        if (ManifoldPoint { a1: y.0, b: y.1, m: x0.m }).check(cfg.margin).is_err() {
            exit = OdeExit::ValidityExit;
            break;
        }
    }
    Ok(OdeTrajectory { x0: *x0, samples, exit, evaluations: rk.evaluations })
}

/// Integrates every initial condition independently.
pub fn phase_portrait(initial: &[ManifoldPoint], gamma: f64, cfg: &OdeConfig) -> Vec<Result<OdeTrajectory>> {
    initial.par_iter().map(|x0| integrate_ode(x0, gamma, cfg)).collect()
}

/// First-order approximation of the co-moving solution near the manifold,
/// `H0 + delta (G1 e^{it} + conj(G1) e^{-it})`, on `lattice`.
pub fn slaved_field(x: &ManifoldPoint, gamma: f64, delta: f64, t: f64, lattice: Lattice) -> Result<SpectralField> {
    let h0 = manifold_to_field(x, lattice)?;
    let g1 = solve_g1(&h0, gamma)?;
    let fast = g1.scale_complex(Complex64::from_polar(1.0, t)).real_part() * (2.0 * delta);
    Ok(&h0 + &fast)
}
