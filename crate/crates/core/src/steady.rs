//! Steady states: Newton solves, continuation in the gravity parameter, the
//! small-gravity expansion, and the reduced bifurcation function at
//! critical lengths.

use num_complex::Complex64;

use crate::error::{Result, RimflowError};
use crate::evolve::{thin_film_rhs, Frame, Params, DEFAULT_RUPTURE_EPS};
use crate::linalg::DenseLu;
use crate::spectral::{grid_min, Lattice, SpectralField};
use crate::spectrum::Linearization;

pub const DEFAULT_MAX_ITERS: usize = 25;
/// Jacobians with a smaller singular value estimate are treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;
/// Truncation used for the reduced bifurcation function.
pub const REDUCED_F_TRUNCATION: usize = 16;
pub const REDUCED_F_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SteadyResult {
    pub field: SpectralField,
    /// L2 norm of the stationary residual.
    pub residual_norm: f64,
    /// Residual evaluations, including the final converged one.
    pub newton_iters: usize,
    pub delta: f64,
}

/// `H_theta + gamma div(H^3 grad(lap H + H)) - delta (H^3 cos theta)_theta`.
pub fn stationary_residual(h: &SpectralField, p: &Params) -> Result<SpectralField> {
    Ok(-thin_film_rhs(h, p, 0.0, true, DEFAULT_RUPTURE_EPS)?.0)
}

/// Second-order small-gravity expansion of the steady state, independent of zeta.
pub fn expansion_hdelta(m: f64, gamma: f64, delta: f64, lattice: Lattice) -> Result<SpectralField> {
    let d = 1.0 + 36.0 * gamma * gamma * m.powi(6);
    let cos2 = 3.0 * m.powi(5) / (2.0 * d);
    let sin2 = 9.0 * gamma * m.powi(8) / d;
    let mut h = SpectralField::constant(lattice, m);
    h.set(1, 0, Complex64::new(0.5 * delta * m.powi(3), 0.0));
    // A cos 2θ - B sin 2θ has e^{2iθ} coefficient (A + iB) / 2.
    h.set(2, 0, Complex64::new(0.5 * cos2, 0.5 * sin2) * (delta * delta));
    let min_h = grid_min(&h);
    if !(min_h > 0.0) {
        return Err(RimflowError::Positivity { min_h });
    }
    Ok(h)
}

fn singularity_check(lu: &DenseLu) -> Result<()> {
    let sigma = lu.sigma_min_estimate(8);
    if sigma < SINGULAR_THRESHOLD {
        return Err(RimflowError::SingularJacobian { sigma_min: sigma });
    }
    Ok(())
}

/// Newton iteration on the zero-mean modes, optionally excluding further
/// modes from both unknowns and equations. Failures return the last iterate.
fn newton(
    p: &Params,
    init: &SpectralField,
    tol: f64,
    max_iters: usize,
    excluded: &[(i64, usize)],
) -> std::result::Result<SteadyResult, (RimflowError, SpectralField)> {
    let lat = *init.lattice();
    let modes: Vec<(i64, usize)> = lat.modes().filter(|m| *m != (0, 0) && !excluded.contains(m)).collect();
    let mut h = init.clone();
    let mut residual_norm = f64::INFINITY;
    for iter in 1..=max_iters {
        let r = stationary_residual(&h, p).map_err(|e| (e, h.clone()))?;
        residual_norm = modes
            .iter()
            .map(|&(k, l)| r.get(k, l as i64).norm_sqr() * if l == 0 { 1.0 } else { 2.0 })
            .sum::<f64>()
            .sqrt();
        let lin = Linearization::new(&h, p, Frame::Lab).map_err(|e| (e, h.clone()))?;
        // D_u F is minus the linearised right-hand side.
        let jac = -lin.matrix_on(&modes);
        let lu = DenseLu::new(&jac).map_err(|e| (e, h.clone()))?;
        singularity_check(&lu).map_err(|e| (e, h.clone()))?;
        if residual_norm <= tol {
            return Ok(SteadyResult { field: h, residual_norm, newton_iters: iter, delta: p.delta });
        }
        let mut rhs: Vec<Complex64> = modes.iter().map(|&(k, l)| -r.get(k, l as i64)).collect();
        lu.solve(&mut rhs);
        for (&(k, l), du) in modes.iter().zip(&rhs) {
            let idx = lat.index(k, l);
            h.coeffs_mut()[idx] += du;
        }
        if !h.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err((RimflowError::NoConvergence { iterations: iter, residual: f64::NAN }, h));
        }
        h.symmetrize_reality();
    }
    Err((RimflowError::NoConvergence { iterations: max_iters, residual: residual_norm }, h))
}

/// Newton solve of the stationary equation with the mean pinned to that of `init`.
pub fn newton_steady(p: &Params, init: &SpectralField, tol: f64) -> Result<SteadyResult> {
    check_steady_inputs(p, init, tol)?;
    newton(p, init, tol, DEFAULT_MAX_ITERS, &[]).map_err(|(e, _)| e)
}

fn check_steady_inputs(p: &Params, init: &SpectralField, tol: f64) -> Result<()> {
    p.validate()?;
    if !(tol > 0.0) {
        return Err(RimflowError::InvalidParameter("tolerance must be positive".into()));
    }
    if !init.is_real() || init.lattice().ell() != p.ell {
        return Err(RimflowError::InvalidParameter(
            "initial guess must be real and share ell with the parameters".into(),
        ));
    }
    let min_h = grid_min(init);
    if !(min_h > 0.0) {
        return Err(RimflowError::Positivity { min_h });
    }
    Ok(())
}

/// Largest coefficient with l != 0.
pub fn zeta_dependence(h: &SpectralField) -> f64 {
    h.lattice().modes().zip(h.coeffs()).filter(|((_, l), _)| *l != 0).map(|(_, c)| c.norm()).fold(0.0, f64::max)
}

/// Natural-parameter continuation over increasing gravity values.
pub fn continuation(deltas: &[f64], m: f64, gamma: f64, lattice: Lattice, tol: f64) -> Result<Vec<SteadyResult>> {
    if deltas.is_empty() {
        return Ok(Vec::new());
    }
    if deltas[0] < 0.0 || deltas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RimflowError::InvalidParameter("gravity values must be non-negative and increasing".into()));
    }
    let mut out: Vec<SteadyResult> = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let p = Params::new(gamma, delta, lattice.ell(), m)?;
        let init = match out.last() {
            Some(prev) => prev.field.clone(),
            None => expansion_hdelta(m, gamma, delta, lattice)
                .or_else(|_| Ok::<_, RimflowError>(SpectralField::constant(lattice, m)))?,
        };
        let fail = |e: RimflowError, f: &SpectralField| RimflowError::ContinuationFailed {
            delta,
            min_h: grid_min(f),
            source: Box::new(e),
        };
        let res = newton(&p, &init, tol, DEFAULT_MAX_ITERS, &[]).map_err(|(e, f)| fail(e, &f))?;
        let zd = zeta_dependence(&res.field);
        if zd > 1e-10 {
            let e = RimflowError::Solver(format!("steady state depends on zeta (max axial coefficient {zd:.3e})"));
            return Err(fail(e, &res.field));
        }
        out.push(res);
    }
    Ok(out)
}

fn kernel_index(lattice: &Lattice) -> Result<usize> {
    match lattice.ell_over_pi() {
        Some(n) if n <= lattice.l_max() => Ok(n),
        Some(n) => {
            Err(RimflowError::InvalidParameter(format!("kernel mode l={n} exceeds truncation L={}", lattice.l_max())))
        }
        None => Err(RimflowError::InvalidParameter(format!(
            "ell/pi = {} is not an integer",
            lattice.ell() / std::f64::consts::PI
        ))),
    }
}

/// Reduced bifurcation function: the `cos(l* zeta)` component of the
/// stationary residual at `m + a cos(l* zeta) + v`, where `v` solves every
/// other zero-mean equation. `l* = ell / pi`.
pub fn reduced_f_sample_on(a: f64, delta: f64, m: f64, gamma: f64, lattice: Lattice) -> Result<f64> {
    let l_star = kernel_index(&lattice)?;
    let p = Params::new(gamma, delta, lattice.ell(), m)?;
    let mut init = SpectralField::constant(lattice, m);
    init.set(0, l_star, Complex64::new(0.5 * a, 0.0));
    init.set(1, 0, Complex64::new(0.5 * delta * m.powi(3), 0.0));
    let res = newton(&p, &init, REDUCED_F_TOL, DEFAULT_MAX_ITERS, &[(0, l_star)]).map_err(|(e, _)| e)?;
    let r = stationary_residual(&res.field, &p)?;
    Ok(2.0 * r.get(0, l_star as i64).re)
}

/// [`reduced_f_sample_on`] at the default truncation.
pub fn reduced_f_sample(a: f64, delta: f64, m: f64, gamma: f64, ell: f64) -> Result<f64> {
    let lattice = Lattice::new(REDUCED_F_TRUNCATION, REDUCED_F_TRUNCATION, ell)?;
    reduced_f_sample_on(a, delta, m, gamma, lattice)
}

/// Closed form of the mixed derivative `d_a d_delta^2 f(0, 0)`.
pub fn lyapunov_schmidt_c(m: f64, gamma: f64, ell: f64) -> Result<f64> {
    if Lattice::new(2, 2, ell)?.ell_over_pi().is_none() {
        return Err(RimflowError::InvalidParameter("ell/pi must be a positive integer".into()));
    }
    let scale = (std::f64::consts::PI / ell).powi(2);
    Ok(scale * 9.0 * gamma * m.powi(7) / (1.0 + 4.0 * gamma * gamma * m.powi(6)))
}

/// Finite-difference estimate of `d_a d_delta^2 f(0, 0)` from samples at
/// `(+-a, delta)`, using that f is odd in `a` and even in `delta`.
pub fn lyapunov_schmidt_c_numeric(a: f64, delta: f64, m: f64, gamma: f64, lattice: Lattice) -> Result<f64> {
    let fp = reduced_f_sample_on(a, delta, m, gamma, lattice)?;
    let fm = reduced_f_sample_on(-a, delta, m, gamma, lattice)?;
    Ok((fp - fm) / (a * delta * delta))
}
