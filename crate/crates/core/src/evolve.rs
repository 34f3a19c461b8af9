//! Time integration of the thin-film equation in the lab and co-moving frames.

use num_complex::Complex64;

use crate::error::{Result, RimflowError};
use crate::spectral::{energy, fft_size, grid_min, manifold_distance, sobolev_norm, Grid, SpectralField};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Physical parameters: surface tension, gravity, cylinder length and mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub gamma: f64,
    pub delta: f64,
    pub ell: f64,
    pub mass: f64,
}

impl Params {
    pub fn new(gamma: f64, delta: f64, ell: f64, mass: f64) -> Result<Self> {
        let p = Self { gamma, delta, ell, mass };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(RimflowError::InvalidParameter(what.to_string()));
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return bad("delta must be non-negative");
        }
        if !(self.ell.is_finite() && self.ell > 0.0) {
            return bad("ell must be positive");
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return bad("mass must be positive");
        }
        Ok(())
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }
}

pub const DEFAULT_RUPTURE_EPS: f64 = 1e-3;
pub const DEFAULT_BLOWUP_H4: f64 = 1e6;

/// Which terms of the equation a step integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Model {
    #[default]
    Full,
    /// Only the constant-coefficient biharmonic part; a test hook with an
    /// exact solution.
    BiharmonicOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Frame {
    Lab,
    #[default]
    Comoving,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub frame: Frame,
    pub rupture_eps: f64,
    pub blowup_h4: f64,
    /// Store a field snapshot at every n-th sample; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Time between diagnostic samples.
    pub sample_interval: f64,
    /// Relative tolerance of the step-doubling error estimate.
    pub rtol: f64,
    pub model: Model,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_end: 1.0,
            frame: Frame::Comoving,
            rupture_eps: DEFAULT_RUPTURE_EPS,
            blowup_h4: DEFAULT_BLOWUP_H4,
            snapshot_every: 0,
            sample_interval: 0.1,
            rtol: 1e-7,
            model: Model::Full,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(RimflowError::InvalidParameter(what.to_string()));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad("t_end must be positive");
        }
        if !(self.rupture_eps > 0.0) {
            return bad("rupture threshold must be positive");
        }
        if !(self.blowup_h4 > 0.0) {
            return bad("blow-up cap must be positive");
        }
        if !(self.sample_interval > 0.0) {
            return bad("sample interval must be positive");
        }
        if !(self.rtol > 0.0) {
            return bad("rtol must be positive");
        }
        Ok(())
    }
}

/// Evaluates `-transport h_theta - gamma div(h^3 grad(lap h + h)) + delta (h^3 cos(theta + phase))_theta`
/// on one dealiased grid, returning the right-hand side and the grid minimum of `h`.
pub(crate) fn thin_film_rhs(
    h: &SpectralField,
    p: &Params,
    phase: f64,
    transport: bool,
    rupture_eps: f64,
) -> Result<(SpectralField, f64)> {
    let lat = *h.lattice();
    let n0 = fft_size(5 * lat.k_max() + 2);
    let n1 = fft_size(5 * lat.l_max() + 1);
    let s = lat.axial_scale();
    let w = |k: i64, l: i64| (1.0 - lat.wavenumber_sq(k, l)) * h.get(k, l);
    let hg = Grid::from_even(n0, n1, &lat, h.coeffs());
    let min_h = hg.data.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if !(min_h >= rupture_eps) {
        return Err(RimflowError::Rupture { min_h });
    }
    let gt = Grid::synthesize_with(n0, n1, lat.k_max(), lat.l_max(), |k, l| I * k as f64 * w(k, l));
    let gz = Grid::synthesize_with(n0, n1, lat.k_max(), lat.l_max(), |k, l| I * (s * l as f64) * w(k, l));
    let mut ft = Grid::zeros(n0, n1);
    let mut fz = Grid::zeros(n0, n1);
    let mut fc = Grid::zeros(n0, n1);
    for i in 0..n0 {
        let c = (std::f64::consts::TAU * i as f64 / n0 as f64 + phase).cos();
        for j in 0..n1 {
            let idx = i * n1 + j;
            let hv = hg.data[idx].re;
            let h3 = hv * hv * hv;
            ft.data[idx] = Complex64::new(h3 * gt.data[idx].re, 0.0);
            fz.data[idx] = Complex64::new(h3 * gz.data[idx].re, 0.0);
            fc.data[idx] = Complex64::new(h3 * c, 0.0);
        }
    }
    let (ft, fz, fc) = (ft.forward(), fz.forward(), fc.forward());
    let mut out = SpectralField::zeros_complex(lat);
    let tr = if transport { 1.0 } else { 0.0 };
    for (idx, (k, l)) in lat.modes().enumerate() {
        let (kf, li) = (k as f64, l as i64);
        let flux = |sign: i64| I * kf * ft.coeff(k, sign * li) + I * (s * (sign * li) as f64) * fz.coeff(k, sign * li);
        let div = (flux(1) + flux(-1)) * 0.5;
        let forcing = I * kf * (fc.coeff(k, li) + fc.coeff(k, -li)) * 0.5;
        out.coeffs_mut()[idx] = -I * kf * tr * h.get(k, li) - div * p.gamma + forcing * p.delta;
    }
    let smax = lat.wavenumber_sq(lat.k_max() as i64, lat.l_max() as i64) + 1.0;
    let scale = h.abs_sum().powi(4) * smax * smax * (p.gamma + p.delta + 1.0);
    debug_assert!(out.reality_defect_abs() <= 1e-12 * scale, "reality defect {}", out.reality_defect_abs());
    out.symmetrize_reality();
    Ok((out, min_h))
}

/// Right-hand side in the lab frame.
pub fn rhs_lab(h: &SpectralField, p: &Params) -> Result<SpectralField> {
    thin_film_rhs(h, p, 0.0, true, DEFAULT_RUPTURE_EPS).map(|r| r.0)
}

/// Right-hand side in the frame rotating with the cylinder, at time `t`.
pub fn rhs_comoving(h: &SpectralField, t: f64, p: &Params) -> Result<SpectralField> {
    thin_film_rhs(h, p, t, false, DEFAULT_RUPTURE_EPS).map(|r| r.0)
}

fn euler(h: &SpectralField, t: f64, dt: f64, p: &Params, cfg: &EvolveConfig) -> Result<SpectralField> {
    let lat = *h.lattice();
    let stiff = p.gamma * h.mean().powi(3);
    let explicit = match cfg.model {
        Model::Full => {
            let transport = cfg.frame == Frame::Lab;
            let phase = if transport { 0.0 } else { t };
            Some(thin_film_rhs(h, p, phase, transport, cfg.rupture_eps)?.0)
        }
        Model::BiharmonicOnly => None,
    };
    let mut out = h.clone();
    for (idx, (k, l)) in lat.modes().enumerate() {
        let s = lat.wavenumber_sq(k, l as i64);
        let a = stiff * s * s;
        let hv = h.coeffs()[idx];
        let r = match &explicit {
            Some(rhs) => rhs.coeffs()[idx] + hv * a,
            None => Complex64::new(0.0, 0.0),
        };
        out.coeffs_mut()[idx] = (hv + r * dt) / (1.0 + dt * a);
    }
    Ok(out)
}

/// One IMEX Euler step of size `dt`, accepted only when two half steps agree
/// with the full step to the relative tolerance; returns the half-step result.
pub fn step(h: &SpectralField, t: f64, dt: f64, p: &Params, cfg: &EvolveConfig) -> Result<SpectralField> {
    step_with_error(h, t, dt, p, cfg).map(|r| r.0)
}

fn step_with_error(h: &SpectralField, t: f64, dt: f64, p: &Params, cfg: &EvolveConfig) -> Result<(SpectralField, f64)> {
    let full = euler(h, t, dt, p, cfg)?;
    let mid = euler(h, t, 0.5 * dt, p, cfg)?;
    let half = euler(&mid, t + 0.5 * dt, 0.5 * dt, p, cfg)?;
    let err = (&half - &full).l2_norm() / half.l2_norm().max(f64::MIN_POSITIVE);
    if !err.is_finite() {
        return Err(RimflowError::BlowUp { h4_norm: f64::INFINITY });
    }
    if err > cfg.rtol {
        return Err(RimflowError::StepRejected { error: err, tolerance: cfg.rtol });
    }
    let h4 = sobolev_norm(&half, 4.0);
    if h4 > cfg.blowup_h4 {
        return Err(RimflowError::BlowUp { h4_norm: h4 });
    }
    Ok((half, err))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub min_h: f64,
    pub dist_m: f64,
    pub a1: Complex64,
    pub b: f64,
}

impl Sample {
    pub fn of(t: f64, h: &SpectralField) -> Self {
        Self {
            t,
            mass: h.mean(),
            energy: energy(h),
            min_h: grid_min(h),
            dist_m: manifold_distance(h),
            a1: h.get(1, 0),
            b: 2.0 * h.get(0, 1).re,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    Rupture,
    BlowUp,
}

impl StopReason {
    pub fn label(&self) -> &'static str {
        match self {
            StopReason::Completed => "completed",
            StopReason::Rupture => "rupture",
            StopReason::BlowUp => "blowup",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// `(sample index, t, field)`.
    pub snapshots: Vec<(usize, f64, SpectralField)>,
    pub reason: StopReason,
    pub final_field: SpectralField,
    pub final_time: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Accepted steps (delta = 0 only) where the energy rose by more than 1e-10.
    pub energy_increases: usize,
    pub max_energy_increase: f64,
}

/// Integrates from `h0` to `cfg.t_end`, stopping early on rupture or blow-up.
pub fn integrate(h0: &SpectralField, p: &Params, cfg: &EvolveConfig) -> Result<Trajectory> {
    p.validate()?;
    cfg.validate()?;
    if !h0.is_real() {
        return Err(RimflowError::InvalidParameter("initial field must be real".into()));
    }
    if h0.lattice().ell() != p.ell {
        return Err(RimflowError::InvalidParameter("initial field and parameters disagree on ell".into()));
    }
    let min_h = grid_min(h0);
    if !(min_h > 0.0) {
        return Err(RimflowError::Positivity { min_h });
    }
    let mut h = h0.clone();
    let mut t = 0.0;
    let mut dt = cfg.dt;
    let mut traj = Trajectory {
        samples: vec![Sample::of(0.0, h0)],
        snapshots: Vec::new(),
        reason: StopReason::Completed,
        final_field: h0.clone(),
        final_time: 0.0,
        accepted_steps: 0,
        rejected_steps: 0,
        energy_increases: 0,
        max_energy_increase: 0.0,
    };
    if cfg.snapshot_every > 0 {
        traj.snapshots.push((0, 0.0, h0.clone()));
    }
    let mut e_prev = energy(&h);
    let mut sample_index = 1usize;
    let dt_min = cfg.dt * 1e-9;
    while t < cfg.t_end {
        let t_sample = (sample_index as f64 * cfg.sample_interval).min(cfg.t_end);
        let dt_try = dt.min(t_sample - t);
        match step_with_error(&h, t, dt_try, p, cfg) {
            Ok((next, err)) => {
                traj.accepted_steps += 1;
                h = next;
                t = if t_sample - t <= dt_try { t_sample } else { t + dt_try };
                if p.delta == 0.0 {
                    let e = energy(&h);
                    if e > e_prev + 1e-10 {
                        traj.energy_increases += 1;
                    }
                    traj.max_energy_increase = traj.max_energy_increase.max(e - e_prev);
                    e_prev = e;
                }
                if err < 0.25 * cfg.rtol && dt_try == dt {
                    dt = (2.0 * dt).min(cfg.dt);
                }
                if t == t_sample {
                    traj.samples.push(Sample::of(t, &h));
                    if cfg.snapshot_every > 0 && sample_index.is_multiple_of(cfg.snapshot_every) {
                        traj.snapshots.push((sample_index, t, h.clone()));
                    }
                    sample_index += 1;
                }
            }
            Err(RimflowError::StepRejected { .. }) => {
                traj.rejected_steps += 1;
                dt = 0.5 * dt_try;
                if dt < dt_min {
                    return Err(RimflowError::StepUnderflow { t, dt });
                }
            }
            Err(RimflowError::Rupture { .. }) => {
                traj.reason = StopReason::Rupture;
                break;
            }
            Err(RimflowError::BlowUp { .. }) => {
                traj.reason = StopReason::BlowUp;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if traj.reason != StopReason::Completed && traj.samples.last().map(|s| s.t) != Some(t) {
        traj.samples.push(Sample::of(t, &h));
    }
    traj.final_field = h;
    traj.final_time = t;
    Ok(traj)
}
