//! Initial conditions for `simulate` and the figure scenarios for
//! `phase-portrait`.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rimflow_core::slowode::{manifold_to_field, ManifoldPoint, OdeConfig};
use rimflow_core::spectral::read_field;
use rimflow_core::steady::expansion_hdelta;
use rimflow_core::{Complex64, Lattice, SpectralField};

use crate::args::Preset;
use crate::error::{CliError, CliResult};

/// Parameters shared by all initial conditions.
#[derive(Clone, Copy, Debug)]
pub struct InitContext {
    pub lattice: Lattice,
    pub m: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Whether `-K`/`-L` were given, in which case file input is resized.
    pub explicit_truncation: bool,
    /// Whether `--ell` was given, in which case file input must match it.
    pub explicit_ell: bool,
}

/// Builds the initial field from an `--init` specification.
pub fn initial_field(spec: &str, ctx: &InitContext) -> CliResult<SpectralField> {
    if let Some(path) = spec.strip_prefix("file:") {
        return from_file(Path::new(path), ctx);
    }
    let Some(preset) = spec.strip_prefix("preset:") else {
        return Err(CliError::Usage(format!("--init must start with `preset:` or `file:`, got `{spec}`")));
    };
    let (name, rest) = preset.split_once(':').unwrap_or((preset, ""));
    match name {
        "constant" => Ok(SpectralField::constant(ctx.lattice, ctx.m)),
        "expansion" => Ok(expansion_hdelta(ctx.m, ctx.gamma, ctx.delta, ctx.lattice)?),
        "manifold" => {
            let mut a1 = Complex64::new(0.0, 0.0);
            let mut b = 0.0;
            for (key, value) in key_values(rest)? {
                match key {
                    "a1" => a1.re = value,
                    "a1i" => a1.im = value,
                    "b" => b = value,
                    other => return Err(CliError::Usage(format!("unknown manifold key `{other}`"))),
                }
            }
            let x = ManifoldPoint::new(a1, b, ctx.m)?;
            Ok(manifold_to_field(&x, ctx.lattice)?)
        }
        "cosines" => cosines(rest, ctx),
        other => Err(CliError::Usage(format!("unknown preset `{other}`"))),
    }
}

fn key_values(rest: &str) -> CliResult<Vec<(&str, f64)>> {
    rest.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) =
                kv.split_once('=').ok_or_else(|| CliError::Usage(format!("expected key=value, got `{kv}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| CliError::Usage(format!("bad number in `{kv}`")))?;
            Ok((k.trim(), v))
        })
        .collect()
}

/// `k:l=amp,...` adds `amp cos(k theta) cos(l zeta)` to the mean `m`.
fn cosines(rest: &str, ctx: &InitContext) -> CliResult<SpectralField> {
    let mut h = SpectralField::constant(ctx.lattice, ctx.m);
    for (mode, amp) in key_values(rest)? {
        let bad = || CliError::Usage(format!("cosine mode must be `k:l`, got `{mode}`"));
        let (k, l) = mode.split_once(':').ok_or_else(bad)?;
        let k: usize = k.trim().parse().map_err(|_| bad())?;
        let l: usize = l.trim().parse().map_err(|_| bad())?;
        if k > ctx.lattice.k_max() || l > ctx.lattice.l_max() {
            return Err(CliError::Usage(format!("mode {k}:{l} outside the truncation")));
        }
        // A stored (k, l) coefficient with l > 0 multiplies 2 cos(l zeta).
        let weight = match (k, l) {
            (0, 0) => 1.0,
            (0, _) | (_, 0) => 0.5,
            _ => 0.25,
        };
        let k = k as i64;
        let old = h.get(k, l as i64);
        h.set(k, l, old + Complex64::new(amp * weight, 0.0));
    }
    Ok(h)
}

fn from_file(path: &Path, ctx: &InitContext) -> CliResult<SpectralField> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let field = read_field(BufReader::new(file))?;
    if !field.is_real() {
        return Err(CliError::Usage(format!("{} does not hold a real field", path.display())));
    }
    if ctx.explicit_ell && (field.lattice().ell() - ctx.lattice.ell()).abs() > 1e-12 * ctx.lattice.ell() {
        return Err(CliError::Usage(format!(
            "{} was written for ell = {}, but ell = {} was requested",
            path.display(),
            field.lattice().ell(),
            ctx.lattice.ell()
        )));
    }
    if ctx.explicit_truncation {
        Ok(field.resized(ctx.lattice.k_max(), ctx.lattice.l_max()))
    } else {
        Ok(field)
    }
}

/// A phase-portrait scenario at m = gamma = 1.
pub struct PortraitPreset {
    pub initial: Vec<ManifoldPoint>,
    pub cfg: OdeConfig,
    /// Slow times at which `fig6` writes cross-section profiles.
    pub profile_times: Vec<f64>,
}

pub fn portrait_preset(preset: Preset) -> PortraitPreset {
    let point = |a1: Complex64, b: f64| ManifoldPoint { a1, b, m: 1.0 };
    match preset {
        Preset::Fig5 => {
            let mut initial = Vec::new();
            for r in [0.1, 0.2, 0.3, 0.4, 0.45] {
                for j in 0..4 {
                    let angle = std::f64::consts::FRAC_PI_2 * j as f64 + 0.3;
                    initial.push(point(Complex64::from_polar(r, angle), 0.0));
                }
            }
            PortraitPreset {
                initial,
                cfg: OdeConfig { tau_end: 10.0, dtau: 0.05, ..OdeConfig::default() },
                profile_times: vec![],
            }
        }
        Preset::Fig6 => PortraitPreset {
            initial: vec![point(Complex64::new(0.3, 0.0), 0.0)],
            cfg: OdeConfig { tau_end: 6.0, dtau: 0.05, ..OdeConfig::default() },
            profile_times: vec![0.0, 1.5, 4.0],
        },
        Preset::Fig7 => {
            let initial = [(0.02, 0.8), (0.1, 0.6), (0.2, 0.4), (0.3, 0.2), (0.4, 0.1), (0.3, -0.3)]
                .iter()
                .map(|&(a, b)| point(Complex64::new(a, 0.0), b))
                .collect();
            PortraitPreset {
                initial,
                cfg: OdeConfig { tau_end: 4.0, dtau: 0.05, ..OdeConfig::default() },
                profile_times: vec![],
            }
        }
    }
}
