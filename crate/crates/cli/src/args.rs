use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "rimflow", version, about = "Pseudospectral laboratory for three-dimensional capillary rimming flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate the thin-film equation in time.
    Simulate(SimulateArgs),
    /// Solve for steady states, optionally continuing in gravity.
    Steady(SteadyArgs),
    /// Sample the reduced bifurcation function.
    #[command(name = "reduced-f")]
    ReducedF(ReducedFArgs),
    /// Eigenvalues of the linearised operator.
    Spectrum(SpectrumArgs),
    /// Integrate the slow-manifold ODE from one initial point.
    #[command(name = "slow-ode")]
    SlowOde(SlowOdeArgs),
    /// Integrate a family of slow-manifold trajectories.
    #[command(name = "phase-portrait")]
    PhasePortrait(PortraitArgs),
    /// Run the built-in verification suite.
    Verify(VerifyArgs),
}

/// Flags shared by every command.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Surface-tension parameter.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Gravity parameter.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Scaled cylinder length; accepts forms like `pi`, `3pi/2`, `1.5707963`.
    #[arg(long, value_parser = parse_length)]
    pub ell: Option<f64>,
    /// Mean film thickness.
    #[arg(long)]
    pub m: Option<f64>,
    /// Azimuthal truncation.
    #[arg(short = 'K')]
    pub k: Option<usize>,
    /// Axial truncation.
    #[arg(short = 'L')]
    pub l: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write a JSON summary to the given file, or to standard output without a value.
    #[arg(long, num_args = 0..=1, default_missing_value = "-")]
    pub json: Option<String>,
    /// File of `key = value` lines supplying defaults for these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameArg {
    Lab,
    Comoving,
}

impl From<FrameArg> for rimflow_core::evolve::Frame {
    fn from(f: FrameArg) -> Self {
        match f {
            FrameArg::Lab => rimflow_core::evolve::Frame::Lab,
            FrameArg::Comoving => rimflow_core::evolve::Frame::Comoving,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// `preset:constant`, `preset:expansion`, `preset:manifold:a1=..,a1i=..,b=..`,
    /// `preset:cosines:k:l=amp,...` or `file:PATH`.
    #[arg(long, default_value = "preset:constant")]
    pub init: String,
    #[arg(long, value_enum, default_value_t = FrameArg::Comoving)]
    pub frame: FrameArg,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    /// Largest time step.
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sample_interval: f64,
    /// Write a snapshot every n-th sample; 0 writes only the final field.
    #[arg(long, default_value_t = 10)]
    pub snapshot_every: usize,
    /// Relative tolerance of the step-doubling error control.
    #[arg(long, default_value_t = 1e-7)]
    pub rtol: f64,
    /// Rupture threshold on the film minimum.
    #[arg(long, default_value_t = rimflow_core::evolve::DEFAULT_RUPTURE_EPS)]
    pub rupture_eps: f64,
}

#[derive(Args, Debug)]
pub struct SteadyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated increasing gravity values for continuation; overrides `--delta`.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Residual tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct ReducedFArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated kernel amplitudes.
    #[arg(long = "a", value_delimiter = ',', default_value = "-0.01,0.01")]
    pub amplitudes: Vec<f64>,
    /// Comma-separated gravity values; overrides `--delta`.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = FrameArg::Lab)]
    pub frame: FrameArg,
}

#[derive(Args, Debug, Clone)]
pub struct OdeArgs {
    #[arg(long)]
    pub tau_end: Option<f64>,
    #[arg(long)]
    pub dtau: Option<f64>,
    /// Absolute tolerance of the step-halving control.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Stop once `2|a1| + |b| >= m (1 - margin)`.
    #[arg(long)]
    pub margin: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SlowOdeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub ode: OdeArgs,
    /// Real part of the initial `a1`.
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub a1: f64,
    /// Imaginary part of the initial `a1`.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub a1_im: f64,
    /// Initial axial amplitude.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig5,
    Fig6,
    Fig7,
}

#[derive(Args, Debug)]
pub struct PortraitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub ode: OdeArgs,
    #[arg(long, value_enum, default_value_t = Preset::Fig5)]
    pub preset: Preset,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Run only the named checks (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// List the available checks and exit.
    #[arg(long)]
    pub list: bool,
}

/// Parses a real number, optionally written as a multiple or fraction of pi.
pub fn parse_length(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| format!("bad denominator in `{s}`"))?),
        None => (t.as_str(), 1.0),
    };
    let coeff = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(c) => c.trim_end_matches('*').parse::<f64>().map_err(|_| format!("bad multiple of pi in `{s}`"))?,
        None => num.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?,
    };
    Ok(coeff * std::f64::consts::PI / den)
}
