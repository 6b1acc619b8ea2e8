//! Command-line surface and configuration merging.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use glvortex::minimize::{SolverConfig, StepRule};
use serde::{Deserialize, Serialize};

use crate::cache::CACHE_ENV;
use crate::error::{CliError, CliResult};
use crate::report::Format;

#[derive(Parser, Debug)]
#[command(
    name = "glvortex",
    version,
    about = "Reduced Ginzburg-Landau energies, Landau levels and vortex-lattice checks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Directory for reports and run manifests.
    #[arg(long, global = true, default_value = "glvortex-out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Ignore and do not write the result cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Cache directory (default: $GLVORTEX_CACHE_DIR; no caching when unset).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads for independent solves.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML file with defaults for the solver and cache settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StepArg {
    Fixed,
    TwoPoint,
    QuasiNewton,
}

impl From<StepArg> for StepRule {
    fn from(s: StepArg) -> Self {
        match s {
            StepArg::Fixed => StepRule::Fixed,
            StepArg::TwoPoint => StepRule::AdaptiveTwoPoint,
            StepArg::QuasiNewton => StepRule::QuasiNewton,
        }
    }
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverFlags {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Bound on the Euler-Lagrange residual.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[arg(long, global = true)]
    pub max_iterations: Option<usize>,
    /// Random starts per solve (default 1; 16 for Abrikosov minimizations).
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub step_rule: Option<StepArg>,
}

impl SolverFlags {
    /// Fill unset fields from `other`.
    pub fn or(self, other: &SolverFlags) -> SolverFlags {
        SolverFlags {
            seed: self.seed.or(other.seed),
            tolerance: self.tolerance.or(other.tolerance),
            max_iterations: self.max_iterations.or(other.max_iterations),
            restarts: self.restarts.or(other.restarts),
            step_rule: self.step_rule.or(other.step_rule),
        }
    }

    pub fn config(&self, default_restarts: usize) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            grad_tolerance: self.tolerance.unwrap_or(d.grad_tolerance),
            step_rule: self.step_rule.map(Into::into).unwrap_or(d.step_rule),
            restarts: self.restarts.unwrap_or(default_restarts),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub cache_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub solver: SolverFlags,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Effective settings: flags over config file over defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub solver: SolverFlags,
    pub cache_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl Settings {
    pub fn resolve(global: &Global) -> CliResult<Self> {
        let file = match &global.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let cache_dir = if global.no_cache {
            None
        } else {
            global
                .cache_dir
                .clone()
                .or(file.cache_dir)
                .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        };
        Ok(Self {
            solver: global.solver.clone().or(&file.solver),
            cache_dir,
            jobs: global.jobs.or(file.jobs),
        })
    }
}

/// Square or cube solve: side `R` with `--n` interior sites per axis or spacing `--h`.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxArgs {
    #[arg(long)]
    pub b: f64,
    #[arg(long = "R")]
    pub r: f64,
    /// Interior sites per axis (overrides --h).
    #[arg(long)]
    pub n: Option<usize>,
    /// Grid spacing used when --n is absent.
    #[arg(long, default_value_t = 0.25)]
    pub h: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub b: Vec<f64>,
    #[arg(long = "R", value_delimiter = ',', default_values_t = vec![8.0, 12.0, 16.0])]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub h: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumArgs {
    /// Flux quanta `n`; the side is `sqrt(2 pi n)`.
    #[arg(long)]
    pub n_quanta: u64,
    /// Sites per axis of the cross-section.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Number of eigenvalues (default n + 2).
    #[arg(long)]
    pub k: Option<usize>,
    /// Height of the 3D box (default: the side).
    #[arg(long = "L")]
    pub l: Option<f64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LllArgs {
    #[arg(long)]
    pub n_quanta: u64,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = glvortex::abrikosov::DEFAULT_CLUSTER_TOL)]
    pub cluster_tol: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbrikosovArgs {
    #[arg(long)]
    pub n_quanta: u64,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EabArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 3, 4, 5, 6])]
    pub n_list: Vec<u64>,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Also estimate `E_Ab` from `g(b)/(1-b)^2`.
    #[arg(long)]
    pub cross_check: bool,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.85, 0.9, 0.95])]
    pub cross_b: Vec<f64>,
    #[arg(long = "cross-R", value_delimiter = ',', default_values_t = vec![8.0, 12.0, 16.0])]
    pub cross_r: Vec<f64>,
    #[arg(long, default_value_t = 0.125)]
    pub cross_h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Sandwich, cube density, L4 bounds, virial and quotient bounds.
    Lemmas,
    /// Bounds and monotonicity of g(b).
    G,
    /// Range, trend and cross-check of c(R)/R^2.
    Abrikosov,
    /// m0 against the Abrikosov energy.
    Ka,
    /// Density ratios of periodic minimizers.
    Density,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Field strengths (suite default when absent).
    #[arg(long, value_delimiter = ',')]
    pub b: Vec<f64>,
    /// Box sides (suite default when absent).
    #[arg(long = "R", value_delimiter = ',')]
    pub r: Vec<f64>,
    /// Grid spacing of Dirichlet solves (suite default when absent).
    #[arg(long)]
    pub h: Option<f64>,
    /// Flux quanta (suite default when absent).
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<u64>,
    /// Cross-section sites of periodic and Landau-level grids.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Coarser cross-section grid for the h^2 extrapolation of density ratios.
    #[arg(long, default_value_t = 32)]
    pub grid_coarse: usize,
    #[arg(long, default_value_t = 4)]
    pub grid3: usize,
    /// Abrikosov constant for density ratios (default: computed).
    #[arg(long, allow_hyphen_values = true)]
    pub eab: Option<f64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gl3dArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.85, 0.9, 0.95])]
    pub b: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    pub n_quanta: u64,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 4)]
    pub grid3: usize,
    /// Height of the box (default: the side).
    #[arg(long = "L")]
    pub l: Option<f64>,
    /// Cells per axis of the statistics tiling.
    #[arg(long, default_value_t = 2)]
    pub tiles: usize,
    /// Abrikosov constant for density ratios (default: computed).
    #[arg(long, allow_hyphen_values = true)]
    pub eab: Option<f64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Run manifest to replay.
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "args")]
pub enum Command {
    /// Ground-state energy on the Dirichlet square.
    #[command(name = "m0")]
    #[serde(rename = "m0")]
    SquareM0(BoxArgs),
    /// Ground-state energy on the Dirichlet cube.
    #[command(name = "M0")]
    #[serde(rename = "M0")]
    CubeM0(BoxArgs),
    /// L4-normalized quotient on the Dirichlet cube.
    #[serde(rename = "quotient")]
    Quotient(BoxArgs),
    /// Thermodynamic-limit estimate of g(b).
    #[serde(rename = "g")]
    G(GArgs),
    /// Lowest eigenvalues of the magnetic-periodic Landau operator.
    #[serde(rename = "spectrum2d")]
    Spectrum2d(SpectrumArgs),
    /// Lowest eigenvalues of the 3D operator periodic in x3.
    #[serde(rename = "spectrum3d")]
    Spectrum3d(SpectrumArgs),
    /// Lowest-Landau-level basis diagnostics.
    #[serde(rename = "lll")]
    Lll(LllArgs),
    /// Minimal Abrikosov energy c(R).
    #[serde(rename = "abrikosov")]
    Abrikosov(AbrikosovArgs),
    /// Estimate of E_Ab from c(R)/R^2.
    #[serde(rename = "eab")]
    Eab(EabArgs),
    /// Run a check suite; exits 1 when an asserted check fails.
    #[serde(rename = "verify")]
    Verify(VerifyArgs),
    /// Periodic minimizers and their density statistics.
    #[serde(rename = "gl3d")]
    Gl3d(Gl3dArgs),
    /// Replay a run manifest.
    #[serde(rename = "report")]
    Report(ReportArgs),
}

impl Command {
    /// File stem of this command's outputs.
    pub fn stem(&self) -> String {
        match self {
            Command::SquareM0(_) => "m0_square".into(),
            Command::CubeM0(_) => "m0_cube".into(),
            Command::Quotient(_) => "quotient".into(),
            Command::G(_) => "g".into(),
            Command::Spectrum2d(_) => "spectrum2d".into(),
            Command::Spectrum3d(_) => "spectrum3d".into(),
            Command::Lll(_) => "lll".into(),
            Command::Abrikosov(_) => "abrikosov".into(),
            Command::Eab(_) => "eab".into(),
            Command::Verify(v) => format!("verify_{}", suite_name(v.suite)),
            Command::Gl3d(_) => "gl3d".into(),
            Command::Report(_) => "report".into(),
        }
    }
}

pub fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Lemmas => "lemmas",
        Suite::G => "g",
        Suite::Abrikosov => "abrikosov",
        Suite::Ka => "ka",
        Suite::Density => "density",
    }
}
