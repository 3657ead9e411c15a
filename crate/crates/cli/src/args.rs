use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conewton::problems::StartKind;
use conewton::SolverConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "conewton", version, about = "Semi-smooth Newton benchmarks for nonlinear conic programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Circular-cone linear programs over a grid of angles and seeds.
    Circular(CircularArgs),
    /// Low-rank matrix completion over a grid of densities, ranks and seeds.
    Lowrank(LowrankArgs),
    /// Residual landscape of a two-dimensional second-order-cone program.
    Landscape(LandscapeArgs),
    /// Solves one instance file.
    Solve(SolveArgs),
    /// Writes a generated instance file.
    Generate(GenerateArgs),
    /// Re-runs a batch from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Overrides of the solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct SolverFlags {
    /// Residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap per solve.
    #[arg(long)]
    pub maxiter: Option<usize>,
    /// Backtracking cap per linesearch.
    #[arg(long = "maxiter-ls")]
    pub maxiter_ls: Option<usize>,
    /// Armijo constant.
    #[arg(long = "armijo")]
    pub c: Option<f64>,
    /// Stop when a step moves the iterate less than this.
    #[arg(long = "progress-eps")]
    pub progress_eps: Option<f64>,
    /// Wall-clock budget per solve in seconds.
    #[arg(long = "time-limit")]
    pub time_limit: Option<f64>,
}

impl SolverFlags {
    pub fn apply(&self, mut cfg: SolverConfig) -> SolverConfig {
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.maxiter {
            cfg.maxiter = v;
        }
        if let Some(v) = self.maxiter_ls {
            cfg.maxiter_ls = v;
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        if self.progress_eps.is_some() {
            cfg.progress_eps = self.progress_eps;
        }
        if self.time_limit.is_some() {
            cfg.time_limit = self.time_limit;
        }
        cfg
    }
}

/// Flags that affect where and how output is written but not the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct OutputFlags {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Parallel solves; capped by `CONEWTON_THREADS`.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

fn parse_start(s: &str) -> Result<String, String> {
    StartKind::from_str(s).map(|k| k.as_str().to_string()).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct CircularArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Equality rows; defaults to n/4 rounded.
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma-separated angles such as `pi/12,pi/6` or radians.
    #[arg(long, default_value = "pi/12,pi/6,pi/4,pi/3")]
    pub omegas: String,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long = "seed-base", default_value_t = 0)]
    pub seed_base: u64,
    #[arg(long, default_value = "SP0", value_parser = parse_start)]
    pub start: String,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    #[serde(skip, default = "default_output")]
    pub output: OutputFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
pub struct LowrankArgs {
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Comma-separated observation fractions.
    #[arg(long = "p", default_value = "0.1,0.2,0.3")]
    pub p: String,
    /// Comma-separated rank bounds.
    #[arg(long = "rank", default_value = "1,2,3")]
    pub rank: String,
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long = "seed-base", default_value_t = 0)]
    pub seed_base: u64,
    /// Perturbed restarts tried after the rank-one start fails.
    #[arg(long, default_value_t = crate::batch::LOWRANK_PERTURBATIONS)]
    pub perturbations: u32,
    /// Comma-separated wall-time thresholds of the cumulative summary.
    #[arg(long, default_value = "1,5,10,20,60,120,300")]
    pub thresholds: String,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    #[serde(skip, default = "default_output")]
    pub output: OutputFlags,
}

pub fn default_output() -> OutputFlags {
    OutputFlags {
        out: PathBuf::from("out"),
        jobs: 1,
        format: Format::Csv,
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct LandscapeArgs {
    /// Problem dimension; only 2 is supported.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Seed of the generated instance.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Fixed multiplier: `optimal` or a number.
    #[arg(long, default_value = "optimal")]
    pub multiplier: String,
    /// Plot window `y1min,y1max,y2min,y2max`; centred on the solution when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Starting point; low-rank instances default to the completion restarts.
    #[arg(long, value_parser = parse_start)]
    pub start: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::batch::LOWRANK_PERTURBATIONS)]
    pub perturbations: u32,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Directory for `manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub kind: GenerateKind,
    /// Destination file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum GenerateKind {
    Circular {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value = "pi/6")]
        omega: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Lowrank {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "replay")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

/// Parses `pi/12`, `5pi/12`, `5*pi/12`, `pi` or plain radians.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    if let Some(pos) = t.find("pi") {
        let coef = t[..pos].trim_end_matches('*');
        let rest = &t[pos + 2..];
        let k = if coef.is_empty() {
            1.0
        } else {
            coef.parse::<f64>().map_err(|_| format!("bad angle `{s}`"))?
        };
        let d = if rest.is_empty() {
            1.0
        } else if let Some(d) = rest.strip_prefix('/') {
            d.parse::<f64>().map_err(|_| format!("bad angle `{s}`"))?
        } else {
            return Err(format!("bad angle `{s}`"));
        };
        Ok(k * std::f64::consts::PI / d)
    } else {
        t.parse::<f64>().map_err(|_| format!("bad angle `{s}`"))
    }
}

pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| format!("bad {what} `{t}`")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angles_parse() {
        assert_eq!(parse_angle("pi/12").unwrap(), PI / 12.0);
        assert_eq!(parse_angle("5pi/12").unwrap(), 5.0 * PI / 12.0);
        assert_eq!(parse_angle("5*pi/12").unwrap(), 5.0 * PI / 12.0);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert!(parse_angle("pi*2").is_err());
    }

    #[test]
    fn overrides_apply() {
        let flags = SolverFlags {
            tol: Some(1e-6),
            ..Default::default()
        };
        assert_eq!(flags.apply(SolverConfig::default()).tol, 1e-6);
        assert_eq!(flags.apply(SolverConfig::default()).maxiter, 100);
    }
}
