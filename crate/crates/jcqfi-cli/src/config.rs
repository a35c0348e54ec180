//! Command-line arguments and the validated sweep configuration.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use jcqfi::bloch::BlochState;

use crate::error::CliError;

/// Inclusive grid `min:max:count`. A bare number is a one-point grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Range {
    pub fn point(x: f64) -> Self {
        Self { min: x, max: x, count: 1 }
    }

    pub fn linear(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + h * i as f64 })
            .collect()
    }

    /// Geometric grid; both ends must be positive.
    pub fn log(&self) -> Result<Vec<f64>, CliError> {
        if self.min <= 0.0 {
            return Err(CliError::InvalidRange(format!("log spacing needs a positive start, got {}", self.min)));
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        let (a, b) = (self.min.ln(), self.max.ln());
        let h = (b - a) / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| match i {
                0 => self.min,
                _ if i + 1 == self.count => self.max,
                _ => (a + h * i as f64).exp(),
            })
            .collect())
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("bad number `{p}`: {e}"));
        let r = match parts.as_slice() {
            [x] => Range::point(num(x)?),
            [a, b, n] => {
                let count = n.trim().parse::<usize>().map_err(|e| format!("bad count `{n}`: {e}"))?;
                Range { min: num(a)?, max: num(b)?, count }
            }
            _ => return Err(format!("expected min:max:count, got `{s}`")),
        };
        if r.count == 0 {
            return Err("range count must be at least 1".into());
        }
        if !r.min.is_finite() || !r.max.is_finite() || r.max < r.min {
            return Err(format!("range `{s}` is empty or not finite"));
        }
        if r.count == 1 && r.max != r.min {
            return Err(format!("one-point range `{s}` must have min == max"));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Initial {
    Ground,
    Excited,
    /// Real pure or mixed start `(x0, 0, z0)`.
    Real(f64, f64),
}

impl Initial {
    pub fn state(&self) -> BlochState {
        match *self {
            Initial::Ground => BlochState::ground(),
            Initial::Excited => BlochState::excited(),
            Initial::Real(x, z) => BlochState::new(x, 0.0, z),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Initial::Ground => "ground".into(),
            Initial::Excited => "excited".into(),
            Initial::Real(x, z) => format!("{x},{z}"),
        }
    }
}

impl FromStr for Initial {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ground" | "g" => Ok(Initial::Ground),
            "excited" | "e" => Ok(Initial::Excited),
            _ => {
                let (x, z) = s.split_once(',').ok_or_else(|| format!("expected ground, excited or x0,z0; got `{s}`"))?;
                let x: f64 = x.trim().parse().map_err(|e| format!("bad x0 `{x}`: {e}"))?;
                let z: f64 = z.trim().parse().map_err(|e| format!("bad z0 `{z}`: {e}"))?;
                if !(x * x + z * z <= 1.0 + 1e-12) {
                    return Err(format!("initial state ({x}, {z}) lies outside the Bloch ball"));
                }
                Ok(Initial::Real(x, z))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Parser)]
#[command(name = "jcqfi", version, about = "Fisher information of a two-level probe of a coherent field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Alpha x tau grid for ground and excited starts.
    Scan(CommonArgs),
    /// One-dimensional cut in alpha or in tau.
    Slice {
        #[command(flatten)]
        common: CommonArgs,
        /// Spacing of the tau grid.
        #[arg(long, value_enum, default_value_t = Spacing::Log)]
        spacing: Spacing,
    },
    /// Repeated fresh interactions against the closed form.
    Collision {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of interactions; rows are emitted for 1..=N.
        #[arg(long, default_value_t = 9)]
        steps: usize,
    },
    /// Optimal QFI and QFI rate of the continuous-field master equation.
    Lindblad(CommonArgs),
    /// Run the invariant suite and write a JSON report.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Multiplies every tolerance; 0 demands exact agreement.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "a:b:n")]
    pub alpha: Option<Range>,
    #[arg(long, value_name = "a:b:n")]
    pub tau: Option<Range>,
    #[arg(long, value_name = "a:b:n")]
    pub s: Option<Range>,
    #[arg(long, value_name = "a:b:n")]
    pub epsbar: Option<Range>,
    /// ground, excited or x0,z0. Defaults to both axis states.
    #[arg(long, allow_hyphen_values = true)]
    pub initial: Option<Initial>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Poisson tail mass left outside the Fock window.
    #[arg(long, default_value_t = jcqfi::fock::DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Suppress progress messages on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Scan,
    Slice,
    Collision,
    Lindblad,
    Verify,
}

/// Validated configuration shared by every subcommand.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub mode: Mode,
    pub alpha_range: Option<Range>,
    pub tau_range: Option<Range>,
    pub s_range: Option<Range>,
    pub eps_bar_range: Option<Range>,
    pub initials: Vec<Initial>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub tail_tol: f64,
    pub seed: u64,
    pub quiet: bool,
}

impl SweepConfig {
    pub fn from_args(mode: Mode, a: &CommonArgs) -> Result<Self, CliError> {
        if !(a.tail_tol > 0.0 && a.tail_tol <= 1e-6) {
            return Err(CliError::Usage(format!("--tail-tol must lie in (0, 1e-6], got {}", a.tail_tol)));
        }
        for (name, r) in [("alpha", a.alpha), ("tau", a.tau), ("s", a.s), ("epsbar", a.epsbar)] {
            if let Some(r) = r {
                if r.min < 0.0 {
                    return Err(CliError::InvalidRange(format!("--{name} must be non-negative, got {}", r.min)));
                }
            }
        }
        let initials = match a.initial {
            Some(i) => vec![i],
            None => vec![Initial::Ground, Initial::Excited],
        };
        Ok(Self {
            mode,
            alpha_range: a.alpha,
            tau_range: a.tau,
            s_range: a.s,
            eps_bar_range: a.epsbar,
            initials,
            output_path: a.out.clone(),
            format: a.format,
            tail_tol: a.tail_tol,
            seed: a.seed,
            quiet: a.quiet,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges() {
        let r: Range = "0:10:11".parse().unwrap();
        assert_eq!(r.linear().len(), 11);
        assert_eq!(r.linear()[10], 10.0);
        assert_eq!("2.5".parse::<Range>().unwrap().linear(), vec![2.5]);
        assert!("0:1:0".parse::<Range>().is_err());
        assert!("1:0:3".parse::<Range>().is_err());
        assert!("0:1".parse::<Range>().is_err());
        assert!("0:1:1".parse::<Range>().is_err());
    }

    #[test]
    fn log_grid_hits_both_ends() {
        let r: Range = "0.1:1000:5".parse().unwrap();
        let g = r.log().unwrap();
        assert_eq!(g[0], 0.1);
        assert_eq!(g[4], 1000.0);
        assert!((g[2] - 10.0).abs() < 1e-12);
        assert!("0:1:3".parse::<Range>().unwrap().log().is_err());
    }

    #[test]
    fn parses_initial_states() {
        assert_eq!("ground".parse::<Initial>().unwrap(), Initial::Ground);
        assert_eq!("0.6,-0.8".parse::<Initial>().unwrap(), Initial::Real(0.6, -0.8));
        assert!("1,1".parse::<Initial>().is_err());
        assert!("up".parse::<Initial>().is_err());
    }
}
