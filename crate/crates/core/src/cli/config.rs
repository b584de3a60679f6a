//! Experiment configuration: flag parsing, validation and hashing.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::encoder::{CodeParams, LengthParams, Scheme};
use crate::error::{Error, Result};
use crate::evaluator::{region_2user, sha256_hex, ChannelCase, EvalMode, McConfig};
use crate::polar::ProfileMethod;
use crate::probcore::{channels, ChannelSpec, Dist, MacChannel};
use crate::ratesplit::{solve_eps, split_rates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Auto,
    Case1,
    Case2,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EvalArg {
    Auto,
    Exhaustive,
    MonteCarlo,
}

impl From<EvalArg> for EvalMode {
    fn from(e: EvalArg) -> Self {
        match e {
            EvalArg::Auto => EvalMode::Auto,
            EvalArg::Exhaustive => EvalMode::Exhaustive,
            EvalArg::MonteCarlo => EvalMode::MonteCarlo,
        }
    }
}

/// Channel source: a JSON spec file, or `builtin:NAME` for one of
/// `adder2`, `adder3`, `xor`, `parallel`.
#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    #[arg(long, value_name = "PATH")]
    pub channel: Option<String>,
}

impl ChannelArgs {
    pub fn load(&self) -> Result<ChannelSpec> {
        let Some(source) = &self.channel else {
            return Err(Error::Channel("--channel is required".into()));
        };
        match source.strip_prefix("builtin:") {
            Some(name) => {
                let ch = builtin(name)?;
                Ok(ChannelSpec::from_channel(&ch, None))
            }
            None => ChannelSpec::load(&PathBuf::from(source)).map_err(|e| match e {
                Error::Io(io) => Error::Channel(format!("cannot read {source}: {io}")),
                other => other,
            }),
        }
    }
}

fn builtin(name: &str) -> Result<MacChannel> {
    Ok(match name {
        "adder2" | "adder" => channels::adder(2),
        "adder3" => channels::adder(3),
        "xor" => channels::xor2(),
        "parallel" => channels::parallel_bsc(0.1, 0.2),
        _ => return Err(Error::Channel(format!("unknown builtin channel {name:?}"))),
    })
}

/// Flags shared by `build`, `simulate` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct CodeArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Block length N (power of two).
    #[arg(long = "n", default_value_t = 8)]
    pub n_len: usize,
    /// Number of chained blocks.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub xi: f64,
    #[arg(long, default_value_t = 0.25)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    /// First user's rate on the dominant face (Case 1).
    #[arg(long, conflicts_with = "eps")]
    pub target_r1: Option<f64>,
    /// Split parameter in [0, 1] (Case 1).
    #[arg(long)]
    pub eps: Option<f64>,
    /// User order for the multi-user scheme, e.g. `2,0,1`.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    /// Idealized lengths `XI,DELTA`: the finite-length slack is replaced by DELTA.
    #[arg(long, value_name = "XI,DELTA")]
    pub idealized: Option<String>,
    /// Merge posterior atoms into this many bins (approximate profile).
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Flags that control evaluation.
#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 2)]
    pub window: usize,
    #[arg(long = "eval", value_enum, default_value_t = EvalArg::Auto)]
    pub eval: EvalArg,
}

/// Resolved experiment: everything that determines the outputs.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub channel: ChannelSpec,
    pub scheme: Scheme,
    pub params: CodeParams,
    pub seed: u64,
    pub trials: usize,
    pub window: usize,
    pub eval: EvalArg,
}

impl ExperimentConfig {
    /// SHA-256 of the canonical JSON form. Output paths and worker counts
    /// are not part of the configuration.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(serde_json::to_string(self)?.as_bytes()))
    }

    pub fn mc(&self) -> McConfig {
        McConfig::new(self.trials, self.window)
    }
}

fn parse_idealized(text: &str) -> Result<(f64, f64)> {
    let bad = || Error::Range(format!("--idealized expects XI,DELTA, got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let xi: f64 = a.trim().parse().map_err(|_| bad())?;
    let delta: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(xi >= 0.0 && delta >= 0.0 && xi.is_finite() && delta.is_finite()) {
        return Err(Error::Range(format!("--idealized values must be non-negative, got {text:?}")));
    }
    Ok((xi, delta))
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Range(format!("--{name} must be positive, got {v}")))
    }
}

impl CodeArgs {
    pub fn params(&self) -> Result<CodeParams> {
        if !self.n_len.is_power_of_two() || self.n_len < 2 {
            return Err(Error::Range(format!("--n must be a power of two >= 2, got {}", self.n_len)));
        }
        if self.k == 0 {
            return Err(Error::Range("--k must be at least 1".into()));
        }
        check_positive("beta", self.beta)?;
        if self.beta >= 0.5 {
            return Err(Error::Range(format!("--beta must lie in (0, 1/2), got {}", self.beta)));
        }
        let lengths = match &self.idealized {
            Some(text) => {
                let (xi, delta) = parse_idealized(text)?;
                LengthParams::idealized(xi, delta)
            }
            None => {
                check_positive("xi", self.xi)?;
                LengthParams::standard(self.xi)
            }
        };
        let profile = match self.bins {
            Some(0) => return Err(Error::Range("--bins must be positive".into())),
            Some(bins) => ProfileMethod::Quantized { bins },
            None => ProfileMethod::Exact,
        };
        Ok(CodeParams {
            n_len: self.n_len,
            k: self.k,
            lengths,
            beta: self.beta,
            profile,
        })
    }

    /// Resolve `--mode` (and for Case 1 the split point) against the channel.
    pub fn scheme(&self, ch: &MacChannel, inputs: &[Dist]) -> Result<Scheme> {
        let users = ch.num_inputs();
        let mode = match self.mode {
            ModeArg::Auto if users == 2 => match region_2user(ch, &inputs[0], &inputs[1])?.case {
                ChannelCase::Case1 => ModeArg::Case1,
                ChannelCase::Case2 => ModeArg::Case2,
            },
            ModeArg::Auto => ModeArg::Multi,
            m => m,
        };
        if mode != ModeArg::Multi && self.order.is_some() {
            return Err(Error::Range("--order only applies to the multi-user scheme".into()));
        }
        if mode != ModeArg::Case1 && (self.eps.is_some() || self.target_r1.is_some()) {
            return Err(Error::Range("--eps and --target-r1 only apply to Case 1".into()));
        }
        Ok(match mode {
            ModeArg::Case1 => {
                if users != 2 || inputs[1].len() != 2 {
                    return Err(Error::CaseMismatch(
                        "rate splitting needs two users with a binary second input".into(),
                    ));
                }
                let q = inputs[1].prob(1);
                let split = match (self.target_r1, self.eps) {
                    (Some(t), _) => solve_eps(ch, &inputs[0], q, t)?,
                    (None, Some(e)) => {
                        if !(0.0..=1.0).contains(&e) {
                            return Err(Error::Range(format!("--eps must lie in [0, 1], got {e}")));
                        }
                        split_rates(ch, &inputs[0], q, e)?
                    }
                    (None, None) => split_rates(ch, &inputs[0], q, 0.5)?,
                };
                Scheme::Case1 { split }
            }
            ModeArg::Case2 => Scheme::Case2,
            ModeArg::Multi => {
                let order = self.order.clone().unwrap_or_else(|| (0..users).collect());
                Scheme::Multi { order }
            }
            ModeArg::Auto => unreachable!("auto resolved above"),
        })
    }

    pub fn experiment(&self, eval: &EvalArgs) -> Result<(ExperimentConfig, MacChannel, Vec<Dist>)> {
        let spec = self.channel.load()?;
        let ch = spec.channel()?;
        let inputs = spec.input_dists()?;
        let params = self.params()?;
        let scheme = self.scheme(&ch, &inputs)?;
        if eval.trials == 0 {
            return Err(Error::Range("--trials must be positive".into()));
        }
        let cfg = ExperimentConfig {
            channel: ChannelSpec::from_channel(&ch, Some(&inputs)),
            scheme,
            params,
            seed: self.seed,
            trials: eval.trials,
            window: eval.window,
            eval: eval.eval,
        };
        Ok((cfg, ch, inputs))
    }
}
