use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use super::config::{ChannelArgs, CodeArgs, EvalArgs, ExperimentConfig};
use crate::encoder::{CodeDescriptor, MacCode};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, region_2user, region_multi, ChannelCase, RegionSpec, RunReport};
use crate::probcore::{mutual_information, ChannelSpec};
use crate::rng::SeedTree;

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Replay a descriptor written by `build` instead of building from flags.
    #[arg(long)]
    pub descriptor: Option<PathBuf>,
    #[command(flatten)]
    pub code: CodeArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
    #[arg(long, value_delimiter = ',', default_value = "4,8")]
    pub n_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub k_grid: Vec<usize>,
    /// Split parameters to sweep (Case 1 only).
    #[arg(long, value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    #[command(flatten)]
    pub out: OutArgs,
}

/// What a command produced; `asymptotic_only` selects the exit code.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub asymptotic_only: bool,
}

#[derive(Debug, Serialize)]
struct RegionOutput {
    users: usize,
    case: Option<ChannelCase>,
    /// `I(XY;Z) - I(X;Z) - I(Y;Z)` for two users.
    gap: Option<f64>,
    sum_rate: f64,
    region: RegionSpec,
}

fn region_csv(r: &RegionSpec, case: Option<ChannelCase>) -> String {
    let mut out = String::from("kind,label,user,value\n");
    if let Some(c) = case {
        let tag = match c {
            ChannelCase::Case1 => 1,
            ChannelCase::Case2 => 2,
        };
        let _ = writeln!(out, "case,case{tag},,{tag}");
    }
    for c in &r.constraints {
        let label: Vec<String> = c.users.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "constraint,{},,{}", label.join("+"), c.bound);
    }
    for c in &r.corner_points {
        let label: Vec<String> = c.order.iter().map(ToString::to_string).collect();
        for (u, rate) in c.rates.iter().enumerate() {
            let _ = writeln!(out, "corner,{},{u},{rate}", label.join("-"));
        }
    }
    out
}

fn write(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    log::info!("wrote {}", path.display());
    files.push(path);
    Ok(())
}

pub fn cmd_region(args: &RegionArgs) -> Result<Outcome> {
    let spec = args.channel.load()?;
    let ch = spec.channel()?;
    let inputs = spec.input_dists()?;
    let region = region_multi(&ch, &inputs)?;
    let (case, gap) = if ch.num_inputs() == 2 {
        let two = region_2user(&ch, &inputs[0], &inputs[1])?;
        (Some(two.case), Some(two.gap))
    } else {
        (None, None)
    };
    let joint = ch.joint(&inputs)?;
    let all: Vec<usize> = (0..ch.num_inputs()).collect();
    let output = RegionOutput {
        users: ch.num_inputs(),
        case,
        gap,
        sum_rate: mutual_information(&joint, &all, &[ch.num_inputs()], &[])?,
        region,
    };
    let mut out = Outcome::default();
    let dir = &args.out.out_dir;
    write(dir, "region.json", &(serde_json::to_string_pretty(&output)? + "\n"), &mut out.files)?;
    write(dir, "region.csv", &region_csv(&output.region, case), &mut out.files)?;
    Ok(out)
}

/// Seed the hashes are sampled from, derived from the experiment seed.
fn build_seed(seed: u64) -> u64 {
    SeedTree::new(seed).child("build").seed()
}

fn build_code(cfg: &ExperimentConfig) -> Result<(MacCode, CodeDescriptor)> {
    let ch = cfg.channel.channel()?;
    let inputs = cfg.channel.input_dists()?;
    let seed = build_seed(cfg.seed);
    let mut rng = SeedTree::new(seed).stream("hashes", 0);
    let code = MacCode::build(&ch, &inputs, cfg.scheme.clone(), cfg.params, &mut rng)?;
    let desc = CodeDescriptor::from_code(&code, seed);
    Ok((code, desc))
}

pub fn cmd_build(args: &BuildArgs) -> Result<Outcome> {
    let eval = EvalArgs {
        trials: 1,
        window: 1,
        eval: super::config::EvalArg::Auto,
    };
    let (cfg, _, _) = args.code.experiment(&eval)?;
    let (code, desc) = build_code(&cfg)?;
    let mut out = Outcome {
        asymptotic_only: code.plan.asymptotic_only,
        ..Outcome::default()
    };
    if out.asymptotic_only {
        log::warn!("hash lengths were clamped; the descriptor is flagged asymptotic-only");
    }
    write(&args.out.out_dir, "descriptor.json", &(desc.to_json()? + "\n"), &mut out.files)?;
    Ok(out)
}

fn simulate_config(args: &SimulateArgs) -> Result<(ExperimentConfig, MacCode, String)> {
    match &args.descriptor {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let desc = CodeDescriptor::from_json(&text)?;
            let code = desc.to_code()?;
            let json = desc.to_json()?;
            let cfg = ExperimentConfig {
                channel: ChannelSpec::from_channel(&code.channel, Some(&code.inputs)),
                scheme: code.scheme.clone(),
                params: code.params,
                seed: args.code.seed,
                trials: args.eval.trials,
                window: args.eval.window,
                eval: args.eval.eval,
            };
            Ok((cfg, code, json))
        }
        None => {
            let (cfg, _, _) = args.code.experiment(&args.eval)?;
            let (code, desc) = build_code(&cfg)?;
            Ok((cfg, code, desc.to_json()?))
        }
    }
}

fn run_report(cfg: &ExperimentConfig, code: &MacCode, descriptor: &str) -> Result<RunReport> {
    evaluate(code, descriptor, &cfg.hash()?, cfg.eval.into(), &cfg.mc(), cfg.seed)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let (cfg, code, descriptor) = simulate_config(args)?;
    let report = run_report(&cfg, &code, &descriptor)?;
    let mut out = Outcome::default();
    let dir = &args.out.out_dir;
    write(dir, "report.json", &report.to_json()?, &mut out.files)?;
    write(dir, "report.csv", &report.to_csv(), &mut out.files)?;
    Ok(out)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Outcome> {
    if args.n_grid.is_empty() || args.k_grid.is_empty() {
        return Err(Error::Range("sweep grids must not be empty".into()));
    }
    let eps_grid: Vec<Option<f64>> = match &args.eps_grid {
        Some(g) => g.iter().map(|&e| Some(e)).collect(),
        None => vec![None],
    };
    let mut csv = String::from("n,k,eps,config_hash,name,value,ci_lo,ci_hi,samples,mode\n");
    let mut any_clamped = false;
    for &n_len in &args.n_grid {
        for &k in &args.k_grid {
            for &eps in &eps_grid {
                let mut code_args = args.code.clone();
                code_args.n_len = n_len;
                code_args.k = k;
                if eps.is_some() {
                    code_args.eps = eps;
                    code_args.target_r1 = None;
                }
                let (cfg, _, _) = code_args.experiment(&args.eval)?;
                let (code, desc) = build_code(&cfg)?;
                any_clamped |= code.plan.asymptotic_only;
                let report = run_report(&cfg, &code, &desc.to_json()?)?;
                let eps_cell = cfg.scheme.split().map_or_else(String::new, |s| s.eps.to_string());
                for line in report.to_csv().lines().skip(1) {
                    let _ = writeln!(csv, "{n_len},{k},{eps_cell},{},{line}", report.config_hash);
                }
                log::info!("sweep point N={n_len} k={k} done ({:?})", report.mode);
            }
        }
    }
    let mut out = Outcome {
        asymptotic_only: any_clamped,
        ..Outcome::default()
    };
    write(&args.out.out_dir, "sweep.csv", &csv, &mut out.files)?;
    Ok(out)
}
