//! Run reports: one record per simulation, as JSON and as a flat CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bounds::{reference_curves, BoundFamily, ReferenceCurves};
use super::exact::{codec_tv, tv_exhaustive, ExactRun, OUTPUT_SPACE_CAP};
use super::montecarlo::{monte_carlo, Estimate, McConfig, McReport};
use super::region::{region_multi, RegionSpec};
use crate::encoder::{AchievedRates, MacCode, Scheme};
use crate::error::{Error, Result};
use crate::polar::EXACT_TABLE_CAP;
use crate::rng::SeedTree;

pub const REPORT_VERSION: u32 = 1;
const REGION_TOL: f64 = 1e-9;
/// Joint output alphabets up to this size are evaluated exhaustively in
/// automatic mode.
const AUTO_EXACT_SPACE: u128 = 1 << 16;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Auto,
    Exhaustive,
    MonteCarlo,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub samples: Option<usize>,
    pub mode: String,
}

impl Metric {
    fn exact(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            ci_lo: None,
            ci_hi: None,
            samples: None,
            mode: "exhaustive".into(),
        }
    }

    fn estimate(name: impl Into<String>, e: &Estimate) -> Self {
        Self {
            name: name.into(),
            value: e.value,
            ci_lo: Some(e.ci_lo),
            ci_hi: Some(e.ci_hi),
            samples: Some(e.samples),
            mode: "monte_carlo".into(),
        }
    }

    fn tagged(name: impl Into<String>, value: f64, mode: &str) -> Self {
        Self {
            name: name.into(),
            value,
            ci_lo: None,
            ci_hi: None,
            samples: None,
            mode: mode.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub region: RegionSpec,
    /// Finite-`k` user rates inside the region.
    pub achieved_inside: bool,
    /// Limit rates (as `k` grows) inside the region.
    pub limit_inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub config_hash: String,
    pub descriptor_hash: String,
    pub mode: EvalMode,
    pub scheme: String,
    pub n_len: usize,
    pub k: usize,
    pub seed: u64,
    pub asymptotic_only: bool,
    pub rates: AchievedRates,
    pub region: RegionVerdict,
    /// Exact per-stream codec distance, when `N` is small enough.
    pub codec_tv: Option<Vec<f64>>,
    pub exact: Option<ExactRun>,
    pub monte_carlo: Option<McReport>,
    pub curves: ReferenceCurves,
    pub metrics: Vec<Metric>,
    pub notes: Vec<String>,
}

fn bound_family(code: &MacCode) -> BoundFamily {
    match code.scheme {
        Scheme::Case1 { .. } => BoundFamily::TwoUser,
        _ => BoundFamily::Multi {
            users: code.streams.len(),
        },
    }
}

fn joint_space(code: &MacCode) -> u128 {
    (code.channel.output_size() as u128)
        .checked_pow((code.n_len() * code.k()) as u32)
        .unwrap_or(u128::MAX)
}

/// Evaluate `code` and assemble the report. `Auto` enumerates exhaustively
/// when the joint output alphabet is small and falls back to Monte Carlo
/// when enumeration exceeds its budget.
pub fn evaluate(
    code: &MacCode,
    descriptor_json: &str,
    config_hash: &str,
    mode: EvalMode,
    mc: &McConfig,
    seed: u64,
) -> Result<RunReport> {
    let seeds = SeedTree::new(seed).child("evaluate");
    let mut notes = Vec::new();
    let mut exact = None;
    let mut mc_report = None;
    let want_exact = match mode {
        EvalMode::Exhaustive => true,
        EvalMode::MonteCarlo => false,
        EvalMode::Auto => joint_space(code) <= AUTO_EXACT_SPACE.min(OUTPUT_SPACE_CAP),
    };
    if want_exact {
        match tv_exhaustive(code) {
            Ok(r) => exact = Some(r),
            Err(e @ Error::Budget { .. }) if mode == EvalMode::Auto => {
                log::info!("exhaustive evaluation abandoned ({e}); sampling instead");
                notes.push(format!("exhaustive evaluation abandoned: {e}"));
            }
            Err(e) => return Err(e),
        }
    }
    if exact.is_none() {
        mc_report = Some(monte_carlo(code, mc, &seeds)?);
        notes.push(
            "windowed distances are lower-bound proxies for the full-block distance; \
             plug-in values are bias-corrected (exact binomial expectation for windows, \
             permutation null for dependence)"
                .into(),
        );
    }
    let resolved = if exact.is_some() {
        EvalMode::Exhaustive
    } else {
        EvalMode::MonteCarlo
    };

    let codec = if code.n_len() <= EXACT_TABLE_CAP {
        Some(codec_tv(code)?)
    } else {
        None
    };
    let delta = match &codec {
        Some(tvs) => tvs.iter().cloned().fold(0.0, f64::max),
        None => {
            notes.push("codec distance not enumerable at this N; reference curves use the plan slack".into());
            code.plan.delta
        }
    };
    let curves = reference_curves(bound_family(code), code.n_len(), code.k(), code.plan.xi, delta);
    if curves.points.iter().any(|p| p.vacuous) {
        notes.push("some reference curves exceed 2 and are vacuous at this block length".into());
    }

    let rates = code.rates();
    let region = region_multi(&code.channel, &code.inputs)?;
    let verdict = RegionVerdict {
        achieved_inside: region.contains(&rates.users, REGION_TOL),
        limit_inside: region.contains(&rates.user_limits, REGION_TOL),
        region,
    };
    if code.plan.asymptotic_only {
        notes.push("hash lengths were clamped: the plan is asymptotic only".into());
    }

    let mut metrics = Vec::new();
    for (i, (r, lim)) in rates.users.iter().zip(&rates.user_limits).enumerate() {
        metrics.push(Metric::tagged(format!("rate.user{}", i + 1), *r, "plan"));
        metrics.push(Metric::tagged(format!("rate_limit.user{}", i + 1), *lim, "plan"));
    }
    if let Some(tvs) = &codec {
        for (s, tv) in code.streams.iter().zip(tvs) {
            metrics.push(Metric::exact(format!("codec_tv.{}", s.name), *tv));
        }
    }
    if let Some(r) = &exact {
        metrics.push(Metric::exact("joint_tv", r.joint_tv));
        metrics.push(Metric::exact("product_tv", r.product_tv));
        for (i, v) in r.block_tv.iter().enumerate() {
            metrics.push(Metric::exact(format!("block_tv.{}", i + 1), *v));
        }
        for (i, v) in r.recycled_dependence.iter().enumerate() {
            metrics.push(Metric::exact(format!("recycled_dependence.{}", i + 2), *v));
        }
        for (i, v) in r.recycled_past_dependence.iter().enumerate() {
            metrics.push(Metric::exact(format!("recycled_past_dependence.{}", i + 2), *v));
        }
        for (i, v) in r.adjacent_dependence.iter().enumerate() {
            metrics.push(Metric::exact(format!("adjacent_dependence.{}", i + 2), *v));
        }
    }
    if let Some(m) = &mc_report {
        metrics.push(Metric::estimate("marginal_tv", &m.tv.marginal));
        metrics.push(Metric::estimate(format!("windowed_tv.w{}", m.tv.window), &m.tv.windowed));
        for (i, e) in m.tv.per_block.iter().enumerate() {
            metrics.push(Metric::estimate(format!("windowed_tv.w{}.block{}", m.tv.window, i + 1), e));
        }
        metrics.push(Metric::estimate("adjacent_dependence", &m.diagnostics.adjacent));
        metrics.push(Metric::estimate("recycled_dependence", &m.diagnostics.recycled));
    }
    for p in &curves.points {
        let name = match p.block {
            Some(i) => format!("bound.{}.{i}", p.name),
            None => format!("bound.{}", p.name),
        };
        metrics.push(Metric::tagged(name, p.value, "reference"));
    }

    Ok(RunReport {
        version: REPORT_VERSION,
        config_hash: config_hash.to_string(),
        descriptor_hash: sha256_hex(descriptor_json.as_bytes()),
        mode: resolved,
        scheme: code.scheme.name().to_string(),
        n_len: code.n_len(),
        k: code.k(),
        seed,
        asymptotic_only: code.plan.asymptotic_only,
        rates,
        region: verdict,
        codec_tv: codec,
        exact,
        monte_carlo: mc_report,
        curves,
        metrics,
        notes,
    })
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, ToString::to_string)
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,value,ci_lo,ci_hi,samples,mode\n");
        for m in &self.metrics {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                m.name,
                m.value,
                opt(&m.ci_lo),
                opt(&m.ci_hi),
                opt(&m.samples),
                m.mode
            );
        }
        out
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    /// Write `<stem>.json` and `<stem>.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{stem}.json"));
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&json, self.to_json()?)?;
        std::fs::write(&csv, self.to_csv())?;
        Ok((json, csv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{CodeDescriptor, CodeParams, LengthParams};
    use crate::polar::ProfileMethod;
    use crate::probcore::{channels, Dist};
    use crate::ratesplit::solve_eps;

    fn adder_code(n_len: usize, k: usize) -> MacCode {
        let ch = channels::adder(2);
        let u = vec![Dist::uniform(2).unwrap(); 2];
        let split = solve_eps(&ch, &u[0], 0.5, 0.75).unwrap();
        let params = CodeParams {
            n_len,
            k,
            lengths: LengthParams::idealized(0.0, 0.0),
            beta: 0.25,
            profile: ProfileMethod::Exact,
        };
        MacCode::build(&ch, &u, Scheme::Case1 { split }, params, &mut SeedTree::new(2).stream("build", 0)).unwrap()
    }

    #[test]
    fn small_code_is_evaluated_exhaustively_without_ci() {
        let code = adder_code(4, 1);
        let desc = CodeDescriptor::from_code(&code, 2).to_json().unwrap();
        let r = evaluate(&code, &desc, "cfg", EvalMode::Auto, &McConfig::new(1000, 2), 1).unwrap();
        assert_eq!(r.mode, EvalMode::Exhaustive);
        let row = r.metric("joint_tv").unwrap();
        assert!(row.ci_lo.is_none() && row.samples.is_none());
        assert!(r.to_csv().lines().any(|l| l.starts_with("joint_tv,") && l.ends_with(",,,exhaustive")));
        assert_eq!(r.descriptor_hash, sha256_hex(desc.as_bytes()));
    }

    #[test]
    fn sampled_report_carries_ci_and_is_reproducible() {
        let code = adder_code(8, 2);
        let cfg = McConfig::new(1000, 2);
        let a = evaluate(&code, "{}", "cfg", EvalMode::MonteCarlo, &cfg, 5).unwrap();
        let b = evaluate(&code, "{}", "cfg", EvalMode::MonteCarlo, &cfg, 5).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.to_csv(), b.to_csv());
        let row = a.metric("windowed_tv.w2").unwrap();
        assert!(row.ci_lo.unwrap() <= row.value && row.value <= row.ci_hi.unwrap());
        assert_eq!(row.samples, Some(1000));
    }

    #[test]
    fn limit_rates_lie_in_region() {
        let code = adder_code(8, 3);
        let r = evaluate(&code, "{}", "cfg", EvalMode::Exhaustive, &McConfig::new(1000, 2), 0);
        // k = 3 at N = 8 over a ternary output is beyond the exact budget
        assert!(matches!(r, Err(Error::Budget { .. })));
        let r = evaluate(&code, "{}", "cfg", EvalMode::MonteCarlo, &McConfig::new(1000, 1), 0).unwrap();
        assert!(r.region.limit_inside);
        assert!(r.curves.points.iter().any(|p| p.vacuous));
    }
}
