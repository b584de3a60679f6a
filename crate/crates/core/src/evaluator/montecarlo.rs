//! Monte-Carlo estimates at sizes beyond exhaustive enumeration.
//!
//! The full-block law over `Z^{kN}` cannot be sampled to any accuracy, so we
//! estimate two proxies from independent trials:
//!
//! * windowed distance: for each block and each aligned window of `w`
//!   symbols, the plug-in `V` between the empirical window law and
//!   `q_Z^{⊗w}`, averaged over windows. By data processing each window's
//!   true distance is a lower bound for the full-block distance;
//! * dependence diagnostics: plug-in `V` between a joint window law and the
//!   product of its marginals, for consecutive output blocks and for the
//!   recycled bits against the previous block's output.
//!
//! Plug-in distances are biased upward. Window distances are corrected by
//! their exact expectation under the target, dependence measures by a
//! permutation null. Confidence intervals come from a bootstrap over
//! batches of trials.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{run, MacCode};
use crate::error::{Error, Result};
use crate::par;
use crate::probcore::{target_output_dist, transmit, Dist, MacChannel};
use crate::rng::{SeedTree, SimRng};

pub const MIN_TRIALS: usize = 1000;
pub const MAX_WINDOW: usize = 3;
const DEFAULT_BATCHES: usize = 50;
const BOOTSTRAP: usize = 1000;
const PERMUTATIONS: usize = 8;
/// Largest contingency table a diagnostic may use.
const TABLE_CAP: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: usize,
    pub window: usize,
    /// Leading recycled bits entering the recycled-vs-output diagnostic.
    pub recycled_bits: usize,
    pub batches: usize,
    pub bootstrap: usize,
}

impl McConfig {
    pub fn new(trials: usize, window: usize) -> Self {
        Self {
            trials,
            window,
            recycled_bits: 2,
            batches: DEFAULT_BATCHES,
            bootstrap: BOOTSTRAP,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::Samples {
                got: self.trials,
                needed: MIN_TRIALS,
            });
        }
        if self.window == 0 || self.window > MAX_WINDOW {
            return Err(Error::Range(format!("window must lie in 1..={MAX_WINDOW}, got {}", self.window)));
        }
        if self.batches < 2 || self.batches > self.trials {
            return Err(Error::Range(format!(
                "batch count {} must lie in 2..={}",
                self.batches, self.trials
            )));
        }
        if self.bootstrap == 0 {
            return Err(Error::Range("bootstrap needs at least one resample".into()));
        }
        Ok(())
    }
}

/// One simulated run: output symbols per block and the recycled bits
/// entering each block (all streams concatenated, empty for block 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutput {
    pub outputs: Vec<Vec<usize>>,
    pub recycled: Vec<Vec<u8>>,
}

/// Anything that produces independent trials.
pub trait TrialSource: Sync {
    fn n_len(&self) -> usize;
    fn k(&self) -> usize;
    fn output_size(&self) -> usize;
    fn target(&self) -> Result<Dist>;
    fn trial(&self, rng: &mut SimRng) -> Result<TrialOutput>;
}

impl TrialSource for MacCode {
    fn n_len(&self) -> usize {
        MacCode::n_len(self)
    }

    fn k(&self) -> usize {
        MacCode::k(self)
    }

    fn output_size(&self) -> usize {
        self.channel.output_size()
    }

    fn target(&self) -> Result<Dist> {
        target_output_dist(&self.channel, &self.inputs)
    }

    fn trial(&self, rng: &mut SimRng) -> Result<TrialOutput> {
        let t = run(self, rng)?;
        let recycled = t
            .blocks
            .iter()
            .map(|b| b.streams.iter().flat_map(|s| s.recycled.iter().copied()).collect())
            .collect();
        Ok(TrialOutput {
            outputs: t.blocks.into_iter().map(|b| b.output).collect(),
            recycled,
        })
    }
}

/// Channel driven by truly i.i.d. inputs, the null the estimators must
/// report as (statistically) zero.
#[derive(Debug, Clone)]
pub struct IidSource {
    pub channel: MacChannel,
    pub inputs: Vec<Dist>,
    pub n_len: usize,
    pub k: usize,
}

fn sample_symbol<R: Rng + ?Sized>(d: &Dist, rng: &mut R) -> u8 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (x, &p) in d.pmf().iter().enumerate() {
        acc += p;
        if u < acc {
            return x as u8;
        }
    }
    d.pmf().iter().rposition(|&p| p > 0.0).unwrap_or(0) as u8
}

impl TrialSource for IidSource {
    fn n_len(&self) -> usize {
        self.n_len
    }

    fn k(&self) -> usize {
        self.k
    }

    fn output_size(&self) -> usize {
        self.channel.output_size()
    }

    fn target(&self) -> Result<Dist> {
        target_output_dist(&self.channel, &self.inputs)
    }

    fn trial(&self, rng: &mut SimRng) -> Result<TrialOutput> {
        let mut outputs = Vec::with_capacity(self.k);
        for _ in 0..self.k {
            let words: Vec<Vec<u8>> = self
                .inputs
                .iter()
                .map(|d| (0..self.n_len).map(|_| sample_symbol(d, rng)).collect())
                .collect();
            outputs.push(transmit(&self.channel, &words, rng)?);
        }
        Ok(TrialOutput {
            outputs,
            recycled: vec![Vec::new(); self.k],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Bias-corrected point estimate.
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Plug-in value before correction.
    pub raw: f64,
    pub bias: f64,
    pub samples: usize,
}

impl Estimate {
    fn vacuous(samples: usize) -> Self {
        Self {
            value: 0.0,
            ci_lo: 0.0,
            ci_hi: 0.0,
            raw: 0.0,
            bias: 0.0,
            samples,
        }
    }

    /// Whether the 95% intervals of `self` and `other` are disjoint with
    /// `self` above.
    pub fn clearly_above(&self, other: &Estimate) -> bool {
        self.ci_lo > other.ci_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedTv {
    pub window: usize,
    /// Per-symbol marginal distance, averaged over blocks and positions.
    pub marginal: Estimate,
    /// `w`-window distance, averaged over blocks and windows.
    pub windowed: Estimate,
    pub per_block: Vec<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Consecutive blocks: aligned windows of `Z_{i-1}` and `Z_i`.
    pub adjacent: Estimate,
    /// Leading recycled bits of block `i` against windows of `Z_{i-1}`.
    pub recycled: Estimate,
    pub recycled_bits: usize,
    /// No pair of blocks exists (`k = 1`) so both measures are zero.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub trials: usize,
    pub batches: usize,
    pub tv: WindowedTv,
    pub diagnostics: Diagnostics,
}

/// Count tables for one batch of trials.
#[derive(Debug, Clone, Default)]
struct Tables {
    single: Vec<u64>,
    window: Vec<u64>,
    adjacent: Vec<u64>,
    recycled: Vec<u64>,
    /// Raw pairs kept for the permutation null: (first, second) per table.
    pairs_adjacent: Vec<Vec<(u32, u32)>>,
    pairs_recycled: Vec<Vec<(u32, u32)>>,
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    n_len: usize,
    k: usize,
    zs: usize,
    w: usize,
    windows: usize,
    cells: usize,
    e_bits: usize,
}

impl Layout {
    fn single_len(&self) -> usize {
        self.k * self.n_len * self.zs
    }
    fn window_len(&self) -> usize {
        self.k * self.windows * self.cells
    }
    fn pair_tables(&self) -> usize {
        (self.k - 1) * self.windows
    }
    fn adjacent_cells(&self) -> usize {
        self.cells * self.cells
    }
    fn recycled_cells(&self) -> usize {
        (1 << self.e_bits) * self.cells
    }

    fn window_symbol(&self, block: &[usize], p: usize) -> usize {
        block[p * self.w..(p + 1) * self.w]
            .iter()
            .fold(0, |acc, &z| acc * self.zs + z)
    }

    fn empty(&self, keep_pairs: bool) -> Tables {
        let pairs = if keep_pairs { self.pair_tables() } else { 0 };
        Tables {
            single: vec![0; self.single_len()],
            window: vec![0; self.window_len()],
            adjacent: vec![0; self.pair_tables() * self.adjacent_cells()],
            recycled: vec![0; self.pair_tables() * self.recycled_cells()],
            pairs_adjacent: vec![Vec::new(); pairs],
            pairs_recycled: vec![Vec::new(); pairs],
        }
    }

    fn ingest(&self, t: &mut Tables, trial: &TrialOutput, keep_pairs: bool) -> Result<()> {
        if trial.outputs.len() != self.k || trial.outputs.iter().any(|b| b.len() != self.n_len) {
            return Err(Error::Shape("trial output does not match the code dimensions".into()));
        }
        for (b, block) in trial.outputs.iter().enumerate() {
            for (pos, &z) in block.iter().enumerate() {
                t.single[(b * self.n_len + pos) * self.zs + z] += 1;
            }
            for p in 0..self.windows {
                let s = self.window_symbol(block, p);
                t.window[(b * self.windows + p) * self.cells + s] += 1;
            }
        }
        for b in 1..self.k {
            let e = trial.recycled[b]
                .iter()
                .take(self.e_bits)
                .fold(0usize, |acc, &x| (acc << 1) | x as usize);
            for p in 0..self.windows {
                let idx = (b - 1) * self.windows + p;
                let prev = self.window_symbol(&trial.outputs[b - 1], p);
                let cur = self.window_symbol(&trial.outputs[b], p);
                t.adjacent[idx * self.adjacent_cells() + prev * self.cells + cur] += 1;
                t.recycled[idx * self.recycled_cells() + e * self.cells + prev] += 1;
                if keep_pairs {
                    t.pairs_adjacent[idx].push((prev as u32, cur as u32));
                    t.pairs_recycled[idx].push((e as u32, prev as u32));
                }
            }
        }
        Ok(())
    }
}

fn plug_in_tv(counts: &[u64], n: u64, target: &[f64]) -> f64 {
    let n = n as f64;
    counts.iter().zip(target).map(|(&c, &q)| (c as f64 / n - q).abs()).sum()
}

/// `V(joint, product of marginals)` for a table laid out `a * nb + b`.
fn plug_in_dependence(counts: &[u64], nb: usize) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let na = counts.len() / nb;
    let mut ra = vec![0u64; na];
    let mut rb = vec![0u64; nb];
    for a in 0..na {
        for b in 0..nb {
            ra[a] += counts[a * nb + b];
            rb[b] += counts[a * nb + b];
        }
    }
    let n = total as f64;
    let mut v = 0.0;
    for a in 0..na {
        if ra[a] == 0 {
            continue;
        }
        for b in 0..nb {
            v += (counts[a * nb + b] as f64 / n - (ra[a] as f64 / n) * (rb[b] as f64 / n)).abs();
        }
    }
    v
}

fn ln_choose(n: u64, m: u64) -> f64 {
    let m = m.min(n - m);
    (1..=m).map(|j| ((n - m + j) as f64 / j as f64).ln()).sum()
}

/// Exact `E|X/n - q|` for `X ~ Bin(n, q)`, via the closed form
/// `2 m C(n, m) q^m (1-q)^{n-m+1} / n` with `m = floor(nq) + 1`.
pub fn binomial_mean_abs_dev(n: u64, q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 || n == 0 {
        return 0.0;
    }
    let m = (n as f64 * q).floor() as u64 + 1;
    if m > n {
        return 0.0;
    }
    let ln = (2.0 * m as f64).ln() + ln_choose(n, m) + m as f64 * q.ln() + (n - m + 1) as f64 * (1.0 - q).ln();
    ln.exp() / n as f64
}

/// Expected plug-in distance of `n` samples from `target` to `target`.
pub fn plug_in_bias(n: u64, target: &[f64]) -> f64 {
    target.iter().map(|&q| binomial_mean_abs_dev(n, q)).sum()
}

fn window_target(q: &Dist, w: usize) -> Vec<f64> {
    let mut law = vec![1.0];
    for _ in 0..w {
        law = law.iter().flat_map(|&a| q.pmf().iter().map(move |&b| a * b)).collect();
    }
    law
}

/// Mean plug-in dependence of `pairs` after shuffling the second coordinate.
fn permutation_null(pairs: &[(u32, u32)], na: usize, nb: usize, rng: &mut SimRng) -> f64 {
    let firsts: Vec<u32> = pairs.iter().map(|p| p.0).collect();
    let mut seconds: Vec<u32> = pairs.iter().map(|p| p.1).collect();
    let mut acc = 0.0;
    for _ in 0..PERMUTATIONS {
        seconds.shuffle(rng);
        let mut table = vec![0u64; na * nb];
        for (&a, &b) in firsts.iter().zip(&seconds) {
            table[a as usize * nb + b as usize] += 1;
        }
        acc += plug_in_dependence(&table, nb);
    }
    acc / PERMUTATIONS as f64
}

struct Statistics {
    marginal: f64,
    windowed: f64,
    per_block: Vec<f64>,
    adjacent: f64,
    recycled: f64,
}

fn statistics(l: &Layout, t: &Tables, n: u64, q1: &[f64], qw: &[f64]) -> Statistics {
    let mut per_block = Vec::with_capacity(l.k);
    let mut marginal = 0.0;
    for b in 0..l.k {
        let mut acc = 0.0;
        for p in 0..l.windows {
            let off = (b * l.windows + p) * l.cells;
            acc += plug_in_tv(&t.window[off..off + l.cells], n, qw);
        }
        per_block.push(acc / l.windows as f64);
        for pos in 0..l.n_len {
            let off = (b * l.n_len + pos) * l.zs;
            marginal += plug_in_tv(&t.single[off..off + l.zs], n, q1);
        }
    }
    let windowed = per_block.iter().sum::<f64>() / l.k as f64;
    let pairs = l.pair_tables();
    let (mut adjacent, mut recycled) = (0.0, 0.0);
    for idx in 0..pairs {
        let ac = l.adjacent_cells();
        adjacent += plug_in_dependence(&t.adjacent[idx * ac..(idx + 1) * ac], l.cells);
        let rc = l.recycled_cells();
        recycled += plug_in_dependence(&t.recycled[idx * rc..(idx + 1) * rc], l.cells);
    }
    if pairs > 0 {
        adjacent /= pairs as f64;
        recycled /= pairs as f64;
    }
    Statistics {
        marginal: marginal / (l.k * l.n_len) as f64,
        windowed,
        per_block,
        adjacent,
        recycled,
    }
}

fn add_into(acc: &mut Tables, t: &Tables, times: u64) {
    for (a, b) in [
        (&mut acc.single, &t.single),
        (&mut acc.window, &t.window),
        (&mut acc.adjacent, &t.adjacent),
        (&mut acc.recycled, &t.recycled),
    ] {
        for (x, &y) in a.iter_mut().zip(b) {
            *x += times * y;
        }
    }
}

fn layout_for(source: &dyn TrialSource, cfg: &McConfig) -> Result<Layout> {
    let n_len = source.n_len();
    let zs = source.output_size();
    let w = cfg.window;
    if w > n_len {
        return Err(Error::Range(format!("window {w} exceeds block length {n_len}")));
    }
    let cells = zs.checked_pow(w as u32).filter(|&c| c * c <= TABLE_CAP).ok_or_else(|| Error::Budget {
        what: "window contingency table",
        size: (zs as u128).saturating_pow(2 * w as u32),
        cap: TABLE_CAP as u128,
    })?;
    let e_bits = cfg.recycled_bits.min(16);
    if (1usize << e_bits) * cells > TABLE_CAP {
        return Err(Error::Budget {
            what: "recycled-bit contingency table",
            size: ((1u128) << e_bits) * cells as u128,
            cap: TABLE_CAP as u128,
        });
    }
    Ok(Layout {
        n_len,
        k: source.k(),
        zs,
        w,
        windows: n_len / w,
        cells,
        e_bits,
    })
}

fn estimate(point: f64, bias: f64, replicates: &[f64], samples: usize) -> Estimate {
    let n = replicates.len() as f64;
    let mean = replicates.iter().sum::<f64>() / n;
    let var = replicates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let half = 1.96 * var.sqrt();
    let value = point - bias;
    Estimate {
        value,
        ci_lo: value - half,
        ci_hi: value + half,
        raw: point,
        bias,
        samples,
    }
}

/// Estimate from per-batch tables; trials are assigned to batches in order.
fn analyze(l: &Layout, batches: Vec<Tables>, n: usize, cfg: &McConfig, target: &Dist, seeds: &SeedTree) -> McReport {
    let q1 = target.pmf().to_vec();
    let qw = window_target(target, l.w);
    let mut total = l.empty(true);
    for b in &batches {
        add_into(&mut total, b, 1);
        for (dst, src) in total.pairs_adjacent.iter_mut().zip(&b.pairs_adjacent) {
            dst.extend_from_slice(src);
        }
        for (dst, src) in total.pairs_recycled.iter_mut().zip(&b.pairs_recycled) {
            dst.extend_from_slice(src);
        }
    }
    let nn = n as u64;
    let point = statistics(l, &total, nn, &q1, &qw);

    let bias_window = plug_in_bias(nn, &qw);
    let bias_single = plug_in_bias(nn, &q1);
    let null_seeds = seeds.child("null");
    let nulls: Vec<(f64, f64)> = par::map_range(l.pair_tables(), |idx| {
        let mut rng = null_seeds.stream("pair-table", idx as u64);
        let a = permutation_null(&total.pairs_adjacent[idx], l.cells, l.cells, &mut rng);
        let r = permutation_null(&total.pairs_recycled[idx], 1 << l.e_bits, l.cells, &mut rng);
        (a, r)
    });
    let pairs = l.pair_tables().max(1) as f64;
    let bias_adjacent = nulls.iter().map(|x| x.0).sum::<f64>() / pairs;
    let bias_recycled = nulls.iter().map(|x| x.1).sum::<f64>() / pairs;

    let boot_seeds = seeds.child("bootstrap");
    let nb = batches.len();
    let reps: Vec<Statistics> = par::map_range(cfg.bootstrap, |r| {
        let mut rng = boot_seeds.stream("resample", r as u64);
        let mut weights = vec![0u64; nb];
        for _ in 0..nb {
            weights[rng.gen_range(0..nb)] += 1;
        }
        let mut acc = l.empty(false);
        let mut count = 0u64;
        for (b, &wgt) in batches.iter().zip(&weights) {
            if wgt > 0 {
                add_into(&mut acc, b, wgt);
                count += wgt * (b.window.iter().take(l.cells).sum::<u64>());
            }
        }
        statistics(l, &acc, count, &q1, &qw)
    });
    let col = |f: &dyn Fn(&Statistics) -> f64| reps.iter().map(f).collect::<Vec<f64>>();
    let per_block = (0..l.k)
        .map(|b| estimate(point.per_block[b], bias_window, &col(&|s| s.per_block[b]), n))
        .collect();
    let vacuous = l.k < 2;
    let (adjacent, recycled) = if vacuous {
        (Estimate::vacuous(n), Estimate::vacuous(n))
    } else {
        (
            estimate(point.adjacent, bias_adjacent, &col(&|s| s.adjacent), n),
            estimate(point.recycled, bias_recycled, &col(&|s| s.recycled), n),
        )
    };
    McReport {
        trials: n,
        batches: nb,
        tv: WindowedTv {
            window: l.w,
            marginal: estimate(point.marginal, bias_single, &col(&|s| s.marginal), n),
            windowed: estimate(point.windowed, bias_window, &col(&|s| s.windowed), n),
            per_block,
        },
        diagnostics: Diagnostics {
            adjacent,
            recycled,
            recycled_bits: l.e_bits,
            vacuous,
        },
    }
}

fn batch_bounds(trials: usize, batches: usize, b: usize) -> (usize, usize) {
    (b * trials / batches, (b + 1) * trials / batches)
}

/// Windowed distance and dependence diagnostics from `cfg.trials` fresh
/// trials. Trial `t` draws from its own stream of `seeds`, so the result
/// does not depend on the worker count.
pub fn monte_carlo(source: &dyn TrialSource, cfg: &McConfig, seeds: &SeedTree) -> Result<McReport> {
    cfg.validate()?;
    let l = layout_for(source, cfg)?;
    let trial_seeds = seeds.child("trials");
    let batches = par::map_range(cfg.batches, |b| -> Result<Tables> {
        let (lo, hi) = batch_bounds(cfg.trials, cfg.batches, b);
        let mut t = l.empty(true);
        for i in lo..hi {
            let mut rng = trial_seeds.stream("trial", i as u64);
            l.ingest(&mut t, &source.trial(&mut rng)?, true)?;
        }
        Ok(t)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(analyze(&l, batches, cfg.trials, cfg, &source.target()?, seeds))
}

/// Windowed distance estimates only.
pub fn tv_monte_carlo(source: &dyn TrialSource, cfg: &McConfig, seeds: &SeedTree) -> Result<WindowedTv> {
    Ok(monte_carlo(source, cfg, seeds)?.tv)
}

/// Dependence diagnostics from stored trials of `code`.
pub fn independence_diagnostics(
    code: &MacCode,
    trials: &[TrialOutput],
    cfg: &McConfig,
    seeds: &SeedTree,
) -> Result<Diagnostics> {
    if trials.len() < MIN_TRIALS {
        return Err(Error::Samples {
            got: trials.len(),
            needed: MIN_TRIALS,
        });
    }
    let cfg = McConfig {
        trials: trials.len(),
        ..cfg.clone()
    };
    cfg.validate()?;
    let l = layout_for(code, &cfg)?;
    let batches = (0..cfg.batches)
        .map(|b| {
            let (lo, hi) = batch_bounds(trials.len(), cfg.batches, b);
            let mut t = l.empty(true);
            for tr in &trials[lo..hi] {
                l.ingest(&mut t, tr, true)?;
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(analyze(&l, batches, trials.len(), &cfg, &code.target()?, seeds).diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::channels;
    use approx::assert_relative_eq;

    #[test]
    fn mean_abs_dev_matches_enumeration() {
        for &(n, q) in &[(10u64, 0.3f64), (7, 0.5), (25, 0.13)] {
            let mut want = 0.0;
            for x in 0..=n {
                let p = (ln_choose(n, x) + x as f64 * q.ln() + (n - x) as f64 * (1.0 - q).ln()).exp();
                want += p * (x as f64 / n as f64 - q).abs();
            }
            assert_relative_eq!(binomial_mean_abs_dev(n, q), want, max_relative = 1e-10);
        }
        assert_eq!(binomial_mean_abs_dev(100, 0.0), 0.0);
    }

    #[test]
    fn dependence_of_product_table_is_zero() {
        let t = [2u64, 6, 1, 3];
        assert!(plug_in_dependence(&t, 2) < 1e-15);
        assert!(plug_in_dependence(&[5, 0, 0, 5], 2) > 0.99);
    }

    fn iid(k: usize) -> IidSource {
        IidSource {
            channel: channels::adder(2),
            inputs: vec![Dist::uniform(2).unwrap(); 2],
            n_len: 4,
            k,
        }
    }

    #[test]
    fn iid_null_is_statistically_zero() {
        let r = monte_carlo(&iid(2), &McConfig::new(4000, 2), &SeedTree::new(9)).unwrap();
        for e in [&r.tv.windowed, &r.tv.marginal, &r.diagnostics.adjacent] {
            assert!(e.ci_lo <= 0.0 && 0.0 <= e.ci_hi + 1e-3, "{e:?}");
            assert!(e.raw > 0.0);
        }
    }

    #[test]
    fn single_block_diagnostics_are_vacuous() {
        let r = monte_carlo(&iid(1), &McConfig::new(1000, 1), &SeedTree::new(1)).unwrap();
        assert!(r.diagnostics.vacuous);
        assert_eq!(r.diagnostics.adjacent.value, 0.0);
    }

    #[test]
    fn too_few_trials_is_an_error() {
        let e = monte_carlo(&iid(1), &McConfig::new(0, 1), &SeedTree::new(1));
        assert!(matches!(e, Err(Error::Samples { needed: MIN_TRIALS, .. })));
        assert!(monte_carlo(&iid(1), &McConfig::new(2000, 4), &SeedTree::new(1)).is_err());
    }

    #[test]
    fn result_is_independent_of_worker_count() {
        let a = par::with_workers(1, || monte_carlo(&iid(2), &McConfig::new(1000, 2), &SeedTree::new(4)).unwrap());
        let b = par::with_workers(4, || monte_carlo(&iid(2), &McConfig::new(1000, 2), &SeedTree::new(4)).unwrap());
        assert_eq!(a, b);
    }
}
