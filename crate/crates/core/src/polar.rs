//! Polar source-resolvability codec.
//!
//! A block of `N = 2^n` i.i.d. bits `X` is mapped to `A = X G_n` with
//! `G_n = [1 0; 1 1]^{⊗n}`, so `A_j` is the XOR of every `X_i` whose index is
//! a bitwise superset of `j`. The map is an involution. Position 0 is the
//! most significant bit whenever a sequence is flattened to an integer.
//!
//! The codec writes seed bits on the high-entropy indices, samples the
//! intermediate ones from their exact conditional law, and fixes the
//! near-deterministic ones to their conditional argmax.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::probcore::{binary_entropy, Dist, JointDist};

/// Largest `N` for which whole-block tables over `{0,1}^N` are built.
pub const EXACT_TABLE_CAP: usize = 20;

/// Argmax threshold: choose 1 only when it is more likely by this margin.
const ARGMAX_MARGIN: f64 = 1e-12;

/// Atom lists longer than this (per combined pair) abort exact profiling.
const ATOM_PAIR_BUDGET: usize = 1 << 24;

pub fn block_len(n: u32) -> Result<usize> {
    if n >= usize::BITS - 1 {
        return Err(Error::Range(format!("n = {n} is too large")));
    }
    Ok(1usize << n)
}

pub fn log2_len(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros())
}

pub(crate) fn transform_in_place(a: &mut [u8]) {
    let len = a.len();
    let mut h = 1;
    while h < len {
        for j in 0..len {
            if j & h == 0 {
                a[j] ^= a[j | h];
            }
        }
        h <<= 1;
    }
}

/// `x G_n` over GF(2). Applying it twice returns the input.
pub fn polar_transform(bits: &[u8]) -> Result<Vec<u8>> {
    log2_len(bits.len())?;
    if let Some(i) = bits.iter().position(|&b| b > 1) {
        return Err(Error::Range(format!("entry {i} is not a bit")));
    }
    let mut out = bits.to_vec();
    transform_in_place(&mut out);
    Ok(out)
}

/// Same transform on a block packed into an integer, position 0 in the top bit.
pub(crate) fn transform_word(word: u64, len: usize) -> u64 {
    let mut w = word;
    let mut h = 1;
    while h < len {
        // integer bit `len-1-j` holds position j; positions without bit h take
        // the value at position j + h, which sits h integer bits lower
        let mut mask = 0u64;
        for j in 0..len {
            if j & h == 0 {
                mask |= 1 << (len - 1 - j);
            }
        }
        w ^= (w << h) & mask;
        h <<= 1;
    }
    w
}

pub(crate) fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

pub(crate) fn index_to_bits(idx: usize, len: usize) -> Vec<u8> {
    (0..len).map(|t| ((idx >> (len - 1 - t)) & 1) as u8).collect()
}

/// How conditional entropies are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProfileMethod {
    /// Exact recursion over the finite set of posterior values each
    /// synthetic channel can produce. Aborts if the atom lists explode.
    Exact,
    /// Brute force over all `2^N` source blocks. `N <= 20`.
    Enumeration,
    /// Posterior atoms merged into `bins` entropy bins at every level.
    /// Approximate; meant for block lengths the exact modes cannot reach.
    Quantized { bins: usize },
}

/// Conditional-entropy profile of `A = X G_n` for an i.i.d. binary source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarProfile {
    pub n: u32,
    pub source: Dist,
    pub cond_entropies: Vec<f64>,
    pub beta: f64,
    pub delta_n: f64,
    pub v_set: Vec<usize>,
    pub h_set: Vec<usize>,
    pub method: ProfileMethod,
}

pub fn delta_n(len: usize, beta: f64) -> f64 {
    (-(len as f64).powf(beta)).exp2()
}

pub fn compute_profile(source: &Dist, n: u32, beta: f64) -> Result<PolarProfile> {
    compute_profile_with(source, n, beta, ProfileMethod::Exact)
}

pub fn compute_profile_with(
    source: &Dist,
    n: u32,
    beta: f64,
    method: ProfileMethod,
) -> Result<PolarProfile> {
    if source.len() != 2 {
        return Err(Error::Alphabet(format!(
            "polar source must be binary, got {} symbols",
            source.len()
        )));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Range(format!("beta = {beta} must lie in (0, 1/2)")));
    }
    let len = block_len(n)?;
    let p1 = source.prob(1);
    let cond_entropies = match method {
        ProfileMethod::Exact => atom_profile(p1, n, None)?,
        ProfileMethod::Quantized { bins } => {
            if bins < 2 {
                return Err(Error::Range("at least two bins are needed".into()));
            }
            atom_profile(p1, n, Some(bins))?
        }
        ProfileMethod::Enumeration => {
            let tables = PrefixTables::new(p1, len)?;
            (0..len).map(|j| tables.cond_entropy(j)).collect()
        }
    };
    Ok(PolarProfile::from_entropies(
        n,
        source.clone(),
        cond_entropies,
        beta,
        method,
    ))
}

impl PolarProfile {
    fn from_entropies(
        n: u32,
        source: Dist,
        cond_entropies: Vec<f64>,
        beta: f64,
        method: ProfileMethod,
    ) -> Self {
        let len = cond_entropies.len();
        let delta = delta_n(len, beta);
        let v_set = (0..len).filter(|&j| cond_entropies[j] > 1.0 - delta).collect();
        let h_set = (0..len).filter(|&j| cond_entropies[j] > delta).collect();
        Self {
            n,
            source,
            cond_entropies,
            beta,
            delta_n: delta,
            v_set,
            h_set,
            method,
        }
    }

    pub fn len(&self) -> usize {
        self.cond_entropies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cond_entropies.is_empty()
    }

    pub fn p1(&self) -> f64 {
        self.source.prob(1)
    }

    /// Indices of `v_set`, highest conditional entropy first (ties by index).
    pub fn v_by_entropy(&self) -> Vec<usize> {
        let mut v = self.v_set.clone();
        v.sort_by(|&a, &b| {
            self.cond_entropies[b]
                .total_cmp(&self.cond_entropies[a])
                .then(a.cmp(&b))
        });
        v
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,cond_entropy,in_v_set,in_h_set")?;
        let mut in_v = vec![false; self.len()];
        let mut in_h = vec![false; self.len()];
        for &j in &self.v_set {
            in_v[j] = true;
        }
        for &j in &self.h_set {
            in_h[j] = true;
        }
        for (j, h) in self.cond_entropies.iter().enumerate() {
            writeln!(out, "{j},{h:.15},{},{}", in_v[j], in_h[j])?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Exact profile by posterior atoms.
//
// A synthetic channel is summarized by the law of the posterior
// P(A_j = 1 | past); a list of (posterior, mass) atoms. Index j = 2j' + b
// is the minus (b = 0) or plus (b = 1) combination of two copies of channel
// j' at the previous level.

type Atoms = Vec<(f64, f64)>;

fn xor_post(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

/// Posterior of the second bit once their XOR `u` is known.
fn plus_post(a: f64, b: f64, u: u8) -> Option<f64> {
    let (w1, w0) = if u == 1 {
        (b * (1.0 - a), (1.0 - b) * a)
    } else {
        (b * a, (1.0 - b) * (1.0 - a))
    };
    let total = w1 + w0;
    (total > 0.0).then(|| w1 / total)
}

fn merge_exact(raw: Atoms) -> Atoms {
    let mut map: HashMap<i64, (f64, f64)> = HashMap::new();
    let mut order = Vec::new();
    for (pi, m) in raw {
        if m == 0.0 {
            continue;
        }
        let folded = pi.min(1.0 - pi);
        let key = (folded * 1e13).round() as i64;
        map.entry(key)
            .and_modify(|e| e.1 += m)
            .or_insert_with(|| {
                order.push(key);
                (folded, m)
            });
    }
    order.into_iter().map(|k| map[&k]).collect()
}

fn merge_binned(raw: Atoms, bins: usize) -> Atoms {
    let mut acc = vec![(0.0, 0.0); bins];
    for (pi, m) in raw {
        if m == 0.0 {
            continue;
        }
        let folded = pi.min(1.0 - pi);
        let b = ((binary_entropy(folded) * bins as f64) as usize).min(bins - 1);
        acc[b].0 += folded * m;
        acc[b].1 += m;
    }
    acc.into_iter()
        .filter(|&(_, m)| m > 0.0)
        .map(|(s, m)| (s / m, m))
        .collect()
}

fn combine(c: &Atoms, bins: Option<usize>) -> Result<(Atoms, Atoms)> {
    let pairs = c.len() * c.len();
    if bins.is_none() && pairs > ATOM_PAIR_BUDGET {
        return Err(Error::Budget {
            what: "exact polar profile atom pairs",
            size: pairs as u128,
            cap: ATOM_PAIR_BUDGET as u128,
        });
    }
    let mut minus = Vec::with_capacity(pairs);
    let mut plus = Vec::with_capacity(2 * pairs);
    for &(a, ma) in c {
        for &(b, mb) in c {
            let pu1 = xor_post(a, b);
            minus.push((pu1, ma * mb));
            for (u, pu) in [(0u8, 1.0 - pu1), (1u8, pu1)] {
                if pu <= 0.0 {
                    continue;
                }
                if let Some(post) = plus_post(a, b, u) {
                    plus.push((post, ma * mb * pu));
                }
            }
        }
    }
    Ok(match bins {
        None => (merge_exact(minus), merge_exact(plus)),
        Some(k) => (merge_binned(minus, k), merge_binned(plus, k)),
    })
}

fn atom_profile(p1: f64, n: u32, bins: Option<usize>) -> Result<Vec<f64>> {
    let mut chans: Vec<Atoms> = vec![vec![(p1.min(1.0 - p1), 1.0)]];
    for _ in 0..n {
        let next = par::map_slice(&chans, |c| combine(c, bins));
        let mut flat = Vec::with_capacity(2 * chans.len());
        for pair in next {
            let (m, p) = pair?;
            flat.push(m);
            flat.push(p);
        }
        chans = flat;
    }
    Ok(chans
        .iter()
        .map(|c| c.iter().map(|&(pi, m)| m * binary_entropy(pi)).sum::<f64>().clamp(0.0, 1.0))
        .collect())
}

// ---------------------------------------------------------------------------
// Whole-block tables, used for exact output laws and as an independent
// route to the conditional entropies.

/// Prefix marginals of `q_A` over `{0,1}^j` for every `j`.
pub(crate) struct PrefixTables {
    len: usize,
    /// `prefix[j]` has `2^j` entries, the law of `A_{0..j}`.
    prefix: Vec<Vec<f64>>,
}

impl PrefixTables {
    pub(crate) fn new(p1: f64, len: usize) -> Result<Self> {
        log2_len(len)?;
        if len > EXACT_TABLE_CAP {
            return Err(Error::Budget {
                what: "polar block table",
                size: 1u128 << len,
                cap: 1u128 << EXACT_TABLE_CAP,
            });
        }
        let size = 1usize << len;
        let mut qa = vec![0.0; size];
        for x in 0..size {
            let ones = (x as u64).count_ones() as i32;
            let px = p1.powi(ones) * (1.0 - p1).powi(len as i32 - ones);
            qa[transform_word(x as u64, len) as usize] = px;
        }
        let mut prefix = vec![Vec::new(); len + 1];
        prefix[len] = qa;
        for j in (0..len).rev() {
            prefix[j] = prefix[j + 1].chunks(2).map(|c| c[0] + c[1]).collect();
        }
        Ok(Self { len, prefix })
    }

    /// `P(A_j = 1 | A_{0..j} = prefix)`, or `None` for a null prefix.
    fn cond_one(&self, j: usize, prefix: usize) -> Option<f64> {
        let pair = &self.prefix[j + 1][2 * prefix..2 * prefix + 2];
        let m = pair[0] + pair[1];
        (m > 0.0).then(|| pair[1] / m)
    }

    fn cond_entropy(&self, j: usize) -> f64 {
        self.prefix[j + 1]
            .chunks(2)
            .map(|c| {
                let m = c[0] + c[1];
                if m > 0.0 {
                    m * binary_entropy(c[1] / m)
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Codec law over `A`, with each seed position either uniform (`None`)
    /// or pinned to a bit.
    fn codec_law_a(&self, roles: &[Role], seed: Option<&[u8]>) -> Vec<f64> {
        let mut law = vec![1.0];
        let mut seed_cursor = 0;
        for (j, role) in roles.iter().enumerate() {
            let mut next = vec![0.0; law.len() * 2];
            let pinned = match (role, seed) {
                (Role::Seed, Some(s)) => {
                    let b = s[seed_cursor];
                    seed_cursor += 1;
                    Some(b)
                }
                (Role::Seed, None) => {
                    seed_cursor += 1;
                    None
                }
                _ => None,
            };
            for (pre, &m) in law.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let c1 = self.cond_one(j, pre);
                let f1 = match role {
                    Role::Seed => match pinned {
                        Some(b) => b as f64,
                        None => 0.5,
                    },
                    Role::Sample => c1.unwrap_or(0.5),
                    Role::Argmax => {
                        if c1.unwrap_or(0.5) > 0.5 + ARGMAX_MARGIN {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                next[2 * pre] = m * (1.0 - f1);
                next[2 * pre + 1] = m * f1;
            }
            law = next;
        }
        law
    }

    fn to_x_law(&self, law_a: &[f64]) -> Vec<f64> {
        let mut law_x = vec![0.0; law_a.len()];
        for (a, &m) in law_a.iter().enumerate() {
            law_x[transform_word(a as u64, self.len) as usize] = m;
        }
        law_x
    }

    pub(crate) fn source_law(&self) -> Vec<f64> {
        self.to_x_law(&self.prefix[self.len])
    }
}

// ---------------------------------------------------------------------------
// The codec.

/// What the encoder does at one index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Seed,
    Sample,
    Argmax,
}

/// Source of the bits drawn on sampled indices.
pub trait Coin {
    /// Return 1 with probability `p1`.
    fn draw(&mut self, p1: f64) -> u8;
}

/// Coin backed by a generator, counting how many draws it served.
pub struct RngCoin<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    pub draws: usize,
}

impl<'a, R: Rng + ?Sized> RngCoin<'a, R> {
    pub fn new(rng: &'a mut R) -> Self {
        Self { rng, draws: 0 }
    }
}

impl<R: Rng + ?Sized> Coin for RngCoin<'_, R> {
    fn draw(&mut self, p1: f64) -> u8 {
        self.draws += 1;
        u8::from(self.rng.gen::<f64>() < p1)
    }
}

/// A source-resolvability code: a profile plus the indices fed by the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvabilityCode {
    pub profile: PolarProfile,
    /// Seed positions in increasing order; seed bit `t` lands on the `t`-th.
    seed_positions: Vec<usize>,
}

impl ResolvabilityCode {
    /// The textbook code: the whole `v_set` is seeded.
    pub fn new(profile: PolarProfile) -> Self {
        let seed_positions = profile.v_set.clone();
        Self {
            profile,
            seed_positions,
        }
    }

    /// Seed only the `width` highest-entropy indices of `v_set`; the rest
    /// of `v_set` is sampled like the intermediate indices.
    pub fn with_seed_width(profile: PolarProfile, width: usize) -> Result<Self> {
        if width > profile.v_set.len() {
            return Err(Error::Range(format!(
                "seed width {width} exceeds |V| = {}",
                profile.v_set.len()
            )));
        }
        let mut seed_positions: Vec<usize> = profile.v_by_entropy()[..width].to_vec();
        seed_positions.sort_unstable();
        Ok(Self {
            profile,
            seed_positions,
        })
    }

    pub fn len(&self) -> usize {
        self.profile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }

    pub fn seed_len(&self) -> usize {
        self.seed_positions.len()
    }

    pub fn seed_positions(&self) -> &[usize] {
        &self.seed_positions
    }

    pub fn roles(&self) -> Vec<Role> {
        let mut roles = vec![Role::Argmax; self.len()];
        for &j in &self.profile.h_set {
            roles[j] = Role::Sample;
        }
        for &j in &self.seed_positions {
            roles[j] = Role::Seed;
        }
        roles
    }

    fn check_seed(&self, seed: &[u8]) -> Result<()> {
        if seed.len() != self.seed_len() {
            return Err(Error::Length {
                what: "polar seed",
                expected: self.seed_len(),
                got: seed.len(),
            });
        }
        if let Some(i) = seed.iter().position(|&b| b > 1) {
            return Err(Error::Range(format!("seed entry {i} is not a bit")));
        }
        Ok(())
    }
}

pub fn encode<R: Rng + ?Sized>(code: &ResolvabilityCode, seed: &[u8], rng: &mut R) -> Result<Vec<u8>> {
    encode_with(code, seed, &mut RngCoin::new(rng))
}

/// Encode with an explicit coin for the sampled indices.
pub fn encode_with<C: Coin + ?Sized>(code: &ResolvabilityCode, seed: &[u8], coin: &mut C) -> Result<Vec<u8>> {
    code.check_seed(seed)?;
    let roles = code.roles();
    let mut j = 0;
    let mut seed_cursor = 0;
    let priors = vec![code.profile.p1(); code.len()];
    let x = successive(&priors, &mut |p1| {
        let bit = match roles[j] {
            Role::Seed => {
                seed_cursor += 1;
                seed[seed_cursor - 1]
            }
            Role::Sample => coin.draw(p1),
            Role::Argmax => u8::from(p1 > 0.5 + ARGMAX_MARGIN),
        };
        j += 1;
        bit
    });
    Ok(x)
}

/// Visit `A_0, A_1, ...` in order, handing `decide` the exact posterior
/// `P(A_j = 1 | A_{0..j})` and taking back the chosen bit. Returns the block
/// `X = A G_n` implied by the choices.
fn successive(post: &[f64], decide: &mut dyn FnMut(f64) -> u8) -> Vec<u8> {
    let len = post.len();
    if len == 1 {
        return vec![decide(post[0])];
    }
    let h = len / 2;
    // the first half of A is the transform of X_top xor X_bot
    let pv: Vec<f64> = (0..h).map(|j| xor_post(post[j], post[h + j])).collect();
    let v = successive(&pv, decide);
    let pw: Vec<f64> = (0..h)
        .map(|j| {
            let top_one = if v[j] == 0 { post[j] } else { 1.0 - post[j] };
            let top_zero = 1.0 - top_one;
            let w1 = post[h + j] * top_one;
            let w0 = (1.0 - post[h + j]) * top_zero;
            if w1 + w0 > 0.0 {
                w1 / (w1 + w0)
            } else {
                0.5
            }
        })
        .collect();
    let w = successive(&pw, decide);
    let mut x = Vec::with_capacity(len);
    x.extend(v.iter().zip(&w).map(|(a, b)| a ^ b));
    x.extend_from_slice(&w);
    x
}

/// Exact law of the encoder output over `{0,1}^N` for a uniform seed,
/// as a joint over `N` binary axes.
pub fn output_dist_exact(code: &ResolvabilityCode) -> Result<JointDist> {
    let tables = PrefixTables::new(code.profile.p1(), code.len())?;
    let law = tables.to_x_law(&tables.codec_law_a(&code.roles(), None));
    JointDist::renormalized(vec![crate::probcore::Alphabet::binary(); code.len()], law)
}

/// Exact law of the encoder output over `{0,1}^N` (flattened, position 0
/// most significant) for one fixed seed.
pub fn output_law_given_seed(code: &ResolvabilityCode, seed: &[u8]) -> Result<Vec<f64>> {
    code.check_seed(seed)?;
    let tables = PrefixTables::new(code.profile.p1(), code.len())?;
    Ok(tables.to_x_law(&tables.codec_law_a(&code.roles(), Some(seed))))
}

/// `q_X^{⊗N}` flattened the same way.
pub fn source_law(p1: f64, len: usize) -> Result<Vec<f64>> {
    Ok(PrefixTables::new(p1, len)?.source_law())
}
