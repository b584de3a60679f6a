//! Block-Markov MAC resolvability encoders.
//!
//! Each transmitter drives one or more coded streams. A stream owns a polar
//! source-resolvability codec and a Toeplitz hash. In block 1 the codec is
//! fed fresh uniform bits only; from block 2 on its input is the hash of the
//! stream's previous block followed by fresh bits, so part of the randomness
//! spent in block `i-1` is recycled in block `i`.
//!
//! Codec width: a stream with hash length `r` and `f` fresh bits per block
//! has nominal width `W = r + f`. The codec seeds the `c = min(W, |V|)`
//! highest-entropy indices of its `V` set with the first `c` input bits;
//! whatever is left of `V` is sampled like the intermediate indices.

mod descriptor;
mod plan;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use descriptor::{CodeDescriptor, StreamDescriptor, DESCRIPTOR_VERSION};
pub use plan::{
    achieved_rates, delta_multi, delta_two_user, make_plan, stream_stats, AchievedRates, LengthParams,
    LengthPlan, StreamPlan, StreamStats,
};

use crate::error::{Error, Result};
use crate::evaluator::region::{classify_two_user, ChannelCase};
use crate::hashing::{sample_hash, ToeplitzHash};
use crate::polar::{self, compute_profile_with, Coin, ProfileMethod, ResolvabilityCode, RngCoin};
use crate::probcore::{transmit, Dist, MacChannel};
use crate::ratesplit::SplitPoint;

/// Which construction a code uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Scheme {
    /// Two users; the second is split into `U`, `V` with `Y = max(U, V)`.
    Case1 { split: SplitPoint },
    /// Two users coded independently (`U` empty, `V = Y`).
    Case2,
    /// `L` users conditioned in the given order.
    Multi { order: Vec<usize> },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Case1 { .. } => "case1",
            Scheme::Case2 => "case2",
            Scheme::Multi { .. } => "multi",
        }
    }

    pub fn split(&self) -> Option<&SplitPoint> {
        match self {
            Scheme::Case1 { split } => Some(split),
            _ => None,
        }
    }
}

/// Parameters for building a code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n_len: usize,
    pub k: usize,
    pub lengths: LengthParams,
    pub beta: f64,
    pub profile: ProfileMethod,
}

/// One coded stream: codec, hash, and its share of the plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub name: String,
    pub codec: ResolvabilityCode,
    pub hash: ToeplitzHash,
    pub plan: StreamPlan,
}

impl Stream {
    fn new(plan: StreamPlan, n_len: usize, beta: f64, method: ProfileMethod, hash: ToeplitzHash) -> Result<Self> {
        let source = Dist::bernoulli(plan.stats.p1.clamp(0.0, 1.0))?;
        let profile = compute_profile_with(&source, polar::log2_len(n_len)?, beta, method)?;
        let width = plan.nominal_width().min(profile.v_set.len());
        Ok(Self {
            name: plan.stats.name.clone(),
            codec: ResolvabilityCode::with_seed_width(profile, width)?,
            hash,
            plan,
        })
    }

    /// Bits the codec actually reads in block `block` (0-based).
    pub fn consumed(&self, block: usize) -> usize {
        self.codec.seed_len().min(self.input_width(block))
    }

    /// Recycled plus fresh bits offered to the codec in block `block`.
    pub fn input_width(&self, block: usize) -> usize {
        if block == 0 {
            self.plan.fresh_first
        } else {
            self.plan.nominal_width()
        }
    }

    pub fn fresh_len(&self, block: usize) -> usize {
        if block == 0 {
            self.plan.fresh_first
        } else {
            self.plan.fresh_next
        }
    }

    pub fn recycled_len(&self, block: usize) -> usize {
        if block == 0 {
            0
        } else {
            self.plan.hash_len
        }
    }
}

/// A complete block-Markov code.
#[derive(Debug, Clone, PartialEq)]
pub struct MacCode {
    pub channel: MacChannel,
    pub inputs: Vec<Dist>,
    pub scheme: Scheme,
    pub plan: LengthPlan,
    pub streams: Vec<Stream>,
    pub params: CodeParams,
}

impl MacCode {
    /// Build a code, sampling one hash per stream from `rng`.
    pub fn build<R: Rng + ?Sized>(
        ch: &MacChannel,
        inputs: &[Dist],
        scheme: Scheme,
        params: CodeParams,
        rng: &mut R,
    ) -> Result<Self> {
        check_case(ch, inputs, &scheme)?;
        let plan = make_plan(ch, inputs, &scheme, params.n_len, params.k, params.lengths)?;
        let hashes = plan
            .streams
            .iter()
            .map(|s| sample_hash(rng, params.n_len, s.hash_len))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(ch, inputs, scheme, params, plan, hashes)
    }

    pub(crate) fn assemble(
        ch: &MacChannel,
        inputs: &[Dist],
        scheme: Scheme,
        params: CodeParams,
        plan: LengthPlan,
        hashes: Vec<ToeplitzHash>,
    ) -> Result<Self> {
        if hashes.len() != plan.streams.len() {
            return Err(Error::Length {
                what: "stream hashes",
                expected: plan.streams.len(),
                got: hashes.len(),
            });
        }
        let streams = plan
            .streams
            .iter()
            .zip(hashes)
            .map(|(sp, h)| {
                if h.in_len() != params.n_len || h.out_len() != sp.hash_len {
                    return Err(Error::Descriptor(format!(
                        "hash for stream {} is {}x{}, plan needs {}x{}",
                        sp.stats.name,
                        h.out_len(),
                        h.in_len(),
                        sp.hash_len,
                        params.n_len
                    )));
                }
                Stream::new(sp.clone(), params.n_len, params.beta, params.profile, h)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            channel: ch.clone(),
            inputs: inputs.to_vec(),
            scheme,
            plan,
            streams,
            params,
        })
    }

    pub fn n_len(&self) -> usize {
        self.plan.n_len
    }

    pub fn k(&self) -> usize {
        self.plan.k
    }

    pub fn rates(&self) -> AchievedRates {
        achieved_rates(&self.plan, &self.scheme)
    }

    /// Channel inputs for one block from the stream sequences.
    pub fn channel_inputs(&self, seqs: &[Vec<u8>]) -> Vec<Vec<u8>> {
        match self.scheme {
            Scheme::Case1 { .. } => vec![
                seqs[0].clone(),
                seqs[1].iter().zip(&seqs[2]).map(|(u, v)| u.max(v)).copied().collect(),
            ],
            _ => seqs.to_vec(),
        }
    }

    /// Streams driven by transmitter `user`.
    pub fn user_streams(&self, user: usize) -> Vec<usize> {
        match (&self.scheme, user) {
            (Scheme::Case1 { .. }, 0) => vec![0],
            (Scheme::Case1 { .. }, _) => vec![1, 2],
            _ => vec![user],
        }
    }

    /// Recycling disabled: every block behaves like block 1.
    pub fn without_recycling(&self) -> Self {
        let mut code = self.clone();
        for s in &mut code.streams {
            s.plan.fresh_next = s.plan.fresh_first;
            s.plan.hash_len = 0;
            s.hash = ToeplitzHash::from_diagonal(self.n_len(), 0, Vec::new()).expect("empty hash");
        }
        for (sp, s) in code.plan.streams.iter_mut().zip(&code.streams) {
            *sp = s.plan.clone();
        }
        code
    }
}

fn check_case(ch: &MacChannel, inputs: &[Dist], scheme: &Scheme) -> Result<()> {
    let wanted = match scheme {
        Scheme::Case1 { .. } => ChannelCase::Case1,
        Scheme::Case2 => ChannelCase::Case2,
        Scheme::Multi { .. } => return Ok(()),
    };
    if ch.num_inputs() != 2 || inputs.len() != 2 {
        return Err(Error::Channel("two-user scheme on a channel without two inputs".into()));
    }
    let (case, gap) = classify_two_user(ch, &inputs[0], &inputs[1])?;
    if case != wanted {
        return Err(Error::CaseMismatch(format!(
            "channel is {case:?} (I(XY;Z) - I(X;Z) - I(Y;Z) = {gap:.3e}), scheme requires {wanted:?}"
        )));
    }
    Ok(())
}

/// Everything one stream did in one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamBlock {
    pub recycled: Vec<u8>,
    pub fresh: Vec<u8>,
    pub sequence: Vec<u8>,
    pub local_draws: usize,
}

impl StreamBlock {
    /// Codec input: recycled bits followed by fresh bits.
    pub fn codec_input(&self) -> Vec<u8> {
        let mut v = self.recycled.clone();
        v.extend_from_slice(&self.fresh);
        v
    }
}

/// One block of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub streams: Vec<StreamBlock>,
    pub inputs: Vec<Vec<u8>>,
    pub output: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub blocks: Vec<Block>,
}

impl Transcript {
    /// All channel outputs, block after block.
    pub fn output_stream(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|b| b.output.iter().copied()).collect()
    }

    pub fn fresh_bits(&self, stream: usize) -> usize {
        self.blocks.iter().map(|b| b.streams[stream].fresh.len()).sum()
    }

    pub fn local_draws(&self) -> usize {
        self.blocks
            .iter()
            .flat_map(|b| b.streams.iter().map(|s| s.local_draws))
            .sum()
    }
}

struct CountingCoin<'a, C: Coin + ?Sized> {
    inner: &'a mut C,
    draws: usize,
}

impl<C: Coin + ?Sized> Coin for CountingCoin<'_, C> {
    fn draw(&mut self, p1: f64) -> u8 {
        self.draws += 1;
        self.inner.draw(p1)
    }
}

/// Run one stream's codec for block `block` given its recycled bits.
pub(crate) fn encode_stream_block<C: Coin + ?Sized>(
    stream: &Stream,
    block: usize,
    recycled: Vec<u8>,
    fresh: Vec<u8>,
    coin: &mut C,
) -> Result<StreamBlock> {
    if recycled.len() != stream.recycled_len(block) {
        return Err(Error::Length {
            what: "recycled bits",
            expected: stream.recycled_len(block),
            got: recycled.len(),
        });
    }
    if fresh.len() != stream.fresh_len(block) {
        return Err(Error::Length {
            what: "fresh seed",
            expected: stream.fresh_len(block),
            got: fresh.len(),
        });
    }
    let used = stream.consumed(block);
    let seed: Vec<u8> = recycled.iter().chain(&fresh).take(used).copied().collect();
    let mut counting = CountingCoin { inner: coin, draws: 0 };
    let sequence = polar::encode_with(&stream.codec, &seed, &mut counting)?;
    Ok(StreamBlock {
        recycled,
        fresh,
        sequence,
        local_draws: counting.draws,
    })
}

/// Hash chain of one stream over all blocks.
pub fn encode_stream<C: Coin + ?Sized>(
    stream: &Stream,
    seeds: &[Vec<u8>],
    coin: &mut C,
) -> Result<Vec<StreamBlock>> {
    let mut out: Vec<StreamBlock> = Vec::with_capacity(seeds.len());
    for (b, fresh) in seeds.iter().enumerate() {
        let recycled = match out.last() {
            Some(prev) => stream.hash.apply(&prev.sequence)?,
            None => Vec::new(),
        };
        out.push(encode_stream_block(stream, b, recycled, fresh.clone(), coin)?);
    }
    Ok(out)
}

fn check_blocks(code: &MacCode, seeds: &[Vec<u8>], stream: usize) -> Result<()> {
    if seeds.len() != code.k() {
        return Err(Error::Length {
            what: "seed blocks",
            expected: code.k(),
            got: seeds.len(),
        });
    }
    for (b, s) in seeds.iter().enumerate() {
        let want = code.streams[stream].fresh_len(b);
        if s.len() != want {
            return Err(Error::Length {
                what: "fresh seed",
                expected: want,
                got: s.len(),
            });
        }
    }
    Ok(())
}

/// Transmitter 1: per-block sequences of stream `X` from seeds `E_1..E_k`.
pub fn encode_tx1<C: Coin + ?Sized>(code: &MacCode, seeds: &[Vec<u8>], coin: &mut C) -> Result<Vec<Vec<u8>>> {
    if matches!(code.scheme, Scheme::Multi { .. }) {
        return Err(Error::CaseMismatch("use encode_multi for the L-user scheme".into()));
    }
    check_blocks(code, seeds, 0)?;
    Ok(encode_stream(&code.streams[0], seeds, coin)?
        .into_iter()
        .map(|b| b.sequence)
        .collect())
}

/// Transmitter 2 under the split scheme: per-block `(U, V, Y = max(U, V))`.
pub fn encode_tx2<C: Coin + ?Sized>(
    code: &MacCode,
    seeds_u: &[Vec<u8>],
    seeds_v: &[Vec<u8>],
    coin: &mut C,
) -> Result<Vec<[Vec<u8>; 3]>> {
    if !matches!(code.scheme, Scheme::Case1 { .. }) {
        return Err(Error::CaseMismatch("encode_tx2 needs the split scheme".into()));
    }
    check_blocks(code, seeds_u, 1)?;
    check_blocks(code, seeds_v, 2)?;
    let u = encode_stream(&code.streams[1], seeds_u, coin)?;
    let v = encode_stream(&code.streams[2], seeds_v, coin)?;
    Ok(u
        .into_iter()
        .zip(v)
        .map(|(u, v)| {
            let y = u.sequence.iter().zip(&v.sequence).map(|(a, b)| a.max(b)).copied().collect();
            [u.sequence, v.sequence, y]
        })
        .collect())
}

/// Both transmitters without splitting: per-block `[X, Y]`.
pub fn encode_case2<C: Coin + ?Sized>(
    code: &MacCode,
    seeds_x: &[Vec<u8>],
    seeds_y: &[Vec<u8>],
    coin: &mut C,
) -> Result<Vec<[Vec<u8>; 2]>> {
    if !matches!(code.scheme, Scheme::Case2) {
        return Err(Error::CaseMismatch(format!("code is {}, not case2", code.scheme.name())));
    }
    check_blocks(code, seeds_x, 0)?;
    check_blocks(code, seeds_y, 1)?;
    let x = encode_stream(&code.streams[0], seeds_x, coin)?;
    let y = encode_stream(&code.streams[1], seeds_y, coin)?;
    Ok(x.into_iter().zip(y).map(|(x, y)| [x.sequence, y.sequence]).collect())
}

/// `L` users: `seeds[l][b]` feeds user `l` in block `b`; returns
/// `out[l][b]`.
pub fn encode_multi<C: Coin + ?Sized>(code: &MacCode, seeds: &[Vec<Vec<u8>>], coin: &mut C) -> Result<Vec<Vec<Vec<u8>>>> {
    if !matches!(code.scheme, Scheme::Multi { .. }) {
        return Err(Error::CaseMismatch(format!("code is {}, not multi", code.scheme.name())));
    }
    if seeds.len() != code.streams.len() {
        return Err(Error::Length {
            what: "user seed lists",
            expected: code.streams.len(),
            got: seeds.len(),
        });
    }
    seeds
        .iter()
        .enumerate()
        .map(|(l, s)| {
            check_blocks(code, s, l)?;
            Ok(encode_stream(&code.streams[l], s, coin)?
                .into_iter()
                .map(|b| b.sequence)
                .collect())
        })
        .collect()
}

/// Draw fresh seeds for every stream and block.
pub fn draw_seeds<R: Rng + ?Sized>(code: &MacCode, rng: &mut R) -> Vec<Vec<Vec<u8>>> {
    code.streams
        .iter()
        .map(|s| {
            (0..code.k())
                .map(|b| (0..s.fresh_len(b)).map(|_| rng.gen_range(0..2u8)).collect())
                .collect()
        })
        .collect()
}

/// A full run: fresh seeds, local randomness and channel noise all come from
/// `rng`, block by block.
pub fn run<R: Rng + ?Sized>(code: &MacCode, rng: &mut R) -> Result<Transcript> {
    let mut blocks: Vec<Block> = Vec::with_capacity(code.k());
    for b in 0..code.k() {
        let mut streams = Vec::with_capacity(code.streams.len());
        for (s, stream) in code.streams.iter().enumerate() {
            let recycled = match blocks.last() {
                Some(prev) => stream.hash.apply_unchecked(&prev.streams[s].sequence),
                None => Vec::new(),
            };
            let fresh: Vec<u8> = (0..stream.fresh_len(b)).map(|_| rng.gen_range(0..2u8)).collect();
            let mut coin = RngCoin::new(&mut *rng);
            streams.push(encode_stream_block(stream, b, recycled, fresh, &mut coin)?);
        }
        let seqs: Vec<Vec<u8>> = streams.iter().map(|s| s.sequence.clone()).collect();
        let inputs = code.channel_inputs(&seqs);
        let output = transmit(&code.channel, &inputs, rng)?;
        blocks.push(Block {
            streams,
            inputs,
            output,
        });
    }
    Ok(Transcript { blocks })
}

/// Check that every block's recycled bits are the hash of the previous
/// block's stream sequence.
pub fn verify_hash_chain(code: &MacCode, t: &Transcript) -> bool {
    t.blocks.windows(2).all(|w| {
        code.streams.iter().enumerate().all(|(s, stream)| {
            stream.hash.apply_unchecked(&w[0].streams[s].sequence) == w[1].streams[s].recycled
        })
    })
}

/// Split `k` blocks across orderings in proportion to `weights`
/// (largest remainder, ties to the earlier entry).
pub fn allocate_blocks(k: usize, weights: &[f64]) -> Result<Vec<usize>> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || weights.iter().any(|&w| w < 0.0 || !w.is_finite()) || total <= 0.0 {
        return Err(Error::Range("time-sharing weights must be non-negative with positive sum".into()));
    }
    let exact: Vec<f64> = weights.iter().map(|w| k as f64 * w / total).collect();
    let mut blocks: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = k - blocks.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        blocks[i] += 1;
        left -= 1;
    }
    Ok(blocks)
}

/// Block-granularity time sharing between user orderings: each ordering
/// runs its own hash chain over its share of the `k` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSharedCode {
    pub segments: Vec<MacCode>,
}

impl TimeSharedCode {
    pub fn build<R: Rng + ?Sized>(
        ch: &MacChannel,
        inputs: &[Dist],
        orders: &[(Vec<usize>, f64)],
        params: CodeParams,
        rng: &mut R,
    ) -> Result<Self> {
        let weights: Vec<f64> = orders.iter().map(|(_, w)| *w).collect();
        let blocks = allocate_blocks(params.k, &weights)?;
        let segments = orders
            .iter()
            .zip(blocks)
            .filter(|(_, b)| *b > 0)
            .map(|((order, _), b)| {
                let p = CodeParams { k: b, ..params };
                MacCode::build(ch, inputs, Scheme::Multi { order: order.clone() }, p, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { segments })
    }

    pub fn k(&self) -> usize {
        self.segments.iter().map(MacCode::k).sum()
    }

    /// Per-user fresh bits over all blocks divided by `kN`.
    pub fn rates(&self) -> Vec<f64> {
        let users = self.segments.first().map_or(0, |c| c.streams.len());
        let n_len = self.segments.first().map_or(1, MacCode::n_len);
        let mut bits = vec![0usize; users];
        for code in &self.segments {
            for (u, s) in code.plan.streams.iter().enumerate() {
                bits[u] += s.fresh_first + (code.k() - 1) * s.fresh_next;
            }
        }
        bits.iter().map(|&b| b as f64 / (self.k() * n_len) as f64).collect()
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Transcript> {
        let mut blocks = Vec::with_capacity(self.k());
        for code in &self.segments {
            blocks.extend(run(code, rng)?.blocks);
        }
        Ok(Transcript { blocks })
    }
}
