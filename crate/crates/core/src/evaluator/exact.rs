//! Exact output laws of small codes.
//!
//! Two independent computations of `p̃(Z_1, ..., Z_k)`:
//!
//! * [`tv_exhaustive`] replays the real encoder along every randomness path
//!   (consumed fresh bits, every local sampling decision, channel noise) and
//!   carries the recycled hash values forward block by block.
//! * [`tv_composed`] (at most two blocks) never runs the encoder: it builds
//!   codec laws from whole-block tables, pushes the first block through the
//!   hashes with [`hashed_joint_dist_exact`], and marginalizes the channel.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::encoder::{encode_stream_block, MacCode, Stream};
use crate::error::{Error, Result};
use crate::hashing::hashed_joint_dist_exact;
use crate::par;
use crate::polar::{bits_to_index, index_to_bits, output_dist_exact, output_law_given_seed, source_law, Coin};
use crate::probcore::{l1, target_output_dist, Alphabet, Dist, JointDist, MacChannel};

/// Most randomness paths [`tv_exhaustive`] will walk.
pub const PATH_BUDGET: u64 = 1 << 28;

/// Largest output law over `Z^{kN}` held in memory.
pub const OUTPUT_SPACE_CAP: u128 = 1 << 24;

fn pow_checked(base: usize, exp: usize, what: &'static str, cap: u128) -> Result<usize> {
    let mut v: u128 = 1;
    for _ in 0..exp {
        v = v.saturating_mul(base as u128);
        if v > cap {
            return Err(Error::Budget { what, size: v, cap });
        }
    }
    Ok(v as usize)
}

/// Law of one output block `Z^N` given the channel input sequences;
/// position 0 is the most significant digit.
pub fn block_output_law(ch: &MacChannel, inputs: &[Vec<u8>]) -> Result<Vec<f64>> {
    let len = inputs.first().map_or(0, Vec::len);
    let zs = ch.output_size();
    let mut law = vec![1.0];
    let mut symbols = vec![0usize; inputs.len()];
    for t in 0..len {
        for (s, x) in symbols.iter_mut().zip(inputs) {
            *s = x[t] as usize;
        }
        let row = ch.row(ch.row_index(&symbols)?);
        let mut next = vec![0.0; law.len() * zs];
        for (i, &m) in law.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (z, &q) in row.iter().enumerate() {
                next[i * zs + z] = m * q;
            }
        }
        law = next;
    }
    Ok(law)
}

/// `q^{⊗len}` flattened with position 0 most significant.
pub fn product_law(q: &Dist, len: usize) -> Vec<f64> {
    let mut law = vec![1.0];
    for _ in 0..len {
        law = law
            .iter()
            .flat_map(|&m| q.pmf().iter().map(move |&p| m * p))
            .collect();
    }
    law
}

/// `V(p, marginal_a(p) x marginal_b(p))` for a table indexed `a * nb + b`.
fn dependence(joint: &[f64], nb: usize) -> f64 {
    let na = joint.len() / nb;
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for a in 0..na {
        for b in 0..nb {
            pa[a] += joint[a * nb + b];
            pb[b] += joint[a * nb + b];
        }
    }
    let mut v = 0.0;
    for a in 0..na {
        for b in 0..nb {
            v += (joint[a * nb + b] - pa[a] * pb[b]).abs();
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactRun {
    /// `V(p̃_{Z^{kN}}, q_Z^{⊗kN})`.
    pub joint_tv: f64,
    /// `V(p̃_{Z_i}, q_Z^{⊗N})` per block.
    pub block_tv: Vec<f64>,
    /// `V(p̃_{Z_1..Z_k}, Π p̃_{Z_i})`.
    pub product_tv: f64,
    /// For `i >= 2`: `V(p̃_{Z_{i-1}, E_i}, p̃_{Z_{i-1}} p̃_{E_i})` with `E_i`
    /// all recycled bits entering block `i`.
    pub recycled_dependence: Vec<f64>,
    /// As above with the whole past `Z_{1:i-1}` in place of `Z_{i-1}`.
    pub recycled_past_dependence: Vec<f64>,
    /// For `i >= 2`: `V(p̃_{Z_{i-1} Z_i}, p̃_{Z_{i-1}} p̃_{Z_i})`.
    pub adjacent_dependence: Vec<f64>,
    pub paths: u64,
    /// `p̃` over `Z^{kN}`, block 1 most significant.
    #[serde(skip)]
    pub law: Vec<f64>,
}

/// Scripted coin: replays a prefix of decisions, then takes the likelier
/// branch, recording every posterior it was asked about.
struct Script<'a> {
    prefix: &'a [u8],
    chosen: Vec<u8>,
    posts: Vec<f64>,
}

impl Coin for Script<'_> {
    fn draw(&mut self, p1: f64) -> u8 {
        let d = self.chosen.len();
        let bit = match self.prefix.get(d) {
            Some(&b) => b,
            None => u8::from(p1 >= 1.0),
        };
        self.chosen.push(bit);
        self.posts.push(p1);
        bit
    }
}

fn branch_prob(p1: f64, bit: u8) -> f64 {
    if bit == 1 {
        p1
    } else {
        1.0 - p1
    }
}

/// Law of one stream's block sequence given its recycled bits, by replaying
/// the encoder over every consumed fresh seed and every sampling path.
fn stream_sequence_law(
    stream: &Stream,
    block: usize,
    recycled: &[u8],
    budget: u64,
) -> Result<(Vec<(Vec<u8>, f64)>, u64)> {
    let used = stream.consumed(block);
    let fresh_used = used.saturating_sub(recycled.len());
    let fresh_len = stream.fresh_len(block);
    if fresh_used >= 63 {
        return Err(Error::Budget {
            what: "fresh seed enumeration",
            size: 1u128 << fresh_used.min(127),
            cap: budget as u128,
        });
    }
    let seeds = 1u64 << fresh_used;
    let weight = 1.0 / seeds as f64;
    let mut law: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    let mut paths = 0u64;
    for f in 0..seeds {
        let mut fresh = index_to_bits(f as usize, fresh_used);
        fresh.resize(fresh_len, 0);
        let mut stack: Vec<Vec<u8>> = vec![Vec::new()];
        while let Some(prefix) = stack.pop() {
            paths += 1;
            if paths > budget {
                return Err(Error::Budget {
                    what: "randomness paths",
                    size: paths as u128,
                    cap: budget as u128,
                });
            }
            let mut script = Script {
                prefix: &prefix,
                chosen: Vec::new(),
                posts: Vec::new(),
            };
            let out = encode_stream_block(stream, block, recycled.to_vec(), fresh.clone(), &mut script)?;
            let mut prob = weight;
            for (d, (&p1, &bit)) in script.posts.iter().zip(&script.chosen).enumerate() {
                prob *= branch_prob(p1, bit);
                if d >= prefix.len() && branch_prob(p1, 1 - bit) > 0.0 {
                    let mut alt = script.chosen[..d].to_vec();
                    alt.push(1 - bit);
                    stack.push(alt);
                }
            }
            if prob > 0.0 {
                *law.entry(out.sequence).or_insert(0.0) += prob;
            }
        }
    }
    Ok((law.into_iter().collect(), paths))
}

type RecKey = Vec<Vec<u8>>;

/// Exact joint output law by replaying the encoder on every randomness path.
pub fn tv_exhaustive(code: &MacCode) -> Result<ExactRun> {
    let ch = &code.channel;
    let n_len = code.n_len();
    let k = code.k();
    let zs = ch.output_size();
    let zblock = pow_checked(zs, n_len, "output block alphabet", OUTPUT_SPACE_CAP)?;
    let zall = pow_checked(zs, n_len * k, "joint output alphabet", OUTPUT_SPACE_CAP)?;
    let q_z = target_output_dist(ch, &code.inputs)?;

    let mut paths = 0u64;
    let empty: RecKey = vec![Vec::new(); code.streams.len()];
    let mut states: BTreeMap<(usize, RecKey), f64> = BTreeMap::new();
    states.insert((0, empty), 1.0);
    let mut recycled = (Vec::new(), Vec::new());

    for b in 0..k {
        if b > 0 {
            recycled.0.push(state_dependence(&states, Some(zblock)));
            recycled.1.push(state_dependence(&states, None));
        }
        // sequence laws for every distinct recycled value of every stream
        let mut keys: Vec<(usize, Vec<u8>)> = states
            .keys()
            .flat_map(|(_, rec)| rec.iter().cloned().enumerate())
            .collect();
        keys.sort();
        keys.dedup();
        let remaining = PATH_BUDGET.saturating_sub(paths);
        let laws = par::map_slice(&keys, |(s, rec)| {
            stream_sequence_law(&code.streams[*s], b, rec, remaining)
        });
        let mut cache: HashMap<(usize, Vec<u8>), Vec<(Vec<u8>, f64)>> = HashMap::new();
        for (key, law) in keys.into_iter().zip(laws) {
            let (law, p) = law?;
            paths += p;
            cache.insert(key, law);
        }
        if paths > PATH_BUDGET {
            return Err(Error::Budget {
                what: "randomness paths",
                size: paths as u128,
                cap: PATH_BUDGET as u128,
            });
        }
        let last = b + 1 == k;
        let entries: Vec<((usize, RecKey), f64)> = states.into_iter().collect();
        let partials = par::map_slice(&entries, |((zp, rec), mass)| -> Result<(Vec<((usize, RecKey), f64)>, u64)> {
            let laws: Vec<&Vec<(Vec<u8>, f64)>> = rec
                .iter()
                .enumerate()
                .map(|(s, r)| &cache[&(s, r.clone())])
                .collect();
            let mut out = Vec::new();
            let mut combos = 0u64;
            let mut pick = vec![0usize; laws.len()];
            'combos: loop {
                combos += 1;
                let mut prob = *mass;
                let seqs: Vec<Vec<u8>> = pick
                    .iter()
                    .zip(&laws)
                    .map(|(&i, law)| {
                        prob *= law[i].1;
                        law[i].0.clone()
                    })
                    .collect();
                let next_rec: RecKey = if last {
                    vec![Vec::new(); seqs.len()]
                } else {
                    code.streams
                        .iter()
                        .zip(&seqs)
                        .map(|(st, x)| st.hash.apply_unchecked(x))
                        .collect()
                };
                let z_law = block_output_law(ch, &code.channel_inputs(&seqs))?;
                for (z, &pz) in z_law.iter().enumerate() {
                    if pz > 0.0 {
                        out.push(((zp * zblock + z, next_rec.clone()), prob * pz));
                    }
                }
                // odometer over the per-stream supports
                for s in (0..pick.len()).rev() {
                    pick[s] += 1;
                    if pick[s] < laws[s].len() {
                        continue 'combos;
                    }
                    pick[s] = 0;
                }
                break;
            }
            Ok((out, combos))
        });
        let mut next: BTreeMap<(usize, RecKey), f64> = BTreeMap::new();
        for part in partials {
            let (items, combos) = part?;
            paths += combos;
            for (key, m) in items {
                *next.entry(key).or_insert(0.0) += m;
            }
        }
        if paths > PATH_BUDGET {
            return Err(Error::Budget {
                what: "randomness paths",
                size: paths as u128,
                cap: PATH_BUDGET as u128,
            });
        }
        states = next;
    }

    let mut law = vec![0.0; zall];
    for ((z, _), m) in states {
        law[z] += m;
    }
    Ok(summarize(law, &q_z, n_len, k, zblock, recycled, paths))
}

/// Dependence between recycled bits and past outputs; `last_block` keeps
/// only the most recent output block.
fn state_dependence(states: &BTreeMap<(usize, RecKey), f64>, last_block: Option<usize>) -> f64 {
    let past = |z: usize| last_block.map_or(z, |zb| z % zb);
    let mut z_index: BTreeMap<usize, usize> = BTreeMap::new();
    let mut r_index: BTreeMap<&RecKey, usize> = BTreeMap::new();
    for (z, r) in states.keys() {
        let nz = z_index.len();
        z_index.entry(past(*z)).or_insert(nz);
        let nr = r_index.len();
        r_index.entry(r).or_insert(nr);
    }
    let nb = r_index.len();
    let mut joint = vec![0.0; z_index.len() * nb];
    for ((z, r), m) in states {
        joint[z_index[&past(*z)] * nb + r_index[r]] += m;
    }
    dependence(&joint, nb)
}

fn block_marginal(law: &[f64], zblock: usize, k: usize, i: usize) -> Vec<f64> {
    let after = zblock.pow((k - 1 - i) as u32);
    let mut out = vec![0.0; zblock];
    for (idx, &m) in law.iter().enumerate() {
        out[(idx / after) % zblock] += m;
    }
    out
}

fn summarize(
    law: Vec<f64>,
    q_z: &Dist,
    n_len: usize,
    k: usize,
    zblock: usize,
    recycled: (Vec<f64>, Vec<f64>),
    paths: u64,
) -> ExactRun {
    let target = product_law(q_z, n_len * k);
    let joint_tv = l1(&law, &target);
    let q_block = product_law(q_z, n_len);
    let marginals: Vec<Vec<f64>> = (0..k).map(|i| block_marginal(&law, zblock, k, i)).collect();
    let block_tv = marginals.iter().map(|m| l1(m, &q_block)).collect();
    let mut product = vec![1.0];
    for m in &marginals {
        product = product.iter().flat_map(|&a| m.iter().map(move |&b| a * b)).collect();
    }
    let product_tv = l1(&law, &product);
    let adjacent_dependence = (1..k)
        .map(|i| {
            let after = zblock.pow((k - 1 - i) as u32);
            let mut pair = vec![0.0; zblock * zblock];
            for (idx, &m) in law.iter().enumerate() {
                let zi = (idx / after) % zblock;
                let zprev = (idx / (after * zblock)) % zblock;
                pair[zprev * zblock + zi] += m;
            }
            dependence(&pair, zblock)
        })
        .collect();
    ExactRun {
        joint_tv,
        block_tv,
        product_tv,
        recycled_dependence: recycled.0,
        recycled_past_dependence: recycled.1,
        adjacent_dependence,
        paths,
        law,
    }
}

// ---------------------------------------------------------------------------
// Composed route.

fn law_with_recycled(stream: &Stream, block: usize, recycled: &[u8]) -> Result<Vec<f64>> {
    let used = stream.consumed(block);
    let from_rec = recycled.len().min(used);
    let fresh_used = used - from_rec;
    let seeds = 1usize << fresh_used;
    let mut acc = vec![0.0; 1 << stream.codec.len()];
    for f in 0..seeds {
        let mut seed = recycled[..from_rec].to_vec();
        seed.extend(index_to_bits(f, fresh_used));
        let law = output_law_given_seed(&stream.codec, &seed)?;
        for (a, b) in acc.iter_mut().zip(law) {
            *a += b / seeds as f64;
        }
    }
    Ok(acc)
}

/// Law of the channel-input tuple (inputs concatenated, first input most
/// significant) from independent stream laws.
fn input_law(code: &MacCode, stream_laws: &[Vec<f64>]) -> BTreeMap<usize, f64> {
    let n_len = code.n_len();
    let supports: Vec<Vec<(usize, f64)>> = stream_laws
        .iter()
        .map(|l| l.iter().copied().enumerate().filter(|&(_, m)| m > 0.0).collect())
        .collect();
    let mut out = BTreeMap::new();
    let mut pick = vec![0usize; supports.len()];
    if supports.iter().any(Vec::is_empty) {
        return out;
    }
    'outer: loop {
        let mut prob = 1.0;
        let seqs: Vec<Vec<u8>> = pick
            .iter()
            .zip(&supports)
            .map(|(&i, sup)| {
                prob *= sup[i].1;
                index_to_bits(sup[i].0, n_len)
            })
            .collect();
        let key = code
            .channel_inputs(&seqs)
            .iter()
            .fold(0usize, |acc, x| (acc << n_len) | bits_to_index(x));
        *out.entry(key).or_insert(0.0) += prob;
        for s in (0..pick.len()).rev() {
            pick[s] += 1;
            if pick[s] < supports[s].len() {
                continue 'outer;
            }
            pick[s] = 0;
        }
        break;
    }
    out
}

struct ChannelTable<'a> {
    code: &'a MacCode,
    rows: HashMap<usize, Vec<f64>>,
}

impl ChannelTable<'_> {
    fn law(&mut self, key: usize) -> Result<&Vec<f64>> {
        if !self.rows.contains_key(&key) {
            let n_len = self.code.n_len();
            let users = self.code.channel.num_inputs();
            let inputs: Vec<Vec<u8>> = (0..users)
                .map(|u| index_to_bits((key >> ((users - 1 - u) * n_len)) & ((1 << n_len) - 1), n_len))
                .collect();
            self.rows.insert(key, block_output_law(&self.code.channel, &inputs)?);
        }
        Ok(&self.rows[&key])
    }

    fn push(&mut self, inputs: &BTreeMap<usize, f64>, zblock: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; zblock];
        for (&key, &p) in inputs {
            for (o, q) in out.iter_mut().zip(self.law(key)?) {
                *o += p * q;
            }
        }
        Ok(out)
    }
}

/// Exact joint output law from codec tables, hash pushforwards and channel
/// marginalization, for codes with at most two blocks.
pub fn tv_composed(code: &MacCode) -> Result<ExactRun> {
    let k = code.k();
    if k > 2 {
        return Err(Error::Range(format!("composed route handles k <= 2, got k = {k}")));
    }
    let n_len = code.n_len();
    let zs = code.channel.output_size();
    let zblock = pow_checked(zs, n_len, "output block alphabet", OUTPUT_SPACE_CAP)?;
    pow_checked(zs, n_len * k, "joint output alphabet", OUTPUT_SPACE_CAP)?;
    let q_z = target_output_dist(&code.channel, &code.inputs)?;
    let mut table = ChannelTable {
        code,
        rows: HashMap::new(),
    };
    let first: Vec<Vec<f64>> = code
        .streams
        .iter()
        .map(|s| Ok(output_dist_exact(&s.codec)?.pmf().to_vec()))
        .collect::<Result<_>>()?;

    if k == 1 {
        let law = table.push(&input_law(code, &first), zblock)?;
        return Ok(summarize(law, &q_z, n_len, 1, zblock, (Vec::new(), Vec::new()), 0));
    }

    // joint of (S_1, ..., S_m, Z_1) for block 1
    let m = code.streams.len();
    let seq_space = 1usize << n_len;
    let joint_len = pow_checked(seq_space, m, "stream tuple space", 1 << 24)? * zblock;
    let mut joint = vec![0.0; joint_len];
    let supports: Vec<Vec<(usize, f64)>> = first
        .iter()
        .map(|l| l.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect())
        .collect();
    let mut pick = vec![0usize; m];
    'outer: loop {
        let mut prob = 1.0;
        let mut flat = 0usize;
        let mut laws = Vec::with_capacity(m);
        for (s, &i) in pick.iter().enumerate() {
            let (x, p) = supports[s][i];
            prob *= p;
            flat = flat * seq_space + x;
            let mut single = vec![0.0; seq_space];
            single[x] = 1.0;
            laws.push(single);
        }
        let z_law = table.push(&input_law(code, &laws), zblock)?;
        for (z, pz) in z_law.into_iter().enumerate() {
            joint[flat * zblock + z] += prob * pz;
        }
        for s in (0..m).rev() {
            pick[s] += 1;
            if pick[s] < supports[s].len() {
                continue 'outer;
            }
            pick[s] = 0;
        }
        break;
    }
    let mut axes = vec![Alphabet::new(seq_space)?; m];
    axes.push(Alphabet::new(zblock)?);
    let joint = JointDist::renormalized(axes, joint)?;
    let hashes: Vec<_> = code.streams.iter().map(|s| s.hash.clone()).collect();
    let hashed = hashed_joint_dist_exact(&hashes, &joint)?;

    let shape = hashed.shape();
    let rec_space: usize = shape[..m].iter().product();
    let mut law = vec![0.0; zblock * zblock];
    let mut recycled_joint = vec![0.0; zblock * rec_space];
    for e in 0..rec_space {
        let mut rest = e;
        let mut rec = vec![Vec::new(); m];
        for s in (0..m).rev() {
            rec[s] = index_to_bits(rest % shape[s], code.streams[s].hash.out_len());
            rest /= shape[s];
        }
        let pe_z1 = &hashed.pmf()[e * zblock..(e + 1) * zblock];
        if pe_z1.iter().all(|&p| p == 0.0) {
            continue;
        }
        for (z1, &p) in pe_z1.iter().enumerate() {
            recycled_joint[z1 * rec_space + e] = p;
        }
        let laws: Vec<Vec<f64>> = code
            .streams
            .iter()
            .zip(&rec)
            .map(|(s, r)| law_with_recycled(s, 1, r))
            .collect::<Result<_>>()?;
        let z2 = table.push(&input_law(code, &laws), zblock)?;
        for (z1, &p) in pe_z1.iter().enumerate() {
            for (z2i, &q) in z2.iter().enumerate() {
                law[z1 * zblock + z2i] += p * q;
            }
        }
    }
    let dep = dependence(&recycled_joint, rec_space);
    Ok(summarize(law, &q_z, n_len, 2, zblock, (vec![dep], vec![dep]), 0))
}

/// Exact `V(p̃_{S^N}, q_S^{⊗N})` of each stream codec with a uniform seed.
pub fn codec_tv(code: &MacCode) -> Result<Vec<f64>> {
    code.streams
        .iter()
        .map(|s| {
            let law = output_dist_exact(&s.codec)?;
            Ok(l1(law.pmf(), &source_law(s.codec.profile.p1(), s.codec.len())?))
        })
        .collect()
}
