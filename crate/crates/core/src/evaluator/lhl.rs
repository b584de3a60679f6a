//! Distributed leftover-hash check on exhaustively computable joints.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::{hashed_joint_dist_exact, sample_hash, ToeplitzHash};
use crate::par;
use crate::probcore::{l1, min_entropy_conditional, Alphabet, Dist, JointDist};
use crate::rng::{SeedTree, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhlCheck {
    /// `V(p_{F(X), Z}, uniform x p_Z)` for each sampled hash tuple `F`.
    pub per_hash_tv: Vec<f64>,
    /// Average of `per_hash_tv`, the quantity the bound controls.
    pub mean_tv: f64,
    pub bound: f64,
    /// `H_inf(p_{X_S Z} | q_Z)` for every non-empty `S`, indexed by bitmask.
    pub min_entropies: Vec<f64>,
    /// Hash tuples whose own distance exceeds the bound.
    pub exceedances: usize,
    pub pass: bool,
}

impl LhlCheck {
    pub fn vacuous(&self) -> bool {
        self.bound >= 2.0
    }
}

/// Bit length of each hashed axis and the size of the flattened side
/// information.
fn split_axes(joint: &JointDist, hash_lens: &[usize]) -> Result<(Vec<usize>, usize)> {
    let shape = joint.shape();
    let users = hash_lens.len();
    if users == 0 || shape.len() <= users {
        return Err(Error::Shape(format!(
            "joint with {} axes cannot carry {users} hashed users and side information",
            shape.len()
        )));
    }
    let mut in_lens = Vec::with_capacity(users);
    for (l, (&size, &r)) in shape.iter().zip(hash_lens).enumerate() {
        if !size.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(size));
        }
        let n = size.trailing_zeros() as usize;
        if r > n {
            return Err(Error::Range(format!("hash length {r} exceeds the {n} bits of user {l}")));
        }
        in_lens.push(n);
    }
    Ok((in_lens, shape[users..].iter().product()))
}

/// `sqrt(sum_{S != 0} 2^{r_S - H_inf(p_{X_S Z} | q_Z)})` and the per-subset
/// min-entropies. The side-information axes are flattened into one `Z`.
pub fn lhl_bound(joint: &JointDist, hash_lens: &[usize], reference: &Dist) -> Result<(f64, Vec<f64>)> {
    let (_, side) = split_axes(joint, hash_lens)?;
    let users = hash_lens.len();
    let rank = joint.rank();
    let side_axes: Vec<usize> = (users..rank).collect();
    if reference.len() != side {
        return Err(Error::Shape(format!(
            "reference law has {} symbols, side information spans {side}",
            reference.len()
        )));
    }
    let mut sum = 0.0;
    let mut entropies = vec![f64::NAN; 1 << users];
    for mask in 1usize..1 << users {
        let mut keep: Vec<usize> = (0..users).filter(|l| mask >> l & 1 == 1).collect();
        let r_s: usize = keep.iter().map(|&l| hash_lens[l]).sum();
        keep.extend(&side_axes);
        let marg = joint.marginal(&keep)?;
        let cond: Vec<usize> = (keep.len() - side_axes.len()..keep.len()).collect();
        let h = min_entropy_conditional(&marg, &cond, reference)?;
        entropies[mask] = h;
        sum += (r_s as f64 - h).exp2();
    }
    Ok((sum.sqrt(), entropies))
}

/// Exact `V(p_{F(X), Z}, uniform x p_Z)` for one hash tuple.
pub fn hashed_tv(joint: &JointDist, hashes: &[ToeplitzHash]) -> Result<f64> {
    let users = hashes.len();
    let hashed = hashed_joint_dist_exact(hashes, joint)?;
    let side_axes: Vec<usize> = (users..joint.rank()).collect();
    let p_z = joint.marginal(&side_axes)?.flatten();
    let cells: usize = hashes.iter().map(|h| 1usize << h.out_len()).product();
    let uniform = 1.0 / cells as f64;
    let target: Vec<f64> = (0..cells)
        .flat_map(|_| p_z.pmf().iter().map(move |&q| q * uniform))
        .collect();
    Ok(l1(hashed.pmf(), &target))
}

/// Average hashed distance over `samples` random Toeplitz tuples against the
/// leftover-hash bound with reference `q_Z` (the side marginal when `None`).
pub fn lhl_bound_check(
    joint: &JointDist,
    hash_lens: &[usize],
    samples: usize,
    reference: Option<&Dist>,
    seeds: &SeedTree,
) -> Result<LhlCheck> {
    let (in_lens, _) = split_axes(joint, hash_lens)?;
    if samples == 0 {
        return Err(Error::Samples { got: 0, needed: 1 });
    }
    let side_axes: Vec<usize> = (hash_lens.len()..joint.rank()).collect();
    let p_z = joint.marginal(&side_axes)?.flatten();
    let (bound, min_entropies) = lhl_bound(joint, hash_lens, reference.unwrap_or(&p_z))?;
    let per_hash_tv = par::map_range(samples, |t| -> Result<f64> {
        let mut rng: SimRng = seeds.stream("lhl-hash", t as u64);
        let hashes: Vec<ToeplitzHash> = in_lens
            .iter()
            .zip(hash_lens)
            .map(|(&n, &r)| sample_hash(&mut rng, n, r))
            .collect::<Result<_>>()?;
        hashed_tv(joint, &hashes)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let mean_tv = per_hash_tv.iter().sum::<f64>() / samples as f64;
    let exceedances = per_hash_tv.iter().filter(|&&tv| tv > bound).count();
    Ok(LhlCheck {
        per_hash_tv,
        mean_tv,
        bound,
        min_entropies,
        exceedances,
        pass: mean_tv <= bound,
    })
}

/// Random joint of one `bits[l]`-bit block per user and `side` symbols of side
/// information; given `Z` the blocks mix a uniform law with a random one.
pub fn random_correlated_joint<R: Rng + ?Sized>(
    rng: &mut R,
    bits: &[usize],
    side: usize,
    uniform_weight: f64,
) -> Result<JointDist> {
    let sizes: Vec<usize> = bits.iter().map(|&b| 1usize << b).chain([side]).collect();
    let cells: usize = sizes[..bits.len()].iter().product();
    let q_z: Vec<f64> = (0..side).map(|_| rng.gen_range(0.2..1.0)).collect();
    let mut pmf = Vec::with_capacity(cells * side);
    let mut cond = vec![vec![0.0; cells]; side];
    for row in cond.iter_mut() {
        let w: Vec<f64> = (0..cells).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = w.iter().sum();
        for (c, x) in row.iter_mut().zip(w) {
            *c = uniform_weight / cells as f64 + (1.0 - uniform_weight) * x / total;
        }
    }
    for x in 0..cells {
        for z in 0..side {
            pmf.push(q_z[z] * cond[z][x]);
        }
    }
    JointDist::renormalized(
        sizes.iter().map(|&s| Alphabet::new(s)).collect::<Result<_>>()?,
        pmf,
    )
}
