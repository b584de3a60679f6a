//! Resolvability regions for fixed product inputs.
//!
//! For inputs `X_1..X_L` the region is `{R : R_S >= I(X_S; Z) for all S}`.
//! The set function `S -> I(X_S; Z)` is supermodular for independent inputs,
//! so the region is a contrapolymatroid whose vertices are the chain-rule
//! corner points, one per user ordering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probcore::{mutual_information, Dist, JointDist, MacChannel};

/// Tolerance separating strict supermodularity from equality.
pub const CASE_TOL: f64 = 1e-9;

pub const MAX_REGION_USERS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelCase {
    /// `I(XY;Z) > I(X;Z) + I(Y;Z)`: the dominant face is a segment.
    Case1,
    /// `I(XY;Z) = I(X;Z) + I(Y;Z)`: the dominant face is one point.
    Case2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// Users in the subset, increasing.
    pub users: Vec<usize>,
    /// `I(X_S; Z)`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerPoint {
    pub order: Vec<usize>,
    /// Rate of each user (indexed by user, not by position in `order`).
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub users: usize,
    pub constraints: Vec<Constraint>,
    pub corner_points: Vec<CornerPoint>,
    /// Largest `f(S) + f(T) - f(S ∪ T) - f(S ∩ T)` over subset pairs; at most
    /// rounding noise when the bound function is supermodular.
    pub supermodularity_gap: f64,
}

impl RegionSpec {
    pub fn bound(&self, users: &[usize]) -> Option<f64> {
        let mut key = users.to_vec();
        key.sort_unstable();
        self.constraints.iter().find(|c| c.users == key).map(|c| c.bound)
    }

    pub fn sum_rate(&self) -> f64 {
        self.bound(&(0..self.users).collect::<Vec<_>>()).unwrap_or(0.0)
    }

    /// Whether `rates` satisfies every constraint within `tol`.
    pub fn contains(&self, rates: &[f64], tol: f64) -> bool {
        rates.len() == self.users
            && self
                .constraints
                .iter()
                .all(|c| c.users.iter().map(|&u| rates[u]).sum::<f64>() >= c.bound - tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoUserRegion {
    pub region: RegionSpec,
    pub case: ChannelCase,
    pub i_x_z: f64,
    pub i_y_z: f64,
    pub i_xy_z: f64,
    pub i_x_z_given_y: f64,
    pub i_y_z_given_x: f64,
    /// `I(XY;Z) - I(X;Z) - I(Y;Z)`.
    pub gap: f64,
}

impl TwoUserRegion {
    /// Range of `R_1` along the dominant face.
    pub fn dominant_face(&self) -> (f64, f64) {
        (self.i_x_z, self.i_x_z_given_y)
    }
}

fn mask_users(mask: usize, users: usize) -> Vec<usize> {
    (0..users).filter(|u| mask >> u & 1 == 1).collect()
}

fn subset_info(j: &JointDist, users: usize) -> Result<Vec<f64>> {
    let mut f = vec![0.0; 1 << users];
    for (mask, slot) in f.iter_mut().enumerate().skip(1) {
        *slot = mutual_information(j, &mask_users(mask, users), &[users], &[])?;
    }
    Ok(f)
}

/// `max f(S) + f(T) - f(S ∪ T) - f(S ∩ T)` over all pairs of subsets.
pub fn supermodularity_gap(f: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for s in 0..f.len() {
        for t in 0..f.len() {
            worst = worst.max(f[s] + f[t] - f[s | t] - f[s & t]);
        }
    }
    worst
}

fn permutations(users: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for u in 0..used.len() {
            if !used[u] {
                used[u] = true;
                prefix.push(u);
                go(prefix, used, out);
                prefix.pop();
                used[u] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; users], &mut out);
    out
}

fn region_from_joint(j: &JointDist, users: usize) -> Result<RegionSpec> {
    let f = subset_info(j, users)?;
    let constraints = (1..1usize << users)
        .map(|mask| Constraint {
            users: mask_users(mask, users),
            bound: f[mask],
        })
        .collect();
    let corner_points = permutations(users)
        .into_iter()
        .map(|order| {
            let mut rates = vec![0.0; users];
            let mut mask = 0;
            for &u in &order {
                // I(X_u; Z | X_before) = f(before + u) - f(before)
                rates[u] = (f[mask | 1 << u] - f[mask]).max(0.0);
                mask |= 1 << u;
            }
            CornerPoint { order, rates }
        })
        .collect();
    Ok(RegionSpec {
        users,
        constraints,
        corner_points,
        supermodularity_gap: supermodularity_gap(&f),
    })
}

pub fn region_multi(ch: &MacChannel, inputs: &[Dist]) -> Result<RegionSpec> {
    let users = ch.num_inputs();
    if users > MAX_REGION_USERS {
        return Err(Error::Range(format!(
            "region for {users} users requested, at most {MAX_REGION_USERS} supported"
        )));
    }
    region_from_joint(&ch.joint(inputs)?, users)
}

pub fn region_2user(ch: &MacChannel, p_x: &Dist, p_y: &Dist) -> Result<TwoUserRegion> {
    if ch.num_inputs() != 2 {
        return Err(Error::Channel(format!(
            "two-user region on a channel with {} inputs",
            ch.num_inputs()
        )));
    }
    let j = ch.joint(&[p_x.clone(), p_y.clone()])?;
    let region = region_from_joint(&j, 2)?;
    let i_x_z = mutual_information(&j, &[0], &[2], &[])?;
    let i_y_z = mutual_information(&j, &[1], &[2], &[])?;
    let i_xy_z = mutual_information(&j, &[0, 1], &[2], &[])?;
    let i_x_z_given_y = mutual_information(&j, &[0], &[2], &[1])?;
    let i_y_z_given_x = mutual_information(&j, &[1], &[2], &[0])?;
    let gap = i_xy_z - i_x_z - i_y_z;
    let case = if gap > CASE_TOL {
        ChannelCase::Case1
    } else {
        ChannelCase::Case2
    };
    Ok(TwoUserRegion {
        region,
        case,
        i_x_z,
        i_y_z,
        i_xy_z,
        i_x_z_given_y,
        i_y_z_given_x,
        gap,
    })
}

pub fn classify_two_user(ch: &MacChannel, p_x: &Dist, p_y: &Dist) -> Result<(ChannelCase, f64)> {
    let r = region_2user(ch, p_x, p_y)?;
    Ok((r.case, r.gap))
}
