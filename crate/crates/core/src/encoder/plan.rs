use serde::{Deserialize, Serialize};

use super::Scheme;
use crate::error::{Error, Result};
use crate::polar::log2_len;
use crate::probcore::{conditional_entropy, mutual_information, Dist, JointDist, MacChannel};
use crate::ratesplit::{split_joint, AXIS_U, AXIS_V, AXIS_X, AXIS_Z};

/// Finite-length slack `log2(|Y|^2 |X| + 3) sqrt((2/N)(3 + log2 N))` for two
/// binary users.
pub fn delta_two_user(n_len: usize) -> f64 {
    let n = n_len as f64;
    11f64.log2() * ((2.0 / n) * (3.0 + n.log2())).sqrt()
}

/// `log2(2^L + 3) sqrt((2/N)(L + log2 N))` for `L` binary users.
pub fn delta_multi(users: usize, n_len: usize) -> f64 {
    let n = n_len as f64;
    let l = users as f64;
    (l.exp2() + 3.0).log2() * ((2.0 / n) * (l + n.log2())).sqrt()
}

/// `ceil` that forgives floating-point noise just above an integer.
fn snap_ceil(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Entropic quantities of one coded stream `S` with conditioning set `C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamStats {
    pub name: String,
    /// `P(S = 1)`.
    pub p1: f64,
    /// `H(S)`.
    pub entropy: f64,
    /// `H(S | C)`.
    pub cond_entropy: f64,
    /// `I(S; C)`.
    pub info: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamPlan {
    pub stats: StreamStats,
    /// Recycled bits per block, `ceil(N (H(S|C) - eps/2))` within `[0, N]`.
    pub hash_len: usize,
    /// Fresh bits in block 1.
    pub fresh_first: usize,
    /// Fresh bits in every later block, `ceil(N (I(S;C) + eps))`.
    pub fresh_next: usize,
    /// The real-valued hash length fell outside `[0, N]`.
    pub hash_clamped: bool,
}

impl StreamPlan {
    /// Codec input width in recycling blocks: recycled bits then fresh bits.
    pub fn nominal_width(&self) -> usize {
        self.hash_len + self.fresh_next
    }

    /// Fresh bits over `k` blocks of length `N`, per channel use.
    pub fn rate(&self, n_len: usize, k: usize) -> f64 {
        (self.fresh_first + (k - 1) * self.fresh_next) as f64 / (k * n_len) as f64
    }
}

/// Length bookkeeping shared by every scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthParams {
    pub xi: f64,
    /// Replaces the finite-length slack when set (idealized lengths).
    pub delta_override: Option<f64>,
}

impl LengthParams {
    pub fn standard(xi: f64) -> Self {
        Self {
            xi,
            delta_override: None,
        }
    }

    pub fn idealized(xi: f64, delta: f64) -> Self {
        Self {
            xi,
            delta_override: Some(delta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthPlan {
    /// Block length `N`.
    pub n_len: usize,
    pub k: usize,
    pub xi: f64,
    pub delta: f64,
    /// `2 (delta + xi)`.
    pub eps: f64,
    pub idealized: bool,
    pub streams: Vec<StreamPlan>,
    /// Some hash length had to be clamped: the plan only makes sense as
    /// `N` grows.
    pub asymptotic_only: bool,
}

impl LengthPlan {
    pub fn stream(&self, name: &str) -> Option<&StreamPlan> {
        self.streams.iter().find(|s| s.stats.name == name)
    }
}

/// Per-stream statistics for a scheme, in stream order.
pub fn stream_stats(ch: &MacChannel, inputs: &[Dist], scheme: &Scheme) -> Result<Vec<StreamStats>> {
    let stat = |j: &JointDist, name: &str, axis: usize, given: &[usize]| -> Result<StreamStats> {
        let marg = j.marginal(&[axis])?;
        Ok(StreamStats {
            name: name.to_string(),
            p1: marg.pmf()[1],
            entropy: j.entropy_of(&[axis])?,
            cond_entropy: conditional_entropy(j, &[axis], given)?,
            info: mutual_information(j, &[axis], given, &[])?,
        })
    };
    match scheme {
        Scheme::Case1 { split } => {
            check_users(ch, inputs, 2)?;
            let q = inputs[1].prob(1);
            let law_gap = ((1.0 - split.a) * (1.0 - split.b) - (1.0 - q)).abs();
            if law_gap > 1e-9 {
                return Err(Error::Range(format!(
                    "split (a = {}, b = {}) does not reproduce P(Y = 1) = {q}",
                    split.a, split.b
                )));
            }
            let j = split_joint(ch, &inputs[0], split.a, split.b)?;
            Ok(vec![
                stat(&j, "X", AXIS_X, &[AXIS_U, AXIS_Z])?,
                stat(&j, "U", AXIS_U, &[AXIS_Z])?,
                stat(&j, "V", AXIS_V, &[AXIS_U, AXIS_Z, AXIS_X])?,
            ])
        }
        Scheme::Case2 => {
            check_users(ch, inputs, 2)?;
            let j = ch.joint(inputs)?;
            Ok(vec![stat(&j, "X", 0, &[2])?, stat(&j, "Y", 1, &[2, 0])?])
        }
        Scheme::Multi { order } => {
            let users = ch.num_inputs();
            check_users(ch, inputs, users)?;
            check_order(order, users)?;
            let j = ch.joint(inputs)?;
            let mut stats = vec![None; users];
            for (pos, &user) in order.iter().enumerate() {
                let mut given = vec![users];
                given.extend_from_slice(&order[..pos]);
                stats[user] = Some(stat(&j, &format!("X{}", user + 1), user, &given)?);
            }
            Ok(stats.into_iter().map(|s| s.expect("order is a permutation")).collect())
        }
    }
}

fn check_users(ch: &MacChannel, inputs: &[Dist], users: usize) -> Result<()> {
    if ch.num_inputs() != users || !ch.is_binary_input() {
        return Err(Error::Channel(format!(
            "scheme needs {users} binary inputs, channel has {} inputs",
            ch.num_inputs()
        )));
    }
    if inputs.len() != users || inputs.iter().any(|d| d.len() != 2) {
        return Err(Error::Shape(format!("expected {users} binary input distributions")));
    }
    Ok(())
}

pub(crate) fn check_order(order: &[usize], users: usize) -> Result<()> {
    let mut seen = vec![false; users];
    if order.len() != users {
        return Err(Error::Range(format!("order has {} entries for {users} users", order.len())));
    }
    for &u in order {
        if u >= users || seen[u] {
            return Err(Error::Range(format!("order {order:?} is not a permutation of 0..{users}")));
        }
        seen[u] = true;
    }
    Ok(())
}

pub fn make_plan(
    ch: &MacChannel,
    inputs: &[Dist],
    scheme: &Scheme,
    n_len: usize,
    k: usize,
    lengths: LengthParams,
) -> Result<LengthPlan> {
    let stats = stream_stats(ch, inputs, scheme)?;
    plan_from_stats(stats, scheme, n_len, k, lengths)
}

pub(crate) fn plan_from_stats(
    stats: Vec<StreamStats>,
    scheme: &Scheme,
    n_len: usize,
    k: usize,
    lengths: LengthParams,
) -> Result<LengthPlan> {
    log2_len(n_len)?;
    if k == 0 {
        return Err(Error::Range("k must be at least 1".into()));
    }
    let LengthParams { xi, delta_override } = lengths;
    if !(xi >= 0.0 && xi.is_finite()) || (delta_override.is_none() && xi <= 0.0) {
        return Err(Error::Range(format!("xi = {xi} must be positive")));
    }
    let delta = match delta_override {
        Some(d) if d >= 0.0 && d.is_finite() => d,
        Some(d) => return Err(Error::Range(format!("delta override {d} must be non-negative"))),
        None => match scheme {
            Scheme::Multi { order } => delta_multi(order.len(), n_len),
            _ => delta_two_user(n_len),
        },
    };
    let eps = 2.0 * (delta + xi);
    let n = n_len as f64;
    let mut asymptotic_only = false;
    let streams = stats
        .into_iter()
        .map(|stats| {
            let raw = n * (stats.cond_entropy - eps / 2.0);
            let hash_clamped = raw < -1e-9 || raw > n + 1e-9;
            if hash_clamped {
                log::warn!(
                    "stream {}: hash length {raw:.3} clamped to [0, {n_len}]; plan is asymptotic only",
                    stats.name
                );
            }
            asymptotic_only |= hash_clamped;
            let hash_len = snap_ceil(raw).min(n_len);
            let fresh_next = snap_ceil(n * (stats.info + eps));
            let fresh_first = snap_ceil(n * (stats.entropy + eps)).max(hash_len + fresh_next);
            StreamPlan {
                stats,
                hash_len,
                fresh_first,
                fresh_next,
                hash_clamped,
            }
        })
        .collect();
    Ok(LengthPlan {
        n_len,
        k,
        xi,
        delta,
        eps,
        idealized: delta_override.is_some(),
        streams,
        asymptotic_only,
    })
}

/// Rates per stream and per transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AchievedRates {
    /// `(|fresh_1| + (k-1)|fresh_i|) / (kN)` per stream.
    pub streams: Vec<f64>,
    /// Per stream `I(S; C) + eps`, the value as `k` grows.
    pub stream_limits: Vec<f64>,
    /// Per transmitter (for the split scheme, `R_2 = R_U + R_V`).
    pub users: Vec<f64>,
    pub user_limits: Vec<f64>,
}

pub fn achieved_rates(plan: &LengthPlan, scheme: &Scheme) -> AchievedRates {
    let streams: Vec<f64> = plan.streams.iter().map(|s| s.rate(plan.n_len, plan.k)).collect();
    let stream_limits: Vec<f64> = plan.streams.iter().map(|s| s.stats.info + plan.eps).collect();
    let to_users = |v: &[f64]| match scheme {
        Scheme::Case1 { .. } => vec![v[0], v[1] + v[2]],
        _ => v.to_vec(),
    };
    AchievedRates {
        users: to_users(&streams),
        user_limits: to_users(&stream_limits),
        streams,
        stream_limits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::channels;
    use crate::ratesplit::solve_eps;

    #[test]
    fn slack_formula() {
        let d = delta_two_user(1024);
        assert!((d - 0.5512).abs() < 5e-5, "{d}");
        assert!((2.0 * (d + 0.05) - 1.2024).abs() < 1e-4);
        assert!((delta_multi(2, 1024) - 7f64.log2() * ((2.0 / 1024.0) * 12.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn adder_split_plan() {
        let ch = channels::adder(2);
        let u = Dist::uniform(2).unwrap();
        let split = solve_eps(&ch, &u, 0.5, 0.75).unwrap();
        let scheme = Scheme::Case1 { split };
        let plan = make_plan(&ch, &[u.clone(), u.clone()], &scheme, 1024, 20, LengthParams::standard(0.05)).unwrap();
        assert!(plan.asymptotic_only);
        let ideal = make_plan(&ch, &[u.clone(), u], &scheme, 16, 3, LengthParams::idealized(0.0, 0.0)).unwrap();
        assert_eq!(ideal.eps, 0.0);
        assert!(!ideal.asymptotic_only);
        let x = ideal.stream("X").unwrap();
        // I(X; UZ) + H(X | UZ) = H(X) = 1, each ceiling adds at most one bit
        assert!((16..=17).contains(&x.nominal_width()));
        assert!(x.fresh_first >= x.nominal_width());
    }

    #[test]
    fn single_block_plan() {
        let ch = channels::adder(2);
        let u = Dist::uniform(2).unwrap();
        let plan = make_plan(&ch, &[u.clone(), u], &Scheme::Case2, 8, 1, LengthParams::idealized(0.0, 0.0)).unwrap();
        let rates = achieved_rates(&plan, &Scheme::Case2);
        assert_eq!(rates.streams[0], plan.streams[0].fresh_first as f64 / 8.0);
        assert!(make_plan(&channels::adder(2), &vec![Dist::uniform(2).unwrap(); 2], &Scheme::Case2, 12, 1, LengthParams::standard(0.1)).is_err());
    }
}
