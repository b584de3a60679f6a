//! Rate splitting of the second transmitter into two virtual users.
//!
//! `Y = max(U, V)` with independent `U ~ Bern(a)`, `V ~ Bern(b)` and
//! `a = 1 - (1-q)^eps`, `b = 1 - (1-q)^(1-eps)`, so `(1-a)(1-b) = 1-q` for
//! every `eps`. Sweeping `eps` from 0 to 1 moves the first user's rate
//! `I(X; Z | U)` continuously from `I(X; Z)` to `I(X; Z | Y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probcore::{mutual_information, Alphabet, Dist, JointDist, MacChannel};

/// Axis order of the split joint.
pub const AXIS_U: usize = 0;
pub const AXIS_V: usize = 1;
pub const AXIS_X: usize = 2;
pub const AXIS_Y: usize = 3;
pub const AXIS_Z: usize = 4;

const SOLVE_TOL: f64 = 1e-6;
const ENDPOINT_TOL: f64 = 1e-9;
const GRID: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPoint {
    pub eps: f64,
    /// `P(U = 1)`.
    pub a: f64,
    /// `P(V = 1)`.
    pub b: f64,
    pub r1: f64,
    pub r_u: f64,
    pub r_v: f64,
}

impl SplitPoint {
    pub fn p_u(&self) -> Dist {
        Dist::new(vec![1.0 - self.a, self.a]).expect("a is a probability")
    }

    pub fn p_v(&self) -> Dist {
        Dist::new(vec![1.0 - self.b, self.b]).expect("b is a probability")
    }

    pub fn r2(&self) -> f64 {
        self.r_u + self.r_v
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Range(format!("{name} = {x} must lie in [0, 1]")));
    }
    Ok(())
}

/// `(P(U=1), P(V=1))` for the split of `Y ~ Bern(q)` at `eps`.
pub fn split_params(q: f64, eps: f64) -> Result<(f64, f64)> {
    check_unit("q", q)?;
    check_unit("eps", eps)?;
    if q == 1.0 {
        log::warn!("splitting a deterministic Y = 1: the split jumps at eps = 0 and eps = 1");
        return Ok((f64::from(u8::from(eps > 0.0)), f64::from(u8::from(eps < 1.0))));
    }
    let keep = 1.0 - q;
    Ok((1.0 - keep.powf(eps), 1.0 - keep.powf(1.0 - eps)))
}

pub fn split_dists(q: f64, eps: f64) -> Result<(Dist, Dist)> {
    let (a, b) = split_params(q, eps)?;
    Ok((Dist::new(vec![1.0 - a, a])?, Dist::new(vec![1.0 - b, b])?))
}

fn check_two_user(ch: &MacChannel, p_x: &Dist) -> Result<()> {
    if ch.num_inputs() != 2 || !ch.is_binary_input() {
        return Err(Error::Channel("rate splitting needs a two-user binary-input channel".into()));
    }
    if p_x.len() != 2 {
        return Err(Error::Shape("p_x must be binary".into()));
    }
    Ok(())
}

/// Joint law of `(U, V, X, Y, Z)` with `Y = max(U, V)`.
pub fn split_joint(ch: &MacChannel, p_x: &Dist, a: f64, b: f64) -> Result<JointDist> {
    check_two_user(ch, p_x)?;
    let zs = ch.output_size();
    let mut pmf = vec![0.0; 16 * zs];
    let pu = [1.0 - a, a];
    let pv = [1.0 - b, b];
    for u in 0..2 {
        for v in 0..2 {
            let y = u.max(v);
            for x in 0..2 {
                let w = pu[u] * pv[v] * p_x.prob(x);
                let row = ch.row(2 * x + y);
                let base = (((u * 2 + v) * 2 + x) * 2 + y) * zs;
                for (z, &q) in row.iter().enumerate() {
                    pmf[base + z] = w * q;
                }
            }
        }
    }
    let mut axes = vec![Alphabet::binary(); 4];
    axes.push(ch.output_alphabet().clone());
    JointDist::renormalized(axes, pmf)
}

pub fn split_rates(ch: &MacChannel, p_x: &Dist, q: f64, eps: f64) -> Result<SplitPoint> {
    let (a, b) = split_params(q, eps)?;
    let j = split_joint(ch, p_x, a, b)?;
    // a constant U or V carries no information; skip the float residue
    let r_u = if a == 0.0 {
        0.0
    } else {
        mutual_information(&j, &[AXIS_U], &[AXIS_Z], &[])?
    };
    let r_v = if b == 0.0 {
        0.0
    } else {
        mutual_information(&j, &[AXIS_V], &[AXIS_Z], &[AXIS_U, AXIS_X])?
    };
    Ok(SplitPoint {
        eps,
        a,
        b,
        r1: mutual_information(&j, &[AXIS_X], &[AXIS_Z], &[AXIS_U])?,
        r_u,
        r_v,
    })
}

/// The interval `[I(X;Z), I(X;Z|Y)]` swept by the first user's rate.
pub fn r1_interval(ch: &MacChannel, p_x: &Dist, q: f64) -> Result<(f64, f64)> {
    Ok((split_rates(ch, p_x, q, 0.0)?.r1, split_rates(ch, p_x, q, 1.0)?.r1))
}

/// Find a split whose first-user rate is within 1e-6 bits of `target_r1`.
///
/// The rate is only known to be continuous in `eps`, so a grid scan looks
/// for a sign change and bisection refines it.
pub fn solve_eps(ch: &MacChannel, p_x: &Dist, q: f64, target_r1: f64) -> Result<SplitPoint> {
    let lo_pt = split_rates(ch, p_x, q, 0.0)?;
    let hi_pt = split_rates(ch, p_x, q, 1.0)?;
    let (lo, hi) = (lo_pt.r1, hi_pt.r1);
    if !target_r1.is_finite() || target_r1 < lo - ENDPOINT_TOL || target_r1 > hi + ENDPOINT_TOL {
        return Err(Error::InfeasibleTarget {
            target: target_r1,
            lo,
            hi,
        });
    }
    if (target_r1 - lo).abs() <= ENDPOINT_TOL {
        return Ok(lo_pt);
    }
    if (target_r1 - hi).abs() <= ENDPOINT_TOL {
        return Ok(hi_pt);
    }
    let f = |eps: f64| -> Result<(f64, SplitPoint)> {
        let pt = split_rates(ch, p_x, q, eps)?;
        Ok((pt.r1 - target_r1, pt))
    };
    let mut prev = (0.0, lo - target_r1);
    for step in 1..=GRID {
        let eps = step as f64 / GRID as f64;
        let (g, pt) = f(eps)?;
        if g.abs() <= SOLVE_TOL {
            return Ok(pt);
        }
        if (g > 0.0) != (prev.1 > 0.0) {
            return bisect(&f, prev.0, eps, prev.1);
        }
        prev = (eps, g);
    }
    Err(Error::InfeasibleTarget {
        target: target_r1,
        lo,
        hi,
    })
}

fn bisect(
    f: &dyn Fn(f64) -> Result<(f64, SplitPoint)>,
    mut lo: f64,
    mut hi: f64,
    g_lo: f64,
) -> Result<SplitPoint> {
    let lo_positive = g_lo > 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        let (g, pt) = f(mid)?;
        if g.abs() <= SOLVE_TOL || hi - lo < 1e-15 {
            return Ok(pt);
        }
        if (g > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
