//! Finite-length reference curves for the block-Markov analysis.
//!
//! Every curve takes `delta`, the variational distance achieved by one
//! source-resolvability codec at length `N`. At desk-scale `N` most of them
//! exceed 2, the largest possible variational distance, and are flagged
//! vacuous rather than dropped.

use serde::{Deserialize, Serialize};

/// Largest value of the unnormalized variational distance.
pub const VD_MAX: f64 = 2.0;

/// Which family of curves applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    /// Two transmitters (three coded streams with rate splitting).
    TwoUser,
    /// `L` transmitters coded in a fixed order.
    Multi { users: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub name: String,
    /// Block index `i` (1-based), absent for block-independent quantities.
    pub block: Option<usize>,
    pub value: f64,
    pub vacuous: bool,
}

impl CurvePoint {
    fn new(name: &str, block: Option<usize>, value: f64) -> Self {
        Self {
            name: name.to_string(),
            block,
            value,
            vacuous: !(value < VD_MAX),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCurves {
    pub family: BoundFamily,
    pub n_len: usize,
    pub k: usize,
    pub xi: f64,
    pub delta: f64,
    pub points: Vec<CurvePoint>,
}

impl ReferenceCurves {
    pub fn get(&self, name: &str, block: Option<usize>) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.name == name && p.block == block)
            .map(|p| p.value)
    }

    pub fn all_vacuous(&self) -> bool {
        self.points.iter().all(|p| p.vacuous)
    }
}

/// Slack of the hashed randomness against uniform: `2/N + c 2^{-N xi / 2}`
/// with `c = sqrt 7` for two users and `2^{L/2}` otherwise.
pub fn delta_zero(family: BoundFamily, n_len: usize, xi: f64) -> f64 {
    let n = n_len as f64;
    let c = match family {
        BoundFamily::TwoUser => 7f64.sqrt(),
        BoundFamily::Multi { users } => (users as f64 / 2.0).exp2(),
    };
    2.0 / n + c * (-n * xi / 2.0).exp2()
}

/// Per-block distance to the target joint after `i` blocks.
pub fn delta_block(family: BoundFamily, i: usize, delta: f64, d0: f64) -> f64 {
    let m = match family {
        BoundFamily::TwoUser => 3.0,
        BoundFamily::Multi { users } => users as f64,
    };
    let i_f = i as f64;
    // (m^i - 1) / (m - 1), which is i when m = 1
    let geometric = if m == 1.0 {
        i_f
    } else {
        (m.powf(i_f) - 1.0) / (m - 1.0)
    };
    m * (delta + d0) * geometric + m.powf(i_f + 1.0) * delta
}

/// Dependence between recycled bits of block `i` and the previous output.
pub fn delta_recycled(family: BoundFamily, i: usize, delta: f64, d0: f64) -> f64 {
    4.0 * delta_block(family, i - 1, delta, d0) + 2.0 * d0
}

/// Dependence between recycled bits of block `i` and all past outputs.
pub fn delta_recycled_past(family: BoundFamily, i: usize, delta: f64, d0: f64) -> f64 {
    ((i as f64 - 1.0).exp2() - 1.0) * delta_recycled(family, i, delta, d0)
}

/// Bound on the joint distance over all `k` blocks.
pub fn delta_joint(family: BoundFamily, k: usize, delta: f64, d0: f64) -> f64 {
    (k as f64 - 1.0) * delta_recycled_past(family, k, delta, d0) + k as f64 * delta_block(family, k, delta, d0)
}

pub fn reference_curves(family: BoundFamily, n_len: usize, k: usize, xi: f64, delta: f64) -> ReferenceCurves {
    let d0 = delta_zero(family, n_len, xi);
    let mut points = vec![CurvePoint::new("delta_codec", None, delta), CurvePoint::new("delta_zero", None, d0)];
    for i in 1..=k {
        points.push(CurvePoint::new("delta_block", Some(i), delta_block(family, i, delta, d0)));
        if i >= 2 {
            points.push(CurvePoint::new("delta_recycled", Some(i), delta_recycled(family, i, delta, d0)));
            points.push(CurvePoint::new(
                "delta_recycled_past",
                Some(i),
                delta_recycled_past(family, i, delta, d0),
            ));
        }
    }
    points.push(CurvePoint::new("delta_joint", None, delta_joint(family, k, delta, d0)));
    ReferenceCurves {
        family,
        n_len,
        k,
        xi,
        delta,
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: BoundFamily = BoundFamily::TwoUser;

    #[test]
    fn two_user_closed_forms() {
        let (delta, d0) = (0.01, 0.1);
        // i = 1: 1.5 * 0.11 * 2 + 9 * 0.01
        assert!((delta_block(TWO, 1, delta, d0) - 0.42).abs() < 1e-12);
        // i = 2: 1.5 * 0.11 * 8 + 27 * 0.01
        let d2 = 1.32 + 0.27;
        assert!((delta_block(TWO, 2, delta, d0) - d2).abs() < 1e-12);
        assert!((delta_recycled(TWO, 2, delta, d0) - (4.0 * 0.42 + 0.2)).abs() < 1e-12);
        assert_eq!(delta_recycled_past(TWO, 2, delta, d0), delta_recycled(TWO, 2, delta, d0));
        let d3r = 3.0 * (4.0 * d2 + 0.2);
        assert!((delta_recycled_past(TWO, 3, delta, d0) - d3r).abs() < 1e-12);
        let block3 = 1.5 * 0.11 * 26.0 + 81.0 * 0.01;
        assert!((delta_joint(TWO, 3, delta, d0) - (2.0 * d3r + 3.0 * block3)).abs() < 1e-12);
    }

    #[test]
    fn multi_with_three_users_matches_two_user_block_curve() {
        // the two-user family has three coded streams
        let multi = BoundFamily::Multi { users: 3 };
        for i in 1..5 {
            let a = delta_block(TWO, i, 0.02, 0.3);
            let b = delta_block(multi, i, 0.02, 0.3);
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn single_user_geometric_limit() {
        let one = BoundFamily::Multi { users: 1 };
        assert!((delta_block(one, 4, 0.01, 0.1) - (0.11 * 4.0 + 0.01)).abs() < 1e-12);
    }

    #[test]
    fn delta_zero_decays_with_n() {
        let a = delta_zero(TWO, 64, 0.1);
        let b = delta_zero(TWO, 1024, 0.1);
        assert!(b < a);
        assert!((delta_zero(TWO, 8, 0.0) - (0.25 + 7f64.sqrt())).abs() < 1e-12);
        let m = BoundFamily::Multi { users: 2 };
        assert!((delta_zero(m, 4, 0.5) - (0.5 + 2.0 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn desk_scale_curves_are_flagged() {
        let c = reference_curves(TWO, 16, 5, 0.05, 0.3);
        assert!(!c.all_vacuous());
        assert!(c.points.iter().filter(|p| p.block.is_some()).all(|p| p.vacuous));
        assert!(c.points.iter().find(|p| p.name == "delta_joint").unwrap().vacuous);
        let tiny = reference_curves(TWO, 1 << 20, 1, 0.05, 0.0);
        assert!(!tiny.points.iter().find(|p| p.name == "delta_block").unwrap().vacuous);
        assert_eq!(c.get("delta_recycled", Some(1)), None);
        assert!(c.get("delta_recycled", Some(2)).is_some());
    }
}
