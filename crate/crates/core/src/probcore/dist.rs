use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on total mass when a distribution is constructed from user data.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Looser tolerance for tables produced by mass-preserving operations on
/// large supports, where summation error accumulates.
const DERIVED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Alphabet("size must be at least 1".into()));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Alphabet("size must be at least 1".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::Alphabet(format!("duplicate label {label:?}")));
            }
        }
        Ok(Self {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn binary() -> Self {
        Self {
            size: 2,
            labels: None,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

fn check_entries(pmf: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::Distribution(format!("entry {i} is {p}")));
        }
        total += p;
    }
    Ok(total)
}

/// A probability mass function over one finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dist {
    alphabet: Alphabet,
    pmf: Vec<f64>,
}

impl Dist {
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        let alphabet = Alphabet::new(pmf.len())?;
        Self::with_alphabet(alphabet, pmf)
    }

    pub fn with_alphabet(alphabet: Alphabet, pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() != alphabet.size() {
            return Err(Error::Shape(format!(
                "pmf has {} entries for an alphabet of size {}",
                pmf.len(),
                alphabet.size()
            )));
        }
        let total = check_entries(&pmf)?;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Distribution(format!("total mass {total} is not 1")));
        }
        Ok(Self { alphabet, pmf })
    }

    /// Rescale non-negative weights to unit mass.
    pub fn renormalized(weights: Vec<f64>) -> Result<Self> {
        let total = check_entries(&weights)?;
        if total <= 0.0 {
            return Err(Error::Distribution("zero total mass".into()));
        }
        let alphabet = Alphabet::new(weights.len())?;
        let pmf = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { alphabet, pmf })
    }

    pub fn bernoulli(p1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::Range(format!("Bernoulli parameter {p1} not in [0, 1]")));
        }
        Ok(Self {
            alphabet: Alphabet::binary(),
            pmf: vec![1.0 - p1, p1],
        })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        let alphabet = Alphabet::new(size)?;
        Ok(Self {
            alphabet,
            pmf: vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(size: usize, at: usize) -> Result<Self> {
        let alphabet = Alphabet::new(size)?;
        if at >= size {
            return Err(Error::Range(format!("symbol {at} outside alphabet of size {size}")));
        }
        let mut pmf = vec![0.0; size];
        pmf[at] = 1.0;
        Ok(Self { alphabet, pmf })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.pmf[symbol]
    }

    pub fn to_joint(&self) -> JointDist {
        JointDist {
            axes: vec![self.alphabet.clone()],
            pmf: self.pmf.clone(),
        }
    }
}

/// A dense probability tensor over a product of alphabets. Entries are
/// stored row-major: the first axis varies slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDist {
    axes: Vec<Alphabet>,
    pmf: Vec<f64>,
}

impl JointDist {
    pub fn new(axes: Vec<Alphabet>, pmf: Vec<f64>) -> Result<Self> {
        Self::checked(axes, pmf, NORMALIZATION_TOL)
    }

    /// Build from the output of a mass-preserving computation.
    pub(crate) fn derived(axes: Vec<Alphabet>, pmf: Vec<f64>) -> Result<Self> {
        Self::checked(axes, pmf, DERIVED_TOL)
    }

    fn checked(axes: Vec<Alphabet>, pmf: Vec<f64>, tol: f64) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Shape("a joint distribution needs at least one axis".into()));
        }
        let cells: usize = axes.iter().map(Alphabet::size).product();
        if cells != pmf.len() {
            return Err(Error::Shape(format!(
                "tensor has {} entries, axes require {cells}",
                pmf.len()
            )));
        }
        let total = check_entries(&pmf)?;
        if (total - 1.0).abs() > tol {
            return Err(Error::Distribution(format!("total mass {total} is not 1")));
        }
        Ok(Self { axes, pmf })
    }

    pub fn from_sizes(sizes: &[usize], pmf: Vec<f64>) -> Result<Self> {
        let axes = sizes
            .iter()
            .map(|&s| Alphabet::new(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes, pmf)
    }

    /// Product distribution of independent marginals, in the given order.
    pub fn product(dists: &[Dist]) -> Result<Self> {
        if dists.is_empty() {
            return Err(Error::Shape("empty product".into()));
        }
        let mut pmf = vec![1.0];
        for d in dists {
            let mut next = Vec::with_capacity(pmf.len() * d.len());
            for &p in &pmf {
                for &q in d.pmf() {
                    next.push(p * q);
                }
            }
            pmf = next;
        }
        Self::derived(dists.iter().map(|d| d.alphabet().clone()).collect(), pmf)
    }

    /// Renormalize arbitrary non-negative weights into a joint.
    pub fn renormalized(axes: Vec<Alphabet>, weights: Vec<f64>) -> Result<Self> {
        let total = check_entries(&weights)?;
        if total <= 0.0 {
            return Err(Error::Distribution("zero total mass".into()));
        }
        Self::derived(axes, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Alphabet::size).collect()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn strides(&self) -> Vec<usize> {
        let shape = self.shape();
        let mut strides = vec![1; shape.len()];
        for i in (0..shape.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        strides
    }

    pub fn flat_index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(self.strides())
            .map(|(c, s)| c * s)
            .sum()
    }

    pub fn coords(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; shape.len()];
        for i in (0..shape.len()).rev() {
            out[i] = flat % shape[i];
            flat /= shape[i];
        }
        out
    }

    pub fn prob(&self, coords: &[usize]) -> f64 {
        self.pmf[self.flat_index(coords)]
    }

    pub(crate) fn check_axes(&self, axes: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.rank()];
        for &a in axes {
            if a >= self.rank() {
                return Err(Error::Axes(format!("axis {a} out of range for rank {}", self.rank())));
            }
            if seen[a] {
                return Err(Error::Axes(format!("axis {a} repeated")));
            }
            seen[a] = true;
        }
        Ok(())
    }

    /// Marginal over `keep`, with axes in the order given.
    pub fn marginal(&self, keep: &[usize]) -> Result<JointDist> {
        self.check_axes(keep)?;
        if keep.is_empty() {
            return Err(Error::Axes("marginal over no axes".into()));
        }
        let shape = self.shape();
        let out_sizes: Vec<usize> = keep.iter().map(|&a| shape[a]).collect();
        let mut out_strides = vec![1; keep.len()];
        for i in (0..keep.len().saturating_sub(1)).rev() {
            out_strides[i] = out_strides[i + 1] * out_sizes[i + 1];
        }
        // Per-axis contribution of each source axis to the output index.
        let mut contrib = vec![0usize; self.rank()];
        for (pos, &a) in keep.iter().enumerate() {
            contrib[a] = out_strides[pos];
        }
        let mut out = vec![0.0; out_sizes.iter().product()];
        let mut coords = vec![0usize; self.rank()];
        let mut target = 0usize;
        for &p in &self.pmf {
            out[target] += p;
            // odometer increment, last axis fastest
            for ax in (0..self.rank()).rev() {
                coords[ax] += 1;
                target += contrib[ax];
                if coords[ax] < shape[ax] {
                    break;
                }
                target -= contrib[ax] * coords[ax];
                coords[ax] = 0;
            }
        }
        let axes = keep.iter().map(|&a| self.axes[a].clone()).collect();
        Ok(JointDist { axes, pmf: out })
    }

    /// Entropy in bits of the marginal on `axes` (0 for the empty set).
    pub fn entropy_of(&self, axes: &[usize]) -> Result<f64> {
        if axes.is_empty() {
            self.check_axes(axes)?;
            return Ok(0.0);
        }
        let m = self.marginal(axes)?;
        Ok(entropy_of_pmf(&m.pmf))
    }

    /// Collapse to a one-axis distribution by flattening all axes.
    pub fn flatten(&self) -> Dist {
        let size = self.pmf.len();
        Dist::with_alphabet(
            Alphabet::new(size).expect("non-empty tensor"),
            self.pmf.clone(),
        )
        .unwrap_or_else(|_| {
            // derived tables may sit just outside the strict tolerance
            let total: f64 = self.pmf.iter().sum();
            Dist::with_alphabet(
                Alphabet::new(size).expect("non-empty tensor"),
                self.pmf.iter().map(|p| p / total).collect(),
            )
            .expect("renormalized table")
        })
    }

    /// Reorder axes: output axis `i` is input axis `order[i]`.
    pub fn permute(&self, order: &[usize]) -> Result<JointDist> {
        if order.len() != self.rank() {
            return Err(Error::Axes("permutation must list every axis".into()));
        }
        self.marginal(order)
    }
}

pub(crate) fn entropy_of_pmf(pmf: &[f64]) -> f64 {
    let h: f64 = pmf
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_invariants() {
        assert!(Alphabet::new(0).is_err());
        assert!(Alphabet::with_labels(vec!["a".into(), "a".into()]).is_err());
        let a = Alphabet::with_labels(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(a.size(), 3);
    }

    #[test]
    fn dist_validation() {
        assert!(Dist::new(vec![0.5, 0.6]).is_err());
        assert!(Dist::new(vec![-0.1, 1.1]).is_err());
        assert!(Dist::new(vec![0.25, 0.75]).is_ok());
        let d = Dist::renormalized(vec![1.0, 3.0]).unwrap();
        assert_eq!(d.pmf(), &[0.25, 0.75]);
        assert!(Dist::bernoulli(1.5).is_err());
    }

    #[test]
    fn marginal_and_permute() {
        // p(a, b) with a in {0,1}, b in {0,1,2}
        let j = JointDist::from_sizes(&[2, 3], vec![0.1, 0.2, 0.3, 0.05, 0.15, 0.2]).unwrap();
        let a = j.marginal(&[0]).unwrap();
        assert!((a.pmf()[0] - 0.6).abs() < 1e-15);
        let b = j.marginal(&[1]).unwrap();
        assert!((b.pmf()[2] - 0.5).abs() < 1e-15);
        let t = j.permute(&[1, 0]).unwrap();
        assert_eq!(t.shape(), vec![3, 2]);
        assert_eq!(t.prob(&[2, 1]), j.prob(&[1, 2]));
        assert!(j.marginal(&[0, 0]).is_err());
        assert!(j.marginal(&[2]).is_err());
    }

    #[test]
    fn coords_roundtrip() {
        let j = JointDist::product(&[
            Dist::uniform(2).unwrap(),
            Dist::uniform(3).unwrap(),
            Dist::uniform(4).unwrap(),
        ])
        .unwrap();
        for flat in 0..j.len() {
            assert_eq!(j.flat_index(&j.coords(flat)), flat);
        }
    }
}
