use rand::Rng;

use super::channel::MacChannel;
use super::dist::{entropy_of_pmf, Dist, JointDist};
use crate::error::{Error, Result};

/// Anything with a shape and a flat probability table.
pub trait Pmf {
    fn shape(&self) -> Vec<usize>;
    fn table(&self) -> &[f64];
}

impl Pmf for Dist {
    fn shape(&self) -> Vec<usize> {
        vec![self.len()]
    }
    fn table(&self) -> &[f64] {
        self.pmf()
    }
}

impl Pmf for JointDist {
    fn shape(&self) -> Vec<usize> {
        JointDist::shape(self)
    }
    fn table(&self) -> &[f64] {
        self.pmf()
    }
}

pub fn binary_entropy(p: f64) -> f64 {
    entropy_of_pmf(&[p, 1.0 - p])
}

pub fn entropy(d: &Dist) -> f64 {
    entropy_of_pmf(d.pmf())
}

fn disjoint(j: &JointDist, sets: &[&[usize]]) -> Result<Vec<usize>> {
    let all: Vec<usize> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    j.check_axes(&all)?;
    Ok(all)
}

/// `H(T | G) = H(T, G) - H(G)`, clamped at zero.
pub fn conditional_entropy(j: &JointDist, target: &[usize], given: &[usize]) -> Result<f64> {
    let both = disjoint(j, &[target, given])?;
    let h = j.entropy_of(&both)? - j.entropy_of(given)?;
    Ok(h.max(0.0))
}

/// `I(A; B | G) = H(A | G) - H(A | B, G)`, clipped to zero when the
/// floating-point result falls within 1e-12 below it.
pub fn mutual_information(
    j: &JointDist,
    a: &[usize],
    b: &[usize],
    given: &[usize],
) -> Result<f64> {
    disjoint(j, &[a, b, given])?;
    let ag: Vec<usize> = a.iter().chain(given).copied().collect();
    let bg: Vec<usize> = b.iter().chain(given).copied().collect();
    let abg: Vec<usize> = a.iter().chain(b).chain(given).copied().collect();
    let i = j.entropy_of(&ag)? + j.entropy_of(&bg)? - j.entropy_of(&abg)? - j.entropy_of(given)?;
    if i < -1e-12 {
        log::debug!("mutual information evaluated to {i}; clipping");
    }
    Ok(i.max(0.0))
}

/// `sum |p - q|` over a shared support.
pub fn variational_distance<P: Pmf + ?Sized, Q: Pmf + ?Sized>(p: &P, q: &Q) -> Result<f64> {
    if p.shape() != q.shape() {
        return Err(Error::Shape(format!(
            "cannot compare shapes {:?} and {:?}",
            p.shape(),
            q.shape()
        )));
    }
    Ok(l1(p.table(), q.table()))
}

pub(crate) fn l1(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Min-entropy of `w` relative to a reference law on its conditioning axes:
/// `-log2 max_{t, z in supp(ref)} w(t, z) / ref(z)`.
///
/// `cond_axes` selects the conditioning axes of `w`; `reference` is a law on
/// their flattened product (row-major in the order given). `w` may be any
/// non-negative table; its total mass is not required to be one.
pub fn min_entropy_conditional(w: &JointDist, cond_axes: &[usize], reference: &Dist) -> Result<f64> {
    w.check_axes(cond_axes)?;
    if cond_axes.is_empty() {
        let max = w.pmf().iter().cloned().fold(0.0, f64::max);
        return Ok(-max.log2());
    }
    let shape = w.shape();
    let cond_size: usize = cond_axes.iter().map(|&a| shape[a]).product();
    if cond_size != reference.len() {
        return Err(Error::Shape(format!(
            "reference law has {} symbols, conditioning axes span {cond_size}",
            reference.len()
        )));
    }
    let strides = w.strides();
    let cond_flat = |flat: usize| -> usize {
        let mut idx = 0;
        for &a in cond_axes {
            idx = idx * shape[a] + (flat / strides[a]) % shape[a];
        }
        idx
    };
    let mut max_ratio: f64 = 0.0;
    for (flat, &mass) in w.pmf().iter().enumerate() {
        if mass <= 0.0 {
            continue;
        }
        let z = cond_flat(flat);
        let r = reference.prob(z);
        if r <= 0.0 {
            return Err(Error::Support(format!(
                "conditioning symbol {z} has mass {mass} in w but none in the reference"
            )));
        }
        max_ratio = max_ratio.max(mass / r);
    }
    if max_ratio == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-max_ratio.log2())
}

/// Output law of the channel driven by independent inputs.
pub fn target_output_dist(ch: &MacChannel, inputs: &[Dist]) -> Result<Dist> {
    ch.check_inputs(inputs)?;
    let mut out = vec![0.0; ch.output_size()];
    for (row, weight) in ch.input_tuples_weighted(inputs) {
        if weight == 0.0 {
            continue;
        }
        for (z, &q) in ch.row(row).iter().enumerate() {
            out[z] += weight * q;
        }
    }
    let total: f64 = out.iter().sum();
    Dist::with_alphabet(
        ch.output_alphabet().clone(),
        out.into_iter().map(|p| p / total).collect(),
    )
}

/// Send `codewords` (one bit sequence per input) through the memoryless
/// channel; position `t` of the output depends only on position `t` of the
/// inputs.
pub fn transmit<R: Rng + ?Sized>(
    ch: &MacChannel,
    codewords: &[Vec<u8>],
    rng: &mut R,
) -> Result<Vec<usize>> {
    if codewords.len() != ch.num_inputs() {
        return Err(Error::Length {
            what: "codeword count",
            expected: ch.num_inputs(),
            got: codewords.len(),
        });
    }
    let n = codewords.first().map_or(0, Vec::len);
    for cw in codewords {
        if cw.len() != n {
            return Err(Error::Length {
                what: "codeword length",
                expected: n,
                got: cw.len(),
            });
        }
    }
    let mut symbols = vec![0usize; ch.num_inputs()];
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        for (s, cw) in symbols.iter_mut().zip(codewords) {
            *s = cw[t] as usize;
        }
        let row = ch.row_index(&symbols)?;
        out.push(ch.sample_row(row, rng));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::channels;
    use crate::rng::SeedTree;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn entropy_examples() {
        close(entropy(&Dist::bernoulli(0.5).unwrap()), 1.0, 1e-15);
        close(entropy(&Dist::point_mass(3, 1).unwrap()), 0.0, 0.0);
        let p: f64 = 0.3;
        let oracle = -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        close(oracle, 0.8812908992, 1e-10);
        close(entropy(&Dist::bernoulli(0.3).unwrap()), oracle, 1e-15);
    }

    /// Joint of (X, Y, Z) for independent uniform bits and a deterministic map.
    fn functional(f: impl Fn(usize, usize) -> usize, zsize: usize) -> JointDist {
        let mut pmf = vec![0.0; 4 * zsize];
        for x in 0..2 {
            for y in 0..2 {
                pmf[(x * 2 + y) * zsize + f(x, y)] += 0.25;
            }
        }
        JointDist::from_sizes(&[2, 2, zsize], pmf).unwrap()
    }

    #[test]
    fn conditional_entropy_examples() {
        let xor = functional(|x, y| x ^ y, 2);
        close(conditional_entropy(&xor, &[0], &[2]).unwrap(), 1.0, 1e-12);
        // independent axes
        close(
            conditional_entropy(&xor, &[0], &[1]).unwrap(),
            xor.entropy_of(&[0]).unwrap(),
            1e-12,
        );
        let copy = functional(|x, _| x, 2);
        close(conditional_entropy(&copy, &[0], &[2]).unwrap(), 0.0, 1e-12);
        assert!(conditional_entropy(&xor, &[0], &[0]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let adder = functional(|x, y| x + y, 3);
        close(mutual_information(&adder, &[0, 1], &[2], &[]).unwrap(), 1.5, 1e-12);
        close(mutual_information(&adder, &[0], &[2], &[]).unwrap(), 0.5, 1e-12);
        close(mutual_information(&adder, &[0], &[1], &[]).unwrap(), 0.0, 1e-12);
        let xor = functional(|x, y| x ^ y, 2);
        close(mutual_information(&xor, &[0], &[2], &[]).unwrap(), 0.0, 1e-12);
        close(mutual_information(&xor, &[0, 1], &[2], &[]).unwrap(), 1.0, 1e-12);
        close(mutual_information(&xor, &[0], &[2], &[1]).unwrap(), 1.0, 1e-12);
        assert!(mutual_information(&xor, &[0], &[0], &[]).is_err());
        assert!(mutual_information(&xor, &[0], &[2], &[2]).is_err());
    }

    #[test]
    fn variational_distance_examples() {
        let p = Dist::bernoulli(0.5).unwrap();
        let q = Dist::bernoulli(0.3).unwrap();
        close(variational_distance(&p, &p).unwrap(), 0.0, 0.0);
        close(variational_distance(&p, &q).unwrap(), 0.4, 1e-15);
        let a = Dist::point_mass(3, 0).unwrap();
        let b = Dist::point_mass(3, 2).unwrap();
        close(variational_distance(&a, &b).unwrap(), 2.0, 0.0);
        assert!(variational_distance(&p, &a).is_err());
    }

    #[test]
    fn min_entropy_examples() {
        // uniform over {0,1}^3 x {z0}
        let w = JointDist::from_sizes(&[8, 1], vec![0.125; 8]).unwrap();
        close(
            min_entropy_conditional(&w, &[1], &Dist::point_mass(1, 0).unwrap()).unwrap(),
            3.0,
            1e-12,
        );
        // T uniform on two symbols, independent of Z
        let qz = Dist::new(vec![0.2, 0.8]).unwrap();
        let w = JointDist::product(&[Dist::uniform(2).unwrap(), qz.clone()]).unwrap();
        close(min_entropy_conditional(&w, &[1], &qz).unwrap(), 1.0, 1e-12);
        // Z = X xor noise(0.1), X uniform: brute-force ratio scan
        let eta = 0.1;
        let pmf = vec![0.5 * (1.0 - eta), 0.5 * eta, 0.5 * eta, 0.5 * (1.0 - eta)];
        let w = JointDist::from_sizes(&[2, 2], pmf.clone()).unwrap();
        let qz = Dist::uniform(2).unwrap();
        let oracle = -(pmf.iter().cloned().fold(0.0, f64::max) / 0.5).log2();
        close(min_entropy_conditional(&w, &[1], &qz).unwrap(), oracle, 1e-12);
        // support violation
        let bad = Dist::point_mass(2, 0).unwrap();
        assert!(min_entropy_conditional(&w, &[1], &bad).is_err());
    }

    #[test]
    fn min_entropy_of_product_is_unconditional() {
        let pt = Dist::new(vec![0.1, 0.6, 0.3]).unwrap();
        let qz = Dist::new(vec![0.25, 0.25, 0.5]).unwrap();
        let w = JointDist::product(&[pt, qz.clone()]).unwrap();
        close(min_entropy_conditional(&w, &[1], &qz).unwrap(), -(0.6f64).log2(), 1e-12);
    }

    #[test]
    fn target_output_examples() {
        let ch = channels::adder(2);
        let u = Dist::uniform(2).unwrap();
        let qz = target_output_dist(&ch, &[u.clone(), u.clone()]).unwrap();
        assert_eq!(qz.pmf(), &[0.25, 0.5, 0.25]);
        let id = channels::identity_binary();
        let p = Dist::bernoulli(0.3).unwrap();
        assert_eq!(target_output_dist(&id, &[p.clone()]).unwrap().pmf(), p.pmf());
        let ch = channels::parallel_bsc(0.1, 0.2);
        let one = Dist::point_mass(2, 1).unwrap();
        let zero = Dist::point_mass(2, 0).unwrap();
        let out = target_output_dist(&ch, &[one, zero]).unwrap();
        let row = ch.row(ch.row_index(&[1, 0]).unwrap());
        for (a, b) in out.pmf().iter().zip(row) {
            close(*a, *b, 1e-15);
        }
        assert!(target_output_dist(&ch, &[u]).is_err());
    }

    #[test]
    fn transmit_examples() {
        let mut rng = SeedTree::new(1).stream("t", 0);
        let ch = channels::adder(2);
        let out = transmit(&ch, &[vec![0, 0, 0, 0], vec![1, 1, 1, 1]], &mut rng).unwrap();
        assert_eq!(out, vec![1, 1, 1, 1]);
        let out = transmit(&ch, &[vec![], vec![]], &mut rng).unwrap();
        assert!(out.is_empty());
        let xor = channels::xor2();
        let out = transmit(&xor, &[vec![0, 1, 1], vec![0, 0, 1]], &mut rng).unwrap();
        assert_eq!(out, vec![0, 1, 0]);
        assert!(transmit(&ch, &[vec![0], vec![0, 1]], &mut rng).is_err());
    }
}
