//! Toeplitz hashing over GF(2).
//!
//! A Toeplitz matrix of shape `r x n` is fixed by its `n + r - 1` diagonals.
//! Drawing the diagonals uniformly gives a two-universal family: two distinct
//! inputs collide with probability exactly `2^-r`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polar::{bits_to_index, index_to_bits};
use crate::probcore::{Alphabet, JointDist};

/// Largest input table `hashed_joint_dist_exact` will walk.
pub const HASH_STATE_CAP: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzHash {
    in_len: usize,
    out_len: usize,
    /// Entry `(i, j)` of the matrix is `diagonal[i + in_len - 1 - j]`.
    diagonal: Vec<u8>,
}

impl ToeplitzHash {
    pub fn from_diagonal(in_len: usize, out_len: usize, diagonal: Vec<u8>) -> Result<Self> {
        if out_len > in_len {
            return Err(Error::Range(format!(
                "hash output length {out_len} exceeds input length {in_len}"
            )));
        }
        let expected = if out_len == 0 { 0 } else { in_len + out_len - 1 };
        if diagonal.len() != expected {
            return Err(Error::Length {
                what: "Toeplitz diagonal",
                expected,
                got: diagonal.len(),
            });
        }
        if diagonal.iter().any(|&b| b > 1) {
            return Err(Error::Range("diagonal entries must be bits".into()));
        }
        Ok(Self {
            in_len,
            out_len,
            diagonal,
        })
    }

    /// The `in_len x in_len` identity.
    pub fn identity(in_len: usize) -> Self {
        let mut diagonal = vec![0; (2 * in_len).saturating_sub(1)];
        if in_len > 0 {
            diagonal[in_len - 1] = 1;
        }
        Self {
            in_len,
            out_len: in_len,
            diagonal,
        }
    }

    pub fn in_len(&self) -> usize {
        self.in_len
    }

    pub fn out_len(&self) -> usize {
        self.out_len
    }

    pub fn diagonal(&self) -> &[u8] {
        &self.diagonal
    }

    pub fn entry(&self, i: usize, j: usize) -> u8 {
        self.diagonal[i + self.in_len - 1 - j]
    }

    pub fn apply(&self, x: &[u8]) -> Result<Vec<u8>> {
        if x.len() != self.in_len {
            return Err(Error::Length {
                what: "hash input",
                expected: self.in_len,
                got: x.len(),
            });
        }
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &[u8]) -> Vec<u8> {
        let mut out = vec![0u8; self.out_len];
        if self.out_len == 0 {
            return out;
        }
        // column j of the matrix is diagonal[in_len-1-j ..][..out_len]
        for (j, _) in x.iter().enumerate().filter(|(_, &b)| b == 1) {
            let col = &self.diagonal[self.in_len - 1 - j..][..self.out_len];
            for (o, c) in out.iter_mut().zip(col) {
                *o ^= c;
            }
        }
        out
    }

    /// Hash an input packed into an integer (position 0 most significant).
    pub(crate) fn apply_index(&self, x: usize) -> usize {
        bits_to_index(&self.apply_unchecked(&index_to_bits(x, self.in_len)))
    }

    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; self.diagonal.len().div_ceil(8)];
        for (t, &b) in self.diagonal.iter().enumerate() {
            bytes[t / 8] |= b << (7 - t % 8);
        }
        hex::encode(bytes)
    }

    pub fn from_hex(in_len: usize, out_len: usize, text: &str) -> Result<Self> {
        let bytes = hex::decode(text).map_err(|e| Error::Descriptor(format!("hash diagonal: {e}")))?;
        let count = if out_len == 0 { 0 } else { in_len + out_len - 1 };
        if bytes.len() != count.div_ceil(8) {
            return Err(Error::Descriptor(format!(
                "hash diagonal has {} bytes, expected {}",
                bytes.len(),
                count.div_ceil(8)
            )));
        }
        let diagonal = (0..count).map(|t| (bytes[t / 8] >> (7 - t % 8)) & 1).collect();
        Self::from_diagonal(in_len, out_len, diagonal)
    }
}

/// Serialized form used in code descriptors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashDescriptor {
    pub in_len: usize,
    pub out_len: usize,
    pub diagonal_hex: String,
}

impl From<&ToeplitzHash> for HashDescriptor {
    fn from(h: &ToeplitzHash) -> Self {
        Self {
            in_len: h.in_len,
            out_len: h.out_len,
            diagonal_hex: h.to_hex(),
        }
    }
}

impl TryFrom<&HashDescriptor> for ToeplitzHash {
    type Error = Error;
    fn try_from(d: &HashDescriptor) -> Result<Self> {
        ToeplitzHash::from_hex(d.in_len, d.out_len, &d.diagonal_hex)
    }
}

pub fn sample_hash<R: Rng + ?Sized>(rng: &mut R, in_len: usize, out_len: usize) -> Result<ToeplitzHash> {
    if out_len > in_len {
        return Err(Error::Range(format!(
            "hash output length {out_len} exceeds input length {in_len}"
        )));
    }
    let count = if out_len == 0 { 0 } else { in_len + out_len - 1 };
    let diagonal = (0..count).map(|_| rng.gen_range(0..2u8)).collect();
    ToeplitzHash::from_diagonal(in_len, out_len, diagonal)
}

/// Push `(X_1, ..., X_L, Z)` through `(h_1, ..., h_L, id)`.
///
/// Axis `l < L` of `j` holds a block of `h_l.in_len()` bits flattened to an
/// integer; the remaining axes are carried through unchanged. Output axis `l`
/// has `2^{h_l.out_len()}` symbols.
pub fn hashed_joint_dist_exact(hashes: &[ToeplitzHash], j: &JointDist) -> Result<JointDist> {
    let shape = j.shape();
    if shape.len() <= hashes.len() {
        return Err(Error::Shape(format!(
            "joint has {} axes, need {} hashed axes plus side information",
            shape.len(),
            hashes.len()
        )));
    }
    for (l, h) in hashes.iter().enumerate() {
        if h.in_len() >= usize::BITS as usize || shape[l] != 1usize << h.in_len() {
            return Err(Error::Shape(format!(
                "axis {l} has {} symbols, hash expects 2^{}",
                shape[l],
                h.in_len()
            )));
        }
    }
    if j.len() > HASH_STATE_CAP {
        return Err(Error::Budget {
            what: "hashed joint state space",
            size: j.len() as u128,
            cap: HASH_STATE_CAP as u128,
        });
    }
    let luts: Vec<Vec<usize>> = hashes
        .iter()
        .map(|h| (0..1usize << h.in_len()).map(|x| h.apply_index(x)).collect())
        .collect();
    let mut out_axes: Vec<Alphabet> = hashes
        .iter()
        .map(|h| Alphabet::new(1 << h.out_len()))
        .collect::<Result<_>>()?;
    out_axes.extend(j.axes()[hashes.len()..].iter().cloned());
    let out_shape: Vec<usize> = out_axes.iter().map(Alphabet::size).collect();
    let side: usize = shape[hashes.len()..].iter().product();
    let mut out = vec![0.0; out_shape.iter().product()];
    let mut coords = vec![0usize; hashes.len()];
    for (flat, &m) in j.pmf().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let mut rest = flat / side;
        for l in (0..hashes.len()).rev() {
            coords[l] = rest % shape[l];
            rest /= shape[l];
        }
        let mut idx = 0;
        for l in 0..hashes.len() {
            idx = idx * out_shape[l] + luts[l][coords[l]];
        }
        out[idx * side + flat % side] += m;
    }
    JointDist::renormalized(out_axes, out)
}
