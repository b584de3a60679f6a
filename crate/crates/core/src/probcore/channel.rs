use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dist::{Alphabet, Dist, JointDist, NORMALIZATION_TOL};
use crate::error::{Error, Result};

/// A discrete memoryless multiple-access channel `q(z | x_1, ..., x_L)`.
///
/// Transition rows are ordered lexicographically over input tuples with the
/// first input most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct MacChannel {
    inputs: Vec<Alphabet>,
    output: Alphabet,
    transition: Vec<Vec<f64>>,
    cdf: Vec<Vec<f64>>,
}

impl MacChannel {
    pub fn new(inputs: Vec<Alphabet>, output: Alphabet, transition: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Channel("at least one input is required".into()));
        }
        let rows: usize = inputs.iter().map(Alphabet::size).product();
        if transition.len() != rows {
            let missing = transition.len().min(rows);
            return Err(Error::Channel(format!(
                "transition has {} rows, expected {rows}; row {missing} {}",
                transition.len(),
                if transition.len() < rows { "is missing" } else { "is unexpected" }
            )));
        }
        let sizes: Vec<usize> = inputs.iter().map(Alphabet::size).collect();
        for (r, row) in transition.iter().enumerate() {
            let tuple = decode_tuple(r, &sizes);
            if row.len() != output.size() {
                return Err(Error::Channel(format!(
                    "transition row {r} (inputs {tuple:?}) has {} entries, expected {}",
                    row.len(),
                    output.size()
                )));
            }
            let mut total = 0.0;
            for (z, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::Channel(format!(
                        "transition row {r} (inputs {tuple:?}) entry {z} is {p}"
                    )));
                }
                total += p;
            }
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Channel(format!(
                    "transition row {r} (inputs {tuple:?}) sums to {total}"
                )));
            }
        }
        let cdf = transition
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            inputs,
            output,
            transition,
            cdf,
        })
    }

    /// A channel with binary inputs.
    pub fn binary(num_inputs: usize, output_size: usize, transition: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            vec![Alphabet::binary(); num_inputs],
            Alphabet::new(output_size)?,
            transition,
        )
    }

    /// Deterministic channel `z = f(inputs)`.
    pub fn deterministic(
        input_sizes: &[usize],
        output_size: usize,
        f: impl Fn(&[usize]) -> usize,
    ) -> Result<Self> {
        let rows: usize = input_sizes.iter().product();
        let transition = (0..rows)
            .map(|r| {
                let z = f(&decode_tuple(r, input_sizes));
                let mut row = vec![0.0; output_size];
                row[z] = 1.0;
                row
            })
            .collect();
        Self::new(
            input_sizes
                .iter()
                .map(|&s| Alphabet::new(s))
                .collect::<Result<Vec<_>>>()?,
            Alphabet::new(output_size)?,
            transition,
        )
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn input_alphabets(&self) -> &[Alphabet] {
        &self.inputs
    }

    pub fn input_sizes(&self) -> Vec<usize> {
        self.inputs.iter().map(Alphabet::size).collect()
    }

    pub fn output_alphabet(&self) -> &Alphabet {
        &self.output
    }

    pub fn output_size(&self) -> usize {
        self.output.size()
    }

    pub fn num_rows(&self) -> usize {
        self.transition.len()
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.transition[row]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn is_binary_input(&self) -> bool {
        self.inputs.iter().all(|a| a.size() == 2)
    }

    pub fn row_index(&self, symbols: &[usize]) -> Result<usize> {
        if symbols.len() != self.inputs.len() {
            return Err(Error::Length {
                what: "input tuple",
                expected: self.inputs.len(),
                got: symbols.len(),
            });
        }
        let mut idx = 0;
        for (s, a) in symbols.iter().zip(&self.inputs) {
            if *s >= a.size() {
                return Err(Error::Range(format!("input symbol {s} outside alphabet of size {}", a.size())));
            }
            idx = idx * a.size() + s;
        }
        Ok(idx)
    }

    pub fn input_tuple(&self, row: usize) -> Vec<usize> {
        decode_tuple(row, &self.input_sizes())
    }

    pub(crate) fn sample_row<R: Rng + ?Sized>(&self, row: usize, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let cdf = &self.cdf[row];
        cdf.iter()
            .position(|&c| u < c)
            .unwrap_or_else(|| {
                // u landed in the rounding gap at the top; take the last symbol with mass
                self.transition[row].iter().rposition(|&p| p > 0.0).unwrap_or(0)
            })
    }

    pub(crate) fn check_inputs(&self, inputs: &[Dist]) -> Result<()> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::Length {
                what: "input distributions",
                expected: self.inputs.len(),
                got: inputs.len(),
            });
        }
        for (i, (d, a)) in inputs.iter().zip(&self.inputs).enumerate() {
            if d.len() != a.size() {
                return Err(Error::Shape(format!(
                    "input {i} distribution has {} symbols, alphabet has {}",
                    d.len(),
                    a.size()
                )));
            }
        }
        Ok(())
    }

    /// Every row index paired with its probability under independent inputs.
    pub(crate) fn input_tuples_weighted<'a>(
        &'a self,
        inputs: &'a [Dist],
    ) -> impl Iterator<Item = (usize, f64)> + 'a {
        (0..self.num_rows()).map(move |row| {
            let tuple = self.input_tuple(row);
            let w = tuple
                .iter()
                .zip(inputs)
                .map(|(&s, d)| d.prob(s))
                .product();
            (row, w)
        })
    }

    /// Joint law of `(X_1, ..., X_L, Z)` under independent inputs.
    pub fn joint(&self, inputs: &[Dist]) -> Result<JointDist> {
        self.check_inputs(inputs)?;
        let zs = self.output_size();
        let mut pmf = vec![0.0; self.num_rows() * zs];
        for (row, w) in self.input_tuples_weighted(inputs) {
            for (z, &q) in self.transition[row].iter().enumerate() {
                pmf[row * zs + z] = w * q;
            }
        }
        let mut axes = self.inputs.clone();
        axes.push(self.output.clone());
        JointDist::derived(axes, pmf)
    }
}

pub(crate) fn decode_tuple(mut idx: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for i in (0..sizes.len()).rev() {
        out[i] = idx % sizes[i];
        idx /= sizes[i];
    }
    out
}

/// On-disk channel description.
///
/// ```json
/// { "inputs": [2, 2], "output": 3,
///   "transition": [[1,0,0],[0,1,0],[0,1,0],[0,0,1]],
///   "input_dists": [[0.5, 0.5], [0.5, 0.5]] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub inputs: Vec<usize>,
    pub output: usize,
    pub transition: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_dists: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_labels: Option<Vec<String>>,
}

impl ChannelSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Channel(format!("malformed channel spec: {e}"))
        })
    }

    pub fn from_channel(ch: &MacChannel, inputs: Option<&[Dist]>) -> Self {
        Self {
            inputs: ch.input_sizes(),
            output: ch.output_size(),
            transition: ch.rows().to_vec(),
            input_dists: inputs.map(|ds| ds.iter().map(|d| d.pmf().to_vec()).collect()),
            output_labels: ch.output_alphabet().labels().map(<[String]>::to_vec),
        }
    }

    pub fn channel(&self) -> Result<MacChannel> {
        let inputs = self
            .inputs
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                Alphabet::new(s).map_err(|_| Error::Channel(format!("field inputs[{i}] must be positive")))
            })
            .collect::<Result<Vec<_>>>()?;
        let output = match &self.output_labels {
            Some(labels) => {
                if labels.len() != self.output {
                    return Err(Error::Channel(format!(
                        "field output_labels has {} labels, output is {}",
                        labels.len(),
                        self.output
                    )));
                }
                Alphabet::with_labels(labels.clone())?
            }
            None => Alphabet::new(self.output)
                .map_err(|_| Error::Channel("field output must be positive".into()))?,
        };
        MacChannel::new(inputs, output, self.transition.clone())
    }

    /// Input laws from the file, defaulting to uniform.
    pub fn input_dists(&self) -> Result<Vec<Dist>> {
        match &self.input_dists {
            Some(ds) => {
                if ds.len() != self.inputs.len() {
                    return Err(Error::Channel(format!(
                        "field input_dists has {} entries, channel has {} inputs",
                        ds.len(),
                        self.inputs.len()
                    )));
                }
                ds.iter()
                    .enumerate()
                    .map(|(i, p)| {
                        Dist::new(p.clone())
                            .map_err(|e| Error::Channel(format!("field input_dists[{i}]: {e}")))
                    })
                    .collect()
            }
            None => self.inputs.iter().map(|&s| Dist::uniform(s)).collect(),
        }
    }
}

/// Reference channels.
pub mod channels {
    use rand::Rng;

    use super::MacChannel;

    /// `Z = X_1 + ... + X_L` over binary inputs.
    pub fn adder(users: usize) -> MacChannel {
        MacChannel::deterministic(&vec![2; users], users + 1, |xs| xs.iter().sum())
            .expect("adder channel")
    }

    /// `Z = X xor Y`.
    pub fn xor2() -> MacChannel {
        MacChannel::deterministic(&[2, 2], 2, |xs| xs[0] ^ xs[1]).expect("xor channel")
    }

    /// `Z = X` with a single binary input.
    pub fn identity_binary() -> MacChannel {
        MacChannel::deterministic(&[2], 2, |xs| xs[0]).expect("identity channel")
    }

    /// `Z = (BSC_p1(X), BSC_p2(Y))`, encoded as `2 * z1 + z2`.
    pub fn parallel_bsc(p1: f64, p2: f64) -> MacChannel {
        let mut rows = Vec::new();
        for x in 0..2usize {
            for y in 0..2usize {
                let mut row = vec![0.0; 4];
                for z1 in 0..2usize {
                    for z2 in 0..2usize {
                        let a = if z1 == x { 1.0 - p1 } else { p1 };
                        let b = if z2 == y { 1.0 - p2 } else { p2 };
                        row[2 * z1 + z2] = a * b;
                    }
                }
                rows.push(row);
            }
        }
        MacChannel::binary(2, 4, rows).expect("parallel channel")
    }

    /// A channel whose rows are drawn at random (rows are normalized
    /// exponential weights, so every entry is positive).
    pub fn random_binary<R: Rng + ?Sized>(users: usize, output_size: usize, rng: &mut R) -> MacChannel {
        let rows = (0..1usize << users)
            .map(|_| {
                let w: Vec<f64> = (0..output_size)
                    .map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3)
                    .collect();
                let total: f64 = w.iter().sum();
                let mut row: Vec<f64> = w.iter().map(|x| x / total).collect();
                // push the rounding residue into the largest entry
                let residue = 1.0 - row.iter().sum::<f64>();
                let imax = (0..output_size)
                    .max_by(|&a, &b| row[a].total_cmp(&row[b]))
                    .unwrap_or(0);
                row[imax] += residue;
                row
            })
            .collect();
        MacChannel::binary(users, output_size, rows).expect("random channel")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_roundtrip_and_errors() {
        let text = r#"{ "inputs": [2,2], "output": 3,
            "transition": [[1,0,0],[0,1,0],[0,1,0],[0,0,1]],
            "input_dists": [[0.5,0.5],[0.5,0.5]] }"#;
        let spec = ChannelSpec::parse(text).unwrap();
        let ch = spec.channel().unwrap();
        assert_eq!(ch, channels::adder(2));
        assert_eq!(spec.input_dists().unwrap().len(), 2);

        let missing = r#"{ "inputs": [2,2], "output": 3,
            "transition": [[1,0,0],[0,1,0],[0,1,0]] }"#;
        let err = ChannelSpec::parse(missing).unwrap().channel().unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");

        let bad_row = r#"{ "inputs": [2], "output": 2, "transition": [[0.5,0.6],[1,0]] }"#;
        let err = ChannelSpec::parse(bad_row).unwrap().channel().unwrap_err();
        assert!(err.to_string().contains("row 0"), "{err}");

        let malformed = "{ \"inputs\": [2,\n 2], \"output\": }";
        let err = ChannelSpec::parse(malformed).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn row_order_is_first_input_major() {
        let ch = MacChannel::deterministic(&[2, 2], 4, |xs| 2 * xs[0] + xs[1]).unwrap();
        assert_eq!(ch.row_index(&[1, 0]).unwrap(), 2);
        assert_eq!(ch.input_tuple(2), vec![1, 0]);
        assert_eq!(ch.row(2), &[0.0, 0.0, 1.0, 0.0]);
    }
}
