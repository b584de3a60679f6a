use serde::{Deserialize, Serialize};

use super::{make_plan, CodeParams, LengthPlan, MacCode, Scheme};
use crate::error::{Error, Result};
use crate::hashing::{HashDescriptor, ToeplitzHash};
use crate::probcore::ChannelSpec;

pub const DESCRIPTOR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamDescriptor {
    pub name: String,
    pub p1: f64,
    pub seed_width: usize,
    pub nominal_width: usize,
    pub v_set: Vec<usize>,
    pub h_set: Vec<usize>,
    pub hash: HashDescriptor,
}

/// Everything needed to rebuild a code bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeDescriptor {
    pub version: u32,
    pub channel: ChannelSpec,
    pub scheme: Scheme,
    pub params: CodeParams,
    pub plan: LengthPlan,
    pub streams: Vec<StreamDescriptor>,
    pub build_seed: u64,
}

impl CodeDescriptor {
    pub fn from_code(code: &MacCode, build_seed: u64) -> Self {
        Self {
            version: DESCRIPTOR_VERSION,
            channel: ChannelSpec::from_channel(&code.channel, Some(&code.inputs)),
            scheme: code.scheme.clone(),
            params: code.params,
            plan: code.plan.clone(),
            streams: code
                .streams
                .iter()
                .map(|s| StreamDescriptor {
                    name: s.name.clone(),
                    p1: s.plan.stats.p1,
                    seed_width: s.codec.seed_len(),
                    nominal_width: s.plan.nominal_width(),
                    v_set: s.codec.profile.v_set.clone(),
                    h_set: s.codec.profile.h_set.clone(),
                    hash: HashDescriptor::from(&s.hash),
                })
                .collect(),
            build_seed,
        }
    }

    /// Rebuild the code, checking that the stored plan and index sets match
    /// what the parameters produce.
    pub fn to_code(&self) -> Result<MacCode> {
        if self.version != DESCRIPTOR_VERSION {
            return Err(Error::Descriptor(format!(
                "version {} is not supported (expected {DESCRIPTOR_VERSION})",
                self.version
            )));
        }
        let ch = self.channel.channel()?;
        let inputs = self.channel.input_dists()?;
        let p = &self.params;
        let plan = make_plan(&ch, &inputs, &self.scheme, p.n_len, p.k, p.lengths)?;
        if plan != self.plan {
            return Err(Error::Descriptor("stored plan does not match the recomputed plan".into()));
        }
        let hashes = self
            .streams
            .iter()
            .map(|s| ToeplitzHash::try_from(&s.hash))
            .collect::<Result<Vec<_>>>()?;
        let code = MacCode::assemble(&ch, &inputs, self.scheme.clone(), *p, plan, hashes)?;
        for (s, d) in code.streams.iter().zip(&self.streams) {
            if s.name != d.name
                || s.codec.seed_len() != d.seed_width
                || s.codec.profile.v_set != d.v_set
                || s.codec.profile.h_set != d.h_set
            {
                return Err(Error::Descriptor(format!(
                    "stream {} does not match the recomputed codec",
                    d.name
                )));
            }
        }
        Ok(code)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Descriptor(e.to_string()))
    }
}
