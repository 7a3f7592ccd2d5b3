//! JSON cone specifications.

use serde::{Deserialize, Serialize};

use crate::clifford::CliffordModule;
use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::metric::{MetricSpace, Signature};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// `{"rank": 2, "dim_w": 4}` or `{"rank": 3, "dim_v": 8, "multiplicity": 1}`,
/// with optional `signature` (`[p, q]`) and `seed`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_w: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_v: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<Signature>,
    #[serde(default, alias = "mult", skip_serializing_if = "Option::is_none")]
    pub multiplicity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ConeSpec {
    pub fn rank2(dim_w: usize) -> Self {
        Self {
            rank: 2,
            dim_w: Some(dim_w),
            dim_v: None,
            signature: None,
            multiplicity: None,
            seed: None,
        }
    }

    pub fn rank3(dim_v: usize) -> Self {
        Self {
            rank: 3,
            dim_w: None,
            dim_v: Some(dim_v),
            signature: None,
            multiplicity: None,
            seed: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("cone spec: {e}")))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn signature_for(&self, dim: usize) -> Result<Signature> {
        let sig = self.signature.unwrap_or(Signature::euclidean(dim));
        if sig.dim() != dim {
            return Err(Error::InvalidArgument(format!(
                "signature ({}, {}) does not match dimension {dim}",
                sig.p, sig.q
            )));
        }
        Ok(sig)
    }

    pub fn build(&self) -> Result<Cone> {
        let positive = |name: &str, v: Option<usize>| match v {
            Some(0) => Err(Error::InvalidArgument(format!("{name} must be positive"))),
            Some(n) => Ok(n),
            None => Err(Error::InvalidArgument(format!("rank-{} spec needs {name}", self.rank))),
        };
        match self.rank {
            2 => {
                if self.dim_v.is_some() || self.multiplicity.is_some() {
                    return Err(Error::InvalidArgument(
                        "dim_v and multiplicity belong to rank-3 specs".into(),
                    ));
                }
                let dim = positive("dim_w", self.dim_w)?;
                let sig = self.signature_for(dim)?;
                Ok(Cone::rank2(MetricSpace::pseudo_euclidean(sig.p, sig.q)))
            }
            3 => {
                if self.dim_w.is_some() {
                    return Err(Error::InvalidArgument("dim_w belongs to rank-2 specs".into()));
                }
                let dim = positive("dim_v", self.dim_v)?;
                let mult = positive("multiplicity", Some(self.multiplicity.unwrap_or(1)))?;
                let sig = self.signature_for(dim)?;
                Cone::rank3(CliffordModule::build(dim, sig, mult)?)
            }
            r => Err(Error::Unsupported(format!("rank {r} cones"))),
        }
    }
}
