//! Distribution-spec files.
//!
//! ```json
//! {"kind": "finite", "p": [0.5, 0.5], "q": [0.1, 0.9]}
//! {"kind": "finite", "p": [0.5, 0.5], "q": [1, 9], "normalized": false}
//! {"kind": "gaussian", "q": {"mu": 0.5, "sigma": 0.5}, "p": {"mu": 0.0, "sigma": 1.0}}
//! ```
//!
//! `normalized` defaults to `true`; when `false`, finite `q` holds target
//! weights with an unknown normalizer.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measures::{FinitePair, Gaussian, GaussianPair, PairedDistribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    Finite {
        p: Vec<f64>,
        q: Vec<f64>,
        #[serde(default = "default_true")]
        normalized: bool,
    },
    Gaussian { q: Gaussian, p: Gaussian },
}

fn default_true() -> bool {
    true
}

impl DistributionSpec {
    pub fn build(self) -> Result<PairedDistribution> {
        Ok(match self {
            DistributionSpec::Finite { p, q, normalized: true } => PairedDistribution::Finite(FinitePair::new(p, q)?),
            DistributionSpec::Finite { p, q, normalized: false } => {
                PairedDistribution::Finite(FinitePair::unnormalized(p, q)?)
            }
            DistributionSpec::Gaussian { q, p } => PairedDistribution::Gaussian(GaussianPair::new(q, p)?),
        })
    }
}

pub fn parse(text: &str) -> Result<PairedDistribution> {
    serde_json::from_str::<DistributionSpec>(text)?.build()
}

pub fn load(path: &Path) -> Result<PairedDistribution> {
    parse(&std::fs::read_to_string(path)?)
}
