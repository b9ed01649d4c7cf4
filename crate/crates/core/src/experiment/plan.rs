use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SbmSpec;
use crate::pulse::{ChainConfig, PriorConfig};

/// Grid for the single-block protocols. Missing axes take the protocol's
/// default values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErGrid {
    #[serde(rename = "N", default)]
    pub n_total: Option<Vec<usize>>,
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub p: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatmapGrid {
    #[serde(rename = "N")]
    pub n_total: usize,
    pub n1_fraction: Vec<f64>,
    pub n: Vec<usize>,
}

impl Default for HeatmapGrid {
    fn default() -> Self {
        HeatmapGrid {
            n_total: 200,
            n1_fraction: vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
            n: vec![40, 60, 80, 100, 120, 140, 160],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsilonGrid {
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    pub p_tilde: f64,
    pub epsilon: Vec<f64>,
    pub n: Vec<usize>,
}

impl Default for EpsilonGrid {
    fn default() -> Self {
        EpsilonGrid {
            n1: 350,
            n2: 500,
            p_tilde: 0.5,
            epsilon: vec![-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3],
            n: vec![280],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrpGrid {
    #[serde(rename = "N")]
    pub n_total: usize,
    pub n_seed: usize,
    pub concentration: f64,
    pub sampling_fraction: Vec<f64>,
}

impl Default for CrpGrid {
    fn default() -> Self {
        CrpGrid {
            n_total: 200,
            n_seed: 100,
            concentration: 1.0,
            sampling_fraction: vec![0.33, 0.5, 0.66],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleRunGrid {
    pub spec: SbmSpec,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "grid")]
pub enum Protocol {
    #[serde(rename = "vary_p")]
    VaryP(ErGrid),
    #[serde(rename = "vary_N")]
    VaryNetworkSize(ErGrid),
    #[serde(rename = "vary_n")]
    VarySampleSize(ErGrid),
    #[serde(rename = "partition_heatmap")]
    PartitionHeatmap(HeatmapGrid),
    #[serde(rename = "epsilon_sweep")]
    EpsilonSweep(EpsilonGrid),
    #[serde(rename = "crp_K_sweep")]
    CrpKSweep(CrpGrid),
    #[serde(rename = "single_run")]
    SingleRun(SingleRunGrid),
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::VaryP(_) => "vary_p",
            Protocol::VaryNetworkSize(_) => "vary_N",
            Protocol::VarySampleSize(_) => "vary_n",
            Protocol::PartitionHeatmap(_) => "partition_heatmap",
            Protocol::EpsilonSweep(_) => "epsilon_sweep",
            Protocol::CrpKSweep(_) => "crp_K_sweep",
            Protocol::SingleRun(_) => "single_run",
        }
    }

    fn multi_block(&self) -> bool {
        match self {
            Protocol::PartitionHeatmap(_) | Protocol::EpsilonSweep(_) | Protocol::CrpKSweep(_) => {
                true
            }
            Protocol::SingleRun(g) => g.spec.k() > 1,
            _ => false,
        }
    }

    /// Graphs per point and chains per graph used by the full-size protocols.
    pub fn full_scale_counts(&self) -> ScaleCounts {
        let (replicates_per_point, chains_per_graph) = match self {
            Protocol::PartitionHeatmap(_) => (50, 10),
            Protocol::EpsilonSweep(_) => (500, 50),
            _ => (100, 50),
        };
        ScaleCounts {
            replicates_per_point,
            chains_per_graph,
        }
    }

    /// Chain settings used when the plan gives none.
    pub fn default_chain(&self) -> ChainConfig {
        ChainConfig::for_blocks(if self.multi_block() { 2 } else { 1 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleCounts {
    pub replicates_per_point: usize,
    pub chains_per_graph: usize,
}

fn default_replicates() -> usize {
    20
}

fn default_chains() -> usize {
    5
}

/// An experiment read from a JSON plan file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    #[serde(flatten)]
    pub protocol: Protocol,
    #[serde(default = "default_replicates")]
    pub replicates_per_point: usize,
    #[serde(default = "default_chains")]
    pub chains_per_graph: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainConfig>,
    #[serde(default)]
    pub prior: PriorConfig,
    /// Counts used with `--full-scale`; defaults to the protocol's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_scale: Option<ScaleCounts>,
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn name(&self) -> &'static str {
        self.protocol.name()
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates_per_point == 0 {
            return Err(Error::validation(
                "replicates_per_point",
                "must be at least 1",
            ));
        }
        if self.chains_per_graph == 0 {
            return Err(Error::validation("chains_per_graph", "must be at least 1"));
        }
        if let Some(fs) = &self.full_scale {
            if fs.replicates_per_point == 0 || fs.chains_per_graph == 0 {
                return Err(Error::validation("full_scale", "counts must be at least 1"));
            }
        }
        let empty = |field: &str, len: usize| {
            if len == 0 {
                Err(Error::validation(field, "grid axis is empty"))
            } else {
                Ok(())
            }
        };
        match &self.protocol {
            Protocol::VaryP(g) | Protocol::VaryNetworkSize(g) | Protocol::VarySampleSize(g) => {
                empty("N", g.n_total.as_ref().map_or(1, Vec::len))?;
                empty("n", g.n.as_ref().map_or(1, Vec::len))?;
                empty("p", g.p.as_ref().map_or(1, Vec::len))?;
            }
            Protocol::PartitionHeatmap(g) => {
                empty("n1_fraction", g.n1_fraction.len())?;
                empty("n", g.n.len())?;
            }
            Protocol::EpsilonSweep(g) => {
                empty("epsilon", g.epsilon.len())?;
                empty("n", g.n.len())?;
            }
            Protocol::CrpKSweep(g) => {
                empty("sampling_fraction", g.sampling_fraction.len())?;
                if g.n_seed == 0 || g.n_seed > g.n_total {
                    return Err(Error::validation("n_seed", "must lie in 1..=N"));
                }
            }
            Protocol::SingleRun(_) => {}
        }
        if let Some(chain) = &self.chain {
            // block count is checked again per point
            chain.validate(chain.window.as_ref().map_or(1, Vec::len))?;
        }
        Ok(())
    }

    /// Replicate counts in effect.
    pub fn counts(&self, full_scale: bool) -> ScaleCounts {
        if full_scale {
            self.full_scale
                .unwrap_or_else(|| self.protocol.full_scale_counts())
        } else {
            ScaleCounts {
                replicates_per_point: self.replicates_per_point,
                chains_per_graph: self.chains_per_graph,
            }
        }
    }

    pub fn chain_config(&self) -> ChainConfig {
        self.chain
            .clone()
            .unwrap_or_else(|| self.protocol.default_chain())
    }
}
