//! Run configuration: TOML with one section per stage.

use anyhow::{bail, Context, Result};
use hsdual::graph::GraphRegistry;
use hsdual::mcmc::{ChainKind, RunParams};
use hsdual::oracle::DEFAULT_BUDGET;
use hsdual::FiniteGraph;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphSection,
    pub oracle: OracleSection,
    pub mcmc: McmcSection,
    pub analysis: AnalysisSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    /// Builder name (`path`, `cycle`, `torus`, `box`, `wired-box`, `range2-box`).
    pub builder: String,
    pub size: usize,
    /// Potential id on every edge, e.g. `xy:1.1`.
    pub potential: String,
    /// Graph text file; replaces the builder when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            builder: "torus".into(),
            size: 16,
            potential: "xy:1".into(),
            file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    /// Weighted-state budget per oracle call.
    pub budget: u64,
    /// Height range `K`; 0 picks it from the potential tables.
    pub truncation: i64,
    /// Angle grid `M`; 0 picks it adaptively.
    pub quadrature: usize,
    /// Random twists per instance and sector for the duality check.
    pub twists: usize,
    pub seed: u64,
}

impl Default for OracleSection {
    fn default() -> Self {
        let c = hsdual::oracle::default_corpus();
        OracleSection {
            budget: DEFAULT_BUDGET,
            truncation: 0,
            quadrature: 0,
            twists: c.twists,
            seed: c.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSection {
    /// `height`, `spin-star` or `spin-diamond`.
    pub chain: String,
    /// Measured sweeps per chain, after burn-in.
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub chains: usize,
    pub seed: u64,
}

impl Default for McmcSection {
    fn default() -> Self {
        McmcSection {
            chain: "spin-diamond".into(),
            sweeps: 100_000,
            burn_in: 10_000,
            thin: 1,
            chains: 1,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Largest distance `L` of the two-point series; at most half the side.
    pub max_distance: usize,
    /// Path lengths for the bridge check; empty means `1..=max_distance`.
    pub bridge_lengths: Vec<usize>,
    /// Path length of the CLT statistic; 0 disables it.
    pub clt_length: usize,
    /// Enables the spin-spin comparison for XY potentials.
    pub xy_check: bool,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            max_distance: 8,
            bridge_lengths: Vec::new(),
            clt_length: 8,
            xy_check: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for CSV outputs; empty writes to stdout.
    pub dir: PathBuf,
    /// First CSV line `# hsdual ... unix=<seconds>`.
    pub timestamp: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::new(),
            timestamp: true,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; paths inside it are relative to its directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(f) = &cfg.graph.file {
            if f.is_relative() {
                cfg.graph.file = Some(base.join(f));
            }
        }
        if let Some(f) = &cfg.graph.file {
            if !f.exists() {
                bail!("graph file {} does not exist", f.display());
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.graph.file.is_none() {
            GraphRegistry::default().get(&self.graph.builder)?;
            if self.graph.size == 0 {
                bail!("graph.size must be positive");
            }
        }
        hsdual::PotentialRegistry::default().resolve(&self.graph.potential)?;
        if self.oracle.budget == 0 {
            bail!("oracle.budget must be positive");
        }
        if self.oracle.truncation < 0 {
            bail!("oracle.truncation must be >= 0");
        }
        ChainKind::parse(&self.mcmc.chain)?;
        self.run_params()?;
        if self.mcmc.chains == 0 {
            bail!("mcmc.chains must be at least 1");
        }
        Ok(())
    }

    pub fn build_graph(&self) -> Result<FiniteGraph> {
        match &self.graph.file {
            Some(f) => {
                let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
                Ok(FiniteGraph::from_text(&text).with_context(|| format!("in {}", f.display()))?)
            }
            None => Ok(GraphRegistry::default().build(&self.graph.builder, self.graph.size, &self.graph.potential)?),
        }
    }

    pub fn chain_kind(&self) -> Result<ChainKind> {
        Ok(ChainKind::parse(&self.mcmc.chain)?)
    }

    pub fn run_params(&self) -> Result<RunParams> {
        let m = &self.mcmc;
        Ok(RunParams::new(m.sweeps + m.burn_in, m.burn_in, m.thin)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn sections_are_optional() {
        let cfg = RunConfig::parse("[mcmc]\nsweeps = 10\nburn_in = 2\n").unwrap();
        assert_eq!(cfg.mcmc.sweeps, 10);
        assert_eq!(cfg.graph, GraphSection::default());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse("[graph]\nbuilder = \"moebius\"\n").is_err());
        assert!(RunConfig::parse("[mcmc]\nchain = \"worm\"\n").is_err());
        assert!(RunConfig::parse("[mcmc]\nthin = 0\n").is_err());
        assert!(RunConfig::parse("[graph]\ncolour = 3\n").is_err());
        assert!(RunConfig::parse("[graph]\npotential = \"xy:-1\"\n").is_err());
    }
}
