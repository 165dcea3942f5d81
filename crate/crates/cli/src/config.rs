//! The declarative run configuration read from TOML.

use std::path::{Path, PathBuf};

use gcause::forecaster::ForecasterConfig;
use gcause::invariance::InferenceConfig;
use gcause::series::{load_csv, validate_partition, Group};
use gcause::synth::SimConfig;
use gcause::{GroupPartition, MultivariateSeries};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Default output directory when neither the config nor `--out` names one.
pub const DEFAULT_OUT: &str = "gcause-out";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// When set, replaces `synth.seed`, `forecaster.seed` and
    /// `inference.knockoff_seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory. Not echoed into reports, so the same run written to
    /// two places yields identical reports.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    /// Named groups of columns; defaults to the synthetic group sizes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupSpec>,
    #[serde(default)]
    pub forecaster: ForecasterConfig,
    #[serde(default)]
    pub inference: InferenceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub path: PathBuf,
    #[serde(default = "yes")]
    pub header: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub name: String,
    pub columns: Vec<ColumnRef>,
}

/// A column by header name or by zero-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub group_sizes: Vec<usize>,
    /// Group-level link `[cause, effect]`; ignored when `independent`.
    pub direction: [usize; 2],
    /// Draw causally independent groups instead.
    pub independent: bool,
    pub length: usize,
    pub burn_in: usize,
    pub noise_std: f64,
    pub max_lag: usize,
    pub density: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let sim = SimConfig::default();
        Self {
            group_sizes: vec![2, 2],
            direction: [0, 1],
            independent: false,
            length: sim.length,
            burn_in: sim.burn_in,
            noise_std: sim.noise_std,
            max_lag: sim.max_lag,
            density: sim.density,
            seed: sim.seed,
        }
    }
}

impl SynthSpec {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            length: self.length,
            burn_in: self.burn_in,
            noise_std: self.noise_std,
            max_lag: self.max_lag,
            density: self.density,
            seed: self.seed,
        }
    }

    pub fn partition(&self) -> CliResult<GroupPartition> {
        Ok(GroupPartition::contiguous(&self.group_sizes)?)
    }

    pub fn direction(&self) -> Option<(usize, usize)> {
        (!self.independent).then_some((self.direction[0], self.direction[1]))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.sim_config().validate()?;
        let groups = self.partition()?.len();
        let [cause, effect] = self.direction;
        if !self.independent && (cause >= groups || effect >= groups || cause == effect) {
            return Err(CliError::Usage(format!(
                "synth.direction {:?} must name two distinct groups below {groups}",
                self.direction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSpec {
    pub densities: Vec<f64>,
    pub seeds_per_density: usize,
    pub first_seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            densities: (2..=10).map(|d| d as f64 / 10.0).collect(),
            seeds_per_density: 3,
            first_seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// Reads `path`, or returns the defaults when there is none.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
                toml::from_str(&text).map_err(|e| CliError::read(path, e))
            }
        }
    }

    /// Applies command-line overrides and propagates the shared seed.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        if seed.is_some() {
            self.seed = seed;
        }
        if out.is_some() {
            self.out = out;
        }
        if let Some(seed) = self.seed {
            self.forecaster.seed = seed;
            self.inference.knockoff_seed = seed;
            if let Some(synth) = &mut self.synth {
                synth.seed = seed;
            }
        }
        self
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    /// Checks everything that can be checked before touching data.
    pub fn validate(&self) -> CliResult<()> {
        self.forecaster.validate()?;
        self.inference.validate()?;
        if let Some(synth) = &self.synth {
            synth.validate()?;
        }
        if let Some(bench) = &self.benchmark {
            if bench.densities.is_empty() || bench.seeds_per_density == 0 {
                return Err(CliError::Usage(
                    "benchmark needs at least one density and one seed".into(),
                ));
            }
            if let Some(d) = bench.densities.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
                return Err(CliError::Usage(format!(
                    "benchmark density {d} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn synth_spec(&self) -> CliResult<&SynthSpec> {
        self.synth
            .as_ref()
            .ok_or_else(|| CliError::Usage("config has no [synth] section".into()))
    }

    /// Loads the CSV input named by `[input]`.
    pub fn load_input(&self) -> CliResult<MultivariateSeries> {
        let input = self
            .input
            .as_ref()
            .ok_or_else(|| CliError::Usage("config has neither [input] nor [synth]".into()))?;
        load_csv(&input.path, input.header)
            .map_err(|e| CliError::Usage(format!("{}: {e}", input.path.display())))
    }

    /// Resolves `[[groups]]` against the series columns, falling back to the
    /// synthetic group sizes.
    pub fn partition(&self, series: &MultivariateSeries) -> CliResult<GroupPartition> {
        if self.groups.is_empty() {
            return match &self.synth {
                Some(synth) => synth.partition(),
                None => Err(CliError::Usage("config defines no [[groups]]".into())),
            };
        }
        let groups = self
            .groups
            .iter()
            .map(|g| {
                let members = g
                    .columns
                    .iter()
                    .map(|c| resolve_column(c, series, &g.name))
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(Group {
                    name: g.name.clone(),
                    members,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let partition = GroupPartition::from_groups(groups);
        validate_partition(&partition, series.n_vars()).map_err(gcause::Error::from)?;
        Ok(partition)
    }
}

fn resolve_column(c: &ColumnRef, series: &MultivariateSeries, group: &str) -> CliResult<usize> {
    match c {
        ColumnRef::Index(i) if *i < series.n_vars() => Ok(*i),
        ColumnRef::Index(i) => Err(CliError::Usage(format!(
            "group {group:?}: column index {i} out of range for {} columns",
            series.n_vars()
        ))),
        ColumnRef::Name(name) => series
            .index_of(name)
            .ok_or_else(|| CliError::Usage(format!("group {group:?}: no column named {name:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("sed = 1").is_err());
        assert!(RunConfig::from_toml("[forecaster]\nepoch = 3").is_err());
        assert!(RunConfig::from_toml("[synth]\ngroups = [2, 2]").is_err());
    }

    #[test]
    fn seed_propagates() {
        let cfg = RunConfig::from_toml("seed = 4\n[synth]\nseed = 9")
            .unwrap()
            .with_overrides(Some(7), None);
        assert_eq!(cfg.synth.unwrap().seed, 7);
        assert_eq!(cfg.forecaster.seed, 7);
        assert_eq!(cfg.inference.knockoff_seed, 7);
    }

    #[test]
    fn density_zero_is_rejected() {
        let cfg = RunConfig::from_toml("[synth]\ndensity = 0.0").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
    }

    #[test]
    fn groups_resolve_by_name_and_index() {
        let series =
            MultivariateSeries::new(vec![0.0; 6], vec!["a".into(), "b".into(), "c".into()])
                .unwrap();
        let cfg = RunConfig::from_toml(
            "[[groups]]\nname = \"x\"\ncolumns = [\"a\", 2]\n[[groups]]\nname = \"y\"\ncolumns = [\"b\"]",
        )
        .unwrap();
        let p = cfg.partition(&series).unwrap();
        assert_eq!(p.members(0), &[0, 2]);
        assert_eq!(p.members(1), &[1]);
    }

    #[test]
    fn overlapping_groups_are_rejected() {
        let series =
            MultivariateSeries::new(vec![0.0; 6], vec!["a".into(), "b".into(), "c".into()])
                .unwrap();
        let cfg = RunConfig::from_toml(
            "[[groups]]\nname = \"x\"\ncolumns = [0, 1]\n[[groups]]\nname = \"y\"\ncolumns = [1, 2]",
        )
        .unwrap();
        assert!(matches!(cfg.partition(&series), Err(CliError::Usage(_))));
    }
}
