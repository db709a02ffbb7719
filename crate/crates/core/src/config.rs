//! Flat `key = value` run configuration shared by every command.
//!
//! Unknown keys are rejected. `#` starts a comment. Overrides (from the
//! command line) use the same keys and replace file values one-to-one.

use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::neuralnet::TrainConfig;
use crate::phy::PhyConfig;
use crate::pipelines::{FeasibilityRule, PipelineConfig};
use crate::sim::SimConfig;
use crate::spectrum::{GridConfig, ReachTable};
use crate::topology::{self, Topology};
use crate::traffic::{SliceProfile, TrafficConfig};

/// Keys accepted in config files and as overrides, in canonical order.
pub const KEYS: &[&str] = &[
    "topology",
    "requests",
    "load_erlangs",
    "seed",
    "ber_thresholds",
    "bitrate_min",
    "bitrate_max",
    "slots_per_link",
    "slot_width_ghz",
    "baud_rate_gbaud",
    "reach_table",
    "span_length_km",
    "noise_figure_db",
    "fiber_loss_db_per_km",
    "launch_power_dbm",
    "reference_bandwidth_ghz",
    "nonlinear_penalty_db_per_1000km",
    "hidden_units",
    "epochs",
    "batch_size",
    "learning_rate",
    "validation_fraction",
    "folds",
    "feasibility_rule",
    "output_dir",
    "jobs",
];

const TRAINING_KEYS: &[&str] = &[
    "seed",
    "ber_thresholds",
    "hidden_units",
    "epochs",
    "batch_size",
    "learning_rate",
    "validation_fraction",
    "folds",
    "feasibility_rule",
];

// Keys that change nothing in the produced files.
const UNHASHED: &[&str] = &["output_dir", "jobs", "topology"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Topology file, or `None` for the bundled surrogate backbone.
    pub topology_path: Option<PathBuf>,
    pub traffic: TrafficConfig,
    pub seed: u64,
    pub profile: SliceProfile,
    pub grid: GridConfig,
    pub reach: ReachTable,
    pub phy: PhyConfig,
    pub train: TrainConfig,
    pub feasibility: FeasibilityRule,
    pub output_dir: PathBuf,
    /// Parallel distributed trainings; `None` means one per slice.
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            topology_path: None,
            traffic: TrafficConfig::default(),
            seed: 42,
            profile: SliceProfile::parse("1e-8,1e-7,5e-7,1e-6,1e-5,1e-4").expect("valid default"),
            grid: GridConfig::default(),
            reach: ReachTable::default(),
            phy: PhyConfig::default(),
            train: TrainConfig::default(),
            feasibility: FeasibilityRule::Strict,
            output_dir: PathBuf::from("out"),
            jobs: None,
        }
    }
}

/// Splits `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected `key = value`, found {line:?}")))?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::validation(format!("{key}: cannot parse {value:?}: {e}")))
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (key, value) in parse_pairs(text)? {
            config.set(&key, &value)?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Applies one key. Validation of cross-field invariants is left to
    /// [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "topology" => {
                self.topology_path = match value {
                    "" | "default" => None,
                    path => Some(PathBuf::from(path)),
                }
            }
            "requests" => self.traffic.requests = number(key, value)?,
            "load_erlangs" => self.traffic.load_erlangs = number(key, value)?,
            "seed" => self.seed = number(key, value)?,
            "ber_thresholds" => self.profile = SliceProfile::parse(value)?,
            "bitrate_min" => self.traffic.bitrate_min_gbps = number(key, value)?,
            "bitrate_max" => self.traffic.bitrate_max_gbps = number(key, value)?,
            "slots_per_link" => self.grid.slots_per_link = number(key, value)?,
            "slot_width_ghz" => self.grid.slot_width_ghz = number(key, value)?,
            "baud_rate_gbaud" => self.grid.baud_rate_gbaud = number(key, value)?,
            "reach_table" => self.reach = ReachTable::parse(value)?,
            "span_length_km" => self.phy.span_length_km = number(key, value)?,
            "noise_figure_db" => self.phy.noise_figure_db = number(key, value)?,
            "fiber_loss_db_per_km" => self.phy.fiber_loss_db_per_km = number(key, value)?,
            "launch_power_dbm" => self.phy.launch_power_dbm = number(key, value)?,
            "reference_bandwidth_ghz" => self.phy.reference_bandwidth_ghz = number(key, value)?,
            "nonlinear_penalty_db_per_1000km" => {
                self.phy.nonlinear_penalty_db_per_1000km = number(key, value)?
            }
            "hidden_units" => self.train.hidden_units = number(key, value)?,
            "epochs" => self.train.epochs = number(key, value)?,
            "batch_size" => self.train.batch_size = number(key, value)?,
            "learning_rate" => self.train.learning_rate = number(key, value)?,
            "validation_fraction" => self.train.validation_fraction = number(key, value)?,
            "folds" => self.train.folds = number(key, value)?,
            "feasibility_rule" => self.feasibility = value.parse()?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "jobs" => {
                self.jobs = match value {
                    "" | "auto" => None,
                    n => Some(number(key, n)?),
                }
            }
            other => return Err(Error::validation(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.traffic.validate()?;
        self.grid.validate()?;
        self.phy.validate()?;
        self.train.validate()?;
        if self.jobs == Some(0) {
            return Err(Error::validation("jobs must be at least 1"));
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let opt = |o: &Option<PathBuf>| o.as_ref().map_or("default".to_string(), |p| p.display().to_string());
        let value = match key {
            "topology" => opt(&self.topology_path),
            "requests" => self.traffic.requests.to_string(),
            "load_erlangs" => format!("{:?}", self.traffic.load_erlangs),
            "seed" => self.seed.to_string(),
            "ber_thresholds" => self.profile.to_string(),
            "bitrate_min" => format!("{:?}", self.traffic.bitrate_min_gbps),
            "bitrate_max" => format!("{:?}", self.traffic.bitrate_max_gbps),
            "slots_per_link" => self.grid.slots_per_link.to_string(),
            "slot_width_ghz" => format!("{:?}", self.grid.slot_width_ghz),
            "baud_rate_gbaud" => format!("{:?}", self.grid.baud_rate_gbaud),
            "reach_table" => self
                .reach
                .values()
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(","),
            "span_length_km" => format!("{:?}", self.phy.span_length_km),
            "noise_figure_db" => format!("{:?}", self.phy.noise_figure_db),
            "fiber_loss_db_per_km" => format!("{:?}", self.phy.fiber_loss_db_per_km),
            "launch_power_dbm" => format!("{:?}", self.phy.launch_power_dbm),
            "reference_bandwidth_ghz" => format!("{:?}", self.phy.reference_bandwidth_ghz),
            "nonlinear_penalty_db_per_1000km" => {
                format!("{:?}", self.phy.nonlinear_penalty_db_per_1000km)
            }
            "hidden_units" => self.train.hidden_units.to_string(),
            "epochs" => self.train.epochs.to_string(),
            "batch_size" => self.train.batch_size.to_string(),
            "learning_rate" => format!("{:?}", self.train.learning_rate),
            "validation_fraction" => format!("{:?}", self.train.validation_fraction),
            "folds" => self.train.folds.to_string(),
            "feasibility_rule" => self.feasibility.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            "jobs" => self.jobs.map_or("auto".to_string(), |j| j.to_string()),
            _ => return None,
        };
        Some(value)
    }

    /// Every key in canonical order, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }

    pub fn load_topology(&self) -> Result<(Topology, String)> {
        let text = match &self.topology_path {
            None => topology::DEFAULT_TOPOLOGY.to_string(),
            Some(path) => std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
        };
        Ok((topology::load_topology(&text)?, text))
    }

    /// Short digest identifying everything that influences the outputs:
    /// the topology contents and every key except output location and
    /// parallelism.
    pub fn config_hash(&self, topology_text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(topology::load_topology(topology_text).map_or_else(|_| topology_text.to_string(), |t| t.to_text()));
        for key in KEYS.iter().filter(|k| !UNHASHED.contains(k)) {
            hasher.update(format!("{key}={}\n", self.get(key).expect("known key")));
        }
        hex::encode(&hasher.finalize()[..8])
    }

    /// Digest of a dataset's generation hash together with every key that
    /// affects training, so reports trained the same way on the same data
    /// share it.
    pub fn training_hash(&self, dataset_hash: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("dataset={dataset_hash}\n"));
        for key in TRAINING_KEYS {
            hasher.update(format!("{key}={}\n", self.get(key).expect("known key")));
        }
        hex::encode(&hasher.finalize()[..8])
    }

    pub fn pipeline(&self, config_hash: &str) -> PipelineConfig {
        PipelineConfig {
            train: self.train,
            seed: self.seed,
            rule: self.feasibility,
            config_hash: config_hash.to_string(),
        }
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            grid: self.grid,
            reach: self.reach,
            phy: self.phy,
            audit: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let c = RunConfig::default();
        let again = RunConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn parses_keys_and_comments() {
        let c = RunConfig::from_text(
            "# test\nrequests = 100\nber_thresholds = 1e-8, 1e-6,1e-4  # three slices\nseed=7\nfeasibility_rule = inclusive\njobs = 2\n",
        )
        .unwrap();
        assert_eq!(c.traffic.requests, 100);
        assert_eq!(c.profile.slice_count(), 3);
        assert_eq!(c.seed, 7);
        assert_eq!(c.feasibility, FeasibilityRule::Inclusive);
        assert_eq!(c.jobs, Some(2));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_text("nonsense = 1\n").is_err());
        assert!(RunConfig::from_text("requests 100\n").is_err());
        assert!(RunConfig::from_text("requests = -1\n").is_err());
        assert!(RunConfig::from_text("requests = 0\n").is_err());
        assert!(RunConfig::from_text("validation_fraction = 1.5\n").is_err());
        assert!(RunConfig::from_text("ber_thresholds = 1e-4,1e-6\n").is_err());
    }

    #[test]
    fn hash_tracks_outputs_only() {
        let (_, topo) = RunConfig::default().load_topology().unwrap();
        let base = RunConfig::default();
        let mut moved = base.clone();
        moved.set("output_dir", "/elsewhere").unwrap();
        moved.set("jobs", "3").unwrap();
        assert_eq!(base.config_hash(&topo), moved.config_hash(&topo));
        let mut reseeded = base.clone();
        reseeded.set("seed", "43").unwrap();
        assert_ne!(base.config_hash(&topo), reseeded.config_hash(&topo));
        assert_ne!(base.config_hash(&topo), base.config_hash("nodes 2\n0 1 10\n"));
        assert_eq!(base.config_hash(&topo).len(), 16);

        let trained = base.training_hash("abc");
        assert_eq!(trained, moved.training_hash("abc"));
        assert_ne!(trained, base.training_hash("abd"));
        let mut longer = base.clone();
        longer.set("epochs", "301").unwrap();
        assert_ne!(trained, longer.training_hash("abc"));
    }
}
