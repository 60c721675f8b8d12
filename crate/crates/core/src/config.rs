//! Experiment configuration.
//!
//! The format is TOML restricted to dotted scalar keys, so a config reads as a
//! flat list of assignments and every key can be overridden from the command
//! line or a sweep axis:
//!
//! ```toml
//! ring.n = 6
//! robots.k = 3
//! robots.algorithm = "pef3plus"
//! schedule.kind = "bounded"
//! schedule.bound = 8
//! run.horizon = 10000
//! checks.min_epochs = 5
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    apply_removal, parse_script, EdgeSchedule, OneRobotConfiner, ScheduleKind, TwoRobotConfiner,
};
use crate::engine::{init, Configuration};
use crate::error::{Error, Result};
use crate::ring::{EdgeId, NodeId, RingSpec};
use crate::robots::{Algorithm, Chirality};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ring: RingConfig,
    pub robots: RobotsConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub n: usize,
    #[serde(default)]
    pub multigraph: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotsConfig {
    pub k: usize,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    /// `"spread"`, `"random"`, or explicit node indices.
    #[serde(default = "default_positions")]
    pub positions: Placement,
    /// `"alternating"`, `"uniform"`, `"random"`, or one `right_is_cw` flag per robot.
    #[serde(default = "default_chirality")]
    pub chirality: ChiralityPattern,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Pef3Plus
}

fn default_positions() -> Placement {
    Placement::Named("spread".into())
}

fn default_chirality() -> ChiralityPattern {
    ChiralityPattern::Named("alternating".into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Placement {
    Explicit(Vec<usize>),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChiralityPattern {
    Explicit(Vec<bool>),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeChoice {
    Index(usize),
    Named(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleName {
    Static,
    Periodic,
    Bernoulli,
    Bounded,
    EventualMissing,
    OneRobotConfiner,
    TwoRobotConfiner,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub kind: ScheduleName,
    pub seed: u64,
    /// Presence probability for `bernoulli` and `bounded`.
    pub p: f64,
    /// Recurrence bound for `bounded`.
    pub bound: u64,
    /// One string of `0`/`1` per edge for `periodic`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patterns: Option<Vec<String>>,
    /// Eventually missing edge: an index or `"random"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge: Option<EdgeChoice>,
    pub t_remove: u64,
    /// Base schedule under `eventual_missing`.
    pub base: ScheduleName,
    /// Confiner anchor node `u`.
    pub anchor: usize,
    /// Removal script layered on top of the schedule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script: Option<String>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            kind: ScheduleName::Static,
            seed: 0,
            p: 0.5,
            bound: 8,
            patterns: None,
            edge: None,
            t_remove: 0,
            base: ScheduleName::Static,
            anchor: 0,
            script: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub horizon: u64,
    pub trace_emit: bool,
    pub trace_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            horizon: 1000,
            trace_emit: false,
            trace_cap: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InconclusivePolicy {
    Pass,
    #[default]
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    pub max_tower: bool,
    pub opposite_dirs: bool,
    pub moved_flag: bool,
    pub dir_changes: bool,
    pub move_legality: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_epochs: Option<u64>,
    /// Every node's max inter-visit gap must be strictly below this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_gap: Option<u64>,
    /// Sentinel check on the eventually missing edge.
    pub sentinels: bool,
    pub sentinel_tail: u64,
    /// Allowed nodes, or `"auto"` for the confiner's set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confinement: Option<Placement>,
    /// Trailing window for the recurrent-so-far diagnosis.
    pub diagnose_window: u64,
    /// Open confiner phases at least this long count as stalled.
    pub stall_window: u64,
    pub inconclusive: InconclusivePolicy,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            max_tower: false,
            opposite_dirs: false,
            moved_flag: false,
            dir_changes: false,
            move_legality: false,
            min_epochs: None,
            max_gap: None,
            sentinels: false,
            sentinel_tail: 1000,
            confinement: None,
            diagnose_window: 1000,
            stall_window: 1000,
            inconclusive: InconclusivePolicy::Fail,
        }
    }
}

/// Applies `key=value` to a config table. `value` is parsed as a TOML value
/// when possible and taken as a bare string otherwise.
pub fn set_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    set_value(table, key.trim(), parse_value(raw.trim()))
}

pub fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

pub fn set_value(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts
        .pop()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| Error::Config(format!("empty key in `{key}`")))?;
    let mut cur = table;
    for part in parts {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{part}` in `{key}` is not a section")))?;
    }
    cur.insert(leaf.to_string(), value);
    Ok(())
}

pub fn read_table(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// A fully resolved run: everything needed to call the engine.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub ring: RingSpec,
    pub initial: Configuration,
    pub schedule: EdgeSchedule,
    pub missing_edge: Option<(EdgeId, u64)>,
    pub confinement: Option<Vec<NodeId>>,
}

impl ExperimentConfig {
    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_table(table)
    }

    pub fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("config serializes to a table")
    }

    /// Dotted `key = value` lines in a fixed order.
    pub fn to_flat_toml(&self) -> String {
        fn walk(prefix: &str, table: &toml::Table, out: &mut String) {
            for (k, v) in table {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                match v {
                    toml::Value::Table(t) => walk(&key, t, out),
                    other => {
                        out.push_str(&format!("{key} = {other}\n"));
                    }
                }
            }
        }
        let mut out = String::new();
        walk("", &self.to_table(), &mut out);
        out
    }

    /// First 16 hex digits of the SHA-256 of [`Self::to_flat_toml`].
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_flat_toml().as_bytes());
        hex::encode(&hash[..8])
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        let ring = RingSpec::with_multigraph(self.ring.n, self.ring.multigraph)?;
        let k = self.robots.k;
        if k == 0 {
            return Err(Error::NoRobots);
        }
        if k >= ring.n() {
            return Err(Error::TooManyRobots { k, n: ring.n() });
        }
        let seed = self.schedule.seed;
        let positions = self.resolve_positions(&ring, seed)?;
        let chiralities = self.resolve_chirality(seed)?;
        let initial = init(&ring, &positions, &chiralities, self.robots.algorithm)?;

        let s = &self.schedule;
        let mut missing_edge = None;
        let kind = match s.kind {
            ScheduleName::EventualMissing => {
                if matches!(
                    s.base,
                    ScheduleName::EventualMissing
                        | ScheduleName::OneRobotConfiner
                        | ScheduleName::TwoRobotConfiner
                ) {
                    return Err(Error::Config(
                        "schedule.base must be an oblivious schedule".into(),
                    ));
                }
                let edge = match &s.edge {
                    Some(EdgeChoice::Index(e)) => EdgeId(*e),
                    Some(EdgeChoice::Named(name)) if name == "random" => {
                        let mut rng = sub_rng(seed, Stream::Edge);
                        EdgeId(rng.random_range(0..ring.edge_count()))
                    }
                    Some(EdgeChoice::Named(other)) => {
                        return Err(Error::Config(format!(
                            "schedule.edge must be an index or \"random\", got \"{other}\""
                        )))
                    }
                    None => {
                        return Err(Error::Config(
                            "schedule.edge is required for eventual_missing".into(),
                        ))
                    }
                };
                missing_edge = Some((edge, s.t_remove));
                ScheduleKind::EventualMissing {
                    edge,
                    t_remove: s.t_remove,
                    base: Box::new(self.oblivious_kind(s.base)?),
                }
            }
            ScheduleName::OneRobotConfiner => {
                ScheduleKind::OneRobotConfiner(OneRobotConfiner::new(NodeId(s.anchor)))
            }
            ScheduleName::TwoRobotConfiner => {
                ScheduleKind::TwoRobotConfiner(TwoRobotConfiner::new(NodeId(s.anchor)))
            }
            other => self.oblivious_kind(other)?,
        };
        let mut schedule = EdgeSchedule::new(ring, kind)?;
        let confiner_set = match schedule.kind() {
            ScheduleKind::OneRobotConfiner(c) => Some(c.confinement_set(&ring).to_vec()),
            ScheduleKind::TwoRobotConfiner(c) => Some(c.confinement_set(&ring).to_vec()),
            _ => None,
        };
        if let Some(path) = &s.script {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.into(),
                source,
            })?;
            schedule = apply_removal(schedule, &parse_script(&text)?)?;
        }
        let confinement = match &self.checks.confinement {
            None => None,
            Some(Placement::Named(name)) if name == "auto" => {
                Some(confiner_set.ok_or_else(|| {
                    Error::Config("checks.confinement = \"auto\" needs a confiner schedule".into())
                })?)
            }
            Some(Placement::Named(other)) => {
                return Err(Error::Config(format!(
                    "checks.confinement must be a node list or \"auto\", got \"{other}\""
                )))
            }
            Some(Placement::Explicit(nodes)) => Some(nodes.iter().copied().map(NodeId).collect()),
        };
        if self.checks.sentinels && missing_edge.is_none() {
            return Err(Error::Config(
                "checks.sentinels needs schedule.kind = \"eventual_missing\"".into(),
            ));
        }
        Ok(ResolvedRun {
            ring,
            initial,
            schedule,
            missing_edge,
            confinement,
        })
    }

    fn oblivious_kind(&self, name: ScheduleName) -> Result<ScheduleKind> {
        let s = &self.schedule;
        Ok(match name {
            ScheduleName::Static => ScheduleKind::Static,
            ScheduleName::Bernoulli => ScheduleKind::Bernoulli {
                p: s.p,
                seed: s.seed,
            },
            ScheduleName::Bounded => ScheduleKind::BoundedRecurrence {
                bound: s.bound,
                p: s.p,
                seed: s.seed,
            },
            ScheduleName::Periodic => {
                let patterns = s.patterns.as_ref().ok_or_else(|| {
                    Error::Config("schedule.patterns is required for periodic".into())
                })?;
                let parsed = patterns
                    .iter()
                    .map(|p| {
                        p.chars()
                            .map(|c| match c {
                                '1' => Ok(true),
                                '0' => Ok(false),
                                other => Err(Error::Config(format!(
                                    "schedule.patterns: unexpected `{other}`"
                                ))),
                            })
                            .collect::<Result<Vec<bool>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                ScheduleKind::Periodic { patterns: parsed }
            }
            other => {
                return Err(Error::Config(format!(
                    "{other:?} cannot be used as a base schedule"
                )))
            }
        })
    }

    fn resolve_positions(&self, ring: &RingSpec, seed: u64) -> Result<Vec<NodeId>> {
        let (n, k) = (ring.n(), self.robots.k);
        match &self.robots.positions {
            Placement::Explicit(nodes) => {
                if nodes.len() != k {
                    return Err(Error::CountMismatch {
                        what: "robots.positions",
                        expected: k,
                        got: nodes.len(),
                    });
                }
                Ok(nodes.iter().copied().map(NodeId).collect())
            }
            Placement::Named(name) => match name.as_str() {
                "spread" => Ok((0..k).map(|i| NodeId(i * n / k)).collect()),
                "random" => {
                    let mut rng = sub_rng(seed, Stream::Positions);
                    let mut nodes: Vec<usize> = (0..n).collect();
                    for i in 0..k {
                        let j = rng.random_range(i..n);
                        nodes.swap(i, j);
                    }
                    Ok(nodes[..k].iter().copied().map(NodeId).collect())
                }
                other => Err(Error::Config(format!(
                    "robots.positions must be \"spread\", \"random\" or a node list, got \"{other}\""
                ))),
            },
        }
    }

    fn resolve_chirality(&self, seed: u64) -> Result<Vec<Chirality>> {
        let k = self.robots.k;
        let flags: Vec<bool> = match &self.robots.chirality {
            ChiralityPattern::Explicit(flags) => {
                if flags.len() != k {
                    return Err(Error::CountMismatch {
                        what: "robots.chirality",
                        expected: k,
                        got: flags.len(),
                    });
                }
                flags.clone()
            }
            ChiralityPattern::Named(name) => match name.as_str() {
                "uniform" => vec![true; k],
                "alternating" => (0..k).map(|i| i % 2 == 0).collect(),
                "random" => {
                    let mut rng = sub_rng(seed, Stream::Chirality);
                    (0..k).map(|_| rng.random::<bool>()).collect()
                }
                other => {
                    return Err(Error::Config(format!(
                        "robots.chirality must be \"uniform\", \"alternating\", \"random\" or a list, got \"{other}\""
                    )))
                }
            },
        };
        Ok(flags
            .into_iter()
            .map(|right_is_cw| Chirality { right_is_cw })
            .collect())
    }
}

#[derive(Clone, Copy)]
enum Stream {
    Positions = 1,
    Chirality = 2,
    Edge = 3,
    Cell = 4,
}

/// Generators for placement, chirality and edge choice live on their own
/// streams so they never correlate with the schedule's draws.
fn sub_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1B5_4A32_D192_ED03);
    rng.set_stream(stream as u64);
    rng
}

/// Largest seed a config can hold (TOML integers are signed 64-bit).
pub const MAX_SEED: u64 = i64::MAX as u64;

/// Seed for sweep cell `index` derived from a template seed, at most [`MAX_SEED`].
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = sub_rng(seed, Stream::Cell);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64() >> 1
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
ring.n = 4
robots.k = 3
robots.algorithm = "pef3plus"
schedule.kind = "static"
run.horizon = 100
checks.min_epochs = 1
"#;

    #[test]
    fn parses_flat_dotted_keys() {
        let cfg = ExperimentConfig::from_toml(BASIC).unwrap();
        assert_eq!(cfg.ring.n, 4);
        assert_eq!(cfg.robots.k, 3);
        assert_eq!(cfg.run.horizon, 100);
        assert_eq!(cfg.checks.min_epochs, Some(1));
        assert_eq!(cfg.robots.positions, Placement::Named("spread".into()));
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = ExperimentConfig::from_toml(&format!("{BASIC}robots.speed = 3\n")).unwrap_err();
        assert!(err.to_string().contains("speed"), "{err}");
        assert!(ExperimentConfig::from_toml(&format!("{BASIC}extra.x = 1\n")).is_err());
    }

    #[test]
    fn overrides_apply_dotted_paths() {
        let mut table: toml::Table = toml::from_str(BASIC).unwrap();
        set_override(&mut table, "robots.k=2").unwrap();
        set_override(&mut table, "schedule.kind=bounded").unwrap();
        set_override(&mut table, "robots.positions=[0, 2]").unwrap();
        let cfg = ExperimentConfig::from_table(table).unwrap();
        assert_eq!(cfg.robots.k, 2);
        assert_eq!(cfg.schedule.kind, ScheduleName::Bounded);
        assert_eq!(cfg.robots.positions, Placement::Explicit(vec![0, 2]));
        assert!(set_override(&mut toml::Table::new(), "novalue").is_err());
    }

    #[test]
    fn flat_form_round_trips() {
        let cfg = ExperimentConfig::from_toml(BASIC).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_flat_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.digest(), again.digest());
        assert_eq!(cfg.digest().len(), 16);
    }

    #[test]
    fn spread_placement_is_towerless() {
        for n in 2..20 {
            for k in 1..n {
                let mut cfg = ExperimentConfig::from_toml(BASIC).unwrap();
                cfg.ring.n = n;
                cfg.robots.k = k;
                cfg.resolve().unwrap();
            }
        }
    }

    #[test]
    fn random_choices_follow_the_seed() {
        let mut cfg = ExperimentConfig::from_toml(BASIC).unwrap();
        cfg.ring.n = 12;
        cfg.robots.positions = Placement::Named("random".into());
        cfg.robots.chirality = ChiralityPattern::Named("random".into());
        cfg.schedule.seed = 42;
        let a = cfg.resolve().unwrap();
        let b = cfg.resolve().unwrap();
        assert_eq!(a.initial, b.initial);
    }

    #[test]
    fn resolve_rejects_k_not_below_n() {
        let mut cfg = ExperimentConfig::from_toml(BASIC).unwrap();
        cfg.robots.k = 4;
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("k < n"), "{err}");
    }

    #[test]
    fn eventual_missing_needs_edge() {
        let mut cfg = ExperimentConfig::from_toml(BASIC).unwrap();
        cfg.schedule.kind = ScheduleName::EventualMissing;
        assert!(cfg.resolve().is_err());
        cfg.schedule.edge = Some(EdgeChoice::Named("random".into()));
        let run = cfg.resolve().unwrap();
        assert!(run.missing_edge.unwrap().0 .0 < 4);
    }

    #[test]
    fn derived_seeds_differ_per_cell() {
        let seeds: std::collections::BTreeSet<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 100);
        assert!(seeds.iter().all(|&s| s <= MAX_SEED));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
