//! Scenario configuration: parameters, adversary placement, corruption
//! scope, and the event script, with a diffable key=value text form.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use pmdss_core::adversary::Strategy;
use pmdss_core::pm_code::SymbolId;
use pmdss_core::SystemParams;

use crate::error::SimError;

/// Which nodes the adversary controls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    Fixed(BTreeSet<usize>),
    /// Uniformly random set of the given size, drawn per trial.
    Random(usize),
}

/// Helper / user selection for one event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Choice {
    Fixed(Vec<usize>),
    Random,
}

/// One step of the event script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Repair { failed: usize, helpers: Choice },
    Reconstruct { users: Choice },
}

/// A full scenario: system parameters, adversary, events, trial budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub b: usize,
    pub q: u64,
    pub v: usize,
    pub strategy: Strategy,
    pub controlled: Placement,
    /// Symbols the adversary corrupts; `None` means every symbol stored on a
    /// controlled node.
    pub corrupt_ids: Option<Vec<SymbolId>>,
    pub events: Vec<Event>,
    pub trials: u64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn params(&self) -> Result<SystemParams, SimError> {
        Ok(SystemParams::new(
            self.n, self.k, self.d, self.b, self.q, self.v,
        )?)
    }

    /// Validates everything that does not depend on per-trial randomness.
    pub fn validate(&self) -> Result<SystemParams, SimError> {
        let params = self.params()?;
        if let Placement::Fixed(set) = &self.controlled {
            if set.len() > params.b() {
                return Err(SimError::Config(format!(
                    "{} controlled nodes exceed b = {}",
                    set.len(),
                    params.b()
                )));
            }
            for &c in set {
                params.validate_node_id(c).map_err(SimError::Pm)?;
            }
        }
        if let Placement::Random(count) = &self.controlled {
            if *count > params.b() {
                return Err(SimError::Config(format!(
                    "{count} controlled nodes exceed b = {}",
                    params.b()
                )));
            }
        }
        for event in &self.events {
            match event {
                Event::Repair { failed, helpers } => {
                    params.validate_node_id(*failed).map_err(SimError::Pm)?;
                    if let Choice::Fixed(hs) = helpers {
                        if hs.len() != params.d() {
                            return Err(SimError::Config(format!(
                                "repair needs exactly d = {} helpers, got {}",
                                params.d(),
                                hs.len()
                            )));
                        }
                        if hs.contains(failed) {
                            return Err(SimError::Config(format!(
                                "failed node {failed} cannot help itself"
                            )));
                        }
                        check_distinct(&params, hs)?;
                    }
                }
                Event::Reconstruct { users } => {
                    if let Choice::Fixed(us) = users {
                        if us.len() != params.k() {
                            return Err(SimError::Config(format!(
                                "reconstruction needs exactly k = {} nodes, got {}",
                                params.k(),
                                us.len()
                            )));
                        }
                        check_distinct(&params, us)?;
                    }
                }
            }
        }
        if self.trials == 0 {
            return Err(SimError::Config("need at least one trial".into()));
        }
        Ok(params)
    }

    /// Serializes to the key=value text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "params={},{},{},{},{},{}",
            self.n, self.k, self.d, self.b, self.q, self.v
        );
        let _ = writeln!(out, "strategy={}", self.strategy.name());
        match &self.controlled {
            Placement::Fixed(set) => {
                let ids: Vec<String> = set.iter().map(ToString::to_string).collect();
                let _ = writeln!(out, "controlled={}", ids.join(","));
            }
            Placement::Random(count) => {
                let _ = writeln!(out, "controlled=random:{count}");
            }
        }
        if let Some(ids) = &self.corrupt_ids {
            let parts: Vec<String> = ids
                .iter()
                .map(|id| {
                    let (i, j) = id.nodes();
                    format!("{i}-{j}")
                })
                .collect();
            let _ = writeln!(out, "corrupt={}", parts.join(","));
        }
        for event in &self.events {
            match event {
                Event::Repair { failed, helpers } => {
                    let _ = writeln!(out, "event=repair:{failed}:{}", choice_text(helpers));
                }
                Event::Reconstruct { users } => {
                    let _ = writeln!(out, "event=reconstruct:{}", choice_text(users));
                }
            }
        }
        let _ = writeln!(out, "trials={}", self.trials);
        let _ = writeln!(out, "seed={}", self.seed);
        out
    }

    /// Parses the key=value text form.
    pub fn from_text(text: &str) -> Result<Self, SimError> {
        let mut params = None;
        let mut strategy = None;
        let mut controlled = None;
        let mut corrupt_ids = None;
        let mut events = Vec::new();
        let mut trials = None;
        let mut seed = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SimError::Config(format!("bad config line {line:?}")))?;
            match key {
                "params" => {
                    let nums = parse_usize_list(value)?;
                    if nums.len() != 6 {
                        return Err(SimError::Config(format!(
                            "params needs 6 fields n,k,d,b,q,v; got {value:?}"
                        )));
                    }
                    params = Some(nums);
                }
                "strategy" => {
                    strategy = Some(Strategy::from_str(value).map_err(SimError::Config)?);
                }
                "controlled" => {
                    controlled = Some(if let Some(count) = value.strip_prefix("random:") {
                        Placement::Random(count.parse().map_err(|_| {
                            SimError::Config(format!("bad controlled count {value:?}"))
                        })?)
                    } else {
                        Placement::Fixed(parse_usize_list(value)?.into_iter().collect())
                    });
                }
                "corrupt" => {
                    let mut ids = Vec::new();
                    for part in value.split(',') {
                        let (i, j) = part.split_once('-').ok_or_else(|| {
                            SimError::Config(format!("bad symbol id {part:?}"))
                        })?;
                        let i: usize = i
                            .parse()
                            .map_err(|_| SimError::Config(format!("bad symbol id {part:?}")))?;
                        let j: usize = j
                            .parse()
                            .map_err(|_| SimError::Config(format!("bad symbol id {part:?}")))?;
                        ids.push(SymbolId::new(i, j)?);
                    }
                    corrupt_ids = Some(ids);
                }
                "event" => {
                    events.push(parse_event(value)?);
                }
                "trials" => {
                    trials = Some(value.parse().map_err(|_| {
                        SimError::Config(format!("bad trial count {value:?}"))
                    })?);
                }
                "seed" => {
                    seed = Some(
                        value
                            .parse()
                            .map_err(|_| SimError::Config(format!("bad seed {value:?}")))?,
                    );
                }
                other => return Err(SimError::Config(format!("unknown config key {other:?}"))),
            }
        }
        let params =
            params.ok_or_else(|| SimError::Config("config missing params".into()))?;
        Ok(ScenarioConfig {
            n: params[0],
            k: params[1],
            d: params[2],
            b: params[3],
            q: params[4] as u64,
            v: params[5],
            strategy: strategy.unwrap_or(Strategy::RandomError),
            controlled: controlled.unwrap_or(Placement::Random(params[3])),
            corrupt_ids,
            events,
            trials: trials.unwrap_or(1),
            seed: seed.unwrap_or(0),
        })
    }
}

fn choice_text(choice: &Choice) -> String {
    match choice {
        Choice::Fixed(ids) => ids
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(","),
        Choice::Random => "random".to_string(),
    }
}

fn parse_choice(s: &str) -> Result<Choice, SimError> {
    if s == "random" {
        return Ok(Choice::Random);
    }
    Ok(Choice::Fixed(parse_usize_list(s)?))
}

pub(crate) fn parse_event(s: &str) -> Result<Event, SimError> {
    if let Some(rest) = s.strip_prefix("repair:") {
        let (failed, helpers) = rest
            .split_once(':')
            .ok_or_else(|| SimError::Config(format!("bad repair event {s:?}")))?;
        return Ok(Event::Repair {
            failed: failed
                .parse()
                .map_err(|_| SimError::Config(format!("bad failed node {failed:?}")))?,
            helpers: parse_choice(helpers)?,
        });
    }
    if let Some(rest) = s.strip_prefix("reconstruct:") {
        return Ok(Event::Reconstruct {
            users: parse_choice(rest)?,
        });
    }
    Err(SimError::Config(format!("unknown event {s:?}")))
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, SimError> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| SimError::Config(format!("bad number {part:?}")))
        })
        .collect()
}

fn check_distinct(params: &SystemParams, ids: &[usize]) -> Result<(), SimError> {
    let mut seen = BTreeSet::new();
    for &id in ids {
        params.validate_node_id(id).map_err(SimError::Pm)?;
        if !seen.insert(id) {
            return Err(SimError::Config(format!("node {id} listed twice")));
        }
    }
    Ok(())
}

/// The pinned walk-through scenario: a `(7, 4, 5)` system with `b = 1`,
/// node 3 compromised with collision-targeted errors on every symbol it
/// holds except the one it shares with node 4, repair of node 2 via helpers
/// 1, 3, 4, 5, 6, then reconstruction from nodes 1-4.
pub fn paper_mode_config(v: usize, trials: u64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n: 7,
        k: 4,
        d: 5,
        b: 1,
        q: 11,
        v,
        strategy: Strategy::TargetedCollision,
        controlled: Placement::Fixed(BTreeSet::from([3])),
        corrupt_ids: Some(vec![
            SymbolId::new(1, 3).expect("distinct"),
            SymbolId::new(2, 3).expect("distinct"),
            SymbolId::new(3, 5).expect("distinct"),
        ]),
        events: vec![
            Event::Repair {
                failed: 2,
                helpers: Choice::Fixed(vec![1, 3, 4, 5, 6]),
            },
            Event::Reconstruct {
                users: Choice::Fixed(vec![1, 2, 3, 4]),
            },
        ],
        trials,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let config = paper_mode_config(8, 10, 42);
        let text = config.to_text();
        let back = ScenarioConfig::from_text(&text).unwrap();
        assert_eq!(back, config);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn validation_rejects_bad_scripts() {
        let mut config = paper_mode_config(8, 10, 42);
        config.validate().unwrap();

        config.events.push(Event::Repair {
            failed: 2,
            helpers: Choice::Fixed(vec![1, 2, 3, 4, 5]),
        });
        assert!(matches!(config.validate(), Err(SimError::Config(_))));

        let mut config = paper_mode_config(8, 10, 42);
        config.controlled = Placement::Fixed(BTreeSet::from([3, 5]));
        assert!(matches!(config.validate(), Err(SimError::Config(_))));

        let mut config = paper_mode_config(8, 10, 42);
        config.b = 2; // b >= k/2
        assert!(matches!(config.validate(), Err(SimError::Pm(_))));
    }
}
