//! Text serialisation of priors.
//!
//! ```toml
//! version = 1
//! d = 2
//! T = 1
//! K = 1000
//!
//! [actions]
//! kind = "explicit"        # singletons | interval | subsets | explicit
//! list = ["10", "01"]      # explicit only; interval/subsets take `m`
//!
//! [[scenario]]
//! weight = 0.5
//! losses = [0, 1000]       # row-major d x T numerators over K
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{LossMatrix, Prior};
use crate::actions::{make_all_msubsets, make_interval_actions, ActionSet, DEFAULT_SUBSET_CAP};
use crate::error::{Error, Result};

const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorDoc {
    version: u32,
    d: usize,
    #[serde(rename = "T")]
    horizon: usize,
    #[serde(rename = "K")]
    grid: u32,
    actions: ActionsDoc,
    #[serde(rename = "scenario")]
    scenarios: Vec<ScenarioDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionsDoc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    list: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    weight: f64,
    losses: Vec<i64>,
}

/// Serialise a prior. The action set is always written explicitly.
pub fn prior_to_toml(prior: &Prior) -> Result<String> {
    let actions = prior.actions();
    let k = prior.grid() as f64;
    let doc = PriorDoc {
        version: VERSION,
        d: prior.d(),
        horizon: prior.horizon(),
        grid: prior.grid(),
        actions: ActionsDoc {
            kind: "explicit".into(),
            m: None,
            list: Some((0..actions.len()).map(|a| actions.label(a)).collect()),
        },
        scenarios: prior
            .scenarios()
            .iter()
            .map(|s| ScenarioDoc {
                weight: s.weight(),
                losses: s.losses().data().iter().map(|&x| (x * k).round() as i64).collect(),
            })
            .collect(),
    };
    toml::to_string(&doc).map_err(|e| Error::Internal(format!("prior serialisation failed: {e}")))
}

/// Parse a prior document.
pub fn prior_from_toml(text: &str) -> Result<Prior> {
    let doc: PriorDoc = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1)).unwrap_or(0);
        Error::Parse { line, msg: e.message().to_string() }
    })?;
    if doc.version != VERSION {
        return Err(Error::config(format!("unsupported prior format version {}", doc.version)));
    }
    if doc.grid == 0 {
        return Err(Error::config("K must be positive"));
    }
    let actions = parse_actions(doc.d, &doc.actions)?;
    let k = doc.grid as i64;
    let mut atoms = Vec::with_capacity(doc.scenarios.len());
    for (n, s) in doc.scenarios.iter().enumerate() {
        if let Some(&x) = s.losses.iter().find(|&&x| x < 0 || x > k) {
            return Err(Error::config(format!("scenario {n}: loss numerator {x} outside [0, {k}]")));
        }
        let data = s.losses.iter().map(|&x| x as f64 / k as f64).collect();
        let losses = LossMatrix::from_rows(doc.d, doc.horizon, data)
            .map_err(|e| Error::config(format!("scenario {n}: {e}")))?;
        atoms.push((s.weight, losses));
    }
    Prior::new(Arc::new(actions), doc.grid, atoms)
}

fn parse_actions(d: usize, doc: &ActionsDoc) -> Result<ActionSet> {
    let need_m = || doc.m.ok_or_else(|| Error::config(format!("actions of kind '{}' need m", doc.kind)));
    match doc.kind.as_str() {
        "singletons" => ActionSet::singletons(d),
        "interval" => make_interval_actions(d, need_m()?),
        "subsets" => make_all_msubsets(d, need_m()?, DEFAULT_SUBSET_CAP),
        "explicit" => {
            let list = doc.list.as_ref().ok_or_else(|| Error::config("explicit actions need a list"))?;
            let indicators = list
                .iter()
                .map(|s| {
                    s.chars()
                        .map(|c| match c {
                            '0' => Ok(false),
                            '1' => Ok(true),
                            _ => Err(Error::config(format!("bad action string '{s}'"))),
                        })
                        .collect::<Result<Vec<bool>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            ActionSet::new(d, &indicators)
        }
        other => Err(Error::config(format!("unknown action kind '{other}'"))),
    }
}

pub fn write_prior(prior: &Prior, path: &Path) -> Result<()> {
    std::fs::write(path, prior_to_toml(prior)?)?;
    Ok(())
}

pub fn read_prior(path: &Path) -> Result<Prior> {
    prior_from_toml(&std::fs::read_to_string(path)?)
}
