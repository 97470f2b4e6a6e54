use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Instance, Scenario};
use crate::error::ValidationError;
use crate::network::{Arc, Network};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot access instance file: {0}")]
    Io(#[from] io::Error),
    #[error("malformed instance document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    Invalid(#[from] ValidationError),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcDoc {
    tail: usize,
    head: usize,
    r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    s: usize,
    t: usize,
    p: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    nodes: usize,
    arcs: Vec<ArcDoc>,
    scenarios: Vec<ScenarioDoc>,
    budget: f64,
}

impl InstanceDoc {
    fn into_instance(self) -> Result<Instance, ValidationError> {
        let mut arcs = Vec::with_capacity(self.arcs.len());
        for (k, a) in self.arcs.into_iter().enumerate() {
            let arc = match (a.q, a.cost) {
                (Some(q), cost) => Arc::interdictable(a.tail, a.head, a.r, q, cost.unwrap_or(1.0)),
                (None, None) => Arc::new(a.tail, a.head, a.r),
                (None, Some(_)) => {
                    return Err(ValidationError::new(
                        format!("arcs[{k}].cost"),
                        "only interdictable arcs (with q) carry a cost",
                    ))
                }
            };
            arcs.push(arc);
        }
        let network = Network::new(self.nodes, arcs)?;
        let scenarios = self
            .scenarios
            .into_iter()
            .map(|s| Scenario { s: s.s, t: s.t, p: s.p })
            .collect();
        Instance::new(network, scenarios, self.budget)
    }

    fn from_instance(inst: &Instance) -> Self {
        let net = inst.network();
        InstanceDoc {
            nodes: net.node_count(),
            arcs: net
                .arcs()
                .iter()
                .map(|a| ArcDoc {
                    tail: a.tail,
                    head: a.head,
                    r: a.r,
                    q: a.interdiction.map(|i| i.q),
                    cost: a.interdiction.map(|i| i.cost),
                })
                .collect(),
            scenarios: inst
                .scenarios()
                .iter()
                .map(|s| ScenarioDoc { s: s.s, t: s.t, p: s.p })
                .collect(),
            budget: inst.budget(),
        }
    }
}

pub fn from_json(text: &str) -> Result<Instance, InstanceError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    Ok(doc.into_instance()?)
}

pub fn to_json(instance: &Instance) -> String {
    let mut text = serde_json::to_string_pretty(&InstanceDoc::from_instance(instance))
        .expect("instance documents always serialize");
    text.push('\n');
    text
}

pub fn load(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    from_json(&fs::read_to_string(path)?)
}

pub fn save(instance: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    fs::write(path, to_json(instance))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::diamond;
    use crate::instance::{generate, GridParams, QRegime};

    const DIAMOND: &str = r#"{
        "nodes": 4,
        "arcs": [
            {"tail": 0, "head": 1, "r": 0.9},
            {"tail": 1, "head": 3, "r": 0.8, "q": 0.4},
            {"tail": 0, "head": 2, "r": 0.7, "q": 0.07, "cost": 1.0},
            {"tail": 2, "head": 3, "r": 0.9}
        ],
        "scenarios": [{"s": 0, "t": 3, "p": 1.0}],
        "budget": 1
    }"#;

    #[test]
    fn parses_diamond() {
        let inst = from_json(DIAMOND).unwrap();
        assert_eq!(inst.network().interdictable().len(), 2);
        assert_eq!(inst.scenarios().len(), 1);
        assert_eq!(inst, diamond());
    }

    #[test]
    fn rejects_bad_documents() {
        let q_eq_r = DIAMOND.replace("\"q\": 0.4", "\"q\": 0.8");
        match from_json(&q_eq_r) {
            Err(InstanceError::Invalid(e)) => assert_eq!(e.path, "arcs[1].q"),
            other => panic!("{other:?}"),
        }
        let unreachable = DIAMOND.replace("\"s\": 0, \"t\": 3", "\"s\": 3, \"t\": 0");
        assert!(matches!(from_json(&unreachable), Err(InstanceError::Invalid(_))));
        let unknown = DIAMOND.replace("\"budget\": 1", "\"budget\": 1, \"extra\": 2");
        assert!(matches!(from_json(&unknown), Err(InstanceError::Parse(_))));
        assert!(matches!(from_json("{"), Err(InstanceError::Parse(_))));
        let cost_only = DIAMOND.replace("\"r\": 0.9}", "\"r\": 0.9, \"cost\": 2}");
        assert!(matches!(from_json(&cost_only), Err(InstanceError::Invalid(_))));
    }

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("diamond.json");
        save(&diamond(), &path).unwrap();
        assert_eq!(load(&path).unwrap(), diamond());

        let params = GridParams {
            scenarios: 5,
            budget: 2.0,
            ..GridParams::new(4, 4, QRegime::Mixed(0.5), 11)
        };
        let grid = generate(&params).unwrap();
        assert_eq!(from_json(&to_json(&grid)).unwrap(), grid);
    }

    #[test]
    fn unwritable_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("x.json");
        assert!(matches!(save(&diamond(), path), Err(InstanceError::Io(_))));
    }
}
