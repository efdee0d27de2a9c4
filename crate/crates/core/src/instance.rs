//! JSON instance files.
//!
//! ```json
//! {
//!   "budget": 1,
//!   "agents": [
//!     {"name": "a1", "actions": [{"reward": 10, "cost": 2}],
//!      "kappa_s": 1, "kappa_i": 1, "alpha": 0}
//!   ]
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envelope::Action;
use crate::error::{Error, Result};
use crate::single_agent::AgentSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub name: String,
    pub actions: Vec<Action>,
    pub kappa_s: f64,
    pub kappa_i: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub agents: Vec<AgentEntry>,
    #[serde(default = "default_budget")]
    pub budget: u32,
}

fn default_budget() -> u32 {
    1
}

/// A validated agent with its name.
#[derive(Debug, Clone)]
pub struct NamedAgent {
    pub name: String,
    pub spec: AgentSpec,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Instance(format!("malformed instance: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Instance(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Instance(format!("{}: {e}", path.display())))
    }

    /// Validates every agent. Errors name the agent, the offending field and
    /// the assumption it breaks. Safety feasibility is left to the solvers.
    pub fn agents(&self) -> Result<Vec<NamedAgent>> {
        if self.agents.is_empty() {
            return Err(Error::Instance(
                "field `agents`: at least one agent is required".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(self.agents.len());
        for (k, entry) in self.agents.iter().enumerate() {
            if !seen.insert(entry.name.as_str()) {
                return Err(Error::Instance(format!(
                    "agents[{k}]: duplicate agent name {:?}",
                    entry.name
                )));
            }
            out.push(NamedAgent {
                name: entry.name.clone(),
                spec: entry
                    .to_spec()
                    .map_err(|e| Error::Instance(format!("agents[{k}] ({:?}): {e}", entry.name)))?,
            });
        }
        Ok(out)
    }

    pub fn find(&self, name: &str) -> Result<NamedAgent> {
        self.agents()?
            .into_iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Instance(format!("no agent named {name:?}")))
    }
}

impl AgentEntry {
    fn to_spec(&self) -> Result<AgentSpec> {
        if self.actions.is_empty() {
            return Err(Error::InvalidAgent(
                "field `actions`: at least one action is required".into(),
            ));
        }
        for (i, a) in self.actions.iter().enumerate() {
            if !(a.reward.is_finite() && a.reward >= 0.0) {
                return Err(Error::InvalidAgent(format!(
                    "field `actions[{i}].reward` = {} must be finite and >= 0",
                    a.reward
                )));
            }
            if !(a.cost.is_finite() && a.cost >= 0.0) {
                return Err(Error::InvalidAgent(format!(
                    "field `actions[{i}].cost` = {} must be finite and >= 0",
                    a.cost
                )));
            }
        }
        for (i, w) in self.actions.windows(2).enumerate() {
            if w[0].cost >= w[1].cost {
                return Err(Error::InvalidAgent(format!(
                    "field `actions[{}].cost`: costs must be strictly increasing (Assumption 1)",
                    i + 1
                )));
            }
            if w[0].reward >= w[1].reward {
                return Err(Error::InvalidAgent(format!(
                    "field `actions[{}].reward`: rewards must be strictly increasing (Assumption 1)",
                    i + 1
                )));
            }
        }
        let field = |name: &str, e: Error| Error::InvalidAgent(format!("field `{name}`: {e}"));
        let spec = AgentSpec::new(self.actions.clone(), self.kappa_s, 1.0, 0.0)
            .map_err(|e| field("kappa_s", e))?;
        let spec = spec
            .with_kappa_i(self.kappa_i)
            .map_err(|e| field("kappa_i", e))?;
        spec.with_alpha(self.alpha).map_err(|e| field("alpha", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT1: &str = r#"{"agents": [{"name": "a1", "actions": [{"reward": 10, "cost": 2}],
        "kappa_s": 1, "kappa_i": 1, "alpha": 0}]}"#;

    #[test]
    fn parses_with_default_budget() {
        let f = InstanceFile::from_json(UNIT1).unwrap();
        assert_eq!(f.budget, 1);
        let agents = f.agents().unwrap();
        assert_eq!(agents[0].name, "a1");
        assert_eq!(agents[0].spec.max_reward(), 10.0);
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = UNIT1.replace("kappa_i", "kappa_I");
        let err = InstanceFile::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("kappa_I"), "{err}");
        assert!(err.is_invalid_input());
    }

    #[test]
    fn names_agent_field_and_assumption() {
        let text = r#"{"agents": [{"name": "b", "actions": [{"reward": 5, "cost": 2}, {"reward": 4, "cost": 3}],
            "kappa_s": 1, "kappa_i": 1, "alpha": 0}]}"#;
        let msg = InstanceFile::from_json(text)
            .unwrap()
            .agents()
            .unwrap_err()
            .to_string();
        assert!(
            msg.contains("\"b\"")
                && msg.contains("actions[1].reward")
                && msg.contains("Assumption 1"),
            "{msg}"
        );

        let text = UNIT1.replace("\"alpha\": 0", "\"alpha\": 1.5");
        let msg = InstanceFile::from_json(&text)
            .unwrap()
            .agents()
            .unwrap_err()
            .to_string();
        assert!(msg.contains("alpha"), "{msg}");
    }

    #[test]
    fn duplicate_names_and_lookup() {
        let text = r#"{"budget": 2, "agents": [
            {"name": "x", "actions": [{"reward": 1, "cost": 0.5}], "kappa_s": 0.1, "kappa_i": 1, "alpha": 0},
            {"name": "x", "actions": [{"reward": 1, "cost": 0.5}], "kappa_s": 0.1, "kappa_i": 1, "alpha": 0}]}"#;
        assert!(InstanceFile::from_json(text).unwrap().agents().is_err());
        let f = InstanceFile::from_json(UNIT1).unwrap();
        assert!(f.find("a1").is_ok());
        assert!(f.find("zz").is_err());
    }
}
