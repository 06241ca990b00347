use super::{DataError, Result, Role, VariableSpec, MAX_GROUPS};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupInfo {
    pub id: u8,
    pub name: String,
}

/// Variable manifest, read from TOML:
///
/// ```toml
/// [[group]]
/// id = 1
/// name = "NIPA"
///
/// [[variable]]
/// name = "GDPC1"
/// group = 1
/// tcode = 5
/// speed = "slow"
/// role = "panel_x"
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default, rename = "group")]
    pub groups: Vec<GroupInfo>,
    #[serde(default, rename = "variable")]
    pub variables: Vec<VariableSpec>,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(DataError::Manifest("no variables declared".into()));
        }
        let mut names = HashSet::new();
        for v in &self.variables {
            if v.name.trim().is_empty() {
                return Err(DataError::Manifest("empty variable name".into()));
            }
            if !names.insert(v.name.as_str()) {
                return Err(DataError::Manifest(format!("duplicate variable '{}'", v.name)));
            }
            match (v.role, v.group) {
                (Role::PanelX, None) => {
                    return Err(DataError::Manifest(format!("panel variable '{}' has no group", v.name)))
                }
                (_, Some(g)) if g == 0 || g > MAX_GROUPS => {
                    return Err(DataError::Manifest(format!(
                        "variable '{}' has group {g}, outside 1..={MAX_GROUPS}",
                        v.name
                    )))
                }
                _ => {}
            }
        }
        let mut ids = HashSet::new();
        for g in &self.groups {
            if g.id == 0 || g.id > MAX_GROUPS || !ids.insert(g.id) {
                return Err(DataError::Manifest(format!("bad or duplicate group id {}", g.id)));
            }
        }
        Ok(())
    }

    pub fn group_name(&self, id: u8) -> String {
        self.groups.iter().find(|g| g.id == id).map(|g| g.name.clone()).unwrap_or_else(|| format!("group{id}"))
    }

    /// Looks a group up by name or by its numeric id.
    pub fn resolve_group(&self, key: &str) -> Option<u8> {
        if let Some(g) = self.groups.iter().find(|g| g.name == key) {
            return Some(g.id);
        }
        key.parse::<u8>().ok().filter(|id| self.variables.iter().any(|v| v.group == Some(*id)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let m: Manifest = toml::from_str(text).map_err(|e| DataError::Manifest(e.to_string()))?;
    m.validate()?;
    Ok(m)
}
