//! Backend profiles: the injected solver knowledge. A profile names the
//! native API call for each atom kind (or marks it unsupported), states
//! whether indicator constraints exist, and fixes the epsilon used to close
//! strict inequalities. New solvers whose atom names map one-to-one need
//! only a profile file, no code changes.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::CodegenError;

pub const ATOM_KINDS: &[&str] = &["pow", "exp", "log", "sin", "cos", "abs"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomCapability {
    Native(String),
    Unsupported,
}

impl Serialize for AtomCapability {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AtomCapability::Native(api) => s.serialize_str(api),
            AtomCapability::Unsupported => s.serialize_str("unsupported"),
        }
    }
}

impl<'de> Deserialize<'de> for AtomCapability {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(if raw == "unsupported" {
            AtomCapability::Unsupported
        } else {
            AtomCapability::Native(raw)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendProfile {
    pub name: String,
    pub indicator_support: bool,
    pub strict_inequality_epsilon: f64,
    pub atoms: BTreeMap<String, AtomCapability>,
}

impl BackendProfile {
    /// Built-in Gurobi Python profile: power and exponential atoms map to
    /// the general-constraint API family; log, abs, sin, and cos follow the
    /// same family.
    pub fn gurobi_python() -> BackendProfile {
        let mut atoms = BTreeMap::new();
        atoms.insert("pow".into(), AtomCapability::Native("addGenConstrPow".into()));
        atoms.insert("exp".into(), AtomCapability::Native("addGenConstrExp".into()));
        atoms.insert("log".into(), AtomCapability::Native("addGenConstrLog".into()));
        atoms.insert("abs".into(), AtomCapability::Native("addGenConstrAbs".into()));
        atoms.insert("sin".into(), AtomCapability::Native("addGenConstrSin".into()));
        atoms.insert("cos".into(), AtomCapability::Native("addGenConstrCos".into()));
        BackendProfile {
            name: "gurobi-python".into(),
            indicator_support: true,
            strict_inequality_epsilon: 1e-6,
            atoms,
        }
    }

    /// Loads a profile from TOML or JSON text (tried in that order).
    pub fn from_text(text: &str) -> Result<BackendProfile, CodegenError> {
        let profile: BackendProfile = toml::from_str(text)
            .or_else(|_| serde_json::from_str(text))
            .map_err(|e: serde_json::Error| CodegenError::BadProfile(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    /// Every atom kind must be present in the capability map.
    pub fn validate(&self) -> Result<(), CodegenError> {
        for kind in ATOM_KINDS {
            if !self.atoms.contains_key(*kind) {
                return Err(CodegenError::BadProfile(format!(
                    "profile '{}' is missing atom kind '{}'",
                    self.name, kind
                )));
            }
        }
        if self.strict_inequality_epsilon <= 0.0 {
            return Err(CodegenError::BadProfile(
                "strict_inequality_epsilon must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn api_for(&self, kind: &str) -> Result<&str, CodegenError> {
        match self.atoms.get(kind) {
            Some(AtomCapability::Native(api)) => Ok(api),
            _ => Err(CodegenError::UnsupportedAtomForBackend {
                kind: kind.to_string(),
                backend: self.name.clone(),
            }),
        }
    }
}
