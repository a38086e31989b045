//! JSON form of a register.
//!
//! Input accepts either an `atoms` list (one classical configuration) or
//! explicit `branches`. Output is always the canonical `branches` form,
//! with each branch's probability and phase (mod 2π) and each atom's
//! lattice added for reading.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AtomRecord, Configuration, Lattice, Register, RegisterConfig, RegisterError};
use crate::atomdata::{AtomicState, SpeciesModel};
use crate::units::wrap_phase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDoc {
    pub site: usize,
    #[serde(flatten)]
    pub state: AtomicState,
    #[serde(default)]
    pub lost: bool,
    #[serde(default, skip_deserializing, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDoc {
    /// `[re, im]`.
    pub amplitude: Complex64,
    #[serde(default, skip_deserializing, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    #[serde(default, skip_deserializing, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    pub atoms: Vec<AtomDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterDocument {
    #[serde(flatten)]
    pub config: RegisterConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<Vec<BranchDoc>>,
    #[serde(default)]
    pub time_s: f64,
    #[serde(default, skip_deserializing, skip_serializing_if = "Option::is_none")]
    pub lost_weight: Option<f64>,
}

fn to_config(atoms: &[AtomDoc]) -> Configuration {
    atoms
        .iter()
        .map(|a| AtomRecord { site: a.site, state: a.state.clone(), lost: a.lost })
        .collect()
}

impl RegisterDocument {
    pub fn from_json(text: &str) -> Result<Self, RegisterError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn into_register(self, species: impl Into<std::sync::Arc<SpeciesModel>>) -> Result<Register, RegisterError> {
        let branches = match (self.branches, self.atoms) {
            (Some(_), Some(_)) => {
                return Err(RegisterError::InvalidConfig(
                    "give either atoms or branches, not both".into(),
                ))
            }
            (Some(b), None) => b.into_iter().map(|b| (to_config(&b.atoms), b.amplitude)).collect(),
            (None, Some(a)) => vec![(to_config(&a), Complex64::new(1.0, 0.0))],
            (None, None) => vec![(Vec::new(), Complex64::new(1.0, 0.0))],
        };
        Register::from_branches(species, self.config, branches, self.time_s)
    }
}

impl Register {
    pub fn to_document(&self) -> RegisterDocument {
        let branches = self
            .branches()
            .map(|(cfg, amp)| BranchDoc {
                amplitude: *amp,
                probability: Some(amp.norm_sqr()),
                phase: Some(wrap_phase(amp.arg())),
                atoms: cfg
                    .iter()
                    .map(|r| AtomDoc {
                        site: r.site,
                        state: r.state.clone(),
                        lost: r.lost,
                        lattice: Some(self.lattice_of(r)),
                    })
                    .collect(),
            })
            .collect();
        RegisterDocument {
            config: self.config().clone(),
            atoms: None,
            branches: Some(branches),
            time_s: self.time_s(),
            lost_weight: Some(self.lost_weight()),
        }
    }
}
