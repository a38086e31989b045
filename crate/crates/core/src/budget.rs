//! Decoherence and infidelity budgets.
//!
//! Each source is converted to an infidelity per schedule layer and the
//! layers are combined in product form, so the budget of a concatenated
//! schedule is the product of the budgets of its parts.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::atomdata::{sr87, AtomicState, SpeciesError, SpeciesModel};
use crate::compiler::Schedule;

#[derive(Debug, thiserror::Error)]
pub enum BudgetError {
    #[error(transparent)]
    Species(#[from] SpeciesError),
    #[error("no lifetime for level {0:?}")]
    MissingLifetime(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("invalid exposure: {0}")]
    InvalidExposure(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Field fluctuation amplitude ΔB.
    pub delta_b_gauss: f64,
    pub relative_intensity_stability: f64,
    /// Trap frequency entering the zero-point intensity model.
    pub trap_frequency_hz: f64,
    /// Level → lifetime in the combined lattices.
    pub lifetimes_s: BTreeMap<String, f64>,
    /// Two-atom stability window in the transport lattice.
    pub collisional_stability_time_s: f64,
    #[serde(default = "default_qubit")]
    pub qubit_states: (AtomicState, AtomicState),
}

fn default_qubit() -> (AtomicState, AtomicState) {
    (sr87::qubit_zero(), sr87::qubit_one())
}

impl NoiseModel {
    /// ΔB = 1 mG, 10⁻⁶ intensity stability, 25 kHz traps, lifetimes from
    /// the species document and a 100 ms collisional window.
    pub fn reference(species: &SpeciesModel) -> Self {
        let lifetimes_s = species
            .levels
            .iter()
            .filter_map(|l| l.lifetime_s.map(|t| (l.name.clone(), t)))
            .collect();
        NoiseModel {
            delta_b_gauss: 1e-3,
            relative_intensity_stability: 1e-6,
            trap_frequency_hz: 25e3,
            lifetimes_s,
            collisional_stability_time_s: 0.1,
            qubit_states: default_qubit(),
        }
    }

    pub fn validate(&self) -> Result<(), BudgetError> {
        let bad = |m: String| Err(BudgetError::InvalidNoise(m));
        if !(self.delta_b_gauss >= 0.0) || !(self.relative_intensity_stability >= 0.0) {
            return bad("field and intensity fluctuations must be ≥ 0".into());
        }
        if !(self.trap_frequency_hz > 0.0) {
            return bad(format!("trap frequency must be > 0, got {}", self.trap_frequency_hz));
        }
        if !(self.collisional_stability_time_s > 0.0) {
            return bad("collisional stability time must be > 0".into());
        }
        if let Some((level, t)) = self.lifetimes_s.iter().find(|(_, &t)| !(t > 0.0)) {
            return bad(format!("lifetime of {level} must be > 0, got {t}"));
        }
        Ok(())
    }
}

/// Differential Zeeman shift (Hz) of the two qubit states for a field change ΔB.
pub fn magnetic_noise_shift(
    species: &SpeciesModel,
    qubit: (&AtomicState, &AtomicState),
    delta_b_gauss: f64,
) -> Result<f64, SpeciesError> {
    let a = species.zeeman_shift(qubit.0, delta_b_gauss)?;
    let b = species.zeeman_shift(qubit.1, delta_b_gauss)?;
    Ok((a - b).abs())
}

/// Zero-point energy shift from relative intensity noise ε.
///
/// The zero-point energy ω_t/2 scales as √I, so δE = (ω_t/4)·ε with
/// ω_t = 2π·`trap_frequency_hz`.
pub fn intensity_noise_shift(trap_frequency_hz: f64, relative_stability: f64) -> Result<f64, BudgetError> {
    if !(trap_frequency_hz >= 0.0) || !(relative_stability >= 0.0) {
        return Err(BudgetError::InvalidNoise(
            "trap frequency and stability must be ≥ 0".into(),
        ));
    }
    Ok(2.0 * PI * trap_frequency_hz / 4.0 * relative_stability)
}

/// Time spent by one atom in one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occupation {
    pub level: String,
    pub duration_s: f64,
}

impl Occupation {
    pub fn new(level: impl Into<String>, duration_s: f64) -> Self {
        Occupation { level: level.into(), duration_s }
    }
}

/// 1 − Π exp(−d/τ(level)).
pub fn scattering_infidelity(
    timeline: &[Occupation],
    lifetimes_s: &BTreeMap<String, f64>,
) -> Result<f64, BudgetError> {
    let mut exponent = 0.0;
    for occ in timeline {
        if !(occ.duration_s >= 0.0) {
            return Err(BudgetError::InvalidExposure(format!(
                "negative duration {} in {}",
                occ.duration_s, occ.level
            )));
        }
        if occ.duration_s == 0.0 {
            continue;
        }
        let tau = lifetimes_s
            .get(&occ.level)
            .ok_or_else(|| BudgetError::MissingLifetime(occ.level.clone()))?;
        exponent += occ.duration_s / tau;
    }
    Ok(-(-exponent).exp_m1())
}

/// What one schedule layer exposes the atoms to.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayerExposure {
    pub duration_s: f64,
    /// Worst-case per-atom level occupation.
    pub occupation: Vec<Occupation>,
    /// Summed time two atoms share a site.
    pub shared_site_s: f64,
    pub blockade_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetItem {
    pub source: String,
    pub infidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityBudget {
    pub items: Vec<BudgetItem>,
    pub total_fidelity: f64,
}

pub const SOURCES: [&str; 4] = ["scattering", "collisional", "dephasing", "blockade_loss"];

impl FidelityBudget {
    pub fn from_items(items: Vec<BudgetItem>) -> Self {
        let total_fidelity = items.iter().map(|i| 1.0 - i.infidelity).product::<f64>().clamp(0.0, 1.0);
        FidelityBudget { items, total_fidelity }
    }

    /// A budget with every source at zero.
    pub fn perfect() -> Self {
        Self::from_items(
            SOURCES
                .iter()
                .map(|s| BudgetItem { source: s.to_string(), infidelity: 0.0 })
                .collect(),
        )
    }

    pub fn item(&self, source: &str) -> Option<f64> {
        self.items.iter().find(|i| i.source == source).map(|i| i.infidelity)
    }

    /// Product-form combination of two budgets, source by source.
    pub fn combine(&self, other: &FidelityBudget) -> FidelityBudget {
        let mut items = self.items.clone();
        for o in &other.items {
            match items.iter_mut().find(|i| i.source == o.source) {
                Some(i) => i.infidelity = 1.0 - (1.0 - i.infidelity) * (1.0 - o.infidelity),
                None => items.push(o.clone()),
            }
        }
        Self::from_items(items)
    }
}

/// Dephasing rate (Hz) from field and intensity noise.
pub fn dephasing_shift_hz(species: &SpeciesModel, noise: &NoiseModel) -> Result<f64, BudgetError> {
    let (a, b) = &noise.qubit_states;
    let magnetic = magnetic_noise_shift(species, (a, b), noise.delta_b_gauss)?;
    let intensity = intensity_noise_shift(noise.trap_frequency_hz, noise.relative_intensity_stability)?;
    Ok(magnetic + intensity)
}

/// Budget of a single layer.
pub fn layer_budget(
    layer: &LayerExposure,
    noise: &NoiseModel,
    dephasing_hz: f64,
) -> Result<FidelityBudget, BudgetError> {
    if !(layer.duration_s >= 0.0) || !(layer.shared_site_s >= 0.0) {
        return Err(BudgetError::InvalidExposure("durations must be ≥ 0".into()));
    }
    if !(0.0..=1.0).contains(&layer.blockade_loss) {
        return Err(BudgetError::InvalidExposure(format!(
            "blockade loss {} outside [0, 1]",
            layer.blockade_loss
        )));
    }
    let scattering = scattering_infidelity(&layer.occupation, &noise.lifetimes_s)?;
    let collisional = -(-layer.shared_site_s / noise.collisional_stability_time_s).exp_m1();
    let phi = 2.0 * PI * dephasing_hz * layer.duration_s;
    let dephasing = (0.5 * phi * phi).min(1.0);
    let values = [scattering, collisional, dephasing, layer.blockade_loss];
    Ok(FidelityBudget::from_items(
        SOURCES
            .iter()
            .zip(values)
            .map(|(s, v)| BudgetItem { source: s.to_string(), infidelity: v })
            .collect(),
    ))
}

/// Itemized budget over all layers of a schedule. `blockade_loss`, when
/// given, replaces the loss the compiler attached to the layers.
pub fn gate_fidelity_estimate(
    species: &SpeciesModel,
    schedule: &Schedule,
    noise: &NoiseModel,
    blockade_loss: Option<f64>,
) -> Result<FidelityBudget, BudgetError> {
    exposure_budget(species, schedule.layers.iter().map(|l| &l.exposure), noise, blockade_loss)
}

pub fn exposure_budget<'a>(
    species: &SpeciesModel,
    layers: impl IntoIterator<Item = &'a LayerExposure>,
    noise: &NoiseModel,
    blockade_loss: Option<f64>,
) -> Result<FidelityBudget, BudgetError> {
    noise.validate()?;
    let rate = dephasing_shift_hz(species, noise)?;
    let mut budget = FidelityBudget::perfect();
    for layer in layers {
        let mut layer = layer.clone();
        if blockade_loss.is_some() {
            layer.blockade_loss = 0.0;
        }
        budget = budget.combine(&layer_budget(&layer, noise, rate)?);
    }
    if let Some(loss) = blockade_loss {
        let extra = LayerExposure { blockade_loss: loss, ..Default::default() };
        budget = budget.combine(&layer_budget(&extra, noise, rate)?);
    }
    Ok(budget)
}
