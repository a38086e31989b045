//! The physical operation vocabulary and its JSON form.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::atomdata::AtomicState;

/// Which atoms a pulse addresses.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Target {
    #[default]
    Global,
    Sites(Vec<usize>),
}

impl Target {
    pub fn site(site: usize) -> Self {
        Target::Sites(vec![site])
    }

    pub fn is_global(&self) -> bool {
        matches!(self, Target::Global)
    }

    pub fn contains(&self, site: usize) -> bool {
        match self {
            Target::Global => true,
            Target::Sites(s) => s.contains(&site),
        }
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Target::Global => s.serialize_str("global"),
            Target::Sites(v) if v.len() == 1 => s.serialize_u64(v[0] as u64),
            Target::Sites(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            One(usize),
            Many(Vec<usize>),
        }
        match Repr::deserialize(d)? {
            Repr::Text(t) if t == "global" => Ok(Target::Global),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "target must be \"global\", a site index or a list of sites, got {t:?}"
            ))),
            Repr::One(i) => Ok(Target::Sites(vec![i])),
            Repr::Many(v) => Ok(Target::Sites(v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseOp {
    pub from: AtomicState,
    pub to: AtomicState,
    /// Rotation angle θ in radians.
    pub area: f64,
    #[serde(default)]
    pub target: Target,
    #[serde(default)]
    pub detuning_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    /// Phase φ of the drive: R(θ, φ) = exp(−iθ/2 (cos φ X + sin φ Y)).
    #[serde(default)]
    pub laser_phase: f64,
    /// Interaction shift felt when another atom on the site is already in `to`.
    #[serde(default)]
    pub delta_u_hz: f64,
    /// Two-body loss rate (as 2π × `gamma_hz` per second) on a doubly occupied `to` level.
    #[serde(default)]
    pub gamma_hz: f64,
}

impl PulseOp {
    pub fn new(from: AtomicState, to: AtomicState, area: f64, target: Target) -> Self {
        PulseOp {
            from,
            to,
            area,
            target,
            detuning_hz: 0.0,
            rabi_hz: None,
            duration_s: None,
            laser_phase: 0.0,
            delta_u_hz: 0.0,
            gamma_hz: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferDirection {
    StorageToTransport,
    TransportToStorage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferOp {
    pub direction: TransferDirection,
    /// 0 or 1: which qubit state is moved.
    pub qubit_selector: u8,
    #[serde(default)]
    pub site_selective: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sites: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftOp {
    pub delta_sites: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    #[serde(alias = "U", default)]
    pub u_hz: f64,
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub gamma_hz: f64,
}

fn yes() -> bool {
    true
}

impl Default for Collision {
    fn default() -> Self {
        Collision { u_hz: 0.0, enabled: false, gamma_hz: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldOp {
    pub duration_s: f64,
    #[serde(default)]
    pub collision: Collision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureOp {
    pub site: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetGradientOp {
    pub gradient_g_per_cm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProtocolOp {
    Pulse(PulseOp),
    Transfer(TransferOp),
    Shift(ShiftOp),
    Hold(HoldOp),
    Measure(MeasureOp),
    SetGradient(SetGradientOp),
}

impl ProtocolOp {
    pub fn kind(&self) -> &'static str {
        match self {
            ProtocolOp::Pulse(_) => "pulse",
            ProtocolOp::Transfer(_) => "transfer",
            ProtocolOp::Shift(_) => "shift",
            ProtocolOp::Hold(_) => "hold",
            ProtocolOp::Measure(_) => "measure",
            ProtocolOp::SetGradient(_) => "set_gradient",
        }
    }

    pub fn transfer(direction: TransferDirection, qubit: u8, sites: Option<Vec<usize>>) -> Self {
        ProtocolOp::Transfer(TransferOp {
            direction,
            qubit_selector: qubit,
            site_selective: sites.is_some(),
            sites: sites.unwrap_or_default(),
            duration_s: None,
        })
    }

    pub fn shift(delta_sites: i64) -> Self {
        ProtocolOp::Shift(ShiftOp { delta_sites, duration_s: None })
    }

    pub fn hold(duration_s: f64, u_hz: f64) -> Self {
        ProtocolOp::Hold(HoldOp {
            duration_s,
            collision: Collision { u_hz, enabled: true, gamma_hz: 0.0 },
        })
    }

    /// Sets the duration on ops that carry one; holds keep theirs.
    pub fn with_duration(mut self, duration_s: f64) -> Self {
        match &mut self {
            ProtocolOp::Pulse(p) => p.duration_s = Some(duration_s),
            ProtocolOp::Transfer(t) => t.duration_s = Some(duration_s),
            ProtocolOp::Shift(s) => s.duration_s = Some(duration_s),
            ProtocolOp::Hold(_) | ProtocolOp::Measure(_) | ProtocolOp::SetGradient(_) => {}
        }
        self
    }

    /// Explicit duration, if the op carries one.
    pub fn duration_s(&self) -> Option<f64> {
        match self {
            ProtocolOp::Pulse(p) => p.duration_s,
            ProtocolOp::Transfer(t) => t.duration_s,
            ProtocolOp::Shift(s) => s.duration_s,
            ProtocolOp::Hold(h) => Some(h.duration_s),
            ProtocolOp::Measure(_) | ProtocolOp::SetGradient(_) => Some(0.0),
        }
    }
}
