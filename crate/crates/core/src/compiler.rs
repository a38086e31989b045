//! Lowering of small circuits into timed protocol schedules.
//!
//! Qubit q sits on site q. Gates sharing a `moment` that are adjacent in
//! the gate list form one layer; every other gate is a layer of its own.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::atomdata::{SpeciesError, SpeciesModel};
use crate::blockade::{blockade_gate_outcome, BlockadeError, BlockadeParams};
use crate::budget::{gate_fidelity_estimate, BudgetError, FidelityBudget, LayerExposure, NoiseModel, Occupation};
use crate::register::{
    blockade_ops, collisional_ops, BlockadePulses, Encoding, ProtocolOp, PulseOp, Register, RegisterConfig,
    RegisterError, Target, TimingConstraint,
};
use crate::units::wrap_phase;

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("invalid device: {0}")]
    InvalidDevice(String),
    #[error("qubit {qubit} is used twice in moment {moment}")]
    OverlappingTargets { moment: usize, qubit: usize },
    #[error("unschedulable: {0}")]
    Unschedulable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("schedule verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Register(#[from] RegisterError),
    #[error(transparent)]
    Species(#[from] SpeciesError),
    #[error(transparent)]
    Blockade(#[from] BlockadeError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "RZ")]
    Rz,
    #[serde(rename = "RX")]
    Rx,
    #[serde(rename = "CZ")]
    Cz,
    #[serde(rename = "CZ_layer")]
    CzLayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    /// Qubit indices; `CZ_layer` ignores them and acts on every qubit.
    #[serde(default)]
    pub targets: Vec<usize>,
    /// Rotation angle, or the conditional phase of a CZ (π when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment: Option<usize>,
}

impl Gate {
    pub fn rx(q: usize, angle: f64) -> Self {
        Gate { kind: GateKind::Rx, targets: vec![q], angle: Some(angle), moment: None }
    }

    pub fn rz(q: usize, angle: f64) -> Self {
        Gate { kind: GateKind::Rz, targets: vec![q], angle: Some(angle), moment: None }
    }

    pub fn cz(i: usize, j: usize) -> Self {
        Gate { kind: GateKind::Cz, targets: vec![i, j], angle: None, moment: None }
    }

    pub fn cz_layer() -> Self {
        Gate { kind: GateKind::CzLayer, targets: Vec::new(), angle: None, moment: None }
    }

    pub fn at(mut self, moment: usize) -> Self {
        self.moment = Some(moment);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    #[serde(default)]
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Self {
        Circuit { n_qubits, gates }
    }

    pub fn from_json(text: &str) -> Result<Self, CompileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<(), CompileError> {
        let bad = |m: String| Err(CompileError::InvalidCircuit(m));
        for (k, g) in self.gates.iter().enumerate() {
            let arity = match g.kind {
                GateKind::Rx | GateKind::Rz => 1,
                GateKind::Cz => 2,
                GateKind::CzLayer => 0,
            };
            if g.kind != GateKind::CzLayer && g.targets.len() != arity {
                return bad(format!("gate {k} ({:?}) needs {arity} target(s), got {}", g.kind, g.targets.len()));
            }
            if let Some(&q) = g.targets.iter().find(|&&q| q >= self.n_qubits) {
                return bad(format!("gate {k} targets qubit {q} of {}", self.n_qubits));
            }
            if g.kind == GateKind::Cz && g.targets[0] == g.targets[1] {
                return bad(format!("gate {k}: CZ targets must differ"));
            }
            if matches!(g.kind, GateKind::Rx | GateKind::Rz) && g.angle.is_none() {
                return bad(format!("gate {k} ({:?}) needs an angle", g.kind));
            }
            if g.angle.is_some_and(|a| !a.is_finite()) {
                return bad(format!("gate {k} has a non-finite angle"));
            }
        }
        Ok(())
    }
}

fn default_spacing() -> f64 {
    344.6
}
fn default_trap() -> f64 {
    25e3
}
fn default_gradient() -> f64 {
    100.0
}
fn default_margin() -> f64 {
    10.0
}
fn default_transport() -> f64 {
    50e-6
}
fn default_depths() -> [f64; 2] {
    [2.0 / 3.0, 1.0 / 3.0]
}
fn default_u() -> f64 {
    1e3
}
fn default_rabi() -> f64 {
    200.0
}
fn default_gamma() -> f64 {
    20e3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateMechanism {
    Collisional {
        #[serde(default = "default_u", alias = "U")]
        u_hz: f64,
        /// Fixed hold time; otherwise T = angle / (2πU).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hold_s: Option<f64>,
    },
    Blockade {
        #[serde(default = "default_rabi")]
        rabi_hz: f64,
        #[serde(default)]
        delta_u_hz: f64,
        #[serde(default = "default_gamma")]
        gamma_hz: f64,
    },
}

impl Default for GateMechanism {
    fn default() -> Self {
        GateMechanism::Collisional { u_hz: default_u(), hold_s: None }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Routing {
    /// The partner's |0⟩ must land on a free site.
    #[default]
    Direct,
    /// Park the partner's |0⟩ on a free storage site around the gate.
    Park,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub n_sites: usize,
    #[serde(default = "default_spacing")]
    pub spacing_nm: f64,
    #[serde(default = "default_trap")]
    pub trap_frequency_hz: f64,
    /// Depth of each lattice relative to the combined depth; the shallower
    /// one lowers the trap frequency by √fraction.
    #[serde(default = "default_depths")]
    pub readout_depth_fractions: [f64; 2],
    #[serde(default = "default_gradient")]
    pub gradient_g_per_cm: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_transport")]
    pub transport_time_per_site_s: f64,
    #[serde(default)]
    pub gate_mechanism: GateMechanism,
    #[serde(default)]
    pub routing: Routing,
}

impl Device {
    pub fn new(n_sites: usize) -> Self {
        Device {
            n_sites,
            spacing_nm: default_spacing(),
            trap_frequency_hz: default_trap(),
            readout_depth_fractions: default_depths(),
            gradient_g_per_cm: default_gradient(),
            margin: default_margin(),
            transport_time_per_site_s: default_transport(),
            gate_mechanism: GateMechanism::default(),
            routing: Routing::Direct,
        }
    }

    pub fn with_mechanism(mut self, mechanism: GateMechanism) -> Self {
        self.gate_mechanism = mechanism;
        self
    }

    pub fn blockade(n_sites: usize, params: &BlockadeParams) -> Self {
        let p = BlockadePulses::from_params(params);
        Device::new(n_sites).with_mechanism(GateMechanism::Blockade {
            rabi_hz: p.rabi_hz,
            delta_u_hz: p.delta_u_hz,
            gamma_hz: p.gamma_hz,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CompileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn register_config(&self) -> RegisterConfig {
        let mut c = RegisterConfig::new(self.n_sites).with_gradient(self.gradient_g_per_cm);
        c.spacing_nm = self.spacing_nm;
        c.trap_frequency_hz = self.trap_frequency_hz;
        c.margin = self.margin;
        c.transport_time_per_site_s = self.transport_time_per_site_s;
        c
    }

    pub fn validate(&self) -> Result<(), CompileError> {
        let bad = |m: String| Err(CompileError::InvalidDevice(m));
        if self.n_sites == 0 {
            return bad("device needs at least one site".into());
        }
        if !(self.gradient_g_per_cm > 0.0) {
            return bad("site-selective transfers need a gradient > 0".into());
        }
        if self.readout_depth_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return bad("depth fractions must lie in (0, 1]".into());
        }
        match self.gate_mechanism {
            GateMechanism::Collisional { u_hz, hold_s } => {
                if !(u_hz >= 0.0) || hold_s.is_some_and(|t| !(t >= 0.0)) {
                    return bad("U and hold time must be ≥ 0".into());
                }
            }
            GateMechanism::Blockade { rabi_hz, delta_u_hz, gamma_hz } => {
                if !(rabi_hz > 0.0) || !(gamma_hz >= 0.0) || !delta_u_hz.is_finite() {
                    return bad("blockade needs Ω > 0, Γ ≥ 0 and finite Δ_U".into());
                }
            }
        }
        self.register_config().validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub gates: Vec<Gate>,
    pub ops: Vec<ProtocolOp>,
    pub duration_s: f64,
    pub exposure: LayerExposure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub layers: Vec<Layer>,
    pub total_duration_s: f64,
    pub device: Device,
}

impl Schedule {
    pub fn empty(device: Device) -> Self {
        Schedule { layers: Vec::new(), total_duration_s: 0.0, device }
    }

    /// All ops in execution order.
    pub fn ops(&self) -> Vec<ProtocolOp> {
        self.layers.iter().flat_map(|l| l.ops.iter().cloned()).collect()
    }

    pub fn from_json(text: &str) -> Result<Self, CompileError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn schedule_duration(schedule: &Schedule) -> f64 {
    schedule.layers.iter().map(|l| l.duration_s).sum()
}

/// Durations used for each class of op.
#[derive(Debug, Clone, Copy)]
struct Timings {
    selective_s: f64,
    global_s: f64,
    per_site_s: f64,
    /// Auxiliary blockade π pulse in the shallowest lattice.
    aux_s: f64,
}

impl Timings {
    fn shift(&self, d: i64) -> f64 {
        d.unsigned_abs() as f64 * self.per_site_s
    }
}

fn timings(species: &SpeciesModel, device: &Device) -> Result<Timings, CompileError> {
    let enc = Encoding::default();
    let split = species.gradient_site_splitting(&enc.readout_zero, device.gradient_g_per_cm, device.spacing_nm)?;
    let selective = TimingConstraint::new(device.trap_frequency_hz, Some(split), device.margin)?;
    let global = TimingConstraint::new(device.trap_frequency_hz, None, device.margin)?;
    let shallow = device.readout_depth_fractions.iter().cloned().fold(f64::INFINITY, f64::min);
    let slow_trap = device.trap_frequency_hz * shallow.sqrt();
    Ok(Timings {
        selective_s: selective.min_duration(),
        global_s: global.min_duration(),
        per_site_s: device.transport_time_per_site_s,
        aux_s: TimingConstraint::new(slow_trap, None, device.margin)?.min_duration(),
    })
}

struct Lowering<'a> {
    species: &'a SpeciesModel,
    device: &'a Device,
    enc: Encoding,
    n_qubits: usize,
    t: Timings,
}

fn rotation(enc: &Encoding, site: Vec<usize>, area: f64, phase: f64, duration_s: f64) -> ProtocolOp {
    let (area, phase) = if area < 0.0 { (-area, phase + PI) } else { (area, phase) };
    let mut p = PulseOp::new(enc.zero.clone(), enc.one.clone(), area, Target::Sites(site));
    p.laser_phase = wrap_phase(phase);
    p.duration_s = Some(duration_s);
    ProtocolOp::Pulse(p)
}

impl Lowering<'_> {
    fn idle(&self, busy: &BTreeSet<usize>, duration_s: f64) -> Vec<Occupation> {
        (0..self.n_qubits)
            .filter(|q| !busy.contains(q))
            .map(|_| Occupation::new(self.enc.zero.level.clone(), duration_s))
            .collect()
    }

    fn single_qubit(&self, gates: &[Gate]) -> Layer {
        // Gates with the same kind and angle share one addressed pulse set.
        let mut groups: Vec<(GateKind, f64, Vec<usize>)> = Vec::new();
        for g in gates {
            let a = g.angle.unwrap_or(0.0);
            match groups.iter_mut().find(|(k, x, _)| *k == g.kind && *x == a) {
                Some((_, _, sites)) => sites.push(g.targets[0]),
                None => groups.push((g.kind, a, vec![g.targets[0]])),
            }
        }
        let t = self.t.selective_s;
        let mut ops = Vec::new();
        for (kind, angle, sites) in groups {
            match kind {
                GateKind::Rx => ops.push(rotation(&self.enc, sites, angle, 0.0, t)),
                _ => {
                    ops.push(rotation(&self.enc, sites.clone(), PI / 2.0, PI, t));
                    ops.push(rotation(&self.enc, sites.clone(), angle, PI / 2.0, t));
                    ops.push(rotation(&self.enc, sites, PI / 2.0, 0.0, t));
                }
            }
        }
        let duration_s = ops.iter().filter_map(|o| o.duration_s()).sum();
        let exposure = LayerExposure {
            duration_s,
            occupation: self.idle(&BTreeSet::new(), duration_s),
            ..Default::default()
        };
        Layer { gates: gates.to_vec(), ops, duration_s, exposure }
    }

    fn hold_time(&self, angle: f64, u_hz: f64, hold_s: Option<f64>) -> Result<f64, CompileError> {
        if let Some(t) = hold_s {
            return Ok(t);
        }
        let phi = wrap_phase(angle);
        if phi == 0.0 {
            return Ok(0.0);
        }
        if u_hz <= 0.0 {
            return Err(CompileError::Unschedulable("a nonzero phase needs U > 0".into()));
        }
        Ok(phi / (2.0 * PI * u_hz))
    }

    /// Ops between the outbound and return transfers, plus the time two
    /// atoms share a site and the time spent in the readout level.
    fn interaction(&self, sites: Option<Vec<usize>>, d: i64, angle: f64) -> Result<(Vec<ProtocolOp>, f64, f64, f64), CompileError> {
        let transfer_s = if sites.is_some() { self.t.selective_s } else { self.t.global_s };
        let shift_s = self.t.shift(d);
        match self.device.gate_mechanism {
            GateMechanism::Collisional { u_hz, hold_s } => {
                let hold = self.hold_time(angle, u_hz, hold_s)?;
                let ops = timed(collisional_ops(sites, d, u_hz, hold), &[transfer_s, shift_s, hold, shift_s, transfer_s]);
                Ok((ops, hold, 0.0, 0.0))
            }
            GateMechanism::Blockade { rabi_hz, delta_u_hz, gamma_hz } => {
                if (wrap_phase(angle) - PI).abs() > 1e-12 {
                    return Err(CompileError::Unsupported(format!(
                        "blockade CZ has a fixed phase π, got {angle}"
                    )));
                }
                let pulses = BlockadePulses {
                    rabi_hz,
                    delta_u_hz,
                    gamma_hz,
                    aux_pulse_s: Some(self.t.aux_s),
                    area_scale: 1.0,
                };
                let two_pi = 1.0 / rabi_hz;
                let floor = if sites.is_some() { self.t.selective_s } else { self.t.global_s };
                if two_pi < floor * (1.0 - 1e-12) {
                    return Err(CompileError::Unschedulable(format!(
                        "2π pulse of {two_pi} s is shorter than the {floor} s timing floor"
                    )));
                }
                let params = BlockadeParams::from_hz(rabi_hz, delta_u_hz, gamma_hz)?;
                let loss = blockade_gate_outcome(&params)?.loss_01;
                let ops = blockade_ops(sites, d, &self.enc, &pulses);
                let ops = timed(ops, &[transfer_s, shift_s, self.t.aux_s, two_pi, self.t.aux_s, shift_s, transfer_s]);
                // The co-located pair sits in ³P₀ + ¹S₀ only around the
                // auxiliary pulses; loss during the 2π pulse is `loss`.
                let readout = 2.0 * self.t.aux_s + two_pi;
                Ok((ops, 2.0 * self.t.aux_s, readout, loss))
            }
        }
    }

    fn cz_group(&self, gates: &[Gate]) -> Result<Layer, CompileError> {
        let d = gates[0].targets[1] as i64 - gates[0].targets[0] as i64;
        if let Some(g) = gates.iter().find(|g| g.targets[1] as i64 - g.targets[0] as i64 != d) {
            return Err(CompileError::Unschedulable(format!(
                "parallel CZs must share one displacement; {:?} differs from {d}",
                g.targets
            )));
        }
        let angle = gates[0].angle.unwrap_or(PI);
        if gates.iter().any(|g| g.angle.unwrap_or(PI) != angle) {
            return Err(CompileError::Unschedulable("parallel CZs must share one phase".into()));
        }
        let mut blocked = Vec::new();
        for g in gates {
            let landing = 2 * g.targets[1] as i64 - g.targets[0] as i64;
            if landing < 0 || landing >= self.device.n_sites as i64 || (landing as usize) < self.n_qubits {
                blocked.push((g, landing));
            }
        }
        if !blocked.is_empty() {
            if self.device.routing == Routing::Park && gates.len() == 1 {
                return self.parked_cz(&gates[0], angle);
            }
            let (g, landing) = blocked[0];
            return Err(CompileError::Unschedulable(format!(
                "CZ{:?} moves the partner's |0⟩ to site {landing}, which is occupied or off the register",
                g.targets
            )));
        }
        let mut sites: Vec<usize> = gates.iter().flat_map(|g| g.targets.iter().cloned()).collect();
        sites.sort_unstable();
        let busy: BTreeSet<usize> = sites.iter().cloned().collect();
        let (ops, shared, readout, loss) = self.interaction(Some(sites), d, angle)?;
        Ok(self.finish(gates.to_vec(), ops, &busy, gates.len() as f64, shared, readout, loss))
    }

    /// CZ whose partner |0⟩ would land on an occupied site: park it on the
    /// nearest free site first (collisional mechanism only).
    fn parked_cz(&self, g: &Gate, angle: f64) -> Result<Layer, CompileError> {
        if !matches!(self.device.gate_mechanism, GateMechanism::Collisional { .. }) {
            return Err(CompileError::Unsupported("parking is only available for collisional gates".into()));
        }
        let (i, j) = (g.targets[0], g.targets[1]);
        let park = (self.n_qubits..self.device.n_sites)
            .min_by_key(|&f| f.abs_diff(j))
            .ok_or_else(|| CompileError::Unschedulable("no free site to park on".into()))?;
        let sel = self.t.selective_s;
        let out = park as i64 - j as i64;
        use crate::register::TransferDirection::{StorageToTransport as In, TransportToStorage as Back};
        let mv = |from: usize, to: usize, d: i64| {
            timed(
                vec![
                    ProtocolOp::transfer(In, 0, Some(vec![from])),
                    ProtocolOp::shift(d),
                    ProtocolOp::transfer(Back, 0, Some(vec![to])),
                ],
                &[sel, self.t.shift(d), sel],
            )
        };
        let (gate_ops, shared, readout, loss) = self.interaction(Some(vec![i]), j as i64 - i as i64, angle)?;
        let mut ops = mv(j, park, out);
        ops.extend(gate_ops);
        ops.extend(mv(park, j, -out));
        let busy: BTreeSet<usize> = [i, j].into_iter().collect();
        Ok(self.finish(vec![g.clone()], ops, &busy, 1.0, shared, readout, loss))
    }

    fn cz_layer(&self, g: &Gate) -> Result<Layer, CompileError> {
        if self.device.n_sites <= self.n_qubits {
            return Err(CompileError::Unschedulable(format!(
                "CZ_layer needs a free site past the last qubit ({} qubits on {} sites)",
                self.n_qubits, self.device.n_sites
            )));
        }
        let angle = g.angle.unwrap_or(PI);
        let (ops, shared, readout, loss) = self.interaction(None, 1, angle)?;
        let busy: BTreeSet<usize> = (0..self.n_qubits).collect();
        let pairs = self.n_qubits.saturating_sub(1) as f64;
        Ok(self.finish(vec![g.clone()], ops, &busy, pairs, shared, readout, loss))
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        gates: Vec<Gate>,
        ops: Vec<ProtocolOp>,
        busy: &BTreeSet<usize>,
        pairs: f64,
        shared: f64,
        readout: f64,
        loss: f64,
    ) -> Layer {
        let duration_s: f64 = ops.iter().filter_map(|o| o.duration_s()).sum();
        let mut occupation = self.idle(busy, duration_s);
        for _ in busy {
            occupation.push(Occupation::new(self.enc.clock_level.clone(), duration_s - readout));
            if readout > 0.0 {
                occupation.push(Occupation::new(self.enc.readout_zero.level.clone(), readout));
            }
        }
        let exposure = LayerExposure {
            duration_s,
            occupation,
            shared_site_s: pairs * shared,
            blockade_loss: 1.0 - (1.0 - loss).powf(pairs),
        };
        Layer { gates, ops, duration_s, exposure }
    }
}

fn timed(ops: Vec<ProtocolOp>, durations: &[f64]) -> Vec<ProtocolOp> {
    ops.into_iter()
        .zip(durations)
        .map(|(op, &t)| match op {
            ProtocolOp::Hold(_) => op,
            op => op.with_duration(t),
        })
        .collect()
}

/// Splits the gate list into layers and checks each moment.
fn moments(circuit: &Circuit) -> Result<Vec<Vec<Gate>>, CompileError> {
    let mut layers: Vec<Vec<Gate>> = Vec::new();
    let mut seen = BTreeSet::new();
    for g in &circuit.gates {
        match (g.moment, layers.last_mut()) {
            (Some(m), Some(last)) if last[0].moment == Some(m) => last.push(g.clone()),
            (m, _) => {
                if let Some(m) = m {
                    if !seen.insert(m) {
                        return Err(CompileError::InvalidCircuit(format!("moment {m} is not contiguous")));
                    }
                }
                layers.push(vec![g.clone()]);
            }
        }
    }
    for layer in &layers {
        let m = layer[0].moment.unwrap_or(0);
        if layer.len() > 1 {
            let first = layer[0].kind;
            let two = |k| matches!(k, GateKind::Cz | GateKind::CzLayer);
            if layer.iter().any(|g| two(g.kind) != two(first)) || layer.iter().any(|g| g.kind == GateKind::CzLayer) {
                return Err(CompileError::Unschedulable(format!(
                    "moment {m} mixes gate types; CZ_layer and single-qubit gates need their own moment"
                )));
            }
        }
        let mut used = BTreeSet::new();
        for g in layer {
            let mut footprint = g.targets.clone();
            if g.kind == GateKind::Cz && layer.len() > 1 {
                let landing = 2 * g.targets[1] as i64 - g.targets[0] as i64;
                if landing >= 0 {
                    footprint.push(landing as usize);
                }
            }
            for q in footprint {
                if !used.insert(q) {
                    return Err(CompileError::OverlappingTargets { moment: m, qubit: q });
                }
            }
        }
    }
    Ok(layers)
}

/// Compiles with the bundled ⁸⁷Sr data.
pub fn compile_circuit(circuit: &Circuit, device: &Device) -> Result<Schedule, CompileError> {
    compile_with_species(Arc::new(SpeciesModel::sr87()), circuit, device)
}

pub fn compile_with_species(
    species: Arc<SpeciesModel>,
    circuit: &Circuit,
    device: &Device,
) -> Result<Schedule, CompileError> {
    circuit.validate()?;
    device.validate()?;
    if circuit.n_qubits > device.n_sites {
        return Err(CompileError::InvalidCircuit(format!(
            "{} qubits do not fit on {} sites",
            circuit.n_qubits, device.n_sites
        )));
    }
    let lowering = Lowering {
        species: &species,
        device,
        enc: Encoding::default(),
        n_qubits: circuit.n_qubits,
        t: timings(&species, device)?,
    };
    let mut layers = Vec::new();
    for gates in moments(circuit)? {
        let layer = match gates[0].kind {
            GateKind::Rx | GateKind::Rz => lowering.single_qubit(&gates),
            GateKind::Cz => lowering.cz_group(&gates)?,
            GateKind::CzLayer => lowering.cz_layer(&gates[0])?,
        };
        layers.push(layer);
    }
    let _ = lowering.species;
    let total_duration_s = layers.iter().map(|l| l.duration_s).sum();
    let schedule = Schedule { layers, total_duration_s, device: device.clone() };
    verify(&species, &schedule, circuit.n_qubits)?;
    Ok(schedule)
}

/// Runs the schedule from all-0, all-1 and alternating inputs and checks
/// that every surviving branch has its atoms back on their home sites.
pub fn verify(species: &Arc<SpeciesModel>, schedule: &Schedule, n_qubits: usize) -> Result<(), CompileError> {
    if schedule.layers.is_empty() {
        return Ok(());
    }
    let ops = schedule.ops();
    let inputs: [Box<dyn Fn(usize) -> u8>; 3] = [Box::new(|_| 0), Box::new(|_| 1), Box::new(|q| (q % 2) as u8)];
    for input in inputs.iter() {
        let qubits: Vec<(usize, u8)> = (0..n_qubits).map(|q| (q, input(q))).collect();
        let mut reg = Register::basis(species.clone(), schedule.device.register_config(), &qubits)?;
        reg.run(&ops)?;
        let home: Vec<usize> = (0..n_qubits).collect();
        for (cfg, _) in reg.branches() {
            if cfg.iter().any(|r| r.lost) {
                continue;
            }
            let sites: Vec<usize> = cfg.iter().map(|r| r.site).collect();
            if sites != home {
                return Err(CompileError::Verification(format!(
                    "atoms end on sites {sites:?} instead of {home:?}"
                )));
            }
        }
    }
    Ok(())
}

/// Budget of a compiled schedule with the bundled ⁸⁷Sr data.
pub fn price(schedule: &Schedule, noise: &NoiseModel) -> Result<FidelityBudget, CompileError> {
    Ok(gate_fidelity_estimate(&SpeciesModel::sr87(), schedule, noise, None)?)
}
