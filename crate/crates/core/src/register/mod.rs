//! Dual-lattice register state machine.
//!
//! The register state is a sparse superposition of classical
//! configurations. A configuration lists, for every atom, its site, its
//! internal state and a lost flag; lattice membership follows from the
//! level (ground → storage, clock → transport, readout → both). Ops map
//! configurations to weighted sums of configurations, so pulses of any
//! area and the lossy blocked step are represented exactly.

mod document;
mod ops;
mod protocols;
mod timing;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atomdata::{sr87, AtomicState, SpeciesError, SpeciesModel};
use crate::blockade::{propagator, BlockadeError, BlockadeParams};
use crate::units::nm_to_cm;

pub use document::{AtomDoc, BranchDoc, RegisterDocument};
pub use ops::{
    Collision, HoldOp, MeasureOp, ProtocolOp, PulseOp, SetGradientOp, ShiftOp, Target,
    TransferDirection, TransferOp,
};
pub use protocols::{
    blockade_gate_ops, blockade_gate_truth_table, blockade_ops, collisional_ops, execute_truth_table, phase_gate_ops,
    phase_gate_truth_table, truth_table_register, BlockadePulses, BlockadeTruthTable, TruthTable,
};
pub use timing::{validate_transfer_timing, TimingCheck, TimingConstraint, DEFAULT_MARGIN};

/// Branches with |amplitude| below this are dropped.
const PRUNE_AMPLITUDE: f64 = 1e-14;

#[derive(Debug, thiserror::Error)]
pub enum RegisterError {
    #[error(transparent)]
    Species(#[from] SpeciesError),
    #[error(transparent)]
    Blockade(#[from] BlockadeError),
    #[error("malformed register document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid register configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid op: {0}")]
    InvalidOp(String),
    #[error("slot ({site}, {lattice:?}) is already occupied")]
    OccupiedSlot { site: usize, lattice: Lattice },
    #[error("shift moves an atom to site {site}, outside 0..{n_sites}")]
    OffRegister { site: i64, n_sites: usize },
    #[error("site-selective op requires a nonzero field gradient")]
    NoGradient,
    #[error("op {index} ({kind}) failed: {cause}")]
    Aborted {
        index: usize,
        kind: &'static str,
        cause: Box<RegisterError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lattice {
    Storage,
    Transport,
    Both,
}

impl Lattice {
    fn slots(self) -> &'static [Lattice] {
        match self {
            Lattice::Storage => &[Lattice::Storage],
            Lattice::Transport => &[Lattice::Transport],
            // Readout-level atoms only appear inside gate windows.
            Lattice::Both => &[],
        }
    }
}

/// Which internal states carry the qubit and its readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub zero: AtomicState,
    pub one: AtomicState,
    /// Level trapped only by the transport lattice.
    pub clock_level: String,
    pub readout_zero: AtomicState,
    pub readout_one: AtomicState,
}

impl Default for Encoding {
    fn default() -> Self {
        Encoding {
            zero: sr87::qubit_zero(),
            one: sr87::qubit_one(),
            clock_level: sr87::CLOCK.to_string(),
            readout_zero: sr87::readout_zero(),
            readout_one: sr87::readout_one(),
        }
    }
}

impl Encoding {
    pub fn qubit(&self, bit: u8) -> Result<&AtomicState, RegisterError> {
        match bit {
            0 => Ok(&self.zero),
            1 => Ok(&self.one),
            _ => Err(RegisterError::InvalidOp(format!("qubit selector must be 0 or 1, got {bit}"))),
        }
    }

    /// The transport-lattice image of a storage qubit state.
    pub fn clock_of(&self, state: &AtomicState) -> AtomicState {
        AtomicState::nuclear(self.clock_level.clone(), state.m)
    }

    pub fn lattice_of(&self, state: &AtomicState) -> Lattice {
        if state.level == self.clock_level {
            Lattice::Transport
        } else if state.level == self.readout_zero.level {
            Lattice::Both
        } else {
            Lattice::Storage
        }
    }
}

fn default_spacing() -> f64 {
    344.6
}
fn default_trap() -> f64 {
    25e3
}
fn default_margin() -> f64 {
    DEFAULT_MARGIN
}
fn default_transport_time() -> f64 {
    50e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterConfig {
    pub n_sites: usize,
    #[serde(default = "default_spacing")]
    pub spacing_nm: f64,
    #[serde(default)]
    pub b_gauss: f64,
    #[serde(default)]
    pub gradient_g_per_cm: f64,
    /// Smallest trap frequency ω_t relevant to transfers.
    #[serde(default = "default_trap")]
    pub trap_frequency_hz: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_transport_time")]
    pub transport_time_per_site_s: f64,
    /// Accumulate Zeeman phases in the field and gradient during every op.
    #[serde(default)]
    pub track_gradient_phases: bool,
    /// Seed for the Monte Carlo mode; deterministic bookkeeping when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub encoding: Encoding,
}

impl RegisterConfig {
    pub fn new(n_sites: usize) -> Self {
        RegisterConfig {
            n_sites,
            spacing_nm: default_spacing(),
            b_gauss: 0.0,
            gradient_g_per_cm: 0.0,
            trap_frequency_hz: default_trap(),
            margin: default_margin(),
            transport_time_per_site_s: default_transport_time(),
            track_gradient_phases: false,
            seed: None,
            encoding: Encoding::default(),
        }
    }

    pub fn with_gradient(mut self, gradient_g_per_cm: f64) -> Self {
        self.gradient_g_per_cm = gradient_g_per_cm;
        self
    }

    pub fn validate(&self) -> Result<(), RegisterError> {
        let bad = |m: String| Err(RegisterError::InvalidConfig(m));
        if !(self.spacing_nm > 0.0) {
            return bad(format!("spacing must be > 0, got {}", self.spacing_nm));
        }
        if !self.b_gauss.is_finite() || !self.gradient_g_per_cm.is_finite() {
            return bad("field and gradient must be finite".into());
        }
        if !(self.transport_time_per_site_s >= 0.0) {
            return bad("transport time per site must be ≥ 0".into());
        }
        TimingConstraint::new(self.trap_frequency_hz, None, self.margin)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomRecord {
    pub site: usize,
    pub state: AtomicState,
    pub lost: bool,
}

impl AtomRecord {
    pub fn new(site: usize, state: AtomicState) -> Self {
        AtomRecord { site, state, lost: false }
    }
}

/// One classical configuration: a record per atom, indexed by atom.
pub type Configuration = Vec<AtomRecord>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub index: usize,
    pub kind: String,
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<serde_json::Value>,
}

type Branches = BTreeMap<Configuration, Complex64>;

#[derive(Debug, Clone)]
pub struct Register {
    species: Arc<SpeciesModel>,
    config: RegisterConfig,
    branches: Branches,
    time_s: f64,
    log: Vec<LogEntry>,
    rng: Option<ChaCha8Rng>,
}

fn add_branch(map: &mut Branches, cfg: Configuration, amp: Complex64) {
    *map.entry(cfg).or_insert(Complex64::new(0.0, 0.0)) += amp;
}

fn prune(map: Branches) -> Branches {
    map.into_iter().filter(|(_, a)| a.norm() >= PRUNE_AMPLITUDE).collect()
}

impl Register {
    /// A register holding one classical configuration with amplitude 1.
    pub fn new(
        species: impl Into<Arc<SpeciesModel>>,
        config: RegisterConfig,
        atoms: Configuration,
    ) -> Result<Self, RegisterError> {
        Self::from_branches(species, config, vec![(atoms, Complex64::new(1.0, 0.0))], 0.0)
    }

    pub fn from_branches(
        species: impl Into<Arc<SpeciesModel>>,
        config: RegisterConfig,
        branches: Vec<(Configuration, Complex64)>,
        time_s: f64,
    ) -> Result<Self, RegisterError> {
        let species = species.into();
        config.validate()?;
        for s in [&config.encoding.zero, &config.encoding.one] {
            species.validate_state(s)?;
        }
        for s in [&config.encoding.readout_zero, &config.encoding.readout_one] {
            species.validate_state(s)?;
        }
        species.level(&config.encoding.clock_level)?;
        if branches.is_empty() {
            return Err(RegisterError::InvalidConfig("register needs at least one branch".into()));
        }
        let n_atoms = branches[0].0.len();
        let mut map = Branches::new();
        for (cfg, amp) in branches {
            if cfg.len() != n_atoms {
                return Err(RegisterError::InvalidConfig(
                    "all branches must list the same atoms".into(),
                ));
            }
            for rec in &cfg {
                if rec.site >= config.n_sites {
                    return Err(RegisterError::InvalidConfig(format!(
                        "atom at site {} outside 0..{}",
                        rec.site, config.n_sites
                    )));
                }
                species.validate_state(&rec.state)?;
            }
            add_branch(&mut map, cfg, amp);
        }
        let rng = config.seed.map(ChaCha8Rng::seed_from_u64);
        let reg = Register { species, config, branches: map, time_s, log: Vec::new(), rng };
        reg.check_slots(&reg.branches)?;
        Ok(reg)
    }

    /// Qubits in basis states: `(site, bit)` per atom.
    pub fn basis(
        species: impl Into<Arc<SpeciesModel>>,
        config: RegisterConfig,
        qubits: &[(usize, u8)],
    ) -> Result<Self, RegisterError> {
        let atoms = qubits
            .iter()
            .map(|&(site, bit)| Ok(AtomRecord::new(site, config.encoding.qubit(bit)?.clone())))
            .collect::<Result<Vec<_>, RegisterError>>()?;
        Self::new(species, config, atoms)
    }

    pub fn species(&self) -> &SpeciesModel {
        &self.species
    }

    pub fn config(&self) -> &RegisterConfig {
        &self.config
    }

    pub fn time_s(&self) -> f64 {
        self.time_s
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn n_atoms(&self) -> usize {
        self.branches.keys().next().map_or(0, Vec::len)
    }

    pub fn branches(&self) -> impl Iterator<Item = (&Configuration, &Complex64)> {
        self.branches.iter()
    }

    pub fn amplitude(&self, cfg: &Configuration) -> Complex64 {
        self.branches.get(cfg).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches.values().map(|a| a.norm_sqr()).sum()
    }

    /// Probability removed by lossy evolution so far.
    pub fn lost_weight(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }

    /// Distinct site assignments across all branches.
    pub fn position_sets(&self) -> BTreeSet<Vec<usize>> {
        self.branches.keys().map(|c| c.iter().map(|r| r.site).collect()).collect()
    }

    pub fn lattice_of(&self, rec: &AtomRecord) -> Lattice {
        self.config.encoding.lattice_of(&rec.state)
    }

    /// Frequency splitting between neighbouring sites used for addressing.
    pub fn addressing_splitting_hz(&self) -> Result<f64, RegisterError> {
        Ok(self.species.gradient_site_splitting(
            &self.config.encoding.readout_zero,
            self.config.gradient_g_per_cm.abs(),
            self.config.spacing_nm,
        )?)
    }

    /// Timing rule for a global (`site_selective = false`) or addressed op.
    pub fn timing_constraint(&self, site_selective: bool) -> Result<TimingConstraint, RegisterError> {
        let omega_e = if site_selective {
            if self.config.gradient_g_per_cm == 0.0 {
                return Err(RegisterError::NoGradient);
            }
            Some(self.addressing_splitting_hz()?)
        } else {
            None
        };
        TimingConstraint::new(self.config.trap_frequency_hz, omega_e, self.config.margin)
    }

    fn check_slots(&self, branches: &Branches) -> Result<(), RegisterError> {
        for cfg in branches.keys() {
            let mut seen = BTreeSet::new();
            for rec in cfg.iter().filter(|r| !r.lost) {
                for &slot in self.lattice_of(rec).slots() {
                    if !seen.insert((rec.site, slot)) {
                        return Err(RegisterError::OccupiedSlot { site: rec.site, lattice: slot });
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies a list of ops in order. The first failure aborts, leaving
    /// the register and log as they were after the previous op.
    pub fn run(&mut self, ops: &[ProtocolOp]) -> Result<(), RegisterError> {
        for (index, op) in ops.iter().enumerate() {
            self.apply_op(op).map_err(|e| RegisterError::Aborted {
                index,
                kind: op.kind(),
                cause: Box::new(e),
            })?;
        }
        Ok(())
    }

    pub fn apply_op(&mut self, op: &ProtocolOp) -> Result<(), RegisterError> {
        let mut warnings = Vec::new();
        let mut outcome = None;
        let (branches, duration) = match op {
            ProtocolOp::Pulse(p) => self.pulse(p, &mut warnings)?,
            ProtocolOp::Transfer(t) => self.transfer(t, &mut warnings)?,
            ProtocolOp::Shift(s) => self.shift(s, &mut warnings)?,
            ProtocolOp::Hold(h) => self.hold(h)?,
            ProtocolOp::Measure(m) => {
                let (b, o) = self.measure(m)?;
                outcome = Some(o);
                (b, 0.0)
            }
            ProtocolOp::SetGradient(g) => {
                if !g.gradient_g_per_cm.is_finite() {
                    return Err(RegisterError::InvalidOp("gradient must be finite".into()));
                }
                self.config.gradient_g_per_cm = g.gradient_g_per_cm;
                (self.branches.clone(), 0.0)
            }
        };
        let branches = if self.config.track_gradient_phases && duration > 0.0 {
            self.zeeman_evolution(branches, duration)?
        } else {
            branches
        };
        self.branches = branches;
        let t_start = self.time_s;
        self.time_s += duration;
        self.log.push(LogEntry {
            index: self.log.len(),
            kind: op.kind().to_string(),
            t_start_s: t_start,
            t_end_s: self.time_s,
            warnings,
            outcome,
        });
        Ok(())
    }

    fn check_sites(&self, sites: &[usize]) -> Result<(), RegisterError> {
        match sites.iter().find(|&&s| s >= self.config.n_sites) {
            Some(s) => Err(RegisterError::InvalidOp(format!(
                "site {s} outside 0..{}",
                self.config.n_sites
            ))),
            None => Ok(()),
        }
    }

    fn check_timing(
        &self,
        what: &str,
        site_selective: bool,
        duration: f64,
        warnings: &mut Vec<String>,
    ) -> Result<(), RegisterError> {
        let c = self.timing_constraint(site_selective)?;
        if let TimingCheck::Violation { required_s, actual_s } = validate_transfer_timing(&c, duration) {
            warnings.push(format!(
                "{what} duration {actual_s:.3e} s is shorter than the required {required_s:.3e} s"
            ));
        }
        Ok(())
    }

    fn pulse_matrix(&self, p: &PulseOp, blocked: bool) -> Result<[[Complex64; 2]; 2], RegisterError> {
        let interacting = blocked && (p.delta_u_hz != 0.0 || p.gamma_hz != 0.0);
        let mut u = if p.detuning_hz == 0.0 && !interacting {
            let (s, c) = (0.5 * p.area).sin_cos();
            let c = Complex64::new(c, 0.0);
            let mis = Complex64::new(0.0, -s);
            [[c, mis], [mis, c]]
        } else {
            let rabi = p.rabi_hz.ok_or_else(|| {
                RegisterError::InvalidOp("detuned or interacting pulse needs rabi_hz".into())
            })?;
            let (du, g) = if interacting { (p.delta_u_hz, p.gamma_hz) } else { (0.0, 0.0) };
            let params = BlockadeParams::from_hz(rabi, p.detuning_hz + du, g)?;
            propagator(&params, params.time_for_area(p.area))?
        };
        let phase = Complex64::from_polar(1.0, p.laser_phase);
        u[1][0] *= phase;
        u[0][1] *= phase.conj();
        Ok(u)
    }

    fn pulse(&self, p: &PulseOp, warnings: &mut Vec<String>) -> Result<(Branches, f64), RegisterError> {
        if !(p.area >= 0.0) || !p.area.is_finite() {
            return Err(RegisterError::InvalidOp(format!("pulse area must be ≥ 0, got {}", p.area)));
        }
        if p.from == p.to {
            return Err(RegisterError::InvalidOp("pulse couples a state to itself".into()));
        }
        if let Some(r) = p.rabi_hz {
            if !(r > 0.0) {
                return Err(RegisterError::InvalidOp(format!("rabi_hz must be > 0, got {r}")));
            }
        }
        if !p.laser_phase.is_finite() || !p.detuning_hz.is_finite() {
            return Err(RegisterError::InvalidOp("pulse phase and detuning must be finite".into()));
        }
        if !(p.gamma_hz >= 0.0) || !p.delta_u_hz.is_finite() {
            return Err(RegisterError::InvalidOp("pulse interaction must be finite with gamma_hz ≥ 0".into()));
        }
        self.species.validate_state(&p.from)?;
        self.species.validate_state(&p.to)?;
        let selective = match &p.target {
            Target::Global => false,
            Target::Sites(sites) => {
                self.check_sites(sites)?;
                if self.config.gradient_g_per_cm == 0.0 {
                    return Err(RegisterError::NoGradient);
                }
                true
            }
        };
        let duration = match (p.duration_s, p.rabi_hz) {
            (Some(d), _) if d >= 0.0 => d,
            (Some(d), _) => return Err(RegisterError::InvalidOp(format!("negative duration {d}"))),
            (None, Some(r)) => p.area / (2.0 * PI * r),
            (None, None) if selective => self.timing_constraint(true)?.min_duration(),
            (None, None) => 0.0,
        };
        if selective {
            self.check_timing("site-selective pulse", true, duration, warnings)?;
        }

        let free = self.pulse_matrix(p, false)?;
        let blocked = self.pulse_matrix(p, true)?;
        let mut branches = self.branches.clone();
        for atom in 0..self.n_atoms() {
            let mut next = Branches::new();
            for (cfg, amp) in branches {
                let rec = &cfg[atom];
                let col = if rec.state == p.from {
                    0
                } else if rec.state == p.to {
                    1
                } else {
                    usize::MAX
                };
                if rec.lost || col == usize::MAX || !p.target.contains(rec.site) {
                    add_branch(&mut next, cfg, amp);
                    continue;
                }
                let is_blocked = cfg.iter().enumerate().any(|(k, o)| {
                    k != atom && !o.lost && o.site == rec.site && o.state.level == p.to.level
                });
                let u = if is_blocked { &blocked } else { &free };
                for (row, state) in [(0, &p.from), (1, &p.to)] {
                    let mut c = cfg.clone();
                    c[atom].state = state.clone();
                    add_branch(&mut next, c, u[row][col] * amp);
                }
            }
            branches = prune(next);
        }
        Ok((branches, duration))
    }

    fn transfer(&self, t: &TransferOp, warnings: &mut Vec<String>) -> Result<(Branches, f64), RegisterError> {
        let enc = &self.config.encoding;
        let qubit = enc.qubit(t.qubit_selector)?.clone();
        let clock = enc.clock_of(&qubit);
        if t.site_selective {
            if t.sites.is_empty() {
                return Err(RegisterError::InvalidOp("site-selective transfer lists no sites".into()));
            }
            self.check_sites(&t.sites)?;
        } else if !t.sites.is_empty() {
            return Err(RegisterError::InvalidOp("sites given for a global transfer".into()));
        }
        let constraint = self.timing_constraint(t.site_selective)?;
        let duration = match t.duration_s {
            Some(d) if d >= 0.0 => d,
            Some(d) => return Err(RegisterError::InvalidOp(format!("negative duration {d}"))),
            None => constraint.min_duration(),
        };
        self.check_timing("transfer", t.site_selective, duration, warnings)?;
        let (src, dst, factor) = match t.direction {
            TransferDirection::StorageToTransport => (&qubit, &clock, Complex64::new(0.0, -1.0)),
            TransferDirection::TransportToStorage => (&clock, &qubit, Complex64::new(0.0, 1.0)),
        };
        let mut next = Branches::new();
        for (cfg, amp) in &self.branches {
            let mut c = cfg.clone();
            let mut a = *amp;
            for rec in c.iter_mut() {
                let addressed = !t.site_selective || t.sites.contains(&rec.site);
                if !rec.lost && addressed && rec.state == *src {
                    rec.state = dst.clone();
                    a *= factor;
                }
            }
            add_branch(&mut next, c, a);
        }
        self.check_slots(&next)?;
        Ok((next, duration))
    }

    /// Moves transport-lattice atoms. Readout-level atoms stay with the
    /// deeper storage lattice and are reported as left behind.
    fn shift(&self, s: &ShiftOp, warnings: &mut Vec<String>) -> Result<(Branches, f64), RegisterError> {
        let duration = match s.duration_s {
            Some(d) if d >= 0.0 => d,
            Some(d) => return Err(RegisterError::InvalidOp(format!("negative duration {d}"))),
            None => s.delta_sites.unsigned_abs() as f64 * self.config.transport_time_per_site_s,
        };
        let mut next = Branches::new();
        let mut left_behind = 0.0;
        for (cfg, amp) in &self.branches {
            let mut c = cfg.clone();
            for rec in c.iter_mut().filter(|r| !r.lost) {
                match self.config.encoding.lattice_of(&rec.state) {
                    Lattice::Storage => {}
                    Lattice::Both => left_behind += amp.norm_sqr(),
                    Lattice::Transport => {
                        let to = rec.site as i64 + s.delta_sites;
                        if to < 0 || to >= self.config.n_sites as i64 {
                            return Err(RegisterError::OffRegister { site: to, n_sites: self.config.n_sites });
                        }
                        rec.site = to as usize;
                    }
                }
            }
            add_branch(&mut next, c, *amp);
        }
        if left_behind > 0.0 {
            warnings.push(format!("readout-level population {left_behind:.3e} left behind by the shift"));
        }
        self.check_slots(&next)?;
        Ok((next, duration))
    }

    fn hold(&mut self, h: &HoldOp) -> Result<(Branches, f64), RegisterError> {
        let t = h.duration_s;
        let col = h.collision;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(RegisterError::InvalidOp(format!("hold duration must be ≥ 0, got {t}")));
        }
        if !col.u_hz.is_finite() || !(col.gamma_hz >= 0.0) {
            return Err(RegisterError::InvalidOp("collision needs finite U and gamma_hz ≥ 0".into()));
        }
        if !col.enabled {
            return Ok((self.branches.clone(), t));
        }
        let survival = (-2.0 * PI * col.gamma_hz * t).exp();
        let mut next = Branches::new();
        let branches = self.branches.clone();
        for (cfg, amp) in branches {
            let pairs = colocated_pairs(&cfg);
            let phase = Complex64::from_polar(1.0, 2.0 * PI * col.u_hz * t * pairs.len() as f64);
            let mut c = cfg;
            let mut a = amp * phase;
            match self.rng.as_mut() {
                Some(rng) if col.gamma_hz > 0.0 => {
                    for (x, y) in pairs {
                        if rng.gen::<f64>() >= survival {
                            c[x].lost = true;
                            c[y].lost = true;
                        }
                    }
                }
                _ => a *= survival.powf(0.5 * pairs.len() as f64),
            }
            add_branch(&mut next, c, a);
        }
        Ok((prune(next), t))
    }

    fn measure(&mut self, m: &MeasureOp) -> Result<(Branches, serde_json::Value), RegisterError> {
        self.check_sites(&[m.site])?;
        let readout = self.config.encoding.readout_zero.level.clone();
        let bright = |cfg: &Configuration| {
            cfg.iter().any(|r| !r.lost && r.site == m.site && r.state.level == readout)
        };
        let total = self.norm_sqr();
        let p_bright: f64 = self.branches.iter().filter(|(c, _)| bright(c)).map(|(_, a)| a.norm_sqr()).sum();
        let p = if total > 0.0 { (p_bright / total).clamp(0.0, 1.0) } else { 0.0 };
        let mut out = serde_json::json!({ "site": m.site, "p_readout": p });
        let Some(rng) = self.rng.as_mut() else {
            return Ok((self.branches.clone(), out));
        };
        let result = rng.gen::<f64>() < p;
        out["result"] = serde_json::Value::Bool(result);
        let kept: f64 = if result { p_bright } else { total - p_bright };
        let scale = if kept > 0.0 { (total / kept).sqrt() } else { 0.0 };
        let next = self
            .branches
            .iter()
            .filter(|(c, _)| bright(c) == result)
            .map(|(c, a)| (c.clone(), a * scale))
            .collect();
        Ok((next, out))
    }

    /// Phase e^{−i2π Σ shift·t} from the field plus gradient at each atom.
    fn zeeman_evolution(&self, branches: Branches, duration: f64) -> Result<Branches, RegisterError> {
        let mut out = Branches::new();
        for (cfg, amp) in branches {
            let mut shift = 0.0;
            for rec in cfg.iter().filter(|r| !r.lost) {
                let x_cm = nm_to_cm(rec.site as f64 * self.config.spacing_nm);
                let b = self.config.b_gauss + self.config.gradient_g_per_cm * x_cm;
                shift += self.species.zeeman_shift(&rec.state, b)?;
            }
            let phase = Complex64::from_polar(1.0, -2.0 * PI * shift * duration);
            add_branch(&mut out, cfg, amp * phase);
        }
        Ok(out)
    }
}

/// Index pairs of non-lost atoms sharing a site.
fn colocated_pairs(cfg: &Configuration) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (x, a) in cfg.iter().enumerate() {
        for (y, b) in cfg.iter().enumerate().skip(x + 1) {
            if !a.lost && !b.lost && a.site == b.site {
                pairs.push((x, y));
            }
        }
    }
    pairs
}

/// Whether a pulse of the given duration resolves neighbouring sites:
/// its spectral width 1/duration must be below the gradient splitting.
pub fn resolves_neighbours(
    species: &SpeciesModel,
    state: &AtomicState,
    gradient_g_per_cm: f64,
    spacing_nm: f64,
    duration_s: f64,
) -> Result<bool, SpeciesError> {
    let split = species.gradient_site_splitting(state, gradient_g_per_cm, spacing_nm)?;
    Ok(duration_s > 0.0 && 1.0 / duration_s < split)
}
