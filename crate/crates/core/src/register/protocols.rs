//! Two-qubit gate protocols and their truth tables, obtained by execution.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    Encoding, ProtocolOp, PulseOp, Register, RegisterConfig, RegisterError, Target,
    TransferDirection,
};
use crate::atomdata::SpeciesModel;
use crate::blockade::BlockadeParams;
use crate::units::{phase_distance, wrap_phase};

/// Basis order of every truth table: |0,0⟩, |0,1⟩, |1,0⟩, |1,1⟩.
pub const BASIS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    pub phases: [f64; 4],
    /// Probability removed by loss.
    pub losses: [f64; 4],
    /// |⟨input|output⟩|²: probability of returning to the input configuration.
    pub populations: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockadeTruthTable {
    pub phases: [f64; 4],
    pub losses: [f64; 4],
    pub populations: [f64; 4],
    /// Deviation of the |0,1⟩ phase from π.
    pub residual_phase: f64,
}

/// Collisional phase gate between the qubits on sites `i` and `j`.
///
/// Both |0⟩ components go to the transport lattice, which is moved by
/// j − i so that |0⟩ of `i` sits on `j` (and |0⟩ of `j` on 2j − i). Only
/// |0_i, 1_j⟩ then has a storage/transport pair on one site.
pub fn phase_gate_ops(i: usize, j: usize, u_hz: f64, hold_s: f64) -> Vec<ProtocolOp> {
    collisional_ops(Some(vec![i, j]), j as i64 - i as i64, u_hz, hold_s)
}

/// The collisional sequence on the given sites (all sites when `None`)
/// with a transport displacement `d`.
pub fn collisional_ops(sites: Option<Vec<usize>>, d: i64, u_hz: f64, hold_s: f64) -> Vec<ProtocolOp> {
    vec![
        ProtocolOp::transfer(TransferDirection::StorageToTransport, 0, sites.clone()),
        ProtocolOp::shift(d),
        ProtocolOp::hold(hold_s, u_hz),
        ProtocolOp::shift(-d),
        ProtocolOp::transfer(TransferDirection::TransportToStorage, 0, sites),
    ]
}

/// Pulse parameters of the blockade protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockadePulses {
    pub rabi_hz: f64,
    pub delta_u_hz: f64,
    pub gamma_hz: f64,
    /// Duration of each auxiliary π pulse; defaults to the π time at `rabi_hz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_pulse_s: Option<f64>,
    /// Multiplies every pulse area (1 for calibrated pulses).
    #[serde(default = "unit")]
    pub area_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl BlockadePulses {
    pub fn from_params(params: &BlockadeParams) -> Self {
        BlockadePulses {
            rabi_hz: params.omega / (2.0 * PI),
            delta_u_hz: params.delta_u / (2.0 * PI),
            gamma_hz: params.gamma / (2.0 * PI),
            aux_pulse_s: None,
            area_scale: 1.0,
        }
    }
}

/// Blockade gate: π pulse |0⟩ → |0x⟩ on the moved atoms, 2π pulse
/// |1⟩ → |1x⟩ on sites `i` and `j`, π pulse back, then undo the move.
pub fn blockade_gate_ops(i: usize, j: usize, enc: &Encoding, b: &BlockadePulses) -> Vec<ProtocolOp> {
    blockade_ops(Some(vec![i, j]), j as i64 - i as i64, enc, b)
}

/// The blockade sequence on the given sites (all sites when `None`).
pub fn blockade_ops(sites: Option<Vec<usize>>, d: i64, enc: &Encoding, b: &BlockadePulses) -> Vec<ProtocolOp> {
    let clock_zero = enc.clock_of(&enc.zero);
    let aux = || {
        let mut p = PulseOp::new(clock_zero.clone(), enc.readout_zero.clone(), PI * b.area_scale, Target::Global);
        p.rabi_hz = Some(b.rabi_hz);
        p.duration_s = b.aux_pulse_s;
        ProtocolOp::Pulse(p)
    };
    let target = sites.clone().map_or(Target::Global, Target::Sites);
    let mut two_pi = PulseOp::new(enc.one.clone(), enc.readout_one.clone(), 2.0 * PI * b.area_scale, target);
    two_pi.rabi_hz = Some(b.rabi_hz);
    two_pi.delta_u_hz = b.delta_u_hz;
    two_pi.gamma_hz = b.gamma_hz;
    vec![
        ProtocolOp::transfer(TransferDirection::StorageToTransport, 0, sites.clone()),
        ProtocolOp::shift(d),
        aux(),
        ProtocolOp::Pulse(two_pi),
        aux(),
        ProtocolOp::shift(-d),
        ProtocolOp::transfer(TransferDirection::TransportToStorage, 0, sites),
    ]
}

/// Register used for two-qubit truth tables: qubits on sites 0 and 1 and a
/// free third site for the partner's displaced |0⟩; 100 G/cm gradient.
pub fn truth_table_register() -> RegisterConfig {
    RegisterConfig::new(3).with_gradient(100.0)
}

/// Runs `ops` from each basis state of the qubits on `sites` and reads the
/// phase and lost probability of the returning branch. Other atoms of
/// `background` keep their given states.
pub fn execute_truth_table(
    species: &std::sync::Arc<SpeciesModel>,
    config: &RegisterConfig,
    sites: (usize, usize),
    background: &[(usize, u8)],
    ops: &[ProtocolOp],
) -> Result<TruthTable, RegisterError> {
    let mut phases = [0.0; 4];
    let mut losses = [0.0; 4];
    let mut populations = [0.0; 4];
    for (k, &(a, b)) in BASIS.iter().enumerate() {
        let mut qubits = vec![(sites.0, a), (sites.1, b)];
        qubits.extend_from_slice(background);
        let mut reg = Register::basis(species.clone(), config.clone(), &qubits)?;
        let initial = reg.branches().next().map(|(c, _)| c.clone()).unwrap_or_default();
        reg.run(ops)?;
        let amp: Complex64 = reg.amplitude(&initial);
        phases[k] = wrap_phase(amp.arg());
        losses[k] = reg.lost_weight();
        populations[k] = amp.norm_sqr();
    }
    Ok(TruthTable { phases, losses, populations })
}

/// Phases of the collisional gate for U (Hz) held for T (s).
pub fn phase_gate_truth_table(u_hz: f64, t_s: f64) -> Result<[f64; 4], RegisterError> {
    if !(u_hz >= 0.0) || !(t_s >= 0.0) {
        return Err(RegisterError::InvalidOp(format!("U and T must be ≥ 0, got {u_hz}, {t_s}")));
    }
    let species = std::sync::Arc::new(SpeciesModel::sr87());
    let ops = phase_gate_ops(0, 1, u_hz, t_s);
    Ok(execute_truth_table(&species, &truth_table_register(), (0, 1), &[], &ops)?.phases)
}

/// Blockade gate truth table; `area_scale` ≠ 1 injects a pulse-area error.
pub fn blockade_gate_truth_table(
    params: &BlockadeParams,
    area_scale: f64,
) -> Result<BlockadeTruthTable, RegisterError> {
    let species = std::sync::Arc::new(SpeciesModel::sr87());
    let config = truth_table_register();
    let mut pulses = BlockadePulses::from_params(params);
    pulses.area_scale = area_scale;
    let ops = blockade_gate_ops(0, 1, &config.encoding, &pulses);
    let table = execute_truth_table(&species, &config, (0, 1), &[], &ops)?;
    Ok(BlockadeTruthTable {
        phases: table.phases,
        losses: table.losses,
        populations: table.populations,
        residual_phase: phase_distance(table.phases[1], PI),
    })
}
