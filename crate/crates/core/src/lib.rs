//! Simulation and design toolkit for dual-lattice alkaline-earth qubits.
//!
//! Qubits live on nuclear-spin sublevels of the ¹S₀ ground state in a
//! storage lattice and are moved, state-selectively, into an independent
//! transport lattice that only traps ³P₀. The crate covers
//!
//! * [`atomdata`]: levels, lines and Zeeman response of a species,
//! * [`polarizability`]: sum-over-states AC polarizability, tune-out
//!   wavelengths and lattice depth matching,
//! * [`blockade`]: the two-level non-Hermitian dynamics of a lossy
//!   blockade step,
//! * [`register`]: a deterministic register state machine executing
//!   physical protocol operations,
//! * [`budget`]: itemized decoherence and infidelity budgets,
//! * [`compiler`]: lowering of small circuits into timed schedules.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atomdata;
pub mod blockade;
pub mod budget;
pub mod compiler;
pub mod halfint;
pub mod polarizability;
pub mod register;
pub mod units;

pub use atomdata::{AtomicState, LevelModel, SpeciesError, SpeciesModel, TransitionLine};
pub use blockade::{BlockadeError, BlockadeParams, BranchReport, LossCurve, LossMethod, TwoLevelAmplitudes};
pub use budget::{FidelityBudget, NoiseModel};
pub use compiler::{Circuit, CompileError, Device, Gate, GateKind, Schedule};
pub use halfint::HalfInt;
pub use polarizability::{LatticeSpec, Polarizability, PolarizabilityError, PolarizabilitySample};
pub use register::{ProtocolOp, Register, RegisterConfig, RegisterError, TimingConstraint};
