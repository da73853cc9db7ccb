//! Sequential analytic optimization of parameterized quantum circuits with
//! quaternion-parameterized gates.
//!
//! A single-qubit gate is a unit quaternion through `R(q) = q_i I - i q_x X -
//! i q_y Y - i q_z Z`; controlled, negative-controlled and number-preserving
//! two-qubit gates reuse the same parameterization. Any circuit cost is an exact
//! quadratic in one gate's quaternion, so a fixed handful of cost evaluations
//! (10 for a single gate, 14 for a controlled gate, 35 for a gate pair sharing a
//! control) reconstructs the local landscape, and the constrained minimum on the
//! unit 3-sphere is found analytically. The crate bundles:
//!
//! - [`simulator`]: exact dense statevector engine with optional shot-noise
//!   emulation,
//! - [`gates`]: quaternion algebra, gate matrices, the two-CNOT decomposition,
//! - [`hamiltonian`]: Pauli sums, Ising builder, file ingestion, exact
//!   diagonalization, time evolution and a Trotter reference,
//! - [`ansatz`]: alternating layered circuits, update schedules,
//!   initialization policies, circuit export,
//! - [`landscape`]: cost-landscape tomography,
//! - [`optimizer`]: eigen/secular solvers, gate updates, the sweep engine,
//! - [`costs`]: VQE, fidelity, Hilbert-Schmidt-test compilation costs on a
//!   doubled register, Dicke-state subspace restriction, dynamics infidelity.

pub mod ansatz;
pub mod costs;
pub mod gates;
pub mod hamiltonian;
pub mod landscape;
pub mod optimizer;
pub mod simulator;

pub use ansatz::{
    append_final_singles, ascending_schedule, build_alt_ansatz, export_circuit, initialize,
    parse_circuit, zipping_schedule, BlockType, Circuit, Connectivity, GateInstance, GateKind,
    InitPolicy, UpdateUnit,
};
pub use costs::{
    dicke_state, dynamics_infidelity, entangled_input, fidelity_cost, hst_global_cost,
    hst_global_cost_trace, lhst_local_cost, vqe_cost, CompileCost, CompiledStep, CostSpec,
    EvalMode, FidelityCost, SubspaceBasis, VqeCost,
};
pub use gates::{
    conjugate_quaternion, controlled_matrix, decompose_controlled, number_preserving_matrix,
    quaternion_from_axis_angle, su2_from_quaternion, ControlPolarity, Quaternion,
};
pub use hamiltonian::{ising_hamiltonian, parse_pauli_sum, PauliLetter, PauliString, PauliSum};
pub use landscape::{
    embed_controlled, embed_pair, estimate_controlled, estimate_pair, estimate_single,
    ControlledConfiguration, ControlledModel, PairConfiguration, PairModel, SingleModel,
};
pub use optimizer::{
    maximize_quadratic_sphere, minimize_quadratic_sphere, run_sweeps, scf_update_pair,
    update_single_gate, CostFunction, SecularSolution, SweepOptions, TomographyConfigs,
    Trajectory, TrajectoryRecord,
};
pub use simulator::{DenseUnitary, Statevector};
