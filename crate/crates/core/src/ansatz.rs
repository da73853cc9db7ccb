//! Circuit model and builders: alternating layered ansatz, gate blocks,
//! connectivity tables, update schedules and initialization policies.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gates::{
    cnot_matrix, controlled_matrix_with_phase, cz_matrix, decompose_controlled, hadamard_matrix,
    number_preserving_matrix_with_phase, quaternion_from_decomposition, rz_matrix, CMat2, CMat4,
    ControlPolarity, Quaternion,
};
use crate::simulator::{SimError, Statevector};

#[derive(Debug, Error)]
pub enum AnsatzError {
    #[error("unsupported connectivity {connectivity:?} for {n} qubits")]
    UnsupportedConnectivity { n: usize, connectivity: Connectivity },
    #[error("brick pattern requires an even qubit count, got {0}")]
    OddQubitCount(usize),
    #[error("circuit was not built by build_alt_ansatz; no block table available")]
    ForeignCircuit,
    #[error("circuit line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Gate(#[from] crate::gates::GateError),
}

/// Gate species. Trainable kinds carry a quaternion; fixed kinds do not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    Single,
    Controlled,
    NegControlled,
    NumberPreserving,
    FixedCz,
    FixedCnot,
    FixedH,
    FixedRz(f64),
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Single | GateKind::FixedH | GateKind::FixedRz(_) => 1,
            _ => 2,
        }
    }

    pub fn is_parameterized(&self) -> bool {
        matches!(
            self,
            GateKind::Single
                | GateKind::Controlled
                | GateKind::NegControlled
                | GateKind::NumberPreserving
        )
    }
}

/// One gate in a circuit.
///
/// `phase` is the frozen `Rz` angle on the control line that CZ/CNOT
/// initialization introduces; it stays fixed during optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct GateInstance {
    pub kind: GateKind,
    pub params: Option<Quaternion>,
    pub phase: f64,
    pub qubits: Vec<usize>,
    pub trainable: bool,
}

impl GateInstance {
    pub fn single(qubit: usize, q: Quaternion) -> Self {
        GateInstance {
            kind: GateKind::Single,
            params: Some(q),
            phase: 0.0,
            qubits: vec![qubit],
            trainable: true,
        }
    }

    pub fn controlled(control: usize, target: usize, q: Quaternion) -> Self {
        GateInstance {
            kind: GateKind::Controlled,
            params: Some(q),
            phase: 0.0,
            qubits: vec![control, target],
            trainable: true,
        }
    }

    pub fn neg_controlled(control: usize, target: usize, q: Quaternion) -> Self {
        GateInstance {
            kind: GateKind::NegControlled,
            params: Some(q),
            phase: 0.0,
            qubits: vec![control, target],
            trainable: true,
        }
    }

    pub fn number_preserving(a: usize, b: usize, q: Quaternion) -> Self {
        GateInstance {
            kind: GateKind::NumberPreserving,
            params: Some(q),
            phase: 0.0,
            qubits: vec![a, b],
            trainable: true,
        }
    }

    pub fn fixed(kind: GateKind, qubits: Vec<usize>) -> Self {
        debug_assert!(!kind.is_parameterized());
        debug_assert_eq!(kind.arity(), qubits.len());
        GateInstance {
            kind,
            params: None,
            phase: 0.0,
            qubits,
            trainable: false,
        }
    }

    pub fn quaternion(&self) -> Quaternion {
        self.params.expect("gate carries no quaternion")
    }

    /// Assembled matrix including any frozen control phase.
    pub fn matrix(&self) -> GateMatrix {
        match self.kind {
            GateKind::Single => GateMatrix::One(self.quaternion().su2_matrix()),
            GateKind::Controlled => GateMatrix::Two(controlled_matrix_with_phase(
                &self.quaternion(),
                ControlPolarity::One,
                self.phase,
            )),
            GateKind::NegControlled => GateMatrix::Two(controlled_matrix_with_phase(
                &self.quaternion(),
                ControlPolarity::Zero,
                self.phase,
            )),
            GateKind::NumberPreserving => GateMatrix::Two(number_preserving_matrix_with_phase(
                &self.quaternion(),
                self.phase,
            )),
            GateKind::FixedCz => GateMatrix::Two(cz_matrix()),
            GateKind::FixedCnot => GateMatrix::Two(cnot_matrix()),
            GateKind::FixedH => GateMatrix::One(hadamard_matrix()),
            GateKind::FixedRz(theta) => GateMatrix::One(rz_matrix(theta)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateMatrix {
    One(CMat2),
    Two(CMat4),
}

/// One entry of the update schedule: a single trainable gate updated by FQS, a
/// controlled (or number-preserving) gate updated by cFQS, or a
/// controlled/negative-controlled pair sharing a control updated jointly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateUnit {
    Single { gate: usize },
    Controlled { gate: usize },
    Pair { pos_gate: usize, neg_gate: usize },
}

impl UpdateUnit {
    /// Observable measurements one tomography of this unit costs.
    pub fn evaluation_cost(&self) -> u64 {
        match self {
            UpdateUnit::Single { .. } => 10,
            UpdateUnit::Controlled { .. } => 14,
            UpdateUnit::Pair { .. } => 35,
        }
    }
}

/// Gate block variants of the alternating layered ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockType {
    /// Two single-qubit gates and a fixed CZ.
    Fqs,
    /// Two single-qubit gates and a trainable controlled gate.
    Cfqs,
    /// One single-qubit gate on the control plus a controlled/negative-controlled pair.
    Scf,
    /// One number-preserving gate.
    NumberPreserving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    NearestNeighbor,
    AllToAll,
    SpinPreserving,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitPolicy {
    /// Quaternions uniform on the 3-sphere.
    Random,
    /// Controlled-type gates become CZ (negative-controlled: negative CZ) with the
    /// frozen phase recorded; single gates random.
    CzInit,
    /// Single and number-preserving gates near identity with rotation angle in
    /// `[0, max_angle]`; controlled gates become CZ.
    WarmStart { max_angle: f64 },
}

impl InitPolicy {
    pub fn warm_start_default() -> Self {
        InitPolicy::WarmStart {
            max_angle: std::f64::consts::PI / 18.0,
        }
    }
}

#[derive(Debug, Clone)]
struct BlockInfo {
    layer: usize,
    zip_rank: usize,
    units: Vec<UpdateUnit>,
}

/// Ordered gate list on `n` qubits with an update schedule.
#[derive(Debug, Clone)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateInstance>,
    schedule: Vec<UpdateUnit>,
    blocks: Vec<BlockInfo>,
    tail_units: Vec<UpdateUnit>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
            schedule: Vec::new(),
            blocks: Vec::new(),
            tail_units: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateInstance] {
        &self.gates
    }

    pub fn gate(&self, index: usize) -> &GateInstance {
        &self.gates[index]
    }

    pub fn gate_mut(&mut self, index: usize) -> &mut GateInstance {
        &mut self.gates[index]
    }

    pub fn schedule(&self) -> &[UpdateUnit] {
        &self.schedule
    }

    pub fn set_schedule(&mut self, schedule: Vec<UpdateUnit>) {
        self.schedule = schedule;
    }

    /// Appends a gate and returns its index. Trainable gates are appended to the
    /// schedule as their own unit.
    pub fn push(&mut self, gate: GateInstance) -> usize {
        for &q in &gate.qubits {
            assert!(q < self.n_qubits, "gate qubit out of range");
        }
        let idx = self.gates.len();
        if gate.trainable {
            let unit = match gate.kind {
                GateKind::Single => UpdateUnit::Single { gate: idx },
                GateKind::Controlled | GateKind::NumberPreserving => {
                    UpdateUnit::Controlled { gate: idx }
                }
                GateKind::NegControlled => UpdateUnit::Controlled { gate: idx },
                _ => unreachable!("fixed kinds are not trainable"),
            };
            self.schedule.push(unit);
        }
        self.gates.push(gate);
        idx
    }

    pub fn trainable_gate_indices(&self) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.trainable)
            .map(|(i, _)| i)
            .collect()
    }

    /// Applies all gates in order to `state`.
    pub fn apply(&self, state: &mut Statevector) -> Result<(), SimError> {
        for gate in &self.gates {
            match gate.matrix() {
                GateMatrix::One(m) => state.apply_1q(&m, gate.qubits[0])?,
                GateMatrix::Two(m) => state.apply_2q(&m, (gate.qubits[0], gate.qubits[1]))?,
            }
        }
        Ok(())
    }

    /// Applies the element-wise complex conjugate of every gate, with qubit
    /// indices shifted by `offset` (system B of a doubled register).
    pub fn apply_conjugated(&self, state: &mut Statevector, offset: usize) -> Result<(), SimError> {
        for gate in &self.gates {
            match gate.matrix() {
                GateMatrix::One(m) => {
                    state.apply_1q(&m.map(|z| z.conj()), gate.qubits[0] + offset)?
                }
                GateMatrix::Two(m) => state.apply_2q(
                    &m.map(|z| z.conj()),
                    (gate.qubits[0] + offset, gate.qubits[1] + offset),
                )?,
            }
        }
        Ok(())
    }

    /// Runs on |0...0> and returns the output state.
    pub fn run(&self) -> Result<Statevector, SimError> {
        let mut sv = Statevector::zero(self.n_qubits);
        self.apply(&mut sv)?;
        Ok(sv)
    }

    /// Dense matrix of the whole circuit, built column by column.
    pub fn unitary(&self) -> Result<DMatrix<Complex64>, SimError> {
        let dim = 1usize << self.n_qubits;
        let mut u = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let mut sv = Statevector::basis_state(self.n_qubits, col);
            self.apply(&mut sv)?;
            for row in 0..dim {
                u[(row, col)] = sv.amplitude(row);
            }
        }
        Ok(u)
    }
}

fn pairs_for(
    n: usize,
    connectivity: Connectivity,
) -> Result<Vec<(usize, usize)>, AnsatzError> {
    // Table pairs are 1-based; internal indices subtract 1.
    let table: &[(usize, usize)] = match (connectivity, n) {
        (Connectivity::NearestNeighbor, _) => {
            if n % 2 != 0 {
                return Err(AnsatzError::OddQubitCount(n));
            }
            let mut pairs: Vec<(usize, usize)> = (0..n / 2).map(|k| (2 * k, 2 * k + 1)).collect();
            if n > 2 {
                pairs.extend((0..n / 2).map(|k| ((2 * k + 1) % n, (2 * k + 2) % n)));
            }
            return Ok(pairs);
        }
        (Connectivity::AllToAll, 4) => &[(1, 2), (3, 4), (1, 4), (2, 3), (1, 3), (2, 4)],
        (Connectivity::AllToAll, 6) => &[
            (1, 2),
            (3, 5),
            (4, 6),
            (1, 3),
            (2, 6),
            (4, 5),
            (1, 4),
            (2, 3),
            (5, 6),
            (1, 5),
            (2, 4),
            (3, 6),
            (1, 6),
            (2, 5),
            (3, 4),
        ],
        (Connectivity::SpinPreserving, 4) => &[(1, 2), (3, 4)],
        (Connectivity::SpinPreserving, 6) => &[(1, 2), (4, 5), (2, 3), (5, 6), (1, 3), (4, 6)],
        _ => {
            return Err(AnsatzError::UnsupportedConnectivity { n, connectivity })
        }
    };
    Ok(table.iter().map(|&(a, b)| (a - 1, b - 1)).collect())
}

// Zipping rank of nearest-neighbor brick pairs: blocks alternate between the two
// brick columns top to bottom, 1:(0,1) col1, 2:(1,2) col2, 3:(2,3) col1, ...
fn zip_ranks_nearest_neighbor(n: usize) -> Vec<usize> {
    let half = n / 2;
    let mut ranks = vec![0usize; if n > 2 { n } else { 1 }];
    for k in 0..half {
        ranks[k] = 2 * k; // column 1 block on (2k, 2k+1)
    }
    if n > 2 {
        for k in 0..half {
            ranks[half + k] = 2 * k + 1; // column 2 block on (2k+1, 2k+2)
        }
    }
    ranks
}

/// The negative-controlled Z inserted between spin-preserving layers, on
/// 1-based pair (2,3) for n = 4 and (3,4) for n = 6.
fn spin_preserving_entangler(n: usize) -> Option<(usize, usize)> {
    match n {
        4 => Some((1, 2)),
        6 => Some((2, 3)),
        _ => None,
    }
}

/// Builds the alternating layered ansatz.
///
/// Nearest-neighbor layers follow the brick pattern (both columns); table-driven
/// connectivities apply the block to the listed pairs in order. The spin-preserving
/// variant inserts one fixed negative-controlled Z between consecutive layers, and
/// the FQS block variant appends one general single-qubit gate per qubit at the
/// end of the circuit. Gates start at the identity quaternion; call [`initialize`]
/// to apply an initialization policy.
pub fn build_alt_ansatz(
    n: usize,
    layers: usize,
    block: BlockType,
    connectivity: Connectivity,
) -> Result<Circuit, AnsatzError> {
    let pairs = pairs_for(n, connectivity)?;
    let zip_ranks = match connectivity {
        Connectivity::NearestNeighbor => zip_ranks_nearest_neighbor(n),
        _ => (0..pairs.len()).collect(),
    };
    let mut circuit = Circuit::new(n);
    for layer in 0..layers {
        if layer > 0 && connectivity == Connectivity::SpinPreserving {
            if let Some((c, t)) = spin_preserving_entangler(n) {
                // Fixed negative CZ: R(-iZ) on the |0> control sector plus the
                // compensating frozen phase.
                let mut g = GateInstance::neg_controlled(c, t, Quaternion::Z_AXIS);
                g.phase = -std::f64::consts::FRAC_PI_2;
                g.trainable = false;
                circuit.gates.push(g);
            }
        }
        for (block_idx, &(a, b)) in pairs.iter().enumerate() {
            let mut units = Vec::new();
            match block {
                BlockType::Fqs => {
                    let g1 = circuit.push(GateInstance::single(a, Quaternion::IDENTITY));
                    let g2 = circuit.push(GateInstance::single(b, Quaternion::IDENTITY));
                    circuit
                        .gates
                        .push(GateInstance::fixed(GateKind::FixedCz, vec![a, b]));
                    units.push(UpdateUnit::Single { gate: g1 });
                    units.push(UpdateUnit::Single { gate: g2 });
                }
                BlockType::Cfqs => {
                    let g1 = circuit.push(GateInstance::single(a, Quaternion::IDENTITY));
                    let g2 = circuit.push(GateInstance::single(b, Quaternion::IDENTITY));
                    let g3 = circuit.push(GateInstance::controlled(a, b, Quaternion::IDENTITY));
                    units.push(UpdateUnit::Single { gate: g1 });
                    units.push(UpdateUnit::Single { gate: g2 });
                    units.push(UpdateUnit::Controlled { gate: g3 });
                }
                BlockType::Scf => {
                    let g1 = circuit.push(GateInstance::single(a, Quaternion::IDENTITY));
                    let pos = circuit.push(GateInstance::controlled(a, b, Quaternion::IDENTITY));
                    let neg =
                        circuit.push(GateInstance::neg_controlled(a, b, Quaternion::IDENTITY));
                    units.push(UpdateUnit::Single { gate: g1 });
                    units.push(UpdateUnit::Pair {
                        pos_gate: pos,
                        neg_gate: neg,
                    });
                }
                BlockType::NumberPreserving => {
                    let g = circuit.push(GateInstance::number_preserving(
                        a,
                        b,
                        Quaternion::IDENTITY,
                    ));
                    units.push(UpdateUnit::Controlled { gate: g });
                }
            }
            circuit.blocks.push(BlockInfo {
                layer,
                zip_rank: zip_ranks[block_idx],
                units,
            });
        }
    }
    if block == BlockType::Fqs {
        append_final_singles(&mut circuit);
    }
    circuit.schedule = zipping_schedule(&circuit)?;
    Ok(circuit)
}

/// Appends one general single-qubit gate per qubit at the end of the circuit,
/// scheduled after all blocks. Built in automatically for the FQS block type;
/// available as an explicit option for the others (the standard two-qubit-block
/// ansatz of the compilation experiments carries this trailing layer).
pub fn append_final_singles(circuit: &mut Circuit) {
    let n = circuit.n_qubits;
    for q in 0..n {
        let idx = circuit.gates.len();
        circuit.gates.push(GateInstance::single(q, Quaternion::IDENTITY));
        let unit = UpdateUnit::Single { gate: idx };
        circuit.tail_units.push(unit);
        circuit.schedule.push(unit);
    }
}

/// Update order given by the block numerals of the ansatz figure: within each
/// layer, blocks alternate between the two brick columns top to bottom; gates
/// within a block keep their subscript order. Requires a circuit from
/// [`build_alt_ansatz`].
pub fn zipping_schedule(circuit: &Circuit) -> Result<Vec<UpdateUnit>, AnsatzError> {
    schedule_by(circuit, |b| b.zip_rank)
}

/// Update order following the circuit's gate order (both brick columns of a layer
/// in construction order).
pub fn ascending_schedule(circuit: &Circuit) -> Result<Vec<UpdateUnit>, AnsatzError> {
    if circuit.blocks.is_empty() {
        return Err(AnsatzError::ForeignCircuit);
    }
    let mut schedule = Vec::new();
    for block in &circuit.blocks {
        schedule.extend(block.units.iter().copied());
    }
    schedule.extend(circuit.tail_units.iter().copied());
    Ok(schedule)
}

fn schedule_by(
    circuit: &Circuit,
    rank: impl Fn(&BlockInfo) -> usize,
) -> Result<Vec<UpdateUnit>, AnsatzError> {
    if circuit.blocks.is_empty() {
        return Err(AnsatzError::ForeignCircuit);
    }
    let mut order: Vec<usize> = (0..circuit.blocks.len()).collect();
    order.sort_by_key(|&i| (circuit.blocks[i].layer, rank(&circuit.blocks[i])));
    let mut schedule = Vec::new();
    for i in order {
        schedule.extend(circuit.blocks[i].units.iter().copied());
    }
    schedule.extend(circuit.tail_units.iter().copied());
    Ok(schedule)
}

/// Applies an initialization policy in place. Deterministic given `rng_seed`.
pub fn initialize(circuit: &mut Circuit, policy: InitPolicy, rng_seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for gate in &mut circuit.gates {
        if !gate.trainable {
            continue;
        }
        match (policy, gate.kind) {
            (InitPolicy::Random, _) => {
                gate.params = Some(Quaternion::random(&mut rng));
                gate.phase = 0.0;
            }
            (InitPolicy::CzInit, GateKind::Single) => {
                gate.params = Some(Quaternion::random(&mut rng));
            }
            (InitPolicy::CzInit, _) => set_cz(gate),
            (InitPolicy::WarmStart { max_angle }, GateKind::Single)
            | (InitPolicy::WarmStart { max_angle }, GateKind::NumberPreserving) => {
                gate.params = Some(near_identity(&mut rng, max_angle));
                gate.phase = 0.0;
            }
            (InitPolicy::WarmStart { .. }, _) => set_cz(gate),
        }
    }
}

fn set_cz(gate: &mut GateInstance) {
    gate.params = Some(Quaternion::Z_AXIS);
    gate.phase = match gate.kind {
        GateKind::NegControlled => -std::f64::consts::FRAC_PI_2,
        _ => std::f64::consts::FRAC_PI_2,
    };
}

fn near_identity(rng: &mut ChaCha8Rng, max_angle: f64) -> Quaternion {
    if max_angle == 0.0 {
        return Quaternion::IDENTITY;
    }
    // Axis uniform on the Bloch sphere, angle uniform in [0, max_angle].
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    let axis = [r * phi.cos(), r * phi.sin(), z];
    let angle = rng.random_range(0.0..=max_angle);
    Quaternion::from_axis_angle(axis, angle).expect("unit axis")
}

/// Writes the circuit in the line-oriented export format.
///
/// One gate per line: `SQ t qi qx qy qz`, `CU c t beta gamma delta theta`,
/// `NCU c t beta gamma delta theta`, `NP a b qi qx qy qz theta`, `CZ a b`,
/// `CNOT c t`, `H t`, `RZ t theta`. Values carry 17 significant digits.
pub fn export_circuit(circuit: &Circuit) -> String {
    fn fmt(v: f64) -> String {
        format!("{v:.16e}")
    }
    let mut out = String::new();
    out.push_str(&format!("QUBITS {}\n", circuit.n_qubits));
    for gate in &circuit.gates {
        let q = gate.qubits.as_slice();
        let line = match gate.kind {
            GateKind::Single => {
                let p = gate.quaternion();
                format!(
                    "SQ {} {} {} {} {}",
                    q[0],
                    fmt(p.qi),
                    fmt(p.qx),
                    fmt(p.qy),
                    fmt(p.qz)
                )
            }
            GateKind::Controlled | GateKind::NegControlled => {
                let d = decompose_controlled(&gate.quaternion());
                let tag = if gate.kind == GateKind::Controlled {
                    "CU"
                } else {
                    "NCU"
                };
                format!(
                    "{tag} {} {} {} {} {} {}",
                    q[0],
                    q[1],
                    fmt(d.beta),
                    fmt(d.gamma),
                    fmt(d.delta),
                    fmt(gate.phase)
                )
            }
            GateKind::NumberPreserving => {
                let p = gate.quaternion();
                format!(
                    "NP {} {} {} {} {} {} {}",
                    q[0],
                    q[1],
                    fmt(p.qi),
                    fmt(p.qx),
                    fmt(p.qy),
                    fmt(p.qz),
                    fmt(gate.phase)
                )
            }
            GateKind::FixedCz => format!("CZ {} {}", q[0], q[1]),
            GateKind::FixedCnot => format!("CNOT {} {}", q[0], q[1]),
            GateKind::FixedH => format!("H {}", q[0]),
            GateKind::FixedRz(theta) => format!("RZ {} {}", q[0], fmt(theta)),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Parses the export format back into a circuit. The schedule is not part of
/// the format; imported circuits carry an empty one.
pub fn parse_circuit(text: &str) -> Result<Circuit, AnsatzError> {
    let mut n_qubits: Option<usize> = None;
    let mut gates = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| AnsatzError::Parse {
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let tag = fields[0];
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(format!("invalid qubit index '{s}'")))
        };
        let parse_f64 = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| err(format!("invalid number '{s}'")))
        };
        let need = |count: usize| {
            if fields.len() != count + 1 {
                Err(err(format!(
                    "{tag} expects {count} fields, got {}",
                    fields.len() - 1
                )))
            } else {
                Ok(())
            }
        };
        if tag == "QUBITS" {
            need(1)?;
            n_qubits = Some(parse_usize(fields[1])?);
            continue;
        }
        let gate = match tag {
            "SQ" => {
                need(5)?;
                GateInstance::single(
                    parse_usize(fields[1])?,
                    Quaternion::try_new(
                        parse_f64(fields[2])?,
                        parse_f64(fields[3])?,
                        parse_f64(fields[4])?,
                        parse_f64(fields[5])?,
                    )?,
                )
            }
            "CU" | "NCU" => {
                need(6)?;
                let d = crate::gates::ControlledDecomposition {
                    beta: parse_f64(fields[3])?,
                    gamma: parse_f64(fields[4])?,
                    delta: parse_f64(fields[5])?,
                    theta: 0.0,
                };
                let q = quaternion_from_decomposition(&d);
                let mut g = if tag == "CU" {
                    GateInstance::controlled(parse_usize(fields[1])?, parse_usize(fields[2])?, q)
                } else {
                    GateInstance::neg_controlled(
                        parse_usize(fields[1])?,
                        parse_usize(fields[2])?,
                        q,
                    )
                };
                g.phase = parse_f64(fields[6])?;
                g
            }
            "NP" => {
                need(7)?;
                let mut g = GateInstance::number_preserving(
                    parse_usize(fields[1])?,
                    parse_usize(fields[2])?,
                    Quaternion::try_new(
                        parse_f64(fields[3])?,
                        parse_f64(fields[4])?,
                        parse_f64(fields[5])?,
                        parse_f64(fields[6])?,
                    )?,
                );
                g.phase = parse_f64(fields[7])?;
                g
            }
            "CZ" => {
                need(2)?;
                GateInstance::fixed(
                    GateKind::FixedCz,
                    vec![parse_usize(fields[1])?, parse_usize(fields[2])?],
                )
            }
            "CNOT" => {
                need(2)?;
                GateInstance::fixed(
                    GateKind::FixedCnot,
                    vec![parse_usize(fields[1])?, parse_usize(fields[2])?],
                )
            }
            "H" => {
                need(1)?;
                GateInstance::fixed(GateKind::FixedH, vec![parse_usize(fields[1])?])
            }
            "RZ" => {
                need(2)?;
                GateInstance::fixed(
                    GateKind::FixedRz(parse_f64(fields[2])?),
                    vec![parse_usize(fields[1])?],
                )
            }
            other => return Err(err(format!("unknown gate tag '{other}'"))),
        };
        gates.push(gate);
    }
    let n = n_qubits.ok_or_else(|| AnsatzError::Parse {
        line: 0,
        message: "missing QUBITS header".into(),
    })?;
    let mut circuit = Circuit::new(n);
    for mut gate in gates {
        for &q in &gate.qubits {
            if q >= n {
                return Err(AnsatzError::Parse {
                    line: 0,
                    message: format!("qubit {q} out of range for {n} qubits"),
                });
            }
        }
        gate.trainable = false; // imported circuits are applied, not optimized
        circuit.gates.push(gate);
    }
    Ok(circuit)
}
