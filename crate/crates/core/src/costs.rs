//! Cost-function backends: observable expectation, fidelity, Hilbert-Schmidt
//! test compilation costs on a doubled register (with optional subspace
//! restriction through Dicke-state inputs), and time-evolution infidelity.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use thiserror::Error;

use crate::ansatz::Circuit;
use crate::hamiltonian::PauliSum;
use crate::optimizer::CostFunction;
use crate::simulator::{DenseUnitary, SimError, Statevector};

#[derive(Debug, Error)]
pub enum CostError {
    #[error("subspace basis is empty")]
    EmptyBasis,
    #[error("bitstring {bits:#b} does not fit in {n} qubits")]
    BitstringOutOfRange { bits: u64, n: usize },
    #[error("duplicate bitstring in subspace basis")]
    DuplicateBitstring,
    #[error("Hamming weight {k} out of range for {n} qubits")]
    WeightOutOfRange { n: usize, k: usize },
    #[error("target acts on {target} qubits but circuit has {circuit}")]
    TargetMismatch { target: usize, circuit: usize },
    #[error("basis line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("t_max = {t_max} is not an integer multiple of dt = {dt}")]
    NonIntegerSteps { t_max: f64, dt: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Hamiltonian(#[from] crate::hamiltonian::HamiltonianError),
}

/// Evaluation mode of observable-based costs.
#[derive(Debug)]
pub enum EvalMode {
    Exact,
    /// Per-term shot-noise emulation; every evaluation draws from a fresh,
    /// deterministic stream derived from `base_seed`.
    Shots {
        shots: u64,
        base_seed: u64,
        counter: AtomicU64,
    },
}

impl EvalMode {
    pub fn shots(shots: u64, base_seed: u64) -> Self {
        EvalMode::Shots {
            shots,
            base_seed,
            counter: AtomicU64::new(0),
        }
    }

    fn evaluate(&self, state: &Statevector, h: &PauliSum) -> f64 {
        match self {
            EvalMode::Exact => state.expectation(h).expect("qubit counts checked"),
            EvalMode::Shots {
                shots,
                base_seed,
                counter,
            } => {
                let stream = counter.fetch_add(1, Ordering::Relaxed);
                state
                    .sampled_expectation(h, *shots, base_seed.wrapping_add(stream))
                    .expect("qubit counts checked")
            }
        }
    }

    fn is_exact(&self) -> bool {
        matches!(self, EvalMode::Exact)
    }
}

/// `<H>` of the circuit output on |0...0>.
pub fn vqe_cost(circuit: &Circuit, h: &PauliSum) -> Result<f64, SimError> {
    circuit.run()?.expectation(h)
}

/// VQE cost backend.
#[derive(Debug)]
pub struct VqeCost {
    pub hamiltonian: PauliSum,
    pub mode: EvalMode,
}

impl VqeCost {
    pub fn exact(hamiltonian: PauliSum) -> Self {
        VqeCost {
            hamiltonian,
            mode: EvalMode::Exact,
        }
    }
}

impl CostFunction for VqeCost {
    fn cost(&self, circuit: &Circuit) -> f64 {
        let state = circuit.run().expect("circuit qubits validated");
        self.mode.evaluate(&state, &self.hamiltonian)
    }

    fn is_exact(&self) -> bool {
        self.mode.is_exact()
    }
}

/// `1 - |<reference|circuit output>|^2`, in [0, 1].
pub fn fidelity_cost(circuit: &Circuit, reference: &Statevector) -> Result<f64, SimError> {
    let out = circuit.run()?;
    if out.n_qubits() != reference.n_qubits() {
        return Err(SimError::QubitCountMismatch {
            operator: reference.n_qubits(),
            state: out.n_qubits(),
        });
    }
    Ok(1.0 - reference.inner(&out).norm_sqr())
}

/// Fidelity-maximization backend (the cost is minimized).
#[derive(Debug)]
pub struct FidelityCost {
    pub reference: Statevector,
}

impl CostFunction for FidelityCost {
    fn cost(&self, circuit: &Circuit) -> f64 {
        fidelity_cost(circuit, &self.reference).expect("qubit counts validated")
    }
}

/// Distinct computational basis states spanning the compilation input subspace.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    n: usize,
    bitstrings: Vec<u64>,
}

impl SubspaceBasis {
    pub fn new(n: usize, bitstrings: Vec<u64>) -> Result<Self, CostError> {
        if bitstrings.is_empty() {
            return Err(CostError::EmptyBasis);
        }
        let mut seen = std::collections::HashSet::new();
        for &b in &bitstrings {
            if n < 64 && b >> n != 0 {
                return Err(CostError::BitstringOutOfRange { bits: b, n });
            }
            if !seen.insert(b) {
                return Err(CostError::DuplicateBitstring);
            }
        }
        Ok(SubspaceBasis { n, bitstrings })
    }

    /// All `2^n` computational basis states (the unrestricted maximally
    /// entangled input).
    pub fn full(n: usize) -> Self {
        SubspaceBasis {
            n,
            bitstrings: (0..1u64 << n).collect(),
        }
    }

    /// All strings of Hamming weight `k` (the support of a Dicke state).
    pub fn hamming_weight(n: usize, k: usize) -> Result<Self, CostError> {
        if k > n {
            return Err(CostError::WeightOutOfRange { n, k });
        }
        let bitstrings: Vec<u64> = (0..1u64 << n)
            .filter(|b| b.count_ones() as usize == k)
            .collect();
        Self::new(n, bitstrings)
    }

    /// Product of two Dicke supports: `n_alpha` excitations on the low half of
    /// the register and `n_beta` on the high half (spin-restricted input).
    pub fn spin_product(
        orbitals_per_spin: usize,
        n_alpha: usize,
        n_beta: usize,
    ) -> Result<Self, CostError> {
        let low = SubspaceBasis::hamming_weight(orbitals_per_spin, n_alpha)?;
        let high = SubspaceBasis::hamming_weight(orbitals_per_spin, n_beta)?;
        let mut bitstrings = Vec::with_capacity(low.len() * high.len());
        for &hb in &high.bitstrings {
            for &lb in &low.bitstrings {
                bitstrings.push((hb << orbitals_per_spin) | lb);
            }
        }
        Self::new(2 * orbitals_per_spin, bitstrings)
    }

    /// Parses one bitstring per line (leftmost character is the most
    /// significant qubit), `#` comments allowed.
    pub fn from_lines(text: &str, n: usize) -> Result<Self, CostError> {
        let mut bitstrings = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.len() != n || !line.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(CostError::Parse {
                    line: lineno + 1,
                    message: format!("expected a {n}-character bitstring, got '{line}'"),
                });
            }
            bitstrings.push(u64::from_str_radix(line, 2).expect("validated binary"));
        }
        Self::new(n, bitstrings)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.bitstrings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bitstrings.is_empty()
    }

    pub fn bitstrings(&self) -> &[u64] {
        &self.bitstrings
    }
}

/// Dicke state |D^n_k>: the equal superposition of all weight-k strings.
pub fn dicke_state(n: usize, k: usize) -> Result<Statevector, CostError> {
    let basis = SubspaceBasis::hamming_weight(n, k)?;
    let amp = Complex64::new(1.0 / (basis.len() as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    for &b in basis.bitstrings() {
        amps[b as usize] = amp;
    }
    Ok(Statevector::from_amplitudes(n, amps)?)
}

/// The doubled-register input `(1/sqrt|W|) sum_w |w>_A |w>_B` with system A on
/// qubits `0..n-1` and B on `n..2n-1`; Bell pairs sit on `(j, n+j)`.
pub fn entangled_input(basis: &SubspaceBasis) -> Statevector {
    let n = basis.n_qubits();
    let amp = Complex64::new(1.0 / (basis.len() as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (2 * n)];
    for &w in basis.bitstrings() {
        let idx = (w as usize) | ((w as usize) << n);
        amps[idx] = amp;
    }
    Statevector::from_amplitudes(2 * n, amps).expect("nonempty basis")
}

fn doubled_register_state(
    circuit_v: &Circuit,
    target_u: &DenseUnitary,
    basis: &SubspaceBasis,
) -> Result<Statevector, CostError> {
    let n = circuit_v.n_qubits();
    if target_u.n_qubits() != n {
        return Err(CostError::TargetMismatch {
            target: target_u.n_qubits(),
            circuit: n,
        });
    }
    if basis.n_qubits() != n {
        return Err(CostError::TargetMismatch {
            target: basis.n_qubits(),
            circuit: n,
        });
    }
    let mut state = entangled_input(basis);
    let a_qubits: Vec<usize> = (0..n).rev().collect();
    state.apply_dense(target_u.matrix(), &a_qubits)?;
    circuit_v.apply_conjugated(&mut state, n)?;
    Ok(state)
}

/// Global Hilbert-Schmidt-test cost `1 - |<Phi|U (x) V*|Phi>|^2` on the doubled
/// register; equals `1 - |tr(V'U)|^2 / d^2` for the full basis.
pub fn hst_global_cost(
    circuit_v: &Circuit,
    target_u: &DenseUnitary,
    basis: &SubspaceBasis,
) -> Result<f64, CostError> {
    let state = doubled_register_state(circuit_v, target_u, basis)?;
    let reference = entangled_input(basis);
    Ok(1.0 - reference.inner(&state).norm_sqr())
}

/// Direct restricted-trace form `1 - |sum_{w in W} <w|V'U|w>|^2 / |W|^2`,
/// the cross-check path for the statevector implementation.
pub fn hst_global_cost_trace(
    circuit_v: &Circuit,
    target_u: &DenseUnitary,
    basis: &SubspaceBasis,
) -> Result<f64, CostError> {
    let n = circuit_v.n_qubits();
    if target_u.n_qubits() != n || basis.n_qubits() != n {
        return Err(CostError::TargetMismatch {
            target: target_u.n_qubits(),
            circuit: n,
        });
    }
    let v = circuit_v.unitary()?;
    let product = v.adjoint() * target_u.matrix();
    let mut trace = Complex64::new(0.0, 0.0);
    for &w in basis.bitstrings() {
        trace += product[(w as usize, w as usize)];
    }
    let d = basis.len() as f64;
    Ok(1.0 - (trace / Complex64::new(d, 0.0)).norm_sqr())
}

/// Local Hilbert-Schmidt-test cost `(1/n) sum_j (1 - F_e^(j))` where `F_e^(j)`
/// is the Bell-pair projector expectation on `(A_j, B_j)`.
pub fn lhst_local_cost(
    circuit_v: &Circuit,
    target_u: &DenseUnitary,
    basis: &SubspaceBasis,
) -> Result<f64, CostError> {
    let state = doubled_register_state(circuit_v, target_u, basis)?;
    let n = circuit_v.n_qubits();
    let amps = state.amplitudes();
    let mut total = 0.0;
    for j in 0..n {
        let mask_a = 1usize << j;
        let mask_b = 1usize << (n + j);
        let both = mask_a | mask_b;
        let mut fidelity = 0.0;
        for idx in 0..amps.len() {
            if idx & both != 0 {
                continue;
            }
            fidelity += 0.5 * (amps[idx] + amps[idx | both]).norm_sqr();
        }
        total += 1.0 - fidelity;
    }
    Ok(total / n as f64)
}

/// Compilation cost backend: local cost for the first `switch_after` sweeps,
/// global cost afterwards (`switch_after = 0` is always-global).
#[derive(Debug)]
pub struct CompileCost {
    pub target: DenseUnitary,
    pub basis: SubspaceBasis,
    pub switch_after: usize,
    use_global: bool,
}

impl CompileCost {
    pub fn new(target: DenseUnitary, basis: SubspaceBasis, switch_after: usize) -> Self {
        CompileCost {
            target,
            basis,
            switch_after,
            use_global: switch_after == 0,
        }
    }

    pub fn global_cost(&self, circuit: &Circuit) -> Result<f64, CostError> {
        hst_global_cost(circuit, &self.target, &self.basis)
    }

    pub fn local_cost(&self, circuit: &Circuit) -> Result<f64, CostError> {
        lhst_local_cost(circuit, &self.target, &self.basis)
    }
}

impl CostFunction for CompileCost {
    fn cost(&self, circuit: &Circuit) -> f64 {
        let result = if self.use_global {
            self.global_cost(circuit)
        } else {
            self.local_cost(circuit)
        };
        result.expect("dimensions validated at construction")
    }

    fn begin_sweep(&mut self, sweep: usize) -> bool {
        let global = sweep > self.switch_after;
        let changed = global != self.use_global;
        self.use_global = global;
        changed
    }
}

/// Cost specification for experiment drivers.
pub enum CostSpec {
    Vqe {
        hamiltonian: PauliSum,
        shots: Option<(u64, u64)>,
    },
    Fidelity {
        reference: Statevector,
    },
    Compile {
        target: DenseUnitary,
        basis: SubspaceBasis,
        switch_after: usize,
    },
}

impl CostSpec {
    pub fn build(self) -> Box<dyn CostFunction> {
        match self {
            CostSpec::Vqe { hamiltonian, shots } => Box::new(VqeCost {
                hamiltonian,
                mode: match shots {
                    None => EvalMode::Exact,
                    Some((shots, seed)) => EvalMode::shots(shots, seed),
                },
            }),
            CostSpec::Fidelity { reference } => Box::new(FidelityCost { reference }),
            CostSpec::Compile {
                target,
                basis,
                switch_after,
            } => Box::new(CompileCost::new(target, basis, switch_after)),
        }
    }
}

/// One repeated application of a compiled evolution step.
pub enum CompiledStep<'a> {
    Circuit(&'a Circuit),
    Unitary(&'a DenseUnitary),
}

impl CompiledStep<'_> {
    fn apply(&self, state: &mut Statevector) -> Result<(), SimError> {
        match self {
            CompiledStep::Circuit(c) => c.apply(state),
            CompiledStep::Unitary(u) => {
                let qubits: Vec<usize> = (0..state.n_qubits()).rev().collect();
                state.apply_dense(u.matrix(), &qubits)
            }
        }
    }
}

/// Infidelity series `1 - F(k dt)` for `k = 0 ..= t_max/dt`, where
/// `F(t) = |<psi(t)_approx | psi(t)_exact>|^2`: the approximate state advances by
/// one application of the compiled step per increment, the exact one by
/// `exp(-i H dt)`. At `t = 0` both states coincide and the infidelity is zero by
/// definition.
pub fn dynamics_infidelity(
    step: &CompiledStep,
    h: &PauliSum,
    t_max: f64,
    dt: f64,
    psi_ini: &Statevector,
) -> Result<Vec<(f64, f64)>, CostError> {
    let ratio = t_max / dt;
    let steps = ratio.round();
    if !(ratio - steps).abs().lt(&1e-9) || steps < 0.0 {
        return Err(CostError::NonIntegerSteps { t_max, dt });
    }
    let steps = steps as usize;
    let exact_step = h.time_evolution(dt)?;
    let all_qubits: Vec<usize> = (0..psi_ini.n_qubits()).rev().collect();
    let mut approx = psi_ini.clone();
    let mut exact = psi_ini.clone();
    let mut series = Vec::with_capacity(steps + 1);
    series.push((0.0, 0.0));
    for k in 1..=steps {
        step.apply(&mut approx)?;
        exact.apply_dense(exact_step.matrix(), &all_qubits)?;
        let fidelity = approx.inner(&exact).norm_sqr();
        series.push((k as f64 * dt, 1.0 - fidelity));
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{Circuit, GateInstance};
    use crate::gates::Quaternion;
    use crate::hamiltonian::{ising_hamiltonian, parse_pauli_sum, PauliLetter, PauliString};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_circuit(n: usize, seed: u64) -> Circuit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = Circuit::new(n);
        for _ in 0..3 * n {
            if n >= 2 && rng.random::<bool>() {
                let control = rng.random_range(0..n);
                let mut target = rng.random_range(0..n);
                while target == control {
                    target = rng.random_range(0..n);
                }
                c.push(GateInstance::controlled(
                    control,
                    target,
                    Quaternion::random(&mut rng),
                ));
            } else {
                c.push(GateInstance::single(
                    rng.random_range(0..n),
                    Quaternion::random(&mut rng),
                ));
            }
        }
        c
    }

    fn random_unitary(n: usize, seed: u64) -> DenseUnitary {
        // QR of a random complex matrix gives a Haar-ish unitary; good enough
        // for cost identities.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 1usize << n;
        let m = DMatrix::<Complex64>::from_fn(dim, dim, |_, _| {
            Complex64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        });
        let qr = m.qr();
        let mut q = qr.q();
        let r = qr.r();
        for c in 0..dim {
            let d = r[(c, c)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
            for row in 0..dim {
                q[(row, c)] *= phase;
            }
        }
        DenseUnitary::try_new(q).unwrap()
    }

    #[test]
    fn vqe_cost_trivial_cases() {
        // Empty circuit, H = sum Z_i: every qubit in |0> contributes +1.
        let c = Circuit::new(3);
        let mut h = crate::hamiltonian::PauliSum::new(3);
        for i in 0..3 {
            h.add_term(0.5, PauliString::single(3, i, PauliLetter::Z));
        }
        assert!((vqe_cost(&c, &h).unwrap() - 1.5).abs() < 1e-12);

        // X layer then Z0: expectation -1.
        let mut c = Circuit::new(1);
        c.push(GateInstance::single(0, Quaternion::new(0.0, 1.0, 0.0, 0.0)));
        let h = parse_pauli_sum("1.0 Z").unwrap();
        assert!((vqe_cost(&c, &h).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn vqe_cost_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for seed in 0..5 {
            let c = random_circuit(4, seed);
            let mut h = crate::hamiltonian::PauliSum::new(4);
            for _ in 0..6 {
                let letters: Vec<PauliLetter> = (0..4)
                    .map(|_| match rng.random_range(0..4) {
                        0 => PauliLetter::I,
                        1 => PauliLetter::X,
                        2 => PauliLetter::Y,
                        _ => PauliLetter::Z,
                    })
                    .collect();
                h.add_term(rng.random::<f64>() - 0.5, PauliString::new(letters).unwrap());
            }
            let direct = vqe_cost(&c, &h).unwrap();
            let dense = h.dense_matrix().unwrap();
            let out = c.run().unwrap();
            let v = nalgebra::DVector::from_column_slice(out.amplitudes());
            let oracle = (v.adjoint() * dense * v)[(0, 0)].re;
            assert!((direct - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn fidelity_cost_limits() {
        let c = random_circuit(3, 7);
        let out = c.run().unwrap();
        assert!(fidelity_cost(&c, &out).unwrap().abs() < 1e-12);

        // Orthogonal reference: basis state with zero amplitude overlap.
        let reference = Statevector::basis_state(3, 0);
        let mut flipper = Circuit::new(3);
        flipper.push(GateInstance::single(0, Quaternion::new(0.0, 1.0, 0.0, 0.0)));
        assert!((fidelity_cost(&flipper, &reference).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_equals_projector_expectation() {
        // Rank-1 observable route: expand |ref><ref| in the Pauli basis.
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let c = random_circuit(2, 99);
        let amps: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let reference = Statevector::from_amplitudes(2, amps).unwrap();
        let mut projector = crate::hamiltonian::PauliSum::new(2);
        let letters = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
        let rv = nalgebra::DVector::from_column_slice(reference.amplitudes());
        for &l0 in &letters {
            for &l1 in &letters {
                let string = PauliString::new(vec![l0, l1]).unwrap();
                let p = crate::hamiltonian::PauliSum::from_terms(2, vec![(1.0, string.clone())])
                    .unwrap()
                    .dense_matrix()
                    .unwrap();
                let coeff = (rv.adjoint() * p * &rv)[(0, 0)].re / 4.0;
                projector.add_term(coeff, string);
            }
        }
        let via_projector = 1.0 - vqe_cost(&c, &projector).unwrap();
        let direct = fidelity_cost(&c, &reference).unwrap();
        assert!((via_projector - direct).abs() < 1e-10);
    }

    #[test]
    fn dicke_states() {
        let d21 = dicke_state(2, 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d21.amplitude(0b01).re - s).abs() < 1e-15);
        assert!((d21.amplitude(0b10).re - s).abs() < 1e-15);
        assert_eq!(d21.amplitude(0b00).norm(), 0.0);

        assert!(dicke_state(3, 4).is_err());
        let d31 = dicke_state(3, 1).unwrap();
        assert!((d31.amplitude(0b001).re - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn spin_basis_matches_table() {
        let spin = SubspaceBasis::spin_product(2, 1, 1).unwrap();
        let mut set: Vec<u64> = spin.bitstrings().to_vec();
        set.sort_unstable();
        assert_eq!(set, vec![0b0101, 0b0110, 0b1001, 0b1010]);

        let compact = SubspaceBasis::new(4, vec![0b0101, 0b1010]).unwrap();
        assert_eq!(compact.len(), 2);

        let particle = SubspaceBasis::hamming_weight(4, 2).unwrap();
        assert_eq!(particle.len(), 6);
        assert_eq!(SubspaceBasis::full(4).len(), 16);
    }

    #[test]
    fn basis_validation_and_parsing() {
        assert!(SubspaceBasis::new(2, vec![]).is_err());
        assert!(SubspaceBasis::new(2, vec![0b100]).is_err());
        assert!(SubspaceBasis::new(2, vec![1, 1]).is_err());
        let parsed = SubspaceBasis::from_lines("0101\n1010 # comment\n", 4).unwrap();
        assert_eq!(parsed.bitstrings(), &[0b0101, 0b1010]);
        assert!(SubspaceBasis::from_lines("012\n", 3).is_err());
    }

    #[test]
    fn hst_identity_and_phase_invariance() {
        let n = 3;
        let c = Circuit::new(n); // V = I
        let basis = SubspaceBasis::full(n);
        let id = DenseUnitary::identity(n);
        assert!(hst_global_cost(&c, &id, &basis).unwrap().abs() < 1e-12);
        assert!(lhst_local_cost(&c, &id, &basis).unwrap().abs() < 1e-12);

        // Global phase on the target does not change the cost.
        let phase = DMatrix::<Complex64>::identity(8, 8) * Complex64::from_polar(1.0, 0.83);
        let u = DenseUnitary::try_new(phase).unwrap();
        assert!(hst_global_cost(&c, &u, &basis).unwrap().abs() < 1e-12);
    }

    #[test]
    fn hst_matches_trace_formula_on_full_basis() {
        for seed in 0..6 {
            let c = random_circuit(3, 100 + seed);
            let u = random_unitary(3, 200 + seed);
            let basis = SubspaceBasis::full(3);
            let via_register = hst_global_cost(&c, &u, &basis).unwrap();
            let via_trace = hst_global_cost_trace(&c, &u, &basis).unwrap();
            assert!(
                (via_register - via_trace).abs() < 1e-10,
                "register {via_register} trace {via_trace}"
            );
        }
    }

    #[test]
    fn lhst_sandwich_and_single_qubit_coincidence() {
        for seed in 0..10 {
            let n = 2 + (seed as usize) % 2;
            let c = random_circuit(n, 300 + seed);
            let u = random_unitary(n, 400 + seed);
            let basis = SubspaceBasis::full(n);
            let global = hst_global_cost(&c, &u, &basis).unwrap();
            let local = lhst_local_cost(&c, &u, &basis).unwrap();
            assert!(local <= global + 1e-10);
            assert!(global <= n as f64 * local + 1e-10);
            assert!((0.0..=1.0 + 1e-10).contains(&global));
            assert!((0.0..=1.0 + 1e-10).contains(&local));
        }

        // n = 1: the two costs coincide.
        let mut c = Circuit::new(1);
        c.push(GateInstance::single(0, Quaternion::new(0.4, 0.3, -0.2, 0.8)));
        let u = random_unitary(1, 500);
        let basis = SubspaceBasis::full(1);
        let g = hst_global_cost(&c, &u, &basis).unwrap();
        let l = lhst_local_cost(&c, &u, &basis).unwrap();
        assert!((g - l).abs() < 1e-12);
    }

    #[test]
    fn conjugated_circuit_matches_conjugate_matrix() {
        for seed in 0..4 {
            let c = random_circuit(3, 600 + seed);
            let direct = c.unitary().unwrap().map(|z| z.conj());
            // Apply the conjugated circuit to basis states on an undoubled register.
            let dim = 1usize << 3;
            let mut rebuilt = DMatrix::<Complex64>::zeros(dim, dim);
            for col in 0..dim {
                let mut sv = Statevector::basis_state(3, col);
                c.apply_conjugated(&mut sv, 0).unwrap();
                for row in 0..dim {
                    rebuilt[(row, col)] = sv.amplitude(row);
                }
            }
            assert!((direct - rebuilt).norm() < 1e-10);
        }
    }

    #[test]
    fn compile_cost_switching() {
        let c = random_circuit(2, 700);
        let u = random_unitary(2, 701);
        let basis = SubspaceBasis::full(2);
        let mut cost = CompileCost::new(u, basis, 2);
        cost.begin_sweep(1);
        let local = cost.cost(&c);
        assert!((local - cost.local_cost(&c).unwrap()).abs() < 1e-15);
        assert!(!cost.begin_sweep(2));
        let changed = cost.begin_sweep(3);
        assert!(changed);
        let global = cost.cost(&c);
        assert!((global - cost.global_cost(&c).unwrap()).abs() < 1e-15);

        // switch_after = 0: always global.
        let u = random_unitary(2, 702);
        let mut cost = CompileCost::new(u, SubspaceBasis::full(2), 0);
        assert!(!cost.begin_sweep(1));
        let g = cost.cost(&c);
        assert!((g - cost.global_cost(&c).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn dynamics_with_exact_step_stays_faithful() {
        let h = ising_hamiltonian(3, 1.0, 0.5, false).unwrap();
        let dt = 0.25;
        let exact_step = h.time_evolution(dt).unwrap();
        let psi = dicke_state(3, 1).unwrap();
        let series =
            dynamics_infidelity(&CompiledStep::Unitary(&exact_step), &h, 5.0, dt, &psi).unwrap();
        assert_eq!(series.len(), 21);
        assert_eq!(series[0], (0.0, 0.0));
        for (_, infidelity) in &series {
            assert!(*infidelity < 1e-10);
        }

        assert!(matches!(
            dynamics_infidelity(&CompiledStep::Unitary(&exact_step), &h, 1.1, 0.25, &psi),
            Err(CostError::NonIntegerSteps { .. })
        ));
    }

    #[test]
    fn dynamics_matches_matrix_power_oracle() {
        let h = ising_hamiltonian(2, 0.8, 0.3, false).unwrap();
        let dt = 0.5;
        let c = random_circuit(2, 800);
        let psi = Statevector::zero(2);
        let series = dynamics_infidelity(&CompiledStep::Circuit(&c), &h, 4.0, dt, &psi).unwrap();

        let v = c.unitary().unwrap();
        let h_dense = h.dense_matrix().unwrap();
        let psi_vec = nalgebra::DVector::from_column_slice(psi.amplitudes());
        for (k, (t, infidelity)) in series.iter().enumerate() {
            if k == 0 {
                continue;
            }
            // (V^dagger)^k exp(-i H t) |psi>, F = |<psi| . |^2 via matrix powers.
            let mut vk = DMatrix::<Complex64>::identity(4, 4);
            for _ in 0..k {
                vk = &vk * &v.adjoint();
            }
            let exact_u = h.time_evolution(*t).unwrap();
            let amp = (psi_vec.adjoint() * vk * exact_u.matrix() * &psi_vec)[(0, 0)];
            let oracle = 1.0 - amp.norm_sqr();
            assert!((infidelity - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn costs_stay_in_range() {
        let h = ising_hamiltonian(3, 1.0, std::f64::consts::FRAC_1_SQRT_2, true).unwrap();
        let bound = h.coefficient_norm();
        for seed in 0..5 {
            let c = random_circuit(3, 900 + seed);
            let e = vqe_cost(&c, &h).unwrap();
            assert!(e.abs() <= bound + 1e-10);
        }
    }
}
