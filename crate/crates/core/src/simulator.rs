//! Exact dense statevector engine.
//!
//! Amplitude index convention: qubit 0 is the least significant bit of the index.
//! Multi-qubit gate matrices list their qubits most-significant first, so a 4x4
//! matrix applied to `(c, t)` uses basis `|c t>`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::gates::{CMat2, CMat4};
use crate::hamiltonian::PauliSum;

/// Dense matrices are kept to at most this many qubits (doubled register for
/// 6-qubit compilation).
pub const MAX_DENSE_QUBITS: usize = 12;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error)]
pub enum SimError {
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("qubit indices must be distinct")]
    DuplicateQubits,
    #[error("matrix dimension {dim} does not match {n_qubits} qubits")]
    DimensionMismatch { dim: usize, n_qubits: usize },
    #[error("operator acts on {operator} qubits but state has {state}")]
    QubitCountMismatch { operator: usize, state: usize },
    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("state vector length {len} is not 2^{n_qubits}")]
    BadLength { len: usize, n_qubits: usize },
    #[error("state vector has zero norm")]
    ZeroNorm,
    #[error("{0} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}")]
    TooLarge(usize),
}

/// 2^n complex amplitudes, unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// |0...0> on `n_qubits`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![C_ZERO; 1 << n_qubits];
        amps[0] = C_ONE;
        Statevector { n_qubits, amps }
    }

    /// Computational basis state with the given amplitude index.
    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        assert!(index < (1 << n_qubits), "basis index out of range");
        let mut amps = vec![C_ZERO; 1 << n_qubits];
        amps[index] = C_ONE;
        Statevector { n_qubits, amps }
    }

    /// Builds a state from raw amplitudes, normalizing. Errors on a length that is
    /// not `2^n_qubits` or a zero-norm vector.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self, SimError> {
        if amps.len() != 1 << n_qubits {
            return Err(SimError::BadLength {
                len: amps.len(),
                n_qubits,
            });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(SimError::ZeroNorm);
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Statevector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<(), SimError> {
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.n_qubits {
                return Err(SimError::QubitOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
            if qubits[..i].contains(&q) {
                return Err(SimError::DuplicateQubits);
            }
        }
        Ok(())
    }

    /// Applies a single-qubit gate.
    pub fn apply_1q(&mut self, m: &CMat2, qubit: usize) -> Result<(), SimError> {
        self.check_qubits(&[qubit])?;
        let mask = 1usize << qubit;
        let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for low in base..base + mask {
                let j = low | mask;
                let a = self.amps[low];
                let b = self.amps[j];
                self.amps[low] = m00 * a + m01 * b;
                self.amps[j] = m10 * a + m11 * b;
            }
            base += mask << 1;
        }
        debug_assert!((self.norm_sqr() - 1.0).abs() < 1e-10);
        Ok(())
    }

    /// Applies a two-qubit gate; `qubits.0` is the most significant matrix bit.
    pub fn apply_2q(&mut self, m: &CMat4, qubits: (usize, usize)) -> Result<(), SimError> {
        self.check_qubits(&[qubits.0, qubits.1])?;
        let hi = 1usize << qubits.0;
        let lo = 1usize << qubits.1;
        let both = hi | lo;
        let (small, big) = if hi < lo { (hi, lo) } else { (lo, hi) };
        let len = self.amps.len();
        let mut outer = 0;
        while outer < len {
            let mut inner = outer;
            while inner < outer + big {
                for base in inner..inner + small {
                    let idx = [base, base | lo, base | hi, base | both];
                    let v = [
                        self.amps[idx[0]],
                        self.amps[idx[1]],
                        self.amps[idx[2]],
                        self.amps[idx[3]],
                    ];
                    for r in 0..4 {
                        let mut acc = C_ZERO;
                        for c in 0..4 {
                            acc += m[(r, c)] * v[c];
                        }
                        self.amps[idx[r]] = acc;
                    }
                }
                inner += small << 1;
            }
            outer += big << 1;
        }
        debug_assert!((self.norm_sqr() - 1.0).abs() < 1e-10);
        Ok(())
    }

    /// Validating variant for untrusted matrices: rejects non-unitary input.
    pub fn apply_1q_checked(&mut self, m: &CMat2, qubit: usize) -> Result<(), SimError> {
        let defect = crate::gates::unitarity_defect(m);
        if defect > 1e-10 {
            return Err(SimError::NotUnitary { defect });
        }
        self.apply_1q(m, qubit)
    }

    /// Validating variant for untrusted matrices: rejects non-unitary input.
    pub fn apply_2q_checked(&mut self, m: &CMat4, qubits: (usize, usize)) -> Result<(), SimError> {
        let defect = crate::gates::unitarity_defect(m);
        if defect > 1e-10 {
            return Err(SimError::NotUnitary { defect });
        }
        self.apply_2q(m, qubits)
    }

    /// Applies a dense `2^k x 2^k` unitary to `k` qubits, most significant first.
    pub fn apply_dense(&mut self, u: &DMatrix<Complex64>, qubits: &[usize]) -> Result<(), SimError> {
        self.check_qubits(qubits)?;
        let k = qubits.len();
        let dim = 1usize << k;
        if u.nrows() != dim || u.ncols() != dim {
            return Err(SimError::DimensionMismatch {
                dim: u.nrows(),
                n_qubits: k,
            });
        }
        let masks: Vec<usize> = qubits.iter().map(|&q| 1usize << q).collect();
        let all: usize = masks.iter().sum();
        let mut gathered = vec![C_ZERO; dim];
        let mut indices = vec![0usize; dim];
        for outer in 0..self.amps.len() {
            if outer & all != 0 {
                continue;
            }
            for sub in 0..dim {
                let mut idx = outer;
                for (bit_pos, mask) in masks.iter().enumerate() {
                    if sub & (1 << (k - 1 - bit_pos)) != 0 {
                        idx |= mask;
                    }
                }
                indices[sub] = idx;
                gathered[sub] = self.amps[idx];
            }
            for r in 0..dim {
                let mut acc = C_ZERO;
                for c in 0..dim {
                    acc += u[(r, c)] * gathered[c];
                }
                self.amps[indices[r]] = acc;
            }
        }
        debug_assert!((self.norm_sqr() - 1.0).abs() < 1e-10);
        Ok(())
    }

    /// `sum_k c_k <psi|P_k|psi>`; the imaginary residue (< 1e-10 for Hermitian
    /// input) is discarded.
    pub fn expectation(&self, observable: &PauliSum) -> Result<f64, SimError> {
        if observable.n_qubits() != self.n_qubits {
            return Err(SimError::QubitCountMismatch {
                operator: observable.n_qubits(),
                state: self.n_qubits,
            });
        }
        let mut total = Complex64::new(0.0, 0.0);
        for (coeff, string) in observable.terms() {
            total += Complex64::new(*coeff, 0.0) * self.pauli_expectation(string);
        }
        debug_assert!(total.im.abs() < 1e-10, "imaginary residue {}", total.im);
        Ok(total.re)
    }

    fn pauli_expectation(&self, string: &crate::hamiltonian::PauliString) -> Complex64 {
        let (flip, phase_mask, n_y) = string.masks();
        let i_pow = match n_y % 4 {
            0 => C_ONE,
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let mut acc = C_ZERO;
        for (j, amp) in self.amps.iter().enumerate() {
            let sign = if ((j & phase_mask).count_ones() & 1) == 1 {
                -1.0
            } else {
                1.0
            };
            acc += self.amps[j ^ flip].conj() * amp * sign;
        }
        acc * i_pow
    }

    /// Per-term shot-noise emulation: draws `shots` eigenvalue samples from the
    /// exact outcome distribution of each Pauli term and averages. Deterministic
    /// given `rng_seed`.
    pub fn sampled_expectation(
        &self,
        observable: &PauliSum,
        shots: u64,
        rng_seed: u64,
    ) -> Result<f64, SimError> {
        if shots == 0 {
            return Err(SimError::ZeroShots);
        }
        if observable.n_qubits() != self.n_qubits {
            return Err(SimError::QubitCountMismatch {
                operator: observable.n_qubits(),
                state: self.n_qubits,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut total = 0.0;
        for (coeff, string) in observable.terms() {
            if string.is_identity() {
                total += coeff;
                continue;
            }
            let exact = self.pauli_expectation(string).re;
            let p_plus = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
            let ups = Binomial::new(shots, p_plus)
                .expect("probability in range")
                .sample(&mut rng);
            let mean = 2.0 * (ups as f64) / (shots as f64) - 1.0;
            total += coeff * mean;
        }
        Ok(total)
    }
}

/// A validated `2^k x 2^k` unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseUnitary {
    matrix: DMatrix<Complex64>,
}

impl DenseUnitary {
    /// Validates that `m` is square with power-of-two dimension and unitary to
    /// 1e-10 in Frobenius norm.
    pub fn try_new(m: DMatrix<Complex64>) -> Result<Self, SimError> {
        let dim = m.nrows();
        if dim == 0 || m.ncols() != dim || !dim.is_power_of_two() {
            return Err(SimError::DimensionMismatch {
                dim,
                n_qubits: dim.trailing_zeros() as usize,
            });
        }
        if dim.trailing_zeros() as usize > MAX_DENSE_QUBITS {
            return Err(SimError::TooLarge(dim.trailing_zeros() as usize));
        }
        let defect = (m.adjoint() * &m - DMatrix::identity(dim, dim)).norm();
        if defect > 1e-10 {
            return Err(SimError::NotUnitary { defect });
        }
        Ok(DenseUnitary { matrix: m })
    }

    pub fn identity(n_qubits: usize) -> Self {
        DenseUnitary {
            matrix: DMatrix::identity(1 << n_qubits, 1 << n_qubits),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.matrix.nrows().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }
}
