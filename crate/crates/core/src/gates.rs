//! Quaternion algebra and gate-matrix construction.
//!
//! A general SU(2) gate is parameterized by a unit quaternion `q` as
//! `R(q) = q_i I - i q_x X - i q_y Y - i q_z Z`. Controlled, negative-controlled
//! and number-preserving two-qubit gates are built from the same parameterization.
//! Two-qubit matrices use the basis ordering `|c t>` with the first qubit of the
//! gate as the most significant bit.

use nalgebra::{Matrix2, Matrix4, SMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type CMat2 = Matrix2<Complex64>;
pub type CMat4 = Matrix4<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error)]
pub enum GateError {
    #[error("rotation axis has zero norm")]
    ZeroAxis,
    #[error("quaternion has zero norm")]
    ZeroQuaternion,
}

/// Unit 4-vector parameterizing an SU(2) gate.
///
/// The constructor normalizes, so `qi^2 + qx^2 + qy^2 + qz^2 = 1` always holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub qi: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        qi: 1.0,
        qx: 0.0,
        qy: 0.0,
        qz: 0.0,
    };

    /// `R(q) = -iZ`; together with a pi/2 phase gate on the control this is a CZ.
    pub const Z_AXIS: Quaternion = Quaternion {
        qi: 0.0,
        qx: 0.0,
        qy: 0.0,
        qz: 1.0,
    };

    /// Creates a quaternion, normalizing the components. Panics on a zero vector.
    pub fn new(qi: f64, qx: f64, qy: f64, qz: f64) -> Self {
        Self::try_new(qi, qx, qy, qz).expect("quaternion components must not all be zero")
    }

    pub fn try_new(qi: f64, qx: f64, qy: f64, qz: f64) -> Result<Self, GateError> {
        let norm = (qi * qi + qx * qx + qy * qy + qz * qz).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(GateError::ZeroQuaternion);
        }
        Ok(Quaternion {
            qi: qi / norm,
            qx: qx / norm,
            qy: qy / norm,
            qz: qz / norm,
        })
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.qi, self.qx, self.qy, self.qz]
    }

    /// Rotation by `angle` around a Bloch-sphere axis: `exp(-i angle/2 axis.sigma)`.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self, GateError> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(GateError::ZeroAxis);
        }
        let (s, c) = (angle / 2.0).sin_cos();
        Ok(Quaternion {
            qi: c,
            qx: s * axis[0] / norm,
            qy: s * axis[1] / norm,
            qz: s * axis[2] / norm,
        })
    }

    /// Flips the overall sign so the first nonzero component is positive.
    ///
    /// `q` and `-q` give the same single-qubit gate up to global phase; this picks a
    /// stable representative for fixtures. Controlled-gate costs are not invariant
    /// under the flip, so optimizer write-backs of controlled parameters skip it.
    pub fn canonicalized(self) -> Self {
        for c in self.as_array() {
            if c != 0.0 {
                return if c < 0.0 {
                    Quaternion {
                        qi: -self.qi,
                        qx: -self.qx,
                        qy: -self.qy,
                        qz: -self.qz,
                    }
                } else {
                    self
                };
            }
        }
        self
    }

    /// Component map `(qi, -qx, qy, -qz)`: `R(q.conjugate())` is the element-wise
    /// complex conjugate of `R(q)`.
    pub fn conjugate(self) -> Self {
        Quaternion {
            qi: self.qi,
            qx: -self.qx,
            qy: self.qy,
            qz: -self.qz,
        }
    }

    /// Hamilton product; `R(a) * R(b) = R(a.product(b))`.
    pub fn product(self, rhs: Quaternion) -> Self {
        Quaternion {
            qi: self.qi * rhs.qi - self.qx * rhs.qx - self.qy * rhs.qy - self.qz * rhs.qz,
            qx: self.qi * rhs.qx + self.qx * rhs.qi + self.qy * rhs.qz - self.qz * rhs.qy,
            qy: self.qi * rhs.qy + self.qy * rhs.qi + self.qz * rhs.qx - self.qx * rhs.qz,
            qz: self.qi * rhs.qz + self.qz * rhs.qi + self.qx * rhs.qy - self.qy * rhs.qx,
        }
    }

    pub fn dot(&self, rhs: &Quaternion) -> f64 {
        self.qi * rhs.qi + self.qx * rhs.qx + self.qy * rhs.qy + self.qz * rhs.qz
    }

    /// Uniform sample on the 3-sphere (four normal deviates, normalized).
    /// No sign canonicalization: the draw is symmetric under `q -> -q`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: [f64; 4] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            if let Ok(q) = Self::try_new(v[0], v[1], v[2], v[3]) {
                return q;
            }
        }
    }

    /// The SU(2) matrix `q_i I - i q_x X - i q_y Y - i q_z Z`.
    pub fn su2_matrix(&self) -> CMat2 {
        let Quaternion { qi, qx, qy, qz } = *self;
        CMat2::new(
            Complex64::new(qi, -qz),
            Complex64::new(-qy, -qx),
            Complex64::new(qy, -qx),
            Complex64::new(qi, qz),
        )
    }
}

/// Free-function form of [`Quaternion::su2_matrix`].
pub fn su2_from_quaternion(q: &Quaternion) -> CMat2 {
    q.su2_matrix()
}

/// Free-function form of [`Quaternion::from_axis_angle`].
pub fn quaternion_from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Quaternion, GateError> {
    Quaternion::from_axis_angle(axis, angle)
}

/// Free-function form of [`Quaternion::conjugate`].
pub fn conjugate_quaternion(q: &Quaternion) -> Quaternion {
    q.conjugate()
}

/// Which control value activates the target rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlPolarity {
    /// `|0><0| (x) I + |1><1| (x) R(q)`
    One,
    /// `|0><0| (x) R(q) + |1><1| (x) I`
    Zero,
}

/// 4x4 matrix of a (negative-)controlled quaternion gate, basis `|c t>`.
pub fn controlled_matrix(q: &Quaternion, polarity: ControlPolarity) -> CMat4 {
    let r = q.su2_matrix();
    let mut m = CMat4::identity();
    match polarity {
        ControlPolarity::One => {
            m[(2, 2)] = r[(0, 0)];
            m[(2, 3)] = r[(0, 1)];
            m[(3, 2)] = r[(1, 0)];
            m[(3, 3)] = r[(1, 1)];
        }
        ControlPolarity::Zero => {
            m[(0, 0)] = r[(0, 0)];
            m[(0, 1)] = r[(0, 1)];
            m[(1, 0)] = r[(1, 0)];
            m[(1, 1)] = r[(1, 1)];
        }
    }
    m
}

/// Controlled gate followed by a frozen `Rz(phase)` on the control line.
///
/// `q = (0,0,0,1)` with `phase = pi/2` reproduces a CZ up to global phase;
/// `q = (0,1,0,0)` with `phase = pi/2` reproduces a CNOT.
pub fn controlled_matrix_with_phase(q: &Quaternion, polarity: ControlPolarity, phase: f64) -> CMat4 {
    rz_on_control(phase) * controlled_matrix(q, polarity)
}

fn rz_on_control(theta: f64) -> CMat4 {
    let lo = Complex64::from_polar(1.0, -theta / 2.0);
    let hi = Complex64::from_polar(1.0, theta / 2.0);
    CMat4::from_diagonal(&nalgebra::Vector4::new(lo, lo, hi, hi))
}

/// Two-qubit gate acting as `R(q)` on span{|01>, |10>}, fixing |00> and |11>.
pub fn number_preserving_matrix(q: &Quaternion) -> CMat4 {
    let Quaternion { qi, qx, qy, qz } = *q;
    let mut m = CMat4::identity();
    m[(1, 1)] = Complex64::new(qi, -qz);
    m[(1, 2)] = Complex64::new(-qy, -qx);
    m[(2, 1)] = Complex64::new(qy, -qx);
    m[(2, 2)] = Complex64::new(qi, qz);
    m
}

/// Number-preserving gate with a frozen phase on its internal control line.
///
/// The gate is realized as `CNOT(a->b) . CU(b->a) . CNOT(a->b)` where the inner
/// controlled gate carries the `Rz(phase)` bookkeeping of CZ/CNOT initialization;
/// with `phase = 0` this is exactly [`number_preserving_matrix`].
pub fn number_preserving_matrix_with_phase(q: &Quaternion, phase: f64) -> CMat4 {
    if phase == 0.0 {
        return number_preserving_matrix(q);
    }
    let cnot = cnot_matrix();
    cnot * controlled_from_low_qubit(q, phase) * cnot
}

// Controlled gate whose control is the least significant qubit of the pair,
// target the most significant, with an Rz(phase) on the control.
fn controlled_from_low_qubit(q: &Quaternion, phase: f64) -> CMat4 {
    let r = q.su2_matrix();
    let lo = Complex64::from_polar(1.0, -phase / 2.0);
    let hi = Complex64::from_polar(1.0, phase / 2.0);
    let mut m = CMat4::zeros();
    m[(0, 0)] = lo;
    m[(2, 2)] = lo;
    m[(1, 1)] = hi * r[(0, 0)];
    m[(1, 3)] = hi * r[(0, 1)];
    m[(3, 1)] = hi * r[(1, 0)];
    m[(3, 3)] = hi * r[(1, 1)];
    m
}

/// CNOT in the `|c t>` basis (control most significant).
pub fn cnot_matrix() -> CMat4 {
    let mut m = CMat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

/// CZ in the `|c t>` basis.
pub fn cz_matrix() -> CMat4 {
    CMat4::from_diagonal(&nalgebra::Vector4::new(ONE, ONE, ONE, -ONE))
}

/// Negative-controlled Z: applies Z on the target when the control is |0>.
pub fn neg_cz_matrix() -> CMat4 {
    CMat4::from_diagonal(&nalgebra::Vector4::new(ONE, -ONE, ONE, ONE))
}

pub fn hadamard_matrix() -> CMat2 {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CMat2::new(h, h, h, -h)
}

/// `Rz(theta) = exp(-i theta Z / 2)`.
pub fn rz_matrix(theta: f64) -> CMat2 {
    CMat2::new(
        Complex64::from_polar(1.0, -theta / 2.0),
        ZERO,
        ZERO,
        Complex64::from_polar(1.0, theta / 2.0),
    )
}

fn ry_matrix(theta: f64) -> CMat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    CMat2::new(
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    )
}

/// Euler angles of the two-CNOT realization of a controlled quaternion gate.
///
/// The target-line sequence `Rz(beta), Ry(gamma/2), CNOT, Ry(-gamma/2),
/// Rz(-(delta+beta)/2), CNOT, Rz((delta-beta)/2)` together with `Rz(theta)` on the
/// control reproduces the controlled gate; `theta` is zero here and nonzero only
/// for gates carrying a frozen CZ/CNOT initialization phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlledDecomposition {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub theta: f64,
}

/// Inverts `q_i = cos((beta+delta)/2) cos(gamma/2)` and its companions.
///
/// Branch cuts: `gamma = 2 atan2(hypot(qx,qy), hypot(qi,qz))`, the half-angle sums
/// from `atan2(qz,qi)` and `atan2(qx,qy)`, and a degenerate `gamma` in {0, pi}
/// fixes the undetermined half-angle to 0.
pub fn decompose_controlled(q: &Quaternion) -> ControlledDecomposition {
    let rho_xy = q.qx.hypot(q.qy);
    let rho_iz = q.qi.hypot(q.qz);
    let gamma = 2.0 * rho_xy.atan2(rho_iz);
    let half_sum = if rho_iz > 0.0 { q.qz.atan2(q.qi) } else { 0.0 };
    let half_diff = if rho_xy > 0.0 { q.qx.atan2(q.qy) } else { 0.0 };
    ControlledDecomposition {
        beta: half_sum + half_diff,
        gamma,
        delta: half_sum - half_diff,
        theta: 0.0,
    }
}

/// Rebuilds the quaternion from decomposition angles via the forward relations.
pub fn quaternion_from_decomposition(d: &ControlledDecomposition) -> Quaternion {
    let (s_sum, c_sum) = ((d.beta + d.delta) / 2.0).sin_cos();
    let (s_diff, c_diff) = ((d.beta - d.delta) / 2.0).sin_cos();
    let (s_g, c_g) = (d.gamma / 2.0).sin_cos();
    Quaternion::new(c_sum * c_g, s_diff * s_g, c_diff * s_g, s_sum * c_g)
}

/// Multiplies out the decomposition circuit into a 4x4 matrix (control = first qubit).
pub fn recompose_controlled(d: &ControlledDecomposition) -> CMat4 {
    fn on_target(g: &CMat2) -> CMat4 {
        let mut m = CMat4::zeros();
        for blk in 0..2 {
            for r in 0..2 {
                for c in 0..2 {
                    m[(2 * blk + r, 2 * blk + c)] = g[(r, c)];
                }
            }
        }
        m
    }
    let cnot = cnot_matrix();
    let seq = [
        on_target(&rz_matrix(d.beta)),
        on_target(&ry_matrix(d.gamma / 2.0)),
        cnot,
        on_target(&ry_matrix(-d.gamma / 2.0)),
        on_target(&rz_matrix(-(d.delta + d.beta) / 2.0)),
        cnot,
        on_target(&rz_matrix((d.delta - d.beta) / 2.0)),
    ];
    let mut u = rz_on_control(d.theta);
    for g in seq.iter().rev() {
        u *= g;
    }
    u
}

/// Frobenius distance to the closest unitary, `||U' U - I||_F`.
pub fn unitarity_defect<const N: usize>(m: &SMatrix<Complex64, N, N>) -> f64 {
    (m.adjoint() * m - SMatrix::<Complex64, N, N>::identity()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mat2_close(a: &CMat2, b: &CMat2, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn phase_aligned_dist(a: &CMat4, b: &CMat4) -> f64 {
        // Frobenius distance after removing a global phase.
        let overlap = (a.adjoint() * b).trace();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        (a * phase - b).norm()
    }

    #[test]
    fn identity_quaternion_gives_identity_matrix() {
        let m = Quaternion::IDENTITY.su2_matrix();
        assert!(mat2_close(&m, &CMat2::identity(), 1e-15));
    }

    #[test]
    fn x_axis_quaternion_is_minus_i_x() {
        let m = Quaternion::new(0.0, 1.0, 0.0, 0.0).su2_matrix();
        let expected = CMat2::new(ZERO, Complex64::new(0.0, -1.0), Complex64::new(0.0, -1.0), ZERO);
        assert!(mat2_close(&m, &expected, 1e-15));
    }

    // Series oracle for exp(-i theta/2 n.sigma), independent of the closed form.
    fn exp_axis_angle(axis: [f64; 3], angle: f64) -> CMat2 {
        let gen = CMat2::new(
            Complex64::new(axis[2], 0.0),
            Complex64::new(axis[0], -axis[1]),
            Complex64::new(axis[0], axis[1]),
            Complex64::new(-axis[2], 0.0),
        ) * Complex64::new(0.0, -angle / 2.0);
        let mut sum = CMat2::identity();
        let mut term = CMat2::identity();
        for k in 1..60 {
            term = term * gen / Complex64::new(k as f64, 0.0);
            sum += term;
        }
        sum
    }

    #[test]
    fn axis_angle_matches_matrix_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let v: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if norm < 1e-6 {
                continue;
            }
            let axis = [v[0] / norm, v[1] / norm, v[2] / norm];
            let angle: f64 = rng.random_range(-8.0..8.0);
            let q = Quaternion::from_axis_angle(axis, angle).unwrap();
            assert!(mat2_close(&q.su2_matrix(), &exp_axis_angle(axis, angle), 1e-12));
        }
    }

    #[test]
    fn axis_angle_edge_cases() {
        let q = Quaternion::from_axis_angle([0.0, 0.0, 1.0], 0.0).unwrap();
        assert_eq!(q.as_array(), [1.0, 0.0, 0.0, 0.0]);
        let q = Quaternion::from_axis_angle([1.0, 0.0, 0.0], std::f64::consts::PI).unwrap();
        assert!((q.qx - 1.0).abs() < 1e-15 && q.qi.abs() < 1e-15);
        assert!(Quaternion::from_axis_angle([0.0, 0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn determinant_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let q = Quaternion::random(&mut rng);
            let det = q.su2_matrix().determinant();
            assert!((det - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn product_is_matrix_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let a = Quaternion::random(&mut rng);
            let b = Quaternion::random(&mut rng);
            let lhs = a.su2_matrix() * b.su2_matrix();
            let rhs = a.product(b).su2_matrix();
            assert!(mat2_close(&lhs, &rhs, 1e-12));
        }
    }

    #[test]
    fn conjugate_matches_elementwise_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let q = Quaternion::random(&mut rng);
            let conj = q.conjugate().su2_matrix();
            let direct = q.su2_matrix().map(|z| z.conj());
            assert!(mat2_close(&conj, &direct, 1e-14));
        }
        assert_eq!(
            Quaternion::IDENTITY.conjugate().as_array(),
            [1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            Quaternion::new(0.0, 1.0, 0.0, 0.0).conjugate().as_array(),
            [0.0, -1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn controlled_matrix_block_structure() {
        let id = controlled_matrix(&Quaternion::IDENTITY, ControlPolarity::One);
        assert!((id - CMat4::identity()).norm() < 1e-15);

        let cz_like = controlled_matrix(&Quaternion::Z_AXIS, ControlPolarity::One);
        let expected = CMat4::from_diagonal(&nalgebra::Vector4::new(
            ONE,
            ONE,
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
        ));
        assert!((cz_like - expected).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let q = Quaternion::random(&mut rng);
            let m = controlled_matrix(&q, ControlPolarity::One);
            let r = q.su2_matrix();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((m[(i, j)] - if i == j { ONE } else { ZERO }).norm() < 1e-15);
                    assert!((m[(2 + i, 2 + j)] - r[(i, j)]).norm() < 1e-15);
                }
            }
            assert!(unitarity_defect(&m) < 1e-12);
            let neg = controlled_matrix(&q, ControlPolarity::Zero);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((neg[(i, j)] - r[(i, j)]).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn phase_bookkeeping_reproduces_cz_and_cnot() {
        let cz = controlled_matrix_with_phase(
            &Quaternion::Z_AXIS,
            ControlPolarity::One,
            std::f64::consts::FRAC_PI_2,
        );
        assert!(phase_aligned_dist(&cz, &cz_matrix()) < 1e-14);

        let cnot = controlled_matrix_with_phase(
            &Quaternion::new(0.0, 1.0, 0.0, 0.0),
            ControlPolarity::One,
            std::f64::consts::FRAC_PI_2,
        );
        assert!(phase_aligned_dist(&cnot, &cnot_matrix()) < 1e-14);

        let ncz = controlled_matrix_with_phase(
            &Quaternion::Z_AXIS,
            ControlPolarity::Zero,
            -std::f64::consts::FRAC_PI_2,
        );
        assert!(phase_aligned_dist(&ncz, &neg_cz_matrix()) < 1e-14);
    }

    #[test]
    fn number_preserving_identity_and_unitarity() {
        let id = number_preserving_matrix(&Quaternion::IDENTITY);
        assert!((id - CMat4::identity()).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let q = Quaternion::random(&mut rng);
            assert!(unitarity_defect(&number_preserving_matrix(&q)) < 1e-12);
        }
    }

    #[test]
    fn number_preserving_commutes_with_total_z() {
        // Z(x)I + I(x)Z generates the particle-number symmetry on two qubits.
        let mut n_op = CMat4::zeros();
        for (idx, val) in [(0usize, 2.0), (1, 0.0), (2, 0.0), (3, -2.0)] {
            n_op[(idx, idx)] = Complex64::new(val, 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let q = Quaternion::random(&mut rng);
            let m = number_preserving_matrix(&q);
            assert!((m * n_op - n_op * m).norm() < 1e-12);
        }
    }

    #[test]
    fn number_preserving_equals_cnot_sandwich() {
        let cnot = cnot_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let q = Quaternion::random(&mut rng);
            let sandwich = cnot * controlled_from_low_qubit(&q, 0.0) * cnot;
            assert!(phase_aligned_dist(&sandwich, &number_preserving_matrix(&q)) < 1e-12);
        }
    }

    #[test]
    fn decomposition_trivial_cases() {
        let d = decompose_controlled(&Quaternion::IDENTITY);
        assert!(d.beta.abs() < 1e-15 && d.gamma.abs() < 1e-15 && d.delta.abs() < 1e-15);

        let d = decompose_controlled(&Quaternion::Z_AXIS);
        assert!(d.gamma.abs() < 1e-15);
        assert!((d.beta + d.delta - std::f64::consts::PI).abs() < 1e-12);
        let rec = recompose_controlled(&d);
        assert!(
            phase_aligned_dist(&rec, &controlled_matrix(&Quaternion::Z_AXIS, ControlPolarity::One))
                < 1e-12
        );
    }

    #[test]
    fn decomposition_roundtrip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let q = Quaternion::random(&mut rng);
            let d = decompose_controlled(&q);
            let rec = recompose_controlled(&d);
            let target = controlled_matrix(&q, ControlPolarity::One);
            let fidelity = (rec.adjoint() * target).trace().norm() / 4.0;
            assert!(fidelity > 1.0 - 1e-10, "fidelity {fidelity}");
            let q2 = quaternion_from_decomposition(&d);
            assert!(q.dot(&q2).abs() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn canonicalization_flips_leading_sign() {
        let q = Quaternion::new(-0.5, 0.5, 0.5, -0.5).canonicalized();
        assert!(q.qi > 0.0);
        let q = Quaternion::new(0.0, -1.0, 0.0, 0.0).canonicalized();
        assert_eq!(q.as_array(), [0.0, 1.0, 0.0, 0.0]);
    }
}
