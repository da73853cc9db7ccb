//! Cost-landscape tomography.
//!
//! The expectation value of a circuit cost as a function of one controlled gate's
//! unit quaternion `q` is the inhomogeneous quadratic `q^T J q + 2 a^T q + b`.
//! Embedding `q` into a 15-vector of quadratic monomials, linear terms and a
//! constant makes the map from model coefficients to measured costs linear, so
//! `(J, a, b)` is recovered from 14 cost evaluations plus one kernel row that
//! restores full rank. A controlled/negative-controlled pair uses the analogous
//! 36-component embedding with 35 evaluations, and a plain single-qubit gate the
//! 10-component quadratic-only embedding with 10 evaluations.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use thiserror::Error;

use crate::gates::Quaternion;

pub type Mat4 = Matrix4<f64>;
pub type Vec4 = Vector4<f64>;

/// Fitted-vs-measured residual above this (in exact mode) indicates a wiring bug.
pub const EXACT_RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error("parameter configuration must have {expected} rows, got {found}")]
    RowCount { expected: usize, found: usize },
    #[error("augmented design matrix is numerically singular (condition {condition:.3e})")]
    SingularConfiguration { condition: f64 },
    #[error("configuration line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Gate(#[from] crate::gates::GateError),
}

/// Quadratic-monomial embedding used for the single-gate fit:
/// `(qi^2, qx^2, qy^2, qz^2, 2 qi qx, 2 qi qy, 2 qi qz, 2 qx qy, 2 qx qz, 2 qy qz)`.
pub fn embed_single(q: &Quaternion) -> [f64; 10] {
    let [i, x, y, z] = q.as_array();
    [
        i * i,
        x * x,
        y * y,
        z * z,
        2.0 * i * x,
        2.0 * i * y,
        2.0 * i * z,
        2.0 * x * y,
        2.0 * x * z,
        2.0 * y * z,
    ]
}

/// Controlled-gate embedding: the 10 quadratics, then `(2qi, 2qx, 2qy, 2qz)`,
/// then the constant 1.
pub fn embed_controlled(q: &Quaternion) -> [f64; 15] {
    let quad = embed_single(q);
    let [i, x, y, z] = q.as_array();
    let mut out = [0.0; 15];
    out[..10].copy_from_slice(&quad);
    out[10] = 2.0 * i;
    out[11] = 2.0 * x;
    out[12] = 2.0 * y;
    out[13] = 2.0 * z;
    out[14] = 1.0;
    out
}

/// Kernel row appended to the controlled design matrix; orthogonal to every
/// embedding of a unit quaternion.
pub const KERNEL_ROW_CONTROLLED: [f64; 15] = [
    -1.0, -1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
];

/// Pair embedding: 10 `p`-quadratics, 10 `q`-quadratics, then the 16 cross terms
/// `2 p_mu q_nu` in row-major order over (i, x, y, z).
pub fn embed_pair(p: &Quaternion, q: &Quaternion) -> [f64; 36] {
    let mut out = [0.0; 36];
    out[..10].copy_from_slice(&embed_single(p));
    out[10..20].copy_from_slice(&embed_single(q));
    let pa = p.as_array();
    let qa = q.as_array();
    for (mu, &pv) in pa.iter().enumerate() {
        for (nu, &qv) in qa.iter().enumerate() {
            out[20 + 4 * mu + nu] = 2.0 * pv * qv;
        }
    }
    out
}

/// Kernel row of the pair design matrix: `-1/4` on the `p` squares, `+1/4` on the
/// `q` squares, zero elsewhere.
pub fn kernel_row_pair() -> [f64; 36] {
    let mut row = [0.0; 36];
    for i in 0..4 {
        row[i] = -0.25;
        row[10 + i] = 0.25;
    }
    row
}

// Raw stencil rows of the employed controlled-gate parameter configuration:
// the four axes, the six pairwise sums and four triple sums. Rows are
// normalized to unit quaternions before use.
const RAW_CONTROLLED_ROWS: [[f64; 4]; 14] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [1.0, 1.0, 0.0, 0.0],
    [1.0, 0.0, 1.0, 0.0],
    [1.0, 0.0, 0.0, 1.0],
    [0.0, 1.0, 1.0, 0.0],
    [0.0, 1.0, 0.0, 1.0],
    [0.0, 0.0, 1.0, 1.0],
    [1.0, 1.0, 1.0, 0.0],
    [1.0, 1.0, 0.0, 1.0],
    [1.0, 0.0, 1.0, 1.0],
    [0.0, 1.0, 1.0, 1.0],
];

// Raw (p, q) stencil rows of the employed pair configuration.
const RAW_PAIR_ROWS: [([f64; 4], [f64; 4]); 35] = [
    ([1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
    ([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]),
    ([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]),
    ([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]),
    ([0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
    ([0.0, 1.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]),
    ([0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]),
    ([0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]),
    ([0.0, 0.0, 1.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
    ([0.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0]),
    ([0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 1.0, 0.0]),
    ([0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]),
    ([0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0]),
    ([0.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, 0.0]),
    ([0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]),
    ([0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 1.0]),
    ([1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]),
    ([1.0, 0.0, 0.0, 0.0], [1.0, -1.0, 0.0, 0.0]),
    ([1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 1.0, 0.0]),
    ([1.0, 0.0, 0.0, 0.0], [1.0, 0.0, -1.0, 0.0]),
    ([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 1.0, 0.0]),
    ([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, -1.0, 0.0]),
    ([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 1.0]),
    ([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]),
    ([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]),
    ([1.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
    ([1.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
    ([1.0, 0.0, 1.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
    ([1.0, 0.0, -1.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
    ([1.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0]),
    ([1.0, 0.0, 0.0, -1.0], [1.0, 0.0, 0.0, 0.0]),
    ([0.0, 1.0, 1.0, 0.0], [1.0, 0.0, 0.0, 0.0]),
    ([0.0, 1.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0]),
    ([0.0, 0.0, 1.0, 1.0], [1.0, 0.0, 0.0, 0.0]),
    ([1.0, 1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 1.0]),
];

/// The 14 unit quaternions evaluated by a controlled-gate tomography.
#[derive(Debug, Clone)]
pub struct ControlledConfiguration {
    rows: Vec<Quaternion>,
}

impl ControlledConfiguration {
    /// The employed default stencil (normalized axis/pair/triple rows).
    pub fn standard() -> Self {
        let rows = RAW_CONTROLLED_ROWS
            .iter()
            .map(|r| Quaternion::from_array(*r))
            .collect();
        let cfg = ControlledConfiguration { rows };
        debug_assert!(cfg.condition_check().is_ok());
        cfg
    }

    /// Builds a configuration from raw rows, normalizing each and validating that
    /// the augmented design matrix is invertible.
    pub fn from_raw_rows(raw: Vec<[f64; 4]>) -> Result<Self, LandscapeError> {
        if raw.len() != 14 {
            return Err(LandscapeError::RowCount {
                expected: 14,
                found: raw.len(),
            });
        }
        let mut rows = Vec::with_capacity(14);
        for r in raw {
            rows.push(Quaternion::try_new(r[0], r[1], r[2], r[3])?);
        }
        let cfg = ControlledConfiguration { rows };
        cfg.condition_check()?;
        Ok(cfg)
    }

    pub fn rows(&self) -> &[Quaternion] {
        &self.rows
    }

    fn design_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(15, 15);
        for (i, q) in self.rows.iter().enumerate() {
            for (j, v) in embed_controlled(q).into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        for (j, v) in KERNEL_ROW_CONTROLLED.into_iter().enumerate() {
            m[(14, j)] = v;
        }
        m
    }

    fn condition_check(&self) -> Result<(), LandscapeError> {
        check_condition(&self.design_matrix())
    }
}

/// The 35 (p, q) pairs evaluated by a pair tomography.
#[derive(Debug, Clone)]
pub struct PairConfiguration {
    rows: Vec<(Quaternion, Quaternion)>,
}

impl PairConfiguration {
    pub fn standard() -> Self {
        let rows = RAW_PAIR_ROWS
            .iter()
            .map(|(p, q)| (Quaternion::from_array(*p), Quaternion::from_array(*q)))
            .collect();
        let cfg = PairConfiguration { rows };
        debug_assert!(cfg.condition_check().is_ok());
        cfg
    }

    /// Builds from raw 8-component rows (each half normalized separately).
    pub fn from_raw_rows(raw: Vec<[f64; 8]>) -> Result<Self, LandscapeError> {
        if raw.len() != 35 {
            return Err(LandscapeError::RowCount {
                expected: 35,
                found: raw.len(),
            });
        }
        let mut rows = Vec::with_capacity(35);
        for r in raw {
            rows.push((
                Quaternion::try_new(r[0], r[1], r[2], r[3])?,
                Quaternion::try_new(r[4], r[5], r[6], r[7])?,
            ));
        }
        let cfg = PairConfiguration { rows };
        cfg.condition_check()?;
        Ok(cfg)
    }

    pub fn rows(&self) -> &[(Quaternion, Quaternion)] {
        &self.rows
    }

    fn design_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(36, 36);
        for (i, (p, q)) in self.rows.iter().enumerate() {
            for (j, v) in embed_pair(p, q).into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        for (j, v) in kernel_row_pair().into_iter().enumerate() {
            m[(35, j)] = v;
        }
        m
    }

    fn condition_check(&self) -> Result<(), LandscapeError> {
        check_condition(&self.design_matrix())
    }
}

fn check_condition(m: &DMatrix<f64>) -> Result<(), LandscapeError> {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if !(min > 0.0) || max / min > 1e12 {
        return Err(LandscapeError::SingularConfiguration {
            condition: if min > 0.0 { max / min } else { f64::INFINITY },
        });
    }
    Ok(())
}

/// Parses a configuration file: one row per line of 4 (controlled) or 8 (pair)
/// decimals, `#` comments allowed. Returns whichever configuration the width
/// indicates.
pub fn parse_configuration(
    text: &str,
) -> Result<(Option<ControlledConfiguration>, Option<PairConfiguration>), LandscapeError> {
    let mut rows4: Vec<[f64; 4]> = Vec::new();
    let mut rows8: Vec<[f64; 8]> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|_| LandscapeError::Parse {
            line: lineno + 1,
            message: "invalid number".into(),
        })?;
        match vals.len() {
            4 => rows4.push([vals[0], vals[1], vals[2], vals[3]]),
            8 => rows8.push([
                vals[0], vals[1], vals[2], vals[3], vals[4], vals[5], vals[6], vals[7],
            ]),
            other => {
                return Err(LandscapeError::Parse {
                    line: lineno + 1,
                    message: format!("expected 4 or 8 values per row, got {other}"),
                })
            }
        }
    }
    if !rows4.is_empty() && !rows8.is_empty() {
        return Err(LandscapeError::Parse {
            line: 0,
            message: "file mixes 4- and 8-component rows".into(),
        });
    }
    if !rows4.is_empty() {
        Ok((Some(ControlledConfiguration::from_raw_rows(rows4)?), None))
    } else if !rows8.is_empty() {
        Ok((None, Some(PairConfiguration::from_raw_rows(rows8)?)))
    } else {
        Err(LandscapeError::Parse {
            line: 0,
            message: "no rows found".into(),
        })
    }
}

/// Fitted model `q^T J q` of a single-qubit gate.
#[derive(Debug, Clone)]
pub struct SingleModel {
    pub j: Mat4,
    /// Max fitted-vs-measured discrepancy over the stencil rows.
    pub residual: f64,
}

impl SingleModel {
    pub fn predict(&self, q: &Quaternion) -> f64 {
        let v = Vec4::from_column_slice(&q.as_array());
        (v.transpose() * self.j * v)[0]
    }
}

/// Fitted model `q^T J q + 2 a^T q + b` of a controlled gate.
#[derive(Debug, Clone)]
pub struct ControlledModel {
    pub j: Mat4,
    pub a: Vec4,
    pub b: f64,
    pub residual: f64,
}

impl ControlledModel {
    pub fn predict(&self, q: &Quaternion) -> f64 {
        let v = Vec4::from_column_slice(&q.as_array());
        (v.transpose() * self.j * v)[0] + 2.0 * self.a.dot(&v) + self.b
    }
}

/// Fitted model `p^T J p + 2 p^T K q + q^T L q` of a controlled /
/// negative-controlled pair sharing a control.
///
/// `K` is the real symmetrized cross block: the cost depends on the paper's
/// complex `K` only through `p^T K q + q^T K^H p = 2 p^T Re(K) q`, which is all
/// the 36-real-unknown tomography can identify.
#[derive(Debug, Clone)]
pub struct PairModel {
    pub j: Mat4,
    pub k: Mat4,
    pub l: Mat4,
    pub residual: f64,
}

impl PairModel {
    pub fn predict(&self, p: &Quaternion, q: &Quaternion) -> f64 {
        let pv = Vec4::from_column_slice(&p.as_array());
        let qv = Vec4::from_column_slice(&q.as_array());
        (pv.transpose() * self.j * pv)[0]
            + (qv.transpose() * self.l * qv)[0]
            + 2.0 * (pv.transpose() * self.k * qv)[0]
    }

    /// Controlled-model slice in `p` at fixed `q`: `a = K q`, `b = q^T L q`.
    pub fn p_slice(&self, q: &Quaternion) -> ControlledModel {
        let qv = Vec4::from_column_slice(&q.as_array());
        ControlledModel {
            j: self.j,
            a: self.k * qv,
            b: (qv.transpose() * self.l * qv)[0],
            residual: self.residual,
        }
    }

    /// Controlled-model slice in `q` at fixed `p`: `a = K^T p`, `b = p^T J p`.
    pub fn q_slice(&self, p: &Quaternion) -> ControlledModel {
        let pv = Vec4::from_column_slice(&p.as_array());
        ControlledModel {
            j: self.l,
            a: self.k.transpose() * pv,
            b: (pv.transpose() * self.j * pv)[0],
            residual: self.residual,
        }
    }
}

fn symmetric_from_packed(packed: &[f64]) -> Mat4 {
    // Order: ii, xx, yy, zz, ix, iy, iz, xy, xz, yz.
    let mut j = Mat4::zeros();
    for d in 0..4 {
        j[(d, d)] = packed[d];
    }
    let off = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    for (k, &(r, c)) in off.iter().enumerate() {
        j[(r, c)] = packed[4 + k];
        j[(c, r)] = packed[4 + k];
    }
    j
}

/// Fits the symmetric `J` of a single-qubit gate from 10 evaluations at the
/// first 10 stencil rows (4 axes and 6 normalized pairwise sums).
pub fn estimate_single(evaluator: impl Fn(&Quaternion) -> f64) -> SingleModel {
    let rows: Vec<Quaternion> = RAW_CONTROLLED_ROWS[..10]
        .iter()
        .map(|r| Quaternion::from_array(*r))
        .collect();
    let mut design = DMatrix::zeros(10, 10);
    let mut m = DVector::zeros(10);
    for (i, q) in rows.iter().enumerate() {
        for (j, v) in embed_single(q).into_iter().enumerate() {
            design[(i, j)] = v;
        }
        m[i] = evaluator(q);
    }
    let coeffs = design
        .clone()
        .lu()
        .solve(&m)
        .expect("fixed single-gate stencil is invertible");
    let model = SingleModel {
        j: symmetric_from_packed(coeffs.as_slice()),
        residual: 0.0,
    };
    let residual = rows
        .iter()
        .enumerate()
        .map(|(i, q)| (model.predict(q) - m[i]).abs())
        .fold(0.0, f64::max);
    SingleModel { residual, ..model }
}

/// Recovers `(J, a, b)` of a controlled gate from 14 evaluations at the
/// configuration rows plus the kernel-row augmentation.
pub fn estimate_controlled(
    evaluator: impl Fn(&Quaternion) -> f64,
    config: &ControlledConfiguration,
) -> Result<ControlledModel, LandscapeError> {
    let design = config.design_matrix();
    let mut m = DVector::zeros(15);
    for (i, q) in config.rows.iter().enumerate() {
        m[i] = evaluator(q);
    }
    m[14] = 0.0;
    let e = design
        .clone()
        .lu()
        .solve(&m)
        .ok_or(LandscapeError::SingularConfiguration {
            condition: f64::INFINITY,
        })?;
    let model = ControlledModel {
        j: symmetric_from_packed(&e.as_slice()[..10]),
        a: Vec4::new(e[10], e[11], e[12], e[13]),
        b: e[14],
        residual: 0.0,
    };
    let residual = config
        .rows
        .iter()
        .enumerate()
        .map(|(i, q)| (model.predict(q) - m[i]).abs())
        .fold(0.0, f64::max);
    Ok(ControlledModel { residual, ..model })
}

/// Recovers `(J, K, L)` of a gate pair from 35 evaluations plus the kernel row.
pub fn estimate_pair(
    evaluator: impl Fn(&Quaternion, &Quaternion) -> f64,
    config: &PairConfiguration,
) -> Result<PairModel, LandscapeError> {
    let design = config.design_matrix();
    let mut m = DVector::zeros(36);
    for (i, (p, q)) in config.rows.iter().enumerate() {
        m[i] = evaluator(p, q);
    }
    m[35] = 0.0;
    let e = design
        .clone()
        .lu()
        .solve(&m)
        .ok_or(LandscapeError::SingularConfiguration {
            condition: f64::INFINITY,
        })?;
    let mut k = Mat4::zeros();
    for mu in 0..4 {
        for nu in 0..4 {
            k[(mu, nu)] = e[20 + 4 * mu + nu];
        }
    }
    let model = PairModel {
        j: symmetric_from_packed(&e.as_slice()[..10]),
        l: symmetric_from_packed(&e.as_slice()[10..20]),
        k,
        residual: 0.0,
    };
    let residual = config
        .rows
        .iter()
        .enumerate()
        .map(|(i, (p, q))| (model.predict(p, q) - m[i]).abs())
        .fold(0.0, f64::max);
    Ok(PairModel { residual, ..model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embed_controlled_trivial_values() {
        let e = embed_controlled(&Quaternion::IDENTITY);
        let mut expected = [0.0; 15];
        expected[0] = 1.0;
        expected[10] = 2.0;
        expected[14] = 1.0;
        assert_eq!(e, expected);

        let q = Quaternion::new(1.0, 1.0, 0.0, 0.0);
        let e = embed_controlled(&q);
        assert!((e[0] - 0.5).abs() < 1e-15);
        assert!((e[1] - 0.5).abs() < 1e-15);
        assert!((e[4] - 1.0).abs() < 1e-15);
        assert!((e[10] - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((e[11] - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn kernel_rows_annihilate_unit_embeddings() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10_000 {
            let q = Quaternion::random(&mut rng);
            let dot: f64 = embed_controlled(&q)
                .iter()
                .zip(KERNEL_ROW_CONTROLLED.iter())
                .map(|(a, b)| a * b)
                .sum();
            assert!(dot.abs() < 1e-12);

            let p = Quaternion::random(&mut rng);
            let dot: f64 = embed_pair(&p, &q)
                .iter()
                .zip(kernel_row_pair().iter())
                .map(|(a, b)| a * b)
                .sum();
            assert!(dot.abs() < 1e-12);
        }
    }

    #[test]
    fn embed_pair_trivial_and_bilinear() {
        let id = Quaternion::IDENTITY;
        let e = embed_pair(&id, &id);
        assert_eq!(e[0], 1.0); // pi^2
        assert_eq!(e[10], 1.0); // qi^2
        assert_eq!(e[20], 2.0); // cross ii
        assert_eq!(e.iter().filter(|&&v| v != 0.0).count(), 3);

        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..100 {
            // Bilinear-form oracle: random symmetric J, L and real K.
            let mut j = Mat4::zeros();
            let mut l = Mat4::zeros();
            let mut k = Mat4::zeros();
            for r in 0..4 {
                for c in 0..4 {
                    k[(r, c)] = rng.random::<f64>() - 0.5;
                    let v = rng.random::<f64>() - 0.5;
                    j[(r, c)] += v / 2.0;
                    j[(c, r)] += v / 2.0;
                    let v = rng.random::<f64>() - 0.5;
                    l[(r, c)] += v / 2.0;
                    l[(c, r)] += v / 2.0;
                }
            }
            let model = PairModel {
                j,
                k,
                l,
                residual: 0.0,
            };
            let p = Quaternion::random(&mut rng);
            let q = Quaternion::random(&mut rng);
            let pv = Vec4::from_column_slice(&p.as_array());
            let qv = Vec4::from_column_slice(&q.as_array());
            let direct = (pv.transpose() * j * pv)[0]
                + (pv.transpose() * k * qv)[0]
                + (qv.transpose() * k.transpose() * pv)[0]
                + (qv.transpose() * l * qv)[0];
            // Reconstruct through the embedding and packed coefficients.
            let mut e_packed = [0.0; 36];
            e_packed[0] = j[(0, 0)];
            e_packed[1] = j[(1, 1)];
            e_packed[2] = j[(2, 2)];
            e_packed[3] = j[(3, 3)];
            let off = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
            for (idx, &(r, c)) in off.iter().enumerate() {
                e_packed[4 + idx] = j[(r, c)];
                e_packed[14 + idx] = l[(r, c)];
            }
            e_packed[10] = l[(0, 0)];
            e_packed[11] = l[(1, 1)];
            e_packed[12] = l[(2, 2)];
            e_packed[13] = l[(3, 3)];
            for mu in 0..4 {
                for nu in 0..4 {
                    e_packed[20 + 4 * mu + nu] = k[(mu, nu)];
                }
            }
            let via_embedding: f64 = embed_pair(&p, &q)
                .iter()
                .zip(e_packed.iter())
                .map(|(a, b)| a * b)
                .sum();
            assert!((direct - via_embedding).abs() < 1e-12);
            assert!((model.predict(&p, &q) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_configurations_are_well_conditioned() {
        assert!(ControlledConfiguration::standard().condition_check().is_ok());
        assert!(PairConfiguration::standard().condition_check().is_ok());
    }

    #[test]
    fn constant_evaluator_fits_exactly() {
        let cfg = ControlledConfiguration::standard();
        let model = estimate_controlled(|_| 2.5, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..100 {
            let q = Quaternion::random(&mut rng);
            assert!((model.predict(&q) - 2.5).abs() < 1e-9);
        }
        assert!(model.residual < 1e-12);
    }

    #[test]
    fn synthetic_quadratic_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..20 {
            let mut j = Mat4::zeros();
            for r in 0..4 {
                for c in r..4 {
                    let v = rng.random::<f64>() * 2.0 - 1.0;
                    j[(r, c)] = v;
                    j[(c, r)] = v;
                }
            }
            let model = estimate_single(|q| {
                let v = Vec4::from_column_slice(&q.as_array());
                (v.transpose() * j * v)[0]
            });
            assert!((model.j - j).abs().max() < 1e-10);
            assert_eq!(
                model.predict(&Quaternion::IDENTITY),
                model.j[(0, 0)]
            );
        }
    }

    #[test]
    fn synthetic_controlled_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let cfg = ControlledConfiguration::standard();
        for _ in 0..20 {
            let mut j = Mat4::zeros();
            for r in 0..4 {
                for c in r..4 {
                    let v = rng.random::<f64>() * 2.0 - 1.0;
                    j[(r, c)] = v;
                    j[(c, r)] = v;
                }
            }
            let a = Vec4::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            );
            let b: f64 = rng.random::<f64>() - 0.5;
            let truth = ControlledModel {
                j,
                a,
                b,
                residual: 0.0,
            };
            let fitted = estimate_controlled(|q| truth.predict(q), &cfg).unwrap();
            for _ in 0..50 {
                let q = Quaternion::random(&mut rng);
                assert!((fitted.predict(&q) - truth.predict(&q)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn separable_pair_cost_has_zero_cross_block() {
        let cfg = PairConfiguration::standard();
        let model = estimate_pair(
            |p, q| p.qi * p.qi - 0.7 * p.qz * p.qx + 2.0 * q.qy * q.qy - 0.4 * q.qi * q.qz,
            &cfg,
        )
        .unwrap();
        assert!(model.k.abs().max() < 1e-9, "K = {:?}", model.k);
        assert!(model.residual < 1e-9);
    }

    #[test]
    fn pair_slices_match_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let cfg = PairConfiguration::standard();
        let mut j = Mat4::zeros();
        let mut l = Mat4::zeros();
        let mut k = Mat4::zeros();
        for r in 0..4 {
            for c in 0..4 {
                k[(r, c)] = rng.random::<f64>() - 0.5;
            }
            for c in r..4 {
                let v = rng.random::<f64>() - 0.5;
                j[(r, c)] = v;
                j[(c, r)] = v;
                let v = rng.random::<f64>() - 0.5;
                l[(r, c)] = v;
                l[(c, r)] = v;
            }
        }
        let truth = PairModel {
            j,
            k,
            l,
            residual: 0.0,
        };
        let fitted = estimate_pair(|p, q| truth.predict(p, q), &cfg).unwrap();
        for _ in 0..50 {
            let p = Quaternion::random(&mut rng);
            let q = Quaternion::random(&mut rng);
            assert!((fitted.predict(&p, &q) - truth.predict(&p, &q)).abs() < 1e-9);
            let slice = fitted.p_slice(&q);
            assert!((slice.predict(&p) - truth.predict(&p, &q)).abs() < 1e-9);
            let slice = fitted.q_slice(&p);
            assert!((slice.predict(&q) - truth.predict(&p, &q)).abs() < 1e-9);
        }
    }

    #[test]
    fn configuration_parsing() {
        let text = RAW_CONTROLLED_ROWS
            .iter()
            .map(|r| format!("{} {} {} {}", r[0], r[1], r[2], r[3]))
            .collect::<Vec<_>>()
            .join("\n");
        let (ctrl, pair) = parse_configuration(&text).unwrap();
        assert!(ctrl.is_some() && pair.is_none());

        assert!(parse_configuration("1 2 3").is_err());
        assert!(parse_configuration("").is_err());
        // 14 identical rows: singular.
        let degenerate = vec!["1 0 0 0"; 14].join("\n");
        assert!(matches!(
            parse_configuration(&degenerate),
            Err(LandscapeError::SingularConfiguration { .. })
        ));
    }
}
