//! Pauli-sum observables: Ising builder, file ingestion, dense realization,
//! exact diagonalization, exact time evolution and a first-order Trotter
//! reference product.
//!
//! File format: one term per line, `<coefficient> <string over IXYZ>`, with `#`
//! comments. Pauli strings are written most significant qubit first, so in
//! `0.5 IZ` the `Z` acts on qubit 0.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::simulator::{DenseUnitary, SimError, MAX_DENSE_QUBITS};

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("Pauli string length {found} does not match {expected} qubits")]
    LengthMismatch { expected: usize, found: usize },
    #[error("Ising chain needs at least 2 sites, got {0}")]
    ChainTooShort(usize),
    #[error("time evolution is limited to {limit} qubits, got {n}")]
    EvolutionTooLarge { n: usize, limit: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliLetter::I),
            'X' => Some(PauliLetter::X),
            'Y' => Some(PauliLetter::Y),
            'Z' => Some(PauliLetter::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }
}

/// One n-qubit Pauli string; `letters[k]` acts on qubit `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<PauliLetter>,
}

impl PauliString {
    pub fn new(letters: Vec<PauliLetter>) -> Result<Self, HamiltonianError> {
        if letters.is_empty() {
            return Err(HamiltonianError::Parse {
                line: 0,
                message: "empty Pauli string".into(),
            });
        }
        Ok(PauliString { letters })
    }

    pub fn identity(n_qubits: usize) -> Self {
        PauliString {
            letters: vec![PauliLetter::I; n_qubits],
        }
    }

    /// Single letter on one qubit, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, letter: PauliLetter) -> Self {
        let mut letters = vec![PauliLetter::I; n_qubits];
        letters[qubit] = letter;
        PauliString { letters }
    }

    pub fn with_letter(mut self, qubit: usize, letter: PauliLetter) -> Self {
        self.letters[qubit] = letter;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letter(&self, qubit: usize) -> PauliLetter {
        self.letters[qubit]
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&l| l == PauliLetter::I)
    }

    /// `(flip_mask, phase_mask, n_y)`: `P|j> = i^{n_y} (-1)^{popcount(j & phase_mask)}
    /// |j ^ flip_mask>` with flips on X/Y qubits and phases on Y/Z qubits.
    pub fn masks(&self) -> (usize, usize, u32) {
        let mut flip = 0usize;
        let mut phase = 0usize;
        let mut n_y = 0u32;
        for (q, &l) in self.letters.iter().enumerate() {
            match l {
                PauliLetter::I => {}
                PauliLetter::X => flip |= 1 << q,
                PauliLetter::Y => {
                    flip |= 1 << q;
                    phase |= 1 << q;
                    n_y += 1;
                }
                PauliLetter::Z => phase |= 1 << q,
            }
        }
        (flip, phase, n_y)
    }

    /// Parses a string written most significant qubit first.
    pub fn parse(text: &str) -> Result<Self, HamiltonianError> {
        let mut letters = Vec::with_capacity(text.len());
        for c in text.chars().rev() {
            letters.push(PauliLetter::from_char(c).ok_or_else(|| HamiltonianError::Parse {
                line: 0,
                message: format!("invalid Pauli letter '{c}'"),
            })?);
        }
        Self::new(letters)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in self.letters.iter().rev() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

/// Real-weighted sum of Pauli strings. Duplicate strings are merged in
/// first-appearance order and exact-zero coefficients dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
    index: HashMap<PauliString, usize>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn from_terms(
        n_qubits: usize,
        terms: Vec<(f64, PauliString)>,
    ) -> Result<Self, HamiltonianError> {
        let mut sum = PauliSum::new(n_qubits);
        for (c, s) in terms {
            sum.try_add_term(c, s)?;
        }
        Ok(sum)
    }

    pub fn add_term(&mut self, coefficient: f64, string: PauliString) {
        self.try_add_term(coefficient, string)
            .expect("Pauli string length must match the sum")
    }

    pub fn try_add_term(
        &mut self,
        coefficient: f64,
        string: PauliString,
    ) -> Result<(), HamiltonianError> {
        if string.n_qubits() != self.n_qubits {
            return Err(HamiltonianError::LengthMismatch {
                expected: self.n_qubits,
                found: string.n_qubits(),
            });
        }
        match self.index.get(&string) {
            Some(&i) => self.terms[i].0 += coefficient,
            None => {
                self.index.insert(string.clone(), self.terms.len());
                self.terms.push((coefficient, string));
            }
        }
        Ok(())
    }

    /// Terms in first-appearance order with exact zeros removed.
    pub fn terms(&self) -> impl Iterator<Item = &(f64, PauliString)> {
        self.terms.iter().filter(|(c, _)| *c != 0.0)
    }

    pub fn n_terms(&self) -> usize {
        self.terms().count()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Sum of absolute coefficients; bounds any expectation value.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms().map(|(c, _)| c.abs()).sum()
    }

    pub fn scaled(&self, factor: f64) -> PauliSum {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.0 *= factor;
        }
        out
    }

    /// Dense Hermitian matrix `sum_k c_k P_k` in the computational basis
    /// (amplitude index bit `q` is qubit `q`).
    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>, HamiltonianError> {
        if self.n_qubits > MAX_DENSE_QUBITS {
            return Err(SimError::TooLarge(self.n_qubits).into());
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (coeff, string) in self.terms() {
            let (flip, phase_mask, n_y) = string.masks();
            let i_pow = match n_y % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
            for col in 0..dim {
                let sign = if ((col & phase_mask).count_ones() & 1) == 1 {
                    -1.0
                } else {
                    1.0
                };
                m[(col ^ flip, col)] += i_pow * Complex64::new(coeff * sign, 0.0);
            }
        }
        Ok(m)
    }

    /// Minimum eigenvalue via dense Hermitian diagonalization.
    pub fn ground_energy(&self) -> Result<f64, HamiltonianError> {
        let (values, _) = hermitian_eigen(&self.dense_matrix()?);
        Ok(values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min))
    }

    /// `exp(-i H t)` via Hermitian eigendecomposition (hbar = 1).
    pub fn time_evolution(&self, t: f64) -> Result<DenseUnitary, HamiltonianError> {
        const LIMIT: usize = 6;
        if self.n_qubits > LIMIT {
            return Err(HamiltonianError::EvolutionTooLarge {
                n: self.n_qubits,
                limit: LIMIT,
            });
        }
        let (values, vectors) = hermitian_eigen(&self.dense_matrix()?);
        let dim = values.len();
        let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            values.iter().map(|&v| Complex64::from_polar(1.0, -v * t)),
        ));
        let u = &vectors * phases * vectors.adjoint();
        Ok(DenseUnitary::try_new(u)?)
    }

    /// First-order Trotter product: the ordered per-term product of
    /// `exp(-i c_k P_k t / steps)` raised to `steps`. Term order is builder and
    /// file order.
    pub fn trotter_product(&self, t: f64, steps: u32) -> Result<DenseUnitary, HamiltonianError> {
        assert!(steps >= 1, "Trotter steps must be at least 1");
        if self.n_qubits > MAX_DENSE_QUBITS {
            return Err(SimError::TooLarge(self.n_qubits).into());
        }
        let dim = 1usize << self.n_qubits;
        let dt = t / steps as f64;
        let mut step = DMatrix::<Complex64>::identity(dim, dim);
        for (coeff, string) in self.terms() {
            // P^2 = I, so exp(-i a P) = cos(a) I - i sin(a) P.
            let a = coeff * dt;
            let mut factor = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(a.cos(), 0.0);
            let p = PauliSum::from_terms(self.n_qubits, vec![(1.0, string.clone())])
                .expect("length checked")
                .dense_matrix()?;
            factor += p * Complex64::new(0.0, -a.sin());
            step = factor * step;
        }
        let mut total = DMatrix::<Complex64>::identity(dim, dim);
        let mut base = step;
        let mut k = steps;
        while k > 0 {
            if k & 1 == 1 {
                total = &total * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        Ok(DenseUnitary::try_new(total)?)
    }
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues and a unitary
/// eigenvector matrix. Real symmetric input is diagonalized directly; a complex
/// matrix goes through the real symmetric embedding `[[Re, -Im], [Im, Re]]`.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if m.iter().all(|z| z.im == 0.0) {
        let real = m.map(|z| z.re);
        let eig = nalgebra::SymmetricEigen::new(real);
        let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let vectors = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
        return (values, vectors);
    }
    let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = m[(r, c)];
            real[(r, c)] = z.re;
            real[(n + r, n + c)] = z.re;
            real[(r, n + c)] = -z.im;
            real[(n + r, c)] = z.im;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(real);
    // Each complex eigenpair appears twice; keep one per pair by greedily
    // selecting eigenvectors orthogonal (in the complex sense) to those kept.
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values: Vec<f64> = Vec::with_capacity(n);
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    let mut kept: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(n);
    for &idx in &order {
        if kept.len() == n {
            break;
        }
        let col = eig.eigenvectors.column(idx);
        let mut v = nalgebra::DVector::<Complex64>::from_fn(n, |r, _| {
            Complex64::new(col[r], col[n + r])
        });
        // Project out previously kept vectors of (numerically) equal eigenvalue;
        // the duplicate partner (i v) is removed by this projection.
        for (kv, &val) in kept.iter().zip(values.iter()) {
            if (eig.eigenvalues[idx] - val).abs() < 1e-9 * (1.0 + val.abs()) {
                let overlap = kv.dotc(&v);
                v -= kv * overlap;
            }
        }
        let norm = v.norm();
        if norm < 1e-8 {
            continue;
        }
        v /= Complex64::new(norm, 0.0);
        values.push(eig.eigenvalues[idx]);
        vectors.set_column(kept.len(), &v);
        kept.push(v);
    }
    assert_eq!(kept.len(), n, "eigenvector pairing failed");
    (values, vectors)
}

/// Mixed-field Ising chain `J sum Z_i Z_{i+1} + h sum (X_i + Z_i)` with fields on
/// all `n` sites; `n` bonds when periodic, `n - 1` otherwise. The wrap bond of a
/// 2-site periodic chain merges onto the open bond (coefficient `2J`).
pub fn ising_hamiltonian(
    n: usize,
    coupling: f64,
    field: f64,
    periodic: bool,
) -> Result<PauliSum, HamiltonianError> {
    if n < 2 {
        return Err(HamiltonianError::ChainTooShort(n));
    }
    let mut sum = PauliSum::new(n);
    let bonds = if periodic { n } else { n - 1 };
    for i in 0..bonds {
        let j = (i + 1) % n;
        let string = PauliString::identity(n)
            .with_letter(i, PauliLetter::Z)
            .with_letter(j, PauliLetter::Z);
        sum.add_term(coupling, string);
    }
    if field != 0.0 {
        for i in 0..n {
            sum.add_term(field, PauliString::single(n, i, PauliLetter::X));
            sum.add_term(field, PauliString::single(n, i, PauliLetter::Z));
        }
    }
    Ok(sum)
}

/// Parses the line-oriented Pauli-sum format (see module docs).
pub fn parse_pauli_sum(text: &str) -> Result<PauliSum, HamiltonianError> {
    let mut n_qubits: Option<usize> = None;
    let mut parsed: Vec<(f64, PauliString)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let coeff_text = fields.next().unwrap();
        let string_text = fields.next().ok_or_else(|| HamiltonianError::Parse {
            line: lineno + 1,
            message: "expected `<coefficient> <pauli string>`".into(),
        })?;
        if fields.next().is_some() {
            return Err(HamiltonianError::Parse {
                line: lineno + 1,
                message: "trailing fields after Pauli string".into(),
            });
        }
        let coeff: f64 = coeff_text.parse().map_err(|_| HamiltonianError::Parse {
            line: lineno + 1,
            message: format!("invalid coefficient '{coeff_text}'"),
        })?;
        let string = PauliString::parse(string_text).map_err(|e| match e {
            HamiltonianError::Parse { message, .. } => HamiltonianError::Parse {
                line: lineno + 1,
                message,
            },
            other => other,
        })?;
        match n_qubits {
            None => n_qubits = Some(string.n_qubits()),
            Some(n) if n != string.n_qubits() => {
                return Err(HamiltonianError::Parse {
                    line: lineno + 1,
                    message: format!(
                        "string length {} does not match earlier length {}",
                        string.n_qubits(),
                        n
                    ),
                })
            }
            _ => {}
        }
        parsed.push((coeff, string));
    }
    let n = n_qubits.ok_or_else(|| HamiltonianError::Parse {
        line: 0,
        message: "no terms found".into(),
    })?;
    PauliSum::from_terms(n, parsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ising_term_counts() {
        let h = ising_hamiltonian(2, 1.0, 0.0, false).unwrap();
        assert_eq!(h.n_terms(), 1);

        let h = ising_hamiltonian(3, 1.0, std::f64::consts::FRAC_1_SQRT_2, true).unwrap();
        assert_eq!(h.n_terms(), 9);

        // 2-site periodic: both bonds are the same ZZ string.
        let h = ising_hamiltonian(2, 1.0, 0.0, true).unwrap();
        let terms: Vec<_> = h.terms().collect();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].0, 2.0);
    }

    #[test]
    fn parser_basics() {
        let h = parse_pauli_sum("0.5 ZZ\n-0.25 XI").unwrap();
        assert_eq!(h.n_qubits(), 2);
        assert_eq!(h.n_terms(), 2);

        let h = parse_pauli_sum("1.0 ZZ\n1.0 ZZ").unwrap();
        let terms: Vec<_> = h.terms().collect();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].0, 2.0);

        assert!(matches!(
            parse_pauli_sum("0.5 ZZ\n0.3 XYZ"),
            Err(HamiltonianError::Parse { line: 2, .. })
        ));
        assert!(parse_pauli_sum("abc ZZ").is_err());
        assert!(parse_pauli_sum("1.0 AB").is_err());
        let h = parse_pauli_sum("# comment\n 2.5e-1 XY # inline\n").unwrap();
        assert_eq!(h.n_terms(), 1);
    }

    #[test]
    fn string_display_roundtrip() {
        let s = PauliString::parse("IXZ").unwrap();
        // Leftmost letter is the most significant qubit.
        assert_eq!(s.letter(0), PauliLetter::Z);
        assert_eq!(s.letter(2), PauliLetter::I);
        assert_eq!(s.to_string(), "IXZ");
    }

    #[test]
    fn dense_matrix_simple_cases() {
        let z = parse_pauli_sum("1.0 Z").unwrap().dense_matrix().unwrap();
        assert_eq!(z[(0, 0)].re, 1.0);
        assert_eq!(z[(1, 1)].re, -1.0);

        // X + Z has spectrum {-sqrt2, sqrt2}.
        let h = parse_pauli_sum("1.0 X\n1.0 Z").unwrap();
        let (vals, _) = hermitian_eigen(&h.dense_matrix().unwrap());
        let mut vals = vals;
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((vals[1] - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn dense_matrix_is_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let mut sum = PauliSum::new(3);
            for _ in 0..6 {
                let letters: Vec<PauliLetter> = (0..3)
                    .map(|_| match rng.random_range(0..4) {
                        0 => PauliLetter::I,
                        1 => PauliLetter::X,
                        2 => PauliLetter::Y,
                        _ => PauliLetter::Z,
                    })
                    .collect();
                sum.add_term(rng.random::<f64>() - 0.5, PauliString::new(letters).unwrap());
            }
            let m = sum.dense_matrix().unwrap();
            assert!((&m - m.adjoint()).norm() < 1e-12);
        }
    }

    #[test]
    fn ground_energy_trivial_cases() {
        let z = parse_pauli_sum("1.0 Z").unwrap();
        assert!((z.ground_energy().unwrap() + 1.0).abs() < 1e-12);
        let zz = parse_pauli_sum("1.0 ZZ").unwrap();
        assert!((zz.ground_energy().unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ising8_ground_energy_regression() {
        // Frozen from exact diagonalization of the n=8 periodic mixed-field chain
        // at J = 1, h = 1/sqrt(2).
        let h = ising_hamiltonian(8, 1.0, std::f64::consts::FRAC_1_SQRT_2, true).unwrap();
        let e = h.ground_energy().unwrap();
        assert!(
            (e - ISING8_GROUND).abs() < 1e-9,
            "ground energy {e}, expected {ISING8_GROUND}"
        );
    }

    // Frozen from an independent 256x256 eigensolve of the dense Hamiltonian.
    const ISING8_GROUND: f64 = -9.192356707293118;

    #[test]
    fn time_evolution_basics() {
        let h = parse_pauli_sum("1.0 Z").unwrap();
        let u = h.time_evolution(std::f64::consts::FRAC_PI_2).unwrap();
        let m = u.matrix();
        assert!((m[(0, 0)] - Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_2)).norm() < 1e-12);
        assert!((m[(1, 1)] - Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2)).norm() < 1e-12);

        let id = h.time_evolution(0.0).unwrap();
        assert!((id.matrix() - DMatrix::<Complex64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn time_evolution_group_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut h = PauliSum::new(2);
        for _ in 0..4 {
            let letters: Vec<PauliLetter> = (0..2)
                .map(|_| match rng.random_range(0..4) {
                    0 => PauliLetter::I,
                    1 => PauliLetter::X,
                    2 => PauliLetter::Y,
                    _ => PauliLetter::Z,
                })
                .collect();
            h.add_term(rng.random::<f64>() - 0.5, PauliString::new(letters).unwrap());
        }
        let t1 = 0.37;
        let t2 = 1.21;
        let u1 = h.time_evolution(t1).unwrap();
        let u2 = h.time_evolution(t2).unwrap();
        let u12 = h.time_evolution(t1 + t2).unwrap();
        assert!((u1.matrix() * u2.matrix() - u12.matrix()).norm() < 1e-10);
    }

    #[test]
    fn trotter_exact_for_commuting_terms() {
        let h = parse_pauli_sum("0.8 ZZ\n0.5 ZI").unwrap();
        let trotter = h.trotter_product(0.9, 1).unwrap();
        let exact = h.time_evolution(0.9).unwrap();
        assert!((trotter.matrix() - exact.matrix()).norm() < 1e-12);

        let id = h.trotter_product(0.0, 3).unwrap();
        assert!((id.matrix() - DMatrix::<Complex64>::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn trotter_error_shrinks_linearly_in_steps() {
        let h = parse_pauli_sum("1.0 XI\n0.7 ZZ\n0.4 IY").unwrap();
        let t = 1.0;
        let exact = h.time_evolution(t).unwrap();
        let err = |steps: u32| (h.trotter_product(t, steps).unwrap().matrix() - exact.matrix()).norm();
        let e4 = err(4);
        let e8 = err(8);
        let e16 = err(16);
        assert!(e8 < e4 && e16 < e8);
        // First-order product formula: error ~ t^2 / steps.
        let ratio = e4 / e8;
        assert!((1.5..3.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn size_limits_enforced() {
        let h = ising_hamiltonian(7, 1.0, 0.5, false).unwrap();
        assert!(matches!(
            h.time_evolution(1.0),
            Err(HamiltonianError::EvolutionTooLarge { .. })
        ));
        assert!(ising_hamiltonian(1, 1.0, 0.5, false).is_err());
    }
}
