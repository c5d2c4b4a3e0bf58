//! Exact small-scale complex linear algebra.
//!
//! States and operators are dense and immutable: every operation returns a
//! new value. The left operand of a tensor product owns the high-order
//! index bits, so qubit 0 is the most significant bit of a basis index.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Qubit cap used when `QGAME_MAX_QUBITS` is unset.
pub const DEFAULT_MAX_QUBITS: usize = 8;

/// Tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for multi-step circuit equivalences.
pub const CIRCUIT_TOL: f64 = 1e-10;
/// Tolerance for quadrature-based checks.
pub const QUADRATURE_TOL: f64 = 1e-6;

/// Current qubit cap, overridable through `QGAME_MAX_QUBITS`.
pub fn max_qubits() -> usize {
    std::env::var("QGAME_MAX_QUBITS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0 && n < 31)
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

fn check_capacity(n_qubits: usize) -> Result<()> {
    let max = max_qubits();
    if n_qubits > max {
        return Err(Error::Capacity {
            requested: n_qubits,
            max,
        });
    }
    Ok(())
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn is_finite(z: &C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn log2_exact(dim: usize) -> Option<usize> {
    (dim.is_power_of_two()).then(|| dim.trailing_zeros() as usize)
}

/// Position of `qubit` inside a basis index of an `n`-qubit register.
#[inline]
pub(crate) fn bit_of(qubit: usize, n: usize) -> usize {
    n - 1 - qubit
}

pub(crate) fn validate_targets(targets: &[usize], n_qubits: usize) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= n_qubits {
            return Err(Error::QubitOutOfRange { qubit: t, n_qubits });
        }
        if targets[..i].contains(&t) {
            return Err(Error::DuplicateQubit(t));
        }
    }
    Ok(())
}

/// Kronecker product, shared by states and operators.
pub trait Kron: Sized {
    fn tensor(&self, rhs: &Self) -> Result<Self>;
}

/// `a ⊗ b` for two states or two operators.
pub fn tensor<T: Kron>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// Normalized pure state of `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QState {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl QState {
    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_capacity(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n_qubits = log2_exact(amps.len()).ok_or_else(|| {
            Error::invalid(format!("{} amplitudes is not a power of two", amps.len()))
        })?;
        check_capacity(n_qubits)?;
        if !amps.iter().all(is_finite) {
            return Err(Error::invalid("non-finite amplitude"));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::invalid("zero vector is not a state"));
        }
        let amps = amps.into_iter().map(|z| z / norm).collect();
        Ok(Self { n_qubits, amps })
    }

    /// Haar-random state drawn from normalized complex Gaussians.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        check_capacity(n_qubits)?;
        let amps = (0..1usize << n_qubits)
            .map(|_| {
                C64::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                )
            })
            .collect();
        Self::from_amplitudes(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies every amplitude by `phase` (renormalized to unit modulus).
    pub fn with_phase(&self, phase: C64) -> Self {
        let u = phase / phase.norm();
        Self {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().map(|z| z * u).collect(),
        }
    }

    /// Applies a unitary acting on `targets` (listed most significant first).
    pub fn apply(&self, gate: &Operator, targets: &[usize]) -> Result<QState> {
        let dev = gate.unitary_deviation();
        if dev > CIRCUIT_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        let amps = self.apply_raw(gate, targets)?;
        Ok(Self {
            n_qubits: self.n_qubits,
            amps,
        })
    }

    /// Applies an arbitrary operator on `targets` without renormalizing.
    pub(crate) fn apply_raw(&self, op: &Operator, targets: &[usize]) -> Result<Vec<C64>> {
        validate_targets(targets, self.n_qubits)?;
        let k = targets.len();
        if op.dim() != 1usize << k {
            return Err(Error::DimensionMismatch {
                expected: 1usize << k,
                found: op.dim(),
            });
        }
        let n = self.n_qubits;
        let masks: Vec<usize> = targets.iter().map(|&t| 1usize << bit_of(t, n)).collect();
        let target_mask: usize = masks.iter().sum();
        let local = 1usize << k;
        // index of local basis state j inside the full register, given a base
        let offsets: Vec<usize> = (0..local)
            .map(|j| {
                (0..k)
                    .filter(|&b| j & (1 << (k - 1 - b)) != 0)
                    .map(|b| masks[b])
                    .sum()
            })
            .collect();
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        let mut gathered = vec![C64::new(0.0, 0.0); local];
        for base in (0..self.dim()).filter(|i| i & target_mask == 0) {
            for (j, off) in offsets.iter().enumerate() {
                gathered[j] = self.amps[base | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let row = &op.data[r * local..(r + 1) * local];
                out[base | off] = row.iter().zip(&gathered).map(|(m, a)| m * a).sum();
            }
        }
        Ok(out)
    }

    /// Relabels qubits `a` and `b`.
    pub fn swap_qubits(&self, a: usize, b: usize) -> Result<QState> {
        validate_targets(&[a], self.n_qubits)?;
        validate_targets(&[b], self.n_qubits)?;
        if a == b {
            return Ok(self.clone());
        }
        let n = self.n_qubits;
        let (ba, bb) = (bit_of(a, n), bit_of(b, n));
        let mut amps = self.amps.clone();
        for (i, amp) in self.amps.iter().enumerate() {
            let va = (i >> ba) & 1;
            let vb = (i >> bb) & 1;
            let j = (i & !(1 << ba) & !(1 << bb)) | (vb << ba) | (va << bb);
            amps[j] = *amp;
        }
        Ok(Self {
            n_qubits: n,
            amps,
        })
    }

    /// Removes qubit `q`, which must be in a product state with the rest of
    /// the register. Returns `(remaining register, state of q)`.
    pub fn discard(&self, q: usize) -> Result<(QState, QState)> {
        validate_targets(&[q], self.n_qubits)?;
        if self.n_qubits < 2 {
            return Err(Error::invalid("cannot discard the only qubit"));
        }
        let n = self.n_qubits;
        let bit = bit_of(q, n);
        let rest_dim = self.dim() / 2;
        // rows: value of q, columns: remaining qubits in order
        let mut rows = [vec![C64::new(0.0, 0.0); rest_dim], vec![C64::new(0.0, 0.0); rest_dim]];
        for (i, amp) in self.amps.iter().enumerate() {
            let v = (i >> bit) & 1;
            let high = i >> (bit + 1);
            let low = i & ((1 << bit) - 1);
            rows[v][(high << bit) | low] = *amp;
        }
        let norms: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .collect();
        let pivot = if norms[0] >= norms[1] { 0 } else { 1 };
        let pn = norms[pivot].sqrt();
        let rest: Vec<C64> = rows[pivot].iter().map(|z| z / pn).collect();
        let coeff: Vec<C64> = rows
            .iter()
            .map(|r| r.iter().zip(&rest).map(|(a, b)| b.conj() * a).sum())
            .collect();
        let residual = rows
            .iter()
            .zip(&coeff)
            .flat_map(|(r, cf)| r.iter().zip(&rest).map(move |(a, b)| (a - cf * b).norm()))
            .fold(0.0, f64::max);
        if residual > ALGEBRAIC_TOL {
            return Err(Error::NotFactorized { qubit: q, residual });
        }
        Ok((
            QState::from_amplitudes(rest)?,
            QState::from_amplitudes(coeff)?,
        ))
    }

    /// Adjoins a fresh qubit in `|0⟩` after the last one; returns its index.
    pub fn adjoin_zero(&self) -> Result<(QState, usize)> {
        let s = self.tensor(&QState::zero(1)?)?;
        let idx = s.n_qubits - 1;
        Ok((s, idx))
    }
}

impl Kron for QState {
    fn tensor(&self, rhs: &Self) -> Result<Self> {
        let n = self.n_qubits + rhs.n_qubits;
        check_capacity(n)?;
        let amps = self
            .amps
            .iter()
            .flat_map(|a| rhs.amps.iter().map(move |b| a * b))
            .collect();
        Ok(Self { n_qubits: n, amps })
    }
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &QState, b: &QState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Returns the unit scalar λ with `‖a − λb‖ ≤ tol`, if one exists.
pub fn equal_up_to_global_phase(a: &QState, b: &QState, tol: f64) -> Result<Option<C64>> {
    let overlap = b.inner(a)?;
    let mag = overlap.norm();
    if mag < 1e-300 {
        return Ok(None);
    }
    let lambda = overlap / mag;
    let dist = a
        .amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| (x - lambda * y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok((dist <= tol).then_some(lambda))
}

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if !data.iter().all(is_finite) {
            return Err(Error::invalid("non-finite matrix entry"));
        }
        if let Some(n) = log2_exact(dim) {
            check_capacity(n)?;
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from rows; all rows must have the same length as
    /// the number of rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("matrix rows must form a square"));
        }
        Self::from_vec(dim, rows.concat())
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, e) in entries.iter().enumerate() {
            m.data[i * entries.len() + i] = *e;
        }
        m
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        let data = a
            .iter()
            .flat_map(|x| b.iter().map(move |y| x * y.conj()))
            .collect();
        Self::from_vec(a.len(), data)
    }

    /// Projector onto a normalized state.
    pub fn projector(state: &QState) -> Self {
        Self::outer(state.amplitudes(), state.amplitudes()).expect("same length")
    }

    /// Haar-random unitary from the QR decomposition of a Ginibre matrix.
    pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            C64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            )
        });
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let mut u = q;
        for j in 0..dim {
            let d = r[(j, j)];
            let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
            for i in 0..dim {
                u[(i, j)] *= ph;
            }
        }
        Self::from_nalgebra(&u)
    }

    /// Random Hermitian matrix `(A + A†)/2` with Gaussian entries.
    pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let a = Self {
            dim,
            data: (0..dim * dim)
                .map(|_| {
                    C64::new(
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    )
                })
                .collect(),
        };
        (&a + &a.adjoint()).scale(C64::new(0.5, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits acted on, if the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        log2_exact(self.dim)
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for col in 0..d {
                out.data[col * d + r] = self.data[r * d + col].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn matmul(&self, rhs: &Operator) -> Result<Operator> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        Ok(out)
    }

    /// Product of a chain of equally sized operators, left to right.
    pub fn product(ops: &[&Operator]) -> Result<Operator> {
        let (first, rest) = ops
            .split_first()
            .ok_or_else(|| Error::invalid("empty operator product"))?;
        rest.iter()
            .try_fold((*first).clone(), |acc, op| acc.matmul(op))
    }

    pub fn apply_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|r| {
                self.data[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(m, x)| m * x)
                    .sum()
            })
            .collect())
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn unitary_deviation(&self) -> f64 {
        self.adjoint()
            .matmul(self)
            .map(|p| p.max_abs_diff(&Operator::identity(self.dim)))
            .unwrap_or(f64::INFINITY)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_deviation() <= tol
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        let d = m.nrows();
        let mut out = Self::zeros(d);
        for r in 0..d {
            for col in 0..d {
                out.data[r * d + col] = m[(r, col)];
            }
        }
        out
    }

    /// Eigendecomposition of a Hermitian matrix: eigenvalues and the
    /// unitary whose columns are the matching eigenvectors.
    pub fn eigh(&self) -> Result<(Vec<f64>, Operator)> {
        let dev = self.hermitian_deviation();
        if dev > ALGEBRAIC_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let sym = (self + &self.adjoint()).scale(C64::new(0.5, 0.0));
        let eig = SymmetricEigen::new(sym.to_nalgebra());
        Ok((
            eig.eigenvalues.iter().copied().collect(),
            Self::from_nalgebra(&eig.eigenvectors),
        ))
    }

    /// `f(G)` for Hermitian `G` and real `f`, evaluated on the spectrum.
    pub fn matfun_hermitian<F: Fn(f64) -> f64>(&self, f: F) -> Result<Operator> {
        let (vals, vecs) = self.eigh()?;
        let d = self.dim;
        let mut out = Self::zeros(d);
        for (k, lambda) in vals.iter().enumerate() {
            let fl = f(*lambda);
            for r in 0..d {
                let vr = vecs.data[r * d + k] * fl;
                for col in 0..d {
                    out.data[r * d + col] += vr * vecs.data[col * d + k].conj();
                }
            }
        }
        Ok((&out + &out.adjoint()).scale(C64::new(0.5, 0.0)))
    }
}

impl Kron for Operator {
    fn tensor(&self, rhs: &Self) -> Result<Self> {
        let d = self.dim * rhs.dim;
        if let (Some(a), Some(b)) = (self.n_qubits(), rhs.n_qubits()) {
            check_capacity(a + b)?;
        }
        let mut out = Self::zeros(d);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.data[i * self.dim + j];
                for k in 0..rhs.dim {
                    for l in 0..rhs.dim {
                        out.data[(i * rhs.dim + k) * d + j * rhs.dim + l] =
                            a * rhs.data[k * rhs.dim + l];
                    }
                }
            }
        }
        Ok(out)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs).expect("operator dimensions differ")
    }
}

/// Density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOp {
    op: Operator,
}

impl DensityOp {
    pub fn new(op: Operator) -> Result<Self> {
        let herm = op.hermitian_deviation();
        if herm > ALGEBRAIC_TOL {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > ALGEBRAIC_TOL || tr.im.abs() > ALGEBRAIC_TOL {
            return Err(Error::invalid(format!("density trace {tr} is not 1")));
        }
        let rho = Self { op };
        let min = rho.min_eigenvalue();
        if min < -ALGEBRAIC_TOL {
            return Err(Error::invalid(format!(
                "density operator has negative eigenvalue {min:e}"
            )));
        }
        Ok(rho)
    }

    pub fn from_pure(state: &QState) -> Self {
        Self {
            op: Operator::projector(state),
        }
    }

    /// Normalizes a positive operator by its trace.
    pub(crate) fn from_unnormalized(op: Operator) -> Result<Self> {
        let tr = op.trace().re;
        let sym = (&op + &op.adjoint()).scale(C64::new(0.5 / tr, 0.0));
        Self::new(sym)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> f64 {
        self.op.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.op.eigh().map(|(v, _)| v).unwrap_or_default()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }
}
