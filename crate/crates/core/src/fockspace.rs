//! Truncated Fock-space operator algebra for one qubit coupled to one or two
//! cavity modes.
//!
//! Slot ordering is fixed as `qubit ⊗ mode₁ ⊗ mode₂` (qubit-major): the flat
//! index of `|s, n₁, n₂⟩` is `s·N₁N₂ + n₁·N₂ + n₂`. Qubit index 0 is the
//! `σz = +1` state, index 1 the `σz = −1` state, and `σ = |1⟩⟨0|` lowers `σz`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

const NORM_TOL: f64 = 1e-8;
const HERMITIAN_TOL: f64 = 1e-12;

/// Shape of the qubit ⊗ Fock product space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpec {
    trunc: Vec<usize>,
}

impl HilbertSpec {
    pub fn new(trunc: &[usize]) -> Result<Self> {
        if trunc.is_empty() || trunc.len() > 2 {
            return Err(Error::InvalidHilbertSpace(format!(
                "expected 1 or 2 cavity modes, got {}",
                trunc.len()
            )));
        }
        if let Some(&n) = trunc.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidTruncation(n));
        }
        Ok(Self {
            trunc: trunc.to_vec(),
        })
    }

    pub fn single(n: usize) -> Result<Self> {
        Self::new(&[n])
    }

    pub fn n_modes(&self) -> usize {
        self.trunc.len()
    }

    pub fn trunc(&self) -> &[usize] {
        &self.trunc
    }

    pub fn mode_dim(&self, mode: usize) -> Result<usize> {
        self.trunc.get(mode).copied().ok_or_else(|| {
            Error::Shape(format!(
                "mode index {mode} out of range for {} mode(s)",
                self.n_modes()
            ))
        })
    }

    /// Product of the Fock truncations.
    pub fn cavity_dim(&self) -> usize {
        self.trunc.iter().product()
    }

    pub fn total_dim(&self) -> usize {
        2 * self.cavity_dim()
    }

    /// Decomposes a flat index into `(qubit, [n₁, n₂…])`.
    pub fn decompose(&self, index: usize) -> (usize, Vec<usize>) {
        let cav = self.cavity_dim();
        let s = index / cav;
        let mut rem = index % cav;
        let mut ns = vec![0; self.n_modes()];
        for j in (0..self.n_modes()).rev() {
            ns[j] = rem % self.trunc[j];
            rem /= self.trunc[j];
        }
        (s, ns)
    }
}

/// Tensor slot an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Qubit,
    /// Cavity mode, 0-based.
    Mode(usize),
}

/// Dense complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Shape(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { mat })
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut mat = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!("row {i} has length {}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                mat[(i, j)] = C64::new(v, 0.0);
            }
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { mat: &self.mat * s }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Self {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    pub fn matmul(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            mat: &self.mat * &other.mat,
        })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            mat: &self.mat * &other.mat - &other.mat * &self.mat,
        })
    }

    /// Largest entrywise deviation `|A_ij − conj(A_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() < HERMITIAN_TOL
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.mat.clone().singular_values().max()
    }

    pub fn apply(&self, state: &StateVector) -> Result<DVector<C64>> {
        self.check_dim(state.dim())?;
        Ok(&self.mat * state.amplitudes())
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim() != other {
            return Err(Error::Shape(format!(
                "dimension {} does not match {}",
                self.dim(),
                other
            )));
        }
        Ok(())
    }

    /// Writes the nonzero entries as `row col re im` lines.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.mat[(i, j)];
                if z != C64::new(0.0, 0.0) {
                    writeln!(w, "{i} {j} {:.16e} {:.16e}", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl std::ops::AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        self.mat += &rhs.mat;
    }
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    /// Wraps amplitudes that must already be normalized to within 1e-8.
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        let dev = (amps.norm_squared() - 1.0).abs();
        if !(dev < NORM_TOL) {
            return Err(Error::NotNormalized(dev));
        }
        Ok(Self { amps })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amps: DVector<C64>) -> Result<Self> {
        let n = amps.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized(f64::NAN));
        }
        Ok(Self { amps: amps / C64::new(n, 0.0) })
    }

    pub(crate) fn from_raw(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Shape(format!("basis index {index} >= dim {dim}")));
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// `qubit ⊗ mode₁ ⊗ mode₂` product state. Factors are normalized first.
    pub fn product(qubit: [C64; 2], modes: &[DVector<C64>], spec: &HilbertSpec) -> Result<Self> {
        if modes.len() != spec.n_modes() {
            return Err(Error::Shape(format!(
                "{} mode factors for {} mode(s)",
                modes.len(),
                spec.n_modes()
            )));
        }
        let mut acc = DVector::from_column_slice(&qubit);
        for (j, m) in modes.iter().enumerate() {
            if m.len() != spec.trunc()[j] {
                return Err(Error::Shape(format!(
                    "mode {j} factor has length {}, truncation is {}",
                    m.len(),
                    spec.trunc()[j]
                )));
            }
            acc = acc.kronecker(m);
        }
        Self::normalized(acc)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "state dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|⟨a|b⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, z) in self.amps.iter().enumerate() {
            writeln!(w, "{i} 0 {:.16e} {:.16e}", z.re, z.im)?;
        }
        Ok(())
    }
}

/// Mixed state on the same product space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (eigenvalues ≥ −1e-10).
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(mat)?;
        rho.validate(1e-8, 1e-10)?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Shape("density matrix must be square".into()));
        }
        Ok(Self { mat })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let a = state.amplitudes();
        Self { mat: a * a.adjoint() }
    }

    pub fn validate(&self, trace_tol: f64, neg_tol: f64) -> Result<()> {
        let op = Operator::from_matrix_unchecked(self.mat.clone());
        let herm = op.hermiticity_residual();
        if herm > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > trace_tol {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -neg_tol {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ_ij |ρ_ij|² for Hermitian ρ
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().min()
    }

    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "operator dim {} vs density dim {}",
                op.dim(),
                self.dim()
            )));
        }
        // Tr(Aρ) = Σ_ij A_ij ρ_ji
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += op.mat[(i, j)] * self.mat[(j, i)];
            }
        }
        Ok(acc.re)
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Truncated annihilation operator: `√m` at `(m−1, m)`.
pub fn annihilator(n: usize) -> Result<Operator> {
    if n < 2 {
        return Err(Error::InvalidTruncation(n));
    }
    let mut mat = DMatrix::zeros(n, n);
    for m in 1..n {
        mat[(m - 1, m)] = c((m as f64).sqrt());
    }
    Ok(Operator { mat })
}

pub fn number(n: usize) -> Result<Operator> {
    if n < 2 {
        return Err(Error::InvalidTruncation(n));
    }
    Ok(Operator {
        mat: DMatrix::from_diagonal(&DVector::from_fn(n, |m, _| c(m as f64))),
    })
}

pub fn sigma_x() -> Operator {
    Operator::from_matrix_unchecked(DMatrix::from_row_slice(
        2,
        2,
        &[c(0.0), c(1.0), c(1.0), c(0.0)],
    ))
}

pub fn sigma_y() -> Operator {
    let i = C64::new(0.0, 1.0);
    Operator::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)]))
}

pub fn sigma_z() -> Operator {
    Operator::from_matrix_unchecked(DMatrix::from_row_slice(
        2,
        2,
        &[c(1.0), c(0.0), c(0.0), c(-1.0)],
    ))
}

/// Qubit lowering operator `σ = (σx − iσy)/2 = |1⟩⟨0|`.
pub fn sigma_minus() -> Operator {
    Operator::from_matrix_unchecked(DMatrix::from_row_slice(
        2,
        2,
        &[c(0.0), c(0.0), c(1.0), c(0.0)],
    ))
}

pub fn sigma_plus() -> Operator {
    sigma_minus().adjoint()
}

/// Places `op` on `slot` with identities elsewhere, in qubit-major order.
pub fn embed(op: &Operator, slot: Slot, spec: &HilbertSpec) -> Result<Operator> {
    let slot_dim = match slot {
        Slot::Qubit => 2,
        Slot::Mode(j) => spec.mode_dim(j)?,
    };
    if op.dim() != slot_dim {
        return Err(Error::Shape(format!(
            "operator of dim {} cannot act on {:?} of dim {}",
            op.dim(),
            slot,
            slot_dim
        )));
    }
    let mut acc = match slot {
        Slot::Qubit => op.clone(),
        _ => Operator::identity(2),
    };
    for (j, &n) in spec.trunc().iter().enumerate() {
        let factor = if slot == Slot::Mode(j) {
            op.clone()
        } else {
            Operator::identity(n)
        };
        acc = acc.kron(&factor);
    }
    Ok(acc)
}

/// Product of a qubit operator and one cavity-mode operator, embedded.
pub fn embed_pair(qubit_op: &Operator, mode_op: &Operator, mode: usize, spec: &HilbertSpec) -> Result<Operator> {
    embed(qubit_op, Slot::Qubit, spec)?.matmul(&embed(mode_op, Slot::Mode(mode), spec)?)
}

/// Embedded `σ e^{iδ} + σ† e^{−iδ}`.
pub fn pauli_delta(delta: f64, spec: &HilbertSpec) -> Result<Operator> {
    embed(&pauli_delta_qubit(delta), Slot::Qubit, spec)
}

pub(crate) fn pauli_delta_qubit(delta: f64) -> Operator {
    let ph = C64::from_polar(1.0, delta);
    &sigma_minus().scale(ph) + &sigma_plus().scale(ph.conj())
}

/// Embedded annihilator of `mode`.
pub fn mode_annihilator(mode: usize, spec: &HilbertSpec) -> Result<Operator> {
    embed(&annihilator(spec.mode_dim(mode)?)?, Slot::Mode(mode), spec)
}

/// Position quadrature `X = i(d − d†)/2` of `mode`, embedded.
pub fn position_op(mode: usize, spec: &HilbertSpec) -> Result<Operator> {
    embed(&position_local(spec.mode_dim(mode)?)?, Slot::Mode(mode), spec)
}

/// Momentum quadrature `P = d† + d` of `mode`, embedded.
pub fn momentum_op(mode: usize, spec: &HilbertSpec) -> Result<Operator> {
    embed(&momentum_local(spec.mode_dim(mode)?)?, Slot::Mode(mode), spec)
}

pub(crate) fn position_local(n: usize) -> Result<Operator> {
    let d = annihilator(n)?;
    Ok((&d - &d.adjoint()).scale(C64::new(0.0, 0.5)))
}

pub(crate) fn momentum_local(n: usize) -> Result<Operator> {
    let d = annihilator(n)?;
    Ok(&d + &d.adjoint())
}

/// Whether a coherent-state request that fails the `|β|² ≤ N/4` guard is
/// rejected or returned with a warning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationPolicy {
    #[default]
    Reject,
    Warn,
}

#[derive(Debug, Clone)]
pub struct CoherentAmplitudes {
    pub amplitudes: DVector<C64>,
    pub warning: Option<String>,
}

/// Fock amplitudes `e^{−|β|²/2} βⁿ/√n!`, renormalized after truncation.
pub fn coherent_state(beta: C64, n: usize, policy: TruncationPolicy) -> Result<CoherentAmplitudes> {
    if n < 2 {
        return Err(Error::InvalidTruncation(n));
    }
    let mut warning = None;
    if beta.norm_sqr() > n as f64 / 4.0 {
        let msg = format!(
            "|beta|^2 = {} exceeds N/4 = {} for N = {n}",
            beta.norm_sqr(),
            n as f64 / 4.0
        );
        match policy {
            TruncationPolicy::Reject => return Err(Error::Truncation(msg)),
            TruncationPolicy::Warn => warning = Some(msg),
        }
    }
    let mut amps = DVector::zeros(n);
    // βⁿ/√n! by recurrence; the Gaussian prefactor cancels in renormalization
    let mut term = c(1.0);
    amps[0] = term;
    for k in 1..n {
        term = term * beta / (k as f64).sqrt();
        amps[k] = term;
    }
    let norm = amps.norm();
    amps /= c(norm);
    Ok(CoherentAmplitudes {
        amplitudes: amps,
        warning,
    })
}

/// Reduced qubit state and its Bloch summary.
#[derive(Debug, Clone)]
pub struct QubitReduced {
    pub rho: DensityMatrix,
    pub bloch: [f64; 3],
    pub purity: f64,
}

/// Partial trace over all cavity modes.
pub fn qubit_reduced(state: &StateVector, spec: &HilbertSpec) -> Result<QubitReduced> {
    if state.dim() != spec.total_dim() {
        return Err(Error::Shape(format!(
            "state dim {} vs Hilbert dim {}",
            state.dim(),
            spec.total_dim()
        )));
    }
    let cav = spec.cavity_dim();
    let a = state.amplitudes();
    let (top, bottom) = (a.rows(0, cav), a.rows(cav, cav));
    let r00 = top.norm_squared();
    let r11 = bottom.norm_squared();
    let r01 = bottom.dotc(&top); // Σ a0 a1*
    let mat = DMatrix::from_row_slice(2, 2, &[c(r00), r01, r01.conj(), c(r11)]);
    let bloch = [2.0 * r01.re, -2.0 * r01.im, r00 - r11];
    let purity = r00 * r00 + r11 * r11 + 2.0 * r01.norm_sqr();
    Ok(QubitReduced {
        rho: DensityMatrix { mat },
        bloch,
        purity,
    })
}

/// `⟨ψ|op|ψ⟩`.
pub fn expectation(state: &StateVector, op: &Operator) -> Result<C64> {
    let v = op.apply(state)?;
    Ok(state.amplitudes().dotc(&v))
}

/// Real expectation of a Hermitian operator; the imaginary residue must stay below 1e-9.
pub fn expectation_real(state: &StateVector, op: &Operator) -> Result<f64> {
    let z = expectation(state, op)?;
    if z.im.abs() > 1e-9 {
        return Err(Error::NotHermitian(z.im.abs()));
    }
    Ok(z.re)
}

/// Population of the top two Fock levels, maximized over modes.
pub fn fock_leak(amps: &[C64], spec: &HilbertSpec) -> f64 {
    let mut per_mode = vec![0.0; spec.n_modes()];
    for (idx, z) in amps.iter().enumerate() {
        let p = z.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let (_, ns) = spec.decompose(idx);
        for (j, &n) in ns.iter().enumerate() {
            if n + 2 >= spec.trunc()[j] {
                per_mode[j] += p;
            }
        }
    }
    per_mode.into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn plus() -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [c(s), c(s)]
    }

    fn vacuum(n: usize) -> DVector<C64> {
        let mut v = DVector::zeros(n);
        v[0] = c(1.0);
        v
    }

    #[test]
    fn annihilator_small_matrices() {
        let a2 = annihilator(2).unwrap();
        assert_eq!(a2, Operator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap());
        let a3 = annihilator(3).unwrap();
        assert_eq!(a3.get(0, 1), c(1.0));
        assert_eq!(a3.get(1, 2), c(2f64.sqrt()));
        assert_eq!(a3.get(0, 2), c(0.0));
        assert!(matches!(annihilator(1), Err(Error::InvalidTruncation(1))));
    }

    #[test]
    fn number_operator_from_ladder() {
        let a = annihilator(4).unwrap();
        let n = a.adjoint().matmul(&a).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { c(i as f64) } else { c(0.0) };
                assert!(close(n.get(i, j), want, 1e-15));
            }
        }
    }

    #[test]
    fn canonical_commutator_away_from_edge() {
        let n = 12;
        let a = annihilator(n).unwrap();
        let comm = a.commutator(&a.adjoint()).unwrap();
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let want = if i == j { c(1.0) } else { c(0.0) };
                assert!(close(comm.get(i, j), want, 1e-12));
            }
        }
        // the edge entry is 1 − N, not 1
        assert!(close(comm.get(n - 1, n - 1), c(1.0 - n as f64), 1e-12));
    }

    #[test]
    fn position_momentum_commutator() {
        let spec = HilbertSpec::single(10).unwrap();
        let x = position_op(0, &spec).unwrap();
        let p = momentum_op(0, &spec).unwrap();
        let comm = x.commutator(&p).unwrap();
        let i = C64::new(0.0, 1.0);
        // within each qubit block, indices n, m < N−1
        for s in 0..2 {
            for n in 0..9 {
                for m in 0..9 {
                    let want = if n == m { i } else { c(0.0) };
                    assert!(close(comm.get(s * 10 + n, s * 10 + m), want, 1e-12));
                }
            }
        }
    }

    #[test]
    fn embed_qubit_major_ordering() {
        let spec = HilbertSpec::single(2).unwrap();
        let z = embed(&sigma_z(), Slot::Qubit, &spec).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| z.get(i, i).re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        assert!(z.max_abs() == 1.0);

        let id = embed(&Operator::identity(2), Slot::Mode(0), &spec).unwrap();
        assert_eq!(id, Operator::identity(4));
    }

    #[test]
    fn embed_on_distinct_modes_commute() {
        let spec = HilbertSpec::new(&[3, 4]).unwrap();
        let d1 = mode_annihilator(0, &spec).unwrap();
        let d2 = mode_annihilator(1, &spec).unwrap();
        let comm = d1.commutator(&d2.adjoint()).unwrap();
        assert!(comm.max_abs() < 1e-15);
        assert_eq!(spec.total_dim(), 24);
    }

    #[test]
    fn embed_rejects_wrong_dimension() {
        let spec = HilbertSpec::new(&[3, 4]).unwrap();
        let a = annihilator(3).unwrap();
        assert!(matches!(embed(&a, Slot::Mode(1), &spec), Err(Error::Shape(_))));
        assert!(matches!(embed(&a, Slot::Qubit, &spec), Err(Error::Shape(_))));
        assert!(embed(&a, Slot::Mode(2), &spec).is_err());
    }

    #[test]
    fn embed_preserves_hermiticity_and_norm() {
        let spec = HilbertSpec::new(&[3, 2]).unwrap();
        let p = momentum_local(3).unwrap();
        let e = embed(&p, Slot::Mode(0), &spec).unwrap();
        assert!(e.is_hermitian());
        assert!((e.spectral_norm() - p.spectral_norm()).abs() < 1e-12);
    }

    #[test]
    fn hilbert_spec_validation() {
        assert!(HilbertSpec::new(&[]).is_err());
        assert!(HilbertSpec::new(&[2, 2, 2]).is_err());
        assert!(matches!(HilbertSpec::new(&[4, 1]), Err(Error::InvalidTruncation(1))));
        let s = HilbertSpec::new(&[3, 5]).unwrap();
        assert_eq!(s.total_dim(), 30);
        // 22 = 15*1 + 5*1 + 2
        assert_eq!(s.decompose(22), (1, vec![1, 2]));
    }

    #[test]
    fn pauli_delta_reduces_to_pauli() {
        let spec = HilbertSpec::single(2).unwrap();
        let sx = embed(&sigma_x(), Slot::Qubit, &spec).unwrap();
        let sy = embed(&sigma_y(), Slot::Qubit, &spec).unwrap();
        let d0 = pauli_delta(0.0, &spec).unwrap();
        let d90 = pauli_delta(std::f64::consts::FRAC_PI_2, &spec).unwrap();
        assert!((&d0 - &sx).max_abs() < 1e-15);
        assert!((&d90 - &sy).max_abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn pauli_delta_is_involution(delta in -10.0f64..10.0) {
            let spec = HilbertSpec::single(3).unwrap();
            let s = pauli_delta(delta, &spec).unwrap();
            let sq = s.matmul(&s).unwrap();
            prop_assert!((&sq - &Operator::identity(6)).max_abs() < 1e-14);
        }

        #[test]
        fn reduced_purity_in_range(re in proptest::collection::vec(-1.0f64..1.0, 16),
                                   im in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let spec = HilbertSpec::new(&[2, 4]).unwrap();
            let amps = DVector::from_iterator(16, re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)));
            prop_assume!(amps.norm() > 1e-3);
            let st = StateVector::normalized(amps).unwrap();
            let q = qubit_reduced(&st, &spec).unwrap();
            prop_assert!(q.purity >= 0.5 - 1e-12 && q.purity <= 1.0 + 1e-12);
            let bn = q.bloch.iter().map(|b| b * b).sum::<f64>().sqrt();
            prop_assert!(bn <= 1.0 + 1e-12);
            prop_assert!((q.rho.purity() - q.purity).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_quadratures_vanish() {
        let spec = HilbertSpec::single(8).unwrap();
        let st = StateVector::product(plus(), &[vacuum(8)], &spec).unwrap();
        assert!(expectation_real(&st, &position_op(0, &spec).unwrap()).unwrap().abs() < 1e-15);
        assert!(expectation_real(&st, &momentum_op(0, &spec).unwrap()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn coherent_state_moments() {
        let spec = HilbertSpec::single(20).unwrap();
        let coh = coherent_state(c(0.5), 20, TruncationPolicy::Reject).unwrap();
        assert!((coh.amplitudes.norm() - 1.0).abs() < 1e-12);
        assert!(coh.warning.is_none());
        let st = StateVector::product(plus(), &[coh.amplitudes], &spec).unwrap();
        let n = embed(&number(20).unwrap(), Slot::Mode(0), &spec).unwrap();
        assert!((expectation_real(&st, &n).unwrap() - 0.25).abs() < 1e-10);
        // ⟨P⟩ = 2 Re β, ⟨X⟩ = −Im β
        assert!((expectation_real(&st, &momentum_op(0, &spec).unwrap()).unwrap() - 1.0).abs() < 1e-10);
        assert!(expectation_real(&st, &position_op(0, &spec).unwrap()).unwrap().abs() < 1e-12);

        let coh_i = coherent_state(C64::new(0.0, 0.7), 20, TruncationPolicy::Reject).unwrap();
        let st = StateVector::product(plus(), &[coh_i.amplitudes], &spec).unwrap();
        assert!((expectation_real(&st, &position_op(0, &spec).unwrap()).unwrap() + 0.7).abs() < 1e-10);
    }

    #[test]
    fn coherent_vacuum_and_guard() {
        let v = coherent_state(c(0.0), 5, TruncationPolicy::Reject).unwrap();
        assert_eq!(v.amplitudes, vacuum(5));
        assert!(matches!(
            coherent_state(c(2.0), 10, TruncationPolicy::Reject),
            Err(Error::Truncation(_))
        ));
        let w = coherent_state(c(2.0), 10, TruncationPolicy::Warn).unwrap();
        assert!(w.warning.is_some());
        assert!((w.amplitudes.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_state_examples() {
        let spec = HilbertSpec::single(4).unwrap();
        let st = StateVector::product(plus(), &[vacuum(4)], &spec).unwrap();
        let q = qubit_reduced(&st, &spec).unwrap();
        assert!((q.purity - 1.0).abs() < 1e-14);
        assert!((q.bloch[0] - 1.0).abs() < 1e-14);
        assert!(q.bloch[1].abs() < 1e-14 && q.bloch[2].abs() < 1e-14);

        // (|0,0⟩ + |1,1⟩)/√2 in (qubit, Fock) labels
        let mut amps = DVector::zeros(8);
        amps[0] = c(1.0);
        amps[4 + 1] = c(1.0);
        let bell = StateVector::normalized(amps).unwrap();
        let q = qubit_reduced(&bell, &spec).unwrap();
        assert!((q.purity - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bloch_matches_pauli_expectations() {
        let spec = HilbertSpec::single(3).unwrap();
        let amps = DVector::from_fn(6, |i, _| C64::new(0.3 + i as f64, 0.2 * i as f64 - 0.5));
        let st = StateVector::normalized(amps).unwrap();
        let q = qubit_reduced(&st, &spec).unwrap();
        for (k, op) in [sigma_x(), sigma_y(), sigma_z()].iter().enumerate() {
            let e = expectation_real(&st, &embed(op, Slot::Qubit, &spec).unwrap()).unwrap();
            assert!((e - q.bloch[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn expectation_examples() {
        let spec = HilbertSpec::single(3).unwrap();
        let st = StateVector::product(plus(), &[vacuum(3)], &spec).unwrap();
        let sx = embed(&sigma_x(), Slot::Qubit, &spec).unwrap();
        assert!((expectation_real(&st, &sx).unwrap() - 1.0).abs() < 1e-15);
        let n = embed(&number(3).unwrap(), Slot::Mode(0), &spec).unwrap();
        assert_eq!(expectation_real(&st, &n).unwrap(), 0.0);
        assert!(matches!(expectation(&st, &Operator::identity(4)), Err(Error::Shape(_))));
    }

    #[test]
    fn constructions_are_deterministic() {
        let spec = HilbertSpec::new(&[5, 6]).unwrap();
        let a = position_op(1, &spec).unwrap();
        let b = position_op(1, &spec).unwrap();
        assert_eq!(a, b);
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        a.write_dump(&mut d1).unwrap();
        b.write_dump(&mut d2).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn dump_format() {
        let mut out = Vec::new();
        annihilator(2).unwrap().write_dump(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.trim(), "0 1 1.0000000000000000e0 0.0000000000000000e0");
    }

    #[test]
    fn state_normalization_checked() {
        let amps = DVector::from_element(2, c(1.0));
        assert!(matches!(StateVector::new(amps.clone()), Err(Error::NotNormalized(_))));
        assert!(StateVector::normalized(amps).is_ok());
        assert!(StateVector::normalized(DVector::zeros(2)).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let st = StateVector::basis(4, 1).unwrap();
        let rho = DensityMatrix::from_pure(&st);
        assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        let bad = rho.matrix() * c(2.0);
        assert!(DensityMatrix::new(bad).is_err());
        let mut neg = DMatrix::zeros(2, 2);
        neg[(0, 0)] = c(1.5);
        neg[(1, 1)] = c(-0.5);
        assert!(DensityMatrix::new(neg).is_err());
    }

    #[test]
    fn leak_counts_top_two_levels() {
        let spec = HilbertSpec::new(&[4, 3]).unwrap();
        let mut amps = vec![c(0.0); spec.total_dim()];
        // |s=0, n1=3, n2=0⟩ and |s=1, n1=0, n2=0⟩
        amps[3 * 3] = c(0.6);
        amps[12] = c(0.8);
        assert!((fock_leak(&amps, &spec) - 0.36).abs() < 1e-15);
    }
}
