//! Time evolution: fixed-step RK4 for pure states, exact eigenbasis
//! propagation for time-independent Hamiltonians and RK4 on the Lindblad
//! master equation. Observables are sampled on a uniform stride.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::fockspace::{
    embed, fock_leak, momentum_op, position_op, DensityMatrix, HilbertSpec, Operator, Slot,
    StateVector,
};
use crate::hamiltonians::HamiltonianSource;
use crate::sparse::Csr;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Uniform time grid. The step actually used is `(t1 − t0)/n_steps` with
/// `n_steps = ceil((t1 − t0)/dt)`, so the grid always lands on `t1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub record_every: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, dt: f64, record_every: usize) -> Result<Self> {
        let g = Self {
            t0,
            t1,
            dt,
            record_every,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.t0.is_finite() && self.t1.is_finite()) || (self.t1 - self.t0) / self.dt < 1.0 - 1e-9 {
            return Err(Error::param("t1", "grid must span at least one step"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be >= 1"));
        }
        Ok(())
    }

    /// Requires at least 20 steps per sideband period `2π/Ω_SB`.
    pub fn check_resolves(&self, omega_sb_max: f64) -> Result<()> {
        if self.step() * omega_sb_max >= TAU / 20.0 {
            return Err(Error::param(
                "dt",
                format!(
                    "dt = {:.3e} us resolves fewer than 20 steps per sideband period {:.3e} us",
                    self.step(),
                    TAU / omega_sb_max
                ),
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.t1 - self.t0) / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step()
    }

    /// Times at which observables are recorded: every `record_every` steps,
    /// plus the final time.
    pub fn sample_times(&self) -> Vec<f64> {
        self.sample_steps().into_iter().map(|k| self.time(k)).collect()
    }

    fn sample_steps(&self) -> Vec<usize> {
        let n = self.n_steps();
        let mut ks: Vec<usize> = (0..=n).step_by(self.record_every).collect();
        if *ks.last().unwrap() != n {
            ks.push(n);
        }
        ks
    }
}

/// Named real time series sharing one time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl ObservableSeries {
    pub fn empty(names: Vec<String>) -> Self {
        let columns = vec![Vec::new(); names.len()];
        Self {
            times: Vec::new(),
            names,
            columns,
        }
    }

    pub fn push(&mut self, t: f64, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.times.push(t);
        for (c, &v) in self.columns.iter_mut().zip(row) {
            c.push(v);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        self.column(name).and_then(|c| c.last().copied())
    }

    /// Reads the layout produced by [`ObservableSeries::write_csv`].
    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Serialization("empty CSV".into()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("t_us") {
            return Err(Error::Serialization("first CSV column must be t_us".into()));
        }
        let mut series = Self::empty(cols.map(str::to_string).collect());
        let width = series.names.len() + 1;
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| Error::Serialization(format!("CSV row {}: {e}", i + 2)))?;
            if vals.len() != width {
                return Err(Error::Serialization(format!(
                    "CSV row {} has {} fields, expected {width}",
                    i + 2,
                    vals.len()
                )));
            }
            series.push(vals[0], &vals[1..]);
        }
        Ok(series)
    }

    /// Leading samples up to and including `t_end`.
    pub fn truncated(&self, t_end: f64) -> Self {
        let n = self.times.iter().take_while(|&&t| t <= t_end + 1e-9).count();
        Self {
            times: self.times[..n].to_vec(),
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[..n].to_vec()).collect(),
        }
    }

    /// CSV with a `t_us` column followed by every named series.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t_us")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for (i, t) in self.times.iter().enumerate() {
            write!(w, "{t:.16e}")?;
            for c in &self.columns {
                write!(w, ",{:.16e}", c[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// The standard observable set: `X_j`, `P_j` per mode, the qubit Bloch
/// vector, the qubit purity, the state norm and the top-Fock leak.
#[derive(Debug, Clone)]
pub struct Observables {
    spec: HilbertSpec,
    quadratures: Vec<(Csr, Csr)>,
    dense: Vec<(Operator, Operator)>,
}

impl Observables {
    pub fn new(spec: &HilbertSpec) -> Result<Self> {
        let mut quadratures = Vec::new();
        let mut dense = Vec::new();
        for j in 0..spec.n_modes() {
            let x = position_op(j, spec)?;
            let p = momentum_op(j, spec)?;
            quadratures.push((Csr::from_operator(&x), Csr::from_operator(&p)));
            dense.push((x, p));
        }
        Ok(Self {
            spec: spec.clone(),
            quadratures,
            dense,
        })
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn names(&self) -> Vec<String> {
        let mut v = Vec::new();
        for j in 1..=self.spec.n_modes() {
            v.push(format!("X{j}"));
            v.push(format!("P{j}"));
        }
        for n in ["sx", "sy", "sz", "purity", "norm", "leak"] {
            v.push(n.to_string());
        }
        v
    }

    /// Observables of a (possibly slightly unnormalized) pure state; the
    /// expectation values are divided by the squared norm.
    pub fn measure(&self, amps: &[C64]) -> Vec<f64> {
        let n2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        let mut row = Vec::with_capacity(2 * self.quadratures.len() + 6);
        for (x, p) in &self.quadratures {
            row.push(x.expectation(amps).re / n2);
            row.push(p.expectation(amps).re / n2);
        }
        let cav = self.spec.cavity_dim();
        let (top, bottom) = amps.split_at(cav);
        let r00: f64 = top.iter().map(|z| z.norm_sqr()).sum::<f64>() / n2;
        let r11: f64 = bottom.iter().map(|z| z.norm_sqr()).sum::<f64>() / n2;
        let r01: C64 = top.iter().zip(bottom).map(|(a, b)| a * b.conj()).sum::<C64>() / n2;
        row.push(2.0 * r01.re);
        row.push(-2.0 * r01.im);
        row.push(r00 - r11);
        row.push(r00 * r00 + r11 * r11 + 2.0 * r01.norm_sqr());
        row.push(n2.sqrt());
        row.push(fock_leak(amps, &self.spec) / n2);
        row
    }

    /// Same observable set for a density matrix; `norm` is the trace.
    pub fn measure_density(&self, rho: &DMatrix<C64>) -> Vec<f64> {
        let tr_with = |op: &Operator| -> f64 {
            let m = op.matrix();
            let mut acc = ZERO;
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    let a = m[(j, i)];
                    if a != ZERO {
                        acc += rho[(i, j)] * a;
                    }
                }
            }
            acc.re
        };
        let tr = rho.trace().re;
        let mut row = Vec::new();
        for (x, p) in &self.dense {
            row.push(tr_with(x) / tr);
            row.push(tr_with(p) / tr);
        }
        let cav = self.spec.cavity_dim();
        let mut r00 = 0.0;
        let mut r11 = 0.0;
        let mut r01 = ZERO;
        for c in 0..cav {
            r00 += rho[(c, c)].re;
            r11 += rho[(cav + c, cav + c)].re;
            r01 += rho[(c, cav + c)];
        }
        let (r00, r11, r01) = (r00 / tr, r11 / tr, r01 / tr);
        row.push(2.0 * r01.re);
        row.push(-2.0 * r01.im);
        row.push(r00 - r11);
        row.push(r00 * r00 + r11 * r11 + 2.0 * r01.norm_sqr());
        row.push(tr);
        let diag: Vec<C64> = (0..rho.nrows()).map(|i| C64::new(rho[(i, i)].re.max(0.0).sqrt(), 0.0)).collect();
        row.push(fock_leak(&diag, &self.spec) / tr);
        row
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Bound on the top-two-Fock-level population at every sample.
    pub leak_bound: f64,
    /// Per-step norm change that triggers renormalization.
    pub renorm_threshold: f64,
    /// Cumulative norm drift that aborts the run.
    pub max_drift: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            leak_bound: 1e-6,
            renorm_threshold: 1e-10,
            max_drift: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub renormalizations: usize,
    pub cumulative_drift: f64,
    pub max_leak: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub series: ObservableSeries,
    pub final_state: StateVector,
    pub diagnostics: Diagnostics,
}

/// Callback invoked at every sample time with the current amplitudes.
pub type SampleHook<'a> = &'a mut dyn FnMut(f64, &[C64]);

fn check_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::Shape(format!("{what}: expected dim {expected}, got {got}")));
    }
    Ok(())
}

fn check_leak(leak: f64, bound: f64, t: f64) -> Result<()> {
    if leak > bound {
        return Err(Error::Truncation(format!(
            "top-Fock population {leak:.3e} exceeds {bound:.1e} at t = {t:.4} us; increase the truncation"
        )));
    }
    Ok(())
}

/// Classic fixed-step RK4 on `dψ/dt = −iH(t)ψ`.
pub fn evolve_unitary(
    state0: &StateVector,
    h: &dyn HamiltonianSource,
    grid: &TimeGrid,
    obs: &Observables,
    opts: &EvolveOptions,
    mut hook: Option<SampleHook<'_>>,
) -> Result<Evolution> {
    grid.validate()?;
    let dim = h.dim();
    check_dim(dim, state0.dim(), "initial state")?;
    check_dim(dim, obs.spec().total_dim(), "observables")?;
    let n = grid.n_steps();
    let dt = grid.step();
    let stride = grid.record_every;
    let mi = C64::new(0.0, -1.0);

    let mut psi: Vec<C64> = state0.amplitudes().iter().copied().collect();
    let mut k1 = vec![ZERO; dim];
    let mut k2 = vec![ZERO; dim];
    let mut k3 = vec![ZERO; dim];
    let mut k4 = vec![ZERO; dim];
    let mut tmp = vec![ZERO; dim];
    let mut series = ObservableSeries::empty(obs.names());
    let mut diag = Diagnostics::default();
    let leak_col = series.names.len() - 1;
    let mut norm_prev = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let mut record = |t: f64, psi: &[C64], series: &mut ObservableSeries, diag: &mut Diagnostics| -> Result<()> {
        let row = obs.measure(psi);
        diag.max_leak = diag.max_leak.max(row[leak_col]);
        series.push(t, &row);
        if let Some(f) = hook.as_mut() {
            f(t, psi);
        }
        check_leak(row[leak_col], opts.leak_bound, t)
    };
    record(grid.t0, &psi, &mut series, &mut diag)?;

    for step in 0..n {
        let t = grid.time(step);
        h.apply(t, &psi, &mut k1);
        for i in 0..dim {
            k1[i] *= mi;
            tmp[i] = psi[i] + 0.5 * dt * k1[i];
        }
        h.apply(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..dim {
            k2[i] *= mi;
            tmp[i] = psi[i] + 0.5 * dt * k2[i];
        }
        h.apply(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..dim {
            k3[i] *= mi;
            tmp[i] = psi[i] + dt * k3[i];
        }
        h.apply(t + dt, &tmp, &mut k4);
        for i in 0..dim {
            psi[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + mi * k4[i]);
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::Integration(format!(
                "state diverged at t = {t:.4} us; reduce dt (currently {dt:.3e} us)"
            )));
        }
        diag.cumulative_drift += (norm - norm_prev).abs();
        norm_prev = norm;
        if (norm - 1.0).abs() > opts.renorm_threshold {
            psi.iter_mut().for_each(|z| *z /= norm);
            diag.renormalizations += 1;
            norm_prev = 1.0;
        }
        if diag.cumulative_drift > opts.max_drift {
            return Err(Error::Integration(format!(
                "cumulative norm drift {:.3e} exceeds {:.1e} at t = {t:.4} us; reduce dt (currently {dt:.3e} us)",
                diag.cumulative_drift, opts.max_drift
            )));
        }
        diag.steps += 1;
        if (step + 1) % stride == 0 || step + 1 == n {
            record(grid.time(step + 1), &psi, &mut series, &mut diag)?;
        }
    }
    Ok(Evolution {
        series,
        final_state: StateVector::from_raw(DVector::from_vec(psi)),
        diagnostics: diag,
    })
}

/// Exact propagator `e^{−iHt}` of a time-independent Hermitian `H` from a
/// single diagonalization.
#[derive(Debug, Clone)]
pub struct EigenPropagator {
    values: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl EigenPropagator {
    pub fn new(h: &Operator) -> Result<Self> {
        let r = h.hermiticity_residual();
        if r > 1e-10 {
            return Err(Error::NotHermitian(r));
        }
        let eig = SymmetricEigen::new(h.matrix().clone());
        Ok(Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    /// Eigenbasis coefficients of `psi`.
    pub fn coefficients(&self, psi: &DVector<C64>) -> DVector<C64> {
        self.vectors.ad_mul(psi)
    }

    /// `e^{−iHt}ψ` given eigenbasis coefficients `c`; components below
    /// `1e-15` are skipped.
    pub fn evolve_coefficients(&self, c: &DVector<C64>, t: f64) -> DVector<C64> {
        let dim = c.len();
        let mut out = DVector::from_element(dim, ZERO);
        for k in 0..dim {
            if c[k].norm() < 1e-15 {
                continue;
            }
            let w = c[k] * C64::from_polar(1.0, -self.values[k] * t);
            out.axpy(w, &self.vectors.column(k), C64::new(1.0, 0.0));
        }
        out
    }

    pub fn evolve(&self, psi: &StateVector, t: f64) -> StateVector {
        let c = self.coefficients(psi.amplitudes());
        StateVector::from_raw(self.evolve_coefficients(&c, t))
    }

    /// Dense `e^{−iHt}`.
    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        let phases = self.values.map(|l| C64::from_polar(1.0, -l * t));
        let mut vd = self.vectors.clone();
        for (k, mut col) in vd.column_iter_mut().enumerate() {
            col *= phases[k];
        }
        vd * self.vectors.adjoint()
    }
}

/// Exact evolution of a time-independent Hamiltonian sampled at `sample_times`.
pub fn evolve_eigen(
    state0: &StateVector,
    h: &Operator,
    sample_times: &[f64],
    obs: &Observables,
    opts: &EvolveOptions,
    hook: Option<SampleHook<'_>>,
) -> Result<Evolution> {
    let prop = EigenPropagator::new(h)?;
    evolve_with(&prop, state0, sample_times, obs, opts, hook)
}

/// Like [`evolve_eigen`] with a prebuilt propagator.
pub fn evolve_with(
    prop: &EigenPropagator,
    state0: &StateVector,
    sample_times: &[f64],
    obs: &Observables,
    opts: &EvolveOptions,
    mut hook: Option<SampleHook<'_>>,
) -> Result<Evolution> {
    check_dim(prop.values.len(), state0.dim(), "initial state")?;
    check_dim(prop.values.len(), obs.spec().total_dim(), "observables")?;
    let c = prop.coefficients(state0.amplitudes());
    let mut series = ObservableSeries::empty(obs.names());
    let mut diag = Diagnostics::default();
    let leak_col = series.names.len() - 1;
    let mut last = state0.amplitudes().clone();
    for &t in sample_times {
        let psi = if t == 0.0 {
            state0.amplitudes().clone()
        } else {
            prop.evolve_coefficients(&c, t)
        };
        let row = obs.measure(psi.as_slice());
        diag.max_leak = diag.max_leak.max(row[leak_col]);
        series.push(t, &row);
        if let Some(f) = hook.as_mut() {
            f(t, psi.as_slice());
        }
        check_leak(row[leak_col], opts.leak_bound, t)?;
        last = psi;
    }
    diag.steps = sample_times.len();
    Ok(Evolution {
        series,
        final_state: StateVector::from_raw(last),
        diagnostics: diag,
    })
}

/// `e^{−iHt}` as an operator.
pub fn exp_minus_i(h: &Operator, t: f64) -> Result<Operator> {
    Ok(Operator::from_matrix_unchecked(EigenPropagator::new(h)?.unitary(t)))
}

/// Displacement `D(α) = exp(α d† − α* d)` on `mode`, computed exactly in
/// the truncated space.
pub fn displacement(alpha: C64, mode: usize, spec: &HilbertSpec) -> Result<Operator> {
    let a = crate::fockspace::annihilator(spec.mode_dim(mode)?)?;
    let gen = (&a.adjoint().scale(alpha) - &a.scale(alpha.conj())).scale(C64::new(0.0, 1.0));
    embed(&exp_minus_i(&gen, 1.0)?, Slot::Mode(mode), spec)
}

#[derive(Debug, Clone)]
pub struct LindbladEvolution {
    pub series: ObservableSeries,
    pub final_state: DensityMatrix,
    pub max_trace_drift: f64,
}

/// RK4 on `dρ/dt = −i[H,ρ] + κ D[d_mode]ρ`.
pub fn evolve_lindblad(
    rho0: &DensityMatrix,
    h: &dyn HamiltonianSource,
    kappa: f64,
    mode: usize,
    grid: &TimeGrid,
    obs: &Observables,
) -> Result<LindbladEvolution> {
    grid.validate()?;
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::param("kappa", "must be non-negative"));
    }
    let dim = h.dim();
    check_dim(dim, rho0.dim(), "initial density matrix")?;
    let spec = obs.spec();
    let l = crate::fockspace::mode_annihilator(mode, spec)?.into_matrix();
    let ldl = l.adjoint() * &l;
    let l_dag = l.adjoint();
    let mi = C64::new(0.0, -1.0);
    let rhs = |t: f64, rho: &DMatrix<C64>| -> DMatrix<C64> {
        let hm = h.operator_at(t).into_matrix();
        let hr = &hm * rho;
        let mut d = (&hr - hr.adjoint()) * mi;
        if kappa > 0.0 {
            let lr = &l * rho;
            let anti = &ldl * rho;
            d += (lr * &l_dag - (&anti + anti.adjoint()) * C64::new(0.5, 0.0)) * C64::new(kappa, 0.0);
        }
        d
    };
    let n = grid.n_steps();
    let dt = grid.step();
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let mut rho = rho0.matrix().clone();
    let mut series = ObservableSeries::empty(obs.names());
    series.push(grid.t0, &obs.measure_density(&rho));
    let mut max_drift = 0.0_f64;
    for step in 0..n {
        let t = grid.time(step);
        let k1 = rhs(t, &rho);
        let k2 = rhs(t + 0.5 * dt, &(&rho + &k1 * half));
        let k3 = rhs(t + 0.5 * dt, &(&rho + &k2 * half));
        let k4 = rhs(t + dt, &(&rho + &k3 * full));
        rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
        // keep ρ exactly Hermitian against round-off
        rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        let drift = (rho.trace().re - 1.0).abs();
        max_drift = max_drift.max(drift);
        if drift > 1e-7 {
            return Err(Error::Integration(format!(
                "trace drift {drift:.3e} at t = {t:.4} us; reduce dt (currently {dt:.3e} us)"
            )));
        }
        if (step + 1) % grid.record_every == 0 || step + 1 == n {
            let dm = DensityMatrix::from_matrix_unchecked(rho.clone())?;
            let min_eig = dm.min_eigenvalue();
            if min_eig < -1e-7 {
                return Err(Error::Integration(format!(
                    "density matrix eigenvalue {min_eig:.3e} at t = {:.4} us; reduce dt",
                    grid.time(step + 1)
                )));
            }
            series.push(grid.time(step + 1), &obs.measure_density(&rho));
        }
    }
    Ok(LindbladEvolution {
        series,
        final_state: DensityMatrix::from_matrix_unchecked(rho)?,
        max_trace_drift: max_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{annihilator, coherent_state, number, qubit_reduced, sigma_x, sigma_z, TruncationPolicy};
    use crate::hamiltonians::DrivenHamiltonian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(dim: usize, seed: u64) -> Operator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        Operator::from_matrix((&m + m.adjoint()) * C64::new(0.25, 0.0)).unwrap()
    }

    fn random_state(dim: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = DVector::from_fn(dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        StateVector::normalized(v).unwrap()
    }

    /// 16-dim qubit ⊗ 8-level space so the standard observables apply.
    fn spec16() -> HilbertSpec {
        HilbertSpec::single(8).unwrap()
    }

    fn no_leak() -> EvolveOptions {
        EvolveOptions {
            leak_bound: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn grid_basics() {
        let g = TimeGrid::new(0.0, 1.0, 0.3, 2).unwrap();
        assert_eq!(g.n_steps(), 4);
        assert!((g.step() - 0.25).abs() < 1e-15);
        assert_eq!(g.sample_times(), vec![0.0, 0.5, 1.0]);
        let g = TimeGrid::new(0.0, 1.0, 0.1, 3).unwrap();
        assert_eq!(g.n_steps(), 10);
        assert_eq!(g.sample_times().len(), 5);
        assert!(TimeGrid::new(0.0, 1.0, 0.0, 1).is_err());
        assert!(TimeGrid::new(0.0, 0.01, 0.1, 1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.1, 0).is_err());
        let om = TAU * 40.0;
        assert!(TimeGrid::new(0.0, 1.0, TAU / om / 40.0, 1).unwrap().check_resolves(om).is_ok());
        assert!(TimeGrid::new(0.0, 1.0, TAU / om / 10.0, 1).unwrap().check_resolves(om).is_err());
    }

    #[test]
    fn zero_hamiltonian_leaves_state() {
        let spec = spec16();
        let psi = random_state(16, 1);
        let obs = Observables::new(&spec).unwrap();
        let g = TimeGrid::new(0.0, 2.0, 0.01, 10).unwrap();
        let ev = evolve_unitary(&psi, &Operator::zeros(16), &g, &obs, &no_leak(), None).unwrap();
        assert_eq!(ev.final_state.amplitudes(), psi.amplitudes());
        for c in &ev.series.columns {
            assert!(c.iter().all(|&v| v == c[0]));
        }
    }

    #[test]
    fn rabi_oscillation() {
        let spec = HilbertSpec::single(2).unwrap();
        let om = 1.3;
        let h = embed(&sigma_x(), Slot::Qubit, &spec).unwrap().scale_real(om / 2.0);
        let psi = StateVector::basis(4, 0).unwrap();
        let obs = Observables::new(&spec).unwrap();
        let g = TimeGrid::new(0.0, 10.0, 0.001, 50).unwrap();
        let ev = evolve_unitary(&psi, &h, &g, &obs, &no_leak(), None).unwrap();
        let sz = ev.series.column("sz").unwrap();
        for (t, z) in ev.series.times.iter().zip(sz) {
            assert!((z - (om * t).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn rk4_matches_eigen_on_random_hermitian() {
        let spec = spec16();
        let h = random_hermitian(16, 7);
        let psi = random_state(16, 8);
        let obs = Observables::new(&spec).unwrap();
        let g = TimeGrid::new(0.0, 20.0, 0.01, 100).unwrap();
        let rk = evolve_unitary(&psi, &h, &g, &obs, &no_leak(), None).unwrap();
        let ex = EigenPropagator::new(&h).unwrap().evolve(&psi, 20.0);
        let f = rk.final_state.fidelity(&ex).unwrap();
        assert!(f > 1.0 - 1e-8, "fidelity {f}");
        // the eigen oracle itself: e^{−iHt} e^{iHt} = 1
        let p = EigenPropagator::new(&h).unwrap();
        let u = p.unitary(3.0) * p.unitary(-3.0);
        assert!((u - DMatrix::identity(16, 16)).camax() < 1e-12);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let h = random_hermitian(16, 11);
        let psi = random_state(16, 12);
        let obs = Observables::new(&spec16()).unwrap();
        let exact = EigenPropagator::new(&h).unwrap().evolve(&psi, 5.0);
        let opts = EvolveOptions {
            max_drift: 1.0,
            ..no_leak()
        };
        let err = |dt: f64| {
            let g = TimeGrid::new(0.0, 5.0, dt, 1000).unwrap();
            let ev = evolve_unitary(&psi, &h, &g, &obs, &opts, None).unwrap();
            (ev.final_state.amplitudes() - exact.amplitudes()).norm()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn eigen_conserves_energy_and_starts_exactly() {
        let spec = spec16();
        let h = random_hermitian(16, 3);
        let psi = random_state(16, 4);
        let obs = Observables::new(&spec).unwrap();
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.7).collect();
        let mut energies = Vec::new();
        let hd = h.matrix().clone();
        let mut hook = |_t: f64, a: &[C64]| {
            let v = DVector::from_column_slice(a);
            energies.push(v.dotc(&(&hd * &v)).re);
        };
        let ev = evolve_eigen(&psi, &h, &times, &obs, &no_leak(), Some(&mut hook)).unwrap();
        assert!(energies.iter().all(|e| (e - energies[0]).abs() < 1e-10));
        let row0 = obs.measure(psi.amplitudes().as_slice());
        for (c, v) in ev.series.columns.iter().zip(row0) {
            assert_eq!(c[0], v);
        }
        let bad = Operator::from_matrix_unchecked(DMatrix::from_fn(16, 16, |i, j| C64::new((i + 2 * j) as f64, 0.0)));
        assert!(matches!(EigenPropagator::new(&bad), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn observables_match_reduced_state() {
        let spec = spec16();
        let psi = random_state(16, 21);
        let obs = Observables::new(&spec).unwrap();
        let row = obs.measure(psi.amplitudes().as_slice());
        let red = qubit_reduced(&psi, &spec).unwrap();
        for k in 0..3 {
            assert!((row[2 + k] - red.bloch[k]).abs() < 1e-14);
        }
        assert!((row[5] - red.purity).abs() < 1e-14);
        let dm = DensityMatrix::from_pure(&psi);
        let rd = obs.measure_density(dm.matrix());
        for (a, b) in row.iter().zip(&rd) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn leak_bound_is_enforced() {
        let spec = HilbertSpec::single(6).unwrap();
        let a = annihilator(6).unwrap();
        let h = embed(&(&a + &a.adjoint()), Slot::Mode(0), &spec).unwrap();
        let psi = StateVector::basis(12, 0).unwrap();
        let obs = Observables::new(&spec).unwrap();
        let g = TimeGrid::new(0.0, 3.0, 0.01, 10).unwrap();
        let r = evolve_unitary(&psi, &h, &g, &obs, &EvolveOptions::default(), None);
        assert!(matches!(r, Err(Error::Truncation(_))));
    }

    #[test]
    fn drift_bound_is_enforced() {
        let h = random_hermitian(16, 5).scale_real(200.0);
        let psi = random_state(16, 6);
        let obs = Observables::new(&spec16()).unwrap();
        let g = TimeGrid::new(0.0, 1.0, 0.01, 10).unwrap();
        let r = evolve_unitary(&psi, &h, &g, &obs, &no_leak(), None);
        assert!(matches!(r, Err(Error::Integration(_))));
    }

    #[test]
    fn deterministic() {
        let h = random_hermitian(16, 9);
        let psi = random_state(16, 10);
        let obs = Observables::new(&spec16()).unwrap();
        let g = TimeGrid::new(0.0, 3.0, 0.01, 7).unwrap();
        let a = evolve_unitary(&psi, &h, &g, &obs, &no_leak(), None).unwrap();
        let b = evolve_unitary(&psi, &h, &g, &obs, &no_leak(), None).unwrap();
        assert_eq!(a.series, b.series);
    }

    #[test]
    fn time_dependent_source_matches_piecewise_oracle() {
        // H(t) = cos(ωt) σx on a qubit: exact solution rotates about x by
        // 2 sin(ωt)/ω, so ⟨σz⟩ = cos(2 sin(ωt)/ω)
        let spec = HilbertSpec::single(2).unwrap();
        let sx = embed(&sigma_x(), Slot::Qubit, &spec).unwrap();
        let mut h = DrivenHamiltonian::from_static(Operator::zeros(4));
        let w = 3.0;
        h.push_hermitian(
            sx,
            vec![
                crate::hamiltonians::Phasor::real(0.5, w),
                crate::hamiltonians::Phasor::real(0.5, -w),
            ],
        );
        let psi = StateVector::basis(4, 0).unwrap();
        let obs = Observables::new(&spec).unwrap();
        let g = TimeGrid::new(0.0, 4.0, 0.001, 100).unwrap();
        let ev = evolve_unitary(&psi, &h, &g, &obs, &no_leak(), None).unwrap();
        for (t, z) in ev.series.times.iter().zip(ev.series.column("sz").unwrap()) {
            assert!((z - (2.0 * (w * t).sin() / w).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn displacement_moves_vacuum_to_coherent() {
        let spec = HilbertSpec::single(40).unwrap();
        let beta = C64::new(0.7, -0.4);
        let d = displacement(beta, 0, &spec).unwrap();
        let vac = StateVector::basis(80, 0).unwrap();
        let out = d.apply(&vac).unwrap();
        let coh = coherent_state(beta, 40, TruncationPolicy::Reject).unwrap().amplitudes;
        for n in 0..20 {
            assert!((out[n] - coh[n]).norm() < 1e-10);
        }
    }

    #[test]
    fn lindblad_reduces_to_unitary() {
        let spec = HilbertSpec::single(4).unwrap();
        let h = random_hermitian(8, 13);
        let psi = random_state(8, 14);
        let obs = Observables::new(&spec).unwrap();
        let g = TimeGrid::new(0.0, 2.0, 0.005, 20).unwrap();
        let u = evolve_unitary(&psi, &h, &g, &obs, &no_leak(), None).unwrap();
        let l = evolve_lindblad(&DensityMatrix::from_pure(&psi), &h, 0.0, 0, &g, &obs).unwrap();
        for (cu, cl) in u.series.columns.iter().zip(&l.series.columns) {
            for (a, b) in cu.iter().zip(cl) {
                assert!((a - b).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn lindblad_amplitude_damping() {
        let spec = HilbertSpec::single(3).unwrap();
        let kappa = 0.8;
        let one = StateVector::basis(6, 1).unwrap();
        let obs = Observables::new(&spec).unwrap();
        let g = TimeGrid::new(0.0, 3.0, 0.001, 100).unwrap();
        let h = Operator::zeros(6);
        let ev = evolve_lindblad(&DensityMatrix::from_pure(&one), &h, kappa, 0, &g, &obs).unwrap();
        assert!((ev.final_state.matrix()[(1, 1)].re - (-kappa * 3.0).exp()).abs() < 1e-6);
        assert!(ev.max_trace_drift < 1e-7);
        let nop = embed(&number(3).unwrap(), Slot::Mode(0), &spec).unwrap();
        assert!((ev.final_state.expectation(&nop).unwrap() - (-kappa * 3.0).exp()).abs() < 1e-6);
        // purity p² + (1 − p)² falls while the excited population p > 1/2
        let mut rho = DensityMatrix::from_pure(&one);
        let mut last = rho.purity();
        let gk = TimeGrid::new(0.0, 0.1, 0.001, 1000).unwrap();
        for k in 1..=8 {
            rho = evolve_lindblad(&rho, &h, kappa, 0, &gk, &obs).unwrap().final_state;
            let p = (-kappa * 0.1 * k as f64).exp();
            assert!((rho.purity() - (p * p + (1.0 - p) * (1.0 - p))).abs() < 1e-6);
            assert!(rho.purity() < last, "step {k}");
            last = rho.purity();
        }
        let z = embed(&sigma_z(), Slot::Qubit, &spec).unwrap();
        assert!((rho.expectation(&z).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn series_csv_layout() {
        let mut s = ObservableSeries::empty(vec!["a".into(), "b".into()]);
        s.push(0.0, &[1.0, 2.0]);
        s.push(0.5, &[0.1, -3.0]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t_us,a,b");
        assert_eq!(lines.len(), 3);
        assert!(!text.contains('\r'));
        let v: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.1);
        assert_eq!(ObservableSeries::read_csv(&text).unwrap(), s);
        assert_eq!(s.truncated(0.2).len(), 1);
        assert!(ObservableSeries::read_csv("t,a\n").is_err());
        assert!(ObservableSeries::read_csv("t_us,a\n1.0\n").is_err());
    }
}
