//! Hamiltonian builders.
//!
//! Three fidelity tiers are supported:
//!
//! - **Ideal**: the time-independent Dirac Hamiltonian obtained after the
//!   rotating-wave approximation.
//! - **Full**: the same system in the sideband frame *before* the RWA, i.e.
//!   with every MHz-scale oscillating term kept (frequencies `Ω_SB`, `2Ω_SB`,
//!   `3Ω_SB` relative to the qubit frame). GHz lab frequencies are already
//!   removed.
//! - **IdealPlusMagnus**: ideal plus the second-order Magnus term
//!   `χ²(d†d)²σz / 4Ω_SB`, a photon-number-dependent mass shift.
//!
//! Time-dependent Hamiltonians are stored as a static part plus Hermitian
//! pairs `c(t)·O + c(t)*·O†`, where each `c(t)` is a short sum of phasors
//! `a·e^{iωt}`. This keeps evaluation reentrant and lets the propagator apply
//! `H(t)ψ` through precomputed sparse factors.

use std::f64::consts::TAU;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::drives::{classical_displacement, resonant_rabi_condition, DriveScheme, SidebandDrive};
use crate::fockspace::{
    annihilator, embed, embed_pair, momentum_local, number, pauli_delta_qubit, sigma_minus,
    sigma_plus, sigma_x, sigma_z, HilbertSpec, Operator, Slot,
};
use crate::sparse::Csr;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    Free1D,
    Free2D,
    Magnetic1D,
    Magnetic2D,
    Electro1D,
}

impl Scenario {
    pub fn n_modes(self) -> usize {
        match self {
            Self::Free2D | Self::Magnetic2D => 2,
            _ => 1,
        }
    }

    /// Drive scheme on `mode`. In the magnetic scenarios only the first mode
    /// carries the asymmetric pair.
    pub fn scheme(self, mode: usize) -> DriveScheme {
        match (self, mode) {
            (Self::Magnetic1D | Self::Magnetic2D, 0) => DriveScheme::Magnetic,
            (Self::Electro1D, _) => DriveScheme::Electrostatic,
            _ => DriveScheme::Free,
        }
    }

    pub fn is_magnetic(self) -> bool {
        matches!(self, Self::Magnetic1D | Self::Magnetic2D)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Free1D => "free1d",
            Self::Free2D => "free2d",
            Self::Magnetic1D => "magnetic1d",
            Self::Magnetic2D => "magnetic2d",
            Self::Electro1D => "electro1d",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "free1d" => Ok(Self::Free1D),
            "free2d" => Ok(Self::Free2D),
            "magnetic1d" => Ok(Self::Magnetic1D),
            "magnetic2d" => Ok(Self::Magnetic2D),
            "electro1d" | "electrostatic1d" => Ok(Self::Electro1D),
            _ => Err(Error::param("scenario", format!("unknown scenario `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tier {
    Ideal,
    Full,
    IdealPlusMagnus,
}

impl Tier {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ideal => "ideal",
            Self::Full => "full",
            Self::IdealPlusMagnus => "ideal_magnus",
        }
    }

    pub fn is_time_independent(self) -> bool {
        !matches!(self, Self::Full)
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', '+'], "").as_str() {
            "ideal" => Ok(Self::Ideal),
            "full" => Ok(Self::Full),
            "idealmagnus" | "idealplusmagnus" | "magnus" => Ok(Self::IdealPlusMagnus),
            _ => Err(Error::param("tier", format!("unknown tier `{s}`"))),
        }
    }
}

/// Scenario, tier and physical parameters of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub scenario: Scenario,
    pub tier: Tier,
    /// Dispersive couplings `χ_j` (rad/μs), one per mode.
    pub chi: Vec<f64>,
    pub drives: Vec<SidebandDrive>,
    /// `ΔΩ = Ω_R − Ω_SB` (rad/μs); the mass term is `(ΔΩ/2)σz`.
    pub delta_omega: f64,
    pub hilbert: HilbertSpec,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.scenario.n_modes();
        if self.hilbert.n_modes() != n {
            return Err(Error::param(
                "hilbert",
                format!(
                    "scenario {} needs {n} mode(s), Hilbert space has {}",
                    self.scenario.name(),
                    self.hilbert.n_modes()
                ),
            ));
        }
        if self.chi.len() != n {
            return Err(Error::param("chi", format!("expected {n} value(s), got {}", self.chi.len())));
        }
        if self.drives.len() != n {
            return Err(Error::param(
                "drives",
                format!("expected {n} drive(s), got {}", self.drives.len()),
            ));
        }
        if !self.delta_omega.is_finite() {
            return Err(Error::param("delta_omega", "must be finite"));
        }
        for (j, d) in self.drives.iter().enumerate() {
            d.validate().map_err(|e| match e {
                Error::InvalidParameter { field, reason } => {
                    Error::param(format!("drives[{j}].{field}"), reason)
                }
                other => other,
            })?;
            if !self.chi[j].is_finite() {
                return Err(Error::param(format!("chi[{j}]"), "must be finite"));
            }
            let scheme = self.scenario.scheme(j);
            if scheme != DriveScheme::Magnetic && d.delta_alpha != 0.0 {
                return Err(Error::param(
                    format!("drives[{j}].delta_alpha"),
                    format!("must be 0 for a {scheme:?} drive"),
                ));
            }
            if scheme != DriveScheme::Electrostatic && d.gamma != 0.0 {
                return Err(Error::param(
                    format!("drives[{j}].gamma"),
                    format!("must be 0 for a {scheme:?} drive"),
                ));
            }
        }
        if self.tier == Tier::Full && n == 2 && self.drives[0].omega_sb != self.drives[1].omega_sb {
            return Err(Error::param(
                "drives.omega_sb",
                "the full tier with two modes needs a shared sideband frequency",
            ));
        }
        Ok(())
    }

    pub fn with_tier(&self, tier: Tier) -> Self {
        Self {
            tier,
            ..self.clone()
        }
    }

    /// Largest sideband frequency over all modes.
    pub fn omega_sb_max(&self) -> f64 {
        self.drives.iter().map(|d| d.omega_sb).fold(0.0, f64::max)
    }

    /// Qubit detuning `ω_q − ω_d` that cancels all static `σz` shifts.
    pub fn resonant_rabi_detuning(&self) -> f64 {
        self.drives
            .iter()
            .enumerate()
            .map(|(j, d)| resonant_rabi_condition(self.scenario.scheme(j), self.chi[j], d))
            .sum()
    }

    /// `Ω_R = Ω_SB + ΔΩ`, taking the first mode's sideband frequency.
    pub fn omega_r(&self) -> f64 {
        self.drives[0].omega_sb + self.delta_omega
    }
}

/// Dirac-side constants implied by the cQED parameters (rad/μs unless noted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappedConstants {
    /// Effective speed of light.
    pub c_eff: f64,
    /// Rest energy `mc²`.
    pub mc2: f64,
    /// Magnetic coupling `eB` (dimensionless); 0 without asymmetric drive.
    pub eb: f64,
    /// Potential slope `g`.
    pub g: f64,
}

impl MappedConstants {
    /// Kinetic energy `√((cP)² + (mc²)²) − mc²` of a packet with momentum `p`.
    pub fn kinetic_energy(&self, p: f64) -> f64 {
        ((self.c_eff * p).powi(2) + self.mc2 * self.mc2).sqrt() - self.mc2.abs()
    }
}

/// Maps cQED parameters onto `c`, `mc²`, `eB` and `g`.
pub fn dirac_mapping(m: &ModelSpec) -> Result<MappedConstants> {
    m.validate()?;
    let d = &m.drives[0];
    let chi = m.chi[0];
    let mut eb = 0.0;
    let c_eff = if m.scenario.is_magnetic() {
        let denom = 2.0 * d.alpha + d.delta_alpha;
        if denom == 0.0 {
            return Err(Error::SingularMapping(
                "2*alpha + delta_alpha = 0 leaves eB undefined".into(),
            ));
        }
        eb = 2.0 * d.delta_alpha / denom;
        chi * (d.alpha / 4.0 + d.delta_alpha / 8.0)
    } else {
        chi * d.alpha / 4.0
    };
    Ok(MappedConstants {
        c_eff,
        mc2: m.delta_omega / 2.0,
        eb,
        g: -2.0 * d.gamma,
    })
}

/// Time-independent ideal (post-RWA) Dirac Hamiltonian; includes the Magnus
/// correction for [`Tier::IdealPlusMagnus`].
pub fn ideal_hamiltonian(m: &ModelSpec) -> Result<Operator> {
    m.validate()?;
    if m.tier == Tier::Full {
        return Err(Error::param("tier", "ideal_hamiltonian needs the Ideal or IdealPlusMagnus tier"));
    }
    let spec = &m.hilbert;
    let mut h = embed(&sigma_z(), Slot::Qubit, spec)?.scale_real(m.delta_omega / 2.0);
    for (j, d) in m.drives.iter().enumerate() {
        let nj = spec.mode_dim(j)?;
        let chi = m.chi[j];
        let a = annihilator(nj)?;
        let sd = pauli_delta_qubit(d.delta);
        h += &embed_pair(&sd, &momentum_local(nj)?, j, spec)?.scale_real(chi * d.alpha / 4.0);
        if d.delta_alpha != 0.0 {
            let ph = C64::from_polar(1.0, d.delta);
            let up = embed_pair(&sigma_minus(), &a.adjoint(), j, spec)?.scale(ph);
            let down = embed_pair(&sigma_plus(), &a, j, spec)?.scale(ph.conj());
            h += &(&up + &down).scale_real(chi * d.delta_alpha / 4.0);
        }
        if d.gamma != 0.0 {
            let drive = (&a.adjoint() - &a).scale(C64::new(0.0, d.gamma));
            h += &embed(&drive, Slot::Mode(j), spec)?;
        }
    }
    if m.tier == Tier::IdealPlusMagnus {
        h += &magnus_correction(m)?;
    }
    Ok(h)
}

/// Second-order Magnus term `Σ_j χ_j²(d_j†d_j)²σz / 4Ω_SB,j`.
pub fn magnus_correction(m: &ModelSpec) -> Result<Operator> {
    m.validate()?;
    let spec = &m.hilbert;
    let mut h = Operator::zeros(spec.total_dim());
    for (j, d) in m.drives.iter().enumerate() {
        let n = number(spec.mode_dim(j)?)?;
        let n2 = n.matmul(&n)?;
        let coeff = m.chi[j] * m.chi[j] / (4.0 * d.omega_sb);
        h += &embed_pair(&sigma_z(), &n2, j, spec)?.scale_real(coeff);
    }
    Ok(h)
}

/// One term `a·e^{iωt}` of a coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phasor {
    pub amp: C64,
    pub freq: f64,
}

impl Phasor {
    pub fn new(amp: C64, freq: f64) -> Self {
        Self { amp, freq }
    }

    pub fn real(amp: f64, freq: f64) -> Self {
        Self::new(C64::new(amp, 0.0), freq)
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.amp * C64::from_polar(1.0, self.freq * t)
    }
}

fn eval_phasors(ps: &[Phasor], t: f64) -> C64 {
    ps.iter().map(|p| p.eval(t)).sum()
}

#[derive(Debug, Clone)]
struct PairTerm {
    op: Operator,
    csr: Csr,
    coeff: Vec<Phasor>,
}

/// Source of `H(t)` for the propagators.
pub trait HamiltonianSource: Send + Sync {
    fn dim(&self) -> usize;

    /// `out = H(t)·psi`.
    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]);

    /// Dense `H(t)`.
    fn operator_at(&self, t: f64) -> Operator;

    /// Fastest angular frequency present in `H(t)`; 0 for static sources.
    fn max_frequency(&self) -> f64 {
        0.0
    }
}

impl HamiltonianSource for Operator {
    fn dim(&self) -> usize {
        Operator::dim(self)
    }

    fn apply(&self, _t: f64, psi: &[C64], out: &mut [C64]) {
        let m = self.matrix();
        let n = Operator::dim(self);
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = C64::new(0.0, 0.0);
            for (j, p) in psi.iter().enumerate() {
                acc += m[(i, j)] * p;
            }
            *o = acc;
        }
    }

    fn operator_at(&self, _t: f64) -> Operator {
        self.clone()
    }
}

/// `H(t) = H₀ + Σ_k [c_k(t)·O_k + h.c.]`.
#[derive(Debug, Clone)]
pub struct DrivenHamiltonian {
    dim: usize,
    static_part: Operator,
    static_csr: Csr,
    terms: Vec<PairTerm>,
}

impl DrivenHamiltonian {
    pub fn from_static(h0: Operator) -> Self {
        let static_csr = Csr::from_operator(&h0);
        Self {
            dim: h0.dim(),
            static_part: h0,
            static_csr,
            terms: Vec::new(),
        }
    }

    pub fn static_part(&self) -> &Operator {
        &self.static_part
    }

    /// Adds `c(t)·op + h.c.`.
    pub fn push_pair(&mut self, op: Operator, coeff: Vec<Phasor>) {
        assert_eq!(op.dim(), self.dim, "term dimension mismatch");
        if coeff.iter().all(|p| p.amp == C64::new(0.0, 0.0)) {
            return;
        }
        let csr = Csr::from_operator(&op);
        self.terms.push(PairTerm { op, csr, coeff });
    }

    /// Adds `f(t)·op` for Hermitian `op` and real `f(t) = Σ phasors` (the
    /// phasors must come in conjugate pairs for `f` to be real).
    pub fn push_hermitian(&mut self, op: Operator, coeff: Vec<Phasor>) {
        let half = coeff
            .into_iter()
            .map(|p| Phasor::new(p.amp * 0.5, p.freq))
            .collect();
        self.push_pair(op, half);
    }

    /// The zero-frequency part: what survives averaging over a common period.
    pub fn secular_part(&self) -> Operator {
        let mut h = self.static_part.clone();
        for term in &self.terms {
            let c0: C64 = term.coeff.iter().filter(|p| p.freq == 0.0).map(|p| p.amp).sum();
            if c0 != C64::new(0.0, 0.0) {
                h += &term.op.scale(c0);
                h += &term.op.adjoint().scale(c0.conj());
            }
        }
        h
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }
}

impl HamiltonianSource for DrivenHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        self.static_csr.mul_add(C64::new(1.0, 0.0), psi, out);
        for term in &self.terms {
            let c = eval_phasors(&term.coeff, t);
            term.csr.mul_add(c, psi, out);
            term.csr.adjoint_mul_add(c.conj(), psi, out);
        }
    }

    fn operator_at(&self, t: f64) -> Operator {
        let mut h = self.static_part.clone();
        for term in &self.terms {
            let c = eval_phasors(&term.coeff, t);
            h += &term.op.scale(c);
            h += &term.op.adjoint().scale(c.conj());
        }
        h
    }

    fn max_frequency(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|t| t.coeff.iter().map(|p| p.freq.abs()))
            .fold(0.0, f64::max)
    }
}

/// Pre-RWA Hamiltonian in the sideband frame (the "full" tier) as a
/// time-dependent source.
pub fn full_hamiltonian_source(m: &ModelSpec) -> Result<DrivenHamiltonian> {
    m.validate()?;
    if m.tier != Tier::Full {
        return Err(Error::param("tier", "full_hamiltonian needs the Full tier"));
    }
    let spec = &m.hilbert;
    let mut h0 = embed(&sigma_z(), Slot::Qubit, spec)?.scale_real(m.delta_omega / 2.0);
    for (j, d) in m.drives.iter().enumerate() {
        if d.gamma != 0.0 {
            let a = annihilator(spec.mode_dim(j)?)?;
            let drive = (&a.adjoint() - &a).scale(C64::new(0.0, d.gamma));
            h0 += &embed(&drive, Slot::Mode(j), spec)?;
        }
    }
    let mut h = DrivenHamiltonian::from_static(h0);
    let sm = sigma_minus();
    for (j, d) in m.drives.iter().enumerate() {
        let nj = spec.mode_dim(j)?;
        let chi = m.chi[j];
        let om = d.omega_sb;
        let (al, da, dl) = (d.alpha, d.delta_alpha, d.delta);
        let e = |phase: f64| C64::from_polar(1.0, phase);
        let a = annihilator(nj)?;
        // (χ/2)[α cosθ P + K cos2θ + (Δα/2)(d†e^{iθ} + d e^{−iθ}) + n] · σ e^{−iΩt}
        h.push_pair(
            embed_pair(&sm, &momentum_local(nj)?, j, spec)?,
            vec![
                Phasor::new(e(dl) * (chi * al / 4.0), 0.0),
                Phasor::new(e(-dl) * (chi * al / 4.0), -2.0 * om),
            ],
        );
        let k = chi / 4.0 * (al * al / 2.0 + al * da / 2.0);
        h.push_pair(
            embed(&sm, Slot::Qubit, spec)?,
            vec![
                Phasor::new(e(2.0 * dl) * k, om),
                Phasor::new(e(-2.0 * dl) * k, -3.0 * om),
            ],
        );
        if da != 0.0 {
            h.push_pair(
                embed_pair(&sm, &a.adjoint(), j, spec)?,
                vec![Phasor::new(e(dl) * (chi * da / 4.0), 0.0)],
            );
            h.push_pair(
                embed_pair(&sm, &a, j, spec)?,
                vec![Phasor::new(e(-dl) * (chi * da / 4.0), -2.0 * om)],
            );
        }
        h.push_pair(
            embed_pair(&sm, &number(nj)?, j, spec)?,
            vec![Phasor::real(chi / 2.0, -om)],
        );
    }
    Ok(h)
}

/// Dense full-tier Hamiltonian at time `t`.
pub fn full_hamiltonian(t: f64, m: &ModelSpec) -> Result<Operator> {
    Ok(full_hamiltonian_source(m)?.operator_at(t))
}

/// Phasor expansion of a cavity drive envelope `ε(t)` for `scheme`.
pub fn drive_phasors(scheme: DriveScheme, d: &SidebandDrive) -> Vec<Phasor> {
    let om = d.omega_sb;
    let (amp, lag) = if d.kappa > 0.0 {
        (
            (om * om + d.kappa * d.kappa / 4.0).sqrt(),
            (d.kappa / (2.0 * om)).atan(),
        )
    } else {
        (om, 0.0)
    };
    // −iαA sin(θ − lag) = −(αA/2)(e^{i(θ−lag)} − e^{−i(θ−lag)})
    let ph = d.delta - lag;
    let mut out = vec![
        Phasor::new(C64::from_polar(-d.alpha * amp / 2.0, ph), om),
        Phasor::new(C64::from_polar(d.alpha * amp / 2.0, -ph), -om),
    ];
    match scheme {
        DriveScheme::Magnetic => out.push(Phasor::new(
            C64::from_polar(-d.delta_alpha * om / 2.0, d.delta),
            om,
        )),
        DriveScheme::Electrostatic => out.push(Phasor::new(C64::new(0.0, d.gamma), 0.0)),
        DriveScheme::Free => {}
    }
    out
}

fn single_mode(m: &ModelSpec, what: &str) -> Result<()> {
    m.validate()?;
    if m.hilbert.n_modes() != 1 {
        return Err(Error::param("hilbert", format!("{what} is defined for one mode")));
    }
    Ok(())
}

/// Qubit part `½[(ω_q − ω_d)σz + Ω_R σx]` with the resonant detuning.
fn qubit_frame_part(m: &ModelSpec) -> Result<Operator> {
    let spec = &m.hilbert;
    let z = embed(&sigma_z(), Slot::Qubit, spec)?.scale_real(m.resonant_rabi_detuning() / 2.0);
    let x = embed(&sigma_x(), Slot::Qubit, spec)?.scale_real(m.omega_r() / 2.0);
    Ok(&z + &x)
}

/// Driven-qubit frame Hamiltonian before the displacement:
/// `(χ/2)a†aσz + ½[(ω_q−ω_d)σz + Ω_Rσx] + ε(t)a† + ε*(t)a`.
pub fn lab_frame_h2_source(m: &ModelSpec) -> Result<DrivenHamiltonian> {
    single_mode(m, "lab_frame_h2")?;
    let spec = &m.hilbert;
    let n = spec.mode_dim(0)?;
    let d = &m.drives[0];
    let disp = embed_pair(&sigma_z(), &number(n)?, 0, spec)?.scale_real(m.chi[0] / 2.0);
    let mut h = DrivenHamiltonian::from_static(&disp + &qubit_frame_part(m)?);
    h.push_pair(
        embed(&annihilator(n)?.adjoint(), Slot::Mode(0), spec)?,
        drive_phasors(m.scenario.scheme(0), d),
    );
    Ok(h)
}

pub fn lab_frame_h2(t: f64, m: &ModelSpec) -> Result<Operator> {
    Ok(lab_frame_h2_source(m)?.operator_at(t))
}

/// Displaced-frame Hamiltonian
/// `(χ/2)(d† + α*(t))(d + α(t))σz + ½[(ω_q−ω_d)σz + Ω_Rσx]` (+ the resonant
/// tone for the electrostatic scheme), with `α(t)` the classical displacement.
pub fn displaced_frame_h3_source(m: &ModelSpec) -> Result<DrivenHamiltonian> {
    single_mode(m, "displaced_frame_h3")?;
    let spec = &m.hilbert;
    let n = spec.mode_dim(0)?;
    let d = &m.drives[0];
    let chi = m.chi[0];
    let a = annihilator(n)?;
    let mut h0 = &embed_pair(&sigma_z(), &number(n)?, 0, spec)?.scale_real(chi / 2.0) + &qubit_frame_part(m)?;
    if d.gamma != 0.0 {
        h0 += &embed(&(&a.adjoint() - &a).scale(C64::new(0.0, d.gamma)), Slot::Mode(0), spec)?;
    }
    let mut h = DrivenHamiltonian::from_static(h0);
    // α(t) = (α/2)(e^{iθ} + e^{−iθ}) + (Δα/2)e^{iθ}
    let (al, b) = (d.alpha, d.delta_alpha / 2.0);
    let alpha_t = [
        Phasor::new(C64::from_polar(al / 2.0 + b, d.delta), d.omega_sb),
        Phasor::new(C64::from_polar(al / 2.0, -d.delta), -d.omega_sb),
    ];
    h.push_pair(
        embed_pair(&sigma_z(), &a.adjoint(), 0, spec)?,
        alpha_t.iter().map(|p| Phasor::new(p.amp * (chi / 2.0), p.freq)).collect(),
    );
    // |α(t)|² = (α²+2αb)/2 (1 + cos2θ) + b²
    let s = al * al + 2.0 * al * b;
    h.push_hermitian(
        embed(&sigma_z(), Slot::Qubit, spec)?,
        vec![
            Phasor::real(chi / 2.0 * (s / 2.0 + b * b), 0.0),
            Phasor::new(C64::from_polar(chi / 2.0 * s / 4.0, 2.0 * d.delta), 2.0 * d.omega_sb),
            Phasor::new(C64::from_polar(chi / 2.0 * s / 4.0, -2.0 * d.delta), -2.0 * d.omega_sb),
        ],
    );
    Ok(h)
}

/// Classical displacement of mode 0 used by the frame equivalence check.
pub fn mode0_displacement(t: f64, m: &ModelSpec) -> C64 {
    classical_displacement(t, &m.drives[0])
}

/// Convenience constructor for the scenarios used throughout the crate.
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    spec: ModelSpec,
}

impl ModelBuilder {
    /// Defaults: `χ/2π = 0.1 MHz`, `α = 1`, `Ω_SB/2π = 40 MHz`, `ΔΩ = 0`,
    /// `δ = (0, π/2)`, truncation 30 per mode.
    pub fn new(scenario: Scenario) -> Self {
        let n = scenario.n_modes();
        let chi = crate::mhz_to_rad_per_us(0.1);
        let mut drives = vec![SidebandDrive::default(); n];
        if n == 2 {
            drives[1].delta = std::f64::consts::FRAC_PI_2;
        }
        let trunc = vec![30; n];
        Self {
            spec: ModelSpec {
                scenario,
                tier: Tier::Ideal,
                chi: vec![chi; n],
                drives,
                delta_omega: 0.0,
                hilbert: HilbertSpec::new(&trunc).expect("valid default truncation"),
            },
        }
    }

    pub fn tier(mut self, tier: Tier) -> Self {
        self.spec.tier = tier;
        self
    }

    pub fn chi_mhz(mut self, chi: f64) -> Self {
        let w = crate::mhz_to_rad_per_us(chi);
        self.spec.chi.iter_mut().for_each(|c| *c = w);
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.spec.drives.iter_mut().for_each(|d| d.alpha = alpha);
        self
    }

    /// Asymmetry on the first mode.
    pub fn delta_alpha(mut self, da: f64) -> Self {
        self.spec.drives[0].delta_alpha = da;
        self
    }

    /// Resonant tone on the first mode given as the potential slope `g/2π` (MHz).
    pub fn slope_mhz(mut self, g: f64) -> Self {
        self.spec.drives[0].gamma = -crate::mhz_to_rad_per_us(g) / 2.0;
        self
    }

    pub fn omega_sb_mhz(mut self, f: f64) -> Self {
        let w = crate::mhz_to_rad_per_us(f);
        self.spec.drives.iter_mut().for_each(|d| d.omega_sb = w);
        self
    }

    pub fn delta_omega_mhz(mut self, f: f64) -> Self {
        self.spec.delta_omega = crate::mhz_to_rad_per_us(f);
        self
    }

    pub fn trunc(mut self, n: usize) -> Self {
        let t = vec![n; self.spec.scenario.n_modes()];
        self.spec.hilbert = HilbertSpec::new(&t).expect("truncation >= 2");
        self
    }

    pub fn build(self) -> Result<ModelSpec> {
        self.spec.validate()?;
        Ok(self.spec)
    }
}

/// One sideband period `2π/Ω_SB` of the first mode.
pub fn sideband_period(m: &ModelSpec) -> f64 {
    TAU / m.drives[0].omega_sb
}
