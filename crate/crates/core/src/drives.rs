//! Cavity and qubit drive waveforms, expressed in the frame rotating at the
//! cavity resonance, and the classical cavity displacement they induce.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Sideband pair (plus optional resonant tone) applied to one cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandDrive {
    /// Sideband amplitude `α` (dimensionless).
    pub alpha: f64,
    /// Amplitude asymmetry `Δα` between the two sidebands.
    pub delta_alpha: f64,
    /// Sideband detuning `Ω_SB` (rad/μs).
    pub omega_sb: f64,
    /// Relative sideband phase `δ` (rad).
    pub delta: f64,
    /// Resonant cavity drive amplitude `γ` (rad/μs).
    pub gamma: f64,
    /// Cavity damping `κ` (rad/μs).
    pub kappa: f64,
}

impl Default for SidebandDrive {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            delta_alpha: 0.0,
            omega_sb: crate::mhz_to_rad_per_us(40.0),
            delta: 0.0,
            gamma: 0.0,
            kappa: 0.0,
        }
    }
}

impl SidebandDrive {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_sb > 0.0) || !self.omega_sb.is_finite() {
            return Err(Error::param("omega_sb", "must be positive and finite"));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::param("kappa", "must be non-negative"));
        }
        if self.kappa > 0.0 && self.kappa >= self.omega_sb / 100.0 {
            return Err(Error::param(
                "kappa",
                format!(
                    "kappa = {} must satisfy kappa < omega_sb/100 = {}",
                    self.kappa,
                    self.omega_sb / 100.0
                ),
            ));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("delta_alpha", self.delta_alpha),
            ("delta", self.delta),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Sideband phase `Ω_SB t + δ`.
    pub fn phase(&self, t: f64) -> f64 {
        self.omega_sb * t + self.delta
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega_sb
    }
}

/// Resonant Rabi drive on the qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiDrive {
    /// Rabi amplitude `Ω_R` (rad/μs).
    pub omega_r: f64,
    /// Drive phase `Δ` (rad).
    pub phase: f64,
    /// Drive frequency offset relative to the bare qubit (rad/μs).
    pub omega_d: f64,
}

impl RabiDrive {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r >= 0.0) {
            return Err(Error::param("omega_r", "must be non-negative"));
        }
        Ok(())
    }
}

/// Qubit drive envelope `Ω_R e^{i(ω_d t + Δ)}`.
pub fn rabi_eps(t: f64, d: &RabiDrive) -> Result<C64> {
    d.validate()?;
    Ok(C64::from_polar(d.omega_r, d.omega_d * t + d.phase))
}

/// Symmetric sideband pair `−iαΩ_SB sin(Ω_SB t + δ)`.
///
/// With `κ > 0` the damping-compensated form is used: amplitude
/// `α√(Ω_SB² + κ²/4)` and phase lag `arctan(κ/2Ω_SB)`, which keeps the
/// steady-state displacement equal to `α cos(Ω_SB t + δ)`.
pub fn symmetric_eps(t: f64, d: &SidebandDrive) -> Result<C64> {
    d.validate()?;
    if d.delta_alpha != 0.0 {
        return Err(Error::DriveMisuse(format!(
            "symmetric drive requested with delta_alpha = {}",
            d.delta_alpha
        )));
    }
    if d.gamma != 0.0 {
        return Err(Error::DriveMisuse(format!(
            "symmetric drive requested with gamma = {}",
            d.gamma
        )));
    }
    Ok(symmetric_part(t, d))
}

fn symmetric_part(t: f64, d: &SidebandDrive) -> C64 {
    let (amp, lag) = if d.kappa > 0.0 {
        (
            (d.omega_sb * d.omega_sb + d.kappa * d.kappa / 4.0).sqrt(),
            (d.kappa / (2.0 * d.omega_sb)).atan(),
        )
    } else {
        (d.omega_sb, 0.0)
    };
    C64::new(0.0, -d.alpha * amp * (d.phase(t) - lag).sin())
}

/// Asymmetric pair `Ω_SB(−(Δα/2)e^{i(Ω_SB t+δ)} − iα sin(Ω_SB t+δ))`.
pub fn asymmetric_eps(t: f64, d: &SidebandDrive) -> Result<C64> {
    d.validate()?;
    if d.gamma != 0.0 {
        return Err(Error::DriveMisuse(format!(
            "asymmetric drive requested with gamma = {}",
            d.gamma
        )));
    }
    let single = C64::from_polar(-0.5 * d.delta_alpha * d.omega_sb, d.phase(t));
    Ok(single + symmetric_part(t, d))
}

/// Symmetric pair plus a resonant tone: `symmetric + iγ`.
pub fn electro_eps(t: f64, d: &SidebandDrive) -> Result<C64> {
    d.validate()?;
    if d.delta_alpha != 0.0 {
        return Err(Error::DriveMisuse(format!(
            "electrostatic drive requested with delta_alpha = {}",
            d.delta_alpha
        )));
    }
    Ok(symmetric_part(t, d) + C64::new(0.0, d.gamma))
}

/// Steady-state classical cavity amplitude `α cos(Ω_SB t+δ) + (Δα/2)e^{i(Ω_SB t+δ)}`.
///
/// This solves `α̇ = −iε − (κ/2)α` for the sideband part of the drive; the
/// resonant `γ` tone is not displaced away and stays in the Hamiltonian.
pub fn classical_displacement(t: f64, d: &SidebandDrive) -> C64 {
    let th = d.phase(t);
    C64::new(d.alpha * th.cos(), 0.0) + C64::from_polar(0.5 * d.delta_alpha, th)
}

/// Time derivative of [`classical_displacement`].
pub fn classical_displacement_rate(t: f64, d: &SidebandDrive) -> C64 {
    let th = d.phase(t);
    C64::new(-d.alpha * d.omega_sb * th.sin(), 0.0)
        + C64::new(0.0, d.omega_sb) * C64::from_polar(0.5 * d.delta_alpha, th)
}

/// Which sideband configuration drives a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveScheme {
    /// Symmetric pair.
    Free,
    /// Asymmetric pair.
    Magnetic,
    /// Symmetric pair plus resonant tone.
    Electrostatic,
}

impl FromStr for DriveScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "free" => Ok(Self::Free),
            "magnetic" => Ok(Self::Magnetic),
            "electro" | "electrostatic" => Ok(Self::Electrostatic),
            other => Err(Error::param("scenario", format!("unknown scenario `{other}`"))),
        }
    }
}

impl DriveScheme {
    /// Waveform for this scheme.
    pub fn eps(self, t: f64, d: &SidebandDrive) -> Result<C64> {
        match self {
            Self::Free => symmetric_eps(t, d),
            Self::Magnetic => asymmetric_eps(t, d),
            Self::Electrostatic => electro_eps(t, d),
        }
    }
}

/// The qubit detuning `ω_q − ω_d` that cancels the static `σz` shift a mode
/// acquires in the displaced frame.
pub fn resonant_rabi_condition(scheme: DriveScheme, chi: f64, d: &SidebandDrive) -> f64 {
    let a = d.alpha;
    match scheme {
        DriveScheme::Free | DriveScheme::Electrostatic => -chi * a * a / 2.0,
        DriveScheme::Magnetic => {
            let da = d.delta_alpha;
            -chi * (a * a / 2.0 + a * da / 2.0 + da * da / 4.0)
        }
    }
}
