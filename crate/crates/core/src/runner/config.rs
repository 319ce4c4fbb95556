//! TOML run configuration. Frequencies are given as `f/2π` in MHz and are
//! converted to rad/μs exactly once, in [`RunConfig::resolve`].

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{MarginalGrid, Window};
use crate::drives::SidebandDrive;
use crate::fockspace::{coherent_state, HilbertSpec, StateVector, TruncationPolicy};
use crate::hamiltonians::{ModelSpec, Scenario, Tier};
use crate::{mhz_to_rad_per_us, Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub physics: PhysicsSection,
    pub hilbert: HilbertSection,
    pub grid: GridSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub name: String,
    pub scenario: String,
    pub tiers: Vec<String>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
}

/// Per-mode values may be given as one number (shared by every mode) or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerMode {
    One(f64),
    Many(Vec<f64>),
}

impl PerMode {
    fn expand(&self, n: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            PerMode::One(v) => Ok(vec![*v; n]),
            PerMode::Many(v) if v.len() == n => Ok(v.clone()),
            PerMode::Many(v) => Err(Error::config(
                format!("physics.{field}"),
                format!("expected 1 or {n} values, got {}", v.len()),
            )),
        }
    }
}

fn zero() -> PerMode {
    PerMode::One(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub chi_mhz: PerMode,
    pub alpha: PerMode,
    #[serde(default = "zero")]
    pub delta_alpha: PerMode,
    /// Sideband phases `δ_j` in radians; defaults to `(0, π/2)`.
    #[serde(default)]
    pub delta: Option<PerMode>,
    pub omega_sb_mhz: PerMode,
    #[serde(default = "zero")]
    pub gamma_mhz: PerMode,
    #[serde(default = "zero")]
    pub kappa_mhz: PerMode,
    #[serde(default)]
    pub delta_omega_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertSection {
    pub trunc: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t1_us: f64,
    /// Observable sampling interval shared by every tier.
    pub sample_us: f64,
    /// RK4 step for time-independent tiers when `ideal_method = "rk4"`.
    #[serde(default = "default_dt_ns")]
    pub dt_ns: f64,
    /// Full-tier RK4 step; defaults to one sideband period / 40.
    #[serde(default)]
    pub full_dt_ns: Option<f64>,
    /// Shorter evolution window for the full tier.
    #[serde(default)]
    pub full_t1_us: Option<f64>,
}

fn default_dt_ns() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default = "default_qubit")]
    pub qubit: String,
    /// One descriptor per mode: `vacuum` or `coherent(re, im)`.
    #[serde(default)]
    pub modes: Vec<String>,
}

fn default_qubit() -> String {
    "plus".into()
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            qubit: default_qubit(),
            modes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IdealMethod {
    #[default]
    Eigen,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default)]
    pub ideal_method: IdealMethod,
    /// Spectrum of one observable column (e.g. `sz`).
    #[serde(default)]
    pub spectrum: Option<SpectrumSection>,
    /// Emit X-quadrature marginal frames every `marginal_every_us`.
    #[serde(default)]
    pub marginal: bool,
    #[serde(default = "default_marginal_every")]
    pub marginal_every_us: f64,
    #[serde(default)]
    pub marginal_grid: Option<[f64; 3]>,
    #[serde(default)]
    pub transmission: bool,
    /// Re-run the full tier at dt/2 and require `|ΔX1(t1)| < 1e-4`.
    #[serde(default = "yes")]
    pub convergence_check: bool,
    #[serde(default = "default_leak")]
    pub leak_bound: f64,
}

fn default_marginal_every() -> f64 {
    0.5
}

fn yes() -> bool {
    true
}

fn default_leak() -> f64 {
    1e-6
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            ideal_method: IdealMethod::Eigen,
            spectrum: None,
            marginal: false,
            marginal_every_us: default_marginal_every(),
            marginal_grid: None,
            transmission: false,
            convergence_check: true,
            leak_bound: default_leak(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default = "default_column")]
    pub column: String,
    #[serde(default)]
    pub window: Window,
    #[serde(default = "default_fraction")]
    pub min_fraction: f64,
}

fn default_column() -> String {
    "sz".into()
}

fn default_fraction() -> f64 {
    0.05
}

/// Parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    DeltaOmegaMhz,
    DeltaAlpha,
    OmegaSbMhz,
}

impl SweepParameter {
    pub fn key(self) -> &'static str {
        match self {
            Self::DeltaOmegaMhz => "delta_omega_mhz",
            Self::DeltaAlpha => "delta_alpha",
            Self::OmegaSbMhz => "omega_sb_mhz",
        }
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta_omega_mhz" => Ok(Self::DeltaOmegaMhz),
            "delta_alpha" => Ok(Self::DeltaAlpha),
            "omega_sb_mhz" => Ok(Self::OmegaSbMhz),
            _ => Err(Error::config(
                "sweep.parameter",
                format!("`{s}` is not sweepable (use delta_omega_mhz, delta_alpha or omega_sb_mhz)"),
            )),
        }
    }
}

/// Qubit and per-mode initial state descriptors.
#[derive(Debug, Clone, PartialEq)]
pub enum QubitInit {
    Zero,
    One,
    Plus,
    Minus,
    Bloch { theta: f64, phi: f64 },
}

impl QubitInit {
    pub fn amplitudes(&self) -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Self::Zero => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            Self::One => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            Self::Plus => [C64::new(h, 0.0), C64::new(h, 0.0)],
            Self::Minus => [C64::new(h, 0.0), C64::new(-h, 0.0)],
            Self::Bloch { theta, phi } => [
                C64::new((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), *phi),
            ],
        }
    }
}

/// Parses `name(a, b)` into `(name, [a, b])`; a bare `name` gives no arguments.
fn parse_call(s: &str) -> Option<(String, Vec<f64>)> {
    let s = s.trim();
    match s.find('(') {
        None => Some((s.to_ascii_lowercase(), Vec::new())),
        Some(i) => {
            let inner = s[i + 1..].strip_suffix(')')?;
            let args: std::result::Result<Vec<f64>, _> =
                inner.split(',').map(|a| a.trim().parse::<f64>()).collect();
            Some((s[..i].trim().to_ascii_lowercase(), args.ok()?))
        }
    }
}

impl FromStr for QubitInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::config(
                "initial.qubit",
                format!("`{s}`: expected plus, minus, ground, excited or bloch(theta, phi)"),
            )
        };
        let (name, args) = parse_call(s).ok_or_else(bad)?;
        match (name.as_str(), args.as_slice()) {
            ("plus", []) => Ok(Self::Plus),
            ("minus", []) => Ok(Self::Minus),
            ("ground" | "zero", []) => Ok(Self::Zero),
            ("excited" | "one", []) => Ok(Self::One),
            ("bloch", [theta, phi]) => Ok(Self::Bloch {
                theta: *theta,
                phi: *phi,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeInit {
    Vacuum,
    Coherent(C64),
}

impl ModeInit {
    fn parse(s: &str, j: usize) -> Result<Self> {
        let bad = || {
            Error::config(
                format!("initial.modes[{j}]"),
                format!("`{s}`: expected vacuum or coherent(re, im)"),
            )
        };
        let (name, args) = parse_call(s).ok_or_else(bad)?;
        match (name.as_str(), args.as_slice()) {
            ("vacuum", []) => Ok(Self::Vacuum),
            ("coherent", [re]) => Ok(Self::Coherent(C64::new(*re, 0.0))),
            ("coherent", [re, im]) => Ok(Self::Coherent(C64::new(*re, *im))),
            _ => Err(bad()),
        }
    }

    pub fn beta(&self) -> C64 {
        match self {
            Self::Vacuum => C64::new(0.0, 0.0),
            Self::Coherent(b) => *b,
        }
    }
}

/// Validated configuration in internal units.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub name: String,
    pub tiers: Vec<Tier>,
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    pub model: ModelSpec,
    pub qubit: QubitInit,
    pub modes: Vec<ModeInit>,
    pub t1: f64,
    pub sample: f64,
    pub dt: f64,
    pub full_dt: Option<f64>,
    pub full_t1: Option<f64>,
    pub sweep: Option<(SweepParameter, Vec<f64>)>,
    pub analysis: AnalysisSection,
    pub marginal_grid: MarginalGrid,
}

impl Resolved {
    pub fn initial_state(&self) -> Result<StateVector> {
        let spec = &self.model.hilbert;
        let mut modes = Vec::new();
        for (j, m) in self.modes.iter().enumerate() {
            let n = spec.mode_dim(j)?;
            modes.push(coherent_state(m.beta(), n, TruncationPolicy::Reject)?.amplitudes);
        }
        StateVector::product(self.qubit.amplitudes(), &modes, spec)
    }

    /// Model for sweep point `value` (MHz or dimensionless, per parameter).
    pub fn model_at(&self, value: Option<f64>, tier: Tier) -> Result<ModelSpec> {
        let mut m = self.model.with_tier(tier);
        if let (Some((p, _)), Some(v)) = (&self.sweep, value) {
            match p {
                SweepParameter::DeltaOmegaMhz => m.delta_omega = mhz_to_rad_per_us(v),
                SweepParameter::DeltaAlpha => m.drives[0].delta_alpha = v,
                SweepParameter::OmegaSbMhz => {
                    m.drives.iter_mut().for_each(|d| d.omega_sb = mhz_to_rad_per_us(v))
                }
            }
        }
        m.validate()?;
        Ok(m)
    }

    /// Sweep values, or a single `None` point.
    pub fn points(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some((_, v)) => v.iter().map(|x| Some(*x)).collect(),
            None => vec![None],
        }
    }
}

fn positive(v: f64, field: &str) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config(field, "must be positive"));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| format!("bytes {}..{}", s.start, s.end))
                .unwrap_or_else(|| "config".into());
            Error::config(field, e.message().trim().to_string())
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.run.output_dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.run.output_dir = parent.join(&cfg.run.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let scenario: Scenario = self
            .run
            .scenario
            .parse()
            .map_err(|_| Error::config("run.scenario", format!("unknown scenario `{}`", self.run.scenario)))?;
        if self.run.tiers.is_empty() {
            return Err(Error::config("run.tiers", "at least one tier is required"));
        }
        let mut tiers = Vec::new();
        for (i, t) in self.run.tiers.iter().enumerate() {
            let tier: Tier = t
                .parse()
                .map_err(|_| Error::config(format!("run.tiers[{i}]"), format!("unknown tier `{t}`")))?;
            if tiers.contains(&tier) {
                return Err(Error::config(format!("run.tiers[{i}]"), format!("duplicate tier `{t}`")));
            }
            tiers.push(tier);
        }
        if self.run.workers == Some(0) {
            return Err(Error::config("run.workers", "must be >= 1"));
        }
        let n = scenario.n_modes();
        let p = &self.physics;
        let chi = p.chi_mhz.expand(n, "chi_mhz")?;
        let alpha = p.alpha.expand(n, "alpha")?;
        let delta_alpha = p.delta_alpha.expand(n, "delta_alpha")?;
        let delta = match &p.delta {
            Some(d) => d.expand(n, "delta")?,
            None => (0..n).map(|j| j as f64 * std::f64::consts::FRAC_PI_2).collect(),
        };
        let omega = p.omega_sb_mhz.expand(n, "omega_sb_mhz")?;
        let gamma = p.gamma_mhz.expand(n, "gamma_mhz")?;
        let kappa = p.kappa_mhz.expand(n, "kappa_mhz")?;
        let drives = (0..n)
            .map(|j| SidebandDrive {
                alpha: alpha[j],
                delta_alpha: delta_alpha[j],
                omega_sb: mhz_to_rad_per_us(omega[j]),
                delta: delta[j],
                gamma: mhz_to_rad_per_us(gamma[j]),
                kappa: mhz_to_rad_per_us(kappa[j]),
            })
            .collect();
        if self.hilbert.trunc.len() != n {
            return Err(Error::config(
                "hilbert.trunc",
                format!("scenario {} needs {n} truncation(s), got {}", scenario.name(), self.hilbert.trunc.len()),
            ));
        }
        let hilbert = HilbertSpec::new(&self.hilbert.trunc)
            .map_err(|e| Error::config("hilbert.trunc", e.to_string()))?;
        let model = ModelSpec {
            scenario,
            tier: tiers[0],
            chi: chi.into_iter().map(mhz_to_rad_per_us).collect(),
            drives,
            delta_omega: mhz_to_rad_per_us(p.delta_omega_mhz),
            hilbert,
        };
        model.validate().map_err(|e| match e {
            Error::InvalidParameter { field, reason } => Error::config(format!("physics.{field}"), reason),
            other => other,
        })?;

        let g = &self.grid;
        positive(g.t1_us, "grid.t1_us")?;
        positive(g.sample_us, "grid.sample_us")?;
        positive(g.dt_ns, "grid.dt_ns")?;
        let whole = |t: f64, field: &str| -> Result<()> {
            let k = t / g.sample_us;
            if (k - k.round()).abs() > 1e-9 * k.max(1.0) || k.round() < 1.0 {
                return Err(Error::config(field, "must be a positive multiple of grid.sample_us"));
            }
            Ok(())
        };
        whole(g.t1_us, "grid.t1_us")?;
        if let Some(ft) = g.full_t1_us {
            positive(ft, "grid.full_t1_us")?;
            whole(ft, "grid.full_t1_us")?;
            if ft > g.t1_us {
                return Err(Error::config("grid.full_t1_us", "must not exceed grid.t1_us"));
            }
        }
        if let Some(fd) = g.full_dt_ns {
            positive(fd, "grid.full_dt_ns")?;
        }

        let qubit: QubitInit = self.initial.qubit.parse()?;
        let modes = if self.initial.modes.is_empty() {
            vec![ModeInit::Vacuum; n]
        } else if self.initial.modes.len() == n {
            self.initial
                .modes
                .iter()
                .enumerate()
                .map(|(j, s)| ModeInit::parse(s, j))
                .collect::<Result<_>>()?
        } else {
            return Err(Error::config(
                "initial.modes",
                format!("expected {n} descriptor(s), got {}", self.initial.modes.len()),
            ));
        };

        let sweep = match &self.sweep {
            None => None,
            Some(s) => {
                let param: SweepParameter = s.parameter.parse()?;
                if s.values.is_empty() {
                    return Err(Error::config("sweep.values", "at least one value is required"));
                }
                Some((param, s.values.clone()))
            }
        };

        let a = &self.analysis;
        if a.transmission && scenario != Scenario::Electro1D {
            return Err(Error::config("analysis.transmission", "only defined for the electro1d scenario"));
        }
        if a.transmission && !a.marginal {
            return Err(Error::config("analysis.transmission", "needs analysis.marginal = true"));
        }
        positive(a.marginal_every_us, "analysis.marginal_every_us")?;
        positive(a.leak_bound, "analysis.leak_bound")?;
        let marginal_grid = match a.marginal_grid {
            Some([lo, hi, pts]) => MarginalGrid {
                lo,
                hi,
                points: pts as usize,
            },
            None => MarginalGrid::default(),
        };
        marginal_grid
            .validate()
            .map_err(|_| Error::config("analysis.marginal_grid", "expected [lo, hi, points] with hi > lo, points >= 3"))?;
        if let Some(s) = &a.spectrum {
            if !(0.0..1.0).contains(&s.min_fraction) {
                return Err(Error::config("analysis.spectrum.min_fraction", "must lie in [0, 1)"));
            }
        }

        let resolved = Resolved {
            name: self.run.name.clone(),
            tiers,
            output_dir: self.run.output_dir.clone(),
            workers: self.run.workers,
            model,
            qubit,
            modes,
            t1: g.t1_us,
            sample: g.sample_us,
            dt: g.dt_ns * 1e-3,
            full_dt: g.full_dt_ns.map(|d| d * 1e-3),
            full_t1: g.full_t1_us,
            sweep,
            analysis: a.clone(),
            marginal_grid,
        };
        // every sweep point must produce a valid model
        for v in resolved.points() {
            for &t in &resolved.tiers {
                resolved.model_at(v, t).map_err(|e| match e {
                    Error::InvalidParameter { field, reason } => Error::config(
                        "sweep.values",
                        format!("value {} gives invalid {field}: {reason}", v.unwrap_or(f64::NAN)),
                    ),
                    other => other,
                })?;
            }
        }
        resolved.initial_state().map_err(|e| Error::config("initial", e.to_string()))?;
        Ok(resolved)
    }
}
