//! Post-processing: spectra of qubit signals, quadrature marginals,
//! transmission through a linear potential and tier deviation metrics.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::fockspace::HilbertSpec;
use crate::hamiltonians::MappedConstants;
use crate::propagator::ObservableSeries;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    None,
    #[default]
    Hann,
}

/// One-sided magnitude spectrum, `amps[k] = |Δt · DFT(x)_k|` at `k/(NΔt)` MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub amps: Vec<f64>,
    /// Number of time samples behind the spectrum.
    pub n_samples: usize,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }

    /// `Σ|X|²Δf` over both sidebands, for comparison with `Σ|x|²Δt`.
    pub fn energy(&self) -> f64 {
        let df = self.resolution();
        let last = self.amps.len() - 1;
        let nyquist_alone = self.n_samples.is_multiple_of(2);
        let mut e = 0.0;
        for (k, a) in self.amps.iter().enumerate() {
            let w = if k == 0 || (k == last && nyquist_alone) { 1.0 } else { 2.0 };
            e += w * a * a;
        }
        e * df
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "freq_mhz,amplitude")?;
        for (f, a) in self.freqs.iter().zip(&self.amps) {
            writeln!(w, "{f:.16e},{a:.16e}")?;
        }
        Ok(())
    }
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Analysis("need at least two samples".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if dt <= 0.0 {
        return Err(Error::Analysis("timestamps must increase".into()));
    }
    for (k, t) in times.iter().enumerate() {
        if (t - (times[0] + k as f64 * dt)).abs() > 1e-6 * dt {
            return Err(Error::Analysis(format!("non-uniform sampling at index {k} (t = {t})")));
        }
    }
    Ok(dt)
}

/// Magnitude spectrum of a uniformly sampled real signal (times in μs).
pub fn fft_spectrum(times: &[f64], values: &[f64], window: Window) -> Result<Spectrum> {
    if times.len() != values.len() {
        return Err(Error::Analysis(format!(
            "{} timestamps for {} values",
            times.len(),
            values.len()
        )));
    }
    let dt = uniform_step(times)?;
    let n = values.len();
    let mut buf: Vec<C64> = values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let w = match window {
                Window::None => 1.0,
                Window::Hann => 0.5 - 0.5 * (TAU * k as f64 / (n - 1) as f64).cos(),
            };
            C64::new(v * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let df = 1.0 / (n as f64 * dt);
    Ok(Spectrum {
        freqs: (0..=half).map(|k| k as f64 * df).collect(),
        amps: buf[..=half].iter().map(|z| z.norm() * dt).collect(),
        n_samples: n,
    })
}

/// Spectrum of one column of a series.
pub fn series_spectrum(series: &ObservableSeries, column: &str, window: Window) -> Result<Spectrum> {
    let v = series
        .column(column)
        .ok_or_else(|| Error::Analysis(format!("no column `{column}`")))?;
    fft_spectrum(&series.times, v, window)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub freq: f64,
    pub amp: f64,
}

/// Strict local maxima above `min_fraction` of the largest non-DC amplitude,
/// with three-point parabolic refinement of the frequency. DC is never a peak,
/// and nothing is reported when all non-DC content is at round-off level.
pub fn find_peaks(s: &Spectrum, min_fraction: f64) -> Vec<Peak> {
    let a = &s.amps;
    if a.len() < 3 {
        return Vec::new();
    }
    let top = a[1..].iter().copied().fold(0.0, f64::max);
    let df = s.resolution();
    // round-off floor: relative to the DC bin, and absolute at 1e-12 in signal
    // units (amplitudes carry a factor of the window length 1/df)
    if top <= 1e-9 * a[0] || top <= 1e-12 / df || top == 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for k in 1..a.len() - 1 {
        if a[k] > a[k - 1] && a[k] > a[k + 1] && a[k] >= min_fraction * top {
            let den = a[k - 1] - 2.0 * a[k] + a[k + 1];
            let shift = if den != 0.0 { 0.5 * (a[k - 1] - a[k + 1]) / den } else { 0.0 };
            out.push(Peak {
                freq: s.freqs[k] + shift * df,
                amp: a[k] - 0.25 * (a[k - 1] - a[k + 1]) * shift,
            });
        }
    }
    out
}

/// Predicted Landau transition frequencies (MHz) `f_n = 2√((χα/4)²n + (ΔΩ/2)²)/2π`
/// for `n = 1..=n_max`; inputs in rad/μs.
pub fn landau_levels_predicted(n_max: usize, chi: f64, alpha: f64, delta_omega: f64) -> Vec<f64> {
    let c = chi * alpha / 4.0;
    let m = delta_omega / 2.0;
    (1..=n_max)
        .map(|n| 2.0 * (c * c * n as f64 + m * m).sqrt() / TAU)
        .collect()
}

/// Landau–Zener estimate `e^{−2πΓ}`, `Γ = (mc²)²/(2|c g|)`.
pub fn lz_probability(m: &MappedConstants) -> Result<f64> {
    if m.g == 0.0 {
        return Err(Error::Analysis("Landau-Zener estimate needs a nonzero slope g".into()));
    }
    let gamma = m.mc2 * m.mc2 / (2.0 * (m.c_eff * m.g).abs());
    Ok((-TAU * gamma).exp())
}

/// Uniform quadrature grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for MarginalGrid {
    fn default() -> Self {
        Self {
            lo: -8.0,
            hi: 8.0,
            points: 512,
        }
    }
}

impl MarginalGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.hi > self.lo) || self.points < 3 {
            return Err(Error::param("marginal grid", "need hi > lo and at least 3 points"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.lo + i as f64 * self.step()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDensity {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl MarginalDensity {
    fn dx(&self) -> f64 {
        (self.x[self.x.len() - 1] - self.x[0]) / (self.x.len() - 1) as f64
    }

    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.dx()
    }

    pub fn mean(&self) -> f64 {
        self.x.iter().zip(&self.density).map(|(x, f)| x * f).sum::<f64>() * self.dx() / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.x
            .iter()
            .zip(&self.density)
            .map(|(x, f)| (x - mu) * (x - mu) * f)
            .sum::<f64>()
            * self.dx()
            / self.mass()
    }

    /// Mass on `x > x0` (or `x < x0` when `above` is false).
    pub fn mass_beyond(&self, x0: f64, above: bool) -> f64 {
        self.x
            .iter()
            .zip(&self.density)
            .filter(|(x, _)| if above { **x > x0 } else { **x < x0 })
            .map(|(_, f)| f)
            .sum::<f64>()
            * self.dx()
    }

    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.x
            .iter()
            .zip(&self.density)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(_, f)| f)
            .sum::<f64>()
            * self.dx()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,density")?;
        for (x, f) in self.x.iter().zip(&self.density) {
            writeln!(w, "{x:.16e},{f:.16e}")?;
        }
        Ok(())
    }
}

/// Writes marginal frames as long-format `t_us,x,density` rows.
pub fn write_marginal_frames<W: Write>(mut w: W, frames: &[(f64, MarginalDensity)]) -> std::io::Result<()> {
    writeln!(w, "t_us,x,density")?;
    for (t, m) in frames {
        for (x, f) in m.x.iter().zip(&m.density) {
            writeln!(w, "{t:.16e},{x:.16e},{f:.16e}")?;
        }
    }
    Ok(())
}

/// `2^{1/4} ψ_n(√2 x)` for `n < n_max` on `xs`, indexed `[n][i]`.
fn hermite_table(n_max: usize, xs: &[f64]) -> Vec<Vec<f64>> {
    let scale = 2f64.powf(0.25);
    let q: Vec<f64> = xs.iter().map(|x| 2f64.sqrt() * x).collect();
    let mut table = Vec::with_capacity(n_max);
    table.push(q.iter().map(|q| scale * PI.powf(-0.25) * (-q * q / 2.0).exp()).collect::<Vec<_>>());
    if n_max > 1 {
        table.push(q.iter().zip(&table[0]).map(|(q, p)| 2f64.sqrt() * q * p).collect());
    }
    for n in 1..n_max.saturating_sub(1) {
        let a = (2.0 / (n + 1) as f64).sqrt();
        let b = (n as f64 / (n + 1) as f64).sqrt();
        let next = (0..q.len())
            .map(|i| a * q[i] * table[n][i] - b * table[n - 1][i])
            .collect();
        table.push(next);
    }
    table
}

/// Marginal density of the `X` quadrature of `mode`, traced over the qubit
/// and the other modes.
pub fn quadrature_marginal(amps: &[C64], spec: &HilbertSpec, mode: usize, grid: &MarginalGrid) -> Result<MarginalDensity> {
    grid.validate()?;
    if amps.len() != spec.total_dim() {
        return Err(Error::Shape(format!(
            "state dim {} vs Hilbert dim {}",
            amps.len(),
            spec.total_dim()
        )));
    }
    let nj = spec.mode_dim(mode)?;
    let xs = grid.xs();
    let table = hermite_table(nj, &xs);
    // stride of mode j in the flattened index, and the block size above it
    let inner: usize = spec.trunc()[mode + 1..].iter().product();
    let outer = amps.len() / (nj * inner);
    let phase = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, -1.0),
    ];
    let mut density = vec![0.0; xs.len()];
    let mut wave = vec![C64::new(0.0, 0.0); xs.len()];
    for o in 0..outer {
        for r in 0..inner {
            let coeffs: Vec<C64> = (0..nj)
                .map(|n| amps[(o * nj + n) * inner + r] * phase[n % 4])
                .collect();
            if coeffs.iter().all(|c| c.norm_sqr() < 1e-30) {
                continue;
            }
            wave.iter_mut().for_each(|w| *w = C64::new(0.0, 0.0));
            for (n, c) in coeffs.iter().enumerate() {
                if c.norm_sqr() < 1e-30 {
                    continue;
                }
                for (w, h) in wave.iter_mut().zip(&table[n]) {
                    *w += c * h;
                }
            }
            for (d, w) in density.iter_mut().zip(&wave) {
                *d += w.norm_sqr();
            }
        }
    }
    let m = MarginalDensity { x: xs, density };
    let mass = m.mass();
    if mass < 0.999 {
        return Err(Error::Analysis(format!(
            "marginal grid [{}, {}] captures only {mass:.5} of the probability; widen it",
            grid.lo, grid.hi
        )));
    }
    let (mu, sd) = (m.mean(), m.variance().sqrt());
    if mu - 3.0 * sd < grid.lo || mu + 3.0 * sd > grid.hi {
        return Err(Error::Analysis(format!(
            "marginal grid [{}, {}] does not cover mean ± 3σ = [{:.3}, {:.3}]",
            grid.lo,
            grid.hi,
            mu - 3.0 * sd,
            mu + 3.0 * sd
        )));
    }
    Ok(m)
}

/// Classical turning point of a packet starting at `x0` with momentum `p0`
/// in the potential `g·X`.
pub fn turning_point(m: &MappedConstants, p0: f64, x0: f64) -> Result<f64> {
    if m.g == 0.0 {
        return Err(Error::Analysis("turning point needs a nonzero slope g".into()));
    }
    Ok(x0 + m.kinetic_energy(p0) / m.g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub probability: f64,
    pub x_turn: f64,
    /// Mass within one quadrature unit of the turning point.
    pub band_mass: f64,
    /// False when the band mass is too large to separate reflected and
    /// transmitted packets; the probability is then indeterminate.
    pub separated: bool,
}

/// Fraction of the marginal beyond the turning point (on the side away from
/// the start, i.e. `x > x_turn` for `g > 0`).
pub fn transmission_probability(marginal: &MarginalDensity, x_turn: f64, g: f64) -> Transmission {
    let mass = marginal.mass();
    let probability = (marginal.mass_beyond(x_turn, g > 0.0) / mass).clamp(0.0, 1.0);
    let band_mass = marginal.mass_between(x_turn - 1.0, x_turn + 1.0) / mass;
    Transmission {
        probability,
        x_turn,
        band_mass,
        separated: band_mass < 0.05,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDeviation {
    pub name: String,
    pub rms: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub columns: Vec<ColumnDeviation>,
}

impl Deviation {
    pub fn get(&self, name: &str) -> Option<&ColumnDeviation> {
        self.columns.iter().find(|c| c.name == name)
    }
}

/// Per-column RMS and max absolute difference over the columns both series share.
pub fn tier_deviation(a: &ObservableSeries, b: &ObservableSeries) -> Result<Deviation> {
    if a.times.len() != b.times.len() {
        return Err(Error::GridMismatch(format!(
            "{} samples vs {}",
            a.times.len(),
            b.times.len()
        )));
    }
    for (k, (ta, tb)) in a.times.iter().zip(&b.times).enumerate() {
        if (ta - tb).abs() > 1e-9 * ta.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("sample {k}: t = {ta} vs {tb}")));
        }
    }
    let mut columns = Vec::new();
    for (name, ca) in a.names.iter().zip(&a.columns) {
        let Some(cb) = b.column(name) else { continue };
        let n = ca.len().max(1) as f64;
        let mut sq = 0.0;
        let mut max = 0.0_f64;
        for (x, y) in ca.iter().zip(cb) {
            let d = (x - y).abs();
            sq += d * d;
            max = max.max(d);
        }
        columns.push(ColumnDeviation {
            name: name.clone(),
            rms: (sq / n).sqrt(),
            max,
        });
    }
    Ok(Deviation { columns })
}
