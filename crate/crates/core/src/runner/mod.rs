//! Configuration-driven orchestration: builds every (sweep point × tier)
//! run, evolves it, writes per-run artifacts and a manifest.
//!
//! Output layout for a run directory:
//!
//! ```text
//! p{i}_{tier}.csv               observable series
//! p{i}_{tier}_spectrum.csv      when [analysis.spectrum] is set
//! p{i}_{tier}_peaks.json
//! p{i}_{tier}_marginal.csv      when analysis.marginal = true
//! p{i}_{tier}_transmission.json when analysis.transmission = true
//! deviation.json                when more than one tier runs
//! manifest.json                 written last
//! ```

mod compare;
mod config;
mod presets;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    find_peaks, lz_probability, quadrature_marginal, series_spectrum, tier_deviation,
    transmission_probability, turning_point, write_marginal_frames, Deviation, MarginalDensity,
    Peak, Transmission,
};
use crate::fockspace::{expectation_real, momentum_op, position_op};
use crate::hamiltonians::{dirac_mapping, full_hamiltonian_source, ideal_hamiltonian, Tier};
use crate::propagator::{
    evolve_eigen, evolve_unitary, EvolveOptions, Evolution, ObservableSeries, Observables, SampleHook,
    TimeGrid,
};
use crate::{Error, Result, C64};

pub use compare::{compare, CompareReport, RunComparison};
pub use config::{
    AnalysisSection, GridSection, HilbertSection, IdealMethod, InitialSection, ModeInit, PerMode,
    PhysicsSection, QubitInit, Resolved, RunConfig, RunSection, SpectrumSection, SweepParameter,
    SweepSection,
};
pub use presets::{preset, PRESET_NAMES};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "SIM_WORKERS";

/// Largest accepted `|X1(t1; dt) − X1(t1; dt/2)|` for full-tier runs.
pub const CONVERGENCE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub steps: usize,
    pub dt_us: Option<f64>,
    pub renormalizations: usize,
    pub cumulative_norm_drift: f64,
    pub max_leak: f64,
    pub final_norm: f64,
    pub dt_halving_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub index: usize,
    pub point: usize,
    pub tier: Tier,
    pub sweep_value: Option<f64>,
    pub files: Vec<FileEntry>,
    pub wall_s: f64,
    pub diagnostics: RunDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peaks_mhz: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transmission: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub config: serde_json::Value,
    pub workers: usize,
    pub sweep_parameter: Option<String>,
    pub runs: Vec<RunRecord>,
    pub extra_files: Vec<FileEntry>,
    pub total_wall_s: f64,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
    }

    /// Recomputes every checksum; returns the paths that no longer match.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in self.runs.iter().flat_map(|r| &r.files).chain(&self.extra_files) {
            let bytes = fs::read(dir.join(&f.path)).map_err(|e| Error::io(dir.join(&f.path), e))?;
            if sha256_hex(&bytes) != f.sha256 {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}

/// One evaluated tier-pair deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDeviation {
    pub point: usize,
    pub sweep_value: Option<f64>,
    pub a: String,
    pub b: String,
    pub deviation: Deviation,
}

/// Everything a run produced, for in-process callers.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub series: Vec<ObservableSeries>,
    pub transmissions: Vec<Option<Transmission>>,
    pub peaks: Vec<Option<Vec<Peak>>>,
    pub deviations: Vec<PairDeviation>,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(FileEntry {
        path: name.to_string(),
        sha256: sha256_hex(bytes),
    })
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Serialization(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Worker count: environment override, then config, then available cores.
pub fn resolve_workers(configured: Option<usize>) -> Result<usize> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::config(WORKERS_ENV, format!("`{v}` is not a positive integer"))),
        };
    }
    Ok(configured.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)))
}

#[derive(Debug, Clone, Copy)]
struct Job {
    index: usize,
    point: usize,
    value: Option<f64>,
    tier: Tier,
}

impl Job {
    fn id(&self) -> String {
        format!("p{}_{}", self.point, self.tier.name())
    }
}

struct JobResult {
    record: RunRecord,
    series: ObservableSeries,
    transmission: Option<Transmission>,
    peaks: Option<Vec<Peak>>,
}

/// Step count per sample interval for a requested step.
fn grid_for(t1: f64, sample: f64, dt_req: f64) -> Result<TimeGrid> {
    let per_sample = ((sample / dt_req) - 1e-9).ceil().max(1.0) as usize;
    TimeGrid::new(0.0, t1, sample / per_sample as f64, per_sample)
}

fn is_multiple(t: f64, step: f64) -> bool {
    let k = t / step;
    (k - k.round()).abs() < 1e-6
}

fn evolve_tier(
    cfg: &Resolved,
    job: &Job,
    obs: &Observables,
    opts: &EvolveOptions,
    halve: bool,
    hook: Option<SampleHook<'_>>,
) -> Result<(Evolution, Option<f64>)> {
    let model = cfg.model_at(job.value, job.tier)?;
    let psi0 = cfg.initial_state()?;
    match job.tier {
        Tier::Full => {
            let h = full_hamiltonian_source(&model)?;
            let om = model.omega_sb_max();
            let dt_req = cfg.full_dt.unwrap_or(std::f64::consts::TAU / om / 40.0);
            let dt_req = if halve { dt_req / 2.0 } else { dt_req };
            let grid = grid_for(cfg.full_t1.unwrap_or(cfg.t1), cfg.sample, dt_req)?;
            grid.check_resolves(om)?;
            let dt = grid.step();
            Ok((evolve_unitary(&psi0, &h, &grid, obs, opts, hook)?, Some(dt)))
        }
        _ => {
            let h = ideal_hamiltonian(&model)?;
            match cfg.analysis.ideal_method {
                IdealMethod::Eigen => {
                    let times = TimeGrid::new(0.0, cfg.t1, cfg.sample, 1)?.sample_times();
                    Ok((evolve_eigen(&psi0, &h, &times, obs, opts, hook)?, None))
                }
                IdealMethod::Rk4 => {
                    let grid = grid_for(cfg.t1, cfg.sample, cfg.dt)?;
                    let dt = grid.step();
                    Ok((evolve_unitary(&psi0, &h, &grid, obs, opts, hook)?, Some(dt)))
                }
            }
        }
    }
}

fn run_job(cfg: &Resolved, job: &Job, dir: &Path) -> Result<JobResult> {
    let start = Instant::now();
    let id = job.id();
    let spec = cfg.model.hilbert.clone();
    let obs = Observables::new(&spec)?;
    let opts = EvolveOptions {
        leak_bound: cfg.analysis.leak_bound,
        ..Default::default()
    };

    let mut frames: Vec<(f64, MarginalDensity)> = Vec::new();
    let mut frame_err: Option<Error> = None;
    let every = cfg.analysis.marginal_every_us;
    let grid = cfg.marginal_grid;
    let mut hook = |t: f64, amps: &[C64]| {
        if frame_err.is_some() || !is_multiple(t, every) {
            return;
        }
        match quadrature_marginal(amps, &spec, 0, &grid) {
            Ok(m) => frames.push((t, m)),
            Err(e) => frame_err = Some(e),
        }
    };
    let hook_ref: Option<SampleHook<'_>> = if cfg.analysis.marginal { Some(&mut hook) } else { None };
    let (ev, dt) = evolve_tier(cfg, job, &obs, &opts, false, hook_ref)?;
    if let Some(e) = frame_err {
        return Err(e);
    }

    let mut diagnostics = RunDiagnostics {
        steps: ev.diagnostics.steps,
        dt_us: dt,
        renormalizations: ev.diagnostics.renormalizations,
        cumulative_norm_drift: ev.diagnostics.cumulative_drift,
        max_leak: ev.diagnostics.max_leak,
        final_norm: ev.final_state.norm(),
        dt_halving_delta: None,
    };
    if job.tier == Tier::Full && cfg.analysis.convergence_check {
        let (half, _) = evolve_tier(cfg, job, &obs, &opts, true, None)?;
        let a = ev.series.last("X1").unwrap_or(0.0);
        let b = half.series.last("X1").unwrap_or(0.0);
        let delta = (a - b).abs();
        diagnostics.dt_halving_delta = Some(delta);
        if delta >= CONVERGENCE_TOL {
            return Err(Error::Integration(format!(
                "full tier not dt-converged: |X1(dt) - X1(dt/2)| = {delta:.3e} at t1; set a smaller grid.full_dt_ns"
            )));
        }
    }

    let mut files = Vec::new();
    let mut buf = Vec::new();
    ev.series.write_csv(&mut buf).map_err(|e| Error::io(dir.join(format!("{id}.csv")), e))?;
    files.push(write_file(dir, &format!("{id}.csv"), &buf)?);

    let mut peaks = None;
    if let Some(s) = &cfg.analysis.spectrum {
        let spectrum = series_spectrum(&ev.series, &s.column, s.window)?;
        let mut buf = Vec::new();
        spectrum.write_csv(&mut buf).map_err(|e| Error::io(dir, e))?;
        files.push(write_file(dir, &format!("{id}_spectrum.csv"), &buf)?);
        let found = find_peaks(&spectrum, s.min_fraction);
        files.push(write_file(dir, &format!("{id}_peaks.json"), &json_bytes(&found)?)?);
        peaks = Some(found);
    }

    let mut transmission = None;
    if cfg.analysis.marginal {
        let mut buf = Vec::new();
        write_marginal_frames(&mut buf, &frames).map_err(|e| Error::io(dir, e))?;
        files.push(write_file(dir, &format!("{id}_marginal.csv"), &buf)?);
    }
    if cfg.analysis.transmission {
        let model = cfg.model_at(job.value, job.tier)?;
        let mapped = dirac_mapping(&model)?;
        let psi0 = cfg.initial_state()?;
        let p0 = expectation_real(&psi0, &momentum_op(0, &spec)?)?;
        let x0 = expectation_real(&psi0, &position_op(0, &spec)?)?;
        let x_turn = turning_point(&mapped, p0, x0)?;
        let final_marginal = quadrature_marginal(ev.final_state.amplitudes().as_slice(), &spec, 0, &grid)?;
        let tr = transmission_probability(&final_marginal, x_turn, mapped.g);
        let report = serde_json::json!({
            "probability": tr.probability,
            "x_turn": tr.x_turn,
            "band_mass": tr.band_mass,
            "separated": tr.separated,
            "lz_probability": lz_probability(&mapped)?,
            "initial_momentum": p0,
            "initial_position": x0,
        });
        files.push(write_file(dir, &format!("{id}_transmission.json"), &json_bytes(&report)?)?);
        transmission = Some(tr);
    }

    Ok(JobResult {
        record: RunRecord {
            id,
            index: job.index,
            point: job.point,
            tier: job.tier,
            sweep_value: job.value,
            files,
            wall_s: start.elapsed().as_secs_f64(),
            diagnostics,
            peaks_mhz: peaks.as_ref().map(|p: &Vec<Peak>| p.iter().map(|k| k.freq).collect()),
            transmission: transmission.map(|t| t.probability),
        },
        series: ev.series,
        transmission,
        peaks,
    })
}

fn pair_deviations(jobs: &[Job], results: &[JobResult]) -> Result<Vec<PairDeviation>> {
    let mut by_point: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, j) in jobs.iter().enumerate() {
        by_point.entry(j.point).or_default().push(k);
    }
    let mut out = Vec::new();
    for (point, idx) in by_point {
        for (x, &i) in idx.iter().enumerate() {
            for &k in &idx[x + 1..] {
                let (a, b) = (&results[i].series, &results[k].series);
                let end = a.times.last().copied().unwrap_or(0.0).min(b.times.last().copied().unwrap_or(0.0));
                out.push(PairDeviation {
                    point,
                    sweep_value: jobs[i].value,
                    a: jobs[i].tier.name().into(),
                    b: jobs[k].tier.name().into(),
                    deviation: tier_deviation(&a.truncated(end), &b.truncated(end))?,
                });
            }
        }
    }
    Ok(out)
}

/// Runs a parsed configuration.
pub fn run_config(config: &RunConfig) -> Result<RunOutput> {
    let total = Instant::now();
    let cfg = config.resolve()?;
    let workers = resolve_workers(cfg.workers)?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let mut jobs = Vec::new();
    for (point, value) in cfg.points().into_iter().enumerate() {
        for &tier in &cfg.tiers {
            jobs.push(Job {
                index: jobs.len(),
                point,
                value,
                tier,
            });
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Integration(format!("worker pool: {e}")))?;
    let outcomes: Vec<Result<JobResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                run_job(&cfg, job, &dir).map_err(|e| Error::Run {
                    run: job.id(),
                    source: Box::new(e),
                })
            })
            .collect()
    });
    let results: Vec<JobResult> = outcomes.into_iter().collect::<Result<_>>()?;

    let deviations = pair_deviations(&jobs, &results)?;
    let mut extra_files = Vec::new();
    if !deviations.is_empty() {
        extra_files.push(write_file(&dir, "deviation.json", &json_bytes(&deviations)?)?);
    }
    let manifest = Manifest {
        name: cfg.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(config).map_err(|e| Error::Serialization(e.to_string()))?,
        workers,
        sweep_parameter: cfg.sweep.as_ref().map(|(p, _)| p.key().to_string()),
        runs: results.iter().map(|r| r.record.clone()).collect(),
        extra_files,
        total_wall_s: total.elapsed().as_secs_f64(),
    };
    write_file(&dir, "manifest.json", &json_bytes(&manifest)?)?;
    Ok(RunOutput {
        dir,
        manifest,
        transmissions: results.iter().map(|r| r.transmission).collect(),
        peaks: results.iter().map(|r| r.peaks.clone()).collect(),
        series: results.into_iter().map(|r| r.series).collect(),
        deviations,
    })
}

/// Loads a TOML configuration file and runs it.
pub fn run(config_path: &Path) -> Result<RunOutput> {
    run_config(&RunConfig::from_path(config_path)?)
}
