//! Ready-to-edit configurations for the standard scenarios.

use crate::{Error, Result};

pub const PRESET_NAMES: &[&str] = &[
    "zitterbewegung-1d",
    "zitterbewegung-2d",
    "landau-spectrum",
    "landau-trajectory",
    "klein",
    "rwa-scaling",
];

const ZITTERBEWEGUNG_1D: &str = r#"# Free 1D Dirac particle: Zitterbewegung for three masses.
[run]
name = "zitterbewegung-1d"
scenario = "free1d"
tiers = ["ideal", "full"]
output_dir = "out/zitterbewegung-1d"

[physics]
chi_mhz = 0.1
alpha = 1.0
# 100 MHz keeps the full tier close to the ideal one for longer
omega_sb_mhz = 40.0

[hilbert]
trunc = [40]

[grid]
t1_us = 20.0
sample_us = 0.1

[initial]
qubit = "plus"
modes = ["vacuum"]

[sweep]
parameter = "delta_omega_mhz"
values = [0.0, 0.05, 0.25]
"#;

const ZITTERBEWEGUNG_2D: &str = r#"# Free 2D Dirac particle: spiral Zitterbewegung and qubit trajectory.
[run]
name = "zitterbewegung-2d"
scenario = "free2d"
tiers = ["ideal", "full"]
output_dir = "out/zitterbewegung-2d"

[physics]
chi_mhz = 0.1
alpha = 1.0
delta = [0.0, 1.5707963267948966]
omega_sb_mhz = 40.0

[hilbert]
trunc = [25, 25]

[grid]
t1_us = 20.0
sample_us = 0.1

[initial]
qubit = "plus"
modes = ["vacuum", "vacuum"]

[sweep]
parameter = "delta_omega_mhz"
values = [0.0, 0.05, 0.25]
"#;

const LANDAU_SPECTRUM: &str = r#"# Landau levels of a massless 2D particle from the spectrum of <sz(t)>.
[run]
name = "landau-spectrum"
scenario = "magnetic2d"
# add "full" to also run the pre-RWA model (over grid.full_t1_us)
tiers = ["ideal"]
output_dir = "out/landau-spectrum"

[physics]
chi_mhz = 0.1
alpha = 1.0
delta_alpha = [-1.0, 0.0]
delta = [0.0, 1.5707963267948966]
omega_sb_mhz = 40.0
delta_omega_mhz = 0.0

[hilbert]
trunc = [20, 20]

[grid]
t1_us = 5000.0
sample_us = 1.0
full_t1_us = 1000.0

[initial]
qubit = "plus"
modes = ["vacuum", "vacuum"]

[analysis]
ideal_method = "eigen"
# the high-n tail of the 2D packet reaches the truncation edge
leak_bound = 1e-2

[analysis.spectrum]
column = "sz"
window = "hann"
min_fraction = 0.05
"#;

const LANDAU_TRAJECTORY: &str = r#"# Massive 2D particle in a magnetic field of varying strength.
[run]
name = "landau-trajectory"
scenario = "magnetic2d"
tiers = ["ideal", "full"]
output_dir = "out/landau-trajectory"

[physics]
chi_mhz = 0.1
alpha = 1.0
delta = [0.0, 1.5707963267948966]
omega_sb_mhz = 40.0
delta_omega_mhz = 0.05

[hilbert]
trunc = [25, 25]

[grid]
t1_us = 20.0
sample_us = 0.1

[initial]
qubit = "plus"
modes = ["vacuum", "vacuum"]

[sweep]
parameter = "delta_alpha"
values = [0.5, 0.0, -0.5, -1.0]
"#;

const KLEIN: &str = r#"# Klein tunnelling through the linear potential g*X, g/2pi = 0.1 MHz.
[run]
name = "klein"
scenario = "electro1d"
# "full" is available but accumulates photons late in the run
tiers = ["ideal"]
output_dir = "out/klein"

[physics]
chi_mhz = 0.1
alpha = 1.0
omega_sb_mhz = 40.0
# gamma/2pi = -(g/2pi)/2
gamma_mhz = -0.05

[hilbert]
trunc = [100]

[grid]
t1_us = 20.0
sample_us = 0.1

[initial]
qubit = "plus"
modes = ["coherent(0.5, 0.0)"]

[sweep]
parameter = "delta_omega_mhz"
values = [0.0, 0.05, 0.15]

[analysis]
marginal = true
marginal_every_us = 0.5
# reflected and transmitted packets spread beyond the default [-8, 8]
marginal_grid = [-12.0, 12.0, 768]
transmission = true
"#;

const RWA_SCALING: &str = r#"# Breakdown of the rotating-wave approximation versus sideband frequency.
[run]
name = "rwa-scaling"
scenario = "free1d"
tiers = ["ideal", "full", "ideal_magnus"]
output_dir = "out/rwa-scaling"

[physics]
chi_mhz = 0.1
alpha = 1.0
omega_sb_mhz = 40.0
delta_omega_mhz = 0.05

[hilbert]
trunc = [40]

[grid]
t1_us = 20.0
sample_us = 0.1

[initial]
qubit = "plus"
modes = ["vacuum"]

[sweep]
parameter = "omega_sb_mhz"
values = [20.0, 40.0, 100.0]
"#;

/// TOML text of a named preset.
pub fn preset(name: &str) -> Result<&'static str> {
    Ok(match name {
        "zitterbewegung-1d" => ZITTERBEWEGUNG_1D,
        "zitterbewegung-2d" => ZITTERBEWEGUNG_2D,
        "landau-spectrum" => LANDAU_SPECTRUM,
        "landau-trajectory" => LANDAU_TRAJECTORY,
        "klein" => KLEIN,
        "rwa-scaling" => RWA_SCALING,
        _ => return Err(Error::UnknownPreset(name.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::Tier;
    use crate::runner::{RunConfig, SweepParameter};

    #[test]
    fn every_preset_resolves() {
        for name in PRESET_NAMES {
            let cfg = RunConfig::from_toml(preset(name).unwrap()).unwrap();
            cfg.resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn klein_parameters() {
        let r = RunConfig::from_toml(preset("klein").unwrap()).unwrap().resolve().unwrap();
        let (p, v) = r.sweep.clone().unwrap();
        assert_eq!(p, SweepParameter::DeltaOmegaMhz);
        assert_eq!(v, vec![0.0, 0.05, 0.15]);
        assert_eq!(r.t1, 20.0);
        let g = crate::hamiltonians::dirac_mapping(&r.model).unwrap().g;
        assert!((crate::rad_per_us_to_mhz(g) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn landau_spectrum_parameters() {
        let r = RunConfig::from_toml(preset("landau-spectrum").unwrap()).unwrap().resolve().unwrap();
        assert_eq!(r.model.drives[0].alpha, 1.0);
        assert_eq!(r.model.drives[0].delta_alpha, -1.0);
        assert!((crate::rad_per_us_to_mhz(r.model.chi[0]) - 0.1).abs() < 1e-12);
        assert_eq!(r.t1, 5000.0);
        assert_eq!(r.full_t1, Some(1000.0));
        assert_eq!(r.tiers, vec![Tier::Ideal]);
    }

    #[test]
    fn rwa_scaling_sweeps_sideband() {
        let r = RunConfig::from_toml(preset("rwa-scaling").unwrap()).unwrap().resolve().unwrap();
        assert_eq!(r.sweep.unwrap().1, vec![20.0, 40.0, 100.0]);
        assert_eq!(r.tiers, vec![Tier::Ideal, Tier::Full, Tier::IdealPlusMagnus]);
    }
}
