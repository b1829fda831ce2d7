//! Experiment description: a flat, versioned TOML document plus
//! command-line overrides.
//!
//! ```toml
//! version = 1
//! seed = 7
//! pairs = 1000000
//! tau_min_fs = -200.0
//! tau_max_fs = 200.0
//! tau_steps = 101
//! eta_a = 0.2
//! eta_b = 0.2
//! ```
//!
//! Every key is optional except `version`; unknown keys are rejected.

use std::path::{Path, PathBuf};

use homsim_core::acquisition::{RunConfig, RunLength};
use homsim_core::analysis::DEFAULT_COINCIDENCE_WINDOW_NS;
use homsim_core::biphoton::CrystalConfig;
use homsim_core::detector::{degenerate_photon_energy_ev, DetectorId, DetectorModel};
use homsim_core::interference::{DelaySetting, ExchangeSign};
use serde::Deserialize;

use crate::error::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

/// Pairs per second at the beam splitter when none is given. Low enough
/// that pileup between unrelated pairs stays well below the statistical
/// error of a 10⁷-pair run at η = 0.2.
pub const DEFAULT_PAIR_RATE_HZ: f64 = 10.0;
pub const DEFAULT_PAIRS: u64 = 1_000_000;

/// Raw document, every field optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: Option<u32>,
    pub seed: Option<u64>,
    pub pair_rate_hz: Option<f64>,
    pub pairs: Option<u64>,
    pub duration_s: Option<f64>,
    pub tau_min_fs: Option<f64>,
    pub tau_max_fs: Option<f64>,
    pub tau_steps: Option<usize>,
    pub crystal_length_mm: Option<f64>,
    pub dvg_fs_per_mm: Option<f64>,
    pub pump_nm: Option<f64>,
    pub eta_a: Option<f64>,
    pub eta_b: Option<f64>,
    pub fwhm_ev: Option<f64>,
    pub relax_window_us: Option<f64>,
    pub visibility: Option<f64>,
    pub fermion: Option<bool>,
    pub window_ns: Option<u64>,
    pub out: Option<PathBuf>,
    pub svg: Option<bool>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        match file.version {
            None => return Err(Error::Config("missing `version`".into())),
            Some(v) if v != CONFIG_VERSION => {
                return Err(Error::Version {
                    what: "config",
                    found: v.to_string(),
                    expected: CONFIG_VERSION,
                })
            }
            _ => {}
        }
        if file.pairs.is_some() && file.duration_s.is_some() {
            return Err(Error::Config("set only one of `pairs` and `duration_s`".into()));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| e.in_file(path))
    }

    /// Applies `other` on top of `self`: fields set in `other` win. Setting
    /// one of `pairs` / `duration_s` clears the other.
    pub fn overridden_by(mut self, other: &ConfigFile) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {$(
                if other.$f.is_some() {
                    self.$f = other.$f.clone();
                }
            )*};
        }
        take!(
            seed, pair_rate_hz, tau_min_fs, tau_max_fs, tau_steps, crystal_length_mm,
            dvg_fs_per_mm, pump_nm, eta_a, eta_b, fwhm_ev, relax_window_us, visibility,
            fermion, window_ns, out, svg
        );
        if other.pairs.is_some() {
            self.pairs = other.pairs;
            self.duration_s = None;
        }
        if other.duration_s.is_some() {
            self.duration_s = other.duration_s;
            self.pairs = None;
        }
        self
    }
}

/// Validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub pair_rate_hz: f64,
    pub length: RunLength,
    pub taus: Vec<DelaySetting>,
    pub crystal: CrystalConfig,
    pub sign: ExchangeSign,
    pub visibility: f64,
    pub detectors: [DetectorModel; 2],
    pub window_ns: u64,
    pub out: PathBuf,
    pub svg: bool,
}

impl ExperimentSpec {
    /// Fills defaults and checks every field.
    pub fn resolve(file: &ConfigFile) -> Result<Self> {
        let field = |e: homsim_core::Error| Error::Config(e.to_string());
        let crystal = CrystalConfig::new(
            file.crystal_length_mm.unwrap_or(0.5),
            file.dvg_fs_per_mm.unwrap_or(200.0),
            file.pump_nm.unwrap_or(351.1),
        )
        .map_err(field)?;
        let steps = file.tau_steps.unwrap_or(101);
        let taus = DelaySetting::linspace(
            file.tau_min_fs.unwrap_or(-200.0),
            file.tau_max_fs.unwrap_or(200.0),
            steps,
        )
        .map_err(field)?;
        let energy = degenerate_photon_energy_ev(crystal.pump_wavelength_nm());
        let detector = |id, eta: Option<f64>| {
            DetectorModel::new(
                id,
                eta.unwrap_or(0.2),
                energy,
                file.fwhm_ev.unwrap_or(0.25),
                file.relax_window_us.unwrap_or(15.0),
            )
            .map_err(field)
        };
        let detectors = [detector(DetectorId::A, file.eta_a)?, detector(DetectorId::B, file.eta_b)?];
        let length = match (file.pairs, file.duration_s) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set only one of `pairs` and `duration_s`".into()))
            }
            (_, Some(d)) => RunLength::DurationSeconds(d),
            (Some(n), None) => RunLength::PairCount(n),
            (None, None) => RunLength::PairCount(DEFAULT_PAIRS),
        };
        let spec = ExperimentSpec {
            seed: file.seed.unwrap_or(1),
            pair_rate_hz: file.pair_rate_hz.unwrap_or(DEFAULT_PAIR_RATE_HZ),
            length,
            taus,
            crystal,
            sign: if file.fermion.unwrap_or(false) {
                ExchangeSign::Fermion
            } else {
                ExchangeSign::Boson
            },
            visibility: file.visibility.unwrap_or(1.0),
            detectors,
            window_ns: file.window_ns.unwrap_or(DEFAULT_COINCIDENCE_WINDOW_NS),
            out: file.out.clone().unwrap_or_else(|| PathBuf::from(".")),
            svg: file.svg.unwrap_or(false),
        };
        spec.run_config(0).validate().map_err(field)?;
        Ok(spec)
    }

    /// Seed of the run at delay index `i`; consecutive indices give
    /// unrelated ChaCha streams.
    pub fn point_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }

    /// Acquisition run for delay index `i`.
    pub fn run_config(&self, i: usize) -> RunConfig {
        RunConfig {
            pair_rate_hz: self.pair_rate_hz,
            length: self.length,
            tau_fs: self.taus[i].tau_fs(),
            crystal: self.crystal,
            sign: self.sign,
            visibility: self.visibility,
            detectors: self.detectors,
            seed: self.point_seed(i),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let spec = ExperimentSpec::resolve(&ConfigFile::parse("version = 1").unwrap()).unwrap();
        assert_eq!(spec.taus.len(), 101);
        assert_eq!(spec.length, RunLength::PairCount(DEFAULT_PAIRS));
        assert_eq!(spec.sign, ExchangeSign::Boson);
        assert_eq!(spec.detectors[0].eta(), 0.2);
        assert_eq!(spec.crystal.dip_width_fs(), 100.0);
    }

    #[test]
    fn version_required_and_checked() {
        assert!(ConfigFile::parse("seed = 3").is_err());
        assert!(matches!(ConfigFile::parse("version = 9"), Err(Error::Version { .. })));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ConfigFile::parse("version = 1\ncolour = 'red'").unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn pairs_and_duration_exclusive() {
        let err = ConfigFile::parse("version = 1\npairs = 10\nduration_s = 1.0").unwrap_err();
        assert!(err.to_string().contains("only one of"), "{err}");
    }

    #[test]
    fn flags_win() {
        let file = ConfigFile::parse("version = 1\npairs = 10\neta_a = 0.5\nseed = 4").unwrap();
        let flags = ConfigFile {
            duration_s: Some(3.0),
            eta_a: Some(0.9),
            ..ConfigFile::default()
        };
        let spec = ExperimentSpec::resolve(&file.overridden_by(&flags)).unwrap();
        assert_eq!(spec.length, RunLength::DurationSeconds(3.0));
        assert_eq!(spec.detectors[0].eta(), 0.9);
        assert_eq!(spec.seed, 4);
    }

    #[test]
    fn field_level_messages() {
        let file = ConfigFile::parse("version = 1\neta_b = 1.5").unwrap();
        let err = ExperimentSpec::resolve(&file).unwrap_err().to_string();
        assert!(err.contains("eta"), "{err}");
        let file = ConfigFile::parse("version = 1\nvisibility = -0.1").unwrap();
        assert!(ExperimentSpec::resolve(&file).unwrap_err().to_string().contains("visibility"));
    }
}
