//! Phenomenological photon-number-resolving energy detector.
//!
//! A transition-edge sensor reports the total energy absorbed within its
//! thermal relaxation window. The model chains four steps per detector:
//! binomial efficiency loss ([`thin`]), coalescence of absorptions closer
//! than the relaxation window ([`pileup_merge`]), Gaussian energy smearing
//! ([`measure_energy`]) and rounding back to a photon number
//! ([`infer_count`]).

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};

use crate::{Error, Result};

/// `h·c` in eV·nm.
pub const HC_EV_NM: f64 = 1239.841_984_332_002_8;

/// FWHM of a Gaussian in units of its standard deviation, `2√(2 ln 2)`.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// Energy of each photon of a degenerate pair from a pump at `pump_nm`.
pub fn degenerate_photon_energy_ev(pump_nm: f64) -> f64 {
    HC_EV_NM / (2.0 * pump_nm)
}

/// Detector label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DetectorId {
    A,
    B,
}

impl DetectorId {
    pub fn index(self) -> usize {
        match self {
            DetectorId::A => 0,
            DetectorId::B => 1,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            DetectorId::A => 'A',
            DetectorId::B => 'B',
        }
    }

    pub fn other(self) -> Self {
        match self {
            DetectorId::A => DetectorId::B,
            DetectorId::B => DetectorId::A,
        }
    }
}

/// Detector parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    id: DetectorId,
    eta: f64,
    photon_energy_ev: f64,
    energy_fwhm_ev: f64,
    relax_window_us: f64,
}

impl DetectorModel {
    pub fn new(
        id: DetectorId,
        eta: f64,
        photon_energy_ev: f64,
        energy_fwhm_ev: f64,
        relax_window_us: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid("eta", "quantum efficiency must lie in [0, 1]"));
        }
        if !(photon_energy_ev.is_finite() && photon_energy_ev > 0.0) {
            return Err(Error::invalid("photon_energy_ev", "photon energy must be positive"));
        }
        if !(energy_fwhm_ev.is_finite() && energy_fwhm_ev >= 0.0) {
            return Err(Error::invalid("energy_fwhm_ev", "energy resolution must be nonnegative"));
        }
        if !(relax_window_us.is_finite() && relax_window_us > 0.0) {
            return Err(Error::invalid("relax_window_us", "relaxation window must be positive"));
        }
        Ok(DetectorModel {
            id,
            eta,
            photon_energy_ev,
            energy_fwhm_ev,
            relax_window_us,
        })
    }

    /// Tungsten TES as operated in the coalescence experiment: 20% efficiency,
    /// 0.25 eV FWHM, 15 µs relaxation, photons from a 351.1 nm pump.
    pub fn tes(id: DetectorId) -> Self {
        DetectorModel::new(id, 0.2, degenerate_photon_energy_ev(351.1), 0.25, 15.0)
            .expect("reference parameters are valid")
    }

    pub fn id(&self) -> DetectorId {
        self.id
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn photon_energy_ev(&self) -> f64 {
        self.photon_energy_ev
    }

    pub fn energy_fwhm_ev(&self) -> f64 {
        self.energy_fwhm_ev
    }

    pub fn relax_window_us(&self) -> f64 {
        self.relax_window_us
    }

    pub fn energy_sigma_ev(&self) -> f64 {
        self.energy_fwhm_ev / FWHM_PER_SIGMA
    }

    /// Relaxation window rounded to whole nanoseconds.
    pub fn relax_window_ns(&self) -> u64 {
        libm::round(self.relax_window_us * 1e3) as u64
    }

    pub fn with_id(mut self, id: DetectorId) -> Self {
        self.id = id;
        self
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        DetectorModel::new(self.id, eta, self.photon_energy_ev, self.energy_fwhm_ev, self.relax_window_us)
    }

    pub fn with_fwhm(self, fwhm: f64) -> Result<Self> {
        DetectorModel::new(self.id, self.eta, self.photon_energy_ev, fwhm, self.relax_window_us)
    }
}

/// One time-stamped detector pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub t_ns: u64,
    pub det: DetectorId,
    pub energy_ev: f64,
    pub n_inferred: u32,
}

/// Photons absorbed at one detector at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub t_ns: u64,
    pub photons: u32,
}

/// Absorptions coalesced by the relaxation window; stamped with the first
/// arrival's time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbsorptionGroup {
    pub t_ns: u64,
    pub photons: u32,
}

/// Binomial efficiency loss: each of `n_incident` photons survives with
/// probability `eta`.
pub fn thin<R: Rng + ?Sized>(n_incident: u32, eta: f64, rng: &mut R) -> u32 {
    if n_incident == 0 {
        return 0;
    }
    let eta = eta.clamp(0.0, 1.0);
    Binomial::new(u64::from(n_incident), eta)
        .expect("probability clamped to [0, 1]")
        .sample(rng) as u32
}

/// Total absorbed energy with Gaussian read-out noise, clamped at zero.
pub fn measure_energy<R: Rng + ?Sized>(n_absorbed: u32, model: &DetectorModel, rng: &mut R) -> f64 {
    let mean = f64::from(n_absorbed) * model.photon_energy_ev;
    let sigma = model.energy_sigma_ev();
    let energy = if sigma > 0.0 {
        mean + Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    } else {
        mean
    };
    energy.max(0.0)
}

/// Nearest photon number to `energy/E`; exact half-integers round up.
pub fn infer_count(energy_ev: f64, model: &DetectorModel) -> u32 {
    let ratio = energy_ev.max(0.0) / model.photon_energy_ev;
    libm::floor(ratio + 0.5) as u32
}

/// Streaming form of [`pileup_merge`].
///
/// An arrival joins the open group when its gap to the previous arrival is
/// shorter than the relaxation window.
#[derive(Debug, Clone)]
pub struct PileupMerger {
    window_ns: u64,
    open: Option<AbsorptionGroup>,
    last_t_ns: Option<u64>,
}

impl PileupMerger {
    pub fn new(model: &DetectorModel) -> Self {
        Self::with_window_ns(model.relax_window_ns())
    }

    pub fn with_window_ns(window_ns: u64) -> Self {
        PileupMerger {
            window_ns,
            open: None,
            last_t_ns: None,
        }
    }

    /// Adds an arrival; returns the group it closed, if any.
    ///
    /// Panics if arrivals go backwards in time. [`pileup_merge`] checks order
    /// up front and reports it as an error.
    pub fn push(&mut self, arrival: Arrival) -> Option<AbsorptionGroup> {
        if let Some(last) = self.last_t_ns {
            assert!(arrival.t_ns >= last, "arrivals must be time-ordered");
        }
        let joins = self
            .last_t_ns
            .is_some_and(|last| arrival.t_ns - last < self.window_ns);
        self.last_t_ns = Some(arrival.t_ns);
        match (&mut self.open, joins) {
            (Some(group), true) => {
                group.photons += arrival.photons;
                None
            }
            (open, _) => open.replace(AbsorptionGroup {
                t_ns: arrival.t_ns,
                photons: arrival.photons,
            }),
        }
    }

    /// Closes and returns the open group.
    pub fn finish(&mut self) -> Option<AbsorptionGroup> {
        self.last_t_ns = None;
        self.open.take()
    }
}

/// Coalesces time-ordered arrivals whose consecutive gaps are shorter than
/// the relaxation window.
pub fn pileup_merge(arrivals: &[Arrival], model: &DetectorModel) -> Result<Vec<AbsorptionGroup>> {
    if let Some(i) = arrivals.windows(2).position(|w| w[1].t_ns < w[0].t_ns) {
        return Err(Error::Unordered { index: i + 1 });
    }
    let mut merger = PileupMerger::new(model);
    let mut groups: Vec<AbsorptionGroup> = arrivals.iter().filter_map(|&a| merger.push(a)).collect();
    groups.extend(merger.finish());
    Ok(groups)
}
