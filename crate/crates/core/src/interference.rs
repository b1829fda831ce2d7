//! Same-port and cross-port coincidence probabilities versus relative delay.
//!
//! For a normalised temporal amplitude `Φ`, with `f(t) = Φ(t - τ)` and
//! `g(t) = Φ(-t - τ)`:
//!
//! ```text
//! P(2,0) = P(0,2) = (1/32) ∫ |f + g|² dt
//! P(1,1)          = (1/16) ∫ |f - g|² dt
//! ```
//!
//! Fermions swap the signs inside the two moduli. Both integrals are
//! rectangle-rule sums on the amplitude's own time grid. The shifted copies are
//! produced with spectral phase ramps, which keeps each shifted copy exactly
//! normalised on the grid, so `P(2,0) + P(0,2) + P(1,1) = 1/4` holds to
//! rounding.
//!
//! Public delays are relative to the dip centre; the raw offset lives in the
//! amplitude's `delay_origin_fs` and in [`InterferenceCurve::delay_origin_fs`].

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::biphoton::{
    reciprocal_step, sinc_state_function, to_spectral, to_temporal, CrystalConfig, GridSpec,
    GridTransform, TemporalAmplitude,
};
use crate::math::triangle;
use crate::{Error, Result};

/// Largest fraction of `|Φ|²` a delay may push off the time grid.
pub const MAX_LOST_MASS: f64 = 1e-3;

const COMPLEMENT_TOLERANCE: f64 = 1e-9;
const PROBABILITY_SLACK: f64 = 1e-12;

/// Relative delay τ in fs, measured from the dip centre.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DelaySetting(f64);

impl DelaySetting {
    pub fn new(tau_fs: f64) -> Result<Self> {
        if tau_fs.is_finite() {
            Ok(DelaySetting(tau_fs))
        } else {
            Err(Error::invalid("tau", "delay must be finite"))
        }
    }

    pub fn tau_fs(self) -> f64 {
        self.0
    }

    /// `steps` evenly spaced delays from `min` to `max` inclusive.
    pub fn linspace(min_fs: f64, max_fs: f64, steps: usize) -> Result<Vec<Self>> {
        if steps == 0 {
            return Err(Error::invalid("tau_steps", "need at least one delay"));
        }
        if steps == 1 {
            return Ok(alloc::vec![DelaySetting::new(min_fs)?]);
        }
        if !(max_fs > min_fs) {
            return Err(Error::invalid("tau_max", "must exceed tau_min"));
        }
        let h = (max_fs - min_fs) / (steps - 1) as f64;
        (0..steps)
            .map(|i| {
                let tau = if i + 1 == steps { max_fs } else { min_fs + i as f64 * h };
                DelaySetting::new(tau)
            })
            .collect()
    }
}

/// Exchange symmetry of the two particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ExchangeSign {
    #[default]
    Boson,
    Fermion,
}

impl ExchangeSign {
    pub fn value(self) -> f64 {
        match self {
            ExchangeSign::Boson => 1.0,
            ExchangeSign::Fermion => -1.0,
        }
    }

    pub fn from_value(v: i32) -> Result<Self> {
        match v {
            1 => Ok(ExchangeSign::Boson),
            -1 => Ok(ExchangeSign::Fermion),
            _ => Err(Error::invalid("sign", "exchange sign must be +1 or -1")),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExchangeSign::Boson => "boson",
            ExchangeSign::Fermion => "fermion",
        }
    }
}

impl core::str::FromStr for ExchangeSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boson" | "+1" | "1" => Ok(ExchangeSign::Boson),
            "fermion" | "-1" => Ok(ExchangeSign::Fermion),
            _ => Err(Error::invalid("sign", format!("unknown exchange sign `{s}`"))),
        }
    }
}

/// One point of the coincidence curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferencePoint {
    pub tau_fs: f64,
    pub p20: f64,
    pub p02: f64,
    pub p11: f64,
}

impl InterferencePoint {
    /// Distinguishable-photon (binomial) values at the given delay.
    pub fn distinguishable(tau_fs: f64) -> Self {
        InterferencePoint {
            tau_fs,
            p20: 1.0 / 16.0,
            p02: 1.0 / 16.0,
            p11: 1.0 / 8.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.p20 + self.p02 + self.p11
    }

    /// Checks the range, port-symmetry and complementarity invariants.
    pub fn check(&self) -> Result<()> {
        let upper = 0.25 + PROBABILITY_SLACK;
        for (name, p) in [("p20", self.p20), ("p02", self.p02), ("p11", self.p11)] {
            if !(p >= -PROBABILITY_SLACK && p <= upper) {
                return Err(Error::InvalidPoint(format!("{name} = {p} outside [0, 1/4]")));
            }
        }
        if (self.p20 - self.p02).abs() > PROBABILITY_SLACK {
            return Err(Error::InvalidPoint(format!(
                "p20 = {} differs from p02 = {}",
                self.p20, self.p02
            )));
        }
        if (self.total() - 0.25).abs() > COMPLEMENT_TOLERANCE {
            return Err(Error::InvalidPoint(format!(
                "p20 + p02 + p11 = {} instead of 1/4",
                self.total()
            )));
        }
        Ok(())
    }
}

/// A coincidence sweep over strictly increasing delays.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceCurve {
    pub points: Vec<InterferencePoint>,
    pub crystal: CrystalConfig,
    pub grid: GridSpec,
    pub sign: ExchangeSign,
    pub visibility: f64,
    /// Raw delay of the dip centre; public delays are relative to it.
    pub delay_origin_fs: f64,
}

/// The two exchange integrals `∫|f+g|²` and `∫|f-g|²` for one delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ExchangeIntegrals {
    pub sum: f64,
    pub difference: f64,
}

impl ExchangeIntegrals {
    fn probabilities(self, sign: ExchangeSign) -> (f64, f64) {
        let (same, cross) = match sign {
            ExchangeSign::Boson => (self.sum, self.difference),
            ExchangeSign::Fermion => (self.difference, self.sum),
        };
        (clamp_small(same / 32.0), clamp_small(cross / 16.0))
    }
}

fn clamp_small(p: f64) -> f64 {
    if p < 0.0 && p > -PROBABILITY_SLACK {
        0.0
    } else {
        p
    }
}

/// Shift-and-overlap machinery bound to one temporal amplitude.
#[derive(Debug, Clone)]
pub(crate) struct OverlapEvaluator {
    transform: GridTransform,
    spectrum: Vec<Complex64>,
    d_omega: f64,
    d_t: f64,
    half: usize,
    time_mass: Vec<f64>,
    delay_origin_fs: f64,
}

impl OverlapEvaluator {
    pub(crate) fn new(phi: &TemporalAmplitude) -> Self {
        let spectral = to_spectral(phi);
        let n = phi.len();
        OverlapEvaluator {
            transform: GridTransform::new(n),
            spectrum: spectral.values().to_vec(),
            d_omega: reciprocal_step(n, phi.step()),
            d_t: phi.step(),
            half: (n - 1) / 2,
            time_mass: phi.values().iter().map(|v| v.norm_sqr() * phi.step()).collect(),
            delay_origin_fs: phi.delay_origin_fs(),
        }
    }

    fn time(&self, k: usize) -> f64 {
        (k as f64 - self.half as f64) * self.d_t
    }

    fn check_shift(&self, raw_tau: f64) -> Result<()> {
        let window = self.half as f64 * self.d_t;
        let total: f64 = self.time_mass.iter().sum();
        // Both f(t) = Φ(t-τ) and g(t) = Φ(-t-τ) need Φ(s) at |s + τ| <= window.
        let lost: f64 = (0..self.time_mass.len())
            .filter(|&k| (self.time(k) + raw_tau).abs() > window)
            .map(|k| self.time_mass[k])
            .sum::<f64>()
            / total;
        if lost <= MAX_LOST_MASS {
            return Ok(());
        }
        let tail = MAX_LOST_MASS / 2.0 * total;
        let mut acc = 0.0;
        let mut lo = 0;
        while lo < self.time_mass.len() && acc + self.time_mass[lo] <= tail {
            acc += self.time_mass[lo];
            lo += 1;
        }
        acc = 0.0;
        let mut hi = self.time_mass.len() - 1;
        while hi > 0 && acc + self.time_mass[hi] <= tail {
            acc += self.time_mass[hi];
            hi -= 1;
        }
        let required = (self.time(lo) + raw_tau).abs().max((self.time(hi) + raw_tau).abs());
        Err(Error::GridTooShort {
            lost_fraction: lost,
            required_half_window_fs: required,
            available_half_window_fs: window,
        })
    }

    /// Exchange integrals at a raw (uncentred) delay.
    pub(crate) fn integrals_raw(&self, raw_tau: f64) -> Result<ExchangeIntegrals> {
        self.check_shift(raw_tau)?;
        let n = self.spectrum.len();
        let mut f_hat = Vec::with_capacity(n);
        let mut g_hat = Vec::with_capacity(n);
        for j in 0..n {
            let w = (j as f64 - self.half as f64) * self.d_omega;
            let ramp = Complex64::from_polar(1.0, -w * raw_tau);
            // Φ(t-τ) ↔ Φ̃(ω)e^{-iωτ};  Φ(-t-τ) ↔ Φ̃(-ω)e^{+iωτ}
            f_hat.push(self.spectrum[j] * ramp);
            g_hat.push(self.spectrum[n - 1 - j] * ramp.conj());
        }
        let f = self.transform.to_time(&f_hat, self.d_omega);
        let g = self.transform.to_time(&g_hat, self.d_omega);
        let (mut sum, mut difference) = (0.0, 0.0);
        for (a, b) in f.iter().zip(&g) {
            sum += (a + b).norm_sqr();
            difference += (a - b).norm_sqr();
        }
        Ok(ExchangeIntegrals {
            sum: sum * self.d_t,
            difference: difference * self.d_t,
        })
    }

    pub(crate) fn integrals(&self, delay: DelaySetting) -> Result<ExchangeIntegrals> {
        self.integrals_raw(delay.tau_fs() + self.delay_origin_fs)
    }
}

/// Probability that both photons reach detector A (equivalently B).
pub fn same_port_probability(
    phi: &TemporalAmplitude,
    delay: DelaySetting,
    sign: ExchangeSign,
) -> Result<f64> {
    let integrals = OverlapEvaluator::new(phi).integrals(delay)?;
    Ok(integrals.probabilities(sign).0)
}

/// Probability that the photons reach different detectors.
pub fn cross_port_probability(
    phi: &TemporalAmplitude,
    delay: DelaySetting,
    sign: ExchangeSign,
) -> Result<f64> {
    let integrals = OverlapEvaluator::new(phi).integrals(delay)?;
    Ok(integrals.probabilities(sign).1)
}

/// Ideal (unit-visibility) point computed from an amplitude.
pub fn ideal_point(
    phi: &TemporalAmplitude,
    delay: DelaySetting,
    sign: ExchangeSign,
) -> Result<InterferencePoint> {
    point_from(&OverlapEvaluator::new(phi), delay, sign, 1.0)
}

fn point_from(
    evaluator: &OverlapEvaluator,
    delay: DelaySetting,
    sign: ExchangeSign,
    visibility: f64,
) -> Result<InterferencePoint> {
    let (same, cross) = evaluator.integrals(delay)?.probabilities(sign);
    let far = InterferencePoint::distinguishable(delay.tau_fs());
    let p20 = far.p20 + visibility * (same - far.p20);
    let p11 = far.p11 + visibility * (cross - far.p11);
    Ok(InterferencePoint {
        tau_fs: delay.tau_fs(),
        p20,
        p02: p20,
        p11,
    })
}

fn check_visibility(visibility: f64) -> Result<()> {
    if (0.0..=1.0).contains(&visibility) {
        Ok(())
    } else {
        Err(Error::invalid("visibility", "must lie in [0, 1]"))
    }
}

/// Theory curve on the default frequency grid for `crystal`, lengthened
/// if the delays reach past its time window.
pub fn sweep(
    crystal: &CrystalConfig,
    taus: &[DelaySetting],
    sign: ExchangeSign,
    visibility: f64,
) -> Result<InterferenceCurve> {
    let reach = taus.iter().map(|t| t.tau_fs().abs()).fold(0.0, f64::max);
    sweep_on_grid(crystal, GridSpec::covering(crystal, reach), taus, sign, visibility)
}

/// Theory curve with an explicit frequency grid.
///
/// Each probability is interpolated between its ideal value and the
/// distinguishable limit, `p = p_far + v·(p_ideal - p_far)`, which keeps the
/// three probabilities summing to 1/4 for every `v`.
pub fn sweep_on_grid(
    crystal: &CrystalConfig,
    grid: GridSpec,
    taus: &[DelaySetting],
    sign: ExchangeSign,
    visibility: f64,
) -> Result<InterferenceCurve> {
    check_visibility(visibility)?;
    if taus.is_empty() {
        return Err(Error::invalid("taus", "need at least one delay"));
    }
    if let Some(i) = taus.windows(2).position(|w| !(w[1].tau_fs() > w[0].tau_fs())) {
        return Err(Error::invalid(
            "taus",
            format!("delays must be strictly increasing (index {})", i + 1),
        ));
    }
    let phi = to_temporal(&sinc_state_function(crystal, grid)?);
    let evaluator = OverlapEvaluator::new(&phi);
    let points = taus
        .iter()
        .map(|&tau| point_from(&evaluator, tau, sign, visibility))
        .collect::<Result<Vec<_>>>()?;
    Ok(InterferenceCurve {
        points,
        crystal: *crystal,
        grid,
        sign,
        visibility,
        delay_origin_fs: phi.delay_origin_fs(),
    })
}

/// Theory point at a single delay (default grid).
pub fn theory_point(
    crystal: &CrystalConfig,
    delay: DelaySetting,
    sign: ExchangeSign,
    visibility: f64,
) -> Result<InterferencePoint> {
    Ok(sweep(crystal, &[delay], sign, visibility)?.points[0])
}

/// Closed-form triangular dip for the sinc state with linear mismatch.
///
/// With `Λ` the unit triangle and `W = |L·D|`, the bosonic cross-port
/// probability is `(1/8)·(1 - Λ(τ/(W/2)))`; fermions flip the triangle.
pub fn triangle_oracle(
    crystal: &CrystalConfig,
    delay: DelaySetting,
    sign: ExchangeSign,
) -> InterferencePoint {
    triangle_point(delay.tau_fs(), 0.0, crystal.dip_width_fs(), sign, 1.0)
}

/// Triangle model with free centre, width and visibility.
pub fn triangle_point(
    tau_fs: f64,
    center_fs: f64,
    width_fs: f64,
    sign: ExchangeSign,
    visibility: f64,
) -> InterferencePoint {
    let overlap = if width_fs > 0.0 {
        sign.value() * visibility * triangle((tau_fs - center_fs) / (width_fs / 2.0))
    } else {
        0.0
    };
    let p20 = (1.0 + overlap) / 16.0;
    InterferencePoint {
        tau_fs,
        p20,
        p02: p20,
        p11: (1.0 - overlap) / 8.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crystal() -> CrystalConfig {
        CrystalConfig::new(0.5, 200.0, 351.1).unwrap()
    }

    #[test]
    fn delays_must_increase() {
        let c = crystal();
        let taus = [DelaySetting::new(1.0).unwrap(), DelaySetting::new(1.0).unwrap()];
        assert!(sweep(&c, &taus, ExchangeSign::Boson, 1.0).is_err());
        assert!(sweep(&c, &[], ExchangeSign::Boson, 1.0).is_err());
        let one = [DelaySetting::new(0.0).unwrap()];
        assert!(sweep(&c, &one, ExchangeSign::Boson, 1.5).is_err());
    }

    #[test]
    fn nonfinite_delay_rejected() {
        assert!(DelaySetting::new(f64::INFINITY).is_err());
        assert!(DelaySetting::new(f64::NAN).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let d = DelaySetting::linspace(-200.0, 200.0, 101).unwrap();
        assert_eq!(d.len(), 101);
        assert_eq!(d[0].tau_fs(), -200.0);
        assert_eq!(d[50].tau_fs(), 0.0);
        assert_eq!(d[100].tau_fs(), 200.0);
    }

    #[test]
    fn far_shift_reports_required_window() {
        let c = crystal();
        let phi = to_temporal(&sinc_state_function(&c, GridSpec::for_crystal(&c)).unwrap());
        let window = phi.half_window_fs();
        let delay = DelaySetting::new(window).unwrap();
        match same_port_probability(&phi, delay, ExchangeSign::Boson) {
            Err(Error::GridTooShort {
                required_half_window_fs,
                available_half_window_fs,
                lost_fraction,
            }) => {
                assert!(required_half_window_fs > available_half_window_fs);
                assert!(lost_fraction > MAX_LOST_MASS);
            }
            other => panic!("expected GridTooShort, got {other:?}"),
        }
    }

    #[test]
    fn point_check_catches_violations() {
        let mut p = InterferencePoint::distinguishable(0.0);
        assert!(p.check().is_ok());
        p.p11 += 1e-6;
        assert!(p.check().is_err());
        let q = InterferencePoint { tau_fs: 0.0, p20: 0.1, p02: 0.05, p11: 0.1 };
        assert!(q.check().is_err());
    }

    #[test]
    fn sign_parsing() {
        assert_eq!("boson".parse::<ExchangeSign>().unwrap(), ExchangeSign::Boson);
        assert_eq!("fermion".parse::<ExchangeSign>().unwrap(), ExchangeSign::Fermion);
        assert!("anyon".parse::<ExchangeSign>().is_err());
        assert!(ExchangeSign::from_value(0).is_err());
    }
}
