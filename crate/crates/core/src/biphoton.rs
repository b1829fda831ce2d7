//! Biphoton spectral and temporal amplitudes.
//!
//! The pair state is carried by its spectral amplitude over the detuning `ω`
//! (rad/fs) from the degenerate frequency, sampled on an odd, zero-centred
//! uniform grid. The temporal amplitude lives on the reciprocal grid with
//! `Δt·Δω = 2π/N`, which makes [`to_temporal`] and [`to_spectral`] exact
//! inverses and preserves the Riemann-sum norm.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::fft::Fft;
use crate::math::{sinc, sinc_squared_coverage};
use crate::{Error, Result};

/// Number of grid points used when no grid is given.
pub const DEFAULT_GRID_POINTS: usize = 4097;

/// Default spectral span, in units of the sinc zero spacing `2π/|L·D|`.
///
/// 240 spacings (±120 on each side) keep more than 99.9% of the `sinc²` mass
/// on the grid.
pub const DEFAULT_SPAN_ZERO_SPACINGS: f64 = 240.0;

/// Upper bound on [`GridSpec::covering`]; delays beyond its window
/// (about ±200 dip widths) are reported as [`Error::GridTooShort`].
pub const MAX_COVERING_POINTS: usize = (1 << 20) + 1;

/// Minimum fraction of the analytic spectral mass a sinc grid must hold.
pub const MIN_COVERAGE: f64 = 0.999;

/// Nonlinear crystal under a monochromatic pump.
///
/// The wave-vector mismatch is linearised as `Δ(ω) = D·ω`, where `D` is the
/// inverse-group-velocity difference between the two polarisations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalConfig {
    length_mm: f64,
    dvg_fs_per_mm: f64,
    pump_wavelength_nm: f64,
}

impl CrystalConfig {
    pub fn new(length_mm: f64, dvg_fs_per_mm: f64, pump_wavelength_nm: f64) -> Result<Self> {
        if !(length_mm.is_finite() && length_mm > 0.0) {
            return Err(Error::invalid("length_mm", "crystal length must be positive"));
        }
        if !(dvg_fs_per_mm.is_finite() && dvg_fs_per_mm != 0.0) {
            return Err(Error::invalid(
                "dvg_fs_per_mm",
                "inverse-group-velocity difference must be finite and nonzero",
            ));
        }
        if !(pump_wavelength_nm.is_finite() && pump_wavelength_nm > 0.0) {
            return Err(Error::invalid("pump_wavelength_nm", "pump wavelength must be positive"));
        }
        Ok(CrystalConfig {
            length_mm,
            dvg_fs_per_mm,
            pump_wavelength_nm,
        })
    }

    pub fn length_mm(&self) -> f64 {
        self.length_mm
    }

    pub fn dvg_fs_per_mm(&self) -> f64 {
        self.dvg_fs_per_mm
    }

    pub fn pump_wavelength_nm(&self) -> f64 {
        self.pump_wavelength_nm
    }

    /// Signed walk-off `L·D` in fs.
    pub fn walkoff_fs(&self) -> f64 {
        self.length_mm * self.dvg_fs_per_mm
    }

    /// Full width of the rectangular temporal amplitude, `|L·D|` in fs. This
    /// is also the base width of the triangular dip.
    pub fn dip_width_fs(&self) -> f64 {
        self.walkoff_fs().abs()
    }

    /// Raw delay at which the two exchange amplitudes overlap perfectly.
    pub fn dip_center_fs(&self) -> f64 {
        self.walkoff_fs() / 2.0
    }
}

/// Linearised wave-vector mismatch `D·ω` in rad/mm for a detuning in rad/fs.
pub fn mismatch(crystal: &CrystalConfig, omega: f64) -> f64 {
    crystal.dvg_fs_per_mm * omega
}

/// Frequency grid request: total span in rad/fs and an odd point count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub span: f64,
    pub points: usize,
}

impl GridSpec {
    /// The default grid for a crystal.
    pub fn for_crystal(crystal: &CrystalConfig) -> Self {
        Self::with_zero_spacings(crystal, DEFAULT_SPAN_ZERO_SPACINGS, DEFAULT_GRID_POINTS)
    }

    /// The default grid, with more samples at the same span when needed so
    /// that the time window still holds the wave packet shifted by up to
    /// `max_abs_tau_fs` from the dip centre.
    pub fn covering(crystal: &CrystalConfig, max_abs_tau_fs: f64) -> Self {
        let base = Self::for_crystal(crystal);
        let dt = 2.0 * PI / base.span;
        // packet support is one width; two more absorb the ringing tails
        let reach = max_abs_tau_fs.abs() + 3.0 * crystal.dip_width_fs();
        let half = libm::ceil(reach / dt) as usize;
        GridSpec {
            span: base.span,
            points: (2 * half + 1).clamp(base.points, MAX_COVERING_POINTS),
        }
    }

    /// A grid spanning `spacings` sinc zero spacings with `points` samples.
    pub fn with_zero_spacings(crystal: &CrystalConfig, spacings: f64, points: usize) -> Self {
        GridSpec {
            span: spacings * 2.0 * PI / crystal.dip_width_fs(),
            points,
        }
    }

    pub fn step(&self) -> f64 {
        self.span / (self.points - 1) as f64
    }

    fn validate(&self) -> Result<()> {
        if self.points < 3 {
            return Err(Error::DegenerateGrid("need at least 3 points"));
        }
        if self.points % 2 == 0 {
            return Err(Error::DegenerateGrid("point count must be odd so that ω = 0 is sampled"));
        }
        if !(self.span.is_finite() && self.span > 0.0) {
            return Err(Error::DegenerateGrid("span must be positive"));
        }
        Ok(())
    }
}

/// Samples on a uniform grid `x_k = (k - (N-1)/2)·step`, normalised so that
/// `Σ|v|²·step = 1`.
#[derive(Debug, Clone, PartialEq)]
struct Sampled {
    step: f64,
    values: Vec<Complex64>,
}

impl Sampled {
    fn new(step: f64, mut values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 3 || values.len() % 2 == 0 {
            return Err(Error::DegenerateGrid("need an odd number of at least 3 samples"));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::DegenerateGrid("grid step must be positive"));
        }
        let norm = riemann_norm(&values, step);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("values", "amplitude has zero or non-finite norm"));
        }
        let scale = 1.0 / libm::sqrt(norm);
        values.iter_mut().for_each(|v| *v *= scale);
        Ok(Sampled { step, values })
    }

    fn half(&self) -> usize {
        (self.values.len() - 1) / 2
    }

    fn coordinate(&self, index: usize) -> f64 {
        (index as f64 - self.half() as f64) * self.step
    }
}

fn riemann_norm(values: &[Complex64], step: f64) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum::<f64>() * step
}

/// Biphoton spectral amplitude `Φ̃(ω)`.
///
/// `delay_origin_fs` records the raw delay at which the exchange-symmetric
/// overlap peaks; [`crate::interference`] reports delays relative to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    samples: Sampled,
    delay_origin_fs: f64,
}

impl SpectralAmplitude {
    /// Wraps arbitrary samples (rad/fs grid step), normalising them.
    pub fn from_samples(step: f64, values: Vec<Complex64>, delay_origin_fs: f64) -> Result<Self> {
        Ok(SpectralAmplitude {
            samples: Sampled::new(step, values)?,
            delay_origin_fs,
        })
    }

    /// A real Gaussian amplitude, `|Φ̃|² ∝ exp(-ω²/(2σ²))`.
    pub fn gaussian(sigma: f64, grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("sigma", "spectral width must be positive"));
        }
        let step = grid.step();
        let half = (grid.points - 1) / 2;
        let values = (0..grid.points)
            .map(|k| {
                let w = (k as f64 - half as f64) * step;
                Complex64::new(libm::exp(-w * w / (4.0 * sigma * sigma)), 0.0)
            })
            .collect();
        Self::from_samples(step, values, 0.0)
    }

    pub fn len(&self) -> usize {
        self.samples.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.values.is_empty()
    }

    /// Grid step Δω in rad/fs.
    pub fn step(&self) -> f64 {
        self.samples.step
    }

    pub fn values(&self) -> &[Complex64] {
        &self.samples.values
    }

    /// Detuning of sample `index` in rad/fs.
    pub fn omega(&self, index: usize) -> f64 {
        self.samples.coordinate(index)
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.omega(k))
    }

    pub fn delay_origin_fs(&self) -> f64 {
        self.delay_origin_fs
    }

    /// Riemann sum `Σ|Φ̃|²Δω`.
    pub fn norm(&self) -> f64 {
        riemann_norm(&self.samples.values, self.samples.step)
    }
}

/// Biphoton temporal amplitude `Φ(t)`, the inverse Fourier transform of
/// [`SpectralAmplitude`].
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalAmplitude {
    samples: Sampled,
    delay_origin_fs: f64,
}

impl TemporalAmplitude {
    pub fn from_samples(step: f64, values: Vec<Complex64>, delay_origin_fs: f64) -> Result<Self> {
        Ok(TemporalAmplitude {
            samples: Sampled::new(step, values)?,
            delay_origin_fs,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.values.is_empty()
    }

    /// Grid step Δt in fs.
    pub fn step(&self) -> f64 {
        self.samples.step
    }

    pub fn values(&self) -> &[Complex64] {
        &self.samples.values
    }

    /// Time of sample `index` in fs.
    pub fn time(&self, index: usize) -> f64 {
        self.samples.coordinate(index)
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    /// Largest |t| on the grid.
    pub fn half_window_fs(&self) -> f64 {
        self.samples.half() as f64 * self.samples.step
    }

    pub fn delay_origin_fs(&self) -> f64 {
        self.delay_origin_fs
    }

    /// Riemann sum `Σ|Φ|²Δt`.
    pub fn norm(&self) -> f64 {
        riemann_norm(&self.samples.values, self.samples.step)
    }
}

/// Single-crystal state function `Φ̃(ω) ∝ L·sinc(L·D·ω/2)·exp(i·L·D·ω/2)`.
///
/// Fails if the grid keeps less than [`MIN_COVERAGE`] of the analytic
/// `sinc²` mass.
pub fn sinc_state_function(crystal: &CrystalConfig, grid: GridSpec) -> Result<SpectralAmplitude> {
    grid.validate()?;
    let step = grid.step();
    let half = (grid.points - 1) / 2;
    let l = crystal.length_mm;

    let x_max = (l / 2.0 * mismatch(crystal, half as f64 * step)).abs();
    let coverage = sinc_squared_coverage(x_max);
    if coverage < MIN_COVERAGE {
        return Err(Error::InsufficientCoverage {
            coverage,
            required: MIN_COVERAGE,
        });
    }

    let values = (0..grid.points)
        .map(|k| {
            let w = (k as f64 - half as f64) * step;
            let x = l / 2.0 * mismatch(crystal, w);
            Complex64::from_polar(l * sinc(x), x)
        })
        .collect();
    SpectralAmplitude::from_samples(step, values, crystal.dip_center_fs())
}

/// Maps centred indices `-(N-1)/2..=(N-1)/2` to DFT order and back.
fn centred_to_dft(values: &[Complex64]) -> Vec<Complex64> {
    let half = (values.len() - 1) / 2;
    let mut out = Vec::with_capacity(values.len());
    out.extend_from_slice(&values[half..]);
    out.extend_from_slice(&values[..half]);
    out
}

fn dft_to_centred(values: &[Complex64]) -> Vec<Complex64> {
    let half = (values.len() - 1) / 2;
    let split = values.len() - half;
    let mut out = Vec::with_capacity(values.len());
    out.extend_from_slice(&values[split..]);
    out.extend_from_slice(&values[..split]);
    out
}

/// Reusable centred transform between the reciprocal ω and t grids.
#[derive(Debug, Clone)]
pub(crate) struct GridTransform {
    plan: Fft,
}

impl GridTransform {
    pub(crate) fn new(points: usize) -> Self {
        GridTransform {
            plan: Fft::new(points),
        }
    }

    /// `Φ(t_k) = Δω/√(2π) Σ_j Φ̃(ω_j) e^{iω_j t_k}` on centred samples.
    pub(crate) fn to_time(&self, spectrum: &[Complex64], d_omega: f64) -> Vec<Complex64> {
        let mut buf = centred_to_dft(spectrum);
        self.plan.inverse(&mut buf);
        let scale = d_omega / libm::sqrt(2.0 * PI);
        buf.iter_mut().for_each(|v| *v *= scale);
        dft_to_centred(&buf)
    }

    /// `Φ̃(ω_j) = Δt/√(2π) Σ_k Φ(t_k) e^{-iω_j t_k}` on centred samples.
    pub(crate) fn to_frequency(&self, signal: &[Complex64], d_t: f64) -> Vec<Complex64> {
        let mut buf = centred_to_dft(signal);
        self.plan.forward(&mut buf);
        let scale = d_t / libm::sqrt(2.0 * PI);
        buf.iter_mut().for_each(|v| *v *= scale);
        dft_to_centred(&buf)
    }
}

/// Reciprocal grid step: `Δt = 2π/(N·Δω)` (and vice versa).
pub(crate) fn reciprocal_step(points: usize, step: f64) -> f64 {
    2.0 * PI / (points as f64 * step)
}

/// Inverse Fourier transform onto the reciprocal time grid.
pub fn to_temporal(spectrum: &SpectralAmplitude) -> TemporalAmplitude {
    let n = spectrum.len();
    let values = GridTransform::new(n).to_time(spectrum.values(), spectrum.step());
    let samples = Sampled::new(reciprocal_step(n, spectrum.step()), values)
        .expect("transform of a normalised amplitude is normalisable");
    TemporalAmplitude {
        samples,
        delay_origin_fs: spectrum.delay_origin_fs,
    }
}

/// Forward Fourier transform back onto the frequency grid.
pub fn to_spectral(temporal: &TemporalAmplitude) -> SpectralAmplitude {
    let n = temporal.len();
    let values = GridTransform::new(n).to_frequency(temporal.values(), temporal.step());
    let samples = Sampled::new(reciprocal_step(n, temporal.step()), values)
        .expect("transform of a normalised amplitude is normalisable");
    SpectralAmplitude {
        samples,
        delay_origin_fs: temporal.delay_origin_fs,
    }
}
