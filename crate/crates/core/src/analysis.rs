//! Reconstruction of coincidence probabilities from detector events.
//!
//! [`classify`] folds a time-ordered event stream into counts, [`estimate`]
//! turns counts into efficiency-corrected probabilities, [`klyshko_eta`]
//! calibrates detector efficiencies from heralded pairs and
//! [`fit_visibility`] fits the triangular feature to a reconstructed curve.

use alloc::collections::VecDeque;

use crate::acquisition::EventStream;
use crate::biphoton::CrystalConfig;
use crate::detector::{DetectorId, EventRecord};
use crate::interference::triangle_point;
use crate::optimize::nelder_mead;
use crate::{Error, Result};

/// Cross-coincidence window used when none is given.
pub const DEFAULT_COINCIDENCE_WINDOW_NS: u64 = 1_000;

/// Event counts of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CountsSummary {
    /// Pairs that produced the stream, when known.
    pub n_pairs_assumed: Option<u64>,
    pub singles_a: u64,
    pub singles_b: u64,
    pub doubles_a: u64,
    pub doubles_b: u64,
    pub cross: u64,
    /// Sum of inferred photon numbers per detector.
    pub photons_a: u64,
    pub photons_b: u64,
    pub window_ns: u64,
}

impl CountsSummary {
    pub fn singles(&self, det: DetectorId) -> u64 {
        match det {
            DetectorId::A => self.singles_a,
            DetectorId::B => self.singles_b,
        }
    }

    pub fn doubles(&self, det: DetectorId) -> u64 {
        match det {
            DetectorId::A => self.doubles_a,
            DetectorId::B => self.doubles_b,
        }
    }

    /// The same counts with the detector labels exchanged.
    pub fn swapped(&self) -> Self {
        CountsSummary {
            singles_a: self.singles_b,
            singles_b: self.singles_a,
            doubles_a: self.doubles_b,
            doubles_b: self.doubles_a,
            photons_a: self.photons_b,
            photons_b: self.photons_a,
            ..*self
        }
    }
}

/// Single-pass classifier.
///
/// Cross-coincidences pair an `n = 1` event at one detector with the
/// earliest still-unmatched `n = 1` event at the other detector no more than
/// `window_ns` earlier. Each event is used at most once.
#[derive(Debug, Clone)]
pub struct Classifier {
    summary: CountsSummary,
    pending: [VecDeque<u64>; 2],
    last_t_ns: Option<u64>,
    seen: usize,
}

impl Classifier {
    pub fn new(window_ns: u64) -> Self {
        Classifier {
            summary: CountsSummary {
                window_ns,
                ..CountsSummary::default()
            },
            pending: [VecDeque::new(), VecDeque::new()],
            last_t_ns: None,
            seen: 0,
        }
    }

    pub fn push(&mut self, event: &EventRecord) -> Result<()> {
        if self.last_t_ns.is_some_and(|last| event.t_ns < last) {
            return Err(Error::Unordered { index: self.seen });
        }
        self.last_t_ns = Some(event.t_ns);
        self.seen += 1;

        let s = &mut self.summary;
        match event.det {
            DetectorId::A => s.photons_a += u64::from(event.n_inferred),
            DetectorId::B => s.photons_b += u64::from(event.n_inferred),
        }
        match (event.n_inferred, event.det) {
            (2, DetectorId::A) => s.doubles_a += 1,
            (2, DetectorId::B) => s.doubles_b += 1,
            (1, det) => {
                match det {
                    DetectorId::A => s.singles_a += 1,
                    DetectorId::B => s.singles_b += 1,
                }
                let window = s.window_ns;
                let other = &mut self.pending[det.other().index()];
                while other.front().is_some_and(|&t| event.t_ns - t > window) {
                    other.pop_front();
                }
                if other.pop_front().is_some() {
                    s.cross += 1;
                } else {
                    self.pending[det.index()].push_back(event.t_ns);
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn extend<'a>(&mut self, events: impl IntoIterator<Item = &'a EventRecord>) -> Result<()> {
        events.into_iter().try_for_each(|e| self.push(e))
    }

    pub fn finish(self) -> CountsSummary {
        self.summary
    }
}

/// Counts for a bare event list; the pair count is left unknown.
pub fn classify(events: &[EventRecord], window_ns: u64) -> Result<CountsSummary> {
    let mut c = Classifier::new(window_ns);
    c.extend(events)?;
    Ok(c.finish())
}

/// Counts for a generated or loaded stream; the pair count comes from the
/// stream.
pub fn classify_stream(stream: &EventStream, window_ns: u64) -> Result<CountsSummary> {
    let mut summary = classify(&stream.events, window_ns)?;
    summary.n_pairs_assumed = Some(stream.pairs);
    Ok(summary)
}

/// Where the pair count used for normalisation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairNormalization {
    /// Known pair count (simulation header).
    Known,
    /// Reconstructed from detected photon totals and efficiencies.
    Inferred,
}

/// Reconstructed coincidence probabilities at one delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatedPoint {
    pub tau_fs: f64,
    pub p20: f64,
    pub p02: f64,
    pub p11: f64,
    pub p20_err: f64,
    pub p02_err: f64,
    pub p11_err: f64,
    /// Efficiencies below 1 were divided out.
    pub eta_corrected: bool,
    /// At least one count was zero, so its binomial error is zero too.
    pub degenerate: bool,
    pub normalization: PairNormalization,
}

fn check_eta(name: &'static str, eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, "efficiency must lie in (0, 1]"))
    }
}

/// Pair count implied by the detected photon totals.
///
/// Every pair delivers on average half a photon to each detector whatever the
/// delay, so `n ≈ photons_A/η_A + photons_B/η_B`.
pub fn infer_pair_count(summary: &CountsSummary, eta_a: f64, eta_b: f64) -> Result<f64> {
    check_eta("eta_a", eta_a)?;
    check_eta("eta_b", eta_b)?;
    let n = summary.photons_a as f64 / eta_a + summary.photons_b as f64 / eta_b;
    if n > 0.0 {
        Ok(n)
    } else {
        Err(Error::Degenerate("no detected photons"))
    }
}

/// Efficiency-corrected probabilities with binomial standard errors.
///
/// `P(2,0) = doubles_A/(n·η_A²)`, `P(0,2) = doubles_B/(n·η_B²)` and
/// `P(1,1) = cross/(n·η_A·η_B)`. Without a known pair count the count is
/// reconstructed with [`infer_pair_count`] and its uncertainty is folded
/// into every error.
pub fn estimate(summary: &CountsSummary, tau_fs: f64, eta_a: f64, eta_b: f64) -> Result<EstimatedPoint> {
    check_eta("eta_a", eta_a)?;
    check_eta("eta_b", eta_b)?;
    let (n, normalization, n_rel_err) = match summary.n_pairs_assumed {
        Some(0) => return Err(Error::Degenerate("zero pairs")),
        Some(n) => (n as f64, PairNormalization::Known, 0.0),
        None => {
            let n = infer_pair_count(summary, eta_a, eta_b)?;
            let photons = (summary.photons_a + summary.photons_b) as f64;
            (n, PairNormalization::Inferred, 1.0 / libm::sqrt(photons))
        }
    };
    let est = |k: u64, eff: f64| {
        let q = (k as f64 / n).min(1.0);
        let p = q / eff;
        let binomial = libm::sqrt(q * (1.0 - q) / n) / eff;
        let norm = p * n_rel_err;
        (p, libm::sqrt(binomial * binomial + norm * norm))
    };
    let (p20, p20_err) = est(summary.doubles_a, eta_a * eta_a);
    let (p02, p02_err) = est(summary.doubles_b, eta_b * eta_b);
    let (p11, p11_err) = est(summary.cross, eta_a * eta_b);
    Ok(EstimatedPoint {
        tau_fs,
        p20,
        p02,
        p11,
        p20_err,
        p02_err,
        p11_err,
        eta_corrected: eta_a != 1.0 || eta_b != 1.0,
        degenerate: summary.doubles_a == 0 || summary.doubles_b == 0 || summary.cross == 0,
        normalization,
    })
}

/// Detector efficiencies from heralded pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiencies {
    pub eta_a: f64,
    pub eta_b: f64,
    pub eta_a_err: f64,
    pub eta_b_err: f64,
}

fn klyshko_from(cross: f64, singles_a: f64, singles_b: f64) -> Option<(f64, f64)> {
    if singles_a <= 0.0 || singles_b <= 0.0 {
        return None;
    }
    let herald_b = cross / singles_b;
    let herald_a = cross / singles_a;
    let denom = 1.0 - herald_a * herald_b;
    if denom <= 0.0 {
        return None;
    }
    Some((
        4.0 * herald_b * (1.0 - herald_a) / denom,
        4.0 * herald_a * (1.0 - herald_b) / denom,
    ))
}

/// Absolute efficiencies from a run with distinguishable photons.
///
/// A photon registered alone at B has its partner routed toward A with
/// probability `1/(4 - η_B)` (beam splitter, then a half-transmitting
/// analyser in each arm), so the heralding ratio `cross/singles_B` equals
/// `η_A/(4 - η_B)`, and symmetrically for B. Solving the pair of relations
/// gives both efficiencies without knowing the pair count.
///
/// The counts must come from a delay far outside the dip. Errors treat the
/// three counts as independent Poisson variables.
pub fn klyshko_eta(summary: &CountsSummary) -> Result<Efficiencies> {
    let c = summary.cross as f64;
    let sa = summary.singles_a as f64;
    let sb = summary.singles_b as f64;
    let (eta_a, eta_b) =
        klyshko_from(c, sa, sb).ok_or(Error::Degenerate("no singles, or heralding ratios out of range"))?;

    let mut var = [0.0f64; 2];
    let counts = [c, sa, sb];
    for (i, &x) in counts.iter().enumerate() {
        if x <= 0.0 {
            continue;
        }
        let h = (x * 1e-6).max(1e-6);
        let mut up = counts;
        let mut down = counts;
        up[i] += h;
        down[i] -= h;
        if let (Some(u), Some(d)) = (
            klyshko_from(up[0], up[1], up[2]),
            klyshko_from(down[0], down[1], down[2]),
        ) {
            let da = (u.0 - d.0) / (2.0 * h);
            let db = (u.1 - d.1) / (2.0 * h);
            var[0] += da * da * x;
            var[1] += db * db * x;
        }
    }
    Ok(Efficiencies {
        eta_a,
        eta_b,
        eta_a_err: libm::sqrt(var[0]),
        eta_b_err: libm::sqrt(var[1]),
    })
}

/// Starting point for [`fit_visibility`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleGuess {
    pub center_fs: f64,
    pub width_fs: f64,
}

impl TriangleGuess {
    /// Centred dip of width `|L·D|`.
    pub fn from_crystal(crystal: &CrystalConfig) -> Self {
        TriangleGuess {
            center_fs: 0.0,
            width_fs: crystal.dip_width_fs(),
        }
    }
}

/// Triangle-model fit of a reconstructed curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityFit {
    /// Positive for a bosonic dip, negative for an inverted feature.
    pub visibility: f64,
    pub visibility_err: f64,
    pub center_fs: f64,
    /// Full base width of the triangle.
    pub width_fs: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// False when the feature is too shallow for width and centre to mean
    /// anything.
    pub width_identifiable: bool,
}

/// Minimum number of delays for [`fit_visibility`].
pub const MIN_FIT_POINTS: usize = 7;

const FIT_MAX_ITER: usize = 2_000;

struct FitData {
    // (tau, offset from the distinguishable value, triangle coefficient sign·scale, weight)
    rows: alloc::vec::Vec<(f64, f64, f64, f64)>,
    weighted: bool,
}

impl FitData {
    fn new(points: &[EstimatedPoint]) -> Self {
        let weighted = points.iter().all(|p| p.p11_err > 0.0 && p.p20_err > 0.0);
        let mut rows = alloc::vec::Vec::with_capacity(points.len() * 2);
        for p in points {
            let (w11, w20) = if weighted {
                (1.0 / (p.p11_err * p.p11_err), 1.0 / (p.p20_err * p.p20_err))
            } else {
                (1.0, 1.0)
            };
            rows.push((p.tau_fs, p.p11 - 0.125, -0.125, w11));
            rows.push((p.tau_fs, p.p20 - 0.0625, 0.0625, w20));
        }
        FitData { rows, weighted }
    }

    /// Best visibility, its curvature `Σwg²`, and the residual sum of squares
    /// for a fixed centre and width.
    fn profile(&self, center: f64, width: f64) -> (f64, f64, f64) {
        let width = width.abs();
        let shape = |tau: f64| {
            let unit = triangle_point(tau, center, width, crate::interference::ExchangeSign::Boson, 1.0);
            // overlap = 16·p20 - 1 for the unit-visibility triangle
            16.0 * unit.p20 - 1.0
        };
        let (mut sgg, mut sgz) = (0.0, 0.0);
        for &(tau, z, scale, w) in &self.rows {
            let g = scale * shape(tau);
            sgg += w * g * g;
            sgz += w * g * z;
        }
        let v = if sgg > 0.0 { sgz / sgg } else { 0.0 };
        let rss = self
            .rows
            .iter()
            .map(|&(tau, z, scale, w)| {
                let r = z - v * scale * shape(tau);
                w * r * r
            })
            .sum();
        (v, sgg, rss)
    }
}

/// Least-squares fit of the triangle model with free visibility, centre and
/// width, jointly to the `P(1,1)` and `P(2,0)` series.
///
/// Visibility enters linearly and is solved in closed form for each trial
/// centre and width; those two are searched with Nelder-Mead. Points are
/// weighted by their inverse variances when every error is positive.
pub fn fit_visibility(points: &[EstimatedPoint], guess: TriangleGuess) -> Result<VisibilityFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::invalid("points", "need at least 7 delays to fit the triangle"));
    }
    if !(guess.width_fs.is_finite() && guess.width_fs > 0.0 && guess.center_fs.is_finite()) {
        return Err(Error::invalid("guess", "initial width must be positive"));
    }
    let data = FitData::new(points);
    let scale = guess.width_fs;
    let min = nelder_mead(
        |x: &[f64; 2]| data.profile(x[0], x[1]).2,
        [guess.center_fs, guess.width_fs],
        [0.1 * scale, 0.1 * scale],
        1e-9 * scale,
        1e-15,
        FIT_MAX_ITER,
    );
    let (center, width) = (min.x[0], min.x[1].abs());
    let (v, sgg, rss) = data.profile(center, width);
    let dof = data.rows.len().saturating_sub(3).max(1) as f64;
    let visibility_err = if sgg <= 0.0 {
        0.0
    } else if data.weighted {
        libm::sqrt(1.0 / sgg)
    } else {
        libm::sqrt(rss / dof / sgg)
    };
    let fit = VisibilityFit {
        visibility: v,
        visibility_err,
        center_fs: center,
        width_fs: width,
        residual_norm: libm::sqrt(rss),
        iterations: min.iterations,
        converged: min.converged,
        width_identifiable: v.abs() > (3.0 * visibility_err).max(1e-6),
    };
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::NoConvergence(fit))
    }
}
