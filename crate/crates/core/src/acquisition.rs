//! Monte Carlo run of the coincidence experiment.
//!
//! Pairs arrive as a homogeneous Poisson process. Each pair is routed to one
//! of six outcomes (photons reaching A and B after the beam splitter and the
//! 45° analysers), then each detector applies its own efficiency loss,
//! pileup window and energy read-out.
//!
//! Random streams are ChaCha8 keyed by the run seed. Stream 0 drives pair
//! arrival and routing, stream 1 detector A and stream 2 detector B, so the
//! same configuration always replays the same events.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::biphoton::CrystalConfig;
use crate::detector::{
    infer_count, measure_energy, thin, AbsorptionGroup, Arrival, DetectorId, DetectorModel,
    EventRecord, PileupMerger,
};
use crate::interference::{theory_point, DelaySetting, ExchangeSign, InterferencePoint};
use crate::{Error, Result};

/// Stream index driving pair arrivals and routing.
pub const SOURCE_STREAM: u64 = 0;

/// Independent ChaCha8 stream `index` for a run seed. Detector `d` uses
/// stream `1 + d.index()`.
pub fn derive_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Run length: a wall-clock duration or an exact pair count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunLength {
    DurationSeconds(f64),
    PairCount(u64),
}

/// Everything needed to replay one acquisition run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Pairs per second arriving at the beam splitter.
    pub pair_rate_hz: f64,
    pub length: RunLength,
    /// Relative delay from the dip centre, fs.
    pub tau_fs: f64,
    pub crystal: CrystalConfig,
    pub sign: ExchangeSign,
    pub visibility: f64,
    pub detectors: [DetectorModel; 2],
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pair_rate_hz.is_finite() && self.pair_rate_hz > 0.0) {
            return Err(Error::invalid("pair_rate_hz", "pair rate must be positive"));
        }
        match self.length {
            RunLength::DurationSeconds(d) if !(d.is_finite() && d > 0.0) => {
                return Err(Error::invalid("duration_s", "duration must be positive"));
            }
            _ => {}
        }
        DelaySetting::new(self.tau_fs)?;
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::invalid("visibility", "must lie in [0, 1]"));
        }
        if self.detectors[0].id() != DetectorId::A || self.detectors[1].id() != DetectorId::B {
            return Err(Error::invalid("detectors", "expected detectors ordered (A, B)"));
        }
        Ok(())
    }

    pub fn detector(&self, id: DetectorId) -> &DetectorModel {
        &self.detectors[id.index()]
    }
}

/// Photons reaching (A, B) for one pair, before detector losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairOutcome {
    /// (2,0)
    BothA,
    /// (0,2)
    BothB,
    /// (1,1)
    Split,
    /// (1,0)
    OnlyA,
    /// (0,1)
    OnlyB,
    /// (0,0)
    Neither,
}

impl PairOutcome {
    pub const ALL: [PairOutcome; 6] = [
        PairOutcome::BothA,
        PairOutcome::BothB,
        PairOutcome::Split,
        PairOutcome::OnlyA,
        PairOutcome::OnlyB,
        PairOutcome::Neither,
    ];

    /// Photon counts reaching (A, B).
    pub fn counts(self) -> (u32, u32) {
        match self {
            PairOutcome::BothA => (2, 0),
            PairOutcome::BothB => (0, 2),
            PairOutcome::Split => (1, 1),
            PairOutcome::OnlyA => (1, 0),
            PairOutcome::OnlyB => (0, 1),
            PairOutcome::Neither => (0, 0),
        }
    }

    fn index(self) -> usize {
        match self {
            PairOutcome::BothA => 0,
            PairOutcome::BothB => 1,
            PairOutcome::Split => 2,
            PairOutcome::OnlyA => 3,
            PairOutcome::OnlyB => 4,
            PairOutcome::Neither => 5,
        }
    }
}

/// Probability of each [`PairOutcome`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeTable {
    probs: [f64; 6],
}

impl OutcomeTable {
    pub fn probability(&self, outcome: PairOutcome) -> f64 {
        self.probs[outcome.index()]
    }

    /// Probabilities in [`PairOutcome::ALL`] order.
    pub fn as_array(&self) -> [f64; 6] {
        self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PairOutcome {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for outcome in PairOutcome::ALL {
            acc += self.probs[outcome.index()];
            if u < acc {
                return outcome;
            }
        }
        PairOutcome::Neither
    }
}

/// Six-outcome routing table for one interference point.
///
/// Each analyser passes half the photons, so a quarter of pairs lose exactly
/// the photon that would have reached A, a quarter the one that would have
/// reached B, and a quarter lose both. Only the two-survivor outcomes depend
/// on the delay.
pub fn outcome_distribution(point: &InterferencePoint) -> Result<OutcomeTable> {
    point.check()?;
    Ok(OutcomeTable {
        probs: [point.p20, point.p02, point.p11, 0.25, 0.25, 0.25],
    })
}

/// Events of one run, time-ordered, plus the number of pairs generated.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub config: RunConfig,
    pub pairs: u64,
    pub events: Vec<EventRecord>,
}

struct DetectorChain {
    model: DetectorModel,
    rng: ChaCha8Rng,
    merger: PileupMerger,
    events: Vec<EventRecord>,
}

impl DetectorChain {
    fn new(model: DetectorModel, seed: u64) -> Self {
        DetectorChain {
            rng: derive_stream(seed, 1 + model.id().index() as u64),
            merger: PileupMerger::new(&model),
            model,
            events: Vec::new(),
        }
    }

    /// `incident` photons of `quanta` signal-photon energies each.
    fn absorb(&mut self, t_ns: u64, incident: u32, quanta: u32) {
        let photons = thin(incident, self.model.eta(), &mut self.rng) * quanta;
        if photons == 0 {
            return;
        }
        if let Some(group) = self.merger.push(Arrival { t_ns, photons }) {
            self.read_out(group);
        }
    }

    fn read_out(&mut self, group: AbsorptionGroup) {
        let energy = quantize_micro_ev(measure_energy(group.photons, &self.model, &mut self.rng));
        self.events.push(EventRecord {
            t_ns: group.t_ns,
            det: self.model.id(),
            energy_ev: energy,
            n_inferred: infer_count(energy, &self.model),
        });
    }

    fn finish(mut self) -> Vec<EventRecord> {
        if let Some(group) = self.merger.finish() {
            self.read_out(group);
        }
        self.events
    }
}

/// Rounds to whole micro-eV, the precision of the event file.
pub fn quantize_micro_ev(energy_ev: f64) -> f64 {
    libm::round(energy_ev * 1e6) / 1e6
}

/// Runs the Monte Carlo experiment.
///
/// Both photons of a same-port outcome share one timestamp, so they always
/// land in one absorption group and read out as a single 2E event.
pub fn generate(config: &RunConfig) -> Result<EventStream> {
    config.validate()?;
    let point = theory_point(
        &config.crystal,
        DelaySetting::new(config.tau_fs)?,
        config.sign,
        config.visibility,
    )?;
    let table = outcome_distribution(&point)?;
    generate_with_table(config, &table)
}

/// Runs the Monte Carlo experiment with an explicit routing table.
pub fn generate_with_table(config: &RunConfig, table: &OutcomeTable) -> Result<EventStream> {
    generate_contaminated(config, table, &[])
}

/// A stray pump photon reaching one detector. It carries twice the signal
/// photon energy, so once absorbed it reads out exactly like a coalesced
/// pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contaminant {
    pub t_ns: u64,
    pub det: DetectorId,
}

/// [`generate_with_table`] plus time-ordered pump-leakage arrivals.
///
/// Contaminants pass the same efficiency loss and pileup window as signal
/// photons. They are not counted as pairs.
pub fn generate_contaminated(
    config: &RunConfig,
    table: &OutcomeTable,
    contaminants: &[Contaminant],
) -> Result<EventStream> {
    config.validate()?;
    if let Some(i) = contaminants.windows(2).position(|w| w[1].t_ns < w[0].t_ns) {
        return Err(Error::Unordered { index: i + 1 });
    }
    let mut stray = contaminants.iter().peekable();
    let mut source = derive_stream(config.seed, SOURCE_STREAM);
    let gaps = Exp::new(config.pair_rate_hz)
        .map_err(|_| Error::invalid("pair_rate_hz", "pair rate must be positive"))?;
    let mut chains = [
        DetectorChain::new(config.detectors[0], config.seed),
        DetectorChain::new(config.detectors[1], config.seed),
    ];

    let mut t_s = 0.0f64;
    let mut pairs = 0u64;
    loop {
        if let RunLength::PairCount(n) = config.length {
            if pairs == n {
                break;
            }
        }
        t_s += gaps.sample(&mut source);
        if let RunLength::DurationSeconds(d) = config.length {
            if t_s > d {
                break;
            }
        }
        pairs += 1;
        let t_ns = libm::round(t_s * 1e9) as u64;
        while let Some(c) = stray.next_if(|c| c.t_ns < t_ns) {
            chains[c.det.index()].absorb(c.t_ns, 1, 2);
        }
        let (to_a, to_b) = table.sample(&mut source).counts();
        if to_a > 0 {
            chains[0].absorb(t_ns, to_a, 1);
        }
        if to_b > 0 {
            chains[1].absorb(t_ns, to_b, 1);
        }
    }
    for c in stray {
        chains[c.det.index()].absorb(c.t_ns, 1, 2);
    }

    let [a, b] = chains;
    let events = merge_by_time(a.finish(), b.finish());
    Ok(EventStream {
        config: config.clone(),
        pairs,
        events,
    })
}

fn merge_by_time(a: Vec<EventRecord>, b: Vec<EventRecord>) -> Vec<EventRecord> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut ia = a.into_iter().peekable();
    let mut ib = b.into_iter().peekable();
    loop {
        let take_a = match (ia.peek(), ib.peek()) {
            (Some(x), Some(y)) => x.t_ns <= y.t_ns,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        let next = if take_a { ia.next() } else { ib.next() };
        out.extend(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(length: RunLength) -> RunConfig {
        RunConfig {
            pair_rate_hz: 10.0,
            length,
            tau_fs: 0.0,
            crystal: CrystalConfig::new(0.5, 200.0, 351.1).unwrap(),
            sign: ExchangeSign::Boson,
            visibility: 1.0,
            detectors: [DetectorModel::tes(DetectorId::A), DetectorModel::tes(DetectorId::B)],
            seed: 7,
        }
    }

    #[test]
    fn empty_run() {
        let s = generate(&config(RunLength::PairCount(0))).unwrap();
        assert_eq!(s.pairs, 0);
        assert!(s.events.is_empty());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = config(RunLength::PairCount(10));
        c.pair_rate_hz = 0.0;
        assert!(generate(&c).is_err());
        let mut c = config(RunLength::DurationSeconds(-1.0));
        assert!(generate(&c).is_err());
        c.length = RunLength::PairCount(1);
        c.detectors.swap(0, 1);
        assert!(generate(&c).is_err());
    }

    #[test]
    fn duration_bounds_timestamps() {
        let s = generate(&config(RunLength::DurationSeconds(100.0))).unwrap();
        assert!(s.pairs > 500 && s.pairs < 1500, "{}", s.pairs);
        assert!(s.events.iter().all(|e| e.t_ns <= 100_000_000_000));
    }

    #[test]
    fn merge_keeps_a_first_on_ties() {
        let e = |t, det| EventRecord { t_ns: t, det, energy_ev: 1.0, n_inferred: 1 };
        let merged = merge_by_time(
            alloc::vec![e(1, DetectorId::A), e(5, DetectorId::A)],
            alloc::vec![e(1, DetectorId::B), e(3, DetectorId::B)],
        );
        let order: Vec<(u64, DetectorId)> = merged.iter().map(|e| (e.t_ns, e.det)).collect();
        assert_eq!(
            order,
            [(1, DetectorId::A), (1, DetectorId::B), (3, DetectorId::B), (5, DetectorId::A)]
        );
    }

    #[test]
    fn leakage_mimics_coalescence() {
        let mut c = config(RunLength::PairCount(0));
        c.detectors = [
            DetectorModel::tes(DetectorId::A).with_eta(1.0).unwrap().with_fwhm(0.0).unwrap(),
            DetectorModel::tes(DetectorId::B).with_eta(1.0).unwrap().with_fwhm(0.0).unwrap(),
        ];
        let table = outcome_distribution(&InterferencePoint::distinguishable(0.0)).unwrap();
        let stray = [
            Contaminant { t_ns: 10, det: DetectorId::B },
            Contaminant { t_ns: 100_000, det: DetectorId::A },
        ];
        let s = generate_contaminated(&c, &table, &stray).unwrap();
        assert_eq!(s.pairs, 0);
        let seen: Vec<(u64, DetectorId, u32)> = s.events.iter().map(|e| (e.t_ns, e.det, e.n_inferred)).collect();
        assert_eq!(seen, [(10, DetectorId::B, 2), (100_000, DetectorId::A, 2)]);
        assert!(generate_contaminated(&c, &table, &[stray[1], stray[0]]).is_err());
    }

    #[test]
    fn table_rejects_bad_point() {
        let p = InterferencePoint { tau_fs: 0.0, p20: 0.2, p02: 0.2, p11: 0.2 };
        assert!(outcome_distribution(&p).is_err());
    }
}
