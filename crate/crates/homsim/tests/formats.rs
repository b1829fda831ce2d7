use homsim::curve_file::{self, CurveRow};
use homsim::event_file;
use homsim_core::acquisition::{generate, quantize_micro_ev, EventStream, RunConfig, RunLength};
use homsim_core::biphoton::CrystalConfig;
use homsim_core::detector::{DetectorId, DetectorModel, EventRecord};
use homsim_core::interference::ExchangeSign;
use proptest::prelude::*;

fn config(tau_fs: f64, seed: u64, length: RunLength, eta_a: f64, sign: ExchangeSign) -> RunConfig {
    RunConfig {
        pair_rate_hz: 1e3,
        length,
        tau_fs,
        crystal: CrystalConfig::new(0.5, 200.0, 351.1).unwrap(),
        sign,
        visibility: 0.75,
        detectors: [
            DetectorModel::tes(DetectorId::A).with_eta(eta_a).unwrap(),
            DetectorModel::tes(DetectorId::B),
        ],
        seed,
    }
}

fn record() -> impl Strategy<Value = (u64, bool, f64, u32)> {
    (0u64..1_000_000, any::<bool>(), 0.0f64..20.0, 0u32..12)
}

proptest! {
    #[test]
    fn event_file_round_trip(
        tau in -500.0f64..500.0,
        seed in any::<u64>(),
        eta in 0.01f64..=1.0,
        fermion in any::<bool>(),
        by_duration in any::<bool>(),
        pairs in 0u64..1000,
        mut raw in prop::collection::vec(record(), 0..50),
    ) {
        let length = if by_duration { RunLength::DurationSeconds(pairs as f64 / 7.0) } else { RunLength::PairCount(pairs) };
        let sign = if fermion { ExchangeSign::Fermion } else { ExchangeSign::Boson };
        raw.sort_by_key(|r| r.0);
        let events: Vec<EventRecord> = raw
            .iter()
            .map(|&(t_ns, a, e, n)| EventRecord {
                t_ns,
                det: if a { DetectorId::A } else { DetectorId::B },
                energy_ev: quantize_micro_ev(e),
                n_inferred: n,
            })
            .collect();
        let stream = EventStream { config: config(tau, seed, length, eta, sign), pairs, events };
        let bytes = event_file::to_bytes(&stream);
        let back = event_file::from_bytes(&bytes).unwrap().into_stream().unwrap();
        prop_assert_eq!(&back, &stream);
        prop_assert_eq!(event_file::to_bytes(&back), bytes);
    }

    #[test]
    fn curve_round_trip(values in prop::collection::vec(prop::array::uniform7(-1e6f64..1e6), 0..30)) {
        let rows: Vec<CurveRow> = values
            .iter()
            .map(|v| CurveRow { tau_fs: v[0], p20: v[1], p20_err: v[2], p02: v[3], p02_err: v[4], p11: v[5], p11_err: v[6] })
            .collect();
        let bytes = curve_file::to_bytes(&rows);
        prop_assert_eq!(curve_file::read(&bytes[..]).unwrap(), rows);
    }
}

#[test]
fn generated_runs_round_trip() {
    for seed in 0..4 {
        let stream = generate(&config(25.0 * seed as f64, seed, RunLength::PairCount(3000), 0.6, ExchangeSign::Boson)).unwrap();
        assert!(!stream.events.is_empty());
        let back = event_file::from_bytes(&event_file::to_bytes(&stream)).unwrap();
        assert_eq!(back.into_stream().unwrap(), stream);
    }
}
