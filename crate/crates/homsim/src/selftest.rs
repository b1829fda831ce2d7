//! Fast invariant checks behind `homsim selftest`.

use std::io::Write;

use homsim_core::acquisition::{generate, outcome_distribution, RunConfig, RunLength};
use homsim_core::analysis::{classify_stream, estimate, DEFAULT_COINCIDENCE_WINDOW_NS};
use homsim_core::biphoton::CrystalConfig;
use homsim_core::detector::{infer_count, measure_energy, thin, DetectorId, DetectorModel};
use homsim_core::interference::{sweep, triangle_oracle, DelaySetting, ExchangeSign};
use rand::SeedableRng;

type Check = (&'static str, fn() -> Result<(), String>);

fn crystal() -> CrystalConfig {
    CrystalConfig::new(0.5, 200.0, 351.1).expect("valid crystal")
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn boson_limit() -> Result<(), String> {
    let p = sweep(&crystal(), &[DelaySetting::new(0.0).map_err(err)?], ExchangeSign::Boson, 1.0).map_err(err)?.points[0];
    ensure((p.p20 - 0.125).abs() < 1e-6 && p.p11.abs() < 1e-6, || format!("{p:?}"))
}

fn binomial_limit() -> Result<(), String> {
    let c = crystal();
    let tau = DelaySetting::new(2.0 * c.dip_width_fs()).map_err(err)?;
    let p = sweep(&c, &[tau], ExchangeSign::Boson, 1.0).map_err(err)?.points[0];
    ensure((p.p20 - 0.0625).abs() < 1e-4 && (p.p11 - 0.125).abs() < 1e-4, || format!("{p:?}"))
}

fn complementarity() -> Result<(), String> {
    let taus = DelaySetting::linspace(-200.0, 200.0, 101).map_err(err)?;
    for sign in [ExchangeSign::Boson, ExchangeSign::Fermion] {
        for v in [0.0, 0.5, 1.0] {
            for p in sweep(&crystal(), &taus, sign, v).map_err(err)?.points {
                ensure((p.total() - 0.25).abs() < 1e-9, || format!("{sign:?} v={v} {p:?}"))?;
            }
        }
    }
    Ok(())
}

fn triangle() -> Result<(), String> {
    let c = crystal();
    let w = c.dip_width_fs();
    let taus = DelaySetting::linspace(-2.0 * w, 2.0 * w, 101).map_err(err)?;
    let curve = sweep(&c, &taus, ExchangeSign::Boson, 1.0).map_err(err)?;
    for (p, t) in curve.points.iter().zip(&taus) {
        let o = triangle_oracle(&c, *t, ExchangeSign::Boson);
        ensure((p.p11 - o.p11).abs() < 2e-4 && (p.p20 - o.p20).abs() < 2e-4, || format!("{p:?} vs {o:?}"))?;
    }
    Ok(())
}

fn thinning() -> Result<(), String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let n = 100_000u32;
    let hits: u32 = (0..n).map(|_| thin(1, 0.2, &mut rng)).sum();
    let mean = f64::from(hits) / f64::from(n);
    let sigma = (0.16 / f64::from(n)).sqrt();
    ensure((mean - 0.2).abs() < 3.0 * sigma, || format!("mean {mean}"))
}

fn readout_identity() -> Result<(), String> {
    let m = DetectorModel::tes(DetectorId::A).with_fwhm(0.0).map_err(err)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    for n in 0..20 {
        let back = infer_count(measure_energy(n, &m, &mut rng), &m);
        ensure(back == n, || format!("{n} read back as {back}"))?;
    }
    Ok(())
}

fn small_run(seed: u64) -> RunConfig {
    let m = |id| DetectorModel::tes(id).with_eta(1.0).expect("valid eta");
    RunConfig {
        pair_rate_hz: 1.0,
        length: RunLength::PairCount(100_000),
        tau_fs: 0.0,
        crystal: crystal(),
        sign: ExchangeSign::Boson,
        visibility: 1.0,
        detectors: [m(DetectorId::A), m(DetectorId::B)],
        seed,
    }
}

fn table_and_replay() -> Result<(), String> {
    let c = small_run(5);
    let point = sweep(&c.crystal, &[DelaySetting::new(30.0).map_err(err)?], c.sign, 1.0).map_err(err)?.points[0];
    let t = outcome_distribution(&point).map_err(err)?;
    ensure((t.total() - 1.0).abs() < 1e-12, || format!("table sums to {}", t.total()))?;
    let a = generate(&c).map_err(err)?;
    let b = generate(&c).map_err(err)?;
    ensure(a == b, || "same seed gave different streams".into())
}

fn closed_loop() -> Result<(), String> {
    let c = small_run(6);
    let s = generate(&c).map_err(err)?;
    let counts = classify_stream(&s, DEFAULT_COINCIDENCE_WINDOW_NS).map_err(err)?;
    let p = estimate(&counts, 0.0, 1.0, 1.0).map_err(err)?;
    ensure((p.p20 - 0.125).abs() <= 3.0 * p.p20_err && p.p11 == 0.0, || format!("{p:?}"))
}

const CHECKS: [Check; 8] = [
    ("boson limit at the dip centre", boson_limit),
    ("binomial limit far from the dip", binomial_limit),
    ("probabilities sum to 1/4", complementarity),
    ("quadrature matches the triangle", triangle),
    ("binomial thinning mean", thinning),
    ("noiseless read-out recovers photon number", readout_identity),
    ("outcome table and deterministic replay", table_and_replay),
    ("closed loop at the dip centre", closed_loop),
];

/// Runs every check, printing one line each. True when all pass.
pub fn run(log: &mut dyn Write) -> bool {
    let mut all = true;
    for (name, check) in CHECKS {
        match check() {
            Ok(()) => {
                let _ = writeln!(log, "PASS  {name}");
            }
            Err(why) => {
                all = false;
                let _ = writeln!(log, "FAIL  {name}: {why}");
            }
        }
    }
    all
}
