use core::f64::consts::PI;

use homsim_core::biphoton::{
    mismatch, sinc_state_function, to_spectral, to_temporal, CrystalConfig, GridSpec,
    SpectralAmplitude,
};
use homsim_core::interference::{sweep_on_grid, DelaySetting, ExchangeSign};
use proptest::prelude::*;

fn crystal() -> CrystalConfig {
    CrystalConfig::new(0.5, 200.0, 351.1).unwrap()
}

#[test]
fn normalised_and_parseval() {
    let c = crystal();
    let s = sinc_state_function(&c, GridSpec::for_crystal(&c)).unwrap();
    let t = to_temporal(&s);
    assert!((s.norm() - 1.0).abs() < 1e-9);
    assert!((t.norm() - 1.0).abs() < 1e-9);
    assert!((s.norm() - t.norm()).abs() < 1e-9);
}

#[test]
fn first_zero_of_sinc_state() {
    // sin((L/2)·D·ω) first vanishes at ω = 2π/(L·D). Pick a grid whose step
    // divides that frequency so the zero is sampled.
    let c = crystal();
    let zero = 2.0 * PI / (c.length_mm() * c.dvg_fs_per_mm());
    let per_spacing = 20;
    let spacings = 240;
    let grid = GridSpec {
        span: spacings as f64 * zero,
        points: spacings * per_spacing + 1,
    };
    let s = sinc_state_function(&c, grid).unwrap();
    let mid = (s.len() - 1) / 2;
    let k = mid + per_spacing;
    assert!((s.omega(k) - zero).abs() < 1e-12 * zero);
    let peak = s.values()[mid].norm();
    assert!(s.values()[k].norm() < 1e-12 * peak);
    // The samples on either side are not zero: it is a genuine root.
    assert!(s.values()[k - 1].norm() > 1e-3 * peak);
    assert!(s.values()[k + 1].norm() > 1e-3 * peak);
    // And it is the first one.
    assert!(s.values()[mid..k].iter().all(|v| v.norm() > 1e-6 * peak));
}

#[test]
fn gaussian_transforms_to_gaussian() {
    // |Φ̃|² ∝ exp(-ω²/(2σ²))  ⇒  |Φ(t)| ∝ exp(-σ²t²), peak height (2σ²/π)^{1/4}.
    let sigma = 0.02;
    let s = SpectralAmplitude::gaussian(sigma, GridSpec { span: 40.0 * sigma, points: 1001 }).unwrap();
    let t = to_temporal(&s);
    let peak = (2.0 * sigma * sigma / PI).powf(0.25);
    for (k, v) in t.values().iter().enumerate() {
        let time = t.time(k);
        let expected = peak * (-sigma * sigma * time * time).exp();
        assert!((v.norm() - expected).abs() <= 0.01 * peak, "t={time}");
    }
}

#[test]
fn sinc_state_is_a_rectangle_in_time() {
    // Fourier transform of sinc(L·D·ω/2)·exp(i·L·D·ω/2) with e^{+iωt} is a
    // rectangle on [-L·D, 0].
    let c = crystal();
    let t = to_temporal(&sinc_state_function(&c, GridSpec::for_crystal(&c)).unwrap());
    let w = c.walkoff_fs();
    let inside: f64 = t
        .values()
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let time = t.time(*k);
            time >= -w && time <= 0.0
        })
        .map(|(_, v)| v.norm_sqr() * t.step())
        .sum();
    assert!(inside >= 0.95, "{inside}");
    // roughly flat inside: density ≈ 1/W away from the edges
    let mid = (t.len() - 1) / 2;
    let centre = (mid as f64 - (w / 2.0) / t.step()).round() as usize;
    let density = t.values()[centre].norm_sqr();
    assert!((density * w - 1.0).abs() < 0.05, "{}", density * w);
}

#[test]
fn round_trip_identity() {
    let c = crystal();
    let s = sinc_state_function(&c, GridSpec::for_crystal(&c)).unwrap();
    let back = to_spectral(&to_temporal(&s));
    assert_eq!(back.len(), s.len());
    assert!((back.step() - s.step()).abs() < 1e-15 * s.step());
    for (a, b) in s.values().iter().zip(back.values()) {
        assert!((a - b).norm() < 1e-9);
    }
}

#[test]
fn doubling_grid_points_converges() {
    let c = crystal();
    let coarse = GridSpec::for_crystal(&c);
    let fine = GridSpec {
        span: coarse.span,
        points: 2 * coarse.points - 1,
    };
    let taus = DelaySetting::linspace(-200.0, 200.0, 41).unwrap();
    for sign in [ExchangeSign::Boson, ExchangeSign::Fermion] {
        let a = sweep_on_grid(&c, coarse, &taus, sign, 1.0).unwrap();
        let b = sweep_on_grid(&c, fine, &taus, sign, 1.0).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p.p20 - q.p20).abs() < 1e-6, "{p:?} {q:?}");
            assert!((p.p11 - q.p11).abs() < 1e-6, "{p:?} {q:?}");
        }
    }
}

proptest! {
    #[test]
    fn mismatch_is_linear_and_odd(d in -500.0f64..500.0, w in -1.0f64..1.0, a in -10.0f64..10.0) {
        prop_assume!(d != 0.0);
        let c = CrystalConfig::new(0.5, d, 351.1).unwrap();
        prop_assert_eq!(mismatch(&c, -w), -mismatch(&c, w));
        prop_assert!((mismatch(&c, a * w) - a * mismatch(&c, w)).abs() <= 1e-12 * (1.0 + (a * d * w).abs()));
    }

    #[test]
    fn any_crystal_state_is_normalised(l in 0.1f64..3.0, d in 20.0f64..400.0, neg in any::<bool>()) {
        let d = if neg { -d } else { d };
        let c = CrystalConfig::new(l, d, 351.1).unwrap();
        let s = sinc_state_function(&c, GridSpec::with_zero_spacings(&c, 240.0, 1025)).unwrap();
        let t = to_temporal(&s);
        prop_assert!((s.norm() - 1.0).abs() < 1e-9);
        prop_assert!((t.norm() - 1.0).abs() < 1e-9);
    }
}
