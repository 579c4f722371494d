//! Rates, line shifts and coherence against independent routes and the
//! scaling laws of the thick- and thin-film regimes.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use spinflip_core::atomics::{thermal_photon_number, PhysicalConstants, SpinVector};
use spinflip_core::green_kernel::SeparationAxis;
use spinflip_core::layered_media::{LayerStack, PermittivityModel};
use spinflip_core::rates_coherence::{
    alpha_from_small_l, apply_thermal, fit_asymptotic_exponent, rho12_from_parts, short_time_decoherence, Engine,
};

const C: PhysicalConstants = PhysicalConstants::CODATA_2018;
const UM: f64 = 1e-6;

fn omega() -> f64 {
    2.0 * PI * 560e3
}

fn metal(delta_um: f64) -> LayerStack {
    LayerStack::half_space(PermittivityModel::drude(delta_um * UM).unwrap())
}

fn thin_film(h_um: f64, delta_um: f64) -> LayerStack {
    LayerStack::film_on_substrate(
        PermittivityModel::drude(delta_um * UM).unwrap(),
        h_um * UM,
        PermittivityModel::constant(Complex64::new(3.9, 0.0)).unwrap(),
    )
    .unwrap()
}

fn spin() -> SpinVector {
    SpinVector::rb87_trapped()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn closed_form_matches_general_contraction() {
    let e = Engine::default();
    for (stack, d) in [
        (metal(110.0), 10.0),
        (metal(110.0), 5.0),
        (metal(15.0), 20.0),
        (thin_film(1.0, 110.0), 30.0),
    ] {
        let (closed, _) = e.gamma12_closed_form(d * UM, omega(), &stack).unwrap();
        let (general, _) = e.gamma_general(d * UM, omega(), &stack, &spin()).unwrap();
        assert!(closed > 0.0);
        assert!(rel(general, closed) < 1e-5, "d = {d}: {general} vs {closed}");
    }
}

#[test]
fn thick_film_rate_ratio_approaches_inverse_distance() {
    // Gamma ~ 1/d needs delta >> d. At delta = 110 um the d = 5 / 10 um
    // ratio still carries the first correction in d/delta; it must sit
    // above 2 and fall towards 2 as delta grows.
    let e = Engine::default();
    let ratio = |delta: f64| {
        let s = metal(delta);
        let a = e.gamma12_closed_form(5.0 * UM, omega(), &s).unwrap().0;
        let b = e.gamma12_closed_form(10.0 * UM, omega(), &s).unwrap().0;
        a / b
    };
    let r110 = ratio(110.0);
    let r300 = ratio(300.0);
    let r1000 = ratio(1000.0);
    assert!(r110 > r300 && r300 > r1000 && r1000 > 2.0, "{r110} {r300} {r1000}");
    assert!(r110 < 2.3, "{r110}");
    assert!(rel(r1000, 2.0) < 0.05, "{r1000}");
}

#[test]
fn thin_film_rate_ratio_is_four() {
    let e = Engine::default();
    let s = thin_film(1.0, 110.0);
    let a = e.gamma12_closed_form(20.0 * UM, omega(), &s).unwrap().0;
    let b = e.gamma12_closed_form(40.0 * UM, omega(), &s).unwrap().0;
    assert!(rel(a / b, 4.0) < 0.05, "{}", a / b);
}

#[test]
fn thin_film_sweep_exponent() {
    let e = Engine::default();
    let s = thin_film(1.0, 110.0);
    let ds: Vec<f64> = (0..9).map(|k| (10.0 + 5.0 * k as f64) * UM).collect();
    let gs: Vec<f64> = ds
        .iter()
        .map(|&d| e.gamma12_closed_form(d, omega(), &s).unwrap().0)
        .collect();
    let fit = fit_asymptotic_exponent(&ds, &gs).unwrap();
    assert!((fit.exponent - 2.0).abs() < 0.05, "{fit:?}");
}

#[test]
fn line_shift_same_order_as_rate() {
    let e = Engine::default();
    let s = metal(110.0);
    for d in [5.0, 10.0, 20.0] {
        let r = e.rate(d * UM, omega(), &s, &spin(), 0.0).unwrap();
        let ratio = r.delta_omega.abs() / r.gamma12;
        assert!((0.01..=100.0).contains(&ratio), "d = {d}: {ratio}");
        let (shift, _) = e.line_shift(d * UM, omega(), &s, &spin()).unwrap();
        assert_eq!(shift, r.delta_omega);
    }
    let (v, _) = e.line_shift(10.0 * UM, omega(), &LayerStack::vacuum(), &spin()).unwrap();
    assert_eq!(v, 0.0);
    let (a, _) = e.line_shift(10.0 * UM, omega(), &s, &spin()).unwrap();
    let (b, _) = e.line_shift(10.0 * UM, omega(), &s, &spin().scaled(3.0)).unwrap();
    assert!(rel(b, 9.0 * a) < 1e-12);
}

#[test]
fn room_temperature_thermal_factor() {
    let w = omega();
    let t = 300.0;
    let direct = thermal_photon_number(w, t, &C).unwrap() + 1.0;
    let expansion = C.k_b * t / (C.hbar * w) + 0.5;
    assert!(rel(expansion, direct) < 1e-6);
    assert_eq!(apply_thermal(2.5, w, t, &C).unwrap(), 2.5 * direct);
    assert_eq!(apply_thermal(2.5, w, 0.0, &C).unwrap(), 2.5);
    let t_ln2 = C.hbar * w / (C.k_b * LN_2);
    assert!(rel(apply_thermal(2.5, w, t_ln2, &C).unwrap(), 5.0) < 1e-14);
}

#[test]
fn rate_result_thermal_fields() {
    let e = Engine::default();
    let s = metal(110.0);
    let cold = e.rate(10.0 * UM, omega(), &s, &spin(), 0.0).unwrap();
    let warm = e.rate(10.0 * UM, omega(), &s, &spin(), 300.0).unwrap();
    assert_eq!(cold.thermal_factor, 1.0);
    assert!(warm.thermal_factor > 1.0);
    assert_eq!(warm.gamma12, cold.gamma12 * warm.thermal_factor);
    assert_eq!(warm.delta_omega, cold.delta_omega);
}

#[test]
fn small_l_law_against_quadrature() {
    let e = Engine::default().with_tolerance(1e-10);
    for (stack, d) in [(metal(110.0), 10.0), (metal(110.0), 5.0), (thin_film(1.0, 110.0), 30.0)] {
        let d = d * UM;
        let c2 = e.small_l_coefficient(d, omega(), &stack).unwrap();
        let l = d / 20.0;
        let s = e.coherence_s(l, d, omega(), &stack, &spin()).unwrap();
        assert!((s - (1.0 - c2 * l * l)).abs() < 1e-3, "{s} vs {}", 1.0 - c2 * l * l);
    }
}

#[test]
fn small_l_remainder_is_quartic() {
    let e = Engine::default().with_tolerance(1e-12);
    let stack = metal(110.0);
    let d = 10.0 * UM;
    let c2 = e.small_l_coefficient(d, omega(), &stack).unwrap();
    let remainder = |l: f64| {
        let s = e.coherence_s(l, d, omega(), &stack, &spin()).unwrap();
        (s - (1.0 - c2 * l * l)).abs()
    };
    let r = [remainder(d / 4.0), remainder(d / 8.0), remainder(d / 16.0)];
    for w in r.windows(2) {
        let reduction = w[0] / w[1];
        assert!((reduction - 16.0).abs() < 0.3 * 16.0, "{r:?}");
    }
}

#[test]
fn small_l_coefficient_tracks_local_exponent() {
    // c2 = 5 n(n+1)/(96 d^2) with the local exponent n measured from the
    // rates themselves; exact in any monomial regime.
    let e = Engine::default();
    let stack = metal(1000.0);
    let d = 5.0 * UM;
    let c2 = e.small_l_coefficient(d, omega(), &stack).unwrap();
    let ds = [d * 0.9, d, d * 1.1];
    let gs: Vec<f64> = ds.iter().map(|&x| e.gamma12_closed_form(x, omega(), &stack).unwrap().0).collect();
    let n = fit_asymptotic_exponent(&ds, &gs).unwrap().exponent;
    let expected = 5.0 * n * (n + 1.0) / (96.0 * d * d);
    assert!(rel(c2, expected) < 0.02, "{c2} vs {expected} (n = {n})");
}

#[test]
fn short_time_law_matches_full_formula() {
    let e = Engine::default();
    let stack = metal(1000.0);
    let d = 5.0 * UM;
    let l = d / 10.0;
    let (gamma, _) = e.gamma_general(d, omega(), &stack, &spin()).unwrap();
    let s = e.coherence_s(l, d, omega(), &stack, &spin()).unwrap();
    let t = 1.0 / gamma / 20.0;
    let full = (rho12_from_parts(t, gamma, s).unwrap() - 1.0).abs();
    let linear = short_time_decoherence(t, l, d, gamma, 1.0);
    assert!(rel(linear, full) < 0.1, "{linear} vs {full}");
    let c2 = e.small_l_coefficient(d, omega(), &stack).unwrap();
    assert!((alpha_from_small_l(c2, d) - 1.0).abs() < 0.05);
}

#[test]
fn coherence_is_real_and_temperature_free() {
    let e = Engine::default();
    let stack = metal(110.0);
    for l in [0.0, 3.0, 25.0, 80.0] {
        let (s, _) = e.coherence_s_complex(l * UM, 10.0 * UM, omega(), &stack, &spin()).unwrap();
        assert!(s.im.abs() < 1e-10, "l = {l}: {s}");
    }
    let times = [0.0, 1.0, 10.0];
    let cold = e.coherence(20.0 * UM, 10.0 * UM, omega(), &stack, &spin(), 0.0, &times).unwrap();
    let warm = e.coherence(20.0 * UM, 10.0 * UM, omega(), &stack, &spin(), 300.0, &times).unwrap();
    assert_eq!(cold.s, warm.s);
    assert_eq!(cold.small_l_coeff, warm.small_l_coeff);
    assert_eq!(cold.rho12_samples[0].1, 1.0);
    assert_eq!(warm.rho12_samples[0].1, 1.0);
    // Warmer means faster relaxation towards the same S.
    assert!(warm.rho12_samples[1].1 < cold.rho12_samples[1].1);
}

#[test]
fn y_separation_is_reported_and_still_normalized() {
    let e = Engine { axis: SeparationAxis::Y, ..Default::default() };
    let stack = metal(110.0);
    let r = e.coherence(0.0, 10.0 * UM, omega(), &stack, &spin(), 0.0, &[]).unwrap();
    assert_eq!(r.axis, SeparationAxis::Y);
    assert_eq!(r.s, 1.0);
    let sy = e.coherence_s(30.0 * UM, 10.0 * UM, omega(), &stack, &spin()).unwrap();
    assert!(sy > 0.0 && sy < 1.0);
}

#[test]
fn rho12_saturation_and_half_decay() {
    let e = Engine::default();
    let stack = metal(110.0);
    let (d, l) = (10.0 * UM, 25.0 * UM);
    let (gamma, _) = e.gamma_general(d, omega(), &stack, &spin()).unwrap();
    let s = e.coherence_s(l, d, omega(), &stack, &spin()).unwrap();
    let at = |t: f64| e.rho12(t, l, d, omega(), &stack, &spin(), 0.0).unwrap();
    assert_eq!(at(0.0), 1.0);
    assert!((at(20.0 / gamma) - s).abs() < 1e-8);
    assert!((at(LN_2 / gamma) - (1.0 + s) / 2.0).abs() < 1e-12);
}

#[test]
fn half_length_in_thick_metal_is_of_order_distance() {
    let e = Engine::default();
    let stack = metal(110.0);
    let d = 10.0 * UM;
    let l_half = e.half_coherence_length(d, omega(), &stack, &spin()).unwrap();
    let s = e.coherence_s(l_half, d, omega(), &stack, &spin()).unwrap();
    assert!((s - 0.5).abs() < 1e-3, "{s}");
    assert!(l_half > d && l_half < 5.0 * d, "{l_half}");
}

#[test]
fn half_length_converges_to_distance_for_thick_layers() {
    // A layer many skin depths thick behaves as a half-space; l_1/2 then
    // sits near the atom-surface distance.
    let e = Engine::default();
    let d = 50.0 * UM;
    let film = e.half_coherence_length(d, omega(), &thin_film(200.0, 10.0), &spin()).unwrap();
    let bulk = e.half_coherence_length(d, omega(), &metal(10.0), &spin()).unwrap();
    assert!(rel(film, bulk) < 1e-3, "{film} vs {bulk}");
    assert!(rel(bulk, d) < 0.2, "{bulk}");
}

#[test]
fn half_length_bracket_failure_is_reported() {
    // A vacuum stack has no rate at all.
    let e = Engine::default();
    let err = e.half_coherence_length(10.0 * UM, omega(), &LayerStack::vacuum(), &spin());
    assert!(err.is_err());
}

#[test]
fn niobium_skin_depth_runs() {
    let e = Engine::default();
    let stack = metal(15.0);
    let nb = e.rate(2.0 * UM, omega(), &stack, &spin(), 9.0).unwrap();
    let al = e.rate(2.0 * UM, omega(), &metal(110.0), &spin(), 9.0).unwrap();
    assert!(nb.gamma12.is_finite() && nb.gamma12 > 0.0);
    // Well inside both skin depths the rate scales as 1/delta^2.
    assert!(nb.gamma12 > al.gamma12);
}
