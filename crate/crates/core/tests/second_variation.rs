use std::f64::consts::PI;

use catenoid_core::geometry::{conformal_mass, second_variation, solve_balance_length, Angular, CatenoidConstants, GridField};
use catenoid_core::mode_ode::{analytic_zero_mode, Parity};
use catenoid_core::spectrum::{eigenfunction, morse_index, SpectrumSettings};
use catenoid_core::verify::second_variation_order;
use proptest::prelude::*;

fn c() -> CatenoidConstants {
    solve_balance_length(1e-13).unwrap()
}

/// `int_0^{2 pi} Theta^2` for the angular factor of mode `m`.
fn angular_norm(m: u32) -> f64 {
    if m == 0 {
        2.0 * PI
    } else {
        PI
    }
}

#[test]
fn zero_mode_fields_match_boundary_term() {
    // for a lambda = 0 solution the bulk term integrates to 2 f(L) f'(L), so
    // S = -(2/L) |Theta|^2 f(L) (f(L) - L f'(L)); it vanishes exactly for the
    // two Robin solutions
    let c = c();
    let l = c.half_length;
    for m in 0..=1 {
        for p in Parity::BOTH {
            let mode = analytic_zero_mode(m, p).unwrap();
            let (f_l, _) = mode.eval(l);
            let exact = -(2.0 / l) * angular_norm(m) * f_l * mode.robin_defect(&c);
            let angulars: &[Angular] = if m == 0 { &[Angular::Cos] } else { &[Angular::Cos, Angular::Sin] };
            for &a in angulars {
                let (order, coarse, fine) = second_variation_order(&c, |x| mode.eval(x).0, m, a, exact, 64, 129).unwrap();
                assert!(fine < coarse, "m={m} {p} {a:?}");
                // second order asymptotically; the finite pair sits just below 2 for the dilation field
                assert!(order >= 1.95, "m={m} {p} {a:?}: order {order}");
                assert!(fine <= 1e-2 * exact.abs().max(1.0), "m={m} {p} {a:?}: error {fine:e}");
            }
        }
    }
}

#[test]
fn eigenfunctions_satisfy_energy_identity() {
    // with int cosh^2 f^2 = 1 and the Robin condition, S = -lambda |Theta|^2
    let c = c();
    let s = SpectrumSettings::default();
    let report = morse_index(&c, &s).unwrap();
    for r in report.records.iter().filter(|r| !r.is_kernel(s.nullity_tol)) {
        let profile = eigenfunction(&c, r, 513, &s.shoot_settings()).unwrap();
        let field = GridField::lift_profile(&profile.f, 128, r.m, Angular::Cos);
        let value = second_variation(&c, &field).unwrap();
        let mass = conformal_mass(&c, &field).unwrap();
        let expected = -r.lambda_star * angular_norm(r.m);
        assert!((mass - angular_norm(r.m)).abs() <= 1e-4 * angular_norm(r.m), "mass {mass}");
        assert!((value - expected).abs() <= 2e-3 * expected.abs(), "m={} {}: {value} vs {expected}", r.m, r.parity);
        assert!(value < 0.0);
    }
}

#[test]
fn constant_field() {
    let c = c();
    let one = GridField::sample(&c, 64, 257, |_, _| 1.0);
    let value = second_variation(&c, &one).unwrap();
    assert!((value + 12.0 * PI / c.half_length).abs() <= 1e-3, "{value}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadratic_in_amplitude(a in -5.0..5.0f64, m in 0u32..4) {
        let c = c();
        let base = GridField::sample(&c, 32, 65, |t, x| (m as f64 * t).cos() * (1.0 + 0.3 * x * x));
        let scaled = GridField { values: base.values.iter().map(|v| a * v).collect(), ..base.clone() };
        let s0 = second_variation(&c, &base).unwrap();
        let s1 = second_variation(&c, &scaled).unwrap();
        prop_assert!((s1 - a * a * s0).abs() <= 1e-10 * s0.abs().max(1.0) * a * a + 1e-12);
    }

    #[test]
    fn rotation_invariant(shift in 0usize..32, m in 1u32..4) {
        let c = c();
        let base = GridField::sample(&c, 32, 65, |t, x| (m as f64 * t).sin() * x.cosh());
        let mut rotated = base.clone();
        for i in 0..32 {
            let src = (i + shift) % 32;
            rotated.values[i * 65..(i + 1) * 65].copy_from_slice(&base.values[src * 65..(src + 1) * 65]);
        }
        let a = second_variation(&c, &base).unwrap();
        let b = second_variation(&c, &rotated).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }
}

#[test]
fn malformed_grids_are_rejected() {
    let c = c();
    assert!(second_variation(&c, &GridField::sample(&c, 4, 65, |_, _| 1.0)).is_err());
    assert!(GridField::new(8, 8, vec![0.0; 10]).is_err());
}
