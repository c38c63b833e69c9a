use catenoid_core::fd_oracle::{assemble, count_negative_mu, eigenvalues_near_zero, extrapolated_lambdas, negative_lambdas};
use catenoid_core::geometry::{solve_balance_length, CatenoidConstants};
use catenoid_core::mode_ode::Parity;
use catenoid_core::spectrum::{certified_window, find_eigenvalues_in_mode, SpectrumSettings};
use proptest::prelude::*;

fn c() -> CatenoidConstants {
    solve_balance_length(1e-13).unwrap()
}

#[test]
fn counts_are_stable_from_256() {
    let c = c();
    for n in [256, 384, 512, 1024] {
        let counts: Vec<usize> = (0..=3).map(|m| count_negative_mu(&assemble(&c, m, n).unwrap()).unwrap()).collect();
        assert_eq!(counts, [2, 1, 0, 0], "n={n}");
    }
}

/// Order `p` with `(h0^p - h1^p) / (h1^p - h2^p) = ratio`, by bisection.
fn observed_order(h: [f64; 3], ratio: f64) -> f64 {
    let g = |p: f64| (h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p)) - ratio;
    let (mut lo, mut hi) = (0.25, 6.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn eigenvalues_converge_at_second_order() {
    let c = c();
    let ns = [128usize, 256, 512];
    let h = ns.map(|n| 2.0 * c.half_length / (n + 1) as f64);
    for m in 0..=1 {
        let seq: Vec<Vec<f64>> = ns
            .iter()
            .map(|&n| negative_lambdas(&assemble(&c, m, n).unwrap()).unwrap())
            .collect();
        for (k, ((a, b), c)) in seq[0].iter().zip(&seq[1]).zip(&seq[2]).enumerate() {
            let ratio = (a - b) / (b - c);
            let order = observed_order(h, ratio);
            assert!(order >= 1.9, "m={m} k={k}: order {order}");
        }
    }
}

#[test]
fn extrapolation_matches_shooting() {
    let c = c();
    let s = SpectrumSettings::default();
    for m in 0..=1u32 {
        let fd = extrapolated_lambdas(&c, m, 256, 512).unwrap();
        let mut shooting: Vec<f64> = Parity::BOTH
            .iter()
            .flat_map(|&p| find_eigenvalues_in_mode(&c, m, p, certified_window(m), &s).unwrap().records)
            .filter(|r| !r.is_kernel(s.nullity_tol))
            .map(|r| r.lambda_star)
            .collect();
        shooting.sort_by(f64::total_cmp);
        assert_eq!(shooting.len(), fd.len());
        for (a, b) in shooting.iter().zip(&fd) {
            assert!((a - b).abs() / b <= 1e-6, "m={m}: {a} vs {b}");
        }
    }
}

#[test]
fn mode_zero_vectors_have_parity() {
    let c = c();
    let p = assemble(&c, 0, 512).unwrap();
    let pairs = eigenvalues_near_zero(&p, 3).unwrap();
    let negative: Vec<_> = pairs.iter().filter(|e| e.mu < 0.0).collect();
    assert_eq!(negative.len(), 2);
    // increasing mu: the even ground state first, then the odd one
    assert!(negative[0].parity_defect(1.0) <= 1e-6);
    assert_eq!(negative[0].sign_changes(), 0);
    assert!(negative[1].parity_defect(-1.0) <= 1e-6);
    assert_eq!(negative[1].sign_changes(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn assembly_is_symmetric_and_mass_positive(m in 0u32..6, n in 64usize..400) {
        let p = assemble(&c(), m, n).unwrap();
        prop_assert_eq!(p.len(), n + 2);
        prop_assert_eq!(p.stiffness_off.len(), n + 1);
        prop_assert!(p.mass.iter().all(|w| *w > 0.0));
        let (d, e) = p.standard_form();
        prop_assert_eq!(d.len(), n + 2);
        prop_assert!(e.iter().all(|v| v.is_finite() && *v < 0.0));
        // a full-interval pencil is reflection symmetric
        for i in 0..p.len() {
            prop_assert!((d[i] - d[p.len() - 1 - i]).abs() <= 1e-9 * d[i].abs());
        }
    }

    #[test]
    fn sturm_count_is_monotone(m in 0u32..4, n in 64usize..300, a in -50.0..50.0f64, b in -50.0..50.0f64) {
        let p = assemble(&c(), m, n).unwrap();
        prop_assert_eq!(p.sturm_count(-1e12).unwrap(), 0);
        prop_assert_eq!(p.sturm_count(1e12).unwrap(), p.len());
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p.sturm_count(lo).unwrap() <= p.sturm_count(hi).unwrap());
    }
}
