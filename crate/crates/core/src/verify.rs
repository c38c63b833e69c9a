//! Cross-module consistency suite: closed-form zero modes, the comparison
//! lemma on random samples, monotonicity of the mismatch, index and nullity,
//! agreement with the finite-difference oracle and signs of the second
//! variation.
//!
//! Every check is deterministic for a fixed [`VerifyConfig`]; random samples
//! come from a seeded ChaCha stream.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fd_oracle;
use crate::geometry::{self, Angular, CatenoidConstants, GridField};
use crate::mode_ode::{
    analytic_zero_mode, riccati_traced, shoot_traced, shoot_with, ModeProblem, Parity,
    RiccatiOutcome, ShootSettings,
};
use crate::spectrum::{self, certified_window, SpectrumSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub root_tol: f64,
    pub spectrum: SpectrumSettings,
    pub oracle_n: usize,
    pub lemma_samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            root_tol: 1e-12,
            spectrum: SpectrumSettings::default(),
            oracle_n: 512,
            lemma_samples: 50,
            seed: 0x5eed_ca7e,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            pass,
            detail: detail.into(),
        }
    }
}

/// `(m, lambda)` pairs with `m^2 + lambda` uniform-ish in `(lower, upper]`.
pub fn lemma_samples(seed: u64, count: usize, lower: f64, upper: f64) -> Vec<(u32, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_m = upper.sqrt().floor() as u32;
    (0..count)
        .map(|_| {
            let m = rng.random_range(0..=max_m);
            let m2 = (m * m) as f64;
            let lo = (lower - m2).max(0.0);
            let hi = upper - m2;
            let u: f64 = rng.random();
            // u in [0, 1) maps onto (lo, hi]
            (m, lo + (hi - lo) * (1.0 - u))
        })
        .collect()
}

/// Uniform sample points on `(0, L]`.
pub fn sample_points(c: &CatenoidConstants, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| if k == n { c.half_length } else { c.half_length * k as f64 / n as f64 })
        .collect()
}

/// Observed order `log2(e_coarse / e_fine)` of the second variation of a
/// lifted profile against `exact`, on grids `(nt, nx)` and `(2 nt, 2 nx - 1)`.
pub fn second_variation_order(
    c: &CatenoidConstants,
    profile: impl Fn(f64) -> f64,
    m: u32,
    angular: Angular,
    exact: f64,
    n_theta: usize,
    n_x: usize,
) -> Result<(f64, f64, f64)> {
    let value = |nt: usize, nx: usize| -> Result<f64> {
        let samples: Vec<f64> = c.profile_grid(nx).into_iter().map(&profile).collect();
        geometry::second_variation(c, &GridField::lift_profile(&samples, nt, m, angular))
    };
    let coarse = (value(n_theta, n_x)? - exact).abs();
    let fine = (value(2 * n_theta, 2 * n_x - 1)? - exact).abs();
    Ok(((coarse / fine).log2(), coarse, fine))
}

pub fn run(config: &VerifyConfig) -> Result<Vec<Check>> {
    let c = geometry::solve_balance_length(config.root_tol)?;
    let s = &config.spectrum;
    let shoot = s.shoot_settings();
    let l = c.half_length;
    let mut checks = Vec::new();

    // constants
    let residual = c.residual();
    let tanh_defect = (l * l.tanh() - 1.0).abs();
    checks.push(Check::new(
        "constants_residual",
        residual.abs() <= config.root_tol && tanh_defect <= 1e-11,
        format!("L={l:.16e} coth(L)-L={residual:.3e} |L tanh L - 1|={tanh_defect:.3e}"),
    ));

    let mut sphere = 0.0_f64;
    let mut flux = 0.0_f64;
    for k in 0..32 {
        let theta = 2.0 * PI * k as f64 / 32.0;
        for x in [-l, l] {
            let p = geometry::parametrize(&c, theta, x)?.position;
            sphere = sphere.max((p.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs());
            flux = flux.max(geometry::contact_flux(&c, theta, x)?.abs());
        }
    }
    checks.push(Check::new(
        "boundary_on_unit_sphere",
        sphere <= 1e-12,
        format!("max | |Phi(theta,+-L)| - 1 | = {sphere:.3e} over 32 angles"),
    ));
    checks.push(Check::new(
        "boundary_meets_sphere_orthogonally",
        flux <= 1e-10,
        format!("max |<Phi, Phi_x x Phi_theta>| = {flux:.3e}"),
    ));

    // closed-form lambda = 0 solutions
    let xs = sample_points(&c, 64);
    let mut worst = 0.0_f64;
    for m in 0..=1 {
        for parity in Parity::BOTH {
            let exact = analytic_zero_mode(m, parity)?;
            let shot = shoot_traced(&c, &ModeProblem::new(m, 0.0, parity), &shoot, &xs);
            for p in shot.trace.as_deref().unwrap_or_default() {
                let (f, df) = exact.eval_normalized(p.x);
                worst = worst.max((p.f - f).abs()).max((p.df - df).abs());
            }
        }
    }
    checks.push(Check::new(
        "zero_mode_closed_forms",
        worst <= 1e-8,
        format!("max error over the four closed forms = {worst:.3e}"),
    ));

    let order = integrator_order(&c)?;
    checks.push(Check::new(
        "integrator_order",
        order >= 4.0,
        format!("observed order {order:.3} on fixed steps 16 -> 32"),
    ));

    // comparison lemma
    let samples = lemma_samples(config.seed, config.lemma_samples, 3.0, 12.0);
    let probes = sample_points(&c, 20);
    let mut even_violations = Vec::new();
    let mut odd_violations = Vec::new();
    for &(m, lambda) in &samples {
        let (outcome, gammas) = riccati_traced(&c, &ModeProblem::new(m, lambda, Parity::Even), 0.0, 0.0, &shoot, &probes)?;
        let pole_free_above = matches!(outcome, RiccatiOutcome::Finite { gamma_end } if gamma_end > 1.0 / l);
        let above_tanh = gammas.iter().all(|(x, g)| *g > x.tanh());
        if !(pole_free_above && above_tanh) {
            even_violations.push((m, lambda));
        }

        let odd = shoot_traced(&c, &ModeProblem::new(m, lambda, Parity::Odd), &shoot, &probes);
        let above_coth = odd
            .trace
            .as_deref()
            .unwrap_or_default()
            .iter()
            .filter(|p| p.x >= l / 10.0)
            .all(|p| p.f > 0.0 && p.df / p.f > 1.0 / p.x.tanh());
        if !(above_coth && odd.mismatch(&c) < 0.0) {
            odd_violations.push((m, lambda));
        }
    }
    checks.push(Check::new(
        "lemma_even_riccati",
        even_violations.is_empty(),
        format!("{} of {} samples violate pole-free gamma > tanh, gamma(L) > 1/L", even_violations.len(), samples.len()),
    ));
    checks.push(Check::new(
        "lemma_odd_mismatch",
        odd_violations.is_empty(),
        format!("{} of {} samples violate f'/f > coth, B < 0", odd_violations.len(), samples.len()),
    ));

    // monotonicity and uniqueness
    let mut mono_detail = Vec::new();
    let mut mono_ok = true;
    for (m, parity) in [(0, Parity::Even), (0, Parity::Odd), (1, Parity::Even), (1, Parity::Odd)] {
        let window = certified_window(m);
        let grid: Vec<f64> = (1..=256).map(|k| window * k as f64 / 256.0).collect();
        let rows = s.execution.map(&grid, |&lambda| {
            let shot = shoot_with(&c, &ModeProblem::new(m, lambda, parity), &shoot);
            (shot.f_end, shot.df_end)
        });
        let positive = rows.iter().all(|(f, _)| *f > 0.0);
        let ratios: Vec<f64> = rows.iter().map(|(f, df)| df / f).collect();
        let violations = ratios.windows(2).filter(|w| w[1] <= w[0]).count();
        mono_ok &= positive && violations == 0;
        mono_detail.push(format!("m={m} {parity}: {violations} violations"));
    }
    checks.push(Check::new("mismatch_monotonicity", mono_ok, mono_detail.join("; ")));

    let report = spectrum::morse_index(&c, s)?;
    let counts: Vec<String> = report.searches.iter().map(|r| format!("m={} {}: {}", r.m, r.parity, r.sign_changes)).collect();
    checks.push(Check::new(
        "root_uniqueness",
        report.diagnostics.is_empty(),
        if report.diagnostics.is_empty() { counts.join("; ") } else { report.diagnostics.join("; ") },
    ));
    checks.push(Check::new(
        "index_and_nullity",
        report.index == 4 && report.nullity == 2,
        format!("index={} nullity={}", report.index, report.nullity),
    ));

    // finite-difference oracle
    let oracle_counts = s.execution.map(&[0u32, 1, 2], |&m| {
        fd_oracle::assemble(&c, m, config.oracle_n).and_then(|p| fd_oracle::count_negative_mu(&p))
    });
    let oracle_counts = oracle_counts.into_iter().collect::<Result<Vec<_>>>()?;
    checks.push(Check::new(
        "oracle_counts",
        oracle_counts == [2, 1, 0],
        format!("negative mu at n={}: m=0:{} m=1:{} m=2:{}", config.oracle_n, oracle_counts[0], oracle_counts[1], oracle_counts[2]),
    ));

    let coarse_n = config.oracle_n / 2;
    let oracle = s.execution.map(&[0u32, 1], |&m| fd_oracle::extrapolated_lambdas(&c, m, coarse_n, config.oracle_n));
    let oracle = oracle.into_iter().collect::<Result<Vec<_>>>()?;
    let mut worst_rel = 0.0_f64;
    let mut matched = 0;
    for m in 0..=1u32 {
        let mut shooting: Vec<f64> = report
            .records
            .iter()
            .filter(|r| r.m == m && r.lambda_star > s.nullity_tol)
            .map(|r| r.lambda_star)
            .collect();
        shooting.sort_by(f64::total_cmp);
        let fd = &oracle[m as usize];
        if shooting.len() == fd.len() {
            for (a, b) in shooting.iter().zip(fd) {
                worst_rel = worst_rel.max((a - b).abs() / b.abs());
                matched += 1;
            }
        } else {
            worst_rel = f64::INFINITY;
        }
    }
    checks.push(Check::new(
        "oracle_agreement",
        matched == 3 && worst_rel <= 1e-6,
        format!("{matched} eigenvalues, max relative gap {worst_rel:.3e} (Richardson n={coarse_n},{})", config.oracle_n),
    ));

    // second variation
    let mut signs = Vec::new();
    let mut signs_ok = true;
    for record in report.records.iter().filter(|r| r.lambda_star > s.nullity_tol) {
        let profile = spectrum::eigenfunction(&c, record, 257, &shoot)?;
        let angulars: &[Angular] = if record.m == 0 { &[Angular::Cos] } else { &[Angular::Cos, Angular::Sin] };
        for &angular in angulars {
            let field = GridField::lift_profile(&profile.f, 64, record.m, angular);
            let value = geometry::second_variation(&c, &field)?;
            signs_ok &= value < 0.0;
            signs.push(format!("m={} {} {:?}: S={value:.6e}", record.m, record.parity, angular));
        }
    }
    checks.push(Check::new("second_variation_negative", signs_ok && signs.len() == 4, signs.join("; ")));

    let rotation = analytic_zero_mode(1, Parity::Odd)?;
    let mut null_detail = Vec::new();
    let mut null_ok = true;
    for angular in [Angular::Cos, Angular::Sin] {
        let (order, coarse, fine) = second_variation_order(&c, |x| rotation.eval(x).0, 1, angular, 0.0, 64, 129)?;
        null_ok &= order >= 2.0 && fine < coarse;
        null_detail.push(format!("{angular:?}: |S| {coarse:.3e} -> {fine:.3e}, order {order:.3}"));
    }
    checks.push(Check::new("nullity_field_convergence", null_ok, null_detail.join("; ")));

    Ok(checks)
}

/// Observed order of the fixed-step integrator on the four closed forms,
/// worst case over the four, between 16 and 32 steps on `[0, L]`.
pub fn integrator_order(c: &CatenoidConstants) -> Result<f64> {
    let error = |steps: usize, m: u32, parity: Parity| -> Result<f64> {
        let exact = analytic_zero_mode(m, parity)?;
        let shot = shoot_with(c, &ModeProblem::new(m, 0.0, parity), &ShootSettings::fixed(steps, c));
        let (f, df) = exact.eval_normalized(c.half_length);
        Ok((shot.f_end - f).abs().max((shot.df_end - df).abs()))
    };
    let mut order = f64::INFINITY;
    for m in 0..=1 {
        for parity in Parity::BOTH {
            order = order.min((error(16, m, parity)? / error(32, m, parity)?).log2());
        }
    }
    Ok(order)
}
