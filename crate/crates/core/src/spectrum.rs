//! Robin eigenvalues per Fourier mode, and the Morse index and nullity they add up to.
//!
//! For each `(m, parity)` the root functional is the boundary mismatch
//! `B(lambda) = f(L) - L f'(L)` of the parity shot. Even and odd extensions make
//! the condition at `x = -L` automatic. A positive root `lambda*` of `B` is a
//! negative eigenvalue of the Jacobi operator (in the conformal normalization
//! it is `-lambda*`; on the surface it is `-R^2 lambda*`). No root exists once
//! `m^2 + lambda > 3`, so only `m in {0, 1}` can contribute to the index and
//! each search runs over the window `(0, 3 - m^2]`.

use crate::error::{Error, Result};
use crate::geometry::CatenoidConstants;
use crate::mode_ode::{
    analytic_zero_mode, shoot_traced, shoot_with, ModeProblem, Parity, ShootSettings,
    POLE_THRESHOLD,
};
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSettings {
    pub step_tol: f64,
    /// Final bracket width in `lambda`.
    pub bisect_tol: f64,
    /// `|B(0)| / |(f(L), f'(L))|` below this marks a kernel element.
    pub nullity_tol: f64,
    pub n_scan: usize,
    /// Nonnegative mode orders to search; each `m > 0` stands for the pair `+-m`.
    pub modes: Vec<u32>,
    pub execution: Execution,
    /// Fault-injection hook forwarded to [`ShootSettings::flip_potential`].
    pub flip_potential: bool,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        Self {
            step_tol: 1e-12,
            bisect_tol: 1e-12,
            nullity_tol: 1e-8,
            n_scan: 256,
            modes: vec![0, 1],
            execution: Execution::default(),
            flip_potential: false,
        }
    }
}

impl SpectrumSettings {
    pub fn shoot_settings(&self) -> ShootSettings {
        ShootSettings {
            flip_potential: self.flip_potential,
            ..ShootSettings::adaptive(self.step_tol)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("step_tol", self.step_tol),
            ("bisect_tol", self.bisect_tol),
            ("nullity_tol", self.nullity_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_scan < 32 {
            return Err(Error::InvalidParameter(format!(
                "n_scan must be at least 32, got {}",
                self.n_scan
            )));
        }
        Ok(())
    }
}

/// One located point of the nonpositive Jacobi spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueRecord {
    pub m: u32,
    pub parity: Parity,
    pub lambda_star: f64,
    /// 1 for `m = 0`, 2 for the pair `+-m`.
    pub multiplicity: usize,
    /// Final bisection bracket; `(0, 0)` for a kernel element.
    pub bracket: (f64, f64),
    /// Relative mismatch `B / |(f(L), f'(L))|` at `lambda_star`.
    pub residual: f64,
}

impl EigenvalueRecord {
    /// The Jacobi eigenvalue measured with the surface metric, `-R^2 lambda*`.
    pub fn geometric_eigenvalue(&self, c: &CatenoidConstants) -> f64 {
        -c.scale * c.scale * self.lambda_star
    }

    pub fn is_kernel(&self, nullity_tol: f64) -> bool {
        self.lambda_star <= nullity_tol
    }
}

pub fn multiplicity(m: u32) -> usize {
    if m == 0 {
        1
    } else {
        2
    }
}

/// Upper end `3 - m^2` of the window that can contain Robin roots.
pub fn certified_window(m: u32) -> f64 {
    3.0 - (m as f64) * (m as f64)
}

/// Number of positive roots the foliation argument predicts for `m in {0, 1}`.
pub fn expected_positive_roots(m: u32, parity: Parity) -> Option<usize> {
    match (m, parity) {
        (0, _) | (1, Parity::Even) => Some(1),
        (1, Parity::Odd) => Some(0),
        _ if m >= 2 => Some(0),
        _ => None,
    }
}

/// `f(L) - L f'(L)` for the parity shot at `lambda`, at the shot's own scale.
pub fn robin_mismatch(
    c: &CatenoidConstants,
    m: u32,
    parity: Parity,
    lambda: f64,
    settings: &ShootSettings,
) -> f64 {
    shoot_with(c, &ModeProblem::new(m, lambda, parity), settings).mismatch(c)
}

/// [`robin_mismatch`] divided by `|(f(L), f'(L))|`; scale free, same zeros and signs.
pub fn relative_mismatch(
    c: &CatenoidConstants,
    m: u32,
    parity: Parity,
    lambda: f64,
    settings: &ShootSettings,
) -> f64 {
    let shot = shoot_with(c, &ModeProblem::new(m, lambda, parity), settings);
    shot.mismatch(c) / shot.magnitude()
}

/// Outcome of one per-mode search.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSearch {
    pub m: u32,
    pub parity: Parity,
    pub records: Vec<EigenvalueRecord>,
    /// Sign changes of `B` seen on the scan grid.
    pub sign_changes: usize,
    /// Relative mismatch at `lambda = 0`.
    pub zero_mismatch: f64,
    /// Set when the number of positive roots disagrees with the prediction.
    pub diagnostic: Option<String>,
}

impl ModeSearch {
    pub fn positive_records(&self) -> impl Iterator<Item = &EigenvalueRecord> {
        self.records.iter().filter(|r| r.bracket != (0.0, 0.0))
    }
}

/// Scans `B` over `(0, lambda_max]`, bisects every sign change and checks
/// `lambda = 0` for a kernel element.
pub fn find_eigenvalues_in_mode(
    c: &CatenoidConstants,
    m: u32,
    parity: Parity,
    lambda_max: f64,
    settings: &SpectrumSettings,
) -> Result<ModeSearch> {
    settings.validate()?;
    let shoot = settings.shoot_settings();
    let mismatch = |lambda: f64| relative_mismatch(c, m, parity, lambda, &shoot);

    let zero_mismatch = mismatch(0.0);
    let zero_is_kernel = zero_mismatch.abs() <= settings.nullity_tol;
    let mut records = Vec::new();
    if zero_is_kernel {
        records.push(EigenvalueRecord {
            m,
            parity,
            lambda_star: 0.0,
            multiplicity: multiplicity(m),
            bracket: (0.0, 0.0),
            residual: zero_mismatch,
        });
    }

    let mut sign_changes = 0;
    if lambda_max > 0.0 {
        let n = settings.n_scan;
        let grid: Vec<f64> = (0..=n).map(|k| lambda_max * k as f64 / n as f64).collect();
        let mut values = vec![zero_mismatch];
        values.extend(settings.execution.map(&grid[1..], |&l| mismatch(l)));

        let brackets: Vec<(f64, f64, f64, f64)> = (0..n)
            .filter(|&k| !(k == 0 && zero_is_kernel))
            .filter(|&k| values[k] != 0.0 && (values[k] > 0.0) != (values[k + 1] > 0.0))
            .map(|k| (grid[k], grid[k + 1], values[k], values[k + 1]))
            .collect();
        sign_changes = brackets.len();

        let located = settings.execution.map(&brackets, |&(a, b, fa, fb)| {
            bisect(&mismatch, a, b, fa, fb, settings.bisect_tol)
        });
        for (lambda_star, bracket) in located {
            records.push(EigenvalueRecord {
                m,
                parity,
                lambda_star,
                multiplicity: multiplicity(m),
                bracket,
                residual: mismatch(lambda_star),
            });
        }
    }
    records.sort_by(|a, b| a.lambda_star.total_cmp(&b.lambda_star));

    let diagnostic = expected_positive_roots(m, parity).and_then(|expected| {
        let window = certified_window(m);
        // only a full certified window can be held to the prediction
        let full = lambda_max >= window || window <= 0.0;
        (full && sign_changes != expected).then(|| {
            format!(
                "mode m={m} {parity}: found {sign_changes} sign change(s) of the Robin mismatch on (0, {lambda_max}], expected {expected}"
            )
        })
    });

    Ok(ModeSearch {
        m,
        parity,
        records,
        sign_changes,
        zero_mismatch,
        diagnostic,
    })
}

/// Bisection to width `tol`, finished with one secant step inside the bracket.
fn bisect(
    f: &impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    tol: f64,
) -> (f64, (f64, f64)) {
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return (mid, (mid, mid));
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    let root = (a - fa * (b - a) / (fb - fa)).clamp(a, b);
    (root, (a, b))
}

/// Index and nullity with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub index: usize,
    pub nullity: usize,
    pub records: Vec<EigenvalueRecord>,
    pub searches: Vec<ModeSearch>,
    pub per_mode: Vec<ModeCount>,
    pub constants: CatenoidConstants,
    pub settings: SpectrumSettings,
    /// `g(L) - L g'(L)` for the closed-form rotation field; zero exactly when
    /// `L = coth L`.
    pub rotation_robin_defect: f64,
    pub diagnostics: Vec<String>,
}

/// Counts attributed to one signed Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeCount {
    pub mode: i64,
    pub negative: usize,
    pub null: usize,
}

pub fn morse_index(c: &CatenoidConstants, settings: &SpectrumSettings) -> Result<SpectrumReport> {
    settings.validate()?;
    let problems: Vec<(u32, Parity)> = settings
        .modes
        .iter()
        .flat_map(|&m| Parity::BOTH.map(|p| (m, p)))
        .collect();
    let searches = settings
        .execution
        .map(&problems, |&(m, p)| {
            find_eigenvalues_in_mode(c, m, p, certified_window(m), settings)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let records: Vec<EigenvalueRecord> = searches.iter().flat_map(|s| s.records.clone()).collect();
    let tol = settings.nullity_tol;
    let index = records
        .iter()
        .filter(|r| !r.is_kernel(tol))
        .map(|r| r.multiplicity)
        .sum();
    let nullity = records
        .iter()
        .filter(|r| r.is_kernel(tol))
        .map(|r| r.multiplicity)
        .sum();

    let mut modes = settings.modes.clone();
    modes.sort_unstable();
    modes.dedup();
    let mut per_mode = Vec::new();
    for m in modes {
        let of_mode = records.iter().filter(|r| r.m == m);
        let negative = of_mode.clone().filter(|r| !r.is_kernel(tol)).count();
        let null = of_mode.filter(|r| r.is_kernel(tol)).count();
        per_mode.push(ModeCount {
            mode: m as i64,
            negative,
            null,
        });
        if m > 0 {
            per_mode.push(ModeCount {
                mode: -(m as i64),
                negative,
                null,
            });
        }
    }
    per_mode.sort_by_key(|mc| (mc.mode.abs(), -mc.mode.signum()));

    let diagnostics = searches.iter().filter_map(|s| s.diagnostic.clone()).collect();
    let rotation_robin_defect = analytic_zero_mode(1, Parity::Odd)?.robin_defect(c);

    Ok(SpectrumReport {
        index,
        nullity,
        records,
        searches,
        per_mode,
        constants: *c,
        settings: settings.clone(),
        rotation_robin_defect,
        diagnostics,
    })
}

/// Dimension of the kernel: `lambda = 0` Robin solutions over `m in {0, 1}`
/// counted with multiplicity. Modes `|m| >= 2` have `m^2 > 3` and carry none.
pub fn nullity(c: &CatenoidConstants, settings: &SpectrumSettings) -> Result<usize> {
    settings.validate()?;
    let shoot = settings.shoot_settings();
    Ok((0..=1u32)
        .flat_map(|m| Parity::BOTH.map(|p| (m, p)))
        .filter(|&(m, p)| relative_mismatch(c, m, p, 0.0, &shoot).abs() <= settings.nullity_tol)
        .map(|(m, _)| multiplicity(m))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub lambda: f64,
    /// `f'(L) / f(L)`; `None` where `f(L)` is too close to zero (a pole).
    pub gamma_end: Option<f64>,
    /// Relative mismatch.
    pub mismatch: f64,
}

/// The curves `lambda -> gamma(L)` and `lambda -> B(lambda)` sampled on `lambdas`.
pub fn phi_scan(
    c: &CatenoidConstants,
    m: u32,
    parity: Parity,
    lambdas: &[f64],
    shoot: &ShootSettings,
    execution: Execution,
) -> Result<Vec<ScanRow>> {
    if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter(format!("scan value {bad} must be >= 0")));
    }
    Ok(execution.map(lambdas, |&lambda| {
        let shot = shoot_with(c, &ModeProblem::new(m, lambda, parity), shoot);
        let gamma = shot.df_end / shot.f_end;
        ScanRow {
            lambda,
            gamma_end: (gamma.is_finite() && gamma.abs() <= POLE_THRESHOLD).then_some(gamma),
            mismatch: shot.mismatch(c) / shot.magnitude(),
        }
    }))
}

/// A located eigenfunction sampled on `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenProfile {
    pub m: u32,
    pub parity: Parity,
    pub lambda_star: f64,
    pub xs: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    /// `f(L) - L f'(L)` of the normalized profile.
    pub boundary_residual: f64,
}

/// Re-shoots at `record.lambda_star`, extends by parity and normalizes so that
/// `int_{-L}^{L} f^2 cosh^2 x dx = 1`. The profile has `2 * (n_samples / 2) + 1`
/// points, uniform on `[-L, L]` and symmetric about `0`.
pub fn eigenfunction(
    c: &CatenoidConstants,
    record: &EigenvalueRecord,
    n_samples: usize,
    shoot: &ShootSettings,
) -> Result<EigenProfile> {
    let half = n_samples / 2;
    if half < 2 {
        return Err(Error::InvalidParameter(format!(
            "eigenfunction needs at least 5 samples, got {n_samples}"
        )));
    }
    let l = c.half_length;
    let xs_half: Vec<f64> = (0..=half)
        .map(|j| if j == half { l } else { l * j as f64 / half as f64 })
        .collect();
    let problem = ModeProblem::new(record.m, record.lambda_star, record.parity);
    let shot = shoot_traced(c, &problem, shoot, &xs_half);
    let trace = shot.trace.as_deref().unwrap_or_default();
    let norm = (2.0 * shot.weight_end).sqrt();
    let sign = record.parity.reflection_sign();

    let mut xs = vec![0.0; 2 * half + 1];
    let mut f = vec![0.0; 2 * half + 1];
    let mut df = vec![0.0; 2 * half + 1];
    for (j, p) in trace.iter().enumerate() {
        let (fv, dv) = (p.f / norm, p.df / norm);
        xs[half - j] = -xs_half[j];
        f[half - j] = sign * fv;
        // the derivative has the opposite parity
        df[half - j] = -sign * dv;
        xs[half + j] = xs_half[j];
        f[half + j] = fv;
        df[half + j] = dv;
    }
    let boundary_residual = f[2 * half] - l * df[2 * half];
    Ok(EigenProfile {
        m: record.m,
        parity: record.parity,
        lambda_star: record.lambda_star,
        xs,
        f,
        df,
        boundary_residual,
    })
}
