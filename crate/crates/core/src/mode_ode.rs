//! Per-Fourier-mode ODE `f'' = q(x) f` with `q = m^2 + lambda cosh^2 x - 2 sech^2 x`.
//!
//! Separating `f(theta, x) = sum_m e^{i m theta} f_m(x)` reduces the Jacobi
//! eigenproblem with Robin data to one of these ODEs per mode. Solutions are
//! shot from `x = 0` with even or odd initial data; the linear form is used
//! for eigenvalue location and the Riccati form `gamma = f'/f` for comparison
//! arguments.

use crate::error::{Error, Result};
use crate::geometry::CatenoidConstants;
use crate::integrate::{Flow, StepControl, Stepper};

/// Default renormalization threshold for the linear shot.
pub const RESCALE_THRESHOLD: f64 = 1e150;
/// `gamma` below `-POLE_THRESHOLD` is treated as a pole of the Riccati trajectory.
pub const POLE_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Even, Parity::Odd];

    /// `(f(0), f'(0))`.
    pub fn initial_data(self) -> [f64; 2] {
        match self {
            Parity::Even => [1.0, 0.0],
            Parity::Odd => [0.0, 1.0],
        }
    }

    /// `f(-x) = sign * f(x)`.
    pub fn reflection_sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            other => Err(Error::InvalidParameter(format!("unknown parity {other:?}"))),
        }
    }
}

/// One boundary-value problem: mode order `m` (shared by `+-m`), spectral
/// parameter `lambda` and parity of the initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeProblem {
    pub m: u32,
    pub lambda: f64,
    pub parity: Parity,
}

impl ModeProblem {
    pub fn new(m: u32, lambda: f64, parity: Parity) -> Self {
        Self { m, lambda, parity }
    }
}

pub fn potential_q(m: u32, lambda: f64, x: f64) -> f64 {
    let ch2 = x.cosh().powi(2);
    let m2 = (m as f64) * (m as f64);
    m2 + lambda * ch2 - 2.0 / ch2
}

/// Numerical settings shared by the linear and Riccati shots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootSettings {
    pub control: StepControl,
    pub rescale_threshold: f64,
    /// Test hook: integrates with `-q` in place of `q`. Every correct check on
    /// the comparison lemma must fail with this set.
    pub flip_potential: bool,
}

impl ShootSettings {
    pub fn adaptive(step_tol: f64) -> Self {
        Self {
            control: StepControl::Adaptive { tol: step_tol },
            rescale_threshold: RESCALE_THRESHOLD,
            flip_potential: false,
        }
    }

    pub fn fixed(steps: usize, c: &CatenoidConstants) -> Self {
        Self {
            control: StepControl::Fixed {
                h: c.half_length / steps as f64,
            },
            rescale_threshold: RESCALE_THRESHOLD,
            flip_potential: false,
        }
    }

    fn q(&self, m: u32, lambda: f64, x: f64) -> f64 {
        let q = potential_q(m, lambda, x);
        if self.flip_potential {
            -q
        } else {
            q
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub x: f64,
    pub f: f64,
    pub df: f64,
}

/// Terminal data of a linear shot, up to a common positive scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotResult {
    pub f_end: f64,
    pub df_end: f64,
    /// `int_0^x_end cosh^2(x) f^2 dx` at the same scale (squared).
    pub weight_end: f64,
    /// Number of positive renormalizations applied along the way.
    pub scale_exponent: u32,
    /// Samples at the requested points, all at the final scale.
    pub trace: Option<Vec<TracePoint>>,
}

impl ShotResult {
    /// `f(L) - L f'(L)`, at the shot's scale.
    pub fn mismatch(&self, c: &CatenoidConstants) -> f64 {
        self.f_end - c.half_length * self.df_end
    }

    pub fn magnitude(&self) -> f64 {
        self.f_end.hypot(self.df_end)
    }
}

/// Integrates `(f, f', w)' = (f', q f, cosh^2 f^2)` from `x0` to `x1`.
///
/// Samples are recorded at each point of `samples` (sorted in the direction of
/// integration and lying between `x0` and `x1`).
pub fn integrate_mode(
    m: u32,
    lambda: f64,
    x0: f64,
    initial: [f64; 2],
    x1: f64,
    settings: &ShootSettings,
    samples: Option<&[f64]>,
) -> ShotResult {
    let rhs = |x: f64, y: &[f64; 3]| {
        let ch = x.cosh();
        [y[1], settings.q(m, lambda, x) * y[0], ch * ch * y[0] * y[0]]
    };
    let mut stepper = Stepper::new(rhs, x0, [initial[0], initial[1], 0.0], settings.control);
    let mut scale_exponent = 0;
    let mut trace: Vec<TracePoint> = Vec::new();
    let threshold = settings.rescale_threshold;

    let rescale = |y: &mut [f64; 3], trace: &mut Vec<TracePoint>, count: &mut u32| {
        let size = y[0].abs().max(y[1].abs());
        if size > threshold {
            y[0] /= size;
            y[1] /= size;
            y[2] /= size * size;
            for p in trace.iter_mut() {
                p.f /= size;
                p.df /= size;
            }
            *count += 1;
        }
    };

    let record = |stepper: &Stepper<3, _>, trace: &mut Vec<TracePoint>| {
        trace.push(TracePoint {
            x: stepper.x,
            f: stepper.y[0],
            df: stepper.y[1],
        });
    };

    let stops: Vec<f64> = samples.map(|s| s.to_vec()).unwrap_or_default();
    for &s in &stops {
        if s == stepper.x {
            record(&stepper, &mut trace);
            continue;
        }
        // the linear system has no finite-time blow-up; failures only arise
        // from non-finite coefficients, which end the shot where it stands
        let _ = stepper.advance_to(s, |_, y| {
            rescale(y, &mut trace, &mut scale_exponent);
            Flow::Continue
        });
        record(&stepper, &mut trace);
    }
    let _ = stepper.advance_to(x1, |_, y| {
        rescale(y, &mut trace, &mut scale_exponent);
        Flow::Continue
    });

    ShotResult {
        f_end: stepper.y[0],
        df_end: stepper.y[1],
        weight_end: stepper.y[2],
        scale_exponent,
        trace: samples.map(|_| trace),
    }
}

/// Shoots the mode problem from `x = 0` to `x = L` with parity initial data.
pub fn shoot(c: &CatenoidConstants, p: &ModeProblem, step_tol: f64) -> ShotResult {
    shoot_with(c, p, &ShootSettings::adaptive(step_tol))
}

pub fn shoot_with(c: &CatenoidConstants, p: &ModeProblem, settings: &ShootSettings) -> ShotResult {
    integrate_mode(p.m, p.lambda, 0.0, p.parity.initial_data(), c.half_length, settings, None)
}

/// Like [`shoot_with`], additionally sampling at `xs` (sorted, within `[0, L]`).
pub fn shoot_traced(
    c: &CatenoidConstants,
    p: &ModeProblem,
    settings: &ShootSettings,
    xs: &[f64],
) -> ShotResult {
    integrate_mode(p.m, p.lambda, 0.0, p.parity.initial_data(), c.half_length, settings, Some(xs))
}

/// End state of a Riccati trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiccatiOutcome {
    Finite { gamma_end: f64 },
    PoleDetected { x_pole: f64 },
}

impl RiccatiOutcome {
    pub fn gamma_end(&self) -> Option<f64> {
        match *self {
            RiccatiOutcome::Finite { gamma_end } => Some(gamma_end),
            RiccatiOutcome::PoleDetected { .. } => None,
        }
    }
}

/// Integrates `gamma' = q(x) - gamma^2` from `x_start` to `L`.
pub fn riccati_shoot(
    c: &CatenoidConstants,
    p: &ModeProblem,
    x_start: f64,
    gamma_start: f64,
    settings: &ShootSettings,
) -> Result<RiccatiOutcome> {
    riccati_traced(c, p, x_start, gamma_start, settings, &[]).map(|(o, _)| o)
}

/// [`riccati_shoot`] with samples of `gamma` at the points of `xs` that are
/// reached before a pole.
pub fn riccati_traced(
    c: &CatenoidConstants,
    p: &ModeProblem,
    x_start: f64,
    gamma_start: f64,
    settings: &ShootSettings,
    xs: &[f64],
) -> Result<(RiccatiOutcome, Vec<(f64, f64)>)> {
    let l = c.half_length;
    if !(x_start >= 0.0 && x_start < l) {
        return Err(Error::InvalidParameter(format!(
            "riccati start {x_start} must lie in [0, {l})"
        )));
    }
    let (m, lambda) = (p.m, p.lambda);
    let rhs = |x: f64, y: &[f64; 1]| [settings.q(m, lambda, x) - y[0] * y[0]];
    let mut stepper = Stepper::new(rhs, x_start, [gamma_start], settings.control);
    let mut samples = Vec::with_capacity(xs.len());

    let pole_check = |x: f64, y: &mut [f64; 1], pole: &mut Option<f64>| {
        if y[0] < -POLE_THRESHOLD {
            *pole = Some(x);
            Flow::Stop
        } else {
            Flow::Continue
        }
    };

    let mut targets: Vec<f64> = xs.iter().copied().filter(|&x| x > x_start && x <= l).collect();
    let n_sampled = targets.len();
    if targets.last() != Some(&l) {
        targets.push(l);
    }

    let mut pole = None;
    for (i, target) in targets.into_iter().enumerate() {
        match stepper.advance_to(target, |x, y| pole_check(x, y, &mut pole)) {
            Ok(Flow::Stop) => break,
            Ok(Flow::Continue) => {
                if i < n_sampled {
                    samples.push((stepper.x, stepper.y[0]));
                }
            }
            // step-size collapse happens only on approach to a pole
            Err(failure) => {
                pole = Some(failure.x());
                break;
            }
        }
    }

    let outcome = match pole {
        Some(x_pole) => RiccatiOutcome::PoleDetected { x_pole },
        None => RiccatiOutcome::Finite {
            gamma_end: stepper.y[0],
        },
    };
    Ok((outcome, samples))
}

/// Geometric origin of a closed-form `lambda = 0` solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobiField {
    Dilation,
    AxialTranslation,
    OrthogonalTranslation,
    OrthogonalRotation,
}

impl JacobiField {
    pub fn description(self) -> &'static str {
        match self {
            JacobiField::Dilation => "dilatations centred on the origin",
            JacobiField::AxialTranslation => "translations along the x-axis",
            JacobiField::OrthogonalTranslation => "translations orthogonal to the x-axis",
            JacobiField::OrthogonalRotation => "rotations about axes orthogonal to the x-axis",
        }
    }
}

/// An exact solution of the mode ODE at `lambda = 0`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroMode {
    pub m: u32,
    pub parity: Parity,
    pub field: JacobiField,
    eval: Profile,
}

impl ZeroMode {
    /// `(f(x), f'(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        (self.eval)(x)
    }

    /// `(f, f')` divided by the parity initial value (`f(0)` or `f'(0)`), so it
    /// compares directly with a parity shot.
    pub fn eval_normalized(&self, x: f64) -> (f64, f64) {
        let (f0, df0) = self.eval(0.0);
        let k = match self.parity {
            Parity::Even => f0,
            Parity::Odd => df0,
        };
        let (f, df) = self.eval(x);
        (f / k, df / k)
    }

    /// `f(L) - L f'(L)`.
    pub fn robin_defect(&self, c: &CatenoidConstants) -> f64 {
        let (f, df) = self.eval(c.half_length);
        f - c.half_length * df
    }
}

type Profile = fn(f64) -> (f64, f64);

fn dilation(x: f64) -> (f64, f64) {
    let t = x.tanh();
    let sech2 = 1.0 / x.cosh().powi(2);
    (1.0 - x * t, -t - x * sech2)
}

fn axial_translation(x: f64) -> (f64, f64) {
    (x.tanh(), 1.0 / x.cosh().powi(2))
}

fn orthogonal_translation(x: f64) -> (f64, f64) {
    let sech = 1.0 / x.cosh();
    (sech, -sech * x.tanh())
}

fn orthogonal_rotation(x: f64) -> (f64, f64) {
    let sech = 1.0 / x.cosh();
    (x.sinh() + x * sech, x.cosh() + sech - x * sech * x.tanh())
}

pub fn analytic_zero_mode(m: u32, parity: Parity) -> Result<ZeroMode> {
    let (field, eval): (JacobiField, Profile) = match (m, parity) {
        (0, Parity::Even) => (JacobiField::Dilation, dilation),
        (0, Parity::Odd) => (JacobiField::AxialTranslation, axial_translation),
        (1, Parity::Even) => (JacobiField::OrthogonalTranslation, orthogonal_translation),
        (1, Parity::Odd) => (JacobiField::OrthogonalRotation, orthogonal_rotation),
        _ => return Err(Error::NoClosedForm(m)),
    };
    Ok(ZeroMode {
        m,
        parity,
        field,
        eval,
    })
}

/// The field `X_lambda(x, y) = (1, lambda cosh^2 x - 2 sech^2 x - y^2)` whose
/// integral curves are graphs of Riccati solutions for `m = 0`.
pub fn foliation_field(lambda: f64, x: f64, y: f64) -> (f64, f64) {
    (1.0, potential_q(0, lambda, x) - y * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::solve_balance_length;
    use approx::assert_abs_diff_eq;

    fn c() -> CatenoidConstants {
        solve_balance_length(1e-13).unwrap()
    }

    #[test]
    fn potential_examples() {
        assert_eq!(potential_q(0, 0.0, 0.0), -2.0);
        assert_eq!(potential_q(2, 0.0, 0.0), 2.0);
        let l = c().half_length;
        for k in 1..=100 {
            let x = l * k as f64 / 100.0;
            assert!(potential_q(2, 0.0, x) > 1.0);
            assert!(potential_q(0, 3.0, x) > 1.0);
            assert!(potential_q(0, 3.0, x) >= potential_q(0, 3.0, x - l / 100.0));
        }
        assert_eq!(potential_q(0, 3.0, 0.0), 1.0);
    }

    #[test]
    fn parity_parsing() {
        assert_eq!("Even".parse::<Parity>().unwrap(), Parity::Even);
        assert_eq!("odd".parse::<Parity>().unwrap(), Parity::Odd);
        assert!("both".parse::<Parity>().is_err());
    }

    #[test]
    fn zero_modes_solve_the_ode() {
        // second derivative by central differences against q f
        let h = 1e-4;
        for m in 0..=1 {
            for parity in Parity::BOTH {
                let z = analytic_zero_mode(m, parity).unwrap();
                for k in 0..=10 {
                    let x = -1.0 + 0.2 * k as f64;
                    let (fp, _) = z.eval(x + h);
                    let (fm, _) = z.eval(x - h);
                    let (f, df) = z.eval(x);
                    let d2 = (fp - 2.0 * f + fm) / (h * h);
                    assert_abs_diff_eq!(d2, potential_q(m, 0.0, x) * f, epsilon = 1e-5);
                    assert_abs_diff_eq!(df, (fp - fm) / (2.0 * h), epsilon = 1e-7);
                    let (fr, _) = z.eval(-x);
                    assert_abs_diff_eq!(fr, parity.reflection_sign() * f, epsilon = 1e-15);
                }
            }
        }
        assert!(matches!(analytic_zero_mode(2, Parity::Even), Err(Error::NoClosedForm(2))));
    }

    #[test]
    fn zero_mode_labels() {
        let d = analytic_zero_mode(0, Parity::Even).unwrap();
        assert_eq!(d.field.description(), "dilatations centred on the origin");
        let t = analytic_zero_mode(0, Parity::Odd).unwrap();
        assert_eq!(t.field.description(), "translations along the x-axis");
        assert_eq!(analytic_zero_mode(1, Parity::Odd).unwrap().field, JacobiField::OrthogonalRotation);
    }

    #[test]
    fn rotation_field_satisfies_robin_condition() {
        let c = c();
        let z = analytic_zero_mode(1, Parity::Odd).unwrap();
        assert_abs_diff_eq!(z.robin_defect(&c), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn shots_match_closed_forms() {
        let c = c();
        for m in 0..=1 {
            for parity in Parity::BOTH {
                let z = analytic_zero_mode(m, parity).unwrap();
                let shot = shoot(&c, &ModeProblem::new(m, 0.0, parity), 1e-12);
                let (f, df) = z.eval_normalized(c.half_length);
                assert_abs_diff_eq!(shot.f_end, f, epsilon = 1e-9);
                assert_abs_diff_eq!(shot.df_end, df, epsilon = 1e-9);
                assert_eq!(shot.scale_exponent, 0);
            }
        }
    }

    #[test]
    fn dilation_shot_vanishes_at_boundary() {
        let c = c();
        let shot = shoot(&c, &ModeProblem::new(0, 0.0, Parity::Even), 1e-12);
        assert!(shot.f_end.abs() < 1e-8 * shot.magnitude());
    }

    #[test]
    fn weight_integral() {
        // f = tanh: int_0^L cosh^2 tanh^2 = int sinh^2 = (sinh 2L / 2 - L) / 2
        let c = c();
        let l = c.half_length;
        let shot = shoot(&c, &ModeProblem::new(0, 0.0, Parity::Odd), 1e-12);
        assert_abs_diff_eq!(shot.weight_end, ((2.0 * l).sinh() / 2.0 - l) / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn trace_is_recorded_at_requested_points() {
        let c = c();
        let xs: Vec<f64> = (0..=4).map(|k| c.half_length * k as f64 / 4.0).collect();
        let shot = shoot_traced(&c, &ModeProblem::new(1, 0.0, Parity::Even), &ShootSettings::adaptive(1e-12), &xs);
        let trace = shot.trace.unwrap();
        assert_eq!(trace.len(), 5);
        for (p, &x) in trace.iter().zip(&xs) {
            assert_eq!(p.x, x);
            assert_abs_diff_eq!(p.f, 1.0 / x.cosh(), epsilon = 1e-10);
        }
    }

    #[test]
    fn rescaling_keeps_projective_data() {
        let c = c();
        let p = ModeProblem::new(3, 400.0, Parity::Odd);
        let big = shoot(&c, &p, 1e-12);
        let small = shoot_with(
            &c,
            &p,
            &ShootSettings {
                rescale_threshold: 10.0,
                ..ShootSettings::adaptive(1e-12)
            },
        );
        assert!(small.scale_exponent > big.scale_exponent);
        let angle = |s: &ShotResult| s.df_end.atan2(s.f_end);
        assert_abs_diff_eq!(angle(&big), angle(&small), epsilon = 1e-10);
    }

    #[test]
    fn riccati_examples() {
        let c = c();
        let l = c.half_length;
        let s = ShootSettings::adaptive(1e-12);

        match riccati_shoot(&c, &ModeProblem::new(0, 0.0, Parity::Even), 0.0, 0.0, &s).unwrap() {
            RiccatiOutcome::PoleDetected { x_pole } => assert!((x_pole - l).abs() < 1e-6, "{x_pole}"),
            other => panic!("expected pole, got {other:?}"),
        }

        let g = riccati_shoot(&c, &ModeProblem::new(2, 0.0, Parity::Even), 0.0, 0.0, &s)
            .unwrap()
            .gamma_end()
            .unwrap();
        assert!(g > 1.0 / l);

        let g = riccati_shoot(&c, &ModeProblem::new(1, 0.0, Parity::Even), 0.0, 0.0, &s)
            .unwrap()
            .gamma_end()
            .unwrap();
        assert_abs_diff_eq!(g, -1.0 / l, epsilon = 1e-8);
    }

    #[test]
    fn riccati_rejects_bad_start() {
        let c = c();
        let s = ShootSettings::adaptive(1e-10);
        let p = ModeProblem::new(0, 1.0, Parity::Even);
        assert!(riccati_shoot(&c, &p, -0.1, 0.0, &s).is_err());
        assert!(riccati_shoot(&c, &p, c.half_length, 0.0, &s).is_err());
    }

    #[test]
    fn foliation_examples() {
        assert_eq!(foliation_field(0.0, 0.0, 0.0), (1.0, -2.0));
        for k in 0..10 {
            let x = 0.1 * k as f64;
            let lift = foliation_field(1.5, x, 0.3).1 - foliation_field(0.0, x, 0.3).1;
            assert_abs_diff_eq!(lift, 1.5 * x.cosh().powi(2), epsilon = 1e-13);
        }
    }
}
