//! Explicit Dormand–Prince 5(4) stepping for small fixed-size systems.
//!
//! The fifth-order solution is propagated; the embedded fourth-order one only
//! drives step-size control. In fixed mode the same tableau runs with a
//! uniform step and no error estimate, which is what convergence-order checks
//! need.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 2_000_000;

/// How step sizes are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    /// Local error per step at most `tol * max(1, |y|)` componentwise.
    Adaptive { tol: f64 },
    /// Uniform steps of length at most `h`.
    Fixed { h: f64 },
}

/// What the per-step hook asks the stepper to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepFailure {
    /// The adaptive step shrank below the resolution of `x`.
    Underflow { x: f64 },
    NonFinite { x: f64 },
    TooManySteps { x: f64 },
}

impl StepFailure {
    pub fn x(&self) -> f64 {
        match *self {
            StepFailure::Underflow { x } | StepFailure::NonFinite { x } | StepFailure::TooManySteps { x } => x,
        }
    }
}

pub struct Stepper<const N: usize, F> {
    rhs: F,
    pub x: f64,
    pub y: [f64; N],
    h: f64,
    control: StepControl,
    steps: usize,
}

impl<const N: usize, F> Stepper<N, F>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(rhs: F, x: f64, y: [f64; N], control: StepControl) -> Self {
        let h = match control {
            StepControl::Adaptive { tol } => (0.1 * tol.powf(0.2)).clamp(1e-6, 0.05),
            StepControl::Fixed { h } => h,
        };
        Self {
            rhs,
            x,
            y,
            h,
            control,
            steps: 0,
        }
    }

    /// Accepted steps so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    fn trial(&self, h: f64) -> ([f64; N], [f64; N]) {
        let mut k = [[0.0; N]; 7];
        for s in 0..7 {
            let mut ys = self.y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = (self.rhs)(self.x + C[s] * h, &ys);
        }
        let mut y5 = self.y;
        let mut err = [0.0; N];
        for s in 0..7 {
            for i in 0..N {
                y5[i] += h * B5[s] * k[s][i];
                err[i] += h * (B5[s] - B4[s]) * k[s][i];
            }
        }
        (y5, err)
    }

    /// Integrates up to `target` (which must not lie behind the current `x`),
    /// landing on it exactly. `hook` runs after every accepted step and may
    /// rescale the state or stop early.
    pub fn advance_to(
        &mut self,
        target: f64,
        mut hook: impl FnMut(f64, &mut [f64; N]) -> Flow,
    ) -> Result<Flow, StepFailure> {
        let dir = if target >= self.x { 1.0 } else { -1.0 };
        while (target - self.x) * dir > 0.0 {
            if self.steps >= MAX_STEPS {
                return Err(StepFailure::TooManySteps { x: self.x });
            }
            let remaining = (target - self.x).abs();
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            if h <= f64::EPSILON * self.x.abs().max(1.0) * 4.0 && !last {
                return Err(StepFailure::Underflow { x: self.x });
            }
            let (y_new, err) = self.trial(dir * h);
            if y_new.iter().any(|v| !v.is_finite()) {
                if matches!(self.control, StepControl::Fixed { .. }) {
                    return Err(StepFailure::NonFinite { x: self.x });
                }
                self.h = 0.25 * h;
                continue;
            }
            match self.control {
                StepControl::Fixed { .. } => {}
                StepControl::Adaptive { tol } => {
                    let ratio = err
                        .iter()
                        .zip(self.y.iter().zip(&y_new))
                        .map(|(e, (a, b))| e.abs() / (tol * a.abs().max(b.abs()).max(1.0)))
                        .fold(0.0_f64, f64::max);
                    let factor = if ratio == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * ratio.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                    };
                    if ratio > 1.0 {
                        if h * factor <= f64::EPSILON * self.x.abs().max(1.0) * 4.0 {
                            return Err(StepFailure::Underflow { x: self.x });
                        }
                        self.h = h * factor;
                        continue;
                    }
                    // a clipped final step says nothing about the natural size
                    if !last {
                        self.h = h * factor;
                    } else {
                        self.h = self.h.max(h * factor.min(1.0));
                    }
                }
            }
            self.x = if last { target } else { self.x + dir * h };
            self.y = y_new;
            self.steps += 1;
            if hook(self.x, &mut self.y) == Flow::Stop {
                return Ok(Flow::Stop);
            }
        }
        Ok(Flow::Continue)
    }
}
