//! The critical catenoid: its defining constants, its conformal embedding in
//! the unit ball, and a grid quadrature for the second variation of area.
//!
//! The surface is the revolution about the first axis of `cosh(R t) / R` for
//! `t` in `[-L/R, L/R]`, where `L` solves `coth(L) = L` and `R = L cosh(L)`.
//! In the coordinates `(theta, x)` of [`parametrize`] the induced metric is
//! `cosh^2(x) / R^2 (dx^2 + dtheta^2)`, so Dirichlet energies are computed
//! without any metric factor, `|A|^2 dA = 2 sech^2(x) dx dtheta`, and the
//! boundary length element is `cosh(L) / R dtheta = dtheta / L`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Width below which the bracketing phase hands over to Newton polishing.
const BISECTION_HANDOFF: f64 = 1e-4;
const MAX_NEWTON_STEPS: usize = 60;

/// Defining constants of the critical catenoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatenoidConstants {
    /// Half-length `L` of the profile interval, the positive root of `coth(L) = L`.
    pub half_length: f64,
    /// Scale `R = L cosh(L)`.
    pub scale: f64,
    /// Residual tolerance the root was solved to.
    pub root_tol: f64,
}

impl CatenoidConstants {
    /// `coth(L) - L`.
    pub fn residual(&self) -> f64 {
        balance(self.half_length)
    }

    /// Boundary length element `cosh(L) / R` per unit angle. Equal to `1/L`.
    pub fn boundary_density(&self) -> f64 {
        self.half_length.cosh() / self.scale
    }

    /// Uniform profile grid with `n` points on `[-L, L]`, both ends included.
    pub fn profile_grid(&self, n: usize) -> Vec<f64> {
        let l = self.half_length;
        let h = 2.0 * l / (n - 1) as f64;
        (0..n)
            .map(|j| if j + 1 == n { l } else { -l + h * j as f64 })
            .collect()
    }
}

fn balance(l: f64) -> f64 {
    1.0 / l.tanh() - l
}

fn balance_derivative(l: f64) -> f64 {
    let s = l.sinh();
    -1.0 / (s * s) - 1.0
}

/// Solves `coth(L) = L` by bisection on `[1, 2]` followed by Newton polishing.
///
/// `coth - id` is strictly decreasing on `(0, inf)` and changes sign on `[1, 2]`,
/// so the bracket is always valid. Newton iterates that leave the current
/// bracket fall back to a bisection step.
pub fn solve_balance_length(root_tol: f64) -> Result<CatenoidConstants> {
    if !(root_tol > 0.0 && root_tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "root_tol must be positive and finite, got {root_tol}"
        )));
    }

    let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
    while hi - lo > BISECTION_HANDOFF {
        let mid = 0.5 * (lo + hi);
        if balance(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut l = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON_STEPS {
        let g = balance(l);
        if g == 0.0 {
            break;
        }
        if g > 0.0 {
            lo = l;
        } else {
            hi = l;
        }
        let mut next = l - g / balance_derivative(l);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - l).abs();
        l = next;
        if step <= 2.0 * f64::EPSILON * l && balance(l).abs() <= root_tol {
            break;
        }
    }

    Ok(CatenoidConstants {
        half_length: l,
        scale: l * l.cosh(),
        root_tol,
    })
}

/// A point of the embedded surface together with its coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    /// Angle reduced to `[0, 2 pi)`.
    pub theta: f64,
    pub x: f64,
    pub position: [f64; 3],
}

/// The conformal embedding `(1/R) (x, cosh x cos theta, cosh x sin theta)`.
pub fn parametrize(c: &CatenoidConstants, theta: f64, x: f64) -> Result<SurfacePoint> {
    check_profile_domain(c, x)?;
    let (s, co) = theta.sin_cos();
    let ch = x.cosh();
    let r = c.scale;
    Ok(SurfacePoint {
        theta: theta.rem_euclid(2.0 * PI),
        x,
        position: [x / r, ch * co / r, ch * s / r],
    })
}

fn check_profile_domain(c: &CatenoidConstants, x: f64) -> Result<()> {
    if x.is_finite() && x.abs() <= c.half_length {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            x,
            half_length: c.half_length,
        })
    }
}

/// Coordinate tangent vectors `(d/dx, d/dtheta)` of the embedding.
pub fn tangent_frame(c: &CatenoidConstants, theta: f64, x: f64) -> Result<[[f64; 3]; 2]> {
    check_profile_domain(c, x)?;
    let (s, co) = theta.sin_cos();
    let r = c.scale;
    Ok([
        [1.0 / r, x.sinh() * co / r, x.sinh() * s / r],
        [0.0, -x.cosh() * s / r, x.cosh() * co / r],
    ])
}

/// `<Phi, Phi_x x Phi_theta>`. Vanishes on the boundary circles exactly when
/// the surface meets the sphere orthogonally.
pub fn contact_flux(c: &CatenoidConstants, theta: f64, x: f64) -> Result<f64> {
    let p = parametrize(c, theta, x)?.position;
    let [a, b] = tangent_frame(c, theta, x)?;
    let n = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    Ok(p[0] * n[0] + p[1] * n[1] + p[2] * n[2])
}

/// Samples of a function on the tensor grid used by [`second_variation`].
///
/// `theta` runs over `n_theta` uniform points of `[0, 2 pi)`, `x` over `n_x`
/// uniform points of `[-L, L]` including both ends. Storage is theta-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub n_theta: usize,
    pub n_x: usize,
    pub values: Vec<f64>,
}

/// Angular factor used to lift a profile `f(x)` to `f(x) cos(m theta)` or `f(x) sin(m theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Angular {
    Cos,
    Sin,
}

impl GridField {
    pub fn new(n_theta: usize, n_x: usize, values: Vec<f64>) -> Result<Self> {
        if n_theta * n_x != values.len() {
            return Err(Error::GridShape {
                n_theta,
                n_x,
                len: values.len(),
            });
        }
        Ok(Self {
            n_theta,
            n_x,
            values,
        })
    }

    pub fn sample(
        c: &CatenoidConstants,
        n_theta: usize,
        n_x: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let xs = c.profile_grid(n_x);
        let mut values = Vec::with_capacity(n_theta * n_x);
        for i in 0..n_theta {
            let theta = 2.0 * PI * i as f64 / n_theta as f64;
            values.extend(xs.iter().map(|&x| f(theta, x)));
        }
        Self {
            n_theta,
            n_x,
            values,
        }
    }

    /// Lifts profile samples (on the grid of [`CatenoidConstants::profile_grid`])
    /// to a separable field on the annulus.
    pub fn lift_profile(profile: &[f64], n_theta: usize, m: u32, angular: Angular) -> Self {
        let mut values = Vec::with_capacity(n_theta * profile.len());
        for i in 0..n_theta {
            let phase = m as f64 * 2.0 * PI * i as f64 / n_theta as f64;
            let a = match angular {
                Angular::Cos => phase.cos(),
                Angular::Sin => phase.sin(),
            };
            values.extend(profile.iter().map(|&f| a * f));
        }
        Self {
            n_theta,
            n_x: profile.len(),
            values,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_x + j]
    }

    fn check(&self) -> Result<()> {
        if self.n_theta < 8 || self.n_x < 8 {
            return Err(Error::GridTooSmall {
                n_theta: self.n_theta,
                n_x: self.n_x,
            });
        }
        if self.values.len() != self.n_theta * self.n_x {
            return Err(Error::GridShape {
                n_theta: self.n_theta,
                n_x: self.n_x,
                len: self.values.len(),
            });
        }
        Ok(())
    }
}

fn trapezoid_weights(n: usize, h: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| if j == 0 || j + 1 == n { 0.5 * h } else { h })
}

/// Quadrature value of the second variation of area
///
/// `S(f, f) = iint (f_x^2 + f_theta^2 - 2 sech^2(x) f^2) dx dtheta
///            - (cosh L / R) oint (f(., L)^2 + f(., -L)^2) dtheta`.
///
/// Derivatives are centered differences (second-order one-sided at `x = +-L`,
/// periodic in theta); integrals are composite trapezoid in both directions.
pub fn second_variation(c: &CatenoidConstants, field: &GridField) -> Result<f64> {
    field.check()?;
    let (nt, nx) = (field.n_theta, field.n_x);
    let xs = c.profile_grid(nx);
    let hx = 2.0 * c.half_length / (nx - 1) as f64;
    let ht = 2.0 * PI / nt as f64;
    let potential: Vec<f64> = xs.iter().map(|x| 2.0 / x.cosh().powi(2)).collect();

    let mut bulk = 0.0;
    let mut rim = 0.0;
    for i in 0..nt {
        let up = (i + 1) % nt;
        let down = (i + nt - 1) % nt;
        let row = &field.values[i * nx..(i + 1) * nx];
        let mut line = 0.0;
        for (j, w) in trapezoid_weights(nx, hx).enumerate() {
            let fx = if j == 0 {
                (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * hx)
            } else if j + 1 == nx {
                (3.0 * row[nx - 1] - 4.0 * row[nx - 2] + row[nx - 3]) / (2.0 * hx)
            } else {
                (row[j + 1] - row[j - 1]) / (2.0 * hx)
            };
            let ft = (field.at(up, j) - field.at(down, j)) / (2.0 * ht);
            let f = row[j];
            line += w * (fx * fx + ft * ft - potential[j] * f * f);
        }
        bulk += ht * line;
        rim += ht * (row[0] * row[0] + row[nx - 1] * row[nx - 1]);
    }
    Ok(bulk - c.boundary_density() * rim)
}

/// `iint cosh^2(x) f^2 dx dtheta`, i.e. `R^2` times the surface L2 norm squared.
pub fn conformal_mass(c: &CatenoidConstants, field: &GridField) -> Result<f64> {
    field.check()?;
    let xs = c.profile_grid(field.n_x);
    let hx = 2.0 * c.half_length / (field.n_x - 1) as f64;
    let ht = 2.0 * PI / field.n_theta as f64;
    let weights: Vec<f64> = trapezoid_weights(field.n_x, hx)
        .zip(&xs)
        .map(|(w, x)| w * x.cosh().powi(2))
        .collect();
    Ok(field
        .values
        .chunks(field.n_x)
        .map(|row| ht * row.iter().zip(&weights).map(|(f, w)| w * f * f).sum::<f64>())
        .sum())
}
