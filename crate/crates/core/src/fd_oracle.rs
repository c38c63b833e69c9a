//! Finite-difference cross-check of the per-mode Robin spectrum.
//!
//! Each mode is discretized on the whole of `[-L, L]` (no parity split) as the
//! symmetric pencil `K u = mu M u` with
//! `K ~ -d^2/dx^2 + m^2 - 2 sech^2 x`, `M = diag(cosh^2 x)`, so that the
//! shooting parameter is `lambda = -mu`. The Robin rows come from eliminating
//! a ghost node with the centered boundary derivative and halving the row,
//! which keeps `K` symmetric and the scheme second order. Eigenvalues are
//! counted and located by Sturm sequences of `M^{-1/2} K M^{-1/2}`; nothing
//! here touches the shooting code.

use crate::error::{Error, Result};
use crate::geometry::CatenoidConstants;

const MAX_SHIFT_RETRIES: usize = 5;
const GUARD_SHIFT: f64 = 1e-12;
const RELATIVE_EIG_TOL: f64 = 1e-10;
const INVERSE_ITERATIONS: usize = 4;

/// Discretized mode problem on `n + 2` nodes `x_i = -L + i h`, `h = 2L / (n + 1)`:
/// `n` interior nodes and the two boundary nodes, which carry Robin rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModeProblem {
    pub m: u32,
    pub n: usize,
    pub h: f64,
    pub xs: Vec<f64>,
    /// Diagonal of `K`.
    pub stiffness_diag: Vec<f64>,
    /// Off-diagonal of `K`.
    pub stiffness_off: Vec<f64>,
    /// Diagonal of `M`; the boundary entries are halved with their rows.
    pub mass: Vec<f64>,
}

pub fn assemble(c: &CatenoidConstants, m: u32, n: usize) -> Result<DiscreteModeProblem> {
    if n < 64 {
        return Err(Error::InvalidParameter(format!(
            "oracle grid needs n >= 64 interior points, got {n}"
        )));
    }
    let l = c.half_length;
    let nodes = n + 2;
    let h = 2.0 * l / (n + 1) as f64;
    let h2 = h * h;
    let m2 = (m as f64) * (m as f64);
    let xs: Vec<f64> = (0..nodes)
        .map(|i| if i + 1 == nodes { l } else { -l + h * i as f64 })
        .collect();

    let mut diag = Vec::with_capacity(nodes);
    let mut mass = Vec::with_capacity(nodes);
    for (i, &x) in xs.iter().enumerate() {
        let ch2 = x.cosh().powi(2);
        let v = m2 - 2.0 / ch2;
        if i == 0 || i + 1 == nodes {
            diag.push((1.0 - h / l) / h2 + 0.5 * v);
            mass.push(0.5 * ch2);
        } else {
            diag.push(2.0 / h2 + v);
            mass.push(ch2);
        }
    }

    Ok(DiscreteModeProblem {
        m,
        n,
        h,
        xs,
        stiffness_diag: diag,
        stiffness_off: vec![-1.0 / h2; nodes - 1],
        mass,
    })
}

impl DiscreteModeProblem {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// The congruent standard problem `M^{-1/2} K M^{-1/2}` as (diagonal, off-diagonal).
    pub fn standard_form(&self) -> (Vec<f64>, Vec<f64>) {
        let s: Vec<f64> = self.mass.iter().map(|w| 1.0 / w.sqrt()).collect();
        let d = self
            .stiffness_diag
            .iter()
            .zip(&s)
            .map(|(k, s)| k * s * s)
            .collect();
        let e = self
            .stiffness_off
            .iter()
            .enumerate()
            .map(|(i, k)| k * s[i] * s[i + 1])
            .collect();
        (d, e)
    }

    fn scale(&self) -> f64 {
        let (d, e) = self.standard_form();
        d.iter().chain(&e).fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// Number of generalized eigenvalues strictly below `sigma`.
    pub fn sturm_count(&self, sigma: f64) -> Result<usize> {
        let (d, e) = self.standard_form();
        sturm_count_shifted(&d, &e, sigma, GUARD_SHIFT * self.scale())
    }
}

/// Negative-pivot count of `T - sigma I`. An exactly vanishing pivot moves
/// `sigma` down by `guard * 2^k`, at most `MAX_SHIFT_RETRIES` times.
fn sturm_count_shifted(d: &[f64], e: &[f64], sigma: f64, guard: f64) -> Result<usize> {
    let mut shift = sigma;
    for retry in 0..=MAX_SHIFT_RETRIES {
        if let Some(count) = sturm_pivots(d, e, shift) {
            return Ok(count);
        }
        shift = sigma - guard * f64::powi(2.0, retry as i32);
    }
    Err(Error::SingularPivot {
        retries: MAX_SHIFT_RETRIES,
    })
}

fn sturm_pivots(d: &[f64], e: &[f64], sigma: f64) -> Option<usize> {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        q = if i == 0 {
            d[0] - sigma
        } else {
            d[i] - sigma - e[i - 1] * e[i - 1] / q
        };
        if q == 0.0 || !q.is_finite() {
            return None;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    Some(count)
}

/// Counts `mu < 0`, i.e. positive shooting parameters `lambda = -mu`.
///
/// The count is taken just below zero, at `-1e-12 * max|T|`, so a kernel
/// vector is not counted.
pub fn count_negative_mu(p: &DiscreteModeProblem) -> Result<usize> {
    let (d, e) = p.standard_form();
    let guard = GUARD_SHIFT * p.scale();
    sturm_count_shifted(&d, &e, -guard, guard)
}

/// Generalized eigenpair; `vector` is `M`-orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub mu: f64,
    pub vector: Vec<f64>,
}

impl EigenPair {
    /// `lambda = -mu` in the shooting convention.
    pub fn lambda(&self) -> f64 {
        -self.mu
    }

    /// Interior sign changes of the vector, ignoring entries below `1e-12` of its max.
    pub fn sign_changes(&self) -> usize {
        let cut = 1e-12 * self.vector.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let signs: Vec<bool> = self
            .vector
            .iter()
            .filter(|v| v.abs() > cut)
            .map(|v| *v > 0.0)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// `max |v(x) - s v(-x)| / max |v|` with `s = +1` (even) or `-1` (odd).
    pub fn parity_defect(&self, sign: f64) -> f64 {
        let n = self.vector.len();
        let max = self.vector.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        (0..n)
            .map(|i| (self.vector[i] - sign * self.vector[n - 1 - i]).abs())
            .fold(0.0_f64, f64::max)
            / max
    }
}

/// `i`-th smallest eigenvalue (0-based) of `T` by bisection on the Sturm count.
fn kth_eigenvalue(d: &[f64], e: &[f64], k: usize, guard: f64) -> Result<f64> {
    let radius = (0..d.len())
        .map(|i| {
            let left = if i > 0 { e[i - 1].abs() } else { 0.0 };
            let right = if i < e.len() { e[i].abs() } else { 0.0 };
            (d[i] - left - right, d[i] + left + right)
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)));
    let (mut lo, mut hi) = (radius.0 - 1.0, radius.1 + 1.0);
    let floor = 8.0 * f64::EPSILON * lo.abs().max(hi.abs());
    loop {
        let mid = 0.5 * (lo + hi);
        let width = hi - lo;
        if width <= (RELATIVE_EIG_TOL * mid.abs()).max(floor) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if sturm_count_shifted(d, e, mid, guard)? > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// The `k` eigenpairs with smallest `|mu|`, returned in increasing `mu`.
///
/// Eigenvalues are resolved to relative `1e-10` or to the rounding floor
/// `8 eps max|T|`, whichever is larger; vectors come from inverse iteration.
pub fn eigenvalues_near_zero(p: &DiscreteModeProblem, k: usize) -> Result<Vec<EigenPair>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let (d, e) = p.standard_form();
    let n = d.len();
    let guard = GUARD_SHIFT * p.scale();
    let below = sturm_count_shifted(&d, &e, 0.0, guard)?;
    let first = below.saturating_sub(k);
    let last = (below + k).min(n);
    let mut mus = (first..last)
        .map(|i| kth_eigenvalue(&d, &e, i, guard))
        .collect::<Result<Vec<f64>>>()?;
    mus.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    mus.truncate(k);
    mus.sort_by(f64::total_cmp);

    Ok(mus
        .into_iter()
        .map(|mu| {
            let u = inverse_iteration(&d, &e, mu);
            let mut v: Vec<f64> = u.iter().zip(&p.mass).map(|(u, w)| u / w.sqrt()).collect();
            // fix the sign by the largest component
            let big = v.iter().fold(0.0_f64, |a, x| if x.abs() > a.abs() { *x } else { a });
            if big < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            EigenPair { mu, vector: v }
        })
        .collect())
}

fn inverse_iteration(d: &[f64], e: &[f64], mu: f64) -> Vec<f64> {
    let n = d.len();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * ((i as f64) * 0.7).sin()).collect();
    let tiny = f64::EPSILON * d.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    for _ in 0..INVERSE_ITERATIONS {
        let diag: Vec<f64> = d.iter().map(|v| v - mu).collect();
        x = solve_tridiagonal(e, &diag, e, &x, tiny);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x
}

/// Solves a tridiagonal system by Gaussian elimination with partial pivoting.
/// Zero pivots are replaced by `tiny`, as inverse iteration wants.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64], tiny: f64) -> Vec<f64> {
    let n = diag.len();
    let dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    let nonzero = |v: f64| if v == 0.0 { tiny } else { v };

    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            d[i] = nonzero(d[i]);
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    d[n - 1] = nonzero(d[n - 1]);

    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
    b
}

/// Positive shooting parameters `lambda = -mu` for `mu < 0`, in increasing order.
pub fn negative_lambdas(p: &DiscreteModeProblem) -> Result<Vec<f64>> {
    let count = count_negative_mu(p)?;
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut pairs = eigenvalues_near_zero(p, count + 1)?;
    pairs.retain(|e| e.mu < 0.0);
    pairs.truncate(count);
    let mut lambdas: Vec<f64> = pairs.iter().map(EigenPair::lambda).collect();
    lambdas.sort_by(f64::total_cmp);
    Ok(lambdas)
}

/// Eliminates the `h^2` term from two grid values.
pub fn richardson(h_coarse: f64, coarse: f64, h_fine: f64, fine: f64) -> f64 {
    let (a, b) = (h_coarse * h_coarse, h_fine * h_fine);
    (fine * a - coarse * b) / (a - b)
}

/// Richardson-extrapolated `lambda` values from grids `n_coarse` and `n_fine`.
pub fn extrapolated_lambdas(
    c: &CatenoidConstants,
    m: u32,
    n_coarse: usize,
    n_fine: usize,
) -> Result<Vec<f64>> {
    let coarse = assemble(c, m, n_coarse)?;
    let fine = assemble(c, m, n_fine)?;
    let lc = negative_lambdas(&coarse)?;
    let lf = negative_lambdas(&fine)?;
    if lc.len() != lf.len() {
        return Err(Error::InvalidParameter(format!(
            "oracle counts differ between n = {n_coarse} ({}) and n = {n_fine} ({})",
            lc.len(),
            lf.len()
        )));
    }
    Ok(lc
        .iter()
        .zip(&lf)
        .map(|(a, b)| richardson(coarse.h, *a, fine.h, *b))
        .collect())
}
