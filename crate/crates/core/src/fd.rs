//! Second-order central finite-difference baselines for the Burgers and Bratu
//! problems, with banded Newton solves and the two fixed-point linearization
//! sweeps.

use crate::banded::{Banded, BandedError};
use crate::colloc::{norm2, NewtonReport};
use crate::problems::{PdeProblem, ProblemKind};
use ndarray::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FdError {
    #[error("finite differences need at least 4 nodes per axis, got {0}")]
    TooFewNodes(usize),
    #[error("no finite-difference discretization for {0:?}")]
    UnsupportedProblem(ProblemKind),
    #[error("state vector has length {got}, grid has {expected} nodes")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("2D grids require a square domain")]
    NonSquareDomain,
    #[error(transparent)]
    Banded(#[from] BandedError),
}

/// Uniform tensor grid: `n` nodes per axis including the boundary,
/// spacing h = |I|/(n−1). 2D nodes are indexed row-major, id = iy·n + ix.
#[derive(Debug, Clone)]
pub struct FdGrid {
    pub n: usize,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub h: f64,
}

impl FdGrid {
    pub fn new(problem: &PdeProblem, n: usize) -> Result<Self, FdError> {
        if n < 4 {
            return Err(FdError::TooFewNodes(n));
        }
        if matches!(problem.kind, ProblemKind::BratuRadial { .. }) {
            return Err(FdError::UnsupportedProblem(problem.kind.clone()));
        }
        let dim = problem.dim();
        let len0 = problem.domain.length(0);
        if dim == 2 && (problem.domain.length(1) - len0).abs() > 1e-14 * len0 {
            return Err(FdError::NonSquareDomain);
        }
        let lower = (0..dim).map(|k| problem.domain.lower(k)).collect();
        Ok(FdGrid {
            n,
            dim,
            lower,
            h: len0 / (n - 1) as f64,
        })
    }

    /// Total unknown count (boundary nodes included).
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        self.lower[axis] + self.h * k as f64
    }

    /// Node coordinates in state-vector order.
    pub fn nodes(&self) -> Array2<f64> {
        match self.dim {
            1 => Array2::from_shape_fn((self.n, 1), |(i, _)| self.coord(0, i)),
            _ => {
                let n = self.n;
                Array2::from_shape_fn((n * n, 2), |(id, c)| {
                    let (iy, ix) = (id / n, id % n);
                    if c == 0 {
                        self.coord(0, ix)
                    } else {
                        self.coord(1, iy)
                    }
                })
            }
        }
    }

    fn check_u(&self, u: &Array1<f64>) -> Result<(), FdError> {
        if u.len() != self.len() {
            return Err(FdError::DimensionMismatch {
                expected: self.len(),
                got: u.len(),
            });
        }
        Ok(())
    }
}

/// Residual of the discretized system; boundary rows are explicit residual
/// rows (Dirichlet u−g, one-sided Neumann stencil for mixed Burgers), keeping
/// the system square and the Jacobian assembly uniform.
pub fn fd_residual(
    problem: &PdeProblem,
    grid: &FdGrid,
    u: &Array1<f64>,
    param: f64,
) -> Result<Array1<f64>, FdError> {
    grid.check_u(u)?;
    let n = grid.n;
    let h = grid.h;
    let mut r = Array1::zeros(grid.len());
    match problem.kind {
        ProblemKind::BurgersDirichlet { nu } | ProblemKind::BurgersMixed { nu, .. } => {
            for j in 1..n - 1 {
                r[j] = nu / (h * h) * (u[j + 1] - 2.0 * u[j] + u[j - 1])
                    - u[j] * (u[j + 1] - u[j - 1]) / (2.0 * h);
            }
            match problem.kind {
                ProblemKind::BurgersDirichlet { .. } => {
                    r[0] = u[0] - problem.gamma().expect("dirichlet burgers has gamma");
                }
                _ => {
                    // second-order one-sided stencil for u'(0) = −θ
                    r[0] = 3.0 * u[0] - 4.0 * u[1] + u[2] - 2.0 * h * param;
                }
            }
            r[n - 1] = u[n - 1];
        }
        ProblemKind::Bratu1d { .. } => {
            for j in 1..n - 1 {
                r[j] = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (h * h) + param * u[j].exp();
            }
            r[0] = u[0];
            r[n - 1] = u[n - 1];
        }
        ProblemKind::Bratu2d { .. } => {
            let h2 = h * h;
            for iy in 0..n {
                for ix in 0..n {
                    let id = iy * n + ix;
                    if ix == 0 || ix == n - 1 || iy == 0 || iy == n - 1 {
                        r[id] = u[id];
                    } else {
                        r[id] = (u[id + 1] + u[id - 1] + u[id + n] + u[id - n] - 4.0 * u[id]) / h2
                            + param * u[id].exp();
                    }
                }
            }
        }
        ProblemKind::BratuRadial { .. } => {
            return Err(FdError::UnsupportedProblem(problem.kind.clone()))
        }
    }
    Ok(r)
}

/// Analytic Jacobian of [`fd_residual`] in banded form.
pub fn fd_jacobian(
    problem: &PdeProblem,
    grid: &FdGrid,
    u: &Array1<f64>,
    param: f64,
) -> Result<Banded, FdError> {
    grid.check_u(u)?;
    let n = grid.n;
    let h = grid.h;
    match problem.kind {
        ProblemKind::BurgersDirichlet { nu } | ProblemKind::BurgersMixed { nu, .. } => {
            let mut jac = Banded::zeros(n, 2, 2);
            let h2 = h * h;
            for j in 1..n - 1 {
                jac.set(j, j - 1, nu / h2 + u[j] / (2.0 * h))?;
                jac.set(j, j, -2.0 * nu / h2 - (u[j + 1] - u[j - 1]) / (2.0 * h))?;
                jac.set(j, j + 1, nu / h2 - u[j] / (2.0 * h))?;
            }
            match problem.kind {
                ProblemKind::BurgersDirichlet { .. } => jac.set(0, 0, 1.0)?,
                _ => {
                    jac.set(0, 0, 3.0)?;
                    jac.set(0, 1, -4.0)?;
                    jac.set(0, 2, 1.0)?;
                }
            }
            jac.set(n - 1, n - 1, 1.0)?;
            Ok(jac)
        }
        ProblemKind::Bratu1d { .. } => {
            let mut jac = Banded::zeros(n, 1, 1);
            let h2 = h * h;
            for j in 1..n - 1 {
                jac.set(j, j - 1, 1.0 / h2)?;
                jac.set(j, j, -2.0 / h2 + param * u[j].exp())?;
                jac.set(j, j + 1, 1.0 / h2)?;
            }
            jac.set(0, 0, 1.0)?;
            jac.set(n - 1, n - 1, 1.0)?;
            Ok(jac)
        }
        ProblemKind::Bratu2d { .. } => {
            let len = grid.len();
            let mut jac = Banded::zeros(len, n, n);
            let h2 = h * h;
            for iy in 0..n {
                for ix in 0..n {
                    let id = iy * n + ix;
                    if ix == 0 || ix == n - 1 || iy == 0 || iy == n - 1 {
                        jac.set(id, id, 1.0)?;
                    } else {
                        jac.set(id, id - 1, 1.0 / h2)?;
                        jac.set(id, id + 1, 1.0 / h2)?;
                        jac.set(id, id - n, 1.0 / h2)?;
                        jac.set(id, id + n, 1.0 / h2)?;
                        jac.set(id, id, -4.0 / h2 + param * u[id].exp())?;
                    }
                }
            }
            Ok(jac)
        }
        ProblemKind::BratuRadial { .. } => Err(FdError::UnsupportedProblem(problem.kind.clone())),
    }
}

/// Newton iteration with a banded direct solve; convergence on the relative
/// L₂ change of the node values. Divergence is flagged, not thrown.
pub fn fd_newton_solve(
    problem: &PdeProblem,
    grid: &FdGrid,
    u0: &Array1<f64>,
    param: f64,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonReport, FdError> {
    grid.check_u(u0)?;
    const STEP_CAP: f64 = 1e3;
    let mut u = u0.clone();
    let mut residual_norms = Vec::new();
    let mut step_norms = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let f = fd_residual(problem, grid, &u, param)?;
        let rnorm = norm2(&f);
        residual_norms.push(rnorm);
        if !rnorm.is_finite() {
            diverged = true;
            break;
        }
        let jac = fd_jacobian(problem, grid, &u, param)?;
        let mut du = match jac.factor().and_then(|lu| lu.solve(&f)) {
            Ok(x) => x,
            Err(BandedError::Singular { .. }) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        du.mapv_inplace(|v| -v);
        let du_norm = norm2(&du);
        if !du_norm.is_finite() {
            diverged = true;
            break;
        }
        if du_norm > STEP_CAP {
            du *= STEP_CAP / du_norm;
        }
        u += &du;
        let step = norm2(&du) / norm2(&u).max(1.0);
        step_norms.push(step);
        if step < tol {
            converged = true;
            break;
        }
    }
    Ok(NewtonReport {
        converged,
        diverged,
        iterations,
        residual_norms,
        step_norms,
        final_w: u,
    })
}

/// Result of a fixed-point sweep sequence.
#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub u: Array1<f64>,
    pub step_norms: Vec<f64>,
    pub converged: bool,
}

/// Picard sweeps for the Dirichlet Burgers problem: each sweep solves the
/// linear advection–diffusion system with the advection coefficient frozen at
/// the previous iterate. Converges only from good initial guesses.
pub fn fixed_point_burgers(
    grid: &FdGrid,
    nu: f64,
    u0: &Array1<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointReport, FdError> {
    grid.check_u(u0)?;
    let n = grid.n;
    let h = grid.h;
    let gamma = 2.0 / (1.0 + (-1.0 / nu).exp()) - 1.0;
    let mut u = u0.clone();
    let mut step_norms = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let mut a = Banded::zeros(n, 1, 1);
        let mut rhs = Array1::zeros(n);
        a.set(0, 0, 1.0)?;
        rhs[0] = gamma;
        for j in 1..n - 1 {
            a.set(j, j - 1, nu / (h * h) + u[j] / (2.0 * h))?;
            a.set(j, j, -2.0 * nu / (h * h))?;
            a.set(j, j + 1, nu / (h * h) - u[j] / (2.0 * h))?;
        }
        a.set(n - 1, n - 1, 1.0)?;
        let next = match a.factor().and_then(|lu| lu.solve(&rhs)) {
            Ok(x) => x,
            Err(BandedError::Singular { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        if !next.iter().all(|v| v.is_finite()) {
            break;
        }
        let diff = &next - &u;
        let step = norm2(&diff) / norm2(&next).max(1.0);
        step_norms.push(step);
        u = next;
        if step < tol {
            converged = true;
            break;
        }
    }
    Ok(FixedPointReport {
        u,
        step_norms,
        converged,
    })
}

/// Picard sweeps for the 1D Bratu problem with the exponential linearized at
/// the previous iterate: Δu⁽ᵏ⁾ + λe^{u⁽ᵏ⁻¹⁾}u⁽ᵏ⁾ = λ(u⁽ᵏ⁻¹⁾−1)e^{u⁽ᵏ⁻¹⁾}.
pub fn fixed_point_bratu(
    grid: &FdGrid,
    lambda: f64,
    u0: &Array1<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointReport, FdError> {
    grid.check_u(u0)?;
    let n = grid.n;
    let h = grid.h;
    let mut u = u0.clone();
    let mut step_norms = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let mut a = Banded::zeros(n, 1, 1);
        let mut rhs = Array1::zeros(n);
        a.set(0, 0, 1.0)?;
        for j in 1..n - 1 {
            let e = u[j].exp();
            a.set(j, j - 1, 1.0 / (h * h))?;
            a.set(j, j, -2.0 / (h * h) + lambda * e)?;
            a.set(j, j + 1, 1.0 / (h * h))?;
            rhs[j] = lambda * (u[j] - 1.0) * e;
        }
        a.set(n - 1, n - 1, 1.0)?;
        let next = match a.factor().and_then(|lu| lu.solve(&rhs)) {
            Ok(x) => x,
            Err(BandedError::Singular { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        if !next.iter().all(|v| v.is_finite()) {
            break;
        }
        let diff = &next - &u;
        let step = norm2(&diff) / norm2(&next).max(1.0);
        step_norms.push(step);
        u = next;
        if step < tol {
            converged = true;
            break;
        }
    }
    Ok(FixedPointReport {
        u,
        step_norms,
        converged,
    })
}

/// Piecewise-linear (1D) or bilinear (2D) interpolation of node values onto
/// arbitrary points inside the domain.
pub fn interpolate(grid: &FdGrid, u: &Array1<f64>, points: &Array2<f64>) -> Array1<f64> {
    let n = grid.n;
    let h = grid.h;
    let cell = |x: f64, axis: usize| -> (usize, f64) {
        let t = (x - grid.lower[axis]) / h;
        let k = (t.floor() as isize).clamp(0, n as isize - 2) as usize;
        (k, t - k as f64)
    };
    match grid.dim {
        1 => Array1::from_shape_fn(points.nrows(), |i| {
            let (k, t) = cell(points[(i, 0)], 0);
            (1.0 - t) * u[k] + t * u[k + 1]
        }),
        _ => Array1::from_shape_fn(points.nrows(), |i| {
            let (kx, tx) = cell(points[(i, 0)], 0);
            let (ky, ty) = cell(points[(i, 1)], 1);
            let id = ky * n + kx;
            (1.0 - ty) * ((1.0 - tx) * u[id] + tx * u[id + 1])
                + ty * ((1.0 - tx) * u[id + n] + tx * u[id + n + 1])
        }),
    }
}
