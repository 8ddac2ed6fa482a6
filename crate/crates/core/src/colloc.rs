//! Collocation of the benchmark PDEs on a random-feature basis and the damped
//! Newton iteration on the resulting rectangular systems.
//!
//! The basis value/derivative matrices at the collocation points are frozen at
//! construction; each Newton iteration then costs a few mat-vecs plus one
//! rectangular least-squares solve.

use crate::basis::{
    collocation_matrix, collocation_matrix_d1, collocation_matrix_d2, BasisError, ElmBasis,
};
use crate::lsq::{self, LinearSolveConfig, LsqError};
use crate::problems::{PdeProblem, ProblemError, ProblemKind};
use ndarray::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CollocError {
    #[error("grid of {m} points is too small to carry the boundary conditions")]
    GridTooSmall { m: usize },
    #[error("coefficient vector has length {got}, basis has {expected} neurons")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least {need} sample points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error(transparent)]
    Lsq(#[from] LsqError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// Interior and boundary collocation points. Rows of the assembled residual
/// follow the layout: interior points first, then the boundary pieces in order.
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    pub interior: Array2<f64>,
    pub boundary_pieces: Vec<Array2<f64>>,
}

impl CollocationGrid {
    pub fn interior_count(&self) -> usize {
        self.interior.nrows()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary_pieces.iter().map(|p| p.nrows()).sum()
    }

    pub fn total(&self) -> usize {
        self.interior_count() + self.boundary_count()
    }

    /// All points, interior first then boundary pieces in order.
    pub fn all_points(&self) -> Array2<f64> {
        let dim = self.interior.ncols();
        let mut out = Array2::zeros((self.total(), dim));
        let mut r = 0;
        for row in self.interior.rows() {
            out.row_mut(r).assign(&row);
            r += 1;
        }
        for piece in &self.boundary_pieces {
            for row in piece.rows() {
                out.row_mut(r).assign(&row);
                r += 1;
            }
        }
        out
    }
}

/// Equispaced collocation grid with M = round(ratio·N) points.
///
/// 1D: an M-point equispaced grid whose two endpoints are the boundary rows.
/// 2D: the perimeter of an m×m lattice (m chosen so the 4(m−1) boundary
/// points fit inside M) plus an evenly strided selection of its interior
/// points, totalling exactly M.
pub fn make_grid(
    problem: &PdeProblem,
    n_basis: usize,
    ratio: f64,
) -> Result<CollocationGrid, CollocError> {
    let m = (ratio * n_basis as f64).round() as usize;
    let dim = problem.dim();
    match dim {
        1 => {
            if m < 4 {
                return Err(CollocError::GridTooSmall { m });
            }
            let (a, b) = (problem.domain.lower(0), problem.domain.upper(0));
            let xs = Array1::linspace(a, b, m);
            let interior = Array2::from_shape_fn((m - 2, 1), |(i, _)| xs[i + 1]);
            let left = array![[a]];
            let right = array![[b]];
            Ok(CollocationGrid {
                interior,
                boundary_pieces: vec![left, right],
            })
        }
        2 => {
            let mut side = (m as f64).sqrt().ceil() as usize;
            while side >= 3 && 4 * (side - 1) + 1 > m {
                side -= 1;
            }
            if side < 3 {
                return Err(CollocError::GridTooSmall { m });
            }
            let coord = |axis: usize, k: usize| {
                let (a, b) = (problem.domain.lower(axis), problem.domain.upper(axis));
                a + (b - a) * k as f64 / (side - 1) as f64
            };
            let bottom =
                Array2::from_shape_fn((side, 2), |(i, c)| if c == 0 { coord(0, i) } else { coord(1, 0) });
            let top = Array2::from_shape_fn((side, 2), |(i, c)| {
                if c == 0 {
                    coord(0, i)
                } else {
                    coord(1, side - 1)
                }
            });
            let left = Array2::from_shape_fn((side - 2, 2), |(i, c)| {
                if c == 0 {
                    coord(0, 0)
                } else {
                    coord(1, i + 1)
                }
            });
            let right = Array2::from_shape_fn((side - 2, 2), |(i, c)| {
                if c == 0 {
                    coord(0, side - 1)
                } else {
                    coord(1, i + 1)
                }
            });
            let n_bnd = 4 * (side - 1);
            let n_int = m - n_bnd;
            let avail = (side - 2) * (side - 2);
            debug_assert!(n_int <= avail);
            // evenly strided selection keeps coverage when M is not a lattice count
            let mut interior = Array2::zeros((n_int, 2));
            for k in 0..n_int {
                let idx = k * avail / n_int;
                let (row, col) = (idx / (side - 2), idx % (side - 2));
                interior[(k, 0)] = coord(0, col + 1);
                interior[(k, 1)] = coord(1, row + 1);
            }
            Ok(CollocationGrid {
                interior,
                boundary_pieces: vec![bottom, top, left, right],
            })
        }
        d => Err(CollocError::Basis(BasisError::InvalidDimension(d))),
    }
}

/// Outcome of a Newton run: iterate history plus the final coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewtonReport {
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub residual_norms: Vec<f64>,
    pub step_norms: Vec<f64>,
    pub final_w: Array1<f64>,
}

/// Precomputed collocation system for one (problem, basis, grid) triple.
pub struct ElmCollocation {
    problem: PdeProblem,
    basis: ElmBasis,
    grid: CollocationGrid,
    v_int: Array2<f64>,
    d1_int: Array2<f64>,
    lap_int: Array2<f64>,
    bnd_op: Array2<f64>,
    bnd_rhs: Array1<f64>,
    bnd_param: Array1<f64>,
    s_all: Array2<f64>,
}

impl ElmCollocation {
    pub fn new(
        problem: PdeProblem,
        basis: ElmBasis,
        grid: CollocationGrid,
    ) -> Result<Self, CollocError> {
        let n = basis.n_neurons();
        let dim = problem.dim();
        let v_int = collocation_matrix(&basis, &grid.interior);
        let mut lap_int = collocation_matrix_d2(&basis, &grid.interior, 0);
        if dim == 2 {
            lap_int += &collocation_matrix_d2(&basis, &grid.interior, 1);
        }
        let d1_int = match problem.kind {
            ProblemKind::BurgersDirichlet { .. } | ProblemKind::BurgersMixed { .. } => {
                collocation_matrix_d1(&basis, &grid.interior, 0)
            }
            ProblemKind::BratuRadial { .. } => {
                let d1 = collocation_matrix_d1(&basis, &grid.interior, 0);
                // fold the 1/r advection weight into the interior operator
                for (i, mut row) in lap_int.rows_mut().into_iter().enumerate() {
                    let r = grid.interior[(i, 0)];
                    row.scaled_add(1.0 / r, &d1.row(i));
                }
                d1
            }
            _ => Array2::zeros((0, n)),
        };
        let n_bnd = grid.boundary_count();
        let mut bnd_op = Array2::zeros((n_bnd, n));
        let mut bnd_rhs = Array1::zeros(n_bnd);
        let mut bnd_param = Array1::zeros(n_bnd);
        let mut row = 0usize;
        for (piece_idx, piece) in grid.boundary_pieces.iter().enumerate() {
            for p in piece.rows() {
                let point = p.as_slice().expect("contiguous");
                match problem.kind {
                    ProblemKind::BurgersDirichlet { .. } => {
                        bnd_op.row_mut(row).assign(&basis.eval(point));
                        if piece_idx == 0 {
                            bnd_rhs[row] = problem.gamma().expect("dirichlet burgers has gamma");
                        }
                    }
                    ProblemKind::BurgersMixed { .. } => {
                        if piece_idx == 0 {
                            // Neumann row: Σ w ψ'(0) + θ
                            bnd_op.row_mut(row).assign(&basis.eval_d1(point, 0));
                            bnd_param[row] = 1.0;
                        } else {
                            bnd_op.row_mut(row).assign(&basis.eval(point));
                        }
                    }
                    ProblemKind::BratuRadial { .. } => {
                        if piece_idx == 0 {
                            // symmetry condition u'(0) = 0
                            bnd_op.row_mut(row).assign(&basis.eval_d1(point, 0));
                        } else {
                            bnd_op.row_mut(row).assign(&basis.eval(point));
                        }
                    }
                    ProblemKind::Bratu1d { .. } | ProblemKind::Bratu2d { .. } => {
                        bnd_op.row_mut(row).assign(&basis.eval(point));
                    }
                }
                row += 1;
            }
        }
        let s_all = collocation_matrix(&basis, &grid.all_points());
        Ok(ElmCollocation {
            problem,
            basis,
            grid,
            v_int,
            d1_int,
            lap_int,
            bnd_op,
            bnd_rhs,
            bnd_param,
            s_all,
        })
    }

    pub fn problem(&self) -> &PdeProblem {
        &self.problem
    }

    pub fn basis(&self) -> &ElmBasis {
        &self.basis
    }

    pub fn grid(&self) -> &CollocationGrid {
        &self.grid
    }

    pub fn n_unknowns(&self) -> usize {
        self.basis.n_neurons()
    }

    pub fn n_equations(&self) -> usize {
        self.grid.total()
    }

    /// Collocation matrix at every grid point (solution values, not residual rows).
    pub fn value_matrix(&self) -> &Array2<f64> {
        &self.s_all
    }

    fn check_w(&self, w: &Array1<f64>) -> Result<(), CollocError> {
        if w.len() != self.basis.n_neurons() {
            return Err(CollocError::DimensionMismatch {
                expected: self.basis.n_neurons(),
                got: w.len(),
            });
        }
        Ok(())
    }

    pub fn residual(&self, w: &Array1<f64>, param: f64) -> Result<Array1<f64>, CollocError> {
        self.check_w(w)?;
        let m_int = self.grid.interior_count();
        let mut out = Array1::zeros(self.n_equations());
        match self.problem.kind {
            ProblemKind::BurgersDirichlet { nu } | ProblemKind::BurgersMixed { nu, .. } => {
                let u = self.v_int.dot(w);
                let ux = self.d1_int.dot(w);
                let uxx = self.lap_int.dot(w);
                for i in 0..m_int {
                    out[i] = nu * uxx[i] - u[i] * ux[i];
                }
            }
            ProblemKind::Bratu1d { .. }
            | ProblemKind::Bratu2d { .. }
            | ProblemKind::BratuRadial { .. } => {
                let u = self.v_int.dot(w);
                let lin = self.lap_int.dot(w);
                for i in 0..m_int {
                    out[i] = lin[i] + param * u[i].exp();
                }
            }
        }
        let bnd = self.bnd_op.dot(w);
        for (k, b) in bnd.iter().enumerate() {
            out[m_int + k] = b - self.bnd_rhs[k] + param * self.bnd_param[k];
        }
        Ok(out)
    }

    pub fn jacobian(&self, w: &Array1<f64>, param: f64) -> Result<Array2<f64>, CollocError> {
        self.check_w(w)?;
        let m_int = self.grid.interior_count();
        let n = self.basis.n_neurons();
        let mut jac = Array2::zeros((self.n_equations(), n));
        match self.problem.kind {
            ProblemKind::BurgersDirichlet { nu } | ProblemKind::BurgersMixed { nu, .. } => {
                let u = self.v_int.dot(w);
                let ux = self.d1_int.dot(w);
                for i in 0..m_int {
                    let mut row = jac.row_mut(i);
                    row.assign(&self.lap_int.row(i));
                    row *= nu;
                    row.scaled_add(-ux[i], &self.v_int.row(i));
                    row.scaled_add(-u[i], &self.d1_int.row(i));
                }
            }
            ProblemKind::Bratu1d { .. }
            | ProblemKind::Bratu2d { .. }
            | ProblemKind::BratuRadial { .. } => {
                let u = self.v_int.dot(w);
                for i in 0..m_int {
                    let mut row = jac.row_mut(i);
                    row.assign(&self.lap_int.row(i));
                    row.scaled_add(param * u[i].exp(), &self.v_int.row(i));
                }
            }
        }
        for k in 0..self.bnd_op.nrows() {
            jac.row_mut(m_int + k).assign(&self.bnd_op.row(k));
        }
        Ok(jac)
    }

    /// ∂F/∂param: exp(u) on interior rows for the Bratu family, the unit entry
    /// on the Neumann row for mixed Burgers.
    pub fn param_derivative(&self, w: &Array1<f64>) -> Result<Array1<f64>, CollocError> {
        self.check_w(w)?;
        let m_int = self.grid.interior_count();
        let mut out = Array1::zeros(self.n_equations());
        match self.problem.kind {
            ProblemKind::BurgersDirichlet { .. } => {
                return Err(CollocError::Problem(ProblemError::NoContinuationParameter))
            }
            ProblemKind::BurgersMixed { .. } => {
                for k in 0..self.bnd_param.len() {
                    out[m_int + k] = self.bnd_param[k];
                }
            }
            ProblemKind::Bratu1d { .. }
            | ProblemKind::Bratu2d { .. }
            | ProblemKind::BratuRadial { .. } => {
                let u = self.v_int.dot(w);
                for i in 0..m_int {
                    out[i] = u[i].exp();
                }
            }
        }
        Ok(out)
    }

    /// Relative solution-change norm ‖S·dw‖₂ / max(1, ‖S·w‖₂).
    fn step_metric(&self, dw: &Array1<f64>, w: &Array1<f64>) -> f64 {
        let num = norm2(&self.s_all.dot(dw));
        let den = norm2(&self.s_all.dot(w)).max(1.0);
        num / den
    }

    /// Plain Newton iteration with a minimum-norm least-squares step.
    ///
    /// Stops when the relative solution change at the collocation points drops
    /// below `tol`. Non-convergence and divergence are reported in the result,
    /// not raised, so basin scans can classify failures.
    pub fn newton(
        &self,
        w0: &Array1<f64>,
        param: f64,
        tol: f64,
        max_iter: usize,
        lin: &LinearSolveConfig,
    ) -> Result<NewtonReport, CollocError> {
        self.check_w(w0)?;
        const STEP_CAP: f64 = 1e3;
        let mut w = w0.clone();
        let mut residual_norms = Vec::new();
        let mut step_norms = Vec::new();
        let mut converged = false;
        let mut diverged = false;
        let mut iterations = 0;
        for _ in 0..max_iter {
            iterations += 1;
            let f = self.residual(&w, param)?;
            let rnorm = norm2(&f);
            residual_norms.push(rnorm);
            if !rnorm.is_finite() {
                diverged = true;
                break;
            }
            let jac = self.jacobian(&w, param)?;
            let mut dw = match lsq::solve(&jac, &f, lin) {
                Ok(x) => x,
                Err(LsqError::RankZero { .. }) | Err(LsqError::RankDeficient { .. }) => {
                    diverged = true;
                    break;
                }
                Err(e) => return Err(e.into()),
            };
            dw.mapv_inplace(|v| -v);
            let dw_norm = norm2(&dw);
            if !dw_norm.is_finite() {
                diverged = true;
                break;
            }
            if dw_norm > STEP_CAP {
                dw *= STEP_CAP / dw_norm;
            }
            w += &dw;
            let step = self.step_metric(&dw, &w);
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
            final_w: w,
        })
    }
}

pub(crate) fn norm2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Least-squares fit of point values: w minimizing ‖S·w − y‖₂ (minimum-norm
/// when underdetermined). Turns function-space initial guesses into
/// coefficient space.
pub fn fit_initial_weights(
    basis: &ElmBasis,
    points: &Array2<f64>,
    values: &Array1<f64>,
    lin: &LinearSolveConfig,
) -> Result<Array1<f64>, CollocError> {
    let need = basis.domain().dim() + 2;
    if points.nrows() < need {
        return Err(CollocError::TooFewPoints {
            need,
            got: points.nrows(),
        });
    }
    let s = collocation_matrix(basis, points);
    Ok(lsq::solve(&s, values, lin)?)
}

/// Fit a closure sampled at the given points.
pub fn fit_function(
    basis: &ElmBasis,
    points: &Array2<f64>,
    f: impl Fn(&[f64]) -> f64,
    lin: &LinearSolveConfig,
) -> Result<Array1<f64>, CollocError> {
    let values = Array1::from_shape_fn(points.nrows(), |i| {
        f(points.row(i).as_slice().expect("contiguous"))
    });
    fit_initial_weights(basis, points, &values, lin)
}

/// Σ_j w_j ψ_j at each point.
pub fn reconstruct(basis: &ElmBasis, w: &Array1<f64>, points: &Array2<f64>) -> Array1<f64> {
    Array1::from_shape_fn(points.nrows(), |i| {
        basis
            .eval(points.row(i).as_slice().expect("contiguous"))
            .dot(w)
    })
}

/// One-off residual assembly (constructs the precomputed system internally).
pub fn assemble_residual(
    problem: &PdeProblem,
    basis: &ElmBasis,
    grid: &CollocationGrid,
    w: &Array1<f64>,
    param: f64,
) -> Result<Array1<f64>, CollocError> {
    ElmCollocation::new(problem.clone(), basis.clone(), grid.clone())?.residual(w, param)
}

/// One-off Jacobian assembly.
pub fn assemble_jacobian(
    problem: &PdeProblem,
    basis: &ElmBasis,
    grid: &CollocationGrid,
    w: &Array1<f64>,
    param: f64,
) -> Result<Array2<f64>, CollocError> {
    ElmCollocation::new(problem.clone(), basis.clone(), grid.clone())?.jacobian(w, param)
}

/// One-off ∂F/∂param.
pub fn residual_param_derivative(
    problem: &PdeProblem,
    basis: &ElmBasis,
    grid: &CollocationGrid,
    w: &Array1<f64>,
    param: f64,
) -> Result<Array1<f64>, CollocError> {
    let _ = param;
    ElmCollocation::new(problem.clone(), basis.clone(), grid.clone())?.param_derivative(w)
}

/// One-off Newton solve.
#[allow(clippy::too_many_arguments)]
pub fn newton_solve(
    problem: &PdeProblem,
    basis: &ElmBasis,
    grid: &CollocationGrid,
    w0: &Array1<f64>,
    param: f64,
    tol: f64,
    max_iter: usize,
    lin: &LinearSolveConfig,
) -> Result<NewtonReport, CollocError> {
    ElmCollocation::new(problem.clone(), basis.clone(), grid.clone())?
        .newton(w0, param, tol, max_iter, lin)
}
