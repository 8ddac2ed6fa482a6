//! Natural and pseudo-arclength continuation over the bifurcation parameter,
//! generic over the discretization (random-feature collocation or finite
//! differences), plus turning-point estimation by a local parabola fit.
//!
//! The corrector solves the bordered system
//!
//! ```text
//! [ ∇_x F   ∇_λ F ] [dx]   [ -F ]
//! [ ∇_x N   ∇_λ N ] [dλ] = [ -N ]
//! ```
//!
//! with the secant-based arclength condition
//! N(x, λ) = ⟨u(x) − u₁, u̇⟩ + (λ − λ₁)·λ̇ − ds, where (u̇, λ̇) is the previous
//! secant normalized in a weighted norm (solution values at the metric points
//! weighted by 1/√P) so step lengths stay comparable across grid sizes.

use crate::basis::collocation_matrix;
use crate::colloc::{norm2, CollocError, ElmCollocation, NewtonReport};
use crate::fd::{self, FdError, FdGrid};
use crate::lsq::{self, LinearSolveConfig, LsqError, SvdCutoff};
use crate::problems::{PdeProblem, ProblemKind};
use ndarray::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContinuationError {
    #[error("branch seeding failed: {0}")]
    SeedingFailed(String),
    #[error("step rejected after {halvings} halvings (last ds = {ds:.3e})")]
    StepRejected { ds: f64, halvings: usize },
    #[error("seed points coincide; cannot form a secant")]
    DegenerateSeeds,
    #[error("converged point failed verification: residual norm {residual:.3e}")]
    VerificationFailed { residual: f64 },
    #[error("branch has no fold (parameter never decreases after its maximum)")]
    NoFold,
    #[error("fold is too close to the branch ends to bracket with four points")]
    FoldNotBracketed,
    #[error(transparent)]
    Colloc(#[from] CollocError),
    #[error(transparent)]
    Fd(#[from] FdError),
    #[error(transparent)]
    Lsq(#[from] LsqError),
    #[error(transparent)]
    Banded(#[from] crate::banded::BandedError),
}

/// One converged solution on a branch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchPoint {
    pub param: f64,
    pub coeffs: Array1<f64>,
    pub measure: f64,
    pub arclength: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchMeta {
    pub solver: String,
    pub problem: ProblemKind,
    pub n: usize,
    pub seed: Option<u64>,
    pub tol: f64,
    pub ds0: f64,
}

/// Ordered branch with strictly increasing arclength.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub meta: BranchMeta,
}

/// Discretization adapter: everything a branch tracer needs from a solver.
///
/// `project` maps the state to solution values at the metric points (S·w for
/// collocation, the identity for finite differences); `project_transpose` is
/// its adjoint, used for the arclength gradient row.
pub trait ContinuationContext {
    fn dof(&self) -> usize;
    /// Number of metric points P.
    fn eval_len(&self) -> usize;
    fn residual(&self, x: &Array1<f64>, param: f64) -> Result<Array1<f64>, ContinuationError>;
    fn residual_norm(&self, x: &Array1<f64>, param: f64) -> Result<f64, ContinuationError> {
        Ok(norm2(&self.residual(x, param)?))
    }
    fn param_derivative(&self, x: &Array1<f64>, param: f64)
        -> Result<Array1<f64>, ContinuationError>;
    fn project(&self, x: &Array1<f64>) -> Array1<f64>;
    fn project_transpose(&self, v: &Array1<f64>) -> Array1<f64>;
    fn newton(
        &self,
        x0: &Array1<f64>,
        param: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<NewtonReport, ContinuationError>;
    /// Solve the bordered system for (dx, dλ) given the arclength row
    /// (n_x, n_p) and right-hand sides (rhs_f, rhs_n).
    fn bordered_step(
        &self,
        x: &Array1<f64>,
        param: f64,
        n_x: &Array1<f64>,
        n_p: f64,
        rhs_f: &Array1<f64>,
        rhs_n: f64,
    ) -> Result<(Array1<f64>, f64), ContinuationError>;
    /// Scalar branch measure: L∞ of the reconstructed solution on the fixed
    /// evaluation grid.
    fn measure(&self, x: &Array1<f64>) -> f64;
}

/// Trace controls. `fold_spacing`, when set, re-approaches a detected fold
/// with steps no longer than the given arclength so the four points feeding
/// the parabola fit sit tightly around the turning point.
#[derive(Debug, Clone)]
pub struct TraceOptions {
    pub start_param: f64,
    /// +1.0 to walk the parameter up initially, −1.0 down.
    pub direction: f64,
    pub ds0: f64,
    pub max_points: usize,
    pub tol: f64,
    pub max_newton: usize,
    pub param_min: f64,
    pub param_max: f64,
    pub measure_max: f64,
    pub fold_spacing: Option<f64>,
}

impl TraceOptions {
    pub fn new(start_param: f64, ds0: f64) -> Self {
        TraceOptions {
            start_param,
            direction: 1.0,
            ds0,
            max_points: 400,
            tol: 1e-6,
            max_newton: 25,
            param_min: f64::NEG_INFINITY,
            param_max: f64::INFINITY,
            measure_max: f64::INFINITY,
            fold_spacing: None,
        }
    }
}

fn weighted_norm(du: &Array1<f64>, dp: f64, p_len: usize) -> f64 {
    (du.dot(du) / p_len as f64 + dp * dp).sqrt()
}

/// Solve at a fixed parameter, failing unless Newton converges and the
/// residual verifies below 10×tol (with up to two polish iterations).
fn solve_point<C: ContinuationContext>(
    ctx: &C,
    x0: &Array1<f64>,
    param: f64,
    tol: f64,
    max_newton: usize,
    arclength: f64,
) -> Result<BranchPoint, ContinuationError> {
    let report = ctx.newton(x0, param, tol, max_newton)?;
    if !report.converged {
        return Err(ContinuationError::SeedingFailed(format!(
            "Newton did not converge at param {param} ({} iterations{})",
            report.iterations,
            if report.diverged { ", diverged" } else { "" }
        )));
    }
    let mut x = report.final_w;
    let mut rnorm = ctx.residual_norm(&x, param)?;
    if rnorm >= 10.0 * tol {
        let polish = ctx.newton(&x, param, tol * 1e-3, 2)?;
        let rn = ctx.residual_norm(&polish.final_w, param)?;
        if rn < rnorm {
            x = polish.final_w;
            rnorm = rn;
        }
    }
    if rnorm >= 10.0 * tol {
        return Err(ContinuationError::VerificationFailed { residual: rnorm });
    }
    let measure = ctx.measure(&x);
    Ok(BranchPoint {
        param,
        coeffs: x,
        measure,
        arclength,
    })
}

/// Warm-started Newton solve at a shifted parameter. On failure the increment
/// is halved (up to 10 halvings in total) and progress resumes toward the
/// requested parameter from each intermediate success.
pub fn natural_step<C: ContinuationContext>(
    ctx: &C,
    prev: &BranchPoint,
    new_param: f64,
    tol: f64,
    max_newton: usize,
) -> Result<BranchPoint, ContinuationError> {
    if new_param == prev.param {
        return Ok(prev.clone());
    }
    let mut current = prev.clone();
    let mut target = new_param;
    let mut halvings = 0usize;
    loop {
        match solve_point(ctx, &current.coeffs, target, tol, max_newton, 0.0) {
            Ok(mut pt) => {
                let du = &ctx.project(&pt.coeffs) - &ctx.project(&current.coeffs);
                pt.arclength =
                    current.arclength + weighted_norm(&du, pt.param - current.param, ctx.eval_len());
                current = pt;
                if current.param == new_param {
                    return Ok(current);
                }
                target = new_param;
            }
            Err(_) => {
                halvings += 1;
                if halvings > 10 {
                    return Err(ContinuationError::StepRejected {
                        ds: (target - current.param).abs(),
                        halvings,
                    });
                }
                target = current.param + 0.5 * (target - current.param);
            }
        }
    }
}

/// One pseudo-arclength predictor/corrector step of length `ds` from the two
/// most recent points. `ds` is halved on corrector failure, up to 10 times;
/// returns the accepted point and the step length actually used.
pub fn arclength_step<C: ContinuationContext>(
    ctx: &C,
    prev2: &BranchPoint,
    prev1: &BranchPoint,
    ds: f64,
    tol: f64,
    max_newton: usize,
) -> Result<(BranchPoint, f64), ContinuationError> {
    let p_len = ctx.eval_len();
    let u1 = ctx.project(&prev1.coeffs);
    let u2 = ctx.project(&prev2.coeffs);
    let du = &u1 - &u2;
    let dp = prev1.param - prev2.param;
    let nrm = weighted_norm(&du, dp, p_len);
    if nrm == 0.0 {
        return Err(ContinuationError::DegenerateSeeds);
    }
    let u_dot = &du / nrm;
    let p_dot = dp / nrm;
    // gradient of the arclength condition in state space
    let n_x = ctx.project_transpose(&u_dot) / p_len as f64;
    let secant_x = &prev1.coeffs - &prev2.coeffs;

    let mut ds_try = ds;
    for halvings in 0..=10 {
        let scale = ds_try / nrm;
        let mut x = &prev1.coeffs + &(&secant_x * scale);
        let mut p = prev1.param + dp * scale;
        let mut converged = false;
        let mut last_step = f64::INFINITY;
        for _ in 0..max_newton {
            let f = match ctx.residual(&x, p) {
                Ok(f) => f,
                Err(_) => break,
            };
            let fnorm = norm2(&f);
            if !fnorm.is_finite() {
                break;
            }
            let u = ctx.project(&x);
            let n_val = (&u - &u1).dot(&u_dot) / p_len as f64 + (p - prev1.param) * p_dot - ds_try;
            if last_step < tol && fnorm < 10.0 * tol && n_val.abs() < 10.0 * tol {
                converged = true;
                break;
            }
            let (dx, dpar) = match ctx.bordered_step(&x, p, &n_x, p_dot, &(-&f), -n_val) {
                Ok(v) => v,
                Err(_) => break,
            };
            if !dpar.is_finite() || dx.iter().any(|v| !v.is_finite()) {
                break;
            }
            x += &dx;
            p += dpar;
            let pdu = ctx.project(&dx);
            let pu = ctx.project(&x);
            last_step = weighted_norm(&pdu, dpar, p_len)
                / weighted_norm(&pu, p, p_len).max(1.0);
        }
        if converged {
            let measure = ctx.measure(&x);
            return Ok((
                BranchPoint {
                    param: p,
                    coeffs: x,
                    measure,
                    arclength: prev1.arclength + ds_try,
                },
                ds_try,
            ));
        }
        if halvings == 10 {
            break;
        }
        ds_try *= 0.5;
    }
    Err(ContinuationError::StepRejected {
        ds: ds_try,
        halvings: 10,
    })
}

/// Trace one branch: Newton at the start parameter, one natural step to seed
/// the secant, then adaptive pseudo-arclength steps until a stop rule fires
/// (parameter bounds, measure bound, or the point budget).
///
/// Step adaptation: ×1.5 after 3 consecutive easy steps (capped at 10·ds0),
/// halved by rejection inside [`arclength_step`] (floored at ds0/100, except
/// that fold refinement may go finer). When `fold_spacing` is set, a fold
/// crossing coarser than the spacing is rejected and re-approached with steps
/// shrunk toward the spacing, so the points straddling the fold end up
/// tightly spaced.
pub fn trace_branch<C: ContinuationContext>(
    ctx: &C,
    initial_guess: &Array1<f64>,
    opts: &TraceOptions,
    meta: BranchMeta,
) -> Result<Branch, ContinuationError> {
    let bp0 = solve_point(ctx, initial_guess, opts.start_param, opts.tol, opts.max_newton, 0.0)
        .map_err(|e| ContinuationError::SeedingFailed(format!("start point: {e}")))?;
    let seed_param = opts.start_param + opts.direction * opts.ds0;
    let bp1 = natural_step(ctx, &bp0, seed_param, opts.tol, opts.max_newton)
        .map_err(|e| ContinuationError::SeedingFailed(format!("seed step: {e}")))?;
    let mut points = vec![bp0, bp1];

    let mut ds = opts.ds0;
    let ds_min = opts.ds0 / 100.0;
    let ds_max = 10.0 * opts.ds0;
    let mut streak = 0usize;
    let mut crossed = false;
    let mut post_fold_fine = 0usize;

    while points.len() < opts.max_points {
        let prev2 = &points[points.len() - 2];
        let prev1 = &points[points.len() - 1];
        let step = arclength_step(ctx, prev2, prev1, ds, opts.tol, opts.max_newton);
        let (pt, ds_used) = match step {
            Ok(v) => v,
            Err(_) => break,
        };
        if ds_used < ds {
            ds = ds_used.max(ds_min.min(ds_used));
            streak = 0;
        }
        let falling = pt.param < points[points.len() - 1].param;
        if !crossed && falling {
            if let Some(spacing) = opts.fold_spacing {
                if ds_used > spacing {
                    // crossing detected too coarsely: discard and re-approach
                    ds = (ds_used / 8.0).max(spacing);
                    streak = 0;
                    continue;
                }
            }
            crossed = true;
            post_fold_fine = 0;
        }
        points.push(pt);
        let last = points.last().expect("just pushed");
        // the lower bound only stops a branch that is heading down in the
        // parameter (post-fold or traced downward), never the rising leg
        if last.param > opts.param_max
            || (falling && last.param < opts.param_min)
            || last.measure > opts.measure_max
        {
            break;
        }
        if crossed && opts.fold_spacing.is_some() && post_fold_fine < 3 {
            post_fold_fine += 1;
            streak = 0;
            continue; // hold the fine spacing for a few points past the fold
        }
        streak += 1;
        if streak >= 3 {
            ds = (ds * 1.5).min(ds_max);
            streak = 0;
        }
    }

    if points.len() < 3 {
        return Err(ContinuationError::SeedingFailed(format!(
            "only {} points obtained",
            points.len()
        )));
    }
    Ok(Branch { points, meta })
}

/// Fold location from the four points with the largest parameter values (two
/// on each side of the fold): fit the parameter as a quadratic in the measure
/// and return the vertex value.
pub fn estimate_turning_point(branch: &Branch) -> Result<f64, ContinuationError> {
    let pts = &branch.points;
    if pts.len() < 4 {
        return Err(ContinuationError::NoFold);
    }
    let mut k_max = 0usize;
    for (k, p) in pts.iter().enumerate() {
        if p.param > pts[k_max].param {
            k_max = k;
        }
    }
    if !pts[k_max + 1..].iter().any(|p| p.param < pts[k_max].param) {
        return Err(ContinuationError::NoFold);
    }
    if k_max < 1 || k_max + 2 >= pts.len() {
        return Err(ContinuationError::FoldNotBracketed);
    }
    let window = &pts[k_max - 1..=k_max + 2];
    let m_mean = window.iter().map(|p| p.measure).sum::<f64>() / 4.0;
    let mut a = Array2::zeros((4, 3));
    let mut b = Array1::zeros(4);
    for (i, p) in window.iter().enumerate() {
        let m = p.measure - m_mean;
        a[(i, 0)] = m * m;
        a[(i, 1)] = m;
        a[(i, 2)] = 1.0;
        b[i] = p.param;
    }
    let coef = lsq::pinv_solve(&a, &b, &LinearSolveConfig::default())?;
    let (qa, qb, qc) = (coef[0], coef[1], coef[2]);
    if qa == 0.0 {
        return Err(ContinuationError::NoFold);
    }
    Ok(qc - qb * qb / (4.0 * qa))
}

/// The four points feeding the parabola fit (diagnostics and tests).
pub fn fold_window(branch: &Branch) -> Result<[&BranchPoint; 4], ContinuationError> {
    let pts = &branch.points;
    let mut k_max = 0usize;
    for (k, p) in pts.iter().enumerate() {
        if p.param > pts[k_max].param {
            k_max = k;
        }
    }
    if k_max < 1 || k_max + 2 >= pts.len() {
        return Err(ContinuationError::FoldNotBracketed);
    }
    Ok([
        &pts[k_max - 1],
        &pts[k_max],
        &pts[k_max + 1],
        &pts[k_max + 2],
    ])
}

/// Uniform 1D evaluation grid (101 points) or 41×41 lattice used for the
/// branch measure.
pub fn measure_grid(problem: &PdeProblem) -> Array2<f64> {
    match problem.dim() {
        1 => {
            let (a, b) = (problem.domain.lower(0), problem.domain.upper(0));
            Array2::from_shape_fn((101, 1), |(i, _)| a + (b - a) * i as f64 / 100.0)
        }
        _ => {
            let (ax, bx) = (problem.domain.lower(0), problem.domain.upper(0));
            let (ay, by) = (problem.domain.lower(1), problem.domain.upper(1));
            Array2::from_shape_fn((41 * 41, 2), |(id, c)| {
                let (iy, ix) = (id / 41, id % 41);
                if c == 0 {
                    ax + (bx - ax) * ix as f64 / 40.0
                } else {
                    ay + (by - ay) * iy as f64 / 40.0
                }
            })
        }
    }
}

/// Continuation adapter for the random-feature collocation solver.
pub struct ElmContext {
    sys: ElmCollocation,
    lin: LinearSolveConfig,
    eval_matrix: Array2<f64>,
}

impl ElmContext {
    pub fn new(sys: ElmCollocation, lin: LinearSolveConfig) -> Self {
        let eval_pts = measure_grid(sys.problem());
        let eval_matrix = collocation_matrix(sys.basis(), &eval_pts);
        ElmContext {
            sys,
            lin,
            eval_matrix,
        }
    }

    pub fn system(&self) -> &ElmCollocation {
        &self.sys
    }

    pub fn lin_config(&self) -> &LinearSolveConfig {
        &self.lin
    }
}

impl ContinuationContext for ElmContext {
    fn dof(&self) -> usize {
        self.sys.n_unknowns()
    }

    fn eval_len(&self) -> usize {
        self.sys.value_matrix().nrows()
    }

    fn residual(&self, x: &Array1<f64>, param: f64) -> Result<Array1<f64>, ContinuationError> {
        Ok(self.sys.residual(x, param)?)
    }

    fn param_derivative(
        &self,
        x: &Array1<f64>,
        _param: f64,
    ) -> Result<Array1<f64>, ContinuationError> {
        Ok(self.sys.param_derivative(x)?)
    }

    fn project(&self, x: &Array1<f64>) -> Array1<f64> {
        self.sys.value_matrix().dot(x)
    }

    fn project_transpose(&self, v: &Array1<f64>) -> Array1<f64> {
        self.sys.value_matrix().t().dot(v)
    }

    fn newton(
        &self,
        x0: &Array1<f64>,
        param: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<NewtonReport, ContinuationError> {
        Ok(self.sys.newton(x0, param, tol, max_iter, &self.lin)?)
    }

    fn bordered_step(
        &self,
        x: &Array1<f64>,
        param: f64,
        n_x: &Array1<f64>,
        n_p: f64,
        rhs_f: &Array1<f64>,
        rhs_n: f64,
    ) -> Result<(Array1<f64>, f64), ContinuationError> {
        let jac = self.sys.jacobian(x, param)?;
        let dfdp = self.sys.param_derivative(x)?;
        let (m, n) = jac.dim();
        let mut stacked = Array2::zeros((m + 1, n + 1));
        stacked.slice_mut(s![..m, ..n]).assign(&jac);
        stacked.slice_mut(s![..m, n]).assign(&dfdp);
        stacked.slice_mut(s![m, ..n]).assign(n_x);
        stacked[(m, n)] = n_p;
        let mut rhs = Array1::zeros(m + 1);
        rhs.slice_mut(s![..m]).assign(rhs_f);
        rhs[m] = rhs_n;
        let sol = lsq::solve(&stacked, &rhs, &self.lin)?;
        let dx = sol.slice(s![..n]).to_owned();
        Ok((dx, sol[n]))
    }

    fn measure(&self, x: &Array1<f64>) -> f64 {
        self.eval_matrix
            .dot(x)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Continuation adapter for the finite-difference solver. The bordered solve
/// uses the banded factorization of the PDE Jacobian twice (Schur complement
/// on the single arclength row) instead of a dense stacked matrix.
pub struct FdContext {
    problem: PdeProblem,
    grid: FdGrid,
    eval_pts: Array2<f64>,
}

impl FdContext {
    pub fn new(problem: PdeProblem, grid: FdGrid) -> Self {
        let eval_pts = measure_grid(&problem);
        FdContext {
            problem,
            grid,
            eval_pts,
        }
    }

    pub fn grid(&self) -> &FdGrid {
        &self.grid
    }

    pub fn problem(&self) -> &PdeProblem {
        &self.problem
    }

    fn fd_param_derivative(&self, u: &Array1<f64>, param: f64) -> Array1<f64> {
        let n = self.grid.n;
        let _ = param;
        let mut d = Array1::zeros(self.grid.len());
        match self.problem.kind {
            ProblemKind::BurgersMixed { .. } => {
                // θ enters only the one-sided Neumann row: −2h
                d[0] = -2.0 * self.grid.h;
            }
            ProblemKind::Bratu1d { .. } => {
                for j in 1..n - 1 {
                    d[j] = u[j].exp();
                }
            }
            ProblemKind::Bratu2d { .. } => {
                for iy in 1..n - 1 {
                    for ix in 1..n - 1 {
                        let id = iy * n + ix;
                        d[id] = u[id].exp();
                    }
                }
            }
            _ => {}
        }
        d
    }
}

impl ContinuationContext for FdContext {
    fn dof(&self) -> usize {
        self.grid.len()
    }

    fn eval_len(&self) -> usize {
        self.grid.len()
    }

    fn residual(&self, x: &Array1<f64>, param: f64) -> Result<Array1<f64>, ContinuationError> {
        Ok(fd::fd_residual(&self.problem, &self.grid, x, param)?)
    }

    fn param_derivative(
        &self,
        x: &Array1<f64>,
        param: f64,
    ) -> Result<Array1<f64>, ContinuationError> {
        Ok(self.fd_param_derivative(x, param))
    }

    fn project(&self, x: &Array1<f64>) -> Array1<f64> {
        x.clone()
    }

    fn project_transpose(&self, v: &Array1<f64>) -> Array1<f64> {
        v.clone()
    }

    fn newton(
        &self,
        x0: &Array1<f64>,
        param: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<NewtonReport, ContinuationError> {
        Ok(fd::fd_newton_solve(
            &self.problem,
            &self.grid,
            x0,
            param,
            tol,
            max_iter,
        )?)
    }

    fn bordered_step(
        &self,
        x: &Array1<f64>,
        param: f64,
        n_x: &Array1<f64>,
        n_p: f64,
        rhs_f: &Array1<f64>,
        rhs_n: f64,
    ) -> Result<(Array1<f64>, f64), ContinuationError> {
        let jac = fd::fd_jacobian(&self.problem, &self.grid, x, param)?;
        let dfdp = self.fd_param_derivative(x, param);
        let lu = jac.factor()?;
        let y1 = lu.solve(&dfdp)?;
        let y2 = lu.solve(rhs_f)?;
        let denom = n_p - n_x.dot(&y1);
        let dp = (rhs_n - n_x.dot(&y2)) / denom;
        if !dp.is_finite() {
            return Err(ContinuationError::StepRejected { ds: 0.0, halvings: 0 });
        }
        let dx = &y2 - &(&y1 * dp);
        Ok((dx, dp))
    }

    fn measure(&self, x: &Array1<f64>) -> f64 {
        fd::interpolate(&self.grid, x, &self.eval_pts)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// ELM bordered solves default to the truncated-SVD pseudoinverse; this keeps
/// the cutoff rule available to experiment configs.
pub fn default_lin_config() -> LinearSolveConfig {
    LinearSolveConfig {
        method: lsq::SolveMethod::SvdPinv,
        svd_cutoff: SvdCutoff::Auto,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::bratu1d_exact;
    use crate::problems::BranchSide;
    use approx::assert_abs_diff_eq;

    fn meta(tag: &str) -> BranchMeta {
        BranchMeta {
            solver: tag.to_string(),
            problem: ProblemKind::Bratu1d { lambda: 0.0 },
            n: 0,
            seed: None,
            tol: 1e-6,
            ds0: 0.1,
        }
    }

    /// Linear two-state family: F(x, p) = x − a − b·p. Solutions trace the
    /// straight line x(p) = a + b·p, so a predicted arclength step lands on
    /// the family and the corrector has nothing to do.
    struct LineContext {
        a: Array1<f64>,
        b: Array1<f64>,
    }

    impl ContinuationContext for LineContext {
        fn dof(&self) -> usize {
            2
        }
        fn eval_len(&self) -> usize {
            2
        }
        fn residual(&self, x: &Array1<f64>, p: f64) -> Result<Array1<f64>, ContinuationError> {
            Ok(x - &self.a - &(&self.b * p))
        }
        fn param_derivative(
            &self,
            _x: &Array1<f64>,
            _p: f64,
        ) -> Result<Array1<f64>, ContinuationError> {
            Ok(-&self.b)
        }
        fn project(&self, x: &Array1<f64>) -> Array1<f64> {
            x.clone()
        }
        fn project_transpose(&self, v: &Array1<f64>) -> Array1<f64> {
            v.clone()
        }
        fn newton(
            &self,
            x0: &Array1<f64>,
            p: f64,
            _tol: f64,
            _max_iter: usize,
        ) -> Result<NewtonReport, ContinuationError> {
            let sol = &self.a + &(&self.b * p);
            Ok(NewtonReport {
                converged: true,
                diverged: false,
                iterations: 1,
                residual_norms: vec![norm2(&self.residual(x0, p)?)],
                step_norms: vec![0.0],
                final_w: sol,
            })
        }
        fn bordered_step(
            &self,
            _x: &Array1<f64>,
            _p: f64,
            n_x: &Array1<f64>,
            n_p: f64,
            rhs_f: &Array1<f64>,
            rhs_n: f64,
        ) -> Result<(Array1<f64>, f64), ContinuationError> {
            // Jacobian is the identity; Schur complement on the last row
            let y1 = -&self.b;
            let y2 = rhs_f.clone();
            let dp = (rhs_n - n_x.dot(&y2)) / (n_p - n_x.dot(&y1));
            let dx = &y2 - &(&y1 * dp);
            Ok((dx, dp))
        }
        fn measure(&self, x: &Array1<f64>) -> f64 {
            x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
        }
    }

    #[test]
    fn arclength_step_walks_a_straight_family() {
        let ctx = LineContext {
            a: array![0.5, -0.25],
            b: array![1.0, 2.0],
        };
        let point = |p: f64, arc: f64| {
            let x = &ctx.a + &(&ctx.b * p);
            BranchPoint {
                param: p,
                measure: ctx.measure(&x),
                coeffs: x,
                arclength: arc,
            }
        };
        let p0 = point(0.0, 0.0);
        let p1 = point(0.1, 1.0);
        let ds = 0.35;
        let (p2, used) = arclength_step(&ctx, &p0, &p1, ds, 1e-10, 20).unwrap();
        assert_eq!(used, ds);
        // lands on the family
        let r = ctx.residual(&p2.coeffs, p2.param).unwrap();
        assert!(norm2(&r) < 1e-10);
        // at weighted distance ds along the secant
        let du = &p2.coeffs - &p1.coeffs;
        let dist = weighted_norm(&du, p2.param - p1.param, 2);
        assert_abs_diff_eq!(dist, ds, epsilon = 1e-9);
        // and ahead of p1, not behind
        assert!(p2.param > p1.param);
    }

    #[test]
    fn natural_step_examples_on_fd_bratu() {
        let problem = PdeProblem::new(ProblemKind::Bratu1d { lambda: 0.1 }).unwrap();
        let grid = FdGrid::new(&problem, 100).unwrap();
        let ctx = FdContext::new(problem, grid);
        let start = solve_point(&ctx, &Array1::zeros(100), 0.1, 1e-8, 30, 0.0).unwrap();
        // zero increment returns the same point
        let same = natural_step(&ctx, &start, 0.1, 1e-8, 30).unwrap();
        assert_eq!(same.param, start.param);
        assert_eq!(same.coeffs, start.coeffs);
        // a modest step up the lower branch converges and the measure grows
        let next = natural_step(&ctx, &start, 0.2, 1e-8, 30).unwrap();
        assert_eq!(next.param, 0.2);
        assert!(next.measure > start.measure);
        // the exact lower branch confirms monotone growth
        let m01 = bratu1d_exact(0.1, BranchSide::Lower).unwrap().eval(0.5);
        let m02 = bratu1d_exact(0.2, BranchSide::Lower).unwrap().eval(0.5);
        assert!(m02 > m01);
        assert_abs_diff_eq!(next.measure, m02, epsilon = 1e-3);
        // stepping straight past the fold is rejected after halvings
        let near = natural_step(&ctx, &next, 3.3, 1e-8, 30).unwrap();
        let res = natural_step(&ctx, &near, 3.6, 1e-8, 30);
        assert!(matches!(res, Err(ContinuationError::StepRejected { .. })));
    }

    #[test]
    fn trace_fd_bratu_passes_the_fold() {
        let problem = PdeProblem::new(ProblemKind::Bratu1d { lambda: 0.05 }).unwrap();
        let grid = FdGrid::new(&problem, 400).unwrap();
        let ctx = FdContext::new(problem, grid);
        let mut opts = TraceOptions::new(0.05, 0.15);
        opts.tol = 1e-8;
        opts.param_min = 0.5;
        opts.measure_max = 6.0;
        opts.max_points = 400;
        let branch = trace_branch(&ctx, &Array1::zeros(400), &opts, meta("fd")).unwrap();
        let max_param = branch
            .points
            .iter()
            .map(|p| p.param)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            max_param > 3.5 && max_param < crate::problems::BRATU_1D_LAMBDA_C,
            "max lambda {max_param}"
        );
        // branch comes back down on the upper branch
        let last = branch.points.last().unwrap();
        assert!(last.param < 3.0 && last.measure > branch.points[0].measure);
        // every point satisfies the verification bound (residual < 10·tol)
        for p in &branch.points {
            let rn = ctx.residual_norm(&p.coeffs, p.param).unwrap();
            assert!(rn < 10.0 * opts.tol, "residual {rn} at param {}", p.param);
        }
        // arclength strictly increasing
        for w in branch.points.windows(2) {
            assert!(w[1].arclength > w[0].arclength);
        }
        // lower-branch measures match the exact solution at matched lambda
        for p in branch.points.iter().take(5) {
            let exact = bratu1d_exact(p.param, BranchSide::Lower).unwrap().eval(0.5);
            assert_abs_diff_eq!(p.measure, exact, epsilon = 1e-3);
        }
    }

    #[test]
    fn fine_tracing_brackets_the_fold_to_1e4() {
        let problem = PdeProblem::new(ProblemKind::Bratu1d { lambda: 0.05 }).unwrap();
        let grid = FdGrid::new(&problem, 400).unwrap();
        let ctx = FdContext::new(problem, grid);
        let mut opts = TraceOptions::new(0.05, 0.01);
        opts.tol = 1e-8;
        opts.param_min = 3.3;
        opts.max_points = 1500;
        let branch = trace_branch(&ctx, &Array1::zeros(400), &opts, meta("fd")).unwrap();
        let max_param = branch
            .points
            .iter()
            .map(|p| p.param)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            (crate::problems::BRATU_1D_LAMBDA_C - max_param).abs() < 1e-4,
            "max lambda {max_param} vs fold"
        );
    }

    #[test]
    fn parabola_fit_is_exact_on_quadratic_data() {
        let mk = |m: f64| BranchPoint {
            param: 7.0 - (m - 2.0) * (m - 2.0),
            coeffs: Array1::zeros(1),
            measure: m,
            arclength: m,
        };
        let branch = Branch {
            points: vec![mk(1.8), mk(1.9), mk(2.1), mk(2.2)],
            meta: meta("synthetic"),
        };
        let fold = estimate_turning_point(&branch).unwrap();
        assert_abs_diff_eq!(fold, 7.0, epsilon = 1e-12);
    }

    #[test]
    fn no_fold_is_an_error() {
        let mk = |m: f64| BranchPoint {
            param: m,
            coeffs: Array1::zeros(1),
            measure: m,
            arclength: m,
        };
        let branch = Branch {
            points: vec![mk(0.1), mk(0.2), mk(0.3), mk(0.4)],
            meta: meta("synthetic"),
        };
        assert!(matches!(
            estimate_turning_point(&branch),
            Err(ContinuationError::NoFold)
        ));
    }

    #[test]
    fn fold_window_straddles_the_fold_measure() {
        let problem = PdeProblem::new(ProblemKind::Bratu1d { lambda: 0.05 }).unwrap();
        let grid = FdGrid::new(&problem, 100).unwrap();
        let ctx = FdContext::new(problem, grid);
        let mut opts = TraceOptions::new(0.05, 0.15);
        opts.tol = 1e-8;
        opts.param_min = 1.0;
        opts.fold_spacing = Some(2e-3);
        let branch = trace_branch(&ctx, &Array1::zeros(100), &opts, meta("fd")).unwrap();
        let window = fold_window(&branch).unwrap();
        let est = estimate_turning_point(&branch).unwrap();
        // two measures below the vertex measure, two above
        let vertex_m = {
            // recompute the vertex measure from the window fit
            let m_mean = window.iter().map(|p| p.measure).sum::<f64>() / 4.0;
            let mut a = Array2::zeros((4, 3));
            let mut b = Array1::zeros(4);
            for (i, p) in window.iter().enumerate() {
                let m = p.measure - m_mean;
                a[(i, 0)] = m * m;
                a[(i, 1)] = m;
                a[(i, 2)] = 1.0;
                b[i] = p.param;
            }
            let c = lsq::pinv_solve(&a, &b, &LinearSolveConfig::default()).unwrap();
            m_mean - c[1] / (2.0 * c[0])
        };
        assert!(window[0].measure < vertex_m && window[1].measure < vertex_m);
        assert!(window[2].measure > vertex_m && window[3].measure > vertex_m);
        // the estimate lands close to the exact fold even at N = 100
        assert!((est - crate::problems::BRATU_1D_LAMBDA_C).abs() < 1e-3);
    }
}
