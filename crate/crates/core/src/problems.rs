//! Benchmark problem definitions: steady viscous Burgers (Dirichlet and mixed
//! boundary conditions) and the Liouville–Bratu–Gelfand family (1D, 2D, and
//! the radial Gelfand form), together with their closed-form solutions and
//! strong-form residuals.

use crate::basis::Domain;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fold of the 1D Bratu problem (two branches meet here).
pub const BRATU_1D_LAMBDA_C: f64 = 3.513830719125162;
/// Reference fold of the 2D Bratu problem on the unit square (literature value).
pub const BRATU_2D_LAMBDA_C_REF: f64 = 6.808124;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("no solution on the requested branch: theta = {theta:.6e} exceeds the fold {fold:.12}")]
    NoSolutionOnBranch { theta: f64, fold: f64 },
    #[error("lambda = {lambda:.9} is beyond the fold {fold:.12}: no solutions exist")]
    BeyondFold { lambda: f64, fold: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no closed-form radial solution stored for lambda = {0}")]
    UnsupportedRadialLambda(f64),
    #[error("problem has no continuation parameter")]
    NoContinuationParameter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchSide {
    Lower,
    Upper,
}

/// One benchmark PDE instance. The embedded scalar (θ or λ) is the starting
/// value of the continuation parameter where one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemKind {
    BurgersDirichlet { nu: f64 },
    BurgersMixed { nu: f64, theta: f64 },
    Bratu1d { lambda: f64 },
    Bratu2d { lambda: f64 },
    BratuRadial { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeProblem {
    pub kind: ProblemKind,
    pub domain: Domain,
}

impl PdeProblem {
    /// Problem on its standard unit domain.
    pub fn new(kind: ProblemKind) -> Result<Self, ProblemError> {
        match &kind {
            ProblemKind::BurgersDirichlet { nu } | ProblemKind::BurgersMixed { nu, .. } => {
                if *nu <= 0.0 {
                    return Err(ProblemError::InvalidParameter(format!(
                        "viscosity must be positive, got {nu}"
                    )));
                }
            }
            ProblemKind::Bratu1d { lambda }
            | ProblemKind::Bratu2d { lambda }
            | ProblemKind::BratuRadial { lambda } => {
                if *lambda < 0.0 {
                    return Err(ProblemError::InvalidParameter(format!(
                        "lambda must be nonnegative, got {lambda}"
                    )));
                }
            }
        }
        let domain = match kind {
            ProblemKind::Bratu2d { .. } => Domain::unit_square(),
            _ => Domain::unit_line(),
        };
        Ok(PdeProblem { kind, domain })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let kind: ProblemKind = serde_json::from_str(text)?;
        Ok(PdeProblem::new(kind).expect("parsed parameters validated by caller"))
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Starting value of the continuation parameter (θ for mixed Burgers,
    /// λ for the Bratu family); Dirichlet Burgers has none.
    pub fn initial_param(&self) -> Option<f64> {
        match self.kind {
            ProblemKind::BurgersDirichlet { .. } => None,
            ProblemKind::BurgersMixed { theta, .. } => Some(theta),
            ProblemKind::Bratu1d { lambda }
            | ProblemKind::Bratu2d { lambda }
            | ProblemKind::BratuRadial { lambda } => Some(lambda),
        }
    }

    pub fn has_continuation_param(&self) -> bool {
        self.initial_param().is_some()
    }

    pub fn viscosity(&self) -> Option<f64> {
        match self.kind {
            ProblemKind::BurgersDirichlet { nu } | ProblemKind::BurgersMixed { nu, .. } => Some(nu),
            _ => None,
        }
    }

    /// Left boundary value γ = 2/(1+exp(−1/ν)) − 1 of the Dirichlet Burgers problem.
    pub fn gamma(&self) -> Option<f64> {
        match self.kind {
            ProblemKind::BurgersDirichlet { nu } => Some(2.0 / (1.0 + (-1.0 / nu).exp()) - 1.0),
            _ => None,
        }
    }

    /// Pointwise strong-form residual given the solution value and its
    /// derivatives at `x`. `param` is θ or λ where the problem has one and is
    /// ignored otherwise (θ enters only through the boundary condition).
    ///
    /// The radial problem removes the 1/r singularity at r = 0 through the
    /// symmetric limit u'(0) = 0, which turns (d−1)u'/r into (d−1)u''.
    pub fn strong_residual(&self, x: &[f64], u: f64, ux: f64, uxx: f64, uyy: f64, param: f64) -> f64 {
        match self.kind {
            ProblemKind::BurgersDirichlet { nu } | ProblemKind::BurgersMixed { nu, .. } => {
                nu * uxx - u * ux
            }
            ProblemKind::Bratu1d { .. } => uxx + param * u.exp(),
            ProblemKind::Bratu2d { .. } => uxx + uyy + param * u.exp(),
            ProblemKind::BratuRadial { .. } => {
                let r = x[0];
                if r.abs() < 1e-12 {
                    2.0 * uxx + param * u.exp()
                } else {
                    uxx + ux / r + param * u.exp()
                }
            }
        }
    }
}

/// Closed-form reference solution with analytic derivatives (all are
/// one-dimensional profiles in x or in the radius r).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    form: ExactForm,
    branch: Option<BranchSide>,
}

#[derive(Debug, Clone, PartialEq)]
enum ExactForm {
    /// u = 2/(1+exp((x−1)/ν)) − 1
    BurgersDirichlet { nu: f64 },
    /// u = √(2c)·tanh(√(2c)(1−x)/(2ν))
    BurgersMixed { nu: f64, c: f64 },
    /// u = 2 ln(cosh θ / cosh(θ(1−2x)))
    Bratu1d { theta: f64 },
    /// u = ln(scale·a) − 2 ln(a + r²)
    RadialLog { scale: f64, a: f64 },
}

impl ExactSolution {
    pub fn branch(&self) -> Option<BranchSide> {
        self.branch
    }

    /// The internal constant fixed by the boundary data: c for mixed Burgers,
    /// θ for 1D Bratu.
    pub fn constant(&self) -> Option<f64> {
        match self.form {
            ExactForm::BurgersMixed { c, .. } => Some(c),
            ExactForm::Bratu1d { theta } => Some(theta),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.form {
            ExactForm::BurgersDirichlet { nu } => {
                let e = ((x - 1.0) / nu).exp();
                2.0 / (1.0 + e) - 1.0
            }
            ExactForm::BurgersMixed { nu, c } => {
                let a = (2.0 * c).sqrt();
                a * (a * (1.0 - x) / (2.0 * nu)).tanh()
            }
            ExactForm::Bratu1d { theta } => {
                2.0 * (ln_cosh(theta) - ln_cosh(theta * (1.0 - 2.0 * x)))
            }
            ExactForm::RadialLog { scale, a } => (scale * a).ln() - 2.0 * (a + x * x).ln(),
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match self.form {
            ExactForm::BurgersDirichlet { nu } => {
                let e = ((x - 1.0) / nu).exp();
                let d = 1.0 + e;
                -(2.0 / nu) * e / (d * d)
            }
            ExactForm::BurgersMixed { nu, c } => {
                let a = (2.0 * c).sqrt();
                let b = a / (2.0 * nu);
                let s = 1.0 / (b * (1.0 - x)).cosh();
                -a * b * s * s
            }
            ExactForm::Bratu1d { theta } => 4.0 * theta * (theta * (1.0 - 2.0 * x)).tanh(),
            ExactForm::RadialLog { a, .. } => -4.0 * x / (a + x * x),
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match self.form {
            ExactForm::BurgersDirichlet { nu } => {
                let e = ((x - 1.0) / nu).exp();
                let d = 1.0 + e;
                -(2.0 / (nu * nu)) * e * (1.0 - e) / (d * d * d)
            }
            ExactForm::BurgersMixed { nu, c } => {
                let a = (2.0 * c).sqrt();
                let b = a / (2.0 * nu);
                let g = b * (1.0 - x);
                let s = 1.0 / g.cosh();
                -2.0 * a * b * b * s * s * g.tanh()
            }
            ExactForm::Bratu1d { theta } => {
                let s = 1.0 / (theta * (1.0 - 2.0 * x)).cosh();
                -8.0 * theta * theta * s * s
            }
            ExactForm::RadialLog { a, .. } => {
                let d = a + x * x;
                -4.0 / d + 8.0 * x * x / (d * d)
            }
        }
    }
}

/// Overflow-safe ln(cosh(z)).
fn ln_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Bisection to a bracket narrower than `width`, then a few Newton polish
/// steps clamped to the bracket. Assumes f(a) and f(b) have opposite signs.
fn bisect_then_polish(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    width: f64,
) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        if (b - a).abs() <= width {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..4 {
        let d = df(x);
        if d == 0.0 {
            break;
        }
        let step = f(x) / d;
        let next = x - step;
        if next.is_finite() && next >= a.min(b) && next <= a.max(b) {
            x = next;
        } else {
            break;
        }
    }
    x
}

/// Unique solution of the Dirichlet Burgers problem for viscosity ν.
pub fn burgers_dirichlet_exact(nu: f64) -> Result<ExactSolution, ProblemError> {
    if nu <= 0.0 {
        return Err(ProblemError::InvalidParameter(format!(
            "viscosity must be positive, got {nu}"
        )));
    }
    Ok(ExactSolution {
        form: ExactForm::BurgersDirichlet { nu },
        branch: None,
    })
}

/// Neumann slope magnitude produced by the mixed-BC solution with constant c:
/// (c/ν)·sech²(√(2c)/(2ν)).
fn mixed_slope(c: f64, nu: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let g = (2.0 * c).sqrt() / (2.0 * nu);
    let s = 1.0 / g.cosh();
    c / nu * s * s
}

fn mixed_slope_dc(c: f64, nu: f64) -> f64 {
    let g = (2.0 * c).sqrt() / (2.0 * nu);
    let s = 1.0 / g.cosh();
    s * s / nu * (1.0 - (c / 2.0).sqrt() * g.tanh() / nu)
}

/// Location of the mixed-BC fold: returns (θ*, c*) for the given viscosity.
///
/// The slope function peaks where t·tanh(t) = 1 with t = √(2c)/(2ν).
pub fn burgers_mixed_fold(nu: f64) -> (f64, f64) {
    let t = bisect_then_polish(
        |t: f64| t * t.tanh() - 1.0,
        |t: f64| {
            let s = 1.0 / t.cosh();
            t.tanh() + t * s * s
        },
        0.5,
        2.0,
        1e-15,
    );
    let c_star = 2.0 * nu * nu * t * t;
    (mixed_slope(c_star, nu), c_star)
}

/// Constant c of the mixed-BC Burgers solution: the root of
/// (c/ν)·sech²(√(2c)/(2ν)) = θ on the requested branch.
pub fn burgers_mixed_solve_c(theta: f64, nu: f64, branch: BranchSide) -> Result<f64, ProblemError> {
    if nu <= 0.0 || theta < 0.0 {
        return Err(ProblemError::InvalidParameter(format!(
            "need nu > 0 and theta >= 0, got nu = {nu}, theta = {theta}"
        )));
    }
    let (theta_star, c_star) = burgers_mixed_fold(nu);
    if theta > theta_star {
        if theta - theta_star <= 1e-9 * theta_star {
            return Ok(c_star);
        }
        return Err(ProblemError::NoSolutionOnBranch {
            theta,
            fold: theta_star,
        });
    }
    if theta == 0.0 {
        return match branch {
            BranchSide::Lower => Ok(0.0),
            BranchSide::Upper => Err(ProblemError::InvalidParameter(
                "upper branch is unbounded as theta -> 0".into(),
            )),
        };
    }
    let f = |c: f64| mixed_slope(c, nu) - theta;
    let df = |c: f64| mixed_slope_dc(c, nu);
    let c = match branch {
        BranchSide::Lower => bisect_then_polish(f, df, 0.0, c_star, 1e-14),
        BranchSide::Upper => {
            let mut hi = (2.0 * c_star).max(1.0);
            while mixed_slope(hi, nu) > theta {
                hi *= 2.0;
                if hi > 1e12 {
                    return Err(ProblemError::InvalidParameter(
                        "upper-branch bracket expansion failed".into(),
                    ));
                }
            }
            bisect_then_polish(f, df, c_star, hi, 1e-14)
        }
    };
    Ok(c)
}

/// Mixed-BC Burgers solution on the requested branch.
pub fn burgers_mixed_exact(
    nu: f64,
    theta: f64,
    branch: BranchSide,
) -> Result<ExactSolution, ProblemError> {
    let c = burgers_mixed_solve_c(theta, nu, branch)?;
    Ok(ExactSolution {
        form: ExactForm::BurgersMixed { nu, c },
        branch: Some(branch),
    })
}

/// Mixed-BC Burgers solution with the constant c given directly.
pub fn burgers_mixed_exact_from_c(nu: f64, c: f64) -> ExactSolution {
    ExactSolution {
        form: ExactForm::BurgersMixed { nu, c },
        branch: None,
    }
}

/// Small-θ estimates for the upper branch: c ≈ ½ν²ln²(ν/ε) and the matching
/// u(0) value. These are asymptotic order-of-magnitude estimates only; the
/// root solve in [`burgers_mixed_solve_c`] is the ground truth and disagrees
/// with them at finite ε.
pub struct AsymptoticUpperBranch {
    pub c: f64,
    pub u0: f64,
}

pub fn burgers_asymptotic_c(eps: f64, nu: f64) -> Result<AsymptoticUpperBranch, ProblemError> {
    if eps <= 0.0 || nu <= 0.0 {
        return Err(ProblemError::InvalidParameter(format!(
            "need eps > 0 and nu > 0, got eps = {eps}, nu = {nu}"
        )));
    }
    let l = (nu / eps).ln();
    Ok(AsymptoticUpperBranch {
        c: 0.5 * nu * nu * l * l,
        u0: nu * l * (0.5 * l).tanh(),
    })
}

/// Shape parameter θ of the 1D Bratu solution: root of cosh θ = 4θ/√(2λ) on
/// the requested branch (smaller root = lower, larger = upper).
pub fn bratu1d_solve_theta(lambda: f64, branch: BranchSide) -> Result<f64, ProblemError> {
    if lambda <= 0.0 {
        return Err(ProblemError::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let k = 4.0 / (2.0 * lambda).sqrt();
    let g = |t: f64| t.cosh() - k * t;
    let dg = |t: f64| t.sinh() - k;
    let t_min = k.asinh();
    let g_min = g(t_min);
    if g_min > 1e-12 {
        return Err(ProblemError::BeyondFold {
            lambda,
            fold: BRATU_1D_LAMBDA_C,
        });
    }
    if g_min >= 0.0 {
        // at the fold the two roots coincide
        return Ok(t_min);
    }
    let theta = match branch {
        BranchSide::Lower => bisect_then_polish(g, dg, 0.0, t_min, 1e-14),
        BranchSide::Upper => {
            let mut hi = 2.0 * t_min.max(1.0);
            while g(hi) < 0.0 {
                hi *= 2.0;
            }
            bisect_then_polish(g, dg, t_min, hi, 1e-14)
        }
    };
    Ok(theta)
}

/// 1D Bratu solution on the requested branch (0 < λ < λ_c).
pub fn bratu1d_exact(lambda: f64, branch: BranchSide) -> Result<ExactSolution, ProblemError> {
    let theta = bratu1d_solve_theta(lambda, branch)?;
    Ok(ExactSolution {
        form: ExactForm::Bratu1d { theta },
        branch: Some(branch),
    })
}

/// Closed-form radial Gelfand–Bratu solutions (d = 2) at the two stored λ.
pub fn bratu_radial_exact(lambda: f64) -> Result<ExactSolution, ProblemError> {
    let sqrt3 = 3.0f64.sqrt();
    let sqrt2 = 2.0f64.sqrt();
    if (lambda - 0.5).abs() < 1e-12 {
        Ok(ExactSolution {
            form: ExactForm::RadialLog {
                scale: 16.0,
                a: 7.0 + 4.0 * sqrt3,
            },
            branch: Some(BranchSide::Lower),
        })
    } else if (lambda - 1.0).abs() < 1e-12 {
        Ok(ExactSolution {
            form: ExactForm::RadialLog {
                scale: 8.0,
                a: 3.0 + 2.0 * sqrt2,
            },
            branch: Some(BranchSide::Lower),
        })
    } else {
        Err(ProblemError::UnsupportedRadialLambda(lambda))
    }
}
