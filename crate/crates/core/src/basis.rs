//! Random hidden-layer bases: logistic sigmoid ridge functions and Gaussian
//! RBF kernels over 1D intervals and 2D rectangles, with analytic first and
//! second partial derivatives.
//!
//! Internal parameters are drawn once from documented uniform ranges and then
//! frozen; only the outer coefficient vector is ever solved for. Sampling is
//! reproducible: the same `(kind, n_neurons, domain, seed)` always yields a
//! bit-identical basis (ChaCha8 keyed by the seed, fixed draw order: one
//! neuron at a time, axis 0 before axis 1).

use ndarray::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("domain dimension must be 1 or 2, got {0}")]
    InvalidDimension(usize),
    #[error("domain bounds must satisfy lower < upper on every axis")]
    InvalidBounds,
    #[error("need at least 2 neurons, got {0}")]
    TooFewNeurons(usize),
    #[error("sampling interval ({lo:.4}, {hi:.4}) is empty for n_neurons = {n}")]
    EmptySamplingInterval { lo: f64, hi: f64, n: usize },
    #[error("could not draw a weight with |alpha| > {threshold:.4} after {tries} tries")]
    ResamplingExhausted { threshold: f64, tries: usize },
    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },
}

/// Axis-aligned box in 1 or 2 dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, BasisError> {
        if lower.len() != upper.len() || !(1..=2).contains(&lower.len()) {
            return Err(BasisError::InvalidDimension(lower.len()));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b)) {
            return Err(BasisError::InvalidBounds);
        }
        Ok(Domain { lower, upper })
    }

    /// The interval [a, b].
    pub fn line(a: f64, b: f64) -> Result<Self, BasisError> {
        Domain::new(vec![a], vec![b])
    }

    /// The square [a, b]².
    pub fn square(a: f64, b: f64) -> Result<Self, BasisError> {
        Domain::new(vec![a, a], vec![b, b])
    }

    pub fn unit_line() -> Self {
        Domain::line(0.0, 1.0).expect("static bounds")
    }

    pub fn unit_square() -> Self {
        Domain::square(0.0, 1.0).expect("static bounds")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.lower[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.upper[axis]
    }

    /// |I| on the given axis.
    pub fn length(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationKind {
    Sigmoid,
    GaussianRbf,
}

/// Frozen random hidden layer: activation kind plus per-neuron parameters.
///
/// Sigmoid neurons store ridge weights `internal_weights` (N×dim) and biases;
/// RBF neurons store squared steepness. Both kinds anchor on `centers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmBasis {
    kind: ActivationKind,
    n_neurons: usize,
    internal_weights: Array2<f64>,
    biases: Array1<f64>,
    centers: Array2<f64>,
    steepness_sq: Array1<f64>,
    domain: Domain,
    seed: u64,
}

/// Equispaced anchor points: N points including endpoints on an interval, or
/// the first N points (raster order) of a ⌈√N⌉×⌈√N⌉ lattice on a rectangle.
fn anchor_points(n: usize, domain: &Domain) -> Array2<f64> {
    let dim = domain.dim();
    let mut centers = Array2::zeros((n, dim));
    match dim {
        1 => {
            let (a, b) = (domain.lower(0), domain.upper(0));
            for j in 0..n {
                let t = if n == 1 { 0.5 } else { j as f64 / (n - 1) as f64 };
                centers[(j, 0)] = a + t * (b - a);
            }
        }
        2 => {
            let m = (n as f64).sqrt().ceil() as usize;
            let coord = |axis: usize, k: usize| {
                let (a, b) = (domain.lower(axis), domain.upper(axis));
                let t = if m == 1 { 0.5 } else { k as f64 / (m - 1) as f64 };
                a + t * (b - a)
            };
            let mut j = 0;
            'fill: for row in 0..m {
                for col in 0..m {
                    if j == n {
                        break 'fill;
                    }
                    centers[(j, 0)] = coord(0, col);
                    centers[(j, 1)] = coord(1, row);
                    j += 1;
                }
            }
        }
        _ => unreachable!("Domain enforces dim in {{1,2}}"),
    }
    centers
}

/// Sigmoid ridge basis with weights drawn from the size-dependent uniform
/// ranges, centers equispaced, and biases fixed so each neuron's inflection
/// sits on its center.
///
/// 1D weights come from U(−(N−55)/(10|I|), (N+35)/(10|I|)), redrawn until
/// |α| > 1/(2|I|); 2D components from U(−(√N−60)/(20|I|), (√N+40)/(20|I|)).
pub fn sample_sigmoid_basis(
    n_neurons: usize,
    domain: &Domain,
    seed: u64,
) -> Result<ElmBasis, BasisError> {
    if n_neurons < 2 {
        return Err(BasisError::TooFewNeurons(n_neurons));
    }
    let dim = domain.dim();
    let nf = n_neurons as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Array2::zeros((n_neurons, dim));
    match dim {
        1 => {
            let len = domain.length(0);
            let lo = -(nf - 55.0) / (10.0 * len);
            let hi = (nf + 35.0) / (10.0 * len);
            if !(lo < hi) || n_neurons <= 10 {
                return Err(BasisError::EmptySamplingInterval { lo, hi, n: n_neurons });
            }
            let threshold = 1.0 / (2.0 * len);
            const MAX_TRIES: usize = 10_000;
            for j in 0..n_neurons {
                let mut ok = false;
                for _ in 0..MAX_TRIES {
                    let a = rng.gen_range(lo..hi);
                    if a.abs() > threshold {
                        weights[(j, 0)] = a;
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return Err(BasisError::ResamplingExhausted {
                        threshold,
                        tries: MAX_TRIES,
                    });
                }
            }
        }
        2 => {
            let sq = nf.sqrt();
            for j in 0..n_neurons {
                for k in 0..2 {
                    let len = domain.length(k);
                    let lo = -(sq - 60.0) / (20.0 * len);
                    let hi = (sq + 40.0) / (20.0 * len);
                    if !(lo < hi) {
                        return Err(BasisError::EmptySamplingInterval { lo, hi, n: n_neurons });
                    }
                    weights[(j, k)] = rng.gen_range(lo..hi);
                }
            }
        }
        d => return Err(BasisError::InvalidDimension(d)),
    }
    let centers = anchor_points(n_neurons, domain);
    let mut biases = Array1::zeros(n_neurons);
    for j in 0..n_neurons {
        let mut b = 0.0;
        for k in 0..dim {
            b -= weights[(j, k)] * centers[(j, k)];
        }
        biases[j] = b;
    }
    Ok(ElmBasis {
        kind: ActivationKind::Sigmoid,
        n_neurons,
        internal_weights: weights,
        biases,
        centers,
        steepness_sq: Array1::zeros(0),
        domain: domain.clone(),
        seed,
    })
}

/// Gaussian RBF basis with squared steepness from U(1/|I|, (N+65)/(15|I|)) in
/// 1D and U(1/(2|I|), (√N+50)/(30|I|)) in 2D, centers equispaced.
///
/// On rectangles with unequal sides the scalar steepness range uses the longer
/// side length.
pub fn sample_rbf_basis(
    n_neurons: usize,
    domain: &Domain,
    seed: u64,
) -> Result<ElmBasis, BasisError> {
    if n_neurons < 2 {
        return Err(BasisError::TooFewNeurons(n_neurons));
    }
    let dim = domain.dim();
    let nf = n_neurons as f64;
    let len = (0..dim).map(|k| domain.length(k)).fold(0.0f64, f64::max);
    let (lo, hi) = match dim {
        1 => (1.0 / len, (nf + 65.0) / (15.0 * len)),
        2 => (1.0 / (2.0 * len), (nf.sqrt() + 50.0) / (30.0 * len)),
        d => return Err(BasisError::InvalidDimension(d)),
    };
    if !(lo < hi) {
        return Err(BasisError::EmptySamplingInterval { lo, hi, n: n_neurons });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eps_sq = Array1::zeros(n_neurons);
    for j in 0..n_neurons {
        eps_sq[j] = rng.gen_range(lo..hi);
    }
    let centers = anchor_points(n_neurons, domain);
    Ok(ElmBasis {
        kind: ActivationKind::GaussianRbf,
        n_neurons,
        internal_weights: Array2::zeros((0, dim)),
        biases: Array1::zeros(0),
        centers,
        steepness_sq: eps_sq,
        domain: domain.clone(),
        seed,
    })
}

impl ElmBasis {
    /// Hand-assembled sigmoid basis (tests and single-neuron experiments).
    pub fn sigmoid_from_parts(
        weights: Array2<f64>,
        biases: Array1<f64>,
        domain: Domain,
    ) -> Result<Self, BasisError> {
        let n = weights.nrows();
        if n < 1 || biases.len() != n || weights.ncols() != domain.dim() {
            return Err(BasisError::InvalidDimension(weights.ncols()));
        }
        let dim = domain.dim();
        // back out nominal centers on the bias relation; for reporting only
        let mut centers = Array2::zeros((n, dim));
        for j in 0..n {
            if dim == 1 && weights[(j, 0)] != 0.0 {
                centers[(j, 0)] = -biases[j] / weights[(j, 0)];
            }
        }
        Ok(ElmBasis {
            kind: ActivationKind::Sigmoid,
            n_neurons: n,
            internal_weights: weights,
            biases,
            centers,
            steepness_sq: Array1::zeros(0),
            domain,
            seed: 0,
        })
    }

    /// Hand-assembled Gaussian RBF basis.
    pub fn rbf_from_parts(
        centers: Array2<f64>,
        steepness_sq: Array1<f64>,
        domain: Domain,
    ) -> Result<Self, BasisError> {
        let n = centers.nrows();
        if n < 1 || steepness_sq.len() != n || centers.ncols() != domain.dim() {
            return Err(BasisError::InvalidDimension(centers.ncols()));
        }
        Ok(ElmBasis {
            kind: ActivationKind::GaussianRbf,
            n_neurons: n,
            internal_weights: Array2::zeros((0, domain.dim())),
            biases: Array1::zeros(0),
            centers,
            steepness_sq,
            domain,
            seed: 0,
        })
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn internal_weights(&self) -> &Array2<f64> {
        &self.internal_weights
    }

    pub fn biases(&self) -> &Array1<f64> {
        &self.biases
    }

    pub fn centers(&self) -> &Array2<f64> {
        &self.centers
    }

    pub fn steepness_sq(&self) -> &Array1<f64> {
        &self.steepness_sq
    }

    /// ψ_j(x) for all j.
    pub fn eval(&self, x: &[f64]) -> Array1<f64> {
        let n = self.n_neurons;
        let mut out = Array1::zeros(n);
        match self.kind {
            ActivationKind::Sigmoid => {
                for j in 0..n {
                    out[j] = sigma(self.ridge(j, x));
                }
            }
            ActivationKind::GaussianRbf => {
                for j in 0..n {
                    out[j] = (-self.steepness_sq[j] * self.r_sq(j, x)).exp();
                }
            }
        }
        out
    }

    /// ∂ψ_j/∂x_axis for all j.
    pub fn eval_d1(&self, x: &[f64], axis: usize) -> Array1<f64> {
        let n = self.n_neurons;
        let mut out = Array1::zeros(n);
        match self.kind {
            ActivationKind::Sigmoid => {
                for j in 0..n {
                    let s = sigma(self.ridge(j, x));
                    out[j] = self.internal_weights[(j, axis)] * s * (1.0 - s);
                }
            }
            ActivationKind::GaussianRbf => {
                for j in 0..n {
                    let e = self.steepness_sq[j];
                    let d = x[axis] - self.centers[(j, axis)];
                    out[j] = -2.0 * e * d * (-e * self.r_sq(j, x)).exp();
                }
            }
        }
        out
    }

    /// ∂²ψ_j/∂x_axis² for all j.
    ///
    /// Sigmoid uses α²·σ(1−σ)(1−2σ), the derivative of the first-derivative
    /// formula (equal to α²·e^z(1−e^z)/(1+e^z)³).
    pub fn eval_d2(&self, x: &[f64], axis: usize) -> Array1<f64> {
        let n = self.n_neurons;
        let mut out = Array1::zeros(n);
        match self.kind {
            ActivationKind::Sigmoid => {
                for j in 0..n {
                    let a = self.internal_weights[(j, axis)];
                    let s = sigma(self.ridge(j, x));
                    out[j] = a * a * s * (1.0 - s) * (1.0 - 2.0 * s);
                }
            }
            ActivationKind::GaussianRbf => {
                for j in 0..n {
                    let e = self.steepness_sq[j];
                    let d = x[axis] - self.centers[(j, axis)];
                    out[j] = -2.0 * e * (1.0 - 2.0 * e * d * d) * (-e * self.r_sq(j, x)).exp();
                }
            }
        }
        out
    }

    #[inline]
    fn ridge(&self, j: usize, x: &[f64]) -> f64 {
        let mut z = self.biases[j];
        for k in 0..x.len() {
            z += self.internal_weights[(j, k)] * x[k];
        }
        z
    }

    #[inline]
    fn r_sq(&self, j: usize, x: &[f64]) -> f64 {
        let mut r = 0.0;
        for k in 0..x.len() {
            let d = x[k] - self.centers[(j, k)];
            r += d * d;
        }
        r
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Numerically stable logistic function.
#[inline]
fn sigma(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Collocation matrix S with (S)_{ij} = ψ_j(x_i); `points` holds one point per row.
pub fn collocation_matrix(basis: &ElmBasis, points: &Array2<f64>) -> Array2<f64> {
    let m = points.nrows();
    let n = basis.n_neurons();
    let mut s = Array2::zeros((m, n));
    for i in 0..m {
        let row = basis.eval(points.row(i).as_slice().expect("contiguous"));
        s.row_mut(i).assign(&row);
    }
    s
}

/// First-derivative collocation matrix: row i holds ∂ψ_j/∂x_axis at x_i.
pub fn collocation_matrix_d1(basis: &ElmBasis, points: &Array2<f64>, axis: usize) -> Array2<f64> {
    let m = points.nrows();
    let mut s = Array2::zeros((m, basis.n_neurons()));
    for i in 0..m {
        let row = basis.eval_d1(points.row(i).as_slice().expect("contiguous"), axis);
        s.row_mut(i).assign(&row);
    }
    s
}

/// Second-derivative collocation matrix: row i holds ∂²ψ_j/∂x_axis² at x_i.
pub fn collocation_matrix_d2(basis: &ElmBasis, points: &Array2<f64>, axis: usize) -> Array2<f64> {
    let m = points.nrows();
    let mut s = Array2::zeros((m, basis.n_neurons()));
    for i in 0..m {
        let row = basis.eval_d2(points.row(i).as_slice().expect("contiguous"), axis);
        s.row_mut(i).assign(&row);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray_linalg::Solve;
    use rand::prelude::*;

    #[test]
    fn sigmoid_1d_range_is_positive_for_small_n() {
        let dom = Domain::unit_line();
        let basis = sample_sigmoid_basis(40, &dom, 7).unwrap();
        // lower bound -(40-55)/10 = +1.5, upper (40+35)/10 = 7.5
        for &a in basis.internal_weights().column(0) {
            assert!(a > 1.5 && a < 7.5, "alpha {a} outside (1.5, 7.5)");
        }
    }

    #[test]
    fn sigmoid_centers_are_equispaced_and_bias_consistent() {
        let dom = Domain::unit_line();
        let basis = sample_sigmoid_basis(40, &dom, 3).unwrap();
        for j in 0..40 {
            let c = j as f64 / 39.0;
            assert_abs_diff_eq!(basis.centers()[(j, 0)], c, epsilon = 1e-15);
            assert_eq!(
                basis.biases()[j],
                -basis.internal_weights()[(j, 0)] * basis.centers()[(j, 0)]
            );
            // the sigmoid passes through 1/2 at its center
            let v = basis.eval(&[c]);
            assert_abs_diff_eq!(v[j], 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn same_seed_reproduces_bit_identical_basis() {
        let dom = Domain::unit_line();
        let a = sample_sigmoid_basis(64, &dom, 42).unwrap();
        let b = sample_sigmoid_basis(64, &dom, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_rbf_basis(64, &dom, 42).unwrap();
        let d = sample_rbf_basis(64, &dom, 42).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn sigmoid_rejects_small_n_in_1d() {
        let dom = Domain::unit_line();
        assert!(matches!(
            sample_sigmoid_basis(10, &dom, 1),
            Err(BasisError::EmptySamplingInterval { .. })
        ));
        assert!(matches!(
            sample_sigmoid_basis(1, &dom, 1),
            Err(BasisError::TooFewNeurons(1))
        ));
    }

    #[test]
    fn rbf_1d_range() {
        let dom = Domain::unit_line();
        let basis = sample_rbf_basis(40, &dom, 11).unwrap();
        // (N+65)/15 = 7 for N = 40
        for &e in basis.steepness_sq() {
            assert!(e > 1.0 && e < 7.0, "eps^2 {e} outside (1, 7)");
        }
    }

    #[test]
    fn rbf_is_one_at_its_center() {
        let dom = Domain::unit_line();
        let basis = sample_rbf_basis(23, &dom, 5).unwrap();
        for j in 0..23 {
            let c = basis.centers()[(j, 0)];
            let v = basis.eval(&[c]);
            assert_abs_diff_eq!(v[j], 1.0, epsilon = 0.0);
        }
    }

    #[test]
    fn sigmoid_scalar_value_check() {
        // alpha = 2, beta = 0 at x = 1: 1/(1+e^{-2})
        let basis = ElmBasis::sigmoid_from_parts(
            array![[2.0]],
            array![0.0],
            Domain::line(0.0, 2.0).unwrap(),
        )
        .unwrap();
        let v = basis.eval(&[1.0]);
        assert_abs_diff_eq!(v[0], 1.0 / (1.0 + (-2.0f64).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(v[0], 0.8807970779778823, epsilon = 1e-12);
    }

    #[test]
    fn derivative_values_at_centers() {
        let dom = Domain::unit_line();
        let sig = sample_sigmoid_basis(20, &dom, 2).unwrap();
        for j in [0usize, 7, 19] {
            let c = sig.centers()[(j, 0)];
            let d1 = sig.eval_d1(&[c], 0);
            let a = sig.internal_weights()[(j, 0)];
            // e^0/(1+e^0)^2 = 1/4
            assert_abs_diff_eq!(d1[j], a / 4.0, epsilon = 1e-14);
            let d2 = sig.eval_d2(&[c], 0);
            assert_abs_diff_eq!(d2[j], 0.0, epsilon = 1e-13);
        }
        let rbf = sample_rbf_basis(20, &dom, 2).unwrap();
        for j in [0usize, 5, 19] {
            let c = rbf.centers()[(j, 0)];
            let d1 = rbf.eval_d1(&[c], 0);
            assert_abs_diff_eq!(d1[j], 0.0, epsilon = 0.0);
            let d2 = rbf.eval_d2(&[c], 0);
            assert_abs_diff_eq!(d2[j], -2.0 * rbf.steepness_sq()[j], epsilon = 1e-13);
        }
    }

    fn check_fd_consistency(basis: &ElmBasis, rng: &mut impl Rng, trials: usize) {
        let dim = basis.domain().dim();
        for _ in 0..trials {
            let x: Vec<f64> = (0..dim)
                .map(|k| {
                    let (a, b) = (basis.domain().lower(k), basis.domain().upper(k));
                    // keep interior so the FD stencil stays inside the domain
                    rng.gen_range(a + 0.01 * (b - a)..b - 0.01 * (b - a))
                })
                .collect();
            let axis = rng.gen_range(0..dim);
            let j = rng.gen_range(0..basis.n_neurons());
            let h1 = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[axis] += h1;
            xm[axis] -= h1;
            let d1 = basis.eval_d1(&x, axis)[j];
            let fd1 = (basis.eval(&xp)[j] - basis.eval(&xm)[j]) / (2.0 * h1);
            let s1 = d1.abs().max(fd1.abs()).max(1.0);
            assert!(
                (d1 - fd1).abs() <= 1e-6 * s1,
                "d1 mismatch: {d1} vs {fd1} at {x:?} axis {axis}"
            );
            let h2 = 1e-4;
            let mut xp2 = x.clone();
            let mut xm2 = x.clone();
            xp2[axis] += h2;
            xm2[axis] -= h2;
            let d2 = basis.eval_d2(&x, axis)[j];
            let fd2 =
                (basis.eval(&xp2)[j] - 2.0 * basis.eval(&x)[j] + basis.eval(&xm2)[j]) / (h2 * h2);
            let s2 = d2.abs().max(fd2.abs()).max(1.0);
            assert!(
                (d2 - fd2).abs() <= 1e-5 * s2,
                "d2 mismatch: {d2} vs {fd2} at {x:?} axis {axis}"
            );
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let line = Domain::unit_line();
        let square = Domain::unit_square();
        check_fd_consistency(&sample_sigmoid_basis(40, &line, 1).unwrap(), &mut rng, 200);
        check_fd_consistency(&sample_rbf_basis(40, &line, 2).unwrap(), &mut rng, 200);
        check_fd_consistency(&sample_sigmoid_basis(144, &square, 3).unwrap(), &mut rng, 200);
        check_fd_consistency(&sample_rbf_basis(144, &square, 4).unwrap(), &mut rng, 200);
    }

    #[test]
    fn sigmoid_2d_constant_along_central_direction() {
        let dom = Domain::unit_square();
        let basis = sample_sigmoid_basis(400, &dom, 8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let j = rng.gen_range(0..400);
            let a1 = basis.internal_weights()[(j, 0)];
            let a2 = basis.internal_weights()[(j, 1)];
            let norm = (a1 * a1 + a2 * a2).sqrt();
            // direction along the zero level line of the ridge argument
            let (dx, dy) = (a2 / norm, -a1 / norm);
            let (cx, cy) = (basis.centers()[(j, 0)], basis.centers()[(j, 1)]);
            for t in [-0.05, -0.01, 0.02, 0.04] {
                let p = [cx + t * dx, cy + t * dy];
                if !basis.domain().contains(&p) {
                    continue;
                }
                let v = basis.eval(&p)[j];
                assert!((v - 0.5).abs() < 1e-12, "sigmoid varies along line: {v}");
            }
        }
    }

    #[test]
    fn square_collocation_matrix_interpolates() {
        let dom = Domain::unit_line();
        let basis = sample_sigmoid_basis(12, &dom, 31).unwrap();
        let pts = Array2::from_shape_fn((12, 1), |(i, _)| 0.05 + 0.9 * i as f64 / 11.0);
        let s = collocation_matrix(&basis, &pts);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let y = Array1::from_shape_fn(12, |_| rng.gen_range(-1.0..1.0_f64));
        let w = s.solve(&y).expect("random collocation matrix is invertible");
        let resid = &s.dot(&w) - &y;
        let ynorm = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(resid.iter().all(|r| r.abs() <= 1e-8 * ynorm.max(1.0)));
    }

    #[test]
    fn single_point_single_neuron_matrix() {
        let basis = ElmBasis::sigmoid_from_parts(
            array![[1.5]],
            array![-0.75],
            Domain::unit_line(),
        )
        .unwrap();
        let pts = array![[0.5]];
        let s = collocation_matrix(&basis, &pts);
        assert_eq!(s.dim(), (1, 1));
        assert_abs_diff_eq!(s[(0, 0)], basis.eval(&[0.5])[0], epsilon = 0.0);
    }

    #[test]
    fn fitting_a_basis_function_recovers_unit_vector() {
        let dom = Domain::unit_line();
        let basis = sample_rbf_basis(6, &dom, 13).unwrap();
        let pts = Array2::from_shape_fn((6, 1), |(i, _)| i as f64 / 5.0);
        let s = collocation_matrix(&basis, &pts);
        let y = s.column(0).to_owned();
        let w = s.solve(&y).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-6);
        for j in 1..6 {
            assert_abs_diff_eq!(w[j], 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn sigmoid_values_in_open_unit_interval_rbf_in_half_open() {
        let dom = Domain::unit_square();
        let sig = sample_sigmoid_basis(121, &dom, 6).unwrap();
        let rbf = sample_rbf_basis(121, &dom, 6).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            for v in sig.eval(&p) {
                assert!(v > 0.0 && v < 1.0 && v.is_finite());
            }
            for v in rbf.eval(&p) {
                assert!(v > 0.0 && v <= 1.0 && v.is_finite());
            }
        }
    }

    #[test]
    fn centers_lie_in_closed_domain() {
        let dom = Domain::square(-1.0, 2.0).unwrap();
        for seed in 0..4 {
            let b = sample_rbf_basis(150, &dom, seed).unwrap();
            for j in 0..150 {
                let p = [b.centers()[(j, 0)], b.centers()[(j, 1)]];
                assert!(dom.contains(&p));
            }
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let dom = Domain::unit_line();
        let b = sample_sigmoid_basis(16, &dom, 1234).unwrap();
        let s = b.to_json().unwrap();
        let b2 = ElmBasis::from_json(&s).unwrap();
        assert_eq!(b, b2);
    }
}
