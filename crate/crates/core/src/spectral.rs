//! Collocation discretisation of the boundary transfer operator
//! `L_t f(ξ) = Σ_g p_g |g'(ξ)|^t f(gξ)` and the pressure `Λ(t) = log λ(t)`
//! of its leading eigenvalue. The drift is `-Λ'(0)`.
//!
//! Off-grid values `f(gξ_i)` come from trigonometric interpolation on the
//! equispaced grid, so each generator contributes a dense block of
//! periodic-sinc weights.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::GeneratorSet;
use crate::hyperbolic::{BoundaryPoint, Isometry};
use crate::walk::{DriftEstimate, DriftMethod};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid size {0} must be a power of two and at least 64")]
    BadGrid(usize),
    #[error("generator set is empty")]
    NoGenerators,
    #[error("power iteration did not converge after {iterations} steps (lambda = {lambda}, residual = {residual:e})")]
    NoConvergence {
        lambda: f64,
        residual: f64,
        iterations: usize,
    },
    #[error("pressure curve lacks t = {0} at a common grid size")]
    MissingSample(f64),
}

/// Equispaced nodes `θ_i = 2πi/M` on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorGrid {
    m: usize,
}

impl OperatorGrid {
    pub fn new(m: usize) -> Result<Self, SpectralError> {
        if m >= 64 && m.is_power_of_two() {
            Ok(OperatorGrid { m })
        } else {
            Err(SpectralError::BadGrid(m))
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn node(&self, i: usize) -> f64 {
        TAU * i as f64 / self.m as f64
    }
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        DenseMatrix {
            n,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            *o = self.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
        });
    }
}

/// Weights `w_j(x)` of the degree-`M/2` trigonometric interpolant on the
/// grid, so that `f(x) ≈ Σ_j w_j(x) f(θ_j)`, accumulated into `row` with factor `scale`.
/// The weights are rescaled to sum to exactly one, the value they have in exact arithmetic.
fn add_interpolation_weights(grid: &OperatorGrid, x: f64, scale: f64, row: &mut [f64]) {
    let m = grid.size();
    let h = TAU / m as f64;
    // exact node hit: the interpolant is the nodal value
    let nearest = (x / h).round();
    if (x - nearest * h).abs() < 1e-15 {
        row[(nearest as usize) % m] += scale;
        return;
    }
    // w_j(x) = sin(M(x-θ_j)/2)·cot((x-θ_j)/2)/M, and sin(M(x-θ_j)/2) = (-1)^j sin(Mx/2)
    let s = (m as f64 * x / 2.0).sin() / m as f64;
    let weights: Vec<f64> = (0..m)
        .map(|j| {
            let u = (x - grid.node(j)) / 2.0;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * s / u.tan()
        })
        .collect();
    let total = compensated_sum(&weights);
    for (r, w) in row.iter_mut().zip(&weights) {
        *r += scale * w / total;
    }
}

/// Kahan–Babuška summation.
fn compensated_sum(values: &[f64]) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for &v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}

/// Dense collocation matrix of `L_t` on the grid.
pub fn build_operator_matrix(
    gens: &GeneratorSet,
    t: f64,
    grid: &OperatorGrid,
) -> Result<DenseMatrix, SpectralError> {
    let steps: Vec<Isometry> = gens.symmetric_closure().into_iter().map(|s| s.map).collect();
    if steps.is_empty() {
        return Err(SpectralError::NoGenerators);
    }
    let probs = gens.step_distribution();
    let m = grid.size();
    let mut mat = DenseMatrix::zeros(m);
    mat.data.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        let xi = BoundaryPoint::new(grid.node(i));
        for (g, &p) in steps.iter().zip(probs) {
            let weight = p * (t * g.log_boundary_derivative(xi)).exp();
            let image = g.apply_boundary(xi).theta();
            add_interpolation_weights(grid, image, weight, row);
        }
    });
    Ok(mat)
}

/// Leading eigenvalue from power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerResult {
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    pub vector: Vec<f64>,
}

pub const POWER_TOLERANCE: f64 = 1e-12;
pub const POWER_MAX_ITERATIONS: usize = 100_000;

/// Dominant eigenvalue by power iteration from the constant vector. The
/// residual is `‖Av - λv‖∞ / ‖v‖∞`.
pub fn spectral_radius(matrix: &DenseMatrix) -> Result<PowerResult, SpectralError> {
    spectral_radius_with(matrix, POWER_TOLERANCE, POWER_MAX_ITERATIONS)
}

pub fn spectral_radius_with(
    matrix: &DenseMatrix,
    tol: f64,
    max_iterations: usize,
) -> Result<PowerResult, SpectralError> {
    let n = matrix.n;
    let mut v = vec![1.0; n];
    let mut av = vec![0.0; n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let norm = |x: &[f64]| x.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    for it in 1..=max_iterations {
        matrix.matvec_into(&v, &mut av);
        // Rayleigh-type estimate against the current iterate
        let vv: f64 = v.iter().map(|x| x * x).sum();
        lambda = v.iter().zip(&av).map(|(a, b)| a * b).sum::<f64>() / vv;
        residual = v
            .iter()
            .zip(&av)
            .fold(0.0f64, |m, (x, y)| m.max((y - lambda * x).abs()))
            / norm(&v);
        if residual <= tol * lambda.abs().max(1.0) {
            return Ok(PowerResult {
                lambda,
                residual,
                iterations: it,
                vector: v,
            });
        }
        let scale = norm(&av);
        if scale == 0.0 {
            return Ok(PowerResult {
                lambda: 0.0,
                residual: 0.0,
                iterations: it,
                vector: av,
            });
        }
        for (x, y) in v.iter_mut().zip(&av) {
            *x = y / scale;
        }
    }
    Err(SpectralError::NoConvergence {
        lambda,
        residual,
        iterations: max_iterations,
    })
}

/// In-place LU factorisation with partial pivoting of a row-major matrix.
struct Lu {
    n: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl Lu {
    fn factor(mut data: Vec<f64>, n: usize) -> Option<Lu> {
        let mut pivots = vec![0; n];
        for k in 0..n {
            let p = (k..n)
                .max_by(|&a, &b| data[a * n + k].abs().total_cmp(&data[b * n + k].abs()))
                .unwrap();
            if data[p * n + k].abs() < 1e-300 {
                return None;
            }
            pivots[k] = p;
            if p != k {
                for j in 0..n {
                    data.swap(k * n + j, p * n + j);
                }
            }
            let (head, tail) = data.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let inv = 1.0 / pivot_row[k];
            tail.par_chunks_mut(n).for_each(|row| {
                let l = row[k] * inv;
                if l != 0.0 {
                    row[k] = l;
                    for j in k + 1..n {
                        row[j] -= l * pivot_row[j];
                    }
                }
            });
        }
        Some(Lu { n, data, pivots })
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            rhs.swap(k, self.pivots[k]);
        }
        for i in 0..n {
            let row = &self.data[i * n..i * n + i];
            let s: f64 = row.iter().zip(&rhs[..i]).map(|(a, b)| a * b).sum();
            rhs[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.data[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..].iter().zip(&rhs[i + 1..]).map(|(a, b)| a * b).sum();
            rhs[i] = (rhs[i] - s) / row[i];
        }
    }
}

/// The eigenvalue on the Perron branch: the one whose eigenvector continues
/// the constant function. Found by inverse iteration from the constant vector
/// with the constant vector's Rayleigh quotient as shift.
///
/// Trigonometric collocation has spurious high-frequency eigenvalues that can
/// exceed the Perron root for strongly contracting generators, so plain power
/// iteration is not used here.
pub fn perron_eigenvalue(matrix: &DenseMatrix, tol: f64) -> Result<PowerResult, SpectralError> {
    let n = matrix.n;
    let mut v = vec![1.0; n];
    let mut av = vec![0.0; n];
    let norm = |x: &[f64]| x.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let rayleigh = |v: &[f64], av: &[f64]| {
        v.iter().zip(av).map(|(a, b)| a * b).sum::<f64>() / v.iter().map(|x| x * x).sum::<f64>()
    };
    let residual_of = |v: &[f64], av: &[f64], lambda: f64| {
        v.iter()
            .zip(av)
            .fold(0.0f64, |m, (x, y)| m.max((y - lambda * x).abs()))
            / norm(v)
    };
    matrix.matvec_into(&v, &mut av);
    let mut lambda = rayleigh(&v, &av);
    let mut residual = residual_of(&v, &av, lambda);
    if residual <= tol * lambda.abs().max(1.0) {
        return Ok(PowerResult {
            lambda,
            residual,
            iterations: 1,
            vector: v,
        });
    }
    let mut shift = lambda;
    let lu = loop {
        let mut shifted = matrix.data.clone();
        for i in 0..n {
            shifted[i * n + i] -= shift;
        }
        match Lu::factor(shifted, n) {
            Some(lu) => break lu,
            None => shift += 1e-12 * shift.abs().max(1.0),
        }
    };
    for it in 2..=500 {
        lu.solve(&mut v);
        let scale = norm(&v);
        let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign / scale);
        matrix.matvec_into(&v, &mut av);
        lambda = rayleigh(&v, &av);
        residual = residual_of(&v, &av, lambda);
        if residual <= tol * lambda.abs().max(1.0) {
            return Ok(PowerResult {
                lambda,
                residual,
                iterations: it,
                vector: v,
            });
        }
    }
    Err(SpectralError::NoConvergence {
        lambda,
        residual,
        iterations: 500,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureSample {
    pub t: f64,
    pub lambda: f64,
    pub m: usize,
    pub residual: f64,
}

impl PressureSample {
    /// `Λ(t) = log λ(t)`.
    pub fn pressure(&self) -> f64 {
        self.lambda.ln()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PressureCurve {
    pub samples: Vec<PressureSample>,
}

impl PressureCurve {
    pub fn lookup(&self, t: f64, m: usize) -> Option<&PressureSample> {
        self.samples
            .iter()
            .find(|s| s.m == m && (s.t - t).abs() <= 1e-15 * t.abs().max(1.0))
    }

    /// CSV with header `t,lambda,M,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,lambda,M,residual\n");
        for s in &self.samples {
            out.push_str(&format!("{:e},{:.17e},{},{:e}\n", s.t, s.lambda, s.m, s.residual));
        }
        out
    }
}

/// `λ(t)` for each requested `t`.
pub fn pressure_curve(
    gens: &GeneratorSet,
    ts: &[f64],
    grid: &OperatorGrid,
) -> Result<PressureCurve, SpectralError> {
    let samples = ts
        .iter()
        .map(|&t| {
            let mat = build_operator_matrix(gens, t, grid)?;
            let r = perron_eigenvalue(&mat, POWER_TOLERANCE)?;
            Ok(PressureSample {
                t,
                lambda: r.lambda,
                m: grid.size(),
                residual: r.residual,
            })
        })
        .collect::<Result<Vec<_>, SpectralError>>()?;
    Ok(PressureCurve { samples })
}

/// The four offsets needed by [`drift_from_pressure`].
pub fn derivative_stencil(h: f64) -> [f64; 4] {
    [-2.0 * h, -h, h, 2.0 * h]
}

/// `ℓ = -Λ'(0)` by a Richardson-extrapolated central difference. The
/// `stderr` field holds `|plain - extrapolated|` as a rough error proxy.
pub fn drift_from_pressure(curve: &PressureCurve) -> Result<DriftEstimate, SpectralError> {
    // smallest positive t whose full stencil is present at a common M
    let mut candidates: Vec<&PressureSample> = curve.samples.iter().filter(|s| s.t > 0.0).collect();
    candidates.sort_by(|a, b| a.t.total_cmp(&b.t));
    for s in candidates {
        let (h, m) = (s.t, s.m);
        if h > 1e-2 {
            continue;
        }
        let get = |t: f64| curve.lookup(t, m).map(|x| x.pressure());
        if let (Some(p1), Some(m1), Some(p2), Some(m2)) = (get(h), get(-h), get(2.0 * h), get(-2.0 * h)) {
            let central = (p1 - m1) / (2.0 * h);
            let wide = (p2 - m2) / (4.0 * h);
            let extrapolated = (4.0 * central - wide) / 3.0;
            return Ok(DriftEstimate {
                mean: -extrapolated,
                stderr: (central - extrapolated).abs(),
                n: m,
                trials: 1,
                method: DriftMethod::Spectral,
            });
        }
    }
    let h = curve
        .samples
        .iter()
        .filter(|s| s.t > 0.0)
        .map(|s| s.t)
        .fold(f64::INFINITY, f64::min);
    Err(SpectralError::MissingSample(if h.is_finite() { -h } else { 0.0 }))
}

/// Convenience: evaluate the stencil at `h` on `grid` and differentiate.
pub fn spectral_drift(
    gens: &GeneratorSet,
    grid: &OperatorGrid,
    h: f64,
) -> Result<(DriftEstimate, PressureCurve), SpectralError> {
    let stencil = derivative_stencil(h);
    let ts = [stencil[0], stencil[1], 0.0, stencil[2], stencil[3]];
    let curve = pressure_curve(gens, &ts, grid)?;
    Ok((drift_from_pressure(&curve)?, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{preset, Generator};

    fn rotation_set() -> GeneratorSet {
        GeneratorSet::new(
            vec![Generator {
                label: "r".into(),
                map: Isometry::rotation(0.3),
                is_involution: false,
            }],
            vec![],
        )
    }

    #[test]
    fn grid_validation() {
        assert!(OperatorGrid::new(32).is_err());
        assert!(OperatorGrid::new(100).is_err());
        assert!(OperatorGrid::new(64).is_ok());
    }

    #[test]
    fn interpolation_is_exact_for_band_limited_functions() {
        let grid = OperatorGrid::new(64).unwrap();
        let f = |x: f64| 1.0 + (3.0 * x).cos() - 0.5 * (17.0 * x).sin() + 0.25 * (31.0 * x).cos();
        for x in [0.1, 1.234, 3.0, 6.2] {
            let mut row = vec![0.0; 64];
            add_interpolation_weights(&grid, x, 1.0, &mut row);
            let approx: f64 = row.iter().enumerate().map(|(j, w)| w * f(grid.node(j))).sum();
            assert!((approx - f(x)).abs() < 1e-12, "{approx} vs {}", f(x));
        }
    }

    #[test]
    fn rows_are_stochastic_at_zero() {
        let grid = OperatorGrid::new(128).unwrap();
        for id in ["triangle:4,4,4", "bolza"] {
            let gens = preset(id).unwrap().gens;
            let mat = build_operator_matrix(&gens, 0.0, &grid).unwrap();
            for s in mat.row_sums() {
                assert!((s - 1.0).abs() < 1e-13, "{id}: row sum {s}");
            }
        }
    }

    #[test]
    fn power_iteration_examples() {
        let r = spectral_radius(&DenseMatrix::identity(5)).unwrap();
        assert_eq!((r.lambda, r.residual), (1.0, 0.0));
        let d = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]);
        assert!((spectral_radius(&d).unwrap().lambda - 2.0).abs() < 1e-12);
    }

    #[test]
    fn perron_branch_differs_from_dominant_mode() {
        let a = DenseMatrix::from_rows(&[vec![1.25, -0.25], vec![-0.2, 1.25]]);
        let disc = 0.05f64.sqrt();
        let p = perron_eigenvalue(&a, 1e-13).unwrap();
        assert!((p.lambda - (1.25 - disc)).abs() < 1e-12, "{}", p.lambda);
        let r = spectral_radius(&a).unwrap();
        assert!((r.lambda - (1.25 + disc)).abs() < 1e-10, "{}", r.lambda);
    }

    #[test]
    fn rotation_operator_has_unit_radius() {
        let grid = OperatorGrid::new(64).unwrap();
        for t in [-0.5, 0.0, 0.7] {
            let mat = build_operator_matrix(&rotation_set(), t, &grid).unwrap();
            let r = spectral_radius(&mat).unwrap();
            assert!((r.lambda - 1.0).abs() < 1e-12);
        }
        let (est, _) = spectral_drift(&rotation_set(), &grid, 1e-3).unwrap();
        assert!(est.mean.abs() < 1e-9);
    }

    #[test]
    fn missing_stencil_is_reported() {
        let curve = PressureCurve {
            samples: vec![PressureSample {
                t: 1e-3,
                lambda: 1.0,
                m: 64,
                residual: 0.0,
            }],
        };
        assert!(matches!(
            drift_from_pressure(&curve),
            Err(SpectralError::MissingSample(_))
        ));
    }
}
