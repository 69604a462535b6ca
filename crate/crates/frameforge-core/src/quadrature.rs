//! Tensor-product quadrature grids on centered boxes `[-R, R]^d`.
//!
//! Two rules are supported: midpoint (robust for kinked integrands) and
//! Gauss–Legendre (spectrally accurate for smooth ones). All reductions
//! run in a fixed order — per-element products accumulated in contiguous
//! 1024-element chunks, then a pairwise tree over the chunk sums — so an
//! integral is a pure function of the grid and the samples, independent of
//! threading or platform.

use alloc::vec;
use alloc::vec::Vec;

use crate::activations::ActivationSpec;
use crate::error::{Error, Result};
use crate::math;

const PI: f64 = core::f64::consts::PI;

/// Hard cap on tensor-grid size; keeps accidental `n^d` blowups from
/// exhausting memory before config validation can catch them.
const MAX_GRID_NODES: usize = 1 << 24;

/// Chunk length for the fixed-order reduction.
const SUM_CHUNK: usize = 1024;

/// Quadrature rule for each axis of the tensor grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum QuadRule {
    Midpoint,
    GaussLegendre,
}

/// A tensor-product quadrature grid on `[-half_width, half_width]^dim`.
///
/// Nodes are stored flat (`node_count × dim`, row-major) in lexicographic
/// order with axis 0 most significant; `weights[i]` is the product of the
/// per-axis weights for node `i`.
#[derive(Debug, Clone)]
pub struct Grid {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub rule: QuadRule,
    /// Per-axis 1-d nodes (length `points_per_axis`), ascending.
    pub axis_nodes: Vec<f64>,
    /// Per-axis 1-d weights matching `axis_nodes`.
    pub axis_weights: Vec<f64>,
    /// Flat tensor nodes, `node_count * dim` values.
    pub nodes: Vec<f64>,
    /// Tensor weights, one per node.
    pub weights: Vec<f64>,
}

impl Grid {
    /// Build a grid. `dim` must be 1, 2, or 3; `points_per_axis ≥ 2`;
    /// `half_width > 0`. Accuracy-oriented callers should use at least 8
    /// points per axis (the CLI enforces that for configs); smaller grids
    /// are allowed here so degenerate cases stay testable.
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize, rule: QuadRule) -> Result<Grid> {
        if !(1..=3).contains(&dim) {
            return Err(Error::DimTooLarge { dim });
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(alloc::format!(
                "half_width must be positive and finite, got {half_width}"
            )));
        }
        if points_per_axis < 2 {
            return Err(Error::InvalidGrid(alloc::format!(
                "points_per_axis must be at least 2, got {points_per_axis}"
            )));
        }
        let count = points_per_axis
            .checked_pow(dim as u32)
            .filter(|&c| c <= MAX_GRID_NODES)
            .ok_or_else(|| {
                Error::InvalidGrid(alloc::format!(
                    "{points_per_axis}^{dim} nodes exceeds the {MAX_GRID_NODES} cap"
                ))
            })?;

        let (mut axis_nodes, mut axis_weights) = match rule {
            QuadRule::Midpoint => midpoint_rule(points_per_axis),
            QuadRule::GaussLegendre => gauss_legendre_rule(points_per_axis),
        };
        for x in axis_nodes.iter_mut() {
            *x *= half_width;
        }
        for w in axis_weights.iter_mut() {
            *w *= half_width;
        }

        let n = points_per_axis;
        let mut nodes = Vec::with_capacity(count * dim);
        let mut weights = Vec::with_capacity(count);
        for flat in 0..count {
            let mut rem = flat;
            let mut w = 1.0;
            // Axis 0 most significant: decode from the top.
            let mut idx = [0usize; 3];
            for ax in (0..dim).rev() {
                idx[ax] = rem % n;
                rem /= n;
            }
            for ax in 0..dim {
                nodes.push(axis_nodes[idx[ax]]);
                w *= axis_weights[idx[ax]];
            }
            weights.push(w);
        }

        Ok(Grid {
            dim,
            half_width,
            points_per_axis,
            rule,
            axis_nodes,
            axis_weights,
            nodes,
            weights,
        })
    }

    /// Number of tensor nodes.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// The `i`-th node as a coordinate slice of length `dim`.
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    /// Evaluate `f` at every node, in node order.
    pub fn sample(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            out.push(f(self.node(i)));
        }
        out
    }

    /// `∫ f ≈ Σ w_i f(x_i)` over precomputed samples.
    /// Fails with `NaNEncountered` if any sample is non-finite.
    pub fn integrate_samples(&self, samples: &[f64]) -> Result<f64> {
        self.check_len(samples)?;
        sum_checked(self.len(), |i| self.weights[i] * samples[i], samples)
    }

    /// Integrate a function directly (sampling included).
    pub fn integrate(&self, f: impl FnMut(&[f64]) -> f64) -> Result<f64> {
        let samples = self.sample(f);
        self.integrate_samples(&samples)
    }

    /// Grid inner product `Σ w_i a_i b_i`.
    pub fn inner_samples(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_len(a)?;
        self.check_len(b)?;
        let ok = a.iter().chain(b.iter()).all(|v| v.is_finite());
        if !ok {
            return Err(Error::NaNEncountered);
        }
        Ok(sum_fixed_order(self.len(), |i| self.weights[i] * a[i] * b[i]))
    }

    /// Grid L² norm `sqrt(Σ w_i a_i²)`.
    pub fn norm_samples(&self, a: &[f64]) -> Result<f64> {
        let q = self.inner_samples(a, a)?;
        // Negative round-off from a zero vector clamps to zero.
        Ok(math::sqrt(if q > 0.0 { q } else { 0.0 }))
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::DimMismatch {
                expected: self.len(),
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// L² distance between two activations scaled by the frame-transfer factor
/// `1 + 2^{-1/2}`: the amount by which replacing one activation with the
/// other can move any single wavelet atom.
pub fn activation_distance(a: &ActivationSpec, b: &ActivationSpec, grid: &Grid) -> Result<f64> {
    if a.dim != grid.dim {
        return Err(Error::DimMismatch {
            expected: grid.dim,
            got: a.dim,
        });
    }
    if b.dim != grid.dim {
        return Err(Error::DimMismatch {
            expected: grid.dim,
            got: b.dim,
        });
    }
    let sa = grid.sample(|x| a.eval(x));
    let sb = grid.sample(|x| b.eval(x));
    let diff: Vec<f64> = sa.iter().zip(&sb).map(|(u, v)| u - v).collect();
    let norm = grid.norm_samples(&diff)?;
    Ok((1.0 + math::sqrt(0.5)) * norm)
}

/// Fixed-order reduction: accumulate contiguous 1024-term chunks, then
/// fold the chunk sums pairwise. The order is a function of `n` alone.
pub fn sum_fixed_order(n: usize, mut term: impl FnMut(usize) -> f64) -> f64 {
    let mut partials: Vec<f64> = Vec::with_capacity(n / SUM_CHUNK + 1);
    let mut acc = 0.0;
    for i in 0..n {
        acc += term(i);
        if (i + 1) % SUM_CHUNK == 0 {
            partials.push(acc);
            acc = 0.0;
        }
    }
    if n % SUM_CHUNK != 0 || partials.is_empty() {
        partials.push(acc);
    }
    while partials.len() > 1 {
        let mut next = Vec::with_capacity(partials.len().div_ceil(2));
        for pair in partials.chunks(2) {
            next.push(if pair.len() == 2 { pair[0] + pair[1] } else { pair[0] });
        }
        partials = next;
    }
    partials[0]
}

fn sum_checked(n: usize, term: impl FnMut(usize) -> f64, samples: &[f64]) -> Result<f64> {
    if !samples.iter().all(|v| v.is_finite()) {
        return Err(Error::NaNEncountered);
    }
    Ok(sum_fixed_order(n, term))
}

/// Midpoint rule on [-1, 1]: n equal cells, node at each center.
fn midpoint_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let step = 2.0 / n as f64;
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        nodes.push(-1.0 + (i as f64 + 0.5) * step);
    }
    (nodes, vec![step; n])
}

/// Gauss–Legendre rule on [-1, 1] by Newton iteration on the Legendre
/// polynomial, cosine initial guesses, symmetric fill-in.
fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 1..=half {
        let odd_middle = n % 2 == 1 && i == half;
        let mut z = if odd_middle {
            0.0
        } else {
            math::cos(PI * (i as f64 - 0.25) / (n as f64 + 0.5))
        };
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if math::abs(dz) < 1e-15 {
                let (_, d2) = legendre_with_derivative(n, z);
                dp = d2;
                break;
            }
        }
        if odd_middle {
            z = 0.0;
            let (_, d) = legendre_with_derivative(n, z);
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // i = 1 is the largest root; mirror into both halves so the rule
        // is exactly symmetric.
        nodes[n - i] = z;
        nodes[i - 1] = -z;
        weights[n - i] = w;
        weights[i - 1] = w;
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n` and derivative at `z` by the three-term
/// recurrence.
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}
