//! Conversion of wavelet expansions into shallow neural networks, and the
//! activation-substitution machinery that swaps a smooth activation for an
//! imperfect or non-smooth stand-in with an explicit error budget.
//!
//! A wavelet term `c·ψ_{k,b}` is the difference of two dilated copies of
//! the activation, so it maps onto exactly two hidden nodes of the form
//! `α·σ(γ·x + θ)` with scalar input weight `γ`:
//!
//! ```text
//! (γ, α, θ)   = (2^{k/d},      c·2^{k/2},    -γ·b)
//! (γ', α', θ') = (2^{(k-1)/d}, -c·2^{k/2-1}, -γ'·b)
//! ```
//!
//! Because each node is an L²-normalized dilation, replacing `σ` by any
//! `σ†` perturbs the realized function by at most
//! `dist(σ, σ†)·Σ|c|` in L², where
//! `dist(σ, σ†) = (1 + 2^{-1/2})·‖σ - σ†‖_{L²}` — the coarse half-scale
//! copy contributes the extra `2^{-1/2}`. Fitting `σ†` as a combination
//! of shifted copies of a simple base `σ₀` then expands every node into
//! one node per shift, producing a genuine `σ₀`-network with a certified
//! bound.

use alloc::vec::Vec;

use crate::activations::ActivationSpec;
use crate::error::{Error, Result};
use crate::frame::{inverse_spacing, WaveletExpansion};
use crate::linalg::solve_spd_ridged;
use crate::math;
use crate::quadrature::{activation_distance, sum_fixed_order, Grid};

/// Relative ridge for the shift-fit normal equations retry.
const FIT_RIDGE: f64 = 1e-12;

/// Shallow network whose hidden nodes share one activation and use scalar
/// input weights: `x ↦ Σ_j α_j·σ(γ_j·x + θ_j)` with `θ_j ∈ ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalarWeightNet {
    pub dim: usize,
    pub activation: ActivationSpec,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
}

impl ScalarWeightNet {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Evaluate the network. Node contributions are accumulated in the
    /// fixed-order pairwise scheme, so the result is reproducible for any
    /// node count.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut arg = [0.0f64; 3];
        let d = self.dim;
        sum_fixed_order(self.len(), |j| {
            let g = self.gamma[j];
            let th = &self.theta[j];
            for i in 0..d {
                arg[i] = g * x[i] + th[i];
            }
            self.alpha[j] * self.activation.eval(&arg[..d])
        })
    }

    /// Total output coefficient mass `Σ|α_j|`.
    pub fn alpha_l1(&self) -> f64 {
        let mut s = 0.0;
        for a in &self.alpha {
            s += math::abs(*a);
        }
        s
    }
}

/// Realize a wavelet expansion as a scalar-weight network with exactly two
/// nodes per term, in term order (fine-scale node first).
///
/// The activation must be the one the expansion's atoms were built from.
pub fn expansion_to_net(
    expansion: &WaveletExpansion,
    spec: &ActivationSpec,
) -> Result<ScalarWeightNet> {
    if expansion.terms.is_empty() {
        return Err(Error::EmptyExpansion);
    }
    let d = spec.dim;
    let n = expansion.terms.len();
    let mut net = ScalarWeightNet {
        dim: d,
        activation: spec.clone(),
        gamma: Vec::with_capacity(2 * n),
        alpha: Vec::with_capacity(2 * n),
        theta: Vec::with_capacity(2 * n),
    };
    for (atom, c) in &expansion.terms {
        if atom.m.len() != d {
            return Err(Error::DimMismatch {
                expected: d,
                got: atom.m.len(),
            });
        }
        let b = atom.center();
        let half_pow = math::exp2(0.5 * atom.k as f64);
        let g_fine = inverse_spacing(atom.k, d);
        net.gamma.push(g_fine);
        net.alpha.push(c * half_pow);
        net.theta.push(b.iter().map(|&bi| -g_fine * bi).collect());
        let g_coarse = inverse_spacing(atom.k - 1, d);
        net.gamma.push(g_coarse);
        net.alpha.push(-0.5 * c * half_pow);
        net.theta.push(b.iter().map(|&bi| -g_coarse * bi).collect());
    }
    Ok(net)
}

/// Swap the activation of a network for `σ†`, returning the new network
/// and the activation distance `(1 + 2^{-1/2})·‖σ - σ†‖_{L²(grid)}`.
///
/// The L² error of the swap is at most that distance times the coefficient
/// mass of the expansion the network came from; combine with the greedy
/// residual via [`substitution_bound`].
pub fn substitute_activation(
    net: &ScalarWeightNet,
    dagger: &ActivationSpec,
    grid: &Grid,
) -> Result<(ScalarWeightNet, f64)> {
    let dist = activation_distance(&net.activation, dagger, grid)?;
    let mut swapped = net.clone();
    swapped.activation = dagger.clone();
    Ok((swapped, dist))
}

/// Total L² error budget after a substitution: greedy residual plus
/// activation distance times the expansion's coefficient mass.
pub fn substitution_bound(residual_norm: f64, dist: f64, coeff_l1: f64) -> f64 {
    residual_norm + dist * coeff_l1
}

/// Least-squares fit of an activation by shifted copies of a base:
/// `σ†(x) = Σ_m c_m·σ₀(x - b_m)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShiftFit {
    pub base: ActivationSpec,
    pub shifts: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    /// `(1 + 2^{-1/2})·‖σ - σ†‖_{L²}` for the fitted `σ†`.
    pub achieved_dist: f64,
}

impl ShiftFit {
    /// The fitted combination as a standalone activation.
    pub fn to_activation(&self) -> Result<ActivationSpec> {
        ActivationSpec::step_combo(self.coeffs.clone(), self.shifts.clone(), self.base.clone())
    }
}

fn shift_grid(dim: usize, m: usize, lo: f64, hi: f64) -> Result<Vec<Vec<f64>>> {
    if m == 0 || !(hi > lo) {
        return Err(Error::InvalidSpec(
            "shift fitting needs at least one shift and a nonempty box".into(),
        ));
    }
    if m == 1 {
        // A single shift sits at the box center; with base == target this
        // recovers the identity fit c₁ = 1.
        return Ok(alloc::vec![alloc::vec![0.5 * (lo + hi); dim]]);
    }
    if dim == 1 {
        let step = (hi - lo) / (m - 1) as f64;
        return Ok((0..m).map(|i| alloc::vec![lo + step * i as f64]).collect());
    }
    // Higher dimensions take a tensor grid, so the count must be a d-th
    // power of a per-axis count.
    let mut q = 1usize;
    while (q + 1).pow(dim as u32) <= m {
        q += 1;
    }
    if q.pow(dim as u32) != m || q < 2 {
        return Err(Error::InvalidSpec(alloc::format!(
            "shift count {m} is not a per-axis power for dimension {dim}"
        )));
    }
    let step = (hi - lo) / (q - 1) as f64;
    let mut shifts = Vec::with_capacity(m);
    let mut idx = alloc::vec![0usize; dim];
    loop {
        shifts.push(idx.iter().map(|&i| lo + step * i as f64).collect());
        let mut ax = dim;
        loop {
            if ax == 0 {
                return Ok(shifts);
            }
            ax -= 1;
            idx[ax] += 1;
            if idx[ax] < q {
                break;
            }
            idx[ax] = 0;
        }
    }
}

/// Fit `target` in L²(grid) by `m` shifted copies of `base` with shifts on
/// a uniform grid over `[lo, hi]` per axis.
///
/// A Gram factorization that stays singular after one ridged retry is
/// `FitSingular` — in practice that means the shifted copies overlap so
/// little (or so completely) that the fit is meaningless.
pub fn fit_shift_combo(
    target: &ActivationSpec,
    base: &ActivationSpec,
    m: usize,
    lo: f64,
    hi: f64,
    grid: &Grid,
) -> Result<ShiftFit> {
    if target.dim != base.dim {
        return Err(Error::DimMismatch {
            expected: target.dim,
            got: base.dim,
        });
    }
    if target.dim != grid.dim {
        return Err(Error::DimMismatch {
            expected: target.dim,
            got: grid.dim,
        });
    }
    let d = target.dim;
    let shifts = shift_grid(d, m, lo, hi)?;
    let mut arg = [0.0f64; 3];
    let mut copies: Vec<Vec<f64>> = Vec::with_capacity(m);
    for b in &shifts {
        let mut s = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let x = grid.node(i);
            for ax in 0..d {
                arg[ax] = x[ax] - b[ax];
            }
            s.push(base.eval(&arg[..d]));
        }
        copies.push(s);
    }
    let target_samples = grid.sample(|x| target.eval(x));
    let mut gram = alloc::vec![0.0f64; m * m];
    let mut rhs = alloc::vec![0.0f64; m];
    for a in 0..m {
        for b in a..m {
            let v = grid.inner_samples(&copies[a], &copies[b])?;
            gram[a * m + b] = v;
            gram[b * m + a] = v;
        }
        rhs[a] = grid.inner_samples(&copies[a], &target_samples)?;
    }
    let coeffs = solve_spd_ridged(&gram, &rhs, m, FIT_RIDGE).ok_or(Error::FitSingular)?;
    let mut residual = target_samples;
    for (c, copy) in coeffs.iter().zip(copies.iter()) {
        for (r, &v) in residual.iter_mut().zip(copy.iter()) {
            *r -= c * v;
        }
    }
    let l2 = grid.norm_samples(&residual)?;
    Ok(ShiftFit {
        base: base.clone(),
        shifts,
        coeffs,
        achieved_dist: (1.0 + math::sqrt(0.5)) * l2,
    })
}

/// Expand every node of a fitted-activation network into one node per
/// shift of the fit: `(γ, α, θ) ↦ (γ, α·c_m, θ - b_m)`.
///
/// The result is a genuine `σ₀`-network with `M` times the nodes that
/// realizes exactly the same function as the substituted network.
pub fn expand_base_net(net: &ScalarWeightNet, fit: &ShiftFit) -> Result<ScalarWeightNet> {
    if fit.base.dim != net.dim {
        return Err(Error::DimMismatch {
            expected: net.dim,
            got: fit.base.dim,
        });
    }
    let m = fit.coeffs.len();
    let mut out = ScalarWeightNet {
        dim: net.dim,
        activation: fit.base.clone(),
        gamma: Vec::with_capacity(net.len() * m),
        alpha: Vec::with_capacity(net.len() * m),
        theta: Vec::with_capacity(net.len() * m),
    };
    for j in 0..net.len() {
        for (c, b) in fit.coeffs.iter().zip(fit.shifts.iter()) {
            out.gamma.push(net.gamma[j]);
            out.alpha.push(net.alpha[j] * c);
            out.theta
                .push(net.theta[j].iter().zip(b.iter()).map(|(t, s)| t - s).collect());
        }
    }
    Ok(out)
}

/// Shallow network with full vector input weights:
/// `x ↦ Σ_j α_j·σ₁(⟨w_j, x⟩ + β_j)` with a one-dimensional `σ₁`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VectorWeightNet {
    pub dim: usize,
    pub activation: ActivationSpec,
    pub weights: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl VectorWeightNet {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        sum_fixed_order(self.len(), |j| {
            let mut s = self.beta[j];
            for (w, &xi) in self.weights[j].iter().zip(x.iter()) {
                s += w * xi;
            }
            self.alpha[j] * self.activation.eval(&[s])
        })
    }
}

/// Rewrite a scalar-weight network in the conventional vector-weight form.
///
/// This is exact in two cases: dimension one (the scalar weight *is* the
/// vector weight), and activations that are a one-dimensional profile of
/// the coordinate sum, where `σ(γx + θ) = s(⟨γ·𝟙, x⟩ + Σθ_i)`. Anything
/// else has no equivalent vector-weight node and is `NotSeparable`.
pub fn to_vector_weight(net: &ScalarWeightNet) -> Result<VectorWeightNet> {
    let (inner, sum_form): (ActivationSpec, bool) = if net.dim == 1 {
        (net.activation.clone(), false)
    } else if let Some(inner) = net.activation.sum_profile() {
        (inner, true)
    } else {
        return Err(Error::NotSeparable);
    };
    let mut out = VectorWeightNet {
        dim: net.dim,
        activation: inner,
        weights: Vec::with_capacity(net.len()),
        alpha: net.alpha.clone(),
        beta: Vec::with_capacity(net.len()),
    };
    for j in 0..net.len() {
        if sum_form {
            out.weights.push(alloc::vec![net.gamma[j]; net.dim]);
            let mut b = 0.0;
            for t in &net.theta[j] {
                b += *t;
            }
            out.beta.push(b);
        } else {
            out.weights.push(alloc::vec![net.gamma[j]]);
            out.beta.push(net.theta[j][0]);
        }
    }
    Ok(out)
}
