//! The activation catalog.
//!
//! Every construction in this crate starts from a single activation
//! `σ: ℝ^d → ℝ` described by an [`ActivationSpec`]: a family tag with its
//! parameters, the ambient dimension, a scalar prefactor, and a smoothness
//! flag. Smooth families carry analytic gradients (and exact second
//! derivatives in one dimension); non-smooth families fall back to central
//! finite differences away from their kinks.
//!
//! Family overview:
//!
//! - `Gaussian`: `exp(-|x|²)`, any dimension; the workhorse smooth example.
//! - `OscSinc`: one-dimensional `σ̃(x)·sin(freq·x)` where `σ̃` equals
//!   `sign(x)/|x|^alpha` outside `[-1, 1]` and a matched odd quintic inside,
//!   so the product is even and twice continuously differentiable.
//! - `RadialCos` / `RadialSinc`: a compactly supported radial bump times an
//!   even oscillating factor (`cos(tau·x)` or `sin(freq·|x|²)/|x|²`).
//! - `Rqnn`: the plain radial bump `inner(r² - |x|²)` with a configurable
//!   one-dimensional profile (default `exp(-1/t)` for `t > 0`).
//! - `ShahamRelu`: the classic piecewise-linear pyramid built from a
//!   trapezoid per axis; non-smooth, used to exercise the substitution path.
//! - `Relu`, `UnitStep`, `Bump`: one-dimensional building blocks for
//!   shifted-combination fits.
//! - `StepCombo`: an explicit linear combination of shifted copies of a base
//!   activation — the representable form of fitted substitutes.
//! - `SumCompose`: `inner(Σ_j x_j)`, the separable form that admits an exact
//!   vector-weight network rewrite.
//! - `Sampled`: a tabulated one-dimensional activation, linearly
//!   interpolated, zero outside its table.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::quadrature::Grid;

/// Step size factor for finite-difference gradients.
const FD_GRAD_H: f64 = 1e-5;
/// Step size factor for finite-difference Hessians.
const FD_HESS_H: f64 = 1e-4;
/// Proximity at which a point counts as sitting on a kink.
const KINK_EPS: f64 = 1e-12;
/// Grid integrals smaller than this cannot be normalized away.
const MIN_NORMALIZABLE_INTEGRAL: f64 = 1e-8;

/// Activation family and its parameters. See the module docs for the
/// catalog; all families evaluate to finite values for finite input.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    Gaussian,
    OscSinc { alpha: f64, freq: f64 },
    RadialCos { radius: f64, tau: Vec<f64> },
    RadialSinc { radius: f64, freq: f64 },
    Rqnn { radius: f64, inner: Box<ActivationSpec> },
    ShahamRelu,
    Relu,
    UnitStep,
    Bump,
    StepCombo {
        coeffs: Vec<f64>,
        shifts: Vec<Vec<f64>>,
        base: Box<ActivationSpec>,
    },
    SumCompose { inner: Box<ActivationSpec> },
    Sampled { xs: Vec<f64>, values: Vec<f64> },
}

/// A concrete activation: family, dimension, scalar prefactor, smoothness.
///
/// `smooth` is derived from the family at construction time and means
/// "twice continuously differentiable everywhere".
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActivationSpec {
    pub family: Family,
    pub dim: usize,
    pub scale: f64,
    pub smooth: bool,
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::DimTooLarge { dim })
    }
}

impl ActivationSpec {
    fn assemble(family: Family, dim: usize) -> ActivationSpec {
        let smooth = family_is_smooth(&family);
        ActivationSpec {
            family,
            dim,
            scale: 1.0,
            smooth,
        }
    }

    /// `exp(-|x|²)` in `dim` dimensions.
    pub fn gaussian(dim: usize) -> Result<ActivationSpec> {
        check_dim(dim)?;
        Ok(Self::assemble(Family::Gaussian, dim))
    }

    /// One-dimensional `σ̃(x)·sin(freq·x)` with power-law tails `|x|^-alpha`.
    /// Needs `alpha > 1` for integrability.
    pub fn osc_sinc(alpha: f64, freq: f64) -> Result<ActivationSpec> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "osc_sinc needs alpha > 1, got {alpha}"
            )));
        }
        if !freq.is_finite() {
            return Err(Error::InvalidSpec("osc_sinc freq must be finite".into()));
        }
        Ok(Self::assemble(Family::OscSinc { alpha, freq }, 1))
    }

    /// Radial bump of support radius `radius` times `cos(tau·x)`.
    pub fn radial_cos(dim: usize, radius: f64, tau: Vec<f64>) -> Result<ActivationSpec> {
        check_dim(dim)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidSpec("radial_cos needs radius > 0".into()));
        }
        if tau.len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                got: tau.len(),
            });
        }
        Ok(Self::assemble(Family::RadialCos { radius, tau }, dim))
    }

    /// Radial bump times `sin(freq·|x|²)/|x|²`.
    pub fn radial_sinc(dim: usize, radius: f64, freq: f64) -> Result<ActivationSpec> {
        check_dim(dim)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidSpec("radial_sinc needs radius > 0".into()));
        }
        Ok(Self::assemble(Family::RadialSinc { radius, freq }, dim))
    }

    /// Radial bump `inner(radius² - |x|²)` with the default smooth profile
    /// `exp(-1/t)`.
    pub fn rqnn(dim: usize, radius: f64) -> Result<ActivationSpec> {
        Self::rqnn_with_inner(dim, radius, Self::bump())
    }

    /// Radial bump with a caller-provided one-dimensional profile.
    pub fn rqnn_with_inner(dim: usize, radius: f64, inner: ActivationSpec) -> Result<ActivationSpec> {
        check_dim(dim)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidSpec("rqnn needs radius > 0".into()));
        }
        if inner.dim != 1 {
            return Err(Error::DimMismatch {
                expected: 1,
                got: inner.dim,
            });
        }
        Ok(Self::assemble(
            Family::Rqnn {
                radius,
                inner: Box::new(inner),
            },
            dim,
        ))
    }

    /// Piecewise-linear pyramid: `relu(Σ_j L(x_j) - 2(d-1))` where `L` is a
    /// trapezoid of height 2 on `[-1, 1]` supported on `[-3, 3]`.
    pub fn shaham_relu(dim: usize) -> Result<ActivationSpec> {
        check_dim(dim)?;
        Ok(Self::assemble(Family::ShahamRelu, dim))
    }

    /// One-dimensional `max(x, 0)`.
    pub fn relu() -> ActivationSpec {
        Self::assemble(Family::Relu, 1)
    }

    /// One-dimensional Heaviside step (1 for `x ≥ 0`).
    pub fn unit_step() -> ActivationSpec {
        Self::assemble(Family::UnitStep, 1)
    }

    /// One-dimensional smooth bump profile `exp(-1/t)` for `t > 0`, else 0.
    pub fn bump() -> ActivationSpec {
        Self::assemble(Family::Bump, 1)
    }

    /// Explicit combination `Σ_m coeffs[m] · base(x - shifts[m])`.
    pub fn step_combo(
        coeffs: Vec<f64>,
        shifts: Vec<Vec<f64>>,
        base: ActivationSpec,
    ) -> Result<ActivationSpec> {
        if coeffs.len() != shifts.len() {
            return Err(Error::InvalidSpec(format!(
                "step_combo needs one shift per coefficient ({} vs {})",
                coeffs.len(),
                shifts.len()
            )));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidSpec("step_combo needs at least one term".into()));
        }
        let dim = base.dim;
        for s in &shifts {
            if s.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
        }
        Ok(Self::assemble(
            Family::StepCombo {
                coeffs,
                shifts,
                base: Box::new(base),
            },
            dim,
        ))
    }

    /// `inner(x_1 + … + x_d)` — the separable form that rewrites exactly
    /// into a vector-weight network.
    pub fn sum_compose(dim: usize, inner: ActivationSpec) -> Result<ActivationSpec> {
        check_dim(dim)?;
        if inner.dim != 1 {
            return Err(Error::DimMismatch {
                expected: 1,
                got: inner.dim,
            });
        }
        Ok(Self::assemble(Family::SumCompose { inner: Box::new(inner) }, dim))
    }

    /// Tabulated one-dimensional activation; linear interpolation between
    /// strictly increasing sample abscissas, zero outside the table.
    pub fn sampled(xs: Vec<f64>, values: Vec<f64>) -> Result<ActivationSpec> {
        if xs.len() != values.len() {
            return Err(Error::InvalidSpec(format!(
                "sampled needs matching lengths ({} vs {})",
                xs.len(),
                values.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidSpec("sampled needs at least two knots".into()));
        }
        if !xs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidSpec(
                "sampled abscissas must be strictly increasing".into(),
            ));
        }
        if !xs.iter().chain(values.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidSpec("sampled table must be finite".into()));
        }
        Ok(Self::assemble(Family::Sampled { xs, values }, 1))
    }

    /// Same spec with a different scalar prefactor.
    pub fn with_scale(mut self, scale: f64) -> ActivationSpec {
        self.scale = scale;
        self
    }

    /// Evaluate `σ(x)`. Total for finite input; `x` must have length `dim`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.scale * raw_eval(&self.family, x)
    }

    /// Gradient of `σ` at `x`.
    ///
    /// Smooth families evaluate their analytic formula. Non-smooth families
    /// fall back to a central finite difference with step
    /// `1e-5·(1 + |x|)` — except exactly on a kink, where the request is
    /// refused with [`Error::NonSmoothAtPoint`].
    pub fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if let Some(mut g) = grad_analytic(&self.family, x) {
            for v in g.iter_mut() {
                *v *= self.scale;
            }
            return Ok(g);
        }
        let tol = KINK_EPS * (1.0 + math::norm2(x));
        if let Some(d) = kink_distance(&self.family, x) {
            if d <= tol {
                return Err(Error::NonSmoothAtPoint { coord: d });
            }
        }
        Ok(self.fd_grad(x))
    }

    fn fd_grad(&self, x: &[f64]) -> Vec<f64> {
        let h = FD_GRAD_H * (1.0 + math::norm2(x));
        let mut g = vec![0.0; self.dim];
        let mut p = x.to_vec();
        for i in 0..self.dim {
            p[i] = x[i] + h;
            let hi = self.eval(&p);
            p[i] = x[i] - h;
            let lo = self.eval(&p);
            p[i] = x[i];
            g[i] = (hi - lo) / (2.0 * h);
        }
        g
    }

    /// Spectral norm of the Hessian of `σ` at `x`.
    ///
    /// Exact in one dimension (analytic second derivative); for `d > 1` the
    /// Hessian is assembled by central finite differences with step
    /// `1e-4·(1 + |x|)` and the largest absolute eigenvalue is returned.
    /// Refused for non-smooth families.
    pub fn eval_hessian_norm(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !self.smooth {
            return Err(Error::NonSmoothFamily);
        }
        if self.dim == 1 {
            let d2 = second_derivative_1d(&self.family, x[0])
                .expect("smooth 1-d families have analytic second derivatives");
            return Ok(math::abs(self.scale * d2));
        }
        let d = self.dim;
        let h = FD_HESS_H * (1.0 + math::norm2(x));
        let mut hess = vec![0.0; d * d];
        let f0 = self.eval(x);
        let mut p = x.to_vec();
        for i in 0..d {
            p[i] = x[i] + h;
            let fp = self.eval(&p);
            p[i] = x[i] - h;
            let fm = self.eval(&p);
            p[i] = x[i];
            hess[i * d + i] = (fp - 2.0 * f0 + fm) / (h * h);
        }
        for i in 0..d {
            for j in (i + 1)..d {
                p[i] = x[i] + h;
                p[j] = x[j] + h;
                let fpp = self.eval(&p);
                p[j] = x[j] - h;
                let fpm = self.eval(&p);
                p[i] = x[i] - h;
                let fmm = self.eval(&p);
                p[j] = x[j] + h;
                let fmp = self.eval(&p);
                p[i] = x[i];
                p[j] = x[j];
                let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
                hess[i * d + j] = v;
                hess[j * d + i] = v;
            }
        }
        Ok(linalg::sym_eig_max_abs(&hess, d))
    }

    /// Rescale so the grid estimate of `∫σ` equals 1.
    ///
    /// Idempotent up to grid arithmetic; fails with `NotNormalizable` when
    /// the grid integral is below `1e-8` in magnitude.
    pub fn normalized(&self, grid: &Grid) -> Result<ActivationSpec> {
        if grid.dim != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: grid.dim,
            });
        }
        let integral = grid.integrate(|x| self.eval(x))?;
        if math::abs(integral) <= MIN_NORMALIZABLE_INTEGRAL {
            return Err(Error::NotNormalizable { integral });
        }
        let mut out = self.clone();
        out.scale = self.scale / integral;
        Ok(out)
    }

    /// Whether the family is even under `x ↦ -x` by construction.
    pub fn is_even(&self) -> bool {
        family_is_even(&self.family)
    }

    /// For the coordinate-sum form `σ(x) = s(x_1 + … + x_d)`, the
    /// one-dimensional profile `s` with this spec's scale folded in.
    /// `None` for every other family.
    pub fn sum_profile(&self) -> Option<ActivationSpec> {
        if let Family::SumCompose { inner } = &self.family {
            let folded = inner.scale * self.scale;
            Some(inner.as_ref().clone().with_scale(folded))
        } else {
            None
        }
    }

    /// Radius of an exactly compact support, when the family has one.
    pub fn support_radius(&self) -> Option<f64> {
        support_radius(&self.family, self.dim)
    }
}

fn family_is_smooth(family: &Family) -> bool {
    match family {
        Family::Gaussian
        | Family::OscSinc { .. }
        | Family::RadialCos { .. }
        | Family::RadialSinc { .. }
        | Family::Bump => true,
        Family::Rqnn { inner, .. } => inner.smooth,
        Family::ShahamRelu | Family::Relu | Family::UnitStep | Family::Sampled { .. } => false,
        Family::StepCombo { base, .. } => base.smooth,
        Family::SumCompose { inner } => inner.smooth,
    }
}

fn family_is_even(family: &Family) -> bool {
    match family {
        Family::Gaussian
        | Family::OscSinc { .. }
        | Family::RadialCos { .. }
        | Family::RadialSinc { .. }
        | Family::Rqnn { .. }
        | Family::ShahamRelu => true,
        Family::SumCompose { inner } => inner.is_even(),
        Family::Relu
        | Family::UnitStep
        | Family::Bump
        | Family::StepCombo { .. }
        | Family::Sampled { .. } => false,
    }
}

fn support_radius(family: &Family, dim: usize) -> Option<f64> {
    match family {
        Family::RadialCos { radius, .. }
        | Family::RadialSinc { radius, .. }
        | Family::Rqnn { radius, .. } => Some(*radius),
        Family::ShahamRelu => Some(3.0 * math::sqrt(dim as f64)),
        Family::StepCombo { base, shifts, .. } => {
            let br = base.support_radius()?;
            let mut worst = 0.0;
            for s in shifts {
                let n = math::norm2(s);
                if n > worst {
                    worst = n;
                }
            }
            Some(br + worst)
        }
        Family::Sampled { xs, .. } => {
            let lo = math::abs(xs[0]);
            let hi = math::abs(xs[xs.len() - 1]);
            Some(if lo > hi { lo } else { hi })
        }
        Family::SumCompose { .. }
        | Family::Gaussian
        | Family::OscSinc { .. }
        | Family::Relu
        | Family::UnitStep
        | Family::Bump => None,
    }
}

// ---------------------------------------------------------------------------
// Raw (unscaled) evaluation
// ---------------------------------------------------------------------------

fn relu_scalar(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

/// Trapezoid: 2 on [-1,1], sloping to 0 at ±3, zero outside.
fn trapezoid(t: f64) -> f64 {
    relu_scalar(t + 3.0) - relu_scalar(t + 1.0) - relu_scalar(t - 1.0) + relu_scalar(t - 3.0)
}

/// Smooth cutoff profile: `exp(-1/t)` for `t > 0`, else 0.
fn bump_profile(t: f64) -> f64 {
    if t > 0.0 {
        math::exp(-1.0 / t)
    } else {
        0.0
    }
}

fn bump_profile_d1(t: f64) -> f64 {
    if t > 0.0 {
        bump_profile(t) / (t * t)
    } else {
        0.0
    }
}

fn bump_profile_d2(t: f64) -> f64 {
    if t > 0.0 {
        let it = 1.0 / t;
        bump_profile(t) * (it * it * it * it - 2.0 * it * it * it)
    } else {
        0.0
    }
}

/// Matched odd quintic coefficients for the `OscSinc` core: the unique
/// `a·x + b·x³ + c·x⁵` with value 1, first derivative `-alpha`, and second
/// derivative `alpha(alpha+1)` at `x = 1`, mirrored oddly.
fn osc_core_coeffs(alpha: f64) -> (f64, f64, f64) {
    let a = 1.0 + (alpha + 1.0) * (alpha + 7.0) / 8.0;
    let b = -(alpha + 1.0) * (alpha + 5.0) / 4.0;
    let c = (alpha + 1.0) * (alpha + 3.0) / 8.0;
    (a, b, c)
}

/// The odd core `σ̃`: power-law tails glued twice-differentiably to a
/// quintic near the origin.
fn osc_core(alpha: f64, t: f64) -> f64 {
    let at = math::abs(t);
    if at <= 1.0 {
        let (a, b, c) = osc_core_coeffs(alpha);
        let t2 = t * t;
        t * (a + t2 * (b + t2 * c))
    } else {
        let mag = math::powf(at, -alpha);
        if t > 0.0 {
            mag
        } else {
            -mag
        }
    }
}

fn osc_core_d1(alpha: f64, t: f64) -> f64 {
    let at = math::abs(t);
    if at <= 1.0 {
        let (a, b, c) = osc_core_coeffs(alpha);
        let t2 = t * t;
        a + t2 * (3.0 * b + t2 * 5.0 * c)
    } else {
        -alpha * math::powf(at, -alpha - 1.0)
    }
}

fn osc_core_d2(alpha: f64, t: f64) -> f64 {
    let at = math::abs(t);
    if at <= 1.0 {
        let (_, b, c) = osc_core_coeffs(alpha);
        let t2 = t * t;
        t * (6.0 * b + t2 * 20.0 * c)
    } else {
        let mag = alpha * (alpha + 1.0) * math::powf(at, -alpha - 2.0);
        if t > 0.0 {
            mag
        } else {
            -mag
        }
    }
}

/// `sin(freq·s)/s` as a function of `s = |x|²`, continuous at `s = 0`.
fn sinq(freq: f64, s: f64) -> f64 {
    let z = freq * s;
    if math::abs(z) < 1e-4 {
        freq * (1.0 - z * z / 6.0 + z * z * z * z / 120.0)
    } else {
        math::sin(z) / s
    }
}

/// d/ds of `sinq`.
fn sinq_d1(freq: f64, s: f64) -> f64 {
    let z = freq * s;
    if math::abs(z) < 1e-4 {
        freq * freq * (-z / 3.0 + z * z * z / 30.0)
    } else {
        (freq * math::cos(z) * s - math::sin(z)) / (s * s)
    }
}

/// d²/ds² of `sinq`.
fn sinq_d2(freq: f64, s: f64) -> f64 {
    let z = freq * s;
    if math::abs(z) < 1e-4 {
        freq * freq * freq * (-1.0 / 3.0 + z * z / 10.0)
    } else {
        -freq * freq * math::sin(z) / s - 2.0 * (freq * math::cos(z) * s - math::sin(z)) / (s * s * s)
    }
}

fn sampled_interp(xs: &[f64], values: &[f64], x: f64) -> f64 {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return 0.0;
    }
    let hi = xs.partition_point(|&k| k < x);
    if hi == 0 {
        return values[0];
    }
    if hi >= xs.len() {
        return values[xs.len() - 1];
    }
    let (x0, x1) = (xs[hi - 1], xs[hi]);
    let (v0, v1) = (values[hi - 1], values[hi]);
    v0 + (v1 - v0) * (x - x0) / (x1 - x0)
}

fn raw_eval(family: &Family, x: &[f64]) -> f64 {
    match family {
        Family::Gaussian => math::exp(-math::norm2_sq(x)),
        Family::OscSinc { alpha, freq } => osc_core(*alpha, x[0]) * math::sin(*freq * x[0]),
        Family::RadialCos { radius, tau } => {
            let u = radius * radius - math::norm2_sq(x);
            bump_profile(u) * math::cos(math::dot(tau, x))
        }
        Family::RadialSinc { radius, freq } => {
            let s = math::norm2_sq(x);
            let u = radius * radius - s;
            bump_profile(u) * sinq(*freq, s)
        }
        Family::Rqnn { radius, inner } => {
            let u = radius * radius - math::norm2_sq(x);
            inner.eval(&[u])
        }
        Family::ShahamRelu => {
            let d = x.len();
            let mut s = 0.0;
            for &xi in x {
                s += trapezoid(xi);
            }
            relu_scalar(s - 2.0 * (d as f64 - 1.0))
        }
        Family::Relu => relu_scalar(x[0]),
        Family::UnitStep => {
            if x[0] >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Family::Bump => bump_profile(x[0]),
        Family::StepCombo { coeffs, shifts, base } => {
            let d = x.len();
            let mut buf = [0.0; 3];
            let mut s = 0.0;
            for (c, b) in coeffs.iter().zip(shifts) {
                for i in 0..d {
                    buf[i] = x[i] - b[i];
                }
                s += c * base.eval(&buf[..d]);
            }
            s
        }
        Family::SumCompose { inner } => {
            let mut s = 0.0;
            for &xi in x {
                s += xi;
            }
            inner.eval(&[s])
        }
        Family::Sampled { xs, values } => sampled_interp(xs, values, x[0]),
    }
}

// ---------------------------------------------------------------------------
// Analytic derivatives
// ---------------------------------------------------------------------------

/// Analytic gradient of the unscaled family, `None` when the family has no
/// closed form (the non-smooth catalog).
fn grad_analytic(family: &Family, x: &[f64]) -> Option<Vec<f64>> {
    match family {
        Family::Gaussian => {
            let v = math::exp(-math::norm2_sq(x));
            Some(x.iter().map(|&xi| -2.0 * xi * v).collect())
        }
        Family::OscSinc { alpha, freq } => {
            let t = x[0];
            let g = osc_core_d1(*alpha, t) * math::sin(*freq * t)
                + *freq * osc_core(*alpha, t) * math::cos(*freq * t);
            Some(vec![g])
        }
        Family::RadialCos { radius, tau } => {
            let u = radius * radius - math::norm2_sq(x);
            let b = bump_profile(u);
            let db = bump_profile_d1(u);
            let phase = math::dot(tau, x);
            let (cp, sp) = (math::cos(phase), math::sin(phase));
            Some(
                (0..x.len())
                    .map(|i| db * (-2.0 * x[i]) * cp + b * (-sp) * tau[i])
                    .collect(),
            )
        }
        Family::RadialSinc { radius, freq } => {
            let s = math::norm2_sq(x);
            let u = radius * radius - s;
            let b = bump_profile(u);
            let db = bump_profile_d1(u);
            let q = sinq(*freq, s);
            let dq = sinq_d1(*freq, s);
            // ∇ = -2x·B'(u)·q + 2x·B(u)·q'(s)
            Some(x.iter().map(|&xi| 2.0 * xi * (b * dq - db * q)).collect())
        }
        Family::Rqnn { radius, inner } => {
            if !inner.smooth {
                return None;
            }
            let u = radius * radius - math::norm2_sq(x);
            let di = inner.eval_grad(&[u]).ok()?[0];
            Some(x.iter().map(|&xi| -2.0 * xi * di).collect())
        }
        Family::Bump => Some(vec![bump_profile_d1(x[0])]),
        Family::StepCombo { coeffs, shifts, base } => {
            if !base.smooth {
                return None;
            }
            let d = x.len();
            let mut buf = [0.0; 3];
            let mut g = vec![0.0; d];
            for (c, sft) in coeffs.iter().zip(shifts) {
                for i in 0..d {
                    buf[i] = x[i] - sft[i];
                }
                let gb = grad_analytic(&base.family, &buf[..d])?;
                for i in 0..d {
                    g[i] += c * base.scale * gb[i];
                }
            }
            Some(g)
        }
        Family::SumCompose { inner } => {
            if !inner.smooth {
                return None;
            }
            let mut s = 0.0;
            for &xi in x {
                s += xi;
            }
            let di = inner.eval_grad(&[s]).ok()?[0];
            Some(vec![di; x.len()])
        }
        Family::ShahamRelu | Family::Relu | Family::UnitStep | Family::Sampled { .. } => None,
    }
}

/// Analytic second derivative for one-dimensional smooth families.
fn second_derivative_1d(family: &Family, t: f64) -> Option<f64> {
    match family {
        Family::Gaussian => Some((4.0 * t * t - 2.0) * math::exp(-t * t)),
        Family::OscSinc { alpha, freq } => {
            let (s, c) = (math::sin(*freq * t), math::cos(*freq * t));
            Some(
                osc_core_d2(*alpha, t) * s + 2.0 * *freq * osc_core_d1(*alpha, t) * c
                    - *freq * *freq * osc_core(*alpha, t) * s,
            )
        }
        Family::RadialCos { radius, tau } => {
            let u = radius * radius - t * t;
            let (b, db, d2b) = (bump_profile(u), bump_profile_d1(u), bump_profile_d2(u));
            let k = tau[0];
            let (cp, sp) = (math::cos(k * t), math::sin(k * t));
            // f = B(u)·cos(kt), u = r² - t²
            Some(
                (d2b * 4.0 * t * t - 2.0 * db) * cp + 2.0 * db * (-2.0 * t) * (-k * sp)
                    + b * (-k * k * cp),
            )
        }
        Family::RadialSinc { radius, freq } => {
            let s = t * t;
            let u = radius * radius - s;
            let (b, db, d2b) = (bump_profile(u), bump_profile_d1(u), bump_profile_d2(u));
            let (q, dq, d2q) = (sinq(*freq, s), sinq_d1(*freq, s), sinq_d2(*freq, s));
            Some(2.0 * (b * dq - db * q) + 4.0 * t * t * (b * d2q - 2.0 * db * dq + d2b * q))
        }
        Family::Rqnn { radius, inner } => {
            if !inner.smooth {
                return None;
            }
            let u = radius * radius - t * t;
            let d1 = inner.eval_grad(&[u]).ok()?[0];
            let d2 = inner_second_derivative(inner, u)?;
            Some(4.0 * t * t * d2 - 2.0 * d1)
        }
        Family::Bump => Some(bump_profile_d2(t)),
        Family::StepCombo { coeffs, shifts, base } => {
            if !base.smooth {
                return None;
            }
            let mut s = 0.0;
            for (c, sft) in coeffs.iter().zip(shifts) {
                s += c * base.scale * second_derivative_1d(&base.family, t - sft[0])?;
            }
            Some(s)
        }
        Family::SumCompose { inner } => inner_second_derivative(inner, t),
        _ => None,
    }
}

fn inner_second_derivative(inner: &ActivationSpec, t: f64) -> Option<f64> {
    second_derivative_1d(&inner.family, t).map(|v| inner.scale * v)
}

// ---------------------------------------------------------------------------
// Kink location for the non-smooth catalog
// ---------------------------------------------------------------------------

/// Distance from `x` to the nearest kink of a non-smooth family, `None`
/// for smooth families. For the pyramid, the distance to the outer hinge
/// is measured in the value of its argument, which is exact enough to
/// refuse evaluation directly on the kink.
fn kink_distance(family: &Family, x: &[f64]) -> Option<f64> {
    match family {
        Family::Relu | Family::UnitStep => Some(math::abs(x[0])),
        Family::ShahamRelu => {
            let mut best = f64::INFINITY;
            let mut s = 0.0;
            for &xi in x {
                for c in [-3.0, -1.0, 1.0, 3.0] {
                    let d = math::abs(xi - c);
                    if d < best {
                        best = d;
                    }
                }
                s += trapezoid(xi);
            }
            let hinge = math::abs(s - 2.0 * (x.len() as f64 - 1.0));
            Some(if hinge < best { hinge } else { best })
        }
        Family::StepCombo { shifts, base, .. } => {
            let d = x.len();
            let mut buf = [0.0; 3];
            let mut best = f64::INFINITY;
            for sft in shifts {
                for i in 0..d {
                    buf[i] = x[i] - sft[i];
                }
                if let Some(v) = kink_distance(&base.family, &buf[..d]) {
                    if v < best {
                        best = v;
                    }
                }
            }
            if best.is_finite() {
                Some(best)
            } else {
                None
            }
        }
        Family::Sampled { xs, .. } => {
            let mut best = f64::INFINITY;
            for &k in xs {
                let d = math::abs(x[0] - k);
                if d < best {
                    best = d;
                }
            }
            Some(best)
        }
        Family::Rqnn { radius, inner } => {
            if inner.smooth {
                None
            } else {
                // Kinks of the profile pull back to spheres; report the
                // profile's own distance at the evaluated argument.
                let u = radius * radius - math::norm2_sq(x);
                kink_distance(&inner.family, &[u])
            }
        }
        Family::SumCompose { inner } => {
            if inner.smooth {
                None
            } else {
                let mut s = 0.0;
                for &xi in x {
                    s += xi;
                }
                kink_distance(&inner.family, &[s])
            }
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadRule;

    fn grid1(r: f64, n: usize) -> Grid {
        Grid::new(1, r, n, QuadRule::GaussLegendre).unwrap()
    }

    #[test]
    fn gaussian_normalization_hits_inverse_sqrt_pi() {
        let g = grid1(8.0, 2048);
        let s = ActivationSpec::gaussian(1).unwrap().normalized(&g).unwrap();
        // Oracle: 1/sqrt(pi).
        assert!(
            (s.scale - 0.5641895835477563).abs() < 1e-12,
            "scale {}",
            s.scale
        );
    }

    #[test]
    fn normalization_is_idempotent_within_grid_arithmetic() {
        let g = grid1(8.0, 512);
        let s1 = ActivationSpec::gaussian(1).unwrap().normalized(&g).unwrap();
        let s2 = s1.normalized(&g).unwrap();
        assert!(
            (s2.scale / s1.scale - 1.0).abs() < 1e-10,
            "{} vs {}",
            s1.scale,
            s2.scale
        );
    }

    #[test]
    fn zero_activation_is_not_normalizable() {
        let g = grid1(4.0, 128);
        let z = ActivationSpec::gaussian(1).unwrap().with_scale(0.0);
        assert!(matches!(z.normalized(&g), Err(Error::NotNormalizable { .. })));
    }

    #[test]
    fn odd_integrand_is_not_normalizable() {
        // x·exp(-x²) integrates to zero on a symmetric grid.
        let g = grid1(6.0, 256);
        let knots: Vec<f64> = (0..=400).map(|i| -6.0 + i as f64 * 0.03).collect();
        let vals: Vec<f64> = knots.iter().map(|&x| x * math::exp(-x * x)).collect();
        let s = ActivationSpec::sampled(knots, vals).unwrap();
        assert!(matches!(s.normalized(&g), Err(Error::NotNormalizable { .. })));
    }

    #[test]
    fn normalized_gaussian_gradient_matches_oracle() {
        let g = grid1(8.0, 2048);
        let s = ActivationSpec::gaussian(1).unwrap().normalized(&g).unwrap();
        let grad = s.eval_grad(&[1.0]).unwrap();
        // Oracle: -2·e^{-1}/sqrt(pi).
        assert!(
            (grad[0] - (-0.415107497420594703)).abs() < 1e-12,
            "grad {}",
            grad[0]
        );
    }

    #[test]
    fn normalized_gaussian_hessian_norm_at_origin() {
        let g = grid1(8.0, 2048);
        let s = ActivationSpec::gaussian(1).unwrap().normalized(&g).unwrap();
        let h = s.eval_hessian_norm(&[0.0]).unwrap();
        // Oracle: 2/sqrt(pi).
        assert!((h - 1.1283791670955126).abs() < 1e-12, "hess {h}");
    }

    #[test]
    fn osc_sinc_matches_tail_formula_outside_the_core() {
        let s = ActivationSpec::osc_sinc(3.5, 1.0).unwrap();
        // Oracle: sin(2)/2^3.5.
        assert!(
            (s.eval(&[2.0]) - 0.08037129707798975).abs() < 1e-15,
            "value {}",
            s.eval(&[2.0])
        );
    }

    #[test]
    fn osc_sinc_core_is_twice_differentiable_at_the_junction() {
        let alpha = 3.5;
        for dir in [-1.0, 1.0] {
            let t = dir * 1.0;
            let eps = 1e-7;
            let inside = osc_core(alpha, t - dir * eps);
            let outside = osc_core(alpha, t + dir * eps);
            assert!((inside - outside).abs() < 1e-6, "value jump at {t}");
            let din = osc_core_d1(alpha, t - dir * eps);
            let dout = osc_core_d1(alpha, t + dir * eps);
            assert!((din - dout).abs() < 1e-5, "slope jump at {t}: {din} vs {dout}");
            let d2in = osc_core_d2(alpha, t - dir * eps);
            let d2out = osc_core_d2(alpha, t + dir * eps);
            assert!((d2in - d2out).abs() < 1e-4, "curvature jump at {t}");
        }
    }

    #[test]
    fn smooth_gradients_agree_with_finite_differences() {
        let specs = [
            ActivationSpec::gaussian(2).unwrap(),
            ActivationSpec::osc_sinc(3.5, 2.0).unwrap(),
            ActivationSpec::radial_cos(2, 2.0, vec![1.0, -0.5]).unwrap(),
            ActivationSpec::radial_sinc(2, 2.0, 1.5).unwrap(),
            ActivationSpec::rqnn(2, 2.0).unwrap(),
        ];
        let pts1 = [[-1.3], [0.2], [0.9], [1.7]];
        let pts2 = [[-1.3, 0.4], [0.2, -0.1], [0.9, 1.1], [1.4, -0.7]];
        for s in &specs {
            if s.dim == 1 {
                for p in &pts1 {
                    let a = s.eval_grad(p).unwrap();
                    let f = s.fd_grad(p);
                    assert!(
                        (a[0] - f[0]).abs() <= 1e-5 * (1.0 + a[0].abs()),
                        "{:?} at {:?}: {a:?} vs {f:?}",
                        s.family,
                        p
                    );
                }
            } else {
                for p in &pts2 {
                    let a = s.eval_grad(p).unwrap();
                    let f = s.fd_grad(p);
                    for i in 0..2 {
                        assert!(
                            (a[i] - f[i]).abs() <= 1e-5 * (1.0 + a[i].abs()),
                            "{:?} at {:?}: {a:?} vs {f:?}",
                            s.family,
                            p
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn one_dimensional_hessians_agree_with_finite_differences() {
        let specs = [
            ActivationSpec::gaussian(1).unwrap(),
            ActivationSpec::osc_sinc(3.5, 2.0).unwrap(),
            ActivationSpec::radial_cos(1, 2.0, vec![1.0]).unwrap(),
            ActivationSpec::radial_sinc(1, 2.0, 1.5).unwrap(),
            ActivationSpec::rqnn(1, 2.0).unwrap(),
        ];
        for s in &specs {
            for &t in &[-1.6, -0.4, 0.3, 0.8, 1.2] {
                let exact = s.eval_hessian_norm(&[t]).unwrap();
                let h = 1e-5 * (1.0 + t.abs());
                let fd = ((s.eval(&[t + h]) - 2.0 * s.eval(&[t]) + s.eval(&[t - h])) / (h * h)).abs();
                assert!(
                    (exact - fd).abs() <= 2e-4 * (1.0 + exact),
                    "{:?} at {t}: exact {exact} vs fd {fd}",
                    s.family
                );
            }
        }
    }

    #[test]
    fn pyramid_takes_value_two_at_the_origin() {
        let s2 = ActivationSpec::shaham_relu(2).unwrap();
        assert_eq!(s2.eval(&[0.0, 0.0]), 2.0);
        let s1 = ActivationSpec::shaham_relu(1).unwrap();
        assert_eq!(s1.eval(&[0.0]), 2.0);
        // Support bound: trapezoids vanish beyond |x_j| = 3.
        assert_eq!(s2.eval(&[3.0, 0.0]), 0.0);
        assert_eq!(s2.eval(&[4.0, 4.0]), 0.0);
    }

    #[test]
    fn pyramid_is_even() {
        let s = ActivationSpec::shaham_relu(2).unwrap();
        for p in [[0.3, -1.2], [2.0, 0.5], [1.0, 1.0]] {
            let m = [-p[0], -p[1]];
            assert_eq!(s.eval(&p), s.eval(&m));
        }
    }

    #[test]
    fn hessian_is_refused_for_non_smooth_families() {
        let s = ActivationSpec::shaham_relu(2).unwrap();
        assert_eq!(s.eval_hessian_norm(&[0.2, 0.1]), Err(Error::NonSmoothFamily));
    }

    #[test]
    fn gradient_at_a_kink_is_refused_but_fd_works_nearby() {
        let r = ActivationSpec::relu();
        assert!(matches!(
            r.eval_grad(&[0.0]),
            Err(Error::NonSmoothAtPoint { .. })
        ));
        let g = r.eval_grad(&[0.5]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-9, "slope right of the kink: {}", g[0]);
        let g = r.eval_grad(&[-0.5]).unwrap();
        assert!(g[0].abs() < 1e-9, "slope left of the kink: {}", g[0]);
    }

    #[test]
    fn step_combo_of_trapezoids_reproduces_the_hat_sum() {
        // 0.5·L(x+1) + 0.5·L(x-1) at 0: 0.5·(1 + 1)... trapezoid(±1) = 2 at
        // the plateau edge, so the sum is 2.
        let base = ActivationSpec::sampled(
            vec![-3.0, -1.0, 1.0, 3.0],
            vec![0.0, 2.0, 2.0, 0.0],
        )
        .unwrap();
        let combo = ActivationSpec::step_combo(
            vec![0.5, 0.5],
            vec![vec![-1.0], vec![1.0]],
            base,
        )
        .unwrap();
        assert!((combo.eval(&[0.0]) - 2.0).abs() < 1e-14);
        // Outside both shifted supports.
        assert_eq!(combo.eval(&[5.0]), 0.0);
    }

    #[test]
    fn sum_compose_gradient_is_constant_along_ones() {
        let inner = ActivationSpec::gaussian(1).unwrap();
        let s = ActivationSpec::sum_compose(2, inner).unwrap();
        let g = s.eval_grad(&[0.3, 0.4]).unwrap();
        assert!((g[0] - g[1]).abs() < 1e-15, "components must match: {g:?}");
        // d/ds exp(-s²) at s = 0.7.
        let expect = -2.0 * 0.7 * math::exp(-0.49);
        assert!((g[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn sampled_interpolates_linearly_and_vanishes_outside() {
        let s = ActivationSpec::sampled(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.eval(&[0.5]), 1.0);
        assert_eq!(s.eval(&[1.5]), 1.0);
        assert_eq!(s.eval(&[-0.1]), 0.0);
        assert_eq!(s.eval(&[2.1]), 0.0);
    }

    #[test]
    fn unit_step_is_right_continuous() {
        let s = ActivationSpec::unit_step();
        assert_eq!(s.eval(&[0.0]), 1.0);
        assert_eq!(s.eval(&[-1e-15]), 0.0);
    }

    #[test]
    fn catalog_evenness_flags() {
        assert!(ActivationSpec::gaussian(2).unwrap().is_even());
        assert!(ActivationSpec::osc_sinc(3.5, 1.0).unwrap().is_even());
        assert!(ActivationSpec::radial_cos(2, 1.0, vec![1.0, 2.0]).unwrap().is_even());
        assert!(ActivationSpec::radial_sinc(2, 1.0, 1.0).unwrap().is_even());
        assert!(ActivationSpec::rqnn(2, 1.0).unwrap().is_even());
        assert!(ActivationSpec::shaham_relu(2).unwrap().is_even());
        assert!(!ActivationSpec::relu().is_even());
        assert!(!ActivationSpec::unit_step().is_even());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(ActivationSpec::osc_sinc(0.5, 1.0).is_err());
        assert!(ActivationSpec::radial_cos(2, 1.0, vec![1.0]).is_err());
        assert!(ActivationSpec::radial_sinc(1, -1.0, 1.0).is_err());
        assert!(ActivationSpec::gaussian(4).is_err());
        assert!(ActivationSpec::sampled(vec![1.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(ActivationSpec::sampled(vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn radial_families_vanish_outside_their_support() {
        let rc = ActivationSpec::radial_cos(2, 1.5, vec![1.0, 0.0]).unwrap();
        assert_eq!(rc.eval(&[1.5, 0.0]), 0.0);
        assert_eq!(rc.eval(&[2.0, 2.0]), 0.0);
        let rs = ActivationSpec::radial_sinc(1, 1.5, 1.0).unwrap();
        assert_eq!(rs.eval(&[1.5]), 0.0);
        assert_eq!(rs.support_radius(), Some(1.5));
    }

    #[test]
    fn sinq_series_and_direct_branches_agree_at_the_switch() {
        // Around z = freq·s = 1e-4 both branches must produce the same value.
        let freq = 2.0;
        for &s in &[4.9e-5, 5.1e-5] {
            let series = freq * (1.0 - (freq * s) * (freq * s) / 6.0);
            assert!((sinq(freq, s) - series).abs() < 1e-12);
        }
        let direct = math::sin(2.0 * 0.001) / 0.001;
        assert!((sinq(2.0, 0.001) - direct).abs() < 1e-12);
    }
}
