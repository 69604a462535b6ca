//! Dyadic wavelet-style frames built from a single activation.
//!
//! Scale `k` uses the dilated kernel `S_k(x, b) = 2^k σ(2^{k/d}(x - b))`
//! and the atom
//!
//! ```text
//! ψ_{k,b}(x) = 2^{k/2} σ(2^{k/d}(x-b)) - 2^{k/2-1} σ(2^{(k-1)/d}(x-b)),
//! ```
//!
//! the normalized difference of two consecutive kernel scales. Centers `b`
//! live on the dyadic lattice `2^{-k/d} ℤ^d` clipped to a closed box. A
//! [`Dictionary`] materializes the atoms of a scale range on a quadrature
//! grid and caches their samples and grid norms for the greedy loop.

use alloc::vec;
use alloc::vec::Vec;

use crate::activations::ActivationSpec;
use crate::error::{Error, Result};
use crate::math;
use crate::quadrature::Grid;

/// Default ceiling on lattice enumeration.
pub const DEFAULT_LATTICE_CAP: usize = 1_000_000;

/// Grid norm below which an atom carries no usable signal and is dropped.
const ATOM_NORM_FLOOR: f64 = 1e-12;

/// Identifies one atom: scale `k` and integer lattice coordinates `m`,
/// so the center is `b = 2^{-k/d}·m`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AtomIndex {
    pub k: i32,
    pub m: Vec<i64>,
}

impl AtomIndex {
    pub fn new(k: i32, m: Vec<i64>) -> AtomIndex {
        AtomIndex { k, m }
    }

    /// The center `b = 2^{-k/d}·m` of this atom.
    pub fn center(&self) -> Vec<f64> {
        let s = lattice_spacing(self.k, self.m.len());
        self.m.iter().map(|&mi| mi as f64 * s).collect()
    }
}

/// Axis-aligned closed box `[lo_1, hi_1] × … × [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<BoxDomain> {
        if lo.len() != hi.len() {
            return Err(Error::DimMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() || lo.len() > 3 {
            return Err(Error::DimTooLarge { dim: lo.len() });
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l <= h) || !l.is_finite() || !h.is_finite() {
                return Err(Error::InvalidGrid(alloc::format!(
                    "box bounds must be finite with lo <= hi, got [{l}, {h}]"
                )));
            }
        }
        Ok(BoxDomain { lo, hi })
    }

    /// Centered cube `[-r, r]^dim`.
    pub fn centered(dim: usize, r: f64) -> Result<BoxDomain> {
        BoxDomain::new(vec![-r; dim], vec![r; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// Lattice spacing `2^{-k/d}`, computed by splitting `k = q·d + r` so the
/// integer part of the exponent is applied exactly. This makes the nesting
/// identity `spacing(k + d) = spacing(k)/2` hold bit-exactly for every `k`.
pub fn lattice_spacing(k: i32, dim: usize) -> f64 {
    let d = dim as i32;
    let r = k.rem_euclid(d);
    let q = (k - r) / d;
    math::pow2i(-q) * math::exp2(-(r as f64) / d as f64)
}

/// Reciprocal spacing `2^{k/d}` with the same exponent split.
pub fn inverse_spacing(k: i32, dim: usize) -> f64 {
    let d = dim as i32;
    let r = k.rem_euclid(d);
    let q = (k - r) / d;
    math::pow2i(q) * math::exp2(r as f64 / d as f64)
}

/// All lattice coordinates `m` with center inside the closed box, in
/// lexicographic order (axis 0 most significant). Boundary centers are
/// included; a tiny relative snap keeps exact boundary hits from being
/// lost to division round-off.
pub fn lattice_points(k: i32, domain: &BoxDomain, cap: usize) -> Result<Vec<Vec<i64>>> {
    let dim = domain.dim();
    let s = lattice_spacing(k, dim);
    let mut lo_idx = [0i64; 3];
    let mut hi_idx = [0i64; 3];
    let mut total: usize = 1;
    for ax in 0..dim {
        let lo = math::ceil(domain.lo[ax] / s - 1e-9) as i64;
        let hi = math::floor(domain.hi[ax] / s + 1e-9) as i64;
        lo_idx[ax] = lo;
        hi_idx[ax] = hi;
        let count = if hi >= lo { (hi - lo + 1) as usize } else { 0 };
        total = total.saturating_mul(count);
    }
    if total > cap {
        return Err(Error::TooManyPoints {
            requested: total,
            cap,
        });
    }
    let mut out = Vec::with_capacity(total);
    if total == 0 {
        return Ok(out);
    }
    let mut m = [0i64; 3];
    m[..dim].copy_from_slice(&lo_idx[..dim]);
    loop {
        out.push(m[..dim].to_vec());
        // Odometer increment, last axis fastest.
        let mut ax = dim;
        loop {
            if ax == 0 {
                return Ok(out);
            }
            ax -= 1;
            m[ax] += 1;
            if m[ax] <= hi_idx[ax] {
                break;
            }
            m[ax] = lo_idx[ax];
        }
    }
}

/// Averaging kernel `S_k(x, b) = 2^k σ(2^{k/d}(x - b))`.
pub fn eval_kernel(spec: &ActivationSpec, k: i32, x: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), spec.dim);
    debug_assert_eq!(b.len(), spec.dim);
    let inv = inverse_spacing(k, spec.dim);
    let mut arg = [0.0; 3];
    for i in 0..spec.dim {
        arg[i] = inv * (x[i] - b[i]);
    }
    math::pow2i(k) * spec.eval(&arg[..spec.dim])
}

/// Wavelet atom `ψ_{k,b}(x)`, the L²-normalized difference of kernels at
/// scales `k` and `k-1`.
pub fn eval_atom(spec: &ActivationSpec, k: i32, b: &[f64], x: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), spec.dim);
    let d = spec.dim;
    let inv_k = inverse_spacing(k, d);
    let inv_km1 = inverse_spacing(k - 1, d);
    let mut arg = [0.0; 3];
    for i in 0..d {
        arg[i] = inv_k * (x[i] - b[i]);
    }
    let fine = spec.eval(&arg[..d]);
    for i in 0..d {
        arg[i] = inv_km1 * (x[i] - b[i]);
    }
    let coarse = spec.eval(&arg[..d]);
    let half_pow = math::exp2(0.5 * k as f64);
    half_pow * fine - 0.5 * half_pow * coarse
}

/// A sparse expansion `Σ c · ψ_{k,b}` over distinct atoms.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WaveletExpansion {
    pub terms: Vec<(AtomIndex, f64)>,
}

impl WaveletExpansion {
    pub fn new(terms: Vec<(AtomIndex, f64)>) -> WaveletExpansion {
        debug_assert!(
            {
                let mut seen: Vec<&AtomIndex> = terms.iter().map(|(a, _)| a).collect();
                seen.sort();
                seen.windows(2).all(|w| w[0] != w[1])
            },
            "expansion atoms must be distinct"
        );
        WaveletExpansion { terms }
    }

    /// Sum of absolute coefficients — the sparsity budget the greedy rate
    /// bound is stated against.
    pub fn l1(&self) -> f64 {
        let mut s = 0.0;
        for (_, c) in &self.terms {
            s += math::abs(*c);
        }
        s
    }

    /// Evaluate the expansion at one point, in term order.
    pub fn eval(&self, spec: &ActivationSpec, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (idx, c) in &self.terms {
            s += c * eval_atom(spec, idx.k, &idx.center(), x);
        }
        s
    }
}

/// Materialized atom dictionary: indices, grid samples, and grid norms for
/// every atom of a scale range whose center lies in the domain box and
/// whose grid norm clears the floor.
#[derive(Debug, Clone)]
pub struct Dictionary {
    pub spec: ActivationSpec,
    pub k_min: i32,
    pub k_max: i32,
    pub domain: BoxDomain,
    pub atoms: Vec<AtomIndex>,
    /// `samples[i]` is atom `i` evaluated at every grid node.
    pub samples: Vec<Vec<f64>>,
    /// Grid L² norm of each atom.
    pub norms: Vec<f64>,
    /// Atoms removed for falling below the norm floor.
    pub dropped: Vec<AtomIndex>,
}

impl Dictionary {
    /// Enumerate the atom indices of a scale range over a domain box:
    /// scales ascending, lattice coordinates lexicographic within a scale.
    pub fn enumerate_atoms(
        k_min: i32,
        k_max: i32,
        domain: &BoxDomain,
        cap: usize,
    ) -> Result<Vec<AtomIndex>> {
        if k_min > k_max {
            return Err(Error::InvalidGrid(alloc::format!(
                "scale range is empty: k_min {k_min} > k_max {k_max}"
            )));
        }
        let mut out = Vec::new();
        for k in k_min..=k_max {
            let pts = lattice_points(k, domain, cap)?;
            if out.len().saturating_add(pts.len()) > cap {
                return Err(Error::TooManyPoints {
                    requested: out.len() + pts.len(),
                    cap,
                });
            }
            out.extend(pts.into_iter().map(|m| AtomIndex::new(k, m)));
        }
        Ok(out)
    }

    /// Build the dictionary by sampling every enumerated atom on `grid`.
    pub fn build(
        spec: &ActivationSpec,
        k_min: i32,
        k_max: i32,
        domain: &BoxDomain,
        grid: &Grid,
        cap: usize,
    ) -> Result<Dictionary> {
        let atoms = Self::enumerate_atoms(k_min, k_max, domain, cap)?;
        let samples: Vec<Vec<f64>> = atoms
            .iter()
            .map(|a| {
                let b = a.center();
                grid.sample(|x| eval_atom(spec, a.k, &b, x))
            })
            .collect();
        Self::from_samples(spec, k_min, k_max, domain, atoms, samples, grid)
    }

    /// Assemble a dictionary from externally computed samples (the parallel
    /// builder in the CLI uses this). Computes norms, applies the norm
    /// floor, and records dropped atoms. Sample vectors must match the grid
    /// and the atom list one-to-one.
    pub fn from_samples(
        spec: &ActivationSpec,
        k_min: i32,
        k_max: i32,
        domain: &BoxDomain,
        atoms: Vec<AtomIndex>,
        samples: Vec<Vec<f64>>,
        grid: &Grid,
    ) -> Result<Dictionary> {
        if spec.dim != domain.dim() || spec.dim != grid.dim {
            return Err(Error::DimMismatch {
                expected: spec.dim,
                got: grid.dim,
            });
        }
        if atoms.len() != samples.len() {
            return Err(Error::DimMismatch {
                expected: atoms.len(),
                got: samples.len(),
            });
        }
        let mut kept_atoms = Vec::with_capacity(atoms.len());
        let mut kept_samples = Vec::with_capacity(atoms.len());
        let mut norms = Vec::with_capacity(atoms.len());
        let mut dropped = Vec::new();
        for (atom, s) in atoms.into_iter().zip(samples) {
            let n = grid.norm_samples(&s)?;
            if n < ATOM_NORM_FLOOR {
                dropped.push(atom);
            } else {
                kept_atoms.push(atom);
                kept_samples.push(s);
                norms.push(n);
            }
        }
        if kept_atoms.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        Ok(Dictionary {
            spec: spec.clone(),
            k_min,
            k_max,
            domain: domain.clone(),
            atoms: kept_atoms,
            samples: kept_samples,
            norms,
            dropped,
        })
    }

    /// Number of usable atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}
