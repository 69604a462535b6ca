//! Orthogonal greedy pursuit over a wavelet dictionary.
//!
//! Each step selects the atom with the largest normalized correlation
//! `|⟨r, ψ⟩| / ‖ψ‖` against the current residual, then refits *all*
//! selected coefficients by solving the Gram normal equations, so the
//! residual stays orthogonal to the selected span. Selection ties are
//! broken toward the lowest dictionary index, which makes runs
//! reproducible down to the bit.
//!
//! For a target in the variation hull of the dictionary with coefficient
//! mass `L₁`, the residual after `N` steps obeys
//!
//! ```text
//! ‖f - f_N‖ ≤ L₁ · (N + 1)^{-1/2},
//! ```
//!
//! and [`verify_rate`] checks a finished trace against that envelope.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::{AtomIndex, Dictionary, WaveletExpansion};
use crate::linalg::solve_spd_ridged;
use crate::math;
use crate::quadrature::Grid;
use crate::rng::stage_stream;

/// Relative ridge used on a Gram refit retry after a failed factorization.
const GRAM_RIDGE: f64 = 1e-12;
/// Two scores within this relative window count as tied.
const TIE_WINDOW: f64 = 1e-12;
/// Rate margins up to `1 + RATE_TOL` still count as obeying the envelope.
const RATE_TOL: f64 = 1e-3;

/// One selection step: which atom won, with what score, the full refit
/// over everything selected so far, and where the residual landed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OgaStep {
    /// Dictionary slot of the selected atom.
    pub index: usize,
    /// The selected atom itself.
    pub chosen: AtomIndex,
    /// Normalized correlation `|⟨r, ψ⟩|/‖ψ‖` at selection time.
    pub score: f64,
    /// Refit coefficients over all atoms selected so far, in selection
    /// order; at step `t` this has length `t`.
    pub coefficients: Vec<f64>,
    /// Residual norm after the refit.
    pub residual_norm: f64,
}

/// Complete record of a greedy run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OgaTrace {
    pub steps: Vec<OgaStep>,
    pub target_norm: f64,
    /// Known coefficient mass `Σ|c|` of the target, when it has one
    /// (synthetic constructions); `None` for arbitrary data.
    pub l1_bound: Option<f64>,
}

impl OgaTrace {
    /// The last refit: one coefficient per selected atom, in selection
    /// order. Empty when no steps ran.
    pub fn final_coeffs(&self) -> &[f64] {
        self.steps.last().map_or(&[], |s| &s.coefficients)
    }

    /// Residual norms as a curve `(1, ‖r_1‖), …, (N, ‖r_N‖)`.
    pub fn residual_curve(&self) -> Vec<(usize, f64)> {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, s)| (i + 1, s.residual_norm))
            .collect()
    }

    /// Turn the trace back into a wavelet expansion over the dictionary
    /// it was run against.
    pub fn expansion(&self, dict: &Dictionary) -> WaveletExpansion {
        let terms = self
            .steps
            .iter()
            .zip(self.final_coeffs().iter())
            .map(|(s, &c)| (dict.atoms[s.index].clone(), c))
            .collect();
        WaveletExpansion::new(terms)
    }
}

/// Outcome of checking a trace against the `(N+1)^{-1/2}` envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateCheck {
    /// Largest value of `‖r_N‖·√(N+1) / L₁` along the curve.
    pub margin: f64,
    pub pass: bool,
}

/// Check every point of the residual curve against `L₁·(N+1)^{-1/2}`.
///
/// `l1_bound` is the coefficient mass of a representation of the target
/// over the dictionary (the trace's own `l1_bound` is the fallback);
/// callers that approximate arbitrary data have no bound and get
/// `MissingBound`.
pub fn verify_rate(trace: &OgaTrace, l1_bound: Option<f64>) -> Result<RateCheck> {
    let bound = l1_bound.or(trace.l1_bound).ok_or(Error::MissingBound)?;
    let mut margin = 0.0f64;
    for (n, r) in trace.residual_curve() {
        let scaled = r * math::sqrt((n + 1) as f64);
        let m = if bound > 0.0 {
            scaled / bound
        } else if scaled == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if m > margin {
            margin = m;
        }
    }
    Ok(RateCheck {
        margin,
        pass: margin <= 1.0 + RATE_TOL,
    })
}

/// Run orthogonal greedy selection for up to `steps` steps.
///
/// `target` must be sampled on the same grid the dictionary was built on.
/// `stop_rel` stops early once the residual norm falls below that fraction
/// of the target norm. Selecting more steps than the dictionary has atoms
/// is `DictionaryExhausted`; a refit whose Gram matrix stays singular even
/// after one ridged retry is `GramSingular`.
pub fn run_oga(
    dict: &Dictionary,
    grid: &Grid,
    target: &[f64],
    steps: usize,
    stop_rel: Option<f64>,
) -> Result<OgaTrace> {
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    if target.len() != grid.len() {
        return Err(Error::DimMismatch {
            expected: grid.len(),
            got: target.len(),
        });
    }
    let n_atoms = dict.len();
    let target_norm = grid.norm_samples(target)?;
    let mut selected: Vec<usize> = Vec::new();
    let mut taken = vec![false; n_atoms];
    // Gram rows and target correlations for the selected atoms only.
    let mut gram_rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut residual: Vec<f64> = target.to_vec();
    let mut trace = OgaTrace {
        steps: Vec::new(),
        target_norm,
        l1_bound: None,
    };
    for _ in 0..steps {
        if selected.len() == n_atoms {
            return Err(Error::DictionaryExhausted {
                selected: selected.len(),
                available: n_atoms,
            });
        }
        // Scores over unselected atoms; ties go to the lowest index.
        let mut scores = vec![f64::NEG_INFINITY; n_atoms];
        let mut best_score = f64::NEG_INFINITY;
        for (i, samples) in dict.samples.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let corr = grid.inner_samples(&residual, samples)?;
            let score = math::abs(corr) / dict.norms[i];
            scores[i] = score;
            if score > best_score {
                best_score = score;
            }
        }
        let window = TIE_WINDOW * (1.0 + math::abs(best_score));
        let mut pick = usize::MAX;
        let mut pick_score = 0.0;
        for (i, &score) in scores.iter().enumerate() {
            if !taken[i] && score >= best_score - window {
                pick = i;
                pick_score = score;
                break;
            }
        }
        debug_assert!(pick != usize::MAX, "an unselected atom must exist here");
        taken[pick] = true;
        // Grow the Gram system by the new atom's row.
        let mut row = Vec::with_capacity(selected.len() + 1);
        for &j in &selected {
            row.push(grid.inner_samples(&dict.samples[pick], &dict.samples[j])?);
        }
        row.push(grid.inner_samples(&dict.samples[pick], &dict.samples[pick])?);
        selected.push(pick);
        gram_rows.push(row);
        rhs.push(grid.inner_samples(&dict.samples[pick], target)?);
        let t = selected.len();
        let mut gram = vec![0.0f64; t * t];
        for (i, row) in gram_rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                gram[i * t + j] = v;
                gram[j * t + i] = v;
            }
        }
        let coeffs = solve_spd_ridged(&gram, &rhs, t, GRAM_RIDGE).ok_or(Error::GramSingular)?;
        // Rebuild the residual from scratch so it cannot drift.
        residual.copy_from_slice(target);
        for (&j, &c) in selected.iter().zip(coeffs.iter()) {
            for (r, &s) in residual.iter_mut().zip(dict.samples[j].iter()) {
                *r -= c * s;
            }
        }
        let residual_norm = grid.norm_samples(&residual)?;
        trace.steps.push(OgaStep {
            index: pick,
            chosen: dict.atoms[pick].clone(),
            score: pick_score,
            coefficients: coeffs,
            residual_norm,
        });
        if let Some(rel) = stop_rel {
            if residual_norm <= rel * target_norm {
                break;
            }
        }
    }
    Ok(trace)
}

/// How synthetic-target coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoeffLaw {
    /// Every coefficient is `1`.
    Unit,
    /// Geometric decay `2^{-i}` in pick order.
    PowTwo,
    /// Magnitude uniform in `[1/4, 1]` with a random sign.
    UniformSigned,
}

/// A target with a known sparse representation over the dictionary.
#[derive(Debug, Clone)]
pub struct SyntheticTarget {
    /// Samples on the dictionary grid.
    pub samples: Vec<f64>,
    /// The generating expansion (atoms in pick order).
    pub expansion: WaveletExpansion,
    /// Coefficient mass `Σ|c|` of the generator.
    pub l1: f64,
}

/// Build a target as a random sparse combination of dictionary atoms.
///
/// Atom picks use a partial shuffle and coefficients an independent
/// stream, both derived from `seed`, so the same seed always produces the
/// same target.
pub fn make_synthetic_target(
    dict: &Dictionary,
    grid: &Grid,
    n_atoms: usize,
    law: CoeffLaw,
    seed: u64,
) -> Result<SyntheticTarget> {
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    if n_atoms == 0 || n_atoms > dict.len() {
        return Err(Error::DictionaryExhausted {
            selected: n_atoms,
            available: dict.len(),
        });
    }
    let mut pick_rng = stage_stream(seed, "synthetic-pick");
    let mut coeff_rng = stage_stream(seed, "synthetic-coeff");
    let mut order: Vec<usize> = (0..dict.len()).collect();
    for i in 0..n_atoms {
        let j = i + pick_rng.next_below((dict.len() - i) as u64) as usize;
        order.swap(i, j);
    }
    let picks = &order[..n_atoms];
    let mut samples = vec![0.0f64; grid.len()];
    let mut terms = Vec::with_capacity(n_atoms);
    let mut l1 = 0.0f64;
    for (i, &p) in picks.iter().enumerate() {
        let c = match law {
            CoeffLaw::Unit => 1.0,
            CoeffLaw::PowTwo => math::pow2i(-(i as i32)),
            CoeffLaw::UniformSigned => coeff_rng.next_sign() * coeff_rng.next_in(0.25, 1.0),
        };
        l1 += math::abs(c);
        for (s, &v) in samples.iter_mut().zip(dict.samples[p].iter()) {
            *s += c * v;
        }
        terms.push((dict.atoms[p].clone(), c));
    }
    Ok(SyntheticTarget {
        samples,
        expansion: WaveletExpansion::new(terms),
        l1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::ActivationSpec;
    use crate::frame::BoxDomain;
    use crate::linalg::solve_general;
    use crate::quadrature::QuadRule;

    fn small_setup() -> (Dictionary, Grid) {
        let grid = Grid::new(1, 6.0, 384, QuadRule::GaussLegendre).unwrap();
        let spec = ActivationSpec::gaussian(1)
            .unwrap()
            .normalized(&grid)
            .unwrap();
        let domain = BoxDomain::centered(1, 2.0).unwrap();
        let dict = Dictionary::build(&spec, -1, 2, &domain, &grid, 10_000).unwrap();
        (dict, grid)
    }

    #[test]
    fn a_single_atom_target_is_recovered_exactly() {
        let (dict, grid) = small_setup();
        let idx = dict.len() / 2;
        let coeff = 0.75;
        let target: Vec<f64> = dict.samples[idx].iter().map(|v| coeff * v).collect();
        let trace = run_oga(&dict, &grid, &target, 5, Some(1e-12)).unwrap();
        assert_eq!(trace.steps.len(), 1, "one step should suffice");
        assert_eq!(trace.steps[0].index, idx);
        assert_eq!(trace.steps[0].chosen, dict.atoms[idx]);
        assert!(
            (trace.final_coeffs()[0] - coeff).abs() <= 1e-9 * coeff,
            "coefficient {} vs {coeff}",
            trace.final_coeffs()[0]
        );
        assert!(trace.steps[0].residual_norm <= 1e-10 * trace.target_norm);
    }

    #[test]
    fn residual_norms_never_increase() {
        let (dict, grid) = small_setup();
        let syn = make_synthetic_target(&dict, &grid, 6, CoeffLaw::UniformSigned, 11).unwrap();
        let trace = run_oga(&dict, &grid, &syn.samples, 10, None).unwrap();
        let curve = trace.residual_curve();
        assert_eq!(curve[0].0, 1, "the curve starts at the first step");
        assert!(curve[0].1 <= trace.target_norm + 1e-12);
        for (t, s) in curve.iter().zip(trace.steps.iter()) {
            assert_eq!(s.coefficients.len(), t.0, "refit length equals the step number");
        }
        for w in curve.windows(2) {
            assert!(
                w[1].1 <= w[0].1 + 1e-12,
                "residual rose from {} to {}",
                w[0].1,
                w[1].1
            );
        }
    }

    #[test]
    fn refit_leaves_the_residual_orthogonal_to_the_selection() {
        let (dict, grid) = small_setup();
        let syn = make_synthetic_target(&dict, &grid, 5, CoeffLaw::PowTwo, 3).unwrap();
        let trace = run_oga(&dict, &grid, &syn.samples, 6, None).unwrap();
        let mut residual = syn.samples.clone();
        for (s, &c) in trace.steps.iter().zip(trace.final_coeffs().iter()) {
            for (r, &v) in residual.iter_mut().zip(dict.samples[s.index].iter()) {
                *r -= c * v;
            }
        }
        for s in &trace.steps {
            let corr = grid
                .inner_samples(&residual, &dict.samples[s.index])
                .unwrap();
            assert!(
                corr.abs() <= 1e-9 * (1.0 + trace.target_norm),
                "residual correlates with selected atom {}: {corr}",
                s.index
            );
        }
    }

    #[test]
    fn matches_a_naive_reimplementation_step_for_step() {
        let (dict, grid) = small_setup();
        let syn = make_synthetic_target(&dict, &grid, 4, CoeffLaw::UniformSigned, 29).unwrap();
        let steps = 4;
        let trace = run_oga(&dict, &grid, &syn.samples, steps, None).unwrap();

        // Naive re-run: recompute everything from definitions each step,
        // solving the normal equations with a general solver.
        let mut chosen: Vec<usize> = Vec::new();
        let mut naive_coeffs: Vec<f64> = Vec::new();
        for _ in 0..steps {
            let mut residual = syn.samples.clone();
            for (&j, &c) in chosen.iter().zip(naive_coeffs.iter()) {
                for (r, &v) in residual.iter_mut().zip(dict.samples[j].iter()) {
                    *r -= c * v;
                }
            }
            let mut best = (0usize, f64::NEG_INFINITY);
            for i in 0..dict.len() {
                if chosen.contains(&i) {
                    continue;
                }
                let score = grid
                    .inner_samples(&residual, &dict.samples[i])
                    .unwrap()
                    .abs()
                    / dict.norms[i];
                if score > best.1 {
                    best = (i, score);
                }
            }
            chosen.push(best.0);
            let t = chosen.len();
            let mut gram = vec![0.0; t * t];
            let mut rhs = vec![0.0; t];
            for a in 0..t {
                for b in 0..t {
                    gram[a * t + b] = grid
                        .inner_samples(&dict.samples[chosen[a]], &dict.samples[chosen[b]])
                        .unwrap();
                }
                rhs[a] = grid
                    .inner_samples(&dict.samples[chosen[a]], &syn.samples)
                    .unwrap();
            }
            naive_coeffs = solve_general(&gram, &rhs, t).unwrap();
        }
        let picked: Vec<usize> = trace.steps.iter().map(|s| s.index).collect();
        assert_eq!(picked, chosen, "selection order must agree with the naive run");
        for (a, b) in trace.final_coeffs().iter().zip(naive_coeffs.iter()) {
            assert!((a - b).abs() <= 1e-10, "coefficients diverged: {a} vs {b}");
        }
    }

    #[test]
    fn synthetic_targets_obey_the_rate_envelope() {
        let (dict, grid) = small_setup();
        let syn = make_synthetic_target(&dict, &grid, 8, CoeffLaw::PowTwo, 17).unwrap();
        let trace = run_oga(&dict, &grid, &syn.samples, 12, None).unwrap();
        let check = verify_rate(&trace, Some(syn.l1)).unwrap();
        assert!(
            check.pass,
            "rate margin {} exceeded the envelope",
            check.margin
        );
        assert!(verify_rate(&trace, None).is_err(), "no bound, no verdict");
    }

    #[test]
    fn duplicate_atoms_tie_toward_the_lower_index() {
        let grid = Grid::new(1, 4.0, 256, QuadRule::Midpoint).unwrap();
        let spec = ActivationSpec::gaussian(1)
            .unwrap()
            .normalized(&grid)
            .unwrap();
        let domain = BoxDomain::centered(1, 1.0).unwrap();
        let base = Dictionary::build(&spec, 0, 0, &domain, &grid, 1000).unwrap();
        // Duplicate every atom; the clone sits at a higher index.
        let mut atoms = base.atoms.clone();
        atoms.extend(base.atoms.iter().cloned());
        let mut samples = base.samples.clone();
        samples.extend(base.samples.iter().cloned());
        let dict =
            Dictionary::from_samples(&spec, 0, 0, &base.domain, atoms, samples, &grid).unwrap();
        let target = dict.samples[1].clone();
        let trace = run_oga(&dict, &grid, &target, 1, None).unwrap();
        assert_eq!(
            trace.steps[0].index, 1,
            "exact tie between clone and original must pick the lower slot"
        );
    }

    #[test]
    fn asking_for_more_steps_than_atoms_reports_exhaustion() {
        let grid = Grid::new(1, 4.0, 128, QuadRule::Midpoint).unwrap();
        let spec = ActivationSpec::gaussian(1)
            .unwrap()
            .normalized(&grid)
            .unwrap();
        let domain = BoxDomain::centered(1, 0.25).unwrap();
        let dict = Dictionary::build(&spec, 0, 1, &domain, &grid, 1000).unwrap();
        let n = dict.len();
        let target: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&x| if x.abs() < 1.0 { 1.0 } else { 0.0 })
            .collect();
        let err = run_oga(&dict, &grid, &target, n + 3, None).unwrap_err();
        assert!(matches!(
            err,
            Error::DictionaryExhausted { selected, available }
                if selected == n && available == n
        ));
    }

    #[test]
    fn synthetic_targets_are_seed_reproducible_and_seed_sensitive() {
        let (dict, grid) = small_setup();
        let a = make_synthetic_target(&dict, &grid, 5, CoeffLaw::UniformSigned, 100).unwrap();
        let b = make_synthetic_target(&dict, &grid, 5, CoeffLaw::UniformSigned, 100).unwrap();
        let c = make_synthetic_target(&dict, &grid, 5, CoeffLaw::UniformSigned, 101).unwrap();
        assert_eq!(a.samples, b.samples, "same seed, same target");
        assert_eq!(a.l1, b.l1);
        assert_ne!(a.samples, c.samples, "different seed, different target");
    }

    #[test]
    fn pow_two_law_sums_to_the_expected_mass() {
        let (dict, grid) = small_setup();
        let syn = make_synthetic_target(&dict, &grid, 10, CoeffLaw::PowTwo, 1).unwrap();
        assert!(
            (syn.l1 - 1.998046875).abs() < 1e-15,
            "sum of 2^-i for i<10, got {}",
            syn.l1
        );
    }
}
