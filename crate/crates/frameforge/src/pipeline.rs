//! Stage orchestration: certify → dictionary → greedy → export → compare.
//!
//! Each stage is a standalone function over a shared [`Ctx`] so the CLI
//! subcommands can run exactly the stages they need. The full pipeline
//! assembles one `run.json` document with every verdict, the residual
//! curve, constants, and the timings pointer; wall-clock numbers go to
//! the sidecar so the document itself is byte-reproducible.
//!
//! Verdicts are tri-state: a stage that does not apply (no coefficient
//! mass for the rate check, no one-dimensional σ0 for the comparison in
//! d > 1) reports `null` rather than a pass — a skipped check must never
//! count as a passed one, and only `false` verdicts fail the run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use frameforge_core::activations::{ActivationSpec, Family};
use frameforge_core::frame::{AtomIndex, BoxDomain, Dictionary, WaveletExpansion};
use frameforge_core::greedy::{self, CoeffLaw, OgaTrace, RateCheck};
use frameforge_core::kernelcheck::{HomogeneousConstants, KernelReport, ReportStatus, SamplePlan};
use frameforge_core::network::{
    expand_base_net, expansion_to_net, fit_shift_combo, substitution_bound, ScalarWeightNet,
};
use frameforge_core::quadrature::Grid;
use frameforge_core::rng::{fnv1a64, stage_stream, LowDiscrepancy};

use crate::config::{ExperimentConfig, TargetConfig};
use crate::csvio;
use crate::parallel::parallel_map_indexed;
use crate::report::{timings_pointer, Timings};

/// Relative tolerance for expansion/network agreement.
const NET_EQUIV_TOL: f64 = 1e-12;
/// Additive slack on the measured substitution error, absorbing grid
/// truncation of the atoms' off-box tails.
const COMPARE_SLACK: f64 = 1e-3;
/// Number of check points for the network-equivalence verdict.
const NET_CHECK_POINTS: usize = 1000;

/// Everything the stages share: resolved config, working activation (with
/// normalization applied), and the quadrature grid.
pub struct Ctx {
    pub cfg: ExperimentConfig,
    /// Directory paths inside the config resolve against.
    pub base_dir: PathBuf,
    pub threads: usize,
    pub spec: ActivationSpec,
    pub grid: Grid,
}

impl Ctx {
    /// Build the activation and grid from a resolved, validated config.
    pub fn new(cfg: ExperimentConfig, base_dir: PathBuf, threads: usize) -> anyhow::Result<Ctx> {
        let raw = cfg
            .activation
            .build(&base_dir)
            .context("activation stage")?;
        let rule = cfg.quad_rule(raw.smooth);
        let grid = Grid::new(
            raw.dim,
            cfg.grid.half_width,
            cfg.grid.points_per_axis,
            rule,
        )
        .context("grid stage")?;
        let spec = if cfg.normalize {
            raw.normalized(&grid).context("activation stage")?
        } else {
            raw
        };
        Ok(Ctx {
            cfg,
            base_dir,
            threads,
            spec,
            grid,
        })
    }
}

/// Short name of an activation family for report metadata.
pub fn family_label(f: &Family) -> &'static str {
    match f {
        Family::Gaussian => "gaussian",
        Family::OscSinc { .. } => "osc_sinc",
        Family::RadialCos { .. } => "radial_cos",
        Family::RadialSinc { .. } => "radial_sinc",
        Family::Rqnn { .. } => "rqnn",
        Family::ShahamRelu => "shaham_relu",
        Family::Relu => "relu",
        Family::UnitStep => "unit_step",
        Family::Bump => "bump",
        Family::StepCombo { .. } => "step_combo",
        Family::SumCompose { .. } => "sum_compose",
        Family::Sampled { .. } => "sampled",
    }
}

/// Run the kernel-condition report for the working activation.
pub fn kernel_stage(ctx: &Ctx) -> anyhow::Result<KernelReport> {
    let k = &ctx.cfg.kernel;
    let d = ctx.spec.dim;
    let constants = HomogeneousConstants::new(d, k.c, k.epsilon.expect("config resolved"))
        .context("kernel stage")?;
    let plan = SamplePlan::new(
        k.k_min,
        k.k_max,
        k.sample_radius.expect("config resolved"),
        k.n_samples,
        k.seed.expect("config resolved"),
    )
    .context("kernel stage")?;
    frameforge_core::kernelcheck::run_report(&ctx.spec, &constants, &plan, &ctx.grid)
        .context("kernel stage")
}

/// A kernel report passes when a smooth family is certified with every
/// condition holding, or a non-smooth family is routed to substitution
/// with its applicable checks (normalization, symmetry) holding. An
/// `unstable` decay certificate never passes.
pub fn kernel_verdict(report: &KernelReport) -> bool {
    match report.status {
        ReportStatus::Certified => report.all_pass(),
        ReportStatus::NonSmoothFamily => report.entries.iter().all(|e| e.pass),
        ReportStatus::Unstable => false,
    }
}

/// Enumerate and sample the dictionary.
pub fn dictionary_stage(ctx: &Ctx) -> anyhow::Result<Dictionary> {
    let dc = &ctx.cfg.dictionary;
    let domain =
        BoxDomain::centered(ctx.spec.dim, dc.domain_half_width).context("dictionary stage")?;
    Dictionary::build(
        &ctx.spec,
        dc.k_min,
        dc.k_max,
        &domain,
        &ctx.grid,
        dc.atom_cap,
    )
    .context("dictionary stage")
}

/// Per-scale counts and totals for the dictionary block of a report.
pub fn dict_summary(dict: &Dictionary) -> serde_json::Value {
    let mut per_scale: BTreeMap<String, usize> = BTreeMap::new();
    for a in &dict.atoms {
        *per_scale.entry(a.k.to_string()).or_insert(0) += 1;
    }
    serde_json::json!({
        "atom_count": dict.len(),
        "dropped": dict.dropped.len(),
        "k_min": dict.k_min,
        "k_max": dict.k_max,
        "per_scale": per_scale,
    })
}

/// The function the greedy stage approximates, with its coefficient mass
/// when one is known by construction.
pub struct TargetData {
    pub samples: Vec<f64>,
    pub l1: Option<f64>,
    pub description: String,
}

/// Materialize the configured target on the grid.
pub fn target_stage(ctx: &Ctx, dict: &Dictionary) -> anyhow::Result<TargetData> {
    match &ctx.cfg.target {
        TargetConfig::Synthetic {
            n_atoms,
            coeff_law,
            seed,
        } => {
            let law = match coeff_law.as_str() {
                "unit" => CoeffLaw::Unit,
                "pow_two" => CoeffLaw::PowTwo,
                "uniform_signed" => CoeffLaw::UniformSigned,
                other => anyhow::bail!("target stage: unknown coefficient law {other:?}"),
            };
            let t = greedy::make_synthetic_target(
                dict,
                &ctx.grid,
                *n_atoms,
                law,
                seed.expect("config resolved"),
            )
            .context("target stage")?;
            Ok(TargetData {
                samples: t.samples,
                l1: Some(t.l1),
                description: format!("synthetic ({n_atoms} atoms, {coeff_law} coefficients)"),
            })
        }
        TargetConfig::Csv { path } => {
            let full = ctx.base_dir.join(path);
            let samples = csvio::ingest_target_csv(&full, &ctx.grid).context("target stage")?;
            Ok(TargetData {
                samples,
                l1: None,
                description: format!("csv ({path})"),
            })
        }
        TargetConfig::Builtin { name } => match name.as_str() {
            "activation" => {
                let spec = &ctx.spec;
                Ok(TargetData {
                    samples: ctx.grid.sample(|x| spec.eval(x)),
                    l1: None,
                    description: "builtin (the working activation)".into(),
                })
            }
            "center_atom" => {
                let d = ctx.spec.dim;
                let want = AtomIndex::new(0, vec![0; d]);
                let i = dict
                    .atoms
                    .iter()
                    .position(|a| *a == want)
                    .ok_or_else(|| {
                        anyhow::anyhow!(
                            "target stage: center_atom needs scale 0 with center 0 in the dictionary"
                        )
                    })?;
                let norm = dict.norms[i];
                let samples = dict.samples[i].iter().map(|v| v / norm).collect();
                Ok(TargetData {
                    samples,
                    // The target is ψ/‖ψ‖, so its mass over raw atoms is 1/‖ψ‖.
                    l1: Some(1.0 / norm),
                    description: "builtin (normalized atom at scale 0, center 0)".into(),
                })
            }
            other => anyhow::bail!("target stage: unknown builtin {other:?}"),
        },
    }
}

/// Greedy run plus the rate verdict (absent when no coefficient mass is
/// known for the target).
pub struct GreedyOutcome {
    pub trace: OgaTrace,
    pub rate: Option<RateCheck>,
}

pub fn greedy_stage(ctx: &Ctx, dict: &Dictionary, target: &TargetData) -> anyhow::Result<GreedyOutcome> {
    let g = &ctx.cfg.greedy;
    let mut trace = greedy::run_oga(dict, &ctx.grid, &target.samples, g.steps, g.stop_rel)
        .context("greedy stage")?;
    trace.l1_bound = target.l1;
    let rate = match target.l1 {
        Some(_) => Some(greedy::verify_rate(&trace, None).context("greedy stage")?),
        None => None,
    };
    Ok(GreedyOutcome { trace, rate })
}

/// Conversion of the greedy expansion to a network, with the sampled
/// equivalence verdict.
pub struct NetworkOutcome {
    pub expansion: WaveletExpansion,
    pub net: ScalarWeightNet,
    pub hash: String,
    /// Largest `|expansion − net| / (1 + |expansion|)` over the check points.
    pub max_rel_gap: f64,
    pub pass: bool,
}

/// Serialize expansion terms as explicit objects (a tuple would be
/// unreadable in the report and fragile to re-parse).
pub fn terms_json(expansion: &WaveletExpansion) -> serde_json::Value {
    serde_json::Value::Array(
        expansion
            .terms
            .iter()
            .map(|(a, c)| serde_json::json!({"k": a.k, "m": a.m, "coeff": c}))
            .collect(),
    )
}

/// Parse terms written by [`terms_json`].
pub fn terms_from_json(v: &serde_json::Value) -> anyhow::Result<WaveletExpansion> {
    let arr = v
        .as_array()
        .ok_or_else(|| anyhow::anyhow!("terms: expected an array"))?;
    let mut terms = Vec::with_capacity(arr.len());
    for (i, t) in arr.iter().enumerate() {
        let k = t["k"]
            .as_i64()
            .ok_or_else(|| anyhow::anyhow!("terms[{i}].k: expected an integer"))?;
        let m: Vec<i64> = serde_json::from_value(t["m"].clone())
            .map_err(|e| anyhow::anyhow!("terms[{i}].m: {e}"))?;
        let c = t["coeff"]
            .as_f64()
            .ok_or_else(|| anyhow::anyhow!("terms[{i}].coeff: expected a number"))?;
        terms.push((AtomIndex::new(k as i32, m), c));
    }
    Ok(WaveletExpansion::new(terms))
}

/// Hash of the terms document, identifying the expansion a network came
/// from across files.
pub fn expansion_hash(expansion: &WaveletExpansion) -> String {
    let text = serde_json::to_string(&terms_json(expansion)).expect("terms serialize");
    format!("{:016x}", fnv1a64(text.as_bytes()))
}

/// Quasi-random check points in the grid box, seeded per stage label.
fn check_points(ctx: &Ctx, label: &str, n: usize) -> Vec<Vec<f64>> {
    let d = ctx.spec.dim;
    let r = ctx.grid.half_width;
    let mut seq = LowDiscrepancy::new(d, stage_stream(ctx.cfg.seed, label).next_u64());
    (0..n)
        .map(|_| seq.next_point().iter().map(|u| r * (2.0 * u - 1.0)).collect())
        .collect()
}

pub fn network_stage(ctx: &Ctx, dict: &Dictionary, trace: &OgaTrace) -> anyhow::Result<NetworkOutcome> {
    let expansion = trace.expansion(dict);
    let net = expansion_to_net(&expansion, &ctx.spec).context("network stage")?;
    let hash = expansion_hash(&expansion);
    let points = check_points(ctx, "net-check", NET_CHECK_POINTS);
    let spec = &ctx.spec;
    let gaps = parallel_map_indexed(points.len(), ctx.threads, |i| {
        let x = &points[i];
        let reference = expansion.eval(spec, x);
        let got = net.eval(x);
        (got - reference).abs() / (1.0 + reference.abs())
    });
    let max_rel_gap = gaps.iter().cloned().fold(0.0f64, f64::max);
    Ok(NetworkOutcome {
        pass: max_rel_gap <= NET_EQUIV_TOL,
        expansion,
        net,
        hash,
        max_rel_gap,
    })
}

/// The exportable network document.
pub fn net_json(net: &ScalarWeightNet, hash: &str) -> serde_json::Value {
    serde_json::json!({
        "d": net.dim,
        "family": family_label(&net.activation.family),
        "activation": serde_json::to_value(&net.activation).expect("activation serializes"),
        "gamma": net.gamma,
        "alpha": net.alpha,
        "theta": net.theta,
        "node_count": net.len(),
        "source_expansion_hash": hash,
    })
}

/// Rebuild a network from its document.
pub fn net_from_json(v: &serde_json::Value) -> anyhow::Result<ScalarWeightNet> {
    let dim = v["d"]
        .as_u64()
        .ok_or_else(|| anyhow::anyhow!("net: missing dimension field d"))? as usize;
    let activation: ActivationSpec = serde_json::from_value(v["activation"].clone())
        .map_err(|e| anyhow::anyhow!("net.activation: {e}"))?;
    let gamma: Vec<f64> = serde_json::from_value(v["gamma"].clone())
        .map_err(|e| anyhow::anyhow!("net.gamma: {e}"))?;
    let alpha: Vec<f64> = serde_json::from_value(v["alpha"].clone())
        .map_err(|e| anyhow::anyhow!("net.alpha: {e}"))?;
    let theta: Vec<Vec<f64>> = serde_json::from_value(v["theta"].clone())
        .map_err(|e| anyhow::anyhow!("net.theta: {e}"))?;
    if gamma.len() != alpha.len() || gamma.len() != theta.len() {
        anyhow::bail!(
            "net: parameter arrays disagree on node count ({}, {}, {})",
            gamma.len(),
            alpha.len(),
            theta.len()
        );
    }
    if theta.iter().any(|t| t.len() != dim) {
        anyhow::bail!("net.theta: a node's shift vector does not have d = {dim} entries");
    }
    Ok(ScalarWeightNet {
        dim,
        activation,
        gamma,
        alpha,
        theta,
    })
}

/// One σ0 budget in the comparison: its fit quality and the combined
/// bound check for the expanded network.
pub struct CompareRow {
    pub m: usize,
    pub achieved_dist: f64,
    pub node_count: usize,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

pub struct CompareOutcome {
    pub rows: Vec<CompareRow>,
    pub dist_non_increasing: bool,
    pub coeff_l1: f64,
    pub residual: f64,
    pub verdict: bool,
}

/// Fit σ by shifted copies of σ0 for each budget, expand the network, and
/// check the measured substitution error against the combined bound.
///
/// Only defined for d = 1 — the σ0 catalog (ReLU, hat, boxcar) is
/// one-dimensional.
pub fn compare_stage(
    ctx: &Ctx,
    target: &TargetData,
    trace: &OgaTrace,
    network: &NetworkOutcome,
) -> anyhow::Result<CompareOutcome> {
    if ctx.spec.dim != 1 {
        anyhow::bail!("compare stage: the σ0 catalog is one-dimensional, got d = {}", ctx.spec.dim);
    }
    let dg = &ctx.cfg.dagger;
    let sigma0 = dg.sigma0.build();
    let residual = trace
        .steps
        .last()
        .map(|s| s.residual_norm)
        .unwrap_or(trace.target_norm);
    let coeff_l1: f64 = network.expansion.terms.iter().map(|(_, c)| c.abs()).sum();
    let mut rows = Vec::with_capacity(dg.m_values.len());
    let mut dist_non_increasing = true;
    let mut last_dist = f64::INFINITY;
    for &m in &dg.m_values {
        let fit = fit_shift_combo(&ctx.spec, &sigma0, m, dg.shift_lo, dg.shift_hi, &ctx.grid)
            .context("compare stage")?;
        let expanded = expand_base_net(&network.net, &fit).context("compare stage")?;
        let grid = &ctx.grid;
        let psi = parallel_map_indexed(grid.len(), ctx.threads, |i| expanded.eval(grid.node(i)));
        let diff: Vec<f64> = target
            .samples
            .iter()
            .zip(psi.iter())
            .map(|(f, p)| f - p)
            .collect();
        let measured = ctx.grid.norm_samples(&diff).context("compare stage")?;
        let bound = substitution_bound(residual, fit.achieved_dist, coeff_l1);
        if fit.achieved_dist > last_dist * (1.0 + 1e-12) {
            dist_non_increasing = false;
        }
        last_dist = fit.achieved_dist;
        rows.push(CompareRow {
            m,
            achieved_dist: fit.achieved_dist,
            node_count: expanded.len(),
            measured,
            bound,
            pass: measured <= bound + COMPARE_SLACK,
        });
    }
    let verdict = dist_non_increasing && rows.iter().all(|r| r.pass);
    Ok(CompareOutcome {
        rows,
        dist_non_increasing,
        coeff_l1,
        residual,
        verdict,
    })
}

pub fn compare_json(c: &CompareOutcome) -> serde_json::Value {
    serde_json::json!({
        "coeff_l1": c.coeff_l1,
        "residual": c.residual,
        "dist_non_increasing": c.dist_non_increasing,
        "fits": c.rows.iter().map(|r| serde_json::json!({
            "m": r.m,
            "achieved_dist": r.achieved_dist,
            "node_count": r.node_count,
            "measured": r.measured,
            "bound": r.bound,
            "pass": r.pass,
        })).collect::<Vec<_>>(),
        "verdict": c.verdict,
    })
}

/// Everything `run` produces, ready to be written.
pub struct RunOutcome {
    pub doc: serde_json::Value,
    pub curve: Vec<(usize, f64)>,
    pub l1: Option<f64>,
    pub net_doc: serde_json::Value,
    pub timings: Timings,
    pub all_pass: bool,
}

fn greedy_json(out: &GreedyOutcome, expansion: &WaveletExpansion) -> serde_json::Value {
    let curve: Vec<serde_json::Value> = out
        .trace
        .residual_curve()
        .iter()
        .map(|(t, r)| serde_json::json!([t, r]))
        .collect();
    serde_json::json!({
        "steps_run": out.trace.steps.len(),
        "target_norm": out.trace.target_norm,
        "terms": terms_json(expansion),
        "residual_curve": curve,
        "rate": out.rate.map(|r| serde_json::json!({"margin": r.margin, "pass": r.pass})),
    })
}

fn verdicts_json(verdicts: &BTreeMap<&'static str, Option<bool>>) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (k, v) in verdicts {
        map.insert(k.to_string(), serde_json::to_value(v).expect("bool option"));
    }
    serde_json::Value::Object(map)
}

/// The full pipeline: every stage in order, one document out.
pub fn run_all(ctx: &Ctx) -> anyhow::Result<RunOutcome> {
    let mut timings = Timings::new();
    let kernel = timings.stage("kernel", || kernel_stage(ctx))?;
    let dict = timings.stage("dictionary", || dictionary_stage(ctx))?;
    let target = timings.stage("target", || target_stage(ctx, &dict))?;
    let greedy_out = timings.stage("greedy", || greedy_stage(ctx, &dict, &target))?;
    let network = timings.stage("network", || network_stage(ctx, &dict, &greedy_out.trace))?;
    // The comparison only exists in d = 1; elsewhere it is skipped, not
    // failed.
    let compare = if ctx.spec.dim == 1 {
        Some(timings.stage("compare", || {
            compare_stage(ctx, &target, &greedy_out.trace, &network)
        })?)
    } else {
        None
    };

    let mut verdicts: BTreeMap<&'static str, Option<bool>> = BTreeMap::new();
    verdicts.insert("kernel", Some(kernel_verdict(&kernel)));
    verdicts.insert("rate", greedy_out.rate.map(|r| r.pass));
    verdicts.insert("net_equivalence", Some(network.pass));
    verdicts.insert("combined_bound", compare.as_ref().map(|c| c.verdict));
    let all_pass = verdicts.values().all(|v| *v != Some(false));

    let doc = serde_json::json!({
        "resolved_config": serde_json::to_value(&ctx.cfg)?,
        "kernel": serde_json::to_value(&kernel)?,
        "dictionary": dict_summary(&dict),
        "target": {
            "description": target.description,
            "l1": target.l1,
        },
        "greedy": greedy_json(&greedy_out, &network.expansion),
        "network": {
            "node_count": network.net.len(),
            "max_rel_gap": network.max_rel_gap,
            "pass": network.pass,
            "source_expansion_hash": network.hash,
        },
        "compare": compare.as_ref().map(compare_json),
        "verdicts": verdicts_json(&verdicts),
        "timings": timings_pointer(),
    });
    let net_doc = net_json(&network.net, &network.hash);
    Ok(RunOutcome {
        doc,
        curve: greedy_out.trace.residual_curve(),
        l1: target.l1,
        net_doc,
        timings,
        all_pass,
    })
}

/// The `approximate` subcommand's document: dictionary, target, greedy
/// trace with the rate verdict, and the timings pointer.
pub struct ApproxOutcome {
    pub doc: serde_json::Value,
    pub curve: Vec<(usize, f64)>,
    pub l1: Option<f64>,
    pub timings: Timings,
    pub all_pass: bool,
}

pub fn run_approximate(ctx: &Ctx) -> anyhow::Result<ApproxOutcome> {
    let mut timings = Timings::new();
    let dict = timings.stage("dictionary", || dictionary_stage(ctx))?;
    let target = timings.stage("target", || target_stage(ctx, &dict))?;
    let greedy_out = timings.stage("greedy", || greedy_stage(ctx, &dict, &target))?;
    let expansion = greedy_out.trace.expansion(&dict);
    let all_pass = greedy_out.rate.map(|r| r.pass) != Some(false);
    let doc = serde_json::json!({
        "resolved_config": serde_json::to_value(&ctx.cfg)?,
        "dictionary": dict_summary(&dict),
        "target": {
            "description": target.description,
            "l1": target.l1,
        },
        "greedy": greedy_json(&greedy_out, &expansion),
        "timings": timings_pointer(),
    });
    Ok(ApproxOutcome {
        doc,
        curve: greedy_out.trace.residual_curve(),
        l1: target.l1,
        timings,
        all_pass,
    })
}

/// Evaluate a network at points, parallel over points with per-point
/// fixed-order node sums.
pub fn eval_net_at(net: &ScalarWeightNet, points: &[Vec<f64>], threads: usize) -> Vec<f64> {
    parallel_map_indexed(points.len(), threads, |i| net.eval(&points[i]))
}

/// Write the artifacts a run produces into `dir`.
pub fn write_run_artifacts(dir: &Path, out: &RunOutcome) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    crate::report::write_json(&dir.join("run.json"), &out.doc)?;
    csvio::write_curve(&dir.join("curve.csv"), &out.curve, out.l1)?;
    crate::report::write_json(&dir.join("net.json"), &out.net_doc)?;
    out.timings.write_sidecar(&dir.join("timings.json"))?;
    Ok(())
}
