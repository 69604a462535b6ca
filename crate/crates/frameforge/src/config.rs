//! Experiment configuration: JSON schema, defaults, validation, and
//! resolution.
//!
//! A config file describes one experiment end to end — activation, grid,
//! dictionary, greedy budget, kernel-check sampling, σ† comparison, and
//! target. Every field has a default, so the minimal valid config names
//! only the activation family. Before any computation runs, the config is
//! *resolved*: optional fields are filled in (the top-level seed flows to
//! every stage that left its own seed unset, ε falls back to min(1/d, ½),
//! the quadrature rule follows the family's smoothness) and the resolved
//! value is echoed verbatim into the output under `resolved_config`, so a
//! report always records exactly what produced it.
//!
//! Validation failures name the offending field.

use std::path::Path;

use frameforge_core::activations::ActivationSpec;
use frameforge_core::quadrature::QuadRule;
use serde::{Deserialize, Serialize};

use crate::csvio;

fn default_seed() -> u64 {
    42
}
fn default_true() -> bool {
    true
}

/// Top-level experiment description. Unknown top-level keys are rejected
/// so a typo'd block name cannot silently fall back to defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stage stream is derived from it by label.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Rescale the activation so its grid integral is 1 before any other
    /// stage sees it.
    #[serde(default = "default_true")]
    pub normalize: bool,
    pub activation: ActivationConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub dictionary: DictionaryConfig,
    #[serde(default)]
    pub greedy: GreedyConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub dagger: DaggerConfig,
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Activation family plus its parameters, tagged by `family`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ActivationConfig {
    Gaussian { dim: usize },
    OscSinc { alpha: f64, freq: f64 },
    RadialCos { dim: usize, radius: f64, tau: Vec<f64> },
    RadialSinc { dim: usize, radius: f64, freq: f64 },
    Rqnn { dim: usize, radius: f64 },
    ShahamRelu { dim: usize },
    Relu {},
    UnitStep {},
    Bump {},
    SumCompose { dim: usize, inner: Box<ActivationConfig> },
    /// One-dimensional samples loaded from CSV (`x_1,value`).
    Sampled { path: String },
}

impl ActivationConfig {
    /// Dimension the family lives in (sampled files are 1-d).
    pub fn dim(&self) -> usize {
        match self {
            ActivationConfig::Gaussian { dim }
            | ActivationConfig::RadialCos { dim, .. }
            | ActivationConfig::RadialSinc { dim, .. }
            | ActivationConfig::Rqnn { dim, .. }
            | ActivationConfig::ShahamRelu { dim }
            | ActivationConfig::SumCompose { dim, .. } => *dim,
            _ => 1,
        }
    }

    /// Build the core spec, loading sampled data relative to `base_dir`.
    pub fn build(&self, base_dir: &Path) -> anyhow::Result<ActivationSpec> {
        let spec = match self {
            ActivationConfig::Gaussian { dim } => ActivationSpec::gaussian(*dim)?,
            ActivationConfig::OscSinc { alpha, freq } => ActivationSpec::osc_sinc(*alpha, *freq)?,
            ActivationConfig::RadialCos { dim, radius, tau } => {
                ActivationSpec::radial_cos(*dim, *radius, tau.clone())?
            }
            ActivationConfig::RadialSinc { dim, radius, freq } => {
                ActivationSpec::radial_sinc(*dim, *radius, *freq)?
            }
            ActivationConfig::Rqnn { dim, radius } => ActivationSpec::rqnn(*dim, *radius)?,
            ActivationConfig::ShahamRelu { dim } => ActivationSpec::shaham_relu(*dim)?,
            ActivationConfig::Relu {} => ActivationSpec::relu(),
            ActivationConfig::UnitStep {} => ActivationSpec::unit_step(),
            ActivationConfig::Bump {} => ActivationSpec::bump(),
            ActivationConfig::SumCompose { dim, inner } => {
                let inner = inner.build(base_dir)?;
                ActivationSpec::sum_compose(*dim, inner)?
            }
            ActivationConfig::Sampled { path } => {
                let full = base_dir.join(path);
                let (dim, points) = csvio::read_points_with_values(&full)?;
                if dim != 1 {
                    anyhow::bail!("activation.path: sampled activations must be 1-d (columns x_1,value), got {dim} coordinate columns");
                }
                let xs: Vec<f64> = points.iter().map(|(p, _)| p[0]).collect();
                let values: Vec<f64> = points.iter().map(|(_, v)| *v).collect();
                ActivationSpec::sampled(xs, values)?
            }
        };
        Ok(spec)
    }

    fn validate(&self) -> anyhow::Result<()> {
        match self {
            ActivationConfig::SumCompose { inner, .. } => {
                if inner.dim() != 1 {
                    anyhow::bail!("activation.inner: sum_compose takes a 1-d inner profile");
                }
                inner.validate()
            }
            ActivationConfig::Sampled { path } if path.is_empty() => {
                anyhow::bail!("activation.path: empty path")
            }
            _ => Ok(()),
        }
    }
}

/// Tensor-product quadrature grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Box half-width R (the grid covers `[-R, R]^d`).
    pub half_width: f64,
    pub points_per_axis: usize,
    /// Absent means: Gauss–Legendre for smooth families, midpoint
    /// otherwise (kinks collapse high-order rules back to low order).
    #[serde(default)]
    pub rule: Option<QuadRule>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            half_width: 8.0,
            points_per_axis: 2048,
            rule: None,
        }
    }
}

/// Dictionary truncation: scales `k_min..=k_max` with centers in the box
/// `[-domain_half_width, domain_half_width]^d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryConfig {
    pub k_min: i32,
    pub k_max: i32,
    pub domain_half_width: f64,
    /// Hard cap on enumerated lattice points across all scales.
    pub atom_cap: usize,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        DictionaryConfig {
            k_min: -2,
            k_max: 4,
            domain_half_width: 4.0,
            atom_cap: 1_000_000,
        }
    }
}

/// Greedy approximation budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreedyConfig {
    /// Number of OGA steps N.
    pub steps: usize,
    /// Optional relative-residual early stop; off by default so residual
    /// curves have uniform length.
    #[serde(default)]
    pub stop_rel: Option<f64>,
    /// Tie rule among scores within the tolerance window. Only
    /// "lowest_index" exists; the field is spelled out so the echoed
    /// config documents the behavior.
    pub tie_break: String,
    /// Stage seed; absent means the top-level seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig {
            steps: 12,
            stop_rel: None,
            tie_break: "lowest_index".into(),
            seed: None,
        }
    }
}

/// Kernel-condition sampling plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// Quasi-metric constant c in `ρ(x,y) = c·‖x−y‖^d`.
    pub c: f64,
    /// Homogeneity exponent ε; absent means min(1/d, 1/2).
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub k_min: i32,
    pub k_max: i32,
    /// Sampling ball radius; absent means 2·grid.half_width.
    #[serde(default)]
    pub sample_radius: Option<f64>,
    pub n_samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            c: 1.0,
            epsilon: None,
            k_min: -3,
            k_max: 5,
            sample_radius: None,
            n_samples: 4096,
            seed: None,
        }
    }
}

/// Baseline family for the non-smooth substitution fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma0 {
    Relu,
    /// Piecewise-linear compactly supported hat.
    Hat,
    /// Difference of two unit steps.
    Boxcar,
}

impl Sigma0 {
    pub fn build(self) -> ActivationSpec {
        match self {
            Sigma0::Relu => ActivationSpec::relu(),
            Sigma0::Hat => ActivationSpec::step_combo(
                vec![1.0, -2.0, 1.0],
                vec![vec![-1.0], vec![0.0], vec![1.0]],
                ActivationSpec::relu(),
            )
            .expect("hat template is well-formed"),
            Sigma0::Boxcar => ActivationSpec::step_combo(
                vec![1.0, -1.0],
                vec![vec![-0.5], vec![0.5]],
                ActivationSpec::unit_step(),
            )
            .expect("boxcar template is well-formed"),
        }
    }
}

/// σ† comparison: fit σ by shifted copies of σ0 for each budget in
/// `m_values` and track the combined error bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaggerConfig {
    pub sigma0: Sigma0,
    pub m_values: Vec<usize>,
    /// Shift box `[shift_lo, shift_hi]` per axis.
    pub shift_lo: f64,
    pub shift_hi: f64,
}

impl Default for DaggerConfig {
    fn default() -> Self {
        DaggerConfig {
            sigma0: Sigma0::Hat,
            m_values: vec![9, 17, 33],
            shift_lo: -4.0,
            shift_hi: 4.0,
        }
    }
}

fn default_coeff_law() -> String {
    "uniform_signed".into()
}

/// What function the greedy stage approximates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetConfig {
    /// Random sparse combination of dictionary atoms with known Σ|c|.
    Synthetic {
        n_atoms: usize,
        #[serde(default = "default_coeff_law")]
        coeff_law: String,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Samples aligned to the grid from a CSV file (`x_1..x_d,value`).
    Csv { path: String },
    /// A named target computed in place: "activation" (the configured σ
    /// itself) or "center_atom" (the normalized atom at scale 0, center
    /// 0 — its Σ|c| is known, so the rate verdict still applies).
    Builtin { name: String },
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig::Synthetic {
            n_atoms: 10,
            coeff_law: default_coeff_law(),
            seed: None,
        }
    }
}

/// Where the run writes its artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

impl ExperimentConfig {
    /// Parse a config file (JSON).
    pub fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading config {}: {e}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("parsing config {}: {e}", path.display()))?;
        Ok(cfg)
    }

    /// Fill in every optional field and apply the CLI seed override. The
    /// result is what `resolved_config` echoes.
    pub fn resolve(mut self, cli_seed: Option<u64>) -> ExperimentConfig {
        if let Some(s) = cli_seed {
            self.seed = s;
        }
        let d = self.activation.dim();
        if self.kernel.epsilon.is_none() {
            self.kernel.epsilon = Some((1.0 / d as f64).min(0.5));
        }
        if self.kernel.sample_radius.is_none() {
            self.kernel.sample_radius = Some(2.0 * self.grid.half_width);
        }
        if self.kernel.seed.is_none() {
            self.kernel.seed = Some(self.seed);
        }
        if self.greedy.seed.is_none() {
            self.greedy.seed = Some(self.seed);
        }
        if let TargetConfig::Synthetic { seed, .. } = &mut self.target {
            if seed.is_none() {
                *seed = Some(self.seed);
            }
        }
        self
    }

    /// The quadrature rule to use, honoring an explicit choice and
    /// otherwise following the family's smoothness.
    pub fn quad_rule(&self, smooth: bool) -> QuadRule {
        self.rule_or(smooth)
    }

    fn rule_or(&self, smooth: bool) -> QuadRule {
        self.grid.rule.unwrap_or(if smooth {
            QuadRule::GaussLegendre
        } else {
            QuadRule::Midpoint
        })
    }

    /// Check every field, naming the offender on failure. Call after
    /// [`resolve`](Self::resolve).
    pub fn validate(&self) -> anyhow::Result<()> {
        self.activation.validate()?;
        let d = self.activation.dim();
        if !(1..=3).contains(&d) {
            anyhow::bail!("activation.dim: {d} outside the supported range 1..=3");
        }
        let g = &self.grid;
        if !(g.half_width > 0.0) || !g.half_width.is_finite() {
            anyhow::bail!("grid.half_width: must be a positive finite number, got {}", g.half_width);
        }
        if g.points_per_axis < 8 {
            anyhow::bail!(
                "grid.points_per_axis: {} is too few to resolve anything (need at least 8)",
                g.points_per_axis
            );
        }
        let dict = &self.dictionary;
        if dict.k_min > dict.k_max {
            anyhow::bail!("dictionary.k_min: {} exceeds k_max {}", dict.k_min, dict.k_max);
        }
        if dict.k_min.abs() > 60 || dict.k_max.abs() > 60 {
            anyhow::bail!("dictionary.k_min/k_max: scales beyond ±60 leave the exact power-of-two range");
        }
        if !(dict.domain_half_width > 0.0) {
            anyhow::bail!(
                "dictionary.domain_half_width: must be positive, got {}",
                dict.domain_half_width
            );
        }
        if dict.atom_cap == 0 {
            anyhow::bail!("dictionary.atom_cap: zero caps out every atom");
        }
        // Coverage: centers sit inside the domain box, so the grid box
        // must extend past it by a few widths of the finest atoms or the
        // outermost atoms lose most of their mass off-grid.
        let finest_width = frameforge_core::frame::lattice_spacing(dict.k_max, d);
        let needed = dict.domain_half_width + 4.0 * finest_width;
        if g.half_width < needed {
            anyhow::bail!(
                "grid.half_width: {} does not cover the dictionary domain plus four atom widths (need at least {needed})",
                g.half_width
            );
        }
        let gr = &self.greedy;
        if gr.steps == 0 {
            anyhow::bail!("greedy.steps: zero steps approximate nothing");
        }
        if let Some(s) = gr.stop_rel {
            if !(s > 0.0 && s < 1.0) {
                anyhow::bail!("greedy.stop_rel: must lie in (0, 1), got {s}");
            }
        }
        if gr.tie_break != "lowest_index" {
            anyhow::bail!(
                "greedy.tie_break: only \"lowest_index\" is implemented, got {:?}",
                gr.tie_break
            );
        }
        let k = &self.kernel;
        if !(k.c > 0.0) || !k.c.is_finite() {
            anyhow::bail!("kernel.c: must be a positive finite number, got {}", k.c);
        }
        if let Some(eps) = k.epsilon {
            let theta = 1.0 / d as f64;
            if !(eps > 0.0 && eps <= theta) {
                anyhow::bail!("kernel.epsilon: must lie in (0, 1/d] = (0, {theta}], got {eps}");
            }
        }
        if k.k_min > k.k_max {
            anyhow::bail!("kernel.k_min: {} exceeds k_max {}", k.k_min, k.k_max);
        }
        if let Some(r) = k.sample_radius {
            if !(r >= 2.0 * g.half_width) {
                anyhow::bail!(
                    "kernel.sample_radius: {r} is below twice the grid half-width ({}); the sampled conditions must see past the box",
                    2.0 * g.half_width
                );
            }
        }
        if k.n_samples == 0 {
            anyhow::bail!("kernel.n_samples: zero samples certify nothing");
        }
        let dg = &self.dagger;
        if dg.m_values.is_empty() {
            anyhow::bail!("dagger.m_values: at least one shift budget is required");
        }
        if dg.m_values.iter().any(|&m| m == 0) {
            anyhow::bail!("dagger.m_values: budgets must be at least 1");
        }
        if dg.m_values.windows(2).any(|w| w[1] <= w[0]) {
            anyhow::bail!("dagger.m_values: budgets must be strictly increasing");
        }
        if !(dg.shift_hi > dg.shift_lo) {
            anyhow::bail!(
                "dagger.shift_lo/shift_hi: [{}, {}] is not a nonempty box",
                dg.shift_lo,
                dg.shift_hi
            );
        }
        match &self.target {
            TargetConfig::Synthetic { n_atoms, coeff_law, .. } => {
                if *n_atoms == 0 {
                    anyhow::bail!("target.n_atoms: a synthetic target needs at least one atom");
                }
                if !["unit", "pow_two", "uniform_signed"].contains(&coeff_law.as_str()) {
                    anyhow::bail!(
                        "target.coeff_law: expected one of unit, pow_two, uniform_signed; got {coeff_law:?}"
                    );
                }
            }
            TargetConfig::Csv { path } => {
                if path.is_empty() {
                    anyhow::bail!("target.path: empty path");
                }
            }
            TargetConfig::Builtin { name } => {
                if !["activation", "center_atom"].contains(&name.as_str()) {
                    anyhow::bail!(
                        "target.name: expected one of activation, center_atom; got {name:?}"
                    );
                }
            }
        }
        if self.output.dir.is_empty() {
            anyhow::bail!("output.dir: empty path");
        }
        Ok(())
    }
}

/// Human- and machine-readable schema for `--print-schema`.
pub fn schema_json() -> serde_json::Value {
    serde_json::json!({
        "seed": {"type": "u64", "default": 42, "doc": "master seed; stage streams derive from it by label"},
        "normalize": {"type": "bool", "default": true, "doc": "rescale the activation to unit grid integral first"},
        "activation": {
            "required": true,
            "tag": "family",
            "families": {
                "gaussian": {"dim": "usize (1..=3)"},
                "osc_sinc": {"alpha": "f64 > 1", "freq": "f64"},
                "radial_cos": {"dim": "usize", "radius": "f64 > 0", "tau": "[f64; dim]"},
                "radial_sinc": {"dim": "usize", "radius": "f64 > 0", "freq": "f64"},
                "rqnn": {"dim": "usize", "radius": "f64 > 0"},
                "shaham_relu": {"dim": "usize"},
                "relu": {},
                "unit_step": {},
                "bump": {},
                "sum_compose": {"dim": "usize", "inner": "activation (1-d)"},
                "sampled": {"path": "CSV with columns x_1,value"}
            }
        },
        "grid": {
            "half_width": {"type": "f64", "default": 8.0},
            "points_per_axis": {"type": "usize", "default": 2048, "min": 8},
            "rule": {"type": "midpoint | gauss_legendre", "default": "gauss_legendre when smooth, midpoint otherwise"}
        },
        "dictionary": {
            "k_min": {"type": "i32", "default": -2},
            "k_max": {"type": "i32", "default": 4},
            "domain_half_width": {"type": "f64", "default": 4.0},
            "atom_cap": {"type": "usize", "default": 1000000}
        },
        "greedy": {
            "steps": {"type": "usize", "default": 12},
            "stop_rel": {"type": "f64 in (0,1) | null", "default": null},
            "tie_break": {"type": "string", "default": "lowest_index"},
            "seed": {"type": "u64 | null", "default": "top-level seed"}
        },
        "kernel": {
            "c": {"type": "f64 > 0", "default": 1.0},
            "epsilon": {"type": "f64 in (0, 1/d] | null", "default": "min(1/d, 0.5)"},
            "k_min": {"type": "i32", "default": -3},
            "k_max": {"type": "i32", "default": 5},
            "sample_radius": {"type": "f64 | null", "default": "2 * grid.half_width"},
            "n_samples": {"type": "usize", "default": 4096},
            "seed": {"type": "u64 | null", "default": "top-level seed"}
        },
        "dagger": {
            "sigma0": {"type": "relu | hat | boxcar", "default": "hat"},
            "m_values": {"type": "[usize], strictly increasing", "default": [9, 17, 33]},
            "shift_lo": {"type": "f64", "default": -4.0},
            "shift_hi": {"type": "f64", "default": 4.0}
        },
        "target": {
            "tag": "kind",
            "kinds": {
                "synthetic": {"n_atoms": "usize >= 1 (default 10)", "coeff_law": "unit | pow_two | uniform_signed (default uniform_signed)", "seed": "u64 | null"},
                "csv": {"path": "CSV with columns x_1..x_d,value aligned to the grid"},
                "builtin": {"name": "activation | center_atom"}
            },
            "default": {"kind": "synthetic", "n_atoms": 10, "coeff_law": "uniform_signed"}
        },
        "output": {"dir": {"type": "string", "default": "out"}}
    })
}
