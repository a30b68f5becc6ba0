//! Flat `key = value` run configurations. Parsing and validation collect
//! every problem before failing, so one round trip fixes a config instead of
//! one error per attempt; unknown and inapplicable keys are hard errors
//! because a silently ignored physics parameter is worse than a refusal.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::exact::{ModelParams, RESONANCE_TOL};
use crate::fock::FockSpace;
use crate::hp::hp_validity;
use crate::numeric::{poisson_tail_mass, required_cutoff};
use crate::perturbation::{CorrectedVariant, EigenstateVariant};
use crate::series::format_float;
use num_complex::Complex64 as C64;

/// Tail-mass ceiling accepted for an explicit cutoff override; matches the
/// limit the state constructors enforce at run time.
const TAIL_LIMIT: f64 = 1e-10;

/// Excitation fraction above which the bosonization is flagged as strained.
/// The run still proceeds; the warning travels in the output metadata.
const VALIDITY_WARN: f64 = 0.1;

/// Which pipeline a config drives, with the state parameters it needs.
#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    /// Full model versus the bosonized closed forms for a coherent field.
    Coherent { params: ModelParams, alpha: f64 },
    /// Closed-form two-branch superposition statistics.
    Cat {
        params: ModelParams,
        gamma: f64,
        phi: f64,
    },
    /// Quadratic-plus-cubic reference versus the corrected series and the
    /// occupation-response reconstructions.
    Perturbation { params: ModelParams, alpha: f64 },
    /// Exact-versus-leading deviation as the atom count grows at fixed
    /// collective coupling.
    ConvergenceSweep {
        omega: f64,
        alpha: f64,
        sqrt_n_g: f64,
        n_atoms_list: Vec<usize>,
    },
}

impl Experiment {
    pub fn slug(&self) -> &'static str {
        match self {
            Experiment::Coherent { .. } => "coherent",
            Experiment::Cat { .. } => "cat",
            Experiment::Perturbation { .. } => "perturbation",
            Experiment::ConvergenceSweep { .. } => "convergence_sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Option<OutputFormat> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            _ => None,
        }
    }
}

/// Inclusive time grid; validation guarantees at least two points and a
/// positive span.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.t_end - self.t_start) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|k| self.t_start + step * k as f64)
            .collect()
    }
}

/// A fully resolved run: every default filled in, every precondition either
/// verified or recorded as a warning.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub grid: TimeGrid,
    /// Fock cutoff; resolved from the state amplitude when not overridden.
    pub cutoff: usize,
    /// Target for the certified series truncations.
    pub tolerance: f64,
    pub corrected_variant: CorrectedVariant,
    pub eigenstate_variant: EigenstateVariant,
    pub format: OutputFormat,
    pub out_dir: PathBuf,
    /// 0 delegates to the process-wide default pool.
    pub threads: usize,
    /// Non-fatal findings from validation, echoed into output metadata.
    pub warnings: Vec<String>,
}

/// One `key = value` assignment with its 1-based source line.
#[derive(Clone, Debug)]
pub struct RawPair {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Split a config into assignments. Blank lines and `#` comments are
/// skipped; anything else must contain `=`. Syntax problems are collected
/// and reported together.
pub fn parse_pairs(text: &str) -> Result<Vec<RawPair>> {
    let mut pairs = Vec::new();
    let mut diags = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match trimmed.split_once('=') {
            Some((key, value)) => {
                let key = key.trim().to_string();
                let value = value.trim().to_string();
                if key.is_empty() {
                    diags.push(format!("line {line}: missing key before '='"));
                } else {
                    pairs.push(RawPair { line, key, value });
                }
            }
            None => diags.push(format!("line {line}: expected 'key = value', got {trimmed:?}")),
        }
    }
    if diags.is_empty() {
        Ok(pairs)
    } else {
        Err(Error::Config(diags))
    }
}

/// Typed access to the parsed pairs, accumulating diagnostics instead of
/// failing fast. Keys left untaken at the end are unknown and reported.
struct KeyBag {
    entries: BTreeMap<String, (usize, String)>,
    diags: Vec<String>,
}

impl KeyBag {
    fn new(pairs: Vec<RawPair>) -> Self {
        let mut entries = BTreeMap::new();
        let mut diags = Vec::new();
        for p in pairs {
            if let Some((first_line, _)) = entries.get(&p.key) {
                diags.push(format!(
                    "line {}: key '{}' already set on line {first_line}",
                    p.line, p.key
                ));
            } else {
                entries.insert(p.key, (p.line, p.value));
            }
        }
        KeyBag { entries, diags }
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, v)| v)
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|(line, _)| *line)
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, kind: &str) -> Option<T> {
        let (line, value) = self.entries.remove(key)?;
        match value.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.diags
                    .push(format!("line {line}: '{key}' must be {kind}, got {value:?}"));
                None
            }
        }
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        let v: Option<f64> = self.parsed(key, "a number");
        match v {
            Some(x) if !x.is_finite() => {
                self.diags.push(format!("'{key}' must be finite, got {x}"));
                None
            }
            other => other,
        }
    }

    fn usize(&mut self, key: &str) -> Option<usize> {
        self.parsed(key, "a nonnegative integer")
    }

    fn require(&mut self, key: &str, experiment: &str) -> Option<f64> {
        if !self.entries.contains_key(key) {
            self.diags
                .push(format!("'{key}' is required for the {experiment} experiment"));
            return None;
        }
        self.f64(key)
    }

    fn forbid(&mut self, key: &str, experiment: &str) {
        if let Some((line, _)) = self.entries.remove(key) {
            self.diags.push(format!(
                "line {line}: '{key}' does not apply to the {experiment} experiment"
            ));
        }
    }

    fn finish(mut self) -> Vec<String> {
        for (key, (line, _)) in self.entries {
            self.diags.push(format!("line {line}: unknown key '{key}'"));
        }
        self.diags
    }
}

/// Resolve a config text into a run description, or return every violated
/// constraint at once. Nothing heavier than a Poisson tail is computed here.
pub fn resolve(text: &str) -> Result<RunConfig> {
    let mut bag = KeyBag::new(parse_pairs(text)?);
    let mut warnings = Vec::new();

    let experiment_name = bag.raw("experiment");
    let omega = bag.f64("omega").unwrap_or(1.0);
    let delta = bag.f64("delta").unwrap_or(omega);
    if (omega - delta).abs() > RESONANCE_TOL {
        bag.diags.push(format!(
            "off resonance: |omega - delta| = {:.3e}; the closed forms compared by every \
             experiment assume delta = omega",
            (omega - delta).abs()
        ));
    }

    let t_start = bag.f64("t_start").unwrap_or(0.0);
    let t_end = bag.f64("t_end");
    let n_points = bag.usize("n_points").unwrap_or(200);
    if n_points < 2 {
        bag.diags.push(format!("n_points must be at least 2, got {n_points}"));
    }
    if let Some(t_end) = t_end {
        if t_end <= t_start {
            bag.diags
                .push(format!("t_end = {t_end} must exceed t_start = {t_start}"));
        }
    } else {
        bag.diags.push("'t_end' is required".to_string());
    }

    // These keys are consumed up front because every experiment shares the
    // RunConfig fields; their source lines are kept so the experiment
    // branches can still reject the ones that do not apply to them.
    let line_tolerance = bag.line_of("tolerance");
    let line_cutoff = bag.line_of("cutoff");
    let line_corrected = bag.line_of("corrected_variant");
    let line_eigenstate = bag.line_of("eigenstate_variant");

    let tolerance = bag.f64("tolerance").unwrap_or(1e-10);
    if tolerance <= 0.0 {
        bag.diags
            .push(format!("tolerance must be positive, got {tolerance}"));
    }

    let cutoff_override = bag.usize("cutoff");
    let threads = bag.usize("threads").unwrap_or(0);
    let out_dir = PathBuf::from(bag.raw("out").unwrap_or_else(|| ".".to_string()));

    let format = match bag.raw("format") {
        None => OutputFormat::Csv,
        Some(s) => OutputFormat::parse(&s).unwrap_or_else(|| {
            bag.diags
                .push(format!("format must be csv or json, got {s:?}"));
            OutputFormat::Csv
        }),
    };
    let corrected_variant = match bag.raw("corrected_variant") {
        None => CorrectedVariant::Derived,
        Some(s) => CorrectedVariant::parse(&s).unwrap_or_else(|| {
            bag.diags.push(format!(
                "corrected_variant must be printed, cos2, or derived, got {s:?}"
            ));
            CorrectedVariant::Derived
        }),
    };
    let eigenstate_variant = match bag.raw("eigenstate_variant") {
        None => EigenstateVariant::Derived,
        Some(s) => match s.as_str() {
            "printed" => EigenstateVariant::Printed,
            "derived" => EigenstateVariant::Derived,
            other => {
                bag.diags.push(format!(
                    "eigenstate_variant must be printed or derived, got {other:?}"
                ));
                EigenstateVariant::Derived
            }
        },
    };

    // Per-experiment keys. The state amplitude decides the default cutoff
    // and feeds the validity warning.
    let mut amplitude = 0.0_f64;
    let experiment = match experiment_name.as_deref() {
        Some(name @ ("coherent" | "perturbation")) => {
            bag.forbid("gamma", name);
            bag.forbid("phi", name);
            bag.forbid("sqrt_n_g", name);
            bag.forbid("n_atoms_list", name);
            if name == "coherent" {
                reject_consumed(&mut bag.diags, line_eigenstate, "eigenstate_variant", name);
            }
            let alpha = bag.require("alpha", name).unwrap_or(0.0);
            if alpha < 0.0 {
                bag.diags
                    .push(format!("alpha must be nonnegative, got {alpha}"));
            }
            amplitude = alpha;
            let params = take_params(&mut bag, name, omega, delta);
            if let Some(p) = params {
                warn_validity(&mut warnings, alpha, &p);
                if name == "coherent" {
                    Some(Experiment::Coherent { params: p, alpha })
                } else {
                    Some(Experiment::Perturbation { params: p, alpha })
                }
            } else {
                None
            }
        }
        Some("cat") => {
            bag.forbid("alpha", "cat");
            bag.forbid("sqrt_n_g", "cat");
            bag.forbid("n_atoms_list", "cat");
            reject_consumed(&mut bag.diags, line_cutoff, "cutoff", "cat");
            reject_consumed(&mut bag.diags, line_tolerance, "tolerance", "cat");
            reject_consumed(&mut bag.diags, line_corrected, "corrected_variant", "cat");
            reject_consumed(&mut bag.diags, line_eigenstate, "eigenstate_variant", "cat");
            let gamma = bag.require("gamma", "cat").unwrap_or(0.0);
            if gamma < 0.0 {
                bag.diags
                    .push(format!("gamma must be nonnegative, got {gamma}"));
            }
            let phi = bag.require("phi", "cat").unwrap_or(0.0);
            amplitude = gamma;
            let params = take_params(&mut bag, "cat", omega, delta);
            params.map(|p| {
                warn_validity(&mut warnings, gamma, &p);
                Experiment::Cat {
                    params: p,
                    gamma,
                    phi,
                }
            })
        }
        Some("convergence-sweep") => {
            bag.forbid("gamma", "convergence-sweep");
            bag.forbid("phi", "convergence-sweep");
            bag.forbid("g", "convergence-sweep");
            bag.forbid("n_atoms", "convergence-sweep");
            reject_consumed(&mut bag.diags, line_tolerance, "tolerance", "convergence-sweep");
            reject_consumed(
                &mut bag.diags,
                line_corrected,
                "corrected_variant",
                "convergence-sweep",
            );
            reject_consumed(
                &mut bag.diags,
                line_eigenstate,
                "eigenstate_variant",
                "convergence-sweep",
            );
            let alpha = bag.require("alpha", "convergence-sweep").unwrap_or(0.0);
            if alpha < 0.0 {
                bag.diags
                    .push(format!("alpha must be nonnegative, got {alpha}"));
            }
            amplitude = alpha;
            let sqrt_n_g = bag.require("sqrt_n_g", "convergence-sweep").unwrap_or(0.0);
            if sqrt_n_g < 0.0 {
                bag.diags
                    .push(format!("sqrt_n_g must be nonnegative, got {sqrt_n_g}"));
            }
            let list = parse_atom_list(&mut bag);
            if let Some(n_atoms_list) = list {
                for &n in &n_atoms_list {
                    let p = ModelParams::resonant(omega, sqrt_n_g / (n as f64).sqrt(), n);
                    warn_validity(&mut warnings, alpha, &p);
                }
                Some(Experiment::ConvergenceSweep {
                    omega,
                    alpha,
                    sqrt_n_g,
                    n_atoms_list,
                })
            } else {
                None
            }
        }
        Some(other) => {
            bag.diags.push(format!(
                "experiment must be coherent, cat, perturbation, or convergence-sweep, \
                 got {other:?}"
            ));
            drain_experiment_keys(&mut bag);
            None
        }
        None => {
            bag.diags.push("'experiment' is required".to_string());
            drain_experiment_keys(&mut bag);
            None
        }
    };

    // Cutoff resolution and adequacy, checked before any matrix is built.
    let adequate = FockSpace::adequate_for(amplitude).cutoff();
    let cutoff = cutoff_override.unwrap_or(adequate);
    if matches!(
        experiment,
        Some(Experiment::Coherent { .. })
            | Some(Experiment::Perturbation { .. })
            | Some(Experiment::ConvergenceSweep { .. })
    ) {
        let tail = poisson_tail_mass(amplitude * amplitude, cutoff);
        if tail > TAIL_LIMIT {
            bag.diags.push(
                Error::CutoffTooSmall {
                    cutoff,
                    alpha_abs: amplitude,
                    tail_mass: tail,
                    limit: TAIL_LIMIT,
                    required: required_cutoff(amplitude * amplitude, TAIL_LIMIT),
                }
                .to_string(),
            );
        }
    }

    let diags = bag.finish();
    if !diags.is_empty() {
        return Err(Error::Config(diags));
    }
    Ok(RunConfig {
        experiment: experiment.expect("diagnostics empty implies experiment resolved"),
        grid: TimeGrid {
            t_start,
            t_end: t_end.expect("diagnostics empty implies t_end present"),
            n_points,
        },
        cutoff,
        tolerance,
        corrected_variant,
        eigenstate_variant,
        format,
        out_dir,
        threads,
        warnings,
    })
}

fn reject_consumed(diags: &mut Vec<String>, line: Option<usize>, key: &str, experiment: &str) {
    if let Some(line) = line {
        diags.push(format!(
            "line {line}: '{key}' does not apply to the {experiment} experiment"
        ));
    }
}

/// Without a valid experiment the applicability of the physics keys cannot
/// be judged, so they are removed quietly; the experiment diagnostic is the
/// one that matters.
fn drain_experiment_keys(bag: &mut KeyBag) {
    for key in ["alpha", "gamma", "phi", "g", "n_atoms", "sqrt_n_g", "n_atoms_list"] {
        bag.raw(key);
    }
}

fn take_params(bag: &mut KeyBag, experiment: &str, omega: f64, delta: f64) -> Option<ModelParams> {
    let g = bag.require("g", experiment);
    let n_atoms = match bag.usize("n_atoms") {
        Some(0) => {
            bag.diags.push("n_atoms must be at least 1".to_string());
            None
        }
        Some(n) => Some(n),
        None => {
            bag.diags
                .push(format!("'n_atoms' is required for the {experiment} experiment"));
            None
        }
    };
    let g = g?;
    if g < 0.0 {
        bag.diags.push(format!("g must be nonnegative, got {g}"));
        return None;
    }
    Some(ModelParams {
        omega,
        delta,
        g,
        n_atoms: n_atoms?,
    })
}

fn parse_atom_list(bag: &mut KeyBag) -> Option<Vec<usize>> {
    let raw = match bag.raw("n_atoms_list") {
        Some(r) => r,
        None => {
            bag.diags
                .push("'n_atoms_list' is required for the convergence-sweep experiment".to_string());
            return None;
        }
    };
    let mut list = Vec::new();
    for piece in raw.split(',') {
        match piece.trim().parse::<usize>() {
            Ok(0) => {
                bag.diags
                    .push("n_atoms_list entries must be at least 1".to_string());
                return None;
            }
            Ok(n) => list.push(n),
            Err(_) => {
                bag.diags.push(format!(
                    "n_atoms_list must be comma-separated integers, got {piece:?}"
                ));
                return None;
            }
        }
    }
    if list.len() < 2 {
        bag.diags
            .push("n_atoms_list needs at least two entries to show a trend".to_string());
        return None;
    }
    if !list.windows(2).all(|w| w[0] < w[1]) {
        bag.diags
            .push(format!("n_atoms_list must be strictly increasing, got {list:?}"));
        return None;
    }
    Some(list)
}

fn warn_validity(warnings: &mut Vec<String>, amplitude: f64, params: &ModelParams) {
    let ratio = hp_validity(C64::new(amplitude, 0.0), params);
    if ratio > VALIDITY_WARN {
        warnings.push(format!(
            "excitation fraction |amplitude|^2 / (N/2) = {ratio:.3} exceeds {VALIDITY_WARN}; \
             the bosonized closed forms degrade at this drive (N = {})",
            params.n_atoms
        ));
    }
}

impl RunConfig {
    /// The resolved configuration as ordered key-value text, with floats in
    /// round-trip form. This block makes every output self-describing: feed
    /// the `cfg.*` entries back in as a config and the identical run
    /// reproduces.
    pub fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(format!("cfg.{k}"), v);
        };
        match &self.experiment {
            Experiment::Coherent { params, alpha } => {
                put("experiment", "coherent".to_string());
                put("alpha", format_float(*alpha));
                put_params(&mut put, params);
            }
            Experiment::Cat { params, gamma, phi } => {
                put("experiment", "cat".to_string());
                put("gamma", format_float(*gamma));
                put("phi", format_float(*phi));
                put_params(&mut put, params);
            }
            Experiment::Perturbation { params, alpha } => {
                put("experiment", "perturbation".to_string());
                put("alpha", format_float(*alpha));
                put_params(&mut put, params);
            }
            Experiment::ConvergenceSweep {
                omega,
                alpha,
                sqrt_n_g,
                n_atoms_list,
            } => {
                put("experiment", "convergence-sweep".to_string());
                put("alpha", format_float(*alpha));
                put("omega", format_float(*omega));
                put("delta", format_float(*omega));
                put("sqrt_n_g", format_float(*sqrt_n_g));
                let list: Vec<String> = n_atoms_list.iter().map(|n| n.to_string()).collect();
                put("n_atoms_list", list.join(","));
            }
        }
        put("t_start", format_float(self.grid.t_start));
        put("t_end", format_float(self.grid.t_end));
        put("n_points", self.grid.n_points.to_string());
        if !matches!(self.experiment, Experiment::Cat { .. }) {
            put("cutoff", self.cutoff.to_string());
        }
        if matches!(
            self.experiment,
            Experiment::Coherent { .. } | Experiment::Perturbation { .. }
        ) {
            put("tolerance", format_float(self.tolerance));
            put("corrected_variant", self.corrected_variant.as_str().to_string());
        }
        if matches!(self.experiment, Experiment::Perturbation { .. }) {
            put(
                "eigenstate_variant",
                match self.eigenstate_variant {
                    EigenstateVariant::Printed => "printed".to_string(),
                    EigenstateVariant::Derived => "derived".to_string(),
                },
            );
        }
        // The thread count is deliberately not echoed: results are
        // independent of it, and the files must prove that by being
        // byte-identical across thread settings.
        put("format", self.format.extension().to_string());
        put("out", self.out_dir.display().to_string());
        for (k, w) in self.warnings.iter().enumerate() {
            m.insert(format!("warning.{k}"), w.clone());
        }
        m.insert(
            "library_version".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        );
        m
    }
}

fn put_params(put: &mut impl FnMut(&str, String), params: &ModelParams) {
    put("omega", format_float(params.omega));
    put("delta", format_float(params.delta));
    put("g", format_float(params.g));
    put("n_atoms", params.n_atoms.to_string());
}
