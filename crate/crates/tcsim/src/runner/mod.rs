//! Turns a resolved configuration into output files: builds the states and
//! operators, runs the requested comparison, checks the validity evidence
//! against hard limits, and writes a self-describing table.

pub mod config;

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exact::{
    desk_scale_warning, excitation_operator, observable_series, tc_hamiltonian,
    BlockDecomposition, ModelParams, ObservableSeries, TOP_LEVEL_LIMIT,
};
use crate::fock::{coherent_state, embed, mode_operators, FockSpace};
use crate::hp::mean_photons_leading;
use crate::perturbation::{
    corrected_mean_photons, delta_mean_photons, first_order_reference_series,
    reconstructed_delta_mean_photons, SeriesTruncation,
};
use crate::series::{
    all_pair_summaries, format_float, DataTable, Provenance, RunArtifact, SeriesColumn,
};
use crate::spin::{ground_dicke_state, SpinSector};

pub use config::{resolve, Experiment, OutputFormat, RunConfig, TimeGrid};

/// Hard ceiling on norm drift across a propagated series; a unitary
/// propagator only misses this through a defective decomposition.
pub const NORM_DRIFT_LIMIT: f64 = 1e-10;

/// CLI flags that override the corresponding config keys after resolution.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub corrected_variant: Option<crate::perturbation::CorrectedVariant>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if let Some(v) = self.corrected_variant {
            cfg.corrected_variant = v;
        }
    }
}

/// Run `f` inside a dedicated pool of `threads` workers; 0 keeps the
/// process-wide default. A local pool per run is what makes the output
/// reproducible across `--threads` settings within one process.
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool construction only fails on exotic platforms");
    pool.install(f)
}

/// Execute the configured experiment and return the artifact, without
/// touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<RunArtifact> {
    with_pool(cfg.threads, || match &cfg.experiment {
        Experiment::Coherent { params, alpha } => coherent_artifact(cfg, params, *alpha),
        Experiment::Cat { params, gamma, phi } => cat_artifact(cfg, params, *gamma, *phi),
        Experiment::Perturbation { params, alpha } => perturbation_artifact(cfg, params, *alpha),
        Experiment::ConvergenceSweep {
            omega,
            alpha,
            sqrt_n_g,
            n_atoms_list,
        } => convergence_artifact(cfg, *omega, *alpha, *sqrt_n_g, n_atoms_list),
    })
}

/// Execute and write the artifact into the configured output directory,
/// returning the path. The file name is the experiment slug.
pub fn run(cfg: &RunConfig) -> Result<PathBuf> {
    let artifact = execute(cfg)?;
    write_artifact(cfg, cfg.experiment.slug(), &artifact)
}

pub fn write_artifact(cfg: &RunConfig, name: &str, artifact: &RunArtifact) -> Result<PathBuf> {
    let io_err = |path: &PathBuf, e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| io_err(&cfg.out_dir, e))?;
    let path = cfg
        .out_dir
        .join(format!("{name}.{}", cfg.format.extension()));
    let contents = match cfg.format {
        OutputFormat::Csv => artifact.to_csv_string(),
        OutputFormat::Json => artifact.to_json_string(),
    };
    std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Append a warning to metadata without clobbering the ones validation
/// already recorded.
fn push_warning(metadata: &mut BTreeMap<String, String>, text: String) {
    let k = metadata.keys().filter(|k| k.starts_with("warning.")).count();
    metadata.insert(format!("warning.{k}"), text);
}

fn check_series_validity(
    metadata: &mut BTreeMap<String, String>,
    series: &ObservableSeries,
) -> Result<()> {
    let d = &series.diagnostics;
    metadata.insert("diag.norm_drift_max".into(), format_float(d.norm_drift_max));
    metadata.insert(
        "diag.top_level_mass_max".into(),
        format_float(d.top_level_mass_max),
    );
    metadata.insert(
        "diag.imag_residue_max".into(),
        format_float(d.imag_residue_max),
    );
    if d.norm_drift_max > NORM_DRIFT_LIMIT {
        return Err(Error::ValidityFailure {
            what: "norm drift".into(),
            value: d.norm_drift_max,
            limit: NORM_DRIFT_LIMIT,
        });
    }
    if !d.truncation_ok() {
        return Err(Error::ValidityFailure {
            what: "top-level population".into(),
            value: d.top_level_mass_max,
            limit: TOP_LEVEL_LIMIT,
        });
    }
    Ok(())
}

/// One full-model run: evolve a coherent field over the ground ensemble in
/// excitation blocks, extract photon number and its square.
fn exact_photon_series(
    params: &ModelParams,
    alpha: f64,
    cutoff: usize,
    times: &[f64],
) -> Result<ObservableSeries> {
    let fock = FockSpace::new(cutoff);
    let sector = SpinSector::new(params.n_atoms);
    let h = tc_hamiltonian(params, &fock, &sector);
    let cop = excitation_operator(&fock, &sector);
    let prop = BlockDecomposition::new(&h, &cop)?;
    let psi0 = coherent_state(C64::new(alpha, 0.0), &fock)?
        .tensor(&ground_dicke_state(&sector));
    let space = psi0.space().clone();
    let n_op = embed(&mode_operators(&fock).number, &space, 0);
    let n2_op = n_op.mul(&n_op).into_hermitian();
    observable_series(&prop, &psi0, &[&n_op, &n2_op], times)
}

fn coherent_artifact(cfg: &RunConfig, params: &ModelParams, alpha: f64) -> Result<RunArtifact> {
    let times = cfg.grid.points();
    let mut metadata = cfg.metadata();
    let fock = FockSpace::new(cfg.cutoff);
    let sector = SpinSector::new(params.n_atoms);
    if let Some(w) = desk_scale_warning(&fock, &sector) {
        push_warning(&mut metadata, w);
    }
    let series = exact_photon_series(params, alpha, cfg.cutoff, &times)?;
    check_series_validity(&mut metadata, &series)?;

    let a = C64::new(alpha, 0.0);
    let trunc = SeriesTruncation::for_corrected_series(a, cfg.tolerance)?;
    metadata.insert("diag.corrected_window".into(), trunc.n_max.to_string());
    metadata.insert(
        "diag.corrected_tail_bound".into(),
        format_float(trunc.tail_bound),
    );
    let mut leading = Vec::with_capacity(times.len());
    let mut corrected = Vec::with_capacity(times.len());
    for &t in &times {
        leading.push(mean_photons_leading(a, params, t)?);
        corrected.push(corrected_mean_photons(a, params, t, &trunc, cfg.corrected_variant)?);
    }
    // Var n = <n²> - <n>², from the two exact tracks; the leading closed
    // form predicts variance equal to the mean.
    let variance_exact: Vec<f64> = series.values[1]
        .iter()
        .zip(&series.values[0])
        .map(|(n2, n)| n2 - n * n)
        .collect();

    let table = DataTable::new(
        "t",
        times,
        vec![
            SeriesColumn {
                observable: "n".into(),
                provenance: Provenance::Exact,
                values: series.values[0].clone(),
            },
            SeriesColumn {
                observable: "n".into(),
                provenance: Provenance::Leading,
                values: leading.clone(),
            },
            SeriesColumn {
                observable: "n".into(),
                provenance: Provenance::Corrected,
                values: corrected,
            },
            SeriesColumn {
                observable: "variance".into(),
                provenance: Provenance::Exact,
                values: variance_exact,
            },
            SeriesColumn {
                observable: "variance".into(),
                provenance: Provenance::Leading,
                values: leading,
            },
        ],
    );
    let summaries = all_pair_summaries(&table);
    Ok(RunArtifact {
        metadata,
        table,
        summaries,
    })
}

fn cat_artifact(cfg: &RunConfig, params: &ModelParams, gamma: f64, phi: f64) -> Result<RunArtifact> {
    let times = cfg.grid.points();
    let mut metadata = cfg.metadata();
    let spec = crate::cat::cat_spec(gamma, phi);
    metadata.insert("diag.branch_distance_sq".into(), format_float(spec.delta_sq));
    metadata.insert(
        "diag.deviation_bound".into(),
        format_float(crate::cat::decoherence_bound(&spec)),
    );
    let g = C64::new(gamma, 0.0);
    let n = times.len();
    let mut cols: [Vec<f64>; 5] = std::array::from_fn(|_| Vec::with_capacity(n));
    for &t in &times {
        let m_cat = crate::cat::cat_mean_photons(&spec, params, t)?;
        let m_single = mean_photons_leading(g, params, t)?;
        cols[0].push(m_cat);
        cols[1].push(m_single);
        cols[2].push(crate::cat::cat_second_moment(&spec, params, t)?);
        cols[3].push(m_single * m_single + m_single);
        cols[4].push(crate::cat::decoherence_metric(&spec, params, t)?);
    }
    let [n_cat, n_single, n2_cat, n2_single, deviation] = cols;
    let table = DataTable::new(
        "t",
        times,
        vec![
            SeriesColumn {
                observable: "n".into(),
                provenance: Provenance::Cat,
                values: n_cat,
            },
            SeriesColumn {
                observable: "n".into(),
                provenance: Provenance::Single,
                values: n_single,
            },
            SeriesColumn {
                observable: "n2".into(),
                provenance: Provenance::Cat,
                values: n2_cat,
            },
            SeriesColumn {
                observable: "n2".into(),
                provenance: Provenance::Single,
                values: n2_single,
            },
            SeriesColumn {
                observable: "deviation".into(),
                provenance: Provenance::Cat,
                values: deviation,
            },
        ],
    );
    let summaries = all_pair_summaries(&table);
    Ok(RunArtifact {
        metadata,
        table,
        summaries,
    })
}

fn perturbation_artifact(cfg: &RunConfig, params: &ModelParams, alpha: f64) -> Result<RunArtifact> {
    let times = cfg.grid.points();
    let mut metadata = cfg.metadata();
    let a = C64::new(alpha, 0.0);
    let fock = FockSpace::new(cfg.cutoff);
    let reference = first_order_reference_series(a, params, &fock, &fock, &times)?;
    check_series_validity(&mut metadata, &reference)?;

    let corr_trunc = SeriesTruncation::for_corrected_series(a, cfg.tolerance)?;
    let delta_trunc = SeriesTruncation::for_delta_series(a, params, cfg.tolerance)?;
    metadata.insert("diag.corrected_window".into(), corr_trunc.n_max.to_string());
    metadata.insert(
        "diag.corrected_tail_bound".into(),
        format_float(corr_trunc.tail_bound),
    );
    metadata.insert("diag.delta_window".into(), delta_trunc.n_max.to_string());
    metadata.insert(
        "diag.delta_tail_bound".into(),
        format_float(delta_trunc.tail_bound),
    );

    let n = times.len();
    let mut leading = Vec::with_capacity(n);
    let mut corrected = Vec::with_capacity(n);
    let mut delta_grouped = Vec::with_capacity(n);
    let mut delta_rebuilt = Vec::with_capacity(n);
    for &t in &times {
        leading.push(mean_photons_leading(a, params, t)?);
        corrected.push(corrected_mean_photons(a, params, t, &corr_trunc, cfg.corrected_variant)?);
        delta_grouped.push(delta_mean_photons(a, params, t, &delta_trunc)?);
        delta_rebuilt.push(reconstructed_delta_mean_photons(
            a,
            params,
            t,
            &delta_trunc,
            cfg.eigenstate_variant,
        )?);
    }
    let table = DataTable::new(
        "t",
        times,
        vec![
            SeriesColumn {
                observable: "n".into(),
                provenance: Provenance::Exact,
                values: reference.values[0].clone(),
            },
            SeriesColumn {
                observable: "n".into(),
                provenance: Provenance::Leading,
                values: leading,
            },
            SeriesColumn {
                observable: "n".into(),
                provenance: Provenance::Corrected,
                values: corrected,
            },
            SeriesColumn {
                observable: "delta_n".into(),
                provenance: Provenance::Corrected,
                values: delta_grouped,
            },
            SeriesColumn {
                observable: "delta_n".into(),
                provenance: Provenance::Reconstructed,
                values: delta_rebuilt,
            },
        ],
    );
    let summaries = all_pair_summaries(&table);
    Ok(RunArtifact {
        metadata,
        table,
        summaries,
    })
}

/// Exact-versus-leading envelope deviation per ensemble size, at fixed
/// collective coupling sqrt(N) g so every member shares one oscillation
/// period. The deviation is the bosonization error and shrinks with N.
fn convergence_artifact(
    cfg: &RunConfig,
    omega: f64,
    alpha: f64,
    sqrt_n_g: f64,
    n_atoms_list: &[usize],
) -> Result<RunArtifact> {
    let times = cfg.grid.points();
    let mut metadata = cfg.metadata();
    let a = C64::new(alpha, 0.0);
    let mut gap_max = Vec::with_capacity(n_atoms_list.len());
    let mut gap_rms = Vec::with_capacity(n_atoms_list.len());
    for (k, &n_atoms) in n_atoms_list.iter().enumerate() {
        let params = ModelParams::resonant(omega, sqrt_n_g / (n_atoms as f64).sqrt(), n_atoms);
        let series = exact_photon_series(&params, alpha, cfg.cutoff, &times)?;
        let d = &series.diagnostics;
        metadata.insert(
            format!("diag.norm_drift_max.{n_atoms}"),
            format_float(d.norm_drift_max),
        );
        metadata.insert(
            format!("diag.top_level_mass_max.{n_atoms}"),
            format_float(d.top_level_mass_max),
        );
        if d.norm_drift_max > NORM_DRIFT_LIMIT {
            return Err(Error::ValidityFailure {
                what: format!("norm drift at N = {n_atoms}"),
                value: d.norm_drift_max,
                limit: NORM_DRIFT_LIMIT,
            });
        }
        if !d.truncation_ok() {
            return Err(Error::ValidityFailure {
                what: format!("top-level population at N = {n_atoms}"),
                value: d.top_level_mass_max,
                limit: TOP_LEVEL_LIMIT,
            });
        }
        let mut sq = 0.0;
        let mut worst: f64 = 0.0;
        for (&t, &n_exact) in times.iter().zip(&series.values[0]) {
            let lead = mean_photons_leading(a, &params, t)?;
            let gap = (n_exact - lead).abs();
            worst = worst.max(gap);
            sq += gap * gap;
        }
        gap_max.push(worst);
        gap_rms.push((sq / times.len() as f64).sqrt());
        let _ = k;
    }
    let table = DataTable::new(
        "n_atoms",
        n_atoms_list.iter().map(|&n| n as f64).collect(),
        vec![
            SeriesColumn {
                observable: "leading_gap_max".into(),
                provenance: Provenance::Exact,
                values: gap_max,
            },
            SeriesColumn {
                observable: "leading_gap_rms".into(),
                provenance: Provenance::Exact,
                values: gap_rms,
            },
        ],
    );
    let summaries = all_pair_summaries(&table);
    Ok(RunArtifact {
        metadata,
        table,
        summaries,
    })
}

/// Expand `sweep.<key> = v1,v2,...` axes into the cartesian product of
/// member configs, resolve all of them up front, then run and write each
/// member under a name that spells out its coordinates.
pub fn sweep(text: &str, overrides: &Overrides) -> Result<Vec<PathBuf>> {
    let pairs = config::parse_pairs(text)?;
    let mut axes: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut base = String::new();
    let mut diags = Vec::new();
    for p in &pairs {
        if let Some(key) = p.key.strip_prefix("sweep.") {
            let values: Vec<String> = p
                .value
                .split(',')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            if key.is_empty() || values.is_empty() {
                diags.push(format!(
                    "line {}: sweep axis needs a key and at least one value",
                    p.line
                ));
            } else if axes.insert(key.to_string(), values).is_some() {
                diags.push(format!("line {}: sweep axis '{key}' repeated", p.line));
            }
        } else {
            base.push_str(&format!("{} = {}\n", p.key, p.value));
        }
    }
    if axes.is_empty() {
        diags.push("a sweep needs at least one 'sweep.<key> = v1,v2,...' axis".to_string());
    }
    if !diags.is_empty() {
        return Err(Error::Config(diags));
    }

    // Row-major over the sorted axis keys, so file order is reproducible.
    let keys: Vec<&String> = axes.keys().collect();
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for key in &keys {
        let mut next = Vec::new();
        for combo in &combos {
            for value in &axes[*key] {
                let mut c = combo.clone();
                c.push(((*key).clone(), value.clone()));
                next.push(c);
            }
        }
        combos = next;
    }

    let mut members = Vec::new();
    let mut diags = Vec::new();
    for combo in &combos {
        let mut text = base.clone();
        let mut label = String::new();
        for (k, v) in combo {
            text.push_str(&format!("{k} = {v}\n"));
            label.push_str(&format!("__{k}-{}", sanitize(v)));
        }
        match config::resolve(&text) {
            Ok(mut cfg) => {
                overrides.apply(&mut cfg);
                members.push((label, cfg));
            }
            Err(Error::Config(member_diags)) => {
                diags.extend(
                    member_diags
                        .into_iter()
                        .map(|d| format!("member{label}: {d}")),
                );
            }
            Err(e) => return Err(e),
        }
    }
    if !diags.is_empty() {
        return Err(Error::Config(diags));
    }

    let mut paths = Vec::new();
    for (label, cfg) in &members {
        let artifact = execute(cfg)?;
        let name = format!("{}{label}", cfg.experiment.slug());
        paths.push(write_artifact(cfg, &name, &artifact)?);
    }
    Ok(paths)
}

fn sanitize(value: &str) -> String {
    value
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

/// Re-read written artifacts and recompute their comparison statistics from
/// the data, independent of any summary lines stored in the files.
pub fn report(paths: &[PathBuf]) -> Result<String> {
    let mut out = String::new();
    for path in paths {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let artifact = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => RunArtifact::parse_csv(&text)?,
            Some("json") => RunArtifact::parse_json(&text)?,
            other => {
                return Err(Error::Io {
                    path: path.display().to_string(),
                    message: format!("unsupported extension {other:?}; expected csv or json"),
                })
            }
        };
        out.push_str(&format!("== {}\n", path.display()));
        if let Some(exp) = artifact.metadata.get("cfg.experiment") {
            out.push_str(&format!("experiment = {exp}\n"));
        }
        out.push_str(&format!(
            "rows = {}, index = {}\n",
            artifact.table.index.len(),
            artifact.table.index_name
        ));
        for w in artifact
            .metadata
            .iter()
            .filter(|(k, _)| k.starts_with("warning."))
        {
            out.push_str(&format!("{} = {}\n", w.0, w.1));
        }
        for s in all_pair_summaries(&artifact.table) {
            out.push_str(&format!(
                "{} {} vs {}: max_abs = {:.3e}, rms = {:.3e}\n",
                s.observable,
                s.left.as_str(),
                s.right.as_str(),
                s.max_abs,
                s.rms
            ));
        }
    }
    Ok(out)
}
