//! The release gate: ten end-to-end guarantees, each printed as a single
//! [PASS]/[FAIL] line (visible under --nocapture) and enforced as a test.

use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tcsim::cat::{
    branch_overlap, cat_mean_photons, cat_second_moment, cat_spec, decoherence_bound,
    decoherence_metric, evolve_cat_leading,
};
use tcsim::exact::{
    excitation_operator, observable_series, tc_hamiltonian, BlockDecomposition, ModelParams,
    ObservableSeries, Propagator, SpectralDecomposition,
};
use tcsim::fock::{coherent_state, embed, mode_operators, FockSpace};
use tcsim::hp::{
    hp_term, leading_eigenstate, leading_eigenvalue, mean_photons_leading, safe_mask, two_mode_ops,
};
use tcsim::numeric::masked_max_abs_diff;
use tcsim::perturbation::{
    eigenstate_correction_derived, eigenvalue_correction, h1_normal_mode, numeric_first_order,
};
use tcsim::spin::{ground_dicke_state, SpinSector};

fn gate(name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("[PASS] {name}"),
        Err(why) => {
            println!("[FAIL] {name}: {why}");
            panic!("{name}: {why}");
        }
    }
}

fn ensure(ok: bool, why: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why)
    }
}

/// Full-model <n> and <n^2> for a coherent drive over one collective period
/// sampled at 200 points, the workhorse configuration of the first two
/// checks and the integrity check.
fn envelope_run(n_atoms: usize, g: f64, cutoff: usize) -> (ModelParams, Vec<f64>, ObservableSeries) {
    let params = ModelParams::resonant(1.0, g, n_atoms);
    let big_g = params.collective_g();
    let times: Vec<f64> = (0..200)
        .map(|k| 2.0 * std::f64::consts::PI / big_g * k as f64 / 199.0)
        .collect();
    let fock = FockSpace::new(cutoff);
    let sector = SpinSector::new(n_atoms);
    let h = tc_hamiltonian(&params, &fock, &sector);
    let cop = excitation_operator(&fock, &sector);
    let prop = BlockDecomposition::new(&h, &cop).unwrap();
    let psi0 = coherent_state(C64::new(0.5, 0.0), &fock)
        .unwrap()
        .tensor(&ground_dicke_state(&sector));
    let number = mode_operators(&fock).number;
    let n_op = embed(&number, psi0.space(), 0);
    // Square before embedding: the single-axis product is tiny.
    let n2_op = embed(&number.mul(&number).into_hermitian(), psi0.space(), 0);
    let series = observable_series(&prop, &psi0, &[&n_op, &n2_op], &times).unwrap();
    (params, times, series)
}

fn envelope_gap(params: &ModelParams, times: &[f64], track: &[f64]) -> f64 {
    let alpha = C64::new(0.5, 0.0);
    times
        .iter()
        .zip(track)
        .map(|(&t, &v)| (v - mean_photons_leading(alpha, params, t).unwrap()).abs())
        .fold(0.0_f64, f64::max)
}

#[test]
fn a01_coherent_envelope_tracks_the_closed_form() {
    gate("01 coherent envelope within band, improving with N", || {
        let clock = Instant::now();
        let (params25, times25, series25) = envelope_run(25, 0.1, 24);
        let gap25 = envelope_gap(&params25, &times25, &series25.values[0]);
        let band = 0.08 * 0.25;
        ensure(gap25 <= band, format!("N=25 gap {gap25:.3e} > {band:.3e}"))?;

        let (params100, times100, series100) = envelope_run(100, 0.05, 24);
        let gap100 = envelope_gap(&params100, &times100, &series100.values[0]);
        ensure(
            gap100 < gap25,
            format!("N=100 gap {gap100:.3e} not below N=25 gap {gap25:.3e}"),
        )?;
        let elapsed = clock.elapsed();
        ensure(
            elapsed.as_secs() < 60,
            format!("took {elapsed:.1?}, budget is one minute"),
        )
    });
}

#[test]
fn a02_variance_equals_mean_at_leading_order() {
    gate("02 leading variance equals mean; exact variance in band", || {
        // The evolved leading-order state is coherent in each mode, so its
        // materialized photon variance must equal its mean to truncation
        // accuracy at every instant.
        let params = ModelParams::resonant(1.0, 0.1, 25);
        let alpha = C64::new(0.5, 0.0);
        let fock = FockSpace::new(14);
        let ops = two_mode_ops(&fock, &fock);
        let n2 = ops.number_a.mul(&ops.number_a).into_hermitian();
        for k in 0..8 {
            let t = 1.7 * k as f64;
            let state = tcsim::hp::evolve_coherent_leading(alpha, &params, t)
                .unwrap()
                .materialize(&fock, &fock)
                .unwrap();
            let mean = ops.number_a.expectation(&state).unwrap().re;
            let second = n2.expectation(&state).unwrap().re;
            let variance = second - mean * mean;
            ensure(
                (variance - mean).abs() <= 1e-10,
                format!("t={t}: variance {variance:.3e} vs mean {mean:.3e}"),
            )?;
            let closed = mean_photons_leading(alpha, &params, t).unwrap();
            ensure(
                (mean - closed).abs() <= 1e-10,
                format!("t={t}: materialized mean strays from the closed form"),
            )?;
        }

        // The full model's variance stays inside the same envelope band the
        // mean satisfies.
        let (params, times, series) = envelope_run(25, 0.1, 24);
        let variance: Vec<f64> = series.values[1]
            .iter()
            .zip(&series.values[0])
            .map(|(n2, n)| n2 - n * n)
            .collect();
        let gap = envelope_gap(&params, &times, &variance);
        let band = 0.08 * 0.25;
        ensure(gap <= band, format!("exact variance gap {gap:.3e} > {band:.3e}"))
    });
}

#[test]
fn a03_quadratic_spectrum_is_the_two_oscillator_ladder() {
    gate("03 quadratic spectrum matches the mode ladder", || {
        let params = ModelParams::resonant(1.0, 0.1, 25);
        let fock = FockSpace::new(12);
        let h0 = hp_term(0, &params, &fock, &fock).matrix;
        let eig = SpectralDecomposition::new(&h0).map_err(|e| e.to_string())?;
        let offset = -(params.n_atoms as f64) * params.delta / 2.0;

        // Closed-form eigenpairs: exact on the truncated space whenever the
        // total occupation fits, so the residual bound is strict.
        let limit = fock.cutoff() - 2;
        let mut worst_residual = 0.0_f64;
        for n1 in 0..=limit {
            for n2 in 0..=(limit - n1) {
                let energy = offset + leading_eigenvalue(n1, n2, &params);
                let ket = leading_eigenstate(n1, n2, &fock, &fock).unwrap();
                let pushed = h0.apply(&ket).unwrap();
                let residual = (pushed.amplitudes() - ket.amplitudes().scale(energy)).norm();
                worst_residual = worst_residual.max(residual);
            }
        }
        ensure(
            worst_residual <= 1e-10,
            format!("eigenpair residual {worst_residual:.3e} > 1e-10"),
        )?;

        // Every safe-subspace ladder energy appears in the matrix spectrum,
        // with multiplicity.
        let mut predicted = Vec::new();
        for n1 in 0..=limit {
            for n2 in 0..=(limit - n1) {
                predicted.push(offset + leading_eigenvalue(n1, n2, &params));
            }
        }
        let mut used = vec![false; h0.dim()];
        let mut worst_gap = 0.0_f64;
        for &p in &predicted {
            let mut best: Option<(usize, f64)> = None;
            for (k, &ev) in eig.eigenvalues().iter().enumerate() {
                if !used[k] {
                    let gap = (ev - p).abs();
                    if best.map_or(true, |(_, g)| gap < g) {
                        best = Some((k, gap));
                    }
                }
            }
            let (k, gap) = best.ok_or("ran out of matrix eigenvalues")?;
            used[k] = true;
            worst_gap = worst_gap.max(gap);
        }
        ensure(
            worst_gap <= 1e-9,
            format!("spectrum mismatch {worst_gap:.3e} > 1e-9 over {} levels", predicted.len()),
        )
    });
}

#[test]
fn a04_series_terms_have_the_stated_shape_and_coefficients() {
    gate("04 series terms carry q = 1/2, 1/8, 1/16; basis change holds", || {
        let params = ModelParams::resonant(1.0, 0.1, 16);
        let fock = FockSpace::new(8);
        let ops = two_mode_ops(&fock, &fock);
        let n_atoms = params.n_atoms as f64;
        for (n, q) in [(1usize, 0.5), (2, 0.125), (3, 0.0625)] {
            let term = hp_term(n, &params, &fock, &fock).matrix;
            // Independent rebuild from raw ladder matrices and the literal
            // coefficient.
            let mut nb_pow = ops.number_b.clone();
            for _ in 1..n {
                nb_pow = nb_pow.mul(&ops.number_b);
            }
            let half = ops.raise_a.mul(&nb_pow).mul(&ops.lower_b);
            let scale = -q * params.g * n_atoms.powf(0.5 - n as f64);
            let reference = half.add(&half.adjoint()).scale(scale);
            let diff = (term.matrix() - reference.matrix()).norm();
            ensure(
                diff <= 1e-12,
                format!("order {n}: rebuild differs by {diff:.3e}"),
            )?;
        }

        // The cubic term written in the normal-mode basis agrees with the
        // ladder form away from the truncation edge.
        let in_modes = h1_normal_mode(&params, &fock, &fock).map_err(|e| e.to_string())?;
        let in_ladders = hp_term(1, &params, &fock, &fock).matrix;
        let mask = safe_mask(&fock, &fock);
        let gap = masked_max_abs_diff(in_modes.matrix(), in_ladders.matrix(), &mask);
        ensure(gap <= 1e-10, format!("basis change differs by {gap:.3e}"))
    });
}

#[test]
fn a05_first_order_corrections_match_the_oracle_and_scale() {
    gate("05 level shifts, mixing, and 1/sqrt(N), 1/N scaling", || {
        let params = ModelParams::resonant(1.0, 0.1, 25);
        let fock = FockSpace::new(14);
        let h1 = hp_term(1, &params, &fock, &fock).matrix;

        // Closed-form shift against the diagonal matrix element on every
        // level with total occupation at most 10: 66 levels.
        let mut checked = 0;
        for n1 in 0..=10usize {
            for n2 in 0..=(10 - n1) {
                let ket = leading_eigenstate(n1, n2, &fock, &fock).unwrap();
                let diag = ket.inner(&h1.apply(&ket).unwrap()).unwrap().re;
                let closed = eigenvalue_correction(n1, n2, &params);
                ensure(
                    (diag - closed).abs() <= 1e-9,
                    format!("shift ({n1},{n2}): closed {closed:.3e} vs diagonal {diag:.3e}"),
                )?;
                checked += 1;
            }
        }
        ensure(checked >= 50, format!("only {checked} levels checked"))?;

        // Mixing coefficients against the numeric first-order oracle.
        for n1 in 0..=6usize {
            for n2 in 0..=(6 - n1) {
                let numeric = numeric_first_order(&params, &fock, &fock, (n1, n2))
                    .map_err(|e| format!("oracle at ({n1},{n2}): {e}"))?;
                let closed = eigenstate_correction_derived(n1, n2, params.n_atoms);
                for (label, c) in &closed {
                    let got = numeric
                        .eigenvector
                        .iter()
                        .find(|(l, _)| l == label)
                        .map(|(_, v)| *v)
                        .unwrap_or(0.0);
                    ensure(
                        (c - got).abs() <= 1e-8,
                        format!("mixing ({n1},{n2})->{label:?}: {c:.3e} vs {got:.3e}"),
                    )?;
                }
                for (label, v) in &numeric.eigenvector {
                    let claimed = closed
                        .iter()
                        .find(|(l, _)| l == label)
                        .map(|(_, c)| *c)
                        .unwrap_or(0.0);
                    ensure(
                        (claimed - v).abs() <= 1e-8,
                        format!("oracle finds ({n1},{n2})->{label:?} = {v:.3e}, closed form {claimed:.3e}"),
                    )?;
                }
            }
        }

        // Quadrupling N must halve the shift and quarter the mixing.
        let level = (3usize, 1usize);
        let sizes = [16usize, 64, 256];
        let shifts: Vec<f64> = sizes
            .iter()
            .map(|&n| eigenvalue_correction(level.0, level.1, &ModelParams::resonant(1.0, 0.1, n)))
            .collect();
        let mixes: Vec<f64> = sizes
            .iter()
            .map(|&n| eigenstate_correction_derived(level.0, level.1, n)[0].1)
            .collect();
        for w in shifts.windows(2) {
            let ratio = w[0] / w[1];
            ensure(
                (ratio - 2.0).abs() <= 1e-6 * 2.0,
                format!("shift ratio {ratio} not 2"),
            )?;
        }
        for w in mixes.windows(2) {
            let ratio = w[0] / w[1];
            ensure(
                (ratio - 4.0).abs() <= 1e-6 * 4.0,
                format!("mixing ratio {ratio} not 4"),
            )?;
        }
        Ok(())
    });
}

#[test]
fn a06_cat_normalization_identity_holds_at_random() {
    gate("06 normalization identity on 200 random superpositions", || {
        let mut rng = ChaCha8Rng::seed_from_u64(601);
        for _ in 0..200 {
            let gamma = rng.gen_range(0.0..=5.0);
            let phi = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let spec = cat_spec(gamma, phi);
            let identity = 2.0 * spec.norm_sq * (1.0 + branch_overlap(gamma, phi).re);
            ensure(
                (identity - 1.0).abs() <= 1e-12,
                format!("gamma={gamma:.3}, phi={phi:.3}: identity off by {:.3e}", identity - 1.0),
            )?;
        }
        Ok(())
    });
}

#[test]
fn a07_cat_moments_match_materialized_states_and_limits() {
    gate("07 cat moments vs materialized kets; degenerate limits", || {
        let params = ModelParams::resonant(1.0, 0.1, 25);
        let mut rng = ChaCha8Rng::seed_from_u64(701);
        for _ in 0..20 {
            let gamma = rng.gen_range(0.3..=1.5);
            let phi = rng.gen_range(0.0..std::f64::consts::PI);
            let t = rng.gen_range(0.0..4.0);
            let spec = cat_spec(gamma, phi);
            let fock = FockSpace::adequate_for(1.5);
            let ket = evolve_cat_leading(&spec, &params, t)
                .unwrap()
                .materialize(&fock, &fock)
                .map_err(|e| e.to_string())?;
            let ops = two_mode_ops(&fock, &fock);
            let mean = ops.number_a.expectation(&ket).unwrap().re;
            let closed = cat_mean_photons(&spec, &params, t).unwrap();
            ensure(
                (mean - closed).abs() <= 1e-8,
                format!("mean at gamma={gamma:.3}, phi={phi:.3}, t={t:.3}: {mean} vs {closed}"),
            )?;
            let second = ops
                .number_a
                .mul(&ops.number_a)
                .into_hermitian()
                .expectation(&ket)
                .unwrap()
                .re;
            let closed2 = cat_second_moment(&spec, &params, t).unwrap();
            ensure(
                (second - closed2).abs() <= 1e-8,
                format!("second moment at gamma={gamma:.3}, phi={phi:.3}, t={t:.3}"),
            )?;
        }

        // Collapsed-branch and distant-branch limits reduce to one coherent
        // state, to relative machine accuracy.
        let close = |got: f64, want: f64| (got - want).abs() <= 1e-15 * want.max(1.0);
        for (gamma, phi) in [(1.3, 0.0), (5.0, std::f64::consts::FRAC_PI_2)] {
            let spec = cat_spec(gamma, phi);
            if phi != 0.0 {
                ensure(spec.delta_sq >= 50.0, format!("distance {} too small", spec.delta_sq))?;
            }
            for k in 0..6 {
                let t = 0.9 * k as f64;
                let single = mean_photons_leading(C64::new(gamma, 0.0), &params, t).unwrap();
                let got = cat_mean_photons(&spec, &params, t).unwrap();
                ensure(
                    close(got, single),
                    format!("mean limit gamma={gamma}, phi={phi:.3}, t={t}: {got} vs {single}"),
                )?;
                let got2 = cat_second_moment(&spec, &params, t).unwrap();
                ensure(
                    close(got2, single * single + single),
                    format!("second-moment limit gamma={gamma}, phi={phi:.3}, t={t}"),
                )?;
            }
        }
        Ok(())
    });
}

#[test]
fn a08_branch_distance_suppresses_the_deviation_metric() {
    gate("08 deviation peak falls with distance and obeys its bound", || {
        let params = ModelParams::resonant(1.0, 0.1, 25);
        let period = 2.0 * std::f64::consts::PI / params.collective_g();
        let grid: Vec<f64> = (0..=400).map(|k| 1.5 * period * k as f64 / 400.0).collect();
        let mut last = f64::INFINITY;
        for gamma in [0.5, 1.0, 2.0, 4.0] {
            let spec = cat_spec(gamma, std::f64::consts::FRAC_PI_4);
            let bound = decoherence_bound(&spec);
            let mut peak = 0.0_f64;
            for &t in &grid {
                let dev = decoherence_metric(&spec, &params, t).unwrap();
                ensure(
                    dev <= bound,
                    format!("gamma={gamma}, t={t:.3}: deviation {dev:.3e} above bound {bound:.3e}"),
                )?;
                peak = peak.max(dev);
            }
            ensure(
                peak < last,
                format!("peak at gamma={gamma} is {peak:.3e}, not below {last:.3e}"),
            )?;
            last = peak;
        }
        Ok(())
    });
}

#[test]
fn a09_propagator_integrity_on_the_workhorse_run() {
    gate("09 norm, conservation, semigroup, blocks vs direct", || {
        let params = ModelParams::resonant(1.0, 0.1, 25);
        let fock = FockSpace::new(24);
        let sector = SpinSector::new(params.n_atoms);
        let h = tc_hamiltonian(&params, &fock, &sector);
        let cop = excitation_operator(&fock, &sector);
        let blocks = BlockDecomposition::new(&h, &cop).map_err(|e| e.to_string())?;
        let psi0 = coherent_state(C64::new(0.5, 0.0), &fock)
            .unwrap()
            .tensor(&ground_dicke_state(&sector));

        let (_, _, series) = envelope_run(25, 0.1, 24);
        ensure(
            series.diagnostics.norm_drift_max <= 1e-10,
            format!("norm drift {:.3e}", series.diagnostics.norm_drift_max),
        )?;

        let c0 = cop.expectation(&psi0).unwrap().re;
        let mut drift = 0.0_f64;
        for k in 0..50 {
            let psi = blocks.propagate(&psi0, 0.35 * k as f64).unwrap();
            drift = drift.max((cop.expectation(&psi).unwrap().re - c0).abs());
        }
        ensure(drift <= 1e-10, format!("conservation drift {drift:.3e}"))?;

        let mut semigroup = 0.0_f64;
        for (t1, t2) in [(0.7, 1.9), (3.0, 0.45), (5.2, 5.2)] {
            let stepped = blocks
                .propagate(&blocks.propagate(&psi0, t1).unwrap(), t2)
                .unwrap();
            let direct = blocks.propagate(&psi0, t1 + t2).unwrap();
            semigroup = semigroup.max((stepped.amplitudes() - direct.amplitudes()).norm());
        }
        ensure(semigroup <= 1e-9, format!("semigroup defect {semigroup:.3e}"))?;

        let full = SpectralDecomposition::new(&h).map_err(|e| e.to_string())?;
        let mut agreement = 0.0_f64;
        for &t in &[0.8, 4.4, 11.0] {
            let a = blocks.propagate(&psi0, t).unwrap();
            let b = full.propagate(&psi0, t).unwrap();
            agreement = agreement.max((a.amplitudes() - b.amplitudes()).norm());
        }
        ensure(
            agreement <= 1e-9,
            format!("block vs direct distance {agreement:.3e}"),
        )
    });
}

#[test]
fn a10_outputs_are_byte_identical_across_thread_counts() {
    gate("10 identical files at 1, 4, and 8 threads", || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut bytes: Vec<Vec<u8>> = Vec::new();
        for threads in [1usize, 4, 8] {
            let text = format!(
                "\
experiment = coherent
n_atoms = 25
g = 0.1
alpha = 0.5
cutoff = 24
t_end = 12.566370614359172
n_points = 40
threads = {threads}
out = {}
",
                dir.path().display()
            );
            let cfg = tcsim::runner::resolve(&text).map_err(|e| e.to_string())?;
            let path = tcsim::runner::run(&cfg).map_err(|e| e.to_string())?;
            bytes.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure(bytes[0] == bytes[1], "1-thread and 4-thread files differ".into())?;
        ensure(bytes[1] == bytes[2], "4-thread and 8-thread files differ".into())
    });
}
