//! Small numeric helpers shared across modules: deterministic summation,
//! Poisson weights for coherent-state occupation statistics, and masked
//! matrix comparisons used to exclude truncation-corrupted basis states.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Sums `terms` with a fixed pairwise reduction tree.
///
/// The result depends only on the slice contents, never on thread count or
/// chunking, which is what makes byte-identical output files possible.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    if terms.len() <= 8 {
        let mut acc = 0.0;
        for t in terms {
            acc += t;
        }
        return acc;
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// Poisson weights w_n = e^{-lambda} lambda^n / n! for n in 0..=n_max.
pub fn poisson_weights(lambda: f64, n_max: usize) -> Vec<f64> {
    assert!(lambda >= 0.0, "Poisson mean must be nonnegative");
    let mut w = Vec::with_capacity(n_max + 1);
    let mut cur = (-lambda).exp();
    w.push(cur);
    for n in 0..n_max {
        cur *= lambda / (n as f64 + 1.0);
        w.push(cur);
    }
    w
}

/// Tail mass sum_{n > cutoff} e^{-lambda} lambda^n / n!, summed forward so no
/// cancellation against 1 occurs. Terms are accumulated until they stop
/// contributing at double precision.
pub fn poisson_tail_mass(lambda: f64, cutoff: usize) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    // Walk the recurrence up to the first tail term, then sum outward.
    let mut term = (-lambda).exp();
    for n in 0..=cutoff {
        term *= lambda / (n as f64 + 1.0);
    }
    // Past the mode the terms decay faster than geometrically; run far enough
    // that the remainder is far below any tolerance used in this crate.
    let horizon = (lambda + 60.0 * lambda.sqrt() + 60.0).ceil() as usize;
    let mut n = cutoff + 1;
    let mut total = 0.0;
    loop {
        total += term;
        term *= lambda / (n as f64 + 1.0);
        n += 1;
        if n > cutoff + 1 && n > horizon {
            break;
        }
    }
    total
}

/// Smallest cutoff whose Poisson tail mass is at or below `limit`.
pub fn required_cutoff(lambda: f64, limit: f64) -> usize {
    let mut c = 0;
    while poisson_tail_mass(lambda, c) > limit {
        c += 1;
    }
    c
}

/// Product of square roots of the entries, taken as zero whenever any entry
/// is negative. Encodes ladder matrix-element chains where a negative index
/// means the term annihilates.
pub fn sqrt_chain(entries: &[i64]) -> f64 {
    let mut acc = 1.0;
    for &e in entries {
        if e < 0 {
            return 0.0;
        }
        acc *= (e as f64).sqrt();
    }
    acc
}

/// Largest |a_ij - b_ij| over the whole matrix.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in comparison");
    let mut m: f64 = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        m = m.max((x - y).norm());
    }
    m
}

/// Largest |a_ij - b_ij| restricted to rows and columns whose mask entry is
/// true. Used to assert operator identities away from the truncation edge.
pub fn masked_max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>, mask: &[bool]) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in comparison");
    assert_eq!(a.nrows(), mask.len(), "mask length mismatch");
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        if !mask[j] {
            continue;
        }
        for i in 0..a.nrows() {
            if mask[i] {
                m = m.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
    }
    m
}

/// True when every imaginary part is exactly zero, so a real symmetric
/// eigensolver can be used without any loss.
pub fn is_exactly_real(m: &DMatrix<C64>) -> bool {
    m.iter().all(|z| z.im == 0.0)
}
