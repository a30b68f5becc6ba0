//! Bosonization of the collective spin around the fully polarized state:
//! the spin maps to a second boson mode b through S+ = b† sqrt(N - b†b),
//! and expanding the square root in 1/N turns the model into two coupled
//! oscillators plus a series of small corrections.
//!
//! The leading order diagonalizes in the symmetric/antisymmetric mode
//! combinations, giving closed-form dynamics for coherent states; those
//! closed forms are the quantities every other layer is compared against.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::ToPrimitive;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exact::ModelParams;
use crate::fock::{
    coherent_state, embed, mode_operators, total_occupation_mask, FockSpace, KetVector,
    OperatorMatrix, Space,
};

/// Operator identities are asserted only on basis states at least this far
/// below the cutoff; the top levels are corrupted by truncation.
pub const SAFE_MARGIN: usize = 2;

/// Callers should warn when the excitation fraction exceeds this.
pub const HP_VALIDITY_WARN: f64 = 0.1;

/// q_n in (1 - x)^{1/2} = 1 - sum_{n >= 1} q_n x^n, exactly.
pub fn binomial_sqrt_coefficient(n: usize) -> BigRational {
    assert!(n >= 1, "the expansion starts at order 1");
    // q_1 = 1/2, q_{n+1} = q_n (2n - 1) / (2n + 2).
    let mut q = BigRational::new(BigInt::from(1), BigInt::from(2));
    for k in 1..n {
        q *= BigRational::new(BigInt::from(2 * k as i64 - 1), BigInt::from(2 * k as i64 + 2));
    }
    q
}

pub fn binomial_sqrt_coefficient_f64(n: usize) -> f64 {
    binomial_sqrt_coefficient(n)
        .to_f64()
        .expect("coefficients are tiny rationals")
}

/// The two-mode product space with both single-mode operator sets embedded.
pub struct TwoModeOps {
    pub space: Space,
    pub lower_a: OperatorMatrix,
    pub raise_a: OperatorMatrix,
    pub number_a: OperatorMatrix,
    pub lower_b: OperatorMatrix,
    pub raise_b: OperatorMatrix,
    pub number_b: OperatorMatrix,
}

pub fn two_mode_ops(fock_a: &FockSpace, fock_b: &FockSpace) -> TwoModeOps {
    let space = fock_a.space().tensor(&fock_b.space());
    let a = mode_operators(fock_a);
    let b = mode_operators(fock_b);
    TwoModeOps {
        lower_a: embed(&a.lower, &space, 0),
        raise_a: embed(&a.raise, &space, 0),
        number_a: embed(&a.number, &space, 0),
        lower_b: embed(&b.lower, &space, 1),
        raise_b: embed(&b.raise, &space, 1),
        number_b: embed(&b.number, &space, 1),
        space,
    }
}

/// Diagonal n_a + n_b with exact integer entries; conserved by every term
/// of the series, which makes block evolution available on this space too.
pub fn total_number_operator(fock_a: &FockSpace, fock_b: &FockSpace) -> OperatorMatrix {
    let space = fock_a.space().tensor(&fock_b.space());
    let d = space.dim();
    let m = nalgebra::DMatrix::<C64>::from_fn(d, d, |i, j| {
        if i == j {
            let idx = space.unravel(i);
            C64::new((idx[0] + idx[1]) as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    OperatorMatrix::hermitian(space, m)
}

/// Basis mask for identity checks: total occupation at most
/// min(cutoff) - SAFE_MARGIN.
pub fn safe_mask(fock_a: &FockSpace, fock_b: &FockSpace) -> Vec<bool> {
    let space = fock_a.space().tensor(&fock_b.space());
    let limit = fock_a.cutoff().min(fock_b.cutoff()).saturating_sub(SAFE_MARGIN);
    total_occupation_mask(&space, limit)
}

/// One order of the bosonized series.
pub struct HpTerm {
    pub order: usize,
    /// Scalar prefactor -q_n g / N^{n - 1/2} for n >= 1; 1 for the order-0
    /// Hamiltonian, whose structure is not a single scaled operator.
    pub coefficient: f64,
    pub matrix: OperatorMatrix,
}

/// Order-n term of the expansion. Order 0 is
/// omega a†a + delta b†b + sqrt(N) g (a†b + b†a) - N delta / 2; order
/// n >= 1 is -q_n g N^{-(n-1/2)} (a†(b†b)ⁿb + b†(b†b)ⁿa).
pub fn hp_term(n: usize, params: &ModelParams, fock_a: &FockSpace, fock_b: &FockSpace) -> HpTerm {
    let ops = two_mode_ops(fock_a, fock_b);
    let n_atoms = params.n_atoms as f64;
    if n == 0 {
        let free = ops
            .number_a
            .scale(params.omega)
            .add(&ops.number_b.scale(params.delta));
        let hop = ops
            .raise_a
            .mul(&ops.lower_b)
            .add(&ops.raise_b.mul(&ops.lower_a))
            .scale(params.collective_g())
            .into_hermitian();
        let shift = OperatorMatrix::identity(ops.space.clone())
            .scale(-n_atoms * params.delta / 2.0);
        return HpTerm {
            order: 0,
            coefficient: 1.0,
            matrix: free.add(&hop).add(&shift),
        };
    }
    let q = binomial_sqrt_coefficient_f64(n);
    let coefficient = -q * params.g / (n_atoms.powi(n as i32 - 1) * n_atoms.sqrt());
    let mut nb_pow = OperatorMatrix::identity(ops.space.clone());
    for _ in 0..n {
        nb_pow = nb_pow.mul(&ops.number_b);
    }
    let half = ops.raise_a.mul(&nb_pow).mul(&ops.lower_b);
    let matrix = half
        .add(&half.adjoint())
        .scale(coefficient)
        .into_hermitian();
    HpTerm {
        order: n,
        coefficient,
        matrix,
    }
}

/// Symmetric and antisymmetric lowering operators c1 = (a+b)/sqrt(2),
/// c2 = (a-b)/sqrt(2), which decouple the order-0 Hamiltonian.
pub fn normal_mode_operators(
    fock_a: &FockSpace,
    fock_b: &FockSpace,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if fock_a.cutoff() != fock_b.cutoff() {
        return Err(Error::CutoffMismatch {
            left: fock_a.cutoff(),
            right: fock_b.cutoff(),
        });
    }
    let ops = two_mode_ops(fock_a, fock_b);
    let inv = 1.0 / 2.0_f64.sqrt();
    let c1 = ops.lower_a.add(&ops.lower_b).scale(inv);
    let c2 = ops.lower_a.sub(&ops.lower_b).scale(inv);
    Ok((c1, c2))
}

/// eps_{n1 n2} = n1 (omega + sqrt(N) g) + n2 (omega - sqrt(N) g), the
/// order-0 spectrum with the constant shift left out.
pub fn leading_eigenvalue(n1: usize, n2: usize, params: &ModelParams) -> f64 {
    let big_g = params.collective_g();
    n1 as f64 * (params.omega + big_g) + n2 as f64 * (params.omega - big_g)
}

/// Normalized (c1†)^{n1} (c2†)^{n2) |0,0> / sqrt(n1! n2!) expanded in the
/// bare two-mode basis. Exact on the truncated space as long as the total
/// occupation fits under both cutoffs.
pub fn leading_eigenstate(
    n1: usize,
    n2: usize,
    fock_a: &FockSpace,
    fock_b: &FockSpace,
) -> Result<KetVector> {
    let threshold = fock_a.cutoff().min(fock_b.cutoff());
    if n1 + n2 > threshold {
        return Err(Error::ThresholdExceeded {
            occupation: n1 + n2,
            threshold,
            cutoff: threshold,
        });
    }
    let ops = two_mode_ops(fock_a, fock_b);
    let inv = 1.0 / 2.0_f64.sqrt();
    let c1_dag = ops.raise_a.add(&ops.raise_b).scale(inv);
    let c2_dag = ops.raise_a.sub(&ops.raise_b).scale(inv);
    let mut psi = KetVector::basis_state(ops.space.clone(), 0);
    for _ in 0..n1 {
        psi = c1_dag.apply(&psi)?;
    }
    for _ in 0..n2 {
        psi = c2_dag.apply(&psi)?;
    }
    Ok(psi.normalized())
}

/// Coherent labels of the two normal modes at time t; initial state is the
/// field in |alpha> with all atoms down, i.e. both modes in |alpha/sqrt(2)>.
#[derive(Clone, Copy, Debug)]
pub struct NormalModeState {
    pub label_plus: C64,
    pub label_minus: C64,
    pub params: ModelParams,
}

impl NormalModeState {
    /// Label of the bare field mode: (lambda+ + lambda-)/sqrt(2).
    pub fn a_label(&self) -> C64 {
        (self.label_plus + self.label_minus) / C64::new(2.0_f64.sqrt(), 0.0)
    }

    /// Label of the bosonized atomic mode: (lambda+ - lambda-)/sqrt(2).
    pub fn b_label(&self) -> C64 {
        (self.label_plus - self.label_minus) / C64::new(2.0_f64.sqrt(), 0.0)
    }

    /// Product coherent ket |a_label> ⊗ |b_label> on the truncated space.
    /// A beam-splitter rotation of two coherent states stays a product of
    /// coherent states, so the labels alone carry the full state.
    pub fn materialize(&self, fock_a: &FockSpace, fock_b: &FockSpace) -> Result<KetVector> {
        let a = coherent_state(self.a_label(), fock_a)?;
        let b = coherent_state(self.b_label(), fock_b)?;
        Ok(a.tensor(&b))
    }
}

/// Leading-order evolution of field coherent state alpha with atoms down:
/// each normal mode keeps magnitude |alpha|/sqrt(2) and rotates at
/// omega ± sqrt(N) g.
pub fn evolve_coherent_leading(alpha: C64, params: &ModelParams, t: f64) -> Result<NormalModeState> {
    params.ensure_resonant()?;
    let tilde = alpha / C64::new(2.0_f64.sqrt(), 0.0);
    let big_g = params.collective_g();
    Ok(NormalModeState {
        label_plus: tilde * C64::from_polar(1.0, -(params.omega + big_g) * t),
        label_minus: tilde * C64::from_polar(1.0, -(params.omega - big_g) * t),
        params: *params,
    })
}

/// <a>(t) = alpha e^{-i omega t} cos(sqrt(N) g t).
pub fn mode_amplitude(alpha: C64, params: &ModelParams, t: f64) -> Result<C64> {
    params.ensure_resonant()?;
    Ok(alpha * C64::from_polar(1.0, -params.omega * t) * (params.collective_g() * t).cos())
}

/// <n>(t) = |alpha|^2 cos^2(sqrt(N) g t).
pub fn mean_photons_leading(alpha: C64, params: &ModelParams, t: f64) -> Result<f64> {
    params.ensure_resonant()?;
    Ok(alpha.norm_sqr() * (params.collective_g() * t).cos().powi(2))
}

/// The photon distribution stays Poissonian at leading order, so the
/// variance equals the mean at every time.
pub fn photon_variance_leading(alpha: C64, params: &ModelParams, t: f64) -> Result<f64> {
    mean_photons_leading(alpha, params, t)
}

/// Peak excitation fraction of the atomic mode: max_t <b†b>/(N/2)
/// = |alpha|^2 / (N/2). The bosonization assumes this is small.
pub fn hp_validity(alpha: C64, params: &ModelParams) -> f64 {
    alpha.norm_sqr() / (params.n_atoms as f64 / 2.0)
}
