//! Truncated bosonic Fock spaces: basis descriptors, ladder operators,
//! coherent states with certified truncation, tensor products, expectations.
//!
//! Every vector and matrix carries a `Space` descriptor so that mixing
//! incompatible bases is caught at the call site instead of producing a
//! silently wrong number.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum, poisson_tail_mass, required_cutoff};

/// Tolerance for the Hermitian flag: max|M - M'| over entries.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Maximum coherent-state probability mass allowed above the cutoff.
pub const COHERENT_TAIL_LIMIT: f64 = 1e-10;

/// One factor of a (possibly composite) basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Bosonic mode truncated at `cutoff` quanta (dimension cutoff + 1).
    Fock { cutoff: usize },
    /// Collective-spin sector of `n_atoms` atoms (dimension n_atoms + 1),
    /// indexed by excitation number m + N/2.
    Spin { n_atoms: usize },
}

impl Axis {
    pub fn dim(&self) -> usize {
        match self {
            Axis::Fock { cutoff } => cutoff + 1,
            Axis::Spin { n_atoms } => n_atoms + 1,
        }
    }
}

/// Basis descriptor: an ordered list of axes. In composite indices the
/// leftmost axis varies slowest, matching the Kronecker product convention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Space {
    axes: Vec<Axis>,
}

impl Space {
    pub fn single(axis: Axis) -> Self {
        Space { axes: vec![axis] }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.iter().map(Axis::dim).product()
    }

    /// Composite space with `self`'s axes leftmost (slowest-varying).
    pub fn tensor(&self, other: &Space) -> Space {
        let mut axes = self.axes.clone();
        axes.extend(other.axes.iter().cloned());
        Space { axes }
    }

    /// Per-axis indices for a flat composite index.
    pub fn unravel(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let d = axis.dim();
            out[k] = index % d;
            index /= d;
        }
        out
    }

    /// Flat composite index from per-axis indices.
    pub fn ravel(&self, indices: &[usize]) -> usize {
        assert_eq!(indices.len(), self.axes.len(), "index rank mismatch");
        let mut flat = 0;
        for (axis, &i) in self.axes.iter().zip(indices) {
            debug_assert!(i < axis.dim());
            flat = flat * axis.dim() + i;
        }
        flat
    }
}

/// Single bosonic mode kept up to `cutoff` quanta.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    cutoff: usize,
}

impl FockSpace {
    /// A cutoff below 1 cannot hold even one excitation; reject it.
    pub fn new(cutoff: usize) -> Self {
        assert!(cutoff >= 1, "Fock cutoff must be at least 1");
        FockSpace { cutoff }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn space(&self) -> Space {
        Space::single(Axis::Fock {
            cutoff: self.cutoff,
        })
    }

    /// Cutoff policy for a coherent label: generous enough that the Poisson
    /// tail is far below `COHERENT_TAIL_LIMIT`, verified rather than trusted.
    pub fn adequate_for(alpha_abs: f64) -> Self {
        let c = (alpha_abs * alpha_abs + 8.0 * alpha_abs + 10.0).ceil() as usize;
        FockSpace::new(c.max(1))
    }
}

/// Complex state vector over a `Space`.
#[derive(Clone, Debug)]
pub struct KetVector {
    space: Space,
    amp: DVector<C64>,
}

impl KetVector {
    pub fn new(space: Space, amp: DVector<C64>) -> Result<Self> {
        if space.dim() != amp.len() {
            return Err(Error::SpaceMismatch {
                left: space.dim(),
                right: amp.len(),
            });
        }
        Ok(KetVector { space, amp })
    }

    /// Basis ket with a single unit amplitude.
    pub fn basis_state(space: Space, index: usize) -> Self {
        assert!(index < space.dim(), "basis index out of range");
        let mut amp = DVector::zeros(space.dim());
        amp[index] = C64::new(1.0, 0.0);
        KetVector { space, amp }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amp
    }

    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    pub fn norm(&self) -> f64 {
        self.amp.norm()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self.amp /= C64::new(n, 0.0);
        self
    }

    /// <self|other>.
    pub fn inner(&self, other: &KetVector) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self.amp.dotc(&other.amp))
    }

    /// Kronecker product; `self` becomes the slow (leftmost) factor.
    pub fn tensor(&self, other: &KetVector) -> KetVector {
        let space = self.space.tensor(&other.space);
        let mut amp = DVector::zeros(self.dim() * other.dim());
        for i in 0..self.dim() {
            for j in 0..other.dim() {
                amp[i * other.dim() + j] = self.amp[i] * other.amp[j];
            }
        }
        KetVector { space, amp }
    }
}

/// Complex matrix over a `Space`, with an explicit Hermitian flag.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    space: Space,
    m: DMatrix<C64>,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(space: Space, m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() || space.dim() != m.nrows() {
            return Err(Error::SpaceMismatch {
                left: space.dim(),
                right: m.nrows(),
            });
        }
        Ok(OperatorMatrix {
            space,
            m,
            hermitian: false,
        })
    }

    /// Hermitian-flagged constructor. Panics if the matrix fails the
    /// max|M - M'| <= 1e-12 check: flagging a non-Hermitian matrix is a bug,
    /// not a runtime condition.
    pub fn hermitian(space: Space, m: DMatrix<C64>) -> Self {
        let dev = hermiticity_deviation(&m);
        assert!(
            dev <= HERMITIAN_TOL,
            "matrix flagged Hermitian deviates from its adjoint by {dev:.3e}"
        );
        assert!(m.is_square() && space.dim() == m.nrows(), "dimension mismatch");
        OperatorMatrix {
            space,
            m,
            hermitian: true,
        }
    }

    pub fn identity(space: Space) -> Self {
        let d = space.dim();
        OperatorMatrix {
            space,
            m: DMatrix::identity(d, d),
            hermitian: true,
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix {
            space: self.space.clone(),
            m: self.m.adjoint(),
            hermitian: self.hermitian,
        }
    }

    /// Re-checks hermiticity and sets the flag; panics on failure like
    /// `hermitian`.
    pub fn into_hermitian(self) -> OperatorMatrix {
        OperatorMatrix::hermitian(self.space, self.m)
    }

    /// Kronecker product; `self` is the slow (leftmost) factor.
    pub fn tensor(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix {
            space: self.space.tensor(&other.space),
            m: self.m.kronecker(&other.m),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn apply(&self, psi: &KetVector) -> Result<KetVector> {
        if self.space != psi.space {
            return Err(Error::SpaceMismatch {
                left: self.dim(),
                right: psi.dim(),
            });
        }
        Ok(KetVector {
            space: psi.space.clone(),
            amp: &self.m * &psi.amp,
        })
    }

    /// <psi|M|psi>. The imaginary part of a Hermitian-flagged operator's
    /// expectation is a numerical residue the caller may assert on.
    pub fn expectation(&self, psi: &KetVector) -> Result<C64> {
        if self.space != psi.space {
            return Err(Error::SpaceMismatch {
                left: self.dim(),
                right: psi.dim(),
            });
        }
        Ok(psi.amp.dotc(&(&self.m * &psi.amp)))
    }

    pub fn scale(&self, factor: f64) -> OperatorMatrix {
        OperatorMatrix {
            space: self.space.clone(),
            m: self.m.clone() * C64::new(factor, 0.0),
            hermitian: self.hermitian,
        }
    }

    pub fn add(&self, other: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, other.space, "operator space mismatch in add");
        OperatorMatrix {
            space: self.space.clone(),
            m: &self.m + &other.m,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn sub(&self, other: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, other.space, "operator space mismatch in sub");
        OperatorMatrix {
            space: self.space.clone(),
            m: &self.m - &other.m,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    /// Matrix product. Products of Hermitian factors are not Hermitian in
    /// general, so the flag is dropped.
    pub fn mul(&self, other: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, other.space, "operator space mismatch in mul");
        OperatorMatrix {
            space: self.space.clone(),
            m: &self.m * &other.m,
            hermitian: false,
        }
    }

    pub fn commutator(&self, other: &OperatorMatrix) -> OperatorMatrix {
        self.mul(other).sub(&other.mul(self))
    }
}

pub fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Ladder and number operators of one truncated mode.
pub struct ModeOps {
    pub lower: OperatorMatrix,
    pub raise: OperatorMatrix,
    pub number: OperatorMatrix,
}

/// Builds the annihilation, creation, and number operators on `space`.
/// `lower` carries sqrt(n) at (n-1, n); `number` is stored as the exact
/// integer diagonal rather than raise * lower, whose sqrt(n)^2 entries pick
/// up one ulp of rounding.
pub fn mode_operators(space: &FockSpace) -> ModeOps {
    let d = space.dim();
    let mut lower = DMatrix::<C64>::zeros(d, d);
    for n in 1..d {
        lower[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let raise = lower.adjoint();
    let number = DMatrix::<C64>::from_fn(d, d, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let sp = space.space();
    ModeOps {
        lower: OperatorMatrix::new(sp.clone(), lower).expect("dimensions fixed by construction"),
        raise: OperatorMatrix::new(sp.clone(), raise).expect("dimensions fixed by construction"),
        number: OperatorMatrix::hermitian(sp, number),
    }
}

/// Lifts a single-axis operator to `product`, acting as identity on every
/// other axis.
pub fn embed(op: &OperatorMatrix, product: &Space, axis_index: usize) -> OperatorMatrix {
    let axes = product.axes();
    assert!(axis_index < axes.len(), "axis index out of range");
    assert_eq!(
        op.space().axes(),
        &axes[axis_index..=axis_index],
        "operator axis does not match the target slot"
    );
    let mut acc: Option<OperatorMatrix> = None;
    for (k, axis) in axes.iter().enumerate() {
        let factor = if k == axis_index {
            op.clone()
        } else {
            OperatorMatrix::identity(Space::single(axis.clone()))
        };
        acc = Some(match acc {
            None => factor,
            Some(a) => a.tensor(&factor),
        });
    }
    acc.expect("product space has at least one axis")
}

/// Coherent state |alpha> truncated to `space` and renormalized.
///
/// Fails with `CutoffTooSmall` when more than `COHERENT_TAIL_LIMIT` of the
/// Poisson occupation mass lies above the cutoff, reporting the cutoff that
/// would suffice.
pub fn coherent_state(alpha: C64, space: &FockSpace) -> Result<KetVector> {
    let lambda = alpha.norm_sqr();
    let tail = poisson_tail_mass(lambda, space.cutoff());
    if tail > COHERENT_TAIL_LIMIT {
        return Err(Error::CutoffTooSmall {
            cutoff: space.cutoff(),
            alpha_abs: alpha.norm(),
            tail_mass: tail,
            limit: COHERENT_TAIL_LIMIT,
            required: required_cutoff(lambda, COHERENT_TAIL_LIMIT),
        });
    }
    Ok(KetVector {
        space: space.space(),
        amp: coherent_amplitudes(alpha, space.cutoff()),
    }
    .normalized())
}

/// Raw truncated amplitudes e^{-|alpha|^2/2} alpha^n / sqrt(n!), before
/// renormalization. Exposed so the truncation bookkeeping can be audited.
pub fn coherent_amplitudes(alpha: C64, cutoff: usize) -> DVector<C64> {
    let mut amp = DVector::zeros(cutoff + 1);
    let mut cur = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amp[0] = cur;
    for n in 0..cutoff {
        cur *= alpha / C64::new(((n + 1) as f64).sqrt(), 0.0);
        amp[n + 1] = cur;
    }
    amp
}

/// Mask selecting composite basis states whose total axis occupation is at
/// most `max_total`; used to restrict operator identities to states the
/// cutoff has not corrupted.
pub fn total_occupation_mask(space: &Space, max_total: usize) -> Vec<bool> {
    (0..space.dim())
        .map(|i| space.unravel(i).iter().sum::<usize>() <= max_total)
        .collect()
}

/// Probability carried by Fock levels `levels` of axis `axis_index`,
/// marginalizing everything else. The truncation-escape monitor reads the
/// top two levels through this.
pub fn fock_level_population(psi: &KetVector, axis_index: usize, levels: &[usize]) -> f64 {
    let mut terms = Vec::new();
    for i in 0..psi.dim() {
        let idx = psi.space().unravel(i);
        if levels.contains(&idx[axis_index]) {
            terms.push(psi.amplitudes()[i].norm_sqr());
        }
    }
    pairwise_sum(&terms)
}
