//! Collective spin of N two-level atoms, restricted to the maximally
//! symmetric sector j = N/2.
//!
//! Basis states are labelled by the projection m = -j..j in ascending order,
//! so index 0 is the all-atoms-down state and index k holds k excited atoms.
//! The sector is closed under the ladder operators: unlike a truncated boson
//! mode, no commutator identity is damaged at the edges.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::fock::{Axis, KetVector, OperatorMatrix, Space};

/// Symmetric sector of `n_atoms` spins 1/2 (dimension n_atoms + 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpinSector {
    n_atoms: usize,
}

impl SpinSector {
    pub fn new(n_atoms: usize) -> Self {
        assert!(n_atoms >= 1, "need at least one atom");
        SpinSector { n_atoms }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.n_atoms + 1
    }

    pub fn space(&self) -> Space {
        Space::single(Axis::Spin {
            n_atoms: self.n_atoms,
        })
    }

    /// Projection quantum number of basis index k.
    pub fn m_of_index(&self, k: usize) -> f64 {
        k as f64 - self.j()
    }
}

/// Collective ladder and projection operators.
pub struct SpinOps {
    pub plus: OperatorMatrix,
    pub minus: OperatorMatrix,
    pub z: OperatorMatrix,
}

/// Raising matrix element out of |j,m>: sqrt(j(j+1) - m(m+1)).
pub fn raising_element(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m + 1.0)).sqrt()
}

/// Builds S+, S-, Sz on the sector's space.
pub fn spin_operators(sector: &SpinSector) -> SpinOps {
    let d = sector.dim();
    let j = sector.j();
    let mut plus = DMatrix::<C64>::zeros(d, d);
    for k in 0..d - 1 {
        let m = sector.m_of_index(k);
        plus[(k + 1, k)] = C64::new(raising_element(j, m), 0.0);
    }
    let minus = plus.adjoint();
    let z = DMatrix::<C64>::from_fn(d, d, |i, jj| {
        if i == jj {
            C64::new(sector.m_of_index(i), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let sp = sector.space();
    SpinOps {
        plus: OperatorMatrix::new(sp.clone(), plus).expect("dimensions fixed by construction"),
        minus: OperatorMatrix::new(sp.clone(), minus).expect("dimensions fixed by construction"),
        z: OperatorMatrix::hermitian(sp, z),
    }
}

/// All atoms in the lower level: |j, m = -j>, basis index 0.
pub fn ground_dicke_state(sector: &SpinSector) -> KetVector {
    KetVector::basis_state(sector.space(), 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::max_abs_diff;
    use nalgebra::DMatrix;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn four_atom_raising_from_two_below_center_is_two() {
        let sector = SpinSector::new(4);
        let ops = spin_operators(&sector);
        // m = -2 sits at index 0 for N = 4.
        assert_eq!(sector.m_of_index(0), -2.0);
        assert_eq!(ops.plus.matrix()[(1, 0)], c(2.0));
    }

    #[test]
    fn single_atom_matches_half_paulis() {
        let ops = spin_operators(&SpinSector::new(1));
        assert_eq!(ops.z.matrix()[(0, 0)], c(-0.5));
        assert_eq!(ops.z.matrix()[(1, 1)], c(0.5));
        assert_eq!(ops.plus.matrix()[(1, 0)], c(1.0));
        assert_eq!(ops.plus.matrix()[(0, 1)], c(0.0));
    }

    #[test]
    fn ladder_commutator_is_twice_z() {
        for n in [1, 2, 5, 12] {
            let ops = spin_operators(&SpinSector::new(n));
            let comm = ops.plus.commutator(&ops.minus);
            let twice_z = ops.z.scale(2.0);
            let dev = max_abs_diff(comm.matrix(), twice_z.matrix());
            assert!(dev <= 1e-12, "N = {n}: deviation {dev:.3e}");
        }
    }

    #[test]
    fn z_ladder_commutator_reproduces_the_ladder() {
        for n in [2, 7] {
            let ops = spin_operators(&SpinSector::new(n));
            let comm = ops.z.commutator(&ops.plus);
            let dev = max_abs_diff(comm.matrix(), ops.plus.matrix());
            assert!(dev <= 1e-12, "N = {n}: deviation {dev:.3e}");
        }
    }

    #[test]
    fn casimir_is_constant_across_the_sector() {
        for n in [1, 3, 8, 20] {
            let sector = SpinSector::new(n);
            let ops = spin_operators(&sector);
            let j = sector.j();
            // S+S- + Sz^2 - Sz acts as j(j+1) on every basis state.
            let casimir = ops
                .plus
                .mul(&ops.minus)
                .add(&ops.z.mul(&ops.z))
                .sub(&ops.z);
            let expect = DMatrix::<C64>::identity(sector.dim(), sector.dim())
                * C64::new(j * (j + 1.0), 0.0);
            let dev = max_abs_diff(casimir.matrix(), &expect);
            assert!(dev <= 1e-11, "N = {n}: deviation {dev:.3e}");
        }
    }

    #[test]
    fn ground_state_is_annihilated_downward_and_lifts_with_weight_n() {
        for n in [1, 4, 25] {
            let sector = SpinSector::new(n);
            let ops = spin_operators(&sector);
            let ground = ground_dicke_state(&sector);
            let down = ops.minus.apply(&ground).unwrap();
            assert_eq!(down.norm(), 0.0);
            // <ground| S- S+ |ground> = N: the collectively enhanced weight
            // the bosonization maps onto sqrt(N) couplings.
            let lifted = ops.plus.apply(&ground).unwrap();
            let w = lifted.inner(&lifted).unwrap();
            assert!((w.re - n as f64).abs() <= 1e-12 * n as f64);
            let z = ops.z.expectation(&ground).unwrap();
            assert_eq!(z.re, -sector.j());
        }
    }
}
