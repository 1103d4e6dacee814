//! Exact diagonalization over the nine determinants.

use nalgebra::{Matrix3, SVector};

use crate::error::Result;
use crate::geometry::MolecularGeometry;
use crate::hamiltonian::{exchange_operator9, Mat9, MolecularHamiltonian, N_DETERMINANTS};
use crate::integrals::{compute_integrals, cross_overlap, IntegralSet};
use crate::scalar::{lit, Real};
use crate::scf::{run_rhf, RhfOptions, ScfResult};

pub type Vec9<T> = SVector<T, 9>;

#[derive(Clone, Debug)]
pub struct FciResult<T: Real> {
    /// Ascending.
    pub energies: Vec9<T>,
    /// Columns are states; each has its largest-magnitude component positive.
    pub vectors: Mat9<T>,
}

/// Makes the largest-magnitude component of `v` positive.
pub fn fix_phase<T: Real>(v: &mut Vec9<T>) {
    let k = v.iamax();
    if v[k] < T::zero() {
        v.neg_mut();
    }
}

pub fn fci_solve<T: Real>(h: &MolecularHamiltonian<T>) -> FciResult<T> {
    let eig = h.h9.symmetric_eigen();
    let mut order: Vec<usize> = (0..N_DETERMINANTS).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal));
    let energies = Vec9::from_fn(|k, _| eig.eigenvalues[order[k]]);
    let mut vectors = Mat9::zeros();
    for (k, &src) in order.iter().enumerate() {
        let mut v: Vec9<T> = eig.eigenvectors.column(src).into_owned();
        fix_phase(&mut v);
        vectors.set_column(k, &v);
    }
    FciResult { energies, vectors }
}

impl<T: Real> FciResult<T> {
    pub fn vector(&self, k: usize) -> Vec9<T> {
        self.vectors.column(k).into_owned()
    }

    /// `⟨v_k|X|v_k⟩` for the label-swap operator: +1 singlet, −1 `M_s = 0` triplet.
    pub fn exchange_parity(&self, k: usize) -> T {
        let v = self.vector(k);
        (v.transpose() * exchange_operator9::<T>() * v)[(0, 0)]
    }

    /// Indices of the two lowest exchange-antisymmetric states.
    ///
    /// These are the pair that is degenerate on the equilateral seam.
    pub fn crossing_pair(&self) -> [usize; 2] {
        let mut found = (0..N_DETERMINANTS).filter(|&k| self.exchange_parity(k) < T::zero());
        let a = found.next().unwrap_or(1);
        let b = found.next().unwrap_or(2);
        [a, b]
    }

    /// `[E0, E1, E2]`: ground state plus the crossing pair.
    pub fn tracked_energies(&self) -> [T; 3] {
        let [a, b] = self.crossing_pair();
        [self.energies[0], self.energies[a], self.energies[b]]
    }

    /// `‖H9 v_k − E_k v_k‖`.
    pub fn residual(&self, h: &MolecularHamiltonian<T>, k: usize) -> T {
        let v = self.vector(k);
        (h.h9 * v - v * self.energies[k]).norm()
    }
}

/// One geometry carried through integrals, SCF, the determinant Hamiltonian and FCI.
#[derive(Clone, Debug)]
pub struct FciPoint<T: Real> {
    pub geometry: MolecularGeometry<T>,
    pub integrals: IntegralSet<T>,
    pub scf: ScfResult<T>,
    pub hamiltonian: MolecularHamiltonian<T>,
    pub fci: FciResult<T>,
}

impl<T: Real> FciPoint<T> {
    /// An unconverged SCF still yields the exact FCI spectrum, so its last iterate is used.
    pub fn compute(geometry: &MolecularGeometry<T>) -> Result<Self> {
        let integrals = compute_integrals(geometry)?;
        let scf = run_rhf(&integrals, &RhfOptions::default()).unwrap_or_else(|e| e.into_result());
        let hamiltonian = MolecularHamiltonian::from_scf(&integrals, &scf);
        let fci = fci_solve(&hamiltonian);
        Ok(Self { geometry: *geometry, integrals, scf, hamiltonian, fci })
    }

    /// `[E0, E1, E2]`.
    pub fn energies(&self) -> [T; 3] {
        self.fci.tracked_energies()
    }

    pub fn gap(&self) -> T {
        let [_, e1, e2] = self.energies();
        e2 - e1
    }
}

/// `⟨ij|kl⟩` between determinants built from the MOs of two geometries.
pub fn determinant_overlap<T: Real>(
    ints_a: &IntegralSet<T>,
    c_a: &Matrix3<T>,
    ints_b: &IntegralSet<T>,
    c_b: &Matrix3<T>,
) -> Mat9<T> {
    let m = c_a.transpose() * cross_overlap(ints_a, ints_b) * c_b;
    Mat9::from_fn(|x, y| m[(x / 3, y / 3)] * m[(x % 3, y % 3)])
}

/// `⟨Ψ_I(a)|Ψ_J(b)⟩` for every pair of FCI states.
pub fn state_overlap<T: Real>(a: &FciPoint<T>, b: &FciPoint<T>) -> Mat9<T> {
    let d = determinant_overlap(&a.integrals, &a.scf.coefficients, &b.integrals, &b.scf.coefficients);
    a.fci.vectors.transpose() * d * b.fci.vectors
}

/// Maps each state of `a` listed in `states` to the state of `b` with the largest overlap.
///
/// Assignment is greedy over `|⟨I_a|J_b⟩|`, largest first, so no target is used twice.
pub fn track_states<T: Real>(a: &FciPoint<T>, b: &FciPoint<T>, states: &[usize]) -> Vec<usize> {
    let o = state_overlap(a, b);
    let mut pairs: Vec<(T, usize, usize)> = Vec::new();
    for (slot, &i) in states.iter().enumerate() {
        for j in 0..N_DETERMINANTS {
            pairs.push((o[(i, j)].abs(), slot, j));
        }
    }
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = vec![usize::MAX; states.len()];
    let mut used = [false; N_DETERMINANTS];
    for (_, slot, j) in pairs {
        if out[slot] == usize::MAX && !used[j] {
            out[slot] = j;
            used[j] = true;
        }
    }
    out
}

/// FCI energies are invariant under any orthogonal mixing of the occupied and virtual MOs.
pub fn fci_with_orbitals<T: Real>(ints: &IntegralSet<T>, c: &Matrix3<T>) -> FciResult<T> {
    let (h, g) = crate::hamiltonian::transform_with(ints, c);
    fci_solve(&crate::hamiltonian::build_hamiltonian_matrices(h, g, ints.e_nuc))
}

/// `true` if the pair indices reported by the two results refer to degenerate energies within `tol`.
pub fn is_degenerate<T: Real>(f: &FciResult<T>, tol: f64) -> bool {
    let [a, b] = f.crossing_pair();
    (f.energies[b] - f.energies[a]).abs() < lit(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn point(r: f64, rho: f64, theta: f64) -> FciPoint<f64> {
        FciPoint::compute(&MolecularGeometry::new(r, rho, theta).unwrap()).unwrap()
    }

    #[test]
    fn spectrum_ascending_orthonormal_with_small_residuals() {
        let p = point(1.0, 2.2, 0.8);
        for k in 1..9 {
            assert!(p.fci.energies[k] >= p.fci.energies[k - 1]);
        }
        assert!((p.fci.vectors.transpose() * p.fci.vectors - Mat9::identity()).amax() < 1e-10);
        for k in 0..9 {
            assert!(p.fci.residual(&p.hamiltonian, k) < 1e-10);
            let v = p.fci.vector(k);
            assert!(v[v.iamax()] > 0.0);
        }
    }

    #[test]
    fn equilateral_pair_is_degenerate() {
        let p = FciPoint::<f64>::compute(&MolecularGeometry::equilateral(1.0)).unwrap();
        assert!(p.gap().abs() < 1e-10);
        assert!(is_degenerate(&p.fci, 1e-10));
    }

    #[test]
    fn exchange_parity_is_plus_or_minus_one() {
        let p = point(1.0, 1.5, 0.3);
        for k in 0..9 {
            let x = p.fci.exchange_parity(k);
            assert!((x.abs() - 1.0).abs() < 1e-10, "{x}");
        }
        assert!(p.fci.exchange_parity(0) > 0.0);
        let [a, b] = p.fci.crossing_pair();
        assert!(a < b);
    }

    #[test]
    fn gap_vanishes_only_at_equilateral_along_c2v() {
        let at = point(1.0, 3f64.sqrt(), FRAC_PI_2);
        assert!(at.gap().abs() < 1e-10);
        for rho in [1.5, 2.0] {
            assert!(point(1.0, rho, FRAC_PI_2).gap() > 1e-3);
        }
    }

    #[test]
    fn self_overlap_is_identity() {
        let p = point(1.0, 1.8, 1.2);
        assert!((state_overlap(&p, &p) - Mat9::identity()).amax() < 1e-10);
        assert_eq!(track_states(&p, &p, &[0, 1, 2]), vec![0, 1, 2]);
    }

    #[test]
    fn nearby_states_overlap_strongly() {
        let a = point(1.0, 2.4, 1.0);
        let b = point(1.0, 2.401, 1.0);
        let o = state_overlap(&a, &b);
        for k in 0..3 {
            assert!(o[(k, k)].abs() > 0.9);
        }
    }
}
