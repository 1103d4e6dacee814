//! Closed-shell restricted Hartree–Fock for two electrons in three orbitals.

use std::fmt;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::integrals::IntegralSet;
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug)]
pub struct RhfOptions<T: Real> {
    pub max_iter: usize,
    /// Energy change threshold (hartree).
    pub e_tol: T,
    /// Frobenius norm threshold on the commutator `FDS − SDF`.
    pub d_tol: T,
    /// Fraction of the previous density mixed into the next one.
    pub damping: T,
}

impl<T: Real> Default for RhfOptions<T> {
    fn default() -> Self {
        Self { max_iter: 200, e_tol: lit(1e-10), d_tol: lit(1e-8), damping: T::zero() }
    }
}

#[derive(Clone, Debug)]
pub struct ScfResult<T: Real> {
    /// MO coefficients, one column per orbital, ascending orbital energy.
    pub coefficients: Matrix3<T>,
    pub orbital_energies: Vector3<T>,
    /// Total RHF energy including nuclear repulsion.
    pub energy: T,
    pub converged: bool,
    pub iterations: usize,
    pub density: Matrix3<T>,
}

/// Returned when the iteration limit is hit; `last` is still a usable orbital set.
#[derive(Clone, Debug)]
pub struct ScfNotConverged<T: Real> {
    pub last: ScfResult<T>,
}

impl<T: Real> fmt::Display for ScfNotConverged<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SCF did not converge after {} iterations (E = {})", self.last.iterations, self.last.energy)
    }
}

impl<T: Real> std::error::Error for ScfNotConverged<T> {}

impl<T: Real> ScfNotConverged<T> {
    pub fn into_result(self) -> ScfResult<T> {
        self.last
    }
}

/// Symmetric (Löwdin) orthogonalizer `S^{-1/2}`.
pub fn lowdin<T: Real>(s: &Matrix3<T>) -> Matrix3<T> {
    let eig = SymmetricEigen::new(*s);
    let inv_sqrt = eig.eigenvalues.map(|v| T::one() / v.sqrt());
    eig.eigenvectors * Matrix3::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose()
}

/// Diagonalizes `F` in the orthogonal basis, returning ascending energies and AO coefficients.
fn roothaan_step<T: Real>(fock: &Matrix3<T>, x: &Matrix3<T>) -> (Vector3<T>, Matrix3<T>) {
    let fp = x.transpose() * fock * x;
    let eig = SymmetricEigen::new((fp + fp.transpose()) * lit::<T>(0.5));
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let energies = Vector3::from_fn(|i, _| eig.eigenvalues[order[i]]);
    let cp = Matrix3::from_fn(|r, c| eig.eigenvectors[(r, order[c])]);
    (energies, x * cp)
}

fn fock_matrix<T: Real>(ints: &IntegralSet<T>, density: &Matrix3<T>) -> Matrix3<T> {
    let h = ints.core_hamiltonian();
    Matrix3::from_fn(|p, q| {
        let mut v = h[(p, q)];
        for r in 0..3 {
            for s in 0..3 {
                v += density[(r, s)] * (ints.eri.get(p, q, r, s) - lit::<T>(0.5) * ints.eri.get(p, r, q, s));
            }
        }
        v
    })
}

fn closed_shell_density<T: Real>(c: &Matrix3<T>) -> Matrix3<T> {
    let occ = c.column(0);
    occ * occ.transpose() * lit::<T>(2.0)
}

fn electronic_energy<T: Real>(ints: &IntegralSet<T>, density: &Matrix3<T>, fock: &Matrix3<T>) -> T {
    (density.component_mul(&(ints.core_hamiltonian() + fock))).sum() * lit(0.5) + ints.e_nuc
}

/// RHF from the core-Hamiltonian guess.
pub fn run_rhf<T: Real>(ints: &IntegralSet<T>, opts: &RhfOptions<T>) -> Result<ScfResult<T>, ScfNotConverged<T>> {
    let x = lowdin(&ints.overlap);
    let (_, c) = roothaan_step(&ints.core_hamiltonian(), &x);
    run_rhf_from(ints, opts, closed_shell_density(&c))
}

/// RHF starting from a given AO density.
pub fn run_rhf_from<T: Real>(
    ints: &IntegralSet<T>,
    opts: &RhfOptions<T>,
    initial_density: Matrix3<T>,
) -> Result<ScfResult<T>, ScfNotConverged<T>> {
    let x = lowdin(&ints.overlap);
    let s = ints.overlap;
    let mut density = initial_density;
    let mut last_energy: Option<T> = None;
    let mut converged = false;
    let mut iterations = 0;
    let (mut energies, mut coeffs);
    loop {
        iterations += 1;
        let fock = fock_matrix(ints, &density);
        let energy = electronic_energy(ints, &density, &fock);
        let commutator = (fock * density * s - s * density * fock).norm();
        (energies, coeffs) = roothaan_step(&fock, &x);
        if let Some(prev) = last_energy {
            if (energy - prev).abs() < opts.e_tol && commutator < opts.d_tol {
                converged = true;
            }
        }
        if converged || iterations >= opts.max_iter {
            break;
        }
        last_energy = Some(energy);
        let fresh = closed_shell_density(&coeffs);
        density = fresh * (T::one() - opts.damping) + density * opts.damping;
    }
    let fock = fock_matrix(ints, &density);
    let energy = electronic_energy(ints, &density, &fock);
    let (energies, coeffs) = canonicalize(ints, &fock, energies, coeffs);
    let result = ScfResult { coefficients: coeffs, orbital_energies: energies, energy, converged, iterations, density };
    if converged {
        Ok(result)
    } else {
        Err(ScfNotConverged { last: result })
    }
}

/// Fixes rotations inside degenerate orbital blocks and the sign of every MO.
///
/// Degenerate blocks are diagonalized against the dipole along `y`, the axis
/// through atom 3, which commutes with the isosceles mirror; each MO is then
/// signed so its largest AO coefficient is positive.
fn canonicalize<T: Real>(
    ints: &IntegralSet<T>,
    fock: &Matrix3<T>,
    mut energies: Vector3<T>,
    mut coeffs: Matrix3<T>,
) -> (Vector3<T>, Matrix3<T>) {
    let tol = lit::<T>(1e-9).max(T::default_epsilon() * lit(100.0));
    let probe = ints.dipole_matrix(1);
    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3 && (energies[end] - energies[start]).abs() < tol {
            end += 1;
        }
        if end - start > 1 {
            let n = end - start;
            let block = coeffs.columns(start, n).into_owned();
            let pm = block.transpose() * probe * &block;
            let eig = SymmetricEigen::new((pm.clone() + pm.transpose()) * lit::<T>(0.5));
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
            let rotated = block * eig.eigenvectors;
            for (k, &o) in order.iter().enumerate() {
                coeffs.set_column(start + k, &rotated.column(o));
            }
            for k in start..end {
                let c = coeffs.column(k);
                energies[k] = (c.transpose() * fock * c)[(0, 0)];
            }
        }
        start = end;
    }
    for k in 0..3 {
        let col = coeffs.column(k);
        let max = col.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let lead = col.iter().position(|v| v.abs() >= max - max * lit(1e-10)).unwrap_or(0);
        if col[lead] < T::zero() {
            coeffs.column_mut(k).neg_mut();
        }
    }
    (energies, coeffs)
}
