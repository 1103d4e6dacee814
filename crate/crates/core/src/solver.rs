//! Single-point energies `[E0, E1, E2]` from FCI or from the register solver.

use std::fmt;

use crate::cqe::{initial_guess, solve_keyed, CqeConfig};
use crate::error::{Error, Result};
use crate::fci::FciPoint;
use crate::geometry::MolecularGeometry;
use crate::scalar::Real;
use crate::simulator::{mix64, NoiseModel};

#[derive(Clone, Debug, PartialEq)]
pub enum PointSolver<T: Real> {
    Fci,
    Cqe { config: CqeConfig<T>, noise: Option<NoiseModel<T>> },
}

impl<T: Real> PointSolver<T> {
    pub fn cqe() -> Self {
        Self::Cqe { config: CqeConfig::default(), noise: None }
    }

    pub fn noisy(noise: NoiseModel<T>) -> Self {
        Self::Cqe { config: CqeConfig::default(), noise: Some(noise) }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fci => "fci",
            Self::Cqe { noise: None, .. } => "cqe-noiseless",
            Self::Cqe { noise: Some(_), .. } => "cqe-noisy",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::Cqe { noise: Some(n), .. } => Some(n.seed),
            _ => None,
        }
    }
}

impl<T: Real> fmt::Display for PointSolver<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointEnergies<T: Real> {
    /// `[E0, E1, E2]`; `E0` always comes from FCI.
    pub energies: [T; 3],
    /// FCI reference values at the same geometry.
    pub reference: [T; 3],
    pub converged: bool,
    /// Sum over the register solves.
    pub iterations: usize,
    /// Largest final variance over the register solves.
    pub variance: T,
}

impl<T: Real> PointEnergies<T> {
    pub fn gap(&self) -> T {
        self.energies[2] - self.energies[1]
    }
}

/// Readout context for one geometry and target state.
pub fn readout_key<T: Real>(g: &MolecularGeometry<T>, target: usize) -> u64 {
    let bits = [g.r(), g.rho(), g.theta()].map(|x| x.to_f64().to_bits());
    bits.iter().fold(mix64(target as u64), |acc, &b| mix64(acc ^ b))
}

fn failure<T: Real>(g: &MolecularGeometry<T>, reason: impl ToString) -> Error {
    Error::SolverFailure {
        r: g.r().to_f64(),
        rho: g.rho().to_f64(),
        theta: g.theta().to_f64(),
        reason: reason.to_string(),
    }
}

impl<T: Real> PointSolver<T> {
    /// Solves one geometry. Failures carry the geometry.
    pub fn solve(&self, g: &MolecularGeometry<T>) -> Result<PointEnergies<T>> {
        let point = FciPoint::compute(g).map_err(|e| failure(g, e))?;
        self.solve_point(&point)
    }

    pub fn solve_point(&self, point: &FciPoint<T>) -> Result<PointEnergies<T>> {
        let g = &point.geometry;
        let reference = point.energies();
        match self {
            Self::Fci => Ok(PointEnergies {
                energies: reference,
                reference,
                converged: true,
                iterations: 0,
                variance: T::zero(),
            }),
            Self::Cqe { config, noise } => {
                let h = &point.hamiltonian;
                let mut out = [reference[0], T::zero(), T::zero()];
                let mut converged = true;
                let mut iterations = 0;
                let mut variance = T::zero();
                let mut weights = [[T::zero(); 2]; 2];
                let pair = point.fci.crossing_pair();
                for (slot, target) in [1usize, 2].into_iter().enumerate() {
                    let guess = initial_guess(h, target).map_err(|e| failure(g, e))?;
                    let r = solve_keyed(&guess, h, config, noise.as_ref(), readout_key(g, target))
                        .map_err(|e| failure(g, e))?;
                    converged &= r.converged;
                    iterations += r.iterations;
                    variance = variance.max(r.variance);
                    out[target] = r.energy;
                    let v = r.state.real_amplitudes().expect("pure state");
                    for (col, &k) in pair.iter().enumerate() {
                        let fv = point.fci.vector(k);
                        weights[slot][col] = fv.rows(1, 8).dot(&v).abs();
                    }
                }
                // state identity follows the FCI vectors, not the energy order
                if weights[0][1] + weights[1][0] > weights[0][0] + weights[1][1] {
                    out.swap(1, 2);
                }
                Ok(PointEnergies { energies: out, reference, converged, iterations, variance })
            }
        }
    }
}
