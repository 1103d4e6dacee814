//! Minimum-energy crossing search on the penalty Lagrangian
//! `L = E_I + λ₀ (E_J − E_I) + Σ λ_k (q_k − q_k⁰)²`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Coordinate, MolecularGeometry};
use crate::scalar::{lit, Real};
use crate::solver::PointSolver;

/// Harmonic restraint on one coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constraint<T: Real> {
    pub coordinate: Coordinate,
    pub target: T,
    pub weight: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MexConfig<T: Real> {
    /// Coordinates that move; the rest stay at the start geometry.
    pub free: Vec<Coordinate>,
    pub lambda0: T,
    pub constraints: Vec<Constraint<T>>,
    pub step_size: T,
    /// Central-difference displacement (bohr or radian).
    pub fd_step: T,
    pub max_iterations: usize,
    /// Stop once `E_J − E_I` falls below this.
    pub gap_tol: T,
    /// Halve the step while `L` would increase.
    pub backtrack: bool,
}

impl<T: Real> Default for MexConfig<T> {
    fn default() -> Self {
        Self {
            free: vec![Coordinate::Rho, Coordinate::Theta],
            lambda0: lit(5.0),
            constraints: Vec::new(),
            step_size: lit(0.1),
            fd_step: lit(1e-3),
            max_iterations: 50,
            gap_tol: lit(1e-3),
            backtrack: true,
        }
    }
}

impl<T: Real> MexConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.free.is_empty() {
            return Err(Error::InvalidConfig("no free coordinates".into()));
        }
        if !(self.step_size > T::zero() && self.fd_step > T::zero() && self.gap_tol > T::zero()) {
            return Err(Error::InvalidConfig(
                "step size, finite-difference step and gap tolerance must be positive".into(),
            ));
        }
        if !(self.lambda0 >= T::zero()) {
            return Err(Error::InvalidConfig("penalty weight must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LagrangianValue<T: Real> {
    pub l: T,
    pub e_i: T,
    pub delta_e: T,
}

/// Evaluates `L` for the `E1`/`E2` pair at `g`.
pub fn lagrangian<T: Real>(
    g: &MolecularGeometry<T>,
    cfg: &MexConfig<T>,
    solver: &PointSolver<T>,
) -> Result<LagrangianValue<T>> {
    let p = solver.solve(g)?;
    let [_, e_i, e_j] = p.energies;
    let delta_e = e_j - e_i;
    let restraint = cfg.constraints.iter().fold(T::zero(), |acc, c| {
        let d = g.get(c.coordinate) - c.target;
        acc + c.weight * d * d
    });
    Ok(LagrangianValue { l: e_i + cfg.lambda0 * delta_e + restraint, e_i, delta_e })
}

/// Central differences of `L`, one pair of solves per free coordinate.
pub fn numerical_gradient<T: Real>(
    g: &MolecularGeometry<T>,
    cfg: &MexConfig<T>,
    solver: &PointSolver<T>,
) -> Result<Vec<T>> {
    let h = cfg.fd_step;
    let jobs: Vec<(usize, T)> = (0..cfg.free.len()).flat_map(|k| [(k, h), (k, -h)]).collect();
    let values: Vec<T> = jobs
        .par_iter()
        .map(|&(k, d)| {
            let c = cfg.free[k];
            let shifted = g.with(c, g.get(c) + d)?;
            lagrangian(&shifted, cfg, solver).map(|v| v.l)
        })
        .collect::<Result<_>>()?;
    Ok(values.chunks(2).map(|pair| (pair[0] - pair[1]) / (h + h)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MexStep<T: Real> {
    pub iter: usize,
    pub geometry: MolecularGeometry<T>,
    pub gap: T,
    pub l: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MexTrace<T: Real> {
    pub steps: Vec<MexStep<T>>,
    pub converged: bool,
}

impl<T: Real> MexTrace<T> {
    pub fn last(&self) -> &MexStep<T> {
        self.steps.last().expect("trace holds the start point")
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("iter,theta_deg,rho_bohr,gap_hartree,L_hartree\n");
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.iter,
                s.geometry.theta_degrees().to_f64(),
                s.geometry.rho().to_f64(),
                s.gap.to_f64(),
                s.l.to_f64()
            );
        }
        out
    }

    /// Aligned columns in the layout of a printed table.
    pub fn table(&self) -> String {
        let mut out = format!("{:>4}  {:>10}  {:>10}  {:>12}\n", "iter", "theta/deg", "rho/bohr", "dE/hartree");
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{:>4}  {:>10.3}  {:>10.4}  {:>12.6}",
                s.iter,
                s.geometry.theta_degrees().to_f64(),
                s.geometry.rho().to_f64(),
                s.gap.to_f64()
            );
        }
        out
    }
}

/// Gradient descent `x ← x − step·∇L` over the free coordinates.
pub fn optimize<T: Real>(
    start: &MolecularGeometry<T>,
    cfg: &MexConfig<T>,
    solver: &PointSolver<T>,
) -> Result<MexTrace<T>> {
    cfg.validate()?;
    if cfg.free.contains(&Coordinate::Theta) && start.rho() == T::zero() {
        return Err(Error::InvalidConfig("theta is undefined at rho = 0; start from rho > 0".into()));
    }
    let mut g = *start;
    let mut value = lagrangian(&g, cfg, solver)?;
    let mut steps = vec![MexStep { iter: 0, geometry: g, gap: value.delta_e, l: value.l }];
    let mut converged = value.delta_e < cfg.gap_tol;
    let mut iter = 0;
    while !converged && iter < cfg.max_iterations {
        iter += 1;
        let grad = numerical_gradient(&g, cfg, solver)?;
        let mut step = cfg.step_size;
        let (next, next_value) = loop {
            let mut trial = g;
            let mut feasible = true;
            for (c, d) in cfg.free.iter().zip(&grad) {
                match trial.with(*c, trial.get(*c) - step * *d) {
                    Ok(t) => trial = t,
                    Err(_) => feasible = false,
                }
            }
            let candidate = if feasible { lagrangian(&trial, cfg, solver).ok() } else { None };
            let accept = match candidate {
                Some(v) => !cfg.backtrack || v.l <= value.l || step < cfg.step_size * lit(1e-6),
                None => false,
            };
            if accept {
                break (trial, candidate.expect("accepted candidate"));
            }
            if step < cfg.step_size * lit(1e-6) {
                return Err(Error::SolverFailure {
                    r: trial.r().to_f64(),
                    rho: trial.rho().to_f64(),
                    theta: trial.theta().to_f64(),
                    reason: "no feasible descent step".into(),
                });
            }
            step *= lit(0.5);
        };
        g = next;
        value = next_value;
        steps.push(MexStep { iter, geometry: g, gap: value.delta_e, l: value.l });
        converged = value.delta_e < cfg.gap_tol;
    }
    Ok(MexTrace { steps, converged })
}
