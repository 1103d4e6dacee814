//! Variance-minimizing contracted eigensolver on the register.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SVector};

use crate::error::{Error, Result};
use crate::hamiltonian::{compact_basis, Mat8, MolecularHamiltonian};
use crate::scalar::{lit, Real};
use crate::simulator::{
    apply_noise_channel, apply_unitary, expectation, measure_2rdm, readout_expectation, unitary, Exponential,
    NoiseModel, OperatorPool, Rdm2, RegisterState, TwoBodyGenerator,
};

const NEGATIVE_VARIANCE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CqeConfig<T: Real> {
    pub step_size: T,
    pub max_iterations: usize,
    pub variance_tol: T,
    pub gradient_tol: T,
    pub exponential: Exponential,
}

impl<T: Real> Default for CqeConfig<T> {
    fn default() -> Self {
        Self {
            step_size: lit(0.1),
            max_iterations: 500,
            variance_tol: lit(1e-12),
            gradient_tol: lit(1e-8),
            exponential: Exponential::Exact,
        }
    }
}

impl<T: Real> CqeConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > T::zero()) {
            return Err(Error::InvalidConfig("step size must be positive".into()));
        }
        if !(self.variance_tol > T::zero() && self.gradient_tol > T::zero()) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord<T: Real> {
    pub iter: usize,
    pub energy: T,
    pub variance: T,
    pub grad_norm: T,
}

#[derive(Clone, Debug)]
pub struct CqeResult<T: Real> {
    /// Measured energy: through the noisy density matrix when noise is present.
    pub energy: T,
    /// Variance of the noiseless state, the quantity driven to zero.
    pub variance: T,
    /// `Tr(ρH²) − Tr(ρH)²` of the measured state.
    pub measured_variance: T,
    /// Final noiseless pure state.
    pub state: RegisterState<T>,
    pub rdm2: Rdm2<T>,
    pub trace: Vec<IterationRecord<T>>,
    pub converged: bool,
    pub iterations: usize,
}

impl<T: Real> CqeResult<T> {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,energy,variance,grad_norm\n");
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e}",
                r.iter,
                r.energy.to_f64(),
                r.variance.to_f64(),
                r.grad_norm.to_f64()
            );
        }
        out
    }

    /// `Err(NotConverged)` unless the run converged.
    pub fn ensure_converged(&self) -> Result<&Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { iterations: self.iterations, variance: self.variance.to_f64() })
        }
    }
}

/// `⟨H²⟩ − ⟨H⟩²`, with tiny negative rounding clipped to zero.
pub fn variance<T: Real>(state: &RegisterState<T>, h8: &Mat8<T>, h8_sq: &Mat8<T>) -> Result<T> {
    let e = expectation(state, h8)?;
    let v = expectation(state, h8_sq)? - e * e;
    if v < T::zero() && v > -lit::<T>(NEGATIVE_VARIANCE_TOL) {
        Ok(T::zero())
    } else {
        Ok(v)
    }
}

/// `∂Var/∂F_k = 2 Re Tr(ρ W K_k)` with `W = H² − 2EH + E²`, one entry per pool element.
///
/// Equivalent to `2⟨(Γ^{pq}_{st} − ²D^{pq}_{st}) W⟩` antisymmetrized over the Hermitian pair.
pub fn variance_gradient<T: Real>(
    state: &RegisterState<T>,
    h8: &Mat8<T>,
    h8_sq: &Mat8<T>,
    pool: &OperatorPool<T>,
) -> Result<Vec<T>> {
    let e = expectation(state, h8)?;
    let w = h8_sq - h8 * (e + e) + Mat8::identity() * (e * e);
    let two = lit::<T>(2.0);
    let grad = match state {
        RegisterState::Pure(v) => {
            let wv = w.map(|x| nalgebra::Complex::new(x, T::zero())) * v;
            pool.matrices
                .iter()
                .map(|k| {
                    let kv = k.map(|x| nalgebra::Complex::new(x, T::zero())) * v;
                    two * wv.dotc(&kv).re
                })
                .collect()
        }
        RegisterState::Mixed(rho) => pool
            .matrices
            .iter()
            .map(|k| {
                let wk = (w * k).map(|x| nalgebra::Complex::new(x, T::zero()));
                two * (rho * wk).trace().re
            })
            .collect(),
    };
    Ok(grad)
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

struct Measurement<T: Real> {
    energy: T,
    variance: T,
}

fn measure<T: Real>(
    psi: &RegisterState<T>,
    h: &MolecularHamiltonian<T>,
    noise: Option<&NoiseModel<T>>,
    key: u64,
) -> Result<Measurement<T>> {
    match noise {
        None => Ok(Measurement { energy: expectation(psi, &h.h8)?, variance: variance(psi, &h.h8, &h.h8_sq)? }),
        Some(n) => {
            let rho = apply_noise_channel(&psi.to_mixed(), n)?;
            let energy = readout_expectation(&rho, &h.h8, &n.readout(key))?;
            let clean = expectation(&rho, &h.h8)?;
            let variance = expectation(&rho, &h.h8_sq)? - clean * clean;
            Ok(Measurement { energy, variance })
        }
    }
}

/// Runs the solver with readout context `0`.
pub fn solve<T: Real>(
    initial: &RegisterState<T>,
    h: &MolecularHamiltonian<T>,
    cfg: &CqeConfig<T>,
    noise: Option<&NoiseModel<T>>,
) -> Result<CqeResult<T>> {
    solve_keyed(initial, h, cfg, noise, 0)
}

/// Gradient descent on the noiseless variance; measured quantities go through `noise`.
///
/// Each step tries `F = −η·grad` and halves `η` while the variance would increase.
/// `key` selects the readout stream so distinct solves draw independent biases.
pub fn solve_keyed<T: Real>(
    initial: &RegisterState<T>,
    h: &MolecularHamiltonian<T>,
    cfg: &CqeConfig<T>,
    noise: Option<&NoiseModel<T>>,
    key: u64,
) -> Result<CqeResult<T>> {
    cfg.validate()?;
    let mut psi = match initial {
        RegisterState::Pure(_) => initial.clone(),
        RegisterState::Mixed(_) => return Err(Error::InvalidConfig("solver needs a pure initial state".into())),
    };
    let pool = OperatorPool::<T>::new();
    let min_step = cfg.step_size * lit(1e-12);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iter = 0;
    let mut var = variance(&psi, &h.h8, &h.h8_sq)?;
    loop {
        let grad = variance_gradient(&psi, &h.h8, &h.h8_sq, &pool)?;
        let gnorm = norm(&grad);
        let m = measure(&psi, h, noise, key)?;
        let reported_var = if noise.is_some() { m.variance } else { var };
        trace.push(IterationRecord { iter, energy: m.energy, variance: reported_var, grad_norm: gnorm });
        if var <= cfg.variance_tol || gnorm <= cfg.gradient_tol {
            converged = true;
            break;
        }
        if iter >= cfg.max_iterations {
            break;
        }
        let mut eta = cfg.step_size;
        loop {
            let coeffs: Vec<T> = grad.iter().map(|&g| -eta * g).collect();
            let gen = TwoBodyGenerator::from_pool(&pool, &coeffs);
            let trial = apply_unitary(&psi, &unitary(&gen, cfg.exponential), None);
            let trial_var = variance(&trial, &h.h8, &h.h8_sq)?;
            if trial_var <= var || eta < min_step {
                psi = trial;
                var = trial_var;
                break;
            }
            eta *= lit(0.5);
        }
        iter += 1;
    }
    let last = trace.last().copied().expect("at least one record");
    Ok(CqeResult {
        energy: last.energy,
        variance: var,
        measured_variance: measure(&psi, h, noise, key)?.variance,
        rdm2: measure_2rdm(&psi),
        state: psi,
        trace,
        converged,
        iterations: iter,
    })
}

/// Exchange-adapted register vectors: `(|ij⟩ ± |ji⟩)/√2` for `i < j`, and `|ii⟩` in the symmetric sector.
fn adapted_basis<T: Real>(antisymmetric: bool) -> Vec<SVector<T, 8>> {
    let basis = compact_basis();
    let half = lit::<T>(0.5).sqrt();
    let mut out = Vec::new();
    for (k, d) in basis.iter().enumerate() {
        let partner = d.exchanged().compact_index();
        match partner {
            Some(p) if p > k => {
                let mut v = SVector::<T, 8>::zeros();
                v[k] = half;
                v[p] = if antisymmetric { -half } else { half };
                out.push(v);
            }
            Some(p) if p == k && !antisymmetric => out.push(SVector::<T, 8>::ith(k, T::one())),
            _ => {}
        }
    }
    out
}

/// Normalized guess from a subspace diagonalization over exchange-adapted configurations.
///
/// Targets `1` and `2` are the two antisymmetric roots of the two configurations of
/// lowest diagonal energy; they form the crossing pair. Target `0` is the lowest root
/// of the whole symmetric sector.
pub fn initial_guess<T: Real>(h: &MolecularHamiltonian<T>, target: usize) -> Result<RegisterState<T>> {
    if target > 2 {
        return Err(Error::IndexOutOfRange(target));
    }
    let mut configs = adapted_basis::<T>(target > 0);
    let diag = |v: &SVector<T, 8>| (v.transpose() * h.h8 * v)[(0, 0)];
    configs.sort_by(|a, b| diag(a).partial_cmp(&diag(b)).unwrap_or(std::cmp::Ordering::Equal));
    let n = if target == 0 { configs.len() } else { 2 };
    let sub = DMatrix::from_fn(n, n, |a, b| (configs[a].transpose() * h.h8 * configs[b])[(0, 0)]);
    let eig = sub.symmetric_eigen();
    let mut roots: Vec<usize> = (0..n).collect();
    roots.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal));
    let r = roots[if target == 2 { 1 } else { 0 }];
    let mut v = (0..n).fold(SVector::<T, 8>::zeros(), |acc, a| acc + configs[a] * eig.eigenvectors[(a, r)]);
    v /= v.norm();
    if v[v.iamax()] < T::zero() {
        v.neg_mut();
    }
    Ok(RegisterState::from_real(&v))
}
