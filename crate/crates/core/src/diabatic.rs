//! Two-state diabatization and the geometric phase around a crossing.

use std::fmt::Write as _;

use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fci::{state_overlap, FciPoint};
use crate::geometry::MolecularGeometry;
use crate::scalar::{lit, Real};

/// Same-state overlaps below this between neighbours mean the step is too large.
pub const MIN_SAME_STATE_OVERLAP: f64 = 0.5;

/// FCI index of a tracked state label (`0` ground, `1`/`2` the crossing pair).
fn fci_index<T: Real>(p: &FciPoint<T>, label: usize) -> Result<usize> {
    match label {
        0 => Ok(0),
        1 | 2 => Ok(p.fci.crossing_pair()[label - 1]),
        _ => Err(Error::IndexOutOfRange(label)),
    }
}

/// Coupling on one segment given the phases `(σ_I, σ_J)` carried at `a`.
///
/// Returns the coupling and the phases transported to `b`.
fn transported_coupling<T: Real>(
    a: &FciPoint<T>,
    b: &FciPoint<T>,
    i: usize,
    j: usize,
    signs: (T, T),
) -> Result<(T, (T, T))> {
    let (ia, ja) = (fci_index(a, i)?, fci_index(a, j)?);
    let (ib, jb) = (fci_index(b, i)?, fci_index(b, j)?);
    let o = state_overlap(a, b);
    let (sii, sjj) = (o[(ia, ib)], o[(ja, jb)]);
    let worst = sii.abs().min(sjj.abs());
    if worst < lit(MIN_SAME_STATE_OVERLAP) {
        return Err(Error::PhaseInconsistency(worst.to_f64()));
    }
    let (si, sj) = (signs.0 * sii.signum(), signs.1 * sjj.signum());
    let c = lit::<T>(0.5) * (signs.0 * sj * o[(ia, jb)] - signs.1 * si * o[(ja, ib)]);
    Ok((c, (si, sj)))
}

/// `½(⟨I_a|J_b⟩ − ⟨J_a|I_b⟩)` with the phases of `b` aligned to `a`.
pub fn derivative_coupling_points<T: Real>(a: &FciPoint<T>, b: &FciPoint<T>, i: usize, j: usize) -> Result<T> {
    transported_coupling(a, b, i, j, (T::one(), T::one())).map(|(c, _)| c)
}

/// Coupling between two nearby geometries.
pub fn derivative_coupling<T: Real>(
    ga: &MolecularGeometry<T>,
    gb: &MolecularGeometry<T>,
    i: usize,
    j: usize,
) -> Result<T> {
    let a = FciPoint::compute(ga)?;
    let b = FciPoint::compute(gb)?;
    derivative_coupling_points(&a, &b, i, j)
}

/// Closed loop over the third atom's Cartesian position at fixed `R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopSpec<T: Real> {
    pub r: T,
    pub center_x: T,
    pub center_y: T,
    pub radius: T,
    pub points: usize,
    pub states: (usize, usize),
}

impl<T: Real> LoopSpec<T> {
    pub fn around(r: T, center_x: T, center_y: T, radius: T, points: usize) -> Self {
        Self { r, center_x, center_y, radius, points, states: (1, 2) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 16 {
            return Err(Error::InvalidConfig(format!("loop needs at least 16 points, got {}", self.points)));
        }
        if !(self.radius > T::zero()) {
            return Err(Error::InvalidConfig("loop radius must be positive".into()));
        }
        Ok(())
    }

    /// `(x, y)` of point `k`; point `points` coincides with point `0`.
    pub fn position(&self, k: usize) -> (T, T) {
        let phi = T::two_pi() * lit::<T>((k % self.points) as f64) / lit::<T>(self.points as f64);
        (self.center_x + self.radius * phi.cos(), self.center_y + self.radius * phi.sin())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopPoint<T: Real> {
    pub k: usize,
    pub x: T,
    pub y: T,
    pub e1: T,
    pub e2: T,
    /// Coupling on the segment ending at this point (`0` for the first point).
    pub segment: T,
    pub accumulated: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseResult<T: Real> {
    /// Accumulated coupling wrapped into `(−π, π]`.
    pub phase: T,
    /// Raw accumulated coupling.
    pub accumulated: T,
    /// Transported state `I` returns with reversed sign.
    pub sign_flip: bool,
    pub points: Vec<LoopPoint<T>>,
}

impl<T: Real> PhaseResult<T> {
    /// Whether the loop encloses a crossing, judged from the phase.
    pub fn encloses_ci(&self) -> bool {
        self.phase.abs() > T::frac_pi_2()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("k,x,y,E1,E2,segment_coupling,accumulated_phase\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                p.k,
                p.x.to_f64(),
                p.y.to_f64(),
                p.e1.to_f64(),
                p.e2.to_f64(),
                p.segment.to_f64(),
                p.accumulated.to_f64()
            );
        }
        out
    }
}

/// Wraps into `(−π, π]`.
pub fn wrap_phase<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let mut y = x - two_pi * ((x + T::pi()) / two_pi).floor();
    if y <= -T::pi() {
        y += two_pi;
    }
    y
}

/// Sign of the largest-magnitude component, which fixes the starting gauge.
fn leading_sign<T: Real>(p: &FciPoint<T>, k: usize) -> T {
    let v = p.fci.vector(k);
    v.iter().fold(T::zero(), |best, &x| if x.abs() > best.abs() { x } else { best }).signum()
}

/// Loop points solved in parallel, in loop order.
pub fn loop_points<T: Real>(spec: &LoopSpec<T>) -> Result<Vec<FciPoint<T>>> {
    spec.validate()?;
    (0..spec.points)
        .into_par_iter()
        .map(|k| {
            let (x, y) = spec.position(k);
            FciPoint::compute(&MolecularGeometry::from_third_atom(spec.r, x, y)?)
        })
        .collect()
}

/// Sum of segment couplings around the loop.
pub fn geometric_phase<T: Real>(spec: &LoopSpec<T>) -> Result<PhaseResult<T>> {
    let pts = loop_points(spec)?;
    phase_from_points(spec, &pts)
}

/// Accumulates couplings over precomputed loop points; the first point closes the loop.
///
/// Phases are carried from point to point by same-state overlap, so the result
/// does not depend on the phases the eigensolver happened to return.
pub fn phase_from_points<T: Real>(spec: &LoopSpec<T>, pts: &[FciPoint<T>]) -> Result<PhaseResult<T>> {
    let (i, j) = spec.states;
    let n = pts.len();
    let mut acc = T::zero();
    let mut points = Vec::with_capacity(n + 1);
    let (i0, j0) = (fci_index(&pts[0], i)?, fci_index(&pts[0], j)?);
    let mut signs = (leading_sign(&pts[0], i0), leading_sign(&pts[0], j0));
    for k in 0..=n {
        let cur = &pts[k % n];
        let [_, e1, e2] = cur.energies();
        let (x, y) = spec.position(k);
        let segment = if k == 0 {
            T::zero()
        } else {
            let (c, next) = transported_coupling(&pts[k - 1], cur, i, j, signs)?;
            signs = next;
            c
        };
        acc += segment;
        points.push(LoopPoint { k, x, y, e1, e2, segment, accumulated: acc });
    }
    Ok(PhaseResult { phase: wrap_phase(acc), accumulated: acc, sign_flip: signs.0 < T::zero(), points })
}

/// Diabatic 2×2 Hamiltonian for one mixing angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiabaticPair<T: Real> {
    pub theta_mix: T,
    pub h11: T,
    pub h22: T,
    pub h12: T,
}

impl<T: Real> DiabaticPair<T> {
    pub fn matrix(&self) -> Matrix2<T> {
        Matrix2::new(self.h11, self.h12, self.h12, self.h22)
    }

    /// `(H11 − H22)² + 4 H12²`, zero exactly at a degeneracy.
    pub fn degeneracy_measure(&self) -> T {
        let d = self.h11 - self.h22;
        d * d + lit::<T>(4.0) * self.h12 * self.h12
    }
}

/// `H^d = U diag(E_I, E_J) Uᵀ` with `U = [[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn adiabatic_to_diabatic<T: Real>(e_i: T, e_j: T, theta_mix: T) -> DiabaticPair<T> {
    let (s, c) = theta_mix.sin_cos();
    DiabaticPair { theta_mix, h11: c * c * e_i + s * s * e_j, h22: s * s * e_i + c * c * e_j, h12: c * s * (e_i - e_j) }
}

/// Mixing angles along a path from integrated couplings, `θ(path[0]) = 0`.
pub fn mixing_angles<T: Real>(path: &[MolecularGeometry<T>], i: usize, j: usize) -> Result<Vec<T>> {
    let pts: Vec<FciPoint<T>> = path.par_iter().map(FciPoint::compute).collect::<Result<_>>()?;
    let mut theta = T::zero();
    let mut signs = (T::one(), T::one());
    let mut out = Vec::with_capacity(pts.len());
    for (k, p) in pts.iter().enumerate() {
        if k > 0 {
            let (c, next) = transported_coupling(&pts[k - 1], p, i, j, signs)?;
            theta += c;
            signs = next;
        }
        out.push(theta);
    }
    Ok(out)
}

/// Quasi-diabatic pair at every point of a path.
pub fn diabatize_path<T: Real>(path: &[MolecularGeometry<T>]) -> Result<Vec<DiabaticPair<T>>> {
    let angles = mixing_angles(path, 1, 2)?;
    path.iter()
        .zip(angles)
        .map(|(g, t)| {
            let [_, e1, e2] = FciPoint::compute(g)?.energies();
            Ok(adiabatic_to_diabatic(e1, e2, t))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn coupling_vanishes_at_zero_displacement() {
        let g = MolecularGeometry::new(1.0, 2.0, 1.2).unwrap();
        assert!(derivative_coupling::<f64>(&g, &g, 1, 2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn coupling_is_small_far_from_crossing() {
        let a = MolecularGeometry::from_third_atom(1.0, 0.5, 3.0).unwrap();
        let b = MolecularGeometry::from_third_atom(1.0, 0.51, 3.0).unwrap();
        assert!(derivative_coupling::<f64>(&a, &b, 1, 2).unwrap().abs() < 0.05);
    }

    #[test]
    fn coupling_converges_with_step() {
        let base = MolecularGeometry::from_third_atom(1.0, 0.2, 1.9).unwrap();
        let at = |d: f64| MolecularGeometry::from_third_atom(1.0, 0.2 + d, 1.9).unwrap();
        let c1 = derivative_coupling(&base, &at(0.02), 1, 2).unwrap() / 0.02;
        let c2 = derivative_coupling(&base, &at(0.01), 1, 2).unwrap() / 0.01;
        let c4 = derivative_coupling(&base, &at(0.005), 1, 2).unwrap() / 0.005;
        assert!((c2 - c4).abs() < (c1 - c2).abs() + 1e-9);
    }

    #[test]
    fn enclosing_loop_gives_pi() {
        let spec = LoopSpec::around(1.0, 0.0, 3f64.sqrt(), 0.3, 64);
        let res = geometric_phase(&spec).unwrap();
        assert!((res.phase.abs() - PI).abs() < 0.05, "{}", res.phase);
        assert!(res.sign_flip);
        assert!(res.encloses_ci());
        assert_eq!(res.points.len(), 65);
        assert!(res.csv().starts_with("k,x,y,E1,E2,segment_coupling,accumulated_phase\n"));
    }

    #[test]
    fn distant_loop_gives_zero() {
        let spec = LoopSpec::around(1.0, 1.0, 3f64.sqrt(), 0.3, 64);
        let res = geometric_phase(&spec).unwrap();
        assert!(res.phase.abs() < 0.05, "{}", res.phase);
        assert!(!res.sign_flip);
    }

    #[test]
    fn too_few_points_rejected() {
        let spec = LoopSpec::around(1.0, 0.0, 1.7, 0.3, 8);
        assert!(matches!(geometric_phase(&spec), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn wrap_range() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5f64) - 0.5).abs() < 1e-15);
        assert!((wrap_phase(-2.0 * PI - 0.1) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn rotation_closed_forms() {
        let d = adiabatic_to_diabatic(-1.0, -0.5, 0.0);
        assert_eq!((d.h11, d.h22, d.h12), (-1.0, -0.5, 0.0));
        let m = adiabatic_to_diabatic(-1.0, -0.5, FRAC_PI_4);
        assert!((m.h12 - (-1.0 - -0.5) / 2.0).abs() < 1e-15);
        for t in [0.1, 0.7, 2.0] {
            let p = adiabatic_to_diabatic(-1.0f64, -0.5, t);
            let mut ev: Vec<f64> = p.matrix().symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!((ev[0] + 1.0).abs() < 1e-10 && (ev[1] + 0.5).abs() < 1e-10);
            let deg = adiabatic_to_diabatic(-0.8f64, -0.8, t);
            assert!((deg.matrix() - Matrix2::identity() * -0.8).amax() < 1e-15);
        }
    }

    #[test]
    fn path_starts_at_zero_angle() {
        let path: Vec<MolecularGeometry<f64>> =
            (0..6).map(|k| MolecularGeometry::from_third_atom(1.0, 0.3, 2.2 - 0.01 * k as f64).unwrap()).collect();
        let angles = mixing_angles(&path, 1, 2).unwrap();
        assert_eq!(angles[0], 0.0);
        let pairs = diabatize_path(&path).unwrap();
        assert_eq!(pairs.len(), 6);
    }
}
