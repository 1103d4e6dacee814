//! Potential-energy scans, conical-intersection detection and CSV output.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::MolecularGeometry;
use crate::scalar::{lit, Real};
use crate::solver::PointSolver;

/// Coordinates swept by a scan. Angles are radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScanMode<T: Real> {
    /// Equilateral triangles, `R` from `r_min` to `r_max`.
    D3hCurve { r_min: T, r_max: T, steps: usize },
    /// Isosceles triangles at fixed `R`, `θ = 90°`, `ρ` swept.
    C2vCurve { r: T, rho_min: T, rho_max: T, steps: usize },
    /// Fixed `R` and `ρ`, `θ` swept.
    AngleCurve { r: T, rho: T, theta_min: T, theta_max: T, steps: usize },
    /// Cartesian grid over the third atom at fixed `R`.
    XyGrid { r: T, x_min: T, x_max: T, nx: usize, y_min: T, y_max: T, ny: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSpec<T: Real> {
    pub mode: ScanMode<T>,
    pub solver: PointSolver<T>,
}

/// One row of a scan. Failed points hold NaN energies and a reason.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceRecord<T: Real> {
    pub r: T,
    pub rho: T,
    pub theta: T,
    pub energies: [T; 3],
    pub reference: [T; 3],
    pub gap: T,
    pub solver: &'static str,
    pub converged: bool,
    pub iterations: usize,
    pub variance: T,
    pub seed: Option<u64>,
    pub failure: Option<String>,
}

impl<T: Real> SurfaceRecord<T> {
    pub fn geometry(&self) -> Result<MolecularGeometry<T>> {
        MolecularGeometry::new(self.r, self.rho, self.theta)
    }

    /// Cartesian position of the third atom.
    pub fn xy(&self) -> (T, T) {
        (self.rho * self.theta.cos(), self.rho * self.theta.sin())
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * lit::<T>(k as f64) / lit::<T>((n - 1) as f64)).collect(),
    }
}

/// Geometry parameters `(R, ρ, θ)` in scan order; grids are row-major in `y` then `x`.
pub fn scan_points<T: Real>(mode: &ScanMode<T>) -> Vec<(T, T, T)> {
    let right = T::frac_pi_2();
    match *mode {
        ScanMode::D3hCurve { r_min, r_max, steps } => {
            let s3 = lit::<T>(3.0).sqrt();
            linspace(r_min, r_max, steps).into_iter().map(|r| (r, s3 * r, right)).collect()
        }
        ScanMode::C2vCurve { r, rho_min, rho_max, steps } => {
            linspace(rho_min, rho_max, steps).into_iter().map(|rho| (r, rho, right)).collect()
        }
        ScanMode::AngleCurve { r, rho, theta_min, theta_max, steps } => {
            linspace(theta_min, theta_max, steps).into_iter().map(|t| (r, rho, t)).collect()
        }
        ScanMode::XyGrid { r, x_min, x_max, nx, y_min, y_max, ny } => {
            let xs = linspace(x_min, x_max, nx);
            linspace(y_min, y_max, ny)
                .into_iter()
                .flat_map(|y| xs.iter().map(move |&x| (r, (x * x + y * y).sqrt(), y.atan2(x))))
                .collect()
        }
    }
}

fn solve_row<T: Real>(solver: &PointSolver<T>, (r, rho, theta): (T, T, T)) -> SurfaceRecord<T> {
    let nan = T::zero() / T::zero();
    let base = SurfaceRecord {
        r,
        rho,
        theta,
        energies: [nan; 3],
        reference: [nan; 3],
        gap: nan,
        solver: solver.name(),
        converged: false,
        iterations: 0,
        variance: nan,
        seed: solver.seed(),
        failure: None,
    };
    let outcome = MolecularGeometry::new(r, rho, theta).and_then(|g| solver.solve(&g));
    match outcome {
        Ok(p) => SurfaceRecord {
            energies: p.energies,
            reference: p.reference,
            gap: p.gap(),
            converged: p.converged,
            iterations: p.iterations,
            variance: p.variance,
            ..base
        },
        Err(e) => SurfaceRecord { failure: Some(e.to_string()), ..base },
    }
}

/// Evaluates every point in parallel; rows come back in scan order.
pub fn scan<T: Real>(spec: &ScanSpec<T>) -> Result<Vec<SurfaceRecord<T>>> {
    let points = scan_points(&spec.mode);
    if points.is_empty() {
        return Err(Error::EmptyScan);
    }
    Ok(points.into_par_iter().map(|p| solve_row(&spec.solver, p)).collect())
}

/// A detected crossing: refined position and the gap estimate there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CiCandidate<T: Real> {
    pub r: T,
    pub rho: T,
    pub theta: T,
    pub gap: T,
    /// Index of the bracketing grid minimum.
    pub index: usize,
}

/// Vertex of the parabola through three points: `(x*, y*)`.
fn parabola_vertex<T: Real>(x: [T; 3], y: [T; 3]) -> Option<(T, T)> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if !(a > T::zero()) {
        return None;
    }
    let b = d1 - a * (x[0] + x[1]);
    let xv = -b / (a + a);
    let yv = y[1] + d1 * (xv - x[1]) + a * (xv - x[0]) * (xv - x[1]);
    Some((xv, yv))
}

fn pair_gap<T: Real>(r: &SurfaceRecord<T>, pair: (usize, usize)) -> T {
    (r.energies[pair.1] - r.energies[pair.0]).abs()
}

/// Which coordinate changes along a curve of records.
fn varying<T: Real>(records: &[SurfaceRecord<T>]) -> usize {
    let (a, b) = (&records[0], &records[records.len() - 1]);
    let d = [(b.r - a.r).abs(), (b.rho - a.rho).abs(), (b.theta - a.theta).abs()];
    (0..3).max_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal)).unwrap_or(1)
}

/// Local minima of `|E_j − E_i|` along a curve, refined by a parabola through the
/// squared gap (exact for a linear cone). Minima whose refined gap exceeds `gap_tol`
/// are discarded; points with a gap below `1e-3·gap_tol` are reported as they stand.
pub fn detect_ci_pair<T: Real>(records: &[SurfaceRecord<T>], pair: (usize, usize), gap_tol: T) -> Vec<CiCandidate<T>> {
    let n = records.len();
    if n == 0 {
        return Vec::new();
    }
    let axis = if n > 1 { varying(records) } else { 1 };
    let coord = |r: &SurfaceRecord<T>| [r.r, r.rho, r.theta][axis];
    let gaps: Vec<T> = records.iter().map(|r| pair_gap(r, pair)).collect();
    let flat = gap_tol * lit(1e-3);
    let mut out = Vec::new();
    for k in 0..n {
        let g = gaps[k];
        if !g.is_finite() {
            continue;
        }
        let rec = &records[k];
        if g < flat {
            out.push(CiCandidate { r: rec.r, rho: rec.rho, theta: rec.theta, gap: g, index: k });
            continue;
        }
        if k == 0 || k + 1 == n {
            continue;
        }
        let (gl, gr) = (gaps[k - 1], gaps[k + 1]);
        if !(g <= gl && g < gr) || gl < flat || gr < flat {
            continue;
        }
        let x = [coord(&records[k - 1]), coord(rec), coord(&records[k + 1])];
        let y = [gl * gl, g * g, gr * gr];
        let Some((xv, yv)) = parabola_vertex(x, y) else { continue };
        let refined = yv.max(T::zero()).sqrt();
        if refined < gap_tol {
            let mut at = [rec.r, rec.rho, rec.theta];
            at[axis] = xv;
            out.push(CiCandidate { r: at[0], rho: at[1], theta: at[2], gap: refined, index: k });
        }
    }
    out
}

/// [`detect_ci_pair`] for the `E1`/`E2` pair.
pub fn detect_ci<T: Real>(records: &[SurfaceRecord<T>], gap_tol: T) -> Vec<CiCandidate<T>> {
    detect_ci_pair(records, (1, 2), gap_tol)
}

/// Two-dimensional variant for an `nx × ny` grid in [`scan_points`] order.
///
/// Minima over the eight neighbours are refined along `x` and `y` separately.
pub fn detect_ci_grid<T: Real>(records: &[SurfaceRecord<T>], nx: usize, ny: usize, gap_tol: T) -> Vec<CiCandidate<T>> {
    if records.len() != nx * ny || nx < 3 || ny < 3 {
        return Vec::new();
    }
    let gap = |i: usize, j: usize| pair_gap(&records[j * nx + i], (1, 2));
    let mut out = Vec::new();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let g = gap(i, j);
            if !g.is_finite() {
                continue;
            }
            let mut is_min = true;
            for dj in 0..3 {
                for di in 0..3 {
                    if (di, dj) == (1, 1) {
                        continue;
                    }
                    let other = gap(i + di - 1, j + dj - 1);
                    if !(other >= g) {
                        is_min = false;
                    }
                }
            }
            if !is_min {
                continue;
            }
            let (x0, y0) = records[j * nx + i].xy();
            let (xl, _) = records[j * nx + i - 1].xy();
            let (xr, _) = records[j * nx + i + 1].xy();
            let (_, yd) = records[(j - 1) * nx + i].xy();
            let (_, yu) = records[(j + 1) * nx + i].xy();
            let sq = |v: T| v * v;
            let vx = parabola_vertex([xl, x0, xr], [sq(gap(i - 1, j)), sq(g), sq(gap(i + 1, j))]);
            let vy = parabola_vertex([yd, y0, yu], [sq(gap(i, j - 1)), sq(g), sq(gap(i, j + 1))]);
            let (x, dx) = vx.map_or((x0, T::zero()), |(x, yv)| (x, sq(g) - yv));
            let (y, dy) = vy.map_or((y0, T::zero()), |(y, yv)| (y, sq(g) - yv));
            let refined = (sq(g) - dx - dy).max(T::zero()).sqrt();
            if refined < gap_tol {
                let r = records[j * nx + i].r;
                out.push(CiCandidate {
                    r,
                    rho: (x * x + y * y).sqrt(),
                    theta: y.atan2(x),
                    gap: refined,
                    index: j * nx + i,
                });
            }
        }
    }
    out
}

pub const CSV_HEADER: &str = "R,rho,theta,E0,E1,E2,gap,solver,converged,seed";

fn fmt_float<T: Real>(x: T) -> String {
    let v = x.to_f64();
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// CSV with `#` comment lines first. `theta` is written in degrees.
pub fn to_csv<T: Real>(records: &[SurfaceRecord<T>], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let seed = r.seed.map_or(String::new(), |s| s.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_float(r.r),
            fmt_float(r.rho),
            fmt_float(r.theta.to_f64().to_degrees()),
            fmt_float(r.energies[0]),
            fmt_float(r.energies[1]),
            fmt_float(r.energies[2]),
            fmt_float(r.gap),
            r.solver,
            r.converged,
            seed
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c2v(steps: usize, solver: PointSolver<f64>) -> Vec<SurfaceRecord<f64>> {
        scan(&ScanSpec { mode: ScanMode::C2vCurve { r: 1.0, rho_min: 1.0, rho_max: 3.0, steps }, solver }).unwrap()
    }

    #[test]
    fn d3h_curve_gap_is_zero() {
        let recs: Vec<SurfaceRecord<f64>> = scan(&ScanSpec {
            mode: ScanMode::D3hCurve { r_min: 0.5, r_max: 2.5, steps: 12 },
            solver: PointSolver::Fci,
        })
        .unwrap();
        assert_eq!(recs.len(), 12);
        assert!(recs.iter().all(|r| r.gap.abs() < 1e-10));
        assert_eq!(detect_ci(&recs, 1e-3).len(), 12);
    }

    #[test]
    fn c2v_crossing_at_equilateral() {
        let recs = c2v(21, PointSolver::Fci);
        let ci = detect_ci(&recs, 1e-3);
        assert_eq!(ci.len(), 1, "{ci:?}");
        assert!((ci[0].rho - 3f64.sqrt()).abs() < 1e-2);
        assert!((ci[0].theta - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn ground_and_first_state_do_not_cross() {
        let recs = c2v(21, PointSolver::Fci);
        assert!(detect_ci_pair(&recs, (0, 1), 1e-3).is_empty());
    }

    #[test]
    fn parabola_vertex_is_exact_for_quadratics() {
        let f = |x: f64| 2.0 * (x - 0.3) * (x - 0.3) + 0.1;
        let (xv, yv) = parabola_vertex([0.0, 0.5, 1.2], [f(0.0), f(0.5), f(1.2)]).unwrap();
        assert!((xv - 0.3).abs() < 1e-12 && (yv - 0.1).abs() < 1e-12);
        assert!(parabola_vertex([0.0, 1.0, 2.0], [2.0, 1.0, 0.0]).is_none());
    }

    #[test]
    fn failures_become_nan_rows() {
        let recs: Vec<SurfaceRecord<f64>> = scan(&ScanSpec {
            mode: ScanMode::XyGrid { r: 1.0, x_min: 0.0, x_max: 1.0, nx: 2, y_min: 0.0, y_max: 0.5, ny: 2 },
            solver: PointSolver::Fci,
        })
        .unwrap();
        assert_eq!(recs.len(), 4);
        // (x, y) = (1, 0) sits on a fixed nucleus
        let bad = &recs[1];
        assert!(bad.failed() && bad.energies[1].is_nan() && !bad.converged);
        assert!(recs.iter().filter(|r| !r.failed()).count() == 3);
        let csv = to_csv(&recs, &["mode xy".into()]);
        assert!(csv.starts_with("# mode xy\nR,rho,theta"));
        assert!(csv.lines().nth(3).unwrap().contains("NaN"));
    }

    #[test]
    fn grid_detects_seam() {
        let recs: Vec<SurfaceRecord<f64>> = scan(&ScanSpec {
            mode: ScanMode::XyGrid { r: 1.0, x_min: -0.3, x_max: 0.3, nx: 7, y_min: 1.5, y_max: 2.0, ny: 6 },
            solver: PointSolver::Fci,
        })
        .unwrap();
        let ci = detect_ci_grid(&recs, 7, 6, 1e-2);
        assert_eq!(ci.len(), 1, "{ci:?}");
        let (x, y) = (ci[0].rho * ci[0].theta.cos(), ci[0].rho * ci[0].theta.sin());
        assert!(x.abs() < 1e-6 && (y - 3f64.sqrt()).abs() < 0.02, "{x} {y}");
    }

    #[test]
    fn empty_scan_is_error() {
        let spec =
            ScanSpec { mode: ScanMode::D3hCurve { r_min: 1.0, r_max: 2.0, steps: 0 }, solver: PointSolver::<f64>::Fci };
        assert_eq!(scan(&spec), Err(Error::EmptyScan));
    }

    #[test]
    fn csv_round_trips_values() {
        let recs = c2v(3, PointSolver::Fci);
        let csv = to_csv(&recs, &[]);
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row.len(), 10);
        assert_eq!(row[4].parse::<f64>().unwrap(), recs[0].energies[1]);
        assert_eq!(row[2].parse::<f64>().unwrap(), 90.0);
    }
}
