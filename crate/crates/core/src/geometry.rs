//! Nuclear coordinates of planar H3+.
//!
//! Two atoms sit at `(±R, 0)` and the third at `(ρ cos θ, ρ sin θ)`, so a
//! geometry is the triple `(R, ρ, θ)` with `R` the half-distance of the fixed
//! pair. All lengths are bohr and angles radians.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Point-group label for a triangular H3 geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symmetry {
    D3h,
    C2v,
    Cs,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::D3h => "D3h",
            Symmetry::C2v => "C2v",
            Symmetry::Cs => "Cs",
        })
    }
}

/// Which polar coordinate a geometry parameter refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coordinate {
    R,
    Rho,
    Theta,
}

impl Coordinate {
    pub const ALL: [Coordinate; 3] = [Coordinate::R, Coordinate::Rho, Coordinate::Theta];

    pub fn name(self) -> &'static str {
        match self {
            Coordinate::R => "R",
            Coordinate::Rho => "rho",
            Coordinate::Theta => "theta",
        }
    }
}

impl FromStr for Coordinate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R" | "r" => Ok(Coordinate::R),
            "rho" => Ok(Coordinate::Rho),
            "theta" => Ok(Coordinate::Theta),
            other => Err(Error::Parse(format!("unknown coordinate '{other}'"))),
        }
    }
}

/// Planar H3 geometry in the `(R, ρ, θ)` parameterization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MolecularGeometry<T: Real> {
    r: T,
    rho: T,
    theta: T,
}

impl<T: Real> MolecularGeometry<T> {
    /// Builds a geometry, wrapping `theta` into `[0, 2π)`.
    pub fn new(r: T, rho: T, theta: T) -> Result<Self> {
        if !(r >= T::zero()) || !(rho >= T::zero()) || !theta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "geometry requires R >= 0, rho >= 0 and finite theta (got R={r}, rho={rho}, theta={theta})"
            )));
        }
        Ok(Self { r, rho, theta: wrap_angle(theta) })
    }

    /// Geometry with atom 3 at Cartesian `(x, y)`.
    pub fn from_third_atom(r: T, x: T, y: T) -> Result<Self> {
        let rho = (x * x + y * y).sqrt();
        let theta = if rho > T::zero() { y.atan2(x) } else { T::zero() };
        Self::new(r, rho, theta)
    }

    /// Equilateral triangle with the fixed pair at `(±R, 0)`.
    pub fn equilateral(r: T) -> Self {
        Self { r, rho: r * lit::<T>(3.0).sqrt(), theta: T::frac_pi_2() }
    }

    /// Isosceles geometry with atom 3 on the positive y axis.
    pub fn isosceles(r: T, rho: T) -> Result<Self> {
        Self::new(r, rho, T::frac_pi_2())
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn get(&self, c: Coordinate) -> T {
        match c {
            Coordinate::R => self.r,
            Coordinate::Rho => self.rho,
            Coordinate::Theta => self.theta,
        }
    }

    /// Copy with one coordinate replaced.
    pub fn with(&self, c: Coordinate, value: T) -> Result<Self> {
        let (mut r, mut rho, mut theta) = (self.r, self.rho, self.theta);
        match c {
            Coordinate::R => r = value,
            Coordinate::Rho => rho = value,
            Coordinate::Theta => theta = value,
        }
        Self::new(r, rho, theta)
    }

    pub fn theta_degrees(&self) -> T {
        self.theta * lit(180.0) / T::pi()
    }

    /// Cartesian positions `[(R,0), (−R,0), (ρcosθ, ρsinθ)]`.
    pub fn to_cartesian(&self) -> [Vector2<T>; 3] {
        [
            Vector2::new(self.r, T::zero()),
            Vector2::new(-self.r, T::zero()),
            Vector2::new(self.rho * self.theta.cos(), self.rho * self.theta.sin()),
        ]
    }

    /// Distances `[r12, r13, r23]`.
    pub fn pair_distances(&self) -> [T; 3] {
        let [a, b, c] = self.to_cartesian();
        [(a - b).norm(), (a - c).norm(), (b - c).norm()]
    }

    /// Point-group label with Cartesian tolerance `tol`.
    pub fn classify_symmetry(&self, tol: T) -> Symmetry {
        let [d12, d13, d23] = self.pair_distances();
        let max = d12.max(d13).max(d23);
        let min = d12.min(d13).min(d23);
        if max - min <= tol {
            return Symmetry::D3h;
        }
        let s = self.theta.sin();
        let on_axis = if self.rho > T::zero() {
            let angular = tol / self.rho;
            (s - T::one()).abs() < angular || (s + T::one()).abs() < angular
        } else {
            true
        };
        if on_axis {
            Symmetry::C2v
        } else {
            Symmetry::Cs
        }
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> MolecularGeometry<U> {
        MolecularGeometry {
            r: U::lit(self.r.to_f64()),
            rho: U::lit(self.rho.to_f64()),
            theta: U::lit(self.theta.to_f64()),
        }
    }
}

fn wrap_angle<T: Real>(theta: T) -> T {
    let two_pi = T::two_pi();
    let mut t = theta % two_pi;
    if t < T::zero() {
        t += two_pi;
    }
    if t >= two_pi {
        t -= two_pi;
    }
    t
}

impl<T: Real> fmt::Display for MolecularGeometry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R={} rho={} theta_deg={}", self.r, self.rho, self.theta_degrees())
    }
}

/// Parses `R=<bohr> rho=<bohr> theta_deg=<degrees>` (also accepts `theta=<radians>`).
impl<T: Real> FromStr for MolecularGeometry<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (mut r, mut rho, mut theta) = (None, None, None);
        for token in s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let (key, value) =
                token.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got '{token}'")))?;
            let v: f64 = value.trim().parse().map_err(|_| Error::Parse(format!("bad number in '{token}'")))?;
            match key.trim() {
                "R" => r = Some(v),
                "rho" => rho = Some(v),
                "theta_deg" => theta = Some(v * PI / 180.0),
                "theta" => theta = Some(v),
                other => return Err(Error::Parse(format!("unknown geometry key '{other}'"))),
            }
        }
        let missing = |name: &str| Error::Parse(format!("geometry is missing '{name}'"));
        Self::new(
            T::lit(r.ok_or_else(|| missing("R"))?),
            T::lit(rho.ok_or_else(|| missing("rho"))?),
            T::lit(theta.ok_or_else(|| missing("theta_deg"))?),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cartesian_of_right_angle_point() {
        let g = MolecularGeometry::new(1.0, 3f64.sqrt(), PI / 2.0).unwrap();
        let [a, b, c] = g.to_cartesian();
        assert_eq!((a.x, a.y), (1.0, 0.0));
        assert_eq!((b.x, b.y), (-1.0, 0.0));
        assert_abs_diff_eq!(c.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.y, 1.7320508075688772, epsilon = 1e-15);
    }

    #[test]
    fn third_atom_at_origin_is_equidistant() {
        let g = MolecularGeometry::new(1.0, 0.0, 0.0).unwrap();
        let [d12, d13, d23] = g.pair_distances();
        assert_eq!(d12, 2.0);
        assert_abs_diff_eq!(d13, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d23, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn equilateral_side_four() {
        let g = MolecularGeometry::new(2.0, 2.0 * 3f64.sqrt(), PI / 2.0).unwrap();
        for d in g.pair_distances() {
            assert_abs_diff_eq!(d, 4.0, epsilon = 1e-14);
        }
        assert_eq!(g.classify_symmetry(1e-8), Symmetry::D3h);
    }

    #[test]
    fn classification_examples() {
        let c2v = MolecularGeometry::new(1.0, 3.0, PI / 2.0).unwrap();
        assert_eq!(c2v.classify_symmetry(1e-8), Symmetry::C2v);
        let below = MolecularGeometry::new(1.0, 3.0, 3.0 * PI / 2.0).unwrap();
        assert_eq!(below.classify_symmetry(1e-8), Symmetry::C2v);
        let cs = MolecularGeometry::new(1.0, 1.5, 0.3).unwrap();
        assert_eq!(cs.classify_symmetry(1e-8), Symmetry::Cs);
    }

    #[test]
    fn equilateral_below_axis_is_d3h() {
        let g = MolecularGeometry::new(1.3, 1.3 * 3f64.sqrt(), 3.0 * PI / 2.0).unwrap();
        assert_eq!(g.classify_symmetry(1e-8), Symmetry::D3h);
    }

    #[test]
    fn rejects_negative_lengths_and_wraps_angles() {
        assert!(MolecularGeometry::new(-1.0, 1.0, 0.0).is_err());
        assert!(MolecularGeometry::new(1.0, -1.0, 0.0).is_err());
        assert!(MolecularGeometry::new(1.0, 1.0, f64::NAN).is_err());
        let g = MolecularGeometry::new(1.0, 1.0, -PI / 2.0).unwrap();
        assert_abs_diff_eq!(g.theta(), 1.5 * PI, epsilon = 1e-15);
        let g = MolecularGeometry::new(1.0, 1.0, 2.0 * PI).unwrap();
        assert_eq!(g.theta(), 0.0);
    }

    #[test]
    fn parses_key_value_text() {
        let g: MolecularGeometry<f64> = "R=1 rho=2.897 theta_deg=57.819".parse().unwrap();
        assert_eq!(g.r(), 1.0);
        assert_eq!(g.rho(), 2.897);
        assert_abs_diff_eq!(g.theta_degrees(), 57.819, epsilon = 1e-12);
        assert!("R=1 rho=2".parse::<MolecularGeometry<f64>>().is_err());
        assert!("R=1 rho=x theta_deg=3".parse::<MolecularGeometry<f64>>().is_err());
    }

    #[test]
    fn third_atom_round_trip() {
        let g = MolecularGeometry::from_third_atom(1.0, -0.3, 1.9).unwrap();
        let c = g.to_cartesian()[2];
        assert_abs_diff_eq!(c.x, -0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(c.y, 1.9, epsilon = 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn polar_cartesian_round_trip(r in 0.1f64..3.0, rho in 0.1f64..4.0, theta in 0.0f64..6.2) {
            let g = MolecularGeometry::new(r, rho, theta).unwrap();
            let c = g.to_cartesian()[2];
            let back = MolecularGeometry::from_third_atom(r, c.x, c.y).unwrap();
            proptest::prop_assert!((back.rho() - rho).abs() < 1e-13);
            let dtheta = (back.theta() - g.theta()).abs();
            proptest::prop_assert!(dtheta < 1e-12 || (dtheta - 2.0 * PI).abs() < 1e-12);
        }

        #[test]
        fn equilateral_is_d3h_for_any_scale(r in 0.2f64..4.0) {
            proptest::prop_assert_eq!(MolecularGeometry::equilateral(r).classify_symmetry(1e-9), Symmetry::D3h);
        }
    }
}
