//! STO-3G integrals over hydrogen 1s functions.
//!
//! Everything here is s-type, so each integral is a closed form from the
//! Gaussian product theorem. The only special function needed is the Boys
//! function `F0`, evaluated by [`boys_f0`] without an external `erf`.

use nalgebra::{Matrix3, Vector2};

use crate::error::{Error, Result};
use crate::geometry::MolecularGeometry;
use crate::scalar::{lit, Real};

const STO3G_HYDROGEN: &str = include_str!("../data/sto-3g-h.txt");

/// Pair distances at or below this are treated as coincident nuclei.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-6;

/// Primitive parameters `(exponent, coefficient)` of the STO-3G hydrogen 1s function.
pub fn sto3g_hydrogen<T: Real>() -> [(T, T); 3] {
    let parsed = parse_basis(STO3G_HYDROGEN).expect("bundled basis file is well formed");
    assert_eq!(parsed.len(), 3, "STO-3G has three primitives");
    [
        (T::lit(parsed[0].0), T::lit(parsed[0].1)),
        (T::lit(parsed[1].0), T::lit(parsed[1].1)),
        (T::lit(parsed[2].0), T::lit(parsed[2].1)),
    ]
}

/// Parses the plain-text basis format: one `exponent coefficient` pair per line, `#` comments.
pub fn parse_basis(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next = || -> Result<f64> {
            it.next()
                .ok_or_else(|| Error::Parse(format!("basis line {}: expected two numbers", n + 1)))?
                .parse()
                .map_err(|_| Error::Parse(format!("basis line {}: not a number", n + 1)))
        };
        let (a, c) = (next()?, next()?);
        if !(a > 0.0) {
            return Err(Error::Parse(format!("basis line {}: exponent must be positive", n + 1)));
        }
        out.push((a, c));
    }
    Ok(out)
}

/// Boys function of order zero, `F0(x) = ∫₀¹ exp(−x t²) dt`.
///
/// Uses the all-positive series `F0(x) = e^{−x} Σ (2x)^k / (2k+1)!!` below
/// `x = 36` and `½√(π/x)` above, where `erfc(√x)` is under 2e-17.
pub fn boys_f0<T: Real>(x: T) -> T {
    debug_assert!(x >= T::zero(), "boys_f0 requires x >= 0");
    if x >= lit(36.0) {
        return lit::<T>(0.5) * (T::pi() / x).sqrt();
    }
    let two_x = x + x;
    let mut term = T::one();
    let mut sum = T::one();
    let eps = T::default_epsilon() * lit(0.25);
    let mut k = 0u32;
    loop {
        k += 1;
        term *= two_x / T::lit(f64::from(2 * k + 1));
        sum += term;
        if term <= eps * sum || k > 400 {
            break;
        }
    }
    (-x).exp() * sum
}

/// Contracted s-type Gaussian with three primitives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractedGaussian<T: Real> {
    pub center: Vector2<T>,
    pub exponents: [T; 3],
    /// Contraction coefficients applied to normalized primitives.
    pub coefficients: [T; 3],
    /// Coefficient times primitive normalization times contraction renormalization.
    weights: [T; 3],
}

impl<T: Real> ContractedGaussian<T> {
    pub fn new(center: Vector2<T>, exponents: [T; 3], coefficients: [T; 3]) -> Self {
        assert!(exponents.iter().all(|&a| a > T::zero()), "exponents must be positive");
        let mut weights = [T::zero(); 3];
        for k in 0..3 {
            let a = exponents[k];
            weights[k] = coefficients[k] * (lit::<T>(2.0) * a / T::pi()).powf(lit(0.75));
        }
        let mut g = Self { center, exponents, coefficients, weights };
        let s = overlap(&g, &g);
        let scale = T::one() / s.sqrt();
        for w in &mut g.weights {
            *w *= scale;
        }
        g
    }

    /// STO-3G hydrogen 1s at `center`.
    pub fn sto3g_hydrogen(center: Vector2<T>) -> Self {
        let p = sto3g_hydrogen::<T>();
        Self::new(center, [p[0].0, p[1].0, p[2].0], [p[0].1, p[1].1, p[2].1])
    }

    fn primitives(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.exponents.iter().copied().zip(self.weights.iter().copied())
    }

    /// Value at a point of the molecular plane shifted out of plane by `z`.
    pub fn value(&self, point: Vector2<T>, z: T) -> T {
        let r2 = (point - self.center).norm_squared() + z * z;
        self.primitives().fold(T::zero(), |acc, (a, w)| acc + w * (-a * r2).exp())
    }
}

/// Gaussian product data for one primitive pair: exponent sum, center and prefactor.
struct PairProduct<T: Real> {
    p: T,
    center: Vector2<T>,
    weight: T,
    reduced: T,
    dist2: T,
}

fn products<'a, T: Real>(
    a: &'a ContractedGaussian<T>,
    b: &'a ContractedGaussian<T>,
) -> impl Iterator<Item = PairProduct<T>> + 'a {
    let dist2 = (a.center - b.center).norm_squared();
    a.primitives().flat_map(move |(ea, wa)| {
        b.primitives().map(move |(eb, wb)| {
            let p = ea + eb;
            let reduced = ea * eb / p;
            let center = (a.center * ea + b.center * eb) / p;
            PairProduct { p, center, weight: wa * wb * (-reduced * dist2).exp(), reduced, dist2 }
        })
    })
}

pub fn overlap<T: Real>(a: &ContractedGaussian<T>, b: &ContractedGaussian<T>) -> T {
    products(a, b).fold(T::zero(), |acc, pp| acc + pp.weight * (T::pi() / pp.p).powf(lit(1.5)))
}

pub fn kinetic<T: Real>(a: &ContractedGaussian<T>, b: &ContractedGaussian<T>) -> T {
    products(a, b).fold(T::zero(), |acc, pp| {
        let s = (T::pi() / pp.p).powf(lit(1.5));
        acc + pp.weight * pp.reduced * (lit::<T>(3.0) - lit::<T>(2.0) * pp.reduced * pp.dist2) * s
    })
}

/// Attraction `⟨a| −Z/|r−C| |b⟩` to a point charge `Z` at `c`.
pub fn nuclear_attraction<T: Real>(
    a: &ContractedGaussian<T>,
    b: &ContractedGaussian<T>,
    c: Vector2<T>,
    charge: T,
) -> T {
    products(a, b).fold(T::zero(), |acc, pp| {
        let t = pp.p * (pp.center - c).norm_squared();
        acc - charge * pp.weight * lit::<T>(2.0) * T::pi() / pp.p * boys_f0(t)
    })
}

/// Electron repulsion `(ab|cd)` in chemists' notation.
pub fn electron_repulsion<T: Real>(
    a: &ContractedGaussian<T>,
    b: &ContractedGaussian<T>,
    c: &ContractedGaussian<T>,
    d: &ContractedGaussian<T>,
) -> T {
    let cd: Vec<PairProduct<T>> = products(c, d).collect();
    let pref = lit::<T>(2.0) * T::pi().powf(lit(2.5));
    products(a, b).fold(T::zero(), |acc, ab| {
        cd.iter().fold(acc, |acc, cd| {
            let (p, q) = (ab.p, cd.p);
            let t = p * q / (p + q) * (ab.center - cd.center).norm_squared();
            acc + ab.weight * cd.weight * pref / (p * q * (p + q).sqrt()) * boys_f0(t)
        })
    })
}

/// Dipole matrix element `⟨a|x_axis|b⟩` (`axis` 0 = x, 1 = y) about the origin.
pub fn dipole<T: Real>(a: &ContractedGaussian<T>, b: &ContractedGaussian<T>, axis: usize) -> T {
    products(a, b).fold(T::zero(), |acc, pp| acc + pp.weight * (T::pi() / pp.p).powf(lit(1.5)) * pp.center[axis])
}

/// Four-index tensor over three spatial functions, stored densely.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor4<T: Real> {
    data: [T; 81],
}

impl<T: Real> Tensor4<T> {
    pub fn zeros() -> Self {
        Self { data: [T::zero(); 81] }
    }

    #[inline]
    fn index(p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * 3 + q) * 3 + r) * 3 + s
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> T {
        self.data[Self::index(p, q, r, s)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, r: usize, s: usize, v: T) {
        self.data[Self::index(p, q, r, s)] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Largest deviation from the 8-fold permutational symmetry of real orbitals.
    pub fn symmetry_defect(&self) -> T {
        let mut worst = T::zero();
        for p in 0..3 {
            for q in 0..3 {
                for r in 0..3 {
                    for s in 0..3 {
                        let v = self.get(p, q, r, s);
                        for w in [self.get(q, p, r, s), self.get(p, q, s, r), self.get(r, s, p, q)] {
                            worst = worst.max((v - w).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// The tensor as a 9×9 matrix with composite indices `(pq),(rs)`.
    pub fn as_pair_matrix(&self) -> nalgebra::SMatrix<T, 9, 9> {
        nalgebra::SMatrix::from_fn(|i, j| self.get(i / 3, i % 3, j / 3, j % 3))
    }
}

/// AO integrals and nuclear repulsion for one geometry.
#[derive(Clone, Debug)]
pub struct IntegralSet<T: Real> {
    pub basis: [ContractedGaussian<T>; 3],
    pub overlap: Matrix3<T>,
    pub kinetic: Matrix3<T>,
    pub nuclear: Matrix3<T>,
    pub eri: Tensor4<T>,
    pub e_nuc: T,
}

impl<T: Real> IntegralSet<T> {
    pub fn core_hamiltonian(&self) -> Matrix3<T> {
        self.kinetic + self.nuclear
    }

    /// AO dipole matrix along `axis` (0 = x, 1 = y).
    pub fn dipole_matrix(&self, axis: usize) -> Matrix3<T> {
        Matrix3::from_fn(|i, j| dipole(&self.basis[i], &self.basis[j], axis))
    }
}

/// Overlap between the AO bases of two geometries, `S_ij = ⟨χ_i(A)|χ_j(B)⟩`.
pub fn cross_overlap<T: Real>(a: &IntegralSet<T>, b: &IntegralSet<T>) -> Matrix3<T> {
    Matrix3::from_fn(|i, j| overlap(&a.basis[i], &b.basis[j]))
}

/// STO-3G integrals for the three protons of `geometry`.
pub fn compute_integrals<T: Real>(geometry: &MolecularGeometry<T>) -> Result<IntegralSet<T>> {
    let d = geometry.pair_distances();
    for (k, &(i, j)) in [(0usize, 1usize), (0, 2), (1, 2)].iter().enumerate() {
        if d[k] <= lit(COINCIDENCE_THRESHOLD) {
            return Err(Error::CoincidentNuclei(i, j, d[k].to_f64()));
        }
    }
    let centers = geometry.to_cartesian();
    let basis = centers.map(ContractedGaussian::sto3g_hydrogen);
    let overlap_m = Matrix3::from_fn(|i, j| overlap(&basis[i], &basis[j]));
    let kinetic_m = Matrix3::from_fn(|i, j| kinetic(&basis[i], &basis[j]));
    let nuclear_m = Matrix3::from_fn(|i, j| {
        centers.iter().fold(T::zero(), |acc, &c| acc + nuclear_attraction(&basis[i], &basis[j], c, T::one()))
    });
    let mut eri = Tensor4::zeros();
    for p in 0..3 {
        for q in 0..=p {
            for r in 0..3 {
                for s in 0..=r {
                    if p * 3 + q < r * 3 + s {
                        continue;
                    }
                    let v = electron_repulsion(&basis[p], &basis[q], &basis[r], &basis[s]);
                    for (a, b, c, e) in [(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r)] {
                        eri.set(a, b, c, e, v);
                        eri.set(c, e, a, b, v);
                    }
                }
            }
        }
    }
    let e_nuc = d.iter().fold(T::zero(), |acc, &r| acc + T::one() / r);
    Ok(IntegralSet { basis, overlap: overlap_m, kinetic: kinetic_m, nuclear: nuclear_m, eri, e_nuc })
}
