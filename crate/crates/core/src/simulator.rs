//! Three-qubit register: pure and mixed states, generator exponentials,
//! expectation values, the two-body reduced density matrix, and noise.

use nalgebra::{Complex, SMatrix, SVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hamiltonian::{
    embed_operator, two_body_operator_matrix, two_body_operator_matrix9, Mat8, COMPACT_DIM, N_SPATIAL, N_SPIN_ORBITALS,
};
use crate::integrals::Tensor4;
use crate::scalar::{lit, Real};

pub type C<T> = Complex<T>;
pub type CVec8<T> = SVector<Complex<T>, 8>;
pub type CMat8<T> = SMatrix<Complex<T>, 8, 8>;

const SYMMETRY_TOL: f64 = 1e-12;

fn complexify<T: Real>(m: &Mat8<T>) -> CMat8<T> {
    m.map(|x| Complex::new(x, T::zero()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum RegisterState<T: Real> {
    Pure(CVec8<T>),
    Mixed(CMat8<T>),
}

impl<T: Real> RegisterState<T> {
    /// Normalized pure state from complex amplitudes.
    pub fn pure(amplitudes: CVec8<T>) -> Self {
        let n = amplitudes.norm();
        Self::Pure(amplitudes.unscale(n))
    }

    pub fn from_real(amplitudes: &SVector<T, 8>) -> Self {
        Self::pure(amplitudes.map(|x| Complex::new(x, T::zero())))
    }

    /// Computational basis state `|k⟩` on the register.
    pub fn basis(k: usize) -> Self {
        let mut v = CVec8::zeros();
        v[k] = Complex::new(T::one(), T::zero());
        Self::Pure(v)
    }

    pub fn maximally_mixed() -> Self {
        Self::Mixed(CMat8::identity().unscale(lit(8.0)))
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, Self::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&CVec8<T>> {
        match self {
            Self::Pure(v) => Some(v),
            Self::Mixed(_) => None,
        }
    }

    /// Real parts of the amplitudes of a pure state.
    pub fn real_amplitudes(&self) -> Option<SVector<T, 8>> {
        self.amplitudes().map(|v| v.map(|z| z.re))
    }

    pub fn density(&self) -> CMat8<T> {
        match self {
            Self::Pure(v) => v * v.adjoint(),
            Self::Mixed(rho) => *rho,
        }
    }

    pub fn to_mixed(&self) -> Self {
        Self::Mixed(self.density())
    }

    /// `|‖ψ‖ − 1|` or `|Tr ρ − 1|`.
    pub fn normalization_defect(&self) -> T {
        match self {
            Self::Pure(v) => (v.norm() - T::one()).abs(),
            Self::Mixed(rho) => nalgebra::ComplexField::modulus(rho.trace() - Complex::new(T::one(), T::zero())),
        }
    }

    /// Smallest eigenvalue of the density matrix (0 for pure states up to rounding).
    pub fn min_eigenvalue(&self) -> T {
        let rho = self.density();
        rho.symmetric_eigenvalues().iter().copied().fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b))
    }

    fn evolve(&self, u: &CMat8<T>) -> Self {
        match self {
            Self::Pure(v) => Self::pure(u * v),
            Self::Mixed(rho) => {
                let out = u * rho * u.adjoint();
                let tr = out.trace();
                Self::Mixed(out.unscale(tr.re))
            }
        }
    }
}

/// Global depolarizing noise plus a seeded readout perturbation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel<T: Real> {
    pub depolarizing: T,
    /// Standard deviation of the diagonal readout bias (hartree).
    pub readout_scale: T,
    pub seed: u64,
}

impl<T: Real> NoiseModel<T> {
    pub fn new(depolarizing: T, readout_scale: T, seed: u64) -> Result<Self> {
        if !(depolarizing >= T::zero() && depolarizing <= T::one()) {
            return Err(Error::InvalidConfig(format!("depolarizing rate {depolarizing:?} outside [0, 1]")));
        }
        if !(readout_scale >= T::zero()) {
            return Err(Error::InvalidConfig(format!("readout scale {readout_scale:?} must be non-negative")));
        }
        Ok(Self { depolarizing, readout_scale, seed })
    }

    pub fn depolarizing(rate: T, seed: u64) -> Result<Self> {
        Self::new(rate, T::zero(), seed)
    }

    /// Readout bias for one measurement context, reproducible from `(seed, key)`.
    pub fn readout(&self, key: u64) -> Readout<T> {
        if self.readout_scale == T::zero() {
            return Readout { bias: SVector::zeros() };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(self.seed ^ mix64(key)));
        let normal = Normal::new(0.0, self.readout_scale.to_f64()).expect("finite scale");
        Readout { bias: SVector::from_fn(|_, _| lit(normal.sample(&mut rng))) }
    }
}

/// Diagonal bias added to every observable measured in one context.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Readout<T: Real> {
    pub bias: SVector<T, 8>,
}

impl<T: Real> Readout<T> {
    pub fn perturb(&self, m: &Mat8<T>) -> Mat8<T> {
        m + Mat8::from_diagonal(&self.bias)
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Spin-orbital quadruple `(p, q, s, t)` labelling `Γ^{pq}_{st} = a†_p a†_q a_t a_s`.
pub type Quad = [usize; 4];

/// Anti-Hermitian combinations `K = Γ^{pq}_{st} − Γ^{st}_{pq}` with a nonzero register matrix.
#[derive(Clone, Debug)]
pub struct OperatorPool<T: Real> {
    pub quads: Vec<Quad>,
    pub matrices: Vec<Mat8<T>>,
}

fn spin_of(k: usize) -> usize {
    k / N_SPATIAL
}

/// All `S_z`-conserving quadruples with `p < q`, `s < t` and `(p,q) < (s,t)`.
pub fn canonical_quads() -> Vec<Quad> {
    let pairs: Vec<(usize, usize)> =
        (0..N_SPIN_ORBITALS).flat_map(|p| (p + 1..N_SPIN_ORBITALS).map(move |q| (p, q))).collect();
    let mut out = Vec::new();
    for (a, &(p, q)) in pairs.iter().enumerate() {
        for &(s, t) in &pairs[a + 1..] {
            if spin_of(p) + spin_of(q) == spin_of(s) + spin_of(t) {
                out.push([p, q, s, t]);
            }
        }
    }
    out
}

impl<T: Real> OperatorPool<T> {
    pub fn new() -> Self {
        let mut quads = Vec::new();
        let mut matrices = Vec::new();
        for quad in canonical_quads() {
            let [p, q, s, t] = quad;
            let g = two_body_operator_matrix::<T>(p, q, s, t).expect("valid index");
            let k = g - g.transpose();
            if k.amax() > T::zero() {
                quads.push(quad);
                matrices.push(k);
            }
        }
        Self { quads, matrices }
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }
}

impl<T: Real> Default for OperatorPool<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Real coefficients over a pool and the cached antisymmetric matrix `A = Σ F_k K_k`.
#[derive(Clone, Debug)]
pub struct TwoBodyGenerator<T: Real> {
    pub coefficients: Vec<(Quad, T)>,
    matrix: Mat8<T>,
}

impl<T: Real> TwoBodyGenerator<T> {
    pub fn zero() -> Self {
        Self { coefficients: Vec::new(), matrix: Mat8::zeros() }
    }

    pub fn from_pool(pool: &OperatorPool<T>, coeffs: &[T]) -> Self {
        assert_eq!(pool.len(), coeffs.len(), "one coefficient per pool element");
        let mut matrix = Mat8::zeros();
        for (k, &c) in pool.matrices.iter().zip(coeffs) {
            matrix += k * c;
        }
        let coefficients = pool.quads.iter().copied().zip(coeffs.iter().copied()).collect();
        Self { coefficients, matrix }
    }

    /// Builds `A` directly from an arbitrary list of quadruples.
    pub fn from_terms(terms: &[(Quad, T)]) -> Result<Self> {
        let mut matrix = Mat8::zeros();
        for &([p, q, s, t], c) in terms {
            let g = two_body_operator_matrix::<T>(p, q, s, t)?;
            matrix += (g - g.transpose()) * c;
        }
        Ok(Self { coefficients: terms.to_vec(), matrix })
    }

    pub fn matrix(&self) -> &Mat8<T> {
        &self.matrix
    }

    /// Splits into one antisymmetric matrix per term, for product formulas.
    fn term_matrices(&self) -> Vec<Mat8<T>> {
        self.coefficients
            .iter()
            .filter(|(_, c)| *c != T::zero())
            .map(|&([p, q, s, t], c)| {
                let g = two_body_operator_matrix::<T>(p, q, s, t).expect("validated at construction");
                (g - g.transpose()) * c
            })
            .collect()
    }
}

/// How `exp(A)` is realized on the register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exponential {
    #[default]
    Exact,
    /// First-order product formula with this many steps.
    Trotter(usize),
}

impl std::str::FromStr for Exponential {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("exact") {
            return Ok(Self::Exact);
        }
        match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(Self::Trotter(k)),
            _ => Err(Error::Parse(format!("trotter steps must be a positive integer or 'exact', got {s:?}"))),
        }
    }
}

impl std::fmt::Display for Exponential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Exact => write!(f, "exact"),
            Self::Trotter(k) => write!(f, "{k}"),
        }
    }
}

/// Orthogonal propagator for a generator.
pub fn unitary<T: Real>(gen: &TwoBodyGenerator<T>, mode: Exponential) -> Mat8<T> {
    match mode {
        Exponential::Exact => gen.matrix().exp(),
        Exponential::Trotter(steps) => {
            let inv = T::one() / lit::<T>(steps as f64);
            let step = gen.term_matrices().iter().fold(Mat8::identity(), |u, k| (k * inv).exp() * u);
            (0..steps).fold(Mat8::identity(), |u, _| step * u)
        }
    }
}

/// Applies a real orthogonal matrix, then the noise channel to mixed states.
pub fn apply_unitary<T: Real>(
    state: &RegisterState<T>,
    u: &Mat8<T>,
    noise: Option<&NoiseModel<T>>,
) -> RegisterState<T> {
    let out = state.evolve(&complexify(u));
    match (noise, &out) {
        (Some(n), RegisterState::Mixed(_)) => apply_noise_channel(&out, n).expect("mixed state"),
        _ => out,
    }
}

/// `ψ ← exp(A) ψ`, or `ρ ← U ρ Uᵀ` followed by the channel.
pub fn apply_generator<T: Real>(
    state: &RegisterState<T>,
    gen: &TwoBodyGenerator<T>,
    noise: Option<&NoiseModel<T>>,
) -> RegisterState<T> {
    apply_generator_with(state, gen, noise, Exponential::Exact)
}

pub fn apply_generator_with<T: Real>(
    state: &RegisterState<T>,
    gen: &TwoBodyGenerator<T>,
    noise: Option<&NoiseModel<T>>,
    mode: Exponential,
) -> RegisterState<T> {
    apply_unitary(state, &unitary(gen, mode), noise)
}

fn check_symmetric<T: Real>(m: &Mat8<T>) -> Result<()> {
    let defect = (m - m.transpose()).amax();
    let tol = lit::<T>(SYMMETRY_TOL).max(T::default_epsilon() * lit(64.0));
    if defect > tol * (T::one() + m.amax()) {
        return Err(Error::NonSymmetricOperator(defect.to_f64()));
    }
    Ok(())
}

/// `⟨ψ|M|ψ⟩` or `Tr(ρM)`.
pub fn expectation<T: Real>(state: &RegisterState<T>, m: &Mat8<T>) -> Result<T> {
    check_symmetric(m)?;
    let mc = complexify(m);
    let z = match state {
        RegisterState::Pure(v) => v.dotc(&(mc * v)),
        RegisterState::Mixed(rho) => (rho * mc).trace(),
    };
    debug_assert!(z.im.abs() < lit::<T>(1e-10) * (T::one() + z.re.abs()));
    Ok(z.re)
}

/// `Tr(ρ(M + diag ξ))` with the readout bias of one measurement context.
pub fn readout_expectation<T: Real>(state: &RegisterState<T>, m: &Mat8<T>, readout: &Readout<T>) -> Result<T> {
    expectation(state, &readout.perturb(m))
}

/// `ρ ← (1−λ)ρ + λ I/8`.
pub fn apply_noise_channel<T: Real>(state: &RegisterState<T>, noise: &NoiseModel<T>) -> Result<RegisterState<T>> {
    match state {
        RegisterState::Pure(_) => Err(Error::PureStateNoise),
        RegisterState::Mixed(rho) => {
            let l = noise.depolarizing;
            let mixed = CMat8::identity().unscale(lit(COMPACT_DIM as f64));
            Ok(RegisterState::Mixed(rho.scale(T::one() - l) + mixed.scale(l)))
        }
    }
}

/// Two-body reduced density matrix `²D^{pq}_{st} = ⟨Γ^{pq}_{st}⟩` over spin orbitals.
#[derive(Clone, Debug, PartialEq)]
pub struct Rdm2<T: Real> {
    data: Vec<Complex<T>>,
}

const N4: usize = N_SPIN_ORBITALS * N_SPIN_ORBITALS * N_SPIN_ORBITALS * N_SPIN_ORBITALS;

fn idx4(p: usize, q: usize, s: usize, t: usize) -> usize {
    ((p * N_SPIN_ORBITALS + q) * N_SPIN_ORBITALS + s) * N_SPIN_ORBITALS + t
}

impl<T: Real> Rdm2<T> {
    pub fn get(&self, p: usize, q: usize, s: usize, t: usize) -> Complex<T> {
        self.data[idx4(p, q, s, t)]
    }

    /// `Σ_pq ²D^{pq}_{pq}`, equal to `N(N−1) = 2`.
    pub fn trace(&self) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for p in 0..N_SPIN_ORBITALS {
            for q in 0..N_SPIN_ORBITALS {
                acc += self.get(p, q, p, q);
            }
        }
        acc
    }

    /// `max |²D^{pq}_{st} − conj(²D^{st}_{pq})|`.
    pub fn hermiticity_defect(&self) -> T {
        self.fold_defect(|d, [p, q, s, t]| d.get(p, q, s, t) - d.get(s, t, p, q).conj())
    }

    /// `max` over `|D^{pq}_{st} + D^{qp}_{st}|` and `|D^{pq}_{st} + D^{pq}_{ts}|`.
    pub fn antisymmetry_defect(&self) -> T {
        let a = self.fold_defect(|d, [p, q, s, t]| d.get(p, q, s, t) + d.get(q, p, s, t));
        let b = self.fold_defect(|d, [p, q, s, t]| d.get(p, q, s, t) + d.get(p, q, t, s));
        a.max(b)
    }

    fn fold_defect(&self, f: impl Fn(&Self, Quad) -> Complex<T>) -> T {
        let mut worst = T::zero();
        for p in 0..N_SPIN_ORBITALS {
            for q in 0..N_SPIN_ORBITALS {
                for s in 0..N_SPIN_ORBITALS {
                    for t in 0..N_SPIN_ORBITALS {
                        worst = worst.max(nalgebra::ComplexField::modulus(f(self, [p, q, s, t])));
                    }
                }
            }
        }
        worst
    }

    /// `¹D_ps = Σ_q ²D^{pq}_{sq} / (N−1)`, real part.
    pub fn one_rdm(&self) -> SMatrix<T, 6, 6> {
        SMatrix::from_fn(|p, s| (0..N_SPIN_ORBITALS).fold(T::zero(), |acc, q| acc + self.get(p, q, s, q).re))
    }

    /// `E = Σ h_ps ¹D_ps + ½ Σ ⟨pq|st⟩ ²D^{pq}_{st} + E_nuc` with spatial MO integrals.
    pub fn energy(&self, h: &nalgebra::Matrix3<T>, g: &Tensor4<T>, e_nuc: T) -> T {
        let d1 = self.one_rdm();
        let mut e = e_nuc;
        for p in 0..N_SPIN_ORBITALS {
            for s in 0..N_SPIN_ORBITALS {
                if spin_of(p) == spin_of(s) {
                    e += h[(p % N_SPATIAL, s % N_SPATIAL)] * d1[(p, s)];
                }
            }
        }
        let half = lit::<T>(0.5);
        for p in 0..N_SPIN_ORBITALS {
            for q in 0..N_SPIN_ORBITALS {
                for s in 0..N_SPIN_ORBITALS {
                    for t in 0..N_SPIN_ORBITALS {
                        if spin_of(p) != spin_of(s) || spin_of(q) != spin_of(t) {
                            continue;
                        }
                        let v = g.get(p % N_SPATIAL, s % N_SPATIAL, q % N_SPATIAL, t % N_SPATIAL);
                        e += half * v * self.get(p, q, s, t).re;
                    }
                }
            }
        }
        e
    }
}

/// `²D^{pq}_{st} = Tr(ρ Γ^{pq}_{st})` with `ρ` embedded into the nine-determinant space.
pub fn measure_2rdm<T: Real>(state: &RegisterState<T>) -> Rdm2<T> {
    let rho8 = state.density();
    let mut rho9 = SMatrix::<Complex<T>, 9, 9>::zeros();
    rho9.fixed_view_mut::<8, 8>(1, 1).copy_from(&rho8);
    let mut data = vec![Complex::new(T::zero(), T::zero()); N4];
    for p in 0..N_SPIN_ORBITALS {
        for q in 0..N_SPIN_ORBITALS {
            for s in 0..N_SPIN_ORBITALS {
                for t in 0..N_SPIN_ORBITALS {
                    let g = two_body_operator_matrix9::<T>(p, q, s, t).expect("valid index");
                    if g.amax() == T::zero() {
                        continue;
                    }
                    let gc = g.map(|x| Complex::new(x, T::zero()));
                    data[idx4(p, q, s, t)] = (rho9 * gc).trace();
                }
            }
        }
    }
    Rdm2 { data }
}

/// Embeds a register operator and returns it on the nine-determinant space.
pub fn to_full_space<T: Real>(m: &Mat8<T>) -> crate::hamiltonian::Mat9<T> {
    embed_operator(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fci::FciPoint;
    use crate::geometry::MolecularGeometry;
    use rand::Rng;

    fn random_state(rng: &mut ChaCha8Rng) -> RegisterState<f64> {
        RegisterState::from_real(&SVector::from_fn(|_, _| rng.random_range(-1.0..1.0)))
    }

    fn random_generator(rng: &mut ChaCha8Rng, pool: &OperatorPool<f64>, scale: f64) -> TwoBodyGenerator<f64> {
        let c: Vec<f64> = (0..pool.len()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        TwoBodyGenerator::from_pool(pool, &c)
    }

    fn taylor_exp(a: &Mat8<f64>) -> Mat8<f64> {
        let s = 6;
        let scaled = a / f64::from(1 << s);
        let mut term = Mat8::identity();
        let mut sum = Mat8::identity();
        for k in 1..=64 {
            term = term * scaled / f64::from(k);
            sum += term;
        }
        (0..s).fold(sum, |m, _| m * m)
    }

    fn point() -> FciPoint<f64> {
        FciPoint::compute(&MolecularGeometry::new(1.0, 2.2, 1.2).unwrap()).unwrap()
    }

    #[test]
    fn pool_sizes() {
        assert_eq!(canonical_quads().len(), 42);
        let pool = OperatorPool::<f64>::new();
        assert_eq!(pool.len(), 28);
        for k in &pool.matrices {
            assert_eq!(*k, -k.transpose());
        }
    }

    #[test]
    fn zero_generator_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_state(&mut rng);
        assert_eq!(apply_generator(&s, &TwoBodyGenerator::zero(), None), s);
    }

    #[test]
    fn exponential_matches_taylor_oracle_and_preserves_norm() {
        let pool = OperatorPool::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let g = random_generator(&mut rng, &pool, 0.7);
            let u = unitary(&g, Exponential::Exact);
            assert!((u - taylor_exp(g.matrix())).amax() < 1e-12);
            assert!((u.transpose() * u - Mat8::identity()).amax() < 1e-12);
        }
        let mut s = random_state(&mut rng);
        for _ in 0..100 {
            s = apply_generator(&s, &random_generator(&mut rng, &pool, 0.3), None);
        }
        assert!(s.normalization_defect() < 1e-10);
    }

    #[test]
    fn trotter_converges_to_exact() {
        let pool = OperatorPool::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_generator(&mut rng, &pool, 0.05);
        let exact = unitary(&g, Exponential::Exact);
        let e1 = (unitary(&g, Exponential::Trotter(1)) - exact).amax();
        let e8 = (unitary(&g, Exponential::Trotter(8)) - exact).amax();
        assert!(e8 < e1 / 4.0, "{e1} {e8}");
        assert!(e8 < 1e-3);
    }

    #[test]
    fn expectation_checks() {
        let p = point();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_state(&mut rng);
        assert!((expectation(&s, &Mat8::identity()).unwrap() - 1.0).abs() < 1e-12);
        let v = s.real_amplitudes().unwrap();
        let direct = (v.transpose() * p.hamiltonian.h8 * v)[(0, 0)];
        assert!((expectation(&s, &p.hamiltonian.h8).unwrap() - direct).abs() < 1e-12);
        let mixed = expectation(&s.to_mixed(), &p.hamiltonian.h8).unwrap();
        assert!((mixed - direct).abs() < 1e-12);
        let mut bad = Mat8::identity();
        bad[(0, 1)] = 1.0;
        assert!(matches!(expectation(&s, &bad), Err(Error::NonSymmetricOperator(_))));
    }

    #[test]
    fn eigenstate_has_zero_variance() {
        let p = point();
        let eig = p.hamiltonian.h8.symmetric_eigen();
        let s = RegisterState::from_real(&eig.eigenvectors.column(3).into_owned());
        let e = expectation(&s, &p.hamiltonian.h8).unwrap();
        let e2 = expectation(&s, &p.hamiltonian.h8_sq).unwrap();
        assert!((e2 - e * e).abs() < 1e-10);
    }

    #[test]
    fn rdm_invariants_and_energy_identity() {
        let p = point();
        let h = &p.hamiltonian;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let s = random_state(&mut rng);
            let d = measure_2rdm(&s);
            assert!((d.trace().re - 2.0).abs() < 1e-10);
            assert!(d.hermiticity_defect() < 1e-10);
            assert!(d.antisymmetry_defect() < 1e-10);
            let e = expectation(&s, &h.h8).unwrap();
            assert!((d.energy(&h.h_mo, &h.g_mo, h.e_nuc) - e).abs() < 1e-10);
        }
    }

    #[test]
    fn single_determinant_rdm() {
        // |12⟩: α in MO 1 (spin orbital 0), β in MO 2 (spin orbital 4)
        let d = measure_2rdm(&RegisterState::<f64>::basis(0));
        for p in 0..6 {
            for q in 0..6 {
                for s in 0..6 {
                    for t in 0..6 {
                        let expect = match (p, q, s, t) {
                            (0, 4, 0, 4) | (4, 0, 4, 0) => 1.0,
                            (0, 4, 4, 0) | (4, 0, 0, 4) => -1.0,
                            _ => 0.0,
                        };
                        assert_eq!(d.get(p, q, s, t).re, expect, "{p}{q}{s}{t}");
                    }
                }
            }
        }
    }

    #[test]
    fn noise_channel_limits() {
        let p = point();
        let h8 = &p.hamiltonian.h8;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_state(&mut rng);
        assert!(matches!(
            apply_noise_channel(&s, &NoiseModel::depolarizing(0.1, 0).unwrap()),
            Err(Error::PureStateNoise)
        ));
        let m = s.to_mixed();
        assert_eq!(apply_noise_channel(&m, &NoiseModel::depolarizing(0.0, 0).unwrap()).unwrap(), m);
        let full = apply_noise_channel(&m, &NoiseModel::depolarizing(1.0, 0).unwrap()).unwrap();
        assert!((expectation(&full, h8).unwrap() - p.hamiltonian.mixed_energy()).abs() < 1e-12);

        let eig = h8.symmetric_eigen();
        let lambda = 0.02;
        let eigenstate = RegisterState::from_real(&eig.eigenvectors.column(0).into_owned()).to_mixed();
        let noisy = apply_noise_channel(&eigenstate, &NoiseModel::depolarizing(lambda, 0).unwrap()).unwrap();
        let e = eig.eigenvalues[0];
        let expect = e + lambda * (p.hamiltonian.mixed_energy() - e);
        assert!((expectation(&noisy, h8).unwrap() - expect).abs() < 1e-12);
        assert!(noisy.min_eigenvalue() > -1e-10);
        assert!(noisy.normalization_defect() < 1e-12);
        assert!(NoiseModel::depolarizing(1.5, 0).is_err());
    }

    #[test]
    fn readout_is_deterministic_per_key() {
        let n = NoiseModel::new(0.0, 1e-3, 7).unwrap();
        assert_eq!(n.readout(3), n.readout(3));
        assert_ne!(n.readout(3), n.readout(4));
        assert_ne!(n.readout(3), NoiseModel::new(0.0, 1e-3, 8).unwrap().readout(3));
        let quiet = NoiseModel::new(0.2, 0.0, 7).unwrap();
        assert_eq!(quiet.readout(3).bias, SVector::<f64, 8>::zeros());
    }

    #[test]
    fn mixed_evolution_keeps_trace() {
        let pool = OperatorPool::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = NoiseModel::depolarizing(0.05, 0).unwrap();
        let mut s = random_state(&mut rng).to_mixed();
        for _ in 0..10 {
            s = apply_generator(&s, &random_generator(&mut rng, &pool, 0.2), Some(&noise));
        }
        assert!(s.normalization_defect() < 1e-12);
        assert!(s.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn trotter_parses() {
        assert_eq!("exact".parse::<Exponential>().unwrap(), Exponential::Exact);
        assert_eq!("4".parse::<Exponential>().unwrap(), Exponential::Trotter(4));
        assert!("0".parse::<Exponential>().is_err());
    }
}
