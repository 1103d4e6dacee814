//! Determinant space, the three-qubit compact mapping, and operator matrices.
//!
//! Spin orbitals are ordered `(1α, 2α, 3α, 1β, 2β, 3β)` → `0..6`. A two-electron
//! `S_z = 0` determinant `|ij⟩ = a†_{iα} a†_{jβ} |vac⟩` puts the α electron in
//! MO `i` and the β electron in MO `j`. The nine determinants are ordered
//! lexicographically; the compact register drops `|11⟩` and keeps
//! `|12⟩,|13⟩,|21⟩,|22⟩,|23⟩,|31⟩,|32⟩,|33⟩` as indices `0..8`.

use std::fmt::Write as _;

use nalgebra::{Matrix3, SMatrix};

use crate::error::{Error, Result};
use crate::integrals::{IntegralSet, Tensor4};
use crate::scalar::{lit, Real};
use crate::scf::ScfResult;

pub type Mat8<T> = SMatrix<T, 8, 8>;
pub type Mat9<T> = SMatrix<T, 9, 9>;

pub const N_SPATIAL: usize = 3;
pub const N_SPIN_ORBITALS: usize = 6;
pub const N_DETERMINANTS: usize = 9;
pub const COMPACT_DIM: usize = 8;
pub const QUBIT_COUNT: usize = 3;

/// `|ij⟩` label with zero-based MO indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Determinant {
    pub alpha: usize,
    pub beta: usize,
}

impl Determinant {
    pub fn occupation(self) -> u8 {
        (1 << self.alpha) | (1 << (N_SPATIAL + self.beta))
    }

    fn from_occupation(bits: u8) -> Option<Self> {
        let alpha = (bits & 0b000_111).trailing_zeros() as usize;
        let beta = ((bits >> N_SPATIAL) & 0b111).trailing_zeros() as usize;
        let ok = bits.count_ones() == 2 && alpha < N_SPATIAL && beta < N_SPATIAL;
        ok.then_some(Self { alpha, beta })
    }

    /// Index in the nine-determinant basis.
    pub fn full_index(self) -> usize {
        self.alpha * N_SPATIAL + self.beta
    }

    /// Index on the compact register, `None` for `|11⟩`.
    pub fn compact_index(self) -> Option<usize> {
        self.full_index().checked_sub(1)
    }

    pub fn exchanged(self) -> Self {
        Self { alpha: self.beta, beta: self.alpha }
    }

    pub fn label(self) -> String {
        format!("|{}{}>", self.alpha + 1, self.beta + 1)
    }
}

/// The nine `S_z = 0` determinants in lexicographic order.
pub fn determinant_basis() -> [Determinant; N_DETERMINANTS] {
    std::array::from_fn(|k| Determinant { alpha: k / N_SPATIAL, beta: k % N_SPATIAL })
}

/// The eight determinants kept on the register (all but `|11⟩`).
pub fn compact_basis() -> [Determinant; COMPACT_DIM] {
    std::array::from_fn(|k| determinant_basis()[k + 1])
}

/// Projects a nine-determinant operator onto the register by deleting `|11⟩`.
pub fn project_to_compact<T: Real>(m: &Mat9<T>) -> Mat8<T> {
    m.fixed_view::<8, 8>(1, 1).into_owned()
}

/// Embeds a register vector or operator back into the nine-determinant space.
pub fn embed_operator<T: Real>(m: &Mat8<T>) -> Mat9<T> {
    let mut out = Mat9::zeros();
    out.fixed_view_mut::<8, 8>(1, 1).copy_from(m);
    out
}

/// Label-swap operator `|ij⟩ → |ji⟩`: +1 on singlets, −1 on `M_s = 0` triplets.
pub fn exchange_operator9<T: Real>() -> Mat9<T> {
    let mut m = Mat9::zeros();
    for d in determinant_basis() {
        m[(d.exchanged().full_index(), d.full_index())] = T::one();
    }
    m
}

pub fn exchange_operator8<T: Real>() -> Mat8<T> {
    project_to_compact(&exchange_operator9())
}

fn annihilate(bits: u8, k: usize) -> Option<(u8, bool)> {
    if bits & (1 << k) == 0 {
        return None;
    }
    let odd = (bits & ((1u8 << k) - 1)).count_ones() % 2 == 1;
    Some((bits & !(1 << k), odd))
}

fn create(bits: u8, k: usize) -> Option<(u8, bool)> {
    if bits & (1 << k) != 0 {
        return None;
    }
    let odd = (bits & ((1u8 << k) - 1)).count_ones() % 2 == 1;
    Some((bits | (1 << k), odd))
}

/// Applies a product of ladder operators (rightmost first). `true` marks a creator.
fn apply_string(bits: u8, ops: &[(usize, bool)]) -> Option<(u8, bool)> {
    let mut state = bits;
    let mut negative = false;
    for &(k, creator) in ops.iter().rev() {
        let (next, odd) = if creator { create(state, k)? } else { annihilate(state, k)? };
        state = next;
        negative ^= odd;
    }
    Some((state, negative))
}

fn is_alpha(k: usize) -> bool {
    k < N_SPATIAL
}

fn check_index(k: usize) -> Result<()> {
    if k >= N_SPIN_ORBITALS {
        Err(Error::IndexOutOfRange(k))
    } else {
        Ok(())
    }
}

fn string_matrix<T: Real>(ops: &[(usize, bool)]) -> Mat9<T> {
    let mut m = Mat9::zeros();
    for col in determinant_basis() {
        if let Some((bits, negative)) = apply_string(col.occupation(), ops) {
            let row = Determinant::from_occupation(bits).expect("S_z-conserving string stays in the space");
            m[(row.full_index(), col.full_index())] = if negative { -T::one() } else { T::one() };
        }
    }
    m
}

/// `Γ(p,q,s,t) = a†_p a†_q a_t a_s` over the nine determinants.
///
/// Index combinations that change `S_z` give the zero matrix.
pub fn two_body_operator_matrix9<T: Real>(p: usize, q: usize, s: usize, t: usize) -> Result<Mat9<T>> {
    for k in [p, q, s, t] {
        check_index(k)?;
    }
    let created = usize::from(is_alpha(p)) + usize::from(is_alpha(q));
    let removed = usize::from(is_alpha(s)) + usize::from(is_alpha(t));
    if created != removed {
        return Ok(Mat9::zeros());
    }
    Ok(string_matrix(&[(p, true), (q, true), (t, false), (s, false)]))
}

/// [`two_body_operator_matrix9`] projected onto the register.
pub fn two_body_operator_matrix<T: Real>(p: usize, q: usize, s: usize, t: usize) -> Result<Mat8<T>> {
    two_body_operator_matrix9(p, q, s, t).map(|m| project_to_compact(&m))
}

/// `a†_p a_q` over the nine determinants (zero if the spins differ).
pub fn one_body_operator_matrix9<T: Real>(p: usize, q: usize) -> Result<Mat9<T>> {
    check_index(p)?;
    check_index(q)?;
    if is_alpha(p) != is_alpha(q) {
        return Ok(Mat9::zeros());
    }
    Ok(string_matrix(&[(p, true), (q, false)]))
}

/// MO-basis one- and two-electron integrals, `h = Cᵀ(T+V)C` and the 4-index transform.
pub fn transform_to_mo<T: Real>(ints: &IntegralSet<T>, scf: &ScfResult<T>) -> (Matrix3<T>, Tensor4<T>) {
    transform_with(ints, &scf.coefficients)
}

/// MO transform with an arbitrary coefficient matrix.
pub fn transform_with<T: Real>(ints: &IntegralSet<T>, c: &Matrix3<T>) -> (Matrix3<T>, Tensor4<T>) {
    let h = c.transpose() * ints.core_hamiltonian() * c;
    // quarter transforms, one index at a time
    let mut a = Tensor4::zeros();
    let mut b = Tensor4::zeros();
    for i in 0..3 {
        for q in 0..3 {
            for r in 0..3 {
                for s in 0..3 {
                    let v = (0..3).fold(T::zero(), |acc, p| acc + c[(p, i)] * ints.eri.get(p, q, r, s));
                    a.set(i, q, r, s, v);
                }
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            for r in 0..3 {
                for s in 0..3 {
                    let v = (0..3).fold(T::zero(), |acc, q| acc + c[(q, j)] * a.get(i, q, r, s));
                    b.set(i, j, r, s, v);
                }
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for s in 0..3 {
                    let v = (0..3).fold(T::zero(), |acc, r| acc + c[(r, k)] * b.get(i, j, r, s));
                    a.set(i, j, k, s, v);
                }
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let v = (0..3).fold(T::zero(), |acc, s| acc + c[(s, l)] * a.get(i, j, k, s));
                    b.set(i, j, k, l, v);
                }
            }
        }
    }
    (h, b)
}

/// Hamiltonian matrices on the full and compact spaces.
#[derive(Clone, Debug)]
pub struct MolecularHamiltonian<T: Real> {
    pub h_mo: Matrix3<T>,
    pub g_mo: Tensor4<T>,
    pub e_nuc: T,
    pub h9: Mat9<T>,
    pub h8: Mat8<T>,
    /// `(H8)²`: the register sees the projected Hamiltonian, then squares it.
    pub h8_sq: Mat8<T>,
}

/// Slater–Condon assembly over the nine determinants; `E_nuc` sits on the diagonal.
pub fn build_hamiltonian_matrices<T: Real>(h: Matrix3<T>, g: Tensor4<T>, e_nuc: T) -> MolecularHamiltonian<T> {
    let basis = determinant_basis();
    let h9 = Mat9::from_fn(|a, b| {
        let (x, y) = (basis[a], basis[b]);
        let mut v = g.get(x.alpha, y.alpha, x.beta, y.beta);
        if x.beta == y.beta {
            v += h[(x.alpha, y.alpha)];
        }
        if x.alpha == y.alpha {
            v += h[(x.beta, y.beta)];
        }
        if a == b {
            v += e_nuc;
        }
        v
    });
    let h8 = project_to_compact(&h9);
    MolecularHamiltonian { h_mo: h, g_mo: g, e_nuc, h9, h8, h8_sq: h8 * h8 }
}

/// `Σ h_pq a†_p a_q + ½ Σ (pq|rs) a†_{pσ} a†_{rτ} a_{sτ} a_{qσ} + E_nuc` assembled from ladder-operator matrices.
pub fn hamiltonian_from_operators<T: Real>(h: &Matrix3<T>, g: &Tensor4<T>, e_nuc: T) -> Mat9<T> {
    let mut out = Mat9::identity() * e_nuc;
    let so = |spatial: usize, spin: usize| spatial + N_SPATIAL * spin;
    for spin in 0..2 {
        for p in 0..3 {
            for q in 0..3 {
                let m = one_body_operator_matrix9::<T>(so(p, spin), so(q, spin)).expect("valid index");
                out += m * h[(p, q)];
            }
        }
    }
    let half = lit::<T>(0.5);
    for sigma in 0..2 {
        for tau in 0..2 {
            for p in 0..3 {
                for q in 0..3 {
                    for r in 0..3 {
                        for s in 0..3 {
                            let v = g.get(p, q, r, s);
                            if v == T::zero() {
                                continue;
                            }
                            let m = two_body_operator_matrix9::<T>(so(p, sigma), so(r, tau), so(q, sigma), so(s, tau))
                                .expect("valid index");
                            out += m * (v * half);
                        }
                    }
                }
            }
        }
    }
    out
}

impl<T: Real> MolecularHamiltonian<T> {
    pub fn from_scf(ints: &IntegralSet<T>, scf: &ScfResult<T>) -> Self {
        let (h, g) = transform_to_mo(ints, scf);
        build_hamiltonian_matrices(h, g, ints.e_nuc)
    }

    /// `Tr(H8)/8`, the energy of the maximally mixed register state.
    pub fn mixed_energy(&self) -> T {
        self.h8.trace() / lit(8.0)
    }

    /// `H8` as plain text: eight rows, 17 significant digits, row-major.
    pub fn dump_h8(&self) -> String {
        let mut out = String::new();
        for r in 0..8 {
            let row: Vec<String> = (0..8).map(|c| format!("{:.16e}", self.h8[(r, c)].to_f64())).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}
