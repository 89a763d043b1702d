//! Exact joint states of an n-qubit register and one coherent probe mode.
//!
//! Every state this crate manipulates stays inside the closed family
//!
//! ```text
//!     rho = sum over (v, v') of  c(v,v') |v><v'| (x) |a(v)><a(v')|
//! ```
//!
//! where `v, v'` run over computational basis labels of the register and
//! `a(v)` are coherent amplitudes of the probe. Displacements, conditional
//! rotations, loss, and the dispersive interaction all map this family to
//! itself, so the representation — one [`Branch`] per index pair — is exact:
//! there is no truncation and no time discretization anywhere in the engine.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QubusError, Result};
use crate::linalg;

/// Hard cap on register size; branch count grows as `4^n`.
pub const MAX_QUBITS: usize = 8;

/// Tolerance for structural invariants (hermiticity, trace, positivity).
pub const STRUCT_TOL: f64 = 1e-9;

/// Computational basis label for the register.
///
/// Bit `k` of qubit `k` is stored so that qubit 0 is the most significant
/// bit: the raw value doubles as the row/column index of the corresponding
/// density-matrix entry. The associated eigenvalue of `Z` on qubit `k` is
/// `z_k = (-1)^bit_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex(pub u16);

impl BasisIndex {
    pub fn bit(self, qubit: usize, n_qubits: usize) -> u8 {
        debug_assert!(qubit < n_qubits);
        ((self.0 >> (n_qubits - 1 - qubit)) & 1) as u8
    }

    /// `+1` for bit 0, `-1` for bit 1.
    pub fn z(self, qubit: usize, n_qubits: usize) -> f64 {
        if self.bit(qubit, n_qubits) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn bits(self, n_qubits: usize) -> Vec<u8> {
        (0..n_qubits).map(|k| self.bit(k, n_qubits)).collect()
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One term `c |ket><bra| (x) |ket_amp><bra_amp|` of the branch expansion.
#[derive(Clone, Copy, Debug)]
pub struct Branch {
    pub ket: BasisIndex,
    pub bra: BasisIndex,
    /// Dimensionless weight; `|coeff| <= 1` for physical inputs.
    pub coeff: Complex64,
    /// Coherent amplitude attached to the ket side.
    pub ket_amp: Complex64,
    /// Coherent amplitude attached to the bra side.
    pub bra_amp: Complex64,
}

/// Exponent of the coherent-state overlap, `log <bra|ket>`.
///
/// The convention used throughout is
/// `<b|a> = exp(-|a|^2/2 - |b|^2/2 + conj(b) a)`.
/// Working in the exponent keeps amplitudes of order 1e4 finite until the
/// final exponentiation, and makes the diagonal case (`a == b`) exactly zero
/// in floating point, which in turn keeps traces exactly normalized.
pub fn overlap_exponent(ket: Complex64, bra: Complex64) -> Complex64 {
    Complex64::new(-0.5 * ket.norm_sqr() - 0.5 * bra.norm_sqr(), 0.0) + bra.conj() * ket
}

/// The coherent-state overlap `<bra|ket>` itself.
pub fn coherent_overlap(ket: Complex64, bra: Complex64) -> Complex64 {
    overlap_exponent(ket, bra).exp()
}

/// Joint register-probe state in the exact branch representation.
///
/// Hermiticity pairing and unit trace are established at construction and
/// preserved by every channel operation; [`HybridState::validate`] re-checks
/// them on demand.
#[derive(Clone, Debug)]
pub struct HybridState {
    n_qubits: usize,
    branches: BTreeMap<(u16, u16), Branch>,
}

impl HybridState {
    /// Product state `qubit_density (x) |probe_amp><probe_amp|`.
    ///
    /// The register density must be Hermitian, unit trace, and PSD within
    /// `1e-9`; violations are reported by name.
    pub fn new_product_state(
        qubit_density: &DMatrix<Complex64>,
        probe_amp: Complex64,
    ) -> Result<Self> {
        let dim = qubit_density.nrows();
        if qubit_density.ncols() != dim || !dim.is_power_of_two() || dim < 2 {
            return Err(QubusError::DimensionMismatch(format!(
                "qubit density must be 2^n x 2^n with n >= 1, got {}x{}",
                dim,
                qubit_density.ncols()
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(QubusError::InvalidParameter(format!(
                "register of {n_qubits} qubits exceeds the supported maximum of {MAX_QUBITS}"
            )));
        }
        let herm = linalg::hermiticity_defect(qubit_density);
        if herm > STRUCT_TOL {
            return Err(QubusError::InvalidState(format!(
                "qubit density is not Hermitian (defect {herm:.3e})"
            )));
        }
        let tr = qubit_density.trace();
        if (tr.re - 1.0).abs() > STRUCT_TOL || tr.im.abs() > STRUCT_TOL {
            return Err(QubusError::InvalidState(format!(
                "qubit density has trace {tr} instead of 1"
            )));
        }
        let min_eig = linalg::min_eigenvalue(qubit_density);
        if min_eig < -STRUCT_TOL {
            return Err(QubusError::InvalidState(format!(
                "qubit density is not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }

        let mut branches = BTreeMap::new();
        for k in 0..dim {
            for b in 0..dim {
                branches.insert(
                    (k as u16, b as u16),
                    Branch {
                        ket: BasisIndex(k as u16),
                        bra: BasisIndex(b as u16),
                        coeff: qubit_density[(k, b)],
                        ket_amp: probe_amp,
                        bra_amp: probe_amp,
                    },
                );
            }
        }
        Ok(Self { n_qubits, branches })
    }

    /// `|+...+><+...+| (x) |probe_amp><probe_amp|`, the standard input for
    /// gate sequences: every branch carries weight `2^-n`.
    pub fn plus_state(n_qubits: usize, probe_amp: Complex64) -> Result<Self> {
        Self::new_product_state(&plus_density(n_qubits), probe_amp)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn branches(&self) -> impl Iterator<Item = &Branch> {
        self.branches.values()
    }

    pub(crate) fn branches_mut(&mut self) -> impl Iterator<Item = &mut Branch> {
        self.branches.values_mut()
    }

    pub fn branch(&self, ket: BasisIndex, bra: BasisIndex) -> Option<&Branch> {
        self.branches.get(&(ket.0, bra.0))
    }

    /// Sum of diagonal coefficients; equals the trace of the physical state.
    pub fn trace(&self) -> Complex64 {
        self.branches
            .values()
            .filter(|b| b.ket == b.bra)
            .map(|b| b.coeff)
            .sum()
    }

    /// Largest coherent amplitude modulus over all branches.
    pub fn max_amplitude(&self) -> f64 {
        self.branches
            .values()
            .flat_map(|b| [b.ket_amp.norm(), b.bra_amp.norm()])
            .fold(0.0, f64::max)
    }

    /// If every branch amplitude (ket and bra) agrees within `tol`, the probe
    /// has disentangled from the register; returns the common amplitude.
    pub fn uniform_amplitude(&self, tol: f64) -> Option<Complex64> {
        let first = self.branches.values().next()?.ket_amp;
        for b in self.branches.values() {
            if (b.ket_amp - first).norm() > tol || (b.bra_amp - first).norm() > tol {
                return None;
            }
        }
        Some(first)
    }

    /// Partial trace over the probe: entry `(v, v')` is
    /// `coeff(v,v') * <bra_amp|ket_amp>`.
    pub fn reduce_qubits(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut out = DMatrix::from_element(dim, dim, linalg::ZERO);
        for b in self.branches.values() {
            out[(b.ket.index(), b.bra.index())] =
                b.coeff * overlap_exponent(b.ket_amp, b.bra_amp).exp();
        }
        out
    }

    /// Elementwise channel kernel relative to an initial register density,
    /// defined once the probe has disentangled (all branch amplitudes equal
    /// within `1e-9`). Every entry of `initial` must be nonzero.
    pub fn dephasing_kernel(&self, initial: &DMatrix<Complex64>) -> Result<DephasingKernel> {
        let dim = self.dim();
        if initial.nrows() != dim || initial.ncols() != dim {
            return Err(QubusError::DimensionMismatch(format!(
                "initial density is {}x{}, state needs {dim}x{dim}",
                initial.nrows(),
                initial.ncols()
            )));
        }
        if self.uniform_amplitude(STRUCT_TOL).is_none() {
            return Err(QubusError::InvalidState(
                "probe has not disentangled: branch amplitudes differ".into(),
            ));
        }
        let reduced = self.reduce_qubits();
        let mut g = DMatrix::from_element(dim, dim, linalg::ZERO);
        for i in 0..dim {
            for j in 0..dim {
                let denom = initial[(i, j)];
                if denom.norm() == 0.0 {
                    return Err(QubusError::InvalidState(format!(
                        "initial density entry ({i},{j}) vanishes; kernel is undefined there"
                    )));
                }
                g[(i, j)] = reduced[(i, j)] / denom;
            }
        }
        DephasingKernel::new(self.n_qubits, g)
    }

    /// Re-checks the structural invariants: Hermitian pairing of branches,
    /// unit trace, equal amplitudes on diagonal branches.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > STRUCT_TOL || tr.im.abs() > STRUCT_TOL {
            return Err(QubusError::InvalidState(format!(
                "trace drifted to {tr} (expected 1)"
            )));
        }
        for b in self.branches.values() {
            let Some(mirror) = self.branches.get(&(b.bra.0, b.ket.0)) else {
                return Err(QubusError::InvalidState(format!(
                    "missing Hermitian partner of branch ({}, {})",
                    b.ket.0, b.bra.0
                )));
            };
            if (b.coeff - mirror.coeff.conj()).norm() > STRUCT_TOL
                || (b.ket_amp - mirror.bra_amp).norm() > STRUCT_TOL
                || (b.bra_amp - mirror.ket_amp).norm() > STRUCT_TOL
            {
                return Err(QubusError::InvalidState(format!(
                    "branch ({}, {}) is not the conjugate of its mirror",
                    b.ket.0, b.bra.0
                )));
            }
            if b.ket == b.bra && (b.ket_amp - b.bra_amp).norm() > STRUCT_TOL {
                return Err(QubusError::InvalidState(format!(
                    "diagonal branch {} has unequal amplitudes",
                    b.ket.0
                )));
            }
        }
        Ok(())
    }
}

/// Uniform `|+...+><+...+|` register density: all entries `2^-n`.
pub fn plus_density(n_qubits: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n_qubits;
    DMatrix::from_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0))
}

/// Elementwise dephasing channel on register densities.
///
/// A kernel is the complete description of any probe-mediated sequence once
/// the probe disentangles: the output density is the elementwise product
/// `g(v,v') rho(v,v')`. Complete positivity of that map is positive
/// semidefiniteness of `g` as a matrix, which the constructor enforces
/// together with a unit diagonal (trace preservation) and hermiticity.
#[derive(Clone, Debug)]
pub struct DephasingKernel {
    n_qubits: usize,
    g: DMatrix<Complex64>,
}

/// Eigenvalue floor accepted when validating complete positivity.
pub const PSD_FLOOR: f64 = -1e-10;

impl DephasingKernel {
    pub fn new(n_qubits: usize, g: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if g.nrows() != dim || g.ncols() != dim {
            return Err(QubusError::DimensionMismatch(format!(
                "kernel for {n_qubits} qubits must be {dim}x{dim}, got {}x{}",
                g.nrows(),
                g.ncols()
            )));
        }
        let herm = linalg::hermiticity_defect(&g);
        if herm > STRUCT_TOL {
            return Err(QubusError::InvalidState(format!(
                "kernel is not Hermitian (defect {herm:.3e})"
            )));
        }
        for i in 0..dim {
            if (g[(i, i)] - Complex64::new(1.0, 0.0)).norm() > STRUCT_TOL {
                return Err(QubusError::InvalidState(format!(
                    "kernel diagonal entry {i} is {} instead of 1",
                    g[(i, i)]
                )));
            }
        }
        for (idx, v) in g.iter().enumerate() {
            if v.norm() > 1.0 + STRUCT_TOL {
                return Err(QubusError::InvalidState(format!(
                    "kernel entry {idx} has modulus {} > 1",
                    v.norm()
                )));
            }
        }
        // Pin the enforced invariants exactly: Hermitian average, unit
        // diagonal. Validation above guarantees this changes entries by at
        // most the structural tolerance.
        let mut g = linalg::hermitize(&g);
        for i in 0..dim {
            g[(i, i)] = Complex64::new(1.0, 0.0);
        }
        let min_eig = linalg::min_eigenvalue(&g);
        if min_eig < PSD_FLOOR {
            return Err(QubusError::InvalidState(format!(
                "kernel is not completely positive (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self { n_qubits, g })
    }

    /// Builds a kernel from a closed-form rule `f(v, v')`.
    pub fn from_fn(
        n_qubits: usize,
        f: impl Fn(BasisIndex, BasisIndex) -> Complex64,
    ) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let g = DMatrix::from_fn(dim, dim, |i, j| f(BasisIndex(i as u16), BasisIndex(j as u16)));
        Self::new(n_qubits, g)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.g
    }

    pub fn entry(&self, ket: BasisIndex, bra: BasisIndex) -> Complex64 {
        self.g[(ket.index(), bra.index())]
    }

    /// Applies the channel: elementwise product with the kernel.
    pub fn apply(&self, density: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        if density.shape() != self.g.shape() {
            return Err(QubusError::DimensionMismatch(format!(
                "density is {}x{}, kernel is {}x{}",
                density.nrows(),
                density.ncols(),
                self.g.nrows(),
                self.g.ncols()
            )));
        }
        Ok(density.zip_map(&self.g, |d, g| d * g))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn plus_state_single_qubit_has_four_half_branches() {
        let st = HybridState::plus_state(1, c(0.0, 0.0)).unwrap();
        assert_eq!(st.branches().count(), 4);
        for b in st.branches() {
            assert_relative_eq!(b.coeff.re, 0.5, epsilon = 1e-15);
            assert_eq!(b.coeff.im, 0.0);
            assert_eq!(b.ket_amp, c(0.0, 0.0));
            assert_eq!(b.bra_amp, c(0.0, 0.0));
        }
        st.validate().unwrap();
    }

    #[test]
    fn plus_state_two_qubits_has_sixteen_quarter_branches() {
        let st = HybridState::plus_state(2, c(0.0, 0.0)).unwrap();
        assert_eq!(st.branches().count(), 16);
        for b in st.branches() {
            assert_relative_eq!(b.coeff.re, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn non_unit_trace_is_rejected() {
        let bad = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.5, 0.0),
            c(0.4, 0.0),
        ]));
        let err = HybridState::new_product_state(&bad, c(0.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("trace"));
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut bad = plus_density(1);
        bad[(0, 1)] = c(0.5, 0.2);
        let err = HybridState::new_product_state(&bad, c(0.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("Hermitian"));
    }

    #[test]
    fn reduce_applies_coherent_overlap() {
        // A single off-diagonal branch with amplitudes +1 / -1 picks up
        // <-1|+1> = e^{-2}.
        let mut st = HybridState::plus_state(1, c(0.0, 0.0)).unwrap();
        for b in st.branches_mut() {
            if b.ket.0 == 0 && b.bra.0 == 1 {
                b.ket_amp = c(1.0, 0.0);
                b.bra_amp = c(-1.0, 0.0);
            } else if b.ket.0 == 1 && b.bra.0 == 0 {
                b.ket_amp = c(-1.0, 0.0);
                b.bra_amp = c(1.0, 0.0);
            }
        }
        let red = st.reduce_qubits();
        assert_relative_eq!(red[(0, 1)].re, 0.5 * (-2.0f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(red[(0, 1)].re, 0.06766764161830635, epsilon = 1e-9);
        assert_eq!(red[(0, 1)].im, 0.0);
        // Diagonals are untouched: overlap of equal amplitudes is exactly 1.
        assert_eq!(red[(0, 0)].re, 0.5);
    }

    #[test]
    fn all_ones_kernel_is_identity() {
        let k = DephasingKernel::from_fn(2, |_, _| c(1.0, 0.0)).unwrap();
        let rho = plus_density(2);
        let out = k.apply(&rho).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn kernel_rejects_broken_diagonal() {
        let mut g = DMatrix::from_element(2, 2, c(1.0, 0.0));
        g[(0, 0)] = c(0.9, 0.0);
        assert!(DephasingKernel::new(1, g).is_err());
    }

    #[test]
    fn kernel_rejects_indefinite_matrix() {
        // Unit diagonal and Hermitian, but eigenvalues 1 +/- 1.2.
        let mut g = DMatrix::from_element(2, 2, c(0.0, 0.0));
        g[(0, 0)] = c(1.0, 0.0);
        g[(1, 1)] = c(1.0, 0.0);
        g[(0, 1)] = c(1.2, 0.0);
        g[(1, 0)] = c(1.2, 0.0);
        assert!(DephasingKernel::new(1, g).is_err());
    }

    #[test]
    fn overlap_convention_matches_closed_form() {
        let a = c(0.3, -0.7);
        let b = c(-1.1, 0.2);
        let got = coherent_overlap(a, b);
        let expo = -0.5 * a.norm_sqr() - 0.5 * b.norm_sqr();
        let want = (Complex64::new(expo, 0.0) + b.conj() * a).exp();
        assert!((got - want).norm() < 1e-15);
        // unit overlap on equal amplitudes, exactly
        assert_eq!(coherent_overlap(a, a), c(1.0, 0.0));
    }

    #[test]
    fn bit_order_puts_qubit_zero_in_the_most_significant_position() {
        let v = BasisIndex(0b10);
        assert_eq!(v.bit(0, 2), 1);
        assert_eq!(v.bit(1, 2), 0);
        assert_eq!(v.z(0, 2), -1.0);
        assert_eq!(v.z(1, 2), 1.0);
        assert_eq!(v.bits(2), vec![1, 0]);
    }
}
