//! Entanglement and quality measures for the qubit–probe system.
//!
//! The probe branches `|α e^{(-γ+iχ)t}>` and `|α e^{(-γ-iχ)t}>` span a
//! two-dimensional subspace; expressing the joint state in an orthonormal
//! basis of that subspace turns it into an ordinary two-qubit density matrix
//! and makes the standard toolbox applicable: Wootters concurrence, von
//! Neumann entropy, and pure-state fidelity. [`peak_scan`] locates the
//! concurrence maximum over the interaction time.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channels::{coherence_parameter, CouplingSpec};
use crate::error::{QubusError, Result};
use crate::linalg;

/// Validated 4x4 density matrix (two qubits, or qubit ⊗ two-level probe
/// subspace). Hermitian, unit trace, PSD — all within 1e-9.
#[derive(Clone, Debug)]
pub struct TwoQubitDensity(DMatrix<Complex64>);

impl TwoQubitDensity {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.shape() != (4, 4) {
            return Err(QubusError::DimensionMismatch(format!(
                "two-qubit density must be 4x4, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm = linalg::hermiticity_defect(&m);
        if herm > 1e-9 {
            return Err(QubusError::InvalidState(format!(
                "density is not Hermitian (defect {herm:.3e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(QubusError::InvalidState(format!(
                "density has trace {tr} instead of 1"
            )));
        }
        let min_eig = linalg::min_eigenvalue(&m);
        if min_eig < -1e-9 {
            return Err(QubusError::InvalidState(format!(
                "density is not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }
}

/// Result of a [`peak_scan`].
#[derive(Clone, Copy, Debug)]
pub struct PeakReport {
    /// Scaled interaction time `χt` at the concurrence maximum.
    pub t_star: f64,
    pub c_max: f64,
    pub entropy_at_peak: f64,
}

/// Coarse search grid for [`peak_scan`]: `points` samples of `χt` in
/// `(0, chit_max]`. The default covers one conditional-rotation period at
/// the resolution used throughout (`π/2000`).
#[derive(Clone, Copy, Debug)]
pub struct ScanGrid {
    pub chit_max: f64,
    pub points: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            chit_max: std::f64::consts::PI,
            points: 2000,
        }
    }
}

/// Joint qubit–probe state after one interaction window, written in an
/// orthonormal basis `{|0>|x>, |0>|y>, |1>|x>, |1>|y>}` of the two probe
/// branches, for a qubit starting in `(|0> + |1>)/√2` and a real probe
/// amplitude `alpha`.
///
/// With `δ = e^{-α²e^{-2γt}(1 - cos 2χt)}` (the branch overlap modulus),
/// `a = √((1+δ)/2)`, `b = √((1-δ)/2)`, and `ζ₀₁` the coherence parameter,
/// the matrix is fully determined; the known deterministic phase
/// `Im[α₀ α₁*]` has already been undone by a conditional phase on the qubit,
/// so the entries are as symmetric as local operations allow.
pub fn orthogonalize(alpha: f64, chi: f64, gamma: f64, t: f64) -> Result<TwoQubitDensity> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(QubusError::InvalidParameter(format!(
            "probe amplitude must be a positive real, got {alpha}"
        )));
    }
    let spec = CouplingSpec::pauli_z(chi, gamma, t);
    spec.validate()?;
    TwoQubitDensity::new(orthogonal_matrix(alpha, &spec)?)
}

fn orthogonal_matrix(alpha: f64, spec: &CouplingSpec) -> Result<DMatrix<Complex64>> {
    let delta = (-alpha * alpha
        * (-2.0 * spec.gamma * spec.t).exp()
        * (1.0 - (2.0 * spec.chi * spec.t).cos()))
    .exp();
    let a = ((1.0 + delta) / 2.0).sqrt();
    let b = ((1.0 - delta) / 2.0).sqrt();
    let z01 = coherence_parameter(Complex64::new(alpha, 0.0), spec)?;
    let z10 = z01.conj();
    let re = |x: f64| Complex64::new(x, 0.0);
    let rows = [
        [re(a * a), re(a * b), z01 * (a * a), -z01 * (a * b)],
        [re(a * b), re(b * b), z01 * (a * b), -z01 * (b * b)],
        [z10 * (a * a), z10 * (a * b), re(a * a), re(-a * b)],
        [-z10 * (a * b), -z10 * (b * b), re(-a * b), re(b * b)],
    ];
    Ok(DMatrix::from_fn(4, 4, |i, j| rows[i][j] * 0.5))
}

/// `Y ⊗ Y` as it enters the spin-flip: real entries ∓1 on the anti-diagonal.
fn y_tensor_y() -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(4, 4, Complex64::new(0.0, 0.0));
    m[(0, 3)] = Complex64::new(-1.0, 0.0);
    m[(1, 2)] = Complex64::new(1.0, 0.0);
    m[(2, 1)] = Complex64::new(1.0, 0.0);
    m[(3, 0)] = Complex64::new(-1.0, 0.0);
    m
}

fn concurrence_raw(rho: &DMatrix<Complex64>) -> f64 {
    let yy = y_tensor_y();
    let rho_tilde = &yy * rho.map(|v| v.conj()) * &yy;
    // Work with the Hermitian product √ρ ρ̃ √ρ, whose eigenvalues are the
    // squares of the Wootters λᵢ; this avoids a general (non-Hermitian)
    // eigensolve.
    let s = linalg::hermitian_sqrt(rho);
    let m = &s * rho_tilde * &s;
    // Numerical noise at the 1e-16 level would otherwise survive the square
    // root as spurious 1e-8 contributions, so anything at or below 1e-12 is
    // treated as an exact zero.
    let mut lambdas: Vec<f64> = linalg::hermitian_eigenvalues(&m)
        .iter()
        .map(|&mu| if mu > 1e-12 { mu.sqrt() } else { 0.0 })
        .collect();
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let c = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    c.clamp(0.0, 1.0)
}

/// Wootters concurrence `max(0, λ₁ - λ₂ - λ₃ - λ₄)` with `λᵢ` the decreasing
/// square roots of the eigenvalues of `ρ(Y⊗Y)ρ*(Y⊗Y)`.
pub fn concurrence(rho: &TwoQubitDensity) -> f64 {
    concurrence_raw(rho.matrix())
}

fn entropy_raw(rho: &DMatrix<Complex64>) -> f64 {
    linalg::hermitian_eigenvalues(rho)
        .iter()
        .filter(|&&p| p > 1e-12)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Von Neumann entropy `-tr(ρ log₂ ρ)`; base 2, so a maximally mixed qubit
/// scores 1 and a maximally mixed two-qubit state scores 2. Eigenvalues at
/// or below 1e-12 are treated as exact zeros.
pub fn von_neumann_entropy(rho: &TwoQubitDensity) -> f64 {
    entropy_raw(rho.matrix())
}

/// `F(|φ>, ρ) = <φ|ρ|φ>` for a normalized pure target.
pub fn fidelity_pure(rho: &TwoQubitDensity, target: &DVector<Complex64>) -> Result<f64> {
    if target.len() != 4 {
        return Err(QubusError::DimensionMismatch(format!(
            "target must have 4 entries, got {}",
            target.len()
        )));
    }
    let norm = target.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(QubusError::InvalidParameter(format!(
            "target state is not normalized (norm {norm})"
        )));
    }
    let braket = target.adjoint() * rho.matrix() * target;
    Ok(braket[(0, 0)].re)
}

/// Finds the interaction time maximizing the concurrence of
/// [`orthogonalize`] at fixed `alpha` and `gamma_over_chi`, in scaled units
/// `χ = 1`.
///
/// A coarse pass over the grid brackets the maximum; golden-section search
/// then refines the time to a relative width of 1e-6. The bracket falls back
/// to `[~0, first grid point]` when the peak sits left of the grid — which
/// happens for large `alpha`, where the peak time shrinks like `1/α`.
pub fn peak_scan(alpha: f64, gamma_over_chi: f64, grid: &ScanGrid) -> Result<PeakReport> {
    if grid.points == 0 {
        return Err(QubusError::InvalidParameter(
            "scan grid is empty (points = 0)".into(),
        ));
    }
    if grid.chit_max <= 0.0 || !grid.chit_max.is_finite() {
        return Err(QubusError::InvalidParameter(format!(
            "scan grid upper end must be positive and finite, got {}",
            grid.chit_max
        )));
    }
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(QubusError::InvalidParameter(format!(
            "probe amplitude must be a positive real, got {alpha}"
        )));
    }
    let spec_at = |t: f64| CouplingSpec::pauli_z(1.0, gamma_over_chi, t);
    spec_at(0.0).validate()?;
    let c_at = |t: f64| -> Result<f64> {
        Ok(concurrence_raw(&orthogonal_matrix(alpha, &spec_at(t))?))
    };

    let n = grid.points;
    let xs: Vec<f64> = (1..=n).map(|i| i as f64 * grid.chit_max / n as f64).collect();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let c = c_at(x)?;
        if c > best.1 {
            best = (i, c);
        }
    }
    let i = best.0;
    let mut lo = if i > 0 { xs[i - 1] } else { 1e-12 };
    let mut hi = if i < n - 1 { xs[i + 1] } else { xs[n - 1] };

    // Golden-section refinement (maximization via negated values).
    let gr = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - gr * (hi - lo);
    let mut d = lo + gr * (hi - lo);
    let mut fc = -c_at(c)?;
    let mut fd = -c_at(d)?;
    while hi - lo > 1e-6 * hi {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = -c_at(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = -c_at(d)?;
        }
    }
    let t_star = (lo + hi) / 2.0;
    let rho = orthogonal_matrix(alpha, &spec_at(t_star))?;
    Ok(PeakReport {
        t_star,
        c_max: concurrence_raw(&rho),
        entropy_at_peak: entropy_raw(&rho),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> TwoQubitDensity {
        let half = c(0.5, 0.0);
        let mut m = DMatrix::from_element(4, 4, c(0.0, 0.0));
        m[(0, 0)] = half;
        m[(0, 3)] = half;
        m[(3, 0)] = half;
        m[(3, 3)] = half;
        TwoQubitDensity::new(m).unwrap()
    }

    fn maximally_mixed() -> TwoQubitDensity {
        TwoQubitDensity::new(DMatrix::from_diagonal_element(4, 4, c(0.25, 0.0))).unwrap()
    }

    #[test]
    fn bell_state_has_unit_concurrence_and_zero_entropy() {
        let rho = bell();
        assert_relative_eq!(concurrence(&rho), 1.0, epsilon = 1e-10);
        assert_relative_eq!(von_neumann_entropy(&rho), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn product_states_have_zero_concurrence() {
        // |+>|0>
        let mut m = DMatrix::from_element(4, 4, c(0.0, 0.0));
        for (i, j) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
            m[(i, j)] = c(0.5, 0.0);
        }
        let rho = TwoQubitDensity::new(m).unwrap();
        assert!(concurrence(&rho) < 1e-10);
    }

    #[test]
    fn concurrence_is_invariant_under_local_unitaries() {
        let rho = orthogonalize(1.3, 1.0, 0.6, 0.9).unwrap();
        let base = concurrence(&rho);
        // a couple of fixed non-trivial single-qubit rotations
        let frames: [(f64, f64, f64); 3] = [(0.3, 1.1, 0.7), (1.4, 0.2, -0.5), (2.0, 2.6, 1.9)];
        for (th1, th2, ph) in frames {
            let u1 = DMatrix::from_row_slice(
                2,
                2,
                &[
                    c(th1.cos(), 0.0),
                    -Complex64::cis(ph) * th1.sin(),
                    Complex64::cis(-ph) * th1.sin(),
                    c(th1.cos(), 0.0),
                ],
            );
            let u2 = DMatrix::from_row_slice(
                2,
                2,
                &[
                    c(th2.cos(), 0.0),
                    c(-th2.sin(), 0.0),
                    c(th2.sin(), 0.0),
                    c(th2.cos(), 0.0),
                ],
            );
            let u = u1.kronecker(&u2);
            let rotated = &u * rho.matrix() * u.adjoint();
            let rotated = TwoQubitDensity::new(rotated).unwrap();
            assert_relative_eq!(concurrence(&rotated), base, epsilon = 1e-9);
        }
    }

    #[test]
    fn entropy_reference_points() {
        assert_relative_eq!(von_neumann_entropy(&maximally_mixed()), 2.0, epsilon = 1e-10);
        // maximally mixed qubit ⊗ pure |0>
        let mut m = DMatrix::from_element(4, 4, c(0.0, 0.0));
        m[(0, 0)] = c(0.5, 0.0);
        m[(2, 2)] = c(0.5, 0.0);
        let rho = TwoQubitDensity::new(m).unwrap();
        assert_relative_eq!(von_neumann_entropy(&rho), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn fidelity_examples_and_validation() {
        let rho = bell();
        let target = DVector::from_vec(vec![
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        assert_relative_eq!(fidelity_pure(&rho, &target).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            fidelity_pure(&maximally_mixed(), &target).unwrap(),
            0.25,
            epsilon = 1e-12
        );
        let unnormalized = DVector::from_vec(vec![c(1.0, 0.0); 4]);
        assert!(fidelity_pure(&rho, &unnormalized).is_err());
    }

    #[test]
    fn orthogonalize_at_zero_time_is_a_pure_product() {
        let rho = orthogonalize(2.0, 1.0, 1.0, 0.0).unwrap();
        assert!(concurrence(&rho) < 1e-12);
        assert!(von_neumann_entropy(&rho) < 1e-10);
    }

    #[test]
    fn lossless_quarter_period_is_maximally_entangled() {
        let rho = orthogonalize(3.0, 1.0, 0.0, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(concurrence(&rho) > 1.0 - 1e-6);
    }

    #[test]
    fn orthogonalize_rejects_nonpositive_alpha() {
        assert!(orthogonalize(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(orthogonalize(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn reduced_qubit_coherence_carries_the_branch_overlap() {
        // Tracing out the probe factor leaves coherence ζ₀₁ δ / 2: the
        // analytic ζ times the overlap modulus of the two branches.
        for &(alpha, g, t) in &[(0.8, 0.5, 0.7), (1.5, 1.0, 1.2), (2.0, 2.0, 0.4)] {
            let rho = orthogonalize(alpha, 1.0, g, t).unwrap();
            let m = rho.matrix();
            let coherence = m[(0, 2)] + m[(1, 3)];
            let delta =
                (-alpha * alpha * (-2.0 * g * t).exp() * (1.0 - (2.0 * t).cos())).exp();
            let zeta = coherence_parameter(
                Complex64::new(alpha, 0.0),
                &CouplingSpec::pauli_z(1.0, g, t),
            )
            .unwrap();
            assert!((coherence - zeta * (delta / 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn peak_scan_matches_frozen_reference_values() {
        let grid = ScanGrid::default();
        let p50 = peak_scan(50.0, 1.0, &grid).unwrap();
        assert_relative_eq!(p50.t_star, 0.0201615, max_relative = 1e-3);
        assert_relative_eq!(p50.c_max, 0.963975, epsilon = 1e-5);
        assert_relative_eq!(p50.entropy_at_peak, 0.100564, epsilon = 1e-5);

        let p100 = peak_scan(100.0, 1.0, &grid).unwrap();
        assert_relative_eq!(p100.t_star, 0.0107599, max_relative = 1e-3);
        assert_relative_eq!(p100.c_max, 0.978484, epsilon = 1e-5);

        let p200 = peak_scan(200.0, 1.0, &grid).unwrap();
        assert_relative_eq!(p200.c_max, 0.987350, epsilon = 1e-5);
        assert_relative_eq!(p200.entropy_at_peak, 0.044714, epsilon = 1e-5);

        // peak sharpens and moves left as alpha grows
        assert!(p50.c_max < p100.c_max && p100.c_max < p200.c_max);
        assert!(p50.t_star > p100.t_star && p100.t_star > p200.t_star);
        assert!(p50.entropy_at_peak > p100.entropy_at_peak);
    }

    #[test]
    fn peak_scan_handles_peaks_left_of_the_grid() {
        // alpha = 1e4: the peak time ~1.35e-4 sits inside the first grid
        // cell; the bracket fallback must still find it.
        let report = peak_scan(1e4, 5.0, &ScanGrid::default()).unwrap();
        assert_relative_eq!(report.t_star, 1.3517e-4, max_relative = 1e-2);
        assert_relative_eq!(report.c_max, 0.998019, epsilon = 1e-4);
        assert_relative_eq!(report.entropy_at_peak, 0.009607, epsilon = 1e-4);
    }

    #[test]
    fn peak_scan_rejects_bad_grids() {
        assert!(peak_scan(50.0, 1.0, &ScanGrid { chit_max: 1.0, points: 0 }).is_err());
        assert!(peak_scan(50.0, 1.0, &ScanGrid { chit_max: 0.0, points: 10 }).is_err());
        assert!(peak_scan(0.0, 1.0, &ScanGrid::default()).is_err());
    }

    #[test]
    fn density_validation_rejects_bad_inputs() {
        assert!(TwoQubitDensity::new(DMatrix::from_element(3, 3, c(0.0, 0.0))).is_err());
        let mut not_herm = DMatrix::from_diagonal_element(4, 4, c(0.25, 0.0));
        not_herm[(0, 1)] = c(0.1, 0.1);
        assert!(TwoQubitDensity::new(not_herm).is_err());
        let bad_trace = DMatrix::from_diagonal_element(4, 4, c(0.3, 0.0));
        assert!(TwoQubitDensity::new(bad_trace).is_err());
        let mut indefinite = DMatrix::from_diagonal_element(4, 4, c(0.25, 0.0));
        indefinite[(0, 0)] = c(1.25, 0.0);
        indefinite[(1, 1)] = c(-0.75, 0.0);
        assert!(TwoQubitDensity::new(indefinite).is_err());
    }
}
