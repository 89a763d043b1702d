//! Brute-force truncated-Fock-space oracle.
//!
//! Everything in [`crate::channels`] and [`crate::gates`] rests on closed
//! branch algebra. This module provides the independent ground truth: the
//! joint qubit ⊗ probe density matrix in a truncated number basis, evolved
//! by direct adaptive Runge–Kutta integration of the master equation
//!
//! ```text
//! ∂ρ/∂t = iχ [Λ a†a, ρ] + γ (2aρa† - a†aρ - ρa†a)
//! ```
//!
//! with displacements realized as matrix exponentials and loss segments as
//! `χ = 0` integration windows. It is only feasible for small probe
//! amplitudes (the truncation grows quadratically), which is exactly the
//! regime where disagreement with the branch engine would be meaningful.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channels::{apply_step, LambdaKind, SequenceSpec, Step};
use crate::error::{QubusError, Result};
use crate::linalg::{hermiticity_defect, matrix_exp, max_abs_diff, ZERO};
use crate::state::{plus_density, BasisIndex, HybridState, MAX_QUBITS};

/// Largest probe amplitude for which Fock-space comparison is considered
/// feasible.
pub const MAX_ORACLE_AMPLITUDE: f64 = 3.0;

/// Truncation heuristic: mean photon number plus ten standard deviations
/// plus margin, `⌈|α|² + 10|α| + 20⌉`, keeping the Poisson tail below 1e-10
/// over the feasible amplitude range.
pub fn required_n_max(amplitude: f64) -> usize {
    let a = amplitude.abs();
    (a * a + 10.0 * a + 20.0).ceil() as usize
}

/// Parameters of one adaptive integration window.
#[derive(Clone, Copy, Debug)]
pub struct LindbladConfig {
    /// Fock-space truncation (number of levels kept).
    pub n_max: usize,
    /// Coupling strength, as in [`crate::channels::CouplingSpec`].
    pub chi: f64,
    /// Probe damping rate.
    pub gamma: f64,
    /// Duration.
    pub t: f64,
    /// First trial step size.
    pub dt_initial: f64,
    /// Local relative error tolerance; must be at most 1e-8.
    pub rel_tol: f64,
}

impl LindbladConfig {
    pub fn new(n_max: usize, chi: f64, gamma: f64, t: f64) -> Self {
        Self { n_max, chi, gamma, t, dt_initial: 1e-3, rel_tol: 1e-9 }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(QubusError::InvalidParameter(
                "Fock truncation n_max must be at least 1".into(),
            ));
        }
        if !self.chi.is_finite() {
            return Err(QubusError::InvalidParameter(format!(
                "coupling chi must be finite, got {}",
                self.chi
            )));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(QubusError::InvalidParameter(format!(
                "damping rate gamma must be finite and nonnegative, got {}",
                self.gamma
            )));
        }
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(QubusError::InvalidParameter(format!(
                "duration t must be finite and nonnegative, got {}",
                self.t
            )));
        }
        if !(self.dt_initial > 0.0 && self.dt_initial.is_finite()) {
            return Err(QubusError::InvalidParameter(format!(
                "dt_initial must be positive, got {}",
                self.dt_initial
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-8) {
            return Err(QubusError::InvalidParameter(format!(
                "rel_tol must lie in (0, 1e-8], got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

/// Number-basis expansion of `|α>` over `n_max` levels,
/// `<n|α> = e^{-|α|²/2} αⁿ/√(n!)`, computed by the stable recurrence
/// `c_{n+1} = c_n α/√(n+1)`.
pub fn coherent_vector(alpha: Complex64, n_max: usize) -> Result<DVector<Complex64>> {
    if n_max == 0 {
        return Err(QubusError::InvalidParameter(
            "Fock truncation n_max must be at least 1".into(),
        ));
    }
    let mut v = DVector::from_element(n_max, ZERO);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..n_max {
        v[n] = c;
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    if (v.norm() - 1.0).abs() > 1e-10 {
        return Err(QubusError::Truncation {
            required: required_n_max(alpha.norm()),
            given: n_max,
        });
    }
    Ok(v)
}

/// Dense density matrix of the qubit register ⊗ truncated probe, indexed as
/// `(v·n_max + p, v'·n_max + q)` with `v` a register basis label (qubit 0 is
/// the most significant bit, as in [`crate::state::BasisIndex`]) and `p` a
/// photon number.
#[derive(Clone, Debug)]
pub struct JointFockState {
    n_qubits: usize,
    n_max: usize,
    rho: DMatrix<Complex64>,
}

impl JointFockState {
    /// Builds `qubit_density ⊗ |α><α|`.
    pub fn from_product(
        qubit_density: &DMatrix<Complex64>,
        probe_amp: Complex64,
        n_max: usize,
    ) -> Result<Self> {
        let dim = qubit_density.nrows();
        if qubit_density.ncols() != dim || dim < 2 || !dim.is_power_of_two() {
            return Err(QubusError::DimensionMismatch(format!(
                "qubit density must be square with power-of-two dimension >= 2, got {dim}x{}",
                qubit_density.ncols()
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(QubusError::InvalidParameter(format!(
                "register of {n_qubits} qubits exceeds the supported maximum of {MAX_QUBITS}"
            )));
        }
        let defect = hermiticity_defect(qubit_density);
        if defect > 1e-9 {
            return Err(QubusError::InvalidState(format!(
                "qubit density is not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr: Complex64 = qubit_density.diagonal().iter().sum();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(QubusError::InvalidState(format!(
                "qubit density has trace {tr} instead of 1"
            )));
        }
        let probe = coherent_vector(probe_amp, n_max)?;
        let probe_density = &probe * probe.adjoint();
        Ok(Self { n_qubits, n_max, rho: qubit_density.kronecker(&probe_density) })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    fn labels(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.diagonal().iter().sum()
    }

    /// Partial trace over the probe: the reduced register density matrix.
    pub fn reduce_qubits(&self) -> DMatrix<Complex64> {
        let labels = self.labels();
        DMatrix::from_fn(labels, labels, |v, w| {
            (0..self.n_max)
                .map(|p| self.rho[(v * self.n_max + p, w * self.n_max + p)])
                .sum()
        })
    }

    /// Applies `D(βZ_target)` (or the unconditional `D(β)`) as a dense
    /// matrix exponential of the truncated generator `βa† - β*a`.
    pub fn displace(&mut self, beta: Complex64, target: Option<usize>) -> Result<()> {
        Step::Displace { target, beta }.validate(self.n_qubits)?;
        let n = self.n_max;
        let mut gen = DMatrix::from_element(n, n, ZERO);
        for k in 1..n {
            let r = (k as f64).sqrt();
            gen[(k, k - 1)] = beta * r; // β a†
            gen[(k - 1, k)] = -beta.conj() * r; // -β* a
        }
        let d_plus = matrix_exp(&gen);
        let d_minus = matrix_exp(&(-&gen));
        let labels = self.labels();
        let mut u = DMatrix::from_element(labels * n, labels * n, ZERO);
        for v in 0..labels {
            let block = match target {
                None => &d_plus,
                Some(q) => {
                    if BasisIndex(v as u16).bit(q, self.n_qubits) == 0 {
                        &d_plus
                    } else {
                        &d_minus
                    }
                }
            };
            u.view_mut((v * n, v * n), (n, n)).copy_from(block);
        }
        self.rho = &u * &self.rho * u.adjoint();
        Ok(())
    }

    /// Applies the conditional rotation `exp(iθ a†a Z_target)`, diagonal in
    /// this basis.
    pub fn rotate(&mut self, theta: f64, target: usize) -> Result<()> {
        Step::Rotate { target, theta }.validate(self.n_qubits)?;
        let n = self.n_max;
        let nq = self.n_qubits;
        for col in 0..self.rho.ncols() {
            let (w, q) = (col / n, col % n);
            let zw = BasisIndex(w as u16).z(target, nq);
            for row in 0..self.rho.nrows() {
                let (v, p) = (row / n, row % n);
                let zv = BasisIndex(v as u16).z(target, nq);
                self.rho[(row, col)] *= Complex64::cis(theta * (zv * p as f64 - zw * q as f64));
            }
        }
        Ok(())
    }
}

/// λ eigenvalue seen by each register label for a coupling on `target`.
fn label_lambdas(lambda: LambdaKind, target: usize, n_qubits: usize) -> Vec<f64> {
    let (ln, lm) = lambda.eigenvalues();
    (0..1usize << n_qubits)
        .map(|v| {
            if BasisIndex(v as u16).bit(target, n_qubits) == 0 {
                ln
            } else {
                lm
            }
        })
        .collect()
}

/// Master-equation right-hand side, written entrywise: the coupling is
/// diagonal, the dissipator couples each entry to its upper-diagonal
/// photon-number neighbour.
fn rhs_into(
    rho: &DMatrix<Complex64>,
    out: &mut DMatrix<Complex64>,
    n_max: usize,
    chi: f64,
    gamma: f64,
    lambdas: &[f64],
) {
    let dim = rho.nrows();
    for col in 0..dim {
        let (w, q) = (col / n_max, col % n_max);
        for row in 0..dim {
            let (v, p) = (row / n_max, row % n_max);
            let mut d =
                rho[(row, col)] * Complex64::new(0.0, chi * (lambdas[v] * p as f64 - lambdas[w] * q as f64));
            if gamma > 0.0 {
                let mut diss = rho[(row, col)] * (-((p + q) as f64));
                if p + 1 < n_max && q + 1 < n_max {
                    diss += rho[(row + 1, col + 1)] * (2.0 * (((p + 1) * (q + 1)) as f64).sqrt());
                }
                d += diss * gamma;
            }
            out[(row, col)] = d;
        }
    }
}

/// `stage = y + h Σ aᵢ kᵢ`.
fn build_stage(
    stage: &mut DMatrix<Complex64>,
    y: &DMatrix<Complex64>,
    h: f64,
    terms: &[(f64, &DMatrix<Complex64>)],
) {
    stage.copy_from(y);
    for &(a, k) in terms {
        if a == 0.0 {
            continue;
        }
        let ha = h * a;
        stage
            .iter_mut()
            .zip(k.iter())
            .for_each(|(s, kv)| *s += kv * ha);
    }
}

const MAX_STEPS: usize = 2_000_000;
const ABS_TOL: f64 = 1e-12;

/// Integrates the master equation over `config.t` with a Dormand–Prince
/// 5(4) embedded pair (adaptive step, FSAL), for a coupling `Λ` acting on
/// `target`. Trace and hermiticity are checked at the end; a leak beyond
/// 1e-6 or a step-size underflow is an error.
pub fn integrate(
    mut state: JointFockState,
    config: &LindbladConfig,
    lambda: LambdaKind,
    target: usize,
) -> Result<JointFockState> {
    config.validate()?;
    if target >= state.n_qubits {
        return Err(QubusError::TargetOutOfRange { target, n_qubits: state.n_qubits });
    }
    if config.n_max != state.n_max {
        return Err(QubusError::DimensionMismatch(format!(
            "config n_max {} does not match the state's truncation {}",
            config.n_max, state.n_max
        )));
    }
    if config.t == 0.0 {
        return Ok(state);
    }

    // Dormand-Prince 5(4) tableau.
    const A2: [f64; 1] = [1.0 / 5.0];
    const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
    const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
    const A5: [f64; 4] =
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
    const A6: [f64; 5] = [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ];
    // 5th-order weights (also the 7th stage row, making the method FSAL).
    const B5: [f64; 7] =
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let lambdas = label_lambdas(lambda, target, state.n_qubits);
    let n_max = state.n_max;
    let (chi, gamma) = (config.chi, config.gamma);
    let dim = state.rho.nrows();

    // Private integration workspace (one allocation set per call).
    let mut k: Vec<DMatrix<Complex64>> =
        (0..7).map(|_| DMatrix::from_element(dim, dim, ZERO)).collect();
    let mut stage = DMatrix::from_element(dim, dim, ZERO);
    let mut y5 = DMatrix::from_element(dim, dim, ZERO);

    let y = &mut state.rho;
    let mut time = 0.0_f64;
    let mut h = config.dt_initial.min(config.t);
    let mut fsal_valid = false;
    let min_step = config.t * 1e-13;

    for step_count in 0.. {
        if step_count >= MAX_STEPS {
            return Err(QubusError::Integration(format!(
                "exceeded {MAX_STEPS} steps at t = {time:.6e} of {:.6e} (h = {h:.3e})",
                config.t
            )));
        }
        if time >= config.t {
            break;
        }
        h = h.min(config.t - time);
        if h < min_step {
            return Err(QubusError::Integration(format!(
                "step size underflow: h = {h:.3e} at t = {time:.6e} of {:.6e}",
                config.t
            )));
        }

        if !fsal_valid {
            rhs_into(y, &mut k[0], n_max, chi, gamma, &lambdas);
        }
        build_stage(&mut stage, y, h, &[(A2[0], &k[0])]);
        rhs_into(&stage, &mut k[1], n_max, chi, gamma, &lambdas);
        build_stage(&mut stage, y, h, &[(A3[0], &k[0]), (A3[1], &k[1])]);
        rhs_into(&stage, &mut k[2], n_max, chi, gamma, &lambdas);
        build_stage(&mut stage, y, h, &[(A4[0], &k[0]), (A4[1], &k[1]), (A4[2], &k[2])]);
        rhs_into(&stage, &mut k[3], n_max, chi, gamma, &lambdas);
        build_stage(
            &mut stage,
            y,
            h,
            &[(A5[0], &k[0]), (A5[1], &k[1]), (A5[2], &k[2]), (A5[3], &k[3])],
        );
        rhs_into(&stage, &mut k[4], n_max, chi, gamma, &lambdas);
        build_stage(
            &mut stage,
            y,
            h,
            &[(A6[0], &k[0]), (A6[1], &k[1]), (A6[2], &k[2]), (A6[3], &k[3]), (A6[4], &k[4])],
        );
        rhs_into(&stage, &mut k[5], n_max, chi, gamma, &lambdas);
        build_stage(
            &mut y5,
            y,
            h,
            &[
                (B5[0], &k[0]),
                (B5[2], &k[2]),
                (B5[3], &k[3]),
                (B5[4], &k[4]),
                (B5[5], &k[5]),
            ],
        );
        rhs_into(&y5, &mut k[6], n_max, chi, gamma, &lambdas);

        // Scaled max-norm of the embedded error estimate.
        let mut err = 0.0_f64;
        for idx in 0..dim * dim {
            let mut e = ZERO;
            for (j, kj) in k.iter().enumerate() {
                let db = B5[j] - B4[j];
                if db != 0.0 {
                    e += kj[idx] * (h * db);
                }
            }
            let scale = ABS_TOL + config.rel_tol * y[idx].norm().max(y5[idx].norm());
            err = err.max(e.norm() / scale);
        }

        if err <= 1.0 {
            time += h;
            y.copy_from(&y5);
            k.swap(0, 6); // first-same-as-last
            fsal_valid = true;
        } else {
            fsal_valid = false;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }

    let tr = state.trace();
    if tr.im.abs() > 1e-9 || 1.0 - tr.re > 1e-6 || tr.re > 1.0 + 1e-9 {
        return Err(QubusError::Integration(format!(
            "trace leaked beyond tolerance: trace = {tr} after t = {}",
            config.t
        )));
    }
    let defect = hermiticity_defect(&state.rho);
    if defect > 1e-8 {
        return Err(QubusError::Integration(format!(
            "hermiticity lost along integration (defect {defect:.3e})"
        )));
    }
    Ok(state)
}

/// Result of running a sequence through both the branch engine and the Fock
/// oracle.
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    /// Truncation chosen from the largest amplitude the engine visited.
    pub n_max: usize,
    /// That largest amplitude.
    pub max_amplitude: f64,
    /// Max entrywise deviation between the two reduced register densities.
    pub max_deviation: f64,
    /// Oracle trace after the full sequence (leak diagnostic).
    pub oracle_trace: f64,
    pub engine_reduced: DMatrix<Complex64>,
    pub oracle_reduced: DMatrix<Complex64>,
}

/// Runs `seq` from `|+...+> ⊗ |0>` through the branch engine and through a
/// step-equivalent Fock evolution (displacements as matrix exponentials,
/// loss segments as `χ = 0` integration windows), and reports the largest
/// entrywise deviation between the reduced register densities.
///
/// The truncation is sized automatically from the amplitudes the engine
/// visits; amplitudes beyond [`MAX_ORACLE_AMPLITUDE`] are refused as
/// infeasible.
pub fn compare_with_engine(
    n_qubits: usize,
    seq: &SequenceSpec,
    rel_tol: f64,
) -> Result<ComparisonReport> {
    seq.validate(n_qubits)?;

    // Engine pass, tracking the amplitude high-water mark.
    let mut st = HybridState::plus_state(n_qubits, ZERO)?;
    let mut max_amplitude = st.max_amplitude();
    for (index, step) in seq.steps.iter().enumerate() {
        st = apply_step(st, step).map_err(|source| QubusError::InvalidStep {
            index,
            source: Box::new(source),
        })?;
        max_amplitude = max_amplitude.max(st.max_amplitude());
    }
    let engine_reduced = st.reduce_qubits();

    if max_amplitude > MAX_ORACLE_AMPLITUDE + 1e-9 {
        return Err(QubusError::Truncation {
            required: required_n_max(max_amplitude),
            given: required_n_max(MAX_ORACLE_AMPLITUDE),
        });
    }
    let n_max = required_n_max(max_amplitude);

    // Step-equivalent Fock pass.
    let mut fock = JointFockState::from_product(&plus_density(n_qubits), ZERO, n_max)?;
    for (index, step) in seq.steps.iter().enumerate() {
        let wrap = |source| QubusError::InvalidStep { index, source: Box::new(source) };
        match *step {
            Step::Displace { target, beta } => fock.displace(beta, target).map_err(wrap)?,
            Step::Rotate { target, theta } => fock.rotate(theta, target).map_err(wrap)?,
            Step::Loss { l } => {
                if l > 0.0 {
                    let config =
                        LindbladConfig::new(n_max, 0.0, 1.0, l).with_rel_tol(rel_tol);
                    fock = integrate(fock, &config, LambdaKind::PauliZ, 0).map_err(wrap)?;
                }
            }
            Step::Interact { target, spec } => {
                if spec.t > 0.0 {
                    let config = LindbladConfig::new(n_max, spec.chi, spec.gamma, spec.t)
                        .with_rel_tol(rel_tol);
                    fock = integrate(fock, &config, spec.lambda, target).map_err(wrap)?;
                }
            }
        }
    }
    let oracle_reduced = fock.reduce_qubits();

    Ok(ComparisonReport {
        n_max,
        max_amplitude,
        max_deviation: max_abs_diff(&engine_reduced, &oracle_reduced),
        oracle_trace: fock.trace().re,
        engine_reduced,
        oracle_reduced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        apply_interaction, apply_rotation, coherence_parameter, CouplingSpec,
    };
    use crate::state::overlap_exponent;
    use approx::assert_relative_eq;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coherent_vector_examples() {
        let vac = coherent_vector(ZERO, 5).unwrap();
        assert_eq!(vac[0], c64(1.0, 0.0));
        assert!(vac.rows(1, 4).iter().all(|&x| x == ZERO));

        let v = coherent_vector(c64(2.0, 0.0), 40).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-10);

        let plus = coherent_vector(c64(1.0, 0.0), 40).unwrap();
        let minus = coherent_vector(c64(-1.0, 0.0), 40).unwrap();
        let overlap = minus.dotc(&plus);
        assert!((overlap - c64((-2.0f64).exp(), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn too_small_truncation_is_reported() {
        match coherent_vector(c64(3.0, 0.0), 10) {
            Err(QubusError::Truncation { required, given }) => {
                assert_eq!(required, required_n_max(3.0));
                assert_eq!(given, 10);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
        assert_eq!(required_n_max(3.0), 59);
        assert_eq!(required_n_max(0.0), 20);
    }

    #[test]
    fn config_validation() {
        assert!(LindbladConfig::new(0, 1.0, 1.0, 1.0).validate().is_err());
        assert!(LindbladConfig::new(30, 1.0, -1.0, 1.0).validate().is_err());
        assert!(LindbladConfig::new(30, 1.0, 1.0, -1.0).validate().is_err());
        let loose = LindbladConfig::new(30, 1.0, 1.0, 1.0).with_rel_tol(2e-8);
        assert!(loose.validate().is_err());
        assert!(LindbladConfig::new(30, 1.0, 1.0, 1.0).validate().is_ok());
    }

    #[test]
    fn lossless_integration_matches_branch_rotation() {
        let alpha = c64(1.2, 0.0);
        let (chi, t) = (1.0, 0.7);
        let n_max = required_n_max(1.2);
        let fock = JointFockState::from_product(&plus_density(1), alpha, n_max).unwrap();
        let config = LindbladConfig::new(n_max, chi, 0.0, t).with_rel_tol(1e-10);
        let fock = integrate(fock, &config, LambdaKind::PauliZ, 0).unwrap();

        // exact joint pure state: (|0>|αe^{iχt}> + |1>|αe^{-iχt}>)/√2
        let a_plus = coherent_vector(alpha * Complex64::cis(chi * t), n_max).unwrap();
        let a_minus = coherent_vector(alpha * Complex64::cis(-chi * t), n_max).unwrap();
        let mut psi = DVector::from_element(2 * n_max, ZERO);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        psi.rows_mut(0, n_max).copy_from(&(&a_plus * c64(s, 0.0)));
        psi.rows_mut(n_max, n_max).copy_from(&(&a_minus * c64(s, 0.0)));
        let fid = (psi.adjoint() * fock.matrix() * &psi)[(0, 0)].re;
        assert!(fid >= 1.0 - 1e-8, "joint fidelity {fid}");
    }

    #[test]
    fn pure_damping_keeps_a_coherent_probe() {
        let alpha = c64(1.5, 0.0);
        let (gamma, t) = (1.0, 0.5);
        let n_max = required_n_max(1.5);
        let fock = JointFockState::from_product(&plus_density(1), alpha, n_max).unwrap();
        let config = LindbladConfig::new(n_max, 0.0, gamma, t);
        let mut fock = integrate(fock, &config, LambdaKind::PauliZ, 0).unwrap();
        // displacing back by the damped amplitude must return the vacuum
        fock.displace(-alpha * (-gamma * t).exp(), None).unwrap();
        let ground: f64 = (0..2).map(|v| fock.matrix()[(v * n_max, v * n_max)].re).sum();
        assert!((ground - 1.0).abs() < 1e-8, "ground population {ground}");
        // χ = 0 causes no dephasing: the register is still |+><+|
        let red = fock.reduce_qubits();
        assert!((red[(0, 1)] - c64(0.5, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn interaction_window_reproduces_the_coherence_parameter() {
        // The sharp end of the oracle: a full lossy interaction window at
        // α = 2 against the branch engine's closed form.
        let alpha = c64(2.0, 0.0);
        let spec = CouplingSpec::pauli_z(1.0, 1.0, 1.0);
        let n_max = required_n_max(2.0);

        let fock = JointFockState::from_product(&plus_density(1), alpha, n_max).unwrap();
        let config = LindbladConfig::new(n_max, spec.chi, spec.gamma, spec.t);
        let fock = integrate(fock, &config, LambdaKind::PauliZ, 0).unwrap();
        let oracle_red = fock.reduce_qubits();

        let engine = HybridState::plus_state(1, alpha).unwrap();
        let engine = apply_interaction(engine, &spec, 0).unwrap();
        let engine_red = engine.reduce_qubits();
        assert!(max_abs_diff(&oracle_red, &engine_red) < 1e-6);

        // and explicitly against ζ·overlap/2
        let zeta = coherence_parameter(alpha, &spec).unwrap();
        let damp = alpha * (Complex64::new(-spec.gamma, spec.chi) * spec.t).exp();
        let damp_conj = alpha * (Complex64::new(-spec.gamma, -spec.chi) * spec.t).exp();
        let expected = 0.5 * zeta * overlap_exponent(damp, damp_conj).exp();
        assert!((oracle_red[(0, 1)] - expected).norm() < 1e-6);
    }

    #[test]
    fn rotated_probe_needs_the_generalized_coherence_form() {
        // Branch amplitudes with unequal phases: ket αe^{iθ}, bra αe^{-iθ}.
        // The engine's generalized exponent must track the oracle.
        let alpha = c64(1.2, 0.0);
        let theta = 0.7;
        let spec = CouplingSpec::pauli_z(1.0, 0.8, 0.9);
        let n_max = required_n_max(1.2);

        let fock = JointFockState::from_product(&plus_density(1), alpha, n_max).unwrap();
        let mut fock = fock;
        fock.rotate(theta, 0).unwrap();
        let config = LindbladConfig::new(n_max, spec.chi, spec.gamma, spec.t);
        let fock = integrate(fock, &config, LambdaKind::PauliZ, 0).unwrap();
        let oracle_red = fock.reduce_qubits();

        let engine = HybridState::plus_state(1, alpha).unwrap();
        let engine = apply_rotation(engine, theta, 0).unwrap();
        let engine = apply_interaction(engine, &spec, 0).unwrap();
        let engine_red = engine.reduce_qubits();
        assert!(
            max_abs_diff(&oracle_red, &engine_red) < 1e-6,
            "dev {:.3e}",
            max_abs_diff(&oracle_red, &engine_red)
        );
    }

    #[test]
    fn compare_with_engine_on_the_lossless_conditional_displacement() {
        let (alpha, theta): (f64, f64) = (1.0, 0.3);
        let seq = SequenceSpec::new(vec![
            Step::Displace { target: None, beta: c64(alpha * theta.cos(), 0.0) },
            Step::Rotate { target: 0, theta },
            Step::Displace { target: None, beta: c64(-2.0 * alpha, 0.0) },
            Step::Rotate { target: 0, theta: -theta },
            Step::Displace { target: None, beta: c64(alpha * theta.cos(), 0.0) },
        ]);
        let report = compare_with_engine(1, &seq, 1e-9).unwrap();
        assert!(report.max_deviation <= 1e-6, "dev {:.3e}", report.max_deviation);
    }

    #[test]
    fn compare_with_engine_on_the_cz_sequence() {
        let (beta, l) = (0.6267, 0.1_f64);
        let bdd = beta * (-2.0 * l).exp();
        let seq = SequenceSpec::new(vec![
            Step::Displace { target: Some(0), beta: c64(beta, 0.0) },
            Step::Loss { l },
            Step::Displace { target: Some(1), beta: c64(0.0, beta) },
            Step::Loss { l },
            Step::Displace { target: Some(0), beta: c64(-bdd, 0.0) },
            Step::Loss { l },
            Step::Displace { target: Some(1), beta: c64(0.0, -bdd) },
        ]);
        let report = compare_with_engine(2, &seq, 1e-9).unwrap();
        assert!(report.max_deviation <= 1e-6, "dev {:.3e}", report.max_deviation);
        assert!(1.0 - report.oracle_trace <= 1e-6);
    }

    #[test]
    fn empty_sequence_has_zero_deviation() {
        let report = compare_with_engine(1, &SequenceSpec::new(vec![]), 1e-9).unwrap();
        assert_eq!(report.max_deviation, 0.0);
    }

    #[test]
    fn amplitudes_beyond_the_feasible_range_are_refused() {
        let seq = SequenceSpec::new(vec![Step::Displace {
            target: None,
            beta: c64(5.0, 0.0),
        }]);
        match compare_with_engine(1, &seq, 1e-9) {
            Err(QubusError::Truncation { required, given }) => {
                assert!(required > given);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn halving_the_tolerance_barely_moves_the_result() {
        let alpha = c64(1.5, 0.0);
        let spec = CouplingSpec::pauli_z(1.0, 0.6, 0.8);
        let n_max = required_n_max(1.5);
        let run = |rel_tol: f64| {
            let fock = JointFockState::from_product(&plus_density(1), alpha, n_max).unwrap();
            let config =
                LindbladConfig::new(n_max, spec.chi, spec.gamma, spec.t).with_rel_tol(rel_tol);
            integrate(fock, &config, LambdaKind::PauliZ, 0).unwrap().reduce_qubits()
        };
        let coarse = run(1e-9);
        let fine = run(5e-10);
        assert!(max_abs_diff(&coarse, &fine) <= 10.0 * 1e-9);
    }

    #[test]
    fn integration_preserves_trace_and_hermiticity() {
        let alpha = c64(1.0, 0.5);
        let n_max = required_n_max(alpha.norm());
        let fock = JointFockState::from_product(&plus_density(2), alpha, n_max).unwrap();
        let config = LindbladConfig::new(n_max, 0.7, 0.4, 0.6);
        let fock = integrate(fock, &config, LambdaKind::PauliZ, 1).unwrap();
        let tr = fock.trace();
        assert_relative_eq!(tr.re, 1.0, epsilon = 1e-7);
        assert!(tr.im.abs() < 1e-9);
    }
}
