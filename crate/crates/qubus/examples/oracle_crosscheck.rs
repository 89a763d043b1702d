//! Checking the branch engine against a brute-force master-equation solve.
//!
//! The engine tracks a handful of coherent amplitudes and scalar weights;
//! the oracle integrates the full Lindblad equation in a truncated Fock
//! space. They must agree wherever the truncation is feasible — small
//! probe amplitudes — and that agreement is the ground truth for
//! everything the engine does at amplitudes the oracle cannot reach.

use num_complex::Complex64;
use qubus::channels::{CouplingSpec, SequenceSpec, Step};
use qubus::fock::{compare_with_engine, required_n_max};

fn main() -> qubus::Result<()> {
    println!("Fock levels needed per amplitude:");
    for a in [0.5, 1.0, 2.0, 3.0] {
        println!("  |alpha| = {a}: n_max = {}", required_n_max(a));
    }

    // A full dispersive measurement window.
    let seq = SequenceSpec::new(vec![
        Step::Displace { target: None, beta: Complex64::new(2.0, 0.0) },
        Step::Interact { target: 0, spec: CouplingSpec::pauli_z(1.0, 1.0, 1.0) },
    ]);
    let report = compare_with_engine(1, &seq, 1e-9)?;
    println!("\nmeasurement window (alpha = 2, gamma/chi = 1, chi t = 1):");
    println!("  n_max used        = {}", report.n_max);
    println!("  oracle trace      = {:.12}", report.oracle_trace);
    println!("  max |engine - oracle| over the reduced density = {:.3e}", report.max_deviation);

    // A lossy two-qubit entangling sequence.
    let beta = qubus::gates::calibrate_beta(0.1, false)?;
    let damped = beta * (-0.2f64).exp();
    let seq = SequenceSpec::new(vec![
        Step::Displace { target: Some(0), beta: Complex64::new(beta, 0.0) },
        Step::Loss { l: 0.1 },
        Step::Displace { target: Some(1), beta: Complex64::new(0.0, beta) },
        Step::Loss { l: 0.1 },
        Step::Displace { target: Some(0), beta: Complex64::new(-damped, 0.0) },
        Step::Loss { l: 0.1 },
        Step::Displace { target: Some(1), beta: Complex64::new(0.0, -damped) },
    ]);
    let report = compare_with_engine(2, &seq, 1e-9)?;
    println!("\ncalibrated CZ pulse train at l = 0.1:");
    println!("  n_max used        = {}", report.n_max);
    println!("  largest amplitude = {:.4}", report.max_amplitude);
    println!("  max |engine - oracle| over the reduced density = {:.3e}", report.max_deviation);

    // Out of range: the oracle refuses rather than silently truncating.
    let too_big = SequenceSpec::new(vec![Step::Displace {
        target: None,
        beta: Complex64::new(25.0, 0.0),
    }]);
    match compare_with_engine(1, &too_big, 1e-9) {
        Err(e) => println!("\nalpha = 25 is rejected: {e}"),
        Ok(_) => println!("\nunexpected: alpha = 25 accepted"),
    }
    Ok(())
}
