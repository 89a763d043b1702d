//! Splitting the CZ gate into two half-strength passes decorrelates its
//! errors.
//!
//! Running the pulse sequence twice — with the roles of the two qubits
//! swapped in between — makes the combined channel factor exactly into two
//! independent single-qubit phase-flip channels. Correlated Z⊗Z noise is
//! traded for slightly more local noise, which error correction prefers.

use qubus::gates::{calibrate_beta, iterated_cz, loss_sweep, segment_loss, z_flip_probability};

fn main() -> qubus::Result<()> {
    let l = segment_loss(0.2)?;
    let beta = calibrate_beta(l, true)?;
    let report = iterated_cz(beta, beta, l, l)?;

    println!("iterated gate at 20% total loss (l = {l:.5} per segment):");
    println!("  conditional phase per pass = {:.10} (pi/8 = {:.10})", report.kappa, std::f64::consts::FRAC_PI_8);
    println!("  kernel imaginary residue after phase removal = {:.2e}", report.max_im_after_phase_removal);
    println!("  deviation from a product of local kernels    = {:.2e}", report.max_factorization_dev);
    println!(
        "  flip probabilities p_a = {:.8}, p_b = {:.8} (closed form {:.8})",
        report.p_a,
        report.p_b,
        z_flip_probability(beta, l)
    );

    // The price and the payoff, against the one-pass gate.
    println!("\nsingle pass vs iterated:");
    println!(
        "{:>6} {:>11} {:>11} {:>12} {:>12} {:>12}",
        "l_tot", "F(single)", "F(iter)", "C(single)", "C(iter)", "correlated"
    );
    for i in 1..=5 {
        let l_tot = 0.1 * i as f64;
        let l = segment_loss(l_tot)?;
        let single = &loss_sweep(&[l], false)?[0];
        let iter = &loss_sweep(&[l], true)?[0];
        println!(
            "{l_tot:>6.1} {:>11.6} {:>11.6} {:>12.6} {:>12.6} {:>9.2e}->0",
            single.fidelity, iter.fidelity, single.concurrence, iter.concurrence, single.c_minus_norm
        );
    }
    println!("(fidelity barely moves; concurrence drops a little; correlated noise vanishes)");
    Ok(())
}
