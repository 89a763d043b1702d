//! What kind of noise the lossy CZ gate actually applies.
//!
//! The channel left on the two qubits splits into an exactly
//! trace-preserving operator sum: identity, local Z flips, a correlated
//! Z⊗Z piece, and cross terms built from K' = iI + Z_aZ_b and
//! J = Z_a + iZ_b. At low loss the correlated piece is higher order — the
//! gate's noise is dominated by independent local dephasing.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qubus::gates::{calibrate_beta, channel_decomposition, cz_channel, low_loss_observable};

fn main() -> qubus::Result<()> {
    let l = 0.05;
    let beta = calibrate_beta(l, false)?;
    let report = cz_channel(beta, beta, l)?;
    let map = channel_decomposition(&report);

    // Expansion coefficients, not probabilities: the cross operators are
    // non-Hermitian, so signs can go negative while the map stays CP.
    println!("operator-sum coefficients at l = {l} (beta = {beta:.6}):");
    println!("  x1, x2, x3        = {:.6}, {:.6}, {:.6}", report.x1, report.x2, report.x3);
    println!("  identity          = {:.8}", map.prefactor * map.identity);
    println!("  Z_a               = {:.8}", map.prefactor * map.z_a);
    println!("  Z_b               = {:.8}", map.prefactor * map.z_b);
    println!("  Z_aZ_b            = {:.8}", map.prefactor * map.k);
    println!(
        "  K', K'^dag        = {:.3e}, {:.3e}",
        map.prefactor * map.k_prime,
        map.prefactor * map.k_prime_dag
    );
    println!(
        "  J, J^dag          = {:.3e}, {:.3e}",
        map.prefactor * map.j,
        map.prefactor * map.j_dag
    );
    println!("  total weight      = {:.12} (trace preserving)", map.total_weight());

    println!("\nerror families vs loss:");
    println!("{:>6} {:>14} {:>14} {:>10}", "l", "correlated", "uncorrelated", "ratio");
    for i in 1..=6 {
        let l = 0.01 * i as f64;
        let beta = calibrate_beta(l, false)?;
        let r = cz_channel(beta, beta, l)?;
        println!(
            "{l:>6.2} {:>14.6e} {:>14.6e} {:>10.6}",
            r.correlated_weight,
            r.uncorrelated_weight,
            r.correlated_weight / r.uncorrelated_weight
        );
    }
    println!("(the ratio shrinks like 2*x3: correlated errors are higher order)");

    // First-order check: the observable part of the channel only needs one
    // number, w = eta * beta_a' * beta_b.
    let report = cz_channel(beta, beta, l)?;
    let low = low_loss_observable(&report, report.eta);
    let plus = DMatrix::from_element(4, 4, Complex64::new(0.25, 0.0));
    let approx = low.apply_observable(&plus)?;
    let exact = {
        let mut m = plus.clone();
        for ket in 0..4 {
            for bra in 0..4 {
                m[(ket, bra)] *= report.cross_kernel_entry(ket, bra);
            }
        }
        m
    };
    let worst = (approx - exact).iter().map(|v| v.norm()).fold(0.0, f64::max);
    println!("\nfirst-order observable map vs exact kernel at l = {l}: max diff = {worst:.2e}");
    Ok(())
}
