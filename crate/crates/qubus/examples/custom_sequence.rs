//! Running a hand-written pulse sequence: parse, execute, inspect.
//!
//! The text format is one step per line — `D` (displace), `R` (conditional
//! rotation), `L` (loss), `I` (full interaction window) — after a
//! `qubits <n>` header. Same format the `qubus run` subcommand reads from a
//! file.

use qubus::channels::run_sequence;
use qubus::seqfile::parse_sequence_str;
use qubus::state::HybridState;
use num_complex::Complex64;

const SEQUENCE: &str = "
# A conditional pi/2 rotation probe on qubit 0 of a register of 2,
# with loss before and after.
qubits 2
D re=1.5 im=0
L l=0.02
R target=0 theta=0.7853981633974483
L l=0.02
";

fn main() -> qubus::Result<()> {
    let parsed = parse_sequence_str(SEQUENCE)?;
    println!("parsed {} steps for {} qubits", parsed.seq.steps.len(), parsed.n_qubits);

    let start = HybridState::plus_state(parsed.n_qubits, Complex64::new(0.0, 0.0))?;
    let finished = run_sequence(start, &parsed.seq)?;

    println!("\nfinal branch amplitudes (ket side):");
    for branch in finished.branches().filter(|b| b.ket == b.bra) {
        println!(
            "  |{:02b}>: amp = {:.6}",
            branch.ket.index(),
            branch.ket_amp
        );
    }

    let reduced = finished.reduce_qubits();
    println!("\nreduced register density (real parts):");
    for row in 0..reduced.nrows() {
        let cells: Vec<String> =
            (0..reduced.ncols()).map(|col| format!("{:>9.6}", reduced[(row, col)].re)).collect();
        println!("  {}", cells.join(" "));
    }

    // Malformed input fails with the line number.
    let broken = "qubits 2\nD re=1 im=0\nR target=0\n";
    match parse_sequence_str(broken) {
        Err(e) => println!("\nbroken input is rejected: {e}"),
        Ok(_) => println!("\nunexpected: broken input accepted"),
    }
    Ok(())
}
