//! Command-line front end: figure-style sweeps, peak scans, loss curves and
//! custom sequence execution, all emitted as deterministic CSV.
//!
//! Four subcommands (`coherence`, `entanglement`, `cz`, `run`) share three
//! global flags: `--out` (CSV path, stdout when omitted), `--jobs` (worker
//! threads for sweeps) and `--fig` (parameter presets `2a`, `2b`, `3`, `7a`,
//! `7b` for the standard plots). Floats are rendered with 12 significant
//! digits and identical invocations produce byte-identical output.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channels::{coherence_parameter, coherence_split, run_sequence, CouplingSpec};
use crate::error::{QubusError, Result};
use crate::fock::compare_with_engine;
use crate::gates::{loss_sweep, segment_loss};
use crate::measures::{
    concurrence, orthogonalize, peak_scan, von_neumann_entropy, PeakReport, ScanGrid,
};
use crate::seqfile::parse_sequence_file;
use crate::state::HybridState;

#[derive(Parser)]
#[command(
    name = "qubus",
    version,
    about = "Exact simulation of qubit-bus gates under probe loss",
    propagate_version = true
)]
struct Cli {
    /// Write CSV here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Figure preset: 2a, 2b or 3 (entanglement), 7a or 7b (cz).
    #[arg(long, global = true, value_name = "ID")]
    fig: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coherence-parameter decay ζ(χt) of a dispersively probed qubit.
    Coherence(CoherenceArgs),
    /// Qubit-probe concurrence and entropy curves, or peak scans (--scan).
    Entanglement(EntanglementArgs),
    /// Calibrated CZ gate quality and error weights against loss.
    Cz(CzArgs),
    /// Run a sequence file through the branch engine.
    Run(RunArgs),
}

#[derive(Args)]
struct CoherenceArgs {
    /// Probe amplitude α (real).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Damping-to-coupling ratio γ/χ.
    #[arg(long, default_value_t = 1.0)]
    gamma_over_chi: f64,
    /// Largest scaled time χt on the grid.
    #[arg(long, default_value_t = 10.0)]
    chit_max: f64,
    /// Number of grid intervals (rows = steps + 1, starting at χt = 0).
    #[arg(long, default_value_t = 400)]
    steps: usize,
}

#[derive(Args)]
struct EntanglementArgs {
    /// Probe amplitude α (must be positive).
    #[arg(long, default_value_t = 100.0)]
    alpha: f64,
    /// Damping-to-coupling ratio γ/χ.
    #[arg(long, default_value_t = 1.0)]
    gamma_over_chi: f64,
    /// Largest scaled time χt on the curve grid.
    #[arg(long, default_value_t = 0.05)]
    chit_max: f64,
    /// Number of grid intervals for curves.
    #[arg(long, default_value_t = 400)]
    steps: usize,
    /// Report the concurrence peak (t_star, c_max, entropy) instead of a
    /// time curve.
    #[arg(long)]
    scan: bool,
}

#[derive(Args)]
struct CzArgs {
    /// Single per-segment loss value.
    #[arg(long, conflicts_with = "l_grid")]
    l: Option<f64>,
    /// Per-segment loss grid as start:stop:count (inclusive, linear).
    #[arg(long, value_name = "START:STOP:COUNT")]
    l_grid: Option<String>,
    /// Use the error-decorrelating iterated sequence instead of the single
    /// one.
    #[arg(long)]
    iterated: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Sequence file (see the sequence-format docs).
    file: PathBuf,
    /// Initial register state: `plus` or a bitstring like `01`.
    #[arg(long, default_value = "plus")]
    input: String,
    /// Also run the truncated-Fock oracle and report the max deviation
    /// (requires the `plus` input and small amplitudes).
    #[arg(long)]
    oracle: bool,
}

/// Binary entry point: parse, dispatch, report errors on stderr with a
/// nonzero exit status.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A downstream reader (e.g. `head`) closing the pipe is not a failure.
        Err(QubusError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(QubusError::InvalidParameter(
                "--jobs must be at least 1".into(),
            ));
        }
        // A failure here means a pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let fig = cli.fig.as_deref().map(FigPreset::parse).transpose()?;
    let csv = match cli.command {
        Command::Coherence(args) => cmd_coherence(&args, fig)?,
        Command::Entanglement(args) => cmd_entanglement(&args, fig)?,
        Command::Cz(args) => cmd_cz(&args, fig)?,
        Command::Run(args) => cmd_run(&args, fig)?,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, csv)?,
        None => std::io::stdout().lock().write_all(csv.as_bytes())?,
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FigPreset {
    TwoA,
    TwoB,
    Three,
    SevenA,
    SevenB,
}

impl FigPreset {
    fn parse(id: &str) -> Result<Self> {
        match id {
            "2a" => Ok(Self::TwoA),
            "2b" => Ok(Self::TwoB),
            "3" => Ok(Self::Three),
            "7a" => Ok(Self::SevenA),
            "7b" => Ok(Self::SevenB),
            other => Err(QubusError::InvalidParameter(format!(
                "unknown figure preset `{other}` (expected 2a, 2b, 3, 7a or 7b)"
            ))),
        }
    }

    fn id(self) -> &'static str {
        match self {
            Self::TwoA => "2a",
            Self::TwoB => "2b",
            Self::Three => "3",
            Self::SevenA => "7a",
            Self::SevenB => "7b",
        }
    }

    fn wrong_command(self, cmd: &str) -> QubusError {
        QubusError::InvalidParameter(format!(
            "figure preset {} does not belong to the `{cmd}` command",
            self.id()
        ))
    }
}

/// 12 significant digits, with negative zero normalized away so reruns are
/// byte-identical.
fn fmt(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

fn push_row(csv: &mut String, values: &[f64]) {
    let mut first = true;
    for v in values {
        if !first {
            csv.push(',');
        }
        csv.push_str(&fmt(*v));
        first = false;
    }
    csv.push('\n');
}

fn check_grid(chit_max: f64, steps: usize) -> Result<()> {
    if chit_max <= 0.0 || !chit_max.is_finite() {
        return Err(QubusError::InvalidParameter(format!(
            "chit-max must be positive, got {chit_max}"
        )));
    }
    if steps == 0 {
        return Err(QubusError::InvalidParameter("steps must be at least 1".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// coherence
// ---------------------------------------------------------------------------

fn cmd_coherence(args: &CoherenceArgs, fig: Option<FigPreset>) -> Result<String> {
    if let Some(f) = fig {
        return Err(f.wrong_command("coherence"));
    }
    if args.alpha < 0.0 || !args.alpha.is_finite() {
        return Err(QubusError::InvalidParameter(format!(
            "alpha must be nonnegative, got {}",
            args.alpha
        )));
    }
    if args.gamma_over_chi < 0.0 || !args.gamma_over_chi.is_finite() {
        return Err(QubusError::InvalidParameter(format!(
            "gamma-over-chi must be nonnegative, got {}",
            args.gamma_over_chi
        )));
    }
    check_grid(args.chit_max, args.steps)?;

    let alpha = Complex64::new(args.alpha, 0.0);
    // The last column re-evaluates ζ on an equal eigenvalue pair (n = m), a
    // diagnostic that must stay exactly 1 at every time.
    let mut csv = String::from("chit,abs_zeta,re_f,im_f,zeta_diag\n");
    for i in 0..=args.steps {
        let chit = i as f64 * args.chit_max / args.steps as f64;
        let spec = CouplingSpec::pauli_z(1.0, args.gamma_over_chi, chit);
        let zeta = coherence_parameter(alpha, &spec)?;
        let (re_f, im_f) = coherence_split(alpha, &spec)?;
        let diag_spec = CouplingSpec::pair(1.0, args.gamma_over_chi, chit, 1, 1);
        let diag = coherence_parameter(alpha, &diag_spec)?.norm();
        push_row(&mut csv, &[chit, zeta.norm(), re_f, im_f, diag]);
    }
    Ok(csv)
}

// ---------------------------------------------------------------------------
// entanglement
// ---------------------------------------------------------------------------

const FIG3_ALPHAS: [f64; 10] =
    [10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0, 10000.0];
const FIG3_RATIOS: [f64; 5] = [1.0, 3.0, 5.0, 10.0, 15.0];

fn curve_rows(
    alpha: f64,
    ratio: f64,
    chit_max: f64,
    steps: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    (0..=steps)
        .into_par_iter()
        .map(|i| {
            let chit = i as f64 * chit_max / steps as f64;
            let rho = orthogonalize(alpha, 1.0, ratio, chit)?;
            Ok((chit, concurrence(&rho), von_neumann_entropy(&rho)))
        })
        .collect()
}

fn cmd_entanglement(args: &EntanglementArgs, fig: Option<FigPreset>) -> Result<String> {
    match fig {
        None => {
            check_grid(args.chit_max, args.steps)?;
            if args.scan {
                let report = peak_scan(args.alpha, args.gamma_over_chi, &ScanGrid::default())?;
                let mut csv = String::from("alpha,gamma_over_chi,t_star,c_max,entropy_at_peak\n");
                push_row(
                    &mut csv,
                    &[
                        args.alpha,
                        args.gamma_over_chi,
                        report.t_star,
                        report.c_max,
                        report.entropy_at_peak,
                    ],
                );
                Ok(csv)
            } else {
                let mut csv = String::from("chit,concurrence,entropy\n");
                for (chit, c, s) in
                    curve_rows(args.alpha, args.gamma_over_chi, args.chit_max, args.steps)?
                {
                    push_row(&mut csv, &[chit, c, s]);
                }
                Ok(csv)
            }
        }
        Some(FigPreset::TwoA) | Some(FigPreset::TwoB) => {
            let configs: Vec<(f64, f64)> = if fig == Some(FigPreset::TwoA) {
                vec![(50.0, 1.0), (100.0, 1.0), (200.0, 1.0)]
            } else {
                vec![(100.0, 1.0), (100.0, 7.0), (100.0, 21.0)]
            };
            let mut csv = String::from("alpha,gamma_over_chi,chit,concurrence,entropy\n");
            for (alpha, ratio) in configs {
                for (chit, c, s) in curve_rows(alpha, ratio, 0.1, 500)? {
                    push_row(&mut csv, &[alpha, ratio, chit, c, s]);
                }
            }
            Ok(csv)
        }
        Some(FigPreset::Three) => {
            let configs: Vec<(f64, f64)> = FIG3_RATIOS
                .iter()
                .flat_map(|&r| FIG3_ALPHAS.iter().map(move |&a| (a, r)))
                .collect();
            let reports: Vec<(f64, f64, PeakReport)> = configs
                .par_iter()
                .map(|&(alpha, ratio)| {
                    Ok((alpha, ratio, peak_scan(alpha, ratio, &ScanGrid::default())?))
                })
                .collect::<Result<_>>()?;
            let mut csv = String::from("alpha,gamma_over_chi,t_star,c_max,entropy_at_peak\n");
            for (alpha, ratio, report) in reports {
                push_row(
                    &mut csv,
                    &[alpha, ratio, report.t_star, report.c_max, report.entropy_at_peak],
                );
            }
            Ok(csv)
        }
        Some(other) => Err(other.wrong_command("entanglement")),
    }
}

// ---------------------------------------------------------------------------
// cz
// ---------------------------------------------------------------------------

fn parse_linear_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| QubusError::InvalidParameter(msg);
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad(format!("grid `{text}` must have the form start:stop:count")));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| bad(format!("invalid grid start `{}`", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| bad(format!("invalid grid stop `{}`", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| bad(format!("invalid grid count `{}`", parts[2])))?;
    if count == 0 {
        return Err(bad("grid count must be at least 1".into()));
    }
    if !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(bad(format!("grid bounds {start}:{stop} are not an interval")));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect())
}

const CZ_HEADER: &str = "l,l_tot,fidelity,concurrence,c_minus_norm,s_sum_norm,p_a,p_b\n";

fn cz_rows(csv: &mut String, ls: &[f64], iterated: bool) -> Result<()> {
    for row in loss_sweep(ls, iterated)? {
        push_row(
            csv,
            &[
                row.l,
                row.l_tot,
                row.fidelity,
                row.concurrence,
                row.c_minus_norm,
                row.s_sum_norm,
                row.p_a,
                row.p_b,
            ],
        );
    }
    Ok(())
}

/// Per-segment losses giving 37 evenly spaced total-loss values on [0, 0.9].
fn fig7_losses() -> Result<Vec<f64>> {
    (0..37).map(|i| segment_loss(0.9 * i as f64 / 36.0)).collect()
}

fn cmd_cz(args: &CzArgs, fig: Option<FigPreset>) -> Result<String> {
    match fig {
        None => {
            let ls = match (&args.l, &args.l_grid) {
                (Some(l), None) => vec![*l],
                (None, Some(grid)) => parse_linear_grid(grid)?,
                (None, None) => parse_linear_grid("0:0.2:21")?,
                (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
            };
            let mut csv = String::from(CZ_HEADER);
            cz_rows(&mut csv, &ls, args.iterated)?;
            Ok(csv)
        }
        Some(FigPreset::SevenA) => {
            let mut csv = String::from(CZ_HEADER);
            cz_rows(&mut csv, &fig7_losses()?, false)?;
            Ok(csv)
        }
        Some(FigPreset::SevenB) => {
            let ls = fig7_losses()?;
            let mut csv = String::from(
                "variant,l,l_tot,fidelity,concurrence,c_minus_norm,s_sum_norm,p_a,p_b\n",
            );
            for (name, iterated) in [("single", false), ("iterated", true)] {
                for row in loss_sweep(&ls, iterated)? {
                    csv.push_str(name);
                    csv.push(',');
                    push_row(
                        &mut csv,
                        &[
                            row.l,
                            row.l_tot,
                            row.fidelity,
                            row.concurrence,
                            row.c_minus_norm,
                            row.s_sum_norm,
                            row.p_a,
                            row.p_b,
                        ],
                    );
                }
            }
            Ok(csv)
        }
        Some(other) => Err(other.wrong_command("cz")),
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

fn initial_state(input: &str, n_qubits: usize) -> Result<HybridState> {
    if input == "plus" {
        return HybridState::plus_state(n_qubits, Complex64::new(0.0, 0.0));
    }
    if input.len() == n_qubits && input.bytes().all(|b| b == b'0' || b == b'1') {
        let v = usize::from_str_radix(input, 2).expect("validated as binary");
        let dim = 1usize << n_qubits;
        let mut density = nalgebra::DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        density[(v, v)] = Complex64::new(1.0, 0.0);
        return HybridState::new_product_state(&density, Complex64::new(0.0, 0.0));
    }
    Err(QubusError::InvalidParameter(format!(
        "input must be `plus` or a {n_qubits}-bit string of 0s and 1s, got `{input}`"
    )))
}

fn push_matrix_rows(csv: &mut String, name: &str, m: &nalgebra::DMatrix<Complex64>) {
    for row in 0..m.nrows() {
        for col in 0..m.ncols() {
            let v = m[(row, col)];
            csv.push_str(&format!(
                "{name},{row},{col},{},{}\n",
                fmt(v.re),
                fmt(v.im)
            ));
        }
    }
}

fn cmd_run(args: &RunArgs, fig: Option<FigPreset>) -> Result<String> {
    if let Some(f) = fig {
        return Err(f.wrong_command("run"));
    }
    let parsed = parse_sequence_file(&args.file)?;
    let start = initial_state(&args.input, parsed.n_qubits)?;
    let initial_reduced = start.reduce_qubits();
    let finished = run_sequence(start, &parsed.seq)?;

    let mut csv = String::from("matrix,row,col,re,im\n");
    push_matrix_rows(&mut csv, "reduced", &finished.reduce_qubits());
    match finished.dephasing_kernel(&initial_reduced) {
        Ok(kernel) => push_matrix_rows(&mut csv, "kernel", kernel.matrix()),
        Err(e) => eprintln!("note: kernel not available: {e}"),
    }

    if args.oracle {
        if args.input != "plus" {
            return Err(QubusError::InvalidParameter(
                "--oracle comparison starts from the plus state; drop --input".into(),
            ));
        }
        let report = compare_with_engine(parsed.n_qubits, &parsed.seq, 1e-9)?;
        push_matrix_rows(&mut csv, "oracle_reduced", &report.oracle_reduced);
        csv.push_str(&format!(
            "oracle_deviation,0,0,{},{}\n",
            fmt(report.max_deviation),
            fmt(0.0)
        ));
    }
    Ok(csv)
}
