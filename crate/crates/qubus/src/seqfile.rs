//! Line-oriented sequence file format.
//!
//! ```text
//! # comments run to end of line
//! qubits 2
//! D target=0 re=0.6267 im=0       # conditional displacement D(βZ_0)
//! L l=0.1
//! D re=-0.5 im=0.25               # no target: unconditional displacement
//! R target=1 theta=0.7
//! I target=0 chi=1 gamma=0.5 t=0.9
//! ```
//!
//! The first significant line must be the `qubits <n>` header; every later
//! line is one step: `D [target=<k>] re=<f> im=<f>`, `R target=<k>
//! theta=<f>`, `L l=<f>` or `I target=<k> chi=<f> gamma=<f> t=<f>`. Tokens
//! are whitespace-separated `key=value` pairs; unknown or repeated keys are
//! rejected. All errors carry the one-based line number.

use std::path::Path;

use num_complex::Complex64;

use crate::channels::{CouplingSpec, SequenceSpec, Step};
use crate::error::{QubusError, Result};
use crate::state::MAX_QUBITS;

/// A parsed sequence file: the register width plus the validated steps.
#[derive(Clone, Debug)]
pub struct ParsedSequence {
    pub n_qubits: usize,
    pub seq: SequenceSpec,
}

fn err(line: usize, msg: impl Into<String>) -> QubusError {
    QubusError::Parse { line, msg: msg.into() }
}

/// The `key=value` arguments of one step line, consumed key by key so that
/// leftovers can be rejected as unknown.
struct Args<'a> {
    line: usize,
    op: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Args<'a> {
    fn new(op: &'a str, tokens: &[&'a str], line: usize) -> Result<Self> {
        let mut pairs: Vec<(&'a str, &'a str)> = Vec::with_capacity(tokens.len());
        for token in tokens {
            let (key, value) = token.split_once('=').ok_or_else(|| {
                err(line, format!("expected key=value, got `{token}` in step `{op}`"))
            })?;
            if key.is_empty() || value.is_empty() {
                return Err(err(line, format!("malformed key=value pair `{token}`")));
            }
            if pairs.iter().any(|&(k, _)| k == key) {
                return Err(err(line, format!("duplicate key `{key}` in step `{op}`")));
            }
            pairs.push((key, value));
        }
        Ok(Self { line, op, pairs })
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        let idx = self.pairs.iter().position(|&(k, _)| k == key)?;
        Some(self.pairs.swap_remove(idx).1)
    }

    fn take_f64(&mut self, key: &str) -> Result<f64> {
        let raw = self.take(key).ok_or_else(|| {
            err(self.line, format!("step `{}` is missing key `{key}`", self.op))
        })?;
        raw.parse::<f64>()
            .map_err(|_| err(self.line, format!("invalid number `{raw}` for key `{key}`")))
    }

    fn take_target(&mut self) -> Result<Option<usize>> {
        match self.take("target") {
            None => Ok(None),
            Some(raw) => raw
                .parse::<usize>()
                .map(Some)
                .map_err(|_| err(self.line, format!("invalid target index `{raw}`"))),
        }
    }

    fn require_target(&mut self) -> Result<usize> {
        self.take_target()?.ok_or_else(|| {
            err(self.line, format!("step `{}` is missing key `target`", self.op))
        })
    }

    fn finish(self) -> Result<()> {
        if let Some(&(key, _)) = self.pairs.first() {
            return Err(err(
                self.line,
                format!("unknown key `{key}` for step `{}`", self.op),
            ));
        }
        Ok(())
    }
}

/// Parses sequence text. See the module docs for the grammar.
pub fn parse_sequence_str(text: &str) -> Result<ParsedSequence> {
    let mut n_qubits: Option<usize> = None;
    let mut steps: Vec<Step> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let op = tokens[0];

        let Some(n) = n_qubits else {
            if op != "qubits" {
                return Err(err(line, format!("expected `qubits <n>` header, got `{op}`")));
            }
            if tokens.len() != 2 {
                return Err(err(line, "header must be exactly `qubits <n>`"));
            }
            let n: usize = tokens[1]
                .parse()
                .map_err(|_| err(line, format!("invalid qubit count `{}`", tokens[1])))?;
            if n == 0 || n > MAX_QUBITS {
                return Err(err(
                    line,
                    format!("qubit count must lie in 1..={MAX_QUBITS}, got {n}"),
                ));
            }
            n_qubits = Some(n);
            continue;
        };

        let mut args = Args::new(op, &tokens[1..], line)?;
        let step = match op {
            "D" => {
                let target = args.take_target()?;
                let re = args.take_f64("re")?;
                let im = args.take_f64("im")?;
                Step::Displace { target, beta: Complex64::new(re, im) }
            }
            "R" => {
                let target = args.require_target()?;
                let theta = args.take_f64("theta")?;
                Step::Rotate { target, theta }
            }
            "L" => Step::Loss { l: args.take_f64("l")? },
            "I" => {
                let target = args.require_target()?;
                let chi = args.take_f64("chi")?;
                let gamma = args.take_f64("gamma")?;
                let t = args.take_f64("t")?;
                Step::Interact { target, spec: CouplingSpec::pauli_z(chi, gamma, t) }
            }
            other => {
                return Err(err(
                    line,
                    format!("unknown step `{other}` (expected D, R, L or I)"),
                ));
            }
        };
        args.finish()?;
        step.validate(n).map_err(|e| err(line, e.to_string()))?;
        steps.push(step);
    }

    let n_qubits =
        n_qubits.ok_or_else(|| err(1, "missing `qubits <n>` header (empty file?)"))?;
    Ok(ParsedSequence { n_qubits, seq: SequenceSpec::new(steps) })
}

/// Reads and parses a sequence file from disk.
pub fn parse_sequence_file(path: &Path) -> Result<ParsedSequence> {
    parse_sequence_str(&std::fs::read_to_string(path)?)
}
