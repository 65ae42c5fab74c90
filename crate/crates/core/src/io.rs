//! Text formats for instances, solution matrices, and solver traces.
//!
//! Instance file:
//!
//! ```text
//! covsel-instance 1
//! <n>
//! <rho>
//! <n rows of n whitespace-separated decimals, row-major Sigma>
//! ```
//!
//! Solution matrices use the same layout with header `covsel-matrix 1` and
//! no `rho` line. Numbers are written with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{CovselError, Result};
use crate::problem::{Instance, SpectralBox};
use crate::report::{SolveReport, Status, TraceRecord};
use crate::symmat::SymMatrix;

pub const INSTANCE_HEADER: &str = "covsel-instance 1";
pub const MATRIX_HEADER: &str = "covsel-matrix 1";

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows<W: Write>(w: &mut W, m: &SymMatrix) -> Result<()> {
    for i in 0..m.n() {
        let row: Vec<String> = (0..m.n()).map(|j| fmt_f64(m.get(i, j))).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn write_instance<W: Write>(mut w: W, inst: &Instance) -> Result<()> {
    writeln!(w, "{INSTANCE_HEADER}")?;
    writeln!(w, "{}", inst.n())?;
    writeln!(w, "{}", fmt_f64(inst.rho()))?;
    write_rows(&mut w, inst.sigma())?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix<W: Write>(mut w: W, m: &SymMatrix) -> Result<()> {
    writeln!(w, "{MATRIX_HEADER}")?;
    writeln!(w, "{}", m.n())?;
    write_rows(&mut w, m)?;
    w.flush()?;
    Ok(())
}

struct Tokens {
    words: std::vec::IntoIter<String>,
}

impl Tokens {
    fn next_str(&mut self, what: &str) -> Result<String> {
        self.words.next().ok_or_else(|| {
            CovselError::InvalidInput(format!("unexpected end of file reading {what}"))
        })
    }

    fn next_f64(&mut self, what: &str) -> Result<f64> {
        let s = self.next_str(what)?;
        s.parse()
            .map_err(|_| CovselError::InvalidInput(format!("bad number {s:?} for {what}")))
    }

    fn next_usize(&mut self, what: &str) -> Result<usize> {
        let s = self.next_str(what)?;
        s.parse()
            .map_err(|_| CovselError::InvalidInput(format!("bad integer {s:?} for {what}")))
    }

    fn finish(mut self) -> Result<()> {
        match self.words.next() {
            None => Ok(()),
            Some(s) => Err(CovselError::InvalidInput(format!("trailing data {s:?}"))),
        }
    }
}

fn read_with_header<R: BufRead>(mut r: R, header: &str) -> Result<Tokens> {
    let mut first = String::new();
    r.read_line(&mut first)?;
    if first.trim() != header {
        return Err(CovselError::InvalidInput(format!(
            "expected header {header:?}, found {:?}",
            first.trim()
        )));
    }
    let mut rest = String::new();
    r.read_to_string(&mut rest)?;
    let words: Vec<String> = rest.split_whitespace().map(str::to_owned).collect();
    Ok(Tokens {
        words: words.into_iter(),
    })
}

fn read_square(t: &mut Tokens, n: usize) -> Result<SymMatrix> {
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = t.next_f64(&format!("entry ({i},{j})"))?;
        }
    }
    SymMatrix::from_rows_checked(&rows)
}

pub fn read_instance<R: BufRead>(r: R) -> Result<Instance> {
    let mut t = read_with_header(r, INSTANCE_HEADER)?;
    let n = t.next_usize("n")?;
    if n == 0 {
        return Err(CovselError::InvalidInput("n must be at least 1".into()));
    }
    let rho = t.next_f64("rho")?;
    let sigma = read_square(&mut t, n)?;
    t.finish()?;
    Instance::new(sigma, rho)
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<SymMatrix> {
    let mut t = read_with_header(r, MATRIX_HEADER)?;
    let n = t.next_usize("n")?;
    let m = read_square(&mut t, n)?;
    t.finish()?;
    Ok(m)
}

/// JSON trace document written by `covsel solve --trace`.
#[derive(Debug, Clone, Serialize)]
pub struct TraceFile<'a> {
    pub method: &'a str,
    pub n: usize,
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub seed: Option<u64>,
    pub iterations: &'a [TraceRecord],
    pub iteration_count: usize,
    pub status: Status,
    pub total_ms: u64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub final_gap: f64,
    pub beta_hat: f64,
    pub restart_count: usize,
}

impl<'a> TraceFile<'a> {
    pub fn new(
        method: &'a str,
        inst: &Instance,
        bx: &SpectralBox,
        eps: f64,
        seed: Option<u64>,
        report: &'a SolveReport,
    ) -> Self {
        Self {
            method,
            n: inst.n(),
            rho: inst.rho(),
            alpha: bx.alpha,
            beta: bx.beta,
            eps,
            seed,
            iterations: &report.trace,
            iteration_count: report.iterations,
            status: report.status,
            total_ms: report.total_ms,
            primal_obj: report.primal_obj,
            dual_obj: report.dual_obj,
            final_gap: report.final_gap,
            beta_hat: report.beta_hat,
            restart_count: report.restart_count,
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)
            .map_err(|e| CovselError::InvalidInput(format!("trace serialization: {e}")))?;
        writeln!(w)?;
        Ok(())
    }
}
