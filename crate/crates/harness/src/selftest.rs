//! `selftest`: runs every invariant suite and prints a table.

use std::io::Write;

use anyhow::{anyhow, Result};
use glnn_core::tensor::OpKind;

use crate::checks::{all_suites, SuiteReport};

/// Runs all suites; `fault` names an op whose adjoint is deliberately broken.
pub fn run_selftest(fault: Option<&str>) -> Result<Vec<SuiteReport>> {
    let fault = match fault {
        None => None,
        Some(name) => Some(OpKind::from_name(name).ok_or_else(|| {
            let known: Vec<&str> = OpKind::ALL.iter().map(|k| k.name()).collect();
            anyhow!("unknown op `{name}`; known ops: {}", known.join(", "))
        })?),
    };
    Ok(all_suites(fault))
}

pub fn print_table<W: Write>(out: &mut W, reports: &[SuiteReport]) -> std::io::Result<()> {
    writeln!(out, "{:<12} {:<6} {:>10}  detail", "suite", "status", "time_ms")?;
    for r in reports {
        writeln!(
            out,
            "{:<12} {:<6} {:>10.1}  {}",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.elapsed.as_secs_f64() * 1e3,
            r.detail
        )?;
        for f in &r.failures {
            writeln!(out, "    - {f}")?;
        }
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    writeln!(out, "{} of {} suites passed", reports.len() - failed, reports.len())
}
