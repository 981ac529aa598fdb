//! Python bindings. Every function takes program source text.

use joinmatch::compiler::{compile_program, CompileOptions, Pruning};
use joinmatch::frontend::{parse, typecheck, TypedProgram};
use joinmatch::harness::{check as check_program, equiv as equiv_program, Verdict};
use joinmatch::print::program_to_string;
use joinmatch::runtime::{run as run_machine, Machine, Mode};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn load(src: &str) -> PyResult<TypedProgram> {
    typecheck(&parse(src).map_err(err)?).map_err(err)
}

fn options(optimize: bool) -> CompileOptions {
    CompileOptions { pruning: if optimize { Pruning::Usefulness } else { Pruning::Off } }
}

/// Warnings for non-exhaustive channels and unused match clauses.
#[pyfunction]
fn check(src: &str) -> PyResult<Vec<String>> {
    Ok(check_program(&load(src)?).map_err(err)?.iter().map(ToString::to_string).collect())
}

/// The program after pattern compilation, as source text.
#[pyfunction]
#[pyo3(signature = (src, optimize = true))]
fn compile(src: &str, optimize: bool) -> PyResult<String> {
    let c = compile_program(&load(src)?, options(optimize)).map_err(err)?;
    Ok(program_to_string(&c.program))
}

/// Pattern lattices of the transformed channels, keyed by channel name.
#[pyfunction]
fn lattices(src: &str) -> PyResult<Vec<(String, String)>> {
    let t = load(src)?;
    let c = compile_program(&t, CompileOptions::default()).map_err(err)?;
    let mut out = Vec::new();
    for r in &c.reports {
        if let Some(l) = &r.lattice {
            out.push((r.channel.clone(), l.dump(&t.env).map_err(err)?));
        }
    }
    Ok(out)
}

/// Seeded run; returns the trace dump.
#[pyfunction]
#[pyo3(signature = (src, mode = "direct", seed = 0, steps = 10000))]
fn run(src: &str, mode: &str, seed: u64, steps: usize) -> PyResult<String> {
    let mode: Mode = mode.parse().map_err(err)?;
    let mut m = Machine::load(&load(src)?, mode, CompileOptions::default()).map_err(err)?;
    Ok(run_machine(&mut m, seed, steps).map_err(err)?.dump())
}

/// Bounded comparison of source and compiled semantics.
/// Returns `(verdict, report)` with verdict one of
/// `"equivalent"`, `"distinguished"`, `"inconclusive"`.
#[pyfunction]
#[pyo3(signature = (src, depth = 10, budget = 1_000_000))]
fn equiv(src: &str, depth: usize, budget: usize) -> PyResult<(String, String)> {
    let v = equiv_program(&load(src)?, "<python>", depth, budget, CompileOptions::default()).map_err(err)?;
    let verdict = match v.verdict {
        Verdict::Equivalent => "equivalent",
        Verdict::Distinguished(_) => "distinguished",
        Verdict::Inconclusive(_) => "inconclusive",
    };
    Ok((verdict.to_string(), v.report()))
}

#[pymodule]
#[pyo3(name = "joinmatch")]
fn joinmatch_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(lattices, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(equiv, m)?)?;
    Ok(())
}
