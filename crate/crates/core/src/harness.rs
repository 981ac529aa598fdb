//! Static diagnostics and the bounded equivalence test between the source
//! semantics of a program and the semantics of its compiled form.

use std::collections::BTreeSet;
use std::fmt;

use crate::compiler::{compile_program, CompileError, CompileOptions};
use crate::frontend::TypedProgram;
use crate::lang::{Loc, MatchProc, Pattern, Process, Value};
use crate::pattern::useful;
use crate::runtime::{explore, Exploration, Machine, Mode, Outputs, RuntimeError};
use crate::types::Type;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// Some messages on `channel` match no pattern argument.
    NonExhaustive { channel: String, ty: Type, witness: Option<Value> },
    /// Clause `clause` of a `match` can never be selected.
    UselessClause { loc: Loc, clause: usize, pattern: Pattern },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NonExhaustive { channel, witness: Some(v), .. } => {
                write!(f, "warning: patterns of channel `{channel}` are not exhaustive; `{v}` is not matched")
            }
            Diagnostic::NonExhaustive { channel, witness: None, .. } => {
                write!(f, "warning: patterns of channel `{channel}` are not exhaustive")
            }
            Diagnostic::UselessClause { loc, clause, pattern } => {
                write!(f, "warning: {}:{}: match clause {clause} (`{pattern}`) is unused", loc.line, loc.col)
            }
        }
    }
}

fn collect_matches<'a>(p: &'a Process, out: &mut Vec<&'a MatchProc>) {
    match p {
        Process::Null | Process::Send { .. } => {}
        Process::Parallel(l, r) => {
            collect_matches(l, out);
            collect_matches(r, out);
        }
        Process::Def(d, body) => {
            for r in &d.rules {
                collect_matches(&r.body, out);
            }
            collect_matches(body, out);
        }
        Process::Match(m) => {
            out.push(m);
            for (_, body) in &m.clauses {
                collect_matches(body, out);
            }
        }
    }
}

/// Exhaustiveness warnings per defined channel, then usefulness warnings
/// per `match` clause, in source order.
pub fn check(t: &TypedProgram) -> Result<Vec<Diagnostic>, CompileError> {
    let mut out = Vec::new();
    for r in compile_program(t, CompileOptions::default())?.reports {
        if !r.exhaustive {
            out.push(Diagnostic::NonExhaustive { channel: r.channel, ty: r.ty, witness: r.missing });
        }
    }
    let mut ms = Vec::new();
    collect_matches(&t.program.main, &mut ms);
    for m in ms {
        let Some(ty) = &m.subject_type else { continue };
        let pats: Vec<Pattern> = m.clauses.iter().map(|(p, _)| p.clone()).collect();
        for i in 0..pats.len() {
            if !useful(&t.env, &pats[..i], &pats[i], ty)? {
                out.push(Diagnostic::UselessClause { loc: m.loc, clause: i, pattern: pats[i].clone() });
            }
        }
    }
    Ok(out)
}

/// Observable summary of one mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub weak_barbs: BTreeSet<String>,
    pub terminal_outputs: BTreeSet<Outputs>,
    pub states: usize,
}

impl From<Exploration> for Summary {
    fn from(e: Exploration) -> Self {
        Summary { weak_barbs: e.weak_barbs, terminal_outputs: e.terminal_outputs, states: e.states }
    }
}

/// An observation made in exactly one of the two modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Barb { channel: String, only_in: Mode },
    Terminal { outputs: Outputs, only_in: Mode },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = |m: &Mode| if *m == Mode::Direct { "direct" } else { "compiled" };
        match self {
            Witness::Barb { channel, only_in } => write!(f, "barb on `{channel}` reachable only in {} mode", mode(only_in)),
            Witness::Terminal { outputs, only_in } => {
                write!(f, "terminal output {} reachable only in {} mode", format_outputs(outputs), mode(only_in))
            }
        }
    }
}

pub fn format_outputs(o: &Outputs) -> String {
    let parts: Vec<String> = o.iter().map(|(ch, vs)| format!("{ch}:[{}]", vs.join(", "))).collect();
    format!("{{{}}}", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    Distinguished(Witness),
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivVerdict {
    pub program: String,
    pub depth: usize,
    pub direct: Option<Summary>,
    pub compiled: Option<Summary>,
    pub verdict: Verdict,
}

impl EquivVerdict {
    pub fn is_equivalent(&self) -> bool {
        self.verdict == Verdict::Equivalent
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        for (name, s) in [("direct", &self.direct), ("compiled", &self.compiled)] {
            if let Some(s) = s {
                let barbs: Vec<&str> = s.weak_barbs.iter().map(String::as_str).collect();
                let terms: Vec<String> = s.terminal_outputs.iter().map(format_outputs).collect();
                out.push_str(&format!(
                    "{name}: states={} barbs={{{}}} terminal=[{}]\n",
                    s.states,
                    barbs.join(", "),
                    terms.join(" ")
                ));
            }
        }
        match &self.verdict {
            Verdict::Equivalent => out.push_str(&format!("equivalent at depth {}\n", self.depth)),
            Verdict::Distinguished(w) => out.push_str(&format!("distinguished at depth {}: {w}\n", self.depth)),
            Verdict::Inconclusive(why) => out.push_str(&format!("inconclusive at depth {}: {why}\n", self.depth)),
        }
        out
    }
}

fn first_difference(direct: &Summary, compiled: &Summary) -> Option<Witness> {
    let barb = |a: &Summary, b: &Summary, m: Mode| {
        a.weak_barbs.difference(&b.weak_barbs).next().map(|c| Witness::Barb { channel: c.clone(), only_in: m })
    };
    if let Some(w) = barb(direct, compiled, Mode::Direct).or_else(|| barb(compiled, direct, Mode::Compiled)) {
        return Some(w);
    }
    let size = |o: &Outputs| o.values().map(Vec::len).sum::<usize>();
    let mut diffs: Vec<Witness> = Vec::new();
    for (a, b, m) in [(direct, compiled, Mode::Direct), (compiled, direct, Mode::Compiled)] {
        for o in a.terminal_outputs.difference(&b.terminal_outputs) {
            diffs.push(Witness::Terminal { outputs: o.clone(), only_in: m });
        }
    }
    diffs.into_iter().min_by_key(|w| match w {
        Witness::Terminal { outputs, .. } => size(outputs),
        Witness::Barb { .. } => 0,
    })
}

/// Explores both modes to `depth` counted reductions and compares their
/// weak barbs and terminal outputs.
pub fn equiv(
    t: &TypedProgram,
    program: &str,
    depth: usize,
    budget: usize,
    opts: CompileOptions,
) -> Result<EquivVerdict, RuntimeError> {
    let direct = Machine::load(t, Mode::Direct, opts)?;
    let compiled = Machine::load(t, Mode::Compiled, opts)?;
    let run = |m: &Machine| match explore(m, depth, budget) {
        Ok(e) => Ok(Some(Summary::from(e))),
        Err(RuntimeError::StateBudgetExceeded(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let d = run(&direct)?;
    let c = run(&compiled)?;
    let verdict = match (&d, &c) {
        (Some(d), Some(c)) => match first_difference(d, c) {
            None => Verdict::Equivalent,
            Some(w) => Verdict::Distinguished(w),
        },
        _ => Verdict::Inconclusive(format!("state budget of {budget} exceeded")),
    };
    Ok(EquivVerdict { program: program.to_string(), depth, direct: d, compiled: c, verdict })
}
