//! Compilation of algebraic join patterns into ordinary join patterns plus
//! first-match dispatchers, and lowering of `or` join patterns to matching
//! lists.

use std::collections::BTreeSet;
use std::fmt::{self, Write};

use crate::frontend::{Program, TypedProgram};
use crate::lang::{
    all_names, fresh_name, DispatchClause, Definition, Dispatcher, Expression, JoinAtom, JoinPattern, MatchProc,
    MessagePattern, Pattern, Process, ReactionRule, Value,
};
use crate::lattice::{build, PatternLattice};
use crate::pattern::{erase_vars, exhaustive, useful, useful_witness, PatternError};
use crate::types::{Type, TypeEnv};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("channel `{0}` has no inferred type; typecheck the program first")]
    Untyped(String),
    #[error("`{channel}({pattern})`: matching lists need variable arguments")]
    NonVariableArgument { channel: String, pattern: String },
}

/// Dispatcher clause pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pruning {
    /// Keep every lattice vertex.
    Off,
    /// Drop vertices that are useless after the preceding ones.
    #[default]
    Usefulness,
    /// Drop every vertex that is not equivalent to a source pattern, without
    /// checking usefulness. Unsound; exists to exercise the equivalence
    /// harness.
    UncheckedDropDerived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompileOptions {
    pub pruning: Pruning,
}

/// What `transform_channel` did to one channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelReport {
    pub channel: String,
    pub ty: Type,
    /// Distinct (up to equivalence) variable-erased pattern arguments.
    pub patterns: Vec<Pattern>,
    pub exhaustive: bool,
    /// Smallest value matched by none of the patterns, when not exhaustive.
    pub missing: Option<Value>,
    /// Single exhaustive pattern: rules rewritten without a dispatcher.
    pub jump: bool,
    pub lattice: Option<PatternLattice>,
    pub kept: BTreeSet<usize>,
}

/// Vertex `j` is kept iff its annotation is useful after the kept vertices
/// that precede it.
pub fn prune_useless(env: &TypeEnv, l: &PatternLattice) -> Result<BTreeSet<usize>, PatternError> {
    let mut kept = BTreeSet::new();
    let mut before: Vec<Pattern> = Vec::new();
    for v in &l.vertices {
        if useful(env, &before, &v.annotation, &l.ty)? {
            kept.insert(v.index);
            before.push(v.annotation.clone());
        }
    }
    Ok(kept)
}

pub fn forward_name(x: &str, j: usize) -> String {
    format!("{x}@{j}")
}

/// `x(z) |> match z with | ω_j -> x@j(z) … [| _ -> 0]` over the kept vertices.
pub fn synth_dispatcher(
    x: &str,
    subject: &str,
    l: &PatternLattice,
    exhaustive: bool,
    kept: &BTreeSet<usize>,
) -> Dispatcher {
    Dispatcher {
        channel: x.to_string(),
        subject: subject.to_string(),
        clauses: l
            .vertices
            .iter()
            .filter(|v| kept.contains(&v.index))
            .map(|v| DispatchClause { pattern: v.annotation.clone(), forward_to: forward_name(x, v.index), vertex: v.index })
            .collect(),
        catch_all: !exhaustive,
    }
}

fn message_position(j: &JoinPattern, x: &str) -> Option<usize> {
    j.atoms.iter().position(|a| matches!(a, JoinAtom::Message(m) if m.channel == x))
}

/// The transformer `Y_x`. Fresh names are drawn from, and added to, `used`.
pub fn transform_channel(
    env: &TypeEnv,
    d: &Definition,
    x: &str,
    opts: CompileOptions,
    used: &mut BTreeSet<String>,
) -> Result<(Definition, ChannelReport), CompileError> {
    let ty = d.channel_types.get(x).cloned().ok_or_else(|| CompileError::Untyped(x.to_string()))?;

    // Erase, dedupe and check exhaustiveness
    let mut sources: Vec<(usize, usize, Pattern)> = Vec::new();
    for (ri, r) in d.rules.iter().enumerate() {
        if let Some(pos) = message_position(&r.pattern, x) {
            let JoinAtom::Message(m) = &r.pattern.atoms[pos] else { unreachable!() };
            sources.push((ri, pos, m.arg.clone()));
        }
    }
    let source_pats: Vec<Pattern> = sources.iter().map(|(_, _, p)| p.clone()).collect();
    let erased: Vec<Pattern> = source_pats.iter().map(erase_vars).collect();
    let distinct = crate::lattice::dedupe(env, &ty, &erased)?;
    let is_exhaustive = exhaustive(env, &distinct, &ty)?;
    let missing =
        if is_exhaustive { None } else { useful_witness(env, &distinct, &Pattern::Wildcard, &ty)? };
    let jump = distinct.len() == 1 && is_exhaustive;

    let mut out = d.clone();
    let mut report = ChannelReport {
        channel: x.to_string(),
        ty: ty.clone(),
        patterns: distinct,
        exhaustive: is_exhaustive,
        missing,
        jump,
        lattice: None,
        kept: BTreeSet::new(),
    };

    // Lattice, pruning and dispatcher
    let mut targets: Vec<Vec<usize>> = Vec::new();
    if !jump {
        let l = build(env, &ty, &source_pats)?;
        let kept = match opts.pruning {
            Pruning::Off => l.vertices.iter().map(|v| v.index).collect(),
            Pruning::Usefulness => prune_useless(env, &l)?,
            Pruning::UncheckedDropDerived => {
                l.vertices.iter().filter(|v| !v.origins.is_empty()).map(|v| v.index).collect()
            }
        };
        for (s, _) in sources.iter().enumerate() {
            let own: Vec<usize> = l.vertices.iter().filter(|v| v.origins.contains(&s)).map(|v| v.index).collect();
            let mut t: Vec<usize> = l.preds[s].iter().copied().filter(|j| kept.contains(j)).collect();
            if t.is_empty() {
                t = own;
            }
            targets.push(t);
        }
        let z = fresh_name("z", used);
        used.insert(z.clone());
        let disp = synth_dispatcher(x, &z, &l, is_exhaustive, &kept);
        for c in &disp.clauses {
            out.channel_types.insert(c.forward_to.clone(), ty.clone());
        }
        out.dispatchers.push(disp);
        report.lattice = Some(l);
        report.kept = kept;
    }

    // Rewrite each rule onto its forwarding channels
    for (s, (ri, pos, pat)) in sources.iter().enumerate() {
        let zi = fresh_name("z", used);
        used.insert(zi.clone());
        let msg = |chan: String| JoinAtom::Message(MessagePattern::new(&chan, Pattern::Var(zi.clone())));
        let atom = if jump {
            msg(x.to_string())
        } else {
            match targets[s].as_slice() {
                [j] => msg(forward_name(x, *j)),
                many => JoinAtom::Or(
                    many.iter().map(|j| JoinPattern { atoms: vec![msg(forward_name(x, *j))] }).collect(),
                ),
            }
        };
        let rule = &mut out.rules[*ri];
        rule.pattern.atoms[*pos] = atom;
        let body = std::mem::replace(&mut rule.body, Process::Null);
        let mut residual = MatchProc::new(Expression::Var(zi.clone()), vec![(pat.clone(), body)]);
        residual.no_test = true;
        residual.subject_type = Some(ty.clone());
        residual.loc = rule.loc;
        rule.body = Process::Match(Box::new(residual));
    }
    Ok((out, report))
}

struct Compiler<'e> {
    env: &'e TypeEnv,
    opts: CompileOptions,
    used: BTreeSet<String>,
    reports: Vec<ChannelReport>,
}

impl Compiler<'_> {
    fn process(&mut self, p: &Process) -> Result<Process, CompileError> {
        Ok(match p {
            Process::Null | Process::Send { .. } => p.clone(),
            Process::Parallel(l, r) => Process::par(self.process(l)?, self.process(r)?),
            Process::Match(m) => {
                let mut m2 = (**m).clone();
                for (_, body) in &mut m2.clauses {
                    *body = self.process(body)?;
                }
                Process::Match(Box::new(m2))
            }
            Process::Def(d, body) => {
                let mut d2 = d.expand_or();
                for r in &mut d2.rules {
                    r.body = self.process(&r.body)?;
                }
                for x in d2.channels_in_order() {
                    let (next, report) = transform_channel(self.env, &d2, &x, self.opts, &mut self.used)?;
                    d2 = next;
                    self.reports.push(report);
                }
                Process::def(d2, self.process(body)?)
            }
        })
    }
}

/// Result of the scheme `C[·]` on a whole program.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub program: Program,
    /// One report per transformed channel, in transformation order.
    pub reports: Vec<ChannelReport>,
}

/// `C[P]` applied to a type-checked program.
pub fn compile_program(t: &TypedProgram, opts: CompileOptions) -> Result<CompiledProgram, CompileError> {
    let mut used = BTreeSet::new();
    all_names(&t.program.main, &mut used);
    let mut c = Compiler { env: &t.env, opts, used, reports: Vec::new() };
    let main = c.process(&t.program.main)?;
    Ok(CompiledProgram {
        program: Program { type_decls: t.program.type_decls.clone(), main },
        reports: c.reports,
    })
}

/// `C[P]` on a bare process.
pub fn compile_process(env: &TypeEnv, p: &Process, opts: CompileOptions) -> Result<Process, CompileError> {
    let mut used = BTreeSet::new();
    all_names(p, &mut used);
    Compiler { env, opts, used, reports: Vec::new() }.process(p)
}

// ---------------------------------------------------------------------------
// Matching lists

/// Set of channel slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SlotSet {
    words: Vec<u64>,
    len: usize,
}

impl SlotSet {
    pub fn new(len: usize) -> Self {
        SlotSet { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn insert(&mut self, slot: usize) {
        self.words[slot / 64] |= 1 << (slot % 64);
    }

    pub fn remove(&mut self, slot: usize) {
        self.words[slot / 64] &= !(1 << (slot % 64));
    }

    pub fn contains(&self, slot: usize) -> bool {
        self.words[slot / 64] & (1 << (slot % 64)) != 0
    }

    pub fn is_subset(&self, other: &SlotSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|s| self.contains(*s))
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Slot 0 first.
impl fmt::Display for SlotSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in 0..self.len {
            f.write_char(if self.contains(s) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingEntry {
    pub bitset: SlotSet,
    /// Slot supplying each formal parameter of the body, in formal order.
    pub dictionary: Vec<usize>,
    pub body: usize,
}

/// Guarded process shared by all entries of one source rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardedBody {
    pub formals: Vec<String>,
    pub process: Process,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledDefinition {
    /// Channel name of each slot.
    pub slots: Vec<String>,
    pub matching_list: Vec<MatchingEntry>,
    pub bodies: Vec<GuardedBody>,
    pub dispatchers: Vec<Dispatcher>,
}

impl CompiledDefinition {
    pub fn slot(&self, channel: &str) -> Option<usize> {
        self.slots.iter().position(|c| c == channel)
    }

    /// One line per entry: `bitset  dictionary  body#`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.matching_list {
            let dict: Vec<String> = e.dictionary.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}  [{}]  {}", e.bitset, dict.join("; "), e.body);
        }
        out
    }
}

/// Expands the `or` groups of every rule into matching-list entries that
/// share one body per rule.
pub fn lower_or(d: &Definition) -> Result<CompiledDefinition, CompileError> {
    let slots = d.channels_in_order();
    let slot_of = |c: &str| slots.iter().position(|s| s == c).expect("channel has a slot");
    let mut matching_list = Vec::new();
    let mut bodies = Vec::new();
    for (bi, r) in d.rules.iter().enumerate() {
        let combos = r.pattern.expand();
        let mut formals: Vec<String> = Vec::new();
        for m in combos.first().into_iter().flatten() {
            if let Pattern::Var(v) = &m.arg {
                if !formals.contains(v) {
                    formals.push(v.clone());
                }
            }
        }
        for combo in &combos {
            let mut bitset = SlotSet::new(slots.len());
            let mut dictionary = vec![usize::MAX; formals.len()];
            for m in combo {
                let s = slot_of(&m.channel);
                bitset.insert(s);
                match &m.arg {
                    Pattern::Var(v) => {
                        let k = formals.iter().position(|f| f == v).ok_or_else(|| non_var(m))?;
                        dictionary[k] = s;
                    }
                    Pattern::Wildcard => {}
                    _ => return Err(non_var(m)),
                }
            }
            if dictionary.contains(&usize::MAX) {
                return Err(non_var(&combo[0]));
            }
            matching_list.push(MatchingEntry { bitset, dictionary, body: bi });
        }
        bodies.push(GuardedBody { formals, process: r.body.clone() });
    }
    Ok(CompiledDefinition { slots, matching_list, bodies, dispatchers: d.dispatchers.clone() })
}

fn non_var(m: &MessagePattern) -> CompileError {
    CompileError::NonVariableArgument { channel: m.channel.clone(), pattern: m.arg.to_string() }
}

/// Definitions of a process in pre-order (not descending into rule bodies
/// of nested definitions' runtime copies, which do not exist statically).
pub fn definitions(p: &Process) -> Vec<&Definition> {
    fn go<'a>(p: &'a Process, out: &mut Vec<&'a Definition>) {
        match p {
            Process::Null | Process::Send { .. } => {}
            Process::Parallel(l, r) => {
                go(l, out);
                go(r, out);
            }
            Process::Def(d, body) => {
                out.push(d);
                for r in &d.rules {
                    go(&r.body, out);
                }
                go(body, out);
            }
            Process::Match(m) => m.clauses.iter().for_each(|(_, b)| go(b, out)),
        }
    }
    let mut out = Vec::new();
    go(p, &mut out);
    out
}

/// Rules of a definition as source-level rules (dispatchers included).
pub fn all_rules(d: &Definition) -> Vec<ReactionRule> {
    d.rules.iter().cloned().chain(d.dispatchers.iter().map(Dispatcher::to_rule)).collect()
}
