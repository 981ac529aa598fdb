//! Abstract syntax of the applied join calculus, binder sets, substitution
//! and fresh-name generation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::types::Type;

/// Source position (1-based line and column).
///
/// Locations never take part in structural comparison: two trees that differ
/// only in where they were parsed from compare equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for Loc {}

impl std::hash::Hash for Loc {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Runtime channel identity, minted by the machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChanId(pub u32);

impl fmt::Display for ChanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chan#{}", self.0)
    }
}

/// Name of the builtin tuple constructor of the given arity: `()`, `(,)`, `(,,)`...
pub fn tuple_ctor(arity: usize) -> String {
    if arity == 0 {
        "()".to_string()
    } else {
        format!("({})", ",".repeat(arity - 1))
    }
}

/// Arity encoded in a tuple constructor name, if `ctor` is one.
pub fn tuple_arity(ctor: &str) -> Option<usize> {
    let inner = ctor.strip_prefix('(')?.strip_suffix(')')?;
    if inner.chars().all(|c| c == ',') {
        Some(if ctor == "()" { 0 } else { inner.len() + 1 })
    } else {
        None
    }
}

/// Linear algebraic pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pattern {
    Var(String),
    Wildcard,
    /// Constant constructor of the builtin `int` family.
    Int(i64),
    Ctor(String, Vec<Pattern>),
}

impl Pattern {
    pub fn ctor(name: &str, args: Vec<Pattern>) -> Self {
        Pattern::Ctor(name.to_string(), args)
    }

    pub fn var(name: &str) -> Self {
        Pattern::Var(name.to_string())
    }

    pub fn tuple(args: Vec<Pattern>) -> Self {
        Pattern::Ctor(tuple_ctor(args.len()), args)
    }

    /// Whether the pattern is a variable or a wildcard.
    pub fn is_irrefutable_leaf(&self) -> bool {
        matches!(self, Pattern::Var(_) | Pattern::Wildcard)
    }

    /// Number of constructor nodes, int literals included.
    pub fn ctor_count(&self) -> usize {
        match self {
            Pattern::Var(_) | Pattern::Wildcard => 0,
            Pattern::Int(_) => 1,
            Pattern::Ctor(_, args) => 1 + args.iter().map(Pattern::ctor_count).sum::<usize>(),
        }
    }

    /// Constructor nesting depth: leaves and ints are 0, a constructor is one
    /// more than its deepest argument.
    pub fn depth(&self) -> usize {
        match self {
            Pattern::Var(_) | Pattern::Wildcard | Pattern::Int(_) => 0,
            Pattern::Ctor(_, args) => 1 + args.iter().map(Pattern::depth).max().unwrap_or(0),
        }
    }

    /// Int literals occurring in the pattern.
    pub fn int_literals(&self, out: &mut BTreeSet<i64>) {
        match self {
            Pattern::Int(n) => {
                out.insert(*n);
            }
            Pattern::Ctor(_, args) => args.iter().for_each(|a| a.int_literals(out)),
            _ => {}
        }
    }
}

/// Expression. `Chan` only appears after substitution at runtime.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expression {
    Var(String),
    Ctor(String, Vec<Expression>),
    Int(i64),
    Chan(ChanId),
}

impl Expression {
    pub fn tuple(args: Vec<Expression>) -> Self {
        Expression::Ctor(tuple_ctor(args.len()), args)
    }

    pub fn unit() -> Self {
        Expression::tuple(Vec::new())
    }

    /// Evaluates a closed expression.
    pub fn to_value(&self) -> Option<Value> {
        Some(match self {
            Expression::Var(_) => return None,
            Expression::Int(n) => Value::Int(*n),
            Expression::Chan(c) => Value::Chan(*c),
            Expression::Ctor(c, args) => Value::Ctor(
                c.clone(),
                args.iter().map(Expression::to_value).collect::<Option<Vec<_>>>()?,
            ),
        })
    }
}

/// Closed value: constructed data, int literal or channel reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Ctor(String, Vec<Value>),
    Int(i64),
    Chan(ChanId),
}

impl Value {
    pub fn ctor(name: &str, args: Vec<Value>) -> Self {
        Value::Ctor(name.to_string(), args)
    }

    pub fn tuple(args: Vec<Value>) -> Self {
        Value::Ctor(tuple_ctor(args.len()), args)
    }

    pub fn unit() -> Self {
        Value::tuple(Vec::new())
    }

    pub fn to_expr(&self) -> Expression {
        match self {
            Value::Ctor(c, args) => Expression::Ctor(c.clone(), args.iter().map(Value::to_expr).collect()),
            Value::Int(n) => Expression::Int(*n),
            Value::Chan(c) => Expression::Chan(*c),
        }
    }

    /// Same convention as [`Pattern::depth`].
    pub fn depth(&self) -> usize {
        match self {
            Value::Int(_) | Value::Chan(_) => 0,
            Value::Ctor(_, args) => 1 + args.iter().map(Value::depth).max().unwrap_or(0),
        }
    }

    pub fn to_pattern(&self) -> Option<Pattern> {
        Some(match self {
            Value::Ctor(c, args) => {
                Pattern::Ctor(c.clone(), args.iter().map(Value::to_pattern).collect::<Option<_>>()?)
            }
            Value::Int(n) => Pattern::Int(*n),
            Value::Chan(_) => return None,
        })
    }
}

/// Map from identifiers to closed values.
pub type Substitution = BTreeMap<String, Value>;

/// `x(π)` inside a join pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MessagePattern {
    pub channel: String,
    pub arg: Pattern,
    /// Optional `: T` annotation on the formal argument.
    pub annotation: Option<Type>,
}

impl MessagePattern {
    pub fn new(channel: &str, arg: Pattern) -> Self {
        MessagePattern { channel: channel.to_string(), arg, annotation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum JoinAtom {
    Message(MessagePattern),
    /// `J₁ or J₂ or …`, sugar for duplicating the enclosing rule.
    Or(Vec<JoinPattern>),
}

/// Conjunction `a₁ & a₂ & …` of message patterns and alternation groups.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct JoinPattern {
    pub atoms: Vec<JoinAtom>,
}

impl JoinPattern {
    pub fn new(messages: Vec<MessagePattern>) -> Self {
        JoinPattern { atoms: messages.into_iter().map(JoinAtom::Message).collect() }
    }

    pub fn has_or(&self) -> bool {
        self.atoms.iter().any(|a| matches!(a, JoinAtom::Or(_)))
    }

    /// Distributes `&` over `or`, yielding plain message conjunctions.
    pub fn expand(&self) -> Vec<Vec<MessagePattern>> {
        let mut acc: Vec<Vec<MessagePattern>> = vec![Vec::new()];
        for atom in &self.atoms {
            match atom {
                JoinAtom::Message(m) => acc.iter_mut().for_each(|v| v.push(m.clone())),
                JoinAtom::Or(alts) => {
                    let expanded: Vec<Vec<MessagePattern>> = alts.iter().flat_map(JoinPattern::expand).collect();
                    acc = acc
                        .into_iter()
                        .flat_map(|prefix| {
                            expanded.iter().map(move |alt| {
                                let mut v = prefix.clone();
                                v.extend(alt.iter().cloned());
                                v
                            })
                        })
                        .collect();
                }
            }
        }
        acc
    }

    /// Channels of every message pattern, alternatives included, in order of appearance.
    pub fn channels_in_order(&self, out: &mut Vec<String>) {
        for atom in &self.atoms {
            match atom {
                JoinAtom::Message(m) => {
                    if !out.contains(&m.channel) {
                        out.push(m.channel.clone());
                    }
                }
                JoinAtom::Or(alts) => alts.iter().for_each(|j| j.channels_in_order(out)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReactionRule {
    pub pattern: JoinPattern,
    pub body: Process,
    pub loc: Loc,
}

impl ReactionRule {
    pub fn new(pattern: JoinPattern, body: Process) -> Self {
        ReactionRule { pattern, body, loc: Loc::default() }
    }
}

/// Dispatcher clause `| ω -> x@j(z)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DispatchClause {
    pub pattern: Pattern,
    pub forward_to: String,
    /// Lattice index of the vertex the clause stands for.
    pub vertex: usize,
}

/// Synthesized rule `x(z) |> match z with Λ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dispatcher {
    pub channel: String,
    pub subject: String,
    pub clauses: Vec<DispatchClause>,
    /// Trailing `| _ -> 0`, present when the channel's patterns are not exhaustive.
    pub catch_all: bool,
}

impl Dispatcher {
    /// The dispatcher as an ordinary reaction rule.
    pub fn to_rule(&self) -> ReactionRule {
        let mut clauses: Vec<(Pattern, Process)> = self
            .clauses
            .iter()
            .map(|c| {
                (c.pattern.clone(), Process::send(&c.forward_to, Expression::Var(self.subject.clone())))
            })
            .collect();
        if self.catch_all {
            clauses.push((Pattern::Wildcard, Process::Null));
        }
        ReactionRule::new(
            JoinPattern::new(vec![MessagePattern::new(&self.channel, Pattern::Var(self.subject.clone()))]),
            Process::Match(Box::new(MatchProc::new(Expression::Var(self.subject.clone()), clauses))),
        )
    }
}

/// Join definition. An empty rule list stands for the empty definition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Definition {
    pub rules: Vec<ReactionRule>,
    pub dispatchers: Vec<Dispatcher>,
    /// Message content type of each defined channel, filled in by the typechecker.
    pub channel_types: BTreeMap<String, Type>,
}

impl Definition {
    pub fn new(rules: Vec<ReactionRule>) -> Self {
        Definition { rules, dispatchers: Vec::new(), channel_types: BTreeMap::new() }
    }

    /// Defined channels in order of first occurrence.
    pub fn channels_in_order(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rules {
            r.pattern.channels_in_order(&mut out);
        }
        for d in &self.dispatchers {
            for name in std::iter::once(&d.channel).chain(d.clauses.iter().map(|c| &c.forward_to)) {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
        }
        out
    }

    /// Replaces every rule containing `or` groups by its expansion.
    pub fn expand_or(&self) -> Definition {
        let rules = self
            .rules
            .iter()
            .flat_map(|r| {
                if r.pattern.has_or() {
                    r.pattern
                        .expand()
                        .into_iter()
                        .map(|ms| ReactionRule { pattern: JoinPattern::new(ms), body: r.body.clone(), loc: r.loc })
                        .collect()
                } else {
                    vec![r.clone()]
                }
            })
            .collect();
        Definition { rules, dispatchers: self.dispatchers.clone(), channel_types: self.channel_types.clone() }
    }
}

/// Target of a message send: a source identifier or a runtime channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Channel {
    Name(String),
    Id(ChanId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatchProc {
    pub subject: Expression,
    pub clauses: Vec<(Pattern, Process)>,
    /// The match cannot fail: bindings are extracted without testing.
    pub no_test: bool,
    /// Subject type, filled in by the typechecker.
    pub subject_type: Option<Type>,
    pub loc: Loc,
}

impl MatchProc {
    pub fn new(subject: Expression, clauses: Vec<(Pattern, Process)>) -> Self {
        MatchProc { subject, clauses, no_test: false, subject_type: None, loc: Loc::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Process {
    Null,
    Send { channel: Channel, arg: Expression, loc: Loc },
    Parallel(Box<Process>, Box<Process>),
    Def(Box<Definition>, Box<Process>),
    Match(Box<MatchProc>),
}

impl Process {
    pub fn send(channel: &str, arg: Expression) -> Self {
        Process::Send { channel: Channel::Name(channel.to_string()), arg, loc: Loc::default() }
    }

    pub fn par(left: Process, right: Process) -> Self {
        Process::Parallel(Box::new(left), Box::new(right))
    }

    /// Right-nested parallel composition; `0` when empty.
    pub fn par_all(mut procs: Vec<Process>) -> Self {
        let Some(mut acc) = procs.pop() else { return Process::Null };
        while let Some(p) = procs.pop() {
            acc = Process::par(p, acc);
        }
        acc
    }

    pub fn def(definition: Definition, body: Process) -> Self {
        Process::Def(Box::new(definition), Box::new(body))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LangError {
    #[error("non-linear binding: `{0}` is bound twice")]
    NonLinear(String),
    #[error("type mismatch substituting `{name}`: {reason}")]
    TypeMismatch { name: String, reason: String },
}

fn disjoint_union(acc: &mut BTreeSet<String>, more: BTreeSet<String>) -> Result<(), LangError> {
    for name in more {
        if !acc.insert(name.clone()) {
            return Err(LangError::NonLinear(name));
        }
    }
    Ok(())
}

/// Received variables of an algebraic pattern.
pub fn pattern_received_vars(p: &Pattern) -> Result<BTreeSet<String>, LangError> {
    let mut out = BTreeSet::new();
    match p {
        Pattern::Var(x) => {
            out.insert(x.clone());
        }
        Pattern::Wildcard | Pattern::Int(_) => {}
        Pattern::Ctor(_, args) => {
            for a in args {
                disjoint_union(&mut out, pattern_received_vars(a)?)?;
            }
        }
    }
    Ok(out)
}

/// Received variables of a join pattern. Alternatives of an `or` group must
/// bind the same variables; the group contributes that set once.
pub fn received_vars(j: &JoinPattern) -> Result<BTreeSet<String>, LangError> {
    let mut out = BTreeSet::new();
    for atom in &j.atoms {
        let vars = match atom {
            JoinAtom::Message(m) => pattern_received_vars(&m.arg)?,
            JoinAtom::Or(alts) => {
                let mut first: Option<BTreeSet<String>> = None;
                for alt in alts {
                    let vs = received_vars(alt)?;
                    match &first {
                        None => first = Some(vs),
                        Some(f) if *f != vs => {
                            let odd = f.symmetric_difference(&vs).next().cloned().unwrap_or_default();
                            return Err(LangError::NonLinear(odd));
                        }
                        Some(_) => {}
                    }
                }
                first.unwrap_or_default()
            }
        };
        disjoint_union(&mut out, vars)?;
    }
    Ok(out)
}

/// Channels defined by a join pattern; conjuncts must be disjoint.
pub fn defined_channels(j: &JoinPattern) -> Result<BTreeSet<String>, LangError> {
    let mut out = BTreeSet::new();
    for atom in &j.atoms {
        let chans = match atom {
            JoinAtom::Message(m) => BTreeSet::from([m.channel.clone()]),
            JoinAtom::Or(alts) => {
                let mut u = BTreeSet::new();
                for alt in alts {
                    u.extend(defined_channels(alt)?);
                }
                u
            }
        };
        disjoint_union(&mut out, chans)?;
    }
    Ok(out)
}

/// Channels defined by a join definition (rules and dispatchers).
pub fn definition_channels(d: &Definition) -> Result<BTreeSet<String>, LangError> {
    let mut out = BTreeSet::new();
    for r in &d.rules {
        out.extend(defined_channels(&r.pattern)?);
    }
    for disp in &d.dispatchers {
        out.insert(disp.channel.clone());
        out.extend(disp.clauses.iter().map(|c| c.forward_to.clone()));
    }
    Ok(out)
}

fn dv_lenient(j: &JoinPattern, out: &mut BTreeSet<String>) {
    for atom in &j.atoms {
        match atom {
            JoinAtom::Message(m) => {
                out.insert(m.channel.clone());
            }
            JoinAtom::Or(alts) => alts.iter().for_each(|a| dv_lenient(a, out)),
        }
    }
}

fn rv_lenient_pattern(p: &Pattern, out: &mut BTreeSet<String>) {
    match p {
        Pattern::Var(x) => {
            out.insert(x.clone());
        }
        Pattern::Ctor(_, args) => args.iter().for_each(|a| rv_lenient_pattern(a, out)),
        _ => {}
    }
}

fn rv_lenient(j: &JoinPattern, out: &mut BTreeSet<String>) {
    for atom in &j.atoms {
        match atom {
            JoinAtom::Message(m) => rv_lenient_pattern(&m.arg, out),
            JoinAtom::Or(alts) => alts.iter().for_each(|a| rv_lenient(a, out)),
        }
    }
}

/// Channel names bound by a definition, without linearity checks.
pub fn bound_channels(d: &Definition) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for r in &d.rules {
        dv_lenient(&r.pattern, &mut out);
    }
    for disp in &d.dispatchers {
        out.insert(disp.channel.clone());
        out.extend(disp.clauses.iter().map(|c| c.forward_to.clone()));
    }
    out
}

/// Variables bound by a join pattern, without linearity checks.
pub fn bound_vars(j: &JoinPattern) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    rv_lenient(j, &mut out);
    out
}

/// Variables bound by an algebraic pattern, without linearity checks.
pub fn pattern_bound_vars(p: &Pattern) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    rv_lenient_pattern(p, &mut out);
    out
}

/// Free variables of a term.
pub trait FreeVars {
    fn free_vars_into(&self, out: &mut BTreeSet<String>);

    fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }
}

impl FreeVars for Expression {
    fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Expression::Var(x) => {
                out.insert(x.clone());
            }
            Expression::Ctor(_, args) => args.iter().for_each(|a| a.free_vars_into(out)),
            Expression::Int(_) | Expression::Chan(_) => {}
        }
    }
}

impl FreeVars for Definition {
    fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        for r in &self.rules {
            dv_lenient(&r.pattern, out);
            let bound = bound_vars(&r.pattern);
            out.extend(r.body.free_vars().into_iter().filter(|x| !bound.contains(x)));
        }
        for disp in &self.dispatchers {
            out.insert(disp.channel.clone());
            out.extend(disp.clauses.iter().map(|c| c.forward_to.clone()));
        }
    }
}

impl FreeVars for Process {
    fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Process::Null => {}
            Process::Send { channel, arg, .. } => {
                if let Channel::Name(x) = channel {
                    out.insert(x.clone());
                }
                arg.free_vars_into(out);
            }
            Process::Parallel(l, r) => {
                l.free_vars_into(out);
                r.free_vars_into(out);
            }
            Process::Def(d, body) => {
                let dv = bound_channels(d);
                let mut inner = d.free_vars();
                body.free_vars_into(&mut inner);
                out.extend(inner.into_iter().filter(|x| !dv.contains(x)));
            }
            Process::Match(m) => {
                m.subject.free_vars_into(out);
                for (p, body) in &m.clauses {
                    let bound = pattern_bound_vars(p);
                    out.extend(body.free_vars().into_iter().filter(|x| !bound.contains(x)));
                }
            }
        }
    }
}

fn without(s: &Substitution, names: &BTreeSet<String>) -> Option<Substitution> {
    if names.iter().any(|n| s.contains_key(n)) {
        Some(s.iter().filter(|(k, _)| !names.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect())
    } else {
        None
    }
}

/// Substitution of closed values for free variables.
///
/// Values carry no identifiers, so no binder can capture them: substitution
/// only has to stop at binders that shadow a substituted name.
pub trait Substitute: Sized {
    fn substitute(&self, s: &Substitution) -> Result<Self, LangError>;
}

impl Substitute for Expression {
    fn substitute(&self, s: &Substitution) -> Result<Self, LangError> {
        Ok(match self {
            Expression::Var(x) => match s.get(x) {
                Some(v) => v.to_expr(),
                None => self.clone(),
            },
            Expression::Ctor(c, args) => {
                Expression::Ctor(c.clone(), args.iter().map(|a| a.substitute(s)).collect::<Result<_, _>>()?)
            }
            Expression::Int(_) | Expression::Chan(_) => self.clone(),
        })
    }
}

/// Applies `s` to the rule bodies of `d`, treating the definition's own
/// channel names as free (the caller decides whether they are shadowed).
pub fn substitute_rules(d: &Definition, s: &Substitution) -> Result<Definition, LangError> {
    let rules = d
        .rules
        .iter()
        .map(|r| {
            let bound = bound_vars(&r.pattern);
            let body = match without(s, &bound) {
                Some(inner) => r.body.substitute(&inner)?,
                None => r.body.substitute(s)?,
            };
            Ok(ReactionRule { pattern: r.pattern.clone(), body, loc: r.loc })
        })
        .collect::<Result<_, LangError>>()?;
    Ok(Definition { rules, dispatchers: d.dispatchers.clone(), channel_types: d.channel_types.clone() })
}

impl Substitute for Process {
    fn substitute(&self, s: &Substitution) -> Result<Self, LangError> {
        if s.is_empty() {
            return Ok(self.clone());
        }
        Ok(match self {
            Process::Null => Process::Null,
            Process::Send { channel, arg, loc } => {
                let channel = match channel {
                    Channel::Name(x) => match s.get(x) {
                        Some(Value::Chan(c)) => Channel::Id(*c),
                        Some(other) => {
                            return Err(LangError::TypeMismatch {
                                name: x.clone(),
                                reason: format!("channel position receives non-channel value {other:?}"),
                            })
                        }
                        None => channel.clone(),
                    },
                    Channel::Id(_) => channel.clone(),
                };
                Process::Send { channel, arg: arg.substitute(s)?, loc: *loc }
            }
            Process::Parallel(l, r) => Process::par(l.substitute(s)?, r.substitute(s)?),
            Process::Def(d, body) => {
                let dv = bound_channels(d);
                let inner_owned = without(s, &dv);
                let inner = inner_owned.as_ref().unwrap_or(s);
                Process::def(substitute_rules(d, inner)?, body.substitute(inner)?)
            }
            Process::Match(m) => {
                let clauses = m
                    .clauses
                    .iter()
                    .map(|(p, body)| {
                        let bound = pattern_bound_vars(p);
                        let body = match without(s, &bound) {
                            Some(inner) => body.substitute(&inner)?,
                            None => body.substitute(s)?,
                        };
                        Ok((p.clone(), body))
                    })
                    .collect::<Result<_, LangError>>()?;
                Process::Match(Box::new(MatchProc {
                    subject: m.subject.substitute(s)?,
                    clauses,
                    no_test: m.no_test,
                    subject_type: m.subject_type.clone(),
                    loc: m.loc,
                }))
            }
        })
    }
}

/// `base` when unused, else `base'k` for the least `k ≥ 1` not in `used`.
pub fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    if !used.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|k| format!("{base}'{k}"))
        .find(|candidate| !used.contains(candidate))
        .expect("unbounded suffix search")
}

/// Every identifier occurring anywhere in a process, bound or free.
pub fn all_names(p: &Process, out: &mut BTreeSet<String>) {
    match p {
        Process::Null => {}
        Process::Send { channel, arg, .. } => {
            if let Channel::Name(x) = channel {
                out.insert(x.clone());
            }
            arg.free_vars_into(out);
        }
        Process::Parallel(l, r) => {
            all_names(l, out);
            all_names(r, out);
        }
        Process::Def(d, body) => {
            definition_names(d, out);
            all_names(body, out);
        }
        Process::Match(m) => {
            m.subject.free_vars_into(out);
            for (pat, body) in &m.clauses {
                rv_lenient_pattern(pat, out);
                all_names(body, out);
            }
        }
    }
}

/// Every identifier occurring anywhere in a definition.
pub fn definition_names(d: &Definition, out: &mut BTreeSet<String>) {
    out.extend(bound_channels(d));
    for r in &d.rules {
        rv_lenient(&r.pattern, out);
        all_names(&r.body, out);
    }
    for disp in &d.dispatchers {
        out.insert(disp.subject.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cons(h: Pattern, t: Pattern) -> Pattern {
        Pattern::ctor("Cons", vec![h, t])
    }

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn stack_definition() -> Definition {
        let pop = ReactionRule::new(
            JoinPattern::new(vec![
                MessagePattern::new("pop", Pattern::var("r")),
                MessagePattern::new("State", cons(Pattern::var("x"), Pattern::var("xs"))),
            ]),
            Process::par(
                Process::send("r", Expression::Var("x".into())),
                Process::send("State", Expression::Var("xs".into())),
            ),
        );
        let push = ReactionRule::new(
            JoinPattern::new(vec![
                MessagePattern::new("push", Pattern::var("v")),
                MessagePattern::new("State", Pattern::var("ls")),
            ]),
            Process::send(
                "State",
                Expression::Ctor("Cons".into(), vec![Expression::Var("v".into()), Expression::Var("ls".into())]),
            ),
        );
        Definition::new(vec![pop, push])
    }

    #[test]
    fn received_vars_of_patterns() {
        assert_eq!(pattern_received_vars(&cons(Pattern::var("x"), Pattern::var("xs"))).unwrap(), set(&["x", "xs"]));
        assert!(pattern_received_vars(&Pattern::Wildcard).unwrap().is_empty());
        assert_eq!(
            pattern_received_vars(&cons(Pattern::var("x"), Pattern::var("x"))),
            Err(LangError::NonLinear("x".into()))
        );
    }

    #[test]
    fn received_vars_of_stack_rule() {
        let d = stack_definition();
        assert_eq!(received_vars(&d.rules[0].pattern).unwrap(), set(&["r", "x", "xs"]));
    }

    #[test]
    fn received_vars_rejects_overlap_across_conjuncts() {
        let j = JoinPattern::new(vec![
            MessagePattern::new("a", Pattern::var("x")),
            MessagePattern::new("b", Pattern::var("x")),
        ]);
        assert_eq!(received_vars(&j), Err(LangError::NonLinear("x".into())));
    }

    #[test]
    fn defined_channels_cases() {
        let j = JoinPattern::new(vec![
            MessagePattern::new("x", Pattern::Wildcard),
            MessagePattern::new("y", Pattern::Wildcard),
        ]);
        assert_eq!(defined_channels(&j).unwrap(), set(&["x", "y"]));
        assert_eq!(definition_channels(&stack_definition()).unwrap(), set(&["pop", "push", "State"]));
        assert!(definition_channels(&Definition::default()).unwrap().is_empty());
        let dup = JoinPattern::new(vec![
            MessagePattern::new("x", Pattern::Wildcard),
            MessagePattern::new("x", Pattern::Wildcard),
        ]);
        assert_eq!(defined_channels(&dup), Err(LangError::NonLinear("x".into())));
    }

    #[test]
    fn free_vars_cases() {
        let send = Process::send("x", Expression::Ctor("Cons".into(), vec![Expression::Var("y".into()), Expression::Ctor("Nil".into(), vec![])]));
        assert_eq!(send.free_vars(), set(&["x", "y"]));

        let d = Definition::new(vec![ReactionRule::new(
            JoinPattern::new(vec![MessagePattern::new("x", Pattern::var("v"))]),
            Process::send("y", Expression::Var("v".into())),
        )]);
        let p = Process::def(d, Process::send("x", Expression::Var("z".into())));
        assert_eq!(p.free_vars(), set(&["y", "z"]));

        let m = Process::Match(Box::new(MatchProc::new(
            Expression::Var("w".into()),
            vec![(cons(Pattern::var("h"), Pattern::var("t")), Process::send("h", Expression::Var("t".into())))],
        )));
        assert_eq!(m.free_vars(), set(&["w"]));
    }

    #[test]
    fn substitute_direct_replacement() {
        let p = Process::send("r", Expression::Var("x".into()));
        let s: Substitution = [("x".to_string(), Value::Int(2)), ("r".to_string(), Value::Chan(ChanId(7)))].into();
        assert_eq!(
            p.substitute(&s).unwrap(),
            Process::Send { channel: Channel::Id(ChanId(7)), arg: Expression::Int(2), loc: Loc::default() }
        );
    }

    #[test]
    fn substitute_respects_binders() {
        let d = Definition::new(vec![ReactionRule::new(
            JoinPattern::new(vec![MessagePattern::new("x", Pattern::var("v"))]),
            Process::send("y", Expression::Var("v".into())),
        )]);
        let p = Process::def(d, Process::send("x", Expression::Var("v".into())));
        let s: Substitution = [("v".to_string(), Value::Int(1))].into();
        let out = p.substitute(&s).unwrap();
        let Process::Def(d2, body) = out else { panic!() };
        assert_eq!(d2.rules[0].body, Process::send("y", Expression::Var("v".into())));
        assert_eq!(*body, Process::send("x", Expression::Int(1)));
    }

    #[test]
    fn substitute_pop_body() {
        let p = Process::send("State", Expression::Var("xs".into()));
        let s: Substitution =
            [("x".to_string(), Value::Int(1)), ("xs".to_string(), Value::ctor("Nil", vec![]))].into();
        assert_eq!(p.substitute(&s).unwrap(), Process::send("State", Expression::Ctor("Nil".into(), vec![])));
    }

    #[test]
    fn substitute_rejects_non_channel_in_channel_position() {
        let p = Process::send("r", Expression::unit());
        let s: Substitution = [("r".to_string(), Value::Int(3))].into();
        assert!(matches!(p.substitute(&s), Err(LangError::TypeMismatch { .. })));
    }

    #[test]
    fn fresh_name_suffixes() {
        assert_eq!(fresh_name("z", &set(&[])), "z");
        assert_eq!(fresh_name("z", &set(&["z"])), "z'1");
        assert_eq!(fresh_name("z", &set(&["z", "z'1"])), "z'2");
    }

    #[test]
    fn or_expansion_distributes() {
        let j = JoinPattern {
            atoms: vec![
                JoinAtom::Message(MessagePattern::new("a", Pattern::var("x"))),
                JoinAtom::Or(vec![
                    JoinPattern::new(vec![MessagePattern::new("b", Pattern::var("y"))]),
                    JoinPattern::new(vec![MessagePattern::new("c", Pattern::var("y"))]),
                ]),
            ],
        };
        let e = j.expand();
        assert_eq!(e.len(), 2);
        assert_eq!(e[1][1].channel, "c");
        assert_eq!(received_vars(&j).unwrap(), set(&["x", "y"]));
        assert_eq!(defined_channels(&j).unwrap(), set(&["a", "b", "c"]));
    }

    #[test]
    fn tuple_ctor_names() {
        assert_eq!(tuple_ctor(0), "()");
        assert_eq!(tuple_ctor(2), "(,)");
        assert_eq!(tuple_arity("(,,)"), Some(3));
        assert_eq!(tuple_arity("()"), Some(0));
        assert_eq!(tuple_arity("Cons"), None);
    }
}
