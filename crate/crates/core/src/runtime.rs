//! Chemical abstract machine for direct (source) and compiled programs:
//! seeded stepping, traces and bounded exhaustive exploration.
//!
//! Heating is eager: `0`, `&` and `def` are dissolved as soon as they appear
//! and sends are delivered straight into their queue (or the observer's
//! output for free channels). The runnables are the pending `match`es.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compiler::{all_rules, compile_program, lower_or, CompileError, CompileOptions, CompiledDefinition, SlotSet};
use crate::frontend::{Program, TypedProgram};
use crate::lang::{
    ChanId, Channel, Definition, Dispatcher, JoinAtom, LangError, MatchProc, Pattern, Process, Substitute,
    Substitution, Value,
};
use crate::pattern::{bind_unchecked, first_match, match_bindings, matches};
use crate::print::Printer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Source semantics: join patterns with algebraic formals.
    Direct,
    /// Compiled semantics: matching lists plus dispatchers.
    Compiled,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(Mode::Direct),
            "compiled" => Ok(Mode::Compiled),
            other => Err(format!("unknown mode `{other}` (expected direct or compiled)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("redex is no longer enabled")]
    StaleRedex,
    #[error("open term at runtime: {0}")]
    OpenTerm(String),
    #[error("state budget of {0} states exceeded")]
    StateBudgetExceeded(usize),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Lang(#[from] LangError),
}

#[derive(Debug)]
struct DirectRule {
    conjuncts: Vec<(usize, Pattern)>,
    body: Process,
}

#[derive(Debug)]
enum Reactions {
    Direct(Vec<DirectRule>),
    Compiled(CompiledDefinition),
}

/// Immutable part of a live definition.
#[derive(Debug)]
struct Template {
    channels: Vec<String>,
    reactions: Reactions,
    /// Compiled mode: dispatcher, its channel slot and the slot of each clause target.
    dispatchers: Vec<(Dispatcher, usize, Vec<usize>)>,
    key: u32,
}

#[derive(Debug, Clone)]
struct LiveDef {
    template: Rc<Template>,
    chans: Vec<ChanId>,
    queues: Vec<VecDeque<Value>>,
    status: SlotSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Owner {
    Free(usize),
    Defined { def: usize, local: usize },
}

/// An enabled reduction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Redex {
    /// A join pattern (direct rule or compiled matching entry) fires,
    /// consuming the message at `(local channel, queue position)` per conjunct.
    React { def: usize, rule: usize, consumed: Vec<(usize, usize)> },
    /// A dispatcher forwards the message at `pos` through `clause`.
    Dispatch { def: usize, dispatcher: usize, pos: usize, clause: usize },
    /// A dispatcher's catch-all consumes a message that matches no clause.
    Drop { def: usize, dispatcher: usize, pos: usize },
    /// A pending `match` reduces by its first matching clause.
    MatchStep { runnable: usize, clause: usize },
}

type Interner = Rc<RefCell<HashMap<String, u32>>>;

/// Machine state: live definitions with their queues, pending matches and
/// the messages observed on free channels.
#[derive(Debug, Clone)]
pub struct Machine {
    mode: Mode,
    owners: Vec<Owner>,
    free_names: Vec<String>,
    defs: Vec<LiveDef>,
    runnables: Vec<MatchProc>,
    free_output: Vec<Vec<Value>>,
    step_count: usize,
    interner: Interner,
}

/// Free-channel outputs in canonical form: values printed and sorted.
pub type Outputs = BTreeMap<String, Vec<String>>;

impl Machine {
    /// Loads a checked program. Compiled mode runs the compiler first.
    pub fn load(t: &TypedProgram, mode: Mode, opts: CompileOptions) -> Result<Machine, RuntimeError> {
        let program = match mode {
            Mode::Direct => t.program.clone(),
            Mode::Compiled => compile_program(t, opts)?.program,
        };
        let free: Vec<String> = t.free_channels.keys().cloned().collect();
        Machine::load_program(&program, &free, mode)
    }

    /// Loads a program as is (compiled mode expects compiler output).
    pub fn load_program(program: &Program, free: &[String], mode: Mode) -> Result<Machine, RuntimeError> {
        let mut m = Machine {
            mode,
            owners: Vec::new(),
            free_names: free.to_vec(),
            defs: Vec::new(),
            runnables: Vec::new(),
            free_output: vec![Vec::new(); free.len()],
            step_count: 0,
            interner: Rc::default(),
        };
        let mut s = Substitution::new();
        for (i, name) in free.iter().enumerate() {
            m.owners.push(Owner::Free(i));
            s.insert(name.clone(), Value::Chan(ChanId(i as u32)));
        }
        let main = program.main.substitute(&s)?;
        m.heat(&main)?;
        Ok(m)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    fn mint(&mut self, owner: Owner) -> ChanId {
        self.owners.push(owner);
        ChanId(self.owners.len() as u32 - 1)
    }

    fn deliver(&mut self, c: ChanId, v: Value) {
        match self.owners[c.0 as usize] {
            Owner::Free(i) => self.free_output[i].push(v),
            Owner::Defined { def, local } => {
                let d = &mut self.defs[def];
                d.queues[local].push_back(v);
                d.status.insert(local);
            }
        }
    }

    fn heat(&mut self, p: &Process) -> Result<(), RuntimeError> {
        match p {
            Process::Null => Ok(()),
            Process::Send { channel: Channel::Id(c), arg, .. } => {
                let v = arg.to_value().ok_or_else(|| RuntimeError::OpenTerm(p.to_string()))?;
                self.deliver(*c, v);
                Ok(())
            }
            Process::Send { channel: Channel::Name(_), .. } => Err(RuntimeError::OpenTerm(p.to_string())),
            Process::Parallel(l, r) => {
                self.heat(l)?;
                self.heat(r)
            }
            Process::Def(d, body) => {
                let s = self.install(d)?;
                self.heat(&body.substitute(&s)?)
            }
            Process::Match(m) => {
                if m.subject.to_value().is_none() {
                    return Err(RuntimeError::OpenTerm(p.to_string()));
                }
                self.runnables.push((**m).clone());
                Ok(())
            }
        }
    }

    /// Str-Def: mints fresh identities for the defined channels and installs
    /// a live definition. Returns the substitution for the `in` body.
    fn install(&mut self, d: &Definition) -> Result<Substitution, RuntimeError> {
        let channels = d.channels_in_order();
        let def = self.defs.len();
        let mut s = Substitution::new();
        let mut chans = Vec::new();
        for (local, name) in channels.iter().enumerate() {
            let id = self.mint(Owner::Defined { def, local });
            chans.push(id);
            s.insert(name.clone(), Value::Chan(id));
        }
        let inst = crate::lang::substitute_rules(d, &s)?;
        let local = |c: &str| channels.iter().position(|x| x == c).expect("defined channel");
        let (reactions, dispatchers) = match self.mode {
            Mode::Direct => {
                let rules = all_rules(&inst.expand_or())
                    .into_iter()
                    .map(|r| {
                        let conjuncts = r
                            .pattern
                            .atoms
                            .iter()
                            .map(|a| match a {
                                JoinAtom::Message(m) => (local(&m.channel), m.arg.clone()),
                                JoinAtom::Or(_) => unreachable!("or groups are expanded"),
                            })
                            .collect();
                        DirectRule { conjuncts, body: r.body }
                    })
                    .collect();
                (Reactions::Direct(rules), Vec::new())
            }
            Mode::Compiled => {
                let cd = lower_or(&inst)?;
                debug_assert_eq!(cd.slots, channels);
                let disps = cd
                    .dispatchers
                    .iter()
                    .map(|disp| {
                        let targets = disp.clauses.iter().map(|c| local(&c.forward_to)).collect();
                        (disp.clone(), local(&disp.channel), targets)
                    })
                    .collect();
                (Reactions::Compiled(cd), disps)
            }
        };
        let mut text = String::new();
        {
            let names = self.chan_namer();
            let mut namer = |id: ChanId, out: &mut String| match chans.iter().position(|c| *c == id) {
                Some(l) => {
                    let _ = write!(out, "{}#{def}", channels[l]);
                }
                None => names(id, out),
            };
            let mut pr = Printer::new(&mut namer);
            pr.definition(&inst);
            text.push_str(&pr.finish());
        }
        let key = {
            let mut table = self.interner.borrow_mut();
            let next = table.len() as u32;
            *table.entry(text).or_insert(next)
        };
        let n = channels.len();
        self.defs.push(LiveDef {
            template: Rc::new(Template { channels, reactions, dispatchers, key }),
            chans,
            queues: vec![VecDeque::new(); n],
            status: SlotSet::new(n),
        });
        Ok(s)
    }

    /// Names channels as `name#k` (definition `k`) or by their free name.
    fn chan_namer(&self) -> impl Fn(ChanId, &mut String) + '_ {
        move |id: ChanId, out: &mut String| match self.owners.get(id.0 as usize) {
            Some(Owner::Free(i)) => out.push_str(&self.free_names[*i]),
            Some(Owner::Defined { def, local }) => {
                let name = self
                    .defs
                    .get(*def)
                    .map(|d| d.template.channels[*local].as_str())
                    .unwrap_or_else(|| "?");
                let _ = write!(out, "{name}#{def}");
            }
            None => {
                let _ = write!(out, "{id}");
            }
        }
    }

    fn pending_name(&self, def: usize, local: usize) -> String {
        self.defs.get(def).map(|d| d.template.channels.get(local).cloned().unwrap_or_default()).unwrap_or_default()
    }

    pub fn print_value(&self, v: &Value) -> String {
        let names = self.chan_namer();
        let mut namer = |id: ChanId, out: &mut String| names(id, out);
        let mut pr = Printer::new(&mut namer);
        pr.value(v);
        pr.finish()
    }

    fn print_match(&self, m: &MatchProc) -> String {
        let names = self.chan_namer();
        let mut namer = |id: ChanId, out: &mut String| names(id, out);
        let mut pr = Printer::new(&mut namer);
        pr.process(&Process::Match(Box::new(m.clone())));
        pr.finish()
    }

    /// Candidate queue positions for a conjunct: the oldest match only, or
    /// one position per distinct matching value.
    fn candidates(&self, def: usize, local: usize, pat: &Pattern, all: bool) -> Vec<usize> {
        let q = &self.defs[def].queues[local];
        let mut out = Vec::new();
        let mut seen: Vec<&Value> = Vec::new();
        for (i, v) in q.iter().enumerate() {
            if matches(pat, v) && !seen.contains(&v) {
                out.push(i);
                if !all {
                    break;
                }
                seen.push(v);
            }
        }
        out
    }

    fn combos(&self, def: usize, conjuncts: &[(usize, Pattern)], all: bool) -> Vec<Vec<(usize, usize)>> {
        let mut acc: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        for (local, pat) in conjuncts {
            let cands = self.candidates(def, *local, pat, all);
            if cands.is_empty() {
                return Vec::new();
            }
            acc = acc
                .into_iter()
                .flat_map(|prefix| {
                    cands.iter().map(move |&pos| {
                        let mut next = prefix.clone();
                        next.push((*local, pos));
                        next
                    })
                })
                .collect();
        }
        acc
    }

    fn enabled_with(&self, all: bool) -> Vec<Redex> {
        let mut out = Vec::new();
        for (di, d) in self.defs.iter().enumerate() {
            match &d.template.reactions {
                Reactions::Direct(rules) => {
                    for (ri, r) in rules.iter().enumerate() {
                        for consumed in self.combos(di, &r.conjuncts, all) {
                            out.push(Redex::React { def: di, rule: ri, consumed });
                        }
                    }
                }
                Reactions::Compiled(cd) => {
                    for (ei, e) in cd.matching_list.iter().enumerate() {
                        if !e.bitset.is_subset(&d.status) {
                            continue;
                        }
                        let conjuncts: Vec<(usize, Pattern)> = e.bitset.iter().map(|s| (s, Pattern::Wildcard)).collect();
                        for consumed in self.combos(di, &conjuncts, all) {
                            out.push(Redex::React { def: di, rule: ei, consumed });
                        }
                    }
                    for (k, (disp, slot, _)) in d.template.dispatchers.iter().enumerate() {
                        for pos in self.candidates(di, *slot, &Pattern::Wildcard, all) {
                            let v = &d.queues[*slot][pos];
                            match first_match(disp.clauses.iter().map(|c| &c.pattern), v) {
                                Some(o) => out.push(Redex::Dispatch { def: di, dispatcher: k, pos, clause: o.clause }),
                                None if disp.catch_all => out.push(Redex::Drop { def: di, dispatcher: k, pos }),
                                None => {}
                            }
                        }
                    }
                }
            }
        }
        for (i, m) in self.runnables.iter().enumerate() {
            let v = m.subject.to_value().expect("closed subject");
            if let Some(o) = first_match(m.clauses.iter().map(|(p, _)| p), &v) {
                out.push(Redex::MatchStep { runnable: i, clause: o.clause });
            }
        }
        out
    }

    /// Enabled redexes under the scheduler policy: oldest matching message
    /// per conjunct.
    pub fn enabled(&self) -> Vec<Redex> {
        self.enabled_with(false)
    }

    /// Every enabled redex, one per distinct choice of message values.
    pub fn enabled_all(&self) -> Vec<Redex> {
        self.enabled_with(true)
    }

    /// Whether the redex is an internal step of compiled code (forwarding,
    /// dropping, or a residual binding-only match).
    pub fn is_silent(&self, r: &Redex) -> bool {
        match r {
            Redex::Dispatch { .. } | Redex::Drop { .. } => true,
            Redex::MatchStep { runnable, .. } => self.runnables[*runnable].no_test,
            Redex::React { .. } => false,
        }
    }

    fn take(&mut self, def: usize, local: usize, pos: usize) -> Result<Value, RuntimeError> {
        let d = &mut self.defs[def];
        let v = d.queues[local].remove(pos).ok_or(RuntimeError::StaleRedex)?;
        if d.queues[local].is_empty() {
            d.status.remove(local);
        }
        Ok(v)
    }

    /// Performs one reduction.
    pub fn step(&mut self, r: &Redex) -> Result<(), RuntimeError> {
        match r {
            Redex::React { def, rule, consumed } => {
                let template = self.defs.get(*def).ok_or(RuntimeError::StaleRedex)?.template.clone();
                let mut values = Vec::with_capacity(consumed.len());
                for &(local, pos) in consumed {
                    values.push(self.defs[*def].queues.get(local).and_then(|q| q.get(pos)).cloned().ok_or(RuntimeError::StaleRedex)?);
                }
                let (sigma, body) = match &template.reactions {
                    Reactions::Direct(rules) => {
                        let rule = rules.get(*rule).ok_or(RuntimeError::StaleRedex)?;
                        let mut sigma = Substitution::new();
                        for ((_, pat), v) in rule.conjuncts.iter().zip(&values) {
                            sigma.extend(match_bindings(pat, v).ok_or(RuntimeError::StaleRedex)?);
                        }
                        (sigma, &rule.body)
                    }
                    Reactions::Compiled(cd) => {
                        let e = cd.matching_list.get(*rule).ok_or(RuntimeError::StaleRedex)?;
                        let g = &cd.bodies[e.body];
                        let mut sigma = Substitution::new();
                        for (formal, slot) in g.formals.iter().zip(&e.dictionary) {
                            let k = consumed.iter().position(|(l, _)| l == slot).ok_or(RuntimeError::StaleRedex)?;
                            sigma.insert(formal.clone(), values[k].clone());
                        }
                        (sigma, &g.process)
                    }
                };
                let mut order: Vec<&(usize, usize)> = consumed.iter().collect();
                order.sort_by(|a, b| b.cmp(a));
                for &&(local, pos) in &order {
                    self.take(*def, local, pos)?;
                }
                let body = body.substitute(&sigma)?;
                self.heat(&body)?;
            }
            Redex::Dispatch { def, dispatcher, pos, clause } => {
                let template = self.defs.get(*def).ok_or(RuntimeError::StaleRedex)?.template.clone();
                let (_, slot, targets) = template.dispatchers.get(*dispatcher).ok_or(RuntimeError::StaleRedex)?;
                let v = self.take(*def, *slot, *pos)?;
                let target = self.defs[*def].chans[targets[*clause]];
                self.deliver(target, v);
            }
            Redex::Drop { def, dispatcher, pos } => {
                let template = self.defs.get(*def).ok_or(RuntimeError::StaleRedex)?.template.clone();
                let (_, slot, _) = template.dispatchers.get(*dispatcher).ok_or(RuntimeError::StaleRedex)?;
                self.take(*def, *slot, *pos)?;
            }
            Redex::MatchStep { runnable, clause } => {
                if *runnable >= self.runnables.len() {
                    return Err(RuntimeError::StaleRedex);
                }
                let m = self.runnables.remove(*runnable);
                let v = m.subject.to_value().expect("closed subject");
                let (pat, body) = m.clauses.get(*clause).ok_or(RuntimeError::StaleRedex)?;
                let eta = if m.no_test {
                    debug_assert!(matches(pat, &v), "binding-only match failed on {v}");
                    let mut s = Substitution::new();
                    bind_unchecked(pat, &v, &mut s);
                    s
                } else {
                    match_bindings(pat, &v).ok_or(RuntimeError::StaleRedex)?
                };
                let body = body.substitute(&eta)?;
                self.heat(&body)?;
            }
        }
        self.step_count += 1;
        Ok(())
    }

    /// One-line description of a redex, in trace format.
    pub fn describe(&self, r: &Redex) -> String {
        match r {
            Redex::React { def, rule, consumed } => {
                let d = &self.defs[*def];
                let rule_name = match &d.template.reactions {
                    Reactions::Direct(_) => rule.to_string(),
                    Reactions::Compiled(cd) => format!("{}/{}", cd.matching_list[*rule].body, rule),
                };
                let list: Vec<String> = consumed
                    .iter()
                    .map(|(l, pos)| format!("{}:{}", d.template.channels[*l], pos))
                    .collect();
                format!("REACT rule={rule_name}  consumed={}", list.join(","))
            }
            Redex::Dispatch { def, dispatcher, pos, clause } => {
                let (disp, _, _) = &self.defs[*def].template.dispatchers[*dispatcher];
                format!(
                    "REACT rule={}  consumed={}:{}",
                    disp.clauses[*clause].forward_to, disp.channel, pos
                )
            }
            Redex::Drop { def, dispatcher, .. } => {
                let (disp, _, _) = &self.defs[*def].template.dispatchers[*dispatcher];
                format!("DROP {}", disp.channel)
            }
            Redex::MatchStep { clause, .. } => format!("MATCH clause={clause}"),
        }
    }

    /// Strong barbs: free channels that have received a message.
    pub fn barbs(&self) -> BTreeSet<String> {
        self.free_names
            .iter()
            .zip(&self.free_output)
            .filter(|(_, out)| !out.is_empty())
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Messages received by each free channel, in arrival order.
    pub fn free_output(&self) -> BTreeMap<String, Vec<Value>> {
        self.free_names.iter().cloned().zip(self.free_output.iter().cloned()).collect()
    }

    pub fn outputs(&self) -> Outputs {
        self.free_names
            .iter()
            .zip(&self.free_output)
            .filter(|(_, vs)| !vs.is_empty())
            .map(|(n, vs)| {
                let mut printed: Vec<String> = vs.iter().map(|v| self.print_value(v)).collect();
                printed.sort();
                (n.clone(), printed)
            })
            .collect()
    }

    /// Messages pending on defined channels, by channel name.
    pub fn pending(&self) -> Vec<(String, Vec<Value>)> {
        let mut out = Vec::new();
        for (di, d) in self.defs.iter().enumerate() {
            for (l, q) in d.queues.iter().enumerate() {
                if !q.is_empty() {
                    out.push((self.pending_name(di, l), q.iter().cloned().collect()));
                }
            }
        }
        out
    }

    /// Canonical state key: channels named by (definition, name), queues,
    /// runnables and outputs as sorted multisets.
    pub fn state_key(&self) -> String {
        let mut key = String::new();
        for d in &self.defs {
            let _ = write!(key, "D{}[", d.template.key);
            for q in &d.queues {
                let mut vs: Vec<String> = q.iter().map(|v| self.print_value(v)).collect();
                vs.sort();
                key.push_str(&vs.join(","));
                key.push('|');
            }
            key.push(']');
        }
        let mut rs: Vec<String> = self.runnables.iter().map(|m| self.print_match(m)).collect();
        rs.sort();
        for r in rs {
            key.push_str("R[");
            key.push_str(&r);
            key.push(']');
        }
        for (n, vs) in self.outputs() {
            let _ = write!(key, "O{n}[{}]", vs.join(","));
        }
        key
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub index: usize,
    pub redex: String,
    pub barbs: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub barbs: BTreeSet<String>,
    pub outputs: BTreeMap<String, Vec<String>>,
}

impl Trace {
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let gap = if s.redex.starts_with("REACT") { "  " } else { " " };
            let _ = writeln!(out, "#{}{gap}{}", s.index, s.redex);
        }
        let barbs: Vec<&str> = self.barbs.iter().map(String::as_str).collect();
        let _ = writeln!(out, "BARBS {{{}}}", barbs.join(", "));
        for (ch, vs) in &self.outputs {
            let _ = writeln!(out, "OUT {ch}: {}", vs.join(" "));
        }
        out
    }
}

/// Runs with a seeded uniform scheduler until no redex is enabled or
/// `max_steps` reductions have happened.
pub fn run(m: &mut Machine, seed: u64, max_steps: usize) -> Result<Trace, RuntimeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = Vec::new();
    while steps.len() < max_steps {
        let enabled = m.enabled();
        if enabled.is_empty() {
            break;
        }
        let r = &enabled[rng.random_range(0..enabled.len())];
        let redex = m.describe(r);
        m.step(r)?;
        steps.push(TraceStep { index: steps.len() + 1, redex, barbs: m.barbs() });
    }
    let outputs = m
        .free_output()
        .into_iter()
        .filter(|(_, vs)| !vs.is_empty())
        .map(|(n, vs)| (n, vs.iter().map(|v| m.print_value(v)).collect()))
        .collect();
    Ok(Trace { steps, barbs: m.barbs(), outputs })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exploration {
    /// Free channels on which some reachable state has a message.
    pub weak_barbs: BTreeSet<String>,
    /// Outputs of the reachable states with no enabled redex.
    pub terminal_outputs: BTreeSet<Outputs>,
    pub states: usize,
    /// Some state had counted redexes beyond the depth bound.
    pub truncated: bool,
}

/// Breadth-first exploration of every reachable state within `depth`
/// counted reductions. Silent steps of compiled code cost nothing.
pub fn explore(start: &Machine, depth: usize, budget: usize) -> Result<Exploration, RuntimeError> {
    let mut best: HashMap<String, usize> = HashMap::new();
    let mut queue: VecDeque<(Machine, usize)> = VecDeque::new();
    let mut weak_barbs = BTreeSet::new();
    let mut terminal_outputs = BTreeSet::new();
    let mut truncated = false;
    best.insert(start.state_key(), 0);
    queue.push_back((start.clone(), 0));
    while let Some((m, d)) = queue.pop_front() {
        let key = m.state_key();
        if best.get(&key).is_some_and(|&b| b < d) {
            continue;
        }
        weak_barbs.extend(m.barbs());
        let enabled = m.enabled_all();
        if enabled.is_empty() {
            terminal_outputs.insert(m.outputs());
            continue;
        }
        for r in &enabled {
            let cost = usize::from(!m.is_silent(r));
            if d + cost > depth {
                truncated = true;
                continue;
            }
            let mut next = m.clone();
            next.step(r)?;
            let nk = next.state_key();
            let nd = d + cost;
            if best.get(&nk).is_some_and(|&b| b <= nd) {
                continue;
            }
            best.insert(nk, nd);
            if best.len() > budget {
                return Err(RuntimeError::StateBudgetExceeded(budget));
            }
            if cost == 0 {
                queue.push_front((next, nd));
            } else {
                queue.push_back((next, nd));
            }
        }
    }
    Ok(Exploration { weak_barbs, terminal_outputs, states: best.len(), truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, typecheck};

    fn load(src: &str, mode: Mode) -> Machine {
        Machine::load(&typecheck(&parse(src).unwrap()).unwrap(), mode, CompileOptions::default()).unwrap()
    }

    const RACE: &str = "def x() & y() |> a() or x() & z() |> b() in x() & y() & z()";

    #[test]
    fn load_delivers_eagerly() {
        let m = load("def x() |> 0 in x()", Mode::Direct);
        assert_eq!(m.pending().len(), 1);
        assert_eq!(m.enabled().len(), 1);
        let empty = load("0", Mode::Direct);
        assert!(empty.enabled().is_empty());
        assert!(empty.barbs().is_empty());
    }

    #[test]
    fn pop_on_empty_stack_waits() {
        let m = load(
            "type list = Nil | Cons(int, list)
             def pop(r) & State(Cons(x, xs)) |> r(x) & State(xs)
              or push(v) & State(ls) |> State(Cons(v, ls))
             in State(Nil) & pop(out)",
            Mode::Direct,
        );
        assert!(m.enabled().is_empty());
    }

    #[test]
    fn one_react() {
        let mut m = load(
            "type list = Nil | Cons(int, list)
             def push(v) & State(ls) |> State(Cons(v, ls)) in State(Nil) & push(1)",
            Mode::Direct,
        );
        let r = m.enabled().remove(0);
        m.step(&r).unwrap();
        assert_eq!(m.pending(), vec![("State".to_string(), vec![Value::ctor("Cons", vec![Value::Int(1), Value::ctor("Nil", vec![])])])]);
        assert_eq!(m.step(&r), Err(RuntimeError::StaleRedex));
    }

    #[test]
    fn matching_list_enabledness() {
        let m = load("def a(x) & (b(y) or c(y)) |> o(x) in a(1) & b(2)", Mode::Compiled);
        let reacts: Vec<_> = m.enabled().into_iter().filter(|r| matches!(r, Redex::React { .. })).collect();
        assert_eq!(reacts.len(), 1);
    }

    #[test]
    fn dispatcher_drops_unmatched() {
        let mut m = load("type list = Nil | Cons(int, list) def x(Cons(0, t)) |> o(t) in x(Nil)", Mode::Compiled);
        let en = m.enabled();
        assert!(matches!(en.as_slice(), [Redex::Drop { .. }]));
        m.step(&en[0]).unwrap();
        assert!(m.enabled().is_empty());
        assert!(m.pending().is_empty());
        assert!(m.barbs().is_empty());
    }

    #[test]
    fn first_match_step() {
        let m = load(
            "type list = Nil | Cons(int, list) match Cons(1, Nil) with | Nil -> o(0) | Cons(h, t) -> o(h)",
            Mode::Direct,
        );
        assert_eq!(m.enabled(), vec![Redex::MatchStep { runnable: 0, clause: 1 }]);
    }

    #[test]
    fn race_outcomes() {
        let m = load(RACE, Mode::Direct);
        let e = explore(&m, 10, 1000).unwrap();
        assert_eq!(e.weak_barbs, ["a", "b"].iter().map(|s| s.to_string()).collect());
        assert_eq!(e.terminal_outputs.len(), 2);
        let mut seen = BTreeSet::new();
        for seed in 0..100 {
            let mut m = load(RACE, Mode::Direct);
            let t = run(&mut m, seed, 100).unwrap();
            assert_eq!(t.barbs.len(), 1);
            seen.extend(t.barbs);
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn empty_run() {
        let mut m = load("0", Mode::Direct);
        let t = run(&mut m, 0, 10).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(t.dump(), "BARBS {}\n");
        let e = explore(&m, 5, 10).unwrap();
        assert_eq!(e.states, 1);
        assert!(e.weak_barbs.is_empty());
    }

    #[test]
    fn deterministic_traces() {
        let src = "type list = Nil | Cons(int, list)
             def pop(r) & State(Cons(x, xs)) |> r(x) & State(xs)
              or push(v) & State(ls) |> State(Cons(v, ls))
             in State(Nil) & push(1) & push(2) & pop(out) & pop(out)";
        for mode in [Mode::Direct, Mode::Compiled] {
            let a = run(&mut load(src, mode), 7, 1000).unwrap();
            let b = run(&mut load(src, mode), 7, 1000).unwrap();
            assert_eq!(a.dump(), b.dump());
        }
    }
}
