//! Surface-syntax printing of types, patterns, values and processes.
//!
//! The output re-parses to the same tree (forwarding-channel names `x@j`
//! need the runtime loader's private-name mode). Runtime channel identities
//! are rendered through a pluggable callback so the same printer serves
//! traces and canonical state keys.

use std::fmt::Write;

use crate::frontend::Program;
use crate::lang::{
    tuple_arity, Channel, ChanId, Definition, Dispatcher, Expression, JoinAtom, JoinPattern, MatchProc,
    MessagePattern, Pattern, Process, ReactionRule, Value,
};
use crate::types::TypeDecl;

/// Renders channel identities.
pub trait ChanNames {
    fn write_chan(&mut self, id: ChanId, out: &mut String);
}

/// `chan#k`.
pub struct RawChans;

impl ChanNames for RawChans {
    fn write_chan(&mut self, id: ChanId, out: &mut String) {
        let _ = write!(out, "{id}");
    }
}

impl<F: FnMut(ChanId, &mut String)> ChanNames for F {
    fn write_chan(&mut self, id: ChanId, out: &mut String) {
        self(id, out)
    }
}

pub struct Printer<'c> {
    out: String,
    chans: &'c mut dyn ChanNames,
    indent: usize,
}

impl<'c> Printer<'c> {
    pub fn new(chans: &'c mut dyn ChanNames) -> Self {
        Printer { out: String::new(), chans, indent: 0 }
    }

    pub fn finish(self) -> String {
        self.out
    }

    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
    }

    fn list<T>(&mut self, items: &[T], mut each: impl FnMut(&mut Self, &T)) {
        for (i, item) in items.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            each(self, item);
        }
    }

    fn ctor_app<T>(&mut self, ctor: &str, args: &[T], each: impl FnMut(&mut Self, &T)) {
        if tuple_arity(ctor).is_some() {
            self.out.push('(');
            self.list(args, each);
            self.out.push(')');
        } else {
            self.out.push_str(ctor);
            if !args.is_empty() {
                self.out.push('(');
                self.list(args, each);
                self.out.push(')');
            }
        }
    }

    pub fn pattern(&mut self, p: &Pattern) {
        match p {
            Pattern::Var(x) => self.out.push_str(x),
            Pattern::Wildcard => self.out.push('_'),
            Pattern::Int(n) => {
                let _ = write!(self.out, "{n}");
            }
            Pattern::Ctor(c, args) => self.ctor_app(c, args, |pr, a| pr.pattern(a)),
        }
    }

    pub fn value(&mut self, v: &Value) {
        match v {
            Value::Int(n) => {
                let _ = write!(self.out, "{n}");
            }
            Value::Chan(id) => self.chans.write_chan(*id, &mut self.out),
            Value::Ctor(c, args) => self.ctor_app(c, args, |pr, a| pr.value(a)),
        }
    }

    pub fn expression(&mut self, e: &Expression) {
        match e {
            Expression::Var(x) => self.out.push_str(x),
            Expression::Int(n) => {
                let _ = write!(self.out, "{n}");
            }
            Expression::Chan(id) => self.chans.write_chan(*id, &mut self.out),
            Expression::Ctor(c, args) => self.ctor_app(c, args, |pr, a| pr.expression(a)),
        }
    }

    fn channel(&mut self, c: &Channel) {
        match c {
            Channel::Name(x) => self.out.push_str(x),
            Channel::Id(id) => self.chans.write_chan(*id, &mut self.out),
        }
    }

    /// Message argument with the tuple sugar `x(a, b)` / `x()`.
    fn message_arg_expr(&mut self, e: &Expression) {
        match e {
            Expression::Ctor(c, args) if tuple_arity(c).is_some() => {
                self.out.push('(');
                self.list(args, |pr, a| pr.expression(a));
                self.out.push(')');
            }
            _ => {
                self.out.push('(');
                self.expression(e);
                self.out.push(')');
            }
        }
    }

    fn message_pattern(&mut self, m: &MessagePattern) {
        self.out.push_str(&m.channel);
        match (&m.arg, &m.annotation) {
            (Pattern::Ctor(c, args), None) if tuple_arity(c).is_some() => {
                self.out.push('(');
                self.list(args, |pr, a| pr.pattern(a));
                self.out.push(')');
            }
            (p, ann) => {
                self.out.push('(');
                self.pattern(p);
                if let Some(t) = ann {
                    let _ = write!(self.out, " : {t}");
                }
                self.out.push(')');
            }
        }
    }

    pub fn join_pattern(&mut self, j: &JoinPattern) {
        for (i, atom) in j.atoms.iter().enumerate() {
            if i > 0 {
                self.out.push_str(" & ");
            }
            match atom {
                JoinAtom::Message(m) => self.message_pattern(m),
                JoinAtom::Or(alts) => {
                    self.out.push('(');
                    for (k, alt) in alts.iter().enumerate() {
                        if k > 0 {
                            self.out.push_str(" or ");
                        }
                        self.join_pattern(alt);
                    }
                    self.out.push(')');
                }
            }
        }
    }

    fn guarded(&mut self, p: &Process) {
        match p {
            Process::Def(..) | Process::Match(..) => {
                self.out.push('(');
                self.indent += 1;
                self.process(p);
                self.indent -= 1;
                self.out.push(')');
            }
            _ => self.process(p),
        }
    }

    pub fn rule(&mut self, r: &ReactionRule) {
        self.join_pattern(&r.pattern);
        self.out.push_str(" |> ");
        self.guarded(&r.body);
    }

    pub fn dispatcher(&mut self, d: &Dispatcher) {
        let _ = write!(self.out, "{}({}) |> (match {} with", d.channel, d.subject, d.subject);
        self.indent += 1;
        for c in &d.clauses {
            self.newline();
            self.out.push_str("| ");
            self.pattern(&c.pattern);
            let _ = write!(self.out, " -> {}({})", c.forward_to, d.subject);
        }
        if d.catch_all {
            self.newline();
            self.out.push_str("| _ -> 0");
        }
        self.indent -= 1;
        self.out.push(')');
    }

    pub fn definition(&mut self, d: &Definition) {
        let mut first = true;
        for r in &d.rules {
            if !first {
                self.newline();
                self.out.push_str(" or ");
            }
            first = false;
            self.rule(r);
        }
        for disp in &d.dispatchers {
            if !first {
                self.newline();
                self.out.push_str(" or ");
            }
            first = false;
            self.dispatcher(disp);
        }
    }

    fn match_proc(&mut self, m: &MatchProc) {
        self.out.push_str("match ");
        self.expression(&m.subject);
        self.out.push_str(" with");
        self.indent += 1;
        for (p, body) in &m.clauses {
            self.newline();
            self.out.push_str("| ");
            self.pattern(p);
            self.out.push_str(" -> ");
            self.guarded(body);
        }
        self.indent -= 1;
    }

    pub fn process(&mut self, p: &Process) {
        match p {
            Process::Null => self.out.push('0'),
            Process::Send { channel, arg, .. } => {
                self.channel(channel);
                self.message_arg_expr(arg);
            }
            Process::Parallel(l, r) => {
                self.guarded(l);
                self.out.push_str(" & ");
                self.guarded(r);
            }
            Process::Def(d, body) => {
                self.out.push_str("def ");
                self.indent += 1;
                self.definition(d);
                self.indent -= 1;
                self.newline();
                self.out.push_str("in ");
                self.process(body);
            }
            Process::Match(m) => self.match_proc(m),
        }
    }

    pub fn type_decl(&mut self, d: &TypeDecl) {
        let _ = write!(self.out, "type {} =", d.name);
        for (i, c) in d.ctors.iter().enumerate() {
            self.out.push_str(if i == 0 { " " } else { " | " });
            self.out.push_str(&c.name);
            if !c.args.is_empty() {
                self.out.push('(');
                for (k, t) in c.args.iter().enumerate() {
                    if k > 0 {
                        self.out.push_str(", ");
                    }
                    let _ = write!(self.out, "{t}");
                }
                self.out.push(')');
            }
        }
    }

    pub fn program(&mut self, prog: &Program) {
        for d in &prog.type_decls {
            self.type_decl(d);
            self.out.push('\n');
        }
        self.process(&prog.main);
        self.out.push('\n');
    }
}

pub fn pattern_to_string(p: &Pattern) -> String {
    let mut chans = RawChans;
    let mut pr = Printer::new(&mut chans);
    pr.pattern(p);
    pr.finish()
}

pub fn value_to_string(v: &Value) -> String {
    let mut chans = RawChans;
    let mut pr = Printer::new(&mut chans);
    pr.value(v);
    pr.finish()
}

pub fn process_to_string(p: &Process) -> String {
    let mut chans = RawChans;
    let mut pr = Printer::new(&mut chans);
    pr.process(p);
    pr.finish()
}

pub fn definition_to_string(d: &Definition) -> String {
    let mut chans = RawChans;
    let mut pr = Printer::new(&mut chans);
    pr.definition(d);
    pr.finish()
}

pub fn program_to_string(p: &Program) -> String {
    let mut chans = RawChans;
    let mut pr = Printer::new(&mut chans);
    pr.program(p);
    pr.finish()
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&pattern_to_string(self))
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&value_to_string(self))
    }
}

impl std::fmt::Display for Process {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&process_to_string(self))
    }
}
