//! Monomorphic type inference by local unification.
//!
//! Names free in the main process are the program's output channels; their
//! content types are inferred like any other channel. Type variables left
//! unconstrained at the end default to `unit`.

use std::collections::BTreeMap;

use super::Program;
use crate::lang::{
    defined_channels, received_vars, tuple_arity, Channel, Definition, Expression, JoinAtom, JoinPattern, LangError,
    Loc, Pattern, Process,
};
use crate::types::{Type, TypeEnv, TypeEnvError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("{loc}: type error: expected {expected}, found {found}")]
    Mismatch { loc: Loc, expected: String, found: String },
    #[error("{loc}: `{name}` is bound twice in one pattern")]
    NonLinear { loc: Loc, name: String },
    #[error("{loc}: unknown constructor `{name}`")]
    UnknownConstructor { loc: Loc, name: String },
    #[error("{loc}: `{name}` is used as a channel but is not one")]
    UnknownChannel { loc: Loc, name: String },
    #[error(transparent)]
    Env(#[from] TypeEnvError),
}

/// A checked program. Every `Definition::channel_types` and
/// `MatchProc::subject_type` inside `program` is filled in.
#[derive(Debug, Clone)]
pub struct TypedProgram {
    pub program: Program,
    pub env: TypeEnv,
    /// Message content type of each free (output) channel.
    pub free_channels: BTreeMap<String, Type>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum IType {
    Int,
    Named(String),
    Tuple(Vec<IType>),
    Chan(Box<IType>),
    Var(usize),
}

impl IType {
    fn from_type(t: &Type) -> IType {
        match t {
            Type::Int => IType::Int,
            Type::Named(n) => IType::Named(n.clone()),
            Type::Tuple(ts) => IType::Tuple(ts.iter().map(IType::from_type).collect()),
            Type::Chan(t) => IType::Chan(Box::new(IType::from_type(t))),
        }
    }
}

struct Checker<'e> {
    env: &'e TypeEnv,
    subst: Vec<Option<IType>>,
    scopes: Vec<BTreeMap<String, IType>>,
    free: BTreeMap<String, (IType, Loc)>,
    /// Per `Def` (pre-order): content type of each defined channel.
    def_types: Vec<BTreeMap<String, IType>>,
    /// Per `Match` (pre-order): subject type.
    match_types: Vec<IType>,
}

fn lang_err(loc: Loc, e: LangError) -> TypeError {
    match e {
        LangError::NonLinear(name) => TypeError::NonLinear { loc, name },
        LangError::TypeMismatch { name, reason } => TypeError::Mismatch { loc, expected: name, found: reason },
    }
}

impl<'e> Checker<'e> {
    fn fresh(&mut self) -> IType {
        self.subst.push(None);
        IType::Var(self.subst.len() - 1)
    }

    fn shallow(&self, t: &IType) -> IType {
        let mut t = t.clone();
        while let IType::Var(v) = t {
            match &self.subst[v] {
                Some(next) => t = next.clone(),
                None => break,
            }
        }
        t
    }

    fn resolve(&self, t: &IType) -> IType {
        match self.shallow(t) {
            IType::Tuple(ts) => IType::Tuple(ts.iter().map(|t| self.resolve(t)).collect()),
            IType::Chan(t) => IType::Chan(Box::new(self.resolve(&t))),
            other => other,
        }
    }

    fn finish(&self, t: &IType) -> Type {
        match self.shallow(t) {
            IType::Int => Type::Int,
            IType::Named(n) => Type::Named(n),
            IType::Tuple(ts) => Type::Tuple(ts.iter().map(|t| self.finish(t)).collect()),
            IType::Chan(t) => Type::chan(self.finish(&t)),
            IType::Var(_) => Type::unit(),
        }
    }

    fn show(&self, t: &IType) -> String {
        fn go(t: &IType, out: &mut String) {
            match t {
                IType::Int => out.push_str("int"),
                IType::Named(n) => out.push_str(n),
                IType::Tuple(ts) if ts.is_empty() => out.push_str("unit"),
                IType::Tuple(ts) => {
                    out.push('(');
                    for (i, t) in ts.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        go(t, out);
                    }
                    out.push(')');
                }
                IType::Chan(t) => {
                    out.push_str("chan(");
                    go(t, out);
                    out.push(')');
                }
                IType::Var(v) => out.push_str(&format!("'t{v}")),
            }
        }
        let mut out = String::new();
        go(&self.resolve(t), &mut out);
        out
    }

    fn occurs(&self, v: usize, t: &IType) -> bool {
        match self.shallow(t) {
            IType::Var(w) => v == w,
            IType::Tuple(ts) => ts.iter().any(|t| self.occurs(v, t)),
            IType::Chan(t) => self.occurs(v, &t),
            _ => false,
        }
    }

    fn unify(&mut self, expected: &IType, found: &IType, loc: Loc) -> Result<(), TypeError> {
        let (a, b) = (self.shallow(expected), self.shallow(found));
        let ok = match (&a, &b) {
            (IType::Var(x), IType::Var(y)) if x == y => true,
            (IType::Var(x), other) | (other, IType::Var(x)) => {
                if self.occurs(*x, other) {
                    false
                } else {
                    self.subst[*x] = Some(other.clone());
                    true
                }
            }
            (IType::Int, IType::Int) => true,
            (IType::Named(m), IType::Named(n)) => m == n,
            (IType::Tuple(xs), IType::Tuple(ys)) if xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys) {
                    self.unify(x, y, loc)?;
                }
                true
            }
            (IType::Chan(x), IType::Chan(y)) => {
                self.unify(x, y, loc)?;
                true
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(TypeError::Mismatch { loc, expected: self.show(&a), found: self.show(&b) })
        }
    }

    fn lookup(&self, name: &str) -> Option<IType> {
        self.scopes.iter().rev().find_map(|s| s.get(name).cloned())
    }

    /// Type of a name; unknown names become free output channels.
    fn name_type(&mut self, name: &str, loc: Loc) -> IType {
        if let Some(t) = self.lookup(name) {
            return t;
        }
        if let Some((t, _)) = self.free.get(name) {
            return t.clone();
        }
        let content = self.fresh();
        let t = IType::Chan(Box::new(content));
        self.free.insert(name.to_string(), (t.clone(), loc));
        t
    }

    fn ctor_sig(&mut self, name: &str, arity: usize, loc: Loc) -> Result<(IType, Vec<IType>), TypeError> {
        if let Some(n) = tuple_arity(name) {
            if n != arity {
                return Err(TypeError::Mismatch {
                    loc,
                    expected: format!("{n}-tuple"),
                    found: format!("{arity} components"),
                });
            }
            let args: Vec<IType> = (0..n).map(|_| self.fresh()).collect();
            return Ok((IType::Tuple(args.clone()), args));
        }
        let Some((result, args)) = self.env.constructor(name) else {
            return Err(TypeError::UnknownConstructor { loc, name: name.to_string() });
        };
        if args.len() != arity {
            return Err(TypeError::Mismatch {
                loc,
                expected: format!("`{name}` with {} argument(s)", args.len()),
                found: format!("{arity} argument(s)"),
            });
        }
        Ok((IType::from_type(&result), args.iter().map(IType::from_type).collect()))
    }

    fn pattern(
        &mut self,
        p: &Pattern,
        t: &IType,
        loc: Loc,
        bind: &mut BTreeMap<String, IType>,
    ) -> Result<(), TypeError> {
        match p {
            Pattern::Wildcard => Ok(()),
            Pattern::Var(x) => match bind.get(x).cloned() {
                Some(prev) => self.unify(&prev, t, loc),
                None => {
                    bind.insert(x.clone(), t.clone());
                    Ok(())
                }
            },
            Pattern::Int(_) => self.unify(t, &IType::Int, loc),
            Pattern::Ctor(c, args) => {
                let (result, arg_types) = self.ctor_sig(c, args.len(), loc)?;
                self.unify(t, &result, loc)?;
                for (a, at) in args.iter().zip(&arg_types) {
                    self.pattern(a, at, loc, bind)?;
                }
                Ok(())
            }
        }
    }

    fn expr(&mut self, e: &Expression, loc: Loc) -> Result<IType, TypeError> {
        match e {
            Expression::Var(x) => Ok(self.name_type(x, loc)),
            Expression::Int(_) => Ok(IType::Int),
            Expression::Chan(_) => Ok(self.fresh()),
            Expression::Ctor(c, args) => {
                let (result, arg_types) = self.ctor_sig(c, args.len(), loc)?;
                for (a, at) in args.iter().zip(&arg_types) {
                    let found = self.expr(a, loc)?;
                    self.unify(at, &found, loc)?;
                }
                Ok(result)
            }
        }
    }

    fn join_pattern(
        &mut self,
        j: &JoinPattern,
        chans: &BTreeMap<String, IType>,
        loc: Loc,
        bind: &mut BTreeMap<String, IType>,
    ) -> Result<(), TypeError> {
        for atom in &j.atoms {
            match atom {
                JoinAtom::Message(m) => {
                    let content = chans[&m.channel].clone();
                    if let Some(ann) = &m.annotation {
                        self.env.check_type(ann, loc)?;
                        self.unify(&IType::from_type(ann), &content, loc)?;
                    }
                    self.pattern(&m.arg, &content, loc, bind)?;
                }
                JoinAtom::Or(alts) => {
                    for alt in alts {
                        self.join_pattern(alt, chans, loc, bind)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn definition(&mut self, d: &Definition) -> Result<(), TypeError> {
        let mut chans = BTreeMap::new();
        for r in &d.rules {
            defined_channels(&r.pattern).map_err(|e| lang_err(r.loc, e))?;
            received_vars(&r.pattern).map_err(|e| lang_err(r.loc, e))?;
            let mut names = Vec::new();
            r.pattern.channels_in_order(&mut names);
            for x in names {
                chans.entry(x).or_insert_with(|| {
                    
                    self.fresh()
                });
            }
        }
        for disp in &d.dispatchers {
            let content = match chans.get(&disp.channel) {
                Some(t) => t.clone(),
                None => {
                    let v = self.fresh();
                    chans.insert(disp.channel.clone(), v.clone());
                    v
                }
            };
            for c in &disp.clauses {
                chans.entry(c.forward_to.clone()).or_insert_with(|| content.clone());
            }
        }
        self.def_types.push(chans.clone());
        self.scopes.push(chans.iter().map(|(x, t)| (x.clone(), IType::Chan(Box::new(t.clone())))).collect());
        for r in &d.rules {
            let mut bind = BTreeMap::new();
            self.join_pattern(&r.pattern, &chans, r.loc, &mut bind)?;
            self.scopes.push(bind);
            self.process(&r.body)?;
            self.scopes.pop();
        }
        for disp in &d.dispatchers {
            let content = chans[&disp.channel].clone();
            for c in &disp.clauses {
                let mut bind = BTreeMap::new();
                self.pattern(&c.pattern, &content, Loc::default(), &mut bind)?;
                let target = chans[&c.forward_to].clone();
                self.unify(&target, &content, Loc::default())?;
            }
        }
        Ok(())
    }

    fn process(&mut self, p: &Process) -> Result<(), TypeError> {
        match p {
            Process::Null => Ok(()),
            Process::Send { channel, arg, loc } => {
                let content = self.expr(arg, *loc)?;
                if let Channel::Name(x) = channel {
                    let t = self.name_type(x, *loc);
                    match self.shallow(&t) {
                        IType::Chan(_) | IType::Var(_) => {}
                        _ => return Err(TypeError::UnknownChannel { loc: *loc, name: x.clone() }),
                    }
                    self.unify(&t, &IType::Chan(Box::new(content)), *loc)?;
                }
                Ok(())
            }
            Process::Parallel(l, r) => {
                self.process(l)?;
                self.process(r)
            }
            Process::Def(d, body) => {
                self.definition(d)?;
                let r = self.process(body);
                self.scopes.pop();
                r
            }
            Process::Match(m) => {
                let t = self.expr(&m.subject, m.loc)?;
                if let Some(st) = &m.subject_type {
                    self.unify(&IType::from_type(st), &t, m.loc)?;
                }
                self.match_types.push(t.clone());
                for (pat, body) in &m.clauses {
                    let mut bind = BTreeMap::new();
                    crate::lang::pattern_received_vars(pat).map_err(|e| lang_err(m.loc, e))?;
                    self.pattern(pat, &t, m.loc, &mut bind)?;
                    self.scopes.push(bind);
                    self.process(body)?;
                    self.scopes.pop();
                }
                Ok(())
            }
        }
    }
}

struct Filler {
    defs: std::vec::IntoIter<BTreeMap<String, Type>>,
    matches: std::vec::IntoIter<Type>,
}

impl Filler {
    fn process(&mut self, p: &mut Process) {
        match p {
            Process::Null | Process::Send { .. } => {}
            Process::Parallel(l, r) => {
                self.process(l);
                self.process(r);
            }
            Process::Def(d, body) => {
                d.channel_types = self.defs.next().expect("definition count");
                for r in &mut d.rules {
                    self.process(&mut r.body);
                }
                self.process(body);
            }
            Process::Match(m) => {
                m.subject_type = Some(self.matches.next().expect("match count"));
                for (_, body) in &mut m.clauses {
                    self.process(body);
                }
            }
        }
    }
}

/// Checks a parsed program against its type declarations and annotates it.
pub fn typecheck(program: &Program) -> Result<TypedProgram, TypeError> {
    let env = TypeEnv::new(&program.type_decls)?;
    let mut ck = Checker {
        env: &env,
        subst: Vec::new(),
        scopes: Vec::new(),
        free: BTreeMap::new(),
        def_types: Vec::new(),
        match_types: Vec::new(),
    };
    ck.process(&program.main)?;

    let mut free_channels = BTreeMap::new();
    for (name, (t, loc)) in &ck.free {
        match ck.shallow(t) {
            IType::Chan(content) => {
                free_channels.insert(name.clone(), ck.finish(&content));
            }
            _ => return Err(TypeError::UnknownChannel { loc: *loc, name: name.clone() }),
        }
    }

    let defs: Vec<BTreeMap<String, Type>> = ck
        .def_types
        .iter()
        .map(|m| m.iter().map(|(x, t)| (x.clone(), ck.finish(t))).collect())
        .collect();
    let matches: Vec<Type> = ck.match_types.iter().map(|t| ck.finish(t)).collect();
    let mut annotated = program.clone();
    Filler { defs: defs.into_iter(), matches: matches.into_iter() }.process(&mut annotated.main);

    Ok(TypedProgram { program: annotated, env, free_channels })
}
