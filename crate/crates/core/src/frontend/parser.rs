use std::collections::BTreeSet;

use super::lexer::{tokenize, Tok};
use super::{Program, SyntaxError};
use crate::lang::{
    tuple_ctor, Channel, Definition, Expression, JoinAtom, JoinPattern, Loc, MatchProc, MessagePattern, Pattern,
    Process, ReactionRule,
};
use crate::types::{CtorDecl, Type, TypeDecl};

pub(super) struct Parser {
    toks: Vec<(Tok, Loc)>,
    pos: usize,
    ctors: BTreeSet<String>,
    upper_ctors: bool,
}

type PResult<T> = Result<T, SyntaxError>;

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

impl Parser {
    pub(super) fn new(src: &str, private_names: bool) -> PResult<Self> {
        let toks = tokenize(src, private_names)
            .map_err(|e| SyntaxError { loc: e.loc, expected: vec![], found: e.message })?;
        Ok(Parser { toks, pos: 0, ctors: BTreeSet::new(), upper_ctors: false })
    }

    /// Treat every capitalized identifier in expressions as a constructor.
    pub(super) fn upper_ctors(mut self) -> Self {
        self.upper_ctors = true;
        self
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(SyntaxError {
            loc: self.loc(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.error(&[what])
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(&[what]),
        }
    }

    pub(super) fn program(&mut self) -> PResult<Program> {
        let mut type_decls = Vec::new();
        while self.peek() == &Tok::Kw("type") {
            type_decls.push(self.type_decl()?);
        }
        let main = self.process()?;
        self.end()?;
        Ok(Program { type_decls, main })
    }

    pub(super) fn end(&mut self) -> PResult<()> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    fn type_decl(&mut self) -> PResult<TypeDecl> {
        let loc = self.loc();
        self.expect(Tok::Kw("type"), "`type`")?;
        let name = self.ident("type name")?;
        self.expect(Tok::Eq, "`=`")?;
        self.eat(&Tok::Bar);
        let mut ctors = vec![self.ctor_decl()?];
        while self.eat(&Tok::Bar) {
            ctors.push(self.ctor_decl()?);
        }
        Ok(TypeDecl { name, ctors, loc })
    }

    fn ctor_decl(&mut self) -> PResult<CtorDecl> {
        let name = match self.peek().clone() {
            Tok::Ident(s) if starts_upper(&s) => {
                self.bump();
                s
            }
            _ => return self.error(&["capitalized constructor name"]),
        };
        let mut args = Vec::new();
        if self.eat(&Tok::LParen)
            && !self.eat(&Tok::RParen) {
                args.push(self.ty()?);
                while self.eat(&Tok::Comma) {
                    args.push(self.ty()?);
                }
                self.expect(Tok::RParen, "`)`")?;
            }
        self.ctors.insert(name.clone());
        Ok(CtorDecl { name, args })
    }

    pub(super) fn ty(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "int" => {
                self.bump();
                Ok(Type::Int)
            }
            Tok::Ident(s) if s == "unit" => {
                self.bump();
                Ok(Type::unit())
            }
            Tok::Ident(s) if s == "chan" && self.peek_at(1) == &Tok::LParen => {
                self.bump();
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Type::chan(t))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Type::Named(s))
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Type::unit());
                }
                let mut ts = vec![self.ty()?];
                while self.eat(&Tok::Comma) {
                    ts.push(self.ty()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(if ts.len() == 1 { ts.pop().unwrap() } else { Type::Tuple(ts) })
            }
            _ => self.error(&["type"]),
        }
    }

    pub(super) fn process(&mut self) -> PResult<Process> {
        let mut parts = vec![self.prim_process()?];
        while self.eat(&Tok::Amp) {
            parts.push(self.prim_process()?);
        }
        Ok(Process::par_all(parts))
    }

    fn prim_process(&mut self) -> PResult<Process> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Int(0) => {
                self.bump();
                Ok(Process::Null)
            }
            Tok::LParen => {
                self.bump();
                let p = self.process()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(p)
            }
            Tok::Kw("def") => {
                self.bump();
                let d = self.definition()?;
                self.expect(Tok::Kw("in"), "`in` or `or`")?;
                let body = self.process()?;
                Ok(Process::def(d, body))
            }
            Tok::Kw("match") => {
                self.bump();
                let subject = self.expr()?;
                self.expect(Tok::Kw("with"), "`with`")?;
                self.eat(&Tok::Bar);
                let mut clauses = vec![self.clause()?];
                while self.eat(&Tok::Bar) {
                    clauses.push(self.clause()?);
                }
                let mut m = MatchProc::new(subject, clauses);
                m.loc = loc;
                Ok(Process::Match(Box::new(m)))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() != &Tok::LParen {
                    return self.error(&["`(`"]);
                }
                let arg = self.message_args()?;
                Ok(Process::Send { channel: Channel::Name(name), arg, loc })
            }
            _ => self.error(&["process"]),
        }
    }

    fn message_args(&mut self) -> PResult<Expression> {
        self.expect(Tok::LParen, "`(`")?;
        if self.eat(&Tok::RParen) {
            return Ok(Expression::unit());
        }
        let mut args = vec![self.expr()?];
        while self.eat(&Tok::Comma) {
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "`)` or `,`")?;
        Ok(if args.len() == 1 { args.pop().unwrap() } else { Expression::tuple(args) })
    }

    fn clause(&mut self) -> PResult<(Pattern, Process)> {
        let p = self.pattern()?;
        self.expect(Tok::Arrow, "`->`")?;
        let body = self.process()?;
        Ok((p, body))
    }

    fn definition(&mut self) -> PResult<Definition> {
        let mut rules = vec![self.rule()?];
        while self.eat(&Tok::Kw("or")) {
            rules.push(self.rule()?);
        }
        Ok(Definition::new(rules))
    }

    fn rule(&mut self) -> PResult<ReactionRule> {
        let loc = self.loc();
        let pattern = self.join_pattern()?;
        self.expect(Tok::Guard, "`|>` or `&`")?;
        let body = self.process()?;
        Ok(ReactionRule { pattern, body, loc })
    }

    fn join_pattern(&mut self) -> PResult<JoinPattern> {
        let mut atoms = vec![self.join_atom()?];
        while self.eat(&Tok::Amp) {
            atoms.push(self.join_atom()?);
        }
        Ok(JoinPattern { atoms })
    }

    fn join_atom(&mut self) -> PResult<JoinAtom> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let mut alts = vec![self.join_pattern()?];
                while self.eat(&Tok::Kw("or")) {
                    alts.push(self.join_pattern()?);
                }
                self.expect(Tok::RParen, "`)` or `or`")?;
                if alts.len() == 1 {
                    let only = alts.pop().unwrap();
                    if only.atoms.len() == 1 {
                        return Ok(only.atoms.into_iter().next().unwrap());
                    }
                    return Ok(JoinAtom::Or(vec![only]));
                }
                Ok(JoinAtom::Or(alts))
            }
            Tok::Ident(channel) => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let mut annotation = None;
                let arg = if self.eat(&Tok::RParen) {
                    Pattern::tuple(vec![])
                } else {
                    let mut args = vec![self.pattern()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.pattern()?);
                    }
                    if args.len() == 1 && self.eat(&Tok::Colon) {
                        annotation = Some(self.ty()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    if args.len() == 1 {
                        args.pop().unwrap()
                    } else {
                        Pattern::tuple(args)
                    }
                };
                Ok(JoinAtom::Message(MessagePattern { channel, arg, annotation }))
            }
            _ => self.error(&["message pattern"]),
        }
    }

    pub(super) fn pattern(&mut self) -> PResult<Pattern> {
        match self.peek().clone() {
            Tok::Underscore => {
                self.bump();
                Ok(Pattern::Wildcard)
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Pattern::Int(n))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Int(n) => Ok(Pattern::Int(-n)),
                    _ => self.error(&["integer"]),
                }
            }
            Tok::Ident(name) if starts_upper(&name) => {
                self.bump();
                let mut args = Vec::new();
                if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
                    args.push(self.pattern()?);
                    while self.eat(&Tok::Comma) {
                        args.push(self.pattern()?);
                    }
                    self.expect(Tok::RParen, "`)` or `,`")?;
                }
                Ok(Pattern::Ctor(name, args))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Pattern::Var(name))
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Pattern::tuple(vec![]));
                }
                let mut ps = vec![self.pattern()?];
                while self.eat(&Tok::Comma) {
                    ps.push(self.pattern()?);
                }
                self.expect(Tok::RParen, "`)` or `,`")?;
                Ok(if ps.len() == 1 { ps.pop().unwrap() } else { Pattern::Ctor(tuple_ctor(ps.len()), ps) })
            }
            _ => self.error(&["pattern"]),
        }
    }

    pub(super) fn expr(&mut self) -> PResult<Expression> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expression::Int(n))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Int(n) => Ok(Expression::Int(-n)),
                    _ => self.error(&["integer"]),
                }
            }
            Tok::Ident(name) => {
                self.bump();
                let is_ctor = self.ctors.contains(&name)
                    || (starts_upper(&name) && (self.upper_ctors || self.peek() == &Tok::LParen));
                if !is_ctor {
                    return Ok(Expression::Var(name));
                }
                let mut args = Vec::new();
                if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
                    args.push(self.expr()?);
                    while self.eat(&Tok::Comma) {
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)` or `,`")?;
                }
                Ok(Expression::Ctor(name, args))
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Expression::unit());
                }
                let mut es = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    es.push(self.expr()?);
                }
                self.expect(Tok::RParen, "`)` or `,`")?;
                Ok(if es.len() == 1 { es.pop().unwrap() } else { Expression::tuple(es) })
            }
            _ => self.error(&["expression"]),
        }
    }
}
