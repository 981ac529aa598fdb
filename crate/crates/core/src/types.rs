//! Monomorphic types and the declared type environment.

use std::collections::BTreeMap;
use std::fmt;

use crate::lang::{tuple_arity, tuple_ctor, Loc};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    /// Builtin integers: infinitely many constant constructors.
    Int,
    /// A declared algebraic data type.
    Named(String),
    /// Builtin single-constructor tuple type; the empty tuple is `unit`.
    Tuple(Vec<Type>),
    /// Channel carrying messages of the given type.
    Chan(Box<Type>),
}

impl Type {
    pub fn unit() -> Self {
        Type::Tuple(Vec::new())
    }

    pub fn named(name: &str) -> Self {
        Type::Named(name.to_string())
    }

    pub fn chan(content: Type) -> Self {
        Type::Chan(Box::new(content))
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Named(n) => f.write_str(n),
            Type::Tuple(ts) if ts.is_empty() => f.write_str("unit"),
            Type::Tuple(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                if ts.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
            Type::Chan(t) => write!(f, "chan({t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CtorDecl {
    pub name: String,
    pub args: Vec<Type>,
}

/// `type t = C₁(…) | C₂(…) | …`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeDecl {
    pub name: String,
    pub ctors: Vec<CtorDecl>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeEnvError {
    #[error("{loc}: type `{0}` declared twice", loc = .1)]
    DuplicateType(String, Loc),
    #[error("{loc}: constructor `{0}` declared twice", loc = .1)]
    DuplicateConstructor(String, Loc),
    #[error("{loc}: unknown type `{0}`", loc = .1)]
    UnknownType(String, Loc),
    #[error("{loc}: type `{0}` has no constructors", loc = .1)]
    EmptyType(String, Loc),
}

/// Declared types plus the builtin `int`, tuple and channel types.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeEnv {
    decls: BTreeMap<String, TypeDecl>,
    order: Vec<String>,
    ctors: BTreeMap<String, (String, usize)>,
}

impl TypeEnv {
    pub fn new(decls: &[TypeDecl]) -> Result<Self, TypeEnvError> {
        let mut env = TypeEnv::default();
        for d in decls {
            if env.decls.contains_key(&d.name) {
                return Err(TypeEnvError::DuplicateType(d.name.clone(), d.loc));
            }
            if d.ctors.is_empty() {
                return Err(TypeEnvError::EmptyType(d.name.clone(), d.loc));
            }
            for (i, c) in d.ctors.iter().enumerate() {
                if env.ctors.insert(c.name.clone(), (d.name.clone(), i)).is_some() {
                    return Err(TypeEnvError::DuplicateConstructor(c.name.clone(), d.loc));
                }
            }
            env.decls.insert(d.name.clone(), d.clone());
            env.order.push(d.name.clone());
        }
        for d in decls {
            for c in &d.ctors {
                for t in &c.args {
                    env.check_type(t, d.loc)?;
                }
            }
        }
        Ok(env)
    }

    /// Checks that every named type mentioned in `t` is declared.
    pub fn check_type(&self, t: &Type, loc: Loc) -> Result<(), TypeEnvError> {
        match t {
            Type::Int => Ok(()),
            Type::Named(n) if self.decls.contains_key(n) => Ok(()),
            Type::Named(n) => Err(TypeEnvError::UnknownType(n.clone(), loc)),
            Type::Tuple(ts) => ts.iter().try_for_each(|t| self.check_type(t, loc)),
            Type::Chan(t) => self.check_type(t, loc),
        }
    }

    /// Declarations in source order.
    pub fn decls(&self) -> impl Iterator<Item = &TypeDecl> {
        self.order.iter().map(|n| &self.decls[n])
    }

    pub fn decl(&self, name: &str) -> Option<&TypeDecl> {
        self.decls.get(name)
    }

    pub fn is_constructor(&self, name: &str) -> bool {
        self.ctors.contains_key(name) || tuple_arity(name).is_some()
    }

    /// Result type and argument types of a declared constructor.
    pub fn constructor(&self, name: &str) -> Option<(Type, &[Type])> {
        let (ty, idx) = self.ctors.get(name)?;
        Some((Type::Named(ty.clone()), &self.decls[ty].ctors[*idx].args))
    }

    /// Complete signature of `t`: every constructor with its argument types.
    /// `None` for types whose constructor family is never complete (`int`,
    /// channels).
    pub fn signature(&self, t: &Type) -> Option<Vec<(String, Vec<Type>)>> {
        match t {
            Type::Int | Type::Chan(_) => None,
            Type::Tuple(ts) => Some(vec![(tuple_ctor(ts.len()), ts.clone())]),
            Type::Named(n) => {
                Some(self.decls.get(n)?.ctors.iter().map(|c| (c.name.clone(), c.args.clone())).collect())
            }
        }
    }

    /// Argument types of constructor `ctor` when used at type `t`.
    pub fn ctor_args(&self, t: &Type, ctor: &str) -> Option<Vec<Type>> {
        match t {
            Type::Tuple(ts) if tuple_arity(ctor) == Some(ts.len()) => Some(ts.clone()),
            Type::Named(n) => {
                let (ty, idx) = self.ctors.get(ctor)?;
                (ty == n).then(|| self.decls[ty].ctors[*idx].args.clone())
            }
            _ => None,
        }
    }
}
