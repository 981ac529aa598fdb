#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use joinmatch::frontend::{parse, typecheck, TypedProgram};
use joinmatch::lang::{Pattern, Value};
use joinmatch::types::{Type, TypeEnv};
use rand::Rng;

pub const LIST: &str = "type list = Nil | Cons(int, list)\n";

pub fn list_env() -> TypeEnv {
    typed(&format!("{LIST} 0")).env
}

pub fn list_ty() -> Type {
    Type::named("list")
}

pub fn typed(src: &str) -> TypedProgram {
    typecheck(&parse(src).unwrap()).unwrap()
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus(name: &str) -> TypedProgram {
    let path = corpus_dir().join(name);
    typed(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
}

pub fn corpus_files() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".aj"))
        .collect();
    names.sort();
    names
}

pub fn oracle_ints() -> BTreeSet<i64> {
    [0, 1, 2].into()
}

fn int_pattern(rng: &mut impl Rng, fresh: &mut usize) -> Pattern {
    match rng.random_range(0..4) {
        0 => Pattern::Wildcard,
        1 => {
            *fresh += 1;
            Pattern::var(&format!("i{fresh}"))
        }
        n => Pattern::Int(n as i64 - 2),
    }
}

/// Random linear int-list pattern of depth at most `depth` (>= 1).
pub fn list_pattern(rng: &mut impl Rng, depth: usize) -> Pattern {
    fn go(rng: &mut impl Rng, depth: usize, fresh: &mut usize) -> Pattern {
        match rng.random_range(0..5) {
            0 => Pattern::Wildcard,
            1 => {
                *fresh += 1;
                Pattern::var(&format!("l{fresh}"))
            }
            2 => Pattern::ctor("Nil", vec![]),
            _ if depth >= 2 => {
                let head = int_pattern(rng, fresh);
                Pattern::ctor("Cons", vec![head, go(rng, depth - 1, fresh)])
            }
            _ => Pattern::ctor("Nil", vec![]),
        }
    }
    go(rng, depth, &mut 0)
}

/// Random int list with at most `len` elements drawn from 0..3.
pub fn list_value(rng: &mut impl Rng, len: usize) -> Value {
    let n = rng.random_range(0..=len);
    let mut v = Value::ctor("Nil", vec![]);
    for _ in 0..n {
        v = Value::ctor("Cons", vec![Value::Int(rng.random_range(0..3)), v]);
    }
    v
}
