//! Pattern algebra: instances, least upper bounds, usefulness and the
//! relations derived from it, plus a bounded value enumerator used as an
//! oracle.

use std::collections::{BTreeSet, HashMap};

use crate::lang::{Pattern, Substitution, Value};
use crate::types::{Type, TypeEnv};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("pattern `{pattern}` does not have type {ty}")]
    TypeMismatch { pattern: String, ty: String },
    #[error("`{0}` and `{1}` are not equivalent")]
    ReprOfInequivalent(String, String),
}

/// Result of first-match evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchOutcome {
    pub clause: usize,
    pub bindings: Substitution,
}

/// Checks that `p` is a pattern of type `t`.
pub fn check_pattern(env: &TypeEnv, p: &Pattern, t: &Type) -> Result<(), PatternError> {
    let bad = || PatternError::TypeMismatch { pattern: p.to_string(), ty: t.to_string() };
    match p {
        Pattern::Var(_) | Pattern::Wildcard => Ok(()),
        Pattern::Int(_) if *t == Type::Int => Ok(()),
        Pattern::Int(_) => Err(bad()),
        Pattern::Ctor(c, args) => {
            let arg_types = env.ctor_args(t, c).ok_or_else(bad)?;
            if arg_types.len() != args.len() {
                return Err(bad());
            }
            args.iter().zip(&arg_types).try_for_each(|(a, at)| check_pattern(env, a, at))
        }
    }
}

/// Checks that `v` is a value of type `t`. Channel references are accepted
/// at any channel type.
pub fn check_value(env: &TypeEnv, v: &Value, t: &Type) -> Result<(), PatternError> {
    let bad = || PatternError::TypeMismatch { pattern: v.to_string(), ty: t.to_string() };
    match v {
        Value::Int(_) if *t == Type::Int => Ok(()),
        Value::Chan(_) if matches!(t, Type::Chan(_)) => Ok(()),
        Value::Ctor(c, args) => {
            let arg_types = env.ctor_args(t, c).ok_or_else(bad)?;
            if arg_types.len() != args.len() {
                return Err(bad());
            }
            args.iter().zip(&arg_types).try_for_each(|(a, at)| check_value(env, a, at))
        }
        _ => Err(bad()),
    }
}

/// The instance relation `p ⪯ v`.
pub fn matches(p: &Pattern, v: &Value) -> bool {
    match (p, v) {
        (Pattern::Var(_) | Pattern::Wildcard, _) => true,
        (Pattern::Int(n), Value::Int(m)) => n == m,
        (Pattern::Ctor(c, ps), Value::Ctor(d, vs)) => {
            c == d && ps.len() == vs.len() && ps.iter().zip(vs).all(|(p, v)| matches(p, v))
        }
        _ => false,
    }
}

/// The substitution `σ` with `pσ = v`, if `p` matches `v`.
pub fn match_bindings(p: &Pattern, v: &Value) -> Option<Substitution> {
    let mut s = Substitution::new();
    bind_into(p, v, &mut s).then_some(s)
}

fn bind_into(p: &Pattern, v: &Value, s: &mut Substitution) -> bool {
    match (p, v) {
        (Pattern::Var(x), _) => {
            s.insert(x.clone(), v.clone());
            true
        }
        (Pattern::Wildcard, _) => true,
        (Pattern::Int(n), Value::Int(m)) => n == m,
        (Pattern::Ctor(c, ps), Value::Ctor(d, vs)) => {
            c == d && ps.len() == vs.len() && ps.iter().zip(vs).all(|(p, v)| bind_into(p, v, s))
        }
        _ => false,
    }
}

/// Extracts bindings assuming `p` matches `v`, descending only into the
/// constructor positions that hold variables.
pub fn bind_unchecked(p: &Pattern, v: &Value, s: &mut Substitution) {
    match (p, v) {
        (Pattern::Var(x), _) => {
            s.insert(x.clone(), v.clone());
        }
        (Pattern::Ctor(_, ps), Value::Ctor(_, vs)) => {
            for (p, v) in ps.iter().zip(vs) {
                bind_unchecked(p, v, s);
            }
        }
        _ => {}
    }
}

/// Least upper bound: a variable-free pattern whose instances are the
/// common instances of `p1` and `p2`; `None` when they are incompatible.
pub fn lub(p1: &Pattern, p2: &Pattern) -> Option<Pattern> {
    match (p1, p2) {
        (Pattern::Var(_) | Pattern::Wildcard, p) | (p, Pattern::Var(_) | Pattern::Wildcard) => Some(erase_vars(p)),
        (Pattern::Int(n), Pattern::Int(m)) => (n == m).then_some(Pattern::Int(*n)),
        (Pattern::Ctor(c, ps), Pattern::Ctor(d, qs)) if c == d && ps.len() == qs.len() => {
            Some(Pattern::Ctor(c.clone(), ps.iter().zip(qs).map(|(p, q)| lub(p, q)).collect::<Option<_>>()?))
        }
        _ => None,
    }
}

/// Replaces every variable by a wildcard.
pub fn erase_vars(p: &Pattern) -> Pattern {
    match p {
        Pattern::Var(_) | Pattern::Wildcard => Pattern::Wildcard,
        Pattern::Int(n) => Pattern::Int(*n),
        Pattern::Ctor(c, args) => Pattern::Ctor(c.clone(), args.iter().map(erase_vars).collect()),
    }
}

/// First clause matching `v`, with its bindings.
pub fn first_match<'a>(clauses: impl IntoIterator<Item = &'a Pattern>, v: &Value) -> Option<MatchOutcome> {
    clauses
        .into_iter()
        .enumerate()
        .find_map(|(i, p)| match_bindings(p, v).map(|bindings| MatchOutcome { clause: i, bindings }))
}

// ---------------------------------------------------------------------------
// Usefulness

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Head {
    Ctor(String),
    Int(i64),
}

fn head_of(p: &Pattern) -> Option<(Head, usize)> {
    match p {
        Pattern::Int(n) => Some((Head::Int(*n), 0)),
        Pattern::Ctor(c, args) => Some((Head::Ctor(c.clone()), args.len())),
        _ => None,
    }
}

type Row = Vec<Pattern>;

fn specialize(rows: &[Row], head: &Head, arity: usize) -> Vec<Row> {
    rows.iter()
        .filter_map(|row| {
            let (first, rest) = row.split_first()?;
            let mut out: Row = match (first, head) {
                (Pattern::Var(_) | Pattern::Wildcard, _) => vec![Pattern::Wildcard; arity],
                (Pattern::Int(n), Head::Int(m)) if n == m => Vec::new(),
                (Pattern::Ctor(c, args), Head::Ctor(d)) if c == d => args.clone(),
                _ => return None,
            };
            out.extend_from_slice(rest);
            Some(out)
        })
        .collect()
}

fn default_matrix(rows: &[Row]) -> Vec<Row> {
    rows.iter()
        .filter(|row| row.first().is_some_and(Pattern::is_irrefutable_leaf))
        .map(|row| row[1..].to_vec())
        .collect()
}

fn head_arg_types(env: &TypeEnv, t: &Type, head: &Head) -> Vec<Type> {
    match head {
        Head::Int(_) => Vec::new(),
        Head::Ctor(c) => env.ctor_args(t, c).unwrap_or_default(),
    }
}

fn rebuild(head: &Head, arity: usize, mut w: Vec<Pattern>) -> Vec<Pattern> {
    let rest = w.split_off(arity);
    let first = match head {
        Head::Int(n) => Pattern::Int(*n),
        Head::Ctor(c) => Pattern::Ctor(c.clone(), w),
    };
    let mut out = vec![first];
    out.extend(rest);
    out
}

/// Matrix usefulness with witness construction. Returns a witness row of
/// patterns matched by `q` and by no row of `rows`.
fn useful_rows(env: &TypeEnv, rows: &[Row], q: &[Pattern], types: &[Type]) -> Option<Vec<Pattern>> {
    let Some((q1, q_rest)) = q.split_first() else {
        return rows.is_empty().then(Vec::new);
    };
    let t1 = &types[0];
    if let Some((head, arity)) = head_of(q1) {
        let mut q2: Vec<Pattern> = match q1 {
            Pattern::Ctor(_, args) => args.clone(),
            _ => Vec::new(),
        };
        q2.extend_from_slice(q_rest);
        let mut t2 = head_arg_types(env, t1, &head);
        t2.extend_from_slice(&types[1..]);
        let w = useful_rows(env, &specialize(rows, &head, arity), &q2, &t2)?;
        return Some(rebuild(&head, arity, w));
    }

    let heads: BTreeSet<(Head, usize)> = rows.iter().filter_map(|r| r.first().and_then(head_of)).collect();
    let signature = env.signature(t1);
    let complete = match &signature {
        Some(sig) => {
            !heads.is_empty() && sig.iter().all(|(c, _)| heads.iter().any(|(h, _)| *h == Head::Ctor(c.clone())))
        }
        None => false,
    };
    if complete {
        for (c, args) in signature.unwrap() {
            let head = Head::Ctor(c);
            let arity = args.len();
            let mut q2 = vec![Pattern::Wildcard; arity];
            q2.extend_from_slice(q_rest);
            let mut t2 = args;
            t2.extend_from_slice(&types[1..]);
            if let Some(w) = useful_rows(env, &specialize(rows, &head, arity), &q2, &t2) {
                return Some(rebuild(&head, arity, w));
            }
        }
        return None;
    }
    let w = useful_rows(env, &default_matrix(rows), q_rest, &types[1..])?;
    let first = if heads.is_empty() {
        Pattern::Wildcard
    } else {
        missing_head(&heads, t1, signature.as_deref())
    };
    let mut out = vec![first];
    out.extend(w);
    Some(out)
}

fn missing_head(heads: &BTreeSet<(Head, usize)>, t: &Type, sig: Option<&[(String, Vec<Type>)]>) -> Pattern {
    match (t, sig) {
        (Type::Int, _) => {
            let used: BTreeSet<i64> = heads
                .iter()
                .filter_map(|(h, _)| if let Head::Int(n) = h { Some(*n) } else { None })
                .collect();
            Pattern::Int((0..).find(|n| !used.contains(n)).expect("unbounded search"))
        }
        (_, Some(sig)) => sig
            .iter()
            .find(|(c, _)| !heads.iter().any(|(h, _)| *h == Head::Ctor(c.clone())))
            .map(|(c, args)| Pattern::Ctor(c.clone(), vec![Pattern::Wildcard; args.len()]))
            .unwrap_or(Pattern::Wildcard),
        _ => Pattern::Wildcard,
    }
}

fn check_all(env: &TypeEnv, pats: &[&Pattern], t: &Type) -> Result<(), PatternError> {
    pats.iter().try_for_each(|p| check_pattern(env, p, t))
}

/// Whether some value of type `t` matches `q` and none of `pi`.
pub fn useful(env: &TypeEnv, pi: &[Pattern], q: &Pattern, t: &Type) -> Result<bool, PatternError> {
    Ok(useful_pattern_witness(env, pi, q, t)?.is_some())
}

/// Witness pattern for `useful`: matched by `q`, by no member of `pi`, and
/// inhabited whenever `t` has values.
pub fn useful_pattern_witness(
    env: &TypeEnv,
    pi: &[Pattern],
    q: &Pattern,
    t: &Type,
) -> Result<Option<Pattern>, PatternError> {
    check_all(env, &pi.iter().chain([q]).collect::<Vec<_>>(), t)?;
    let rows: Vec<Row> = pi.iter().map(|p| vec![p.clone()]).collect();
    Ok(useful_rows(env, &rows, std::slice::from_ref(q), std::slice::from_ref(t)).map(|mut w| w.remove(0)))
}

/// A concrete value witnessing usefulness, built from the witness pattern by
/// filling wildcards with the smallest value of the right type.
pub fn useful_witness(env: &TypeEnv, pi: &[Pattern], q: &Pattern, t: &Type) -> Result<Option<Value>, PatternError> {
    Ok(useful_pattern_witness(env, pi, q, t)?.and_then(|w| instantiate(env, &w, t)))
}

fn instantiate(env: &TypeEnv, p: &Pattern, t: &Type) -> Option<Value> {
    match p {
        Pattern::Var(_) | Pattern::Wildcard => min_value(env, t),
        Pattern::Int(n) => Some(Value::Int(*n)),
        Pattern::Ctor(c, args) => {
            let ats = env.ctor_args(t, c)?;
            Some(Value::Ctor(c.clone(), args.iter().zip(&ats).map(|(a, at)| instantiate(env, a, at)).collect::<Option<_>>()?))
        }
    }
}

/// First enumerated value of smallest depth; `None` for channel types and
/// types without finite values.
pub fn min_value(env: &TypeEnv, t: &Type) -> Option<Value> {
    (0..=16).find_map(|d| enum_values(env, t, d, &BTreeSet::from([0])).into_iter().next())
}

/// Two-pattern recursion for `U([p1], p2)`, restricted to a single
/// row. Kept alongside the matrix algorithm as a cross-check.
pub fn useful_single(env: &TypeEnv, p1: &Pattern, p2: &Pattern, t: &Type) -> bool {
    match (p2, p1) {
        (_, Pattern::Var(_) | Pattern::Wildcard) => false,
        (Pattern::Int(n), Pattern::Int(m)) => n != m,
        (Pattern::Int(_), _) | (Pattern::Ctor(..), Pattern::Int(_)) => true,
        (Pattern::Ctor(c, ws), Pattern::Ctor(d, gs)) => {
            if c != d {
                return true;
            }
            let ats = env.ctor_args(t, c).unwrap_or_default();
            gs.iter().zip(ws).zip(&ats).any(|((g, w), at)| useful_single(env, g, w, at))
        }
        (Pattern::Var(_) | Pattern::Wildcard, Pattern::Int(_)) => true,
        (Pattern::Var(_) | Pattern::Wildcard, Pattern::Ctor(c, gs)) => match env.signature(t) {
            Some(sig) if sig.len() == 1 => {
                let ats = env.ctor_args(t, c).unwrap_or_default();
                gs.iter().zip(&ats).any(|(g, at)| useful_single(env, g, &Pattern::Wildcard, at))
            }
            _ => true,
        },
    }
}

/// `p1 ⪯ p2`: every instance of `p2` is an instance of `p1`.
pub fn leq(env: &TypeEnv, p1: &Pattern, p2: &Pattern, t: &Type) -> Result<bool, PatternError> {
    Ok(!useful(env, std::slice::from_ref(p1), p2, t)?)
}

pub fn equiv(env: &TypeEnv, p1: &Pattern, p2: &Pattern, t: &Type) -> Result<bool, PatternError> {
    Ok(leq(env, p1, p2, t)? && leq(env, p2, p1, t)?)
}

/// Representative of two equivalent patterns: their least upper bound.
pub fn repr(env: &TypeEnv, p1: &Pattern, p2: &Pattern, t: &Type) -> Result<Pattern, PatternError> {
    if !equiv(env, p1, p2, t)? {
        return Err(PatternError::ReprOfInequivalent(p1.to_string(), p2.to_string()));
    }
    Ok(lub(p1, p2).unwrap_or_else(|| erase_vars(p1)))
}

/// Whether every value of type `t` matches some member of `pi`.
pub fn exhaustive(env: &TypeEnv, pi: &[Pattern], t: &Type) -> Result<bool, PatternError> {
    Ok(!useful(env, pi, &Pattern::Wildcard, t)?)
}

// ---------------------------------------------------------------------------
// Bounded enumeration

/// Every value of type `t` with constructor depth at most `depth` and int
/// leaves from `ints`, each exactly once. Order: constructors in declaration
/// order, arguments varying lexicographically with the last fastest, ints
/// ascending. Channel types have no enumerable values.
pub fn enum_values(env: &TypeEnv, t: &Type, depth: usize, ints: &BTreeSet<i64>) -> Vec<Value> {
    let mut memo = HashMap::new();
    enum_memo(env, t, depth, ints, &mut memo)
}

fn enum_memo(
    env: &TypeEnv,
    t: &Type,
    depth: usize,
    ints: &BTreeSet<i64>,
    memo: &mut HashMap<(Type, usize), Vec<Value>>,
) -> Vec<Value> {
    if let Some(vs) = memo.get(&(t.clone(), depth)) {
        return vs.clone();
    }
    let out = match t {
        Type::Int => ints.iter().map(|n| Value::Int(*n)).collect(),
        Type::Chan(_) => Vec::new(),
        _ if depth == 0 => Vec::new(),
        _ => {
            let mut out = Vec::new();
            for (c, args) in env.signature(t).unwrap_or_default() {
                let columns: Vec<Vec<Value>> = args.iter().map(|a| enum_memo(env, a, depth - 1, ints, memo)).collect();
                let mut combos: Vec<Vec<Value>> = vec![Vec::new()];
                for col in &columns {
                    combos = combos
                        .into_iter()
                        .flat_map(|prefix| {
                            col.iter().map(move |v| {
                                let mut next = prefix.clone();
                                next.push(v.clone());
                                next
                            })
                        })
                        .collect();
                }
                out.extend(combos.into_iter().map(|vs| Value::Ctor(c.clone(), vs)));
            }
            out
        }
    };
    memo.insert((t.clone(), depth), out.clone());
    out
}
