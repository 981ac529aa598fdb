//! Lub-closed pattern lattices with a topological vertex order.

use std::cmp::Reverse;
use std::collections::BTreeSet;
use std::fmt::Write;

use crate::lang::Pattern;
use crate::pattern::{equiv, erase_vars, leq, lub, repr, PatternError};
use crate::types::{Type, TypeEnv};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("no lattice vertex is equivalent to `{0}`")]
    NoVertex(String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    /// 1-based position in the topological order.
    pub index: usize,
    pub annotation: Pattern,
    /// Source patterns (by position) equivalent to the annotation.
    pub origins: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternLattice {
    pub ty: Type,
    /// Ordered so that more precise annotations come first.
    pub vertices: Vec<Vertex>,
    /// Covering pairs `(more precise, less precise)`, by vertex index.
    pub edges: Vec<(usize, usize)>,
    /// For each source pattern, `I(π) = { j : π ⪯ ω_j }`.
    pub preds: Vec<BTreeSet<usize>>,
}

/// Lub closure, built from the last pattern backwards: each pattern, then
/// the closure of the ones after it, then its lub with each of those.
/// Syntactically identical patterns are kept once, at their first occurrence.
pub fn close_lub(pi: &[Pattern]) -> Vec<Pattern> {
    fn push(out: &mut Vec<Pattern>, p: Pattern) {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    let mut acc: Vec<Pattern> = Vec::new();
    for p in pi.iter().rev() {
        let p = erase_vars(p);
        let mut next = vec![p.clone()];
        for q in &acc {
            push(&mut next, q.clone());
        }
        for q in &acc {
            if let Some(l) = lub(&p, q) {
                push(&mut next, l);
            }
        }
        acc = next;
    }
    acc
}

/// Keeps one representative per equivalence class, in first-occurrence order.
pub fn dedupe(env: &TypeEnv, t: &Type, pats: &[Pattern]) -> Result<Vec<Pattern>, PatternError> {
    let mut out: Vec<Pattern> = Vec::new();
    'next: for p in pats {
        for q in out.iter_mut() {
            if equiv(env, q, p, t)? {
                *q = repr(env, q, p, t)?;
                continue 'next;
            }
        }
        out.push(p.clone());
    }
    Ok(out)
}

fn tie_key(p: &Pattern) -> (Reverse<usize>, String) {
    (Reverse(p.ctor_count()), p.to_string())
}

/// Builds the lattice of a channel's pattern arguments (in rule order).
pub fn build(env: &TypeEnv, t: &Type, source: &[Pattern]) -> Result<PatternLattice, PatternError> {
    let erased: Vec<Pattern> = source.iter().map(erase_vars).collect();
    let base = dedupe(env, t, &erased)?;
    let omega = dedupe(env, t, &close_lub(&base))?;
    let n = omega.len();

    // le[i][j]: ω_i ⪯ ω_j, i.e. ω_j is at least as precise.
    let mut le = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            le[i][j] = i == j || leq(env, &omega[i], &omega[j], t)?;
        }
    }

    // Kahn's algorithm: a vertex is ready once every strictly more precise
    // vertex is placed; ties go to the more specific pattern.
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n)
            .filter(|&i| !placed[i] && (0..n).all(|j| j == i || !le[i][j] || placed[j]))
            .min_by_key(|&i| tie_key(&omega[i]))
            .expect("precision order is acyclic on non-equivalent patterns");
        placed[next] = true;
        order.push(next);
    }
    let mut index_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        index_of[i] = pos + 1;
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && le[i][j] && !(0..n).any(|k| k != i && k != j && le[i][k] && le[k][j]) {
                edges.push((index_of[j], index_of[i]));
            }
        }
    }
    edges.sort();

    let mut vertices: Vec<Vertex> = order
        .iter()
        .enumerate()
        .map(|(pos, &i)| Vertex { index: pos + 1, annotation: omega[i].clone(), origins: BTreeSet::new() })
        .collect();
    let mut preds = Vec::with_capacity(source.len());
    for (s, p) in erased.iter().enumerate() {
        let mut set = BTreeSet::new();
        for v in vertices.iter_mut() {
            if leq(env, p, &v.annotation, t)? {
                set.insert(v.index);
                if leq(env, &v.annotation, p, t)? {
                    v.origins.insert(s);
                }
            }
        }
        preds.push(set);
    }
    Ok(PatternLattice { ty: t.clone(), vertices, edges, preds })
}

impl PatternLattice {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, index: usize) -> &Vertex {
        &self.vertices[index - 1]
    }

    /// `I(π)` for an arbitrary pattern equivalent to some annotation.
    pub fn preds_of(&self, env: &TypeEnv, p: &Pattern) -> Result<BTreeSet<usize>, LatticeError> {
        let p = erase_vars(p);
        let mut found = false;
        let mut out = BTreeSet::new();
        for v in &self.vertices {
            if leq(env, &p, &v.annotation, &self.ty)? {
                out.insert(v.index);
                found |= leq(env, &v.annotation, &p, &self.ty)?;
            }
        }
        if !found {
            return Err(LatticeError::NoVertex(p.to_string()));
        }
        Ok(out)
    }

    /// `I(ω_j)` for every vertex `j`.
    pub fn vertex_preds(&self, env: &TypeEnv) -> Result<Vec<BTreeSet<usize>>, PatternError> {
        self.vertices
            .iter()
            .map(|v| {
                let mut set = BTreeSet::new();
                for w in &self.vertices {
                    if leq(env, &v.annotation, &w.annotation, &self.ty)? {
                        set.insert(w.index);
                    }
                }
                Ok(set)
            })
            .collect()
    }

    /// One line per vertex: `#j  annotation  preds={…}`.
    pub fn dump(&self, env: &TypeEnv) -> Result<String, PatternError> {
        let mut out = String::new();
        for (v, preds) in self.vertices.iter().zip(self.vertex_preds(env)?) {
            let list: Vec<String> = preds.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "#{}  {}  preds={{{}}}", v.index, v.annotation, list.join(", "));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_pattern;
    use crate::lang::Loc;
    use crate::types::{CtorDecl, TypeDecl};

    fn env() -> TypeEnv {
        TypeEnv::new(&[TypeDecl {
            name: "list".into(),
            ctors: vec![
                CtorDecl { name: "Nil".into(), args: vec![] },
                CtorDecl { name: "Cons".into(), args: vec![Type::Int, Type::named("list")] },
            ],
            loc: Loc::default(),
        }])
        .unwrap()
    }

    fn pats(ss: &[&str]) -> Vec<Pattern> {
        ss.iter().map(|s| parse_pattern(s).unwrap()).collect()
    }

    fn list() -> Type {
        Type::named("list")
    }

    const STACK: &[&str] = &["ls", "Cons(x, xs)", "Cons(0, xs)", "Cons(x, Nil)", "Cons(x1, Cons(x2, xs))", "Nil", "Nil"];

    #[test]
    fn closure_of_stack_patterns() {
        let e = env();
        let base = dedupe(&e, &list(), &pats(STACK).iter().map(erase_vars).collect::<Vec<_>>()).unwrap();
        assert_eq!(base.len(), 6);
        let omega = dedupe(&e, &list(), &close_lub(&base)).unwrap();
        assert_eq!(omega.len(), 8);
        assert!(omega.contains(&parse_pattern("Cons(0, Cons(_, _))").unwrap()));
        assert!(omega.contains(&parse_pattern("Cons(0, Nil)").unwrap()));
    }

    #[test]
    fn closure_trivial_cases() {
        assert_eq!(close_lub(&pats(&["Nil", "Cons(_, _)"])), pats(&["Nil", "Cons(_, _)"]));
        assert_eq!(close_lub(&pats(&["Nil"])), pats(&["Nil"]));
    }

    #[test]
    fn dedupe_cases() {
        let e = env();
        assert_eq!(dedupe(&e, &list(), &pats(&["Nil", "Nil"])).unwrap(), pats(&["Nil"]));
        let pair = Type::Tuple(vec![Type::Int, Type::Int]);
        assert_eq!(dedupe(&e, &pair, &pats(&["(_, _)", "_"])).unwrap(), pats(&["(_, _)"]));
        assert_eq!(dedupe(&e, &list(), &pats(&["Nil", "Cons(_, _)"])).unwrap(), pats(&["Nil", "Cons(_, _)"]));
    }

    #[test]
    fn stack_lattice_order_and_preds() {
        let e = env();
        let l = build(&e, &list(), &pats(STACK)).unwrap();
        assert_eq!(l.len(), 8);
        let idx = |s: &str| {
            let p = parse_pattern(s).unwrap();
            l.vertices.iter().find(|v| v.annotation == p).unwrap().index
        };
        assert_eq!(idx("_"), 8);
        for (a, b) in [("Cons(0, Cons(_, _))", "Cons(0, _)"), ("Cons(0, Nil)", "Cons(_, Nil)"), ("Cons(_, _)", "_")] {
            assert!(idx(a) < idx(b));
        }
        let sizes: Vec<usize> = l.preds.iter().map(BTreeSet::len).collect();
        assert_eq!(sizes, vec![8, 6, 3, 2, 2, 1, 1]);
        let insert: BTreeSet<usize> = [idx("Cons(0, Cons(_, _))"), idx("Cons(0, Nil)"), idx("Cons(0, _)")].into();
        assert_eq!(l.preds[2], insert);
        assert_eq!(l.preds_of(&e, &parse_pattern("Nil").unwrap()).unwrap(), [idx("Nil")].into());
        assert!(matches!(
            l.preds_of(&e, &parse_pattern("Cons(1, _)").unwrap()),
            Err(LatticeError::NoVertex(_))
        ));
    }

    #[test]
    fn singleton() {
        let l = build(&env(), &list(), &pats(&["Nil"])).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l.preds[0], [1].into());
    }
}
