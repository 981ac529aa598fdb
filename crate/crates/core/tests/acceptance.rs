//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use joinmatch::compiler::{compile_program, lower_or, prune_useless, synth_dispatcher, CompileOptions, Pruning};
use joinmatch::frontend::parse_pattern;
use joinmatch::harness::equiv;
use joinmatch::lang::{JoinAtom, JoinPattern, Pattern, Process, Value};
use joinmatch::lattice::build;
use joinmatch::pattern::{
    enum_values, equiv as pat_equiv, exhaustive, first_match, leq, lub, matches, useful, useful_witness,
};
use joinmatch::runtime::{run, Machine, Mode, Redex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STACK: &str = "
def push(v) & State(ls) |> State(Cons(v, ls))
 or pop(r) & State(Cons(x, xs)) |> r(x) & State(xs)
 or insert(n) & State(Cons(0, xs)) |> State(Cons(0, Cons(n, xs)))
 or last(r) & State(Cons(x, Nil)) |> r(x) & State(Cons(x, Nil))
 or swap() & State(Cons(x1, Cons(x2, xs))) |> State(Cons(x2, Cons(x1, xs)))
 or pause(r) & State(Nil) |> r()
 or resume(r) |> State(Nil) & r()
in State(Nil)";

type Outcome = Result<String, String>;
/// Clause count, dropped annotations, and the rules served per value.
type Dispatch = (usize, BTreeSet<String>, Vec<BTreeSet<usize>>);
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn stack_sources() -> Vec<Pattern> {
    ["ls", "Cons(x, xs)", "Cons(0, xs)", "Cons(x, Nil)", "Cons(x1, Cons(x2, xs))", "Nil"]
        .iter()
        .map(|s| parse_pattern(s).unwrap())
        .collect()
}

fn golden_lattice() -> Outcome {
    let env = list_env();
    let t = list_ty();
    let l = build(&env, &t, &stack_sources()).map_err(|e| e.to_string())?;
    ensure(l.len() == 8, || format!("{} vertices", l.len()))?;
    let expected = ["_", "Cons(_, _)", "Cons(0, _)", "Cons(_, Nil)", "Cons(_, Cons(_, _))", "Nil", "Cons(0, Cons(_, _))", "Cons(0, Nil)"];
    let mut index = BTreeMap::new();
    for e in expected {
        let p = parse_pattern(e).unwrap();
        let hits: Vec<usize> = l
            .vertices
            .iter()
            .filter(|v| pat_equiv(&env, &v.annotation, &p, &t).unwrap())
            .map(|v| v.index)
            .collect();
        ensure(hits.len() == 1, || format!("{e}: matched vertices {hits:?}"))?;
        index.insert(e, hits[0]);
    }
    for a in &l.vertices {
        for b in &l.vertices {
            let strictly_more_precise =
                leq(&env, &b.annotation, &a.annotation, &t).unwrap() && !leq(&env, &a.annotation, &b.annotation, &t).unwrap();
            ensure(!strictly_more_precise || a.index < b.index, || {
                format!("#{} {} must precede #{} {}", a.index, a.annotation, b.index, b.annotation)
            })?;
        }
    }
    let set = |names: &[&str]| names.iter().map(|n| index[n]).collect::<BTreeSet<usize>>();
    let want = [
        ("push", set(&expected)),
        ("pop", set(&["Cons(_, _)", "Cons(0, _)", "Cons(_, Nil)", "Cons(_, Cons(_, _))", "Cons(0, Cons(_, _))", "Cons(0, Nil)"])),
        ("insert", set(&["Cons(0, _)", "Cons(0, Cons(_, _))", "Cons(0, Nil)"])),
        ("last", set(&["Cons(_, Nil)", "Cons(0, Nil)"])),
        ("swap", set(&["Cons(_, Cons(_, _))", "Cons(0, Cons(_, _))"])),
        ("pause", set(&["Nil"])),
    ];
    for ((name, w), got) in want.iter().zip(&l.preds) {
        ensure(w == got, || format!("{name}: preds {got:?}, expected {w:?}"))?;
    }
    Ok(format!("8 vertices, preds sizes {:?}", l.preds.iter().map(BTreeSet::len).collect::<Vec<_>>()))
}

fn forward_channels(j: &JoinPattern, out: &mut BTreeSet<String>) {
    for a in &j.atoms {
        match a {
            JoinAtom::Message(m) => {
                out.insert(m.channel.clone());
            }
            JoinAtom::Or(alts) => alts.iter().for_each(|alt| forward_channels(alt, out)),
        }
    }
}

/// For each value, the set of rules that can receive it after dispatch.
fn served(pruning: Pruning, values: &[Value]) -> Result<Dispatch, String> {
    let t = typed(&format!("{LIST}{STACK}"));
    let c = compile_program(&t, CompileOptions { pruning }).map_err(|e| e.to_string())?;
    let Process::Def(d, _) = &c.program.main else { return Err("no definition".into()) };
    let disp = d.dispatchers.iter().find(|x| x.channel == "State").ok_or("no State dispatcher")?;
    let report = c.reports.iter().find(|r| r.channel == "State").unwrap();
    let l = report.lattice.as_ref().unwrap();
    let dropped = l.vertices.iter().filter(|v| !report.kept.contains(&v.index)).map(|v| v.annotation.to_string()).collect();
    let listeners: Vec<BTreeSet<String>> = d
        .rules
        .iter()
        .map(|r| {
            let mut s = BTreeSet::new();
            forward_channels(&r.pattern, &mut s);
            s
        })
        .collect();
    let mut out = Vec::new();
    for v in values {
        let o = first_match(disp.clauses.iter().map(|c| &c.pattern), v).ok_or_else(|| format!("{v} not dispatched"))?;
        let target = &disp.clauses[o.clause].forward_to;
        out.push((0..listeners.len()).filter(|&i| listeners[i].contains(target)).collect());
    }
    Ok((disp.clauses.len(), dropped, out))
}

fn pruning_fixture() -> Outcome {
    let values = enum_values(&list_env(), &list_ty(), 4, &[0, 1].into());
    let (n_pruned, dropped, pruned) = served(Pruning::Usefulness, &values)?;
    let (n_full, _, full) = served(Pruning::Off, &values)?;
    ensure(n_pruned == 5 && n_full == 8, || format!("{n_pruned} pruned / {n_full} full clauses"))?;
    let want: BTreeSet<String> = ["Cons(0, _)", "Cons(_, _)", "_"].iter().map(|s| s.to_string()).collect();
    ensure(dropped == want, || format!("dropped {dropped:?}"))?;
    let sources = stack_sources();
    for ((v, p), f) in values.iter().zip(&pruned).zip(&full) {
        let expect: BTreeSet<usize> = (0..sources.len()).filter(|&i| matches(&sources[i], v)).collect();
        ensure(p == f && *p == expect, || format!("{v}: pruned {p:?}, full {f:?}, matching rules {expect:?}"))?;
    }
    Ok(format!("5 of 8 clauses kept, {} values dispatched identically", values.len()))
}

fn oracle_suite() -> Outcome {
    let env = list_env();
    let t = list_ty();
    let values = enum_values(&env, &t, 4, &oracle_ints());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inst = |p: &Pattern| values.iter().map(|v| matches(p, v)).collect::<Vec<bool>>();
    for case in 0..1000 {
        let p1 = list_pattern(&mut rng, 3);
        let p2 = list_pattern(&mut rng, 3);
        let (i1, i2) = (inst(&p1), inst(&p2));
        let ctx = || format!("case {case}: {p1} / {p2}");
        let subset = |a: &[bool], b: &[bool]| a.iter().zip(b).all(|(x, y)| !x || *y);
        ensure(leq(&env, &p1, &p2, &t).unwrap() == subset(&i2, &i1), || format!("leq {}", ctx()))?;
        ensure(pat_equiv(&env, &p1, &p2, &t).unwrap() == (i1 == i2), || format!("equiv {}", ctx()))?;
        let both: Vec<bool> = i1.iter().zip(&i2).map(|(a, b)| *a && *b).collect();
        match lub(&p1, &p2) {
            Some(l) => ensure(inst(&l) == both, || format!("lub {l} {}", ctx()))?,
            None => ensure(both.iter().all(|b| !b), || format!("lub missing {}", ctx()))?,
        }
        let u = useful(&env, std::slice::from_ref(&p1), &p2, &t).unwrap();
        ensure(u == i2.iter().zip(&i1).any(|(b, a)| *b && !a), || format!("useful {}", ctx()))?;
        if let Some(w) = useful_witness(&env, std::slice::from_ref(&p1), &p2, &t).unwrap() {
            ensure(u && matches(&p2, &w) && !matches(&p1, &w), || format!("witness {w} {}", ctx()))?;
        } else {
            ensure(!u, || format!("no witness {}", ctx()))?;
        }
        let ex = exhaustive(&env, &[p1.clone(), p2.clone()], &t).unwrap();
        ensure(ex == i1.iter().zip(&i2).all(|(a, b)| *a || *b), || format!("exhaustive {}", ctx()))?;
    }
    Ok(format!("1000 pairs agree with {} enumerated values", values.len()))
}

fn dispatch_soundness() -> Outcome {
    let env = list_env();
    let t = list_ty();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut matched = 0;
    for case in 0..1000 {
        let n = rng.random_range(1..=5);
        let pats: Vec<Pattern> = (0..n).map(|_| list_pattern(&mut rng, 3)).collect();
        let v = list_value(&mut rng, 3);
        let l = build(&env, &t, &pats).map_err(|e| e.to_string())?;
        let ex = exhaustive(&env, &pats, &t).unwrap();
        let hit: Vec<usize> = (0..n).filter(|&i| matches(&pats[i], &v)).collect();
        for kept in [l.vertices.iter().map(|x| x.index).collect(), prune_useless(&env, &l).unwrap()] {
            let d = synth_dispatcher("x", "z", &l, ex, &kept);
            let chosen = first_match(d.clauses.iter().map(|c| &c.pattern), &v);
            let ctx = || format!("case {case}: {v} against {pats:?}");
            if hit.is_empty() {
                ensure(chosen.is_none() && d.catch_all, || format!("unmatched value dispatched, {}", ctx()))?;
                continue;
            }
            let clause = &d.clauses[chosen.ok_or_else(|| format!("not dispatched, {}", ctx()))?.clause];
            let all = hit.iter().fold(Pattern::Wildcard, |acc, &i| lub(&acc, &pats[i]).expect("common instance"));
            ensure(pat_equiv(&env, &clause.pattern, &all, &t).unwrap(), || format!("annotation {} vs lub {all}, {}", clause.pattern, ctx()))?;
            for &i in &hit {
                ensure(l.preds[i].contains(&clause.vertex), || format!("vertex {} not in I(pi_{i}), {}", clause.vertex, ctx()))?;
            }
        }
        matched += usize::from(!hit.is_empty());
    }
    Ok(format!("1000 cases ({matched} with a matching pattern), pruned and unpruned"))
}

fn equivalence_corpus() -> Outcome {
    let files = corpus_files();
    ensure(files.len() >= 5, || format!("only {} corpus programs", files.len()))?;
    for f in &files {
        let v = equiv(&corpus(f), f, 12, 1_000_000, CompileOptions::default()).map_err(|e| format!("{f}: {e}"))?;
        ensure(v.is_equivalent(), || format!("{f}: {}", v.report()))?;
    }
    Ok(format!("{} programs equivalent at depth 12", files.len()))
}

fn race_source(n: usize) -> String {
    let mut s = String::from("type bool = False | True\ndef ");
    for i in 1..=n {
        s.push_str(&format!("a{i}(True) |> o{i}()\n or "));
    }
    let all: Vec<String> = (1..=n).map(|i| format!("a{i}(_)")).collect();
    s.push_str(&format!("{} |> o0()\nin 0", all.join(" & ")));
    s
}

fn or_lowering() -> Outcome {
    let t = typed(&race_source(10));
    let c = compile_program(&t, CompileOptions::default()).map_err(|e| e.to_string())?;
    let Process::Def(d, _) = &c.program.main else { return Err("no definition".into()) };
    let cd = lower_or(d).map_err(|e| e.to_string())?;
    let last = cd.bodies.len() - 1;
    let entries = cd.matching_list.iter().filter(|e| e.body == last).count();
    ensure(entries == 1024, || format!("{entries} entries for the last rule"))?;
    ensure(cd.bodies.len() == 11, || format!("{} bodies", cd.bodies.len()))?;
    Ok(format!("{} entries in total, {entries} for the last rule, 11 bodies", cd.matching_list.len()))
}

fn determinism() -> Outcome {
    let mut traces = 0;
    for f in corpus_files() {
        let t = corpus(&f);
        for mode in [Mode::Direct, Mode::Compiled] {
            for seed in 0..4 {
                let once = || run(&mut Machine::load(&t, mode, CompileOptions::default()).unwrap(), seed, 10_000).unwrap().dump();
                let (a, b) = (once(), once());
                ensure(a == b, || format!("{f} {mode:?} seed {seed} differs"))?;
                traces += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..500 {
        let n = rng.random_range(1..=5);
        let pats: Vec<Pattern> = (0..n).map(|_| list_pattern(&mut rng, 3)).collect();
        let v = list_value(&mut rng, 3);
        let clauses: Vec<String> = pats.iter().enumerate().map(|(i, p)| format!("| {p} -> o({i})")).collect();
        let t = typed(&format!("{LIST} match {v} with {}", clauses.join(" ")));
        let mut m = Machine::load(&t, Mode::Direct, CompileOptions::default()).unwrap();
        let expect = pats.iter().position(|p| matches(p, &v));
        match (m.enabled().as_slice(), expect) {
            ([], None) => {}
            ([r @ Redex::MatchStep { clause, .. }], Some(i)) if *clause == i => {
                m.step(&r.clone()).unwrap();
                ensure(m.free_output()["o"] == vec![Value::Int(i as i64)], || format!("case {case}: wrong output"))?;
            }
            (got, _) => return Err(format!("case {case}: {v} with {pats:?} enabled {got:?}, first match {expect:?}")),
        }
    }
    Ok(format!("{traces} traces reproduced, 500 match subjects"))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("golden stack lattice", golden_lattice, Duration::from_secs(1)),
        ("dispatcher pruning", pruning_fixture, Duration::from_secs(5)),
        ("pattern algebra oracle", oracle_suite, Duration::from_secs(10)),
        ("dispatch soundness", dispatch_soundness, Duration::from_secs(10)),
        ("equivalence corpus", equivalence_corpus, Duration::from_secs(60)),
        ("or-lowering scaling", or_lowering, Duration::from_secs(5)),
        ("determinism and first match", determinism, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = result.and_then(|msg| {
            if took <= *limit {
                Ok(msg)
            } else {
                Err(format!("took {took:.2?}, limit {limit:?}"))
            }
        });
        match result {
            Ok(msg) => println!("criterion {}: PASS  {name}: {msg} ({took:.2?})", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {msg} ({took:.2?})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
