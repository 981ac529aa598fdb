use std::path::{Path, PathBuf};
use std::process::Command;

const STACK: &str = "type list = Nil | Cons(int, list)
def push(v) & State(ls) |> State(Cons(v, ls))
 or pop(r) & State(Cons(x, xs)) |> r(x) & State(xs)
 or insert(n) & State(Cons(0, xs)) |> State(Cons(0, Cons(n, xs)))
 or last(r) & State(Cons(x, Nil)) |> r(x) & State(Cons(x, Nil))
 or swap() & State(Cons(x1, Cons(x2, xs))) |> State(Cons(x2, Cons(x1, xs)))
 or pause(r) & State(Nil) |> r()
 or resume(r) |> State(Nil) & r()
in ";

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn write(name: &str, src: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("joinmatch-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, src).unwrap();
    path
}

fn joinmatch(args: &[&str], file: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_joinmatch")).args(args).arg(file).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn check_exhaustive_stack() {
    let f = write("stack.aj", &format!("{STACK} State(Nil)"));
    let (code, out, _) = joinmatch(&["check"], &f);
    assert_eq!(code, 0);
    assert_eq!(out, "");
}

#[test]
fn check_warnings() {
    // The simple stack minus push: only Cons(x, xs) is left on State.
    let f = write("nopush.aj", "type list = Nil | Cons(int, list)\ndef pop(r) & State(Cons(x, xs)) |> r(x) & State(xs) in State(Nil)");
    let (code, out, _) = joinmatch(&["check"], &f);
    assert_eq!(code, 0);
    assert_eq!(out, "warning: patterns of channel `State` are not exhaustive; `Nil` is not matched\n");

    let f = write("useless.aj", "type list = Nil | Cons(int, list)\nmatch Nil with | Cons(_, _) -> o(0) | _ -> o(1) | Nil -> o(2)");
    let (code, out, _) = joinmatch(&["check"], &f);
    assert_eq!(code, 0);
    assert!(out.contains("match clause 2 (`Nil`) is unused"), "{out}");
}

#[test]
fn check_type_error() {
    let f = write("bad.aj", "type list = Nil | Cons(int, list)\ndef x(Nil) |> 0 in x(1)");
    let (code, _, err) = joinmatch(&["check"], &f);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"), "{err}");
    let f = write("syntax.aj", "def x( |> 0 in 0");
    assert_eq!(joinmatch(&["check"], &f).0, 1);
}

#[test]
fn compile_listings() {
    let f = write("stack6.aj", &format!("{STACK} State(Nil)"));
    let clauses = |out: &str| out.lines().filter(|l| l.contains("-> State@")).count();
    let (code, out, _) = joinmatch(&["compile"], &f);
    assert_eq!(code, 0);
    assert_eq!(clauses(&out), 5);
    let (_, out, _) = joinmatch(&["compile", "--no-optimize"], &f);
    assert_eq!(clauses(&out), 8);
    let (_, out, _) = joinmatch(&["compile", "--dump-lattice"], &f);
    assert_eq!(out.lines().filter(|l| l.starts_with('#')).count(), 8);
    let (_, out, _) = joinmatch(&["compile", "--emit-core"], &f);
    assert!(!out.contains(" or State@"), "{out}");
}

#[test]
fn compile_dump_matching() {
    let (code, out, _) = joinmatch(&["compile", "--dump-matching"], &corpus("race3.aj"));
    assert_eq!(code, 0);
    let shared: Vec<&str> = out.lines().filter(|l| l.ends_with("  3")).collect();
    assert_eq!(shared.len(), 8, "{out}");
    assert!(out.contains("111000000  [0; 1; 2]  3"), "{out}");
}

#[test]
fn run_sequenced_stack() {
    for seed in ["0", "1", "17"] {
        for mode in ["direct", "compiled"] {
            let (code, out, _) = joinmatch(&["run", "--mode", mode, "--seed", seed], &corpus("sequenced_stack.aj"));
            assert_eq!(code, 0);
            assert!(out.ends_with("BARBS {r}\nOUT r: 2\n"), "{out}");
        }
    }
}

#[test]
fn run_race_and_empty() {
    let f = write("race.aj", "def x() & y() |> a() or x() & z() |> b() in x() & y() & z()");
    for seed in ["1", "2"] {
        let (_, out, _) = joinmatch(&["run", "--seed", seed], &f);
        assert!(out.contains("OUT a: ()") ^ out.contains("OUT b: ()"), "{out}");
    }
    let f = write("empty.aj", "0");
    let (code, out, _) = joinmatch(&["run"], &f);
    assert_eq!((code, out.as_str()), (0, "BARBS {}\n"));
    let (_, again, _) = joinmatch(&["run", "--steps", "0"], &corpus("simple_stack.aj"));
    assert_eq!(again, "BARBS {}\n");
}

#[test]
fn explore_outcomes() {
    let (code, out, _) = joinmatch(&["explore"], &corpus("sequenced_stack.aj"));
    assert_eq!(code, 0);
    assert!(out.contains("TERMINAL {r:[2]}"), "{out}");
    let (code, out, _) = joinmatch(&["explore", "--budget", "2"], &corpus("simple_stack.aj"));
    assert_eq!(code, 3, "{out}");
}

#[test]
fn equiv_verdicts() {
    let (code, out, _) = joinmatch(&["equiv", "--depth", "20"], &corpus("stack_driver.aj"));
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("equivalent at depth 20"));
    let (code, _, _) = joinmatch(&["equiv"], &corpus("aleph.aj"));
    assert_eq!(code, 0);
    let f = write("control.aj", &format!("{STACK} State(Cons(0, Nil)) & last(r)"));
    let (code, out, _) = joinmatch(&["equiv", "--unchecked-pruning"], &f);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("barb on `r` reachable only in direct mode"), "{out}");
    let (code, _, _) = joinmatch(&["equiv", "--budget", "2"], &corpus("simple_stack.aj"));
    assert_eq!(code, 3);
}
