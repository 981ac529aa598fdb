"""Smoke test for the Python extension.

Build it first:

    cargo build -p joinmatch-py --release
    cp target/release/libjoinmatch_py.so python/joinmatch.so
    python3 python/smoke_test.py
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import joinmatch

CORPUS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "corpus")


def read(name):
    with open(os.path.join(CORPUS, name)) as f:
        return f.read()


def main():
    stack = read("sequenced_stack.aj")
    assert joinmatch.check(stack) == []
    trace = joinmatch.run(stack, mode="compiled", seed=5)
    assert trace.endswith("OUT r: 2\n"), trace

    lattices = dict(joinmatch.lattices(read("simple_stack.aj")))
    assert "State" in lattices

    verdict, report = joinmatch.equiv(read("race3.aj"), depth=12)
    assert verdict == "equivalent", report

    warnings = joinmatch.check(read("aleph.aj"))
    assert len(warnings) == 1 and "`Nil`" in warnings[0], warnings

    try:
        joinmatch.run("def x( |> 0 in 0")
    except ValueError as e:
        assert "syntax error" in str(e)
    else:
        raise AssertionError("syntax error not reported")

    print("python smoke test ok")


if __name__ == "__main__":
    main()
