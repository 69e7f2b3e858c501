import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from linflow import fixtures
from linflow.cli import demo_appendix_b, oeis_crosscheck, run
from linflow.flows import check_flow, check_global, format_flow, parse_flow
from linflow.imploid import builtin, format_table
from linflow.lambda_terms import FAMILIES, beta_normalize, parse, print_term, term_to_map
from linflow.maps import (canonical_with_orientation, close_map, format_map, format_orientation, parse_map,
                          parse_orientation)
from linflow.rewriting import encode, format_sequence

GOLDEN = Path(__file__).parent / "golden"
B_TERM = r"\x.\y.\z.x (y z)"


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), out=buf)
    return code, buf.getvalue()


def call_json(*argv):
    code, text = call(*argv, "--json")
    return code, json.loads(text), text


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    out = {}
    M, O, _ = fixtures.k4()
    out["k4"] = write("k4.map", format_map(M))
    out["k4_or"] = write("k4.or", format_orientation(O))
    M, O, values = fixtures.nonglobal_first()
    out["ex"] = write("ex.map", format_map(M))
    out["ex_or"] = write("ex.or", format_orientation(O))
    out["ex_flow"] = write("ex.flow", format_flow(values))
    M, O = fixtures.term_map("B")
    out["b"] = write("b.map", format_map(M))
    out["b_or"] = write("b.or", format_orientation(O))
    out["b_lam"] = write("b.lam", B_TERM + "\n")
    out["b_seq"] = write("b.seq", format_sequence(encode(fixtures.term("B"))))
    out["bridge"] = write("bridge.map", format_map(close_map(term_to_map(parse(r"\x.x (\y.y)"))[0])))
    out["open"] = write("open.map", format_map(term_to_map(parse(r"\x.x (\y.y)"))[0]))
    out["hat2"] = write("hat2.tbl", format_table(builtin("hat2")))
    out["skew"] = write("skew.tbl", format_table(builtin("skew2")))
    out["bad"] = write("bad.map", "map\narcs: 3\n")
    out["write"] = write
    return out


# -- exit codes -------------------------------------------------------------

def test_usage_errors():
    assert call()[0] == 2
    assert call("bogus")[0] == 2
    assert call("map", "genus")[0] == 2
    assert call("flow", "check", "--map", "/nonexistent")[0] == 2
    assert call("imploid", "check", "--imploid", "nosuch")[0] == 2
    assert call("enum", "terms", "--family", "nosuch")[0] == 2
    assert call("rewrite", "check-move", "--move", "rho", "--imploid", "hat2")[0] == 2


def test_help_exits_zero():
    assert call("--help")[0] == 0


def test_format_error_exit(files):
    assert call("map", "genus", "--map", files["bad"])[0] == 2
    assert call("imploid", "check", "--imploid", files["skew"])[0] == 2


def test_term_tomap_dot(files):
    code, text = call("term", "tomap", "--term", files["b_lam"], "--dot")
    assert code == 0
    head, dot = text.split("digraph", 1)
    M = parse_map(head.split("orient:")[0])
    O = parse_orientation("orient:" + head.split("orient:")[1], M)
    assert canonical_with_orientation(M, O) == canonical_with_orientation(*fixtures.term_map("B"))
    assert "fillcolor=blue" in dot and "fillcolor=red" in dot


def test_term_commands():
    code, data, _ = call_json("term", "classify", "--term", r"\x.\y.y x")
    assert code == 0 and data == {"planar": False, "unitless": True, "beta_normal": True}
    code, data, _ = call_json("term", "normalize", "--term", r"(\x.x)(\y.y)")
    assert data == {"term": r"\y -> y", "steps": 1}
    code, data, _ = call_json("term", "parse", "--term", "context: x y\nx y")
    assert parse(data["term"]) == parse("context: x y\nx y")


def test_term_fromap(files):
    code, text = call("term", "fromap", "--map", files["b"])
    assert code == 0 and parse(text) == fixtures.term("B")


def test_map_commands(files):
    assert call_json("map", "genus", "--map", files["b"])[1]["genus"] == 0
    assert call_json("map", "bridges", "--map", files["b"])[1] == {"bridges": [0], "bridgeless": False}
    assert call("map", "validate", "--map", files["b"])[0] == 0
    code, data, _ = call_json("map", "orient", "--map", files["b"], "--orient", files["b_or"])
    assert code == 0 and data["topological"]
    code, data, _ = call_json("map", "orient", "--map", files["ex"], "--orient", files["ex_or"])
    assert code == 1 and not data["topological"]
    assert call("map", "dot", "--map", files["b"])[1].startswith("graph")
    assert call("map", "dot", "--map", files["b"], "--orient", files["b_or"])[1].startswith("digraph")
    assert call("map", "dual", "--map", files["k4"])[0] == 0
    assert call("map", "canon", "--map", files["b"])[0] == 0


def test_flow_color(files):
    code, data, _ = call_json("flow", "color", "--map", files["k4"])
    assert code == 0
    assert sorted(set(data["coloring"].values())) == ["B", "G", "R"]
    assert len(data["coloring"]) == 6
    code, data, _ = call_json("flow", "color", "--map", files["bridge"])
    assert code == 1 and data["coloring"] is None
    assert call("flow", "color", "--map", files["open"])[0] == 2


def test_flow_check_and_global(files):
    base = ["--map", files["ex"], "--orient", files["ex_or"], "--imploid", "hat2"]
    assert call("flow", "check", *base, "--flow", files["ex_flow"])[0] == 0
    code, data, _ = call_json("flow", "global", *base, "--flow", files["ex_flow"])
    assert code == 1 and data == {"global": False, "lhs": "1", "rhs": "0"}
    code, data, _ = call_json("flow", "global", *base, "--all")
    assert code == 1 and not data["every_flow_global"] and data["witness"]
    code, data, _ = call_json("flow", "global", "--map", files["b"], "--orient", files["b_or"],
                              "--imploid", files["hat2"], "--all")
    assert code == 0 and data["every_flow_global"]
    assert call("flow", "check", *base)[0] == 2


def test_flow_search(files):
    code, data, _ = call_json("flow", "search", "--map", files["k4"], "--orient", files["k4_or"],
                              "--imploid", "klein_four", "--nowhere-unit")
    assert code == 0 and len(data["flows"]) == 1
    assert "00" not in data["flows"][0].values()
    # the root edge of a closed term map is forced up to the unit
    base = ["--map", files["b"], "--orient", files["b_or"]]
    code, data, _ = call_json("flow", "search", *base, "--imploid", "klein_four", "--nowhere-unit")
    assert code == 1 and data["flows"] == []
    code, data, _ = call_json("flow", "search", *base, "--imploid", "one", "--all")
    assert code == 0 and len(data["flows"]) == 1
    assert call("flow", "search", *base, "--imploid", "hat2", "--node-cap", "1", "--all")[0] == 2


def test_counterexample(files):
    code, data, _ = call_json("counterexample", "--map", files["ex"], "--orient", files["ex_or"])
    assert code == 0
    M = parse_map(Path(files["ex"]).read_text())
    O = parse_orientation(Path(files["ex_or"]).read_text(), M)
    values = {int(a): x for a, x in data["flow"].items()}
    H = builtin("hat2")
    assert check_flow(M, O, H, values).valid
    assert values[M.root & ~1] == "0"
    assert not check_global(M, O, H, values)[0]
    assert call("counterexample", "--map", files["b"], "--orient", files["b_or"])[0] == 2


def test_infer(files):
    code, data, _ = call_json("infer", "--term", r"\y.(\x.x) y")
    assert code == 0 and len(data["constraints"]) == 1
    code, data, _ = call_json("infer", "--term", r"\y.(\x.x) y", "--imploid", "klein_four")
    assert code == 0 and data["instantiation"]
    asg = files["write"]("bad.asg", "a 10\nb 01\nc 00\n")
    code, data, _ = call_json("infer", "--term", r"\y.(\x.x) y", "--imploid", "klein_four",
                              "--assign", asg)
    assert code == 1 and not data["instantiation"]["ok"]


def test_rewrite_commands(files):
    code, data, _ = call_json("rewrite", "encode", "--term", files["b_lam"], "--planar-only")
    assert code == 0 and not data["uses_symmetric"]
    assert call("rewrite", "encode", "--term", r"\x.\y.\z.x z y", "--planar-only")[0] == 1
    code, data, _ = call_json("rewrite", "replay", "--seq", files["b_seq"])
    assert code == 0 and data["map"] == format_map(term_to_map(fixtures.term("B"))[0])
    code, data, _ = call_json("rewrite", "check-move", "--move", "beta", "--imploid", "hat2",
                              "--bound", "1")
    assert code == 0 and data["failures"] == 0
    code, data, _ = call_json("rewrite", "check-move", "--move", "beta:rtl", "--imploid", "hat2",
                              "--bound", "1")
    assert code == 1 and data["failures"] > 0
    broken = files["write"]("broken.seq", "start unital 0\nbeta ltr @ 5\n")
    assert call("rewrite", "replay", "--seq", broken)[0] == 2


def test_imploid_commands(files):
    code, data, _ = call_json("imploid", "check", "--imploid", "hat2")
    assert code == 0 and data["valid"] and data["left_normal"]
    code, text = call("imploid", "builtin", "--imploid", "hat2")
    assert text.rstrip() == format_table(builtin("hat2")).rstrip()
    assert call("imploid", "check", "--imploid", files["hat2"])[0] == 0
    code, data, _ = call_json("imploid", "quotient", "--imploid", "chain_heyting(3)", "--rel", "1<=0")
    assert code == 0
    assert call("imploid", "quotient", "--imploid", "hat2", "--rel", "nonsense")[0] == 2


def test_enum_commands():
    code, data, _ = call_json("enum", "terms", "--max-size", "3")
    assert data["counts"] == [1, 5, 60]
    for family in FAMILIES:
        code, data, _ = call_json("enum", "terms", "--family", family, "--max-size", "4", "--oeis")
        assert code == 0 and data["oeis"]["match"]
    code, data, _ = call_json("enum", "maps", "--max-size", "3")
    assert data["counts"] == [1, 0, 5]


# -- demo -------------------------------------------------------------------

def test_demo_full():
    rep = demo_appendix_b()
    assert rep["ok"]
    assert [s["stage"] for s in rep["stages"]] == ["term", "map", "redexes", "universal_flow",
                                                   "instantiation"]
    assert call("demo-appendix-b")[0] == 0


def test_demo_corrupted_assignment(files):
    letters = dict(fixtures.appendix_b_assignment())
    letters["r"] = "10"
    rep = demo_appendix_b(assignment=letters)
    assert not rep["ok"]
    assert [s["stage"] for s in rep["stages"] if not s["ok"]] == ["instantiation"]
    asg = files["write"]("bad.asg", "".join(f"{k} {v}\n" for k, v in letters.items()))
    assert call("demo-appendix-b", "--assign", asg)[0] == 1


def test_demo_reduced_term():
    nf, _ = beta_normalize(fixtures.appendix_b_term())
    rep = demo_appendix_b(nf)
    assert rep["ok"]
    stages = {s["stage"]: s for s in rep["stages"]}
    assert stages["redexes"]["redexes"] == 0
    assert stages["universal_flow"]["constraints"] == []


# -- oeis -------------------------------------------------------------------

@pytest.mark.parametrize("family", ["linear", "planar", "unitless_planar"])
def test_oeis_crosscheck(family):
    rep = oeis_crosscheck(family, 4)
    assert rep["match"] and rep["ours"] == rep["expected"]


def test_oeis_ids():
    ids = {f: fixtures.oeis()[f]["id"] for f in FAMILIES}
    assert ids == {"linear": "A062980", "planar": "A002005", "unitless": "A267827",
                   "unitless_planar": "A000309", "beta_normal_planar": "A000168",
                   "beta_normal_unitless_planar": "A000260"}


# -- file round trips -------------------------------------------------------

def test_file_round_trips():
    for name in fixtures.TERMS:
        M, O = fixtures.term_map(name)
        assert parse_map(format_map(M)) == M
        assert parse_orientation(format_orientation(O), M) == O
        t = fixtures.term(name)
        assert parse(print_term(t, with_context=t.arity > 0)) == t
    _, _, values = fixtures.nonglobal_first()
    assert parse_flow(format_flow(values)) == values


# -- golden reports ---------------------------------------------------------

GOLDEN_CASES = {
    "term_tomap_b": ["term", "tomap", "--term", B_TERM],
    "term_classify_c": ["term", "classify", "--term", r"\x.\y.\z.x z y"],
    "enum_linear": ["enum", "terms", "--family", "linear", "--max-size", "4", "--oeis"],
    "demo": ["demo-appendix-b"],
    "check_move_beta": ["rewrite", "check-move", "--move", "beta", "--imploid", "hat2", "--bound", "1"],
    "imploid_check_hat2": ["imploid", "check", "--imploid", "hat2"],
}


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden(name):
    code, data, text = call_json(*GOLDEN_CASES[name])
    assert code == 0
    assert text == json.dumps(data, indent=2, sort_keys=True) + "\n"
    expected = (GOLDEN / f"{name}.json").read_text()
    assert text == expected


def test_console_script():
    env = dict(os.environ)
    res = subprocess.run([sys.executable, "-m", "linflow.cli", "term", "classify", "--term",
                          r"\x.x", "--json"], capture_output=True, text=True, env=env)
    assert res.returncode == 0
    assert json.loads(res.stdout) == {"planar": True, "unitless": True, "beta_normal": True}
