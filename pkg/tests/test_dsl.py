import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapecalc.behaviour import Const, Delay, Rho
from shapecalc.dsl import ModelFile, ParseError, build_network, parse_model, print_model, validate_model
from shapecalc.steer import Brownian, Constant, Gravity, Keep, Scripted, Zero

HEADER = """
shape C = box (1, 1, 1) mass 1
surface F = face C 0
surface E = polygon [(0.5, -0.5, -0.5), (0.5, 0.5, -0.5), (0.5, 0.5, 0.5), (0.5, -0.5, 0.5)]
"""


def corpus(data_dir):
    return sorted(data_dir.glob("*.shc"))


def test_empty_input():
    m = parse_model("")
    assert m == ModelFile() and validate_model(m) == []
    assert parse_model("# just a comment\n\n") == ModelFile()
    assert build_network(m).network.processes == ()


def test_glycolysis_file(data_dir):
    m = parse_model((data_dir / "glycolysis.shc").read_text())
    assert {"HEX", "ATP", "GLC"} <= set(m.behaviours)
    assert m.constants == {"t_h": 0.75, "t_a": 1.25, "t_g": 0.5}
    assert [p.name for p in m.processes] == ["hex1", "atp1", "glc1"]
    assert validate_model(m) == []
    # constants are substituted into the terms
    ha = m.behaviours["HA"]
    assert isinstance(ha.right, Delay) and ha.right.t == 0.75


def test_corpus_round_trip(data_dir):
    for path in corpus(data_dir):
        m = parse_model(path.read_text())
        text = print_model(m)
        assert parse_model(text) == m, path.name
        assert print_model(parse_model(text)) == text


@settings(max_examples=200, deadline=None)
@given(x=st.floats(allow_nan=False, allow_infinity=False, min_value=0, max_value=1e300))
def test_float_round_trip(x):
    m = parse_model(HEADER + f"behaviour B = eps({x!r}).nil\nconfig delta = {max(x, 1e-300)!r}\n")
    m2 = parse_model(print_model(m))
    assert m2.behaviours["B"].t == x
    assert m2 == m


def test_steer_and_config_forms():
    m = parse_model(HEADER + """
process p = C @ (0, 0, 0) vel (0, 0, 0) runs nil
process q = C @ (3, 0, 0) vel (0, 0, 0) runs nil
steer p scripted [(0, (1, 0, 0)), (2.5, (0, 0, 0))]
steer q gravity (0, 0, -9.81)
steer default brownian 7 0.5
config delta = 0.25
config seed = 11
config policy = random
config p_omega = 0.125
config omega_script = [(1.5, b)]
config tunneling_guard = false
""")
    assert m.steer["p"] == Scripted(((0.0, (1, 0, 0)), (2.5, (0, 0, 0))))
    assert m.steer["q"] == Gravity((0, 0, -9.81)) and m.steer["default"] == Brownian(7, 0.5)
    assert m.config["omega_script"] == ((1.5, "b"),) and m.config["tunneling_guard"] is False
    built = build_network(m)
    assert built.config.delta == 0.25 and built.config.policy == "random"
    assert built.ids == {"p": 0, "q": 1}
    assert build_network(m, delta=2.0).config.delta == 2.0
    for rule in ("keep", "zero", "constant (1, 2, 3)"):
        mm = parse_model(HEADER + "process p = C @ (0,0,0) vel (0,0,0) runs nil\nsteer p " + rule + "\n")
        assert isinstance(mm.steer["p"], (Keep, Zero, Constant))
    assert parse_model(print_model(m)) == m


def test_expression_syntax():
    m = parse_model(HEADER + """
behaviour A = <a, F>.B + w(~a, F) + rho{<a, F>, <b, E>}.(eps(1).nil + nil)
behaviour B = nil
behaviour C = ((A))
""")
    a = m.behaviours["A"]
    assert isinstance(a.right, Rho) and len(a.right.channels) == 2
    assert m.behaviours["C"] == Const("A")
    assert parse_model(print_model(m)) == m


@pytest.mark.parametrize("src, where", [
    ("shape D = box (1, 1) mass 1", (1, 20)),
    ("shape D = box (1, 1, 1) mass 1\nshape D = box (1, 1, 1) mass 1", (2, 7)),
    ("behaviour B = <a, Q>.nil", (1, 19)),
    ("behaviour B = eps(t).nil", (1, 19)),
    ("behaviour B = <a, F>.", None),
    ("config colour = 3", (1, 8)),
    ("process p = Z @ (0,0,0) vel (0,0,0) runs nil", (1, 13)),
    ("const x = 1\nconst x = 2", (2, 7)),
    ("behaviour nil = nil", (1, 11)),
    ("frobnicate", (1, 1)),
    ("behaviour B = eps(-1).nil", None),
    ("surface S = polygon []", None),
    ("shape D = box (1, 1, 1) mass -2", None),
])
def test_errors_have_positions(src, where):
    text = HEADER.strip() + "\n" + src
    with pytest.raises(ParseError) as ei:
        parse_model(text)
    e = ei.value
    lines = text.split("\n")
    assert 1 <= e.line <= len(lines)
    assert 1 <= e.col <= len(lines[e.line - 1]) + 1
    if where is not None:
        assert (e.line - 3, e.col) == where, str(e)
    assert "^" in str(e) or not e.snippet


def test_bytes_and_deep_nesting():
    with pytest.raises(ParseError):
        parse_model(b"\xff\xfe behaviour")
    deep = HEADER + "behaviour B = " + "(" * 5000 + "nil" + ")" * 5000 + "\n"
    try:
        parse_model(deep)
    except ParseError:
        pass


def test_validation_messages():
    off = HEADER + """surface far = polygon [(3, 0, 0), (3, 1, 0), (3, 1, 1)]
process p = C @ (0, 0, 0) vel (0, 0, 0) runs <a, far>.nil
"""
    (msg,) = validate_model(parse_model(off))
    assert msg.startswith("line 6: process p:") and "not on the boundary" in msg
    overlap = HEADER + """process a = C @ (0, 0, 0) vel (0, 0, 0) runs nil
process b = C @ (0.5, 0, 0) vel (0, 0, 0) runs nil
"""
    (msg,) = validate_model(parse_model(overlap))
    assert "processes a and b interpenetrate" in msg and msg.startswith("line 6")
    incompatible = HEADER + "behaviour B = rho{<a, F>, <~a, F>}.nil\n"
    assert any("compatible channels" in x for x in validate_model(parse_model(incompatible)))
    loop = HEADER + "behaviour K = K\n"
    assert any("unguarded" in x for x in validate_model(parse_model(loop)))
    fast = HEADER + """process a = C @ (0, 0, 0) vel (10, 0, 0) runs nil
process b = C @ (5, 0, 0) vel (0, 0, 0) runs nil
"""
    assert any("tunneling" in x for x in validate_model(parse_model(fast)))
    assert validate_model(parse_model(fast), delta=0.05) == []


def test_valid_models_build_well_formed_networks(data_dir):
    from shapecalc.network import net_well_formed
    for path in corpus(data_dir):
        m = parse_model(path.read_text())
        if not validate_model(m):
            b = build_network(m)
            assert net_well_formed(b.network, b.ctx) == []


def test_fuzz_mutations_never_crash(data_dir):
    rng = random.Random(5)
    src = (data_dir / "glycolysis.shc").read_bytes()
    for _ in range(500):
        b = bytearray(src)
        for _ in range(rng.randint(1, 6)):
            i = rng.randrange(len(b))
            op = rng.random()
            if op < 0.4:
                b[i] = rng.randrange(256)
            elif op < 0.7:
                del b[i]
            else:
                b[i:i] = bytes([rng.choice(b"()<>{}[],.+~@#=\n 0123456789abcxyz")])
        try:
            parse_model(bytes(b))
        except ParseError as e:
            assert e.line >= 1 and e.col >= 1
