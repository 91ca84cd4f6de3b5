import math

import numpy as np
import pytest

from shapecalc.behaviour import NIL, OMEGA, RHO, Channel, Const, Delay, Name, Omega, Prefix, Rho
from shapecalc.dsl import parse_model
from shapecalc.geometry import BasicShape, ConvexPolytope, Surface, leaves, same_points
from shapecalc.process import (
    BasicProcess,
    Bond,
    CompoundProcess,
    Context,
    ProcessError,
    bonds,
    can_complete_reaction,
    decompose,
    join,
    proc_channel_actions,
    proc_congruent,
    proc_delay,
    proc_shape,
    proc_split_actions,
    proc_timed_step,
    proc_update_velocity,
    proc_well_formed,
    reaction_channel_sets,
    reaction_path,
    remove_bonds,
    sync_split,
)

UNIT = ConvexPolytope.box((1, 1, 1))


def face_x(x, h=0.5):
    return Surface.polygon([(x, -h, -h), (x, h, -h), (x, h, h), (x, -h, h)])


def unit(pid, pos, beh=NIL, v=(0, 0, 0)):
    return BasicProcess(BasicShape(UNIT, 1.0, pos, v), beh, pid)


@pytest.fixture(scope="module")
def glyco(data_dir):
    m = parse_model((data_dir / "glycolysis.shc").read_text())
    ctx = Context(dict(m.behaviours))
    S = {k: d.surface for k, d in m.surfaces.items()}
    hex_ = ConvexPolytope.box((2, 2, 2))
    ha, hg = Channel(Name("atp"), S["X_ha"]), Channel(Name("glc"), S["X_hg"])
    ah, gh = Channel(Name("atp", True), S["X_ah"]), Channel(Name("glc", True), S["X_gh"])
    H = BasicProcess(BasicShape(hex_, 10.0, (0, 0, 0)), Rho((ha, hg), Const("HEX")), 0)
    A = BasicProcess(BasicShape(UNIT, 1.0, (1.5, 0, 0)), Rho((ah,), Const("ADP")), 1)
    G = BasicProcess(BasicShape(UNIT, 1.2, (-1.5, 0, 0)), Rho((gh,), Const("G6P")), 2)
    X, Y = face_x(1.0), face_x(-1.0)
    P = CompoundProcess((H, A, G), (Bond(0, 1, "atp", X), Bond(0, 2, "glc", Y)))
    return dict(ctx=ctx, P=P, H=H, A=A, G=G, X=X, Y=Y, m=m)


def test_bonds_and_shape(glyco):
    P, ctx = glyco["P"], glyco["ctx"]
    assert bonds(glyco["H"]) == frozenset()
    assert bonds(P) == {("atp", glyco["X"]), ("glc", glyco["Y"])}
    assert proc_well_formed(P, ctx) == []
    assert proc_shape(glyco["A"]) is glyco["A"].shape
    assert len(leaves(proc_shape(P))) == 3


def test_bond_orders_its_ends():
    b = Bond(5, 2, "a", face_x(0))
    assert (b.u, b.v) == (2, 5)
    with pytest.raises(ProcessError):
        Bond(1, 1, "a", face_x(0))


def test_compound_validation():
    a, b = unit(0, (0, 0, 0)), unit(1, (1, 0, 0))
    with pytest.raises(ProcessError):
        CompoundProcess((a,), ())
    with pytest.raises(ProcessError):
        CompoundProcess((a, b, unit(2, (5, 0, 0))), (Bond(0, 1, "x", face_x(0.5)),))
    with pytest.raises(ProcessError):
        CompoundProcess((a, b), (Bond(0, 7, "x", face_x(0.5)),))


def test_well_formedness_reports():
    a, b = unit(0, (0, 0, 0), v=(1, 0, 0)), unit(1, (1, 0, 0))
    P = CompoundProcess((a, b), (Bond(0, 1, "x", face_x(0.5)),))
    assert any("different velocities" in m for m in proc_well_formed(P))
    off = BasicProcess(a.shape, Prefix(Channel(Name("s"), face_x(3.0)), NIL), 0)
    assert any("not on the boundary" in m for m in proc_well_formed(off))
    c = unit(1, (0.5, 0, 0))
    Q = CompoundProcess((unit(0, (0, 0, 0)), c), (Bond(0, 1, "x", face_x(0.5)),))
    assert any("interpenetrate" in m for m in proc_well_formed(Q))


def test_delay():
    p = unit(0, (0, 0, 0), NIL, (1, 0, 0))
    q = proc_delay(p, 2.0)
    assert q.shape.ref == (2.0, 0.0, 0.0) and q.behaviour == NIL
    a, b = unit(0, (0, 0, 0), v=(1, 0, 0)), unit(1, (1, 0, 0), v=(1, 0, 0))
    P = CompoundProcess((a, b), (Bond(0, 1, "x", face_x(0.5)),))
    Q = proc_delay(P, 1.0)
    assert same_points(Q.bonds[0].surface, face_x(1.5))
    urgent = unit(0, (0, 0, 0), Delay(0, NIL))
    assert proc_delay(urgent, 0.1) is None
    assert proc_delay(urgent, 0.0) == urgent
    with pytest.raises(ValueError):
        proc_delay(p, -1)


def test_channel_actions_and_filtering(data_dir, glyco):
    ctx = glyco["ctx"]
    hex_shape = BasicShape(ConvexPolytope.box((2, 2, 2)), 10.0, (3, 0, 0))
    H = BasicProcess(hex_shape, Const("HEX"), 0)
    acts = proc_channel_actions(H, ctx)
    assert sorted(str(a.channel.name) for a in acts) == ["atp", "glc"]
    assert any(same_points(a.channel.surface, face_x(4.0)) for a in acts)
    assert proc_channel_actions(unit(0, (0, 0, 0)), ctx) == []
    # a site fully covered by the bond partner disappears
    site = Channel(Name("s"), face_x(0.5))
    a = unit(0, (0, 0, 0), Prefix(site, NIL))
    b = unit(1, (1, 0, 0), NIL)
    assert len(proc_channel_actions(a)) == 1
    P = CompoundProcess((a, b), (Bond(0, 1, "x", face_x(0.5)),))
    assert proc_channel_actions(P) == []


def test_split_actions():
    c1, c2 = Channel(Name("a"), face_x(0.5)), Channel(Name("b"), face_x(-0.5))
    w = proc_split_actions(unit(0, (2, 0, 0), Omega(c1, NIL)))
    assert len(w) == 1 and w[0].kind == OMEGA
    assert same_points(w[0].channel.surface, face_x(2.5))
    r = proc_split_actions(unit(0, (0, 0, 0), Rho((c1, c2), NIL)))
    assert sorted(a.kind for a in r) == [RHO, RHO]
    assert proc_split_actions(unit(0, (0, 0, 0))) == []


def test_reaction_sequence(glyco):
    P, ctx, X, Y = glyco["P"], glyco["ctx"], glyco["X"], glyco["Y"]
    assert can_complete_reaction(P, ctx)
    path = reaction_path(P, ctx)
    assert [b.name for b, _ in path] == ["atp", "glc"]
    R = path[-1][1]
    assert all(a.kind != RHO for a in proc_split_actions(R, ctx))
    assert {n.pid: n.behaviour for n in R.nodes} == {0: Const("HEX"), 1: Const("ADP"), 2: Const("G6P")}
    assert reaction_channel_sets(P, ctx) == [frozenset({("atp", X), ("glc", Y)})]
    # the split on the first bond alone keeps the other request pending
    P1 = sync_split(P, RHO, ("atp", X), ctx)
    assert P1.node(1).behaviour == Const("ADP")
    X_hg = glyco["m"].surfaces["X_hg"].surface
    assert P1.node(0).behaviour == Rho((Channel(Name("glc"), X_hg),), Const("HEX"))


def test_time_stops_for_a_ready_reaction(glyco):
    P, ctx = glyco["P"], glyco["ctx"]
    assert proc_timed_step(P, 0.5, ctx) is None
    assert proc_timed_step(P, 0.0, ctx) is not None
    # a partner still waiting blocks completion, so time may pass
    slow = CompoundProcess(
        (P.node(0), P.node(1), BasicProcess(P.node(2).shape, Delay(2.0, P.node(2).behaviour), 2)), P.bonds)
    assert not can_complete_reaction(slow, ctx)
    moved = proc_timed_step(slow, 0.5, ctx)
    assert moved is not None and moved.node(2).behaviour == Delay(1.5, P.node(2).behaviour)
    assert proc_timed_step(unit(0, (0, 0, 0)), 3.0) == unit(0, (0, 0, 0))


def test_basic_completability():
    assert can_complete_reaction(unit(0, (0, 0, 0)))
    lone = unit(0, (0, 0, 0), Rho((Channel(Name("a"), face_x(0.5)),), NIL))
    assert not can_complete_reaction(lone)
    assert proc_timed_step(lone, 1.0) is not None


def test_sync_split_requires_both_sides():
    c = Channel(Name("a"), face_x(0.5))
    a = unit(0, (0, 0, 0), Rho((c,), NIL))
    b = unit(1, (1, 0, 0), NIL)
    P = CompoundProcess((a, b), (Bond(0, 1, "a", face_x(0.5)),))
    assert sync_split(P, RHO, ("a", face_x(0.5))) is None
    cw, cbw = Channel(Name("a"), face_x(0.5)), Channel(Name("a", True), face_x(-0.5))
    a, b = unit(0, (0, 0, 0), Omega(cw, Delay(1, NIL))), unit(1, (1, 0, 0), Omega(cbw, NIL))
    P = CompoundProcess((a, b), (Bond(0, 1, "a", face_x(0.5)),))
    Q = sync_split(P, OMEGA, ("a", face_x(0.5)))
    assert Q.node(0).behaviour == Delay(1, NIL) and Q.node(1).behaviour == NIL
    with pytest.raises(ValueError):
        sync_split(P, "chan", ("a", face_x(0.5)))
    with pytest.raises(ProcessError):
        sync_split(P, OMEGA, ("b", face_x(0.5)))


def test_decompose_and_remove(glyco):
    P, X, Y = glyco["P"], glyco["X"], glyco["Y"]
    h, rest = decompose(P, ("atp", X))
    assert {n.pid for n in (h.nodes if isinstance(h, CompoundProcess) else (h,))} == {0, 2}
    assert rest == glyco["A"]
    a, b, c = unit(0, (0, 0, 0)), unit(1, (1, 0, 0)), unit(2, (2, 0, 0))
    chain = CompoundProcess((a, b, c), (Bond(0, 1, "x", face_x(0.5)), Bond(1, 2, "y", face_x(1.5))))
    l, r = decompose(chain, ("y", face_x(1.5)))
    assert (len(l.nodes), r) == (2, c)
    assert remove_bonds(chain, [("x", face_x(0.5)), ("y", face_x(1.5))]) == [a, b, c]
    two = CompoundProcess((a, b), (Bond(0, 1, "x", face_x(0.5)),))
    assert decompose(two, ("x", face_x(0.5))) == (a, b)


def test_congruence():
    a, b, c = unit(0, (0, 0, 0)), unit(1, (1, 0, 0)), unit(2, (2, 0, 0))
    X, Y = face_x(0.5), face_x(1.5)
    P = join(a, b, Bond(0, 1, "x", X))
    Q = join(b, a, Bond(1, 0, "x", X))
    assert proc_congruent(P, Q)
    assert not proc_congruent(P, join(a, b, Bond(0, 1, "z", X)))
    left = join(join(a, b, Bond(0, 1, "x", X)), c, Bond(1, 2, "y", Y))
    right = join(a, join(b, c, Bond(1, 2, "y", Y)), Bond(0, 1, "x", X))
    assert proc_congruent(left, right)
    assert not proc_congruent(left, P)


def test_update_velocity(glyco):
    P = glyco["P"]
    v = (0.25, -1.0, 0.0)
    Q = proc_update_velocity(P, v)
    assert all(n.shape.velocity == v for n in Q.nodes)
    assert Q.bonds == P.bonds
    assert proc_update_velocity(Q, v) == Q
    p = proc_update_velocity(glyco["A"], v)
    assert p.shape.velocity == v and p.behaviour == glyco["A"].behaviour
