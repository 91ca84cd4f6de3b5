"""The ``.shc`` model format: parser, validator, printer and network builder.

A model is a sequence of statements (newlines are not significant)::

    const t_h = 0.75
    surface X_ha = polygon [(1,-0.5,-0.5), (1,0.5,-0.5), (1,0.5,0.5), (1,-0.5,0.5)]
    surface X_ah = boundary S_a          # every face of a declared shape
    surface F    = face S_a 2            # one face, by index
    shape S_h = box (2, 2, 2) mass 10
    shape W   = polytope [(..), ...] mass inf
    behaviour HEX = <atp, X_ha>.HA + <glc, X_hg>.HG
    behaviour AH  = w(~atp, X_ah).ATP + eps(t_a).rho{<~atp, X_ah>}.ADP
    process hex1 = S_h @ (0, 0, 0) vel (0, 0, 0) runs HEX
    steer hex1 scripted [(0.75, (0, 0, 0))]
    steer default zero
    config delta = 1.0

Surfaces and shape vertices are local coordinates relative to the shape's
reference point.  Numeric constants may be used wherever a number is expected
and are substituted while parsing.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any

from .behaviour import (
    NIL,
    Behaviour,
    BehaviourError,
    Channel,
    Const,
    Delay,
    Name,
    Nil,
    Omega,
    Prefix,
    Rho,
    Sum,
    validate_behaviour,
)
from .collision import tunneling_violations
from .geometry import (
    DEFAULT_TOL,
    BasicShape,
    ConvexPolytope,
    GeometryError,
    Patch,
    Surface,
    Tolerances,
    Vec3,
    vec3,
)
from .network import EvolutionConfig, Network, net_well_formed
from .process import BasicProcess, Context
from .steer import Brownian, Constant, Gravity, Keep, Rule, Scripted, SteerSpec, Zero

STATEMENTS = ("const", "surface", "shape", "behaviour", "process", "steer", "config")
RESERVED = set(STATEMENTS) | {"nil", "rho", "eps", "inf", "default"}
CONFIG_KEYS = ("delta", "seed", "policy", "p_omega", "max_steps", "max_time", "tunneling_guard", "omega_script")


class ParseError(Exception):
    def __init__(self, line: int, col: int, message: str, snippet: str = ""):
        super().__init__(f"{line}:{col}: {message}")
        self.line, self.col, self.message, self.snippet = line, col, message, snippet

    def __str__(self):
        s = f"line {self.line}, column {self.col}: {self.message}"
        if self.snippet:
            s += f"\n    {self.snippet}\n    {' ' * max(self.col - 1, 0)}^"
        return s


# ------------------------------------------------------------------ model value

@dataclass(frozen=True)
class SurfaceDecl:
    name: str
    kind: str                       # polygon | point | segment | boundary | face
    points: tuple[Vec3, ...] = ()
    shape: str | None = None
    index: int | None = None
    surface: Surface = field(default=None, compare=False, repr=False)
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class ShapeDecl:
    name: str
    kind: str                       # box | polytope
    size: Vec3 | None = None
    vertices: tuple[Vec3, ...] = ()
    mass: float = 1.0
    polytope: ConvexPolytope = field(default=None, compare=False, repr=False)
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class ProcessDecl:
    name: str
    shape: str
    pos: Vec3
    vel: Vec3
    behaviour: Behaviour
    line: int = field(default=0, compare=False, repr=False)


@dataclass
class ModelFile:
    constants: dict[str, float] = field(default_factory=dict)
    surfaces: dict[str, SurfaceDecl] = field(default_factory=dict)
    shapes: dict[str, ShapeDecl] = field(default_factory=dict)
    behaviours: dict[str, Behaviour] = field(default_factory=dict)
    processes: list[ProcessDecl] = field(default_factory=list)
    steer: dict[str, Rule] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    lines: dict[str, int] = field(default_factory=dict, compare=False, repr=False)


# ------------------------------------------------------------------ tokens

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[()\[\]{}<>,.+\-~=@])
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str   # num | ident | punct | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    out = []
    pos, line, lstart = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(line, pos - lstart + 1, f"unexpected character {text[pos]!r}", _line_of(text, line))
        kind = m.lastgroup
        s = m.group()
        if kind in ("num", "ident", "punct"):
            out.append(Tok(kind, s, line, pos - lstart + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            lstart = pos + s.rindex("\n") + 1
        pos = m.end()
    out.append(Tok("eof", "", line, pos - lstart + 1))
    return out


def _line_of(text: str, line: int) -> str:
    lines = text.split("\n")
    return lines[line - 1] if 0 < line <= len(lines) else ""


# ------------------------------------------------------------------ parser

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.m = ModelFile()

    # token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: Tok | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError(t.line, t.col, msg, _line_of(self.text, t.line))

    def at(self, text: str) -> bool:
        return self.tok.kind != "eof" and self.tok.text == text and self.tok.kind != "num"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self, what: str = "a name") -> str:
        if self.tok.kind != "ident":
            raise self.error(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t.text

    # values
    def number(self) -> float:
        sign = 1.0
        if self.accept("-"):
            sign = -1.0
        elif self.accept("+"):
            pass
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return sign * float(t.text)
        if t.kind == "ident":
            if t.text == "inf":
                self.i += 1
                return sign * math.inf
            if t.text in self.m.constants:
                self.i += 1
                return sign * self.m.constants[t.text]
            raise self.error(f"unknown constant {t.text!r}")
        raise self.error(f"expected a number, found {t.text or 'end of input'!r}")

    def integer(self) -> int:
        t = self.tok
        x = self.number()
        if not math.isfinite(x) or x != int(x):
            raise self.error("expected an integer", t)
        return int(x)

    def vector(self) -> Vec3:
        t = self.expect("(")
        a = self.number()
        self.expect(",")
        b = self.number()
        self.expect(",")
        c = self.number()
        self.expect(")")
        try:
            return vec3((a, b, c))
        except GeometryError as exc:
            raise self.error(str(exc), t) from None

    def vector_list(self) -> tuple[Vec3, ...]:
        self.expect("[")
        out = [self.vector()]
        while self.accept(","):
            out.append(self.vector())
        self.expect("]")
        return tuple(out)

    # statements
    def parse(self) -> ModelFile:
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind != "ident" or t.text not in STATEMENTS:
                raise self.error(f"expected a statement ({', '.join(STATEMENTS)}), found {t.text!r}")
            self.i += 1
            try:
                getattr(self, "st_" + t.text)(t)
            except (GeometryError, BehaviourError, ValueError, TypeError) as exc:
                if isinstance(exc, ParseError):
                    raise
                raise ParseError(t.line, t.col, f"invalid {t.text}: {exc}", _line_of(self.text, t.line)) from None
        return self.m

    def _fresh(self, table: dict, name: str, tok: Tok, what: str):
        if name in RESERVED:
            raise self.error(f"{name!r} is a reserved word", tok)
        if name in table:
            raise self.error(f"{what} {name!r} declared twice", tok)

    def st_const(self, t):
        nt = self.tok
        name = self.ident("a constant name")
        self._fresh(self.m.constants, name, nt, "constant")
        self.expect("=")
        self.m.constants[name] = self.number()

    def st_surface(self, t):
        nt = self.tok
        name = self.ident("a surface name")
        self._fresh(self.m.surfaces, name, nt, "surface")
        self.expect("=")
        kt = self.tok
        kind = self.ident("a surface kind")
        if kind in ("polygon", "point", "segment"):
            pts = self.vector_list()
            want = {"point": (1, 1), "segment": (2, 2), "polygon": (3, 10 ** 9)}[kind]
            if not want[0] <= len(pts) <= want[1]:
                raise self.error(f"a {kind} needs {'at least 3' if kind == 'polygon' else want[0]} vertices", kt)
            patch = Patch.make(pts, DEFAULT_TOL.eps_len)
            if patch.kind != kind:
                raise self.error(f"vertices describe a {patch.kind}, not a {kind}", kt)
            if kind == "polygon" and len(patch.vertices) != len(pts):
                raise self.error("polygon vertices must be the extreme points of a convex polygon", kt)
            surf = Surface((patch,), name)
            decl = SurfaceDecl(name, kind, pts, surface=surf, line=t.line)
        elif kind in ("boundary", "face"):
            st = self.tok
            sname = self.ident("a shape name")
            if sname not in self.m.shapes:
                raise self.error(f"unknown shape {sname!r}", st)
            poly = self.m.shapes[sname].polytope
            if kind == "boundary":
                surf = Surface(poly.face_patches, name)
                decl = SurfaceDecl(name, kind, shape=sname, surface=surf, line=t.line)
            else:
                it = self.tok
                idx = self.integer()
                if not 0 <= idx < len(poly.face_patches):
                    raise self.error(f"shape {sname!r} has faces 0..{len(poly.face_patches) - 1}", it)
                surf = Surface((poly.face_patches[idx],), name)
                decl = SurfaceDecl(name, kind, shape=sname, index=idx, surface=surf, line=t.line)
        else:
            raise self.error(f"unknown surface kind {kind!r} (polygon, point, segment, boundary, face)", kt)
        self.m.surfaces[name] = decl

    def st_shape(self, t):
        nt = self.tok
        name = self.ident("a shape name")
        self._fresh(self.m.shapes, name, nt, "shape")
        self.expect("=")
        kt = self.tok
        kind = self.ident("a shape kind")
        if kind == "box":
            size = self.vector()
            self.expect("mass")
            mass = self.number()
            poly = ConvexPolytope.box(size)
            decl = ShapeDecl(name, kind, size=size, mass=mass, polytope=poly, line=t.line)
        elif kind == "polytope":
            verts = self.vector_list()
            self.expect("mass")
            mass = self.number()
            poly = ConvexPolytope(verts)
            decl = ShapeDecl(name, kind, vertices=verts, mass=mass, polytope=poly, line=t.line)
        else:
            raise self.error(f"unknown shape kind {kind!r} (box, polytope)", kt)
        if not (mass > 0):
            raise self.error("mass must be positive", kt)
        if not poly.contains((0.0, 0.0, 0.0)):
            raise self.error("the reference point (local origin) must lie inside the shape", kt)
        self.m.shapes[name] = decl

    def st_behaviour(self, t):
        nt = self.tok
        name = self.ident("a behaviour name")
        self._fresh(self.m.behaviours, name, nt, "behaviour")
        if name in ("w",):
            raise self.error("'w' is reserved for weak splits", nt)
        self.expect("=")
        self.m.behaviours[name] = self.expr()
        self.m.lines[f"behaviour {name}"] = t.line

    def st_process(self, t):
        nt = self.tok
        name = self.ident("a process name")
        if any(p.name == name for p in self.m.processes) or name in RESERVED:
            raise self.error(f"process {name!r} declared twice or reserved", nt)
        self.expect("=")
        st = self.tok
        sname = self.ident("a shape name")
        if sname not in self.m.shapes:
            raise self.error(f"unknown shape {sname!r}", st)
        self.expect("@")
        pos = self.vector()
        self.expect("vel")
        v = self.vector()
        self.expect("runs")
        b = self.expr()
        self.m.processes.append(ProcessDecl(name, sname, pos, v, b, line=t.line))

    def st_steer(self, t):
        nt = self.tok
        target = self.ident("a process name or 'default'")
        if target != "default" and not any(p.name == target for p in self.m.processes):
            raise self.error(f"unknown process {target!r}", nt)
        if target in self.m.steer:
            raise self.error(f"steer for {target!r} given twice", nt)
        kt = self.tok
        kind = self.ident("a steer rule")
        rule: Rule
        if kind == "keep":
            rule = Keep()
        elif kind == "zero":
            rule = Zero()
        elif kind == "constant":
            rule = Constant(self.vector())
        elif kind == "gravity":
            rule = Gravity(self.vector())
        elif kind == "brownian":
            seed = self.integer()
            scale = 1.0
            if self.tok.kind == "num" or self.at("-") or (self.tok.kind == "ident" and self.tok.text in self.m.constants):
                scale = self.number()
            rule = Brownian(seed, scale)
        elif kind == "scripted":
            self.expect("[")
            ents = []
            if not self.at("]"):
                while True:
                    self.expect("(")
                    tt = self.number()
                    self.expect(",")
                    v = self.vector()
                    self.expect(")")
                    ents.append((tt, v))
                    if not self.accept(","):
                        break
            self.expect("]")
            rule = Scripted(tuple(ents))
        else:
            raise self.error(f"unknown steer rule {kind!r}", kt)
        self.m.steer[target] = rule

    def st_config(self, t):
        kt = self.tok
        key = self.ident("a config key")
        if key not in CONFIG_KEYS:
            raise self.error(f"unknown config key {key!r} ({', '.join(CONFIG_KEYS)})", kt)
        self.expect("=")
        vt = self.tok
        if key in ("seed", "max_steps"):
            val: Any = self.integer()
        elif key == "policy":
            val = self.ident("canonical or random")
            if val not in ("canonical", "random"):
                raise self.error("policy must be canonical or random", vt)
        elif key == "tunneling_guard":
            val = self.ident("true or false")
            if val not in ("true", "false"):
                raise self.error("expected true or false", vt)
            val = val == "true"
        elif key == "omega_script":
            self.expect("[")
            ents = []
            if not self.at("]"):
                while True:
                    self.expect("(")
                    tt = self.number()
                    self.expect(",")
                    ents.append((tt, self.ident("a bond name")))
                    self.expect(")")
                    if not self.accept(","):
                        break
            self.expect("]")
            val = tuple(ents)
        else:
            val = self.number()
        self.m.config[key] = val

    # behaviour expressions
    def expr(self) -> Behaviour:
        left = self.term()
        while self.accept("+"):
            left = Sum(left, self.term())
        return left

    def _cont(self) -> Behaviour:
        return self.term() if self.accept(".") else NIL

    def surface_ref(self) -> Surface:
        t = self.tok
        name = self.ident("a surface name")
        if name not in self.m.surfaces:
            raise self.error(f"unknown surface {name!r}", t)
        return self.m.surfaces[name].surface

    def name_ref(self) -> Name:
        co = self.accept("~")
        return Name(self.ident("a channel name"), co)

    def channel(self) -> Channel:
        self.expect("<")
        n = self.name_ref()
        self.expect(",")
        s = self.surface_ref()
        self.expect(">")
        return Channel(n, s)

    def term(self) -> Behaviour:
        t = self.tok
        if self.at("<"):
            c = self.channel()
            return Prefix(c, self._cont())
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            nxt = self.toks[self.i + 1]
            if t.text == "nil":
                self.i += 1
                return NIL
            if t.text == "w" and nxt.text == "(":
                self.i += 2
                n = self.name_ref()
                self.expect(",")
                s = self.surface_ref()
                self.expect(")")
                return Omega(Channel(n, s), self._cont())
            if t.text == "rho" and nxt.text == "{":
                self.i += 2
                chans = [self.channel()]
                while self.accept(","):
                    chans.append(self.channel())
                self.expect("}")
                return Rho(tuple(chans), self._cont())
            if t.text == "eps" and nxt.text == "(":
                self.i += 2
                d = self.number()
                self.expect(")")
                try:
                    return Delay(d, self._cont())
                except BehaviourError as exc:
                    raise self.error(str(exc), t) from None
            if t.text in RESERVED:
                raise self.error(f"unexpected keyword {t.text!r} in a behaviour", t)
            self.i += 1
            return Const(t.text)
        raise self.error(f"expected a behaviour, found {t.text or 'end of input'!r}")


def parse_model(text: str | bytes) -> ModelFile:
    """Parse ``.shc`` source; raises `ParseError` with a position on any malformed input."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(1, exc.start + 1, "input is not valid UTF-8") from None
    try:
        return _Parser(text).parse()
    except RecursionError:
        raise ParseError(1, 1, "expression nested too deeply") from None


# ------------------------------------------------------------------ printer

def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _vec(v) -> str:
    return "(" + ", ".join(_num(c) for c in v) + ")"


def _surf_name(s: Surface) -> str:
    if not s.label:
        raise ValueError("cannot print an unnamed surface")
    return s.label


def format_behaviour(b: Behaviour) -> str:
    def cont(c):
        return "" if isinstance(c, Nil) else "." + atom(c)

    def atom(x):
        return f"({fmt(x)})" if isinstance(x, Sum) else fmt(x)

    def chan(c: Channel):
        return f"<{c.name}, {_surf_name(c.surface)}>"

    def fmt(x):
        if isinstance(x, Nil):
            return "nil"
        if isinstance(x, Prefix):
            return chan(x.channel) + cont(x.cont)
        if isinstance(x, Omega):
            return f"w({x.channel.name}, {_surf_name(x.channel.surface)})" + cont(x.cont)
        if isinstance(x, Rho):
            return "rho{" + ", ".join(chan(c) for c in x.channels) + "}" + cont(x.cont)
        if isinstance(x, Delay):
            return f"eps({_num(x.t)})" + cont(x.cont)
        if isinstance(x, Sum):
            r = f"({fmt(x.right)})" if isinstance(x.right, Sum) else fmt(x.right)
            return f"{fmt(x.left)} + {r}"
        if isinstance(x, Const):
            return x.name
        raise TypeError(x)

    return fmt(b)


def _rule(r: Rule) -> str:
    if isinstance(r, Keep):
        return "keep"
    if isinstance(r, Zero):
        return "zero"
    if isinstance(r, Constant):
        return "constant " + _vec(r.v)
    if isinstance(r, Gravity):
        return "gravity " + _vec(r.g)
    if isinstance(r, Brownian):
        return f"brownian {r.seed} {_num(r.scale)}"
    if isinstance(r, Scripted):
        return "scripted [" + ", ".join(f"({_num(t)}, {_vec(v)})" for t, v in r.entries) + "]"
    raise TypeError(r)


def print_model(m: ModelFile) -> str:
    out = []
    for k, v in m.constants.items():
        out.append(f"const {k} = {_num(v)}")
    # surfaces that reference shapes come after those shapes
    emitted_shapes: set[str] = set()
    pending_shapes = dict(m.shapes)
    for name, d in m.surfaces.items():
        if d.shape is not None and d.shape not in emitted_shapes:
            for sn in list(pending_shapes):
                out.append(_shape_line(pending_shapes.pop(sn)))
                emitted_shapes.add(sn)
                if sn == d.shape:
                    break
        if d.kind in ("polygon", "point", "segment"):
            out.append(f"surface {name} = {d.kind} [" + ", ".join(_vec(p) for p in d.points) + "]")
        elif d.kind == "boundary":
            out.append(f"surface {name} = boundary {d.shape}")
        else:
            out.append(f"surface {name} = face {d.shape} {d.index}")
    for sn in pending_shapes.values():
        out.append(_shape_line(sn))
    for name, b in m.behaviours.items():
        out.append(f"behaviour {name} = {format_behaviour(b)}")
    for p in m.processes:
        out.append(f"process {p.name} = {p.shape} @ {_vec(p.pos)} vel {_vec(p.vel)} runs {format_behaviour(p.behaviour)}")
    for k, r in m.steer.items():
        out.append(f"steer {k} {_rule(r)}")
    for k, v in m.config.items():
        if isinstance(v, bool):
            s = "true" if v else "false"
        elif k == "omega_script":
            s = "[" + ", ".join(f"({_num(t)}, {n})" for t, n in v) + "]"
        elif isinstance(v, str):
            s = v
        elif isinstance(v, int):
            s = str(v)
        else:
            s = _num(v)
        out.append(f"config {k} = {s}")
    return "\n".join(out) + ("\n" if out else "")


def _shape_line(d: ShapeDecl) -> str:
    if d.kind == "box":
        return f"shape {d.name} = box {_vec(d.size)} mass {_num(d.mass)}"
    return f"shape {d.name} = polytope [" + ", ".join(_vec(v) for v in d.vertices) + f"] mass {_num(d.mass)}"


# ------------------------------------------------------------------ building and validation

@dataclass
class Built:
    network: Network
    steer: SteerSpec
    ctx: Context
    config: EvolutionConfig
    names: dict[int, str]
    ids: dict[str, int]


def evolution_config(m: ModelFile, **overrides) -> EvolutionConfig:
    kw = {k: v for k, v in m.config.items()}
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return EvolutionConfig(**kw)


def build_network(m: ModelFile, tol: Tolerances = DEFAULT_TOL, **overrides) -> Built:
    """Instantiate the model: process ids follow declaration order."""
    procs, names, ids = [], {}, {}
    for i, p in enumerate(m.processes):
        sd = m.shapes[p.shape]
        shape = BasicShape(sd.polytope, sd.mass, p.pos, p.vel)
        procs.append(BasicProcess(shape, p.behaviour, i))
        names[i], ids[p.name] = p.name, i
    rules = {ids[k]: r for k, r in m.steer.items() if k != "default"}
    steer = SteerSpec(rules, m.steer.get("default", Keep()))
    ctx = Context(dict(m.behaviours), tol)
    return Built(Network(tuple(procs)), steer, ctx, evolution_config(m, **overrides), names, ids)


def validate_model(m: ModelFile, tol: Tolerances = DEFAULT_TOL, **overrides) -> list[str]:
    """All problems found in a parsed model, each prefixed with its line (empty = valid)."""
    out: list[str] = []
    env = dict(m.behaviours)
    for name, b in m.behaviours.items():
        line = m.lines.get(f"behaviour {name}", 0)
        for msg in validate_behaviour(b, env, tol.eps_len):
            out.append(f"line {line}: behaviour {name}: {msg}")
    for p in m.processes:
        for msg in validate_behaviour(p.behaviour, env, tol.eps_len):
            out.append(f"line {p.line}: process {p.name}: {msg}")
    if out:
        return sorted(set(out), key=out.index)
    try:
        built = build_network(m, tol, **overrides)
    except (ValueError, GeometryError) as exc:
        return [f"model: {exc}"]
    by_id = {i: p for i, p in enumerate(m.processes)}
    for msg in net_well_formed(built.network, built.ctx):
        out.append(_locate(msg, by_id, built.names))
    cfg = built.config
    if cfg.tunneling_guard:
        shapes = {p.pid: p.shape for p in built.network.processes}
        for i, j, d, lim in tunneling_violations(shapes, cfg.delta):
            out.append(f"line {by_id[j].line}: processes {built.names[i]} and {built.names[j]} move {d:.6g} "
                       f"apart per step of {cfg.delta:g}, more than the extent {lim:.6g} (tunneling guard)")
    return out


def _locate(msg: str, by_id, names) -> str:
    m = re.match(r"processes (\d+) and (\d+) (.*)", msg)
    if m:
        i, j = int(m.group(1)), int(m.group(2))
        return f"line {by_id[j].line}: processes {names[i]} and {names[j]} {m.group(3)}"
    m = re.match(r"process (\d+): (.*)", msg)
    if m:
        i = int(m.group(1))
        return f"line {by_id[i].line}: process {names[i]}: {m.group(2)}"
    return msg
