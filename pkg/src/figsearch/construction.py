"""Procedural construction steps and their compilation to ontological graphs.

A :class:`Figure` is an ordered list of steps plus a draw list.  Each step
emits a small fragment of concepts and relations; compiling a figure merges
the fragments, tagging every element with the index of the step that first
emitted it.  Equalities given by construction (midpoints, mediatrices,
bisectors) are kept as pending annotations for the inference pass.

Object names live in one namespace.  Points, lines and circles have primitive
names (``A``, ``L_1``); segments are written ``A-B`` and angles ``A-B-C``.
Composite names are normalised so that ``B-A`` and ``A-B`` are the same
segment and ``C-B-A`` is the angle ``A-B-C``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import ClassVar, Iterable, Iterator

from .ontology import (
    RIGHT,
    UNCONSTRAINED,
    AngleValue,
    Concept,
    ConceptKind,
    GraphBuilder,
    OntoGraph,
    PendingEquality,
    RelationKind,
)

BELONGS = RelationKind.BELONGS_TO


class ValidationFailed(Exception):
    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


def is_composite(name: str) -> bool:
    return "-" in name


def split(name: str) -> list[str]:
    return name.split("-")


def segment_name(a: str, b: str) -> str:
    first, second = sorted((a, b))
    return f"{first}-{second}"


def angle_name(a: str, vertex: str, c: str) -> str:
    first, last = sorted((a, c))
    return f"{first}-{vertex}-{last}"


def normalize(name: str) -> str:
    parts = split(name)
    if len(parts) == 2:
        return segment_name(*parts)
    if len(parts) == 3:
        return angle_name(*parts)
    return name


# Slot roles: "new" must be a fresh name; "assert" may also name an existing
# object of the right kind (the step then adds constraints to it); "ref" must
# already exist.  Slot kinds: point, linear (line or segment), circle, pair
# (a composite whose endpoints must exist), angle (three existing points),
# segment (the Segment step's own composite).
@dataclass(frozen=True)
class Step:
    op: ClassVar[str] = ""
    letter: ClassVar[str] = ""
    slots: ClassVar[tuple[tuple[str, str, str], ...]] = ()

    def slot_values(self) -> Iterator[tuple[str, str, str]]:
        for name, role, kind in self.slots:
            yield getattr(self, name), role, kind

    def subjects(self) -> list[str]:
        """Objects this step creates or constrains, primary one first."""
        return [normalize(v) for v, role, _ in self.slot_values() if role in ("new", "assert")]

    def to_record(self) -> dict:
        record = {"op": self.op}
        for f in fields(self):
            record[f.name] = getattr(self, f.name)
        return record


@dataclass(frozen=True)
class FreePoint(Step):
    name: str
    op: ClassVar[str] = "free_point"
    slots = (("name", "new", "point"),)


@dataclass(frozen=True)
class Segment(Step):
    segment: str
    op: ClassVar[str] = "segment"
    letter: ClassVar[str] = "s"
    slots = (("segment", "new", "segment"),)


@dataclass(frozen=True)
class LineThrough(Step):
    name: str
    a: str
    b: str
    op: ClassVar[str] = "line_through"
    letter: ClassVar[str] = "s"
    slots = (("name", "assert", "linear"), ("a", "ref", "point"), ("b", "ref", "point"))


@dataclass(frozen=True)
class Midpoint(Step):
    name: str
    segment: str
    op: ClassVar[str] = "midpoint"
    letter: ClassVar[str] = "m"
    slots = (("name", "new", "point"), ("segment", "ref", "pair"))


@dataclass(frozen=True)
class IntersectLines(Step):
    name: str
    first: str
    second: str
    op: ClassVar[str] = "intersect_lines"
    letter: ClassVar[str] = "i"
    slots = (("name", "assert", "point"), ("first", "ref", "linear"), ("second", "ref", "linear"))


@dataclass(frozen=True)
class PerpendicularAt(Step):
    name: str
    to: str
    at: str
    op: ClassVar[str] = "perpendicular_at"
    letter: ClassVar[str] = "p"
    slots = (("name", "assert", "linear"), ("to", "ref", "linear"), ("at", "ref", "point"))


@dataclass(frozen=True)
class ParallelAt(Step):
    name: str
    to: str
    at: str
    op: ClassVar[str] = "parallel_at"
    letter: ClassVar[str] = "p"
    slots = (("name", "assert", "linear"), ("to", "ref", "linear"), ("at", "ref", "point"))


@dataclass(frozen=True)
class Mediatrix(Step):
    name: str
    segment: str
    op: ClassVar[str] = "mediatrix"
    letter: ClassVar[str] = "e"
    slots = (("name", "new", "linear"), ("segment", "ref", "pair"))


@dataclass(frozen=True)
class Foot(Step):
    name: str
    of: str
    on: str
    op: ClassVar[str] = "foot"
    letter: ClassVar[str] = "f"
    slots = (("name", "assert", "point"), ("of", "ref", "point"), ("on", "ref", "linear"))


@dataclass(frozen=True)
class Circle(Step):
    name: str
    center: str
    through: str
    op: ClassVar[str] = "circle"
    letter: ClassVar[str] = "c"
    slots = (("name", "new", "circle"), ("center", "ref", "point"), ("through", "ref", "point"))


@dataclass(frozen=True)
class IntersectCircles(Step):
    first: str
    second: str
    circle1: str
    circle2: str
    op: ClassVar[str] = "intersect_circles"
    letter: ClassVar[str] = "i"
    slots = (
        ("first", "assert", "point"),
        ("second", "assert", "point"),
        ("circle1", "ref", "circle"),
        ("circle2", "ref", "circle"),
    )


@dataclass(frozen=True)
class IntersectCircleLine(Step):
    first: str
    second: str
    circle: str
    line: str
    op: ClassVar[str] = "intersect_circle_line"
    letter: ClassVar[str] = "i"
    slots = (
        ("first", "assert", "point"),
        ("second", "assert", "point"),
        ("circle", "ref", "circle"),
        ("line", "ref", "linear"),
    )


@dataclass(frozen=True)
class Bisector(Step):
    name: str
    angle: str
    op: ClassVar[str] = "bisector"
    letter: ClassVar[str] = "b"
    slots = (("name", "new", "linear"), ("angle", "ref", "angle"))


@dataclass(frozen=True)
class RightAngle(Step):
    angle: str
    op: ClassVar[str] = "right_angle"
    letter: ClassVar[str] = "r"
    slots = (("angle", "new", "angle"),)


STEP_TYPES: dict[str, type[Step]] = {
    cls.op: cls
    for cls in (
        FreePoint, Segment, LineThrough, Midpoint, IntersectLines, PerpendicularAt,
        ParallelAt, Mediatrix, Foot, Circle, IntersectCircles, IntersectCircleLine,
        Bisector, RightAngle,
    )
}


def step_from_record(record: dict) -> Step:
    """Inverse of :meth:`Step.to_record`; raises KeyError/TypeError on bad input."""
    data = dict(record)
    cls = STEP_TYPES[data.pop("op")]
    names = {f.name for f in fields(cls)}
    if set(data) != names:
        raise TypeError(f"{cls.op} expects fields {sorted(names)}, got {sorted(data)}")
    if not all(isinstance(v, str) and v for v in data.values()):
        raise TypeError(f"{cls.op} fields must be non-empty strings")
    return cls(**data)


@dataclass(frozen=True)
class Figure:
    id: str
    title: str = ""
    steps: tuple[Step, ...] = ()
    draw: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "draw", tuple(self.draw))

    @property
    def draw_index(self) -> int:
        """Pseudo step index used for elements created by the draw list."""
        return len(self.steps)


@dataclass(frozen=True)
class Violation:
    step: int
    message: str

    def __str__(self) -> str:
        return f"step {self.step}: {self.message}"


_KIND_OF_SLOT = {"point": "point", "circle": "circle"}


def _slot_kind_ok(actual: str, slot_kind: str) -> bool:
    if slot_kind == "linear":
        return actual in ("line", "segment")
    return actual == _KIND_OF_SLOT.get(slot_kind, slot_kind)


class _Namespace:
    """Definition tracking shared by validation, lattice building and lowering."""

    def __init__(self):
        self.kinds: dict[str, str] = {}
        self.defined_at: dict[str, int] = {}
        self.ancestors: dict[str, frozenset[str]] = {}

    def define(self, name: str, kind: str, index: int, inputs: Iterable[str] = ()):
        self.kinds[name] = kind
        self.defined_at.setdefault(name, index)
        self.extend(name, inputs)

    def extend(self, name: str, inputs: Iterable[str]):
        acc = set(self.ancestors.get(name, ()))
        for i in inputs:
            acc.add(i)
            acc |= self.ancestors.get(i, frozenset())
        self.ancestors[name] = frozenset(acc)


def step_inputs(step: Step) -> list[str]:
    """Lattice-level inputs: referenced objects, with pairs and angles
    contributing their endpoint points."""
    inputs: list[str] = []
    for value, role, kind in step.slot_values():
        if role != "ref":
            if kind == "segment":
                inputs.extend(split(normalize(value)))
            elif kind == "angle":
                inputs.extend(split(normalize(value)))
            continue
        if kind in ("pair", "angle"):
            inputs.extend(split(normalize(value)))
        else:
            inputs.append(normalize(value))
    return list(dict.fromkeys(inputs))


def check_step(step: Step, ns: _Namespace, index: int) -> list[Violation]:
    """Check one step against the namespace and, if it is legal, record it."""
    out: list[Violation] = []

    def bad(msg):
        out.append(Violation(index, msg))

    auto_points: list[str] = []
    for value, role, kind in step.slot_values():
        name = normalize(value)
        parts = split(name)
        if kind in ("segment", "pair"):
            if len(parts) != 2 or parts[0] == parts[1]:
                bad(f"{value!r} is not a segment name")
                continue
            for p in parts:
                if p not in ns.kinds:
                    if kind == "segment":
                        auto_points.append(p)
                    else:
                        bad(f"undefined point {p!r}")
                elif ns.kinds[p] != "point":
                    bad(f"{p!r} is a {ns.kinds[p]}, not a point")
            if kind == "segment" and name in ns.kinds:
                bad(f"redefinition of {name!r}")
            continue
        if kind == "angle":
            if len(parts) != 3 or len(set(parts)) != 3:
                bad(f"{value!r} is not an angle name")
                continue
            for p in parts:
                if ns.kinds.get(p) != "point":
                    bad(f"undefined point {p!r}")
            if role == "new" and name in ns.kinds:
                bad(f"redefinition of angle {name!r}")
            continue
        if is_composite(name):
            if kind != "linear" or len(parts) != 2:
                bad(f"{value!r} cannot name a {kind}")
            elif ns.kinds.get(name) != "segment":
                bad(f"segment {name!r} is not defined")
            continue
        if role == "ref" or (role == "assert" and name in ns.kinds):
            if name not in ns.kinds:
                bad(f"undefined name {name!r}")
            elif not _slot_kind_ok(ns.kinds[name], kind):
                bad(f"{name!r} is a {ns.kinds[name]}, expected {kind}")
        elif name in ns.kinds:
            bad(f"redefinition of {name!r}")

    if len(set(step.subjects())) != len(step.subjects()):
        bad("the same object is introduced twice")
    inputs = step_inputs(step)
    for subject in step.subjects():
        if subject in inputs and not isinstance(step, Segment):
            bad(f"{subject!r} cannot depend on itself")
        elif subject in ns.kinds:
            for i in inputs:
                if subject in ns.ancestors.get(i, ()):
                    bad(f"constraining {subject!r} by {i!r} creates a circular dependency")
    if out:
        return out

    for p in dict.fromkeys(auto_points):
        ns.define(p, "point", index)
    for value, role, kind in step.slot_values():
        if role == "ref":
            continue
        name = normalize(value)
        if kind == "segment":
            ns.define(name, "segment", index, split(name))
        elif kind == "angle":
            ns.define(name, "angle", index, inputs)
        elif name in ns.kinds:
            ns.extend(name, inputs)
        else:
            ns.define(name, "line" if kind == "linear" else kind, index, inputs)
    return out


def validate(figure: Figure) -> list[Violation]:
    """Return every definition-before-use and redefinition violation."""
    ns = _Namespace()
    violations: list[Violation] = []
    for index, step in enumerate(figure.steps):
        violations.extend(check_step(step, ns, index))
    for name in figure.draw:
        norm = normalize(name)
        parts = split(norm)
        if len(parts) == 2:
            missing = [p for p in parts if ns.kinds.get(p) != "point"]
            if missing or parts[0] == parts[1]:
                violations.append(Violation(figure.draw_index, f"cannot draw {name!r}"))
        elif len(parts) == 1:
            if norm not in ns.kinds:
                violations.append(Violation(figure.draw_index, f"undefined name {name!r} in draw list"))
        elif norm not in ns.kinds:
            violations.append(Violation(figure.draw_index, f"cannot draw {name!r}"))
    return violations


def segments_created(step: Step) -> list[str]:
    """Named segments a step's fragment contains (used when lowering queries)."""
    if isinstance(step, Segment):
        return [normalize(step.segment)]
    if isinstance(step, Midpoint):
        a, b = split(normalize(step.segment))
        return [segment_name(a, b), segment_name(a, step.name), segment_name(step.name, b)]
    if isinstance(step, Foot):
        return [segment_name(step.of, step.name)]
    if isinstance(step, Circle):
        return [segment_name(step.center, step.through)]
    if isinstance(step, RightAngle):
        a, b, c = split(normalize(step.angle))
        return [segment_name(a, b), segment_name(b, c)]
    return []


class _Compiler:
    def __init__(self):
        self.g = GraphBuilder()
        self.anon = 0
        self.step = 0

    def fresh(self) -> str:
        self.anon += 1
        return f"#{self.anon}"

    def point(self, name: str) -> str:
        label = None if name.startswith("#") else name
        return self.g.add_node(name, Concept(ConceptKind.POINT, label), self.step)

    def segment(self, a: str, b: str) -> str:
        node = segment_name(a, b)
        ends = tuple(split(node)) if "#" not in node else tuple(sorted((a, b)))
        label = None if "#" in node else node
        if node not in self.g.nodes:
            self.point(a)
            self.point(b)
            self.g.add_node(node, Concept(ConceptKind.SEGMENT, label, ends=ends), self.step)
        self.belongs(a, node)
        self.belongs(b, node)
        return node

    def line(self, name: str) -> str:
        if is_composite(name):
            return self.segment(*split(normalize(name)))
        return self.g.add_node(name, Concept(ConceptKind.LINE, name), self.step)

    def circle(self, name: str) -> str:
        return self.g.add_node(name, Concept(ConceptKind.CIRCLE, name), self.step)

    def angle(self, a: str, vertex: str, c: str, value: AngleValue = UNCONSTRAINED) -> str:
        node = angle_name(a, vertex, c)
        first, last = sorted((a, c))
        existing = self.g.nodes.get(node)
        payload = Concept(
            ConceptKind.ANGLE,
            None if "#" in node else node,
            value,
            ends=(first, vertex, last),
        )
        if existing is None:
            self.g.add_node(node, payload, self.step)
        elif existing.angle != value and value != UNCONSTRAINED:
            self.g.replace_node(node, payload)
        for p in (a, vertex, c):
            self.belongs(p, node)
        return node

    def belongs(self, src: str, dst: str):
        self.g.add_relation(src, dst, BELONGS, self.step)

    def relate(self, src: str, dst: str, kind: RelationKind):
        self.g.add_relation(src, dst, kind, self.step)

    def equal(self, x: str, y: str):
        self.g.pending.append(PendingEquality(x, y, self.step))

    def emit(self, step: Step):
        if isinstance(step, FreePoint):
            self.point(step.name)
        elif isinstance(step, Segment):
            self.segment(*split(normalize(step.segment)))
        elif isinstance(step, LineThrough):
            line = self.line(step.name)
            self.belongs(step.a, line)
            self.belongs(step.b, line)
        elif isinstance(step, Midpoint):
            a, b = split(normalize(step.segment))
            m = self.point(step.name)
            self.segment(a, b)
            self.belongs(m, segment_name(a, b))
            self.equal(self.segment(a, m), self.segment(m, b))
        elif isinstance(step, IntersectLines):
            p = self.point(step.name)
            self.belongs(p, self.line(step.first))
            self.belongs(p, self.line(step.second))
        elif isinstance(step, PerpendicularAt):
            line, other = self.line(step.name), self.line(step.to)
            self.relate(line, other, RelationKind.IS_PERPENDICULAR_TO)
            self.belongs(step.at, line)
            self.belongs(step.at, other)
        elif isinstance(step, ParallelAt):
            line, other = self.line(step.name), self.line(step.to)
            self.relate(line, other, RelationKind.IS_PARALLEL_TO)
            self.belongs(step.at, line)
        elif isinstance(step, Mediatrix):
            a, b = split(normalize(step.segment))
            line = self.line(step.name)
            m = self.point(self.fresh())
            ab = self.segment(a, b)
            self.belongs(m, ab)
            self.belongs(m, line)
            self.equal(self.segment(a, m), self.segment(m, b))
            self.relate(line, ab, RelationKind.IS_PERPENDICULAR_TO)
        elif isinstance(step, Foot):
            f = self.point(step.name)
            on = self.line(step.on)
            self.belongs(f, on)
            self.relate(self.segment(step.of, f), on, RelationKind.IS_PERPENDICULAR_TO)
        elif isinstance(step, Circle):
            c = self.circle(step.name)
            self.relate(step.center, c, RelationKind.IS_CENTER_OF)
            self.belongs(step.through, c)
            self.relate(self.segment(step.center, step.through), c, RelationKind.IS_RADIUS_OF)
        elif isinstance(step, IntersectCircles):
            for name in (step.first, step.second):
                p = self.point(name)
                self.belongs(p, self.circle(step.circle1))
                self.belongs(p, self.circle(step.circle2))
        elif isinstance(step, IntersectCircleLine):
            line = self.line(step.line)
            for name in (step.first, step.second):
                p = self.point(name)
                self.belongs(p, step.circle)
                self.belongs(p, line)
        elif isinstance(step, Bisector):
            a, b, c = split(normalize(step.angle))
            line = self.line(step.name)
            d = self.point(self.fresh())
            self.angle(a, b, c)
            self.belongs(d, line)
            self.belongs(b, line)
            self.equal(self.angle(a, b, d), self.angle(d, b, c))
        elif isinstance(step, RightAngle):
            a, b, c = split(normalize(step.angle))
            ab, bc = self.segment(a, b), self.segment(b, c)
            node = self.angle(a, b, c, RIGHT)
            self.belongs(ab, node)
            self.belongs(bc, node)
        else:  # pragma: no cover
            raise TypeError(f"unknown step {step!r}")


def compile_steps(figure: Figure, upto: int | None = None) -> OntoGraph:
    """Compile the first ``upto`` steps (all by default) without checking."""
    compiler = _Compiler()
    steps = figure.steps if upto is None else figure.steps[:upto]
    for index, step in enumerate(steps):
        compiler.step = index
        compiler.emit(step)
    if upto is None or upto >= len(figure.steps):
        compiler.step = figure.draw_index
        for name in figure.draw:
            parts = split(normalize(name))
            if len(parts) == 2:
                compiler.segment(*parts)
    return compiler.g.build()


def compile_figure(figure: Figure) -> OntoGraph:
    """Compile a validated figure to its pre-inference ontological graph.

    Elements created by the draw list (segments between existing points that
    no step produced) carry the pseudo step index ``len(figure.steps)``.
    """
    violations = validate(figure)
    if violations:
        raise ValidationFailed(violations)
    return compile_steps(figure)
