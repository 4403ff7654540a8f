"""Controlled query language: tokenizer, parser and lowering to a Figure.

The grammar (terminals as regular expressions)::

    query  -> sents drawvp PERIOD | sents PERIOD | drawvp PERIOD
    drawvp -> DRAW ents
    sents  -> sent SEMICOLON sents | sent
    sent   -> nps vrb pps | nps vrb
    ent    -> INST LABEL | LABEL
    vrb    -> VERB ADJE | VERB NOUN | VERB
    pps    -> ents pents | pents | ents
    pents  -> pent pents | pent
    pent   -> PREP ents
    ents   -> ent AND ents | ent
    nps    -> ents

A semicolon may also separate the last sentence from ``draw``, and the
article ``the`` may precede a noun or an instance.  Twelve sentence forms are
recognised::

    (a) line ? intersects line ? at point ?
    (b) point ? is the midpoint of segment ?
    (c) line ? is perpendicular to line ? at point ?
    (d) point ? is the foot of point ? on line ?
    (e) line ? is the mediatrix of segment ?
    (f) line ? is parallel to line ? at point ?
    (g) line ? connects points ?, ?
    (h) circle ? is defined by center ? and point ?
    (i) points ?, ? are the intersections of circles ?, ?
    (j) points ?, ? are the intersections of circle ? and line ?
    (k) line ? is the bisector of angle ?
    (l) angle ? is right

Every form has a plural reading in which the arguments of each position are
listed one after the other and distributed over the subjects in order.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .construction import (
    Bisector,
    Circle,
    Figure,
    Foot,
    FreePoint,
    IntersectCircleLine,
    IntersectCircles,
    IntersectLines,
    LineThrough,
    Mediatrix,
    Midpoint,
    ParallelAt,
    PerpendicularAt,
    RightAngle,
    Segment,
    Step,
    _Namespace,
    check_step,
    normalize,
    segments_created,
    split,
)


class TokenKind(enum.Enum):
    NOUN = "NOUN"
    INST = "INST"
    VERB = "VERB"
    ADJE = "ADJE"
    SEMICOLON = "SEMICOLON"
    AND = "AND"
    DRAW = "DRAW"
    PREP = "PREP"
    PERIOD = "PERIOD"
    LABEL = "LABEL"
    THE = "THE"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    span: tuple[int, int]


class CQLError(Exception):
    def __init__(self, message: str, span: tuple[int, int]):
        self.message = message
        self.span = span
        super().__init__(f"{message} at {span[0]}..{span[1]}")


class LexError(CQLError):
    pass


class ParseError(CQLError):
    def __init__(self, expected, found: Token | None, span: tuple[int, int]):
        self.expected = frozenset(expected)
        self.found = found
        what = f"{found.kind.value} {found.lexeme!r}" if found else "end of input"
        super().__init__(f"expected {' or '.join(sorted(self.expected))}, found {what}", span)


class ArityError(CQLError):
    pass


class SemanticError(CQLError):
    pass


_WORD_END = r"(?![A-Za-z0-9_])"
LABEL_PATTERN = r"[A-Z]([_]?[0-9]+)?(-[A-Z]([_]?[0-9]+)?)*"

# Listed in priority order for equal-length matches.
_PATTERNS = [
    (TokenKind.NOUN, re.compile(r"(midpoint|foot|mediatrix|intersection|bisector)[s]?" + _WORD_END, re.I)),
    (
        TokenKind.INST,
        re.compile(
            r"(points|segments|lines|angles|circles|centers|point|segment|line|angle|circle|center)"
            + _WORD_END,
            re.I,
        ),
    ),
    (TokenKind.VERB, re.compile(r"(is|are|intersect[s]?|connect[s]?)" + _WORD_END, re.I)),
    (TokenKind.ADJE, re.compile(r"(perpendicular|parallel|defined|right)" + _WORD_END, re.I)),
    (TokenKind.DRAW, re.compile(r"draw" + _WORD_END, re.I)),
    (TokenKind.THE, re.compile(r"the" + _WORD_END, re.I)),
    (TokenKind.AND, re.compile(r",|and" + _WORD_END, re.I)),
    (TokenKind.PREP, re.compile(r"(at|of|by|to|on)" + _WORD_END, re.I)),
    (TokenKind.SEMICOLON, re.compile(r";")),
    (TokenKind.PERIOD, re.compile(r"\.")),
    (TokenKind.LABEL, re.compile(LABEL_PATTERN)),
]


def tokenize(text: str) -> list[Token]:
    """Maximal-munch tokenizer; whitespace separates tokens and is skipped."""
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        best: tuple[int, TokenKind] | None = None
        for kind, pattern in _PATTERNS:
            m = pattern.match(text, pos)
            if m and m.end() > pos and (best is None or m.end() > best[0]):
                best = (m.end(), kind)
        if best is None:
            end = pos + 1
            while end < len(text) and not text[end].isspace() and text[end] not in ",;.":
                end += 1
            raise LexError(f"unrecognised input {text[pos:end]!r}", (pos, end))
        end, kind = best
        lexeme = text[pos:end]
        if kind is not TokenKind.LABEL:
            lexeme = lexeme.lower()
        tokens.append(Token(kind, lexeme, (pos, end)))
        pos = end
    return tokens


@dataclass(frozen=True)
class EntityRef:
    label: str
    inst: str | None
    span: tuple[int, int]

    @property
    def parts(self) -> list[str]:
        return split(self.label)


@dataclass(frozen=True)
class Sentence:
    form: str
    args: dict[str, EntityRef]
    span: tuple[int, int]


@dataclass(frozen=True)
class QueryAst:
    sentences: tuple[Sentence, ...] = ()
    draw: tuple[EntityRef, ...] = ()
    text: str = field(default="", compare=False)


_SINGULAR = {
    "points": "point", "segments": "segment", "lines": "line",
    "angles": "angle", "circles": "circle", "centers": "center",
}


@dataclass
class _RawSentence:
    subjects: list[EntityRef]
    verb: Token
    complement: Token | None
    objects: list[EntityRef]
    preps: list[tuple[Token, list[EntityRef]]]
    span: tuple[int, int]


# form -> (verb family, complement, heads per instance, object slots, [(prep, slots)])
_FORMS = {
    "a": ("intersect", None, ("subject",), ("other",), (("at", ("at",)),)),
    "b": ("is", "midpoint", ("subject",), (), (("of", ("of",)),)),
    "c": ("is", "perpendicular", ("subject",), (), (("to", ("to",)), ("at", ("at",)))),
    "d": ("is", "foot", ("subject",), (), (("of", ("of",)), ("on", ("on",)))),
    "e": ("is", "mediatrix", ("subject",), (), (("of", ("of",)),)),
    "f": ("is", "parallel", ("subject",), (), (("to", ("to",)), ("at", ("at",)))),
    "g": ("connect", None, ("subject",), ("first", "second"), ()),
    "h": ("is", "defined", ("subject",), (), (("by", ("center", "through")),)),
    "i": ("is", "intersection", ("first", "second"), (), (("of", ("circle1", "circle2")),)),
    "k": ("is", "bisector", ("subject",), (), (("of", ("of",)),)),
    "l": ("is", "right", ("subject",), (), ()),
}


def _verb_family(lexeme: str) -> str:
    if lexeme.startswith("intersect"):
        return "intersect"
    if lexeme.startswith("connect"):
        return "connect"
    return "is"


def _complement_word(token: Token | None) -> str | None:
    if token is None:
        return None
    word = token.lexeme
    return word[:-1] if token.kind is TokenKind.NOUN and word.endswith("s") else word


class _Parser:
    def __init__(self, tokens: list[Token], text: str):
        self.tokens = tokens
        self.text = text
        self.pos = 0

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def at(self, *kinds: TokenKind) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind in kinds

    def error(self, expected) -> ParseError:
        tok = self.peek()
        span = tok.span if tok else (len(self.text), len(self.text))
        return ParseError(expected, tok, span)

    def expect(self, *kinds: TokenKind) -> Token:
        if not self.at(*kinds):
            raise self.error(k.value for k in kinds)
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def skip_the(self):
        if self.at(TokenKind.THE):
            self.pos += 1

    def query(self) -> tuple[list[_RawSentence], list[EntityRef]]:
        sentences: list[_RawSentence] = []
        draw: list[EntityRef] = []
        if not self.at(TokenKind.DRAW):
            sentences.append(self.sentence())
            while self.at(TokenKind.SEMICOLON):
                self.pos += 1
                if self.at(TokenKind.DRAW):
                    break
                sentences.append(self.sentence())
        if self.at(TokenKind.DRAW):
            self.pos += 1
            draw = self.ents()
        if not self.at(TokenKind.PERIOD):
            expected = {"PERIOD", "SEMICOLON", "DRAW"} if not draw else {"PERIOD", "AND"}
            raise self.error(expected)
        self.pos += 1
        if self.peek() is not None:
            raise self.error({"end of input"})
        return sentences, draw

    def ent(self) -> tuple[str | None, EntityRef]:
        self.skip_the()
        inst = None
        start = None
        if self.at(TokenKind.INST):
            tok = self.expect(TokenKind.INST)
            inst, start = tok.lexeme, tok.span[0]
        label = self.expect(TokenKind.LABEL)
        span = (start if start is not None else label.span[0], label.span[1])
        return inst, EntityRef(label.lexeme, inst, span)

    def ents(self) -> list[EntityRef]:
        out = []
        current = None
        while True:
            inst, ref = self.ent()
            if inst is not None:
                current = _SINGULAR.get(inst, inst)
            out.append(EntityRef(ref.label, current, ref.span))
            if not self.at(TokenKind.AND):
                return out
            self.pos += 1

    def sentence(self) -> _RawSentence:
        start = self.peek().span[0] if self.peek() else len(self.text)
        subjects = self.ents()
        verb = self.expect(TokenKind.VERB)
        self.skip_the()
        complement = None
        if self.at(TokenKind.ADJE, TokenKind.NOUN):
            complement = self.expect(TokenKind.ADJE, TokenKind.NOUN)
        objects: list[EntityRef] = []
        if self.at(TokenKind.LABEL, TokenKind.INST, TokenKind.THE):
            objects = self.ents()
        preps = []
        while self.at(TokenKind.PREP):
            prep = self.expect(TokenKind.PREP)
            preps.append((prep, self.ents()))
        end = self.tokens[self.pos - 1].span[1]
        return _RawSentence(subjects, verb, complement, objects, preps, (start, end))


def _distribute(group: list[EntityRef], k: int, per: int, what: str, span) -> list[list[EntityRef]]:
    if len(group) != k * per:
        raise ArityError(
            f"{what}: {len(group)} argument(s) cannot be distributed over {k} instance(s) of {per}",
            span,
        )
    return [group[i * per:(i + 1) * per] for i in range(k)]


def _is_linear(ref: EntityRef) -> bool:
    return ref.inst in ("line", "segment") or len(ref.parts) == 2


def _classify(raw: _RawSentence) -> list[Sentence]:
    family = _verb_family(raw.verb.lexeme)
    word = _complement_word(raw.complement)
    form = next(
        (f for f, spec in _FORMS.items() if spec[0] == family and spec[1] == word),
        None,
    )
    if form is None:
        if family == "is":
            tok = raw.complement or raw.verb
            raise ParseError({"ADJE", "NOUN"}, tok, tok.span)
        tok = raw.complement
        raise ParseError({"LABEL", "PREP"}, tok, tok.span)
    _, _, heads, object_slots, prep_slots = _FORMS[form]
    if len(raw.subjects) % len(heads):
        raise ArityError(
            f"{len(raw.subjects)} subject(s) cannot be grouped by {len(heads)}", raw.span
        )
    k = len(raw.subjects) // len(heads)
    groups: list[tuple[tuple[str, ...], list[EntityRef], str]] = []
    if object_slots:
        if not raw.objects:
            raise ParseError({"LABEL", "INST"}, raw.preps[0][0] if raw.preps else None, raw.span)
        groups.append((object_slots, raw.objects, "objects"))
    elif raw.objects:
        ref = raw.objects[0]
        raise ParseError({"PREP"}, Token(TokenKind.LABEL, ref.label, ref.span), ref.span)
    if len(raw.preps) < len(prep_slots):
        want = prep_slots[len(raw.preps)][0]
        raise ParseError({f"PREP {want!r}"}, None, (raw.span[1], raw.span[1]))
    if len(raw.preps) > len(prep_slots):
        extra = raw.preps[len(prep_slots)][0]
        raise ParseError({"PERIOD", "SEMICOLON"}, extra, extra.span)
    for (prep, refs), (want, slots) in zip(raw.preps, prep_slots):
        # "on" may stand in for a locating "at"
        if prep.lexeme != want and (prep.lexeme, want) != ("on", "at"):
            raise ParseError({f"PREP {want!r}"}, prep, prep.span)
        groups.append((slots, refs, want))

    subject_groups = _distribute(raw.subjects, k, len(heads), "subjects", raw.span)
    distributed = []
    for slots, refs, what in groups:
        if form == "h":
            centers = [r for r in refs if r.inst == "center"]
            if centers:
                points = [r for r in refs if r.inst != "center"]
                _distribute(centers, k, 1, "centers", raw.span)
                _distribute(points, k, 1, "points", raw.span)
                distributed.append((slots, [[c, p] for c, p in zip(centers, points)]))
                continue
        distributed.append((slots, _distribute(refs, k, len(slots), what, raw.span)))

    out = []
    for i in range(k):
        args = dict(zip(heads, subject_groups[i]))
        for slots, parts in distributed:
            args.update(zip(slots, parts[i]))
        this_form = form
        if form == "i":
            c1, c2 = args["circle1"], args["circle2"]
            if _is_linear(c1) or _is_linear(c2):
                this_form = "j"
                circle, line = (c2, c1) if _is_linear(c1) else (c1, c2)
                args = {"first": args["first"], "second": args["second"], "circle": circle, "line": line}
        out.append(Sentence(this_form, args, raw.span))
    return out


def parse(tokens: list[Token], text: str = "") -> QueryAst:
    """Parse tokens into singular sentences (plural forms are distributed)."""
    parser = _Parser(tokens, text)
    raw_sentences, draw = parser.query()
    sentences = []
    for raw in raw_sentences:
        sentences.extend(_classify(raw))
    return QueryAst(tuple(sentences), tuple(draw), text)


_INST_SLOTS = {
    "point": (None, "point"),
    "center": ("center",),
    "linear": (None, "line", "segment"),
    "circle": (None, "circle"),
    "pair": (None, "segment"),
    "angle": (None, "angle"),
}

_SLOT_TYPES = {
    "a": {"subject": "linear", "other": "linear", "at": "point"},
    "b": {"subject": "point", "of": "pair"},
    "c": {"subject": "linear", "to": "linear", "at": "point"},
    "d": {"subject": "point", "of": "point", "on": "linear"},
    "e": {"subject": "linear", "of": "pair"},
    "f": {"subject": "linear", "to": "linear", "at": "point"},
    "g": {"subject": "linear", "first": "point", "second": "point"},
    "h": {"subject": "circle", "center": "center", "through": "point"},
    "i": {"first": "point", "second": "point", "circle1": "circle", "circle2": "circle"},
    "j": {"first": "point", "second": "point", "circle": "circle", "line": "linear"},
    "k": {"subject": "linear", "of": "angle"},
    "l": {"subject": "angle"},
}


def _check_inst(ref: EntityRef) -> None:
    """A type word must agree with the shape of the name that follows it."""
    n = len(ref.parts)
    if ref.inst == "segment" and n != 2:
        raise SemanticError(f"segment must be followed by a composite name, got {ref.label!r}", ref.span)
    if ref.inst in ("line", "point", "circle", "center") and n != 1:
        raise SemanticError(f"{ref.inst} must be followed by a primitive name, got {ref.label!r}", ref.span)
    if ref.inst == "angle" and n != 3:
        raise SemanticError(f"angle must be named by three points, got {ref.label!r}", ref.span)


def _check_ref(ref: EntityRef, slot: str) -> None:
    _check_inst(ref)
    n = len(ref.parts)
    if ref.inst not in _INST_SLOTS[slot]:
        if slot == "center":
            raise SemanticError(f"the type 'center' is required before {ref.label!r}", ref.span)
        raise SemanticError(f"{ref.inst} {ref.label} cannot be used here", ref.span)
    expected_parts = {"linear": (1, 2), "pair": (2,), "angle": (3,)}.get(slot, (1,))
    if n not in expected_parts:
        if n == 1:
            what = "a composite name"
        elif slot == "linear" and n == 3:
            what = "a line or segment"
        else:
            what = "a primitive name"
        raise SemanticError(f"expected {what}, got {ref.label!r}", ref.span)
    if len(set(ref.parts)) != n:
        raise SemanticError(f"{ref.label!r} repeats a point", ref.span)


class _Lowering:
    def __init__(self):
        self.ns = _Namespace()
        self.steps: list[Step] = []
        self.present: set[str] = set()

    def kind(self, name: str) -> str | None:
        return self.ns.kinds.get(name)

    def emit(self, step: Step, span) -> None:
        problems = check_step(step, self.ns, len(self.steps))
        if problems:
            raise SemanticError("; ".join(p.message for p in problems), span)
        self.steps.append(step)
        self.present.update(segments_created(step))

    def point(self, name: str, span) -> str:
        kind = self.kind(name)
        if kind is None:
            self.emit(FreePoint(name), span)
        elif kind != "point":
            raise SemanticError(f"{name!r} is a {kind}, not a point", span)
        return name

    def linear(self, ref: EntityRef) -> str:
        if len(ref.parts) == 2:
            for p in ref.parts:
                self.point(p, ref.span)
            name = normalize(ref.label)
            if self.kind(name) != "segment":
                self.emit(Segment(name), ref.span)
            return name
        kind = self.kind(ref.label)
        if kind != "line":
            what = "not defined" if kind is None else f"a {kind}"
            raise SemanticError(f"line {ref.label!r} is {what}", ref.span)
        return ref.label

    def circle(self, ref: EntityRef) -> str:
        kind = self.kind(ref.label)
        if kind != "circle":
            what = "not defined" if kind is None else f"a {kind}"
            raise SemanticError(f"circle {ref.label!r} is {what}", ref.span)
        return ref.label

    def composite(self, ref: EntityRef) -> str:
        for p in ref.parts:
            self.point(p, ref.span)
        return normalize(ref.label)

    def subject(self, ref: EntityRef, kind: str, assertable: bool) -> str:
        if kind == "linear" and len(ref.parts) == 2:
            return self.linear(ref)
        existing = self.kind(ref.label)
        if existing is None:
            return ref.label
        if assertable and existing == ("line" if kind == "linear" else kind):
            return ref.label
        raise SemanticError(f"{ref.label!r} is already defined as a {existing}", ref.span)

    def sentence(self, s: Sentence) -> None:
        for slot, ref in s.args.items():
            _check_ref(ref, _SLOT_TYPES[s.form][slot])
        a = s.args
        span = s.span
        f = s.form
        if f == "a":
            first, second = self.linear(a["subject"]), self.linear(a["other"])
            self.emit(IntersectLines(self.subject(a["at"], "point", True), first, second), span)
        elif f == "b":
            seg = self.composite(a["of"])
            self.emit(Midpoint(self.subject(a["subject"], "point", False), seg), span)
        elif f in ("c", "f"):
            to, at = self.linear(a["to"]), self.point(a["at"].label, a["at"].span)
            line = self.subject(a["subject"], "linear", True)
            cls = PerpendicularAt if f == "c" else ParallelAt
            self.emit(cls(line, to, at), span)
        elif f == "d":
            of, on = self.point(a["of"].label, a["of"].span), self.linear(a["on"])
            self.emit(Foot(self.subject(a["subject"], "point", True), of, on), span)
        elif f == "e":
            seg = self.composite(a["of"])
            self.emit(Mediatrix(self.subject(a["subject"], "linear", False), seg), span)
        elif f == "g":
            p, q = (self.point(a[k].label, a[k].span) for k in ("first", "second"))
            self.emit(LineThrough(self.subject(a["subject"], "linear", True), p, q), span)
        elif f == "h":
            center = self.point(a["center"].label, a["center"].span)
            through = self.point(a["through"].label, a["through"].span)
            self.emit(Circle(self.subject(a["subject"], "circle", False), center, through), span)
        elif f == "i":
            c1, c2 = a["circle1"], a["circle2"]
            if self.kind(c1.label) == "line" or self.kind(c2.label) == "line":
                line, circle = (c1, c2) if self.kind(c1.label) == "line" else (c2, c1)
                self._circle_line(a["first"], a["second"], circle, line, span)
                return
            c1n, c2n = self.circle(c1), self.circle(c2)
            p = self.subject(a["first"], "point", True)
            q = self.subject(a["second"], "point", True)
            self.emit(IntersectCircles(p, q, c1n, c2n), span)
        elif f == "j":
            self._circle_line(a["first"], a["second"], a["circle"], a["line"], span)
        elif f == "k":
            angle = self.composite(a["of"])
            self.emit(Bisector(self.subject(a["subject"], "linear", False), angle), span)
        elif f == "l":
            self.emit(RightAngle(self.composite(a["subject"])), span)

    def _circle_line(self, first, second, circle, line, span):
        c, l = self.circle(circle), self.linear(line)
        p = self.subject(first, "point", True)
        q = self.subject(second, "point", True)
        self.emit(IntersectCircleLine(p, q, c, l), span)

    def draw(self, ref: EntityRef) -> str:
        _check_inst(ref)
        parts = ref.parts
        if len(set(parts)) != len(parts):
            raise SemanticError(f"{ref.label!r} repeats a point", ref.span)
        if len(parts) == 1:
            kind = self.kind(ref.label)
            if kind is None:
                self.emit(FreePoint(ref.label), ref.span)
            return ref.label
        name = self.composite(ref)
        if len(parts) == 2:
            if self.kind(name) != "segment" and name not in self.present:
                self.emit(Segment(name), ref.span)
            return name
        if len(parts) == 3 and self.kind(name) == "angle":
            return name
        raise SemanticError(f"cannot draw {ref.label!r}: only points, lines, circles, segments and defined angles", ref.span)


def lower(ast: QueryAst, figure_id: str = "query") -> Figure:
    """Lower a parsed query to construction steps plus a draw list."""
    lowering = _Lowering()
    for sentence in ast.sentences:
        lowering.sentence(sentence)
    draw = [lowering.draw(ref) for ref in ast.draw]
    return Figure(figure_id, ast.text, tuple(lowering.steps), tuple(dict.fromkeys(draw)))


def compile_query(text: str, figure_id: str = "query") -> Figure:
    return lower(parse(tokenize(text), text), figure_id)
