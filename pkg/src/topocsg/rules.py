"""Horn rules with procedural builtins over the knowledge base.

Grammar, one rule per non-comment line ('#' starts a comment):

    rule       := atoms "->" atoms          ("→" and "∧"/"^" both accepted)
    atoms      := atom ("^" atom)*
    atom       := name "(" term ("," term)* ")"
    term       := ?variable | name | number | "string"

A name whose prefix is a registered builtin namespace is a builtin atom;
otherwise arity decides: one argument makes a class atom, two a property
atom.  Property atoms match both object triples and data values.  A rule
whose consequent is a single sqwrl:select / sqwrl:selectDistinct atom is a
query and is answered rather than fired.

Builtins are filters: their variables must be bound by non-builtin atoms
of the same antecedent (checked at parse time) and they cannot appear in a
rule consequent.  The topological builtins answer from the KB when it
already holds the pair's relation, otherwise they compute it once per
unordered pair and assert it back in both directions with provenance
"computed" (so the next run is pure lookup).

Evaluation runs all rules to a simultaneous fixpoint, saturating the KB
between rounds; derivations feed later rounds.  Every fired fact and every
materialized topological fact is recorded in a derivation log; replaying
the log against the initial KB reproduces the final KB exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from .kb import RDF_TYPE, KBError, KnowledgeBase, RelationSolver
from .topology import TopoRelation

__all__ = [
    "BuiltinTypeError",
    "ClassAtom",
    "DerivationLog",
    "EvaluationError",
    "LogEntry",
    "PropertyAtom",
    "BuiltinAtom",
    "Query",
    "QueryResult",
    "Rule",
    "RuleError",
    "RuleSafetyError",
    "RuleSyntaxError",
    "Variable",
    "evaluate",
    "parse_rules",
    "parse_rule",
    "query",
    "replay",
]


class RuleError(ValueError):
    """Base for rule-language problems (syntax, safety, evaluation)."""


class RuleSyntaxError(RuleError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class RuleSafetyError(RuleError):
    pass


class EvaluationError(RuleError):
    pass


class BuiltinTypeError(EvaluationError):
    pass


# ---------------------------------------------------------------------------
# terms and atoms

@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return "?" + self.name


Term = object  # Variable | str | float


def render_term(value) -> str:
    if isinstance(value, Variable):
        return str(value)
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


@dataclass(frozen=True)
class ClassAtom:
    cls: str
    term: Term

    def __str__(self) -> str:
        return f"{self.cls}({render_term(self.term)})"


@dataclass(frozen=True)
class PropertyAtom:
    prop: str
    subject: Term
    object: Term

    def __str__(self) -> str:
        return f"{self.prop}({render_term(self.subject)}, {render_term(self.object)})"


@dataclass(frozen=True)
class BuiltinAtom:
    name: str
    args: tuple[Term, ...]

    def __str__(self) -> str:
        return f"{self.name}({', '.join(render_term(a) for a in self.args)})"


Atom = object  # ClassAtom | PropertyAtom | BuiltinAtom


@dataclass(frozen=True)
class Rule:
    rule_id: str
    antecedent: tuple[Atom, ...]
    consequent: tuple[Atom, ...]

    def __str__(self) -> str:
        return "{} -> {}".format(
            " ^ ".join(str(a) for a in self.antecedent),
            " ^ ".join(str(a) for a in self.consequent),
        )


@dataclass(frozen=True)
class Query:
    query_id: str
    antecedent: tuple[Atom, ...]
    select: BuiltinAtom

    @property
    def distinct(self) -> bool:
        return self.select.name == "sqwrl:selectDistinct"

    def __str__(self) -> str:
        return "{} -> {}".format(
            " ^ ".join(str(a) for a in self.antecedent), self.select
        )


# ---------------------------------------------------------------------------
# builtin registry

TOPO_BUILTIN_PREFIX = "swrl_topo:"
TOPO_BUILTINS = {
    TOPO_BUILTIN_PREFIX + rel.value: rel for rel in TopoRelation
}
COMPARISON_BUILTINS = {"swrlb:greaterThan", "swrlb:lessThan", "swrlb:equal"}
SELECT_BUILTINS = {"sqwrl:select", "sqwrl:selectDistinct"}
BUILTIN_NAMESPACES = ("swrl_topo:", "swrlb:", "sqwrl:")

ALL_BUILTINS = set(TOPO_BUILTINS) | COMPARISON_BUILTINS | SELECT_BUILTINS


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#.*)
  | (?P<arrow>->|→)
  | (?P<and>\^|∧)
  | (?P<lpar>\()
  | (?P<rpar>\))
  | (?P<comma>,)
  | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<name>[A-Za-z_][A-Za-z0-9_.\-]*(?::[A-Za-z_][A-Za-z0-9_.\-]*)?)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str, line_no: int) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise RuleSyntaxError(
                f"unexpected character {text[pos]!r}", line_no, pos + 1
            )
        kind = m.lastgroup
        if kind == "comment":
            break
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), line_no, pos + 1))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], line_no: int):
        self.tokens = tokens
        self.line_no = line_no
        self.pos = 0

    def _peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self, kind: str, what: str) -> _Token:
        tok = self._peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            col = (last.column + len(last.text)) if last else 1
            raise RuleSyntaxError(f"expected {what} at end of rule", self.line_no, col)
        if tok.kind != kind:
            raise RuleSyntaxError(
                f"expected {what}, found {tok.text!r}", tok.line, tok.column
            )
        self.pos += 1
        return tok

    def parse_term(self) -> Term:
        tok = self._peek()
        if tok is None:
            raise RuleSyntaxError("expected a term", self.line_no, 1)
        if tok.kind == "var":
            self.pos += 1
            return Variable(tok.text[1:])
        if tok.kind == "number":
            self.pos += 1
            return float(tok.text)
        if tok.kind == "string":
            self.pos += 1
            body = tok.text[1:-1]
            return re.sub(r"\\(.)", r"\1", body)
        if tok.kind == "name":
            self.pos += 1
            return tok.text
        raise RuleSyntaxError(
            f"expected a term, found {tok.text!r}", tok.line, tok.column
        )

    def parse_atom(self) -> Atom:
        name_tok = self._next("name", "an atom name")
        name = name_tok.text
        self._next("lpar", "'('")
        args = [self.parse_term()]
        while self._peek() is not None and self._peek().kind == "comma":
            self.pos += 1
            args.append(self.parse_term())
        self._next("rpar", "')'")
        if any(name.startswith(ns) for ns in BUILTIN_NAMESPACES):
            if name not in ALL_BUILTINS:
                raise RuleSyntaxError(
                    f"unknown builtin {name!r}", name_tok.line, name_tok.column
                )
            if name in SELECT_BUILTINS:
                if not args or not all(isinstance(a, Variable) for a in args):
                    raise RuleSyntaxError(
                        f"{name} takes one or more variables",
                        name_tok.line,
                        name_tok.column,
                    )
            elif len(args) != 2:
                raise RuleSyntaxError(
                    f"builtin {name} takes exactly two arguments, got {len(args)}",
                    name_tok.line,
                    name_tok.column,
                )
            return BuiltinAtom(name, tuple(args))
        if len(args) == 1:
            return ClassAtom(name, args[0])
        if len(args) == 2:
            return PropertyAtom(name, args[0], args[1])
        raise RuleSyntaxError(
            f"atom {name} has {len(args)} arguments; only unary classes and "
            "binary properties exist",
            name_tok.line,
            name_tok.column,
        )

    def parse_atoms(self) -> list[Atom]:
        atoms = [self.parse_atom()]
        while self._peek() is not None and self._peek().kind == "and":
            self.pos += 1
            atoms.append(self.parse_atom())
        return atoms

    def parse_rule(self, rule_id: str):
        antecedent = self.parse_atoms()
        self._next("arrow", "'->'")
        consequent = self.parse_atoms()
        tok = self._peek()
        if tok is not None:
            raise RuleSyntaxError(
                f"unexpected {tok.text!r} after rule", tok.line, tok.column
            )
        if len(consequent) == 1 and (
            isinstance(consequent[0], BuiltinAtom)
            and consequent[0].name in SELECT_BUILTINS
        ):
            q = Query(rule_id, tuple(antecedent), consequent[0])
            _check_query(q)
            return q
        rule = Rule(rule_id, tuple(antecedent), tuple(consequent))
        _check_rule(rule)
        return rule


def _atom_variables(atom) -> set[Variable]:
    if isinstance(atom, ClassAtom):
        terms: Sequence = (atom.term,)
    elif isinstance(atom, PropertyAtom):
        terms = (atom.subject, atom.object)
    else:
        terms = atom.args
    return {t for t in terms if isinstance(t, Variable)}


def _bound_variables(antecedent) -> set[Variable]:
    bound: set[Variable] = set()
    for atom in antecedent:
        if not isinstance(atom, BuiltinAtom):
            bound |= _atom_variables(atom)
    return bound


def _check_antecedent(rule_id: str, antecedent) -> None:
    if not antecedent:
        raise RuleSafetyError(f"{rule_id}: empty antecedent")
    bound = _bound_variables(antecedent)
    for atom in antecedent:
        if isinstance(atom, BuiltinAtom):
            if atom.name in SELECT_BUILTINS:
                raise RuleSafetyError(
                    f"{rule_id}: {atom.name} cannot appear in an antecedent"
                )
            unbound = _atom_variables(atom) - bound
            if unbound:
                names = ", ".join(sorted(str(v) for v in unbound))
                raise RuleSafetyError(
                    f"{rule_id}: builtin {atom} uses variables bound by no "
                    f"class or property atom: {names}"
                )


def _check_rule(rule: Rule) -> None:
    _check_antecedent(rule.rule_id, rule.antecedent)
    bound = _bound_variables(rule.antecedent)
    for atom in rule.consequent:
        if isinstance(atom, BuiltinAtom):
            raise RuleSafetyError(
                f"{rule.rule_id}: builtin {atom.name} cannot appear in a "
                "rule consequent"
            )
        unbound = _atom_variables(atom) - bound
        if unbound:
            names = ", ".join(sorted(str(v) for v in unbound))
            raise RuleSafetyError(
                f"{rule.rule_id}: consequent {atom} uses unbound "
                f"variable(s) {names}"
            )


def _check_query(q: Query) -> None:
    _check_antecedent(q.query_id, q.antecedent)
    bound = _bound_variables(q.antecedent)
    unbound = set(q.select.args) - bound
    if unbound:
        names = ", ".join(sorted(str(v) for v in unbound))
        raise RuleSafetyError(
            f"{q.query_id}: select uses unbound variable(s) {names}"
        )


def parse_rule(text: str, rule_id: str = "rule-1"):
    """Parse a single rule or query from one line of text."""
    tokens = _tokenize(text, 1)
    if not tokens:
        raise RuleSyntaxError("empty rule", 1, 1)
    return _Parser(tokens, 1).parse_rule(rule_id)


def parse_rules(text: str):
    """Parse a rule file: one rule or query per line, '#' comments allowed."""
    out = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(line, line_no)
        if not tokens:
            continue
        out.append(_Parser(tokens, line_no).parse_rule(f"rule-{len(out) + 1}"))
    return out


# ---------------------------------------------------------------------------
# derivation log

@dataclass(frozen=True)
class LogEntry:
    kind: str  # "rule" or "computed"
    round: int
    source: str  # rule id, or "-" for computed facts
    fact: tuple[str, str, str]
    binding: tuple[tuple[str, str], ...] = ()

    def to_line(self) -> str:
        bind = " ".join(f"?{v}={val}" for v, val in self.binding)
        s, p, o = self.fact
        return "\t".join((self.kind, str(self.round), self.source, s, p, o, bind))

    @classmethod
    def from_line(cls, line: str) -> "LogEntry":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 7:
            raise RuleError(f"malformed log line: {line!r}")
        kind, rnd, source, s, p, o, bind = parts
        binding = []
        for piece in bind.split():
            var, _, val = piece.partition("=")
            binding.append((var.lstrip("?"), val))
        return cls(kind, int(rnd), source, (s, p, o), tuple(binding))


@dataclass
class DerivationLog:
    entries: list[LogEntry] = field(default_factory=list)
    rounds: int = 0

    def derived_facts(self) -> list[tuple[str, str, str]]:
        return [e.fact for e in self.entries if e.kind == "rule"]

    def to_text(self) -> str:
        lines = [e.to_line() for e in self.entries]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "DerivationLog":
        entries = [
            LogEntry.from_line(line) for line in text.splitlines() if line.strip()
        ]
        rounds = max((e.round for e in entries), default=0)
        return cls(entries, rounds)


def replay(initial_kb: KnowledgeBase, log: DerivationLog) -> KnowledgeBase:
    """Re-apply a derivation log to a copy of the KB it started from.

    Asserts every logged fact with the provenance evaluation would have
    used, then saturates; the result matches the evaluated KB exactly.
    """
    kb = initial_kb.copy()
    kb.saturate()
    for entry in log.entries:
        s, p, o = entry.fact
        tag = "computed" if entry.kind == "computed" else f"inferred({entry.source})"
        kb.assert_fact(s, p, o, tag)
    kb.saturate()
    return kb


# ---------------------------------------------------------------------------
# evaluation

def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


class _Engine:
    """Shared state for one evaluate()/query() call."""

    def __init__(self, kb: KnowledgeBase, solver_factory, log: DerivationLog):
        self.kb = kb
        self._solver_factory = solver_factory
        self._solver: Optional[RelationSolver] = None
        self.log = log
        self.round = 0
        self.computed_this_round: list[tuple[str, str, str]] = []

    @property
    def solver(self) -> RelationSolver:
        # built on first topological builtin, so purely symbolic rule sets
        # run against KBs with no universe or geometry at all
        if self._solver is None:
            self._solver = self._solver_factory()
        return self._solver

    # -- builtin truth ------------------------------------------------------

    def builtin_holds(self, atom: BuiltinAtom, binding: dict, source: str) -> bool:
        args = [
            binding[t.name] if isinstance(t, Variable) else t for t in atom.args
        ]
        if atom.name in COMPARISON_BUILTINS:
            x, y = args
            if not (_is_number(x) and _is_number(y)):
                raise BuiltinTypeError(
                    f"{source}: {atom.name} needs numeric arguments, got "
                    f"({render_term(x)}, {render_term(y)})"
                )
            if atom.name == "swrlb:greaterThan":
                return x > y
            if atom.name == "swrlb:lessThan":
                return x < y
            return x == y
        rel = TOPO_BUILTINS[atom.name]
        x, y = args
        if not isinstance(x, str) or not isinstance(y, str):
            raise BuiltinTypeError(
                f"{source}: {atom.name} needs individual ids, got "
                f"({render_term(x)}, {render_term(y)})"
            )
        try:
            solver = self.solver
            actual, new_facts = solver.materialize(x, y)
        except KBError as exc:
            raise EvaluationError(
                f"{source}: {atom.name}({x}, {y}): {exc}"
            ) from exc
        for fact in new_facts:
            self.log.entries.append(
                LogEntry("computed", self.round, "-", fact)
            )
            self.computed_this_round.append(fact)
        return actual is rel

    # -- atom matching ------------------------------------------------------

    def match_atom(self, atom, binding: dict,
                   delta: Optional[set]) -> Iterator[dict]:
        """Extend `binding` over all KB facts matching `atom`.

        With a delta set, only facts in the delta are considered (the
        semi-naive pivot restriction).
        """
        kb = self.kb
        if isinstance(atom, ClassAtom):
            term = atom.term
            if isinstance(term, Variable) and term.name in binding:
                term = binding[term.name]
            if isinstance(term, Variable):
                for ind_id in kb.sorted_members(atom.cls):
                    if delta is None or (ind_id, RDF_TYPE, atom.cls) in delta:
                        child = dict(binding)
                        child[term.name] = ind_id
                        yield child
            else:
                if not isinstance(term, str):
                    return
                if kb.holds(term, RDF_TYPE, atom.cls) and (
                    delta is None or (term, RDF_TYPE, atom.cls) in delta
                ):
                    yield binding
            return

        prop = atom.prop
        subj = atom.subject
        obj = atom.object
        if isinstance(subj, Variable) and subj.name in binding:
            subj = binding[subj.name]
        if isinstance(obj, Variable) and obj.name in binding:
            obj = binding[obj.name]
        s_free = isinstance(subj, Variable)
        o_free = isinstance(obj, Variable)

        def emit(s_val, o_val):
            child = dict(binding)
            if s_free:
                child[subj.name] = s_val
            if o_free:
                child[obj.name] = o_val
            return child

        # object triples
        if not s_free and not o_free:
            if (
                isinstance(subj, str)
                and isinstance(obj, str)
                and kb.holds(subj, prop, obj)
                and (delta is None or (subj, prop, obj) in delta)
            ):
                yield binding
        elif not s_free and o_free:
            if isinstance(subj, str):
                for o_val in kb.sorted_objects(prop, subj):
                    if delta is None or (subj, prop, o_val) in delta:
                        yield emit(subj, o_val)
        elif s_free and not o_free:
            if isinstance(obj, str):
                for s_val in kb.sorted_subjects(prop, obj):
                    if delta is None or (s_val, prop, obj) in delta:
                        yield emit(s_val, obj)
        else:
            for s_val, o_val in kb.sorted_pairs(prop):
                if delta is None or (s_val, prop, o_val) in delta:
                    yield emit(s_val, o_val)

        # data values: never part of a delta (data is load-time only)
        if delta is not None:
            return
        if not s_free:
            if isinstance(subj, str):
                ind = kb.individuals.get(subj)
                if ind is not None and prop in ind.data:
                    value = ind.data[prop]
                    if o_free:
                        yield emit(subj, value)
                    elif _values_equal(obj, value):
                        yield binding
        else:
            for ind_id in sorted(kb.individuals):
                ind = kb.individuals[ind_id]
                if prop in ind.data:
                    value = ind.data[prop]
                    if o_free:
                        yield emit(ind_id, value)
                    elif _values_equal(obj, value):
                        yield emit(ind_id, value)

    def bindings(self, antecedent, source: str,
                 delta: Optional[set]) -> Iterator[dict]:
        """All antecedent matches; builtins run after the join atoms."""
        join_atoms = [a for a in antecedent if not isinstance(a, BuiltinAtom)]
        builtins = [a for a in antecedent if isinstance(a, BuiltinAtom)]

        def walk_delta() -> Iterator[dict]:
            # semi-naive: in incremental rounds a binding must touch at
            # least one new fact, so each atom in turn plays the pivot
            # restricted to the delta; duplicates across pivots collapse
            seen = set()
            for pivot in range(len(join_atoms)):
                for child in self._walk_with_pivot(join_atoms, 0, pivot, {}, delta):
                    key = tuple(sorted(child.items()))
                    if key not in seen:
                        seen.add(key)
                        yield child

        if delta is None:
            source_bindings = self._walk_with_pivot(join_atoms, 0, -1, {}, None)
        else:
            source_bindings = walk_delta()
        for binding in source_bindings:
            ok = True
            for b in builtins:
                if not self.builtin_holds(b, binding, source):
                    ok = False
                    break
            if ok:
                yield binding

    def _walk_with_pivot(self, atoms, i, pivot, binding, delta):
        if i == len(atoms):
            yield binding
            return
        restriction = delta if i == pivot else None
        for child in self.match_atom(atoms[i], binding, restriction):
            yield from self._walk_with_pivot(atoms, i + 1, pivot, child, delta)


def _values_equal(a, b) -> bool:
    if _is_number(a) and _is_number(b):
        return float(a) == float(b)
    return a == b


def _instantiate(atom, binding: dict) -> tuple[str, str, str]:
    def value(term):
        v = binding[term.name] if isinstance(term, Variable) else term
        if not isinstance(v, str):
            v = render_term(v)
        return v

    if isinstance(atom, ClassAtom):
        return (value(atom.term), RDF_TYPE, atom.cls)
    return (value(atom.subject), atom.prop, value(atom.object))


def _render_binding(binding: dict) -> tuple[tuple[str, str], ...]:
    return tuple(
        (name, render_term(value)) for name, value in sorted(binding.items())
    )


def evaluate(
    rules: Sequence[Rule],
    kb: KnowledgeBase,
    solver: Optional[RelationSolver] = None,
    *,
    epsilon: Optional[float] = None,
    delta: Optional[float] = None,
    refine: bool = False,
) -> DerivationLog:
    """Fire all rules to a simultaneous fixpoint, mutating the KB.

    Each round evaluates every rule against the round-start facts, commits
    the derived facts in deterministic order (rule, then binding), and
    saturates; newly closed facts join the next round's delta.  The
    returned log replays to the same KB (see `replay`).
    """
    for r in rules:
        if isinstance(r, Query):
            raise RuleError(
                f"{r.query_id} is a query; evaluate() takes rules only"
            )

    def factory():
        if solver is not None:
            return solver
        return RelationSolver(kb, epsilon=epsilon, delta=delta, refine=refine)

    log = DerivationLog()
    engine = _Engine(kb, factory, log)
    kb.saturate()
    delta_facts: Optional[set] = None
    while True:
        engine.round += 1
        engine.computed_this_round = []
        commits: list[tuple[int, tuple, str, tuple[tuple[str, str, str], ...]]] = []
        for idx, rule in enumerate(rules):
            for binding in engine.bindings(rule.antecedent, rule.rule_id, delta_facts):
                facts = tuple(
                    _instantiate(atom, binding) for atom in rule.consequent
                )
                novel = tuple(f for f in facts if not kb.holds(*f))
                if novel:
                    commits.append(
                        (idx, _render_binding(binding), rule.rule_id, novel)
                    )
        commits.sort(key=lambda c: (c[0], c[1]))
        round_new: list[tuple[str, str, str]] = []
        for idx, binding, rule_id, facts in commits:
            for fact in facts:
                if kb.assert_fact(*fact, provenance=f"inferred({rule_id})"):
                    round_new.append(fact)
                log.entries.append(
                    LogEntry("rule", engine.round, rule_id, fact, binding)
                )
        saturated = kb.saturate()
        round_new.extend(saturated)
        round_new.extend(engine.computed_this_round)
        if not round_new:
            log.rounds = engine.round
            break
        delta_facts = set(round_new)
    return log


@dataclass
class QueryResult:
    variables: tuple[str, ...]
    rows: list[tuple[str, ...]]

    def to_tsv(self) -> str:
        header = "\t".join("?" + v for v in self.variables)
        lines = [header] + ["\t".join(row) for row in self.rows]
        return "\n".join(lines) + "\n"


def query(
    q: Query,
    kb: KnowledgeBase,
    solver: Optional[RelationSolver] = None,
    *,
    epsilon: Optional[float] = None,
    delta: Optional[float] = None,
    refine: bool = False,
) -> QueryResult:
    """Answer a select query against the saturated KB.

    sqwrl:select keeps one row per antecedent match, duplicates included
    (bag semantics); sqwrl:selectDistinct de-duplicates and collapses rows
    that are permutations of each other, so a symmetric relation over two
    variables reports each unordered pair once, ids in lexicographic
    order.  Rows come back sorted.  Topological builtins may assert the
    relations they compute (the KB acts as the cache), so a query can grow
    the fact set even though consequents are never asserted.
    """
    if isinstance(q, Rule):
        raise RuleError(f"{q.rule_id} is a rule; query() takes a select query")

    def factory():
        if solver is not None:
            return solver
        return RelationSolver(kb, epsilon=epsilon, delta=delta, refine=refine)

    log = DerivationLog()
    engine = _Engine(kb, factory, log)
    engine.round = 1
    kb.saturate()
    rows: list[tuple[str, ...]] = []
    seen = set()
    for binding in engine.bindings(q.antecedent, q.query_id, None):
        row = tuple(render_term(binding[v.name]) for v in q.select.args)
        if q.distinct:
            row = tuple(sorted(row))
            if row in seen:
                continue
            seen.add(row)
        rows.append(row)
    variables = tuple(v.name for v in q.select.args)
    return QueryResult(variables, sorted(rows))
