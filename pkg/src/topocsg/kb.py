"""A small assertional knowledge base with relation characteristics.

Individuals carry class memberships, data values, and optionally a solid.
Object-property assertions are triples with provenance tags; class
memberships are stored as `rdf:type` triples so everything exports the
same way.  Declared properties can carry algebraic characteristics
(transitive, symmetric, asymmetric, functional, reflexive, irreflexive)
and an inverse; `saturate` closes the fact set under them and
`check_consistency` reports violations of the constraint-like ones.

Topological enrichment computes the qualitative relation of every pair of
solids once (memoized across both orders) and asserts it in both
directions.  Two characteristic profiles ship for the eight relations:
"corrected" (default), and "paper", which additionally marks disjoint as
transitive.  Disjointness is not transitive, so the latter profile can
derive self-disjointness and trip the irreflexivity check; it exists so
that behavior under that table of characteristics stays reproducible.
"""

from __future__ import annotations

import enum
import logging
import threading
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .geometry import Solid, Universe
from .octree import DEFAULT_MAX_DEPTH, default_delta, default_epsilon
from .topology import TopoRelation, relate

logger = logging.getLogger(__name__)

RDF_TYPE = "rdf:type"
TOPO_PREFIX = "topo:"

__all__ = [
    "Characteristic",
    "DeclarationError",
    "EnrichmentReport",
    "Individual",
    "KBError",
    "KnowledgeBase",
    "PropertyDecl",
    "RelationSolver",
    "Violation",
    "declare_profile",
    "enrich_topology",
    "PROFILES",
]


class KBError(ValueError):
    """Bad knowledge-base input: unknown individual, malformed assertion."""


class DeclarationError(KBError):
    """Conflicting or malformed property declaration."""


class Characteristic(enum.Enum):
    TRANSITIVE = "transitive"
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"
    FUNCTIONAL = "functional"
    REFLEXIVE = "reflexive"
    IRREFLEXIVE = "irreflexive"

    def __str__(self) -> str:
        return self.value


_CONTRADICTIONS = (
    (Characteristic.SYMMETRIC, Characteristic.ASYMMETRIC),
    (Characteristic.REFLEXIVE, Characteristic.IRREFLEXIVE),
)


@dataclass(frozen=True)
class PropertyDecl:
    name: str
    characteristics: frozenset[Characteristic] = frozenset()
    inverse_of: Optional[str] = None


@dataclass
class Individual:
    id: str
    classes: set[str] = field(default_factory=set)
    data: dict[str, object] = field(default_factory=dict)
    solid: Optional[Solid] = None


@dataclass(frozen=True)
class Violation:
    kind: Characteristic
    property: str
    facts: tuple[tuple[str, str, str], ...]
    message: str

    def __str__(self) -> str:
        return self.message


class KnowledgeBase:
    """Triple store plus individuals, with characteristic-aware closure."""

    def __init__(self, universe: Optional[Universe] = None):
        self.universe = universe
        self.individuals: dict[str, Individual] = {}
        self.properties: dict[str, PropertyDecl] = {}
        self._facts: dict[tuple[str, str, str], set[str]] = {}
        self._sp: dict[str, dict[str, set[str]]] = {}  # p -> s -> {o}
        self._po: dict[str, dict[str, set[str]]] = {}  # p -> o -> {s}
        self._pending: list[tuple[str, str, str]] = []
        self._version = 0
        self._sorted_cache: dict = {}

    # -- individuals --------------------------------------------------------

    def add_individual(self, individual: Individual) -> Individual:
        if individual.id in self.individuals:
            raise KBError(f"duplicate individual id {individual.id!r}")
        self.individuals[individual.id] = individual
        self._version += 1
        for cls in sorted(individual.classes):
            self._store(individual.id, RDF_TYPE, cls, "asserted")
        return individual

    def individual(self, ind_id: str) -> Individual:
        try:
            return self.individuals[ind_id]
        except KeyError:
            raise KBError(f"unknown individual {ind_id!r}") from None

    def assert_class(self, ind_id: str, cls: str, provenance: str = "asserted") -> bool:
        ind = self.individual(ind_id)
        new = self._store(ind_id, RDF_TYPE, cls, provenance)
        ind.classes.add(cls)
        return new

    # -- properties ---------------------------------------------------------

    def declare_property(
        self,
        name: str,
        characteristics: Iterable[Characteristic] = (),
        inverse_of: Optional[str] = None,
    ) -> PropertyDecl:
        chars = frozenset(characteristics)
        for a, b in _CONTRADICTIONS:
            if a in chars and b in chars:
                raise DeclarationError(
                    f"property {name!r} cannot be both {a} and {b}"
                )
        decl = PropertyDecl(name, chars, inverse_of)
        existing = self.properties.get(name)
        if existing is not None and existing != decl:
            raise DeclarationError(
                f"property {name!r} is already declared with different traits"
            )
        if inverse_of is not None:
            other = self.properties.get(inverse_of)
            if other is not None and other.inverse_of not in (None, name):
                raise DeclarationError(
                    f"property {inverse_of!r} already has inverse "
                    f"{other.inverse_of!r}, cannot also invert {name!r}"
                )
            if other is not None and other.inverse_of is None:
                self.properties[inverse_of] = PropertyDecl(
                    other.name, other.characteristics, name
                )
        self.properties[name] = decl
        return decl

    # -- facts --------------------------------------------------------------

    def _store(self, s: str, p: str, o: str, provenance: str) -> bool:
        """Insert or merge one triple; returns True when the triple is new."""
        key = (s, p, o)
        tags = self._facts.get(key)
        if tags is not None:
            tags.add(provenance)
            return False
        self._facts[key] = {provenance}
        self._sp.setdefault(p, {}).setdefault(s, set()).add(o)
        self._po.setdefault(p, {}).setdefault(o, set()).add(s)
        self._pending.append(key)
        self._version += 1
        return True

    def assert_fact(self, s: str, p: str, o: str, provenance: str = "asserted") -> bool:
        """Assert one triple; both ends must be known individuals.

        For rdf:type the object is a class name and the individual's class
        set is kept in sync.  Returns True when the triple was new (its
        provenance is merged either way).
        """
        if p == RDF_TYPE:
            return self.assert_class(s, o, provenance)
        self.individual(s)
        self.individual(o)
        return self._store(s, p, o, provenance)

    def retract(self, s: str, p: str, o: str) -> bool:
        """Remove one triple if present.  Derived facts are not chased;
        callers that need a closed KB should re-assert and saturate."""
        key = (s, p, o)
        if key not in self._facts:
            return False
        del self._facts[key]
        self._sp[p][s].discard(o)
        self._po[p][o].discard(s)
        if p == RDF_TYPE and s in self.individuals:
            self.individuals[s].classes.discard(o)
        self._version += 1
        return True

    def holds(self, s: str, p: str, o: str) -> bool:
        return (s, p, o) in self._facts

    def provenance(self, s: str, p: str, o: str) -> frozenset[str]:
        return frozenset(self._facts.get((s, p, o), ()))

    def facts(self) -> Iterable[tuple[str, str, str]]:
        return self._facts.keys()

    # Sorted snapshots are cached per KB version: rule joins iterate them
    # heavily and must not observe mid-iteration mutation.
    def _snapshot(self, key, build):
        cached = self._sorted_cache.get(key)
        if cached is not None and cached[0] == self._version:
            return cached[1]
        value = build()
        self._sorted_cache[key] = (self._version, value)
        return value

    def sorted_members(self, cls: str) -> tuple[str, ...]:
        return self._snapshot(
            ("members", cls),
            lambda: tuple(sorted(self._po.get(RDF_TYPE, {}).get(cls, ()))),
        )

    def sorted_pairs(self, p: str) -> tuple[tuple[str, str], ...]:
        return self._snapshot(
            ("pairs", p),
            lambda: tuple(
                sorted(
                    (s, o)
                    for s, objs in self._sp.get(p, {}).items()
                    for o in objs
                )
            ),
        )

    def sorted_objects(self, p: str, s: str) -> tuple[str, ...]:
        return self._snapshot(
            ("objects", p, s),
            lambda: tuple(sorted(self._sp.get(p, {}).get(s, ()))),
        )

    def sorted_subjects(self, p: str, o: str) -> tuple[str, ...]:
        return self._snapshot(
            ("subjects", p, o),
            lambda: tuple(sorted(self._po.get(p, {}).get(o, ()))),
        )

    def classes_of(self, ind_id: str) -> tuple[str, ...]:
        return self.sorted_objects(RDF_TYPE, ind_id)

    # -- closure ------------------------------------------------------------

    def saturate(self) -> list[tuple[str, str, str]]:
        """Close the facts under the declared characteristics.

        Incremental: only facts asserted since the last call are used as
        seeds.  Every applicable derivation merges its provenance tag even
        when the fact already exists, so provenance sets do not depend on
        the order facts arrived in.  Returns the newly added triples.
        """
        added: list[tuple[str, str, str]] = []

        for name, decl in self.properties.items():
            if Characteristic.REFLEXIVE in decl.characteristics:
                for ind_id in self.individuals:
                    if self._store(ind_id, name, ind_id, "inferred(reflexive)"):
                        added.append((ind_id, name, ind_id))

        queue = deque(self._pending)
        self._pending = []
        while queue:
            s, p, o = queue.popleft()
            decl = self.properties.get(p)
            if decl is None:
                continue
            chars = decl.characteristics
            derived: list[tuple[str, str, str, str]] = []
            if Characteristic.SYMMETRIC in chars:
                derived.append((o, p, s, "inferred(symmetric)"))
            if Characteristic.TRANSITIVE in chars:
                for c in tuple(self._sp.get(p, {}).get(o, ())):
                    derived.append((s, p, c, "inferred(transitive)"))
                for x in tuple(self._po.get(p, {}).get(s, ())):
                    derived.append((x, p, o, "inferred(transitive)"))
            if decl.inverse_of is not None:
                derived.append((o, decl.inverse_of, s, "inferred(inverse)"))
            for ds, dp, do, tag in derived:
                if self._store(ds, dp, do, tag):
                    queue.append((ds, dp, do))
                    added.append((ds, dp, do))
        # facts added here were processed in-queue; they are not pending
        self._pending = []
        return added

    def check_consistency(self) -> list[Violation]:
        """Violations of asymmetry, irreflexivity, and functionality.

        Meant for a saturated KB.  Asymmetry violations are reported once
        per unordered pair.
        """
        out: list[Violation] = []
        for name in sorted(self.properties):
            chars = self.properties[name].characteristics
            sp = self._sp.get(name, {})
            if Characteristic.IRREFLEXIVE in chars:
                for s in sorted(sp):
                    if s in sp[s]:
                        out.append(
                            Violation(
                                Characteristic.IRREFLEXIVE,
                                name,
                                (((s, name, s)),),
                                f"irreflexive property {name} holds at ({s}, {s})",
                            )
                        )
            if Characteristic.ASYMMETRIC in chars:
                seen = set()
                for s in sorted(sp):
                    for o in sorted(sp[s]):
                        if s == o or (o, s) in seen:
                            continue
                        seen.add((s, o))
                        if s in sp.get(o, ()):
                            out.append(
                                Violation(
                                    Characteristic.ASYMMETRIC,
                                    name,
                                    ((s, name, o), (o, name, s)),
                                    f"asymmetric property {name} holds both "
                                    f"ways between {s} and {o}",
                                )
                            )
            if Characteristic.FUNCTIONAL in chars:
                for s in sorted(sp):
                    objs = sorted(sp[s])
                    if len(objs) > 1:
                        out.append(
                            Violation(
                                Characteristic.FUNCTIONAL,
                                name,
                                tuple((s, name, o) for o in objs),
                                f"functional property {name} maps {s} to "
                                f"{len(objs)} objects: {', '.join(objs)}",
                            )
                        )
        return out

    # -- export / copy ------------------------------------------------------

    def export_triples(self) -> str:
        """All triples as sorted tab-separated lines with provenance."""
        lines = [
            f"{s}\t{p}\t{o}\t{','.join(sorted(tags))}"
            for (s, p, o), tags in self._facts.items()
        ]
        lines.sort()
        return "\n".join(lines) + ("\n" if lines else "")

    def copy(self) -> "KnowledgeBase":
        dup = KnowledgeBase(self.universe)
        dup.properties = dict(self.properties)
        for ind in self.individuals.values():
            dup.individuals[ind.id] = Individual(
                ind.id, set(ind.classes), dict(ind.data), ind.solid
            )
        for key, tags in self._facts.items():
            dup._facts[key] = set(tags)
            s, p, o = key
            dup._sp.setdefault(p, {}).setdefault(s, set()).add(o)
            dup._po.setdefault(p, {}).setdefault(o, set()).add(s)
        dup._pending = list(self._pending)
        return dup


# ---------------------------------------------------------------------------
# relation vocabulary and profiles

RELATION_PROPERTIES = {rel: TOPO_PREFIX + rel.value for rel in TopoRelation}
PROPERTY_RELATIONS = {name: rel for rel, name in RELATION_PROPERTIES.items()}

_C = Characteristic

_BASE_PROFILE: dict[str, tuple[frozenset, Optional[str]]] = {
    "topo:disjoint": (frozenset({_C.SYMMETRIC, _C.IRREFLEXIVE}), None),
    "topo:meet": (frozenset({_C.SYMMETRIC, _C.IRREFLEXIVE}), None),
    "topo:overlaps": (frozenset({_C.SYMMETRIC, _C.IRREFLEXIVE}), None),
    "topo:equals": (frozenset({_C.TRANSITIVE, _C.SYMMETRIC, _C.REFLEXIVE}), None),
    "topo:contains": (
        frozenset({_C.TRANSITIVE, _C.ASYMMETRIC, _C.IRREFLEXIVE}),
        "topo:inside",
    ),
    "topo:inside": (
        frozenset({_C.TRANSITIVE, _C.ASYMMETRIC, _C.IRREFLEXIVE}),
        "topo:contains",
    ),
    "topo:covers": (frozenset({_C.ASYMMETRIC, _C.IRREFLEXIVE}), "topo:coveredBy"),
    "topo:coveredBy": (frozenset({_C.ASYMMETRIC, _C.IRREFLEXIVE}), "topo:covers"),
}

PROFILES: dict[str, dict[str, tuple[frozenset, Optional[str]]]] = {
    "corrected": _BASE_PROFILE,
    # Keeps the historical trait table verbatim, including transitive
    # disjointness.  Disjointness is not actually transitive: with it, two
    # mutually disjoint solids derive topo:disjoint(a, a) and the
    # irreflexivity check fires.  Use "corrected" unless reproducing that.
    "paper": {
        **_BASE_PROFILE,
        "topo:disjoint": (
            frozenset({_C.TRANSITIVE, _C.SYMMETRIC, _C.IRREFLEXIVE}),
            None,
        ),
    },
}


def declare_profile(kb: KnowledgeBase, profile: str = "corrected") -> None:
    """Declare the eight relation properties under the given profile."""
    try:
        table = PROFILES[profile]
    except KeyError:
        raise KBError(
            f"unknown profile {profile!r}; expected one of {sorted(PROFILES)}"
        ) from None
    for name, (chars, inverse_of) in table.items():
        kb.declare_property(name, chars, inverse_of)


# ---------------------------------------------------------------------------
# geometric relation solving

def _pair_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


class RelationSolver:
    """Memoized relation oracle over a KB's individuals.

    Each unordered pair is computed geometrically at most once; querying
    the swapped order returns the inverse from the memo.  Relations the KB
    already holds (a previous enrichment, or rule-derived) are primed into
    the memo at construction, so re-runs against an enriched KB perform no
    geometric work.  relate_calls counts actual geometric computations.
    """

    def __init__(
        self,
        kb: KnowledgeBase,
        *,
        epsilon: Optional[float] = None,
        delta: Optional[float] = None,
        refine: bool = False,
        max_depth: int = DEFAULT_MAX_DEPTH,
    ):
        if kb.universe is None:
            raise KBError("knowledge base has no universe; load a scene first")
        self.kb = kb
        self.universe = kb.universe
        self.epsilon = default_epsilon(kb.universe) if epsilon is None else float(epsilon)
        self.delta = default_delta(kb.universe) if delta is None else float(delta)
        self.refine = bool(refine)
        self.max_depth = max_depth
        self.relate_calls = 0
        self.memo: dict[tuple[str, str], TopoRelation] = {}
        self.materialized: set[tuple[str, str]] = set()
        self._lock = threading.Lock()
        self._prime_from_kb()

    def _prime_from_kb(self) -> None:
        for name, rel in PROPERTY_RELATIONS.items():
            for s, o in self.kb.sorted_pairs(name):
                if s == o:
                    continue
                key = _pair_key(s, o)
                oriented = rel if (s, o) == key else rel.inverse
                self.memo.setdefault(key, oriented)
                self.materialized.add(key)

    def relation(self, a_id: str, b_id: str) -> TopoRelation:
        """Relation of the ordered pair (a, b).

        Identical ids short-circuit to equals without geometric work; the
        identity relation needs no field evaluation.
        """
        if a_id == b_id:
            self.kb.individual(a_id)
            return TopoRelation.EQUALS
        key = _pair_key(a_id, b_id)
        rel = self.memo.get(key)
        if rel is None:
            sa = self._solid(key[0])
            sb = self._solid(key[1])
            rel = relate(
                sa,
                sb,
                self.epsilon,
                self.universe,
                refine=self.refine,
                delta=self.delta,
                max_depth=self.max_depth,
            )
            with self._lock:
                if key not in self.memo:
                    self.memo[key] = rel
                    self.relate_calls += 1
                else:
                    rel = self.memo[key]
        return rel if (a_id, b_id) == key else rel.inverse

    def _solid(self, ind_id: str) -> Solid:
        ind = self.kb.individual(ind_id)
        if ind.solid is None:
            raise KBError(f"individual {ind_id!r} has no geometry")
        return ind.solid

    def materialize(self, a_id: str, b_id: str):
        """Relation of (a, b), asserted into the KB in both directions.

        The pair's facts are written once per solver lifetime; repeats are
        set-membership checks.  Returns (relation, newly asserted triples).
        """
        rel = self.relation(a_id, b_id)
        new: list[tuple[str, str, str]] = []
        if a_id != b_id:
            key = _pair_key(a_id, b_id)
            if key not in self.materialized:
                self.materialized.add(key)
                oriented = rel if (a_id, b_id) == key else rel.inverse
                t1 = (key[0], RELATION_PROPERTIES[oriented], key[1])
                t2 = (key[1], RELATION_PROPERTIES[oriented.inverse], key[0])
                self.kb.assert_fact(*t1, "computed")
                self.kb.assert_fact(*t2, "computed")
                new = [t1, t2]
        return rel, new


@dataclass
class EnrichmentReport:
    pairs: int
    relation_counts: dict[str, int]
    elapsed_ms: float
    relate_calls: int


def enrich_topology(
    kb: KnowledgeBase,
    *,
    epsilon: Optional[float] = None,
    delta: Optional[float] = None,
    refine: bool = False,
    profile: str = "corrected",
    jobs: int = 1,
    max_depth: int = DEFAULT_MAX_DEPTH,
    solver: Optional[RelationSolver] = None,
) -> EnrichmentReport:
    """Assert the relation of every pair of solids, then saturate.

    Each unordered pair is computed once and asserted in both directions
    with provenance "computed".  With jobs > 1 the geometric computations
    run on a thread pool (the field kernels drop the interpreter lock);
    assertion order stays deterministic either way.
    """
    t0 = time.perf_counter()
    declare_profile(kb, profile)
    if solver is None:
        solver = RelationSolver(
            kb, epsilon=epsilon, delta=delta, refine=refine, max_depth=max_depth
        )
    ids = sorted(i for i, ind in kb.individuals.items() if ind.solid is not None)
    pairs = [
        (ids[i], ids[j])
        for i in range(len(ids))
        for j in range(i + 1, len(ids))
    ]
    if jobs > 1 and len(pairs) > 1:
        from concurrent.futures import ThreadPoolExecutor

        def work(chunk):
            for a, b in chunk:
                solver.relation(a, b)

        chunks = [pairs[k::jobs] for k in range(jobs)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, chunks))
    counts: Counter[str] = Counter()
    for a, b in pairs:
        rel, _ = solver.materialize(a, b)
        counts[rel.value] += 1
        counts[rel.inverse.value] += 1
    kb.saturate()
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    logger.debug(
        "enriched %d pairs in %.1f ms (%d geometric calls)",
        len(pairs),
        elapsed_ms,
        solver.relate_calls,
    )
    return EnrichmentReport(
        pairs=len(pairs),
        relation_counts=dict(sorted(counts.items())),
        elapsed_ms=elapsed_ms,
        relate_calls=solver.relate_calls,
    )
