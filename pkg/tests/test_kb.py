"""Triple store, saturation, consistency checking, and the relation solver."""

import random

import pytest

from topocsg.geometry import Universe, box
from topocsg.kb import (
    PROFILES,
    RDF_TYPE,
    Characteristic,
    DeclarationError,
    Individual,
    KBError,
    KnowledgeBase,
    RelationSolver,
    declare_profile,
    enrich_topology,
)
from topocsg.topology import TopoRelation

from conftest import floyd_warshall

C = Characteristic
U = Universe((0.0, 0.0, 0.0), (10.0, 10.0, 10.0))


def _kb_with(*ids: str, universe=None) -> KnowledgeBase:
    kb = KnowledgeBase(universe)
    for i in ids:
        kb.add_individual(Individual(i))
    return kb


class TestFacts:
    def test_duplicate_individual_rejected(self):
        kb = _kb_with("a")
        with pytest.raises(KBError, match="duplicate"):
            kb.add_individual(Individual("a"))

    def test_unknown_individual_rejected(self):
        kb = _kb_with("a")
        with pytest.raises(KBError, match="unknown individual"):
            kb.assert_fact("a", "p", "ghost")
        with pytest.raises(KBError, match="unknown individual"):
            kb.individual("ghost")

    def test_assert_returns_novelty(self):
        kb = _kb_with("a", "b")
        assert kb.assert_fact("a", "p", "b") is True
        assert kb.assert_fact("a", "p", "b") is False
        assert kb.holds("a", "p", "b")
        assert not kb.holds("b", "p", "a")

    def test_type_facts_sync_with_class_sets(self):
        kb = _kb_with("a")
        kb.assert_fact("a", RDF_TYPE, "Building")
        assert "Building" in kb.individual("a").classes
        assert kb.classes_of("a") == ("Building",)
        kb.retract("a", RDF_TYPE, "Building")
        assert "Building" not in kb.individual("a").classes
        assert kb.sorted_members("Building") == ()

    def test_classes_seed_type_facts(self):
        kb = KnowledgeBase()
        kb.add_individual(Individual("a", classes={"Zone", "Apron"}))
        assert kb.holds("a", RDF_TYPE, "Zone")
        assert kb.sorted_members("Apron") == ("a",)

    def test_provenance_merges_across_routes(self):
        kb = _kb_with("a", "b")
        kb.assert_fact("a", "p", "b", "computed")
        kb.assert_fact("a", "p", "b", "inferred(rule-1)")
        assert kb.provenance("a", "p", "b") == {"computed", "inferred(rule-1)"}

    def test_retract(self):
        kb = _kb_with("a", "b")
        kb.assert_fact("a", "p", "b")
        assert kb.retract("a", "p", "b") is True
        assert kb.retract("a", "p", "b") is False
        assert not kb.holds("a", "p", "b")
        assert kb.sorted_pairs("p") == ()

    def test_sorted_views(self):
        kb = _kb_with("c", "a", "b")
        for s, o in (("c", "a"), ("a", "b"), ("a", "c")):
            kb.assert_fact(s, "p", o)
        assert kb.sorted_pairs("p") == (("a", "b"), ("a", "c"), ("c", "a"))
        assert kb.sorted_objects("p", "a") == ("b", "c")
        assert kb.sorted_subjects("p", "a") == ("c",)


class TestDeclarations:
    def test_contradictory_characteristics_rejected(self):
        kb = KnowledgeBase()
        with pytest.raises(DeclarationError):
            kb.declare_property("p", {C.SYMMETRIC, C.ASYMMETRIC})
        with pytest.raises(DeclarationError):
            kb.declare_property("q", {C.REFLEXIVE, C.IRREFLEXIVE})

    def test_redeclaration_must_match(self):
        kb = KnowledgeBase()
        kb.declare_property("p", {C.TRANSITIVE})
        kb.declare_property("p", {C.TRANSITIVE})  # identical is fine
        with pytest.raises(DeclarationError, match="already declared"):
            kb.declare_property("p", {C.SYMMETRIC})

    def test_inverse_declaration_links_both_ways(self):
        kb = KnowledgeBase()
        kb.declare_property("inside")
        kb.declare_property("contains", inverse_of="inside")
        assert kb.properties["inside"].inverse_of == "contains"

    def test_conflicting_inverse_rejected(self):
        kb = KnowledgeBase()
        kb.declare_property("contains", inverse_of="inside")
        kb.declare_property("inside", inverse_of="contains")
        with pytest.raises(DeclarationError, match="inverse"):
            kb.declare_property("holds", inverse_of="inside")


class TestSaturation:
    def test_symmetric(self):
        kb = _kb_with("a", "b")
        kb.declare_property("touches", {C.SYMMETRIC})
        kb.assert_fact("a", "touches", "b")
        added = kb.saturate()
        assert ("b", "touches", "a") in added
        assert "inferred(symmetric)" in kb.provenance("b", "touches", "a")

    def test_inverse(self):
        kb = _kb_with("a", "b")
        declare_profile(kb)
        kb.assert_fact("a", "topo:contains", "b")
        kb.saturate()
        assert kb.holds("b", "topo:inside", "a")
        # and the inverse seeds its own inverse back, already present
        assert kb.provenance("a", "topo:contains", "b") >= {"asserted"}

    def test_reflexive_covers_later_individuals(self):
        kb = _kb_with("a")
        kb.declare_property("sameSize", {C.REFLEXIVE})
        kb.saturate()
        assert kb.holds("a", "sameSize", "a")
        kb.add_individual(Individual("b"))
        kb.saturate()
        assert kb.holds("b", "sameSize", "b")

    def test_transitive_closure_matches_floyd_warshall(self):
        rng = random.Random(99)
        for _ in range(50):
            n = rng.randint(3, 30)
            edges = set()
            for _ in range(rng.randint(n // 2, 2 * n)):
                i, j = rng.randrange(n), rng.randrange(n)
                if i != j:
                    edges.add((i, j))
            kb = _kb_with(*(f"n{i}" for i in range(n)))
            kb.declare_property("reaches", {C.TRANSITIVE})
            for i, j in edges:
                kb.assert_fact(f"n{i}", "reaches", f"n{j}")
            kb.saturate()
            got = {
                (int(s[1:]), int(o[1:])) for s, o in kb.sorted_pairs("reaches")
            }
            assert got == floyd_warshall(n, edges)

    def test_idempotent(self):
        kb = _kb_with("a", "b", "c")
        kb.declare_property("reaches", {C.TRANSITIVE, C.SYMMETRIC})
        kb.assert_fact("a", "reaches", "b")
        kb.assert_fact("b", "reaches", "c")
        kb.saturate()
        before = kb.export_triples()
        assert kb.saturate() == []
        assert kb.export_triples() == before

    def test_incremental_seeds(self):
        kb = _kb_with("a", "b", "c")
        kb.declare_property("reaches", {C.TRANSITIVE})
        kb.assert_fact("a", "reaches", "b")
        kb.saturate()
        kb.assert_fact("b", "reaches", "c")
        kb.saturate()
        assert kb.holds("a", "reaches", "c")


class TestConsistency:
    def test_irreflexive_violation(self):
        kb = _kb_with("a")
        kb.declare_property("disjointFrom", {C.IRREFLEXIVE})
        kb.assert_fact("a", "disjointFrom", "a")
        (v,) = kb.check_consistency()
        assert v.kind is C.IRREFLEXIVE and v.property == "disjointFrom"

    def test_asymmetric_violation_reported_once_per_pair(self):
        kb = _kb_with("a", "b")
        kb.declare_property("above", {C.ASYMMETRIC})
        kb.assert_fact("a", "above", "b")
        kb.assert_fact("b", "above", "a")
        violations = kb.check_consistency()
        assert len(violations) == 1
        assert violations[0].kind is C.ASYMMETRIC
        assert set(violations[0].facts) == {
            ("a", "above", "b"), ("b", "above", "a")
        }

    def test_functional_violation(self):
        kb = _kb_with("a", "b", "c")
        kb.declare_property("locatedIn", {C.FUNCTIONAL})
        kb.assert_fact("a", "locatedIn", "b")
        kb.assert_fact("a", "locatedIn", "c")
        (v,) = kb.check_consistency()
        assert v.kind is C.FUNCTIONAL

    def test_clean_kb_has_no_violations(self):
        kb = _kb_with("a", "b")
        declare_profile(kb)
        kb.assert_fact("a", "topo:meet", "b")
        kb.saturate()
        assert kb.check_consistency() == []


class TestProfiles:
    def _disjoint_chain(self, profile: str) -> KnowledgeBase:
        kb = _kb_with("a", "b", "c")
        declare_profile(kb, profile)
        kb.assert_fact("a", "topo:disjoint", "b")
        kb.assert_fact("b", "topo:disjoint", "c")
        kb.saturate()
        return kb

    def test_corrected_profile_does_not_chain_disjointness(self):
        kb = self._disjoint_chain("corrected")
        assert not kb.holds("a", "topo:disjoint", "c")
        assert kb.check_consistency() == []

    def test_paper_profile_chains_disjointness(self):
        kb = self._disjoint_chain("paper")
        assert kb.holds("a", "topo:disjoint", "c")
        # symmetry + transitivity also yield disjoint(a, a): flagged
        kinds = {v.kind for v in kb.check_consistency()}
        assert C.IRREFLEXIVE in kinds

    def test_unknown_profile(self):
        with pytest.raises(KBError, match="unknown profile"):
            declare_profile(KnowledgeBase(), "legacy")

    def test_profiles_cover_all_eight_relations(self):
        for table in PROFILES.values():
            assert set(table) == {
                "topo:" + r.value for r in TopoRelation
            }


class TestExportAndCopy:
    def test_export_is_order_independent(self):
        def build(order):
            kb = _kb_with("a", "b", "c")
            kb.declare_property("p", {C.SYMMETRIC})
            for s, o, tag in order:
                kb.assert_fact(s, "p", o, tag)
            kb.saturate()
            return kb.export_triples()

        facts = [("a", "b", "asserted"), ("b", "a", "computed"),
                 ("b", "c", "asserted")]
        assert build(facts) == build(facts[::-1])

    def test_export_format(self):
        kb = _kb_with("b", "a")
        kb.assert_fact("b", "p", "a", "computed")
        kb.assert_fact("b", "p", "a", "asserted")
        text = kb.export_triples()
        assert text.endswith("\n")
        lines = text.splitlines()
        assert lines == sorted(lines)
        assert "b\tp\ta\tasserted,computed" in lines

    def test_copy_is_independent(self):
        kb = _kb_with("a", "b")
        kb.declare_property("p", {C.SYMMETRIC})
        kb.assert_fact("a", "p", "b")
        dup = kb.copy()
        dup.assert_fact("b", "p", "b")
        dup.assert_class("a", "Zone")
        assert not kb.holds("b", "p", "b")
        assert "Zone" not in kb.individual("a").classes

    def test_copy_preserves_pending_saturation_work(self):
        kb = _kb_with("a", "b")
        kb.declare_property("p", {C.SYMMETRIC})
        kb.assert_fact("a", "p", "b")
        dup = kb.copy()
        kb.saturate()
        dup.saturate()
        assert dup.export_triples() == kb.export_triples()


def _solid_kb() -> KnowledgeBase:
    kb = KnowledgeBase(U)
    kb.add_individual(Individual("outer", solid=box((1, 1, 1), (5, 5, 5))))
    kb.add_individual(Individual("inner", solid=box((2, 2, 2), (4, 4, 4))))
    kb.add_individual(Individual("apart", solid=box((6, 6, 6), (9, 9, 9))))
    kb.add_individual(Individual("tag"))  # no geometry
    return kb


class TestRelationSolver:
    def test_requires_universe(self):
        with pytest.raises(KBError, match="universe"):
            RelationSolver(_kb_with("a"))

    def test_identity_needs_no_geometry(self):
        solver = RelationSolver(_solid_kb())
        assert solver.relation("tag", "tag") is TopoRelation.EQUALS
        assert solver.relate_calls == 0

    def test_missing_geometry(self):
        solver = RelationSolver(_solid_kb())
        with pytest.raises(KBError, match="no geometry"):
            solver.relation("tag", "outer")

    def test_memoized_with_inverse_orientation(self):
        solver = RelationSolver(_solid_kb())
        assert solver.relation("outer", "inner") is TopoRelation.CONTAINS
        assert solver.relate_calls == 1
        assert solver.relation("inner", "outer") is TopoRelation.INSIDE
        assert solver.relate_calls == 1

    def test_materialize_writes_once(self):
        kb = _solid_kb()
        solver = RelationSolver(kb)
        rel, new = solver.materialize("inner", "outer")
        assert rel is TopoRelation.INSIDE
        assert set(new) == {
            ("inner", "topo:inside", "outer"),
            ("outer", "topo:contains", "inner"),
        }
        assert kb.provenance("inner", "topo:inside", "outer") == {"computed"}
        rel2, new2 = solver.materialize("outer", "inner")
        assert (rel2, new2) == (TopoRelation.CONTAINS, [])

    def test_priming_skips_known_pairs(self):
        kb = _solid_kb()
        enrich_topology(kb)
        solver = RelationSolver(kb)
        assert solver.relation("outer", "inner") is TopoRelation.CONTAINS
        assert solver.relation("apart", "inner") is TopoRelation.DISJOINT
        assert solver.relate_calls == 0
        _, new = solver.materialize("outer", "apart")
        assert new == []


class TestEnrichment:
    def test_counts_and_facts(self):
        kb = _solid_kb()
        report = enrich_topology(kb)
        assert report.pairs == 3
        assert report.relate_calls == 3
        assert report.relation_counts == {
            "contains": 1, "inside": 1, "disjoint": 4
        }
        assert kb.holds("outer", "topo:contains", "inner")
        assert kb.holds("inner", "topo:inside", "outer")
        # saturation re-derives the symmetric twin and merges its tag
        assert kb.provenance("apart", "topo:disjoint", "outer") == {
            "computed", "inferred(symmetric)"
        }
        assert kb.check_consistency() == []

    def test_rerun_does_no_geometric_work(self):
        kb = _solid_kb()
        enrich_topology(kb)
        before = kb.export_triples()
        report = enrich_topology(kb)
        assert report.relate_calls == 0
        assert kb.export_triples() == before

    def test_threaded_run_matches_serial(self):
        serial, threaded = _solid_kb(), _solid_kb()
        enrich_topology(serial, jobs=1)
        enrich_topology(threaded, jobs=4)
        assert threaded.export_triples() == serial.export_triples()

    def test_refine_upgrades_contact_pairs(self):
        kb = KnowledgeBase(U)
        kb.add_individual(Individual("left", solid=box((1, 1, 1), (3, 3, 3))))
        kb.add_individual(Individual("right", solid=box((3, 1, 1), (5, 3, 3))))
        report = enrich_topology(kb, refine=True)
        assert report.relation_counts == {"meet": 2}
        assert kb.holds("left", "topo:meet", "right")
