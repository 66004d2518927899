"""Qualitative 3D topological relations over CSG solids.

Solids are signed-distance CSG trees inside an axis-aligned universe.
`relate` classifies a pair into one of eight named relations by testing
four region emptinesses with a conservative octree; a small knowledge
base stores the results with algebraic characteristics, and a Horn-rule
engine with topological builtins infers over them.
"""

from .geometry import (
    Bounds,
    DomainError,
    GeometryError,
    HalfSpace,
    Solid,
    Universe,
    Vec3,
    box,
    capsule,
    clip,
    complement,
    convex_polytope,
    difference,
    halfspace,
    intersection,
    slab,
    sphere,
    thicken_line,
    thicken_plane,
    union,
)
from .octree import (
    DEFAULT_MAX_DEPTH,
    default_delta,
    default_epsilon,
    is_empty,
    pair_nonempty,
    shell_contact,
)
from .topology import (
    DegenerateOperandError,
    FourIMask,
    TopoRelation,
    UnclassifiableMaskError,
    classify,
    four_im_mask,
    relate,
)
from .kb import (
    Characteristic,
    EnrichmentReport,
    Individual,
    KBError,
    KnowledgeBase,
    PROFILES,
    PropertyDecl,
    RelationSolver,
    Violation,
    declare_profile,
    enrich_topology,
)
from .rules import (
    DerivationLog,
    Query,
    QueryResult,
    Rule,
    RuleError,
    RuleSafetyError,
    RuleSyntaxError,
    evaluate,
    parse_rule,
    parse_rules,
    query,
    replay,
)
from .scene import SceneDocument, SceneError, SceneObject, load_scene, loads_scene
from .bench import BenchConfig, BenchResult, check_scaling, run_bench

__version__ = "0.1.0"

__all__ = [
    "Bounds",
    "BenchConfig",
    "BenchResult",
    "Characteristic",
    "DEFAULT_MAX_DEPTH",
    "DegenerateOperandError",
    "DerivationLog",
    "DomainError",
    "EnrichmentReport",
    "FourIMask",
    "GeometryError",
    "HalfSpace",
    "Individual",
    "KBError",
    "KnowledgeBase",
    "PROFILES",
    "PropertyDecl",
    "Query",
    "QueryResult",
    "RelationSolver",
    "Rule",
    "RuleError",
    "RuleSafetyError",
    "RuleSyntaxError",
    "SceneDocument",
    "SceneError",
    "SceneObject",
    "Solid",
    "TopoRelation",
    "UnclassifiableMaskError",
    "Universe",
    "Vec3",
    "Violation",
    "box",
    "capsule",
    "check_scaling",
    "classify",
    "clip",
    "complement",
    "convex_polytope",
    "declare_profile",
    "default_delta",
    "default_epsilon",
    "difference",
    "enrich_topology",
    "evaluate",
    "four_im_mask",
    "halfspace",
    "intersection",
    "is_empty",
    "load_scene",
    "loads_scene",
    "pair_nonempty",
    "parse_rule",
    "parse_rules",
    "query",
    "relate",
    "replay",
    "run_bench",
    "shell_contact",
    "slab",
    "sphere",
    "thicken_line",
    "thicken_plane",
    "union",
]
