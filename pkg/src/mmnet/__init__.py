"""Colored-net control flow over an RDF metadata store and an addressed
media object store, coupled through parameterized actions: simulation,
interactive stepping, and bounded state-space exploration."""

from .actions import ActionDef, StorageInstance, apply_action, instantiate
from .media import ObjectStore, SyntheticImage
from .net import MMNet, Place, Transition, validate
from .netdef import emit_netdef, load_net_file, parse_netdef
from .patterns import (
    PatternConfig,
    build_content_enricher,
    build_feature_detector,
    build_message_filter,
    build_splitter,
    compose,
    with_key_adapter,
)
from .rdf import MetadataGraph, Term, Triple
from .runtime import (
    Binding,
    Bounds,
    Snapshot,
    Supply,
    enabled_bindings,
    explore,
    fire,
    initial_snapshot,
    reachable_nonempty,
    replay_trace,
    run_to_quiescence,
    values_of,
)
from .sparql import Query, answer, parse_query
from .values import DataType, Multiset, TypeDomain, Value, cast, standard_domain

__version__ = "0.1.0"

__all__ = [
    "ActionDef", "Binding", "Bounds", "DataType", "MMNet", "MetadataGraph",
    "Multiset", "ObjectStore", "PatternConfig", "Place", "Query", "Snapshot",
    "StorageInstance", "Supply", "SyntheticImage", "Term", "Transition",
    "Triple", "TypeDomain", "Value", "answer", "apply_action",
    "build_content_enricher", "build_feature_detector", "build_message_filter",
    "build_splitter", "cast", "compose", "emit_netdef", "enabled_bindings",
    "explore", "fire", "initial_snapshot", "instantiate", "load_net_file",
    "parse_netdef", "parse_query", "reachable_nonempty", "replay_trace",
    "run_to_quiescence", "standard_domain", "validate", "values_of",
    "with_key_adapter",
]
