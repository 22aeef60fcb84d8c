"""Assemble the per-attribute (optionally cross-attribute) factor graph.

Node set: one variable per usable dataset item per requested attribute.
Factor families, each behind its own kind tag so ablations can switch them:

* ``seed``    unary, gold-label row of the soft-1 matrix, seed split only
* ``emb``     unary, classifier probabilities, every node
* ``selpref`` binary, frame <-> pair with text co-occurrence above the PMI gate
* ``verbsim`` binary, same frame shape across embedding-similar verbs
* ``framesim`` binary, same-verb frames whose argument pair plays the same roles
* ``objsim``  binary (plus a unary EQ nudge), pairs sharing a comparator with
  an embedding-similar object
* ``attrsim`` binary, same frame across attributes that agree on seed labels

All binary factors use the fixed soft-1 agreement matrix; a row-flipped copy
encodes the expectation that two variables take opposite values.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    ATTRIBUTES,
    Attribute,
    FRAME_TYPE_ROLES,
    FrameNode,
    NodeRef,
    ObjectPairNode,
    RelationValue,
    flip,
)
from .factorgraph import FactorGraph
from .lexstats import CooccurrenceStats, Embeddings, KnowledgeDataset, cosine, pmi
from .maxent import (
    MaxentModel,
    TrainConfig,
    featurize_frame,
    featurize_object_pair,
    predict_proba,
    train,
)

# Fixed 3x3 agreement potential; rows/columns indexed (GT, EQ, LT).
SOFT_ONE = np.array(
    [
        [0.70, 0.10, 0.20],
        [0.15, 0.70, 0.15],
        [0.20, 0.10, 0.70],
    ]
)

FACTOR_KINDS = ("seed", "emb", "selpref", "verbsim", "framesim", "objsim", "attrsim")


def flipped_table(m: np.ndarray = SOFT_ONE) -> np.ndarray:
    """Row-permuted table D[r1][r2] = M[flip(r1)][r2].

    Encourages the second variable toward the opposite of the first (EQ
    pairs with EQ): used when two linked variables view a shared relation
    from opposite orientations.
    """
    rows = np.array([int(flip(RelationValue(i))) for i in range(3)])
    return np.asarray(m)[rows]


def seed_table(gold: RelationValue) -> np.ndarray:
    """Unary seed potential: the gold-label indexed row of the soft-1 matrix."""
    return SOFT_ONE[int(gold)].copy()


@dataclass(frozen=True)
class BuildConfig:
    """Thresholds and switches for graph construction (dev-tunable)."""

    verb_sim_threshold: float = 0.55
    obj_sim_threshold: float = 0.70
    pmi_threshold: float = 0.0
    attr_agreement_threshold: float = 0.95
    min_shared_seed_frames: int = 10
    enabled_factor_kinds: frozenset = frozenset(FACTOR_KINDS)
    seed_frames: bool = True
    seed_objects: bool = True
    emb_frames: bool = True
    emb_objects: bool = True

    def __post_init__(self):
        unknown = set(self.enabled_factor_kinds) - set(FACTOR_KINDS)
        if unknown:
            raise ValueError(f"unknown factor kinds {sorted(unknown)}")
        for name in ("verb_sim_threshold", "obj_sim_threshold", "pmi_threshold"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def enabled(self, kind: str) -> bool:
        return kind in self.enabled_factor_kinds

    def to_text(self) -> str:
        kinds = ",".join(sorted(self.enabled_factor_kinds))
        lines = [
            f"verb_sim_threshold={self.verb_sim_threshold!r}",
            f"obj_sim_threshold={self.obj_sim_threshold!r}",
            f"pmi_threshold={self.pmi_threshold!r}",
            f"attr_agreement_threshold={self.attr_agreement_threshold!r}",
            f"min_shared_seed_frames={self.min_shared_seed_frames}",
            f"enabled_factor_kinds={kinds}",
            f"seed_frames={self.seed_frames}",
            f"seed_objects={self.seed_objects}",
            f"emb_frames={self.emb_frames}",
            f"emb_objects={self.emb_objects}",
        ]
        return "\n".join(lines) + "\n"

    def to_file(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.to_text())

    @classmethod
    def from_file(cls, path) -> "BuildConfig":
        values: dict[str, str] = {}
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, 1):
                if not line.strip() or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}: line {lineno}: expected key=value")
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
        kwargs: dict = {}
        for key, value in values.items():
            if key in ("verb_sim_threshold", "obj_sim_threshold", "pmi_threshold", "attr_agreement_threshold"):
                kwargs[key] = float(value)
            elif key == "min_shared_seed_frames":
                kwargs[key] = int(value)
            elif key == "enabled_factor_kinds":
                kwargs[key] = frozenset(k for k in value.split(",") if k)
            elif key in ("seed_frames", "seed_objects", "emb_frames", "emb_objects"):
                kwargs[key] = value.lower() == "true"
            else:
                raise ValueError(f"{path}: unknown config key {key!r}")
        return cls(**kwargs)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


# -- trained classifier bundle --


@dataclass
class TrainedModels:
    """Per-(attribute, node-class) classifiers plus the embeddings that
    featurize their inputs."""

    models: dict[tuple[Attribute, str], MaxentModel]
    embeddings: Embeddings

    def model_for(self, attribute: Attribute, node_class: str) -> MaxentModel:
        try:
            return self.models[(attribute, node_class)]
        except KeyError:
            raise ValueError(f"no trained model for ({attribute}, {node_class!r})") from None

    def frame_proba(self, item, attribute: Attribute) -> np.ndarray:
        model = self.model_for(attribute, "frame")
        x = featurize_frame(item.verb, item.frame_type, item.preposition, self.embeddings)
        return predict_proba(model, x)

    def pair_proba(self, item, attribute: Attribute) -> np.ndarray:
        model = self.model_for(attribute, "object-pair")
        x = featurize_object_pair(item.x, item.y, self.embeddings)
        return predict_proba(model, x)


def train_models(
    dataset: KnowledgeDataset,
    embeddings: Embeddings,
    cfg: TrainConfig = TrainConfig(),
    attributes: Sequence[Attribute] = ATTRIBUTES,
) -> TrainedModels:
    """Train one classifier per (attribute, node-class) on seed items only."""
    models: dict[tuple[Attribute, str], MaxentModel] = {}
    with dataset.audit_label_access({"seed"}):
        for attribute in attributes:
            frame_examples = [
                (featurize_frame(it.verb, it.frame_type, it.preposition, embeddings), dataset.gold(it, attribute))
                for it in dataset.frames_in("seed")
                if dataset.has_label(it, attribute)
            ]
            pair_examples = [
                (featurize_object_pair(it.x, it.y, embeddings), dataset.gold(it, attribute))
                for it in dataset.pairs_in("seed")
                if dataset.has_label(it, attribute)
            ]
            if frame_examples:
                models[(attribute, "frame")] = train(frame_examples, cfg, attribute, "frame")
            if pair_examples:
                models[(attribute, "object-pair")] = train(pair_examples, cfg, attribute, "object-pair")
    return TrainedModels(models, embeddings)


# -- graph assembly --


@dataclass
class Build:
    graph: FactorGraph
    attributes: tuple[Attribute, ...]
    frame_items: dict[tuple, object]  # item key -> FrameItem
    pair_items: dict[tuple, object]
    report: dict[str, int] = field(default_factory=dict)
    _factor_keys: set = field(default_factory=set)

    def var(self, node: NodeRef) -> int:
        return self.graph.variable(node)

    def has_node(self, node: NodeRef) -> bool:
        return self.graph.has_variable(node)

    def add_factor(self, scope, table, kind: str) -> bool:
        """Add unless a factor of this kind already covers the same scope."""
        key = (kind, frozenset(scope))
        if key in self._factor_keys:
            return False
        self._factor_keys.add(key)
        self.graph.add_factor(scope, table, kind)
        self.report[kind] = self.report.get(kind, 0) + 1
        return True

    def report_tsv(self) -> str:
        lines = [f"variables\t{self.graph.n_variables}"]
        for kind in FACTOR_KINDS:
            lines.append(f"{kind}\t{self.report.get(kind, 0)}")
        return "\n".join(lines) + "\n"


def _resolve_attributes(attributes) -> tuple[Attribute, ...]:
    if attributes is None or attributes == "all":
        return ATTRIBUTES
    if isinstance(attributes, Attribute):
        return (attributes,)
    return tuple(attributes)


def make_nodes(dataset: KnowledgeDataset, attributes=None) -> Build:
    """One variable per usable (item, attribute); deterministic id order."""
    attrs = _resolve_attributes(attributes)
    graph = FactorGraph()
    nodes: list[NodeRef] = []
    for attribute in attrs:
        for it in dataset.frames:
            if dataset.has_label(it, attribute):
                nodes.append(it.node(attribute))
        for it in dataset.pairs:
            if dataset.has_label(it, attribute):
                nodes.append(it.node(attribute))
    for node in sorted(nodes, key=lambda n: n.sort_key):
        graph.add_variable(node)
    return Build(
        graph,
        attrs,
        {it.key: it for it in dataset.frames},
        {it.key: it for it in dataset.pairs},
    )


def add_seed_and_emb_factors(
    build: Build,
    dataset: KnowledgeDataset,
    models: Optional[TrainedModels],
    cfg: BuildConfig,
) -> Build:
    """Unary factors: soft-1 gold rows on seed nodes, classifier rows everywhere."""
    with dataset.audit_label_access({"seed"}):
        for attribute in build.attributes:
            for it in dataset.frames:
                if not dataset.has_label(it, attribute):
                    continue
                node = it.node(attribute)
                if cfg.enabled("seed") and cfg.seed_frames and it.split == "seed":
                    build.add_factor([build.var(node)], seed_table(dataset.gold(it, attribute)), "seed")
                if cfg.enabled("emb") and cfg.emb_frames:
                    if models is None:
                        raise ValueError("emb factors requested but no trained models supplied")
                    build.add_factor([build.var(node)], models.frame_proba(it, attribute), "emb")
            for it in dataset.pairs:
                if not dataset.has_label(it, attribute):
                    continue
                node = it.node(attribute)
                if cfg.enabled("seed") and cfg.seed_objects and it.split == "seed":
                    build.add_factor([build.var(node)], seed_table(dataset.gold(it, attribute)), "seed")
                if cfg.enabled("emb") and cfg.emb_objects:
                    if models is None:
                        raise ValueError("emb factors requested but no trained models supplied")
                    build.add_factor([build.var(node)], models.pair_proba(it, attribute), "emb")
    return build


def add_selectional_preference_factors(
    build: Build,
    stats: CooccurrenceStats,
    cfg: BuildConfig,
) -> Build:
    """Frame <-> pair factors gated by PMI over text co-occurrence.

    The stored pair node is canonical; when the canonical order reverses the
    frame's argument order the row-flipped table is used. Conflicting
    orientations of the same (frame, pair) evidence resolve to the larger
    joint count.
    """
    # frame_key -> frame item key(s); a frame_key maps to exactly one item.
    frames_by_key = {it.frame_key: it for it in build.frame_items.values()}

    chosen: dict[tuple[str, tuple[str, str]], tuple[int, tuple[str, str]]] = {}
    for frame_key, (p, q), count in stats.entries():
        if p == q:
            continue
        lo, hi = (p, q) if p < q else (q, p)
        slot = (frame_key, (lo, hi))
        prev = chosen.get(slot)
        if prev is None or count > prev[0]:
            chosen[slot] = (count, (p, q))

    for (frame_key, (lo, hi)), (count, evidence) in sorted(chosen.items()):
        frame_item = frames_by_key.get(frame_key)
        if frame_item is None:
            continue
        pair_item = build.pair_items.get((lo, hi))
        if pair_item is None:
            continue
        score = pmi(stats, frame_key, evidence)
        if not score > cfg.pmi_threshold:
            continue
        swapped = evidence[0] != lo
        table = flipped_table(SOFT_ONE) if swapped else SOFT_ONE
        for attribute in build.attributes:
            f_node = frame_item.node(attribute)
            p_node = pair_item.node(attribute)
            if build.has_node(f_node) and build.has_node(p_node):
                build.add_factor([build.var(f_node), build.var(p_node)], table, "selpref")
    return build


# Coarse role equivalence for the within-verb frame link: the second slot of
# a frame relation is "the argument acted upon" whether it arrived as a
# direct or prepositional object.
_COARSE_ROLE = {"agent": "agent", "theme": "patient", "goal": "patient"}


def frames_link(frame_type_a: str, frame_type_b: str) -> bool:
    """True when two frame shapes relate argument pairs playing the same roles."""
    ra = tuple(_COARSE_ROLE[r] for r in FRAME_TYPE_ROLES[frame_type_a])
    rb = tuple(_COARSE_ROLE[r] for r in FRAME_TYPE_ROLES[frame_type_b])
    return ra == rb


def add_similarity_factors(build: Build, emb: Embeddings, cfg: BuildConfig) -> Build:
    """Verb-, frame-, and object-similarity factors."""
    for attribute in build.attributes:
        frame_nodes = [
            it.node(attribute)
            for it in sorted(build.frame_items.values(), key=lambda f: f.key)
            if build.has_node(it.node(attribute))
        ]
        pair_nodes = [
            it.node(attribute)
            for it in sorted(build.pair_items.values(), key=lambda p: p.key)
            if build.has_node(it.node(attribute))
        ]

        if cfg.enabled("verbsim") or cfg.enabled("framesim"):
            _add_verb_and_frame_factors(build, emb, cfg, attribute, frame_nodes)
        if cfg.enabled("objsim"):
            _add_object_similarity_factors(build, emb, cfg, attribute, pair_nodes)
    return build


def _add_verb_and_frame_factors(build, emb, cfg, attribute, frame_nodes) -> None:
    by_verb: dict[str, list[FrameNode]] = {}
    for node in frame_nodes:
        by_verb.setdefault(node.verb, []).append(node)
    verbs = sorted(by_verb)

    if cfg.enabled("framesim"):
        for verb in verbs:
            nodes = by_verb[verb]
            for i in range(len(nodes)):
                for j in range(i + 1, len(nodes)):
                    if frames_link(nodes[i].frame_type, nodes[j].frame_type):
                        build.add_factor(
                            [build.var(nodes[i]), build.var(nodes[j])], SOFT_ONE, "framesim"
                        )

    if cfg.enabled("verbsim"):
        vectors = {v: emb.verbs.get(v) for v in verbs}
        for i in range(len(verbs)):
            for j in range(i + 1, len(verbs)):
                u, v = verbs[i], verbs[j]
                if vectors[u] is None or vectors[v] is None:
                    continue
                if cosine(vectors[u], vectors[v]) <= cfg.verb_sim_threshold:
                    continue
                shapes_v = {(n.frame_type, n.preposition): n for n in by_verb[v]}
                for node_u in by_verb[u]:
                    node_v = shapes_v.get((node_u.frame_type, node_u.preposition))
                    if node_v is not None:
                        build.add_factor([build.var(node_u), build.var(node_v)], SOFT_ONE, "verbsim")


def _add_object_similarity_factors(build, emb, cfg, attribute, pair_nodes) -> None:
    partners: dict[str, set[str]] = {}
    node_of_pair: dict[tuple[str, str], ObjectPairNode] = {}
    for node in pair_nodes:
        partners.setdefault(node.x, set()).add(node.y)
        partners.setdefault(node.y, set()).add(node.x)
        node_of_pair[(node.x, node.y)] = node
    objects = sorted(partners)
    vectors = {o: emb.objects.get(o) for o in objects}

    for i in range(len(objects)):
        for j in range(i + 1, len(objects)):
            x, y = objects[i], objects[j]
            if vectors[x] is None or vectors[y] is None:
                continue
            if cosine(vectors[x], vectors[y]) <= cfg.obj_sim_threshold:
                continue
            # The trivial case: the pair of similar objects is itself a node.
            direct = node_of_pair.get((x, y))
            if direct is not None:
                build.add_factor([build.var(direct)], seed_table(RelationValue.EQ), "objsim")
            for z in sorted(partners[x] & partners[y] - {x, y}):
                node_xz = node_of_pair[(x, z) if x < z else (z, x)]
                node_yz = node_of_pair[(y, z) if y < z else (z, y)]
                same_side = (node_xz.x == x) == (node_yz.x == y)
                table = SOFT_ONE if same_side else flipped_table(SOFT_ONE)
                build.add_factor([build.var(node_xz), build.var(node_yz)], table, "objsim")


def add_attribute_factors(build: Build, dataset: KnowledgeDataset, cfg: BuildConfig) -> Build:
    """Cross-attribute frame coupling, gated on seed-label agreement."""
    attrs = build.attributes
    with dataset.audit_label_access({"seed"}):
        for i in range(len(attrs)):
            for j in range(i + 1, len(attrs)):
                a, b = attrs[i], attrs[j]
                shared = [
                    it
                    for it in dataset.frames_in("seed")
                    if dataset.has_label(it, a) and dataset.has_label(it, b)
                ]
                if len(shared) < cfg.min_shared_seed_frames:
                    continue
                agree = sum(1 for it in shared if dataset.gold(it, a) == dataset.gold(it, b))
                if agree / len(shared) < cfg.attr_agreement_threshold:
                    continue
                for it in sorted(build.frame_items.values(), key=lambda f: f.key):
                    node_a, node_b = it.node(a), it.node(b)
                    if build.has_node(node_a) and build.has_node(node_b):
                        build.add_factor([build.var(node_a), build.var(node_b)], SOFT_ONE, "attrsim")
    return build


def build(
    attributes,
    dataset: KnowledgeDataset,
    emb: Optional[Embeddings],
    stats: Optional[CooccurrenceStats],
    models: Optional[TrainedModels],
    cfg: BuildConfig = BuildConfig(),
) -> Build:
    """Full graph assembly over the requested attribute(s)."""
    result = make_nodes(dataset, attributes)
    if cfg.enabled("seed") or cfg.enabled("emb"):
        add_seed_and_emb_factors(result, dataset, models, cfg)
    if cfg.enabled("selpref"):
        if stats is None:
            raise ValueError("selpref factors requested but no co-occurrence stats supplied")
        add_selectional_preference_factors(result, stats, cfg)
    if cfg.enabled("verbsim") or cfg.enabled("framesim") or cfg.enabled("objsim"):
        if emb is None:
            raise ValueError("similarity factors requested but no embeddings supplied")
        add_similarity_factors(result, emb, cfg)
    if cfg.enabled("attrsim") and len(result.attributes) > 1:
        add_attribute_factors(result, dataset, cfg)
    return result
