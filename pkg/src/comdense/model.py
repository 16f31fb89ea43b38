"""Scoring model: parallel relation-selected and shared dense encoders.

A triple query (s, r) is scored against every entity at once.  The
concatenated embedding x = [e_s; e_r] passes through two encoders in
parallel:

* branch A, selected per relation: either a stack of affine layers whose
  weights are indexed by r (the combined variant), a learned translation
  x + v_r (the translation variant), or nothing (the shared-only variant);
* branch B, one wide affine stack shared across all relations, with
  n * d_h output rows per layer.

Branch outputs (each followed by the activation) are concatenated,
dropout-masked, projected back to entity space by a single matrix, passed
through the activation once more, and scored by inner product with every
entity embedding:

    scores_i = f( [f(A(x)); f(B(x))] @ proj_W ) . e_i

Gradients are derived by hand in :func:`backward` against a cache of
intermediate activations; there is no autodiff anywhere.

All forward/backward code is internally batched over B queries; the
single-query entry points wrap a batch of one.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .numerics import ACTIVATIONS, dropout, glorot_uniform

VARIANT_COMBINED = "ComDensE"
VARIANT_SHARED_ONLY = "SharedOnly"
VARIANT_TRANSLATION_ONLY = "RelationTranslationOnly"
VARIANTS = (VARIANT_COMBINED, VARIANT_SHARED_ONLY, VARIANT_TRANSLATION_ONLY)

DTYPES = {"float32": np.float32, "float64": np.float64}


@dataclass
class ModelConfig:
    """Architecture and regularisation settings.

    ``d_e``/``d_r`` are the entity/relation embedding dims (their sum d is
    the encoder input width).  The shared branch has ``width_n * d_h``
    output rows per layer and ``depth_common`` layers; the relation branch
    has ``d_z`` output rows and ``depth_relation`` layers (combined
    variant only; the translation variant is always a single vector
    addition).  ``dtype`` is the in-memory compute precision; checkpoints
    always store 32-bit floats.
    """

    d_e: int = 256
    d_r: int = 256
    d_h: int = 256
    width_n: int = 2
    d_z: int = 256
    depth_common: int = 1
    depth_relation: int = 1
    variant: str = VARIANT_COMBINED
    input_dropout: float = 0.4
    hidden_dropout: float = 0.5
    activation: str = "relu"
    dtype: str = "float64"

    @property
    def d(self) -> int:
        return self.d_e + self.d_r

    @property
    def common_width(self) -> int:
        return self.width_n * self.d_h

    @property
    def branch_a_dim(self) -> int:
        """Output width of the relation-selected branch (0 when absent)."""
        if self.variant == VARIANT_COMBINED:
            return self.d_z
        if self.variant == VARIANT_TRANSLATION_ONLY:
            return self.d
        return 0

    @property
    def projection_input_dim(self) -> int:
        return self.branch_a_dim + self.common_width

    def validate(self) -> None:
        """Raise ValueError naming the offending field on any bad setting."""
        for name in ("d_e", "d_r", "d_h", "width_n", "d_z", "depth_common", "depth_relation"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {', '.join(VARIANTS)}, got {self.variant!r}")
        for name in ("input_dropout", "hidden_dropout"):
            rate = getattr(self, name)
            if not isinstance(rate, (int, float)) or not 0.0 <= float(rate) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {rate!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {', '.join(sorted(ACTIVATIONS))}, got {self.activation!r}")
        if self.dtype not in DTYPES:
            raise ValueError(f"dtype must be one of {', '.join(sorted(DTYPES))}, got {self.dtype!r}")
        if self.variant == VARIANT_TRANSLATION_ONLY and self.depth_relation != 1:
            raise ValueError("depth_relation must be 1 for the translation variant (it is a single vector addition)")

    def np_dtype(self):
        return DTYPES[self.dtype]


@dataclass
class Parameters:
    """All learnable tensors; shapes follow ModelConfig plus vocabulary sizes.

    Exactly one of the relation-branch families is populated: ``rel_W`` /
    ``rel_b`` (stacked per-relation affine layers, combined variant),
    ``rel_v`` (per-relation translation vectors), or neither (shared-only).
    ``named_tensors`` fixes a canonical ordering used by the optimizer
    state and the checkpoint manifest.
    """

    entity_emb: np.ndarray
    relation_emb: np.ndarray
    rel_W: list[np.ndarray] = field(default_factory=list)
    rel_b: list[np.ndarray] = field(default_factory=list)
    rel_v: np.ndarray | None = None
    common_W: list[np.ndarray] = field(default_factory=list)
    common_b: list[np.ndarray] = field(default_factory=list)
    proj_W: np.ndarray | None = None

    @property
    def num_entities(self) -> int:
        return self.entity_emb.shape[0]

    @property
    def num_relations_stored(self) -> int:
        return self.relation_emb.shape[0]

    def named_tensors(self) -> Iterator[tuple[str, np.ndarray]]:
        """Yield (name, array) pairs in canonical manifest order."""
        yield "entity_emb", self.entity_emb
        yield "relation_emb", self.relation_emb
        for i, (W, b) in enumerate(zip(self.rel_W, self.rel_b)):
            yield f"rel_W.{i}", W
            yield f"rel_b.{i}", b
        if self.rel_v is not None:
            yield "rel_v", self.rel_v
        for i, (W, b) in enumerate(zip(self.common_W, self.common_b)):
            yield f"common_W.{i}", W
            yield f"common_b.{i}", b
        yield "proj_W", self.proj_W

    @classmethod
    def from_named(cls, tensors: dict[str, np.ndarray]) -> "Parameters":
        """Rebuild from a name→array mapping (checkpoint loading)."""

        def stacked(prefix: str) -> list[np.ndarray]:
            keys = sorted(
                (k for k in tensors if k.startswith(prefix + ".")),
                key=lambda k: int(k.split(".", 1)[1]),
            )
            return [tensors[k] for k in keys]

        return cls(
            entity_emb=tensors["entity_emb"],
            relation_emb=tensors["relation_emb"],
            rel_W=stacked("rel_W"),
            rel_b=stacked("rel_b"),
            rel_v=tensors.get("rel_v"),
            common_W=stacked("common_W"),
            common_b=stacked("common_b"),
            proj_W=tensors["proj_W"],
        )

    def copy(self) -> "Parameters":
        return Parameters(
            entity_emb=self.entity_emb.copy(),
            relation_emb=self.relation_emb.copy(),
            rel_W=[W.copy() for W in self.rel_W],
            rel_b=[b.copy() for b in self.rel_b],
            rel_v=None if self.rel_v is None else self.rel_v.copy(),
            common_W=[W.copy() for W in self.common_W],
            common_b=[b.copy() for b in self.common_b],
            proj_W=self.proj_W.copy(),
        )

    def zeros_like(self) -> "Parameters":
        return Parameters(
            entity_emb=np.zeros_like(self.entity_emb),
            relation_emb=np.zeros_like(self.relation_emb),
            rel_W=[np.zeros_like(W) for W in self.rel_W],
            rel_b=[np.zeros_like(b) for b in self.rel_b],
            rel_v=None if self.rel_v is None else np.zeros_like(self.rel_v),
            common_W=[np.zeros_like(W) for W in self.common_W],
            common_b=[np.zeros_like(b) for b in self.common_b],
            proj_W=np.zeros_like(self.proj_W),
        )


# Gradients share the Parameters layout exactly.
Gradients = Parameters


@dataclass
class ForwardCache:
    """Intermediate activations from a training-mode forward pass.

    Everything backward needs: the dropout-masked input and both dropout
    masks, per-layer inputs and pre-activations for each branch, and the
    post-projection pre-activation and output.  Arrays are batched with a
    leading B axis.
    """

    subjects: np.ndarray
    relations: np.ndarray
    x: np.ndarray
    in_mask: np.ndarray
    rel_inputs: list[np.ndarray]
    rel_pres: list[np.ndarray]
    trans_pre: np.ndarray | None
    common_inputs: list[np.ndarray]
    common_pres: list[np.ndarray]
    hid_mask: np.ndarray
    z: np.ndarray
    u: np.ndarray
    h: np.ndarray


def init_parameters(config: ModelConfig, vocab, rng: np.random.Generator) -> Parameters:
    """Glorot-uniform weights, zero biases, Glorot embedding tables.

    Matrices of shape (m, n) draw from U(-a, a) with a = sqrt(6/(m+n));
    stacked per-relation weights use the per-slice fans.  Embedding tables
    (and the per-relation translation table) use fan = (row count, dim).
    Draw order is fixed, so a seeded generator reproduces parameters
    bit for bit.
    """
    config.validate()
    num_entities, num_relations = _vocab_sizes(vocab)
    dt = config.np_dtype()
    d = config.d
    params = Parameters(
        entity_emb=glorot_uniform((num_entities, config.d_e), rng, dtype=dt),
        relation_emb=glorot_uniform((num_relations, config.d_r), rng, dtype=dt),
    )
    if config.variant == VARIANT_COMBINED:
        for layer in range(config.depth_relation):
            in_dim = d if layer == 0 else config.d_z
            params.rel_W.append(
                glorot_uniform((num_relations, config.d_z, in_dim), rng, dtype=dt, fans=(config.d_z, in_dim))
            )
            params.rel_b.append(np.zeros((num_relations, config.d_z), dtype=dt))
    elif config.variant == VARIANT_TRANSLATION_ONLY:
        params.rel_v = glorot_uniform((num_relations, d), rng, dtype=dt)
    width = config.common_width
    for layer in range(config.depth_common):
        in_dim = d if layer == 0 else width
        params.common_W.append(glorot_uniform((width, in_dim), rng, dtype=dt))
        params.common_b.append(np.zeros(width, dtype=dt))
    params.proj_W = glorot_uniform((config.projection_input_dim, config.d_e), rng, dtype=dt)
    return params


def _vocab_sizes(vocab) -> tuple[int, int]:
    """Accept a Vocabulary or an (entities, stored relations) pair."""
    if hasattr(vocab, "num_entities"):
        return vocab.num_entities, vocab.num_relations_stored
    num_entities, num_relations = vocab
    return int(num_entities), int(num_relations)


def _check_indices(values: np.ndarray, limit: int, what: str) -> None:
    if values.size and (values.min() < 0 or values.max() >= limit):
        raise IndexError(f"{what} index out of range [0, {limit})")


def forward_batch(
    params: Parameters,
    config: ModelConfig,
    subjects: np.ndarray,
    relations: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache | None]:
    """Score B queries against all entities; returns (B, E) scores.

    The cache of intermediates is returned only in training mode (it is
    what backward consumes); inference is a pure function with dropout
    disabled.
    """
    subjects = np.asarray(subjects, dtype=np.int64)
    relations = np.asarray(relations, dtype=np.int64)
    _check_indices(subjects, params.num_entities, "entity")
    _check_indices(relations, params.num_relations_stored, "relation")
    act, _ = ACTIVATIONS[config.activation]

    x0 = np.concatenate([params.entity_emb[subjects], params.relation_emb[relations]], axis=1)
    x, in_mask = dropout(x0, config.input_dropout, rng, training)

    rel_inputs: list[np.ndarray] = []
    rel_pres: list[np.ndarray] = []
    trans_pre = None
    if config.variant == VARIANT_COMBINED:
        cur = x
        for W_stack, b_stack in zip(params.rel_W, params.rel_b):
            rel_inputs.append(cur)
            pre = _relation_affine(W_stack, b_stack, relations, cur)
            rel_pres.append(pre)
            cur = act(pre)
        branch_a = cur
    elif config.variant == VARIANT_TRANSLATION_ONLY:
        trans_pre = x + params.rel_v[relations]
        branch_a = act(trans_pre)
    else:
        branch_a = None

    common_inputs: list[np.ndarray] = []
    common_pres: list[np.ndarray] = []
    cur = x
    for W, b in zip(params.common_W, params.common_b):
        common_inputs.append(cur)
        pre = cur @ W.T + b
        common_pres.append(pre)
        cur = act(pre)

    concat = cur if branch_a is None else np.concatenate([branch_a, cur], axis=1)
    z, hid_mask = dropout(concat, config.hidden_dropout, rng, training)
    u = z @ params.proj_W
    h = act(u)
    scores = h @ params.entity_emb.T

    if not training:
        return scores, None
    cache = ForwardCache(
        subjects=subjects,
        relations=relations,
        x=x,
        in_mask=in_mask,
        rel_inputs=rel_inputs,
        rel_pres=rel_pres,
        trans_pre=trans_pre,
        common_inputs=common_inputs,
        common_pres=common_pres,
        hid_mask=hid_mask,
        z=z,
        u=u,
        h=h,
    )
    return scores, cache


def forward(
    params: Parameters,
    config: ModelConfig,
    s: int,
    r: int,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache | None]:
    """Single-query scoring: returns a length-E score vector plus the cache."""
    scores, cache = forward_batch(params, config, np.array([s]), np.array([r]), training=training, rng=rng)
    return scores[0], cache


def _relation_affine(W_stack: np.ndarray, b_stack: np.ndarray, relations: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply the relation-indexed affine layer, grouping rows by relation id."""
    out = np.empty((x.shape[0], W_stack.shape[1]), dtype=x.dtype)
    for rid in np.unique(relations):
        rows = np.nonzero(relations == rid)[0]
        out[rows] = x[rows] @ W_stack[rid].T + b_stack[rid]
    return out


def backward(params: Parameters, config: ModelConfig, cache: ForwardCache, dscores: np.ndarray) -> Gradients:
    """Exact gradients of sum(scores * dscores) wrt every parameter.

    ``dscores`` is (E,) for a single query or (B, E) batched.  Entity
    embeddings receive gradient both through the all-entity output
    product and through the subject rows of the input; relation tensors
    receive gradient only at the relation ids present in the batch.
    """
    if cache is None:
        raise ValueError("backward requires the cache from a training-mode forward pass")
    dscores = np.asarray(dscores)
    if dscores.ndim == 1:
        dscores = dscores[None, :]
    if dscores.shape != (cache.h.shape[0], params.num_entities):
        raise ValueError(
            f"dscores shape {dscores.shape} does not match batch {cache.h.shape[0]} x entities {params.num_entities}"
        )
    _, act_back = ACTIVATIONS[config.activation]
    grads = params.zeros_like()
    relations = cache.relations

    # Output side: scores = h @ entity_emb.T.
    dh = dscores @ params.entity_emb
    grads.entity_emb += dscores.T @ cache.h

    du = act_back(cache.u, dh)
    grads.proj_W += cache.z.T @ du
    dz = du @ params.proj_W.T
    dconcat = dz * cache.hid_mask

    a_dim = config.branch_a_dim
    da, dc = dconcat[:, :a_dim], dconcat[:, a_dim:]

    dcur = dc
    for layer in reversed(range(len(params.common_W))):
        dpre = act_back(cache.common_pres[layer], dcur)
        grads.common_W[layer] += dpre.T @ cache.common_inputs[layer]
        grads.common_b[layer] += dpre.sum(axis=0)
        dcur = dpre @ params.common_W[layer]
    dx = dcur

    if config.variant == VARIANT_COMBINED:
        dcur = da
        for layer in reversed(range(len(params.rel_W))):
            dpre = act_back(cache.rel_pres[layer], dcur)
            layer_in = cache.rel_inputs[layer]
            dnext = np.empty_like(layer_in)
            for rid in np.unique(relations):
                rows = np.nonzero(relations == rid)[0]
                grads.rel_W[layer][rid] += dpre[rows].T @ layer_in[rows]
                grads.rel_b[layer][rid] += dpre[rows].sum(axis=0)
                dnext[rows] = dpre[rows] @ params.rel_W[layer][rid]
            dcur = dnext
        dx = dx + dcur
    elif config.variant == VARIANT_TRANSLATION_ONLY:
        dpre = act_back(cache.trans_pre, da)
        np.add.at(grads.rel_v, relations, dpre)
        dx = dx + dpre

    dx0 = dx * cache.in_mask
    np.add.at(grads.entity_emb, cache.subjects, dx0[:, : config.d_e])
    np.add.at(grads.relation_emb, relations, dx0[:, config.d_e :])
    return grads


def score_triple(params: Parameters, config: ModelConfig, s: int, r: int, o: int) -> float:
    """Inference-mode score of a single (s, r, o); equals forward(s, r)[o]."""
    if not 0 <= o < params.num_entities:
        raise IndexError(f"entity index out of range [0, {params.num_entities})")
    scores, _ = forward(params, config, s, r, training=False)
    return float(scores[o])


def param_breakdown(config: ModelConfig, num_entities: int, num_relations_stored: int) -> dict[str, int]:
    """Element counts per tensor group, computed from shapes alone.

    Groups: embeddings (both tables), relation_aware (per-relation weights
    and biases, or translation vectors), common (shared stack), projection.
    """
    config.validate()
    d = config.d
    width = config.common_width
    embeddings = num_entities * config.d_e + num_relations_stored * config.d_r
    if config.variant == VARIANT_COMBINED:
        relation_aware = 0
        for layer in range(config.depth_relation):
            in_dim = d if layer == 0 else config.d_z
            relation_aware += num_relations_stored * (config.d_z * in_dim + config.d_z)
    elif config.variant == VARIANT_TRANSLATION_ONLY:
        relation_aware = num_relations_stored * d
    else:
        relation_aware = 0
    common = 0
    for layer in range(config.depth_common):
        in_dim = d if layer == 0 else width
        common += width * in_dim + width
    projection = config.projection_input_dim * config.d_e
    total = embeddings + relation_aware + common + projection
    return {
        "embeddings": embeddings,
        "relation_aware": relation_aware,
        "common": common,
        "projection": projection,
        "total": total,
    }


def param_count(config: ModelConfig, vocab) -> int:
    """Total learnable element count for the config and vocabulary sizes."""
    num_entities, num_relations = _vocab_sizes(vocab)
    return param_breakdown(config, num_entities, num_relations)["total"]


def config_from_dict(obj: dict) -> ModelConfig:
    """Build a ModelConfig from a plain dict, rejecting unknown keys."""
    known = {f.name for f in ModelConfig.__dataclass_fields__.values()}
    unknown = set(obj) - known
    if unknown:
        raise ValueError(f"unknown model config keys: {', '.join(sorted(unknown))}")
    cfg = ModelConfig(**obj)
    cfg.validate()
    return cfg


def with_overrides(config: ModelConfig, **changes) -> ModelConfig:
    cfg = replace(config, **changes)
    cfg.validate()
    return cfg
