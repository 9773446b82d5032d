"""Forward evaluation and reverse differentiation on computational graphs.

This is the ground-truth gradient engine every other learning rule in
the package is compared against.  The loss is the scalar quadratic
``E = 1/2 (mu_out - y)^2`` at the single output vertex; updates follow
the descent convention ``delta_z = -lr * dE/dz``.

Error-signal accumulation across parents uses order-independent
correctly rounded sums (:func:`pcgraph.numerics.fsum_arrays`), so leaf
updates are exactly invariant under edge re-routings that preserve the
arriving contributions — in particular under identity-vertex insertion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DomainError, GraphError, ShapeMismatch
from .graph import Graph, ParamKey, VertexId, check_params, param_keys, topological_sort
from .numerics import Array, as_f64, fsum_arrays


@dataclass(frozen=True)
class ForwardTrace:
    """Forward value mu of every vertex."""

    mu: dict[VertexId, Array]

    def output_value(self, g: Graph) -> float:
        return float(self.mu[g.output])


@dataclass(frozen=True)
class BPReport:
    """Result of one reverse pass.

    ``delta`` maps every vertex to its error signal dE/dmu; ``updates``
    holds the canonical per-parameter deltas (tie groups summed over
    members); ``per_leaf`` keeps each trainable leaf's own delta so tied
    structures can be compared member-wise.
    """

    delta: dict[VertexId, Array]
    updates: dict[ParamKey, Array]
    per_leaf: dict[VertexId, Array]
    loss: float


def forward(g: Graph, params: Mapping[VertexId, Array],
            overrides: Mapping[VertexId, Array] | None = None) -> ForwardTrace:
    """Evaluate every vertex bottom-up.

    ``overrides`` forces selected vertices to given values instead of
    evaluating them — the hook the finite-difference oracle for error
    signals uses.
    """
    check_params(g, params)
    mu: dict[VertexId, Array] = {}
    for vid in reversed(topological_sort(g)):
        v = g.vertices[vid]
        if overrides is not None and vid in overrides:
            mu[vid] = as_f64(overrides[vid])
            continue
        if v.is_leaf:
            mu[vid] = as_f64(params[vid])
            continue
        ins = [mu[c] for c in v.children]
        try:
            mu[vid] = v.fn(ins)
        except DomainError as err:
            raise err.at_vertex(vid) from None
    return ForwardTrace(mu=mu)


def loss_value(mu_out: Array, y: float) -> float:
    diff = float(mu_out) - float(y)
    return 0.5 * diff * diff


def _require_scalar_output(g: Graph, trace: ForwardTrace) -> Array:
    out = trace.mu[g.output]
    if out.shape != ():
        raise ShapeMismatch(
            f"output vertex must carry a scalar, got shape {out.shape}")
    return out


def backprop(g: Graph, params: Mapping[VertexId, Array], y: float,
             lr: float = 0.01) -> BPReport:
    """One reverse pass: error signals for all vertices, updates for leaves.

    delta(output) = mu_out - y; every other vertex accumulates its
    parents' pulled-back signals.  Leaf update: -lr * delta(leaf).
    """
    trace = forward(g, params)
    mu_out = _require_scalar_output(g, trace)
    delta: dict[VertexId, Array] = {}
    contribs: dict[VertexId, list[tuple[tuple[int, int], Array]]] = \
        {v.id: [] for v in g.vertices}
    for vid in topological_sort(g):
        v = g.vertices[vid]
        if vid == g.output:
            delta[vid] = mu_out - float(y)
        else:
            parts = [c for _key, c in sorted(contribs[vid], key=lambda kv: kv[0])]
            delta[vid] = fsum_arrays(parts)
        if not v.is_leaf and v.fn.arity > 0:
            ins = [trace.mu[c] for c in v.children]
            try:
                pulls = v.fn.vjp(ins, delta[vid])
            except DomainError as err:
                raise err.at_vertex(vid) from None
            for slot, (c, pull) in enumerate(zip(v.children, pulls)):
                contribs[c].append(((vid, slot), pull))
    per_leaf = {v: -lr * delta[v] for v in g.trainable_leaves()}
    updates = collect_updates(g, per_leaf)
    return BPReport(delta=delta, updates=updates, per_leaf=per_leaf,
                    loss=loss_value(mu_out, y))


def collect_updates(g: Graph, per_leaf: Mapping[VertexId, Array]) -> dict[ParamKey, Array]:
    """Fold per-leaf deltas into the canonical parameter order.

    Tie groups report one entry: the order-independent sum of their
    members' deltas.
    """
    out: dict[ParamKey, Array] = {}
    for key in param_keys(g):
        kind, ident = key
        if kind == "group":
            grp = next(t for t in g.tie_groups if t.group_id == ident)
            out[key] = fsum_arrays([per_leaf[m] for m in sorted(grp.members)])
        else:
            out[key] = as_f64(per_leaf[ident]).copy()
    return out


# -- independent oracle ---------------------------------------------------

def _perturbed(params: Mapping[VertexId, Array], leaves: tuple[VertexId, ...],
               index: tuple[int, ...], step: float) -> dict[VertexId, Array]:
    out = {k: as_f64(v).copy() for k, v in params.items()}
    for leaf in leaves:
        if out[leaf].shape == ():
            out[leaf] = out[leaf] + step
        else:
            out[leaf][index] += step
    return out


def gradient_rows(g: Graph, params: Mapping[VertexId, Array], y: float,
                  h: float = 1e-6) -> list[dict]:
    """Per-component analytic vs central-difference gradients.

    One row per trainable parameter component with the relative error
    |analytic - numeric| / max(1, |analytic|).  A tie group is perturbed
    as a unit (all members together), so its numeric gradient is the sum
    of the member gradients — the same reduction the analytic side uses.
    """
    if h <= 0:
        raise GraphError("finite-difference step must be positive")
    rep = backprop(g, params, y, lr=1.0)
    rows: list[dict] = []
    for key in param_keys(g):
        kind, ident = key
        if kind == "group":
            grp = next(t for t in g.tie_groups if t.group_id == ident)
            leaves = tuple(sorted(grp.members))
        else:
            leaves = (ident,)
        analytic_arr = -rep.updates[key]  # dE/dtheta
        shape = analytic_arr.shape
        for index in np.ndindex(shape if shape else (1,)):
            idx = index if shape else ()
            up = forward(g, _perturbed(params, leaves, idx, +h))
            down = forward(g, _perturbed(params, leaves, idx, -h))
            e_up = loss_value(up.mu[g.output], y)
            e_down = loss_value(down.mu[g.output], y)
            numeric = (e_up - e_down) / (2.0 * h)
            analytic = float(analytic_arr[idx]) if shape else float(analytic_arr)
            err = abs(analytic - numeric) / max(1.0, abs(analytic))
            rows.append({
                "param": f"{kind}:{ident}",
                "component": ",".join(str(i) for i in idx) if shape else "",
                "analytic": analytic,
                "numeric": numeric,
                "rel_error": err,
            })
    return rows


def grad_check(g: Graph, params: Mapping[VertexId, Array], y: float,
               h: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients."""
    rows = gradient_rows(g, params, y, h)
    return max((row["rel_error"] for row in rows), default=0.0)
