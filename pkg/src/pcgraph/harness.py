"""Experiment orchestration: equivalence/ablation suites, timing, persistence.

Every emitted row embeds the serialized configuration and a hash of the
package sources, so results are attributable to an exact code + config
state.  Runs are deterministic: a fixed config and seed produce
bit-identical result tables.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .autodiff import backprop
from .errors import GraphError
from .graph import Graph, VertexId, level_structure
from .leveller import level
from .models import LEVELLED_FAMILIES, ModelSpec, build_model, default_dims
from .numerics import Array
from .pc import il_train_step
from .report import divergence, make_report
from .zil import ABLATIONS, check_quiet_window, zil_ablate, zil_train_step

SUITE_FAMILIES = ("mlp", "conv1d", "rnn", "residual", "attention")

# Architectures the default suite sweeps; widths stay desk-scale.
SUITE_DIMS: dict[str, tuple[tuple[int, ...], ...]] = {
    "mlp": ((4, 8, 1), (4, 8, 8, 1), (3, 6, 6, 4, 1)),
    "conv1d": ((6, 2),),
    "rnn": ((3, 3, 4),),
    "residual": ((4, 4, 1),),
    "attention": ((4, 4),),
}


@dataclass(frozen=True)
class ExperimentConfig:
    families: tuple[str, ...] = SUITE_FAMILIES
    seeds: tuple[int, ...] = tuple(range(20))
    activation: str = "tanh"
    lr: float = 0.01
    gamma_il: float = 0.1
    T_il: int = 100
    repetitions: int = 30
    warmup: int = 5
    tolerance_zero: float = 1e-9
    tolerance_positive: float = 1e-6
    target_offset: float = 0.5

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise GraphError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(d)
        for key in ("families", "seeds"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise GraphError(f"cannot read config {path}: {exc}") from exc


def code_version() -> str:
    """Short hash over the package sources, for result provenance."""
    pkg = Path(__file__).parent
    digest = hashlib.sha256()
    for path in sorted(pkg.glob("*.py")):
        digest.update(path.name.encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()[:12]


def _target_for(g: Graph, params: Mapping[VertexId, Array],
                offset: float) -> float:
    """A target a fixed offset away from the current output value, so the
    one-step error is the same scale across models and seeds."""
    from .autodiff import forward

    return forward(g, params).output_value(g) + offset


def _model_instances(cfg: ExperimentConfig):
    for family in cfg.families:
        for dims in SUITE_DIMS.get(family, (default_dims(family),)):
            label = f"{family}{'x'.join(str(d) for d in dims)}"
            yield family, dims, label


def run_equivalence_suite(cfg: ExperimentConfig) -> tuple[list[dict], int]:
    """Reverse-pass vs scheduled-update divergence over the model zoo.

    Two blocks per model/seed: the plain layer-indexed schedule on the
    graph as built (exact only for levelled-by-construction families),
    and the level-structured schedule on the levelled transform (exact
    for everything).  Exit code 1 if any expected-exact row exceeds the
    zero tolerance, any expected-divergent row sits below the positive
    tolerance, or a wavefront (settled-error) violation is detected.
    """
    stamp = code_version()
    cfg_json = json.dumps(cfg.to_dict(), sort_keys=True)
    rows: list[dict] = []
    failed = False
    for family, dims, label in _model_instances(cfg):
        for seed in cfg.seeds:
            g, params = build_model(ModelSpec(family, dims, cfg.activation, seed))
            y = _target_for(g, params, cfg.target_offset)
            t0 = time.perf_counter()
            bp = backprop(g, params, y, cfg.lr)
            bp_time = time.perf_counter() - t0
            bp_report = make_report(g, "bp", bp.per_leaf, wall_time=bp_time)

            zil_report, _ = zil_train_step(g, params, y, cfg.lr,
                                           "layer_indexed", record_trace=False)
            expect_zero = family in LEVELLED_FAMILIES
            div = divergence(bp_report, zil_report)
            ok = div <= cfg.tolerance_zero if expect_zero \
                else div > cfg.tolerance_positive
            failed |= not ok
            rows.append({
                "model": label, "seed": seed, "variant": "layer_indexed",
                "divergence": div, "wall_time": zil_report.wall_time,
                "expected": "zero" if expect_zero else "positive",
                "ok": ok, "code_hash": stamp, "config": cfg_json,
            })

            lg, _report = level(g)
            lbp = backprop(lg, params, y, cfg.lr)
            lbp_report = make_report(lg, "bp", lbp.per_leaf)
            lzil_report, trace = zil_train_step(lg, params, y, cfg.lr,
                                                "level_structured")
            settled_ok, _violations = check_quiet_window(trace, lg)
            div = divergence(lbp_report, lzil_report)
            ok = div <= cfg.tolerance_zero and settled_ok
            failed |= not ok
            rows.append({
                "model": label, "seed": seed,
                "variant": "level_structured+levelled",
                "divergence": div, "wall_time": lzil_report.wall_time,
                "expected": "zero", "ok": ok,
                "code_hash": stamp, "config": cfg_json,
            })
    return rows, (1 if failed else 0)


def run_ablation_suite(cfg: ExperimentConfig) -> tuple[list[dict], int]:
    """Each exactness condition, violated on purpose, must diverge.

    All models are levelled first so the level-structured baseline is
    exact and any divergence is attributable to the ablation alone.
    """
    stamp = code_version()
    cfg_json = json.dumps(cfg.to_dict(), sort_keys=True)
    rows: list[dict] = []
    failed = False
    for family, dims, label in _model_instances(cfg):
        for seed in cfg.seeds:
            g, params = build_model(ModelSpec(family, dims, cfg.activation, seed))
            lg, _ = level(g)
            y = _target_for(lg, params, cfg.target_offset)
            bp = backprop(lg, params, y, cfg.lr)
            bp_report = make_report(lg, "bp", bp.per_leaf)
            for which in ABLATIONS:
                t0 = time.perf_counter()
                ab_report = zil_ablate(lg, params, y, cfg.lr, which)
                elapsed = time.perf_counter() - t0
                div = divergence(bp_report, ab_report)
                multi_level = len(set(
                    level_structure(lg).levels[v]
                    for v in lg.trainable_leaves())) > 1
                ok = div > cfg.tolerance_positive if multi_level else True
                failed |= not ok
                rows.append({
                    "model": label, "seed": seed, "variant": which,
                    "divergence": div, "wall_time": elapsed,
                    "expected": "positive" if multi_level else "any",
                    "ok": ok, "code_hash": stamp, "config": cfg_json,
                })
    return rows, (1 if failed else 0)


def run_benchmark(cfg: ExperimentConfig,
                  dims: tuple[int, ...] = (4, 8, 1)) -> tuple[list[dict], int]:
    """Median/mean wall time per weight update for the three algorithms.

    Same model and inputs for all three; warm-up repetitions excluded;
    monotonic clock.  The expected ordering (inference learning much
    slower than the scheduled variant, scheduled variant within a small
    factor of the reverse pass) is reported and warned about, never
    failed: timing on shared hardware is advisory.
    """
    stamp = code_version()
    cfg_json = json.dumps(cfg.to_dict(), sort_keys=True)
    g, params = build_model(ModelSpec("mlp", dims, cfg.activation,
                                      cfg.seeds[0] if cfg.seeds else 0))
    lg, _ = level(g)
    y = _target_for(lg, params, cfg.target_offset)

    def time_bp():
        backprop(lg, params, y, cfg.lr)

    def time_il():
        il_train_step(lg, params, y, cfg.lr, cfg.gamma_il, cfg.T_il)

    def time_zil():
        zil_train_step(lg, params, y, cfg.lr, "level_structured",
                       record_trace=False)

    timings: dict[str, list[float]] = {}
    for name, fn in (("bp", time_bp), ("il", time_il), ("zil", time_zil)):
        for _ in range(cfg.warmup):
            fn()
        samples = []
        for _ in range(cfg.repetitions):
            t0 = time.perf_counter()
            fn()
            samples.append(time.perf_counter() - t0)
        timings[name] = samples

    rows = []
    for name, samples in timings.items():
        rows.append({
            "algorithm": name,
            "steps": cfg.T_il if name == "il" else 1,
            "median_s": statistics.median(samples),
            "mean_s": statistics.fmean(samples),
            "stdev_s": statistics.stdev(samples) if len(samples) > 1 else 0.0,
            "repetitions": cfg.repetitions,
            "code_hash": stamp, "config": cfg_json,
        })
    il_over_zil = (statistics.median(timings["il"])
                   / statistics.median(timings["zil"]))
    zil_over_bp = (statistics.median(timings["zil"])
                   / statistics.median(timings["bp"]))
    rows.append({
        "algorithm": "ratios", "steps": 0,
        "median_s": il_over_zil, "mean_s": zil_over_bp, "stdev_s": 0.0,
        "repetitions": cfg.repetitions,
        "code_hash": stamp, "config": cfg_json,
    })
    warned = il_over_zil < 5.0 or zil_over_bp > 3.0
    if warned:
        print(f"warning: timing ordering off target "
              f"(il/zil={il_over_zil:.1f}x, zil/bp={zil_over_bp:.1f}x)",
              file=sys.stderr)
    return rows, 0


def write_rows(rows: Sequence[Mapping], out=None, fmt: str = "csv") -> str:
    """Serialize result rows as CSV or JSON; write to ``out`` if given."""
    if fmt == "json":
        text = json.dumps(list(rows), indent=2, default=float) + "\n"
    elif fmt == "csv":
        if not rows:
            text = ""
        else:
            buf = io.StringIO()
            writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()),
                                    lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
            text = buf.getvalue()
    else:
        raise GraphError(f"unknown format {fmt!r}")
    if out is not None:
        Path(out).write_text(text)
    return text
