"""Dataset ingestion, JSON artifact persistence, and command workflows.

Ingestion reads labeled score CSVs (probability-column or two-score-column
schemas, plus optional numeric feature columns usable as scenario filters).
The artifact store keeps every document as JSON under one root directory,
written atomically (temp file + rename) and stamped with a schema version,
so envelopes and coherence wedges can be re-derived from the store alone.

The ``cmd_*`` functions are the command workflows shared by the CLI and the
HTTP service; each is a thin composition of the library calls it persists.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audit import (
    LooSummary,
    RegionLabelTable,
    builtin_masks,
    envelope_loo,
    envelope_two_sample,
    loo_region_table,
    project,
    tabulate,
)
from .conformal import (
    BUILTIN_POLICIES,
    ScoreSample,
    Thresholds,
    fit_thresholds,
    regime_of,
    select_index,
)
from .costs import COMMIT_ON_SINGLETONS, Convention, pricing_envelope
from .gridsel import GridSelection, Infeasible
from .planner import (
    OUTCOME_KPIS,
    SweepSpec,
    dedup,
    export_menu,
    flag_nondominated,
    sweep,
)

__all__ = [
    "SCHEMA_VERSION",
    "MalformedRow",
    "UnknownColumn",
    "EmptyAfterFilter",
    "SameSplitReuse",
    "UnknownArtifact",
    "DuplicateJob",
    "RowFilter",
    "Dataset",
    "ingest_csv",
    "ArtifactStore",
    "parse_regime",
    "parse_mode",
    "cmd_calibrate",
    "cmd_audit",
    "cmd_sweep",
    "menu_point_envelopes",
    "menu_point_table",
    "parse_convention",
]

SCHEMA_VERSION = 1


class MalformedRow(ValueError):
    """A CSV row failed to parse; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownColumn(KeyError):
    pass


class EmptyAfterFilter(ValueError):
    pass


class SameSplitReuse(ValueError):
    """Refused: two-sample auditing on the calibration dataset itself."""


class UnknownArtifact(KeyError):
    pass


class DuplicateJob(ValueError):
    pass


_FILTER_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(>=|<=|>|<)\s*(-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*$")


@dataclass(frozen=True)
class RowFilter:
    """Comparison predicate on one named numeric column (>, <, >=, <=)."""

    column: str
    op: str
    value: float

    @classmethod
    def parse(cls, expr: str) -> "RowFilter":
        m = _FILTER_RE.match(expr)
        if not m:
            raise ValueError(
                f"bad filter {expr!r}: expected '<column> <op> <number>' with op in >, <, >=, <="
            )
        return cls(column=m.group(1), op=m.group(2), value=float(m.group(3)))

    def __call__(self, value: float) -> bool:
        if self.op == ">":
            return value > self.value
        if self.op == "<":
            return value < self.value
        if self.op == ">=":
            return value >= self.value
        return value <= self.value

    def __str__(self) -> str:
        return f"{self.column} {self.op} {self.value}"


@dataclass(frozen=True)
class Dataset:
    dataset_id: str
    sample: ScoreSample
    provenance: dict


def _parse_float(raw: str, line: int, column: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise MalformedRow(line, f"column {column!r}: not a number: {raw!r}")


def ingest_csv(path, dataset_id: str | None = None,
               row_filter: RowFilter | str | None = None) -> Dataset:
    """Read a labeled score CSV into a dataset.

    Header must start ``y,p1`` (probability schema; scores become
    s0 = p1, s1 = 1 - p1, probability-normalized) or ``y,s0,s1`` (explicit
    scores). Any further columns are numeric features, available to the
    optional row filter. Labels must be 0 or 1.
    """
    import csv as _csv

    path = Path(path)
    if isinstance(row_filter, str):
        row_filter = RowFilter.parse(row_filter)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty file")
        header = [h.strip() for h in header]
        if header[:2] == ["y", "p1"]:
            schema = "prob"
            feature_names = header[2:]
        elif header[:3] == ["y", "s0", "s1"]:
            schema = "score"
            feature_names = header[3:]
        else:
            raise MalformedRow(1, f"header must start 'y,p1' or 'y,s0,s1', got {header}")
        if row_filter is not None and row_filter.column not in feature_names + header[:3]:
            raise UnknownColumn(
                f"filter column {row_filter.column!r} not in header {header}"
            )
        n_fixed = 2 if schema == "prob" else 3
        labels, scores, rows_in = [], [], 0
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            rows_in += 1
            if len(row) != n_fixed + len(feature_names):
                raise MalformedRow(line_no, f"expected {n_fixed + len(feature_names)} fields, got {len(row)}")
            y_raw = row[0].strip()
            if y_raw not in ("0", "1"):
                raise MalformedRow(line_no, f"label must be 0 or 1, got {y_raw!r}")
            values = {name: _parse_float(raw, line_no, name)
                      for name, raw in zip(header[1:], row[1:])}
            if row_filter is not None and row_filter.column in values:
                if not row_filter(values[row_filter.column]):
                    continue
            if schema == "prob":
                p1 = values["p1"]
                if not 0.0 <= p1 <= 1.0:
                    raise MalformedRow(line_no, f"p1 must lie in [0, 1], got {p1}")
                scores.append((p1, 1.0 - p1))
            else:
                scores.append((values["s0"], values["s1"]))
            labels.append(int(y_raw))
    if not labels:
        if row_filter is not None and rows_in:
            raise EmptyAfterFilter(f"filter {row_filter} removed all {rows_in} rows")
        raise MalformedRow(2, "no data rows")
    sample = ScoreSample(
        scores=np.array(scores, dtype=float),
        labels=np.array(labels, dtype=int),
        prob_normalized=(schema == "prob"),
    )
    return Dataset(
        dataset_id=dataset_id or path.stem,
        sample=sample,
        provenance={
            "source": str(path),
            "filter": str(row_filter) if row_filter else None,
            "rows_in": rows_in,
            "rows_kept": len(labels),
        },
    )


class ArtifactStore:
    """One-directory JSON artifact store with atomic writes.

    Kinds map to subdirectories (datasets, calibrations, audits, menus,
    sims, jobs); every document carries ``schema_version``. Writers stage to
    a temp file in the target directory and rename, so readers never observe
    partial documents.
    """

    KINDS = ("datasets", "calibrations", "audits", "menus", "wedges", "sims", "jobs")

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, kind: str, artifact_id: str) -> Path:
        if kind not in self.KINDS:
            raise ValueError(f"unknown artifact kind {kind!r}")
        if not re.fullmatch(r"[A-Za-z0-9._-]+", artifact_id):
            raise ValueError(f"artifact id {artifact_id!r} has unsafe characters")
        return self.root / kind / f"{artifact_id}.json"

    def save(self, kind: str, artifact_id: str, doc: dict) -> Path:
        path = self._path(kind, artifact_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {"schema_version": SCHEMA_VERSION, **doc}
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path

    def load(self, kind: str, artifact_id: str) -> dict:
        path = self._path(kind, artifact_id)
        if not path.exists():
            raise UnknownArtifact(f"{kind}/{artifact_id}")
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    def exists(self, kind: str, artifact_id: str) -> bool:
        return self._path(kind, artifact_id).exists()

    def list_ids(self, kind: str) -> list[str]:
        folder = self.root / kind
        if not folder.is_dir():
            return []
        return sorted(p.stem for p in folder.glob("*.json"))

    def menu_csv_path(self, menu_id: str) -> Path:
        return self.root / "menus" / f"{menu_id}.csv"

    # -- dataset round-trip ---------------------------------------------

    def save_dataset(self, dataset: Dataset) -> Path:
        doc = {
            "dataset_id": dataset.dataset_id,
            "provenance": dataset.provenance,
            "prob_normalized": dataset.sample.prob_normalized,
            "labels": dataset.sample.labels.tolist(),
            "scores": dataset.sample.scores.tolist(),
        }
        return self.save("datasets", dataset.dataset_id, doc)

    def load_dataset(self, dataset_id: str) -> Dataset:
        doc = self.load("datasets", dataset_id)
        sample = ScoreSample(
            scores=np.array(doc["scores"], dtype=float),
            labels=np.array(doc["labels"], dtype=int),
            prob_normalized=doc["prob_normalized"],
        )
        return Dataset(dataset_id=dataset_id, sample=sample, provenance=doc["provenance"])


def parse_regime(text: str) -> int | None:
    """Parse a window regime flag: 'inf' or 'win:<m>'."""
    if text == "inf":
        return None
    if text.startswith("win:"):
        m = int(text.split(":", 1)[1])
        if m < 1:
            raise ValueError("window size must be >= 1")
        return m
    raise ValueError(f"regime must be 'inf' or 'win:<m>', got {text!r}")


def regime_text(window: int | None) -> str:
    return "inf" if window is None else f"win:{window}"


def parse_mode(text: str) -> tuple[str, float]:
    """Parse an audit mode flag: 'two-sample' or 'loo:<infl>'."""
    if text == "two-sample":
        return "two_sample", 1.0
    if text == "loo":
        return "loo", 1.0
    if text.startswith("loo:"):
        infl = float(text.split(":", 1)[1])
        if infl < 1.0:
            raise ValueError("infl must be >= 1")
        return "loo", infl
    raise ValueError(f"mode must be 'two-sample' or 'loo[:infl]', got {text!r}")


def _selection_doc(sel: GridSelection) -> dict:
    return {
        "u": sel.u, "k": sel.k, "n_cal": sel.n_cal, "alpha_grid": sel.alpha_grid,
        "method": sel.method, "alpha_star": sel.alpha_star, "delta": sel.delta,
        "window": sel.window, "alpha_cont": sel.alpha_cont,
    }


def cmd_calibrate(store: ArtifactStore, dataset_id: str, alpha0: float, delta0: float,
                  alpha1: float, delta1: float, method: str = "ssbc",
                  window: int | None = 100, out_id: str | None = None) -> dict:
    """Select per-class grid indices on a stored dataset and persist thresholds.

    Returns the persisted calibration document; per-class infeasibility is
    reported with the feasibility floor rather than persisted.
    """
    dataset = store.load_dataset(dataset_id)
    sels = []
    for cls, alpha, delta in ((0, alpha0, delta0), (1, alpha1, delta1)):
        n_y = dataset.sample.class_count(cls)
        sel = select_index(method, alpha, delta, n_y, window)
        if isinstance(sel, Infeasible):
            raise ValueError(
                f"class {cls}: request (alpha={alpha}, delta={delta}) infeasible at "
                f"n={n_y}; feasibility floor is {sel.floor:.4f}"
            )
        sels.append(sel)
    thresholds = fit_thresholds(dataset.sample, *sels)
    out_id = out_id or f"{dataset_id}-cal"
    doc = {
        "calibration_id": out_id,
        "dataset_id": dataset_id,
        "method": method,
        "regime": regime_text(window),
        "selections": [_selection_doc(s) for s in sels],
        "thresholds": {
            "tau0": thresholds.tau0, "tau1": thresholds.tau1,
            "u0": thresholds.u0, "u1": thresholds.u1,
            "n0": thresholds.n0, "n1": thresholds.n1,
        },
        "regime_tag": regime_of(thresholds),
    }
    store.save("calibrations", out_id, doc)
    return doc


def _thresholds_from_doc(doc: dict) -> Thresholds:
    t = doc["thresholds"]
    return Thresholds(tau0=t["tau0"], tau1=t["tau1"], u0=t["u0"], u1=t["u1"],
                      n0=t["n0"], n1=t["n1"])


def _selection_from_doc(doc: dict) -> GridSelection:
    return GridSelection(u=doc["u"], n_cal=doc["n_cal"], method=doc["method"],
                         alpha_star=doc["alpha_star"], delta=doc["delta"],
                         window=doc["window"], alpha_cont=doc["alpha_cont"])


def cmd_audit(store: ArtifactStore, audit_dataset_id: str, calibration_id: str,
              policy: str = "si", m: int = 100, level: float = 0.95,
              mode: str = "two-sample", offset: float = 1.0,
              out_id: str | None = None) -> dict:
    """Tabulate a stored dataset under stored thresholds and persist envelopes.

    Two-sample mode refuses the calibration dataset itself (SameSplitReuse);
    leave-one-out mode requires it and tags its envelopes with the inflation.
    """
    mode_name, infl = parse_mode(mode)
    cal_doc = store.load("calibrations", calibration_id)
    thresholds = _thresholds_from_doc(cal_doc)
    dataset = store.load_dataset(audit_dataset_id)
    pol = BUILTIN_POLICIES[policy]
    if mode_name == "two_sample":
        if audit_dataset_id == cal_doc["dataset_id"]:
            raise SameSplitReuse(
                "two-sample auditing must use a split disjoint from the calibration "
                f"dataset {cal_doc['dataset_id']!r}; use --mode loo[:infl] to reuse it"
            )
        table = tabulate(dataset.sample, thresholds)
    else:
        sels = [_selection_from_doc(d) for d in cal_doc["selections"]]
        table = loo_region_table(dataset.sample, *sels)
    envelopes = {}
    kpis = {}
    for mask in builtin_masks(pol):
        count, rate = project(table, mask)
        if mode_name == "two_sample":
            env = envelope_two_sample(count, table.n_total, m, level, offset, kpi=mask.name)
        else:
            env = envelope_loo(LooSummary(kpi=mask.name, n_loo=count, n=table.n_total),
                               m, level, infl, offset)
        kpis[mask.name] = {"count": count, "rate": rate}
        envelopes[mask.name] = {
            "m": env.m, "point": env.point, "lo": env.lo, "hi": env.hi,
            "level": env.level, "source": env.source, "infl": env.infl,
        }
    out_id = out_id or f"{calibration_id}-{audit_dataset_id}-audit"
    doc = {
        "audit_id": out_id,
        "calibration_id": calibration_id,
        "dataset_id": audit_dataset_id,
        "policy": policy,
        "mode": mode_name,
        "infl": infl,
        "m": m,
        "level": level,
        "offset": offset,
        "n_total": table.n_total,
        "counts": table.counts.tolist(),
        "kpis": kpis,
        "envelopes": envelopes,
    }
    store.save("audits", out_id, doc)
    return doc


def _point_doc(p) -> dict:
    return {
        "regime_id": p.regime_id,
        "multiplicity": p.multiplicity,
        "request": {"alpha0": p.alpha0, "delta0": p.delta0,
                    "alpha1": p.alpha1, "delta1": p.delta1},
        "collapsed_requests": [list(r) for r in p.requests],
        "u0": p.sel0.u, "u1": p.sel1.u,
        "alpha_ssbc_0": p.sel0.alpha_grid, "alpha_ssbc_1": p.sel1.alpha_grid,
        "tau0": p.thresholds.tau0, "tau1": p.thresholds.tau1,
        "regime": p.regime,
        "n_table": p.table.n_total,
        "table_counts": p.table.counts.tolist(),
        "counts": dict(p.counts),
        "rates": dict(p.rates),
        "envelopes": {
            k: {"m": e.m, "point": e.point, "lo": e.lo, "hi": e.hi,
                "level": e.level, "source": e.source, "infl": e.infl}
            for k, e in p.envelopes.items()
        },
        "nondominated": p.nondominated,
    }


def sweep_spec_from_dict(raw: dict) -> tuple[SweepSpec, dict]:
    """Split a sweep request document into the SweepSpec and store references."""
    refs = {
        "cal_dataset": raw["cal_dataset"],
        "audit_dataset": raw.get("audit_dataset"),
        "geometry": raw.get("geometry"),
    }
    mode_name, infl = parse_mode(raw.get("mode", "two-sample"))
    spec = SweepSpec(
        alpha0_grid=tuple(raw["alpha0_grid"]),
        delta0_grid=tuple(raw["delta0_grid"]),
        alpha1_grid=tuple(raw["alpha1_grid"]),
        delta1_grid=tuple(raw["delta1_grid"]),
        window=parse_regime(raw.get("regime", "win:100")),
        policy=raw.get("policy", "si"),
        m=int(raw.get("m", 100)),
        level=float(raw.get("level", 0.95)),
        kpis=tuple(raw.get("kpis", ("loss", "hedge1", "correct1"))),
        orientation={k: int(v) for k, v in raw.get(
            "orientation", {"loss": -1, "hedge1": -1, "correct1": 1}).items()},
        mode=mode_name,
        infl=float(raw.get("infl", infl)),
        offset=float(raw.get("offset", 1.0)),
    )
    return spec, refs


def parse_convention(raw) -> Convention:
    """Convention from a mapping like {'r10': 'commit0', ...}; default wiring
    commits on singleton support and rejects elsewhere."""
    if raw is None:
        return COMMIT_ON_SINGLETONS
    if isinstance(raw, Convention):
        return raw
    return Convention("custom", dict(raw))


def cmd_sweep(store: ArtifactStore, raw_spec: dict, out_id: str) -> dict:
    """Run the sweep -> dedup -> Pareto pipeline and persist menu artifacts.

    Writes the menu JSON document and its CSV (and wedge document when the
    spec carries a geometry section). Returns a run summary.
    """
    spec, refs = sweep_spec_from_dict(raw_spec)
    cal = store.load_dataset(refs["cal_dataset"]).sample
    audit_sample = None
    if spec.mode == "two_sample":
        if not refs["audit_dataset"]:
            raise ValueError("two-sample sweep requires audit_dataset")
        if refs["audit_dataset"] == refs["cal_dataset"]:
            raise SameSplitReuse(
                "two-sample sweep must audit a split disjoint from the calibration dataset"
            )
        audit_sample = store.load_dataset(refs["audit_dataset"]).sample
    result = sweep(spec, cal, audit_sample)
    reps = dedup(result.points)
    reps = flag_nondominated(reps, spec.kpis, spec.orientation)
    menu_doc = {
        "menu_id": out_id,
        "cal_dataset": refs["cal_dataset"],
        "audit_dataset": refs["audit_dataset"],
        "mode": spec.mode,
        "infl": spec.infl,
        "offset": spec.offset,
        "policy": spec.policy if isinstance(spec.policy, str) else spec.policy.name,
        "m": spec.m,
        "level": spec.level,
        "kpis": list(spec.kpis),
        "orientation": dict(spec.orientation),
        "request_grids": {
            "alpha0": list(spec.alpha0_grid), "delta0": list(spec.delta0_grid),
            "alpha1": list(spec.alpha1_grid), "delta1": list(spec.delta1_grid),
        },
        "regime": regime_text(spec.window),
        "points": [_point_doc(p) for p in reps],
        "infeasible": [{"request": list(c.request), "reason": c.reason}
                       for c in result.infeasible],
    }
    store.save("menus", out_id, menu_doc)
    export_menu(reps, store.menu_csv_path(out_id))
    summary = {
        "menu_id": out_id,
        "cells": len(result.points) + len(result.infeasible),
        "points": len(result.points),
        "regimes": len(reps),
        "front_size": sum(1 for p in reps if p.nondominated),
        "infeasible": len(result.infeasible),
    }
    geometry = refs.get("geometry")
    if geometry is not None:
        conv = parse_convention(geometry.get("convention"))
        lam = geometry.get("lambda_grid")
        rho = geometry.get("rho_grid")
        wedge_doc = {"menu_id": out_id, "convention": dict(conv.mapping),
                     "regimes": []}
        for p in reps:
            env = pricing_envelope(p.table, conv,
                                   None if lam is None else np.asarray(lam, float),
                                   None if rho is None else np.asarray(rho, float))
            wedge_doc["regimes"].append({
                "regime_id": p.regime_id,
                "lam_grid": env.lam_grid.tolist(),
                "rho_grid": env.rho_grid.tolist(),
                "intersection": env.intersection.astype(int).tolist(),
                "union": env.union.astype(int).tolist(),
                "rejection_band_violated": env.rejection_band_violated.astype(int).tolist(),
                "wedges": [
                    {"region": w.region, "action": w.action, "eta": w.eta,
                     "constraints": [list(c) for c in w.constraints],
                     "feasible": w.feasible.astype(int).tolist()}
                    for w in env.wedges
                ],
            })
        store.save("wedges", out_id, wedge_doc)
        summary["wedges"] = len(wedge_doc["regimes"])
    return summary


def menu_point_table(point_doc: dict) -> RegionLabelTable:
    return RegionLabelTable(counts=np.array(point_doc["table_counts"], dtype=int),
                            n_total=point_doc["n_table"])


def menu_point_envelopes(menu_doc: dict, point_doc: dict, m: int, level: float,
                         infl: float = 1.0, offset: float | None = None) -> dict:
    """Re-derive envelopes for one stored regime at new window settings.

    Pure function of the persisted counts: infl = 1 reproduces the menu's
    construction on its own counts; infl > 1 applies the evidence-shrinking
    pessimization regardless of the original mode.
    """
    if offset is None:
        offset = menu_doc.get("offset", 1.0)
    n = point_doc["n_table"]
    out = {}
    for kpi in OUTCOME_KPIS:
        count = point_doc["counts"][kpi]
        if infl == 1.0 and menu_doc["mode"] == "two_sample":
            env = envelope_two_sample(count, n, m, level, offset, kpi=kpi)
        else:
            env = envelope_loo(LooSummary(kpi=kpi, n_loo=count, n=n),
                               m, level, infl, offset)
        out[kpi] = {"m": env.m, "point": env.point, "lo": env.lo, "hi": env.hi,
                    "level": env.level, "source": env.source, "infl": env.infl}
    return out
