"""Read-mostly HTTP service over the artifact store.

GET endpoints are stateless JSON renderings or pure re-derivations of
persisted documents (fronts under a new orientation, envelopes at a new
window, coherence at new cost ratios). POST /sweeps enqueues a sweep job;
a single worker lock serializes writers while readers stay lock-free
thanks to atomic document writes.
"""

from __future__ import annotations

import threading
import traceback

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel

from .costs import CostRates, check_convention, pricing_envelope, rejection_band_limit
from .planner import pareto_filter
from .store import (
    ArtifactStore,
    SameSplitReuse,
    UnknownArtifact,
    cmd_sweep,
    menu_point_envelopes,
    menu_point_table,
    parse_convention,
)

__all__ = ["create_app"]


class SweepRequest(BaseModel):
    job_id: str
    spec: dict


def _parse_orientation(text: str, kpis: list[str]) -> dict:
    """Parse 'loss:-1,hedge1:-1,correct1:+1' into an orientation map."""
    out = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ValueError(f"bad orientation entry {item!r}; expected kpi:+1 or kpi:-1")
        name, sign = item.rsplit(":", 1)
        name = name.strip()
        if name not in kpis:
            raise ValueError(f"unknown KPI {name!r}; menu KPIs: {kpis}")
        if sign.strip() not in ("1", "+1", "-1"):
            raise ValueError(f"orientation sign for {name!r} must be +1 or -1")
        out[name] = 1 if sign.strip() in ("1", "+1") else -1
    if not out:
        raise ValueError("orientation is empty")
    return out


def _floats_csv(text: str, name: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise ValueError(f"{name} must be a comma-separated list of numbers")


def create_app(store_root) -> FastAPI:
    from fastapi.middleware.cors import CORSMiddleware

    store = ArtifactStore(store_root)
    app = FastAPI(title="coverplan service")
    # the explorer is served as static files from another origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    jobs_lock = threading.Lock()  # serializes sweep writers

    def _load(kind: str, artifact_id: str) -> dict:
        try:
            return store.load(kind, artifact_id)
        except UnknownArtifact:
            raise HTTPException(status_code=404, detail=f"unknown {kind[:-1]} {artifact_id!r}")

    def _menu_point(menu: dict, regime_id: int) -> dict:
        for point in menu["points"]:
            if point["regime_id"] == regime_id:
                return point
        raise HTTPException(status_code=404,
                            detail=f"menu {menu['menu_id']!r} has no regime {regime_id}")

    @app.get("/datasets")
    def list_datasets():
        out = []
        for dataset_id in store.list_ids("datasets"):
            doc = store.load("datasets", dataset_id)
            out.append({
                "dataset_id": dataset_id,
                "rows": len(doc["labels"]),
                "prob_normalized": doc["prob_normalized"],
                "provenance": doc["provenance"],
            })
        return out

    @app.get("/menus/{menu_id}")
    def get_menu(menu_id: str):
        return _load("menus", menu_id)

    @app.get("/menus/{menu_id}/front")
    def get_front(menu_id: str, orientation: str | None = None):
        menu = _load("menus", menu_id)
        kpis = menu["kpis"]
        if orientation is None:
            omap = menu["orientation"]
        else:
            try:
                omap = {**menu["orientation"], **_parse_orientation(orientation, kpis)}
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
        points = menu["points"]
        if points:
            values = np.array([[p["rates"][k] for k in kpis] for p in points])
            signs = [omap[k] for k in kpis]
            flags = pareto_filter(values, signs)
        else:
            flags = np.zeros(0, dtype=bool)
        return {
            "menu_id": menu_id,
            "kpis": kpis,
            "orientation": omap,
            "points": [
                {**p, "nondominated": bool(f)} for p, f in zip(points, flags)
            ],
        }

    @app.get("/envelopes/{menu_id}/{regime_id}")
    def get_envelopes(menu_id: str, regime_id: int,
                      m: int = Query(default=None, ge=1),
                      level: float = Query(default=None, gt=0.0, lt=1.0),
                      infl: float = Query(default=None, ge=1.0),
                      offset: float = Query(default=None, gt=0.0)):
        menu = _load("menus", menu_id)
        point = _menu_point(menu, regime_id)
        m = menu["m"] if m is None else m
        level = menu["level"] if level is None else level
        if infl is None:
            infl = menu["infl"] if menu["mode"] == "loo" else 1.0
        envelopes = menu_point_envelopes(menu, point, m, level, infl, offset)
        return {
            "menu_id": menu_id,
            "regime_id": regime_id,
            "m": m,
            "level": level,
            "infl": infl,
            "rates": point["rates"],
            "envelopes": envelopes,
        }

    @app.get("/coherence/{menu_id}/{regime_id}")
    def get_coherence(menu_id: str, regime_id: int,
                      lam: str = Query(alias="lambda", default="1.0"),
                      rho: str = "0.2"):
        menu = _load("menus", menu_id)
        point = _menu_point(menu, regime_id)
        table = menu_point_table(point)
        conv = parse_convention(None)
        try:
            lams = _floats_csv(lam, "lambda")
            rhos = _floats_csv(rho, "rho")
            if not lams or not rhos:
                raise ValueError("lambda and rho must be nonempty")
            if any(x <= 0 for x in lams):
                raise ValueError("lambda values must be positive")
            if any(x < 0 for x in rhos):
                raise ValueError("rho values must be nonnegative")
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if len(lams) == 1 and len(rhos) == 1:
            report = check_convention(table, conv, CostRates(lams[0], 1.0, rhos[0]))
            rejecting = conv.rejects_somewhere(table)
            return {
                "menu_id": menu_id,
                "regime_id": regime_id,
                "lambda": lams[0],
                "rho": rhos[0],
                "convention": dict(conv.mapping),
                "coherent": report.coherent,
                "expected_cost": report.expected_cost,
                "rejection_band_violated": bool(
                    rejecting and rhos[0] > rejection_band_limit(lams[0])
                ),
                "regions": [
                    {"region": v.region, "action": v.action, "occupied": v.occupied,
                     "coherent": v.coherent, "eta": v.eta,
                     "risks": None if v.risks is None else list(v.risks)}
                    for v in report.verdicts
                ],
            }
        env = pricing_envelope(table, conv, np.asarray(lams), np.asarray(rhos))
        return {
            "menu_id": menu_id,
            "regime_id": regime_id,
            "convention": dict(conv.mapping),
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
        }

    def _run_job(job_id: str, spec: dict):
        with jobs_lock:
            doc = store.load("jobs", job_id)
            doc["status"] = "running"
            store.save("jobs", job_id, doc)
            try:
                summary = cmd_sweep(store, spec, out_id=doc["menu_id"])
                doc.update(status="done", summary=summary)
            except Exception as exc:  # job errors are reported, not raised
                doc.update(status="failed", error=f"{type(exc).__name__}: {exc}")
                doc["trace"] = traceback.format_exc(limit=5)
            store.save("jobs", job_id, doc)

    @app.post("/sweeps", status_code=202)
    def post_sweep(request: SweepRequest):
        if store.exists("jobs", request.job_id):
            raise HTTPException(status_code=409,
                                detail=f"job {request.job_id!r} already exists")
        try:
            doc = {"job_id": request.job_id, "status": "queued",
                   "menu_id": request.spec.get("menu_id", request.job_id),
                   "spec": request.spec}
            store.save("jobs", request.job_id, doc)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        worker = threading.Thread(target=_run_job, args=(request.job_id, request.spec),
                                  daemon=True)
        worker.start()
        return {"job_id": request.job_id, "status": "queued"}

    @app.get("/sweeps/{job_id}")
    def get_sweep(job_id: str):
        return _load("jobs", job_id)

    @app.exception_handler(SameSplitReuse)
    def same_split_handler(_, exc):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=422, content={"detail": str(exc)})

    return app


def serve(store_root, host: str = "127.0.0.1", port: int = 8321):
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    uvicorn.run(create_app(store_root), host=host, port=port)
