#!/usr/bin/env python3
"""Capture raw service responses as test fixtures.

Builds a store from the bundled synthetic datasets, sweeps a small menu
('demo'), boots the real HTTP service, and saves the exact response bytes
for every request the explorer views issue. The request paths mirror the
canonical builders in src/api.ts; the lattice strings are read straight out
of src/state.ts so both sides stay in lock-step.
"""

import json
import re
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import httpx

FRONTEND = Path(__file__).resolve().parent.parent
FIXTURES = FRONTEND / "test" / "fixtures"
PORT = 8329
BASE = f"http://127.0.0.1:{PORT}"

MENU_ID = "demo"
SWEEP = {
    "cal_dataset": "cal",
    "audit_dataset": "audit",
    "mode": "two-sample",
    "alpha0_grid": [0.05, 0.10, 0.20],
    "delta0_grid": [0.10, 0.15],
    "alpha1_grid": [0.05, 0.10, 0.20],
    "delta1_grid": [0.10, 0.15],
    "regime": "win:100",
    "policy": "si",
    "m": 100,
    "level": 0.95,
}


def state_grids() -> tuple[list[str], list[str]]:
    src = (FRONTEND / "src" / "state.ts").read_text()
    def grab(name: str) -> list[str]:
        m = re.search(rf"const {name} = \[([^\]]+)\]", src)
        if not m:
            raise SystemExit(f"could not find {name} in src/state.ts")
        return [s.strip().strip('"') for s in m.group(1).split(",") if s.strip()]
    return grab("LAMBDA_GRID"), grab("RHO_GRID")


def build_store(root: Path) -> None:
    from importlib import resources

    from coverplan.store import ArtifactStore, cmd_sweep, ingest_csv

    store = ArtifactStore(root)
    for name, dataset_id in (("synthetic_cal.csv", "cal"), ("synthetic_audit.csv", "audit")):
        with resources.as_file(resources.files("coverplan").joinpath("data", name)) as p:
            store.save_dataset(ingest_csv(p, dataset_id))
    summary = cmd_sweep(store, SWEEP, out_id=MENU_ID)
    print("menu:", summary)


def request_paths(menu: dict, lam_grid: list[str], rho_grid: list[str]) -> dict[str, str]:
    kpis = menu["kpis"]
    orientation = menu["orientation"]

    def orient(overrides: dict) -> str:
        merged = {**orientation, **overrides}
        return ",".join(f"{k}:{merged[k]}" for k in kpis)

    front_regimes = [p["regime_id"] for p in menu["points"] if p["nondominated"]]
    rids = front_regimes[:3] if len(front_regimes) >= 3 else [
        p["regime_id"] for p in menu["points"][:3]
    ]
    paths = {
        "datasets": "/datasets",
        "menu": f"/menus/{MENU_ID}",
        "front_default": f"/menus/{MENU_ID}/front?orientation={orient({})}",
        "front_flip_correct1": f"/menus/{MENU_ID}/front?orientation={orient({'correct1': -1})}",
        "missing_menu": "/menus/no-such-menu",
        "missing_front": f"/menus/no-such-menu/front?orientation={orient({})}",
    }
    r0 = rids[0]
    paths[f"env_{r0}_default"] = f"/envelopes/{MENU_ID}/{r0}?m=100&level=0.95&infl=1"
    paths[f"env_{r0}_infl2"] = f"/envelopes/{MENU_ID}/{r0}?m=100&level=0.95&infl=2"
    paths[f"env_{r0}_m200"] = f"/envelopes/{MENU_ID}/{r0}?m=200&level=0.95&infl=1"
    paths[f"env_{r0}_bad_m"] = f"/envelopes/{MENU_ID}/{r0}?m=0&level=0.95&infl=1"
    lam = ",".join(lam_grid)
    rho = ",".join(rho_grid)
    # every front regime: the wedge view aggregates across all of them
    for rid in sorted(set(front_regimes) | set(rids)):
        paths[f"coh_grid_{rid}"] = f"/coherence/{MENU_ID}/{rid}?lambda={lam}&rho={rho}"
    paths[f"coh_point_{r0}_1_0.6"] = f"/coherence/{MENU_ID}/{r0}?lambda=1&rho=0.6"
    paths[f"coh_point_{r0}_1_0.2"] = f"/coherence/{MENU_ID}/{r0}?lambda=1&rho=0.2"
    paths["meta_regimes"] = ""  # filled below with metadata, not fetched
    return paths


def main() -> None:
    lam_grid, rho_grid = state_grids()
    FIXTURES.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        store_root = Path(tmp) / "store"
        build_store(store_root)
        server = subprocess.Popen(
            [sys.executable, "-c",
             f"from coverplan.service import serve; serve({str(store_root)!r}, port={PORT})"],
            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
        )
        try:
            client = httpx.Client(base_url=BASE, timeout=10)
            for _ in range(100):
                try:
                    client.get("/datasets")
                    break
                except httpx.TransportError:
                    time.sleep(0.1)
            menu = client.get(f"/menus/{MENU_ID}").json()
            paths = request_paths(menu, lam_grid, rho_grid)
            manifest = {}
            for name, path in paths.items():
                if not path:
                    continue
                res = client.get(path)
                fname = f"{name}.json"
                (FIXTURES / fname).write_bytes(res.content)
                manifest[path] = {"file": fname, "status": res.status_code}
                print(f"{res.status_code} {path} -> {fname}")
            front_regimes = [p["regime_id"] for p in menu["points"] if p["nondominated"]]
            # the server-rendered menu CSV, for byte-exact shortlist export checks
            (FIXTURES / "menu.csv").write_bytes(
                (store_root / "menus" / f"{MENU_ID}.csv").read_bytes()
            )
            meta = {
                "base": BASE,
                "menu_id": MENU_ID,
                "front_regimes": front_regimes,
                "lambda_grid": lam_grid,
                "rho_grid": rho_grid,
                "responses": manifest,
            }
            (FIXTURES / "manifest.json").write_text(json.dumps(meta, indent=1))
            print(f"wrote {len(manifest)} fixtures + manifest + menu.csv")
        finally:
            server.terminate()
            server.wait(timeout=10)


if __name__ == "__main__":
    main()
