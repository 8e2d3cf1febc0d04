"""Command-line workflows: ingest, calibrate, audit, sweep, simulate, serve."""

from __future__ import annotations

import json
from pathlib import Path

import click

from .store import (
    ArtifactStore,
    cmd_audit,
    cmd_calibrate,
    cmd_sweep,
    ingest_csv,
    parse_regime,
)

DEFAULT_STORE = "./coverplan-store"


@click.group()
@click.option("--store", "store_root", default=DEFAULT_STORE, show_default=True,
              help="Artifact store directory.")
@click.pass_context
def main(ctx, store_root):
    """Deployment planning for split-conformal classifiers."""
    ctx.obj = ArtifactStore(store_root)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--id", "dataset_id", default=None, help="Dataset id (default: file stem).")
@click.option("--filter", "filter_expr", default=None,
              help="Row filter on a numeric column, e.g. 'feat > 3.5'.")
@click.pass_obj
def ingest(store: ArtifactStore, csv_path, dataset_id, filter_expr):
    """Load a labeled score CSV (header y,p1[,...] or y,s0,s1[,...])."""
    dataset = ingest_csv(csv_path, dataset_id, filter_expr)
    store.save_dataset(dataset)
    prov = dataset.provenance
    click.echo(f"ingested {dataset.dataset_id}: kept {prov['rows_kept']}/{prov['rows_in']} rows"
               + (f" (filter: {prov['filter']})" if prov["filter"] else ""))


@main.command()
@click.option("--dataset", "dataset_id", required=True)
@click.option("--alpha0", type=float, default=0.10, show_default=True)
@click.option("--delta0", type=float, default=0.10, show_default=True)
@click.option("--alpha1", type=float, default=0.10, show_default=True)
@click.option("--delta1", type=float, default=0.10, show_default=True)
@click.option("--method", type=click.Choice(["ssbc", "nominal", "dkwm"]), default="ssbc",
              show_default=True)
@click.option("--regime", default="win:100", show_default=True,
              help="'inf' or 'win:<m>'.")
@click.option("--out", "out_id", default=None, help="Calibration id (default: <dataset>-cal).")
@click.pass_obj
def calibrate(store, dataset_id, alpha0, delta0, alpha1, delta1, method, regime, out_id):
    """Select per-class grid indices and persist the deployed thresholds."""
    window = parse_regime(regime)
    doc = cmd_calibrate(store, dataset_id, alpha0, delta0, alpha1, delta1,
                        method, window, out_id)
    for cls, sel in enumerate(doc["selections"]):
        tau = doc["thresholds"][f"tau{cls}"]
        click.echo(
            f"class {cls}: u={sel['u']} k={sel['k']} "
            f"alpha_grid={sel['alpha_grid']:.4f} tau={tau:.6f}"
        )
    click.echo(f"saved calibration {doc['calibration_id']} ({doc['regime_tag']} regime)")


@main.command()
@click.option("--dataset", "dataset_id", required=True, help="Dataset to audit on.")
@click.option("--calibration", "calibration_id", required=True)
@click.option("--policy", type=click.Choice(["si", "cr", "se"]), default="si", show_default=True)
@click.option("--m", type=int, default=100, show_default=True, help="Future window size.")
@click.option("--level", type=float, default=0.95, show_default=True)
@click.option("--mode", default="two-sample", show_default=True,
              help="'two-sample' or 'loo[:infl]'.")
@click.option("--offset", type=float, default=1.0, show_default=True)
@click.option("--out", "out_id", default=None)
@click.pass_obj
def audit(store, dataset_id, calibration_id, policy, m, level, mode, offset, out_id):
    """Tabulate region-label counts and persist predictive envelopes."""
    doc = cmd_audit(store, dataset_id, calibration_id, policy, m, level, mode,
                    offset, out_id)
    click.echo(f"audited {doc['n_total']} rows under {calibration_id} ({doc['mode']})")
    for kpi, env in sorted(doc["envelopes"].items()):
        rate = doc["kpis"][kpi]["rate"]
        click.echo(f"  {kpi}: rate={rate:.4f} window[{env['lo']}, {env['hi']}] of {env['m']}")
    click.echo(f"saved audit {doc['audit_id']}")


@main.command("sweep")
@click.argument("spec_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_id", required=True, help="Menu id.")
@click.pass_obj
def sweep_cmd(store, spec_path, out_id):
    """Run a request-grid sweep from a JSON spec file and persist the menu."""
    try:
        raw = json.loads(Path(spec_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"{spec_path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    try:
        summary = cmd_sweep(store, raw, out_id)
    except KeyError as exc:
        raise click.ClickException(f"{spec_path}: missing field {exc}")
    click.echo(
        f"menu {summary['menu_id']}: {summary['cells']} cells -> "
        f"{summary['points']} points, {summary['regimes']} regimes, "
        f"front {summary['front_size']}, infeasible {summary['infeasible']}"
    )
    if "wedges" in summary:
        click.echo(f"wedge document written for {summary['wedges']} regimes")


@main.group()
def simulate():
    """Seeded Monte Carlo studies."""


@simulate.command("coverage")
@click.option("--reps", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--alpha", type=float, default=0.10, show_default=True)
@click.option("--delta", type=float, default=0.10, show_default=True)
@click.option("--m", "m_infer", type=int, default=100, show_default=True)
@click.option("--n-grid", default="50,75,100,150,200,250,300,500", show_default=True)
@click.option("--out", "out_path", default=None, help="CSV output path.")
def simulate_coverage(reps, seed, alpha, delta, m_infer, n_grid, out_path):
    """Calibration-conditional violation rates against exact theory."""
    from .simlab import CoverageStudySpec, coverage_study_to_csv, run_coverage_study

    spec = CoverageStudySpec(
        n_cal_grid=tuple(int(x) for x in n_grid.split(",")),
        alpha_star=alpha, delta=delta, m_infer=m_infer, reps=reps, seed=seed,
    )
    rows = run_coverage_study(spec)
    click.echo(f"{'n':>5} {'method':>8} {'u':>4} {'obs':>8} {'beta':>8} {'bb':>8}")
    for r in rows:
        click.echo(f"{r.n_cal:>5} {r.method:>8} {r.u:>4} {r.obs:>8.4f} "
                   f"{r.beta_theory:>8.4f} {r.bb_theory:>8.4f}")
    if out_path:
        coverage_study_to_csv(rows, out_path)
        click.echo(f"wrote {out_path}")


@simulate.command("envelopes")
@click.option("--reps", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", default=None, help="JSON report path.")
def simulate_envelopes(reps, seed, out_path):
    """Envelope calibration and LOO alignment over the four score geometries."""
    from .simlab import EnvelopeStudySpec, run_envelope_study

    reports = []
    for p_class in (0.10, 0.50):
        for shape1 in ((4, 3), (9, 3)):
            spec = EnvelopeStudySpec(p_class=p_class, class1_shape=shape1,
                                     reps=reps, seed=seed)
            report = run_envelope_study(spec)
            reports.append(report)
            for a in report.alignments:
                click.echo(
                    f"p={p_class} shape1={shape1} {a.kpi}: contain={a.containment_freq:.3f} "
                    f"loo_inside={a.loo_inside_freq:.3f} superset={a.superset_frac:.3f}"
                )
    if out_path:
        doc = [
            {
                "p_class": r.spec.p_class,
                "class1_shape": list(r.spec.class1_shape),
                "reps_used": r.reps_used,
                "reps_skipped": r.reps_skipped,
                "alignments": [vars(a) for a in r.alignments],
            }
            for r in reports
        ]
        Path(out_path).write_text(json.dumps(doc, indent=1), encoding="utf-8")
        click.echo(f"wrote {out_path}")


@simulate.command("coupling")
@click.option("--n", type=int, default=10, show_default=True)
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--reps", type=int, default=200_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def simulate_coupling(n, k, reps, seed):
    """Permutation estimate of the reuse-coupling covariance vs its closed form."""
    from .simlab import run_coupling_check

    check = run_coupling_check(n, k, reps, seed)
    click.echo(f"estimate={check.estimate:.5f} theory={check.theory:.5f} "
               f"se={check.mc_se:.5f}")


@main.command()
@click.option("--port", type=int, default=8321, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.pass_obj
def serve(store, port, host):
    """Serve the artifact store over HTTP for the explorer."""
    from .service import serve as run_service

    click.echo(f"serving {store.root} on http://{host}:{port}")
    run_service(store.root, host=host, port=port)


if __name__ == "__main__":
    main()
