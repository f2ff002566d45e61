"""Command line harness: config handling, replica runs, CSV/JSON output.

Every mode writes one CSV of records and one JSON summary next to it.
Output is byte-stable: reals are printed with 17 significant digits, rows
are sorted by (replica, checkpoint), JSON keys are sorted, newlines are
UNIX.  Exit codes: 0 pass, 1 usage error, 2 tolerance failure, 3
numerical-quality failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import model as _model
from . import oracle as _oracle
from .eden import estimate_dfpp, run_eden_dilute
from .layers import kernel_mass_check, run_layers
from .peel import DEFAULT_SHORTCUT, EXACT, run_peel

MODES = ("peel", "layers", "eden-dilute", "dfpp", "check", "constants", "oracle")


# ---------------------------------------------------------------------------
# slope fitting


def fit_slope(x, y):
    """Ordinary least squares slope of y against x, with its standard error.

    Callers apply the transform (log-log or semi-log) before calling.
    Needs at least 8 points and a non-degenerate abscissa window.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if x.size < 8:
        raise ValueError("need at least 8 points in the fit window")
    xm = x - x.mean()
    sxx = float(np.dot(xm, xm))
    if sxx <= 0.0:
        raise ValueError("degenerate fit window: all x equal")
    slope = float(np.dot(xm, y)) / sxx
    resid = y - y.mean() - slope * xm
    var = float(np.dot(resid, resid)) / (x.size - 2) if x.size > 2 else 0.0
    return slope, math.sqrt(var / sxx)


def summarize(values):
    """Median and interquartile range of a collection of per-replica values."""
    v = np.asarray(sorted(values), dtype=float)
    q1, med, q3 = (float(q) for q in np.percentile(v, [25.0, 50.0, 75.0]))
    return {"median": med, "iqr": q3 - q1, "count": int(v.size)}


def _replica_slopes(records, key_of, x_of, y_of, lo):
    """Per-replica OLS slopes over checkpoints with abscissa >= lo."""
    by_rep = {}
    for rec in records:
        by_rep.setdefault(rec.replica, []).append(rec)
    slopes = []
    for rep in sorted(by_rep):
        rows = sorted(by_rep[rep], key=key_of)
        xs = [x_of(r) for r in rows if x_of(r) >= lo and y_of(r) > 0]
        ys = [y_of(r) for r in rows if x_of(r) >= lo and y_of(r) > 0]
        if len(xs) < 8:
            continue
        slopes.append(fit_slope(np.log(xs), np.log(ys))[0])
    return slopes


# ---------------------------------------------------------------------------
# output encoding


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, _model.Phase):
        return obj.value
    return obj


def write_json(path: Path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def build_id() -> str:
    """Short content hash of the installed package sources."""
    digest = hashlib.sha256()
    pkg = Path(__file__).parent
    for src in sorted(pkg.glob("*.py")):
        digest.update(src.name.encode())
        digest.update(src.read_bytes())
    return digest.hexdigest()[:12]


def _base_summary(cfg, model):
    dc = _model.derived_constants(model)
    return {
        "build": build_id(),
        "config": dict(cfg),
        "model": {
            "a": model.a,
            "c": model.c,
            "kappa": model.kappa,
            "phase": model.phase.value,
        },
        "derived": _jsonable(dc),
    }


# ---------------------------------------------------------------------------
# modes


def _shortcut(cfg):
    return EXACT if cfg["exact_volume"] else DEFAULT_SHORTCUT


def _mode_peel(cfg, model):
    records = run_peel(
        model, cfg["seed"], cfg["steps"], cfg["replicas"], track_volume=True,
        shortcut_threshold=_shortcut(cfg), threads=cfg["threads"],
    )
    records.sort(key=lambda r: (r.replica, r.n))
    rows = [(r.replica, r.n, r.P, r.V) for r in records]
    n_max = cfg["steps"]
    final = [r for r in records if r.n == n_max]
    ref_p = 1.0 / (model.a - 1.0)
    ref_v = (model.a - 0.5) / (model.a - 1.0)
    log_p = [math.log(r.P) / math.log(n_max) for r in final if r.P > 0]
    log_v = [math.log(r.V) / math.log(n_max) for r in final if r.V > 0]
    lo = max(8.0, n_max / 256.0)
    perim = _replica_slopes(records, lambda r: r.n, lambda r: r.n,
                            lambda r: r.P, lo)
    vol = _replica_slopes(records, lambda r: r.n, lambda r: r.n,
                          lambda r: r.V, lo)
    summary = {
        "perimeter_log_exponent": summarize(log_p),
        "volume_log_exponent": summarize(log_v),
        "perimeter_slopes": summarize(perim) if perim else None,
        "volume_slopes": summarize(vol) if vol else None,
        "reference": {"perimeter": ref_p, "volume": ref_v},
    }
    flags = {
        "perimeter_log_exponent": abs(
            summary["perimeter_log_exponent"]["median"] - ref_p) <= 0.1 * ref_p,
        "volume_log_exponent": abs(
            summary["volume_log_exponent"]["median"] - ref_v) <= 0.1 * ref_v,
    }
    return ("replica,n,P,V".split(","), rows, summary, flags)


def _mode_layers(cfg, model):
    records, exhausted = run_layers(
        model, cfg["seed"], cfg["rmax"], cfg["replicas"],
        max_steps=cfg["steps"] if cfg["steps"] else 1 << 33,
        shortcut_threshold=_shortcut(cfg), threads=cfg["threads"],
    )
    records.sort(key=lambda r: (r.replica, r.r))
    rows = [(r.replica, r.r, r.theta_r, r.P_theta, r.V_theta) for r in records]
    summary = {"exhausted_replicas": exhausted}
    flags = {}
    if model.phase is _model.Phase.DILUTE:
        dc = _model.derived_constants(model)
        lo = max(4.0, cfg["rmax"] / 8.0)
        perim = _replica_slopes(records, lambda r: r.r, lambda r: r.r,
                                lambda r: r.P_theta, lo)
        vol = _replica_slopes(records, lambda r: r.r, lambda r: r.r,
                              lambda r: r.V_theta, lo)
        summary["perimeter_slopes"] = summarize(perim) if perim else None
        summary["volume_slopes"] = summarize(vol) if vol else None
        summary["reference"] = {
            "perimeter": dc.perim_exponent, "volume": dc.dim_a,
        }
        if perim:
            flags["perimeter_slope"] = abs(
                summary["perimeter_slopes"]["median"] - dc.perim_exponent
            ) <= 0.15 * dc.perim_exponent
        if vol:
            flags["volume_slope"] = abs(
                summary["volume_slopes"]["median"] - dc.dim_a
            ) <= 0.20 * dc.dim_a
    else:
        # dense phase: perimeters grow exponentially in the layer index, so
        # the fit is semi-log and the reported ratio targets a - 1/2
        by_rep = {}
        for rec in records:
            by_rep.setdefault(rec.replica, []).append(rec)
        c_hats, ratios, tail_var = [], [], []
        for rep in sorted(by_rep):
            rws = sorted(by_rep[rep], key=lambda r: r.r)
            rs = np.array([r.r for r in rws if r.P_theta > 0], dtype=float)
            lp = np.array([math.log(r.P_theta) for r in rws if r.P_theta > 0])
            lv = np.array([math.log(r.V_theta) for r in rws
                           if r.P_theta > 0 and r.V_theta > 0])
            if rs.size < 8:
                continue
            sp, _ = fit_slope(rs, lp)
            sv, _ = fit_slope(rs[: lv.size], lv)
            c_hats.append(sp)
            if sp > 0:
                ratios.append(sv / sp)
            q = lp / rs
            tail = q[rs >= 0.75 * rs[-1]]
            if tail.size and tail.mean() != 0.0:
                tail_var.append(float(np.ptp(tail) / abs(tail.mean())))
        summary["c_hat"] = summarize(c_hats) if c_hats else None
        summary["volume_perimeter_ratio"] = summarize(ratios) if ratios else None
        summary["tail_quartile_variation"] = (
            summarize(tail_var) if tail_var else None)
        summary["reference"] = {"ratio": model.a - 0.5}
        if c_hats:
            flags["c_hat_positive"] = summary["c_hat"]["median"] > 0.0
        if ratios:
            flags["volume_perimeter_ratio"] = abs(
                summary["volume_perimeter_ratio"]["median"] - (model.a - 0.5)
            ) <= 0.10 * (model.a - 0.5)
        if tail_var:
            flags["stabilization"] = (
                summary["tail_quartile_variation"]["median"] < 0.10)
    return ("replica,r,theta_r,P,V".split(","), rows, summary, flags)


def _mode_eden_dilute(cfg, model):
    records, exhausted = run_eden_dilute(
        model, cfg["seed"], cfg["replicas"], cfg["tmax"],
        max_steps=cfg["steps"] if cfg["steps"] else 1 << 27,
        shortcut_threshold=_shortcut(cfg), threads=cfg["threads"],
    )
    records.sort(key=lambda r: (r.replica, r.t))
    rows = [(r.replica, r.t, r.tau, r.P, r.V) for r in records]
    dc = _model.derived_constants(model)
    lo = max(1.0, cfg["tmax"] / 64.0)
    perim = _replica_slopes(records, lambda r: r.t, lambda r: r.t,
                            lambda r: r.P, lo)
    vol = _replica_slopes(records, lambda r: r.t, lambda r: r.t,
                          lambda r: r.V, lo)
    summary = {
        "exhausted_replicas": exhausted,
        "perimeter_slopes": summarize(perim) if perim else None,
        "volume_slopes": summarize(vol) if vol else None,
        "reference": {"perimeter": dc.perim_exponent, "volume": dc.dim_a},
    }
    flags = {}
    if perim:
        flags["perimeter_slope"] = abs(
            summary["perimeter_slopes"]["median"] - dc.perim_exponent
        ) <= 0.15 * dc.perim_exponent
    if vol:
        flags["volume_slope"] = abs(
            summary["volume_slopes"]["median"] - dc.dim_a) <= 0.20 * dc.dim_a
    return ("replica,t,tau,P,V".split(","), rows, summary, flags)


def _mode_dfpp(cfg, model):
    est = estimate_dfpp(
        model, cfg["seed"], cfg["replicas"], cfg["steps"],
        threads=cfg["threads"],
    )
    rows = [(0, est.n_trunc, est.value, est.se, est.tail_bound, est.reference)]
    summary = {"estimate": _jsonable(est), "error": est.error}
    flags = {
        "within_5pct": abs(est.value - est.reference) <= 0.05 * est.reference,
        "tail_below_1pct": est.tail_bound < 0.01 * est.value,
    }
    return ("replica,n_trunc,value,se,tail_bound,reference".split(","),
            rows, summary, flags)


def _mode_check(cfg, model):
    """Exact-identity suite across both phases; independent of seed."""
    rows = []

    def add(name, value, tol):
        rows.append((name, value, tol, value < tol))

    for a in (1.6, 1.75, 2.25, 2.4):
        m = _model.make_special_model(a)
        tag = f"a={a:g}"
        total = _model.nu_tail_pos(m, 1) + _model.nu_tail_neg(m, 1)
        add(f"nu_normalization[{tag}]", abs(total - 1.0), 1e-10)
        add(f"harmonicity_max[{tag}]",
            float(_model.check_criticality(m, 64).max()), 1e-8)
        add(f"nu(-1)=2kappa[{tag}]",
            abs(_model.nu_pmf(m, -1) - 2.0 * m.kappa), 1e-12)
        worst = 0.0
        for p, ell in [(2, 4), (5, 3), (8, 16), (7, 1), (12, 5)]:
            _, tot = kernel_mass_check(m, p, ell)
            worst = max(worst, abs(tot - 1.0))
        add(f"layer_kernel_mass[{tag}]", worst, 1e-10)
    ells = np.arange(0, 65)
    hd = float((np.abs(
        _model.h_up(ells + 1) - _model.h_up(ells) - _model.h_down(ells)
    ) / _model.h_down(ells)).max())
    add("h_down_identity", hd, 1e-10)
    flags = {name: bool(ok) for name, _, _, ok in rows}
    summary = {"checks": [
        {"name": n, "value": v, "tol": t, "pass": bool(ok)}
        for n, v, t, ok in rows
    ]}
    return ("check,value,tol,pass".split(","), rows, summary, flags)


def _mode_constants(cfg, model):
    dc = _model.derived_constants(model)
    items = [("a", model.a), ("c", model.c), ("kappa", model.kappa)]
    for f in dataclasses.fields(dc):
        v = getattr(dc, f.name)
        if v is None:
            continue
        items.append((f.name, v.value if isinstance(v, _model.Phase) else v))
    summary = {"constants": {k: _jsonable(v) for k, v in items}}
    return ("name,value".split(","), items, summary, {})


def _mode_oracle(cfg, model):
    k_max = cfg["steps"] if cfg["steps"] else 64
    table = _oracle.build_return_table(model, np.arange(1, k_max + 1))
    rows = [(int(k), float(p)) for k, p in sorted(table.probs.items())]
    summary = {
        "return_probs": {"k_max": k_max, "method": table.method,
                         "error": table.error},
        "exp_inv_P": {str(n): _oracle.exp_inv_P(model, n)
                      for n in (0, 1, 4, 16)},
        "cycle_identity_residual": abs(_oracle.exp_inv_P(model, 0) - 1.0),
    }
    flags = {"cycle_identity": summary["cycle_identity_residual"] < 1e-6}
    if model.phase is _model.Phase.DENSE:
        summary["e_dfpp"] = _oracle.e_dfpp_closed(model)
        summary["e_dfpp_formula"] = _model.e_dfpp_formula(model.a)
        flags["e_dfpp_agreement"] = abs(
            summary["e_dfpp"] - summary["e_dfpp_formula"]
        ) <= 1e-6 * abs(summary["e_dfpp_formula"])
    return ("k,return_prob".split(","), rows, summary, flags)


_HANDLERS = {
    "peel": _mode_peel,
    "layers": _mode_layers,
    "eden-dilute": _mode_eden_dilute,
    "dfpp": _mode_dfpp,
    "check": _mode_check,
    "constants": _mode_constants,
    "oracle": _mode_oracle,
}

_REQUIRED = {"peel": ("steps",), "layers": ("rmax",),
             "eden-dilute": ("tmax",), "dfpp": ("steps",)}


# ---------------------------------------------------------------------------
# argument handling


def _parser():
    p = argparse.ArgumentParser(
        prog="peelmap",
        description="Lazy peeling simulations of heavy-tailed random planar "
                    "maps, with analytic cross-checks.",
    )
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--a", type=float, help="tail exponent in (1.5, 2.5), not 2")
    p.add_argument("--seed", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--steps", type=int,
                   help="peel steps; dfpp truncation; budget for other modes")
    p.add_argument("--rmax", type=int, help="outermost layer index")
    p.add_argument("--tmax", type=float, help="largest fpp time")
    p.add_argument("--out", help="output base path (writes .csv and .json)")
    p.add_argument("--exact-volume", action="store_true", default=None,
                   dest="exact_volume",
                   help="disable the large-hole volume shortcut")
    p.add_argument("--threads", type=int)
    p.add_argument("--config", help="JSON file supplying any flag")
    return p


_DEFAULTS = {"seed": 0, "replicas": 4, "steps": None, "rmax": None,
             "tmax": None, "out": "peelmap_run", "exact_volume": False,
             "threads": 1}


def main(argv=None) -> int:
    try:
        args = vars(_parser().parse_args(argv))
    except SystemExit as exc:
        # argparse uses status 2 for bad flags; usage errors are 1 here
        return 0 if exc.code == 0 else 1
    cfg_path = args.pop("config")
    cfg = dict(_DEFAULTS)
    if cfg_path:
        try:
            with open(cfg_path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"peelmap: bad config file: {exc}", file=sys.stderr)
            return 1
        unknown = set(loaded) - set(_DEFAULTS) - {"a", "mode"}
        if unknown:
            print(f"peelmap: unknown config keys: {sorted(unknown)}",
                  file=sys.stderr)
            return 1
        cfg.update(loaded)
    cfg.update({k: v for k, v in args.items() if v is not None})

    if cfg.get("mode") not in MODES:
        print("peelmap: --mode is required", file=sys.stderr)
        return 1
    if cfg.get("a") is None:
        print("peelmap: --a is required", file=sys.stderr)
        return 1
    try:
        model = _model.make_special_model(float(cfg["a"]))
    except ValueError as exc:
        print(f"peelmap: {exc}", file=sys.stderr)
        return 1
    for field in _REQUIRED.get(cfg["mode"], ()):
        if cfg.get(field) is None:
            print(f"peelmap: mode {cfg['mode']} requires --{field}",
                  file=sys.stderr)
            return 1
    if cfg["mode"] == "dfpp" and model.phase is not _model.Phase.DENSE:
        print("peelmap: dfpp needs the dense phase (a < 2)", file=sys.stderr)
        return 1
    if cfg["mode"] == "eden-dilute" and model.phase is not _model.Phase.DILUTE:
        print("peelmap: eden-dilute needs the dilute phase (a > 2)",
              file=sys.stderr)
        return 1

    try:
        header, rows, summary, flags = _HANDLERS[cfg["mode"]](cfg, model)
    except _oracle.QuadratureError as exc:
        print(f"peelmap: quadrature failure: {exc}", file=sys.stderr)
        return 3
    except (FloatingPointError, OverflowError) as exc:
        print(f"peelmap: numerical failure: {exc}", file=sys.stderr)
        return 3

    base = Path(cfg["out"])
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    write_csv(base.with_suffix(".csv"), header, rows)
    out = _base_summary(cfg, model)
    out.update(summary)
    out["pass"] = flags
    out["all_pass"] = all(flags.values()) if flags else True
    write_json(base.with_suffix(".json"), out)

    for name, ok in flags.items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    print(f"wrote {base.with_suffix('.csv')} and {base.with_suffix('.json')}")
    return 0 if out["all_pass"] else 2


if __name__ == "__main__":
    sys.exit(main())
