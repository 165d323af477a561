"""Config-driven experiment runner: ``cdkernels run <config.json> [--out DIR] [--jobs K]``.

Exit status is 0 when every asserted tolerance passes, 1 when one fails
and 2 when the configuration is invalid.  Reports and tables are
deterministic; the run timestamp goes to a separate metadata file.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__
from ._backend import BACKEND
from .cansys import cansys_kernel, integrate_transfer, kernel_jform, ring_system, schrodinger_system, system_from_config
from .errors import ScaleError, StallError
from .mat2 import SpherePoint
from .opuc import geometric_limit, get_verblunsky, opuc_universality
from .oprl import jacobi_from_id
from .tables import KernelTable, format_float
from .universality import (
    CanonicalProvider,
    JacobiProvider,
    clock_spacing,
    default_points,
    equivalence_report,
    grid_from_points,
    subordinacy_ratio,
    universality_report,
)
from .weyl import boundary_limit, get_model, list_models, point_mass_mass, sector_probe

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    """The configuration is syntactically or semantically invalid."""


@dataclass
class Outcome:
    results: dict = field(default_factory=dict)
    tables: list[tuple[str, KernelTable]] = field(default_factory=list)
    assertions: list[dict] = field(default_factory=list)

    def check(self, metric: str, value: float, threshold: float, op: str = "<") -> None:
        ok = value < threshold if op == "<" else value <= threshold
        self.assertions.append(
            {"metric": metric, "value": value, "threshold": threshold, "op": op, "pass": bool(ok)}
        )

    @property
    def passed(self) -> bool:
        return all(a["pass"] for a in self.assertions)


# --- configuration ----------------------------------------------------------


def _schema() -> dict:
    text = resources.files("cdkernels").joinpath("schema/config-v1.json").read_text()
    return json.loads(text)


def validate_config(cfg: Any) -> dict:
    validator = Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines))
    return cfg


def load_config(path: str | Path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from exc
    return with_defaults(validate_config(cfg))


def with_defaults(cfg: dict) -> dict:
    """Fill defaults so the emitted report records every setting used."""
    out = dict(cfg)
    out.setdefault("name", out["kind"])
    out.setdefault("xi", 0.0)
    out.setdefault("grid", {"points": "default"})
    out.setdefault("tolerances", {})
    if out["kind"] == "clock":
        out.setdefault("j_range", 5)
    needs_model = out["kind"] not in ("cansys-check",) and "system" not in out
    if needs_model and "model" not in out:
        raise ConfigError(f"kind {out['kind']!r} needs a 'model'")
    if out["kind"] not in ("mfun",) and "indices" not in out:
        raise ConfigError(f"kind {out['kind']!r} needs 'indices'")
    return out


def _xis(cfg: dict) -> list[float]:
    xi = cfg["xi"]
    return [float(v) for v in xi] if isinstance(xi, list) else [float(xi)]


def _points(cfg: dict) -> list[complex]:
    pts = cfg["grid"].get("points", "default")
    return default_points() if pts == "default" else [complex(re, im) for re, im in pts]


def _eta(cfg: dict):
    if "eta" not in cfg:
        return None
    if cfg["eta"] == "inf":
        return SpherePoint.infinity()
    return complex(*cfg["eta"])


def _provider(cfg: dict, jobs: int):
    if "system" in cfg:
        return CanonicalProvider(system_from_config(cfg["system"]), jobs)
    model = cfg["model"]
    if model == "schrodinger-free":
        return CanonicalProvider(schrodinger_system(0.0), jobs)
    if model.startswith("ring:"):
        body = model.split(":", 1)[1]
        eta = SpherePoint.infinity() if body == "inf" else complex(*(float(v) for v in body.split(",")))
        return CanonicalProvider(ring_system(eta), jobs)
    try:
        return JacobiProvider(jacobi_from_id(model), jobs)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _boundary_f(cfg: dict, xi: float) -> float:
    if "f" in cfg:
        return float(cfg["f"])
    try:
        limit = boundary_limit(get_model(cfg["model"]), xi)
    except KeyError as exc:
        raise ConfigError(f"no boundary data for {cfg.get('model')!r}; supply 'f'") from exc
    if not limit.converged or not limit.f_mu > 0:
        raise ConfigError(f"boundary value at {xi} did not settle; supply 'f'")
    return limit.f_mu


def _model_for_eta(cfg: dict) -> Optional[str]:
    model = cfg.get("model")
    if model is None:
        return None
    try:
        get_model(model)
    except (KeyError, ValueError):
        return None
    return model


# --- runners ----------------------------------------------------------------


def _run_kernel(cfg, jobs) -> Outcome:
    out = Outcome()
    prov = _provider(cfg, jobs)
    grid = grid_from_points(_points(cfg))
    rows = []
    for i, xi in enumerate(_xis(cfg)):
        for j, L in enumerate(cfg["indices"]):
            vals = prov.kernels(L, [xi + z for z, _ in grid], [xi + w for _, w in grid])
            diag = prov.kernels(L, [complex(xi)], [complex(xi)])[0]
            tau = float((diag[0, 0] + diag[1, 1]).real)
            table = KernelTable(xi, max(tau, 1e-300), L, grid, vals, prov.model_id, {"tau": tau})
            out.tables.append((f"{cfg['name']}-x{i}-i{j}.csv", table))
            rows.append({"xi": xi, "index": L, "tau": tau})
    out.results["kernels"] = rows
    return out


def _universality(cfg, jobs, kind: str) -> Outcome:
    out = Outcome()
    prov = _provider(cfg, jobs)
    grid = grid_from_points(_points(cfg))
    tol = cfg["tolerances"]
    reports = []
    for i, xi in enumerate(_xis(cfg)):
        kwargs: dict[str, Any] = {}
        if kind == "scalar":
            kwargs["f"] = _boundary_f(cfg, xi)
        else:
            kwargs["eta"] = _eta(cfg)
            kwargs["model_id"] = _model_for_eta(cfg)
            if kwargs["eta"] is None and kwargs["model_id"] is None:
                raise ConfigError("supply 'eta' for models without boundary data")
        try:
            report, tables = universality_report(
                prov, xi, cfg["indices"], kind=kind, grid=grid, threshold=tol.get("sup_error"), **kwargs
            )
        except ScaleError as exc:
            out.check(f"scale@xi={xi}", 0.0, 0.0)
            out.results.setdefault("errors", []).append(str(exc))
            continue
        for j, table in enumerate(tables):
            out.tables.append((f"{cfg['name']}-x{i}-i{j}.csv", table))
        entry = report.to_dict()
        entry["table_meta"] = [t.meta for t in tables]
        reports.append(entry)
        if "sup_error" in tol:
            out.check(f"sup_error@xi={xi},index={report.indices[-1]}", report.sup_errors[-1], tol["sup_error"])
        if "decay_factor" in tol:
            out.check(f"decay_ratio@xi={xi}", report.decay_ratio, tol["decay_factor"])
        for t in tables:
            if t.meta.get("eta_mismatch"):
                out.results.setdefault("flags", []).append(f"eta mismatch at xi={xi}")
    out.results["reports"] = reports
    return out


def _run_equivalence(cfg, jobs) -> Outcome:
    out = Outcome()
    prov = _provider(cfg, jobs)
    tol = cfg["tolerances"]
    reports = []
    for xi in _xis(cfg):
        rep = equivalence_report(
            prov, xi, cfg["indices"], eta=_eta(cfg), model_id=_model_for_eta(cfg),
            grid=grid_from_points(_points(cfg)), points=_points(cfg),
        )
        reports.append(rep.to_dict())
        if "sup_error" in tol:
            out.check(f"max_distance@xi={xi}", rep.max_distance(), tol["sup_error"])
        if "decay_factor" in tol:
            ok = all(
                v[-1] < v[0] * tol["decay_factor"] or v[-1] <= 1e-12
                for v in (rep.hamiltonian, rep.solution, rep.kernel)
            )
            out.assertions.append({"metric": f"decay_together@xi={xi}", "value": ok, "pass": ok})
    out.results["reports"] = reports
    return out


def _run_clock(cfg, jobs) -> Outcome:
    out = Outcome()
    params = jacobi_from_id(cfg["model"]) if "model" in cfg else None
    if params is None:
        raise ConfigError("clock needs a Jacobi model")
    rows = []
    for xi in _xis(cfg):
        f = _boundary_f(cfg, xi)
        for n in cfg["indices"]:
            res = clock_spacing(params, xi, int(n), cfg["j_range"], f)
            rows.append({
                "xi": xi, "n": int(n), "f": res.f, "K": res.K,
                "gaps": {str(j): g for j, g in res.gaps.items()},
                "max_deviation": res.max_deviation(),
            })
            if "gap" in cfg["tolerances"]:
                out.check(f"gap_deviation@xi={xi},n={int(n)}", res.max_deviation(), cfg["tolerances"]["gap"])
    out.results["clock"] = rows
    return out


def _run_subordinacy(cfg, jobs) -> Outcome:
    out = Outcome()
    params = jacobi_from_id(cfg["model"])
    rows = []
    for xi in _xis(cfg):
        for n in cfg["indices"]:
            r = subordinacy_ratio(params, xi, int(n))
            rows.append({"xi": xi, "n": int(n), "ratio": r})
            if "expected" in cfg and "ratio" in cfg["tolerances"]:
                out.check(f"ratio_error@xi={xi},n={int(n)}", abs(r - cfg["expected"]), cfg["tolerances"]["ratio"])
    out.results["subordinacy"] = rows
    return out


def _run_opuc(cfg, jobs) -> Outcome:
    out = Outcome()
    try:
        params = get_verblunsky(cfg["model"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    g = float(cfg.get("g", 1.0))
    grid = grid_from_points(_points(cfg))
    tol = cfg["tolerances"]
    rows = []
    for i, xi in enumerate(_xis(cfg)):
        for j, n in enumerate(cfg["indices"]):
            table = opuc_universality(params, xi, g, int(n), grid)
            out.tables.append((f"{cfg['name']}-x{i}-i{j}.csv", table))
            row = {"xi": xi, "n": int(n), "g": g, "k_n": table.scale, "sup_error": table.meta["sup_error"]}
            if cfg["model"] == "opuc-free" and xi == 0.0 and g == 1.0:
                row["identity_error"] = max(
                    abs(v - geometric_limit(int(n), z, w)) for v, (z, w) in zip(table.values, grid)
                )
                if "identity" in tol:
                    out.check(f"identity@n={int(n)}", row["identity_error"], tol["identity"])
            rows.append(row)
        if "sup_error" in tol:
            out.check(f"sup_error@xi={xi}", rows[-1]["sup_error"], tol["sup_error"])
    out.results["opuc"] = rows
    return out


def _run_cansys_check(cfg, jobs) -> Outcome:
    out = Outcome()
    prov = _provider(cfg, jobs)
    if not isinstance(prov, CanonicalProvider):
        raise ConfigError("cansys-check needs a canonical system ('system' or a canonical model id)")
    system = prov.system
    pts = _points(cfg)
    rows = []
    for L in cfg["indices"]:
        drift = max(integrate_transfer(system, L, z, report=True).det_drift for z in pts)
        worst = 0.0
        for z in pts:
            for w in pts:
                if abs(w.conjugate() - z) < 1e-8:
                    continue
                k = cansys_kernel(system, L, z, w)
                ref = kernel_jform(system, L, z, w)
                worst = max(worst, float(np.max(np.abs(k - ref))) / max(1.0, float(np.max(np.abs(ref)))))
        rows.append({"L": L, "det_drift": drift, "jform_error": worst})
        if "identity" in cfg["tolerances"]:
            out.check(f"jform_error@L={L}", worst, cfg["tolerances"]["identity"])
    out.results["cansys"] = rows
    return out


def _run_mfun(cfg, jobs) -> Outcome:
    out = Outcome()
    try:
        model = get_model(cfg["model"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    kwargs = {}
    if "schedule" in cfg:
        kwargs["schedule"] = cfg["schedule"]
    if "boundary" in cfg["tolerances"]:
        kwargs["tol"] = cfg["tolerances"]["boundary"]
    rows = []
    for xi in _xis(cfg):
        rays = (
            sector_probe(model, xi, cfg["sector_angle"], **kwargs)
            if "sector_angle" in cfg
            else [boundary_limit(model, xi, **kwargs)]
        )
        entries = []
        for lim in rays:
            entries.append({
                "converged": lim.converged,
                "eta": None if lim.eta is None else _point_json(lim.eta),
                "f_mu": lim.f_mu,
                "amplitude": lim.amplitude,
                "boundary_real": lim.boundary_real,
                "last": [lim.last.real, lim.last.imag],
            })
        row = {"xi": xi, "rays": entries, "converged": all(e["converged"] for e in entries)}
        if model.min_y == 0:
            row["point_mass"] = point_mass_mass(model, xi)
        rows.append(row)
    out.results["mfun"] = rows
    return out


def _point_json(p: SpherePoint):
    if p.is_infinite:
        return "inf"
    v = p.to_complex()
    return [v.real, v.imag]


RUNNERS: dict[str, Callable[[dict, int], Outcome]] = {
    "kernel": _run_kernel,
    "universality-scalar": lambda c, j: _universality(c, j, "scalar"),
    "universality-matrix": lambda c, j: _universality(c, j, "matrix"),
    "equivalence": _run_equivalence,
    "clock": _run_clock,
    "subordinacy": _run_subordinacy,
    "opuc": _run_opuc,
    "cansys-check": _run_cansys_check,
    "mfun": _run_mfun,
}


# --- output -----------------------------------------------------------------


def _clean(obj):
    """Make a result tree JSON-safe and deterministic."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return 0.0 if x == 0 else x
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def write_outputs(cfg: dict, outcome: Outcome, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for fname, table in outcome.tables:
        table.to_csv(out_dir / fname)
        files.append(fname)
    report = {
        "schema": 1,
        "config": cfg,
        "results": outcome.results,
        "assertions": outcome.assertions,
        "pass": outcome.passed,
        "tables": files,
    }
    text = json.dumps(_clean(report), indent=1, sort_keys=True) + "\n"
    (out_dir / f"{cfg['name']}-report.json").write_text(text)
    return report


def write_metadata(cfg: dict, out_dir: Path, config_path: str, jobs: int) -> None:
    meta = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
        "backend": BACKEND,
        "python": platform.python_version(),
        "config_path": str(config_path),
        "jobs": jobs,
    }
    (out_dir / f"{cfg['name']}-metadata.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def run(config_path: str, out_dir: str = ".", jobs: int = 1) -> int:
    try:
        cfg = load_config(config_path)
        outcome = RUNNERS[cfg["kind"]](cfg, jobs)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (ScaleError, StallError, ArithmeticError) as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = Path(out_dir)
    report = write_outputs(cfg, outcome, out)
    write_metadata(cfg, out, config_path, jobs)
    for a in outcome.assertions:
        status = "pass" if a["pass"] else "FAIL"
        print(f"{status}: {a['metric']} = {a['value']}" + (f" (threshold {a['threshold']})" if "threshold" in a else ""))
    print(f"report: {out / (cfg['name'] + '-report.json')}")
    return EXIT_OK if report["pass"] else EXIT_FAIL


def _print_models() -> None:
    print("Jacobi parameters: free-jacobi, chebyshev, constant:<a>,<b>, free-b1:<b>, random:<seed>, discrete:<x1,x2,...>")
    print("m-functions: " + ", ".join(list_models()))
    print("canonical systems: schrodinger-free, ring:<re>,<im>, ring:inf, or an inline 'system'")
    print("Verblunsky coefficients: opuc-free, opuc-constant:<alpha>, opuc-list:<a0,a1,...>")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="cdkernels", description=__doc__.splitlines()[0])
    parser.add_argument("--list-models", action="store_true", help="list model ids and exit")
    sub = parser.add_subparsers(dest="command")
    run_p = sub.add_parser("run", help="run an experiment configuration")
    run_p.add_argument("config", help="path to the JSON configuration")
    run_p.add_argument("--out", default=".", help="output directory (default: current)")
    run_p.add_argument("--jobs", type=int, default=1, help="worker threads for grid sweeps")
    args = parser.parse_args(argv)
    if args.list_models:
        _print_models()
        return EXIT_OK
    if args.command != "run":
        parser.print_help()
        return EXIT_CONFIG
    if args.jobs < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.config, args.out, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
