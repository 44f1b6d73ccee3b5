"""Scenario files: loading, validation, execution and report output.

A scenario is a JSON document naming a function, the sets and map of a
cyclic system, optional hybrid parameters and a list of run requests. See
``scenarios/*.json`` in this package for complete examples.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .certificate import PASS, to_jsonable
from .convex_core import (bregman_difference_identity, bregman_sum_identity, strict_positivity_probe,
                          total_convexity_modulus, uniform_convexity_modulus)
from .cyclic import (HybridParams, composite_hybrid_certificate, composite_map,
                     cyclic_contraction_certificate, hybrid_certificate, validate_cyclicity)
from .functions import FunctionSpec, build
from .iteration import (averaging_identity_check, bregman_trajectory, cesaro, find_fixed_point,
                        find_proximity_cycle, fixed_point_set_convexity_probe, geometric_bound_check,
                        orbit, quasi_nonexpansive_certificate, CESARO_KINDS)
from .sets import make_set, sample_pairs
from .systems import system_from_descriptor

DEFAULT_TOLERANCES = {
    "fixed_point": 1e-10,
    "proximity": 1e-10,
    "identity_rtol": 1e-12,
    "divergence_rtol": 1e-10,
    "geometric_bound": 1e-10,
    "fixed_set": 1e-9,
}

RUN_TYPES = ("orbit", "trajectory", "cesaro", "fixed_point", "proximity", "certificates",
             "moduli", "identities", "geometric_bound", "divergence_identities")
CHECK_KINDS = ("cyclicity", "hybrid", "hybrid_ranges", "composite_hybrid", "cyclic_contraction",
               "quasi_nonexpansive", "fixed_point_set_convexity")

_vec = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_set = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["interval", "box", "ball", "halfspace_intersection"]},
                   "tolerance": {"type": "number", "minimum": 0}},
}
_piece = {
    "type": "object",
    "properties": {"kind": {"enum": ["affine", "rotation", "constant"]},
                   "project_to_target": {"type": "boolean"}},
}
_factor = {"oneOf": [{"type": "number"},
                     {"type": "object", "required": ["kind"],
                      "properties": {"kind": {"enum": ["norm_affine"]}}}]}
SCHEMA = {
    "type": "object",
    "required": ["name", "function", "sets", "map", "runs"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "p": {"type": "integer", "minimum": 1},
        "function": {"type": "object", "required": ["kind"],
                     "properties": {"kind": {"enum": ["squared_norm", "weighted_quadratic",
                                                      "negative_entropy", "affine_stub"]},
                                    "dim": {"type": "integer", "minimum": 1}}},
        "sets": {"type": "array", "items": _set, "minItems": 1},
        "map": {"anyOf": [
            {"type": "object", "required": ["pieces"],
             "properties": {"pieces": {"type": "array", "items": _piece}}},
            _piece]},
        "hybrid": {"type": "object",
                   "properties": {"K": {"oneOf": [_factor, {"type": "array", "items": _factor}]},
                                  "lambda": {"oneOf": [{"type": "number"},
                                                       {"type": "array", "items": {"type": "number"}}]},
                                  "a_caps": {"type": "array", "items": {"type": "number"}},
                                  "lambda_bound": {"type": "number"}}},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
        "runs": {"type": "array", "minItems": 1, "items": {
            "type": "object", "required": ["name", "type"],
            "properties": {"name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                           "type": {"enum": list(RUN_TYPES)}}}},
    },
}


class ConfigError(Exception):
    """Invalid scenario file; carries a field path or a line/column."""

    def __init__(self, message, path=None, line=None, column=None):
        where = ""
        if path:
            where = f" at {path}"
        elif line is not None:
            where = f" at line {line}, column {column}"
        super().__init__(message + where)
        self.path, self.line, self.column = path, line, column


@dataclass
class ScenarioConfig:
    name: str
    function: FunctionSpec
    sets: list
    map: dict
    p: int
    runs: list
    seed: int = 0
    hybrid: dict | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    source: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def build_function(self):
        return build(self.function)

    def build_system(self):
        return system_from_descriptor(self.sets, self.map, self.name)

    def build_hybrid(self) -> HybridParams | None:
        if self.hybrid is None:
            return None
        return hybrid_from_descriptor(self.hybrid)


def _factor_fn(desc):
    if isinstance(desc, (int, float)):
        return float(desc)
    base, slope = float(desc.get("base", 0.0)), float(desc.get("slope", 0.0))
    cap = float(desc.get("cap", np.inf))
    return lambda y: min(cap, base + slope * float(np.linalg.norm(y)))


def hybrid_from_descriptor(desc: dict) -> HybridParams:
    K = desc.get("K", 1.0)
    K = [_factor_fn(k) for k in K] if isinstance(K, list) else [_factor_fn(K)]
    lam = desc.get("lambda", 0.0)
    lam = [float(v) for v in lam] if isinstance(lam, list) else [float(lam)]
    return HybridParams(K, lam, desc.get("a_caps"), desc.get("lambda_bound"))


def shipped_scenarios() -> list:
    """Names of the scenarios bundled with the package."""
    root = resources.files("bregcyclic") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _read_source(path) -> tuple[str, str]:
    p = Path(path)
    if p.exists():
        return p.read_text(encoding="utf-8"), str(p)
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    if name in shipped_scenarios():
        res = resources.files("bregcyclic") / "scenarios" / f"{name}.json"
        return res.read_text(encoding="utf-8"), f"<shipped:{name}>"
    raise ConfigError(f"no such scenario file: {path}")


def _fmt_path(parts) -> str:
    out = ""
    for part in parts:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def _require(cond, message, path):
    if not cond:
        raise ConfigError(message, path=path)


def parse_config(data: dict, source: str | None = None) -> ScenarioConfig:
    """Validate a decoded scenario document and apply defaults."""
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message, path=_fmt_path(exc.absolute_path)) from None

    sets = data["sets"]
    p = data.get("p", len(sets))
    _require(p == len(sets), f"p = {p} but {len(sets)} sets are given", "p")
    for k, s in enumerate(sets):
        try:
            make_set(s)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid set: {exc}", path=f"sets[{k}]") from None
    if "pieces" in data["map"]:
        _require(len(data["map"]["pieces"]) == p, f"map needs {p} pieces", "map.pieces")
    try:
        spec = FunctionSpec.from_dict(data["function"])
        fn = build(spec)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid function: {exc}", path="function") from None
    dim = make_set(sets[0]).dim
    _require(fn.dim == dim, f"function dimension {fn.dim} differs from set dimension {dim}", "function.dim")

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, val in data.get("tolerances", {}).items():
        _require(key in DEFAULT_TOLERANCES, f"unknown tolerance {key!r}", f"tolerances.{key}")
        tolerances[key] = float(val)

    names = set()
    for k, run in enumerate(data["runs"]):
        where = f"runs[{k}]"
        _require(run["name"] not in names, f"duplicate run name {run['name']!r}", f"{where}.name")
        names.add(run["name"])
        for key in ("i", "start_index"):
            if key in run:
                _require(isinstance(run[key], int) and 0 <= run[key] < p,
                         f"set index must be an integer in [0, {p})", f"{where}.{key}")
        for key in ("x", "y", "x0"):
            if key in run:
                _require(isinstance(run[key], list) and len(run[key]) == dim,
                         f"expected a point of dimension {dim}", f"{where}.{key}")
        if run["type"] == "cesaro":
            _require(run.get("kind", "plain") in CESARO_KINDS, "unknown Cesaro kind", f"{where}.kind")
        if run["type"] in ("geometric_bound",) or any(
                c.get("kind") in ("hybrid", "hybrid_ranges") and "hybrid" not in c
                for c in run.get("checks", [])):
            _require(data.get("hybrid") is not None, "this run needs a 'hybrid' section", where)
        for c_k, check in enumerate(run.get("checks", [])):
            _require(check.get("kind") in CHECK_KINDS, f"unknown check kind {check.get('kind')!r}",
                     f"{where}.checks[{c_k}].kind")
            if "i" in check:
                _require(isinstance(check["i"], int) and 0 <= check["i"] < p,
                         f"set index must be an integer in [0, {p})", f"{where}.checks[{c_k}].i")
    if data.get("hybrid") is not None:
        K = data["hybrid"].get("K", 1.0)
        if isinstance(K, list):
            _require(len(K) in (1, p), f"K needs 1 or {p} entries", "hybrid.K")

    return ScenarioConfig(
        name=data["name"], function=spec, sets=sets, map=data["map"], p=p,
        runs=data["runs"], seed=int(data.get("seed", 0)), hybrid=data.get("hybrid"),
        tolerances=tolerances, source=source, raw=data)


def load_config(path) -> ScenarioConfig:
    """Read and validate a scenario file (or the name of a shipped one)."""
    text, source = _read_source(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON parse error: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    return parse_config(data, source)


# --------------------------------------------------------------------------
# execution

@dataclass
class RunReport:
    scenario: str
    runs: list
    environment: dict
    wall_time: float
    traces: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(r["status"] == "PASSED" for r in self.runs)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "passed": self.passed, "environment": self.environment,
                "runs": self.runs, "wall_time": self.wall_time}


def _point_csv(values) -> str:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n"] + [f"component_{k}" for k in range(values.shape[1])])
    for n, row in enumerate(values):
        w.writerow([n] + [format(v, ".17g") for v in row])
    return buf.getvalue()


def _scalar_csv(values, start=0) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "value"])
    for n, v in enumerate(np.asarray(values, dtype=float), start=start):
        w.writerow([n, format(v, ".17g")])
    return buf.getvalue()


def _run_certificates(cfg, run, sys, f, hp, seed):
    n = int(run.get("n_samples", 200))
    results, ok = [], True
    for check in run["checks"]:
        kind = check["kind"]
        expect = check.get("expect", PASS)
        cs = int(check.get("n_samples", n))
        hp_c = hybrid_from_descriptor(check["hybrid"]) if "hybrid" in check else hp
        if kind == "cyclicity":
            cert = validate_cyclicity(sys, cs, seed)
        elif kind == "hybrid":
            cert = hybrid_certificate(sys, f, hp_c, cs, seed)
        elif kind == "hybrid_ranges":
            cert = hp_c.check_ranges(sys, cs, seed)
        elif kind == "composite_hybrid":
            cert = composite_hybrid_certificate(sys, f, check.get("i", 0), check["K"],
                                                check.get("lambda", 0.0), cs, seed)
        elif kind == "cyclic_contraction":
            cert = cyclic_contraction_certificate(sys, check["k"], cs, seed)
        elif kind == "quasi_nonexpansive":
            cert = quasi_nonexpansive_certificate(f, sys, check.get("i", 0), check["v"], cs,
                                                  int(check.get("m_blocks", 20)), seed)
        else:  # fixed_point_set_convexity
            cert = fixed_point_set_convexity_probe(sys, check.get("i", 0), check["fixed_points"],
                                                   int(check.get("n_pairs", 1000)), seed,
                                                   cfg.tolerances["fixed_set"])
        ok = ok and cert.verdict == expect
        results.append({"kind": kind, "expect": expect, "certificate": cert.to_dict()})
    return ok, "PASS" if ok else "FAIL", {"checks": results}, {}


def _execute(cfg: ScenarioConfig, run: dict, sys, f, hp, seed):
    """Returns (ok, outcome, result, traces)."""
    kind = run["type"]
    tol = cfg.tolerances
    name = run["name"]
    if kind == "orbit":
        tr = orbit(sys, run["x"], int(run["n"]), run.get("start_index"))
        expect = run.get("expect", PASS)
        outcome = PASS if tr.error is None else "FAIL"
        return outcome == expect, outcome, {"length": tr.length, "set_indices": tr.set_indices,
                                            "final": tr.points[-1], "error": tr.error}, \
            {name: ("points", tr.points)}
    if kind == "trajectory":
        n = int(run["n"])
        tx = orbit(sys, run["x"], n, run.get("start_index"))
        ty = orbit(sys, run["y"], n, run.get("y_start_index"))
        d = bregman_trajectory(f, tx, ty)
        return True, PASS, {"final": d[-1], "initial": d[0]}, {name: ("scalar", d)}
    if kind == "cesaro":
        ct = cesaro(sys, run["x"], run.get("kind", "plain"), int(run["N"]), run.get("i"), int(run.get("j", 0)))
        target = run.get("target")
        result = {"final": ct.values[-1]}
        if ct.kind == "comp_ij":
            # both candidate limits and their gap; equality is not asserted
            base = cesaro(sys, run["x"], "comp_i", int(run["N"]), ct.i).values[-1]
            mapped = sys.iterate(base, ct.i, ct.j, check=False)
            result.update(composite_average=base, mapped_composite_average=mapped,
                          gap=float(np.linalg.norm(ct.values[-1] - mapped)))
        ok, outcome = True, PASS
        if target is not None:
            err = float(np.linalg.norm(ct.values[-1] - np.asarray(target, float)))
            result["distance_to_target"] = err
            outcome = PASS if err <= float(run.get("target_tol", 1e-8)) else "FAIL"
            ok = outcome == run.get("expect", PASS)
        return ok, outcome, result, {name: ("points", ct.values)}
    if kind == "fixed_point":
        ftol = float(run.get("tol", tol["fixed_point"]))
        rep = find_fixed_point(sys, f, run["x0"], ftol, int(run.get("max_iter", 1000)), run.get("start_index"))
        n_trace = rep.iterations_used + 1 if rep.converged else min(rep.iterations_used, 1000)
        tr = orbit(sys, run["x0"], max(n_trace, 1), run.get("start_index"))
        expect = run.get("expect", "fixed_point")
        return rep.classification == expect, rep.classification, rep.to_dict(), {name: ("points", tr.points)}
    if kind == "proximity":
        ptol = float(run.get("tol", tol["proximity"]))
        rep = find_proximity_cycle(sys, run["x0"], ptol, int(run.get("max_iter", 1000)),
                                   run.get("start_index"), seed=seed)
        i = rep.details["start_set"]
        pts = [np.asarray(run["x0"], float)]
        for _ in range(max(rep.iterations_used + 1, 1)):
            pts.append(composite_map(sys, i, pts[-1]))
        expect = run.get("expect", "proximity_cycle")
        ok = rep.classification == expect
        if ok and rep.converged:
            ok = bool(rep.details["realizes_distance"])
        return ok, rep.classification, rep.to_dict(), {name: ("points", np.array(pts))}
    if kind == "certificates":
        return _run_certificates(cfg, run, sys, f, hp, seed)
    if kind == "moduli":
        region = make_set(run["region"]) if "region" in run else sys.sets[0]
        rows, ok = [], True
        deltas = {t: uniform_convexity_modulus(f, t, region, int(run.get("uniform_budget", 20000)), seed=seed)
                  for t in run["t"]}
        for x in run["points"]:
            for t in run["t"]:
                v = total_convexity_modulus(f, x, t, int(run.get("budget", 4000)), seed=seed)
                d = deltas[t]
                ordered = v.value >= d.value - 1e-8
                ok = ok and ordered
                rows.append({"x": x, "t": t, "total": v.value, "uniform": d.value, "ordered": ordered,
                             "status": [v.status, d.status]})
        return ok, PASS if ok else "FAIL", {"rows": rows}, {}
    if kind == "identities":
        js = run["j"] if isinstance(run["j"], list) else [run["j"]]
        table, ok = [], True
        for j in js:
            rep = averaging_identity_check(sys, run["x"], int(j), int(run["N"]), run.get("i"),
                                           tol["identity_rtol"], seed)
            ok = ok and rep.passed
            table.append({"j": j, "scale": rep.scale,
                          "identities": [{"name": r.name, "status": r.status, "max_residual": r.max_residual,
                                          "tolerance": r.tolerance, "note": r.note} for r in rep.identities]})
        return ok, PASS if ok else "FAIL", {"table": table}, {}
    if kind == "geometric_bound":
        rep = geometric_bound_check(f, sys, hp, run["x"], run["y"], int(run["n_blocks"]), run.get("i"),
                                    tol["geometric_bound"], seed=seed)
        outcome = PASS if rep.passed else "FAIL"
        return outcome == run.get("expect", PASS), outcome, \
            {"min_margin": float(rep.margins.min()), "lhs": rep.lhs, "bound": rep.bound}, \
            {name: ("scalar_from_1", rep.margins)}
    if kind == "divergence_identities":
        region = make_set(run["region"]) if "region" in run else sys.sets[0]
        X, Y = sample_pairs(region, int(run.get("n_pairs", 10000)), seed)
        s = bregman_sum_identity(f, X, Y)
        d = bregman_difference_identity(f, X, Y)
        pos = strict_positivity_probe(f, (X, Y))
        rt = tol["divergence_rtol"]
        s.rtol = d.rtol = rt
        ok = s.holds and d.holds and pos.passed
        return ok == (run.get("expect", PASS) == PASS), PASS if ok else "FAIL", \
            {"sum_max_rel_residual": s.max_relative_residual,
             "difference_max_rel_residual": d.max_relative_residual,
             "strict_positivity": pos.to_dict()}, {}
    raise ValueError(f"unknown run type {kind!r}")


def run(cfg: ScenarioConfig, out_dir=None, fmt: str = "both", seed: int | None = None) -> RunReport:
    """Execute every run request in order and, if ``out_dir`` is given,
    write ``report.json`` and one CSV per trace there."""
    if fmt not in ("json", "csv", "both"):
        raise ValueError("format must be json, csv or both")
    seed = cfg.seed if seed is None else int(seed)
    t0 = time.perf_counter()
    sys = cfg.build_system()
    f = cfg.build_function()
    hp = cfg.build_hybrid()
    results, traces = [], {}
    for req in cfg.runs:
        entry = {"name": req["name"], "type": req["type"]}
        try:
            ok, outcome, result, tr = _execute(cfg, req, sys, f, hp, int(req.get("seed", seed)))
            entry.update(status="PASSED" if ok else "FAILED", outcome=outcome, result=to_jsonable(result))
            traces.update(tr)
        except Exception as exc:  # any module error is recorded against the run
            entry.update(status="FAILED", outcome="error", error=f"{type(exc).__name__}: {exc}")
        results.append(entry)
    env = {"seed": seed, "tolerances": cfg.tolerances, "version": __version__,
           "numpy": np.__version__, "source": cfg.source}
    report = RunReport(cfg.name, results, env, time.perf_counter() - t0, traces)
    if out_dir is not None:
        write_outputs(report, out_dir, fmt)
    return report


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(report: RunReport, out_dir, fmt: str = "both") -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("json", "both"):
        path = out / "report.json"
        _atomic_write(path, json.dumps(to_jsonable(report.to_dict()), indent=2) + "\n")
        written.append(path)
    if fmt in ("csv", "both"):
        for name, (kind, values) in report.traces.items():
            path = out / f"{name}.csv"
            if kind == "points":
                text = _point_csv(values)
            else:
                text = _scalar_csv(values, start=1 if kind == "scalar_from_1" else 0)
            _atomic_write(path, text)
            written.append(path)
    return written
