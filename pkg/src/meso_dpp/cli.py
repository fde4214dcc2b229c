"""Command-line experiment runner.

    meso-dpp <command> [--config FILE] [--seed S] [--out DIR] [--threads T] [--set KEY=VALUE ...]

Every command writes three files into the output directory:
``<command>.csv`` (data, numbers with 17 significant digits),
``<command>.json`` (inputs, seed, versions, wall time) and
``<command>.txt`` (plain-text summary with pass/fail lines).
Nothing is written unless the run completes.

Exit codes: 0 success, 1 usage, 2 configuration, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import copy
import io
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, NumericalError

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4

# parameter defaults per command; the tolerances default to the acceptance values
DEFAULTS: dict[str, dict] = {
    "sample": {
        "params": {"ensemble": "gue", "N": 100, "M": 10},
        "tolerances": {},
    },
    "clt": {
        "params": {"ensemble": "gue", "N": 400, "alpha": 0.5, "x0": 0.1, "M": 4000, "test_function": "bump"},
        "tolerances": {"variance_rel": 0.15, "n_se": 4.0},
    },
    "kernel-error": {
        "params": {"family": "gue", "alphas": [0.3, 0.5, 0.8], "x0s": [0.0, 0.5], "L": 1.0, "N_list": [64, 128, 256, 512], "grid": 41},
        "tolerances": {"slope_abs": 0.2},
    },
    "variance": {
        "params": {
            "ensemble": "gue",
            "N_list": [100, 200, 400],
            "alphas": [0.3, 0.5, 0.8],
            "x0": 0.1,
            "test_functions": ["bump", "gaussian", "mollified_step", {"name": "g_t", "params": {"t": 1.0, "eta": 1.0}}, {"name": "bump", "scale": 2.0}],
        },
        "tolerances": {"bound_factor": 32.0},
    },
    "cumulants": {
        "params": {"ensemble": "gue", "N_list": [100, 200, 400], "alpha": 0.5, "x0": 0.1, "test_function": "bump"},
        "tolerances": {"identity_abs": 1e-8, "c3_factor": 0.05},
    },
    "fbm": {
        "params": {"ensemble": "gue", "N": 400, "alpha": 0.6, "x0": 0.0, "eta": 1.0, "grid": [0.5, 1.0, 2.0], "M": 4000},
        "tolerances": {"n_se": 4.0},
    },
    "mcl": {
        "params": {"n_list": [2, 3, 4, 5], "trials": 50},
        "tolerances": {"abs": 1e-12},
    },
    "pr": {
        "params": {"N_list": [50, 100, 200, 400], "which": ["phi_N", "phi_N-1"], "order": 1, "x_max": 0.85},
        "tolerances": {"slope": -2.0, "slope_abs": 0.3},
    },
}

COMMANDS = tuple(DEFAULTS)


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0

    def to_json(self) -> str:
        doc = {"command": self.command, "seed": self.seed, "params": self.params, "tolerances": self.tolerances}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict, command: str | None = None) -> "ExperimentConfig":
        doc = copy.deepcopy(doc)
        cmd = doc.pop("command", None) or command
        if command is not None and cmd != command:
            raise ConfigError(f"config is for command {cmd!r}, not {command!r}")
        if cmd not in DEFAULTS:
            raise ConfigError(f"unknown command {cmd!r}")
        seed = doc.pop("seed", 0)
        params = doc.pop("params", {})
        tol = doc.pop("tolerances", {})
        if doc:
            raise ConfigError(f"unknown top-level keys: {sorted(doc)}")
        cfg = cls(cmd, params, tol, seed)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        spec = DEFAULTS[self.command]
        for section, given in (("params", self.params), ("tolerances", self.tolerances)):
            if not isinstance(given, dict):
                raise ConfigError(f"{section} must be an object")
            ref = spec[section]
            extra = set(given) - set(ref)
            if extra:
                raise ConfigError(f"unknown {section} keys for {self.command}: {sorted(extra)}")
            for k, v in given.items():
                _check_type(f"{section}.{k}", ref[k], v)
        self.params = {**copy.deepcopy(spec["params"]), **self.params}
        self.tolerances = {**spec["tolerances"], **self.tolerances}
        _check_ranges(self)


def _check_type(name: str, ref, value) -> None:
    if isinstance(ref, bool):
        ok = isinstance(value, bool)
    elif isinstance(ref, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(ref, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(ref, str):
        ok = isinstance(value, (str, dict)) if name.endswith("test_function") else isinstance(value, str)
    elif isinstance(ref, list):
        ok = isinstance(value, list)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{name}: expected {type(ref).__name__}, got {type(value).__name__}")


def _check_ranges(cfg: ExperimentConfig) -> None:
    p = cfg.params

    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    for key in ("N", "M", "trials", "grid"):
        if key in p and not isinstance(p[key], list):
            need(isinstance(p[key], int) and p[key] >= 1, f"params.{key} must be a positive integer")
    if "M" in p and cfg.command in ("clt", "fbm"):
        need(p["M"] >= 100, "params.M must be at least 100")
    for key in ("N_list", "n_list"):
        if key in p:
            need(len(p[key]) >= 1 and all(isinstance(n, int) and n >= 1 for n in p[key]), f"params.{key} must list positive integers")
    if "ensemble" in p:
        need(p["ensemble"] in ("gue", "cue", "chebyshev"), "params.ensemble must be gue, cue or chebyshev")
    if "family" in p:
        need(p["family"] in ("gue", "chebyshev"), "params.family must be gue or chebyshev")
    if "alpha" in p:
        need(0.0 <= p["alpha"] < 1.0, "params.alpha must lie in [0, 1)")
    if "alphas" in p:
        need(all(0.0 < a < 1.0 for a in p["alphas"]), "params.alphas must lie in (0, 1)")
    if "eta" in p:
        need(p["eta"] > 0, "params.eta must be positive")
    if "n_list" in p:
        need(all(2 <= n <= 6 for n in p["n_list"]), "params.n_list entries must lie in [2, 6]")
    if "which" in p:
        need(all(w in ("phi_N", "phi_N-1") for w in p["which"]), "params.which entries must be phi_N or phi_N-1")
    if "order" in p:
        need(p["order"] in (0, 1), "params.order must be 0 or 1")
    if "x_max" in p:
        need(0.0 < p["x_max"] < 1.0, "params.x_max must lie in (0, 1)")
    for k, v in cfg.tolerances.items():
        need(isinstance(v, (int, float)) and math.isfinite(v), f"tolerances.{k} must be a finite number")
    # test-function specs are resolved eagerly so that bad names fail as config errors
    for spec in _tf_specs(p):
        try:
            _make_test_function(spec)
        except (DomainError, TypeError) as exc:
            raise ConfigError(f"bad test function {spec!r}: {exc}") from None


def _tf_specs(p: dict) -> list:
    out = []
    if "test_function" in p:
        out.append(p["test_function"])
    out.extend(p.get("test_functions", []))
    return out


def _make_test_function(spec):
    from .statistics import builtin_test_function

    if isinstance(spec, str):
        return builtin_test_function(spec)
    if not isinstance(spec, dict) or "name" not in spec or set(spec) - {"name", "params", "scale"}:
        raise DomainError("test function spec must be a name or {name, params, scale}")
    f = builtin_test_function(spec["name"], **spec.get("params", {}))
    return f.scaled(float(spec["scale"])) if spec.get("scale") else f


# ---------------------------------------------------------------------------
# Results and serialization


@dataclass
class Check:
    name: str
    value: float
    tolerance: str
    passed: bool


@dataclass
class RunResult:
    command: str
    columns: tuple[str, ...]
    rows: list[tuple]
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    s = str(v)
    return '"' + s.replace('"', '""') + '"' if ("," in s or '"' in s) else s


def _csv(columns, rows) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue().encode()


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _summary_lines(result: RunResult) -> list[str]:
    lines = [f"command: {result.command}"]
    lines += [f"note: {n}" for n in result.notes]
    for c in result.checks:
        lines.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {_fmt(c.value)} ({c.tolerance})")
    lines.append(f"overall: {'PASS' if result.passed else 'FAIL'}")
    return lines


def emit_report(report, fmt: str) -> bytes:
    """Deterministic serialization of a :class:`RunResult` or a CumulantReport."""
    from .statistics import CumulantReport

    if fmt not in ("csv", "json", "text"):
        raise DomainError("format must be csv, json or text")
    if isinstance(report, CumulantReport):
        if fmt == "csv":
            return _csv(CumulantReport.COLUMNS, [report.row()])
        if fmt == "json":
            return (json.dumps(report.to_dict(), indent=2, sort_keys=True, default=_json_default) + "\n").encode()
        return "".join(f"{k}: {_fmt(v)}\n" for k, v in zip(CumulantReport.COLUMNS, report.row())).encode()
    if isinstance(report, RunResult):
        if fmt == "csv":
            return _csv(report.columns, report.rows)
        if fmt == "json":
            doc = {
                "command": report.command,
                "columns": list(report.columns),
                "rows": [list(r) for r in report.rows],
                "checks": [c.__dict__ for c in report.checks],
                "notes": report.notes,
            }
            return (json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n").encode()
        return ("\n".join(_summary_lines(report)) + "\n").encode()
    raise DomainError(f"cannot serialize {type(report).__name__}")


# ---------------------------------------------------------------------------
# Commands


def _check(name, value, ok, tol) -> Check:
    return Check(name, float(value), tol, bool(ok))


def _run_sample(cfg: ExperimentConfig, threads: int) -> RunResult:
    from .sampling import run_streams, sample_chebyshev, sample_cue, sample_gue

    p = cfg.params
    sampler = {"gue": sample_gue, "cue": sample_cue, "chebyshev": sample_chebyshev}[p["ensemble"]]
    configs = run_streams(lambda s: sampler(p["N"], s), cfg.seed, p["M"], threads)
    rows = [(c.stream_index, k, float(v)) for c in configs for k, v in enumerate(c.points)]
    return RunResult("sample", ("stream", "index", "value"), rows, notes=[f"{len(configs)} configurations of {p['ensemble']} N={p['N']}"])


def _run_clt(cfg: ExperimentConfig, threads: int) -> RunResult:
    from .statistics import CumulantReport, clt_experiment

    p, t = cfg.params, cfg.tolerances
    f = _make_test_function(p["test_function"])
    rep = clt_experiment(p["ensemble"], f, p["x0"], p["alpha"], p["N"], p["M"], cfg.seed, threads)
    ratio = rep.k2 / rep.target_variance
    checks = [
        _check("k2/target", ratio, abs(ratio - 1) <= t["variance_rel"], f"|ratio-1| <= {t['variance_rel']:g}"),
        _check("k3/se", rep.k3 / rep.se_k3, abs(rep.k3) <= t["n_se"] * rep.se_k3, f"|k3| <= {t['n_se']:g} SE"),
        _check("k4/se", rep.k4 / rep.se_k4, abs(rep.k4) <= t["n_se"] * rep.se_k4, f"|k4| <= {t['n_se']:g} SE"),
    ]
    notes = [f"mode={rep.mode}"]
    if rep.metadata.get("global_rescaling"):
        notes.append(f"global rescaling {rep.metadata['global_rescaling']}")
    return RunResult("clt", CumulantReport.COLUMNS, [rep.row()], checks, notes)


def _run_kernel_error(cfg: ExperimentConfig, threads: int) -> RunResult:
    from .kernels import kernel_error_scan

    p, t = cfg.params, cfg.tolerances
    rows, checks = [], []
    for a in p["alphas"]:
        for x0 in p["x0s"]:
            s = kernel_error_scan(p["family"], a, x0, p["L"], p["N_list"], p["grid"])
            rows += [(p["family"], a, x0, n, e, s.slope) for n, e in zip(s.N_list, s.errors)]
            checks.append(_check(f"slope(alpha={a:g},x0={x0:g})", s.slope, abs(s.slope + a) <= t["slope_abs"], f"|slope+alpha| <= {t['slope_abs']:g}"))
    return RunResult("kernel-error", ("family", "alpha", "x0", "N", "sup_error", "slope"), rows, checks)


def _kernel(ensemble: str, N: int):
    from .kernels import chebyshev, cue, gue

    return {"gue": gue, "cue": cue, "chebyshev": chebyshev}[ensemble](N)


def _run_variance(cfg: ExperimentConfig, threads: int) -> RunResult:
    from .statistics import h_half_norm, variance_exact

    p, t = cfg.params, cfg.tolerances
    rows, checks = [], []
    for spec in p["test_functions"]:
        f = _make_test_function(spec)
        target = h_half_norm(f, "fourier" if f.fourier is not None else "double_integral")
        worst = 0.0
        for N in p["N_list"]:
            kern = _kernel(p["ensemble"], N)
            for a in p["alphas"]:
                v = variance_exact(kern, f, p["x0"], a)
                rows.append((f.name, N, a, p["x0"], v, target, v / target))
                worst = max(worst, v / target)
        checks.append(_check(f"max Var/||f||^2 [{f.name}]", worst, worst <= t["bound_factor"], f"<= {t['bound_factor']:g}"))
    return RunResult("variance", ("test_function", "N", "alpha", "x0", "variance", "h_half_sq", "ratio"), rows, checks)


def _run_cumulants(cfg: ExperimentConfig, threads: int) -> RunResult:
    from .statistics import cumulant_trace, variance_exact

    p, t = cfg.params, cfg.tolerances
    f = _make_test_function(p["test_function"])
    rows, checks = [], []
    c3s = []
    for N in p["N_list"]:
        kern = _kernel(p["ensemble"], N)
        c1 = cumulant_trace(kern, f, p["x0"], p["alpha"], 1)
        c2 = cumulant_trace(kern, f, p["x0"], p["alpha"], 2)
        c3 = cumulant_trace(kern, f, p["x0"], p["alpha"], 3)
        var = variance_exact(kern, f, p["x0"], p["alpha"])
        rows.append((N, p["alpha"], p["x0"], c1, c2, c3, var))
        checks.append(_check(f"|C2-Var| N={N}", abs(c2 - var), abs(c2 - var) <= t["identity_abs"], f"<= {t['identity_abs']:g}"))
        c3s.append((abs(c3), c2))
    dec = all(b[0] < a[0] for a, b in zip(c3s, c3s[1:]))
    checks.append(_check("|C3| decreasing in N", float(dec), dec, "strictly decreasing"))
    last, c2 = c3s[-1]
    checks.append(_check("|C3|/C2^1.5 at largest N", last / c2**1.5, last < t["c3_factor"] * c2**1.5, f"< {t['c3_factor']:g}"))
    return RunResult("cumulants", ("N", "alpha", "x0", "C1", "C2", "C3", "variance"), rows, checks)


def _run_fbm(cfg: ExperimentConfig, threads: int) -> RunResult:
    from .charpoly import FbmParams, fbm_experiment

    p, t = cfg.params, cfg.tolerances
    params = FbmParams(p["eta"], p["alpha"], p["x0"], tuple(p["grid"]))
    rep = fbm_experiment(params, p["ensemble"], p["N"], p["M"], cfg.seed, threads)
    g = params.grid
    z = rep.z_scores()
    rows = []
    for i in range(len(g)):
        for j in range(len(g)):
            rows.append(("W", g[i], g[j], rep.cov_mc[i][j], rep.cov_se[i][j], rep.cov_theory[i][j], z[i][j]))
    inc = rep.increments
    for i in range(len(inc)):
        for j in range(len(inc)):
            zi = (rep.increment_cov_mc[i][j] - rep.increment_cov_theory[i][j]) / rep.increment_cov_se[i][j]
            rows.append(("increment", inc[i][1], inc[j][1], rep.increment_cov_mc[i][j], rep.increment_cov_se[i][j], rep.increment_cov_theory[i][j], zi))
    checks = [_check("max |z| covariance", float(np.max(np.abs(z))), rep.within(t["n_se"]), f"<= {t['n_se']:g} SE")]
    for i, tt in enumerate(g):
        checks.append(_check(f"Var W({tt:g}) <= 32||g_t||^2", rep.cov_mc[i][i], rep.cov_mc[i][i] <= rep.variance_bound[i], f"<= {rep.variance_bound[i]:.6g}"))
    notes = ["increment rows are indexed by the right end of each increment [t_(j-1), t_j]"]
    if rep.mean_exact is not None:
        notes.append("exact means " + ", ".join(f"{v:.10g}" for v in rep.mean_exact))
    return RunResult("fbm", ("kind", "t", "s", "cov_mc", "cov_se", "cov_theory", "z"), rows, checks, notes)


def _run_mcl(cfg: ExperimentConfig, threads: int) -> RunResult:
    from .sampling import SeedStream
    from .statistics import mcl_permutation_sum, upsilon

    p, t = cfg.params, cfg.tolerances
    rows, checks = [], []
    for n in p["n_list"]:
        rng = SeedStream(cfg.seed, n).generator()
        worst = 0.0
        for trial in range(p["trials"]):
            u = rng.standard_normal(n)
            u -= u.mean()
            u[-1] = -math.fsum(u[:-1])
            got = mcl_permutation_sum(u)
            want = abs(u[0]) if n == 2 else 0.0
            rows.append((n, trial, got, want, abs(got - want)))
            worst = max(worst, abs(got - want))
        checks.append(_check(f"permutation sum n={n}", worst, worst <= t["abs"], f"<= {t['abs']:g}"))
    u = 1.7
    sym = 0.5 * (upsilon([u, -u]) + upsilon([-u, u]))
    checks.append(_check("symmetrized Upsilon_2(u,-u) - |u|/2", abs(sym - abs(u) / 2), sym == abs(u) / 2, "exact"))
    return RunResult("mcl", ("n", "trial", "permutation_sum", "expected", "abs_error"), rows, checks)


def _run_pr(cfg: ExperimentConfig, threads: int) -> RunResult:
    from .orthopoly import pr_error_scan

    p, t = cfg.params, cfg.tolerances
    rows, checks = [], []
    for w in p["which"]:
        s = pr_error_scan(p["N_list"], w, p["order"], p["x_max"])
        rows += [(s.which, s.order, n, e, s.slope) for n, e in zip(s.N_list, s.errors)]
        ok = abs(s.slope - t["slope"]) <= t["slope_abs"]
        checks.append(_check(f"slope {s.which}", s.slope, ok, f"{t['slope']:g} +- {t['slope_abs']:g}"))
    return RunResult("pr", ("which", "order", "N", "sup_error", "slope"), rows, checks)


RUNNERS = {
    "sample": _run_sample,
    "clt": _run_clt,
    "kernel-error": _run_kernel_error,
    "variance": _run_variance,
    "cumulants": _run_cumulants,
    "fbm": _run_fbm,
    "mcl": _run_mcl,
    "pr": _run_pr,
}


def run(cfg: ExperimentConfig, out_dir: Path, threads: int) -> RunResult:
    """Run one experiment and write its three artifacts (all or nothing)."""
    t0 = time.perf_counter()
    result = RUNNERS[cfg.command](cfg, threads)
    wall = time.perf_counter() - t0
    meta = {
        "command": cfg.command,
        "config": json.loads(cfg.to_json()),
        "seed": cfg.seed,
        "threads": threads,
        "wall_time_s": wall,
        "passed": result.passed,
        "checks": [c.__dict__ for c in result.checks],
        "columns": list(result.columns),
        "versions": _versions(),
    }
    blobs = {
        f"{cfg.command}.csv": emit_report(result, "csv"),
        f"{cfg.command}.json": (json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n").encode(),
        f"{cfg.command}.txt": emit_report(result, "text"),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, data in blobs.items():
        tmp = out_dir / (name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, out_dir / name)
    return result


def _versions() -> dict:
    import numba
    import scipy

    return {
        "meso_dpp": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


# ---------------------------------------------------------------------------
# Entry point


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="meso-dpp", description="Determinantal point process experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="JSON config file (defaults are used when omitted)")
    ap.add_argument("--seed", type=int, help="root seed (overrides the config)")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--threads", type=int, help="worker threads (default: $MESO_DPP_THREADS or 1)")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override params.KEY or tolerances.KEY (JSON value)")
    return ap


def _apply_overrides(doc: dict, sets: list[str]) -> None:
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        section, _, name = key.partition(".")
        if not name:
            section, name = "params", key
        if section not in ("params", "tolerances"):
            raise ConfigError(f"--set key must start with params. or tolerances., got {key!r}")
        doc.setdefault(section, {})[name] = value


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.threads is not None and args.threads < 1:
        sys.stderr.write("meso-dpp: --threads must be positive\n")
        return EXIT_USAGE
    try:
        if args.config is not None:
            doc = json.loads(args.config.read_text()) if args.config.exists() else None
            if doc is None:
                raise FileNotFoundError(f"config file not found: {args.config}")
            if not isinstance(doc, dict):
                raise ConfigError("config must be a JSON object")
        else:
            doc = {}
        _apply_overrides(doc, args.set)
        if args.seed is not None:
            doc["seed"] = args.seed
        cfg = ExperimentConfig.from_dict(doc, args.command)
        from .sampling import default_threads

        threads = args.threads or default_threads()
    except (ConfigError, json.JSONDecodeError, DomainError) as exc:
        sys.stderr.write(f"meso-dpp: config error: {exc}\n")
        return EXIT_CONFIG
    except OSError as exc:
        sys.stderr.write(f"meso-dpp: I/O error: {exc}\n")
        return EXIT_IO
    try:
        result = run(cfg, args.out, threads)
    except NumericalError as exc:
        sys.stderr.write(f"meso-dpp: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except DomainError as exc:
        sys.stderr.write(f"meso-dpp: invalid parameters: {exc}\n")
        return EXIT_CONFIG
    except OSError as exc:
        sys.stderr.write(f"meso-dpp: I/O error: {exc}\n")
        return EXIT_IO
    sys.stdout.write("\n".join(_summary_lines(result)) + "\n")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
