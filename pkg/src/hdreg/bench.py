"""Monte-Carlo comparison of the heuristic rule, the discrepancy principle and the oracle.

A cell is one (problem, noise law, dimension, SNR) combination. Each run in a
cell draws its noise from the substream ``mix(master_seed, cell_id, run)``,
so results do not depend on how cells are scheduled across workers.
"""

import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

import hdreg
from hdreg import noise, problems, rules
from hdreg.errors import InvalidInputError, NumericalError
from hdreg.estimator import squared_error_profile

RULES = ("hd", "dp", "opt")
DEFAULT_DIMS = (2 ** 7, 2 ** 9, 2 ** 11)
DEFAULT_SNRS = (1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3)
DEFAULT_LAWS = ("gaussian", "pareto")

CSV_HEADER = ("problem,law,D,snr,runs,e_hd,e_dp,e_opt,med_hd,med_dp,med_opt,"
              "k_hd_mean,k_dp_mean,k_opt_mean")


@dataclass(frozen=True)
class CellSpec:
    problem: str
    D: int
    snr: float
    law: str = "gaussian"
    runs: int = 100
    tau: float = 1.5
    master_seed: int = 0
    noise_basis: str = "spectral"
    # test hook: replaces the SNR-derived noise level
    delta_override: float = None

    def __post_init__(self):
        if self.runs < 1:
            raise InvalidInputError("a cell needs at least one run")
        if not self.tau > 1:
            raise InvalidInputError("tau must exceed 1")
        if self.problem not in problems.PROBLEMS:
            raise InvalidInputError(f"unknown problem {self.problem!r}")
        if self.law not in noise.LAWS:
            raise InvalidInputError(f"unknown noise law {self.law!r}")
        if self.noise_basis not in noise.BASES:
            raise InvalidInputError(f"unknown noise basis {self.noise_basis!r}")
        if not self.snr > 0:
            raise InvalidInputError("SNR must be positive")

    @property
    def cell_id(self):
        return f"{self.problem}|{self.law}|{self.D}|{self.snr!r}|{self.noise_basis}"


@dataclass(frozen=True, eq=False)
class CellResult:
    e_hd: float
    e_dp: float
    e_opt: float
    med_hd: float
    med_dp: float
    med_opt: float
    k_hd_mean: float
    k_dp_mean: float
    k_opt_mean: float
    runs_completed: int
    delta: float = float("nan")
    # per-run relative errors and levels, NaN / -1 where a rule failed
    errors: dict = field(default_factory=dict, repr=False)
    levels: dict = field(default_factory=dict, repr=False)

    def dominance_violations(self):
        """Runs where the oracle error exceeds the HD or DP error."""
        opt = self.errors["opt"]
        worst = np.fmin(self.errors["hd"], self.errors["dp"])
        return int(np.count_nonzero(opt > worst))


@dataclass(eq=False)
class BenchReport:
    cells: list
    metadata: dict


def _nanstats(values):
    ok = values[np.isfinite(values)]
    if ok.size == 0:
        return float("nan"), float("nan")
    return float(ok.mean()), float(np.median(ok))


def _select(obs, problem, spec, delta):
    sigmas = problem.sigmas
    return {
        "hd": lambda: rules.hd(obs, sigmas).k_selected,
        "dp": lambda: rules.dp(obs, sigmas, spec.tau, delta).k_selected,
        "opt": lambda: rules.oracle(obs, problem).k_selected,
    }


def run_cell(spec):
    """Mean/median relative errors of the three rules over ``spec.runs`` runs.

    A rule that raises on a run, or whose error is not finite, contributes a
    NaN for that run and is left out of that rule's statistics; a run counts
    as completed when all three rules succeed on it.
    """
    problem = problems.generate(spec.problem, spec.D)
    if spec.delta_override is not None:
        delta = float(spec.delta_override)
    else:
        delta = noise.delta_from_snr(float(np.linalg.norm(problem.y_true)), spec.D, spec.snr)
    x_norm = float(np.sqrt(np.sum(problem.x_true_spectral ** 2)))
    errors = {r: np.full(spec.runs, np.nan) for r in RULES}
    levels = {r: np.full(spec.runs, -1, dtype=int) for r in RULES}
    for run in range(spec.runs):
        ns = noise.NoiseSpec(spec.law, spec.noise_basis, noise.mix(spec.master_seed, spec.cell_id, run))
        obs = noise.observe(problem, delta, ns)
        profile = squared_error_profile(obs, problem.sigmas, problem.x_true_spectral)
        for rule, choose in _select(obs, problem, spec, delta).items():
            try:
                k = choose()
            except (InvalidInputError, NumericalError):
                continue
            err = math.sqrt(profile[k]) / x_norm
            if math.isfinite(err):
                errors[rule][run] = err
                levels[rule][run] = k
    stats = {r: _nanstats(errors[r]) for r in RULES}
    k_means = {r: float(levels[r][levels[r] >= 0].mean()) if np.any(levels[r] >= 0) else float("nan")
               for r in RULES}
    completed = int(np.count_nonzero(np.all([np.isfinite(errors[r]) for r in RULES], axis=0)))
    return CellResult(
        e_hd=stats["hd"][0], e_dp=stats["dp"][0], e_opt=stats["opt"][0],
        med_hd=stats["hd"][1], med_dp=stats["dp"][1], med_opt=stats["opt"][1],
        k_hd_mean=k_means["hd"], k_dp_mean=k_means["dp"], k_opt_mean=k_means["opt"],
        runs_completed=completed, delta=delta, errors=errors, levels=levels,
    )


def grid_specs(problem_names, dims, snrs, laws, runs, seed, tau=1.5, noise_basis="spectral"):
    """Cell specs in the fixed report order (problem, law, D, snr)."""
    axes = (problem_names, dims, snrs, laws)
    if any(len(axis) == 0 for axis in axes):
        raise InvalidInputError("every grid axis needs at least one value")
    return [CellSpec(p, int(D), float(s), law, int(runs), float(tau), int(seed), noise_basis)
            for p in problem_names for law in laws for D in dims for s in snrs]


def _run_safe(spec):
    try:
        return run_cell(spec), None
    except (InvalidInputError, NumericalError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def run_grid(problem_names=problems.PROBLEMS, dims=DEFAULT_DIMS, snrs=DEFAULT_SNRS,
             laws=DEFAULT_LAWS, runs=100, seed=0, tau=1.5, noise_basis="spectral",
             workers=1, timestamp=None):
    """Run every cell of the Cartesian grid; failed cells are kept with an error note."""
    specs = grid_specs(problem_names, dims, snrs, laws, runs, seed, tau, noise_basis)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_safe, specs))
    else:
        outcomes = [_run_safe(s) for s in specs]
    cells = [(spec, result, err) for spec, (result, err) in zip(specs, outcomes)]
    return BenchReport(cells, build_metadata(specs, seed, noise_basis, timestamp))


def build_metadata(specs, seed, noise_basis, timestamp=None):
    used = sorted({s.problem for s in specs})
    if timestamp is None and "SOURCE_DATE_EPOCH" in os.environ:
        timestamp = int(os.environ["SOURCE_DATE_EPOCH"])
    return {
        "code_version": hdreg.__version__,
        "seed": int(seed),
        "noise_basis": noise_basis,
        "kernel_fingerprints": {p: problems.formula_fingerprint(p) for p in used},
        "kernel_formulas": {p: problems.FORMULAS[p] for p in used},
        "rng": "Philox4x64-10 keyed by splitmix64 mix of (seed, cell id, run)",
        "hd_m_scan": "all m in 2..D",
        "timestamp": timestamp,
    }


def fmt(x):
    """Six significant digits, locale independent."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".6g")


def _json_num(x):
    x = float(x)
    return float(fmt(x)) if math.isfinite(x) else None


_STAT_FIELDS = ("e_hd", "e_dp", "e_opt", "med_hd", "med_dp", "med_opt",
                "k_hd_mean", "k_dp_mean", "k_opt_mean")


def to_csv(report):
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for spec, result, _ in report.cells:
        stats = [fmt(getattr(result, f)) if result else "nan" for f in _STAT_FIELDS]
        out.write(",".join([spec.problem, spec.law, str(spec.D), fmt(spec.snr), str(spec.runs)] + stats) + "\n")
    return out.getvalue()


def to_json(report):
    cells = []
    for spec, result, err in report.cells:
        entry = {"spec": {k: v for k, v in asdict(spec).items() if k != "delta_override"}}
        entry["spec"]["snr"] = _json_num(spec.snr)
        if result is not None:
            entry["result"] = {f: _json_num(getattr(result, f)) for f in _STAT_FIELDS}
            entry["result"]["runs_completed"] = result.runs_completed
            entry["result"]["delta"] = _json_num(result.delta)
        if err is not None:
            entry["error"] = err
        cells.append(entry)
    return json.dumps({"metadata": report.metadata, "cells": cells}, indent=2, sort_keys=True) + "\n"


def to_markdown(report):
    """One table per (problem, law): rows are SNRs, column groups are dimensions."""
    groups = {}
    for spec, result, _ in report.cells:
        groups.setdefault((spec.problem, spec.law), []).append((spec, result))
    lines = []
    for (name, law), entries in groups.items():
        dims = sorted({s.D for s, _ in entries})
        snrs = sorted({s.snr for s, _ in entries})
        table = {(s.D, s.snr): r for s, r in entries}
        for title, fields in (("mean", ("e_hd", "e_dp", "e_opt")), ("median", ("med_hd", "med_dp", "med_opt"))):
            lines.append(f"### {name}, {law} noise ({title} relative error)")
            lines.append("")
            head = ["SNR"] + [f"D={D} {lab}" for D in dims for lab in ("HD", "DP", "opt")]
            lines.append("| " + " | ".join(head) + " |")
            lines.append("|" + "---|" * len(head))
            for snr in snrs:
                row = [fmt(snr)]
                for D in dims:
                    r = table.get((D, snr))
                    row += [fmt(getattr(r, f)) if r else "-" for f in fields]
                lines.append("| " + " | ".join(row) + " |")
            lines.append("")
    return "\n".join(lines)


WRITERS = {"csv": to_csv, "json": to_json, "md": to_markdown}
