"""Config-driven experiment runner.

Reads a JSON experiment config, sweeps the requested grids, writes a
canonical CSV of certified cell values plus a JSON summary with surrogates,
inequality-chain diagnostics, and convergence tables, and emits a run
manifest.  Rows are sorted canonically before writing and timing data stays
out of the CSV by default, so identical configs reproduce byte-identical
result files.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys as _sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .certified import CertifiedValue
from .errors import ConfigError, ScalePressError, SizeLimitError
from .group import FolnerSequence, GroupModel, folner_box
from .measure import dyn_ball_cover_count, ergodic_measures, measure_pressure
from .optim import SolveCaps
from .pressure import (
    CellCache,
    PressureProfile,
    ProfileRow,
    double_surrogate,
    pressure_profile,
    scale_pressure_estimate,
)
from .pseudo import psp_report
from .scale import ScaleFunction, scale_from_config
from .system import (
    FiniteGSystem,
    Potential,
    build_periodic_subshift,
    build_rotation,
    load_system,
    potential_from_config,
    random_system,
)
from . import oracle as oracle_mod

__version__ = "0.1.0"

CSV_COLUMNS = (
    "system_id",
    "quantity",
    "n",
    "patch_size",
    "eps",
    "s_kind",
    "lower",
    "upper",
    "method",
    "per_site",
    "scaled",
    "wall_ms",
)

X_QUANTITIES = ("Q", "P", "p", "q", "sep", "spa")
MEASURE_QUANTITIES = ("Nmu", "Pmu")
PO_QUANTITIES = ("POP", "POQ")
ALL_QUANTITIES = X_QUANTITIES + MEASURE_QUANTITIES + PO_QUANTITIES


@dataclass(frozen=True)
class ExperimentConfig:
    system: dict
    folner: dict
    scale: dict
    potential: dict
    n_grid: tuple[int, ...]
    eps_grid: tuple[float, ...]
    eps_pseudo_grid: tuple[float, ...]
    delta_grid: tuple[float, ...]
    quantities: tuple[str, ...]
    mode: str = "auto"
    caps: SolveCaps = field(default_factory=SolveCaps)
    size_cap: int = 4096
    seed: int = 0
    out_dir: str = "results"
    timings: bool = False

    def canonical_json(self) -> str:
        doc = {
            "system": self.system,
            "folner": self.folner,
            "scale": self.scale,
            "potential": self.potential,
            "grids": {
                "n": list(self.n_grid),
                "eps": list(self.eps_grid),
                "eps_pseudo": list(self.eps_pseudo_grid),
                "delta": list(self.delta_grid),
            },
            "quantities": list(self.quantities),
            "mode": self.mode,
            "caps": {
                "exact_points": self.caps.exact_points,
                "nodes": self.caps.nodes,
                "cell_seconds": self.caps.cell_seconds,
                "enumeration": self.caps.enumeration,
                "size": self.size_cap,
            },
            "seed": self.seed,
            "timings": self.timings,
        }
        return json.dumps(doc, sort_keys=True)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a config document, reporting every offending field at once."""
    problems = []

    def need(cond, msg):
        if not cond:
            problems.append(msg)

    system = doc.get("system")
    need(isinstance(system, dict) and ("builder" in system or "file" in system),
         "system: must give a builder or a file path")
    folner = doc.get("group", {}).get("folner", {}) if isinstance(doc.get("group"), dict) else {}
    need(folner.get("kind", "box") == "box", "group.folner.kind: only 'box' is supported")
    grids = doc.get("grids", {})
    n_grid = tuple(grids.get("n", ()))
    eps_grid = tuple(float(e) for e in grids.get("eps", ()))
    eps_pseudo = tuple(float(e) for e in grids.get("eps_pseudo", ()))
    delta_grid = tuple(float(d) for d in grids.get("delta", ()))
    need(bool(n_grid) and all(isinstance(n, int) and n >= 1 for n in n_grid),
         "grids.n: need a nonempty list of positive integers")
    need(bool(eps_grid) and all(e > 0 for e in eps_grid),
         "grids.eps: need a nonempty list of positive reals")
    quantities = tuple(doc.get("quantities", ALL_QUANTITIES))
    unknown = [q for q in quantities if q not in ALL_QUANTITIES]
    need(not unknown, f"quantities: unknown entries {unknown}")
    if any(q in MEASURE_QUANTITIES for q in quantities):
        need(bool(delta_grid), "grids.delta: required for measure quantities")
    for d in delta_grid:
        need(0.0 < d < 1.0, f"delta: value {d} outside (0,1)")
    if any(q in PO_QUANTITIES for q in quantities):
        need(bool(eps_pseudo) and all(e > 0 for e in eps_pseudo),
             "grids.eps_pseudo: required positive list for pseudo-orbit quantities")
    mode = doc.get("mode", "auto")
    need(mode in ("exact", "greedy", "auto"), f"mode: unknown mode {mode!r}")
    caps_doc = doc.get("caps", {})
    caps = SolveCaps(
        exact_points=int(caps_doc.get("exact_points", 256)),
        nodes=int(caps_doc.get("nodes", 10_000_000)),
        cell_seconds=caps_doc.get("cell_seconds", 30.0),
        enumeration=int(caps_doc.get("enumeration", 10_000_000)),
    )
    scale_doc = doc.get("scale", {"kind": "constant_one"})
    potential_doc = doc.get("potential", {"kind": "constant", "c": 0.0})
    try:
        scale_from_config(scale_doc)
    except ScalePressError as exc:
        problems.append(f"scale: {exc}")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        system=system,
        folner={"kind": "box", "max_n": int(folner.get("max_n", max(n_grid)))},
        scale=scale_doc,
        potential=potential_doc,
        n_grid=n_grid,
        eps_grid=eps_grid,
        eps_pseudo_grid=eps_pseudo,
        delta_grid=delta_grid,
        quantities=quantities,
        mode=mode,
        caps=caps,
        size_cap=int(caps_doc.get("size", 4096)),
        seed=int(doc.get("seed", 0)),
        out_dir=str(doc.get("output", {}).get("dir", "results")),
        timings=bool(doc.get("timings", False)),
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(json.load(fh))


def build_system(cfg: ExperimentConfig) -> FiniteGSystem:
    spec = cfg.system
    if "file" in spec:
        return load_system(spec["file"])
    builder = spec["builder"]
    if builder == "periodic_subshift":
        return build_periodic_subshift(
            int(spec["k"]), int(spec["p"]), float(spec.get("metric_base", 0.5)), cfg.size_cap
        )
    if builder == "rotation":
        return build_rotation(int(spec["q"]))
    if builder == "random":
        return random_system(int(spec.get("seed", cfg.seed)), int(spec["n_points"]),
                             bool(spec.get("ultrametric", False)))
    raise ConfigError([f"system.builder: unknown builder {builder!r}"])


# -- run ------------------------------------------------------------------------


@dataclass
class RunManifest:
    config_hash: str
    version: str
    system_id: str
    cells: list
    wall_ms: float
    cache_hits: int
    cache_misses: int

    def to_jsonable(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "system_id": self.system_id,
            "cells": self.cells,
            "wall_ms": self.wall_ms,
            "cache_hits": self.cache_hits,
            "cache_misses": self.cache_misses,
        }


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _row_record(system_id, s_kind, row: ProfileRow, wall_ms) -> dict:
    cv = row.value
    return {
        "system_id": system_id,
        "quantity": row.quantity,
        "n": row.n,
        "patch_size": row.patch_size,
        "eps": row.eps,
        "s_kind": s_kind,
        "lower": cv.lower,
        "upper": cv.upper,
        "method": cv.method,
        "per_site": row.per_site,
        "scaled": row.scaled,
        "wall_ms": wall_ms,
    }


def _chain_checks(sys, folner, cfg, profile, phi, s, measure_rows, po_cells, chain_slack=1e-9):
    """Inequality-chain diagnostics over every completed cell."""
    chains = {}

    def rows_map(qname):
        return {(r.n, r.eps): r for r in profile.rows if r.quantity == qname}

    have = set(profile.quantities)
    qmap = {qname: rows_map(qname) for qname in have}
    zero_potential = all(v == 0.0 for v in phi.values)

    def cell_iter(*names):
        keys = set.intersection(*(set(qmap[n]) for n in names)) if names else set()
        return sorted(keys)

    if {"Q", "P", "sep", "spa"} <= have:
        violations = []
        for key in cell_iter("Q", "P", "sep", "spa"):
            n, eps = key
            F = folner[n - 1]
            from .system import birkhoff_vector

            norm = float(max(s.scale_at(eps) * birkhoff_vector(sys, phi, F)))
            if qmap["Q"][key].value.log_value > norm + qmap["spa"][key].value.log_value + chain_slack:
                violations.append({"item": "Q<=norm*spa", "n": n, "eps": eps})
            if qmap["P"][key].value.log_value > norm + qmap["sep"][key].value.log_value + chain_slack:
                violations.append({"item": "P<=norm*sep", "n": n, "eps": eps})
        chains["weighted_vs_counts"] = {"cells": len(cell_iter("Q", "P", "sep", "spa")),
                                        "violations": violations}
    if zero_potential and {"Q", "P", "sep", "spa"} <= have:
        violations = []
        for key in cell_iter("Q", "P", "sep", "spa"):
            if abs(qmap["P"][key].value.log_value - qmap["sep"][key].value.log_value) > chain_slack:
                violations.append({"item": "P==sep at zero potential", "n": key[0], "eps": key[1]})
            if abs(qmap["Q"][key].value.log_value - qmap["spa"][key].value.log_value) > chain_slack:
                violations.append({"item": "Q==spa at zero potential", "n": key[0], "eps": key[1]})
        chains["zero_potential_counts"] = {"cells": len(cell_iter("Q", "P", "sep", "spa")),
                                           "violations": violations}
    if {"Q", "P", "p"} <= have:
        violations = []
        for key in cell_iter("Q", "P", "p"):
            a = qmap["Q"][key].value.log_value
            b = qmap["P"][key].value.log_value
            c = qmap["p"][key].value.log_value
            if not (a <= b + chain_slack and b <= c + chain_slack):
                violations.append({"item": "Q<=P<=p", "n": key[0], "eps": key[1]})
        chains["span_sep_cover_order"] = {"cells": len(cell_iter("Q", "P", "p")), "violations": violations}
    if {"p", "q"} <= have:
        violations = []
        for key in cell_iter("p", "q"):
            n, eps = key
            F = folner[n - 1]
            delta_mod = phi.modulus_at(sys, eps)
            bound = F.cardinality * delta_mod * s.scale_at(eps)
            if qmap["p"][key].value.log_value > qmap["q"][key].value.log_value + bound + chain_slack:
                violations.append({"item": "p<=exp(|F|*delta*s)*q", "n": n, "eps": eps})
        chains["modulus_bracket"] = {"cells": len(cell_iter("p", "q")), "violations": violations}
    if {"Q", "P", "p", "q"} <= have:
        surr = {qname: double_surrogate(profile, qname, s) for qname in ("Q", "P", "p", "q")}
        ordered = (
            surr["Q"] <= surr["P"] + chain_slack
            and surr["P"] <= surr["p"] + chain_slack
            and surr["p"] <= surr["q"] + chain_slack
        )
        chains["surrogate_order"] = {"surrogates": surr, "ordered": ordered,
                                     "violations": [] if ordered else [{"item": "Q<=P<=p<=q surrogates"}]}
    if measure_rows and "Q" in have:
        violations = []
        checked = 0
        for rec in measure_rows:
            if rec["quantity"] != "Pmu":
                continue
            key = (rec["n"], rec["eps"])
            if key in qmap["Q"]:
                checked += 1
                if rec["log_value"] > qmap["Q"][key].value.log_value + chain_slack:
                    violations.append({"item": "Pmu<=Q", "n": key[0], "eps": key[1]})
        chains["variational_chain"] = {"cells": checked, "violations": violations}
    if po_cells:
        violations = [
            {"item": "POP>=P", "n": c.n, "eps": c.eps, "eps_pseudo": c.eps_pseudo}
            for c in po_cells
            if not c.containment_ok
        ]
        chains["po_containment"] = {"cells": len(po_cells), "violations": violations}
    return chains


def run(cfg: ExperimentConfig, out_dir=None, jobs: int = 1) -> RunManifest:
    """Execute the configured sweep; returns the manifest after writing files."""
    t0 = time.monotonic()
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sys_obj = build_system(cfg)
    group = GroupModel(sys_obj.group.dimension)
    folner = FolnerSequence.boxes(group, max(max(cfg.n_grid), cfg.folner["max_n"]))
    s = scale_from_config(cfg.scale)
    phi = potential_from_config(sys_obj, cfg.potential)
    cache = CellCache()
    cells_status = []
    records = []

    x_quant = tuple(q for q in cfg.quantities if q in X_QUANTITIES)
    profile = None
    if x_quant:
        def one_cell(args):
            n, eps, qname = args
            from .pressure import _QUANTITY_FUNCS

            F = folner[n - 1]
            t = time.monotonic()
            cv = _QUANTITY_FUNCS[qname](sys_obj, F, eps, phi, s, cfg.mode, cfg.caps, cache)
            ms = (time.monotonic() - t) * 1000.0
            per_site = cv.log_value / F.cardinality
            return ProfileRow(qname, n, F.cardinality, eps, cv, per_site, per_site / s.scale_at(eps)), ms

        tasks = [(n, eps, qname) for n in cfg.n_grid for eps in cfg.eps_grid for qname in x_quant]
        rows = []
        timing = {}
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                for (row, ms) in pool.map(one_cell, tasks):
                    rows.append(row)
                    timing[(row.quantity, row.n, row.eps)] = ms
        else:
            for args in tasks:
                try:
                    row, ms = one_cell(args)
                except ScalePressError as exc:
                    cells_status.append({"cell": list(args), "status": f"error: {exc}"})
                    continue
                rows.append(row)
                timing[(row.quantity, row.n, row.eps)] = ms
        profile = PressureProfile(
            system_id=sys_obj.system_id,
            s_kind=s.kind,
            phi_label=phi.label,
            rows=tuple(rows),
            eps_grid=cfg.eps_grid,
            n_grid=cfg.n_grid,
        )
        for row in rows:
            ms = timing.get((row.quantity, row.n, row.eps), 0.0)
            records.append(_row_record(sys_obj.system_id, s.kind, row,
                                       int(ms) if cfg.timings else ""))
            cells_status.append({"cell": [row.quantity, row.n, row.eps], "status": "ok"})

    measure_rows = []
    per_measure_detail = {}
    if any(q in MEASURE_QUANTITIES for q in cfg.quantities) and cfg.delta_grid:
        delta0 = cfg.delta_grid[0]
        measures = ergodic_measures(sys_obj)
        for n in cfg.n_grid:
            F = folner[n - 1]
            for eps in cfg.eps_grid:
                for qname in (q for q in cfg.quantities if q in MEASURE_QUANTITIES):
                    t = time.monotonic()
                    per_mu = []
                    for mu in measures:
                        if qname == "Nmu":
                            cv = dyn_ball_cover_count(sys_obj, mu, F, eps, delta0,
                                                      mode=cfg.mode, caps=cfg.caps, cache=cache)
                        else:
                            cv = measure_pressure(sys_obj, mu, F, eps, delta0, phi, s,
                                                  mode=cfg.mode, caps=cfg.caps, cache=cache)
                        per_mu.append(cv)
                    best_idx = max(range(len(per_mu)), key=lambda i: (per_mu[i].log_value, -i))
                    cv = per_mu[best_idx]
                    ms = (time.monotonic() - t) * 1000.0
                    per_site = cv.log_value / F.cardinality
                    row = ProfileRow(qname, n, F.cardinality, eps, cv, per_site,
                                     per_site / s.scale_at(eps))
                    records.append(_row_record(sys_obj.system_id, s.kind, row,
                                               int(ms) if cfg.timings else ""))
                    measure_rows.append({"quantity": qname, "n": n, "eps": eps,
                                         "log_value": cv.log_value, "mu_index": best_idx})
                    per_measure_detail[f"{qname},n={n},eps={eps!r}"] = [
                        {"mu_index": i, "log_value": v.log_value, "method": v.method}
                        for i, v in enumerate(per_mu)
                    ]
                    cells_status.append({"cell": [qname, n, eps], "status": "ok"})

    po_rep = None
    if any(q in PO_QUANTITIES for q in cfg.quantities) and cfg.eps_pseudo_grid:
        sp_for_gap = double_surrogate(profile, "Q", s) if (profile and profile.rows_for("Q")) else None
        sub_folner = FolnerSequence.boxes(group, max(cfg.n_grid))
        po_rep = psp_report(sys_obj, sub_folner, cfg.eps_grid, cfg.eps_pseudo_grid, phi, s,
                            mode=cfg.mode, caps=cfg.caps, sp_surrogate=sp_for_gap)
        for row in po_rep.profile.rows:
            if row.n not in cfg.n_grid or row.quantity not in cfg.quantities:
                continue
            records.append(_row_record(sys_obj.system_id, s.kind, row, "" if not cfg.timings else 0))
            cells_status.append({"cell": [row.quantity, row.n, row.eps], "status": "ok"})

    records.sort(key=lambda r: (r["quantity"], r["n"], r["eps"]))
    csv_path = out / "results.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write(f"# scalepress results schema v1; config {cfg.config_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(rec[c]) for c in CSV_COLUMNS])

    summary: dict = {
        "config_hash": cfg.config_hash,
        "system_id": sys_obj.system_id,
        "s_kind": s.kind,
        "potential": phi.label,
        "quantities": list(cfg.quantities),
        "surrogates": {},
        "gaps": {},
        "chains": {},
        "convergence": {},
        "per_measure": per_measure_detail,
        "warnings": sorted({r["method"] for r in records if r["method"] != "exact"} - {"exact"}),
    }
    if profile is not None and profile.rows_for("Q"):
        est = scale_pressure_estimate(profile, s)
        summary["surrogates"]["SP"] = est.sp
        summary["surrogates"]["cross"] = est.cross
        summary["convergence"]["n_diffs"] = {
            f"{qname},eps={eps!r}": list(d) for (qname, eps), d in est.n_diffs.items()
        }
        summary["convergence"]["eps_diffs"] = {qname: list(d) for qname, d in est.eps_diffs.items()}
    if measure_rows:
        pmu_rows = [r for r in measure_rows if r["quantity"] == "Pmu"]
        if pmu_rows:
            # same aggregation as SP: trailing half in n, three smallest eps
            levels = []
            for eps in sorted(set(cfg.eps_grid))[:3]:
                per_site = [r["log_value"] / folner[r["n"] - 1].cardinality
                            for r in sorted(pmu_rows, key=lambda r: r["n"]) if r["eps"] == eps]
                if per_site:
                    levels.append(max(per_site[len(per_site) // 2 :]) / s.scale_at(eps))
            if levels:
                summary["surrogates"]["sp_measure"] = max(levels)
                if "SP" in summary["surrogates"]:
                    summary["gaps"]["sp_vs_sp_measure"] = summary["surrogates"]["SP"] - max(levels)
    if po_rep is not None:
        summary["surrogates"]["PSP"] = po_rep.psp_surrogate
        summary["gaps"]["pop_vs_poq"] = po_rep.pop_poq_gap
        if po_rep.gap is not None:
            summary["gaps"]["psp_vs_sp"] = po_rep.gap
        summary["po_monotone_in_eps_pseudo"] = po_rep.monotone_ok
        summary["per_eps_pseudo"] = [
            {"n": c.n, "eps": c.eps, "eps_pseudo": c.eps_pseudo, "windows": c.n_windows,
             "POP": c.pop_log, "POQ": c.poq_log, "x_side_P": c.x_side_log}
            for c in po_rep.cells
        ]
    if profile is not None:
        summary["chains"] = _chain_checks(sys_obj, folner, cfg, profile, phi, s,
                                          measure_rows, po_rep.cells if po_rep else ())
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=1)

    manifest = RunManifest(
        config_hash=cfg.config_hash,
        version=__version__,
        system_id=sys_obj.system_id,
        cells=cells_status,
        wall_ms=(time.monotonic() - t0) * 1000.0,
        cache_hits=cache.hits,
        cache_misses=cache.misses,
    )
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest.to_jsonable(), fh, sort_keys=True, indent=1)
    return manifest


# -- oracle ---------------------------------------------------------------------


def oracle_compare(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Recompute every requested cell by exhaustive enumeration and compare.

    Uses the independent brute-force module (no optimizer code); refuses
    instances beyond the oracle cap, naming the offending cell.
    """
    sys_obj = build_system(cfg)
    if sys_obj.n_points > oracle_mod.ORACLE_POINT_CAP:
        raise SizeLimitError(
            f"oracle cap: system has {sys_obj.n_points} points (cap {oracle_mod.ORACLE_POINT_CAP})"
        )
    group = GroupModel(sys_obj.group.dimension)
    folner = FolnerSequence.boxes(group, max(cfg.n_grid))
    s = scale_from_config(cfg.scale)
    phi = potential_from_config(sys_obj, cfg.potential)
    cache = CellCache()
    from .pressure import cover_values, sep_count, spa_count, separated_value, spanning_value
    from .pseudo import enumerate_pseudo_orbits, po_separated, po_spanning, window_patch

    discrepancies = []

    def record(qname, n, eps, got, expect):
        discrepancies.append(
            {"quantity": qname, "n": n, "eps": eps,
             "log_primary": got, "log_oracle": expect, "abs_diff": abs(got - expect)}
        )

    for n in cfg.n_grid:
        F = folner[n - 1]
        for eps in cfg.eps_grid:
            s_at = s.scale_at(eps)
            if "P" in cfg.quantities:
                got = separated_value(sys_obj, F, eps, phi, s, "exact", cfg.caps, cache)
                record("P", n, eps, got.log_value, oracle_mod.oracle_separated(sys_obj, F, eps, phi, s_at)[0])
            if "Q" in cfg.quantities:
                got = spanning_value(sys_obj, F, eps, phi, s, "exact", cfg.caps, cache)
                record("Q", n, eps, got.log_value, oracle_mod.oracle_spanning(sys_obj, F, eps, phi, s_at)[0])
            if "sep" in cfg.quantities:
                got = sep_count(sys_obj, F, eps, "exact", cfg.caps, cache)
                record("sep", n, eps, got.log_value, math.log(oracle_mod.oracle_sep_count(sys_obj, F, eps)))
            if "spa" in cfg.quantities:
                got = spa_count(sys_obj, F, eps, "exact", cfg.caps, cache)
                record("spa", n, eps, got.log_value, math.log(oracle_mod.oracle_spa_count(sys_obj, F, eps)))
            for which in ("p", "q"):
                if which in cfg.quantities:
                    got = cover_values(sys_obj, F, eps, phi, s, which, "exact", cfg.caps, cache)
                    record(which, n, eps, got.log_value,
                           oracle_mod.oracle_cover(sys_obj, F, eps, phi, s_at, which))
            if cfg.delta_grid:
                delta0 = cfg.delta_grid[0]
                for mu in ergodic_measures(sys_obj):
                    if "Nmu" in cfg.quantities:
                        got = dyn_ball_cover_count(sys_obj, mu, F, eps, delta0, "exact", cfg.caps, cache)
                        record("Nmu", n, eps, got.log_value,
                               math.log(oracle_mod.oracle_ball_cover_count(sys_obj, mu.weights, F, eps, delta0)))
                    if "Pmu" in cfg.quantities:
                        got = measure_pressure(sys_obj, mu, F, eps, delta0, phi, s, "exact", cfg.caps, cache)
                        record("Pmu", n, eps, got.log_value,
                               oracle_mod.oracle_measure_pressure(sys_obj, mu.weights, F, eps, delta0, phi, s_at))
            if any(q in PO_QUANTITIES for q in cfg.quantities) and cfg.eps_pseudo_grid:
                # reported PO rows take the inner-limit value at the smallest
                # pseudo threshold, so that is the cell the oracle verifies
                ep = min(cfg.eps_pseudo_grid)
                window = window_patch(group, F)
                windows = enumerate_pseudo_orbits(sys_obj, window, ep, cfg.caps)
                if len(windows) > oracle_mod.ORACLE_POINT_CAP:
                    raise SizeLimitError(
                        f"oracle cap: cell (n={n}, eps_pseudo={ep}) has {len(windows)} windows"
                    )
                elements = windows[0].elements
                assigns = [w.assignment for w in windows]
                if "POP" in cfg.quantities:
                    got = po_separated(sys_obj, windows, F, eps, phi, s, "exact", cfg.caps)
                    record("POP", n, eps, got.log_value,
                           oracle_mod.oracle_po_separated(sys_obj, elements, assigns, F, eps, phi, s_at))
                if "POQ" in cfg.quantities:
                    got = po_spanning(sys_obj, windows, F, eps, phi, s, "exact", cfg.caps)
                    record("POQ", n, eps, got.log_value,
                           oracle_mod.oracle_po_spanning(sys_obj, elements, assigns, F, eps, phi, s_at))

    max_diff = max((d["abs_diff"] for d in discrepancies), default=0.0)
    report = {
        "config_hash": cfg.config_hash,
        "system_id": sys_obj.system_id,
        "cells": len(discrepancies),
        "max_abs_log_discrepancy": max_diff,
        "pass": bool(max_diff <= 1e-9),
        "rows": discrepancies,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "oracle_report.json", "w") as fh:
            json.dump(report, fh, sort_keys=True, indent=1)
    return report


# -- report ----------------------------------------------------------------------


def render_report(results_dir) -> str:
    """Human-readable summary of a finished run directory."""
    d = Path(results_dir)
    csv_path = d / "results.csv"
    summary_path = d / "summary.json"
    for p in (csv_path, summary_path):
        if not p.exists():
            raise FileNotFoundError(f"missing result file: {p}")
    with open(summary_path) as fh:
        summary = json.load(fh)
    with open(csv_path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("".join(lines))))
    buf = io.StringIO()
    w = buf.write
    w(f"run {summary['config_hash']} on system {summary['system_id']}\n")
    w(f"scale={summary['s_kind']} potential={summary['potential']}\n\n")
    w("surrogates (finite-grid estimates, not limits):\n")
    for k, v in sorted(summary.get("surrogates", {}).items()):
        w(f"  {k}: {v}\n")
    for k, v in sorted(summary.get("gaps", {}).items()):
        w(f"  gap {k}: {v}\n")
    w("\ninequality chains:\n")
    for name, info in sorted(summary.get("chains", {}).items()):
        bad = info.get("violations", [])
        status = "PASS" if not bad else f"FAIL ({len(bad)} violations)"
        w(f"  {name:24s} {status}\n")
    greedy_rows = [r for r in rows if r["method"] != "exact"]
    if greedy_rows:
        w("\nnon-exact cells (bracket widths):\n")
        for r in greedy_rows:
            width = float(r["upper"]) - float(r["lower"])
            w(f"  {r['quantity']} n={r['n']} eps={r['eps']}: [{r['lower']}, {r['upper']}] width {width}\n")
    w("\nconvergence diagnostics (successive differences):\n")
    for k, v in sorted(summary.get("convergence", {}).get("eps_diffs", {}).items()):
        w(f"  eps-direction {k}: {v}\n")
    return buf.getvalue()


# -- entry point -------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="scalepress",
                                     description="pressure-like quantities on finite metric systems")
    sub = parser.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", help="execute a config sweep")
    p_run.add_argument("config")
    p_run.add_argument("--mode", choices=("exact", "greedy", "auto"))
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out")
    p_orc = sub.add_parser("oracle", help="cross-check a config against brute force")
    p_orc.add_argument("config")
    p_orc.add_argument("--out")
    p_rep = sub.add_parser("report", help="summarize a results directory")
    p_rep.add_argument("results_dir")
    args = parser.parse_args(argv)

    if args.verb == "run":
        cfg = load_config(args.config)
        if args.mode:
            cfg = ExperimentConfig(**{**cfg.__dict__, "mode": args.mode})
        if args.seed is not None:
            cfg = ExperimentConfig(**{**cfg.__dict__, "seed": args.seed})
        manifest = run(cfg, out_dir=args.out, jobs=args.jobs)
        print(f"wrote {len(manifest.cells)} cells; config {manifest.config_hash}")
        return 0
    if args.verb == "oracle":
        cfg = load_config(args.config)
        report = oracle_compare(cfg, out_dir=args.out)
        print(f"oracle cells={report['cells']} max|log diff|={report['max_abs_log_discrepancy']:.3e} "
              f"{'PASS' if report['pass'] else 'FAIL'}")
        return 0 if report["pass"] else 1
    print(render_report(args.results_dir))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
