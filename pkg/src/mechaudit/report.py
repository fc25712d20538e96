"""Scenario execution and report emission.

``run_scenario`` wires a validated config through the privacy,
truthfulness and deterrent audits and returns a ``ReportDocument``.  The
deterministic portion of the document is a pure function of
(config, seed, tool version): wall-clock and worker-count metadata live in
a separate ``meta`` block that is excluded from the canonical JSON, so
reports are byte-identical across worker counts.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .deterrent import DeterrentScheme, audit_with_deterrent, deterrent_sufficiency
from .env import ConfigError
from .kernels import backend
from .privacy import (
    PrivacyParams,
    PrivacyReport,
    audit_bdp,
    audit_group_bdp,
    group_privacy_transform,
)
from .scenarios import build_instance
from .streams import RandomStream
from .truthfulness import TruthfulnessReport, truthfulness_bound_from_privacy


@dataclass
class ReportDocument:
    body: dict
    meta: dict = field(default_factory=dict)

    def to_json(self, include_meta: bool = False) -> str:
        doc = dict(self.body)
        if include_meta:
            doc["meta"] = self.meta
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


def _sanity_privacy(report: PrivacyReport) -> None:
    grid = report.eps_grid
    worst = report.worst_delta
    if any(not 0.0 <= d <= 1.0 for d in worst):
        raise RuntimeError("sanity: privacy delta outside [0, 1]")
    for j in range(len(grid) - 1):
        if grid[j + 1] >= grid[j] and worst[j + 1] > worst[j] + 1e-15:
            raise RuntimeError("sanity: worst-case delta increased with eps")
    for j in range(len(grid)):
        column_max = max((row.deltas[j] for row in report.rows), default=0.0)
        if abs(column_max - worst[j]) > 1e-15:
            raise RuntimeError("sanity: worst-case curve is not the scenario maximum")


def _privacy_dict(report: PrivacyReport) -> dict:
    return {
        "k": report.k,
        "group_size": report.group_size,
        "eps_grid": list(report.eps_grid),
        "worst_delta": list(report.worst_delta),
        "worst_ci_radius": list(report.worst_ci_radius),
        "upper_confidence": list(report.upper_confidence()),
        "worst_scenario": list(report.worst_scenario),
        "exhaustive": report.exhaustive,
        "method": report.method,
        "mc_samples": report.mc_samples,
        "scenarios": [
            {
                "scenario_id": row.scenario_id,
                "player": row.player,
                "adversary_count": row.adversary_count,
                "deltas": list(row.deltas),
                "ci_radius": list(row.ci_radius),
                "method": row.method,
            }
            for row in report.rows
        ],
    }


def _truth_dict(report: TruthfulnessReport, bound_min: float | None) -> dict:
    witness = None
    if report.witness is not None:
        witness = {
            "deviators": _jsonable(report.witness.scenario.deviators),
            "deviator_announcements": _jsonable(
                report.witness.scenario.deviator_announcements),
            "coalition": _jsonable(report.witness.scenario.coalition),
            "true_types": _jsonable(report.witness.scenario.true_types),
            "focal": report.witness.focal,
            "announced": _jsonable(report.witness.announced),
        }
    return {
        "k": report.k,
        "r": report.r,
        "eps": report.eps,
        "max_gain": report.max_gain,
        "gain_ci_radius": report.gain_ci_radius,
        "bound_thm1": bound_min,
        "verdict": report.verdict,
        "exhaustive": report.exhaustive,
        "method": report.method,
        "witness": witness,
    }


def run_scenario(config: ScenarioConfig) -> ReportDocument:
    """Execute every audit requested by the config; deterministic per seed."""
    started = time.perf_counter()
    data = config.data
    env, mech = build_instance(data)
    stream = RandomStream(config.seed)
    budgets = config.budgets
    workers = config.workers
    audits = config.audits
    common = dict(
        budget_states=budgets["enumeration_states"],
        mc_samples=budgets["mc_samples"],
        max_scenarios=budgets["max_scenarios"],
    )

    body: dict = {
        "config": config.echo(),
        "version": __version__,
    }

    privacy_report = None
    if "privacy" in audits:
        pa = audits["privacy"]
        privacy_report = audit_bdp(
            mech, env, pa["k"], eps_grid=pa["eps_grid"],
            stream=stream.child("privacy"), workers=workers, **common)
        _sanity_privacy(privacy_report)
        body["privacy"] = _privacy_dict(privacy_report)

        group_size = pa.get("group_size")
        if group_size and group_size >= 2:
            scaled = [group_size * e for e in pa["eps_grid"]]
            group_report = audit_group_bdp(
                mech, env, group_size, pa["k"] - group_size + 1,
                eps_grid=scaled, stream=stream.child("group-privacy"),
                workers=workers, **common)
            _sanity_privacy(group_report)
            bounds = [
                group_privacy_transform(
                    group_size, PrivacyParams(pa["k"], e, d)).delta
                for e, d in zip(pa["eps_grid"], privacy_report.worst_delta)
            ]
            comparable = privacy_report.exhaustive and group_report.exhaustive
            gdict = _privacy_dict(group_report)
            gdict["bound_from_individual"] = bounds
            gdict["holds"] = (
                all(g <= b for g, b in zip(group_report.worst_delta, bounds))
                if comparable else None)
            body["group_privacy"] = gdict

    truth_reports = []
    if "truthfulness" in audits:
        ta = audits["truthfulness"]
        eps_threshold = ta.get("eps")
        from .truthfulness import check_truthfulness

        cells_out = []
        for k_cell, r_cell in ta["cells"]:
            rep = check_truthfulness(
                mech, env, k_cell, r_cell, eps=eps_threshold,
                stream=stream.child("truthfulness", k_cell, r_cell),
                workers=workers, **common)
            if rep.max_gain < -1e-12:
                raise RuntimeError("sanity: negative deviation gain")
            bound_min = None
            if privacy_report is not None and privacy_report.k == k_cell + r_cell - 1:
                bound_min = min(
                    truthfulness_bound_from_privacy(
                        r_cell, PrivacyParams(privacy_report.k, e, d),
                        env.utility_bound)
                    for e, d in zip(privacy_report.eps_grid,
                                    privacy_report.worst_delta))
            truth_reports.append((k_cell, r_cell, rep, bound_min))
            cells_out.append(_truth_dict(rep, bound_min))
        body["truthfulness"] = cells_out

        implications = []
        for k_cell, r_cell, rep, bound_min in truth_reports:
            if bound_min is None:
                continue
            exact = (privacy_report.method == "exact" and rep.method == "exact"
                     and privacy_report.exhaustive and rep.exhaustive)
            implications.append({
                "k_privacy": privacy_report.k,
                "k_cell": k_cell,
                "r": r_cell,
                "max_gain": rep.max_gain,
                "bound_min": bound_min,
                "holds": rep.max_gain <= bound_min,
                "advisory": not exact,
            })
        if implications:
            body["privacy_implies_truthfulness"] = implications

    if "deterrent" in audits:
        da = audits["deterrent"]
        scheme = DeterrentScheme(da["verifications"], da["fine"])
        cells_out = []
        for k_cell, r_cell, rep, _bound in truth_reports or []:
            suff = deterrent_sufficiency(
                scheme.verifications, env.n, scheme.fine, r_cell, rep.max_gain)
            det = audit_with_deterrent(
                mech, env, scheme, k_cell, r_cell,
                stream=stream.child("deterrent", k_cell, r_cell), **common)
            cells_out.append({
                "k": k_cell,
                "r": r_cell,
                "measured_eps": rep.max_gain,
                "expected_fine_if_lying": suff["expected_fine_if_lying"],
                "weakly_persistent_sufficient": suff["weakly_persistent"],
                "k_tolerant_sufficient": suff["k_tolerant"],
                "max_net_gain": det.max_net_gain,
                "verdict": det.verdict,
                "exhaustive": det.exhaustive,
            })
        body["deterrent"] = {
            "verifications": scheme.verifications,
            "fine": scheme.fine,
            "cells": cells_out,
        }

    meta = {
        "wall_clock_seconds": time.perf_counter() - started,
        "workers": workers,
        "kernel_backend": backend(),
    }
    return ReportDocument(body=_jsonable(body), meta=meta)


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def emit_report(doc: ReportDocument, fmt: str, path: str,
                include_meta: bool = False) -> list[str]:
    """Write the report; returns the list of files written.

    JSON goes to ``path`` verbatim.  CSV writes ``<stem>_privacy.csv`` and
    ``<stem>_truthfulness.csv`` with the documented column sets.
    """
    written = []
    if fmt == "json":
        with open(path, "w") as fh:
            fh.write(doc.to_json(include_meta=include_meta))
        written.append(path)
        return written
    if fmt != "csv":
        raise ConfigError(f"unknown report format {fmt!r}")

    stem = path[:-4] if path.endswith(".csv") else path
    privacy = doc.body.get("privacy")
    if privacy is not None:
        fname = f"{stem}_privacy.csv"
        with open(fname, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario_id", "i", "I_size", "eps", "delta_measured",
                             "delta_ci_radius", "exhaustive_flag", "method"])
            for row in privacy["scenarios"]:
                for eps, delta, radius in zip(privacy["eps_grid"], row["deltas"],
                                              row["ci_radius"]):
                    writer.writerow([
                        row["scenario_id"], row["player"], row["adversary_count"],
                        repr(eps), repr(delta), repr(radius),
                        privacy["exhaustive"], row["method"],
                    ])
        written.append(fname)

    cells = doc.body.get("truthfulness")
    if cells is not None:
        det_cells = {}
        det = doc.body.get("deterrent")
        if det is not None:
            det_cells = {(c["k"], c["r"]): c for c in det["cells"]}
        fname = f"{stem}_truthfulness.csv"
        with open(fname, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["scenario_id", "k", "r", "gain", "gain_ci_radius", "bound_thm1",
                      "verdict", "exhaustive_flag"]
            if det_cells:
                header += ["deterrent_net_gain", "deterrent_verdict"]
            writer.writerow(header)
            for idx, cell in enumerate(cells):
                row = [idx, cell["k"], cell["r"], repr(cell["max_gain"]),
                       repr(cell["gain_ci_radius"]),
                       "" if cell["bound_thm1"] is None else repr(cell["bound_thm1"]),
                       "" if cell["verdict"] is None else cell["verdict"],
                       cell["exhaustive"]]
                if det_cells:
                    d = det_cells.get((cell["k"], cell["r"]))
                    row += ["" if d is None else repr(d["max_net_gain"]),
                            "" if d is None else d["verdict"]]
                writer.writerow(row)
        written.append(fname)
    return written
