"""Scenario-config parsing: JSON schema validation plus semantic checks.

``parse_config`` accepts a path, JSON text or an already-decoded dict,
validates it against the shipped schema, fills documented defaults, and
proves the instance is constructible.  Errors carry the offending field
path so misconfigurations are directly actionable.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .env import ConfigError
from .privacy import (
    DEFAULT_BUDGET_STATES,
    DEFAULT_EPS_GRID,
    DEFAULT_MAX_SCENARIOS,
    DEFAULT_MC_SAMPLES,
)

_SCHEMA = None

DEFAULT_SEED = 0
DEFAULT_WORKERS = 1


def scenario_schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        text = resources.files("mechaudit").joinpath("scenario.schema.json").read_text()
        _SCHEMA = json.loads(text)
    return _SCHEMA


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario with all defaults resolved."""

    data: dict
    seed_explicit: bool

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def workers(self) -> int:
        return self.data["workers"]

    @property
    def budgets(self) -> dict:
        return self.data["budgets"]

    @property
    def audits(self) -> dict:
        return self.data["audits"]

    def echo(self) -> dict:
        """The deterministic config echo embedded in reports.

        Worker count is execution metadata, not part of what the results
        depend on, so it is excluded to keep reports byte-identical across
        worker counts.
        """
        out = copy.deepcopy(self.data)
        out.pop("workers", None)
        return out


def _json_path(error: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in error.absolute_path]
    return ".".join(parts) if parts else "<root>"


def parse_config(source) -> ScenarioConfig:
    """Parse and validate a scenario from a path, JSON text, or dict."""
    if isinstance(source, dict):
        raw = copy.deepcopy(source)
    else:
        text = source
        if isinstance(source, (str, Path)):
            p = Path(source)
            looks_like_path = isinstance(source, Path) or (
                not str(source).lstrip().startswith("{"))
            if looks_like_path:
                try:
                    text = p.read_text()
                except OSError as exc:
                    raise ConfigError(f"cannot read config file: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc

    validator = jsonschema.Draft202012Validator(scenario_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"config field {_json_path(err)}: {err.message}")

    seed_explicit = "seed" in raw
    data = _fill_defaults(raw)
    _semantic_checks(data)
    return ScenarioConfig(data=data, seed_explicit=seed_explicit)


def _fill_defaults(raw: dict) -> dict:
    data = copy.deepcopy(raw)
    data.setdefault("name", "scenario")
    data.setdefault("seed", DEFAULT_SEED)
    data.setdefault("workers", DEFAULT_WORKERS)
    budgets = data.setdefault("budgets", {})
    budgets.setdefault("enumeration_states", DEFAULT_BUDGET_STATES)
    budgets.setdefault("mc_samples", DEFAULT_MC_SAMPLES)
    budgets.setdefault("max_scenarios", DEFAULT_MAX_SCENARIOS)
    audits = data.setdefault("audits", {})
    if "privacy" not in audits and "truthfulness" not in audits:
        audits["privacy"] = {}
        audits["truthfulness"] = {}
    if "privacy" in audits:
        audits["privacy"].setdefault("k", 1)
        audits["privacy"].setdefault("eps_grid", list(DEFAULT_EPS_GRID))
    if "truthfulness" in audits:
        k = audits.get("privacy", {}).get("k", 1)
        audits["truthfulness"].setdefault("cells", [[k, 1]])
    return data


def _semantic_checks(data: dict) -> None:
    from .scenarios import build_instance

    env_cfg = data["environment"]
    space = env_cfg["space"]
    dist = env_cfg["distribution"]
    if space["kind"] == "finite" and dist["kind"] == "categorical":
        extra = set(dist["probs"]) - set(space["labels"])
        if extra:
            raise ConfigError(
                f"config field environment.distribution.probs: labels {sorted(extra)} "
                "are not in the type space")
    try:
        env, mech = build_instance(data)
    except ConfigError as exc:
        raise ConfigError(f"config field {exc}") from exc

    privacy = data["audits"].get("privacy")
    if privacy is not None:
        if privacy["k"] > env.n - 1:
            raise ConfigError("config field audits.privacy.k: more adversaries than "
                              "other players")
        group = privacy.get("group_size")
        if group is not None and group > privacy["k"] + 1:
            raise ConfigError("config field audits.privacy.group_size: must be at "
                              "most k + 1")
    truth = data["audits"].get("truthfulness")
    if truth is not None:
        for k_cell, r_cell in truth["cells"]:
            if r_cell < 1:
                raise ConfigError("config field audits.truthfulness.cells: r must be "
                                  ">= 1")
            if k_cell + r_cell > env.n:
                raise ConfigError("config field audits.truthfulness.cells: deviators "
                                  "plus coalition exceed the player count")
    det = data["audits"].get("deterrent")
    if det is not None and det["verifications"] > env.n:
        raise ConfigError("config field audits.deterrent.verifications: cannot "
                          "verify more players than exist")
