"""Scenario files: sectioned TOML -> network config, schedule, sim options.

Sections: [network] (bus capacitance, inner design, one [[network.converter]]
table per converter), [controllers] (canonical or coefficient lists),
[mode] (centralized/decentralized plus droop filter coefficients),
[[schedule.segment]] tables, and [sim] (duration, sample period, substeps,
seed, init, uncertainty fraction).  Unknown keys are rejected with the
offending path.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .converters import boost_params, buck_params, perturb_scale
from .design import InnerDesign, OuterControllers, canonical_outer
from .errors import ConfigError
from .lti import RIPPLE_OMEGA, tf
from .netsim import (
    CENTRALIZED,
    DECENTRALIZED,
    DEFAULT_SUBSTEPS,
    DEFAULT_TS,
    ConverterUnit,
    NetworkConfig,
    Schedule,
    Segment,
    validate_schedule,
)

_NUM = (int, float)

_CONVERTER_KEYS = {"topology", "L", "Vg", "zeta1", "zeta2", "omega_tilde"}
_NETWORK_KEYS = {"bus_c", "zeta1", "zeta2", "omega_tilde", "omega0", "converter"}
_CONTROLLER_KEYS = {"source", "kv_num", "kv_den", "kr_num", "kr_den"}
_MODE_KEYS = {"kind", "droop_num", "droop_den"}
_SEGMENT_KEYS = {
    "t_start", "v_ref", "R", "i_load", "ripple_amp", "ripple_freq", "gammas", "i_refs",
}
_SIM_KEYS = {"duration", "ts", "substeps", "seed", "init", "uncertainty"}
_TOP_KEYS = {"network", "controllers", "mode", "schedule", "sim"}


@dataclass(frozen=True)
class Scenario:
    """Fully resolved scenario ready to build and run."""

    cfg: NetworkConfig
    schedule: Schedule
    duration: float
    ts: float = DEFAULT_TS
    substeps: int = DEFAULT_SUBSTEPS
    seed: int = 0
    init: str = "equilibrium"
    uncertainty: float = 0.0
    raw: Dict[str, Any] = field(default_factory=dict)
    perturbation_log: Tuple[str, ...] = ()


def _reject_unknown(table: Dict[str, Any], allowed, path: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def _need(table: Dict[str, Any], key: str, path: str):
    if key not in table:
        raise ConfigError(f"{path}.{key}: required key missing")
    return table[key]


def _number(table, key, path, default=None):
    if key not in table:
        if default is None:
            raise ConfigError(f"{path}.{key}: required key missing")
        return default
    v = table[key]
    if not isinstance(v, _NUM) or isinstance(v, bool):
        raise ConfigError(f"{path}.{key}: expected a number, got {type(v).__name__}")
    return float(v)


def _num_list(table, key, path):
    v = _need(table, key, path)
    if not isinstance(v, list) or not v or not all(
        isinstance(x, _NUM) and not isinstance(x, bool) for x in v
    ):
        raise ConfigError(f"{path}.{key}: expected a non-empty list of numbers")
    return [float(x) for x in v]


def parse_scenario_text(text: str) -> Dict[str, Any]:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"scenario parse error: {exc}") from exc


def load_scenario(path: str, overrides: Optional[Dict[str, Any]] = None) -> Scenario:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    return build_scenario(data, overrides=overrides)


def _apply_overrides(data: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Set dotted keys ('sim.ts') in a deep copy of the parsed mapping."""
    import copy

    out = copy.deepcopy(data)
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = out
        for p in parts[:-1]:
            if isinstance(node, list):
                try:
                    node = node[int(p)]
                except (ValueError, IndexError) as exc:
                    raise ConfigError(f"override {dotted}: bad index {p!r}") from exc
            elif isinstance(node, dict):
                if p not in node:
                    node[p] = {}
                node = node[p]
            else:
                raise ConfigError(f"override {dotted}: {p!r} is not a table")
        leaf = parts[-1]
        if isinstance(node, list):
            try:
                node[int(leaf)] = value
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"override {dotted}: bad index {leaf!r}") from exc
        else:
            node[leaf] = value
    return out


def _parse_converters(net: Dict[str, Any], first_vref: float) -> List[ConverterUnit]:
    shared = dict(
        zeta1=_number(net, "zeta1", "network"),
        zeta2=_number(net, "zeta2", "network"),
        omega_tilde=_number(net, "omega_tilde", "network"),
        omega0=_number(net, "omega0", "network", default=RIPPLE_OMEGA),
    )
    raw_list = _need(net, "converter", "network")
    if not isinstance(raw_list, list) or not raw_list:
        raise ConfigError("network.converter: need at least one [[network.converter]] table")
    units = []
    for k, tab in enumerate(raw_list):
        path = f"network.converter[{k}]"
        if not isinstance(tab, dict):
            raise ConfigError(f"{path}: expected a table")
        _reject_unknown(tab, _CONVERTER_KEYS, path)
        topology = tab.get("topology", "buck")
        L = _number(tab, "L", path)
        vg = _number(tab, "Vg", path)
        try:
            if topology == "buck":
                params = buck_params(L, vg)
            elif topology == "boost":
                params = boost_params(L, vg, v_ref=first_vref)
            else:
                raise ConfigError(f"{path}.topology: must be buck or boost, got {topology!r}")
            inner = InnerDesign(
                zeta1=_number(tab, "zeta1", path, default=shared["zeta1"]),
                zeta2=_number(tab, "zeta2", path, default=shared["zeta2"]),
                omega_tilde=_number(tab, "omega_tilde", path, default=shared["omega_tilde"]),
                omega0=shared["omega0"],
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        units.append(ConverterUnit(params, inner))
    return units


def _parse_controllers(tab: Dict[str, Any]) -> OuterControllers:
    if not isinstance(tab, dict):
        raise ConfigError("controllers: expected a table")
    _reject_unknown(tab, _CONTROLLER_KEYS, "controllers")
    source = tab.get("source", "canonical")
    if source == "canonical":
        extra = set(tab) - {"source"}
        if extra:
            raise ConfigError(
                f"controllers.{sorted(extra)[0]}: not allowed with source = 'canonical'"
            )
        return canonical_outer()
    if source == "coefficients":
        try:
            return OuterControllers(
                kv=tf(_num_list(tab, "kv_num", "controllers"),
                      _num_list(tab, "kv_den", "controllers")),
                kr=tf(_num_list(tab, "kr_num", "controllers"),
                      _num_list(tab, "kr_den", "controllers")),
            )
        except ValueError as exc:
            raise ConfigError(f"controllers: {exc}") from exc
    raise ConfigError(
        f"controllers.source: must be 'canonical' or 'coefficients', got {source!r}"
    )


def _parse_segments(sched_tab: Dict[str, Any]) -> List[Segment]:
    _reject_unknown(sched_tab, {"segment"}, "schedule")
    raw = _need(sched_tab, "segment", "schedule")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("schedule.segment: need at least one [[schedule.segment]] table")
    segments = []
    for i, tab in enumerate(raw):
        path = f"schedule.segment[{i}]"
        if not isinstance(tab, dict):
            raise ConfigError(f"{path}: expected a table")
        _reject_unknown(tab, _SEGMENT_KEYS, path)
        gammas = tab.get("gammas")
        i_refs = tab.get("i_refs")
        if gammas is not None:
            gammas = tuple(_num_list(tab, "gammas", path))
        if i_refs is not None:
            i_refs = tuple(_num_list(tab, "i_refs", path))
        try:
            segments.append(
                Segment(
                    t_start=_number(tab, "t_start", path),
                    v_ref=_number(tab, "v_ref", path),
                    r_load=_number(tab, "R", path, default=0.0) if "R" in tab else None,
                    i_load=_number(tab, "i_load", path, default=0.0)
                    if "i_load" in tab else None,
                    ripple_amp=_number(tab, "ripple_amp", path, default=0.0),
                    ripple_freq=_number(tab, "ripple_freq", path, default=0.0),
                    gammas=gammas,
                    i_refs=i_refs,
                )
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return segments


def build_scenario(
    data: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None
) -> Scenario:
    """Validate the parsed mapping and assemble the runnable scenario."""
    if overrides:
        data = _apply_overrides(data, overrides)
    if not isinstance(data, dict):
        raise ConfigError("scenario: expected a table at top level")
    _reject_unknown(data, _TOP_KEYS, "scenario")
    for section in ("network", "mode", "schedule", "sim"):
        if section not in data:
            raise ConfigError(f"scenario.{section}: required section missing")
        if not isinstance(data[section], dict):
            raise ConfigError(f"scenario.{section}: expected a table")

    net = data["network"]
    _reject_unknown(net, _NETWORK_KEYS, "network")
    bus_c = _number(net, "bus_c", "network")
    if bus_c <= 0:
        raise ConfigError(f"network.bus_c: must be positive, got {bus_c}")

    sim = data["sim"]
    _reject_unknown(sim, _SIM_KEYS, "sim")
    duration = _number(sim, "duration", "sim")
    ts = _number(sim, "ts", "sim", default=DEFAULT_TS)
    substeps = int(_number(sim, "substeps", "sim", default=float(DEFAULT_SUBSTEPS)))
    seed = int(_number(sim, "seed", "sim", default=0.0))
    init = sim.get("init", "equilibrium")
    if init not in ("equilibrium", "cold"):
        raise ConfigError(f"sim.init: must be 'equilibrium' or 'cold', got {init!r}")
    uncertainty = _number(sim, "uncertainty", "sim", default=0.0)
    if not 0.0 <= uncertainty < 1.0:
        raise ConfigError(f"sim.uncertainty: must be in [0, 1), got {uncertainty}")

    segments = _parse_segments(data["schedule"])
    schedule = Schedule(tuple(segments))
    first_vref = schedule.segments[0].v_ref

    units = _parse_converters(net, first_vref)

    mode_tab = data["mode"]
    _reject_unknown(mode_tab, _MODE_KEYS, "mode")
    kind = _need(mode_tab, "kind", "mode")
    if kind not in (CENTRALIZED, DECENTRALIZED):
        raise ConfigError(f"mode.kind: must be centralized or decentralized, got {kind!r}")
    droop = None
    if kind == DECENTRALIZED:
        droop = tf(
            _num_list(mode_tab, "droop_num", "mode"),
            _num_list(mode_tab, "droop_den", "mode"),
        )
    elif "droop_num" in mode_tab or "droop_den" in mode_tab:
        raise ConfigError("mode.droop_num: droop filter applies to decentralized mode only")

    outer = _parse_controllers(data.get("controllers", {"source": "canonical"}))

    # parametric uncertainty: one L draw per converter, then the bus C draw,
    # all from a single seeded stream so every run is reproducible
    perturbation_log: List[str] = []
    if uncertainty > 0.0:
        rng_u = np.random.default_rng(seed)
        perturbed = []
        for k, unit in enumerate(units):
            scale = perturb_scale(uncertainty, rng_u)
            perturbed.append(
                ConverterUnit(replace(unit.params, L=unit.params.L * scale), unit.inner)
            )
            perturbation_log.append(f"converter[{k}].L scale = {scale:.17g}")
        scale_c = perturb_scale(uncertainty, rng_u)
        perturbation_log.append(f"bus_c scale = {scale_c:.17g}")
        units = perturbed
        bus_c = bus_c * scale_c

    cfg = NetworkConfig(
        converters=tuple(units),
        bus_c=bus_c,
        outer=outer,
        mode=kind,
        droop=droop,
    )
    validate_schedule(schedule, cfg)
    return Scenario(
        cfg=cfg,
        schedule=schedule,
        duration=duration,
        ts=ts,
        substeps=substeps,
        seed=seed,
        init=init,
        uncertainty=uncertainty,
        raw=data,
        perturbation_log=tuple(perturbation_log),
    )
