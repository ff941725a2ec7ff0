"""Declarative scenario files and load-time validation.

A scenario is a YAML mapping.  Matrices are row-major nested lists, angles
are in degrees.  Schema (optional keys in brackets)::

    name: sec5_nominal
    group: SO3                      # SO3 | SE2 | SE3
    mode: dynamic_so3_backstep      # kinematic_general | kinematic_so3 | dynamic_so3_backstep
    [law: standard]                 # standard | consistent (dynamic mode)
    plant:
      initial_pose: identity        # or a pose spec, see below
      [omega0: [0, 0, 0]]           # dynamic mode
      [J_nom: [[2, 0, 0], ...]]     # dynamic mode
      [J_real: ...]                 # defaults to J_nom
    exosystem:
      harmonic: {amplitudes: [1, 2, 3], frequencies: [1, 5, 7]}
      # or explicit:  C: [[...]], S: [[...]], w0: [...]
      # or constant:  constant: [wx, wy, wz]
      initial_pose: {euler_deg: [180, 45, 45], convention: ZYX}
    measurements:
      ring_y: [[1, 0, 0], [0, 1, 0]]
      [X_r: identity]
    gains: {kp: 2, kI: 0.4, [kD: 2]}
    [delta0: [0, ...]]              # defaults to zeros
    integration: {[h: 0.001], [method: rkmk4], [retract_every: 100], [engine: auto]}
    t_end: 300
    [log_every: 100]

A pose spec is ``identity``, a full matrix (nested list), or a mapping with
``euler_deg`` + ``convention`` (or ``rotation``) and, for SE(n),
``translation``.  For SE(2) ``angle_deg`` gives the planar rotation.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .exosystem import ExoParams, constant_exo, harmonic_exo
from .integrator import GroupSlot, HybridState, Side, StepConfig, integrate
from .lie import GroupTag, LieContractError, check_group, euler_to_rotation, hat, identity
from .regulator import MeasurementSet, RegulatorGains
from .simulate import ENGINES, MODES, ClosedLoop
from .so3 import BACKSTEP_LAWS, BackstepGains, RigidBody, classify_equilibria

_TOP_KEYS = {"name", "group", "mode", "law", "plant", "exosystem", "measurements", "gains", "delta0",
             "integration", "t_end", "log_every", "description"}


class ScenarioError(ValueError):
    """Invalid scenario; ``check`` names the failed check."""

    def __init__(self, check: str, message: str):
        super().__init__(f"[{check}] {message}")
        self.check = check


@dataclass(frozen=True)
class Scenario:
    name: str
    loop: ClosedLoop
    step: StepConfig
    t_end: float
    log_every: int = 100
    engine: str = "auto"
    description: str = ""
    warnings: tuple = field(default=(), compare=False)

    @property
    def tag(self) -> GroupTag:
        return self.loop.tag

    def with_initial_pose(self, X0) -> "Scenario":
        return replace(self, loop=replace(self.loop, X0=np.asarray(X0, dtype=float)))

    def to_dict(self) -> dict:
        """Complete parameter echo; ``scenario_from_dict(s.to_dict())`` rebuilds ``s``."""
        lp = self.loop
        d = {
            "name": self.name,
            "group": lp.tag.value,
            "mode": lp.mode,
            "plant": {"initial_pose": _tolist(lp.X0)},
            "exosystem": {
                "C": _tolist(lp.exo.C),
                "S": _tolist(lp.exo.S),
                "w0": _tolist(lp.w0),
                "initial_pose": _tolist(lp.Xd0),
            },
            "measurements": {"ring_y": _tolist(lp.ms.ring_y), "X_r": _tolist(lp.ms.X_r)},
            "gains": {"kp": float(lp.gains.kp), "kI": float(lp.gains.kI)},
            "delta0": _tolist(lp.delta0),
            "integration": {"h": self.step.h, "method": self.step.method,
                            "retract_every": int(self.step.retract_every), "engine": self.engine},
            "t_end": float(self.t_end),
            "log_every": int(self.log_every),
        }
        if self.description:
            d["description"] = self.description
        if lp.dynamic:
            d["law"] = lp.law
            d["gains"]["kD"] = float(lp.gains.kD)
            d["plant"].update(omega0=_tolist(lp.Omega0), J_nom=_tolist(lp.J_nom), J_real=_tolist(lp.J_real))
        return d


def _tolist(a):
    return np.asarray(a, dtype=float).tolist()


# -- parsing helpers ------------------------------------------------------------


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ScenarioError("schema", f"missing required key '{key}' in {where}")
    return d[key]


def _array(value, check: str, shape=None) -> np.ndarray:
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(check, f"expected numbers, got {value!r}") from exc
    if shape is not None and a.shape != shape:
        raise ScenarioError(check, f"expected shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ScenarioError(check, "non-finite entries")
    return a


def _pose(tag: GroupTag, spec, check: str) -> np.ndarray:
    if spec is None or spec == "identity":
        return identity(tag)
    if isinstance(spec, dict):
        unknown = set(spec) - {"euler_deg", "convention", "rotation", "translation", "angle_deg"}
        if unknown:
            raise ScenarioError("schema", f"unknown pose keys {sorted(unknown)} in {check}")
        X = identity(tag)
        if tag is GroupTag.SE2:
            th = math.radians(float(spec.get("angle_deg", 0.0)))
            X[:2, :2] = [[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]]
        elif "euler_deg" in spec:
            conv = spec.get("convention", "ZYX")
            try:
                X[:3, :3] = euler_to_rotation(_array(spec["euler_deg"], check, (3,)), conv)
            except ValueError as exc:
                raise ScenarioError(check, f"bad Euler angles or convention {conv!r}: {exc}") from exc
        elif "rotation" in spec:
            X[:3, :3] = _array(spec["rotation"], check, (3, 3))
        if "translation" in spec:
            if not tag.homogeneous:
                raise ScenarioError(check, "translation given for a rotation group")
            X[: tag.n - 1, -1] = _array(spec["translation"], check, (tag.n - 1,))
    else:
        X = _array(spec, check, (tag.n, tag.n))
    try:
        return check_group(tag, X)
    except LieContractError as exc:
        raise ScenarioError(check, str(exc)) from exc


def _exosystem(tag: GroupTag, spec: dict) -> tuple[ExoParams, np.ndarray]:
    try:
        if "harmonic" in spec:
            h = spec["harmonic"]
            return harmonic_exo(_require(h, "amplitudes", "exosystem.harmonic"),
                                _require(h, "frequencies", "exosystem.harmonic"), tag)
        if "constant" in spec:
            return constant_exo(spec["constant"], tag)
        C = _array(_require(spec, "C", "exosystem"), "exosystem.C")
        S = _array(_require(spec, "S", "exosystem"), "exosystem.S")
        w0 = _array(_require(spec, "w0", "exosystem"), "exosystem.w0")
        exo = ExoParams(tag, C, S)
    except LieContractError as exc:
        check = "S skew" if "skewness" in str(exc) else "exosystem"
        raise ScenarioError(check, str(exc)) from exc
    if w0.shape != (exo.m,):
        raise ScenarioError("exosystem.w0", f"w0 must have length {exo.m}, got shape {w0.shape}")
    return exo, w0


def _inertia(value, check: str) -> np.ndarray:
    J = _array(value, check, (3, 3))
    try:
        return RigidBody(J).J
    except LieContractError as exc:
        raise ScenarioError("J SPD", f"{check}: {exc}") from exc


def scenario_from_dict(d: dict) -> Scenario:
    """Build and validate a scenario from its parsed mapping."""
    if not isinstance(d, dict):
        raise ScenarioError("schema", "scenario must be a mapping")
    unknown = set(d) - _TOP_KEYS
    if unknown:
        raise ScenarioError("schema", f"unknown top-level keys {sorted(unknown)}")
    try:
        tag = GroupTag.parse(_require(d, "group", "scenario"))
    except LieContractError as exc:
        raise ScenarioError("group", str(exc)) from exc
    mode = _require(d, "mode", "scenario")
    if mode not in MODES:
        raise ScenarioError("mode", f"unknown mode {mode!r}; expected one of {MODES}")
    if mode != "kinematic_general" and tag is not GroupTag.SO3:
        raise ScenarioError("mode", f"mode {mode} requires group SO3")
    dynamic = mode == "dynamic_so3_backstep"

    plant = d.get("plant") or {}
    X0 = _pose(tag, plant.get("initial_pose"), "plant.initial_pose")

    exo_spec = _require(d, "exosystem", "scenario")
    exo, w0 = _exosystem(tag, exo_spec)
    Xd0 = _pose(tag, exo_spec.get("initial_pose"), "exosystem.initial_pose")

    meas = _require(d, "measurements", "scenario")
    try:
        ms = MeasurementSet(tag, _array(_require(meas, "ring_y", "measurements"), "measurements.ring_y", None),
                            _pose(tag, meas.get("X_r"), "measurements.X_r"))
    except LieContractError as exc:
        raise ScenarioError("measurements", str(exc)) from exc

    g = _require(d, "gains", "scenario")
    try:
        if dynamic:
            gains = BackstepGains(float(_require(g, "kp", "gains")), float(_require(g, "kI", "gains")),
                                  float(_require(g, "kD", "gains")))
        else:
            gains = RegulatorGains(float(_require(g, "kp", "gains")), float(_require(g, "kI", "gains")))
    except LieContractError as exc:
        raise ScenarioError("gains", str(exc)) from exc

    delta0 = np.zeros(exo.m) if d.get("delta0") is None else _array(d["delta0"], "delta0", (exo.m,))

    law = d.get("law", "standard")
    if law not in BACKSTEP_LAWS:
        raise ScenarioError("law", f"unknown law {law!r}; expected one of {BACKSTEP_LAWS}")
    extra = {}
    if dynamic:
        J_nom = _inertia(_require(plant, "J_nom", "plant"), "plant.J_nom")
        J_real = _inertia(plant.get("J_real", J_nom), "plant.J_real")
        Omega0 = _array(plant.get("omega0", [0.0, 0.0, 0.0]), "plant.omega0", (3,))
        extra = dict(Omega0=Omega0, J_nom=J_nom, J_real=J_real, law=law)

    integ = d.get("integration") or {}
    try:
        step = StepConfig(float(integ.get("h", 1e-3)), integ.get("method", "rkmk4"),
                          int(integ.get("retract_every", 100)))
    except ValueError as exc:
        raise ScenarioError("integration", str(exc)) from exc
    engine = integ.get("engine", "auto")
    if engine not in ENGINES:
        raise ScenarioError("integration", f"unknown engine {engine!r}; expected one of {ENGINES}")
    t_end = float(_require(d, "t_end", "scenario"))
    log_every = int(d.get("log_every", 100))
    if not t_end > 0 or log_every < 1:
        raise ScenarioError("integration", "t_end must be positive and log_every >= 1")
    n = t_end / step.h
    if abs(n - round(n)) > 1e-9 * max(1.0, n):
        raise ScenarioError("integration", f"t_end={t_end} is not a multiple of h={step.h}")

    loop = ClosedLoop(mode, ms, exo, gains, X0, Xd0, w0, delta0, **extra)
    warnings = tuple(validate(loop, t_end))
    return Scenario(str(d.get("name", "unnamed")), loop, step, t_end, log_every, engine,
                    str(d.get("description", "")), warnings)


def validate(loop: ClosedLoop, t_end: float) -> list[str]:
    """Load-time checks.  Raises on hard violations, returns warnings."""
    warnings = []
    problems = loop.ms.check_local_positivity()
    if problems:
        raise ScenarioError("assumption 1", "; ".join(problems))
    if loop.tag is GroupTag.SO3:
        rep = classify_equilibria(loop.ms, loop.gains.kp)
        if not rep.assumption3:
            ev = ", ".join(f"{v:.6g}" for v in rep.eigenvalues)
            warnings.append(f"assumption 3 not satisfied: Y eigenvalues ({ev}) are not distinct; "
                            "the almost-global analysis does not apply")
    if loop.exo.kappa != loop.tag.k:
        raise ScenarioError("exosystem", f"C must have {loop.tag.k} rows")
    if loop.tag.homogeneous:
        growth = _translation_growth(loop.exo, loop.w0, loop.Xd0, min(t_end, 100.0))
        if growth is not None:
            warnings.append(growth)
    return warnings


def _translation_growth(exo: ExoParams, w0, Xd0, horizon: float) -> str | None:
    """Warn when the reference translation drifts away instead of staying bounded."""
    tag = exo.tag
    h = horizon / 2000.0
    norms = []

    def rhs(t, groups, vectors):
        return (hat(tag, exo.C @ vectors[0]),), (exo.S @ vectors[0],)

    integrate(rhs, (GroupSlot(tag, Side.LEFT),), HybridState(0.0, (np.array(Xd0, dtype=float),), (np.array(w0),)),
              2000 * h, StepConfig(h, "rkmk4"), log_every=10,
              sink=lambda s: norms.append(np.linalg.norm(s.groups[0][: tag.n - 1, -1])))
    norms = np.array(norms)
    half = len(norms) // 2
    first, second = norms[:half].max(), norms[half:].max()
    if second > 1.5 * first and second > 1.0 + 2.0 * norms[0]:
        return (f"reference translation appears unbounded (|p| grows from {first:.3g} to {second:.3g} "
                f"over {horizon:g} s); the compact reference set assumption may not hold")
    return None


# -- loading --------------------------------------------------------------------


def preset_names() -> list[str]:
    files = resources.files("lieregulator").joinpath("presets").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".yaml"))


def preset_text(name: str) -> str:
    path = resources.files("lieregulator").joinpath("presets", f"{name}.yaml")
    if not path.is_file():
        raise ScenarioError("preset", f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path.read_text()


def parse_scenario_text(text: str, source: str = "<string>") -> Scenario:
    try:
        d = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark is not None else source
        problem = getattr(exc, "problem", None) or str(exc)
        raise ScenarioError("parse", f"{where}: {problem}") from exc
    return scenario_from_dict(d)


def load_scenario(path_or_preset) -> Scenario:
    """Load a scenario file, or a bundled preset by name (see ``preset_names``)."""
    p = Path(path_or_preset)
    if p.is_file():
        return parse_scenario_text(p.read_text(), str(p))
    if p.suffix in (".yaml", ".yml") or p.parent != Path("."):
        raise ScenarioError("file", f"scenario file not found: {p}")
    return parse_scenario_text(preset_text(str(path_or_preset)), f"preset:{path_or_preset}")


def echo_roundtrip(s: Scenario) -> Scenario:
    """Rebuild a scenario from its metadata echo (used to audit completeness)."""
    return scenario_from_dict(copy.deepcopy(yaml.safe_load(yaml.safe_dump(s.to_dict()))))
