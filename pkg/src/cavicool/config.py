"""Strict sectioned key=value run configuration.

Grammar (documented in README.md): a file is a sequence of
``[section]`` headers and ``key = value`` lines; blank lines and lines
starting with ``#`` are ignored.  Keys are only valid inside their
section, unknown sections or keys are errors, and every key may appear
once.  All physical values are in recoil units except ``kbt0``, which
also accepts a kappa-relative form: ``kbt0 = 15 hbar_kappa``.

The effective configuration (defaults filled in) serializes back to
the same format, and parse(serialize(parse(text))) == parse(text).
"""

from __future__ import annotations

from dataclasses import dataclass

from .ensemble import EnsembleConfig, InitialConditions
from .friction import DragConfig
from .params import UBAR_SQ_DEFAULT, SystemParams
from .scan import GridAxis, GridSpec

MODES = ("run", "scan", "friction", "hist")

_SYSTEM_CORE = ("kappa", "gamma", "g0", "delta_a", "delta_c", "eta_l")
_GRID_KEYS = ("axis1", "axis1_start", "axis1_stop", "axis1_step",
              "axis2", "axis2_start", "axis2_stop", "axis2_step")

# section -> key -> value kind
SCHEMA = {
    "run": {"mode": "str", "out": "str", "overwrite": "bool"},
    "system": {"kappa": "float", "gamma": "float", "g0": "float",
               "delta_a": "float", "delta_c": "float", "eta_l": "float",
               "omega": "float", "eta_eff": "float", "ubar_sq": "float"},
    "initial": {"kbt0": "kbt", "x_center": "float", "x_sigma": "float",
                "alpha0_re": "float", "alpha0_im": "float"},
    "ensemble": {"n_traj": "int", "t_final": "float",
                 "sample_stride": "int", "steady_window": "float",
                 "seed": "int", "dt": "float"},
    "grid": {k: ("str" if k in ("axis1", "axis2") else "float")
             for k in _GRID_KEYS},
    "friction": {"v": "float", "n_transient_periods": "int",
                 "n_average_periods": "int", "dt": "float",
                 "adiabatic": "bool", "check_linearity": "bool"},
    "hist": {"t_snapshot": "float", "n_bins": "int"},
}

_REQUIRED_ALWAYS = [("run", "mode")] + [("system", k) for k in _SYSTEM_CORE]
_REQUIRED_BY_MODE = {
    "run": [("initial", "kbt0")],
    "scan": [("initial", "kbt0")] + [("grid", k) for k in _GRID_KEYS],
    "friction": [("grid", k) for k in _GRID_KEYS],
    "hist": [("initial", "kbt0"), ("hist", "t_snapshot")],
}


class ConfigError(ValueError):
    """One or more configuration problems; str() lists them all."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class RunConfig:
    """Everything one invocation needs, defaults resolved."""

    mode: str
    params: SystemParams
    initial: InitialConditions | None
    ensemble: EnsembleConfig | None
    grid: GridSpec | None
    drag: DragConfig | None
    t_snapshot: float | None
    n_bins: int
    out_dir: str | None
    overwrite: bool


def _parse_value(kind, raw, line, sec, key, errors):
    """Convert one raw value string; returns None on error."""
    parts = raw.split()
    if kind != "kbt" and len(parts) > 1:
        errors.append(
            f"line {line}: [{sec}] {key} does not take a unit suffix "
            f"(got {raw!r})")
        return None
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            if raw not in ("true", "false"):
                raise ValueError
            return raw == "true"
        if kind == "str":
            return raw
        if kind == "kbt":
            if len(parts) == 1:
                return (float(parts[0]), None)
            if len(parts) == 2:
                if parts[1] != "hbar_kappa":
                    errors.append(
                        f"line {line}: [{sec}] {key}: unknown unit "
                        f"suffix {parts[1]!r} (only hbar_kappa)")
                    return None
                return (float(parts[0]), "hbar_kappa")
            raise ValueError
    except ValueError:
        errors.append(
            f"line {line}: [{sec}] {key}: cannot read {raw!r} as {kind}")
        return None


def _scan_text(text):
    """First pass: (section, key) -> (value, line) plus syntax errors."""
    errors = []
    seen = {}       # (sec, key) -> (parsed value, line)
    sec = None
    for ln, rawline in enumerate(text.splitlines(), 1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in SCHEMA:
                errors.append(f"line {ln}: unknown section [{name}]")
                sec = None
            else:
                sec = name
            continue
        if "=" not in line:
            errors.append(f"line {ln}: expected key = value, got {line!r}")
            continue
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if sec is None:
            errors.append(f"line {ln}: key {key!r} outside any section")
            continue
        if key not in SCHEMA[sec]:
            errors.append(f"line {ln}: unknown key {key!r} in [{sec}]")
            continue
        if (sec, key) in seen:
            first = seen[(sec, key)][1]
            errors.append(
                f"line {ln}: duplicate key [{sec}] {key} "
                f"(first given on line {first})")
            continue
        val = _parse_value(SCHEMA[sec][key], raw, ln, sec, key, errors)
        if val is not None:
            seen[(sec, key)] = (val, ln)
    return seen, errors


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises ConfigError listing every problem."""
    seen, errors = _scan_text(text)

    def get(sec, key, default=None):
        entry = seen.get((sec, key))
        return default if entry is None else entry[0]

    mode = get("run", "mode")
    if mode is not None and mode not in MODES:
        errors.append(
            f"line {seen[('run', 'mode')][1]}: mode must be one of "
            f"{'|'.join(MODES)}, got {mode!r}")
        mode = None

    required = list(_REQUIRED_ALWAYS)
    if mode is not None:
        required += _REQUIRED_BY_MODE[mode]
    for sec, key in required:
        if (sec, key) not in seen:
            errors.append(f"missing required key [{sec}] {key}")

    # exactly one pump parameterization
    has_omega = ("system", "omega") in seen
    has_eta = ("system", "eta_eff") in seen
    if has_omega and has_eta:
        errors.append(
            f"[system] omega (line {seen[('system', 'omega')][1]}) and "
            f"eta_eff (line {seen[('system', 'eta_eff')][1]}) are "
            "mutually exclusive")
    if not has_omega and not has_eta:
        errors.append("missing required key: [system] needs omega or eta_eff")

    if errors:
        raise ConfigError(errors)

    try:
        params = SystemParams(
            kappa=get("system", "kappa"), gamma=get("system", "gamma"),
            g0=get("system", "g0"), delta_a=get("system", "delta_a"),
            delta_c=get("system", "delta_c"), eta_l=get("system", "eta_l"),
            omega=get("system", "omega"), eta_eff=get("system", "eta_eff"),
            ubar_sq=get("system", "ubar_sq", UBAR_SQ_DEFAULT))
    except ValueError as e:
        errors.append(f"[system]: {e}")

    initial = None
    if ("initial", "kbt0") in seen:
        kbt_value, kbt_unit = get("initial", "kbt0")
        if kbt_unit == "hbar_kappa":
            kbt_value *= get("system", "kappa")
        try:
            defaults = InitialConditions(kbt0=0.0)
            initial = InitialConditions(
                kbt0=kbt_value,
                x_center=get("initial", "x_center", defaults.x_center),
                x_sigma=get("initial", "x_sigma", defaults.x_sigma),
                alpha0=complex(get("initial", "alpha0_re", 0.0),
                               get("initial", "alpha0_im", 0.0)))
        except ValueError as e:
            errors.append(f"[initial]: {e}")

    ensemble = None
    if mode in ("run", "scan", "hist"):
        kw = {k: seen[("ensemble", k)][0] for k in SCHEMA["ensemble"]
              if ("ensemble", k) in seen}
        try:
            ensemble = EnsembleConfig(**kw)
        except ValueError as e:
            errors.append(f"[ensemble]: {e}")

    grid = None
    if all(("grid", k) in seen for k in _GRID_KEYS):
        try:
            grid = GridSpec(
                GridAxis(get("grid", "axis1"), get("grid", "axis1_start"),
                         get("grid", "axis1_stop"), get("grid", "axis1_step")),
                GridAxis(get("grid", "axis2"), get("grid", "axis2_start"),
                         get("grid", "axis2_stop"), get("grid", "axis2_step")))
        except ValueError as e:
            errors.append(f"[grid]: {e}")

    drag = None
    if mode == "friction":
        kw = {k: seen[("friction", k)][0] for k in SCHEMA["friction"]
              if ("friction", k) in seen}
        try:
            drag = DragConfig(**kw)
        except ValueError as e:
            errors.append(f"[friction]: {e}")
        if grid is not None and (grid.axis1.name, grid.axis2.name) != \
                ("delta_a", "delta_c"):
            errors.append(
                "[grid]: friction mode needs axis1 = delta_a and "
                "axis2 = delta_c")

    if errors:
        raise ConfigError(errors)

    return RunConfig(
        mode=mode, params=params, initial=initial, ensemble=ensemble,
        grid=grid, drag=drag,
        t_snapshot=get("hist", "t_snapshot"),
        n_bins=get("hist", "n_bins", 60),
        out_dir=get("run", "out"),
        overwrite=get("run", "overwrite", False))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def config_sections(cfg: RunConfig) -> dict:
    """The effective configuration as nested plain dicts (JSON-ready)."""
    out = {"run": {"mode": cfg.mode, "overwrite": cfg.overwrite}}
    if cfg.out_dir is not None:
        out["run"]["out"] = cfg.out_dir
    p = cfg.params
    out["system"] = {"kappa": p.kappa, "gamma": p.gamma, "g0": p.g0,
                     "delta_a": p.delta_a, "delta_c": p.delta_c,
                     "eta_l": p.eta_l, "ubar_sq": p.ubar_sq}
    if p.omega is not None:
        out["system"]["omega"] = p.omega
    else:
        out["system"]["eta_eff"] = p.eta_eff
    if cfg.initial is not None:
        ic = cfg.initial
        out["initial"] = {"kbt0": ic.kbt0, "x_center": ic.x_center,
                          "x_sigma": ic.x_sigma,
                          "alpha0_re": ic.alpha0.real,
                          "alpha0_im": ic.alpha0.imag}
    if cfg.ensemble is not None:
        e = cfg.ensemble
        out["ensemble"] = {"n_traj": e.n_traj, "t_final": e.t_final,
                           "sample_stride": e.sample_stride,
                           "steady_window": e.steady_window,
                           "seed": e.seed, "dt": e.dt}
    if cfg.grid is not None:
        g = cfg.grid
        out["grid"] = {"axis1": g.axis1.name, "axis1_start": g.axis1.start,
                       "axis1_stop": g.axis1.stop,
                       "axis1_step": g.axis1.step,
                       "axis2": g.axis2.name, "axis2_start": g.axis2.start,
                       "axis2_stop": g.axis2.stop,
                       "axis2_step": g.axis2.step}
    if cfg.drag is not None:
        d = cfg.drag
        out["friction"] = {"v": d.v,
                           "n_transient_periods": d.n_transient_periods,
                           "n_average_periods": d.n_average_periods,
                           "dt": d.dt, "adiabatic": d.adiabatic,
                           "check_linearity": d.check_linearity}
    if cfg.t_snapshot is not None:
        out["hist"] = {"t_snapshot": cfg.t_snapshot, "n_bins": cfg.n_bins}
    return out


def serialize_config(cfg: RunConfig) -> str:
    """Render the effective configuration back to config-file text."""
    chunks = []
    for sec, keys in config_sections(cfg).items():
        chunks.append(f"[{sec}]")
        chunks.extend(f"{k} = {_fmt(v)}" for k, v in keys.items())
        chunks.append("")
    return "\n".join(chunks)
