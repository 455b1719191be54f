"""Flat ``key=value`` configuration with typed defaults."""
from pathlib import Path

from ..errors import ConfigError

COMMON = {
    "n": 5000,
    "dv": 64,
    "dh": 16,
    "zeta": 0.3,
    "rho": 0.2,
    "bias": True,
    "idx": "",
    "seed": 0,
    "seeds": [],
    "schedule": "optimal",
    "gamma": 0.01,
    "D": 1.0,
    "p": 0.75,
    "N": 10000,
    "window": 100,
    "oracle_draws": 1,
    "workers": 1,
    "record_timing": False,
}

KIND_DEFAULTS = {
    "grad_vs_N": {"n_values": [1000, 10000, 20000], "D_values": [0.5, 1.0, 2.0], "gamma_values": []},
    "grad_vs_shape": {"dv_values": [16, 32, 64], "dh_values": [4, 8]},
    "grad_vs_B": {
        "dv": 16, "dh": 8, "zeta": 0.5, "B_values": [1, 2, 4], "M": 1, "mode": "disjoint",
        "phi": 0.01, "warm_start": 200, "relaxed": True,
    },
    "speedup": {
        "dv": 512, "dh": 128, "n": 2000, "bias": False, "zeta": 0.5, "N": 2000,
        "B_values": [1, 2, 4], "schedule": "constant", "repeats": 1, "backend": "process",
    },
    "generalization_parity": {
        "n": 2000, "dv": 32, "dh": 8, "zeta": 0.8, "N": 5000, "B_values": [2, 4], "splits": 10,
        "warm_start": 200, "relaxed": True,
    },
}

KINDS = tuple(KIND_DEFAULTS)

# single runs from the command line
COMMAND_DEFAULTS = {
    "train": {"stopping": "last", "tail_window": 100, "lip_probes": 2000},
    "dda": {
        "tau": 0.5, "phi": 0.01, "B": 0, "mode": "disjoint", "meta": 1, "warm_start": 200,
        "execution": "sequential", "relaxed": False, "backend": "process",
    },
}


def _coerce(key, raw, default):
    try:
        if isinstance(default, bool):
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, list):
            if isinstance(raw, (list, tuple)):
                return list(raw)
            parts = [s.strip() for s in str(raw).split(",") if s.strip()]
            return [_number(s) for s in parts]
        if isinstance(default, int):
            return int(float(raw)) if float(raw).is_integer() else int(raw)
        if isinstance(default, float):
            return float(raw)
        return str(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def _number(s):
    f = float(s)
    return int(f) if f.is_integer() and "." not in s and "e" not in s.lower() else f


def read_config_file(path):
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def resolve(kind=None, file_values=None, overrides=None):
    """Defaults, then the config file, then explicit overrides (flags)."""
    defaults = dict(COMMON)
    if kind is not None:
        extra = KIND_DEFAULTS.get(kind, COMMAND_DEFAULTS.get(kind))
        if extra is None:
            raise ConfigError(f"unknown experiment kind {kind!r}")
        defaults.update(extra)
    cfg = dict(defaults)
    for source in (file_values or {}, overrides or {}):
        for key, raw in source.items():
            if raw is None:
                continue
            if key not in defaults:
                raise ConfigError(f"unknown config key {key!r}")
            cfg[key] = _coerce(key, raw, defaults[key])
    if not cfg["seeds"]:
        cfg["seeds"] = [cfg["seed"]]
    return cfg


def dump(cfg):
    lines = []
    for key in sorted(cfg):
        v = cfg[key]
        if isinstance(v, list):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{key}={v}")
    return "\n".join(lines) + "\n"
