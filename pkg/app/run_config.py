"""
Run configuration manager.

A run is described by one JSON document. Scenario presets, a config file and
command-line overrides are merged in that order; unknown keys are rejected with
their dotted path so a typo never silently falls back to a default.
"""
import copy
import hashlib
import json
import logging
import os
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

CONFIG_PATH = os.path.join(os.path.dirname(__file__), "config.json")

# ============================================================================
# DEFAULT RUN CONFIGURATION
# ============================================================================
# Keys whose default is None accept any JSON value.
DEFAULT_RUN_CONFIG: Dict[str, Any] = {
    "scenario": None,
    "mesh": {"nx": 75, "ny": 50, "h": 1.0},
    "bc": {
        "hot": {"edge": "left", "span": None, "t": 100.0},
        "cold": {"edge": "right", "t": 0.0},
    },
    "regions": {
        "center": [37.5, 25.0],
        "r_in": 15.0,
        "r_out": 20.0,
        "r_hole": 5.5,
        "design": "ring",
        "inner": "matrix",
        "target": [20, 4],
        "probes": None,
    },
    "materials": {"matrix_kappa": 0.3162, "inclusion_kappa": 0.0316},
    "objective": {
        "variant": "cloak-exterior",
        "weights": {"cloak": 1.0, "concentrator": 0.0, "rotator": 0.0},
        "cloak_region": "exterior",
        "direction": [1.0, 0.0],
    },
    "optimizer": {
        "max_iter": 500,
        "tol": 1e-4,
        "move_limit": 0.05,
        "max_halvings": 20,
        "k_min": 1e-9,
        "k_max": 1.0,
        "checkpoint_every": 50,
        "seed": 0,
        "perturbation": 0.0,
    },
    "database": {"path": "database"},
    "output": {"directory": "runs"},
}

NON_UNIFORM_SPAN = [20.0, 30.0]
# Seeded noise on the start design; breaks the top/bottom mirror symmetry of the
# rotator setups, which plain gradient steps preserve.
ROTATOR_PERTURBATION = 0.05

SCENARIOS: Dict[str, Dict[str, Any]] = {
    "cloak-uniform": {
        "description": "Cloak an insulating hole under a full-edge temperature gradient",
        "config": {"regions": {"inner": "insulator"}, "objective": {"variant": "cloak-exterior"}},
    },
    "cloak-nonuniform": {
        "description": "Cloak an insulating hole with a 10-element hot source on the left edge",
        "config": {"bc": {"hot": {"span": NON_UNIFORM_SPAN}}, "regions": {"inner": "insulator"},
                   "objective": {"variant": "cloak-exterior"}},
    },
    "cloak-everywhere": {
        "description": "Cloak the exterior and the shield ring itself under the non-uniform source",
        "config": {"bc": {"hot": {"span": NON_UNIFORM_SPAN}}, "regions": {"inner": "insulator"},
                   "objective": {"variant": "cloak-everywhere", "cloak_region": "everywhere"}},
    },
    "conc-uniform": {
        "description": "Concentrate heat into the center disk, full-edge source",
        "config": {"regions": {"design": "disk"}, "objective": {"variant": "concentrator"}},
    },
    "conc-nonuniform": {
        "description": "Concentrate heat into the center disk, non-uniform source",
        "config": {"bc": {"hot": {"span": NON_UNIFORM_SPAN}}, "regions": {"design": "disk"},
                   "objective": {"variant": "concentrator"}},
    },
    "conc-hole": {
        "description": "Concentrate heat with an insulating hole inside the ring",
        "config": {"regions": {"inner": "insulator"}, "objective": {"variant": "concentrator"}},
    },
    "rot-uniform": {
        "description": "Reverse the heat flux in the central target strip",
        "config": {"objective": {"variant": "rotator"}, "optimizer": {"perturbation": ROTATOR_PERTURBATION}},
    },
    "rot-weak-inclusion": {
        "description": "Reverse the heat flux with a 10x weaker inclusion inside the ring",
        "config": {"regions": {"inner": "inclusion"}, "objective": {"variant": "rotator"}},
    },
    "multi-cloak-conc": {
        "description": "Cloak and concentrate together around a weak inclusion",
        "config": {"regions": {"inner": "inclusion"},
                   "objective": {"variant": "weighted",
                                 "weights": {"cloak": 1.5, "concentrator": 0.5, "rotator": 0.0}}},
    },
    "multi-cloak-rot": {
        "description": "Cloak and reverse the heat flux together around a weak inclusion",
        "config": {"regions": {"inner": "inclusion"},
                   "objective": {"variant": "weighted",
                                 "weights": {"cloak": 1.5, "concentrator": 0.0, "rotator": 5.0}},
                   "optimizer": {"max_iter": 1000, "perturbation": ROTATOR_PERTURBATION}},
    },
}


class ConfigError(Exception):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def validate(config: Dict[str, Any], schema: Dict[str, Any] = None, prefix: str = "") -> None:
    """Reject unknown keys and values whose type does not match the default's."""
    schema = DEFAULT_RUN_CONFIG if schema is None else schema
    if not isinstance(config, dict):
        raise ConfigError("expected an object", prefix or "<root>")
    for key, value in config.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in schema:
            raise ConfigError("unknown key", path)
        default = schema[key]
        if default is None or value is None:
            continue
        if isinstance(default, dict):
            validate(value, default, path)
        elif _is_number(default):
            if not _is_number(value):
                raise ConfigError(f"expected a number, got {value!r}", path)
        elif isinstance(default, str):
            if not isinstance(value, str):
                raise ConfigError(f"expected a string, got {value!r}", path)
        elif isinstance(default, list):
            if not isinstance(value, list) or len(value) != len(default) or not all(_is_number(v) for v in value):
                raise ConfigError(f"expected a list of {len(default)} numbers, got {value!r}", path)


def merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def scenario_names():
    return list(SCENARIOS)


def scenario_config(name: str) -> Dict[str, Any]:
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario '{name}'; valid scenarios: {', '.join(SCENARIOS)}", "scenario")
    cfg = merge(DEFAULT_RUN_CONFIG, SCENARIOS[name]["config"])
    cfg["scenario"] = name
    return cfg


def load_run_config(path: str) -> Dict[str, Any]:
    """Load and validate a run configuration document (no defaults applied)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            config = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}", path)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno}: {e.msg}", path)
    validate(config)
    return config


def save_run_config(config: Dict[str, Any], path: str) -> None:
    tmp_path = path + ".tmp"
    with open(tmp_path, "w", encoding="utf-8") as f:
        json.dump(config, f, indent=2, ensure_ascii=False, sort_keys=True)
        f.write("\n")
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp_path, path)


def resolve_run_config(path: Optional[str] = None, scenario: Optional[str] = None,
                       overrides: Optional[Dict[str, Any]] = None,
                       output_dir: Optional[str] = None) -> Dict[str, Any]:
    """Scenario preset < config file < overrides < output directory from the environment."""
    user = load_run_config(path) if path else {}
    name = scenario or user.get("scenario")
    base = scenario_config(name) if name else copy.deepcopy(DEFAULT_RUN_CONFIG)
    config = merge(base, user)
    if name:
        config["scenario"] = name
    if overrides:
        validate(overrides)
        config = merge(config, overrides)
    if output_dir:
        config["output"]["directory"] = output_dir
    validate(config)
    return config


def config_hash(config: Dict[str, Any]) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def rescaled(config: Dict[str, Any], nx: int, ny: int) -> Dict[str, Any]:
    """Same scenario geometry mapped onto an nx x ny mesh (used for gradient checks)."""
    out = copy.deepcopy(config)
    mesh = config["mesh"]
    h = float(mesh["h"])
    regions = config["regions"]
    s = ny / mesh["ny"]
    cx, cy = regions["center"]
    new_center = [nx * h / 2.0, ny * h / 2.0]
    r_out = min(regions["r_out"] * s, 0.45 * min(nx, ny) * h)
    ratio = r_out / regions["r_out"]

    out["mesh"] = {"nx": nx, "ny": ny, "h": h}
    out["regions"]["center"] = new_center
    out["regions"]["r_out"] = r_out
    out["regions"]["r_in"] = regions["r_in"] * ratio
    out["regions"]["r_hole"] = regions["r_hole"] * ratio
    length, width = regions["target"]
    out["regions"]["target"] = [max(1, int(round(length * s))), max(1, int(round(width * s)))]
    if regions.get("probes"):
        out["regions"]["probes"] = [new_center[0] + (x - cx) * ratio for x in regions["probes"]]
    span = config["bc"]["hot"].get("span")
    if span:
        out["bc"]["hot"]["span"] = [new_center[1] + (y - cy) * s for y in span]
    return out
