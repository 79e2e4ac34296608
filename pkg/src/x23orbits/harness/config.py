"""Run configuration: JSON document validated against runconfig.schema.json."""
from dataclasses import dataclass, field, asdict
from importlib import resources
import copy
import json

import jsonschema
import numpy as np

from ..moduli import PointX23, base_point
from ..limitlaw import DICTIONARY, ExpectationSpec


class ConfigError(ValueError):
    pass


def load_schema():
    with resources.files(__package__).joinpath("runconfig.schema.json").open("r") as fh:
        return json.load(fh)


DEFAULTS = {
    "gamma": "SL3Z",
    "T_list": [8, 12, 15],
    "x0": "base",
    "functions": list(DICTIONARY),
    "seed": 20240601,
    "workers": 1,
    "out": "out",
    "K": 200.0,
    "quadrature": {"x_nodes": 48, "y_nodes": 48, "sphere_nodes": 24, "disk_nodes": 48},
    "caps": {"n": 1000, "seed": 7},
    "tolerance_pure_w": 0.05,
    "budget": {"max_matrices": 5e7, "max_bytes": 1.5e9},
    "dual": {
        "g1": np.eye(3).tolist(), "g2": np.eye(3).tolist(), "T": 30.0,
        "radii": [1.0, 1.5, 2.0], "samples": 100000,
        "hecke_p": 10007, "hecke_samples": 20000,
        "systole_bins": [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5],
    },
    "ratio": {"T_list": [8, 12, 15]},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class RunConfig:
    T_list: list
    x0: PointX23
    functions: list
    seed: int
    workers: int
    out: str
    K: float
    quadrature: dict
    caps: dict
    tolerance_pure_w: float
    budget: dict
    dual: dict
    ratio: dict
    gamma: str = "SL3Z"
    raw: dict = field(default=None, repr=False)

    @classmethod
    def from_dict(cls, d):
        try:
            jsonschema.validate(d, load_schema())
        except jsonschema.ValidationError as e:
            path = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {path}: {e.message}") from None
        full = _merge(DEFAULTS, d)
        if full["x0"] == "base":
            x0 = base_point()
        else:
            try:
                x0 = PointX23(np.array(full["x0"]["basis"]), np.array(full["x0"]["w"])).check(1e-8)
            except ValueError as e:
                raise ConfigError(f"config invalid at x0: {e}") from None
        for key in ("g1", "g2"):
            g = np.array(full["dual"][key], dtype=float)
            if abs(np.linalg.det(g) - 1.0) > 1e-8:
                raise ConfigError(f"config invalid at dual/{key}: det != 1")
        kw = {k: full[k] for k in ("T_list", "functions", "seed", "workers", "out", "K",
                                   "quadrature", "caps", "tolerance_pure_w", "budget",
                                   "dual", "ratio", "gamma")}
        kw["T_list"] = [float(t) for t in kw["T_list"]]
        return cls(x0=x0, raw=full, **kw)

    @classmethod
    def from_json(cls, s):
        try:
            d = json.loads(s)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from None
        return cls.from_dict(d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())

    def expectation_spec(self, name):
        q = self.quadrature
        return ExpectationSpec(function=name, x_nodes=q["x_nodes"], y_nodes=q["y_nodes"],
                               sphere_nodes=q["sphere_nodes"], disk_nodes=q["disk_nodes"])

    def to_dict(self):
        d = dict(self.raw)
        d["x0"] = json.loads(self.x0.to_json())
        return d
