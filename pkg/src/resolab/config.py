"""Experiment configuration: INI-style sections, canonical round-trip.

The canonical serialization writes every key of every section in schema
order, so parse -> serialize -> parse is the identity and the sha256 of
the canonical text identifies a run in output headers.
"""

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, field, fields
from typing import List, Optional

from .errors import ConfigError
from .freefield import SpectralRegion, SqrtBranch
from .potentials import (Potential, box, gaussian_bump, mollified_box,
                         table_potential, zero_potential)
from .resonances import SearchConfig, WindowGrid

__all__ = ["ExperimentConfig", "NumericsConfig", "parse_config",
           "config_from_file"]

ARTIFACT_VERSION = "0.1.0"


@dataclass
class NumericsConfig:
    """Branch + quadrature knobs consumed by determinant evaluations."""

    branch: SqrtBranch
    n_per_piece: int = 128
    kink_correction: bool = True


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def _parse_floats(text: str) -> List[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_complexes(text: str) -> List[complex]:
    return [complex(tok.replace(" ", "")) for tok in text.split(";")
            if tok.strip()]


_SCHEMA = {
    "potential": [
        ("kind", "box"),
        ("a", 1.0),
        ("depth", -1.0),
        ("mollify_width", 0.1),
        ("table_path", ""),
    ],
    "region": [
        ("r_min", 0.5),
        ("r_max", 30.0),
        ("theta0", 1.2),
        ("eps", 0.3),
    ],
    "numerics": [
        ("n_per_piece", 128),
        ("kink_correction", True),
    ],
    "run": [
        ("h", [1.0]),
        ("p_orders", [1, 2, 3]),
        ("seed", 1234),
        ("threads", 1),
        ("out_dir", "out"),
    ],
    "search": [
        ("edge_points", 10),
        ("phi_pad", 0.02),
        ("max_depth", 40),
    ],
    "ssf": [
        ("eps_boundary", 1e-3),
        ("lambda_lo", 0.5),
        ("lambda_hi", 3.0),
        ("lambda_count", 200),
    ],
    "distortion": [
        ("L", 10.0),
        ("n_grid", 1600),
        ("r1", 1.25),
        ("t_inf", 2.5),
        ("thetas", [0.6, 0.75]),
    ],
    "zeta": [
        ("heat_l", 40.0),
        ("heat_n", 8000),
        ("j_terms", 6),
        ("fit_lo", 2e-3),
        ("fit_hi", 1e-1),
        ("fit_count", 60),
        ("test_points", [complex(-1.0, 0.5), complex(-0.8, 0.4)]),
    ],
    "counterexample": [
        ("delta_fraction", 0.25),
        ("w_r_lo", 1.0),
        ("w_r_hi", 4.0),
        ("w_phi_lo", -math.pi + 0.01),
        ("w_phi_hi", -0.01),
        ("w_points", 40),
    ],
}

_COMPLEX_KEYS = {"test_points"}
_LIST_FLOAT_KEYS = {"h", "thetas"}
_LIST_INT_KEYS = {"p_orders"}


@dataclass
class ExperimentConfig:
    """Typed view of the INI sections with canonical serialization."""

    values: dict

    def __getitem__(self, section):
        return self.values[section]

    def get(self, section, key):
        return self.values[section][key]

    # -- construction helpers ------------------------------------------
    def potential(self) -> Potential:
        sec = self.values["potential"]
        kind = sec["kind"]
        if kind == "box":
            return box(sec["a"], sec["depth"])
        if kind == "mollified_box":
            return mollified_box(sec["a"], sec["depth"], sec["mollify_width"])
        if kind == "gaussian_bump":
            return gaussian_bump(sec["a"], sec["depth"])
        if kind == "table":
            return table_potential(sec["table_path"])
        if kind == "zero":
            return zero_potential(sec["a"])
        raise ConfigError(f"unknown potential kind {kind!r}",
                          location="potential.kind")

    def region(self) -> SpectralRegion:
        sec = self.values["region"]
        try:
            return SpectralRegion(r_min=sec["r_min"], r_max=sec["r_max"],
                                  theta0=sec["theta0"], eps=sec["eps"])
        except ValueError as exc:
            raise ConfigError(str(exc), location="region") from exc

    def numerics(self) -> NumericsConfig:
        return NumericsConfig(branch=self.region().branch,
                              n_per_piece=self.values["numerics"]["n_per_piece"],
                              kink_correction=self.values["numerics"]["kink_correction"])

    def search(self) -> SearchConfig:
        sec = self.values["search"]
        return SearchConfig(n_per_piece=self.values["numerics"]["n_per_piece"],
                            kink_correction=self.values["numerics"]["kink_correction"],
                            edge_points=sec["edge_points"],
                            phi_pad=sec["phi_pad"],
                            max_depth=sec["max_depth"])

    def blowup_window(self) -> WindowGrid:
        sec = self.values["counterexample"]
        return WindowGrid(sec["w_r_lo"], sec["w_r_hi"],
                          sec["w_phi_lo"], sec["w_phi_hi"],
                          nr=sec["w_points"], nphi=sec["w_points"])

    # -- serialization ---------------------------------------------------
    def to_text(self) -> str:
        out = io.StringIO()
        for section, keys in _SCHEMA.items():
            out.write(f"[{section}]\n")
            for key, _default in keys:
                val = self.values[section][key]
                if key in _COMPLEX_KEYS:
                    text = ";".join(str(c) for c in val)
                else:
                    text = _fmt(val)
                out.write(f"{key} = {text}\n")
            out.write("\n")
        return out.getvalue()

    def sha256(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"INI parse failure: {exc}",
                          location=getattr(exc, "lineno", None)) from exc
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", location=section)
        known = {k for k, _ in _SCHEMA[section]}
        for key in parser[section]:
            if key not in known:
                raise ConfigError(f"unknown key {key!r}",
                                  location=f"{section}.{key}")
    values = {}
    for section, keys in _SCHEMA.items():
        sec_out = {}
        for key, default in keys:
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                try:
                    sec_out[key] = _convert(key, raw, default)
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"bad value {raw!r}: {exc}",
                                      location=f"{section}.{key}") from exc
            else:
                sec_out[key] = default
        values[section] = sec_out
    cfg = ExperimentConfig(values=values)
    _validate(cfg)
    return cfg


def _convert(key, raw, default):
    if key in _COMPLEX_KEYS:
        return _parse_complexes(raw)
    if key in _LIST_FLOAT_KEYS:
        return _parse_floats(raw)
    if key in _LIST_INT_KEYS:
        return [int(tok) for tok in raw.split(",") if tok.strip()]
    if isinstance(default, bool):
        low = raw.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw.strip()


def _validate(cfg: ExperimentConfig):
    reg = cfg.values["region"]
    if not 0 < reg["theta0"] < math.pi:
        raise ConfigError("theta0 must lie in (0, pi)", location="region.theta0")
    if not 0 < reg["eps"] < 2 * math.pi - 2 * reg["theta0"]:
        raise ConfigError("eps must lie in (0, 2*pi - 2*theta0)",
                          location="region.eps")
    if not 0 < reg["r_min"] < reg["r_max"]:
        raise ConfigError("need 0 < r_min < r_max", location="region.r_min")
    run = cfg.values["run"]
    if any(h <= 0 for h in run["h"]):
        raise ConfigError("h values must be positive", location="run.h")
    if any(p < 1 for p in run["p_orders"]):
        raise ConfigError("p orders must be >= 1", location="run.p_orders")
    if cfg.values["numerics"]["n_per_piece"] < 4:
        raise ConfigError("n_per_piece must be >= 4",
                          location="numerics.n_per_piece")
    sec = cfg.values["ssf"]
    if not sec["lambda_lo"] < sec["lambda_hi"]:
        raise ConfigError("lambda_lo must be < lambda_hi", location="ssf")


def config_from_file(path: str) -> ExperimentConfig:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", location=path) from exc
    return parse_config(text)
