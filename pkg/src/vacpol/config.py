"""Run configuration: schema validation, defaults, hashing and atomic output."""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import os
import re
import tempfile
from importlib import resources

import jsonschema

from .nuclear import NuclearModel
from .units import Constants

OUT_DIR_ENV = "VACPOL_OUT_DIR"

DEFAULTS = {
    "constants": {},
    "model": {"kind": "point", "Z": 1.0},
    "format": "csv",
    "threads": 1,
    "uehling": {"r_min": 1e-4, "r_max": 10.0, "n_r": 41, "k_min": 1e-3, "k_max": 1e3, "n_k": 61},
    "spectrum": {"kappas": [-1, 1], "n_points": 2000, "r_max": None, "scheme": "log",
                 "n_states": 3, "refine": True, "spinors": False},
    "shift": {"states": [[2, 0], [2, 1]], "density": "schroedinger", "muonic": False},
    "spectral_lab": {"zalpha": 0.5, "kappa": -1, "n_points": 800, "r_max": 20.0, "tol": 1e-8,
                     "hs_points": [200, 400, 800], "n_momenta": 20, "seed": 12345},
    "verify": {"only": []},
}

PRESETS = {
    "hydrogen-2s2p": {"constants": {"alpha": 1 / 137.036, "m_eff": 1.0},
                      "model": {"kind": "point", "Z": 1.0},
                      "shift": {"states": [[2, 0], [2, 1]], "muonic": False}},
    "muonic": {"constants": {"alpha": 1 / 137.036, "m_eff": None},
               "model": {"kind": "point", "Z": 1.0},
               "shift": {"states": [[2, 0], [2, 1]], "muonic": True}},
}


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = f"{source or '<config>'}:{line}: " if line else (f"{source}: " if source else "")
        super().__init__(where + message)


def schema():
    text = resources.files("vacpol").joinpath("data/config.schema.json").read_text()
    return json.loads(text)


def _locate(text, path):
    """Best line for a JSON path: follow each key's first occurrence in order."""
    pos = 0
    for part in path:
        if isinstance(part, str):
            m = re.compile(r'"%s"\s*:' % re.escape(part)).search(text, pos)
            if m is None:
                break
            pos = m.start()
        else:
            # skip to the part-th element of the array opening after pos
            start = text.find("[", pos)
            if start < 0:
                break
            depth, count, i = 0, 0, start + 1
            while i < len(text) and count < part:
                c = text[i]
                if c in "[{":
                    depth += 1
                elif c in "]}":
                    depth -= 1
                elif c == "," and depth == 0:
                    count += 1
                i += 1
            pos = i
            while pos < len(text) and text[pos] in " \t\r\n":
                pos += 1
    return text.count("\n", 0, pos) + 1


def _merge(base, update):
    out = copy.deepcopy(base)
    for key, val in update.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


@dataclasses.dataclass
class RunConfig:
    """Validated configuration with defaults filled in."""

    data: dict
    source: str = "<defaults>"

    @classmethod
    def from_text(cls, text, source="<string>", locate=True):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno, source) from None
        errors = sorted(jsonschema.Draft202012Validator(schema()).iter_errors(raw),
                        key=lambda e: list(map(str, e.absolute_path)))
        if errors:
            err = errors[0]
            path = list(err.absolute_path)
            if err.validator == "additionalProperties":
                extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
                path = path + extra[:1]
                msg = f"unknown key {extra[0]!r}" + (f" in {'/'.join(map(str, err.absolute_path))}" if err.absolute_path else "")
            else:
                msg = f"{'/'.join(map(str, path)) or '<root>'}: {err.message}"
            raise ConfigError(msg, _locate(text, path) if locate else None, source)
        return cls(_merge(DEFAULTS, raw), source)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
        return cls.from_text(text, str(path))

    @classmethod
    def default(cls):
        return cls(copy.deepcopy(DEFAULTS))

    def updated(self, overrides):
        """New config with ``overrides`` merged (None values are skipped)."""
        clean = _drop_none(overrides)
        return RunConfig(_merge(self.data, clean), self.source)

    def with_preset(self, name):
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
        preset = copy.deepcopy(PRESETS[name])
        if preset["constants"].get("m_eff", 0) is None:
            from .units import muonic_constants
            preset["constants"]["m_eff"] = muonic_constants().m_eff
        return RunConfig(_merge(self.data, preset), self.source)

    def constants(self):
        try:
            return Constants(**{k: v for k, v in self.data["constants"].items() if v is not None})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"constants: {exc}", source=self.source) from None

    def model(self):
        try:
            return NuclearModel.from_descriptor(self.data["model"], self.constants())
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"model: {exc}", source=self.source) from None

    def section(self, name):
        return self.data[name]

    def canonical(self):
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def sha256(self):
        # threads never change results, so they stay out of the hash
        data = {k: v for k, v in self.data.items() if k not in ("threads", "out")}
        text = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _drop_none(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            v = _drop_none(v)
            if v:
                out[k] = v
        elif v is not None:
            out[k] = v
    return out


def output_dir(cli_value, config):
    """--out beats the environment variable, which beats the config file."""
    path = cli_value or os.environ.get(OUT_DIR_ENV) or config.data.get("out") or "vacpol-out"
    os.makedirs(path, exist_ok=True)
    return path


def atomic_write(path, text):
    """Write via a temporary file in the same directory and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
