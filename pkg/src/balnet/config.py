"""Strict line-oriented scenario configuration.

Format: INI-style sections [model], [run], [init], [output] holding
``key = value`` lines; '#' starts a comment; keys are section-specific and
every unknown or duplicated key is rejected with its line number.  The
bundled presets test1, test2, test3 are shipped in this format.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .analysis import Tolerances
from .errors import ParseError, ValidationError
from .quadrature import DEFAULT_RULE_ORDER
from .model import (ConnectivityKernel, GainSpec, GainTable, IntrinsicDynamics,
                    NetworkModel, SpatialBasis)

MODES = ("limit", "particle", "compare")

_SECTION_KEYS = {
    "model": {"domain", "basis", "kernel_ee", "kernel_ei", "kernel_ie", "kernel_ii",
              "gain_ee", "gain_ei", "gain_ie", "gain_ii",
              "tau_e", "tau_i", "sigma_e", "sigma_i"},
    "run": {"name", "mode", "n", "dt", "T", "seed", "observable_stride",
            "snapshot_stride", "quadrature_order", "newton_tol", "newton_max_iter",
            "tol_mean_e", "tol_mean_i", "tol_var", "tol_wasserstein"},
    "init": {"K_e0", "K_i0", "v_guess"},
    "output": {"directory", "csv_precision"},
}

_REQUIRED = {
    "model": {"domain", "basis", "kernel_ee", "kernel_ei", "kernel_ie", "kernel_ii",
              "gain_ee", "gain_ei", "gain_ie", "gain_ii",
              "tau_e", "tau_i", "sigma_e", "sigma_i"},
    "run": {"name", "mode", "n", "dt", "T", "seed"},
    "init": {"K_e0", "K_i0"},
    "output": set(),
}


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str
    mode: str
    model: NetworkModel
    n: int
    dt: float
    horizon: float
    seed: int
    observable_stride: int
    snapshot_stride: int
    quadrature_order: int
    newton_tol: float
    newton_max_iter: int
    tolerances: Tolerances
    k_e0: float
    k_i0: float
    v_guess: Optional[np.ndarray]
    output_dir: str
    csv_precision: int


def _scan(text: str):
    """Raw (section, key, value, line) table with duplicate/unknown checks."""
    entries = {}
    section = None
    saw_any = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        saw_any = True
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTION_KEYS:
                raise ParseError(lineno, "unknown section [%s]" % section)
            continue
        if section is None:
            raise ParseError(lineno, "content before any section header")
        if "=" not in line:
            raise ParseError(lineno, "expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SECTION_KEYS[section]:
            raise ParseError(lineno, "unknown key '%s' in [%s]" % (key, section))
        if (section, key) in entries:
            raise ParseError(lineno, "duplicate key '%s' in [%s]" % (key, section))
        if not value:
            raise ParseError(lineno, "empty value for '%s'" % key)
        entries[section, key] = (value, lineno)
    if not saw_any:
        raise ParseError(1, "empty configuration")
    return entries


class _Reader:
    def __init__(self, entries):
        self.entries = entries

    def get(self, section, key, default=None):
        if (section, key) in self.entries:
            return self.entries[section, key][0]
        return default

    def line(self, section, key):
        return self.entries[section, key][1]

    def parse(self, section, key, caster, default=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return caster(raw)
        except (ValueError, TypeError) as err:
            raise ParseError(self.line(section, key),
                             "bad value for '%s': %s" % (key, err))


def _float_list(raw: str):
    return [float(tok) for tok in raw.split(",") if tok.strip() != ""]


def _parse_gain(raw: str) -> GainSpec:
    kind, _, params = raw.partition(":")
    kind = kind.strip().lower()
    values = _float_list(params) if params else []
    if kind == "constant" and len(values) == 1:
        return GainSpec.constant(values[0])
    if kind == "linear" and len(values) == 1:
        return GainSpec.linear(values[0])
    if kind == "tanh" and 1 <= len(values) <= 3:
        return GainSpec.tanh(*values)
    raise ValueError("expected constant:A, linear:C, or tanh:C[,gamma[,xi]]")


def parse_config(text: str) -> ScenarioConfig:
    """Parse and fully validate a scenario; raises ParseError with a line
    number on the first syntactic problem and ValidationError on semantic
    ones."""
    entries = _scan(text)
    r = _Reader(entries)

    missing = [(s, k) for s, keys in _REQUIRED.items() for k in keys
               if (s, k) not in entries]
    if missing:
        raise ValidationError("missing required keys: "
                              + ", ".join("[%s] %s" % sk for sk in missing))

    domain = r.get("model", "domain").lower()
    basis_names = tuple(tok.strip().lower() for tok in r.get("model", "basis").split(","))
    try:
        basis = SpatialBasis(domain=domain, functions=basis_names)
    except ValueError as err:
        raise ValidationError(str(err))
    m = basis.size

    kernel_diags = {}
    for pair in ("ee", "ei", "ie", "ii"):
        vals = r.parse("model", "kernel_" + pair, _float_list)
        if len(vals) != m:
            raise ValidationError("kernel_%s needs %d diagonal coefficients, got %d"
                                  % (pair, m, len(vals)))
        kernel_diags[pair] = vals
    kernel = ConnectivityKernel.diagonal(kernel_diags["ee"], kernel_diags["ei"],
                                         kernel_diags["ie"], kernel_diags["ii"])

    gains = {}
    for pair in ("ee", "ei", "ie", "ii"):
        gains[pair] = r.parse("model", "gain_" + pair, _parse_gain)
    gain_table = GainTable(ee=gains["ee"], ei=gains["ei"],
                           ie=gains["ie"], ii=gains["ii"])

    tau_e = r.parse("model", "tau_e", float)
    tau_i = r.parse("model", "tau_i", float)
    sigma_e = r.parse("model", "sigma_e", float)
    sigma_i = r.parse("model", "sigma_i", float)
    if tau_e <= 0 or tau_i <= 0:
        raise ValidationError("time constants must be positive")
    if sigma_e < 0 or sigma_i < 0:
        raise ValidationError("noise levels must be >= 0")
    dynamics = IntrinsicDynamics.linear(tau_e, tau_i, sigma_e, sigma_i)
    model = NetworkModel(basis=basis, kernel=kernel, gains=gain_table,
                         dynamics=dynamics)

    # Feasibility of a balanced state under a constant excitatory drive: the
    # saturating inhibitory gain must be able to outweigh it.
    if gain_table.ee.kind == "constant" and gain_table.ei.kind == "tanh":
        if gain_table.ei.a <= gain_table.ee.a:
            raise ValidationError(
                "balance feasibility: the inhibitory gain ceiling for e "
                "(%g) must exceed the constant excitatory drive (%g), "
                "otherwise inhibition cannot control excitation"
                % (gain_table.ei.a, gain_table.ee.a))

    name = r.get("run", "name")
    mode = r.get("run", "mode").lower()
    if mode not in MODES:
        raise ValidationError("mode must be one of %s, got '%s'" % (MODES, mode))
    n = r.parse("run", "n", int)
    dt = r.parse("run", "dt", float)
    horizon = r.parse("run", "T", float)
    seed = r.parse("run", "seed", int)
    if dt <= 0:
        raise ValidationError("dt must be positive")
    if horizon < dt:
        raise ValidationError("T must be at least dt")
    if n < 1:
        raise ValidationError("n must be >= 1")

    observable_stride = r.parse("run", "observable_stride", int, 10)
    snapshot_stride = r.parse("run", "snapshot_stride", int, 0)
    quadrature_order = r.parse("run", "quadrature_order", int, DEFAULT_RULE_ORDER)
    newton_tol = r.parse("run", "newton_tol", float, 1e-10)
    newton_max_iter = r.parse("run", "newton_max_iter", int, 100)
    if observable_stride < 1 or snapshot_stride < 0:
        raise ValidationError("strides must be non-negative (observable >= 1)")
    if snapshot_stride and snapshot_stride % observable_stride:
        raise ValidationError("snapshot_stride must be a multiple of observable_stride")
    if quadrature_order < 1 or newton_max_iter < 1 or newton_tol <= 0:
        raise ValidationError("solver settings must be positive")

    tolerances = Tolerances(
        mean_e=r.parse("run", "tol_mean_e", float, 0.05),
        mean_i=r.parse("run", "tol_mean_i", float, 0.05),
        var=r.parse("run", "tol_var", float, 0.05),
        wasserstein=r.parse("run", "tol_wasserstein", float, None))

    k_e0 = r.parse("init", "K_e0", float)
    k_i0 = r.parse("init", "K_i0", float)
    if k_e0 < 0 or k_i0 < 0:
        raise ValidationError("initial variances must be >= 0")
    v_guess = r.parse("init", "v_guess", lambda s: np.array(_float_list(s)))
    if v_guess is not None and v_guess.shape != (2 * m,):
        raise ValidationError("v_guess needs %d entries (e block then i block)"
                              % (2 * m))

    output_dir = r.get("output", "directory", "out")
    csv_precision = r.parse("output", "csv_precision", int, 17)
    if not 1 <= csv_precision <= 17:
        raise ValidationError("csv_precision must be in 1..17")

    return ScenarioConfig(name=name, mode=mode, model=model, n=n, dt=dt,
                          horizon=horizon, seed=seed,
                          observable_stride=observable_stride,
                          snapshot_stride=snapshot_stride,
                          quadrature_order=quadrature_order,
                          newton_tol=newton_tol, newton_max_iter=newton_max_iter,
                          tolerances=tolerances, k_e0=k_e0, k_i0=k_i0,
                          v_guess=v_guess, output_dir=output_dir,
                          csv_precision=csv_precision)


def preset_names():
    root = resources.files("balnet").joinpath("presets")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def preset_text(name: str) -> str:
    path = resources.files("balnet").joinpath("presets").joinpath(name + ".ini")
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError("no bundled preset named '%s' (have: %s)"
                              % (name, ", ".join(preset_names())))


def load_preset(name: str) -> ScenarioConfig:
    return parse_config(preset_text(name))
