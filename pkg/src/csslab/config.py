"""Flat key=value run configuration with a published schema."""

from __future__ import annotations

from dataclasses import dataclass, field

from .discretization import GRID_KINDS
from .errors import ConfigTypeError, MissingRequired, UnknownKey

EXPERIMENTS = ("evolve", "soliton-check", "threshold", "groundstate", "selftest")
INITIAL = ("soliton", "gaussian", "checkpoint")
FAMILIES = ("scaled-soliton", "gaussian")


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


# key -> (type, default, check or choices, help); default None marks optional
SCHEMA = {
    "experiment": (str, None, EXPERIMENTS, "what to run (required)"),
    "seed": (int, 0, None, "seed for randomized pieces"),
    "output_dir": (str, "out", None, "directory for artifacts"),
    "m": (int, 0, _nonneg, "equivariance index"),
    "g": (float, 1.0, None, "coupling"),
    "lam": (float, 1.0, _positive, "soliton scale"),
    "grid": (str, "bessel-zero", GRID_KINDS, "grid kind"),
    "n": (int, 1024, lambda x: x >= 8, "grid size"),
    "rmax": (float, 60.0, _positive, "truncation radius"),
    "initial": (str, "soliton", INITIAL, "initial datum for evolve"),
    "amplitude": (float, 1.0, None, "multiplier of the initial datum"),
    "width": (float, 1.0, _positive, "gaussian width"),
    "taper": (bool, True, None, "fade the datum to zero over the outer half of the grid"),
    "checkpoint_in": (str, "", None, "checkpoint to start from"),
    "dt": (float, 1e-3, _positive, "time step"),
    "t_final": (float, 1.0, _positive, "final time"),
    "sample_every": (int, 10, _positive, "steps per diagnostics row"),
    "checkpoint_every": (int, 0, _nonneg, "steps per checkpoint (0: final only)"),
    "absorb": (bool, False, None, "damp the outer 10% of the grid"),
    "free_only": (bool, False, None, "drop the nonlinearity"),
    "freeze_gauge": (bool, False, None, "keep the initial potential"),
    "moment_cap": (float, 0.0, _nonneg, "r^2 moment cap (0: none)"),
    "family": (str, "scaled-soliton", FAMILIES, "threshold family"),
    "tol": (float, 0.0125, _positive, "threshold amplitude tolerance"),
    "alpha_min": (float, 0.6, _positive, "threshold scan start"),
    "alpha_max": (float, 1.6, _positive, "threshold scan end"),
    "alpha_step": (float, 0.1, _positive, "threshold scan step"),
    "probe_t_final": (float, 60.0, _positive, "threshold probe horizon"),
    "probe_dt": (float, 1e-3, _positive, "threshold probe step"),
    "probe_reach": (float, 100.0, _positive, "threshold grid radius"),
    "basis": (int, 36, _positive, "ground-state basis size"),
}


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    values: dict = field(default_factory=dict)

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    @property
    def seed(self):
        return self.values["seed"]

    @property
    def output_dir(self):
        return self.values["output_dir"]

    def as_dict(self):
        return dict(self.values)


def _coerce(key, raw):
    typ, _, check, _ = SCHEMA[key]
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(raw)
            value = low in ("1", "true", "yes")
        elif typ is int:
            value = int(raw)
        elif typ is float:
            value = float(raw)
        else:
            value = raw
    except ValueError:
        raise ConfigTypeError(f"{key}: cannot read {raw!r} as {typ.__name__}") from None
    if isinstance(check, tuple):
        if value not in check:
            raise ConfigTypeError(f"{key}: {value!r} not one of {', '.join(check)}")
    elif check is not None and not check(value):
        raise ConfigTypeError(f"{key}: {value!r} out of range")
    return value


def build_config(pairs):
    """Validate an iterable of (key, raw string) pairs."""
    values = {}
    for key, raw in pairs:
        if key not in SCHEMA:
            raise UnknownKey(f"unknown key {key!r}")
        values[key] = _coerce(key, raw)
    if "experiment" not in values:
        raise MissingRequired("experiment is required")
    for key, (_, default, _, _) in SCHEMA.items():
        values.setdefault(key, default)
    if values["experiment"] == "evolve" and values["initial"] == "checkpoint" and not values["checkpoint_in"]:
        raise MissingRequired("initial=checkpoint needs checkpoint_in")
    return RunConfig(experiment=values["experiment"], values=values)


def parse_config(text):
    """Parse UTF-8 ``key=value`` lines; '#' starts a comment."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigTypeError(f"line {lineno}: expected key=value")
        key, raw = line.split("=", 1)
        pairs.append((key.strip(), raw))
    return build_config(pairs)
