"""Exception hierarchy.

Every error carries a short ``category`` string; the command line maps
categories to exit codes so callers can react without parsing messages.
"""


class CSSLabError(Exception):
    category = "error"


class InvalidArgument(CSSLabError, ValueError):
    category = "invalid-argument"


class GridMismatch(CSSLabError, ValueError):
    category = "grid-mismatch"


class IntegrationDiverged(CSSLabError, FloatingPointError):
    category = "integration-diverged"


class MomentOverflow(CSSLabError, OverflowError):
    """Raised when the r^2 moment exceeds its cap (mass escaping the box)."""

    category = "moment-overflow"


class NonuniformSampling(CSSLabError, ValueError):
    category = "nonuniform-sampling"


class WrongCoupling(CSSLabError, ValueError):
    category = "wrong-coupling"


class NoSignChange(CSSLabError, ValueError):
    category = "no-sign-change"


class NonConvergence(CSSLabError, RuntimeError):
    category = "nonconvergence"


class BracketNotFound(CSSLabError, RuntimeError):
    category = "bracket-not-found"


class UndecidedDominated(CSSLabError, RuntimeError):
    category = "undecided-dominated"


class ConfigError(CSSLabError, ValueError):
    category = "config-error"


class UnknownKey(ConfigError):
    category = "unknown-key"


class ConfigTypeError(ConfigError):
    category = "type-error"


class MissingRequired(ConfigError):
    category = "missing-required"


class CheckpointError(CSSLabError, ValueError):
    category = "checkpoint-error"


class BadMagic(CheckpointError):
    category = "bad-magic"


class VersionMismatch(CheckpointError):
    category = "version-mismatch"


class TruncatedPayload(CheckpointError):
    category = "truncated-payload"
