"""
Error types raised across pushcast.

Library code raises these; the training and prediction pipelines catch
them per push, log them and keep going. `main.py` maps them to exit codes.
"""


class PushcastError(Exception):
    """Base class for every error raised by pushcast."""

    exit_code = 1


class ConfigError(PushcastError):
    """
    Malformed run configuration.

    Args:
        message (str): Human readable diagnostic.
        key (str | None): Dotted key path that caused the error.
        line (int | None): 1-based YAML line of the offending key, when known.
    """

    exit_code = 2

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = ""
        if key is not None:
            where += f" [key: {key}]"
        if line is not None:
            where += f" [line {line}]"
        super().__init__(message + where)


class BandwidthError(PushcastError, ValueError):
    """A kernel bandwidth was zero or negative."""


class ShapeError(PushcastError):
    pass


class DensityError(PushcastError):
    pass


class RescaleLimitError(DensityError):
    """
    Bandwidth rescaling ran out of trial rounds.

    Args:
        rounds (int): Number of rounds attempted.
        counters (tuple): Final (T_p, T_q, T_r).
        failures (tuple): Zero-likelihood counts per component in the last round.
    """

    def __init__(self, rounds: int, counters: tuple, failures: tuple):
        self.rounds = rounds
        self.counters = counters
        self.failures = failures
        super().__init__(
            f"No non-zero likelihood after {rounds} trial rounds "
            f"(T={counters}, zero counts p/q/r={failures})"
        )


class ModelError(PushcastError):
    pass


class SimulationError(PushcastError):
    pass


class ParameterError(PushcastError, ValueError):
    pass


class LibraryFormatError(PushcastError):
    """Library file is from another format version or another config."""

    exit_code = 2
