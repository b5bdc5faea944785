"""Laplace exponents of Lévy subordinators and their integer-point tables.

Everything downstream of this module needs only ``Psi(1), ..., Psi(n)``, so
the exchange type is :class:`PsiTable`.  Tables carry two renderings of the
same numbers: float64 for ordinary use and high-precision ``mpmath`` values
for the alternating binomial sums in :mod:`lfmo_repair.failure_chain`, which
lose most of their significant digits in double precision once ``n`` passes
about 20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Sequence

import mpmath
import numpy as np

from .errors import ValidationError

__all__ = [
    "LaplaceExponent",
    "PureDrift",
    "CompoundPoissonExp",
    "GammaSubordinator",
    "InverseGaussian",
    "Stable",
    "RawTable",
    "PsiTable",
    "evaluate",
    "psi_table",
    "working_precision",
    "exponent_from_json",
]


def working_precision(n: int) -> int:
    """Bits of mantissa used for length-``n`` alternating binomial sums.

    The largest coefficients that appear are products of two binomials of
    order ``n``, i.e. below ``4**n``; 128 guard bits sit on top of that.
    """
    return 2 * int(n) + 128


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValidationError(f"{name} must be a finite positive number, got {value!r}")
    return value


def _nonnegative(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ValidationError(f"{name} must be a finite nonnegative number, got {value!r}")
    return value


class LaplaceExponent:
    """Base class for the subordinator catalog.

    Subclasses implement :meth:`_mp` (high-precision closed form) and
    :meth:`__call__` (float closed form) and define ``kind`` for JSON.
    """

    kind: ClassVar[str] = ""

    def __call__(self, x: float) -> float:
        raise NotImplementedError

    def _mp(self, x: Any) -> Any:
        raise NotImplementedError

    def evaluate_mp(self, x: int | float, prec: int = 256) -> mpmath.mpf:
        with mpmath.workprec(prec):
            if x == 0:
                return mpmath.mpf(0)
            return +self._mp(mpmath.mpf(x))

    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class PureDrift(LaplaceExponent):
    """``L_t = mu t``; components are iid exponential with rate ``mu``."""

    mu: float
    kind: ClassVar[str] = "pure_drift"

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", _positive("mu", self.mu))

    def __call__(self, x: float) -> float:
        return self.mu * x

    def _mp(self, x):
        return mpmath.mpf(self.mu) * x

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "mu": self.mu}


@dataclass(frozen=True)
class CompoundPoissonExp(LaplaceExponent):
    """Drift ``mu`` plus a compound Poisson process of rate ``lam`` with
    Exp(``gamma``) jumps: ``Psi(x) = mu x + lam x / (gamma + x)``."""

    mu: float
    lam: float
    gamma: float
    kind: ClassVar[str] = "cpp_exp"

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", _nonnegative("mu", self.mu))
        object.__setattr__(self, "lam", _positive("lambda", self.lam))
        object.__setattr__(self, "gamma", _positive("gamma", self.gamma))

    def __call__(self, x: float) -> float:
        return self.mu * x + self.lam * x / (self.gamma + x)

    def _mp(self, x):
        mu, lam, gamma = (mpmath.mpf(v) for v in (self.mu, self.lam, self.gamma))
        return mu * x + lam * x / (gamma + x)

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "mu": self.mu, "lambda": self.lam, "gamma": self.gamma}


@dataclass(frozen=True)
class GammaSubordinator(LaplaceExponent):
    """Gamma process, ``Psi(x) = beta log(1 + x/eta)``."""

    beta: float
    eta: float
    kind: ClassVar[str] = "gamma"

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", _positive("beta", self.beta))
        object.__setattr__(self, "eta", _positive("eta", self.eta))

    def __call__(self, x: float) -> float:
        return self.beta * math.log1p(x / self.eta)

    def _mp(self, x):
        return mpmath.mpf(self.beta) * mpmath.log1p(x / mpmath.mpf(self.eta))

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "beta": self.beta, "eta": self.eta}


@dataclass(frozen=True)
class InverseGaussian(LaplaceExponent):
    """Inverse Gaussian process, ``Psi(x) = beta (sqrt(2x + eta^2) - eta)``."""

    beta: float
    eta: float
    kind: ClassVar[str] = "inverse_gaussian"

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", _positive("beta", self.beta))
        object.__setattr__(self, "eta", _positive("eta", self.eta))

    def __call__(self, x: float) -> float:
        # sqrt(2x + eta^2) - eta without cancellation for small x
        return self.beta * 2.0 * x / (math.sqrt(2.0 * x + self.eta**2) + self.eta)

    def _mp(self, x):
        eta = mpmath.mpf(self.eta)
        return mpmath.mpf(self.beta) * (mpmath.sqrt(2 * x + eta**2) - eta)

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "beta": self.beta, "eta": self.eta}


@dataclass(frozen=True)
class Stable(LaplaceExponent):
    """alpha-stable subordinator, ``Psi(x) = x**alpha`` with ``0 < alpha < 1``."""

    alpha: float
    kind: ClassVar[str] = "stable"

    def __post_init__(self) -> None:
        alpha = float(self.alpha)
        if not 0.0 < alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
        object.__setattr__(self, "alpha", alpha)

    def __call__(self, x: float) -> float:
        return float(x) ** self.alpha

    def _mp(self, x):
        return mpmath.power(x, mpmath.mpf(self.alpha))

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class RawTable(LaplaceExponent):
    """User-supplied ``Psi(1..n)``; the floats are taken as exact."""

    values: tuple[float, ...]
    kind: ClassVar[str] = "table"

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValidationError("table must hold at least one value")
        object.__setattr__(self, "values", vals)
        _check_table(vals)

    def _lookup(self, x) -> int:
        k = int(x)
        if k != x or not 0 <= k <= len(self.values):
            raise ValidationError(f"raw table only defines Psi at integers 0..{len(self.values)}, got {x!r}")
        return k

    def __call__(self, x: float) -> float:
        k = self._lookup(x)
        return 0.0 if k == 0 else self.values[k - 1]

    def _mp(self, x):
        k = self._lookup(x)
        return mpmath.mpf(0) if k == 0 else mpmath.mpf(self.values[k - 1])

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "values": list(self.values)}


def evaluate(exponent: LaplaceExponent, x: float) -> float:
    """Psi(x) for ``x >= 0``."""
    if x < 0:
        raise ValidationError(f"Psi is evaluated on x >= 0, got {x!r}")
    if x == 0:
        return 0.0
    return float(exponent(x))


def _check_table(values: Sequence[float], rel: float = 1e-12) -> None:
    prev, prev_diff = 0.0, math.inf
    for k, v in enumerate(values, start=1):
        if not math.isfinite(v) or v <= prev:
            raise ValidationError(f"Psi must be positive and strictly increasing; fails at Psi({k}) = {v!r}")
        diff = v - prev
        if diff > prev_diff * (1.0 + rel) + 1e-300:
            raise ValidationError(
                f"Psi forward differences must be nonincreasing; Psi({k}) - Psi({k - 1}) = {diff!r} "
                f"exceeds the previous difference {prev_diff!r}"
            )
        prev, prev_diff = v, diff


@dataclass(frozen=True)
class PsiTable:
    """``Psi(1), ..., Psi(n)`` as float64 and as high-precision values."""

    values: np.ndarray
    exact: tuple = field(repr=False)
    prec: int = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if len(self.exact) != len(vals):
            raise ValidationError("float and high-precision tables differ in length")
        _check_table(vals.tolist())

    @property
    def n(self) -> int:
        return len(self.values)

    def __getitem__(self, k: int) -> float:
        """Psi(k) with the convention Psi(0) = 0."""
        if k == 0:
            return 0.0
        return float(self.values[k - 1])

    def mp(self, k: int) -> mpmath.mpf:
        if k == 0:
            return mpmath.mpf(0)
        return self.exact[k - 1]

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "PsiTable":
        vals = [float(v) for v in values]
        return cls(np.asarray(vals), tuple(mpmath.mpf(v) for v in vals), working_precision(len(vals)))


def psi_table(exponent: LaplaceExponent, n: int) -> PsiTable:
    """Tabulate Psi at 1..n."""
    n = int(n)
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if isinstance(exponent, RawTable):
        if n > len(exponent.values):
            raise ValidationError(f"raw table has {len(exponent.values)} values but n = {n} were requested")
        return PsiTable.from_values(exponent.values[:n])
    prec = working_precision(n)
    exact = tuple(exponent.evaluate_mp(k, prec) for k in range(1, n + 1))
    values = np.array([float(v) for v in exact])
    return PsiTable(values, exact, prec)


_KINDS: dict[str, tuple[type, dict[str, str]]] = {
    "pure_drift": (PureDrift, {"mu": "mu"}),
    "cpp_exp": (CompoundPoissonExp, {"mu": "mu", "lambda": "lam", "gamma": "gamma"}),
    "gamma": (GammaSubordinator, {"beta": "beta", "eta": "eta"}),
    "inverse_gaussian": (InverseGaussian, {"beta": "beta", "eta": "eta"}),
    "stable": (Stable, {"alpha": "alpha"}),
    "table": (RawTable, {"values": "values"}),
}


def exponent_from_json(spec: dict[str, Any]) -> LaplaceExponent:
    """Build a Laplace exponent from ``{"kind": ..., <params>}``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("subordinator spec must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind not in _KINDS:
        raise ValidationError(f"unknown subordinator kind {kind!r}; expected one of {sorted(_KINDS)}")
    cls, fields = _KINDS[kind]
    extra = set(spec) - set(fields) - {"kind"}
    missing = set(fields) - set(spec)
    if missing or extra:
        raise ValidationError(
            f"subordinator {kind!r} takes fields {sorted(fields)}; missing {sorted(missing)}, unexpected {sorted(extra)}"
        )
    kwargs = {attr: spec[key] for key, attr in fields.items()}
    if kind == "table":
        kwargs["values"] = tuple(kwargs["values"])
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for subordinator {kind!r}: {exc}") from None
