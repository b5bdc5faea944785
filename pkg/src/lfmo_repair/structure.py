"""Semi-coherent structure functions and their exact signatures.

States are bit masks over components: bit ``i`` set means component ``i + 1``
is working.  The public ``evaluate_structure`` also accepts 0/1 sequences.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, ClassVar, Sequence

import numpy as np

from . import _kernels
from ._accel import HAVE_NUMBA
from .errors import ValidationError

__all__ = [
    "SystemStructure",
    "KOutOfNF",
    "Series",
    "Parallel",
    "BooleanFormula",
    "TwoTerminal",
    "FunctionStructure",
    "Signature",
    "ValidationReport",
    "evaluate_structure",
    "structural_signature",
    "signature_via_permutations",
    "minimal_signature",
    "validate_semi_coherent",
    "structure_from_json",
    "ENUMERATION_CAP",
]

ENUMERATION_CAP = 28
_CHUNK = 1 << 21


def _popcount(masks: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(masks)
    x = masks.astype(np.uint64)
    out = np.zeros(x.shape, dtype=np.uint8)
    while np.any(x):
        out += (x & np.uint64(1)).astype(np.uint8)
        x >>= np.uint64(1)
    return out


class SystemStructure:
    """A binary structure function on ``n`` components."""

    kind: ClassVar[str] = ""
    n: int

    def evaluate_masks(self, masks: np.ndarray) -> np.ndarray:
        """Vectorised structure function over working-component bit masks."""
        raise NotImplementedError

    def __call__(self, state: Sequence[int] | int) -> int:
        return evaluate_structure(self, state)

    def working_counts(self) -> list[int]:
        """``counts[w]`` = number of working states with exactly ``w`` working components."""
        counts = np.zeros(self.n + 1, dtype=np.int64)
        for start in range(0, 1 << self.n, _CHUNK):
            masks = np.arange(start, min(start + _CHUNK, 1 << self.n), dtype=np.int64)
            up = self.evaluate_masks(masks).astype(bool)
            counts += np.bincount(_popcount(masks[up]), minlength=self.n + 1)[: self.n + 1]
        return [int(c) for c in counts]

    def truth_table(self) -> np.ndarray:
        """Structure function on all ``2**n`` masks, as uint8."""
        if self.n > ENUMERATION_CAP:
            raise ValidationError(f"truth table needs n <= {ENUMERATION_CAP}, got {self.n}")
        table = np.empty(1 << self.n, dtype=np.uint8)
        for start in range(0, 1 << self.n, _CHUNK):
            stop = min(start + _CHUNK, 1 << self.n)
            table[start:stop] = self.evaluate_masks(np.arange(start, stop, dtype=np.int64))
        return table

    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class KOutOfNF(SystemStructure):
    """Fails once ``k`` or more of its ``n`` components have failed."""

    n: int
    k: int
    kind: ClassVar[str] = "k_out_of_n_f"

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.n:
            raise ValidationError(f"k-out-of-n:F needs 1 <= k <= n, got k={self.k}, n={self.n}")

    def evaluate_masks(self, masks):
        failed = self.n - _popcount(np.asarray(masks, dtype=np.int64)).astype(np.int64)
        return (failed < self.k).astype(np.uint8)

    def to_json(self):
        return {"kind": self.kind, "n": self.n, "k": self.k}


class Series(KOutOfNF):
    kind: ClassVar[str] = "series"

    def __init__(self, n: int):
        super().__init__(n, 1)

    def to_json(self):
        return {"kind": self.kind, "n": self.n}


class Parallel(KOutOfNF):
    kind: ClassVar[str] = "parallel"

    def __init__(self, n: int):
        super().__init__(n, n)

    def to_json(self):
        return {"kind": self.kind, "n": self.n}


_TOKEN = re.compile(r"\s*(?:(\d+)|(.))")


def _parse_formula(expr: str, n: int):
    """Parse ``|``/``&`` expressions over 1-based component literals.

    Returns a nested tuple AST: ``("lit", i)``, ``("and", a, b)``, ``("or", a, b)``.
    """
    tokens: list[str] = []
    for num, sym in _TOKEN.findall(expr):
        if num:
            tokens.append(num)
        elif sym.strip():
            sym = {"∧": "&", "∨": "|"}.get(sym, sym)
            if sym not in "&|()":
                raise ValidationError(
                    f"formula may only use component numbers, '&', '|' and parentheses; found {sym!r}"
                )
            tokens.append(sym)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take():
        nonlocal pos
        tok = peek()
        if tok is None:
            raise ValidationError(f"formula {expr!r} ends unexpectedly")
        pos += 1
        return tok

    def parse_or():
        node = parse_and()
        while peek() == "|":
            take()
            node = ("or", node, parse_and())
        return node

    def parse_and():
        node = parse_atom()
        while peek() == "&":
            take()
            node = ("and", node, parse_atom())
        return node

    def parse_atom():
        tok = take()
        if tok == "(":
            node = parse_or()
            if take() != ")":
                raise ValidationError(f"unbalanced parentheses in formula {expr!r}")
            return node
        if tok.isdigit():
            i = int(tok)
            if not 1 <= i <= n:
                raise ValidationError(f"component {i} out of range 1..{n} in formula {expr!r}")
            return ("lit", i)
        raise ValidationError(f"unexpected {tok!r} in formula {expr!r}")

    ast = parse_or()
    if pos != len(tokens):
        raise ValidationError(f"trailing input {tokens[pos]!r} in formula {expr!r}")
    return ast


def _eval_ast(node, masks):
    op = node[0]
    if op == "lit":
        return (masks >> (node[1] - 1)) & 1
    left = _eval_ast(node[1], masks)
    right = _eval_ast(node[2], masks)
    return left & right if op == "and" else left | right


@dataclass(frozen=True)
class BooleanFormula(SystemStructure):
    """Monotone formula such as ``"(1&2)|3"`` (literal ``i`` is component ``i``)."""

    n: int
    expr: str
    kind: ClassVar[str] = "formula"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        object.__setattr__(self, "_ast", _parse_formula(self.expr, self.n))

    def evaluate_masks(self, masks):
        masks = np.asarray(masks, dtype=np.int64)
        return _eval_ast(self._ast, masks).astype(np.uint8)

    def to_json(self):
        return {"kind": self.kind, "n": self.n, "expr": self.expr}


class TwoTerminal(SystemStructure):
    """Works iff ``source`` and ``target`` are joined by working edges.

    Component ``i + 1`` is ``edges[i]``; nodes are perfectly reliable.
    """

    kind: ClassVar[str] = "two_terminal"

    def __init__(self, nodes: Sequence[str], edges: Sequence[Sequence[str]], source: str, target: str):
        self.nodes = tuple(str(v) for v in nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise ValidationError("two-terminal node names must be unique")
        if not 2 <= len(self.nodes) <= 63:
            raise ValidationError(f"two-terminal graphs need 2..63 nodes, got {len(self.nodes)}")
        index = {v: i for i, v in enumerate(self.nodes)}
        self.edges = tuple((str(a), str(b)) for a, b in edges)
        for a, b in self.edges:
            if a not in index or b not in index:
                raise ValidationError(f"edge ({a!r}, {b!r}) references an unknown node")
        if source not in index or target not in index:
            raise ValidationError("source and target must be listed nodes")
        if source == target:
            raise ValidationError("source and target must differ")
        self.source, self.target = str(source), str(target)
        self.n = len(self.edges)
        if not 1 <= self.n <= 62:
            raise ValidationError(f"two-terminal graphs need 1..62 edges, got {self.n}")
        self._u = np.array([index[a] for a, _ in self.edges], dtype=np.int64)
        self._v = np.array([index[b] for _, b in self.edges], dtype=np.int64)
        self._src, self._dst = index[source], index[target]
        incident: list[list[tuple[int, int]]] = [[] for _ in self.nodes]
        for e, (u, v) in enumerate(zip(self._u, self._v)):
            incident[u].append((e, int(v)))
            incident[v].append((e, int(u)))
        self._offsets = np.cumsum([0] + [len(x) for x in incident]).astype(np.int64)
        self._inc_edge = np.array([e for x in incident for e, _ in x], dtype=np.int64)
        self._inc_node = np.array([w for x in incident for _, w in x], dtype=np.int64)

    def evaluate_masks(self, masks):
        masks = np.ascontiguousarray(masks, dtype=np.int64)
        if HAVE_NUMBA:
            return _kernels.two_terminal_eval(
                masks, self._offsets, self._inc_edge, self._inc_node, len(self.nodes), self._src, self._dst
            )
        return _kernels.two_terminal_eval_numpy(masks, self._u, self._v, self._src, self._dst)

    def connected_dfs(self, working: Sequence[int]) -> bool:
        """Path-existence check on one state by depth-first search."""
        adj: dict[str, list[str]] = {v: [] for v in self.nodes}
        for (a, b), up in zip(self.edges, working):
            if up:
                adj[a].append(b)
                adj[b].append(a)
        seen, todo = {self.source}, [self.source]
        while todo:
            v = todo.pop()
            if v == self.target:
                return True
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return False

    def to_json(self):
        return {
            "kind": self.kind,
            "nodes": list(self.nodes),
            "edges": [list(e) for e in self.edges],
            "source": self.source,
            "target": self.target,
        }

    def __repr__(self) -> str:
        return f"TwoTerminal(n={self.n}, nodes={len(self.nodes)}, source={self.source!r}, target={self.target!r})"


class FunctionStructure(SystemStructure):
    """Wraps an arbitrary predicate on 0/1 tuples; not serialisable.

    Intended for checking user-supplied structure functions with
    :func:`validate_semi_coherent`.
    """

    kind: ClassVar[str] = "function"

    def __init__(self, n: int, func: Callable[[tuple[int, ...]], int]):
        self.n = int(n)
        self.func = func

    def evaluate_masks(self, masks):
        masks = np.asarray(masks, dtype=np.int64)
        out = np.empty(masks.shape[0], dtype=np.uint8)
        for idx, m in enumerate(masks.tolist()):
            out[idx] = 1 if self.func(tuple((m >> i) & 1 for i in range(self.n))) else 0
        return out

    def to_json(self):
        raise ValidationError("function-backed structures cannot be serialised")


def _state_to_mask(structure: SystemStructure, state: Sequence[int] | int) -> int:
    if isinstance(state, (int, np.integer)):
        mask = int(state)
        if not 0 <= mask < (1 << structure.n):
            raise ValidationError(f"state mask {mask} out of range for n = {structure.n}")
        return mask
    bits = list(state)
    if len(bits) != structure.n:
        raise ValidationError(f"state has length {len(bits)} but the structure has n = {structure.n}")
    mask = 0
    for i, b in enumerate(bits):
        if b not in (0, 1, True, False):
            raise ValidationError(f"state entries must be 0 or 1, got {b!r}")
        mask |= int(b) << i
    return mask


def evaluate_structure(structure: SystemStructure, state: Sequence[int] | int) -> int:
    """Phi(state) for a 0/1 sequence (1 = working) or a working bit mask."""
    mask = _state_to_mask(structure, state)
    return int(structure.evaluate_masks(np.array([mask], dtype=np.int64))[0])


@dataclass(frozen=True)
class Signature:
    """Structural signature ``s``, tail ``sbar`` and minimal signature ``a``.

    ``s[k-1]`` is the probability that the system dies at the ``k``-th
    failure; ``sbar[k]`` is the fraction of ``k``-failure states still working.
    """

    s: tuple[Fraction, ...]
    sbar: tuple[Fraction, ...]
    a: tuple[Fraction, ...]

    @property
    def n(self) -> int:
        return len(self.s)

    @classmethod
    def from_vector(cls, s: Sequence[Fraction | float | int | str]) -> "Signature":
        """Accept a raw (possibly mixed-system) signature vector."""
        vec = tuple(Fraction(x) if not isinstance(x, float) else Fraction(x).limit_denominator(10**15) for x in s)
        if not vec:
            raise ValidationError("signature vector is empty")
        if any(x < 0 for x in vec):
            raise ValidationError("signature entries must be nonnegative")
        if abs(sum(vec) - 1) > Fraction(1, 10**12):
            raise ValidationError(f"signature entries must sum to 1, got {float(sum(vec))!r}")
        sbar = [Fraction(1)]
        for x in vec:
            sbar.append(sbar[-1] - x)
        return cls(vec, tuple(sbar), minimal_signature(vec))

    @classmethod
    def from_json(cls, spec: dict[str, Any]) -> "Signature":
        """Read ``{"s": [...]}`` with entries as exact fraction strings or numbers."""
        if not isinstance(spec, dict) or not isinstance(spec.get("s"), list):
            raise ValidationError("signature spec must be an object with an 's' list")
        try:
            sig = cls.from_vector(spec["s"])
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise ValidationError(f"bad signature entry: {exc}") from None
        if "n" in spec and spec["n"] != sig.n:
            raise ValidationError(f"signature has {sig.n} entries but n = {spec['n']!r}")
        return sig

    def floats(self) -> np.ndarray:
        return np.array([float(x) for x in self.s])

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "s": [str(x) for x in self.s],
            "s_float": [float(x) for x in self.s],
            "sbar": [str(x) for x in self.sbar],
            "a": [str(x) for x in self.a],
            "a_float": [float(x) for x in self.a],
        }


def minimal_signature(sig: Signature | Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Coefficients ``a`` with ``P(T_fail > t) = sum_i a_i exp(-Psi(i) t)``."""
    s = sig.s if isinstance(sig, Signature) else tuple(Fraction(x) for x in sig)
    n = len(s)
    a = []
    for i in range(1, n + 1):
        acc = Fraction(0)
        for k in range(n - i + 1, n + 1):
            e = (i - 1) - (n - k)
            acc += math.comb(i - 1, n - k) * (-1) ** e * s[k - 1]
        a.append(math.comb(n, i) * acc)
    return tuple(a)


def _from_tail(sbar: list[Fraction]) -> Signature:
    s = tuple(sbar[k - 1] - sbar[k] for k in range(1, len(sbar)))
    return Signature(s, tuple(sbar), minimal_signature(s))


def structural_signature(structure: SystemStructure, cap: int = ENUMERATION_CAP) -> Signature:
    """Exact structural signature by level-wise enumeration of all ``2**n`` states."""
    n = structure.n
    if n > cap:
        raise ValidationError(
            f"structural signature enumerates 2**n states and is capped at n <= {cap} (got n = {n}); "
            "sampling-based estimators are not provided"
        )
    counts = structure.working_counts()
    # sbar[k] uses states with n - k working components
    sbar = [Fraction(counts[n - k], math.comb(n, n - k)) for k in range(n + 1)]
    sig = _from_tail(sbar)
    if sbar[0] != 1 or sbar[n] != 0:
        raise ValidationError("structure is not semi-coherent: Phi(all working) must be 1 and Phi(all failed) 0")
    if any(x < 0 for x in sig.s):
        raise ValidationError("structure is not monotone: the working fraction increases with more failures")
    return sig


def signature_via_permutations(structure: SystemStructure) -> Signature:
    """Signature by counting, over all ``n!`` failure orders, when the system dies."""
    n = structure.n
    if n > 8:
        raise ValidationError(f"permutation enumeration is limited to n <= 8, got n = {n}")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    full = (1 << n) - 1
    bits = np.int64(1) << perms  # (n!, n)
    failed = np.cumsum(bits, axis=1)  # failed set after each prefix
    working = full - failed
    phi = structure.evaluate_masks(working.ravel()).reshape(working.shape)
    if np.any(phi[:, -1]):
        raise ValidationError("structure is not semi-coherent: Phi(all failed) must be 0")
    first_down = np.argmax(phi == 0, axis=1) + 1
    hits = np.bincount(first_down, minlength=n + 1)
    total = math.factorial(n)
    s = tuple(Fraction(int(hits[k]), total) for k in range(1, n + 1))
    sbar = [Fraction(1)]
    for x in s:
        sbar.append(sbar[-1] - x)
    return Signature(s, tuple(sbar), minimal_signature(s))


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    reason: str = ""
    lower: tuple[int, ...] | None = None
    upper: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.valid


def _bits(mask: int, n: int) -> tuple[int, ...]:
    return tuple((mask >> i) & 1 for i in range(n))


def validate_semi_coherent(structure: SystemStructure, exhaustive_limit: int = 20, samples: int = 10**6,
                           seed: int = 0) -> ValidationReport:
    """Check ``Phi(0) = 0``, ``Phi(1) = 1`` and monotonicity.

    Monotonicity is checked over every single-component upgrade when
    ``n <= exhaustive_limit``; otherwise over ``samples`` random upgrades.
    The first violating pair ``lower <= upper`` is reported.
    """
    n = structure.n
    full = (1 << n) - 1
    if evaluate_structure(structure, 0) != 0:
        return ValidationReport(False, "Phi(all failed) = 1", _bits(0, n), None)
    if evaluate_structure(structure, full) != 1:
        return ValidationReport(False, "Phi(all working) = 0", None, _bits(full, n))
    if n <= exhaustive_limit:
        table = structure.truth_table()
        masks = np.arange(1 << n, dtype=np.int64)
        for i in range(n):
            lo = masks[((masks >> i) & 1) == 0]
            bad = np.flatnonzero(table[lo] > table[lo | (1 << i)])
            if bad.size:
                x = int(lo[bad[0]])
                return ValidationReport(False, "not monotone", _bits(x, n), _bits(x | (1 << i), n))
        return ValidationReport(True)
    rng = np.random.default_rng(seed)
    done = 0
    while done < samples:
        m = min(_CHUNK, samples - done)
        lo = rng.integers(0, 1 << n, size=m, dtype=np.int64)
        bit = np.int64(1) << rng.integers(0, n, size=m, dtype=np.int64)
        lo &= ~bit
        bad = np.flatnonzero(structure.evaluate_masks(lo) > structure.evaluate_masks(lo | bit))
        if bad.size:
            x, b = int(lo[bad[0]]), int(bit[bad[0]])
            return ValidationReport(False, "not monotone", _bits(x, n), _bits(x | b, n))
        done += m
    return ValidationReport(True, f"randomized check over {samples} comparable pairs")


def structure_from_json(spec: dict[str, Any]) -> SystemStructure:
    """Build a structure from its JSON object."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("system spec must be an object with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "k_out_of_n_f":
            return KOutOfNF(int(spec["n"]), int(spec["k"]))
        if kind == "series":
            return Series(int(spec["n"]))
        if kind == "parallel":
            return Parallel(int(spec["n"]))
        if kind == "formula":
            return BooleanFormula(int(spec["n"]), str(spec["expr"]))
        if kind == "two_terminal":
            return TwoTerminal(spec["nodes"], spec["edges"], spec["source"], spec["target"])
    except KeyError as exc:
        raise ValidationError(f"system spec {kind!r} is missing field {exc.args[0]!r}") from None
    raise ValidationError(
        f"unknown system kind {kind!r}; expected k_out_of_n_f, series, parallel, formula or two_terminal"
    )
