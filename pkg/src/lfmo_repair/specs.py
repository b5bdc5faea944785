"""JSON run specifications and the bundled example files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ValidationError
from .policy import CostModel
from .structure import Signature, SystemStructure, structure_from_json
from .subordinator import LaplaceExponent, exponent_from_json

__all__ = ["RunSpec", "bundled_names", "load_json", "resolve_path"]

_FORMATS = ("csv", "json")


def bundled_names() -> list[str]:
    """Names of the JSON files shipped in ``lfmo_repair/data``."""
    root = resources.files("lfmo_repair").joinpath("data")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_path(name: str | Path):
    """A filesystem path if it exists, otherwise a bundled file by name."""
    p = Path(name)
    if p.exists():
        return p
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    candidate = resources.files("lfmo_repair").joinpath("data", stem + ".json")
    if candidate.is_file():
        return candidate
    raise ValidationError(f"no such file {str(name)!r} and no bundled spec of that name; bundled: {bundled_names()}")


def load_json(name: str | Path) -> dict[str, Any]:
    path = resolve_path(name)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {name}: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{name} must hold a JSON object")
    return data


def _section(data: dict, key: str, base: Path | None) -> dict:
    # a section is an inline object or the name of another spec file
    value = data.get(key)
    if isinstance(value, str):
        return load_json(base / value if base is not None and (base / value).exists() else value)
    if not isinstance(value, dict):
        raise ValidationError(f"run spec needs a {key!r} object or file name")
    return value


@dataclass
class RunSpec:
    """Everything one CLI invocation needs.

    ``r`` is ``None`` for a sweep over every threshold.  An explicit
    ``signature`` replaces the one computed from ``system`` in the analytic
    commands; with a signature the system may be omitted, but then only those
    commands can run.
    """

    system: SystemStructure | None
    subordinator: LaplaceExponent
    costs: CostModel | None = None
    r: int | None = None
    format: str = "csv"
    path: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)
    signature: Signature | None = None

    def __post_init__(self) -> None:
        if self.system is None and self.signature is None:
            raise ValidationError("run spec needs a system or a signature")
        if self.system is not None and self.signature is not None and self.signature.n != self.system.n:
            raise ValidationError(f"signature has n = {self.signature.n} but the system has n = {self.system.n}")
        n = self.n
        if self.costs is not None and self.costs.n != n:
            raise ValidationError(f"costs have n = {self.costs.n} but the system has n = {n}")
        if self.r is not None and not 1 <= self.r <= n:
            raise ValidationError(f"r must be in 1..n (n = {n}), got {self.r}")
        if self.format not in _FORMATS:
            raise ValidationError(f"output format must be one of {_FORMATS}, got {self.format!r}")

    @property
    def n(self) -> int:
        return self.system.n if self.system is not None else self.signature.n

    @classmethod
    def from_json(cls, data: dict[str, Any], base: Path | None = None) -> "RunSpec":
        known = {"system", "signature", "subordinator", "costs", "policy", "output", "simulation"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown run spec sections {sorted(unknown)}")
        system = structure_from_json(_section(data, "system", base)) if "system" in data else None
        signature = Signature.from_json(_section(data, "signature", base)) if "signature" in data else None
        if system is None and signature is None:
            raise ValidationError("run spec needs a 'system' or a 'signature' section")
        n = system.n if system is not None else signature.n
        sub = exponent_from_json(_section(data, "subordinator", base))
        costs = CostModel.from_json(_section(data, "costs", base), n) if "costs" in data else None
        policy = data.get("policy", {"sweep": True})
        if not isinstance(policy, dict) or (("r" in policy) == bool(policy.get("sweep", False))):
            raise ValidationError("policy must be {'r': int} or {'sweep': true}")
        r = int(policy["r"]) if "r" in policy else None
        output = data.get("output", {})
        extra = {"simulation": dict(data["simulation"])} if "simulation" in data else {}
        return cls(system, sub, costs, r, output.get("format", "csv"), output.get("path"), extra, signature)

    @classmethod
    def load(cls, name: str | Path) -> "RunSpec":
        path = resolve_path(name)
        base = Path(str(path)).parent if isinstance(path, Path) else None
        return cls.from_json(load_json(name), base)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.system is not None:
            out["system"] = self.system.to_json()
        if self.signature is not None:
            out["signature"] = {"n": self.signature.n, "s": [str(x) for x in self.signature.s]}
        out |= {
            "subordinator": self.subordinator.to_json(),
            "policy": {"r": self.r} if self.r is not None else {"sweep": True},
            "output": {"format": self.format} | ({"path": self.path} if self.path else {}),
        }
        if self.costs is not None:
            out["costs"] = {"c_cmp": list(self.costs.c_cmp), "c_sys": self.costs.c_sys}
        out.update(self.extra)
        return out
