"""Check/report plumbing shared by all verification routines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction


@dataclass
class CheckResult:
    name: str
    passed: bool
    error_metric: float = 0.0
    witness: str | None = None

    def to_dict(self):
        d = {"check_name": self.name, "pass": self.passed,
             "max_abs_error": self.error_metric}
        if self.witness is not None:
            d["witness_monomial"] = self.witness
        return d


@dataclass
class CheckReport:
    checks: list = field(default_factory=list)

    def add(self, name, passed, error_metric=0.0, witness=None):
        self.checks.append(CheckResult(name, bool(passed), float(error_metric), witness))
        return self.checks[-1]

    def add_jet_zero(self, name, jet):
        """Record an exact zero-test of a jet (or JetMatrix)."""
        is_zero = jet.is_zero()
        witness = None
        metric = 0.0
        if not is_zero:
            metric = jet.max_abs()
            wm = getattr(jet, "witness_monomial", None)
            if wm is not None:
                witness = str(wm())
            else:  # JetMatrix
                for i, row in enumerate(jet.entries):
                    for j, a in enumerate(row):
                        if not a.is_zero():
                            witness = f"entry({i},{j}) {a.witness_monomial()}"
                            break
                    if witness:
                        break
        return self.add(name, is_zero, metric, witness)

    def add_jet_tol(self, name, jet, tol):
        metric = jet.max_abs()
        witness = None
        if metric > tol:
            wm = getattr(jet, "witness_monomial", None)
            witness = str(wm()) if wm is not None else None
        return self.add(name, metric <= tol, metric, witness)

    @property
    def all_pass(self):
        return all(c.passed for c in self.checks)

    def get(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def extend(self, other):
        self.checks.extend(other.checks)
        return self

    def to_dict(self):
        return {"checks": [c.to_dict() for c in self.checks], "all_pass": self.all_pass}

    def summary_lines(self):
        return [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}"
                + (f"  err={c.error_metric:.3e}" if c.error_metric else "")
                for c in self.checks]


def canonical_json(obj):
    """Deterministic JSON text (sorted keys, fixed separators)."""
    def default(o):
        if isinstance(o, Fraction):
            return {"num": o.numerator, "den": o.denominator}
        if isinstance(o, complex):
            return {"re": o.real, "im": o.imag}
        raise TypeError(f"not JSON serializable: {type(o).__name__}")
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=default)
