"""Training-token mixture planner.

Allocates a total token budget across corpora, each governed by one policy:
``fixed_ratio`` (a fraction of the budget), ``fixed_epochs`` (a multiple of
the corpus size), or ``remainder`` (whatever the others leave over, at most
one such corpus). Without a remainder corpus the fixed allocations simply sum
to whatever they sum to; validate_plan then reports how far that total drifts
from a stated budget.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

from .errors import BudgetError, ConfigError, DomainError

_POLICIES = ("fixed_ratio", "fixed_epochs", "remainder")


@dataclass(frozen=True)
class CorpusSpec:
    """One corpus: its size in tokens and how the planner may draw from it.

    Speech and text tokens inside a corpus are never split; the policy applies
    to their sum.
    """

    name: str
    speech_tokens: float
    text_tokens: float
    policy: str
    ratio: float | None = None
    epochs: float | None = None

    def __post_init__(self):
        if not self.name:
            raise ConfigError("corpus name must be nonempty")
        if self.speech_tokens < 0 or self.text_tokens < 0:
            raise ConfigError(
                f"corpus {self.name!r} token counts must be nonnegative, got "
                f"speech={self.speech_tokens}, text={self.text_tokens}"
            )
        if self.policy not in _POLICIES:
            raise ConfigError(
                f"corpus {self.name!r} has unknown policy {self.policy!r}; "
                f"expected one of {_POLICIES}"
            )
        if self.policy == "fixed_ratio":
            if self.ratio is None or not 0.0 <= self.ratio <= 1.0:
                raise ConfigError(
                    f"corpus {self.name!r} needs ratio in [0, 1], got {self.ratio}"
                )
        elif self.policy == "fixed_epochs":
            if self.epochs is None or self.epochs < 0:
                raise ConfigError(
                    f"corpus {self.name!r} needs epochs >= 0, got {self.epochs}"
                )

    @property
    def size_tokens(self) -> float:
        return self.speech_tokens + self.text_tokens

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "speech_tokens": self.speech_tokens,
            "text_tokens": self.text_tokens,
            "policy": self.policy,
        }
        if self.ratio is not None:
            out["ratio"] = self.ratio
        if self.epochs is not None:
            out["epochs"] = self.epochs
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusSpec":
        for key in ("name", "speech_tokens", "text_tokens", "policy"):
            if key not in data:
                raise ConfigError(f"corpus record is missing {key!r}: {data}")
        ratio = data.get("ratio")
        epochs = data.get("epochs")
        return cls(
            name=str(data["name"]),
            speech_tokens=float(data["speech_tokens"]),
            text_tokens=float(data["text_tokens"]),
            policy=str(data["policy"]),
            ratio=None if ratio is None else float(ratio),
            epochs=None if epochs is None else float(epochs),
        )


@dataclass(frozen=True)
class CorpusAllocation:
    """Planned draw from one corpus."""

    name: str
    policy: str
    size_tokens: float
    allocation_tokens: float
    epochs: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "policy": self.policy,
            "size_tokens": self.size_tokens,
            "allocation_tokens": self.allocation_tokens,
            "epochs": self.epochs,
        }


@dataclass(frozen=True)
class MixturePlan:
    """Allocations for every corpus plus the budget they were planned against.

    With a remainder corpus the allocations sum to the budget by construction,
    so total_tokens is the budget itself; otherwise it is the sum of the fixed
    allocations, which is free to miss the budget.
    """

    budget: float
    allocations: tuple[CorpusAllocation, ...]
    total_tokens: float

    def allocation_for(self, name: str) -> CorpusAllocation:
        for alloc in self.allocations:
            if alloc.name == name:
                return alloc
        raise DomainError(f"no corpus named {name!r} in plan")

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "total_tokens": self.total_tokens,
            "allocations": [a.to_dict() for a in self.allocations],
        }


def _corpus_epochs(name: str, size: float, allocation: float) -> float:
    if size == 0:
        if allocation == 0:
            return 0.0
        raise DomainError(
            f"cannot allocate {allocation} tokens to empty corpus {name!r}"
        )
    return allocation / size


def plan_mixture(budget: float, corpora: list[CorpusSpec]) -> MixturePlan:
    """Resolve every corpus policy against the budget.

    Fixed allocations are computed first; a remainder corpus (at most one)
    absorbs what is left and a negative leftover is an error, reported with
    every fixed allocation so the over-subscription is visible.
    """
    if budget < 0:
        raise DomainError(f"budget must be nonnegative, got {budget}")
    if not corpora:
        raise ConfigError("at least one corpus is required")
    names = [c.name for c in corpora]
    if len(set(names)) != len(names):
        raise ConfigError(f"corpus names must be unique, got {names}")
    remainder_specs = [c for c in corpora if c.policy == "remainder"]
    if len(remainder_specs) > 1:
        raise ConfigError(
            f"at most one corpus may use the remainder policy, got "
            f"{[c.name for c in remainder_specs]}"
        )

    fixed: dict[str, float] = {}
    for c in corpora:
        if c.policy == "fixed_ratio":
            fixed[c.name] = c.ratio * budget
        elif c.policy == "fixed_epochs":
            fixed[c.name] = c.epochs * c.size_tokens
    fixed_total = math.fsum(fixed.values())

    allocations = []
    for c in corpora:
        if c.policy == "remainder":
            alloc = budget - fixed_total
            if alloc < 0:
                listing = ", ".join(f"{n}={v:.6g}" for n, v in fixed.items())
                raise BudgetError(
                    f"fixed allocations total {fixed_total:.6g} and exceed the "
                    f"budget {budget:.6g}, leaving {alloc:.6g} for remainder "
                    f"corpus {c.name!r} ({listing})"
                )
            epochs = _corpus_epochs(c.name, c.size_tokens, alloc)
        else:
            alloc = fixed[c.name]
            epochs = c.epochs if c.policy == "fixed_epochs" else _corpus_epochs(
                c.name, c.size_tokens, alloc
            )
        allocations.append(
            CorpusAllocation(
                name=c.name,
                policy=c.policy,
                size_tokens=c.size_tokens,
                allocation_tokens=alloc,
                epochs=epochs,
            )
        )

    total = budget if remainder_specs else math.fsum(a.allocation_tokens for a in allocations)
    return MixturePlan(budget=budget, allocations=tuple(allocations), total_tokens=total)


@dataclass(frozen=True)
class MixtureReport:
    """validate_plan output: budget-deviation verdict plus per-corpus shares."""

    passed: bool
    stated_budget: float
    total_tokens: float
    deviation: float
    tolerance: float
    shares: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "stated_budget": self.stated_budget,
            "total_tokens": self.total_tokens,
            "deviation": self.deviation,
            "tolerance": self.tolerance,
            "shares": dict(self.shares),
        }


def validate_plan(plan: MixturePlan, stated_budget: float, tolerance: float = 0.06) -> MixtureReport:
    """Check the plan's total against a stated budget.

    Shares are reported relative to the stated budget, so a fixed-ratio corpus
    reports its ratio back exactly. The default tolerance is loose enough to
    absorb the drift a fixed-epochs plan accumulates against a round budget.
    """
    if stated_budget <= 0:
        raise DomainError(f"stated_budget must be positive, got {stated_budget}")
    if tolerance < 0:
        raise DomainError(f"tolerance must be nonnegative, got {tolerance}")
    deviation = abs(plan.total_tokens - stated_budget) / stated_budget
    shares = {a.name: a.allocation_tokens / stated_budget for a in plan.allocations}
    return MixtureReport(
        passed=deviation <= tolerance,
        stated_budget=stated_budget,
        total_tokens=plan.total_tokens,
        deviation=deviation,
        tolerance=tolerance,
        shares=shares,
    )


def load_corpora(path: str) -> list[CorpusSpec]:
    """Read corpus specs from a .json (list of records) or .csv file.

    CSV columns: name, speech_tokens, text_tokens, policy, ratio, epochs;
    ratio/epochs cells may be empty where the policy does not use them.
    """
    ext = os.path.splitext(path)[1].lower()
    if ext == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            records = json.load(fh)
        if not isinstance(records, list):
            raise ConfigError(f"{path}: expected a JSON list of corpus records")
        return [CorpusSpec.from_dict(r) for r in records]
    if ext == ".csv":
        corpora = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                record = {
                    "name": row.get("name", ""),
                    "speech_tokens": row.get("speech_tokens") or 0,
                    "text_tokens": row.get("text_tokens") or 0,
                    "policy": row.get("policy", ""),
                }
                if row.get("ratio"):
                    record["ratio"] = row["ratio"]
                if row.get("epochs"):
                    record["epochs"] = row["epochs"]
                corpora.append(CorpusSpec.from_dict(record))
        return corpora
    raise ConfigError(f"unsupported corpora format {ext!r}; use .json or .csv")


def save_corpora(corpora: list[CorpusSpec], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([c.to_dict() for c in corpora], fh, indent=2)
        fh.write("\n")


def format_plan(plan: MixturePlan, report: MixtureReport | None = None) -> str:
    """Aligned table of allocations, with the verdict line when a report is given."""
    header = f"{'corpus':<16}{'policy':<14}{'size':>14}{'allocation':>16}{'epochs':>10}{'share':>9}"
    lines = [header]
    base = report.stated_budget if report is not None else plan.budget
    for a in plan.allocations:
        share = a.allocation_tokens / base if base else float("nan")
        lines.append(
            f"{a.name:<16}{a.policy:<14}{a.size_tokens:>14.4g}"
            f"{a.allocation_tokens:>16.6g}{a.epochs:>10.4g}{share:>9.4f}"
        )
    lines.append(f"{'total':<16}{'':<14}{'':>14}{plan.total_tokens:>16.6g}")
    if report is not None:
        verdict = "within" if report.passed else "exceeds"
        lines.append(
            f"deviation {report.deviation:.4%} {verdict} tolerance "
            f"{report.tolerance:.4%} of stated budget {report.stated_budget:.6g}"
        )
    return "\n".join(lines)
