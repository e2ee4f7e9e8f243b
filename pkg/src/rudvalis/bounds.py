"""The eigenfunction lower bound on mixing time and its asymptotic constants."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable

from rudvalis.errors import LemmaInapplicableError, ValidationError
from rudvalis.shuffles import ShuffleSpec


@dataclass(frozen=True)
class BoundReport:
    kind: str
    n: int
    p: float | None
    epsilon: float
    psi_max: float
    gamma: float
    r: float
    t_lower: int
    theorem_constant: float
    reference_constant: float

    @property
    def deviation(self) -> float:
        """``|theorem_constant / reference_constant - 1|``."""
        return abs(self.theorem_constant / self.reference_constant - 1)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["deviation"] = self.deviation
        return out


def lower_bound_numerator(psi_max: float, gamma: float, r: float, epsilon: float) -> float:
    return math.log(psi_max) + 0.5 * math.log(gamma * epsilon / (4 * r))


def lower_bound_time(psi_max: float, gamma: float, r: float, epsilon: float) -> int:
    """Largest step count at which total variation is still >= 1 - epsilon.

    ``floor((ln psi_max + ln(gamma eps / 4r) / 2) / -ln(1 - gamma))``,
    clamped at 0 when the numerator is not positive.
    """
    if not (psi_max > 0 and r > 0 and 0 < epsilon < 1 and gamma > 0):
        raise ValidationError(
            f"need psi_max > 0, r > 0, 0 < epsilon < 1, gamma > 0; "
            f"got psi_max={psi_max}, r={r}, epsilon={epsilon}, gamma={gamma}"
        )
    if gamma > 0.5:
        raise LemmaInapplicableError(f"lemma-inapplicable: gamma={gamma} > 1/2 (Re(lambda) < 1/2)")
    num = lower_bound_numerator(psi_max, gamma, r, epsilon)
    if num <= 0:
        return 0
    return math.floor(num / -math.log1p(-gamma))


def reference_constant(spec: ShuffleSpec) -> float:
    """Leading coefficient ``c`` in ``t >= (1 - o(1)) c n^3 ln n``."""
    if spec.kind == "rudvalis":
        p = float(spec.p)
        return (1 - p) / p / (8 * math.pi**2)
    if spec.kind == "shift-or-swap":
        return 1 / (2 * math.pi**2)
    if spec.kind == "symmetrized":
        return 1 / math.pi**2
    raise ValidationError(f"unknown shuffle kind {spec.kind!r}")


def bound_report(spec: ShuffleSpec, epsilon: float, es=None, **solver_kwargs) -> BoundReport:
    from rudvalis.spectral import solve

    es = solve(spec, **solver_kwargs) if es is None else es
    n = spec.n
    t = lower_bound_time(es.psi_max, es.gamma, es.r_bound, epsilon)
    return BoundReport(
        kind=spec.kind,
        n=n,
        p=None if spec.p is None else float(spec.p),
        epsilon=epsilon,
        psi_max=es.psi_max,
        gamma=es.gamma,
        r=es.r_bound,
        t_lower=t,
        theorem_constant=t / (n**3 * math.log(n)),
        reference_constant=reference_constant(spec),
    )


def theorem_constants(
    spec: ShuffleSpec, epsilon: float, ns: Iterable[int], **solver_kwargs
) -> list[BoundReport]:
    """One :class:`BoundReport` per deck size in the increasing grid ``ns``."""
    ns = list(ns)
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValidationError(f"n-grid must be increasing, got {ns}")
    return [bound_report(spec.with_n(n), epsilon, **solver_kwargs) for n in ns]
