"""Constants for the four-stage construction."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional


@dataclass(frozen=True)
class Derived:
    """Quantities that depend on the partition size and the arc probability."""

    ell: int
    p: float
    delta: float
    q1: float
    q2: float

    @property
    def reserve_size(self) -> int:
        """|A0|: ``lambda ell p`` rounded up, at least one vertex."""
        return max(1, math.ceil(self.q1 - 1e-9))

    @property
    def q1_int(self) -> int:
        return max(1, math.ceil(self.q1 - 1e-9))

    @property
    def q2_int(self) -> int:
        return max(1, math.floor(self.q2 + 1e-9))


@dataclass(frozen=True)
class PipelineConfig:
    """Constants alpha, xi, eps, eps', rho, lambda plus run controls.

    ``atypical_eps`` is the tolerance used for the atypical set B; None
    means ``eps``. ``leftover_cap`` bounds the fraction of vertices left
    for absorption; None means ``10 sqrt(eps')``.
    """

    alpha: float = 0.3
    xi: float = 0.1
    eps: float = 0.01
    eps_prime: float = 0.05
    rho: float = 0.01
    lam: float = 0.004
    k: int = 20
    atypical_eps: Optional[float] = None
    significance: Optional[float] = 1e-9
    witness_budget: int = 200
    bank_size: int = 16
    reg_probes: int = 500
    leftover_cap: Optional[float] = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("invalid pipeline constants: " + "; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        chain = [("lambda", self.lam), ("rho", self.rho), ("eps_prime", self.eps_prime),
                 ("xi", self.xi), ("alpha", self.alpha)]
        if self.lam <= 0:
            out.append("lambda must be positive")
        for (na, a), (nb, b) in zip(chain, chain[1:]):
            if not a < b:
                out.append(f"need {na} < {nb}, got {a} >= {b}")
        if self.alpha >= 0.5:
            out.append("alpha must be below 1/2")
        if not 0 < self.eps <= self.eps_prime:
            out.append("need 0 < eps <= eps_prime")
        # q1 <= (1-eps')(1-eps) delta eps' ell reduces to a condition on the constants.
        cap = (1 - self.eps_prime) * (1 - self.eps) * self.xi * self.eps_prime
        if self.lam > cap:
            out.append(f"lambda = {self.lam} exceeds (1-eps')(1-eps) xi eps' = {cap:.6f}")
        if self.k < 5:
            out.append("k must be at least 5")
        if self.witness_budget < 1:
            out.append("witness_budget must be positive")
        return out

    @property
    def b_eps(self) -> float:
        return self.eps if self.atypical_eps is None else self.atypical_eps

    @property
    def cap_fraction(self) -> float:
        return 10 * math.sqrt(self.eps_prime) if self.leftover_cap is None else self.leftover_cap

    def derive(self, ell: int, p: float) -> Derived:
        return Derived(ell=ell, p=p, delta=self.xi * p, q1=self.lam * ell * p, q2=2 * ell * p)

    def with_overrides(self, **kw) -> "PipelineConfig":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        return d


DEFAULT = PipelineConfig()

# Looser constants under which the whole construction runs at n in the low
# thousands: the atypical tolerance lets B be a handful of vertices instead
# of everything, and the larger eps' keeps enough free vertices per part for
# the last random steps and the closing step.
DESK = PipelineConfig(xi=0.2, eps_prime=0.15, rho=0.02, atypical_eps=0.8)

PROFILES = {"default": DEFAULT, "desk": DESK}
