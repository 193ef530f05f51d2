"""Parameters of neck regions and of the decomposition worklist."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

from ..errors import InputError


@dataclass(frozen=True)
class NeckParams:
    """``(k, delta, epsilon, nu, tau)`` plus the scale floor ``r_min``.

    The remaining fields are thresholds with defaults derived from ``delta``:
    ``beta_threshold`` (delta^2) for e-balls, ``drop_threshold`` (delta^6) for
    s-balls, ``n3_threshold`` (delta) for the summed beta^2 condition, and
    ``e_drop_constant`` (3^-(k+2)) scaling the certified distortion drop of
    e-ball children.
    """

    k: int
    delta: float
    epsilon: float
    nu: float
    tau: float = 0.05
    r_min: float = 0.01
    beta_threshold: Optional[float] = None
    drop_threshold: Optional[float] = None
    n3_threshold: Optional[float] = None
    e_drop_constant: Optional[float] = None
    delta_ceiling: float = 0.5
    max_fdepth: int = 12
    max_jobs: int = 200_000

    def __post_init__(self):
        if self.k < 1:
            raise InputError("k must be at least 1")
        if not 0 < self.delta < self.epsilon <= self.tau < 1:
            raise InputError("need 0 < delta < epsilon <= tau < 1")
        if not self.nu > 0:
            raise InputError("nu must be positive")
        if not self.r_min > 0:
            raise InputError("r_min must be positive")
        if self.delta > self.delta_ceiling:
            raise InputError(f"delta exceeds the configured ceiling {self.delta_ceiling}")
        for name in ("beta_threshold", "drop_threshold", "n3_threshold", "e_drop_constant"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InputError(f"{name} must be positive")

    @property
    def beta_thr(self) -> float:
        return self.delta ** 2 if self.beta_threshold is None else self.beta_threshold

    @property
    def drop_thr(self) -> float:
        return self.delta ** 6 if self.drop_threshold is None else self.drop_threshold

    @property
    def n3_thr(self) -> float:
        return self.delta if self.n3_threshold is None else self.n3_threshold

    @property
    def e_drop(self) -> float:
        return 3.0 ** -(self.k + 2) if self.e_drop_constant is None else self.e_drop_constant

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NeckParams":
        return cls(**d)
