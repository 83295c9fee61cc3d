from __future__ import annotations

from typing import Any

from scanspectra import odm
from scanspectra.common.version import SCHEMA_VERSION
from scanspectra.odm.models.config import RunConfig

VERDICTS = ["pass", "fail", "info"]
RESULT_KINDS = ["spectral", "mixing", "certificate", "check", "table", "trajectory", "projection"]
MIXING_UNITS = ["site-steps", "sweeps"]


def judge(attained: float, bound: float, tolerance: float) -> str:
    """Inclusive comparison of the attained side of an inequality against its bound."""
    return "pass" if attained <= bound + tolerance else "fail"


@odm.model(description="Operator norm, gap and the two sides of one verified gap inequality")
class SpectralReport(odm.Model):
    label: str = odm.Keyword(description="Kernel provenance")
    check: str = odm.Keyword(description="Which inequality was evaluated")
    operator_norm: float = odm.Optional(odm.Float(min=0))
    gap: float = odm.Optional(odm.Float())
    laplacian_sigma2: float = odm.Optional(odm.Float(min=0))
    attained: float = odm.Optional(odm.Float(), description="Left hand side of the inequality")
    bound_value: float = odm.Optional(odm.Float(), description="Right hand side of the inequality")
    residual: float = odm.Optional(odm.Float(), description="bound_value - attained")
    verdict: str = odm.Enum(values=VERDICTS, default="info")
    extras: dict[str, float] = odm.mapping(odm.Float(), default={},
                                           description="Parameters entering the bound (delta, n, L, ...)")

    @property
    def passed(self) -> bool:
        return self.verdict != "fail"


@odm.model(description="Exact mixing time next to its spectral bounds")
class MixingReport(odm.Model):
    label: str = odm.Keyword()
    unit: str = odm.Enum(values=MIXING_UNITS)
    epsilon: float = odm.Float(min=0, max=1)
    t_max: int = odm.Integer(min=1)
    t_mix: int = odm.Optional(odm.Integer(min=0), description="Empty when the horizon was exceeded")
    exceeded: bool = odm.Boolean(default=False)
    site_updates: int = odm.Optional(odm.Integer(min=0), description="t_mix converted to single site updates")
    gap: float = odm.Optional(odm.Float())
    reversible: bool = odm.Boolean(default=False)
    spectral_upper: float = odm.Optional(odm.Float())
    reversible_lower: float = odm.Optional(odm.Float())
    verdict: str = odm.Enum(values=VERDICTS, default="info")

    @property
    def passed(self) -> bool:
        return self.verdict != "fail"


@odm.model(description="Linear time certificate for a random update sequence")
class Certificate(odm.Model):
    n: int = odm.Integer(min=1)
    length: int = odm.Integer(min=0)
    covered: bool = odm.Boolean()
    cover_time: int = odm.Optional(odm.Integer(min=1))
    sum_k: int = odm.Integer(min=0)
    cover_threshold: float = odm.Float(description="2 n log n")
    sum_threshold: float = odm.Float(description="2 n^2")
    accepted: bool = odm.Boolean()
    delta: float = odm.Optional(odm.Float(), description="Glauber gap the norm bound was instantiated with")
    norm_bound: float = odm.Optional(odm.Float(), description="1 - delta / (32 n) for accepted sequences")

    def implied_norm_bound(self, delta: float) -> float:
        return 1.0 - delta / (32.0 * self.n)

    @property
    def passed(self) -> bool:
        return self.accepted


@odm.model(description="Detailed balance and idempotence residuals of a kernel")
class ProjectionCheck(odm.Model):
    label: str = odm.Keyword()
    detailed_balance_residual: float = odm.Float(min=0)
    idempotence_residual: float = odm.Float(min=0)
    reversible: bool = odm.Boolean()
    idempotent: bool = odm.Boolean()

    @property
    def passed(self) -> bool:
        return self.reversible and self.idempotent


@odm.model(description="Outcome of a statistical or structural check")
class Verdict(odm.Model):
    check: str = odm.Keyword()
    verdict: str = odm.Enum(values=VERDICTS)
    values: dict[str, Any] = odm.mapping(odm.Any(), default={}, description="Every number behind the verdict")

    @property
    def passed(self) -> bool:
        return self.verdict != "fail"


@odm.model(description="A named entry of a report")
class NamedResult(odm.Model):
    name: str = odm.Keyword()
    kind: str = odm.Enum(values=RESULT_KINDS)
    verdict: str = odm.Enum(values=VERDICTS, default="info")
    payload: Any = odm.Any(description="as_primitives() of the underlying record")


@odm.model(description="Top level JSON document written by every subcommand")
class Report(odm.Model):
    tool_version: str = odm.Keyword()
    schema_version: int = odm.Integer(default=SCHEMA_VERSION)
    config: RunConfig = odm.compound(RunConfig)
    results: list[NamedResult] = odm.sequence(odm.compound(NamedResult), default=[])
    passed: bool = odm.Boolean(default=True)


@odm.model(description="One row of the rank-one projection family sweep")
class SweepRow(odm.Model):
    n: int = odm.Integer(min=2)
    delta: float = odm.Float(min=0, max=1)
    closed_form: float = odm.Float(min=0)
    direct_norm: float = odm.Float(min=0)
    bound: float = odm.Float(description="1 - delta / (8 (n + 1))")
    ratio: float = odm.Optional(odm.Float(), description="(1 - direct_norm) / (delta / (8 (n + 1)))")


@odm.model(description="Exact Glauber and scan mixing of the hardcore model on the complete graph")
class SeparationRow(odm.Model):
    n: int = odm.Integer(min=1)
    t_gd_steps: int = odm.Optional(odm.Integer(min=0))
    t_ss_sweeps: int = odm.Optional(odm.Integer(min=0))
    ratio: float = odm.Optional(odm.Float(), description="t_ss_sweeps / t_gd_steps")
    bound_check: str = odm.Enum(values=VERDICTS, default="info",
                                description="Scan sweeps against (8 (n + 1) / gamma_GD) log(1/(eps pi_min)) + 1")


@odm.model(description="Stopping times of one simulated scan trajectory")
class TrajectoryStats(odm.Model):
    n: int = odm.Integer(min=1)
    total_updates: int = odm.Integer(min=0)
    start: int = odm.Integer(min=0)
    tau: list[int] = odm.sequence(odm.Integer(min=0), default=[], description="Times the state becomes empty")
    nu: list[int] = odm.sequence(odm.Integer(min=1), default=[], description="Times the state leaves empty")
    final_state: int = odm.Integer(min=0)
    seed: int = odm.Integer(min=0)
    stream: int = odm.Integer(min=0, default=0)

    @property
    def interleaved(self) -> bool:
        events = []
        for s, tau in enumerate(self.tau):
            events.append(tau)
            if s < len(self.nu):
                events.append(self.nu[s])
        return (len(self.tau) - len(self.nu) in (0, 1)
                and all(a < b for a, b in zip(events, events[1:]))
                and all(t <= self.total_updates for t in events))
