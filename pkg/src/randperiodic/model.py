"""Problem data: drift family, noise amplitudes, period, initial condition.

The drift acts mode by mode (so its Galerkin projection is exact and the
implicit solve decouples into scalars), the noise is diagonal with
power-law mode amplitudes, and both carry one sinusoidal time profile of
the common period.  ``validate`` evaluates every structural requirement
and the stepsize relations as plain numbers -- failed checks are data,
never exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import zeta

from .noise import initial_normals
from .spectral import GalerkinState, SpectralOperator

__all__ = [
    "DriftSpec",
    "NoiseSpec",
    "InitialSpec",
    "ModelSpec",
    "Check",
    "ValidationReport",
    "drift_eval",
    "noise_amplitude",
    "validate",
    "make_initial",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DriftSpec:
    """Mode-diagonal drift: entry i is -c u_i + a tanh(u_i) + b beta(t) [i = forcing_mode].

    ``beta`` is the fixed profile sin(2 pi t / period).  The affine family has
    a = 0; the tanh family needs a < c so the map stays strictly dissipative.
    Per-mode construction gives the Lipschitz constant c + a and the one-sided
    (dissipativity) constant c - a exactly.
    """

    family: str
    c: float
    a: float = 0.0
    b: float = 0.0
    forcing_mode: int = 1
    period: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in ("affine", "tanh"):
            raise ValueError(f"unknown drift family {self.family!r}")
        if self.family == "affine" and self.a != 0.0:
            raise ValueError("affine drift has no tanh gain; use the tanh family")
        if self.c <= 0.0:
            raise ValueError("linear decay rate c must be positive")
        if self.a < 0.0:
            raise ValueError("tanh gain a must be nonnegative")
        if self.period <= 0.0:
            raise ValueError("forcing period must be positive")
        if self.forcing_mode < 1:
            raise ValueError("forcing mode is 1-based")

    @property
    def lipschitz(self) -> float:
        return self.c + self.a

    @property
    def dissipativity(self) -> float:
        return self.c - self.a

    @property
    def time_holder(self) -> float:
        """Constant C for |f(t1,u)-f(t2,u)| <= C (1+|u|) |t1-t2|^(1/2) on gaps <= period."""
        return abs(self.b) * _TWO_PI / self.period * math.sqrt(self.period)

    def beta(self, t: float) -> float:
        return math.sin(_TWO_PI * t / self.period)

    def eval_array(self, t: float, coeffs: np.ndarray) -> np.ndarray:
        """Drift of a coefficient array; rows are states when 2-D."""
        out = -self.c * coeffs
        if self.a != 0.0:
            out = out + self.a * np.tanh(coeffs)
        if self.b != 0.0:
            k = self.forcing_mode - 1
            if k < coeffs.shape[-1]:
                out[..., k] += self.b * self.beta(t)
        return out


def drift_eval(d: DriftSpec, t: float, u: Union[GalerkinState, np.ndarray]) -> np.ndarray:
    """Evaluate the drift at time t on a state or coefficient vector."""
    coeffs = u.coeffs if isinstance(u, GalerkinState) else np.asarray(u, dtype=float)
    if not np.isfinite(coeffs).all():
        raise ValueError("drift input must be finite")
    return d.eval_array(t, coeffs)


@dataclass(frozen=True)
class NoiseSpec:
    """Diagonal noise: mode i has amplitude rho(t) gamma_i with gamma_i = sigma lambda_i^(-q).

    rho(t) = 1 + eps sin(2 pi t / period).  q > 1/2 keeps the amplitude
    sequence square-summable, so the total noise intensity is finite.
    """

    operator: SpectralOperator
    sigma: float
    q: float = 1.0
    eps: float = 0.0
    period: float = 1.0

    def __post_init__(self) -> None:
        if self.sigma < 0.0:
            raise ValueError("noise scale sigma must be nonnegative")
        if self.q <= 0.5:
            raise ValueError("mode decay exponent q must exceed 1/2")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError("time-profile amplitude eps must lie in [0, 1)")
        if self.period <= 0.0:
            raise ValueError("noise period must be positive")

    def rho(self, t: float) -> float:
        return 1.0 + self.eps * math.sin(_TWO_PI * t / self.period)

    def mode_amplitudes(self, n: int) -> np.ndarray:
        return self.sigma * self.operator.eigenvalues(n) ** (-self.q)

    def _amplitude_sq_sum(self) -> float:
        """Sum over all modes of gamma_i^2 / sigma^2 (exact for the Dirichlet family)."""
        if self.operator.kind == "dirichlet":
            return float(math.pi ** (-4.0 * self.q) * zeta(4.0 * self.q))
        lam = np.asarray(self.operator.table, dtype=float)
        return float(np.sum(lam ** (-2.0 * self.q)))

    def sup_bound(self) -> float:
        """C_g: supremum over time of the total noise intensity."""
        return (1.0 + self.eps) * self.sigma * math.sqrt(self._amplitude_sq_sum())

    def time_lipschitz(self) -> float:
        """Lipschitz-in-time constant of the total noise intensity."""
        return self.sigma * math.sqrt(self._amplitude_sq_sum()) * _TWO_PI * self.eps / self.period


def noise_amplitude(nspec: NoiseSpec, t: float, i: int) -> float:
    """Amplitude of mode i at time t; periodic in t with the model period."""
    if i < 1:
        raise ValueError("mode indices are 1-based")
    gamma = nspec.sigma * nspec.operator.eigenvalue(i) ** (-nspec.q)
    return nspec.rho(t) * gamma


@dataclass(frozen=True)
class InitialSpec:
    """Initial condition family.

    * ``zero``        -- the origin.
    * ``single-mode`` -- ``value`` in mode ``mode``, zero elsewhere.
    * ``hr-random``   -- independent centered Gaussians with standard
      deviation scale * lambda_i^(-(r+1)/2 - decay_margin); the margin keeps
      the regularity-r norm square-integrable.
    """

    family: str = "zero"
    mode: int = 1
    value: float = 0.0
    scale: float = 1.0
    decay_margin: float = 0.01

    def __post_init__(self) -> None:
        if self.family not in ("zero", "single-mode", "hr-random"):
            raise ValueError(f"unknown initial-data family {self.family!r}")
        if self.mode < 1:
            raise ValueError("mode indices are 1-based")
        if self.decay_margin <= 0.0:
            raise ValueError("decay margin must be positive")


@dataclass(frozen=True)
class ModelSpec:
    """Full problem description consumed by the integrator and experiments."""

    operator: SpectralOperator
    drift: DriftSpec
    noise: NoiseSpec
    tau: float
    initial: InitialSpec = field(default_factory=InitialSpec)
    regularity: float = 1.0
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.tau <= 0.0:
            raise ValueError("period tau must be positive")
        if self.drift.period != self.tau:
            raise ValueError("drift period must equal the model period")
        if self.noise.period != self.tau:
            raise ValueError("noise period must equal the model period")
        if self.noise.operator is not self.operator and self.noise.operator != self.operator:
            raise ValueError("noise must reference the model operator")
        if not 0.0 < self.regularity <= 1.0:
            raise ValueError("regularity r must lie in (0, 1]")
        if self.alpha is not None and self.alpha <= 0.0:
            raise ValueError("semigroup decay exponent alpha must be positive")

    @classmethod
    def create(
        cls,
        *,
        operator: SpectralOperator | None = None,
        tau: float = 1.0,
        drift_family: str = "affine",
        c: float = 1.0,
        a: float = 0.0,
        b: float = 0.0,
        forcing_mode: int = 1,
        sigma: float = 0.0,
        q: float = 1.0,
        eps: float = 0.0,
        initial: InitialSpec | None = None,
        regularity: float = 1.0,
        alpha: float | None = None,
    ) -> "ModelSpec":
        """Assemble a model from scalars, wiring the shared period through."""
        op = operator if operator is not None else SpectralOperator()
        return cls(
            operator=op,
            drift=DriftSpec(
                family=drift_family, c=c, a=a, b=b, forcing_mode=forcing_mode, period=tau
            ),
            noise=NoiseSpec(operator=op, sigma=sigma, q=q, eps=eps, period=tau),
            tau=tau,
            initial=initial if initial is not None else InitialSpec(),
            regularity=regularity,
            alpha=alpha,
        )

    @property
    def alpha_value(self) -> float:
        """Semigroup decay exponent; defaults to the smallest eigenvalue."""
        return self.operator.lambda1 if self.alpha is None else self.alpha

    def growth_bound(self) -> float:
        """Linear growth constant: |f(t,u)| <= C (1 + |u|) for all t, u.

        Built from |f(0,0)| plus the larger of the state-Lipschitz and
        time-Hoelder constants, scaled by (1 + sqrt(tau)); with the effective
        constant the bound provably covers the sinusoidal forcing.
        """
        f00 = abs(self.drift.b * self.drift.beta(0.0))
        c_eff = max(self.drift.lipschitz, self.drift.time_holder)
        return f00 + c_eff * (1.0 + math.sqrt(self.tau))

    def initial_second_moment(self, n: int) -> float:
        """Exact E |xi|^2 for the configured initial-data family at truncation n."""
        ini = self.initial
        if ini.family == "zero":
            return 0.0
        if ini.family == "single-mode":
            return float(ini.value**2) if ini.mode <= n else 0.0
        lam = self.operator.eigenvalues(n)
        std = ini.scale * lam ** (-(self.regularity + 1.0) / 2.0 - ini.decay_margin)
        return float(np.sum(std * std))

    def fingerprint(self) -> str:
        """Short stable hash binding outputs to the exact model."""
        import hashlib

        text = repr(
            (
                self.operator.kind,
                self.operator.table,
                self.drift,
                (self.noise.sigma, self.noise.q, self.noise.eps, self.noise.period),
                self.tau,
                self.initial,
                self.regularity,
                self.alpha,
            )
        )
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def make_initial(m: ModelSpec, n: int, seed: int, time_index: int = 0) -> GalerkinState:
    """Draw the initial condition at truncation n, deterministic in (spec, seed).

    Mode draws are keyed per mode, so the first n coefficients agree across
    truncations -- the projection of one initial condition, not a re-draw.
    """
    if n < 1:
        raise ValueError("truncation must be at least 1")
    ini = m.initial
    if ini.family == "zero":
        coeffs = np.zeros(n)
    elif ini.family == "single-mode":
        coeffs = np.zeros(n)
        if ini.mode <= n:
            coeffs[ini.mode - 1] = ini.value
    else:
        lam = m.operator.eigenvalues(n)
        std = ini.scale * lam ** (-(m.regularity + 1.0) / 2.0 - ini.decay_margin)
        coeffs = std * initial_normals(seed, n)
    return GalerkinState(coeffs=coeffs, time_index=time_index)


@dataclass
class Check:
    """One evaluated requirement: the relation, the numbers, and the verdict."""

    name: str
    category: str  # "assumption" | "stepsize" | "scheme"
    relation: str
    values: dict
    passed: bool
    note: str = ""


@dataclass
class ValidationReport:
    """Outcome of ``validate``: per-check verdicts plus derived constants.

    ``passed`` covers the structural (assumption) checks that gate
    experiments; the stepsize relations are reported alongside as data
    because they are sufficient-theory conditions, far more conservative
    than anything the integrator needs to run stably.
    """

    checks: list
    derived: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.category == "assumption")

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failing(self) -> list:
        return [c for c in self.checks if not c.passed]

    def format(self) -> str:
        lines = ["check                          category    pass  relation"]
        for c in self.checks:
            vals = ", ".join(f"{k}={v:.6g}" for k, v in c.values.items())
            status = "ok" if c.passed else "FAIL"
            lines.append(f"{c.name:<30} {c.category:<10} {status:>5}  {c.relation}  [{vals}]")
        lines.append("derived: " + ", ".join(f"{k}={v:.6g}" for k, v in self.derived.items()))
        return "\n".join(lines)


def _mean_square_stepsize_lhs(h: float, lam_n: float, c_hat: float, c_lip: float, c_g: float) -> float:
    """Left side of the mean-square stepsize relation at stepsize h."""
    c_n = 3.0 * max(lam_n**2, c_hat**2) * (1.0 + h) + 3.0 * c_g**2
    return (5.0 * c_hat * math.sqrt(lam_n) * (1.0 + c_n * h) + 2.0 * c_lip * math.sqrt(c_n)) * math.sqrt(h)


def _bisect_stepsize(lam_n: float, c_hat: float, c_lip: float, c_dis: float, c_g: float) -> float:
    """Largest h in (0, 1) satisfying the mean-square stepsize relation."""
    target = 2.0 * c_dis
    if _mean_square_stepsize_lhs(1.0, lam_n, c_hat, c_lip, c_g) <= target:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0:
            break
        if _mean_square_stepsize_lhs(mid, lam_n, c_hat, c_lip, c_g) <= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return lo


def validate(m: ModelSpec, n: int, h: float) -> ValidationReport:
    """Evaluate every structural assumption and stepsize relation at (n, h).

    Total by construction: each check is evaluated independently and a crash
    inside one check is recorded as a failure of that check, never raised.
    Dissipativity-type relations use the one-sided constant, Lipschitz-type
    relations the two-sided one.
    """
    if n < 1:
        raise ValueError("truncation must be at least 1")
    if h <= 0.0 or not math.isfinite(h):
        raise ValueError("stepsize must be positive and finite")

    checks: list = []
    derived: dict = {}

    def run(name: str, category: str, relation: str, fn) -> None:
        try:
            values, passed = fn()
            checks.append(Check(name, category, relation, values, bool(passed)))
        except Exception as exc:  # totality: a crashing check is a failing check
            checks.append(Check(name, category, relation, {}, False, note=f"error: {exc}"))

    lam1 = m.operator.lambda1
    c_lip = m.drift.lipschitz
    c_dis = m.drift.dissipativity
    c_hat = m.growth_bound()
    alpha = m.alpha_value

    def chk_operator():
        lam = m.operator.eigenvalues(n)
        ok = lam[0] > 0.0 and np.all(np.diff(lam) >= 0.0) and (n == 1 or lam[-1] > lam[0])
        return {"lambda_1": lam[0], "lambda_n": lam[-1]}, ok

    def chk_initial():
        c_xi_sq = m.initial_second_moment(n)
        return {"E_xi_sq": c_xi_sq}, math.isfinite(c_xi_sq)

    def chk_drift():
        ok = c_dis > 0.0 and c_dis <= c_lip
        return {"C_f_lip": c_lip, "C_f_dis": c_dis, "C_beta": m.drift.time_holder}, ok

    def chk_noise():
        c_g = m.noise.sup_bound()
        c_g_time = m.noise.time_lipschitz()
        ok = math.isfinite(c_g) and c_g_time <= c_g + 1e-15
        return {"C_g": c_g, "C_g_time": c_g_time, "q": m.noise.q}, ok

    def chk_gap():
        return {"C_f_dis": c_dis, "lambda_1": lam1}, c_dis < lam1

    def chk_alpha():
        return {"alpha": alpha, "lambda_1": lam1}, 0.0 < alpha <= lam1

    def chk_shift():
        ratio = m.tau / h
        mm = round(ratio)
        ok = mm >= 1 and abs(ratio - mm) <= 1e-9 * max(1.0, ratio)
        return {"tau_over_h": ratio, "m": float(mm)}, ok

    def chk_growth():
        ok = 2.0 * lam1 > c_hat and alpha > c_lip
        return {"two_lambda_1": 2.0 * lam1, "C_f_hat": c_hat, "alpha": alpha, "C_f_lip": c_lip}, ok

    def chk_mean_square_h():
        lam_n = m.operator.eigenvalue(n)
        c_g = m.noise.sup_bound()
        lhs = _mean_square_stepsize_lhs(h, lam_n, c_hat, c_lip, c_g)
        return {"lhs": lhs, "rhs": 2.0 * c_dis, "h": h}, lhs <= 2.0 * c_dis

    def chk_pair_h():
        lam_n = m.operator.eigenvalue(n)
        bound = c_dis / (c_lip * (lam_n + math.sqrt(lam_n**2 + c_lip**2)))
        return {"h": h, "h_max": bound}, h <= bound

    def chk_solver():
        factor = h * c_lip * math.exp(-lam1 * h)
        return {"factor": factor}, factor < 1.0

    run("operator-spectrum", "assumption", "0 < lambda_1 <= ... <= lambda_n, lambda_n > lambda_1", chk_operator)
    run("initial-data-moment", "assumption", "E|xi|^2 < inf", chk_initial)
    run("drift-constants", "assumption", "0 < C_f_dis <= C_f_lip", chk_drift)
    run("noise-bound", "assumption", "sum gamma_i^2 < inf and C_g_time <= C_g", chk_noise)
    run("dissipativity-gap", "assumption", "C_f_dis < lambda_1", chk_gap)
    run("semigroup-decay", "assumption", "0 < alpha <= lambda_1", chk_alpha)
    run("shift-alignment", "assumption", "tau = m h with integer m >= 1", chk_shift)
    run("growth-gap", "assumption", "2 lambda_1 > C_f_hat and alpha > C_f_lip", chk_growth)
    run("stepsize-mean-square", "stepsize", "mean-square stepsize relation lhs <= 2 C_f_dis", chk_mean_square_h)
    run("stepsize-two-solution", "stepsize", "h <= C_f_dis / (C_f_lip (lambda_n + sqrt(lambda_n^2 + C_f_lip^2)))", chk_pair_h)
    run("implicit-solver-contraction", "scheme", "h C_f_lip exp(-lambda_1 h) < 1", chk_solver)

    try:
        lam_n = m.operator.eigenvalue(n)
        c_g = m.noise.sup_bound()
        c_n = 3.0 * max(lam_n**2, c_hat**2) * (1.0 + h) + 3.0 * c_g**2
        h_pair = c_dis / (c_lip * (lam_n + math.sqrt(lam_n**2 + c_lip**2)))
        h_ms = _bisect_stepsize(lam_n, c_hat, c_lip, c_dis, c_g)
        derived = {
            "lambda_1": lam1,
            "lambda_n": lam_n,
            "alpha": alpha,
            "C_f_lip": c_lip,
            "C_f_dis": c_dis,
            "C_beta": m.drift.time_holder,
            "C_f_hat": c_hat,
            "C_g": c_g,
            "C_g_time": m.noise.time_lipschitz(),
            "C_xi_sq": m.initial_second_moment(n),
            "C_n": c_n,
            "h_max_two_solution": h_pair,
            "h_max_mean_square": h_ms,
            "h_suggested": min(h_pair, h_ms),
        }
    except Exception:  # keep the report usable even if a constant blows up
        derived = {"lambda_1": lam1, "C_f_lip": c_lip, "C_f_dis": c_dis}

    return ValidationReport(checks=checks, derived=derived)
