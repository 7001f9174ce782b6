"""Derived constants and the parameter-feasibility certificate.

The convergence analysis attaches a family of constants to a parameter
choice (alpha, beta, rho) on a given network/problem pair: the spectrum of
the step operator ``G = alpha*I - beta*P``, the auxiliary constants
xi_1..xi_9 and zeta_1..zeta_6, and the noise-sensitivity constants D_1, D_2
of the Lyapunov descent inequality. Validation is advisory: the runner
proceeds on failed range checks with a warning, since practical parameter
choices routinely sit outside the certified ranges.

Spectrum convention: the consensus eigenvalue of G (equal to alpha, on the
all-ones direction) is excluded from the "largest" eigenvalue, so
``lambda_G_max = alpha - beta * lambda_min_pos(P)`` and
``lambda_G_min = alpha - beta * lambda_max(P)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Network

__all__ = [
    "AlgoParams",
    "EtaSchedule",
    "DerivedConstants",
    "validate_parameters",
    "search_feasible_parameters",
]


class EtaSchedule:
    """Dual-mixing sequence eta^k in (0, 1), fixed before the run.

    Either a constant, or a seeded uniform sequence materialized lazily.
    The sequence has no effect on the primal trajectory; it only shapes the
    transmitted messages.
    """

    def __init__(self, kind: str, value: float = 0.5, seed: int | None = None):
        if kind not in ("constant", "random"):
            raise ValueError("kind must be 'constant' or 'random'")
        if kind == "constant" and not 0.0 < value < 1.0:
            raise ValueError("constant eta must lie in (0, 1)")
        self.kind = kind
        self.value = value
        self.seed = seed
        self._cache = np.empty(0)

    @classmethod
    def constant(cls, value: float = 0.5) -> "EtaSchedule":
        return cls("constant", value=value)

    @classmethod
    def random(cls, seed: int | None = None) -> "EtaSchedule":
        """A seeded uniform sequence; with ``seed=None`` the experiment
        runner derives the seed from the run seed."""
        return cls("random", seed=seed)

    def at(self, k: int) -> float:
        if self.kind == "constant":
            return self.value
        if self.seed is None:
            raise ValueError("random eta schedule was never given a seed")
        if k >= self._cache.size:
            # regenerate the whole prefix so values are index-stable
            rng = np.random.default_rng(self.seed)
            self._cache = rng.uniform(1e-12, 1.0, max(2 * (k + 1), 64))
        return float(self._cache[k])

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant:{self.value!r}"
        return f"random:{self.seed}"


@dataclass
class AlgoParams:
    """User-chosen algorithm parameters.

    ``alpha`` and ``beta`` define the step operator ``G = alpha*I - beta*P``
    (positive definite iff ``beta < alpha / lambda_max(P)``; the validator
    checks this, the runner only warns). ``rho`` is the penalty parameter of
    the augmented-Lagrangian dual step.
    """

    alpha: float
    beta: float
    rho: float
    eta: EtaSchedule
    horizon: int

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")


@dataclass(frozen=True)
class DerivedConstants:
    """Everything the analysis derives from (alpha, beta, rho) and the instance.

    ``flags`` holds one boolean per feasibility condition; ``certified`` is
    their conjunction. ``zeta6``/``zeta`` are populated only when a
    gradient-dominance constant was available.
    """

    alpha: float
    beta: float
    rho: float
    m_bar: float
    n_nodes: int
    lam_L_max: float
    lam_L_min_pos: float
    kappa_L: float
    lam_G_max: float
    lam_G_min: float
    kappa_G: float
    c_alpha: float
    c_theta: float
    gamma: float
    theta: float
    xi: tuple[float, ...]  # xi[0] unused; xi[1]..xi[9]
    zeta1: float
    zeta2: float
    zeta3: float
    zeta4: float
    zeta5: float
    d1: float
    d2: float
    lam_G_cap: float
    alpha_cap: float
    flags: dict[str, bool]
    zeta6: float | None = None
    zeta: float | None = None

    @property
    def certified(self) -> bool:
        return all(self.flags.values())

    def to_text(self) -> str:
        lines = [
            f"alpha = {self.alpha!r}",
            f"beta = {self.beta!r}",
            f"rho = {self.rho!r}",
            f"M_bar = {self.m_bar!r}",
            f"lambda_L_max = {self.lam_L_max!r}",
            f"lambda_L_min_pos = {self.lam_L_min_pos!r}",
            f"kappa_L = {self.kappa_L!r}",
            f"lambda_G_max = {self.lam_G_max!r}",
            f"lambda_G_min = {self.lam_G_min!r}",
            f"kappa_G = {self.kappa_G!r}",
            f"c_alpha = {self.c_alpha!r}",
            f"c_theta = {self.c_theta!r}",
            f"gamma = {self.gamma!r}",
            f"theta = {self.theta!r}",
        ]
        for idx in range(1, 10):
            lines.append(f"xi{idx} = {self.xi[idx]!r}")
        lines += [
            f"zeta1 = {self.zeta1!r}",
            f"zeta2 = {self.zeta2!r}",
            f"zeta3 = {self.zeta3!r}",
            f"zeta4 = {self.zeta4!r}",
            f"zeta5 = {self.zeta5!r}",
            f"zeta6 = {self.zeta6!r}",
            f"zeta = {self.zeta!r}",
            f"D1 = {self.d1!r}",
            f"D2 = {self.d2!r}",
            f"lambda_G_cap = {self.lam_G_cap!r}",
            f"alpha_cap = {self.alpha_cap!r}",
        ]
        for name, ok in self.flags.items():
            lines.append(f"check[{name}] = {'pass' if ok else 'FAIL'}")
        lines.append(f"certified = {self.certified}")
        return "\n".join(lines)


def _xi_block(c_alpha, c_theta, gamma, rho, lam_L_max, lam_L_min, kappa_G, m_bar):
    m2 = m_bar**2
    xi1 = 0.5 * rho * lam_L_max * (1.0 / kappa_G - c_theta) - (
        1.0 + 0.75 * m2 + 0.5 * m2 * c_alpha
    )
    xi2 = (
        0.5 * (1.0 + 1.0 / gamma) * rho**2 * lam_L_max
        + 0.25 * c_theta
        + 0.5 * c_theta * rho * lam_L_max
        + 2.75
        + m2 * (2.0 / gamma + 0.25 * c_theta * rho * lam_L_max + 0.5 * c_theta**2)
    )
    xi3 = 0.5 * c_theta - 2.5 * gamma - 1.0 / (rho**2 * lam_L_min**2)
    xi4 = 0.25 * c_theta**2
    xi5 = 1.75 * c_theta**2
    xi6 = 0.25
    xi7 = m_bar + 10.5 * m2
    denom8 = 2.0 * lam_L_max * (1.0 / kappa_G - c_theta)
    xi8 = (4.0 + 3.0 * m2 + 2.0 * m2 * c_alpha) / denom8 if denom8 > 0 else float("inf")
    inner9 = lam_L_min**2 * (0.5 * c_theta - 2.5 * gamma)
    xi9 = 1.0 / math.sqrt(inner9) if inner9 > 0 else float("inf")
    return (float("nan"), xi1, xi2, xi3, xi4, xi5, xi6, xi7, xi8, xi9)


def validate_parameters(
    params: AlgoParams,
    network: Network,
    m_bar: float,
    c_theta: float | None = None,
    gamma: float | None = None,
    c_alpha: float | None = None,
    nu: float | None = None,
    r_bar: float = 0.0,
) -> DerivedConstants:
    """Evaluate every derived constant and feasibility flag for the given run.

    The free constants default to interior points of their admissible
    ranges: ``c_alpha`` is pinned by the identity ``alpha = c_alpha *
    lambda_G_max``, ``c_theta`` to half of ``1/kappa_G`` and ``gamma`` to
    half of ``c_theta / 5``. ``nu`` (gradient dominance) and ``r_bar``
    (largest noise decay rate) feed the linear-rate constants when present.

    A complete-graph-like spectrum with ``kappa_L == 1`` makes the upper
    bound on ``c_alpha`` infinite; this is handled, not an error.
    """
    if not network.connected:
        raise ValueError("parameter validation requires a connected network")
    alpha, beta, rho = params.alpha, params.beta, params.rho
    lam_L_max, lam_L_min = network.lambda_max, network.lambda_min_pos
    kappa_L = network.kappa

    lam_G_max = alpha - beta * lam_L_min
    lam_G_min = alpha - beta * lam_L_max
    kappa_G = lam_G_max / lam_G_min if lam_G_min > 0 else float("inf")
    if c_alpha is None:
        c_alpha = alpha / lam_G_max if lam_G_max > 0 else float("inf")
    if c_theta is None:
        # for an indefinite G every range check fails anyway; keep the
        # report well-defined with an interior fallback
        c_theta = 0.5 / kappa_G if math.isfinite(kappa_G) and kappa_G >= 1 else 0.25
    if gamma is None:
        gamma = c_theta / 10.0
    theta = c_theta * lam_G_max

    xi = _xi_block(c_alpha, c_theta, gamma, rho, lam_L_max, lam_L_min, kappa_G, m_bar)
    _, xi1, xi2, xi3, xi4, xi5, xi6, xi7, xi8, xi9 = xi

    disc = xi4**2 + 4.0 * xi3 * xi5
    root_cap = (-xi4 + math.sqrt(disc)) / (2.0 * xi5) if disc >= 0 and xi5 > 0 else float("-inf")
    lam_G_cap = min(
        xi1 / xi2 if xi2 > 0 else float("-inf"),
        root_cap,
        xi6 / (c_alpha * xi7) if c_alpha * xi7 > 0 else float("-inf"),
    )
    alpha_cap = xi6 / xi7 if xi7 > 0 else float("inf")

    c_alpha_hi = kappa_L / (kappa_L - 1.0) if kappa_L > 1.0 else float("inf")
    flags = {
        "g_positive_definite": lam_G_min > 0,
        "free_constants": (
            1.0 < c_alpha < c_alpha_hi
            and 0.0 < c_theta < min(1.0, 1.0 / kappa_G)
            and 0.0 < gamma < c_theta / 5.0
        ),
        "rho_lower_bound": rho > max(xi8, xi9),
        "lambda_G_range": 0.0 < lam_G_max < lam_G_cap,
        "alpha_range": lam_G_max < alpha < alpha_cap,
    }

    # descent margins and noise-sensitivity constants
    c1 = lam_G_min * (theta + 1.0 / (rho * lam_L_max))
    c2 = lam_G_max * (theta + 1.0 / (rho * lam_L_min))
    zeta1 = 1.0 - c1 + math.sqrt((c1 - 1.0) ** 2 + theta**2)
    zeta2 = 1.0 - c2 + math.sqrt((c2 - 1.0) ** 2 + theta**2)
    zeta3 = 0.5 - zeta1 / 4.0
    zeta4 = max(0.5 + zeta2 / 4.0, 1.0)
    zeta5 = min(lam_G_max * (xi1 - xi2 * lam_G_max), alpha * (xi6 - xi7 * alpha))
    if lam_G_max > 0 and lam_G_min > 0:
        d1 = (
            kappa_G / lam_G_max
            + 2.0 * kappa_G**2 / lam_G_max**2
            + 2.0
            + 3.0 * rho**2 * lam_L_max**2
            + theta * rho**2 * lam_L_max**2 * lam_G_max
            + rho * lam_L_max * lam_G_max
            + 0.25 * theta**2 * rho * lam_L_max * lam_G_max**2
            + 2.0 / alpha
            + m_bar
            + 10.5 * m_bar**2
        )
        d2 = beta**2 * (2.0 + kappa_G / lam_G_max + 2.0 * kappa_G**2 / lam_G_max**2)
    else:
        d1 = d2 = float("inf")

    zeta6 = zeta = None
    if nu is not None and nu > 0:
        zeta6 = min(
            lam_G_max * (xi1 - xi2 * lam_G_max),
            lam_G_max**2 * (xi3 - xi4 * lam_G_max - xi5 * lam_G_max**2),
            alpha * nu * network.n / 4.0,
            zeta4 * (1.0 - r_bar**2),
        )
        zeta = zeta6 / zeta4
        flags["linear_rate_contraction"] = 0.0 < zeta < 1.0

    return DerivedConstants(
        alpha=alpha, beta=beta, rho=rho, m_bar=m_bar, n_nodes=network.n,
        lam_L_max=lam_L_max, lam_L_min_pos=lam_L_min, kappa_L=kappa_L,
        lam_G_max=lam_G_max, lam_G_min=lam_G_min, kappa_G=kappa_G,
        c_alpha=c_alpha, c_theta=c_theta, gamma=gamma, theta=theta,
        xi=xi, zeta1=zeta1, zeta2=zeta2, zeta3=zeta3, zeta4=zeta4,
        zeta5=zeta5, zeta6=zeta6, zeta=zeta, d1=d1, d2=d2,
        lam_G_cap=lam_G_cap, alpha_cap=alpha_cap, flags=flags,
    )


def _construct_feasible(
    network: Network,
    m_bar: float,
    c_alpha_frac: float,
    c_theta_frac: float,
    gamma_frac: float,
    rho_margin: float,
    lam_frac: float,
):
    """One deterministic pass of the feasible-parameter construction.

    The admissible ranges nest: (c_alpha, c_theta, gamma) pin kappa_G and
    the rho lower bound, rho pins the cap on lambda_G_max, and lambda_G_max
    pins (alpha, beta). Returns (alpha, beta, rho, c_theta, gamma) or None
    if a cap degenerates.
    """
    kappa_L = network.kappa
    c_alpha_hi = kappa_L / (kappa_L - 1.0) if kappa_L > 1.0 else 2.0
    c_alpha = 1.0 + c_alpha_frac * (c_alpha_hi - 1.0)
    kappa_G = 1.0 / (kappa_L - (kappa_L - 1.0) * c_alpha)
    if kappa_G <= 0:
        return None
    c_theta = c_theta_frac * min(1.0, 1.0 / kappa_G)
    gamma = gamma_frac * c_theta / 5.0
    xi = _xi_block(
        c_alpha, c_theta, gamma, 1.0, network.lambda_max, network.lambda_min_pos,
        kappa_G, m_bar,
    )
    rho = rho_margin * max(xi[8], xi[9])
    if not math.isfinite(rho) or rho <= 0:
        return None
    xi = _xi_block(
        c_alpha, c_theta, gamma, rho, network.lambda_max, network.lambda_min_pos,
        kappa_G, m_bar,
    )
    _, xi1, xi2, xi3, xi4, xi5, xi6, xi7, _, _ = xi
    disc = xi4**2 + 4.0 * xi3 * xi5
    if xi1 <= 0 or xi2 <= 0 or xi3 <= 0 or disc < 0:
        return None
    lam_cap = min(xi1 / xi2, (-xi4 + math.sqrt(disc)) / (2.0 * xi5), xi6 / (c_alpha * xi7))
    if lam_cap <= 0:
        return None
    lam_G_max = lam_frac * lam_cap
    alpha = c_alpha * lam_G_max
    beta = (alpha - lam_G_max) / network.lambda_min_pos
    return alpha, beta, rho, c_theta, gamma


def search_feasible_parameters(
    network: Network,
    m_bar: float,
    nu: float | None = None,
    r_bar: float = 0.0,
    eta: EtaSchedule | None = None,
    horizon: int = 0,
) -> tuple[AlgoParams, DerivedConstants]:
    """Grid-search the free constants for a certified parameter set.

    Scans interior fractions of each admissible range and keeps the
    candidate with the largest ``lambda_G_max`` (larger steps converge
    faster) among those passing every check. Raises if nothing certifies,
    which does not happen for connected graphs under the nested-range
    construction.
    """
    if not network.connected:
        raise ValueError("need a connected network")
    best: tuple[AlgoParams, DerivedConstants] | None = None
    for c_alpha_frac in (0.25, 0.5, 0.75):
        for c_theta_frac in (0.3, 0.5, 0.7):
            for gamma_frac in (0.3, 0.5):
                for rho_margin in (1.5, 2.0, 3.0):
                    built = _construct_feasible(
                        network, m_bar, c_alpha_frac, c_theta_frac, gamma_frac,
                        rho_margin, lam_frac=0.5,
                    )
                    if built is None:
                        continue
                    alpha, beta, rho, c_theta, gamma = built
                    params = AlgoParams(
                        alpha=alpha, beta=beta, rho=rho,
                        eta=eta or EtaSchedule.constant(0.5), horizon=horizon,
                    )
                    constants = validate_parameters(
                        params, network, m_bar, c_theta=c_theta, gamma=gamma,
                        nu=nu, r_bar=r_bar,
                    )
                    if not constants.certified:
                        continue
                    if best is None or constants.lam_G_max > best[1].lam_G_max:
                        best = (params, constants)
    if best is None:
        raise RuntimeError(
            f"no certified parameters found for kappa_L={network.kappa!r}, M_bar={m_bar!r}"
        )
    return best
