"""Pairwise logistic match-up model for park effects.

Each plate appearance pits batting team ``i`` against defending team ``j``
in park ``k``; the event probability is::

    p_ijk = sigmoid(b_i - d_j - r_k)

Parameters are fitted by full-batch steepest descent on the summed squared
error ``J = sum (p - x)^2`` and the park parameter is turned into a
ratio-style factor by comparing the average matchup at park ``k`` with the
average matchup at the average park.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import expit

from .pa_model import Dataset, EventClass, check_target

log = logging.getLogger(__name__)

LOW_CONFIDENCE_PA = 500


class DataCorruptionError(ValueError):
    pass


class DivergenceError(RuntimeError):
    def __init__(self, message: str, learning_rate: float):
        super().__init__(message)
        self.learning_rate = learning_rate


@dataclass(frozen=True)
class ParameterSet:
    b: np.ndarray
    d: np.ndarray
    r: np.ndarray
    event: EventClass = EventClass.HOME_RUN
    season: int | None = None
    teams: tuple[str, ...] | None = None
    parks: tuple[str, ...] | None = None

    def __post_init__(self):
        for name in ("b", "d", "r"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.b.shape != self.d.shape:
            raise ValueError("b and d must have one entry per team")
        if self.r.shape[0] < self.b.shape[0]:
            raise ValueError("need at least one park per team")
        if not (np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.d))
                and np.all(np.isfinite(self.r))):
            raise ValueError("parameters must be finite")

    @classmethod
    def zeros(cls, n_teams: int, n_parks: int, value: float = 0.0, **kw) -> "ParameterSet":
        return cls(np.full(n_teams, value), np.full(n_teams, value), np.full(n_parks, value), **kw)

    @classmethod
    def for_dataset(cls, ds: Dataset, event: EventClass, value: float = 0.0,
                    season: int | None = None) -> "ParameterSet":
        return cls.zeros(ds.n_teams, ds.n_parks, value, event=EventClass(event),
                         season=season, teams=ds.teams, parks=ds.parks)

    @property
    def n_teams(self) -> int:
        return self.b.shape[0]

    @property
    def n_parks(self) -> int:
        return self.r.shape[0]

    def shifted(self, c_b: float, c_d: float) -> "ParameterSet":
        """Move along the gauge orbit b+c_b, d+c_d, r+(c_b-c_d)."""
        return replace(self, b=self.b + c_b, d=self.d + c_d, r=self.r + (c_b - c_d))

    def to_dict(self) -> dict:
        return {
            "event": self.event.value,
            "season": self.season,
            "teams": list(self.teams) if self.teams is not None else None,
            "parks": list(self.parks) if self.parks is not None else None,
            "b": self.b.tolist(),
            "d": self.d.tolist(),
            "r": self.r.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ParameterSet":
        return cls(
            np.asarray(data["b"], dtype=np.float64),
            np.asarray(data["d"], dtype=np.float64),
            np.asarray(data["r"], dtype=np.float64),
            event=EventClass(data["event"]),
            season=data.get("season"),
            teams=tuple(data["teams"]) if data.get("teams") is not None else None,
            parks=tuple(data["parks"]) if data.get("parks") is not None else None,
        )


def predict_probability(b_i, d_j, r_k):
    """Logistic match-up probability ``sigmoid(b_i - d_j - r_k)``; works on scalars or arrays."""
    p = expit(np.subtract(np.subtract(b_i, d_j), r_k))
    return float(p) if np.ndim(p) == 0 else p


def _check_indices(params: ParameterSet, ds: Dataset) -> None:
    if len(ds) == 0:
        return
    if (ds.batting.max() >= params.n_teams or ds.defense.max() >= params.n_teams
            or ds.park.max() >= params.n_parks):
        raise DataCorruptionError(
            f"dataset indices exceed parameter sizes (n_teams={params.n_teams}, n_parks={params.n_parks})")
    if min(ds.batting.min(), ds.defense.min(), ds.park.min()) < 0:
        raise DataCorruptionError("negative team or park index")


def dataset_probabilities(params: ParameterSet, ds: Dataset) -> np.ndarray:
    _check_indices(params, ds)
    return expit(params.b[ds.batting] - params.d[ds.defense] - params.r[ds.park])


def loss(params: ParameterSet, ds: Dataset, target: EventClass) -> float:
    """Sum of squared errors between predicted probabilities and outcomes."""
    x = ds.outcomes(target)
    if x.size == 0:
        return 0.0
    resid = dataset_probabilities(params, ds) - x
    return float(np.sum(resid * resid))


def gradients(params: ParameterSet, ds: Dataset, target: EventClass
              ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Partials of the squared-error loss with respect to b, d and r.

    Per plate appearance the batting parameter receives ``2 (p - x) p (1 - p)``
    and the defense and park parameters receive its negation. Accumulation
    follows dataset order.
    """
    x = ds.outcomes(target)
    if x.size == 0:
        return np.zeros(params.n_teams), np.zeros(params.n_teams), np.zeros(params.n_parks)
    p = dataset_probabilities(params, ds)
    g = 2.0 * (p - x) * p * (1.0 - p)
    gb = np.bincount(ds.batting, weights=g, minlength=params.n_teams)
    gd = -np.bincount(ds.defense, weights=g, minlength=params.n_teams)
    gr = -np.bincount(ds.park, weights=g, minlength=params.n_parks)
    return gb, gd, gr


def gauge_normalize(params: ParameterSet) -> ParameterSet:
    """Shift to mean(d) = mean(r) = 0, folding both shifts into b."""
    md = float(np.mean(params.d))
    mr = float(np.mean(params.r))
    return replace(params, b=params.b - md - mr, d=params.d - md, r=params.r - mr)


def proposed_pf(params: ParameterSet, k: int) -> float:
    """Park factor of park ``k``: average matchup at ``k`` over average matchup at the average park."""
    base = float(np.mean(params.b)) - float(np.mean(params.d))
    return float(expit(base - params.r[k]) / expit(base - np.mean(params.r)))


def proposed_pf_vector(params: ParameterSet) -> np.ndarray:
    base = float(np.mean(params.b)) - float(np.mean(params.d))
    return expit(base - params.r) / expit(base - np.mean(params.r))


@dataclass(frozen=True)
class FitConfig:
    """Steepest-descent settings.

    ``learning_rate=None`` means ``4 / n_pa``. With ``backtracking`` on, a
    step that raises the loss is rejected and the rate halved; accepted steps
    grow the rate by ``growth``, up to ``max_rate_factor`` times the
    starting rate (unbounded growth overflows on targets that never occur,
    where the loss keeps shrinking forever). Convergence is declared when
    the largest parameter change of an accepted step falls below
    ``convergence_tol``.
    """

    learning_rate: float | None = None
    max_epochs: int = 10_000
    convergence_tol: float = 1e-7
    init_value: float = 0.0
    gauge_fix: bool = True
    backtracking: bool = True
    growth: float = 1.1
    max_rate_factor: float = 10_000.0
    divergence_patience: int = 5

    def __post_init__(self):
        if self.learning_rate is not None and not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if self.growth < 1:
            raise ValueError("growth must be >= 1")
        if self.max_rate_factor < 1:
            raise ValueError("max_rate_factor must be >= 1")

    def resolved_rate(self, n_pa: int) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 4.0 / max(n_pa, 1)


@dataclass
class FitReport:
    params: ParameterSet
    epochs_run: int
    final_loss: float
    loss_trace: list[float]
    converged: bool
    config: FitConfig
    initial_rate: float
    final_rate: float
    n_pa: int
    park_pa: np.ndarray = field(repr=False, default=None)

    @property
    def low_confidence_parks(self) -> list[int]:
        if self.park_pa is None:
            return []
        return [k for k, n in enumerate(self.park_pa.tolist()) if n < LOW_CONFIDENCE_PA]

    def park_factors(self) -> np.ndarray:
        return proposed_pf_vector(self.params)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "config": asdict(self.config),
            "epochs_run": self.epochs_run,
            "converged": self.converged,
            "final_loss": self.final_loss,
            "initial_learning_rate": self.initial_rate,
            "final_learning_rate": self.final_rate,
            "n_pa": self.n_pa,
            "park_pa": self.park_pa.tolist() if self.park_pa is not None else None,
            "low_confidence_parks": self.low_confidence_parks,
            "pf_proposed": self.park_factors().tolist(),
            "loss_trace": self.loss_trace,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "FitReport":
        park_pa = data.get("park_pa")
        return cls(
            params=ParameterSet.from_dict(data["params"]),
            epochs_run=data["epochs_run"],
            final_loss=data["final_loss"],
            loss_trace=list(data["loss_trace"]),
            converged=data["converged"],
            config=FitConfig(**data["config"]),
            initial_rate=data["initial_learning_rate"],
            final_rate=data["final_learning_rate"],
            n_pa=data["n_pa"],
            park_pa=np.asarray(park_pa) if park_pa is not None else None,
        )


class _Triples:
    """Sufficient statistics: PA and event counts per distinct (i, j, k).

    Loss and gradients depend on the data only through these counts, so an
    epoch costs O(#triples) instead of O(#PA).
    """

    def __init__(self, ds: Dataset, target: EventClass):
        x = ds.outcomes(target)
        key = np.stack([ds.batting, ds.defense, ds.park])
        if key.shape[1]:
            uniq, inverse = np.unique(key, axis=1, return_inverse=True)
            inverse = inverse.reshape(-1)
        else:
            uniq, inverse = np.zeros((3, 0), dtype=np.intp), np.zeros(0, dtype=np.intp)
        self.i, self.j, self.k = (u.astype(np.intp) for u in uniq)
        self.n = np.bincount(inverse, minlength=uniq.shape[1]).astype(np.float64)
        self.s = np.bincount(inverse, weights=x, minlength=uniq.shape[1])
        self.n_teams, self.n_parks = ds.n_teams, ds.n_parks

    def loss_and_grad(self, b, d, r, with_grad=True):
        p = expit(b[self.i] - d[self.j] - r[self.k])
        # sum over PAs of (p - x)^2 = s (1 - p)^2 + (n - s) p^2
        J = float(np.sum(self.s * (1.0 - p) ** 2 + (self.n - self.s) * p * p))
        if not with_grad:
            return J, None
        g = 2.0 * (self.n * p - self.s) * p * (1.0 - p)
        gb = np.bincount(self.i, weights=g, minlength=self.n_teams)
        gd = -np.bincount(self.j, weights=g, minlength=self.n_teams)
        gr = -np.bincount(self.k, weights=g, minlength=self.n_parks)
        return J, (gb, gd, gr)


def fit(ds: Dataset, target: EventClass, cfg: FitConfig | None = None,
        season: int | None = None) -> FitReport:
    """Fit b, d, r for one event class by full-batch steepest descent."""
    cfg = cfg or FitConfig()
    target = check_target(target)
    n_pa = len(ds)
    if n_pa == 0:
        raise ValueError("cannot fit an empty dataset")
    if season is None and len(ds.seasons) == 1:
        season = ds.seasons[0]

    as_batter = np.bincount(ds.batting, minlength=ds.n_teams)
    as_defense = np.bincount(ds.defense, minlength=ds.n_teams)
    missing = [t for t, nb, nd in zip(ds.teams, as_batter, as_defense) if nb == 0 or nd == 0]
    if missing:
        warnings.warn(f"teams without both batting and defensive PAs: {missing}", stacklevel=2)

    stats = _Triples(ds, target)
    b = np.full(ds.n_teams, cfg.init_value, dtype=np.float64)
    d = b.copy()
    r = np.full(ds.n_parks, cfg.init_value, dtype=np.float64)

    alpha = initial = cfg.resolved_rate(n_pa)
    J, grad = stats.loss_and_grad(b, d, r)
    trace: list[float] = []
    converged = False
    rises = 0
    epochs = 0
    while epochs < cfg.max_epochs:
        epochs += 1
        gb, gd, gr = grad
        step = alpha * max(np.max(np.abs(gb)), np.max(np.abs(gd)), np.max(np.abs(gr)))
        nb, nd, nr = b - alpha * gb, d - alpha * gd, r - alpha * gr
        J_new, grad_new = stats.loss_and_grad(nb, nd, nr)
        if not np.isfinite(J_new):
            raise DivergenceError(f"loss became non-finite at learning rate {alpha:g}", alpha)
        if J_new <= J or not cfg.backtracking:
            rises = rises + 1 if J_new > J else 0
            if rises >= cfg.divergence_patience:
                raise DivergenceError(
                    f"loss increased for {rises} consecutive epochs at learning rate {alpha:g}", alpha)
            b, d, r, J, grad = nb, nd, nr, J_new, grad_new
            trace.append(J)
            if step < cfg.convergence_tol:
                converged = True
                break
            if cfg.backtracking:
                alpha = min(alpha * cfg.growth, initial * cfg.max_rate_factor)
        else:
            trace.append(J)
            if step < cfg.convergence_tol:
                # even the rejected step was below tolerance: at the numerical floor
                converged = True
                break
            rises += 1
            if rises >= cfg.divergence_patience:
                raise DivergenceError(
                    f"loss increased for {rises} consecutive epochs at learning rate {alpha:g}", alpha)
            alpha *= 0.5

    params = ParameterSet(b, d, r, event=target, season=season, teams=ds.teams, parks=ds.parks)
    if cfg.gauge_fix:
        params = gauge_normalize(params)
    with np.errstate(invalid="ignore", divide="ignore"):
        saturated = not np.all(np.isfinite(proposed_pf_vector(params)))
    if saturated:
        raise DivergenceError(
            f"probabilities saturated at learning rate {alpha:g}; park factors are undefined", alpha)
    if not converged:
        log.warning("%s fit stopped after %d epochs without converging", target.value, epochs)
    return FitReport(
        params=params, epochs_run=epochs, final_loss=J, loss_trace=trace,
        converged=converged, config=cfg, initial_rate=initial, final_rate=alpha,
        n_pa=n_pa, park_pa=np.bincount(ds.park, minlength=ds.n_parks),
    )


def pf_rows(report: FitReport) -> list[tuple]:
    """``(season, event, park, r, pf_proposed)`` rows for the PF table."""
    params = report.params
    pfs = proposed_pf_vector(params)
    parks = params.parks or tuple(str(k) for k in range(params.n_parks))
    return [(params.season, params.event.value, parks[k], float(params.r[k]), float(pfs[k]))
            for k in range(params.n_parks)]
