"""Brute-force reference propagators.

Everything here is deliberately independent of the closed spectral forms in
the other modules: the matrix exponential goes through scaling-and-squaring,
and time-ordered evolution is a plain midpoint-rule product of short-time
exponentials (earliest factor applied first). For commuting generator
families the ordering is immaterial and the product converges at second
order to exp of the integrated generator; for noncommuting ones it converges
to the genuinely time-ordered propagator, which is exactly what makes it a
useful negative control.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
import scipy.linalg

from .errors import OverflowInExponentialError
from .superop import SuperOperator

#: Default number of product steps per unit time for state evolution.
DEFAULT_STEPS_PER_UNIT = 4096

MatrixFunction = Callable[[float], np.ndarray]


def expm(m: Union[np.ndarray, SuperOperator]) -> Union[np.ndarray, SuperOperator]:
    """Dense matrix exponential (Pade scaling-and-squaring).

    Accepts a plain square matrix or a :class:`SuperOperator` and returns
    the same kind. Overflow is reported, never clamped.
    """
    if isinstance(m, SuperOperator):
        return SuperOperator(m.dim, expm(m.matrix))
    m = np.asarray(m)
    result = scipy.linalg.expm(m)
    if not np.all(np.isfinite(result)):
        raise OverflowInExponentialError(
            f"matrix exponential overflowed (input norm {np.linalg.norm(m):.3e})")
    return result


def ordered_exp(lfun: MatrixFunction, t0: float, t: float, steps: int) -> np.ndarray:
    """Time-ordered exponential by a midpoint product of step exponentials.

    Computes prod_j exp(h L(t_j + h/2)) with the earliest factor rightmost,
    i.e. applied first. Exact for constant generators; order h^2 otherwise.
    """
    if steps < 1:
        raise ValueError(f"need at least one step, got {steps}")
    h = (t - t0) / steps
    sample = np.asarray(lfun(t0 + h / 2.0))
    total = np.eye(sample.shape[0], dtype=complex)
    for j in range(steps):
        midpoint = t0 + (j + 0.5) * h
        total = expm(h * np.asarray(lfun(midpoint))) @ total
    return total


@dataclass(frozen=True)
class SteppedPropagation:
    """Ordered-product propagator with a Richardson error estimate.

    ``error_estimate`` is the norm difference between the ``steps`` and
    ``2 * steps`` runs; for the second-order midpoint scheme the finer run's
    true error is about a third of it.
    """

    steps: int
    step_size: float
    propagator: np.ndarray
    error_estimate: float


def ordered_exp_with_error(lfun: MatrixFunction, t0: float, t: float,
                           steps: int) -> SteppedPropagation:
    coarse = ordered_exp(lfun, t0, t, steps)
    fine = ordered_exp(lfun, t0, t, 2 * steps)
    estimate = float(np.linalg.norm(fine - coarse))
    return SteppedPropagation(steps=2 * steps, step_size=(t - t0) / (2 * steps),
                              propagator=fine, error_estimate=estimate)


def evolve_state(lfun: Callable[[float], SuperOperator], rho0: np.ndarray,
                 times: Sequence[float],
                 steps_per_unit: int = DEFAULT_STEPS_PER_UNIT) -> list:
    """March a state along a time grid with cumulative ordered products.

    ``lfun`` returns the generator at a given time as a SuperOperator; the
    trajectory starts from rho0 at times[0].
    """
    times = np.asarray(times, dtype=float)
    rho = np.asarray(rho0, dtype=complex).copy()
    trajectory = [rho.copy()]
    for left, right in zip(times[:-1], times[1:]):
        span = right - left
        steps = max(1, int(np.ceil(span * steps_per_unit)))
        segment = ordered_exp(lambda u: lfun(u).matrix, left, right, steps)
        rho = (segment @ rho.reshape(-1, order="F")).reshape(rho.shape, order="F")
        trajectory.append(rho.copy())
    return trajectory
