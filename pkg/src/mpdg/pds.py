"""Production-destruction ODE systems.

A production-destruction system (PDS) for M species is

    dc_i/dt = P_i(c) - D_i(c),   P_i = sum_j p_ij(c),  D_i = sum_j d_ij(c),

where p_ij(c) >= 0 is the rate at which species j is converted into
species i and the destruction matrix is the transpose of the production
matrix, d_ij = p_ji. Two structural facts follow and are what every
Patankar-type integrator in this package relies on:

  * conservation: sum_i (P_i - D_i) = 0 identically, and
  * positivity: solutions stay nonnegative provided d_ij(c) = 0
    whenever c_i = 0 (nothing is destroyed out of an absent species).

This module only defines systems and their algebraic structure; time
integration lives in :mod:`mpdg.integrators`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import StructuralViolationError

RateEvaluator = Callable[..., np.ndarray]


@dataclass(frozen=True)
class PDSSpec:
    """A production-destruction system.

    ``rate_evaluator(c)`` (or ``rate_evaluator(c, ctx)`` when the rates
    need external state such as a temperature) returns the M x M
    production matrix with entry (i, j) = p_ij(c). The destruction
    matrix is its transpose and is never stored separately.

    Specs are immutable and safe to share across threads.
    """

    species_count: int
    rate_evaluator: RateEvaluator
    name: str = ""
    accepts_ctx: bool = False

    def __post_init__(self) -> None:
        if self.species_count < 1:
            raise StructuralViolationError("species_count must be >= 1")

    def rates(self, c: np.ndarray, ctx: Any = None, validate: bool = True) -> np.ndarray:
        """Evaluate the production matrix at concentrations ``c``."""
        c = np.asarray(c, dtype=float)
        if c.shape != (self.species_count,):
            raise StructuralViolationError(
                f"expected concentration vector of length {self.species_count}, got shape {c.shape}"
            )
        p = self.rate_evaluator(c, ctx) if self.accepts_ctx else self.rate_evaluator(c)
        p = np.asarray(p, dtype=float)
        if validate:
            validate_rates(p, c)
        return p


def validate_rates(production: np.ndarray, c: np.ndarray | None = None) -> None:
    """Check the structural invariants of a production matrix.

    Raises StructuralViolationError on a negative or non-finite entry,
    a non-square matrix, or (when ``c`` is given) a nonzero destruction
    of an absent species, i.e. p_ji != 0 with c_i = 0.
    """
    if production.ndim != 2 or production.shape[0] != production.shape[1]:
        raise StructuralViolationError(f"production matrix must be square, got {production.shape}")
    if not np.all(np.isfinite(production)):
        raise StructuralViolationError("production matrix has non-finite entries")
    if np.any(production < 0.0):
        i, j = np.argwhere(production < 0.0)[0]
        raise StructuralViolationError(
            f"negative production rate p[{i},{j}] = {production[i, j]!r} (miscoded mechanism?)"
        )
    if c is not None:
        absent = np.asarray(c) == 0.0
        # column i of production == row i of destruction
        if np.any(production[:, absent] != 0.0):
            i = int(np.where(absent)[0][np.argmax(np.any(production[:, absent] != 0.0, axis=0))])
            raise StructuralViolationError(
                f"species {i} is absent (c_i = 0) but has nonzero destruction rates"
            )


def net_rhs(spec: PDSSpec, c: np.ndarray, ctx: Any = None) -> np.ndarray:
    """Right side P_i(c) - D_i(c) = sum_j p_ij - sum_j p_ji."""
    p = spec.rates(c, ctx)
    return p.sum(axis=1) - p.sum(axis=0)


def conservation_defect(production: np.ndarray, destruction: np.ndarray | None = None) -> float:
    """sum_i (P_i - D_i); zero up to round-off for any valid PDS.

    ``destruction`` defaults to the transpose of ``production``; passing
    an inconsistent matrix makes the defect nonzero, which the tests use
    as a negative control.
    """
    production = np.asarray(production, dtype=float)
    d = production.T if destruction is None else np.asarray(destruction, dtype=float)
    return float(production.sum() - d.sum())
