"""Concave penalty families and their right derivatives.

Every family satisfies: value 0 at 0, nondecreasing and concave on
[0, inf), right derivative lambda at 0, and a plateau where the
derivative stays above c1*lambda on [0, c2*lambda].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError

FAMILIES = ("capped-l1", "scad", "mcp", "lasso")

_DEFAULT_SHAPE = {"capped-l1": 1.0, "scad": 3.7, "mcp": 3.0, "lasso": 0.0}


@dataclass(frozen=True)
class PenaltySpec:
    """A penalty family with its level lambda and shape parameter.

    shape is the cap multiplier c for capped-l1, a for SCAD, gamma for
    MCP; unused for lasso.
    """

    family: str
    lam: float
    shape: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown penalty family {self.family!r}")
        if not self.lam > 0:
            raise UsageError("lambda must be positive")
        shape = self.shape if self.shape is not None else _DEFAULT_SHAPE[self.family]
        if self.family == "scad" and not shape > 2:
            raise UsageError("SCAD needs a > 2")
        if self.family == "mcp" and not shape > 1:
            raise UsageError("MCP needs gamma > 1")
        if self.family == "capped-l1" and not shape > 0:
            raise UsageError("capped-l1 needs c > 0")
        object.__setattr__(self, "shape", shape)

    def with_lambda(self, lam: float) -> "PenaltySpec":
        return PenaltySpec(self.family, lam, self.shape)

    def plateau_constants(self):
        """Documented (c1, c2) for which p'(u) >= c1*lambda on [0, c2*lambda]."""
        if self.family == "lasso":
            return 1.0, 1.0
        if self.family == "capped-l1":
            return 1.0, 0.999 * self.shape
        if self.family == "scad":
            return 1.0, 1.0
        # MCP: p'(u) = lam - u/gamma, so at u = c2*lam the slope is (1 - c2/gamma)*lam
        return 1.0 - 1.0 / self.shape, 1.0


def penalty_value(spec: PenaltySpec, u):
    """p_lambda(u) for u >= 0 (vectorized)."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise UsageError("penalty argument must be nonnegative")
    lam = spec.lam
    if spec.family == "lasso":
        out = lam * u
    elif spec.family == "capped-l1":
        out = lam * np.minimum(u, spec.shape * lam)
    elif spec.family == "scad":
        a = spec.shape
        out = np.where(
            u <= lam,
            lam * u,
            np.where(
                u <= a * lam,
                (2 * a * lam * u - u**2 - lam**2) / (2 * (a - 1)),
                lam**2 * (a + 1) / 2,
            ),
        )
    else:  # mcp
        g = spec.shape
        out = np.where(u <= g * lam, lam * u - u**2 / (2 * g), g * lam**2 / 2)
    return out if out.ndim else float(out)


def penalty_rderiv(spec: PenaltySpec, u):
    """Right derivative p'_lambda(u) for u >= 0 (vectorized)."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise UsageError("penalty argument must be nonnegative")
    lam = spec.lam
    if spec.family == "lasso":
        out = np.full_like(u, lam)
    elif spec.family == "capped-l1":
        out = np.where(u < spec.shape * lam, lam, 0.0)
    elif spec.family == "scad":
        a = spec.shape
        out = np.where(u <= lam, lam, np.maximum(a * lam - u, 0.0) / (a - 1))
    else:  # mcp
        out = np.maximum(lam - u / spec.shape, 0.0)
    return out if out.ndim else float(out)


def check_penalty_conditions(spec: PenaltySpec, grid=None,
                             value_fn=None, deriv_fn=None) -> dict:
    """Numerically verify the penalty conditions on a grid.

    value_fn/deriv_fn allow injecting a foreign penalty (negative controls
    in tests); by default the spec's own family is checked.
    """
    value_fn = value_fn or (lambda u: penalty_value(spec, u))
    deriv_fn = deriv_fn or (lambda u: penalty_rderiv(spec, u))
    if grid is None:
        grid = np.linspace(0.0, 5.0 * spec.lam * max(1.0, spec.shape or 1.0), 501)
    grid = np.sort(np.asarray(grid, dtype=float))
    vals = np.asarray(value_fn(grid), dtype=float)
    derivs = np.asarray(deriv_fn(grid), dtype=float)
    c1, c2 = spec.plateau_constants()
    plateau_grid = grid[grid <= c2 * spec.lam]
    report = {
        "zero_at_origin": bool(abs(value_fn(np.array([0.0]))[0]) <= 1e-12),
        "nondecreasing": bool(np.all(np.diff(vals) >= -1e-12)),
        "concave": bool(np.all(np.diff(derivs) <= 1e-12)),
        "deriv_nonnegative": bool(np.all(derivs >= -1e-12)),
        "slope_lambda_at_zero": bool(abs(deriv_fn(np.array([0.0]))[0] - spec.lam) <= 1e-12),
        "plateau": bool(
            plateau_grid.size == 0
            or np.all(np.asarray(deriv_fn(plateau_grid)) >= c1 * spec.lam - 1e-12)
        ),
        "c1": c1,
        "c2": c2,
    }
    report["all_pass"] = all(
        report[k] for k in (
            "zero_at_origin", "nondecreasing", "concave",
            "deriv_nonnegative", "slope_lambda_at_zero", "plateau",
        )
    )
    return report
