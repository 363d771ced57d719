"""Manufactured solution u = t sin(2 pi x) sin(2 pi y) with beta = 2 + x^2 + y^2."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .mesh import Side

TWO_PI = 2.0 * np.pi


def default_beta(x, y):
    return 2.0 + x * x + y * y


def default_beta_gradient(x, y):
    return 2.0 * x, 2.0 * y


def exact_value(x, y, t):
    return t * np.sin(TWO_PI * x) * np.sin(TWO_PI * y)


def exact_gradient(x, y, t):
    """(du/dx, du/dy); arrays broadcast and come back stacked on the last axis."""
    sx, cx = np.sin(TWO_PI * x), np.cos(TWO_PI * x)
    sy, cy = np.sin(TWO_PI * y), np.cos(TWO_PI * y)
    return np.stack(np.broadcast_arrays(t * TWO_PI * cx * sy, t * TWO_PI * sx * cy), axis=-1)


def exact_rate(x, y, t):
    return np.sin(TWO_PI * x) * np.sin(TWO_PI * y) + 0.0 * t


@dataclass(frozen=True)
class ManufacturedProblem:
    rho1: float = 1.0
    rho2: float = 1.0
    T: float = 1.0
    beta1: Callable = default_beta
    beta2: Optional[Callable] = None
    zero_source: bool = False

    def rho(self, side):
        return self.rho1 if Side(side) is Side.OMEGA1 else self.rho2

    def beta(self, side):
        if Side(side) is Side.OMEGA2 and self.beta2 is not None:
            return self.beta2
        return self.beta1

    def source(self, side):
        """Vectorised ``f(x, y, t)`` for one subdomain."""
        if self.zero_source:
            return lambda x, y, t: np.zeros(np.broadcast(x, y).shape)
        rho = self.rho(side)
        return lambda x, y, t: source_term(side, x, y, t, self, rho=rho)

    exact_value = staticmethod(exact_value)
    exact_gradient = staticmethod(exact_gradient)
    exact_rate = staticmethod(exact_rate)


def source_term(side, x, y, t, problem=None, rho=None):
    """``rho u_t - div(beta grad u)`` for the default diffusivity."""
    if rho is None:
        rho = (problem or ManufacturedProblem()).rho(side)
    s = np.sin(TWO_PI * x) * np.sin(TWO_PI * y)
    beta = default_beta(x, y)
    lap = -2.0 * TWO_PI**2 * s
    drift = (4.0 * np.pi * x * np.cos(TWO_PI * x) * np.sin(TWO_PI * y)
             + 4.0 * np.pi * y * np.sin(TWO_PI * x) * np.cos(TWO_PI * y))
    return rho * s - t * (beta * lap + drift)


def check_flux_jump(problem, y, t):
    """beta du/dx from the left minus from the right at (1, y); zero by construction."""
    problem = problem or ManufacturedProblem()
    left = problem.beta(Side.OMEGA1)(1.0, y) * exact_gradient(1.0, y, t)[..., 0]
    right = problem.beta(Side.OMEGA2)(1.0, y) * exact_gradient(1.0, y, t)[..., 0]
    return left - right
