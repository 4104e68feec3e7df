"""Analytic benchmark problems.

All problems are two-objective minimization problems. Evaluators take a batch
``X`` of shape ``(n, D)``; constraint functions return ``g`` in ``g <= 0`` form
and :class:`~offmoo.core.Problem` turns them into violation magnitudes.

References:
    DTLZ: Deb, Thiele, Laumanns, Zitzler (2002), "Scalable multi-objective
    optimization test problems".
    Kursawe (1991), "A variant of evolution strategies for vector optimization".
    BNH: Binh & Korn (1997), "MOBES: A multiobjective evolution strategy for
    constrained optimization problems".
    Welded beam: Deb & Sundar (2006) two-objective formulation, with the
    normalized constraints used by pymoo's ``WeldedBeam``.
    Truss2D: two-bar truss of Deb et al., as in pymoo's ``Truss2D``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from offmoo.core import Problem


class UnknownProblemError(KeyError):
    def __str__(self):
        return str(self.args[0])


def _dtlz_g1(xm: np.ndarray) -> np.ndarray:
    k = xm.shape[1]
    return 100.0 * (k + np.sum((xm - 0.5) ** 2 - np.cos(20.0 * np.pi * (xm - 0.5)), axis=1))


def _dtlz_g2(xm: np.ndarray) -> np.ndarray:
    return np.sum((xm - 0.5) ** 2, axis=1)


def _linear_front(x1: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.column_stack([0.5 * x1 * (1 + g), 0.5 * (1 - x1) * (1 + g)])


def _spherical_front(theta: np.ndarray, g: np.ndarray) -> np.ndarray:
    # theta already in [0, pi/2]
    return np.column_stack([(1 + g) * np.cos(theta), (1 + g) * np.sin(theta)])


def dtlz1(X):
    return _linear_front(X[:, 0], _dtlz_g1(X[:, 1:]))


def dtlz2(X):
    return _spherical_front(X[:, 0] * np.pi / 2, _dtlz_g2(X[:, 1:]))


def dtlz3(X):
    return _spherical_front(X[:, 0] * np.pi / 2, _dtlz_g1(X[:, 1:]))


def dtlz4(X, alpha: float = 100.0):
    return _spherical_front(X[:, 0] ** alpha * np.pi / 2, _dtlz_g2(X[:, 1:]))


def dtlz5(X):
    # With two objectives there are no intermediate angles to remap, so the
    # first angle is x_1 * pi/2 exactly as in DTLZ2.
    return _spherical_front(X[:, 0] * np.pi / 2, _dtlz_g2(X[:, 1:]))


def dtlz6(X):
    g = np.sum(X[:, 1:] ** 0.1, axis=1)
    return _spherical_front(X[:, 0] * np.pi / 2, g)


def dtlz7(X):
    xm = X[:, 1:]
    g = 1 + 9.0 / xm.shape[1] * np.sum(xm, axis=1)
    f1 = X[:, 0]
    h = 2 - f1 / (1 + g) * (1 + np.sin(3 * np.pi * f1))
    return np.column_stack([f1, (1 + g) * h])


def kursawe(X):
    a, b = X[:, :-1], X[:, 1:]
    f1 = np.sum(-10.0 * np.exp(-0.2 * np.sqrt(a**2 + b**2)), axis=1)
    f2 = np.sum(np.abs(X) ** 0.8 + 5.0 * np.sin(X**3), axis=1)
    return np.column_stack([f1, f2])


def bnh(X):
    x1, x2 = X[:, 0], X[:, 1]
    return np.column_stack([4 * x1**2 + 4 * x2**2, (x1 - 5) ** 2 + (x2 - 5) ** 2])


def bnh_constraints(X):
    x1, x2 = X[:, 0], X[:, 1]
    g1 = (x1 - 5) ** 2 + x2**2 - 25.0
    g2 = 7.7 - ((x1 - 8) ** 2 + (x2 + 3) ** 2)
    return np.column_stack([g1, g2])


# Welded beam: x = (h, l, t, b) = weld thickness, weld length, bar height, bar thickness.
_WB_P = 6000.0
_WB_L = 14.0
_WB_TAU_MAX = 13600.0
_WB_SIGMA_MAX = 30000.0


def welded_beam(X):
    h, l, t, b = X.T
    cost = 1.10471 * h**2 * l + 0.04811 * t * b * (_WB_L + l)
    deflection = 2.1952 / (t**3 * b)
    return np.column_stack([cost, deflection])


def welded_beam_constraints(X):
    h, l, t, b = X.T
    P, L = _WB_P, _WB_L
    R = np.sqrt(0.25 * (l**2 + (h + t) ** 2))
    M = P * (L + l / 2)
    J = 2 * np.sqrt(0.5) * h * l * (l**2 / 12 + 0.25 * (h + t) ** 2)
    tau1 = P / (np.sqrt(2) * h * l)
    tau2 = M * R / J
    tau = np.sqrt(tau1**2 + tau2**2 + l * tau1 * tau2 / R)
    sigma = 6 * P * L / (t**2 * b)
    p_c = 64746.022 * (1 - 0.0282346 * t) * t * b**3
    g1 = (tau - _WB_TAU_MAX) / _WB_TAU_MAX
    g2 = (sigma - _WB_SIGMA_MAX) / _WB_SIGMA_MAX
    g3 = (h - b) / (5 - 0.125)
    g4 = (P - p_c) / P
    return np.column_stack([g1, g2, g3, g4])


# Truss2D: x = (A1, A2, y) = member cross-sections [m^2] and vertical position [m].
_TRUSS_A_MIN = 1e-5
_TRUSS_A_MAX = 0.01
_TRUSS_S_MAX = 1e5


def _truss_stress(X):
    a1, a2, y = X.T
    s_ac = 20 * np.sqrt(16 + y**2) / (y * a1)
    s_bc = 80 * np.sqrt(1 + y**2) / (y * a2)
    return np.maximum(s_ac, s_bc)


def truss2d(X):
    a1, a2, y = X.T
    volume = a1 * np.sqrt(16 + y**2) + a2 * np.sqrt(1 + y**2)
    return np.column_stack([volume, _truss_stress(X)])


def truss2d_constraints(X):
    return (_truss_stress(X) - _TRUSS_S_MAX)[:, None]


def _dtlz(name: str, fn: Callable, n_var: int = 10) -> Problem:
    return Problem(name, n_var, 2, 0, np.zeros(n_var), np.ones(n_var), fn)


_CATALOG: dict[str, Callable[[], Problem]] = {
    "dtlz1": lambda: _dtlz("dtlz1", dtlz1),
    "dtlz2": lambda: _dtlz("dtlz2", dtlz2),
    "dtlz3": lambda: _dtlz("dtlz3", dtlz3),
    "dtlz4": lambda: _dtlz("dtlz4", dtlz4),
    "dtlz5": lambda: _dtlz("dtlz5", dtlz5),
    "dtlz6": lambda: _dtlz("dtlz6", dtlz6),
    "dtlz7": lambda: _dtlz("dtlz7", dtlz7),
    "kursawe": lambda: Problem("kursawe", 3, 2, 0, np.full(3, -5.0), np.full(3, 5.0), kursawe),
    "bnh": lambda: Problem(
        "bnh", 2, 2, 2, np.array([0.0, 0.0]), np.array([5.0, 3.0]), bnh, bnh_constraints
    ),
    "welded_beam": lambda: Problem(
        "welded_beam",
        4,
        2,
        4,
        np.array([0.125, 0.1, 0.1, 0.125]),
        np.array([5.0, 10.0, 10.0, 5.0]),
        welded_beam,
        welded_beam_constraints,
    ),
    "truss2d": lambda: Problem(
        "truss2d",
        3,
        2,
        1,
        np.array([_TRUSS_A_MIN, _TRUSS_A_MIN, 1.0]),
        np.array([_TRUSS_A_MAX, _TRUSS_A_MAX, 3.0]),
        truss2d,
        truss2d_constraints,
    ),
}

PROBLEM_NAMES: tuple[str, ...] = tuple(_CATALOG)


def get_problem(name: str) -> Problem:
    """Return a fresh problem instance with default dimensions and bounds."""
    try:
        return _CATALOG[name]()
    except KeyError:
        raise UnknownProblemError(
            f"unknown problem {name!r}; valid names: {', '.join(PROBLEM_NAMES)}"
        ) from None


def evaluate_true(problem: Problem, x):
    """Evaluate one decision vector with the problem's true functions."""
    return problem.evaluate(x)
