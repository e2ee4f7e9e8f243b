"""Eigenfunctions of the lifted single-card walk.

A card at position ``x`` with phase ``z`` contributes ``v(x) * w**z`` to the
lifted eigenfunction, ``w = exp(2 pi i / n)``.  Because the phase only moves
by +-1 on swaps, the eigen-relation for a single card reduces to an
``n x n`` problem ``K v = lam v`` where ``K[x, x']`` sums ``prob * w**dz``
over the moves taking ``x`` to ``x'`` (the "twisted" matrix).

Each shuffle has a closed-form profile with one or two unknowns:

* Rudvalis(p): ``v = (lam**(n-2), ..., lam, 1, chi)``, ``lam`` a root of
  ``lam**n - p w lam**(n-1) - p w**-1 lam - 1 + 2p``;
* shift-or-swap: ``v = (mu**(n-2), ..., mu, 1, chi)`` with ``mu = 2 lam - 1``;
* symmetrized: ``v(s) = cos(theta s) + i delta sin(theta s)`` on the
  symmetric index ``s = x - (n+1)/2``, ``lam = (1 + cos theta) / 2``.

Near ``lam = 1`` the polynomial equations are solved for ``d = lam - 1`` with
``log1p``/``expm1`` style evaluations, so ``gamma = 1 - Re(lam)`` keeps full
relative precision even when it is ~1e-11.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from rudvalis.errors import SolverError, ValidationError
from rudvalis.shuffles import ShuffleSpec, card_transitions

RESIDUAL_TOL = 1e-10
CONSISTENCY_TOL = 1e-9
MAX_ITER = 100
# Dense eigendecomposition is only attempted below this size.
FALLBACK_MAX_N = 2000


@dataclass(frozen=True)
class EigenSystem:
    spec: ShuffleSpec
    lam: complex
    v: np.ndarray
    w: complex
    gamma: float
    chi: complex | None = None
    theta: float | None = None
    delta: float | None = None
    psi_max: float = float("nan")
    r_bound: float = float("nan")
    residual: float = float("nan")
    method: str = ""
    iterations: int = 0

    @property
    def n(self) -> int:
        return self.spec.n

    def to_dict(self) -> dict:
        out = {
            "lambda_re": self.lam.real,
            "lambda_im": self.lam.imag,
            "gamma": self.gamma,
            "psi_max": self.psi_max,
            "r_bound": self.r_bound,
            "residual": self.residual,
            "method": self.method,
            "iterations": self.iterations,
        }
        if self.chi is not None:
            out["chi_re"] = self.chi.real
            out["chi_im"] = self.chi.imag
        if self.theta is not None:
            out["theta"] = self.theta
            out["delta"] = self.delta
        return out


def unit_root(n: int) -> complex:
    return cmath.exp(2j * math.pi / n)


def phase_table(n: int) -> np.ndarray:
    """``w**k`` for k = 0..n-1, evaluated directly rather than by powering."""
    return np.exp(2j * np.pi * np.arange(n) / n)


# ---------------------------------------------------------------------------
# twisted single-card operator


def build_twisted_matrix(spec: ShuffleSpec, w: complex | None = None) -> np.ndarray:
    """Dense twisted operator, rows indexed by the current position.

    ``(K @ v)[x] = E[v(x') w**dz | x]``; with ``w = 1`` the rows sum to 1.
    """
    n = spec.n
    w = unit_root(n) if w is None else w
    K = np.zeros((n, n), dtype=complex)
    rows = np.arange(n)
    for prob, dest, dz in card_transitions(spec):
        np.add.at(K, (rows, dest), prob * w ** dz.astype(float))
    return K


def apply_twisted(spec: ShuffleSpec, v: np.ndarray, w: complex | None = None) -> np.ndarray:
    w = unit_root(spec.n) if w is None else w
    out = np.zeros(spec.n, dtype=complex)
    for prob, dest, dz in card_transitions(spec):
        out += prob * w ** dz.astype(float) * v[dest]
    return out


def twisted_eigenvalues(spec: ShuffleSpec) -> np.ndarray:
    return np.linalg.eigvals(build_twisted_matrix(spec))


def _leading(eigenvalues: np.ndarray, below_one: bool = False) -> complex:
    vals = np.asarray(eigenvalues)
    if below_one:
        vals = vals[np.abs(vals - 1) > 1e-12]
    order = np.lexsort((np.abs(vals.imag), -vals.real))
    return complex(vals[order[0]])


# ---------------------------------------------------------------------------
# accurate complex helpers near 1


def _log1p(d: complex) -> complex:
    a, b = d.real, d.imag
    return complex(0.5 * math.log1p(2 * a + a * a + b * b), math.atan2(b, 1 + a))


def _expm1(z: complex) -> complex:
    x, y = z.real, z.imag
    s = math.sin(0.5 * y)
    return complex(math.expm1(x) * math.cos(y) - 2 * s * s, math.exp(x) * math.sin(y))


def _newton(fdf, max_iter: int) -> tuple[complex, int, bool]:
    d = 0j
    for k in range(1, max_iter + 1):
        f, df = fdf(d)
        if f == 0:
            return d, k, True
        if df == 0 or not cmath.isfinite(df):
            return d, k, False
        step = f / df
        d -= step
        if not cmath.isfinite(d):
            return d, k, False
        if abs(step) <= 4e-16 * abs(d):
            return d, k, True
    return d, max_iter, False


# ---------------------------------------------------------------------------
# Rudvalis(p)


def _rudvalis_f(d: complex, n: int, p: float, w: complex) -> tuple[complex, complex]:
    lam = 1 + d
    L = _log1p(d)
    A = _expm1(n * L)  # lam**n - 1
    B = _expm1((n - 1) * L)  # lam**(n-1) - 1
    f = A - p * w * B - p / w * d + 4 * p * math.sin(math.pi / n) ** 2
    df = n * (1 + B) - p * w * (n - 1) * (1 + B) / lam - p / w
    return f, df


def _geometric_profile(d: complex, n: int, ratio_scale: float, tail: complex) -> np.ndarray:
    # (r**(n-2), ..., r, 1, tail) with r = 1 + ratio_scale * d
    L = _log1p(ratio_scale * d)
    k = np.arange(n - 2, -1, -1)
    v = np.empty(n, dtype=complex)
    v[:-1] = np.exp(k * L)
    v[-1] = tail
    return v


def solve_rudvalis(
    n: int, p=0.5, *, max_iter: int = MAX_ITER, residual_tol: float = RESIDUAL_TOL
) -> EigenSystem:
    """Eigenpair of the lifted Rudvalis(p) shuffle with eigenvalue near 1."""
    if n < 4:
        raise ValidationError(f"solve_rudvalis needs n >= 4, got {n}")
    spec = ShuffleSpec.rudvalis(n, p)
    p = float(spec.p)
    w = unit_root(n)

    def chi_of(d):
        lam_n1 = 1 + _expm1((n - 1) * _log1p(d))
        return (lam_n1 - p / w) / (1 - p)

    def accept(d):
        lam = 1 + d
        f, _ = _rudvalis_f(d, n, p, w)
        chi = chi_of(d)
        ok = abs(f) < 1e-12 * n and abs(chi - (1 - p) / (lam - p * w)) < CONSISTENCY_TOL
        return ok, chi

    d, iters, converged = _newton(lambda d: _rudvalis_f(d, n, p, w), max_iter)
    ok, chi = accept(d) if converged else (False, None)
    method = "newton"
    if not ok:
        d, iters = _fallback(spec), 0
        ok, chi = accept(d)
        method = "eig-fallback"
        if not ok:
            raise SolverError(f"no-root: rudvalis n={n} p={p}")
    v = _geometric_profile(d, n, 1.0, chi)
    return _finish(spec, 1 + d, -d.real, v, w, method, iters, residual_tol, chi=chi)


# ---------------------------------------------------------------------------
# shift-or-swap


def _sos_g(d: complex, n: int, w: complex) -> tuple[complex, complex]:
    lam = 1 + d
    Lm = _log1p(2 * d)
    E = _expm1((n - 2) * Lm)  # mu**(n-2) - 1
    mu_n2 = 1 + E
    mu_n3 = mu_n2 / (1 + 2 * d)
    g = E * (4 * lam * lam - 1 - w) + 4 * (2 * d + d * d) + 4 * math.sin(math.pi / n) ** 2
    dg = 8 * lam * mu_n2 + 8 * lam * lam * (n - 2) * mu_n3 - 2 * (n - 2) * (w + 1) * mu_n3
    return g, dg


def solve_shift_or_swap(
    n: int, *, max_iter: int = MAX_ITER, residual_tol: float = RESIDUAL_TOL
) -> EigenSystem:
    """Eigenpair of the lifted shift-or-swap shuffle with eigenvalue near 1.

    The eigenvalue solves ``4 lam^2 mu^(n-2) = (1 + 1/w)(1 + w mu^(n-2))``,
    which is what remains after equating the two boundary expressions for chi.
    """
    if n < 5:
        raise ValidationError(f"solve_shift_or_swap needs n >= 5, got {n}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spec = ShuffleSpec.shift_or_swap(n)
    w = unit_root(n)

    def chis(d):
        lam = 1 + d
        mu_n2 = 1 + _expm1((n - 2) * _log1p(2 * d))
        return 2 * lam * mu_n2 / (1 + 1 / w), (1 + w * mu_n2) / (2 * lam)

    def accept(d):
        g, _ = _sos_g(d, n, w)
        c1, c2 = chis(d)
        return abs(g) < 1e-12 * n and abs(c1 - c2) < CONSISTENCY_TOL, c1

    d, iters, converged = _newton(lambda d: _sos_g(d, n, w), max_iter)
    ok, chi = accept(d) if converged else (False, None)
    method = "newton"
    if not ok:
        d, iters = _fallback(spec), 0
        ok, chi = accept(d)
        method = "eig-fallback"
        if not ok:
            raise SolverError(f"no-root: shift-or-swap n={n}")
    v = _geometric_profile(d, n, 2.0, chi)
    return _finish(spec, 1 + d, -d.real, v, w, method, iters, residual_tol, chi=chi)


def _fallback(spec: ShuffleSpec) -> complex:
    if spec.n > FALLBACK_MAX_N:
        raise SolverError(f"no-root: Newton failed and n={spec.n} is too large for the dense fallback")
    lam = _leading(twisted_eigenvalues(spec))
    return lam - 1


# ---------------------------------------------------------------------------
# symmetrized


def boundary_equation(theta: float, n: int) -> float:
    """The exact real equation whose smallest positive root gives theta."""
    c = math.cos(2 * math.pi / n)
    return (
        (0.5 + c) * math.sin(theta * (n - 1))
        - 0.5 * math.sin(theta * (n + 1))
        - math.sin(theta * n)
        + (1 + c) * math.sin(theta)
    )


def _boundary_derivative(theta: float, n: int) -> float:
    c = math.cos(2 * math.pi / n)
    return (
        (0.5 + c) * (n - 1) * math.cos(theta * (n - 1))
        - 0.5 * (n + 1) * math.cos(theta * (n + 1))
        - n * math.cos(theta * n)
        + (1 + c) * math.cos(theta)
    )


def delta_real_part(theta: float, n: int) -> float:
    """delta from the real part of the boundary constraint."""
    a = 2 * math.pi / n
    h1 = theta * (n - 1) / 2
    return (math.cos(a) * math.cos(h1) - math.cos(theta * (n + 1) / 2)) / (
        -math.sin(a) * math.sin(h1)
    )


def delta_imag_part(theta: float, n: int) -> float:
    """delta from the imaginary part of the boundary constraint."""
    a = 2 * math.pi / n
    h1 = theta * (n - 1) / 2
    return (math.sin(a) * math.cos(h1)) / (
        2 * math.sin(h1) + math.cos(a) * math.sin(h1) + math.sin(theta * (n + 1) / 2)
    )


def _bisect_newton(f, df, lo: float, hi: float, max_iter: int) -> tuple[float, int]:
    flo = f(lo)
    iters = 0
    # bisection until the bracket is narrow, then safeguarded Newton
    while hi - lo > 1e-6 * hi and iters < 4 * max_iter:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        iters += 1
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        iters += 1
        fx = f(x)
        if fx == 0:
            return x, iters
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi = x
        step = fx / df(x)
        nxt = x - step
        if not lo <= nxt <= hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 2e-16 * abs(x):
            return nxt, iters
        x = nxt
    return x, iters


def solve_symmetrized(
    n: int, *, max_iter: int = MAX_ITER, residual_tol: float = RESIDUAL_TOL
) -> EigenSystem:
    """Eigenpair of the lifted symmetrized shuffle.

    Finds the smallest positive root theta of :func:`boundary_equation`
    (bracketed around ``sqrt(2) pi n**-1.5``) and derives delta and lam.
    """
    if n < 5 or n % 2 == 0:
        raise ValidationError(f"solve_symmetrized needs odd n >= 5, got {n}")
    spec = ShuffleSpec.symmetrized(n)
    guess = math.sqrt(2) * math.pi * n**-1.5

    def f(t):
        return boundary_equation(t, n)

    lo, hi = guess / 2, 2 * guess
    if (f(lo) < 0) == (f(hi) < 0):
        lo, hi = guess / 4, 4 * guess
        if (f(lo) < 0) == (f(hi) < 0):
            raise SolverError(f"no-root: no sign change bracketing theta for n={n}")
    theta, iters = _bisect_newton(f, lambda t: _boundary_derivative(t, n), lo, hi, max_iter)
    if not theta > 0:
        raise SolverError(f"no-root: theta={theta} is not positive")
    delta = delta_imag_part(theta, n)
    other = delta_real_part(theta, n)
    if abs(delta - other) > CONSISTENCY_TOL:
        raise SolverError(f"delta mismatch at n={n}: {delta} vs {other}")

    s = np.arange(1, n + 1) - (n + 1) / 2
    v = np.cos(theta * s) + 1j * delta * np.sin(theta * s)
    lam = complex((1 + math.cos(theta)) / 2)
    gamma = math.sin(theta / 2) ** 2
    return _finish(
        spec, lam, gamma, v, unit_root(n), "bisection-newton", iters, residual_tol,
        theta=theta, delta=delta,
    )


def solve(spec: ShuffleSpec, **kwargs) -> EigenSystem:
    if spec.kind == "rudvalis":
        return solve_rudvalis(spec.n, spec.p, **kwargs)
    if spec.kind == "shift-or-swap":
        return solve_shift_or_swap(spec.n, **kwargs)
    if spec.kind == "symmetrized":
        return solve_symmetrized(spec.n, **kwargs)
    raise ValidationError(f"unknown shuffle kind {spec.kind!r}")


def _finish(spec, lam, gamma, v, w, method, iters, residual_tol, **aux) -> EigenSystem:
    es = EigenSystem(spec=spec, lam=complex(lam), v=v, w=w, gamma=gamma,
                     method=method, iterations=iters, **aux)
    residual = verify_eigensystem(es)
    if residual > residual_tol:
        raise SolverError(f"eigen-residual {residual:.3e} exceeds {residual_tol:g}")
    return EigenSystem(
        **{**es.__dict__, "residual": residual, "psi_max": psi_max(es), "r_bound": r_bound(es)}
    )


# ---------------------------------------------------------------------------
# checks and derived quantities


def eigen_residuals(es: EigenSystem) -> np.ndarray:
    """``|E[v(x') w**z'] - lam v(x) w**z|`` per position x, at z = 0.

    The phase factor is common to every term, so z = 0 covers all states.
    """
    return np.abs(apply_twisted(es.spec, es.v, es.w) - es.lam * es.v)


def verify_eigensystem(es: EigenSystem) -> float:
    return float(np.max(eigen_residuals(es)))


def psi_eval(deck: Sequence, y: int, es: EigenSystem, start: Sequence | None = None) -> complex:
    """Lifted eigenfunction at ``(deck, y)``.

    ``start`` is the reference deck fixing each card's initial position; it
    defaults to the cards sorted ascending.
    """
    n = len(deck)
    if n != es.n:
        raise ValidationError(f"deck of size {n} does not match eigensystem n={es.n}")
    start = sorted(deck) if start is None else list(start)
    x0 = {card: i for i, card in enumerate(start)}
    pos = np.arange(n)
    init = np.fromiter((x0[c] for c in deck), dtype=np.int64, count=n)
    z = (pos - init + y) % n
    return complex(np.sum(es.v * phase_table(n)[z]))


def psi_max(es: EigenSystem) -> float:
    """``|sum_x v(x)|``: the modulus of the eigenfunction at the start state."""
    return float(abs(np.sum(es.v)))


def move_increments(es: EigenSystem) -> list[tuple[float, np.ndarray]]:
    """Per move, ``|v(x') w**dz - v(x)|`` for a card at each position."""
    out = []
    for prob, dest, dz in card_transitions(es.spec):
        out.append((prob, np.abs(es.v[dest] * es.w ** dz.astype(float) - es.v)))
    return out


def r_bound(es: EigenSystem) -> float:
    """Certified bound on ``max_state E[|dPsi|^2 | state]``.

    For each move the card increments are summed in modulus (worst phase
    alignment, triangle inequality), squared and averaged over the moves.
    """
    return float(sum(prob * np.sum(inc) ** 2 for prob, inc in move_increments(es)))
