"""Split Poisson problem on the torus, one time slice at a time.

The linear potential is the convolution Ubar = W * rho with the periodic
kernel W(x) = (x^2 - |x|)/2, computed spectrally (the source's zero mode is
dropped; the mean of Ubar is fixed by the kernel's own mean -1/12).  The
nonlinear correction solves d^2 Utilde / dx^2 = exp(Ubar + Utilde) - 1 by
damped Newton on the periodic central-difference operator, with the linear
step handled by a cyclic tridiagonal solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateRatioError,
    DomainError,
    ParameterError,
    SolverDivergenceError,
)

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid with nx nodes x_j = j / nx on [0, 1)."""

    nx: int

    def __post_init__(self):
        if self.nx < 8 or self.nx % 2 != 0:
            raise ParameterError(f"nx must be even and >= 8, got {self.nx}")

    @property
    def h(self) -> float:
        return 1.0 / self.nx

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.nx) / self.nx


@dataclass(frozen=True)
class FieldSlice:
    """Potentials and fields of one time slice, split into linear and nonlinear parts."""

    Ubar: np.ndarray
    Utilde: np.ndarray
    Ebar: np.ndarray
    Etilde: np.ndarray

    def __post_init__(self):
        for arr in (self.Ubar, self.Utilde, self.Ebar, self.Etilde):
            arr.setflags(write=False)

    @property
    def E(self) -> np.ndarray:
        return self.Ebar + self.Etilde


@dataclass(frozen=True)
class BoundsReport:
    """Max-norms of Utilde and its first two derivatives against their a-priori bounds."""

    utilde_inf: float
    dutilde_inf: float
    d2utilde_inf: float

    @property
    def utilde_ok(self) -> bool:
        return self.utilde_inf <= 3.0

    @property
    def dutilde_ok(self) -> bool:
        return self.dutilde_inf <= 2.0

    @property
    def d2utilde_ok(self) -> bool:
        return self.d2utilde_inf <= 3.0

    @property
    def all_ok(self) -> bool:
        return self.utilde_ok and self.dutilde_ok and self.d2utilde_ok


def kernel_eval(x):
    """Periodic kernel W and its derivative W' on the fundamental domain [0, 1).

    W(x) = (x^2 - x)/2 and W'(x) = x - 1/2 there; at integers W' takes the
    right limit -1/2.  Vectorized.
    """
    y = np.mod(np.asarray(x, dtype=float), 1.0)
    W = (y**2 - y) / 2.0
    Wp = y - 0.5
    if np.ndim(x) == 0:
        return float(W), float(Wp)
    return W, Wp


def spectral_derivative(u: np.ndarray) -> np.ndarray:
    """d/dx on the periodic unit interval via FFT; Nyquist derivative set to zero."""
    n = u.shape[-1]
    k = np.arange(n // 2 + 1, dtype=float)
    uh = np.fft.rfft(u)
    dh = (2j * np.pi * k) * uh
    if n % 2 == 0:
        dh[..., -1] = 0.0
    return np.fft.irfft(dh, n=n)


def solve_linear(rho: np.ndarray, grid: SpatialGrid):
    """Linear potential Ubar = W * rho and field Ebar = -dUbar/dx, spectrally.

    For k != 0 the Fourier multiplier is 1/(2 pi k)^2; the zero mode of Ubar
    is -mass/12, the mean of the kernel times the mass of rho.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (grid.nx,):
        raise ParameterError(f"density shape {rho.shape} does not match grid ({grid.nx},)")
    if np.any(rho < 0.0):
        raise DomainError("density must be nonnegative on all nodes")
    n = grid.nx
    rh = np.fft.rfft(rho)
    k = np.arange(n // 2 + 1, dtype=float)
    Uh = np.zeros_like(rh)
    Uh[1:] = rh[1:] / (2.0 * np.pi * k[1:]) ** 2
    Uh[0] = -rh[0] / 12.0
    Eh = -(2j * np.pi * k) * Uh
    Eh[0] = 0.0
    if n % 2 == 0:
        Eh[-1] = 0.0
    Ubar = np.fft.irfft(Uh, n=n)
    Ebar = np.fft.irfft(Eh, n=n)
    return Ubar, Ebar


def solve_cyclic_tridiagonal(sub, diag, sup, corner_ul, corner_lr, rhs):
    """Solve a cyclic tridiagonal system.

    sub/diag/sup are the three bands (sub[0] and sup[-1] unused), corner_ul is
    A[0, n-1] and corner_lr is A[n-1, 0].  Sherman-Morrison reduction to two
    plain Thomas solves.
    """
    n = diag.size
    gamma = -diag[0]
    d = diag.copy()
    d[0] -= gamma
    d[-1] -= corner_ul * corner_lr / gamma
    u = np.zeros(n)
    u[0] = gamma
    u[-1] = corner_lr
    x = _thomas(sub, d, sup, rhs)
    z = _thomas(sub, d, sup, u)
    factor = (x[0] + corner_ul * x[-1] / gamma) / (1.0 + z[0] + corner_ul * z[-1] / gamma)
    return x - factor * z


def _thomas(sub, diag, sup, rhs):
    n = diag.size
    c = np.empty(n)
    d = np.empty(n)
    c[0] = sup[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - sub[i] * c[i - 1]
        c[i] = sup[i] / denom if i < n - 1 else 0.0
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom
    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def _laplacian(u: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / h**2


def solve_nonlinear(
    Ubar: np.ndarray,
    grid: SpatialGrid,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
):
    """Solve d^2 Utilde = exp(Ubar + Utilde) - 1 with damped Newton.

    The Jacobian L - diag(exp(Ubar + Utilde)) is strictly negative definite,
    so the full step is reliable; damping halves the step until the max-norm
    residual decreases.  Returns (Utilde, Etilde) with Etilde the spectral
    derivative of -Utilde.
    """
    Ubar = np.asarray(Ubar, dtype=float)
    if not np.all(np.isfinite(Ubar)):
        raise DomainError("Ubar must be finite on all nodes")
    n = grid.nx
    h = grid.h
    U = np.zeros(n)

    def residual(u):
        return _laplacian(u, h) - (np.exp(Ubar + u) - 1.0)

    F = residual(U)
    res = float(np.max(np.abs(F)))
    for _ in range(max_iter):
        if res <= tol:
            break
        w = np.exp(Ubar + U)
        inv_h2 = 1.0 / h**2
        sub = np.full(n, inv_h2)
        sup = np.full(n, inv_h2)
        diag = -2.0 * inv_h2 - w
        delta = solve_cyclic_tridiagonal(sub, diag, sup, inv_h2, inv_h2, -F)
        lam = 1.0
        while lam > 1e-12:
            trial = U + lam * delta
            Ft = residual(trial)
            rt = float(np.max(np.abs(Ft)))
            if rt < res:
                U, F, res = trial, Ft, rt
                break
            lam /= 2.0
        else:
            break
    if res > tol:
        raise SolverDivergenceError(
            f"Newton failed to reach residual {tol:g} (last residual {res:g})", res
        )
    Etilde = -spectral_derivative(U)
    return U, Etilde


def make_field_slice(
    rho: np.ndarray, grid: SpatialGrid, newton_tol: float = NEWTON_TOL
) -> FieldSlice:
    """Run the linear and nonlinear solves for one density slice."""
    Ubar, Ebar = solve_linear(rho, grid)
    Utilde, Etilde = solve_nonlinear(Ubar, grid, tol=newton_tol)
    return FieldSlice(Ubar=Ubar, Utilde=Utilde, Ebar=Ebar, Etilde=Etilde)


def verify_potential_bounds(slice_: FieldSlice) -> BoundsReport:
    """Max-norms of Utilde, dUtilde/dx, d2Utilde/dx2 with pass flags.

    The second derivative is taken from the solved equation itself,
    exp(Ubar + Utilde) - 1, which is exact at convergence.
    """
    du = -slice_.Etilde
    d2u = np.exp(slice_.Ubar + slice_.Utilde) - 1.0
    return BoundsReport(
        utilde_inf=float(np.max(np.abs(slice_.Utilde))),
        dutilde_inf=float(np.max(np.abs(du))),
        d2utilde_inf=float(np.max(np.abs(d2u))),
    )


def stability_ratio(Ubar1: np.ndarray, Ubar2: np.ndarray, grid: SpatialGrid) -> float:
    """||dUtilde1 - dUtilde2||_inf / ||Ubar1 - Ubar2||_inf after both nonlinear solves.

    Bounded by e^6 for potentials arising from admissible densities.
    """
    Ubar1 = np.asarray(Ubar1, dtype=float)
    Ubar2 = np.asarray(Ubar2, dtype=float)
    denom = float(np.max(np.abs(Ubar1 - Ubar2)))
    if denom == 0.0:
        raise DegenerateRatioError("potentials are identical on all nodes")
    _, Et1 = solve_nonlinear(Ubar1, grid)
    _, Et2 = solve_nonlinear(Ubar2, grid)
    return float(np.max(np.abs(Et1 - Et2))) / denom


E6 = math.e**6
