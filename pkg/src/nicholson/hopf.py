"""Hopf bifurcation data: imaginary eigenvalue crossings and delay thresholds.

Linearizing the normalized model about its positive steady state u_r and
looking for a purely imaginary eigenvalue i*nu with eigenfunction psi leads,
after writing nu = r*omega, exp(-i nu tau) = exp(-i theta) and splitting
psi = beta*c0 + r*z into its mean and a mean-zero field z, to the system

    g1 = Laplace(z) + (exp(-i theta) p f'(u_r) - delta - i omega) (beta c0 + r z) = 0
    g2 = (beta^2 - 1) c0^2 |Omega| + r^2 ||z||^2 = 0,

with z of zero quadrature mean.  At r = 0 the system has the closed-form
solution computed by :func:`limit_hopf_data`; :func:`continue_hopf` follows
that solution to positive r by a predictor-corrector Newton continuation.
A solution yields the countable family of delay thresholds

    tau_n = (theta + 2 pi n) / nu,        n = 0, 1, 2, ...

at which eigenvalue pairs cross the imaginary axis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid1D
from .model import CoefficientField, ModelParams, eval_nonlinearity
from .steady import (
    DiscreteLaplacian,
    NewtonConvergenceError,
    assemble_laplacian,
    solve_steady_state,
)

TWO_PI = 2.0 * math.pi


class NoHopfError(ValueError):
    """The mean coefficients admit no delay-induced oscillation (c0 <= 2)."""


class SolvabilityError(ValueError):
    """Right-hand side is not orthogonal to constants within tolerance."""


class ContinuationStallError(RuntimeError):
    """Continuation could not advance past some r despite step halving."""

    def __init__(self, message: str, last_good_r: float):
        super().__init__(message)
        self.last_good_r = last_good_r


class SimplicityWarning(UserWarning):
    """The nondegeneracy integral is close to zero; results are fragile."""


def second_neumann_eigenvalue(grid: Grid1D) -> float:
    """Smallest nonzero Neumann Laplacian eigenvalue, (pi / length)^2.

    Diagnostic only: it bounds the spectral gap protecting the mean mode and
    is reported alongside continuation output, never used algorithmically.
    """
    return (math.pi / grid.length) ** 2


def limit_phase(c0: float) -> float:
    """Phase lag theta0 of the large-diffusion crossing, in (pi/2, pi).

    Solves cos(theta0) = 1/(1 - c0), sin(theta0) = -sqrt(c0^2 - 2 c0)/(1 - c0)
    for c0 > 2.
    """
    if c0 <= 2.0:
        raise NoHopfError(_no_hopf_message(c0))
    spread = math.sqrt(c0 * c0 - 2.0 * c0)
    return math.atan2(spread / (c0 - 1.0), -1.0 / (c0 - 1.0))


def _no_hopf_message(c0: float) -> str:
    if c0 <= 0:
        return (
            f"c0 = {c0:.6g} <= 0: no positive steady state, "
            "Hopf analysis does not apply"
        )
    return (
        f"c0 = {c0:.6g} <= 2: the steady state is stable for every delay, "
        "no Hopf bifurcation exists"
    )


@dataclass(frozen=True)
class LimitHopfData:
    """Closed-form crossing data of the large-diffusion (r -> 0) limit.

    Attributes
    ----------
    theta : float
        Phase lag theta0 in (pi/2, pi).
    omega : float
        Frequency of the averaged dynamics, mean(delta)*sqrt(c0^2 - 2 c0).
    beta : float
        Mean amplitude of the eigenfunction; 1 in the limit.
    z : ndarray
        Mean-zero complex field solving
        Laplace(z) = -c0 f'(c0) p(x) e^{-i theta} + c0 delta(x) + i omega c0.
    """

    theta: float
    omega: float
    beta: float
    z: np.ndarray


@dataclass(frozen=True)
class HopfSolution:
    """One point on the branch of imaginary-axis eigenvalue crossings.

    Carries the model and steady state it was computed for, so threshold,
    nondegeneracy and normal-form evaluations need no extra context.

    ``psi = beta*c0 + r*z`` is the crossing eigenfunction and ``nu = r*omega``
    its frequency; both are stored explicitly.
    """

    model: ModelParams
    u: np.ndarray
    z: np.ndarray
    beta: float
    omega: float
    theta: float
    residual_norm: float
    nu: float = field(init=False)
    psi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nu", self.model.r * self.omega)
        psi = self.beta * self.model.coeffs.c0 + self.model.r * self.z
        psi.flags.writeable = False
        object.__setattr__(self, "psi", psi)

    @property
    def r(self) -> float:
        return self.model.r


@dataclass(frozen=True)
class ThresholdSequence:
    """Delay thresholds tau_n = (theta + 2 pi n)/nu, n = 0..n_max.

    ``taus`` are in normalized time, ``taus_hat = r * taus`` in the time of
    the unnormalized model.  Consecutive entries differ by exactly 2 pi / nu.
    """

    taus: np.ndarray
    taus_hat: np.ndarray
    nu: float
    omega: float
    n_max: int


def solve_poisson_meanzero(
    rhs: np.ndarray,
    grid: Grid1D,
    laplacian: DiscreteLaplacian | None = None,
    mean_tol: float = 1e-8,
    scale: float | None = None,
) -> np.ndarray:
    """Solve Laplace(z) = rhs with Neumann boundaries and zero-mean z.

    The Neumann Laplacian is singular on constants; the problem is solvable
    exactly when the quadrature mean of ``rhs`` vanishes.  The mean is checked
    against ``mean_tol`` relative to ``scale`` (default: the rhs magnitude;
    callers whose rhs is a difference of large terms should pass the
    pre-cancellation magnitude so an all-roundoff rhs is accepted as zero),
    the (tiny) residual mean is projected out, and the system is solved in
    bordered form

        [A  1] [z     ]   [rhs]
        [w  0] [lambda] = [0  ]

    which is nonsingular.

    Raises
    ------
    SolvabilityError
        If the quadrature mean of rhs exceeds the tolerance.
    """
    if laplacian is None:
        laplacian = assemble_laplacian(grid)
    rhs = np.asarray(rhs, dtype=complex)
    if rhs.size != grid.n_points:
        raise ValueError("rhs and grid sizes disagree")
    if scale is None:
        scale = float(np.abs(rhs).max())
    if scale == 0.0:
        return np.zeros(grid.n_points, dtype=complex)
    mean = grid.integrate(rhs) / grid.length
    if abs(mean) > mean_tol * scale:
        raise SolvabilityError(
            f"rhs has quadrature mean {abs(mean):.3e} (relative "
            f"{abs(mean) / scale:.3e}); the Neumann problem is unsolvable"
        )
    n = grid.n_points
    bordered = np.zeros((n + 1, n + 1), dtype=complex)
    bordered[:n, :n] = laplacian.toarray()
    bordered[:n, n] = 1.0
    bordered[n, :n] = grid.weights
    stacked = np.zeros(n + 1, dtype=complex)
    stacked[:n] = rhs - mean
    solution = np.linalg.solve(bordered, stacked)
    return solution[:n]


def limit_hopf_data(coeffs: CoefficientField, grid: Grid1D) -> LimitHopfData:
    """Closed-form r -> 0 crossing data for c0 > 2.

    theta0 and omega0 depend only on c0 and mean(delta); the field z is the
    unique mean-zero solution of the limiting eigenfunction equation.

    Raises
    ------
    NoHopfError
        If c0 <= 2 (covers both the stable regime 0 < c0 <= 2 and the
        regime c0 <= 0 without positive steady states).
    """
    c0 = coeffs.c0
    if c0 <= 2.0:
        raise NoHopfError(_no_hopf_message(c0))
    theta = limit_phase(c0)
    omega = coeffs.delta_bar * math.sqrt(c0 * c0 - 2.0 * c0)
    fprime = eval_nonlinearity(c0, order=1)
    rhs = -c0 * (
        np.exp(-1j * theta) * coeffs.p * fprime
        - coeffs.delta
        - 1j * omega
    )
    # The rhs is a difference of O(c0 * delta_bar) terms; for constant
    # coefficients it cancels to pure roundoff, which must count as zero.
    scale = c0 * float(
        np.abs(coeffs.p * fprime).max() + np.abs(coeffs.delta).max() + omega
    )
    z = solve_poisson_meanzero(rhs, grid, scale=scale)
    z.flags.writeable = False
    return LimitHopfData(theta=theta, omega=omega, beta=1.0, z=z)


def characteristic_matrix(
    model: ModelParams,
    u: np.ndarray,
    mu: complex,
    tau: float,
    laplacian: DiscreteLaplacian | None = None,
) -> np.ndarray:
    """Dense matrix of the delayed eigenvalue operator at (mu, tau).

    Rows discretize  Laplace(psi) + r e^{-mu tau} p f'(u) psi
    - r delta psi - mu psi.
    """
    if laplacian is None:
        laplacian = assemble_laplacian(model.grid)
    dense = laplacian.toarray().astype(complex)
    shift = (
        model.r * np.exp(-mu * tau) * model.coeffs.p * eval_nonlinearity(u, order=1)
        - model.r * model.coeffs.delta
        - mu
    )
    dense[np.diag_indices_from(dense)] += shift
    return dense


def characteristic_residual(
    mu: complex,
    tau: float,
    psi: np.ndarray,
    model: ModelParams,
    u: np.ndarray,
    laplacian: DiscreteLaplacian | None = None,
) -> np.ndarray:
    """Nodewise value of the eigenvalue operator applied to psi.

    Zero exactly when (mu, psi) is an eigenpair of the linearization about
    the steady state u at delay tau.  Linear in psi.
    """
    if laplacian is None:
        laplacian = assemble_laplacian(model.grid)
    psi = np.asarray(psi, dtype=complex)
    shift = (
        model.r * np.exp(-mu * tau) * model.coeffs.p * eval_nonlinearity(u, order=1)
        - model.r * model.coeffs.delta
        - mu
    )
    return laplacian.apply(psi) + shift * psi


class _HopfNewtonFailure(RuntimeError):
    pass


def _hopf_residual(state, model, u, laplacian):
    """Residual pieces (g1, g2, mean) of the crossing system."""
    z, beta, omega, theta = state
    coeffs = model.coeffs
    c0 = coeffs.c0
    coupling = (
        np.exp(-1j * theta) * coeffs.p * eval_nonlinearity(u, order=1)
        - coeffs.delta
        - 1j * omega
    )
    psi = beta * c0 + model.r * z
    g1 = laplacian.apply(z) + coupling * psi
    weights = model.grid.weights
    norm_sq = float(weights @ (z.real**2 + z.imag**2))
    g2 = (beta * beta - 1.0) * c0 * c0 * model.grid.length + model.r**2 * norm_sq
    mean = weights @ z
    return g1, g2, mean, coupling, psi


def _hopf_newton(
    state,
    model: ModelParams,
    u: np.ndarray,
    laplacian: DiscreteLaplacian,
    dense_laplacian: np.ndarray,
    tol: float = 1e-12,
    accept_tol: float = 1e-10,
    max_iter: int = 30,
):
    """Newton correction of (z, beta, omega, theta) at fixed r.

    Solves the real bordered system: 2n rows for g1, one for the
    normalization g2 and two pinning the quadrature mean of z to zero.
    """
    z, beta, omega, theta = state
    z = np.array(z, dtype=complex)
    n = model.grid.n_points
    weights = model.grid.weights
    coeffs = model.coeffs
    c0 = coeffs.c0
    fprime = eval_nonlinearity(u, order=1)
    best = math.inf
    for _ in range(max_iter):
        g1, g2, mean, coupling, psi = _hopf_residual(
            (z, beta, omega, theta), model, u, laplacian
        )
        res_norm = max(float(np.abs(g1).max()), abs(g2), abs(mean))
        if res_norm <= tol:
            return (z, beta, omega, theta), res_norm
        if res_norm > 1e4 * max(best, 1.0):
            raise _HopfNewtonFailure(f"diverging, residual {res_norm:.3e}")
        best = min(best, res_norm)

        col_beta = coupling * c0
        col_omega = -1j * psi
        col_theta = -1j * np.exp(-1j * theta) * coeffs.p * fprime * psi

        jac = np.zeros((2 * n + 3, 2 * n + 3))
        re_c = model.r * coupling.real
        im_c = model.r * coupling.imag
        jac[:n, :n] = dense_laplacian
        jac[:n, :n][np.diag_indices(n)] += re_c
        jac[:n, n : 2 * n] = np.diag(-im_c)
        jac[n : 2 * n, :n] = np.diag(im_c)
        jac[n : 2 * n, n : 2 * n] = dense_laplacian
        jac[n : 2 * n, n : 2 * n][np.diag_indices(n)] += re_c
        jac[:n, 2 * n] = col_beta.real
        jac[n : 2 * n, 2 * n] = col_beta.imag
        jac[:n, 2 * n + 1] = col_omega.real
        jac[n : 2 * n, 2 * n + 1] = col_omega.imag
        jac[:n, 2 * n + 2] = col_theta.real
        jac[n : 2 * n, 2 * n + 2] = col_theta.imag
        jac[2 * n, :n] = 2.0 * model.r**2 * weights * z.real
        jac[2 * n, n : 2 * n] = 2.0 * model.r**2 * weights * z.imag
        jac[2 * n, 2 * n] = 2.0 * beta * c0 * c0 * model.grid.length
        jac[2 * n + 1, :n] = weights
        jac[2 * n + 2, n : 2 * n] = weights

        residual = np.concatenate(
            [g1.real, g1.imag, [g2, mean.real, mean.imag]]
        )
        try:
            delta = np.linalg.solve(jac, -residual)
        except np.linalg.LinAlgError as exc:
            raise _HopfNewtonFailure(str(exc)) from None
        z = z + delta[:n] + 1j * delta[n : 2 * n]
        beta += delta[2 * n]
        omega += delta[2 * n + 1]
        theta += delta[2 * n + 2]

    g1, g2, mean, _, _ = _hopf_residual((z, beta, omega, theta), model, u, laplacian)
    res_norm = max(float(np.abs(g1).max()), abs(g2), abs(mean))
    if res_norm <= accept_tol:
        return (z, beta, omega, theta), res_norm
    raise _HopfNewtonFailure(
        f"no convergence in {max_iter} iterations, residual {res_norm:.3e}"
    )


def continue_hopf(
    model: ModelParams,
    r_target: float,
    n_steps: int | None = None,
    r_cap: float = 0.5,
) -> HopfSolution:
    """Follow the imaginary-axis crossing from r = 0 to ``r_target``.

    Uniform predictor-corrector continuation: at each step the steady state
    is re-solved (warm started) and the crossing system is Newton-corrected
    from the previous solution.  Failed steps are halved; the step recovers
    geometrically after success.  ``r_target = 0`` returns the closed-form
    limit packaged as a :class:`HopfSolution`.

    Parameters
    ----------
    model : ModelParams
        Supplies grid, coefficients and a; its own r is ignored.
    r_target : float
        Destination, 0 <= r_target <= r_cap.
    n_steps : int, optional
        Number of uniform continuation steps (default: enough for a step
        of about 0.025).
    r_cap : float
        Guard rail for the validated small-r regime.  Raise it explicitly
        to explore further; expect stalls once eigenvalue crossings lose
        simplicity.

    Raises
    ------
    NoHopfError
        If c0 <= 2.
    ContinuationStallError
        If step halving cannot advance; carries ``last_good_r``.
    """
    coeffs = model.coeffs
    grid = model.grid
    if r_target < 0:
        raise ValueError(f"r_target must be nonnegative, got {r_target}")
    if r_target > r_cap:
        raise ValueError(
            f"r_target = {r_target:.6g} exceeds the working cap r_cap = {r_cap:.6g}; "
            "pass a larger r_cap explicitly to go beyond the validated regime"
        )
    limit = limit_hopf_data(coeffs, grid)
    laplacian = assemble_laplacian(grid)
    dense = laplacian.toarray()
    c0 = coeffs.c0

    state = (np.array(limit.z, dtype=complex), limit.beta, limit.omega, limit.theta)
    u_prev = np.full(grid.n_points, c0)

    if r_target == 0:
        model0 = model.with_r(0.0)
        g1, g2, mean, _, _ = _hopf_residual(state, model0, u_prev, laplacian)
        res = max(float(np.abs(g1).max()), abs(g2), abs(mean))
        return HopfSolution(
            model=model0,
            u=u_prev,
            z=state[0],
            beta=state[1],
            omega=state[2],
            theta=state[3],
            residual_norm=res,
        )

    if n_steps is None:
        n_steps = max(1, math.ceil(r_target / 0.025))
    base_step = r_target / n_steps
    step = base_step
    r_current = 0.0
    failures = 0
    while r_current < r_target * (1.0 - 1e-15):
        r_next = min(r_current + step, r_target)
        model_next = model.with_r(r_next)
        try:
            steady = solve_steady_state(model_next, u0=u_prev, laplacian=laplacian)
            state_next, res_norm = _hopf_newton(
                state, model_next, steady.u, laplacian, dense
            )
        except (NewtonConvergenceError, _HopfNewtonFailure) as exc:
            failures += 1
            step *= 0.5
            if failures > 40 or step < 1e-13 * r_target:
                raise ContinuationStallError(
                    f"continuation stalled at r = {r_current:.6g} "
                    f"targeting {r_target:.6g}: {exc}",
                    last_good_r=r_current,
                ) from None
            continue
        r_current = r_next
        state = state_next
        u_prev = steady.u
        step = min(2.0 * step, base_step)

    z, beta, omega, theta = state
    if beta < 0:
        beta, z = -beta, -z
    theta = theta % TWO_PI
    model_final = model.with_r(r_target)
    g1, g2, mean, _, _ = _hopf_residual((z, beta, omega, theta), model_final, u_prev, laplacian)
    res = max(float(np.abs(g1).max()), abs(g2), abs(mean))
    return HopfSolution(
        model=model_final,
        u=u_prev,
        z=z,
        beta=beta,
        omega=omega,
        theta=theta,
        residual_norm=res,
    )


def hopf_thresholds(sol: HopfSolution, n_max: int = 3) -> ThresholdSequence:
    """Delay thresholds tau_n = (theta + 2 pi n)/nu for n = 0..n_max.

    Also reports the unnormalized thresholds tau_hat_n = r * tau_n, which
    stay finite in the r -> 0 limit.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be nonnegative, got {n_max}")
    if sol.r <= 0:
        raise ValueError(
            "thresholds in normalized time are undefined at r = 0; "
            "only tau_hat = theta/omega survives the limit"
        )
    indices = np.arange(n_max + 1)
    taus_hat = (sol.theta + TWO_PI * indices) / sol.omega
    taus = taus_hat / sol.r
    return ThresholdSequence(
        taus=taus, taus_hat=taus_hat, nu=sol.nu, omega=sol.omega, n_max=n_max
    )


def nondegeneracy_integral(sol: HopfSolution, n: int = 0) -> complex:
    """Pairing integral certifying simplicity of the crossing eigenvalue.

    S_n = int(psi^2) + tau_hat_n e^{-i theta} int(p f'(u_r) psi^2); it
    normalizes the adjoint pairing in the normal-form computation and must
    stay away from zero for the crossing to be simple.  Emits a
    :class:`SimplicityWarning` when |S_n| < 1e-8 * c0^2 * |Omega|.
    """
    grid = sol.model.grid
    coeffs = sol.model.coeffs
    tau_hat_n = (sol.theta + TWO_PI * n) / sol.omega
    psi_sq = sol.psi * sol.psi
    weighted = grid.weights @ psi_sq
    delayed = grid.weights @ (coeffs.p * eval_nonlinearity(sol.u, order=1) * psi_sq)
    value = weighted + tau_hat_n * np.exp(-1j * sol.theta) * delayed
    scale = coeffs.c0**2 * grid.length
    if abs(value) < 1e-8 * scale:
        warnings.warn(
            f"nondegeneracy integral nearly vanishes (|S_{n}| = {abs(value):.3e}); "
            "the crossing eigenvalue may not be simple",
            SimplicityWarning,
            stacklevel=2,
        )
    return complex(value)


def limit_nondegeneracy_integral(c0: float, volume: float, n: int = 0) -> complex:
    """r -> 0 limit of the nondegeneracy integral.

    Equals (1 + Theta_n/s + i Theta_n) c0^2 |Omega| with s = sqrt(c0^2-2c0)
    and Theta_n = theta0 + 2 pi n; independent of the coefficient profiles
    beyond c0.
    """
    theta0 = limit_phase(c0)
    spread = math.sqrt(c0 * c0 - 2.0 * c0)
    big_theta = theta0 + TWO_PI * n
    return (1.0 + big_theta / spread + 1j * big_theta) * c0 * c0 * volume


def transversality(sol: HopfSolution, n: int = 0) -> complex:
    """Eigenvalue speed d(mu)/d(tau) at the n-th delay threshold.

    Computed from the crossing data as

        dmu/dtau = i nu r e^{-i theta} int(p f'(u_r) psi^2) / (-S_n).

    The real part must be positive (eigenvalues cross left to right); a
    nonpositive real part signals an inconsistent solution and raises.
    """
    if sol.r <= 0:
        raise ValueError("transversality is defined along the branch for r > 0")
    grid = sol.model.grid
    coeffs = sol.model.coeffs
    s_n = nondegeneracy_integral(sol, n)
    delayed = grid.weights @ (
        coeffs.p * eval_nonlinearity(sol.u, order=1) * sol.psi * sol.psi
    )
    dmu = 1j * sol.nu * sol.r * np.exp(-1j * sol.theta) * delayed / (-s_n)
    if dmu.real <= 0:
        raise RuntimeError(
            f"transversality failed: Re d(mu)/d(tau) = {dmu.real:.3e} <= 0 "
            f"at r = {sol.r:.6g}, n = {n}"
        )
    return complex(dmu)


def limit_transversality_real(
    coeffs: CoefficientField, grid: Grid1D, n: int = 0
) -> float:
    """r -> 0 limit of Re d(mu)/d(tau) / r^2 at the n-th threshold.

    Closed form (c0^2 - 2 c0) e^{-2 c0} mean(p)^2 c0^4 |Omega|^2 / |lim S_n|^2.
    """
    c0 = coeffs.c0
    if c0 <= 2.0:
        raise NoHopfError(_no_hopf_message(c0))
    numerator = (
        (c0 * c0 - 2.0 * c0)
        * math.exp(-2.0 * c0)
        * coeffs.p_bar**2
        * c0**4
        * grid.length**2
    )
    limit_s = limit_nondegeneracy_integral(c0, grid.length, n)
    return numerator / abs(limit_s) ** 2


def write_hopf_csv(path, sol: HopfSolution, thresholds: ThresholdSequence) -> None:
    """Dump a crossing: scalar block, then nodewise z and psi columns."""
    grid = sol.model.grid
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"r,{sol.r:.12g}\n")
        handle.write(f"d,{sol.model.d:.12g}\n")
        handle.write(f"beta,{sol.beta:.12g}\n")
        handle.write(f"h,{sol.omega:.12g}\n")
        handle.write(f"theta,{sol.theta:.12g}\n")
        handle.write(f"nu,{sol.nu:.12g}\n")
        for k in range(thresholds.n_max + 1):
            handle.write(f"tau{k},{thresholds.taus[k]:.12g}\n")
            handle.write(f"tau_hat{k},{thresholds.taus_hat[k]:.12g}\n")
        handle.write("x,Re z,Im z,Re psi,Im psi\n")
        for x, z_val, psi_val in zip(grid.nodes, sol.z, sol.psi):
            handle.write(
                f"{x:.12g},{z_val.real:.12g},{z_val.imag:.12g},"
                f"{psi_val.real:.12g},{psi_val.imag:.12g}\n"
            )
