"""Covariance-matrix toolkit for multimode Gaussian states.

Conventions used throughout the package:

* shot-noise units (SNU): the vacuum has variance 1 in each quadrature,
* quadratures are interleaved as (X1, P1, X2, P2, ...),
* a Gaussian state is fully specified by its mean vector and covariance
  matrix; all operations here are pure functions returning new states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PHYS_TOL",
    "InvalidCovarianceError",
    "GaussianState",
    "vacuum_state",
    "squeezed_state",
    "tensor",
    "symplectic_form",
    "symplectic_eigenvalues",
    "validate_physical",
    "gaussian_log_negativity",
    "pt_trace_norm",
    "apply_beamsplitter",
    "apply_phase_rotation",
    "apply_loss",
    "make_kerr_entangled",
    "partial_trace",
]

# Physicality slack on symplectic eigenvalues (nu >= 1 - PHYS_TOL).
PHYS_TOL = 1e-9
# Allowed relative asymmetry of a covariance matrix before it is rejected.
SYMMETRY_TOL = 1e-10


class InvalidCovarianceError(ValueError):
    """Covariance matrix is not a valid symmetric (positive definite) matrix."""


@dataclass(eq=False)
class GaussianState:
    """Gaussian state of ``n_modes`` modes in shot-noise units.

    Parameters
    ----------
    mean : array, shape (2n,)
        Quadrature expectation values, ordered (X1, P1, ..., Xn, Pn).
    cov : array, shape (2n, 2n)
        Symmetric covariance matrix. It is symmetrized on construction;
        asymmetry beyond a small tolerance is rejected.

    Physicality (uncertainty relation) is not enforced by the constructor
    so that :func:`validate_physical` stays a usable predicate; every state
    factory and channel operation in this package preserves it.
    """

    mean: np.ndarray
    cov: np.ndarray
    _chol: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1:
            raise ValueError(f"mean must be a vector, got shape {mean.shape}")
        if mean.size % 2 != 0 or mean.size == 0:
            raise ValueError(f"mean length must be a positive multiple of 2, got {mean.size}")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > SYMMETRY_TOL * scale:
            raise InvalidCovarianceError("covariance matrix is not symmetric")
        self.mean = mean
        self.cov = 0.5 * (cov + cov.T)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def cholesky_factor(self) -> np.ndarray:
        """Lower-triangular factor of ``cov``, cached for repeated sampling."""
        if self._chol is None:
            try:
                self._chol = np.linalg.cholesky(self.cov)
            except np.linalg.LinAlgError as exc:
                raise InvalidCovarianceError(
                    "covariance matrix is not positive definite"
                ) from exc
        return self._chol

    def copy(self) -> "GaussianState":
        return GaussianState(self.mean.copy(), self.cov.copy())


def vacuum_state(n_modes: int) -> GaussianState:
    """Vacuum of ``n_modes`` modes: zero mean, identity covariance."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    return GaussianState(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def squeezed_state(var_x: float, var_p: float) -> GaussianState:
    """Single-mode state with uncorrelated quadrature variances (var_x, var_p).

    Physical (a minimum-uncertainty or noisier state) iff var_x * var_p >= 1.
    """
    if var_x <= 0 or var_p <= 0:
        raise ValueError("quadrature variances must be positive")
    if var_x * var_p < 1.0 - PHYS_TOL:
        raise ValueError(f"var_x*var_p = {var_x * var_p:.6g} violates the uncertainty relation")
    return GaussianState(np.zeros(2), np.diag([float(var_x), float(var_p)]))


def tensor(*states: GaussianState) -> GaussianState:
    """Tensor product: concatenate means, block-diagonal covariances."""
    if not states:
        raise ValueError("tensor requires at least one state")
    mean = np.concatenate([s.mean for s in states])
    dim = mean.size
    cov = np.zeros((dim, dim))
    k = 0
    for s in states:
        d = s.mean.size
        cov[k : k + d, k : k + d] = s.cov
        k += d
    return GaussianState(mean, cov)


def symplectic_form(n_modes: int) -> np.ndarray:
    """Standard symplectic form: block diagonal [[0, 1], [-1, 0]] per mode."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _as_cov(state_or_cov) -> np.ndarray:
    if isinstance(state_or_cov, GaussianState):
        return state_or_cov.cov
    cov = np.asarray(state_or_cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2 != 0:
        raise InvalidCovarianceError(f"expected a 2n x 2n matrix, got shape {cov.shape}")
    return cov


def symplectic_eigenvalues(cov) -> np.ndarray:
    """Symplectic spectrum of a covariance matrix, sorted ascending.

    The values are the moduli of the eigenvalues of i*Omega*cov, each
    counted once (one per mode). For a physical state all values are >= 1.

    Raises
    ------
    InvalidCovarianceError
        If the matrix is not symmetric or not positive definite.
    """
    cov = _as_cov(cov)
    scale = max(1.0, float(np.abs(cov).max()))
    if np.abs(cov - cov.T).max() > SYMMETRY_TOL * scale:
        raise InvalidCovarianceError("covariance matrix is not symmetric")
    if np.linalg.eigvalsh(cov).min() <= 0.0:
        raise InvalidCovarianceError("covariance matrix is not positive definite")
    n = cov.shape[0] // 2
    spectrum = np.linalg.eigvals(symplectic_form(n) @ cov)
    # Eigenvalues of Omega*cov come in +/- i*nu pairs; |.| yields each nu twice.
    paired = np.sort(np.abs(spectrum))
    return paired[::2].copy()


def validate_physical(state_or_cov, tol: float = PHYS_TOL) -> bool:
    """True iff the covariance matrix satisfies the uncertainty relation.

    Checks min symplectic eigenvalue >= 1 - tol; never raises on an
    unphysical input, only on a malformed matrix.
    """
    return bool(symplectic_eigenvalues(state_or_cov).min() >= 1.0 - tol)


def _pt_cov(cov: np.ndarray) -> np.ndarray:
    """Partial transposition of a two-mode covariance: sign flip of P_B."""
    if cov.shape != (4, 4):
        raise ValueError(f"partial transposition needs a two-mode (4x4) cov, got {cov.shape}")
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    return flip @ cov @ flip


def gaussian_log_negativity(state_or_cov) -> float:
    """Gaussian logarithmic negativity of a two-mode state, in bits.

    Computed as -log2 of the smallest symplectic eigenvalue of the
    partially transposed covariance matrix. The value is *not* clamped at
    zero: a Gaussian fit to an unentangled mixture legitimately yields a
    negative number, and that number is meaningful for comparisons.
    """
    cov = _as_cov(state_or_cov)
    nu = symplectic_eigenvalues(_pt_cov(cov))
    return float(-np.log2(nu.min()))


def pt_trace_norm(state_or_cov) -> float:
    """Trace norm of the partially transposed two-mode Gaussian state.

    Equals prod_k max(1, 1/nu_k) over the symplectic spectrum of the
    partially transposed covariance; >= 1 always, and log2 of it equals
    the logarithmic negativity when it is positive.
    """
    cov = _as_cov(state_or_cov)
    nu = symplectic_eigenvalues(_pt_cov(cov))
    return float(np.prod(np.maximum(1.0, 1.0 / nu)))


def _beamsplitter_symplectic(n_modes: int, mode_a: int, mode_b: int, transmittance: float) -> np.ndarray:
    t = np.sqrt(transmittance)
    r = np.sqrt(1.0 - transmittance)
    s = np.eye(2 * n_modes)
    ax, bx = 2 * mode_a, 2 * mode_b
    for off in (0, 1):  # same mixing for X and P
        s[bx + off, bx + off] = t
        s[bx + off, ax + off] = -r
        s[ax + off, ax + off] = t
        s[ax + off, bx + off] = r
    return s


def apply_beamsplitter(
    state: GaussianState, mode_a: int, mode_b: int, transmittance: float
) -> GaussianState:
    """Interfere two modes on a beam splitter of given transmittance.

    Sign convention (mode_b is the transmitted signal, mode_a the other
    input, e.g. a vacuum tap port):

        X_b' = sqrt(T) X_b - sqrt(1-T) X_a
        X_a' = sqrt(T) X_a + sqrt(1-T) X_b

    and identically for the P quadratures.
    """
    n = state.n_modes
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance}")
    if mode_a == mode_b:
        raise ValueError("beam splitter needs two distinct modes")
    for m in (mode_a, mode_b):
        if not 0 <= m < n:
            raise ValueError(f"mode index {m} out of range for {n} modes")
    s = _beamsplitter_symplectic(n, mode_a, mode_b, transmittance)
    return GaussianState(s @ state.mean, s @ state.cov @ s.T)


def apply_phase_rotation(state: GaussianState, mode: int, theta: float) -> GaussianState:
    """Rotate one mode in phase space by angle theta (a local Gaussian unitary)."""
    n = state.n_modes
    if not 0 <= mode < n:
        raise ValueError(f"mode index {mode} out of range for {n} modes")
    s = np.eye(2 * n)
    c, sn = np.cos(theta), np.sin(theta)
    k = 2 * mode
    s[k : k + 2, k : k + 2] = [[c, -sn], [sn, c]]
    return GaussianState(s @ state.mean, s @ state.cov @ s.T)


def apply_loss(state: GaussianState, mode: int, eta: float) -> GaussianState:
    """Pure attenuation of one mode with transmittance eta.

    Equivalent to mixing the mode with vacuum on a beam splitter of
    transmittance eta and discarding the ancilla: the mode's covariance
    block becomes eta*block + (1-eta)*I, cross blocks scale by sqrt(eta),
    and the mode's mean scales by sqrt(eta).
    """
    n = state.n_modes
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if not 0 <= mode < n:
        raise ValueError(f"mode index {mode} out of range for {n} modes")
    root = np.sqrt(eta)
    scale = np.ones(2 * n)
    scale[2 * mode : 2 * mode + 2] = root
    cov = state.cov * np.outer(scale, scale)
    cov[2 * mode, 2 * mode] += 1.0 - eta
    cov[2 * mode + 1, 2 * mode + 1] += 1.0 - eta
    mean = state.mean * scale
    return GaussianState(mean, cov)


def make_kerr_entangled(v_squeezed: float, v_antisqueezed: float) -> GaussianState:
    """Two-mode entangled state from two squeezed beams on a 50/50 beam splitter.

    Input 1 is squeezed in X with variances (v_squeezed, v_antisqueezed),
    input 2 is squeezed in P with (v_antisqueezed, v_squeezed); the outputs
    of a balanced beam splitter form the entangled pair (A, B). The result
    has zero mean and covariance blocks

        A = B = diag(s, s),  C = diag((Vs-Va)/2, (Va-Vs)/2),  s = (Vs+Va)/2

    so the joint quadratures satisfy Var(X_A+X_B) = Var(P_A-P_B) = 2*Vs.
    """
    vs, va = float(v_squeezed), float(v_antisqueezed)
    if not 0.0 < vs <= 1.0:
        raise ValueError(f"v_squeezed must lie in (0, 1], got {vs}")
    if va < 1.0:
        raise ValueError(f"v_antisqueezed must be >= 1, got {va}")
    if vs * va < 1.0 - PHYS_TOL:
        raise ValueError(
            f"v_squeezed * v_antisqueezed = {vs * va:.6g} violates the uncertainty relation"
        )
    inputs = tensor(squeezed_state(vs, va), squeezed_state(va, vs))
    # Port assignment fixes the sign of the correlation blocks: the
    # X-squeezed beam enters the transmitted-signal port.
    return apply_beamsplitter(inputs, mode_a=1, mode_b=0, transmittance=0.5)


def partial_trace(state: GaussianState, keep) -> GaussianState:
    """Reduced state on the given modes (ascending mode order is kept)."""
    n = state.n_modes
    kept = sorted(set(int(m) for m in keep))
    if not kept:
        raise ValueError("keep set must not be empty")
    if kept[0] < 0 or kept[-1] >= n:
        raise ValueError(f"keep set {kept} out of range for {n} modes")
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in kept])
    return GaussianState(state.mean[idx], state.cov[np.ix_(idx, idx)])
