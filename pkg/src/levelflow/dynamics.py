"""Eigenvalue dynamics along the rotation path H(t) = H1 cos t + H2 sin t.

For this path Hdot = -H1 sin t + H2 cos t and Hddot = -H, so with
P = U^T Hdot U in the instantaneous eigenbasis the level velocities are
the diagonal entries of P and the level curvatures follow the closed
form

    Eddot_k = -E_k + sum_{m != k} 2 P_km^2 / (E_k - E_m).

:func:`spectral_frame` evaluates these directly from one
diagonalization; :func:`curvature_fd_oracle` provides an independent
finite-difference check, and :func:`integrate_motion` integrates the
coupled equations of motion

    dE_k/dt = P_kk,   dP/dt = [P, S] - diag(E),   S_kl = P_kl / (E_l - E_k)

with a fixed-step classical Runge-Kutta scheme as a consistency
diagnostic.  Production statistics always use :func:`spectral_frame`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSpectrumError,
    EigensolverError,
    StencilCrossingError,
    ValidationError,
)


@dataclass(frozen=True)
class RotatingPair:
    """Fixed endpoint matrices of the rotation path; both real symmetric, same dim."""

    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        h1 = np.asarray(self.h1, dtype=float)
        h2 = np.asarray(self.h2, dtype=float)
        if h1.ndim != 2 or h1.shape[0] != h1.shape[1]:
            raise ValidationError(f"h1 must be square, got shape {h1.shape}")
        if h1.shape != h2.shape:
            raise ValidationError(f"h1 and h2 must share a shape, got {h1.shape} vs {h2.shape}")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)

    @property
    def dim(self) -> int:
        return self.h1.shape[0]

    def block(self, lo: int, hi: int) -> "RotatingPair":
        """Sub-pair restricted to index range [lo, hi)."""
        return RotatingPair(self.h1[lo:hi, lo:hi], self.h2[lo:hi, lo:hi])


@dataclass
class SpectralFrame:
    """Spectral data of one parameter point.

    energies are ascending (within each block for block-mode frames),
    velocities equal the diagonal of p_matrix exactly, and
    degenerate_mask flags levels whose nearest-neighbour gap fell below
    the degeneracy tolerance; their curvature is stored but untrusted.
    block_sizes is (n,) for full-spectrum frames and lists per-block
    dimensions when the frame was assembled block by block.
    """

    t: float
    energies: np.ndarray
    velocities: np.ndarray
    curvatures: np.ndarray
    p_matrix: np.ndarray
    degenerate_mask: np.ndarray
    block_sizes: tuple = field(default=())

    def __post_init__(self):
        if not self.block_sizes:
            self.block_sizes = (len(self.energies),)

    @property
    def dim(self) -> int:
        return len(self.energies)


def hamiltonian_at(pair: RotatingPair, t: float) -> np.ndarray:
    """H(t) = H1 cos t + H2 sin t."""
    return pair.h1 * np.cos(t) + pair.h2 * np.sin(t)


def hamiltonian_rate(pair: RotatingPair, t: float, order: int = 1) -> np.ndarray:
    """First or second t-derivative of H(t); note Hddot = -H on this path."""
    if order == 1:
        return -pair.h1 * np.sin(t) + pair.h2 * np.cos(t)
    if order == 2:
        return -hamiltonian_at(pair, t)
    raise ValidationError(f"derivative order must be 1 or 2, got {order}")


def _eigh(h: np.ndarray, context: str):
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(
            f"eigensolver failed ({context}): dim={h.shape[0]}, "
            f"norm={np.linalg.norm(h):.6g}, sym_defect={np.max(np.abs(h - h.T)):.3g}"
        ) from exc


def _fix_eigenvector_signs(u: np.ndarray) -> np.ndarray:
    # Make each column's largest-magnitude entry positive. Curvatures only
    # ever use squares of P entries, but a fixed convention keeps P itself
    # reproducible.
    leads = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[leads, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def _local_gaps(energies: np.ndarray) -> np.ndarray:
    """Distance of each level to its nearest neighbour (inf for a 1-level frame)."""
    if len(energies) < 2:
        return np.full(len(energies), np.inf)
    gaps = np.diff(energies)
    return np.minimum(np.r_[np.inf, gaps], np.r_[gaps, np.inf])


def curvature_sums(energies: np.ndarray, p_matrix: np.ndarray) -> np.ndarray:
    """Closed-form curvatures from energies and the rotated perturbation matrix.

    Exactly coincident levels contribute nothing to each other's sum; any
    such level is flagged by the degeneracy mask and its curvature is not
    to be trusted anyway.
    """
    diff = energies[:, None] - energies[None, :]
    np.fill_diagonal(diff, np.inf)
    diff[diff == 0.0] = np.inf
    return -energies + 2.0 * np.sum(p_matrix * p_matrix / diff, axis=1)


def spectral_frame(
    pair: RotatingPair,
    t: float,
    degeneracy_tol: float | None = None,
) -> SpectralFrame:
    """Diagonalize H(t) and evaluate level velocities and curvatures.

    degeneracy_tol defaults to 1e-8 times the half-spread of the computed
    spectrum (about the semicircle radius for GOE-scaled input).
    """
    energies, u = _eigh(hamiltonian_at(pair, t), f"H(t) at t={t}")
    u = _fix_eigenvector_signs(u)
    p = u.T @ hamiltonian_rate(pair, t, 1) @ u
    if degeneracy_tol is None:
        # Positive floor so exactly coincident spectra still get masked.
        degeneracy_tol = max(1e-8 * 0.5 * (energies[-1] - energies[0]), np.finfo(float).tiny)
    elif not degeneracy_tol > 0:
        raise ValidationError(f"degeneracy tolerance must be positive, got {degeneracy_tol}")
    return SpectralFrame(
        t=float(t),
        energies=energies,
        velocities=np.diag(p).copy(),
        curvatures=curvature_sums(energies, p),
        p_matrix=p,
        degenerate_mask=_local_gaps(energies) < degeneracy_tol,
    )


def spectral_frame_blocks(
    pair: RotatingPair,
    t: float,
    block_sizes: tuple,
    degeneracy_tol: float | None = None,
) -> SpectralFrame:
    """Per-block frame for exactly block-diagonal pairs (decoupled ensemble).

    Each diagonal block is diagonalized on its own, so curvature sums
    never mix levels of different blocks and free crossings between
    blocks cannot trip the degeneracy guard.  energies are ascending
    within each block; p_matrix is assembled block-diagonal, which is the
    exact result since cross-block couplings vanish identically.
    """
    if sum(block_sizes) != pair.dim:
        raise ValidationError(
            f"block sizes {block_sizes} do not add up to dimension {pair.dim}"
        )
    frames = []
    lo = 0
    for size in block_sizes:
        frames.append(spectral_frame(pair.block(lo, lo + size), t, degeneracy_tol))
        lo += size
    p = np.zeros((pair.dim, pair.dim))
    lo = 0
    for fr, size in zip(frames, block_sizes):
        p[lo : lo + size, lo : lo + size] = fr.p_matrix
        lo += size
    return SpectralFrame(
        t=float(t),
        energies=np.concatenate([fr.energies for fr in frames]),
        velocities=np.concatenate([fr.velocities for fr in frames]),
        curvatures=np.concatenate([fr.curvatures for fr in frames]),
        p_matrix=p,
        degenerate_mask=np.concatenate([fr.degenerate_mask for fr in frames]),
        block_sizes=tuple(block_sizes),
    )


def curvature_fd_oracle(pair: RotatingPair, t: float, delta: float):
    """Velocities and curvatures from a three-point central stencil.

    Three independent diagonalizations at t - delta, t, t + delta with
    ascending eigenvalue matching.  Valid only while no level crossing
    occurs inside the stencil; a crossing is detected when some level
    moves by more than half its nearest-neighbour gap, and reported as
    :class:`StencilCrossingError`.  Intentionally ignorant of the
    closed-form path it is used to check.
    """
    if not delta > 0:
        raise ValidationError(f"stencil width must be positive, got {delta}")
    e_minus = np.linalg.eigvalsh(hamiltonian_at(pair, t - delta))
    e_center = np.linalg.eigvalsh(hamiltonian_at(pair, t))
    e_plus = np.linalg.eigvalsh(hamiltonian_at(pair, t + delta))
    half_gap = 0.5 * _local_gaps(e_center)
    for e_end, side in ((e_minus, "t-delta"), (e_plus, "t+delta")):
        shift = np.abs(e_end - e_center)
        bad = shift >= half_gap
        if np.any(bad):
            k = int(np.argmax(shift - half_gap))
            raise StencilCrossingError(
                f"level ordering ambiguous across the stencil at {side}: level {k} "
                f"moved {shift[k]:.3g} against a half-gap of {half_gap[k]:.3g}"
            )
    velocities = (e_plus - e_minus) / (2.0 * delta)
    curvatures = (e_plus - 2.0 * e_center + e_minus) / delta**2
    return velocities, curvatures


def _motion_rhs(energies: np.ndarray, p: np.ndarray):
    diff = energies[None, :] - energies[:, None]  # E_l - E_k at [k, l]
    np.fill_diagonal(diff, np.inf)
    s = p / diff
    dp = p @ s - s @ p
    dp[np.diag_indices_from(dp)] -= energies
    return np.diag(p).copy(), dp


def integrate_motion(
    pair: RotatingPair,
    t0: float,
    t1: float,
    steps: int,
    gap_floor: float | None = None,
) -> SpectralFrame:
    """Propagate the coupled (E, P) equations of motion from t0 to t1.

    Fixed-step classical fourth-order Runge-Kutta; a diagnostic
    cross-check of the formalism, not a production path, so no adaptive
    stepping.  Aborts with :class:`DegenerateSpectrumError` if any gap
    falls below gap_floor (default 1e-9 of the initial spectral span)
    while integrating.
    """
    if steps < 1:
        raise ValidationError(f"step count must be >= 1, got {steps}")
    start = spectral_frame(pair, t0)
    if np.any(start.degenerate_mask):
        raise DegenerateSpectrumError(
            f"initial frame at t={t0} has near-degenerate levels"
        )
    if t1 == t0:
        return start
    energies = start.energies.copy()
    p = start.p_matrix.copy()
    span = energies[-1] - energies[0]
    if gap_floor is None:
        gap_floor = max(1e-9 * span, np.finfo(float).tiny)
    h = (t1 - t0) / steps
    for _ in range(steps):
        if np.min(np.diff(energies)) < gap_floor:
            raise DegenerateSpectrumError(
                f"gap below floor {gap_floor:.3g} during integration"
            )
        k1e, k1p = _motion_rhs(energies, p)
        k2e, k2p = _motion_rhs(energies + 0.5 * h * k1e, p + 0.5 * h * k1p)
        k3e, k3p = _motion_rhs(energies + 0.5 * h * k2e, p + 0.5 * h * k2p)
        k4e, k4p = _motion_rhs(energies + h * k3e, p + h * k3p)
        energies = energies + (h / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
        p = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    tol = max(1e-8 * 0.5 * (energies[-1] - energies[0]), np.finfo(float).tiny)
    return SpectralFrame(
        t=float(t1),
        energies=energies,
        velocities=np.diag(p).copy(),
        curvatures=curvature_sums(energies, p),
        p_matrix=p,
        degenerate_mask=_local_gaps(energies) < tol,
    )


def rotation_frame_check(pair: RotatingPair, t: float) -> float:
    """Deviation of the rotated-frame spectrum from the direct one.

    In the eigenbasis of H(0), the path is represented exactly by
    M(t) = diag(E(0)) cos t + P(0) sin t, which is similar to H(t); the
    sorted spectra of the two must therefore coincide.  Returns the
    maximum absolute eigenvalue mismatch, which should sit at the
    eigensolver roundoff scale.
    """
    start = spectral_frame(pair, 0.0)
    m = np.diag(start.energies) * np.cos(t) + start.p_matrix * np.sin(t)
    rotated = np.linalg.eigvalsh(m)
    direct = np.linalg.eigvalsh(hamiltonian_at(pair, t))
    return float(np.max(np.abs(rotated - direct)))
