"""Mapping raw spectra onto universal coordinates.

The mean level density of the coupled ensemble is a semicircle whose
radius follows from the second moment of the entry distribution,

    rho(E) = (4 alpha / (pi (1 + lam^2))) * sqrt(R^2 - E^2),
    R^2    = n (1 + lam^2) / (2 alpha),

valid for the symmetric block split n = 2m (and for any split in the
single-GOE and fully decoupled limits).  Unfolding integrates rho in
closed form.  Velocities and curvatures are pushed through the unfolding
map by the chain rule, rescaled against the batch velocity moments

    K = (xddot - (<xdot xddot>/<xdot^2>) xdot) / (pi <xdot^2>),

and finally renormalized to k = K / <|K|> so that mean |k| is exactly 1.
The K rescaling is invariant under any uniform rescaling of rho, which
is why one shared density model can serve block mode as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import SpectralFrame
from .ensemble import DEFAULT_ALPHA
from .errors import ValidationError

#: Levels closer to the support edge than this fraction of the radius are
#: rejected by unfold_dynamics (the density derivative diverges there).
DEFAULT_EDGE_MARGIN = 1e-3


@dataclass(frozen=True)
class DensityModel:
    """Semicircle mean-density model of the coupled ensemble."""

    n: int
    alpha: float = DEFAULT_ALPHA
    lam: float = 1.0
    radius: float = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"dimension must be >= 1, got {self.n}")
        if not self.alpha > 0:
            raise ValidationError(f"gaussian scale must be positive, got {self.alpha}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"coupling must lie in [0, 1], got {self.lam}")
        object.__setattr__(
            self, "radius", float(np.sqrt(self.n * (1.0 + self.lam**2) / (2.0 * self.alpha)))
        )

    @property
    def _prefactor(self) -> float:
        return 4.0 * self.alpha / (np.pi * (1.0 + self.lam**2))


def mean_density(model: DensityModel, e) -> np.ndarray | float:
    """Semicircle density at energy e; zero outside the support."""
    e = np.asarray(e, dtype=float)
    inside = np.abs(e) <= model.radius
    out = np.where(
        inside,
        model._prefactor * np.sqrt(np.maximum(model.radius**2 - e**2, 0.0)),
        0.0,
    )
    return out if out.ndim else float(out)


def density_slope(model: DensityModel, e) -> np.ndarray | float:
    """d rho / dE strictly inside the support (diverges at the edges)."""
    e = np.asarray(e, dtype=float)
    out = -model._prefactor * e / np.sqrt(model.radius**2 - e**2)
    return out if out.ndim else float(out)


def unfold(model: DensityModel, e) -> np.ndarray | float:
    """Cumulative mean level count x(E), the closed-form integral of rho.

    x(E) = n [ 1/2 + E sqrt(R^2 - E^2) / (pi R^2) + arcsin(E/R) / pi ]
    inside the support, clamped to 0 and n outside; monotone
    non-decreasing everywhere.
    """
    e = np.asarray(e, dtype=float)
    r = model.radius
    ec = np.clip(e, -r, r)
    out = model.n * (
        0.5 + ec * np.sqrt(np.maximum(r**2 - ec**2, 0.0)) / (np.pi * r**2) + np.arcsin(ec / r) / np.pi
    )
    # arcsin noise exactly at the edge is O(n sqrt(eps)) and can stick out of
    # the mathematical range; pin it back.
    out = np.clip(out, 0.0, model.n)
    return out if out.ndim else float(out)


def unfold_dynamics(
    model: DensityModel,
    frame: SpectralFrame,
    indices: np.ndarray | None = None,
    edge_margin: float = DEFAULT_EDGE_MARGIN,
):
    """Velocities and curvatures of the unfolded positions x(E(t)).

    Chain rule through the unfolding map:
        xdot  = rho(E) Edot
        xddot = rho(E) Eddot + (d rho / dE) Edot^2
    Returns (xdot, xddot) for the selected levels (all by default).
    Raises if a retained level sits within edge_margin * R of the
    support edge, where the density slope blows up.
    """
    if indices is None:
        indices = np.arange(frame.dim)
    e = frame.energies[indices]
    limit = model.radius * (1.0 - edge_margin)
    if np.any(np.abs(e) > limit):
        worst = float(np.max(np.abs(e)))
        raise ValidationError(
            f"retained level at |E|={worst:.6g} is closer to the support edge "
            f"R={model.radius:.6g} than the margin {edge_margin:g} allows"
        )
    rho = mean_density(model, e)
    xdot = rho * frame.velocities[indices]
    xddot = rho * frame.curvatures[indices] + density_slope(model, e) * frame.velocities[indices] ** 2
    return xdot, xddot


def select_levels(
    frame: SpectralFrame,
    window_fraction: float = 0.5,
    per_block: bool = False,
) -> np.ndarray:
    """Indices of the central window of levels, skipping degenerate-masked ones.

    The window keeps round(window_fraction * n) levels centred by index.
    With per_block set (the decoupled-ensemble mode) the window is
    applied inside each block of a block-mode frame separately.
    """
    if not 0.0 < window_fraction <= 1.0:
        raise ValidationError(f"window fraction must lie in (0, 1], got {window_fraction}")
    blocks = frame.block_sizes if per_block else (frame.dim,)
    picked = []
    offset = 0
    for size in blocks:
        keep = max(int(round(window_fraction * size)), 1)
        lo = offset + (size - keep) // 2
        picked.append(np.arange(lo, lo + keep))
        offset += size
    indices = np.concatenate(picked)
    return indices[~frame.degenerate_mask[indices]]


@dataclass
class CurvatureBatch:
    """Columnar batch of per-level curvature samples for one coupling value.

    Provenance columns identify (realization, level, t); the physics
    columns are filled in pipeline order: raw dynamics first, unfolded
    dynamics next, then rescaled (K) by :func:`rescale_batch` and
    normalized (k) by :func:`normalize_batch`.  The rescaled/normalized
    columns stay None until the corresponding pass has run.
    """

    realization: np.ndarray
    level: np.ndarray
    t: np.ndarray
    energy: np.ndarray
    raw_velocity: np.ndarray
    raw_curvature: np.ndarray
    unfolded_velocity: np.ndarray
    unfolded_curvature: np.ndarray
    rescaled: np.ndarray | None = None
    normalized: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.energy)

    @classmethod
    def from_rows(cls, rows: np.ndarray) -> "CurvatureBatch":
        """Build from an (n, 8) row matrix ordered like the dataclass columns."""
        return cls(
            realization=rows[:, 0].astype(int),
            level=rows[:, 1].astype(int),
            t=rows[:, 2],
            energy=rows[:, 3],
            raw_velocity=rows[:, 4],
            raw_curvature=rows[:, 5],
            unfolded_velocity=rows[:, 6],
            unfolded_curvature=rows[:, 7],
        )


def rescale_batch(batch: CurvatureBatch) -> CurvatureBatch:
    """Fill the rescaled column K from the batch velocity moments.

    Two passes: the moments <xdot^2> and <xdot xddot> are taken over the
    whole batch first, then K = (xddot - (<xdot xddot>/<xdot^2>) xdot)
    / (pi <xdot^2>) per sample.  The projection removes the component of
    the curvature correlated with the velocity, so adding any multiple
    of xdot to xddot leaves K unchanged.
    """
    if len(batch) == 0:
        raise ValidationError("cannot rescale an empty batch")
    xdot = batch.unfolded_velocity
    xddot = batch.unfolded_curvature
    v2 = float(np.mean(xdot**2))
    if v2 == 0.0:
        raise ValidationError("batch velocity second moment is zero")
    cross = float(np.mean(xdot * xddot))
    batch.rescaled = (xddot - (cross / v2) * xdot) / (np.pi * v2)
    return batch


def normalize_batch(batch: CurvatureBatch) -> CurvatureBatch:
    """Fill the normalized column k = K / <|K|>; afterwards mean |k| is 1."""
    if batch.rescaled is None:
        raise ValidationError("rescale the batch before normalizing it")
    if len(batch) == 0:
        raise ValidationError("cannot normalize an empty batch")
    scale = float(np.mean(np.abs(batch.rescaled)))
    if scale == 0.0:
        raise ValidationError("all rescaled curvatures vanish; nothing to normalize")
    batch.normalized = batch.rescaled / scale
    return batch
