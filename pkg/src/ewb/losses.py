"""Loss functions with declared regularity, and fast summed evaluation."""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class LossFn:
    """A loss on a space, batched over leading point axes.

    ``alpha``, ``beta_expconcave``, ``lipschitz`` and ``range`` are the
    regularity the caller claims; the checkers in :mod:`ewb.analysis` can
    test them. ``family``/``center``/``scale``/``offset`` let sums of many
    losses of one family be evaluated in a single vectorized pass.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    alpha: Optional[float] = None
    beta_expconcave: Optional[float] = None
    lipschitz: Optional[float] = None
    range: Optional[Tuple[float, float]] = None
    family: Optional[str] = None
    center: Optional[np.ndarray] = field(default=None, repr=False)
    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        a, b, lip = self.alpha, self.beta_expconcave, self.lipschitz
        if a is not None and b is not None and lip is not None and a > 0:
            if b > a / lip**2 * (1.0 + 1e-12):
                raise ValueError(
                    f"declared beta {b} exceeds alpha/L^2 = {a / lip ** 2}"
                )

    def __call__(self, x):
        return np.asarray(self.fn(x), dtype=float) + self.offset

    def shifted(self, c):
        """Same loss plus the constant ``c``."""
        rng = None if self.range is None else (self.range[0] + c, self.range[1] + c)
        return replace(self, offset=self.offset + c, range=rng)


def squared_distance_loss(space, center):
    """``d^2(center, .)``.

    On spaces with curvature <= 0 it is 2-convex and, on a bounded domain,
    ``2 diam``-Lipschitz, hence expconcave for beta = 1 / (2 diam^2).
    """
    center = np.asarray(center, dtype=float)
    diam = space.diameter
    nonpositive = space.kappa <= 0
    return LossFn(
        fn=lambda x: space._dist(x, center) ** 2,
        alpha=2.0 if nonpositive else None,
        beta_expconcave=1.0 / (2.0 * diam**2) if nonpositive else None,
        lipschitz=2.0 * diam,
        range=(0.0, diam**2),
        family="sqdist",
        center=center,
    )


def scaled_distance_loss(space, center, scale=None):
    """``d(center, .) / scale``, with ``scale`` defaulting to the diameter so
    that values lie in [0, 1].

    Distance functions are convex on nonpositively curved spaces and on the
    sphere within a ball of radius pi/2, which covers caps of angle < pi/4.
    """
    center = np.asarray(center, dtype=float)
    scale = space.diameter if scale is None else float(scale)
    convex = space.kappa <= 0 or space.diameter < math.pi / 2
    return LossFn(
        fn=lambda x: space._dist(x, center) / scale,
        alpha=0.0 if convex else None,
        lipschitz=1.0 / scale,
        range=(0.0, space.diameter / scale),
        family="dist",
        center=center,
        scale=scale,
    )


def constant_loss(space, c):
    k = len(space.point_shape)
    return LossFn(
        fn=lambda x: np.zeros(np.shape(x)[: np.ndim(x) - k]),
        alpha=0.0,
        lipschitz=None,
        range=(c, c),
        offset=c,
    )


class LossHistory:
    """Running record of revealed losses with a fast cumulative evaluator."""

    def __init__(self, space):
        self.space = space
        self.losses = []
        self._centers = {"sqdist": [], "dist": []}
        self._scales = {"sqdist": [], "dist": []}
        self._other = []
        self._offset = 0.0
        self._cache = {}

    def __len__(self):
        return len(self.losses)

    def append(self, loss):
        self.losses.append(loss)
        if loss.family in self._centers and loss.center is not None:
            self._centers[loss.family].append(loss.center)
            self._scales[loss.family].append(loss.scale)
            self._offset += loss.offset
            self._cache.pop(loss.family, None)
        else:
            self._other.append(loss)

    def total(self, x):
        """Sum of all recorded losses at each of the points ``x``."""
        x = np.asarray(x, dtype=float)
        k = len(self.space.point_shape)
        batch = x.shape[: x.ndim - k]
        xe = x.reshape(batch + (1,) + self.space.point_shape)
        out = np.full(batch, self._offset)
        for fam, centers in self._centers.items():
            if not centers:
                continue
            c, inv = self._arrays(fam)
            d = self.space._dist(xe, c)
            if fam == "sqdist":
                d = d * d
            out = out + np.sum(d * inv, axis=-1)
        for loss in self._other:
            out = out + loss(x)
        return out

    def _arrays(self, fam):
        if fam not in self._cache:
            self._cache[fam] = (np.asarray(self._centers[fam]), 1.0 / np.asarray(self._scales[fam]))
        return self._cache[fam]

    def centers(self, family):
        return self._arrays(family)[0] if self._centers[family] else np.asarray([])

    def single_family(self):
        fams = [f for f, c in self._centers.items() if c]
        if self._other or len(fams) != 1:
            return None
        return fams[0]
