"""Synthetic noisy-shape streams with a single change at ``t_star``."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .seeding import frame_rng

_DEFAULT_AXES = {
    ("circle", 2): (1.0, 1.0),
    ("ellipse", 2): (2.0, 1.0),
    ("sphere", 3): (1.0, 1.0, 1.0),
    ("sphere", 4): (1.0, 1.0, 1.0, 1.0),
    ("ellipsoid", 3): (2.0, 1.0, 1.0),
    ("ellipsoid", 4): (2.0, 1.0, 1.0, 1.0),
}

_DEFAULT_DIM = {"circle": 2, "ellipse": 2, "sphere": 3, "ellipsoid": 3}


@dataclass(frozen=True)
class Geometry:
    """A closed surface: the unit sphere in R^dim stretched by ``axes``."""

    kind: str = "circle"
    dim: int = 2
    axes: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _DEFAULT_DIM:
            raise ValueError(f"unknown geometry {self.kind!r}")
        axes = tuple(float(a) for a in self.axes) or _DEFAULT_AXES.get((self.kind, self.dim))
        if axes is None:
            axes = (2.0,) + (1.0,) * (self.dim - 1) if self.kind == "ellipsoid" else (1.0,) * self.dim
        if len(axes) != self.dim or min(axes) <= 0:
            raise ValueError(f"axes {axes} do not fit a {self.dim}-D {self.kind}")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def named(cls, kind: str, dim: int | None = None, axes=()) -> "Geometry":
        return cls(kind, dim or _DEFAULT_DIM.get(kind, 2), tuple(axes))


def sample_shape(geometry: Geometry, n: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` points on the surface plus isotropic N(0, sigma^2) noise.

    Directions are normalised Gaussians scaled by the axes, which is uniform
    in surface measure only when all axes are equal.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    z = rng.standard_normal((n, geometry.dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    pts = z * np.asarray(geometry.axes)
    if sigma > 0:
        pts = pts + sigma * rng.standard_normal(pts.shape)
    return pts


@dataclass(frozen=True)
class Scenario:
    kind: str = "noise_change"
    pre: Geometry = field(default_factory=Geometry)
    post: Geometry = field(default_factory=Geometry)
    sigma_pre: float = 0.05
    sigma_post: float = 0.10
    T: int = 400
    t_star: int = 200
    n_points: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("shape_change", "noise_change"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if not 1 <= self.t_star <= self.T:
            raise ValueError("t_star must lie in [1, T]")
        if self.sigma_pre < 0 or self.sigma_post < 0:
            raise ValueError("noise levels must be nonnegative")
        if self.kind == "noise_change" and self.pre != self.post:
            raise ValueError("a noise change keeps the geometry fixed")

    @classmethod
    def shape_change(cls, sigma=0.05, post=None, **kw) -> "Scenario":
        return cls("shape_change", Geometry.named("circle"), post or Geometry.named("ellipse"), sigma, sigma, **kw)

    @classmethod
    def noise_change(cls, geometry=None, sigma_pre=0.05, sigma_post=0.10, **kw) -> "Scenario":
        g = geometry or Geometry.named("circle")
        return cls("noise_change", g, g, sigma_pre, sigma_post, **kw)

    def frame(self, t: int) -> np.ndarray:
        """Frame ``t`` (1-based); frames after ``t_star`` are post-change."""
        rng = frame_rng(self.seed, "frame", t)
        if t <= self.t_star:
            return sample_shape(self.pre, self.n_points, self.sigma_pre, rng)
        return sample_shape(self.post, self.n_points, self.sigma_post, rng)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        for key in ("pre", "post"):
            if isinstance(d.get(key), dict):
                g = d[key]
                d[key] = Geometry(g["kind"], g.get("dim", _DEFAULT_DIM.get(g["kind"], 2)), tuple(g.get("axes", ())))
            elif isinstance(d.get(key), str):
                d[key] = Geometry.named(d[key])
        return cls(**d)


def generate_scenario(scenario: Scenario) -> np.ndarray:
    """All frames as an array of shape (T, n_points, dim)."""
    return np.stack([scenario.frame(t) for t in range(1, scenario.T + 1)])


def sample_frames(geometry: Geometry, sigma: float, count: int, n_points: int, seed: int, stage: str) -> np.ndarray:
    """Independent frames from one regime, e.g. to fill a Monte-Carlo pool."""
    return np.stack([
        sample_shape(geometry, n_points, sigma, frame_rng(seed, stage, i)) for i in range(count)
    ])
