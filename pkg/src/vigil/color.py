"""Dominant-color extraction: K-means over RGB pixel points, dominance-sorted
cluster report, and a fixed named palette on top.

The clustering objective is the summed squared Euclidean distance between
each pixel point and its assigned centroid; Lloyd iterations never increase
it, which the tests assert per iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imaging import Frame
from .rng import SplitMix64


class ColorError(Exception):
    pass


class EmptyInput(ColorError):
    pass


class KTooLarge(ColorError):
    pass


class EmptyCrop(ColorError):
    pass


DEFAULT_K = 4  # body + glass + shadow + trim
DEFAULT_TOL = 0.5
DEFAULT_MAX_ITER = 50
CENTER_WINDOW = 0.6  # fraction of each crop axis sampled for vehicle color


@dataclass(frozen=True)
class ColorName:
    name: str
    anchor: tuple[int, int, int]


# Fixed 12-name palette; nearest anchor in plain RGB decides the name.
# Order matters: equidistant points resolve to the lower index.
PALETTE: tuple[ColorName, ...] = (
    ColorName("black", (0, 0, 0)),
    ColorName("white", (255, 255, 255)),
    ColorName("gray", (128, 128, 128)),
    ColorName("silver", (192, 192, 192)),
    ColorName("red", (200, 0, 0)),
    ColorName("green", (0, 128, 0)),
    ColorName("blue", (0, 0, 200)),
    ColorName("yellow", (240, 200, 0)),
    ColorName("orange", (255, 140, 0)),
    ColorName("brown", (139, 69, 19)),
    ColorName("maroon", (110, 0, 20)),
    ColorName("cyan", (0, 190, 190)),
)

_ANCHORS = np.array([c.anchor for c in PALETTE], dtype=np.float64)


@dataclass
class ClusterModel:
    """K-means result: centroids v_j, per-cluster populations, and the
    squared-distance objective at termination (history is per-iteration)."""

    centroids: np.ndarray  # (k, 3) float64
    populations: np.ndarray  # (k,) int64
    k: int
    objective: float
    objective_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.centroids) != self.k or len(self.populations) != self.k:
            raise ValueError("centroids/populations must have length k")


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per point (squared Euclidean, ties to lowest index).
    Returns (assignment, squared distance to the chosen centroid)."""
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assign = np.argmin(d2, axis=1)  # argmin takes the first minimum: lowest index
    return assign, d2[np.arange(len(points)), assign]


def _farthest_point_seeds(points: np.ndarray, k: int, rng: SplitMix64) -> np.ndarray:
    """Greedy farthest-point initialization from a seeded random start."""
    n = len(points)
    seeds = np.empty((k, 3), dtype=np.float64)
    seeds[0] = points[rng.below(n)]
    min_d2 = ((points - seeds[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        idx = int(np.argmax(min_d2))
        seeds[j] = points[idx]
        min_d2 = np.minimum(min_d2, ((points - seeds[j]) ** 2).sum(axis=1))
    return seeds


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> ClusterModel:
    """Lloyd's algorithm over (n, 3) RGB points.

    Iterates assign/recompute until the largest centroid shift drops below
    `tol` or `max_iter` is reached. Empty clusters are re-seeded to the point
    farthest from its currently assigned centroid.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError(f"points must be (n, 3), got {points.shape}")
    n = len(points)
    if n == 0:
        raise EmptyInput("no points to cluster")
    if not (1 <= k <= n):
        raise KTooLarge(f"k={k} with {n} points")

    centroids = _farthest_point_seeds(points, k, SplitMix64(seed))
    history: list[float] = []
    assign = np.zeros(n, dtype=np.intp)

    for _ in range(max_iter):
        assign, d2 = _assign(points, centroids)
        history.append(float(d2.sum()))

        new_centroids = centroids.copy()
        counts = np.bincount(assign, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                new_centroids[j] = points[assign == j].mean(axis=0)
        # re-seed empties to the globally worst-fit point
        for j in np.flatnonzero(counts == 0):
            idx = int(np.argmax(d2))
            new_centroids[j] = points[idx]
            d2[idx] = 0.0

        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift < tol:
            break

    assign, d2 = _assign(points, centroids)
    populations = np.bincount(assign, minlength=k).astype(np.int64)
    return ClusterModel(
        centroids=centroids,
        populations=populations,
        k=k,
        objective=float(d2.sum()),
        objective_history=history,
    )


def kmeans_objective(points: np.ndarray, model: ClusterModel) -> float:
    """Summed squared distance of every point to its nearest centroid."""
    points = np.asarray(points, dtype=np.float64)
    _, d2 = _assign(points, model.centroids)
    return float(d2.sum())


def _luma(rgb: np.ndarray) -> float:
    return float(rgb @ np.array([0.299, 0.587, 0.114]))


def sort_by_dominance(model: ClusterModel) -> ClusterModel:
    """Reorder clusters by descending population, ties by centroid luma
    (brighter first). The cluster multiset is preserved."""
    order = sorted(
        range(model.k),
        key=lambda j: (-int(model.populations[j]), -_luma(model.centroids[j])),
    )
    return ClusterModel(
        centroids=model.centroids[order].copy(),
        populations=model.populations[order].copy(),
        k=model.k,
        objective=model.objective,
        objective_history=list(model.objective_history),
    )


def name_color(p) -> ColorName:
    """Nearest palette anchor by Euclidean distance, ties to lowest index."""
    p = np.asarray(p, dtype=np.float64)
    d2 = ((_ANCHORS - p) ** 2).sum(axis=1)
    return PALETTE[int(np.argmin(d2))]


def center_window_pixels(crop: Frame, window: float = CENTER_WINDOW) -> np.ndarray:
    """Pixels from the centered window fraction of the crop, as (n, 3) floats.
    Suppresses road/background fringe around a vehicle bbox."""
    h, w = crop.height, crop.width
    ww = max(1, round(w * window))
    wh = max(1, round(h * window))
    x0 = (w - ww) // 2
    y0 = (h - wh) // 2
    return crop.pixels[y0 : y0 + wh, x0 : x0 + ww].reshape(-1, 3).astype(np.float64)


def classify_vehicle_color(
    crop: Frame, k: int = DEFAULT_K, seed: int = 0
) -> tuple[ColorName, float]:
    """Name the dominant color of a vehicle crop.

    Clusters the center-window pixels, sorts by dominance, and names the top
    centroid. The returned fraction is that cluster's share of the samples.
    """
    pts = center_window_pixels(crop)
    if len(pts) == 0:
        raise EmptyCrop("no pixels in crop")
    k = min(k, len(pts))
    model = sort_by_dominance(kmeans(pts, k, seed=seed))
    top = model.centroids[0]
    fraction = float(model.populations[0]) / float(len(pts))
    return name_color(top), fraction


def swatch_report(model: ClusterModel, total: int) -> list[tuple[str, str, float]]:
    """(name, hex, share) per cluster in the model's order; CLI helper."""
    rows = []
    for j in range(model.k):
        c = np.clip(np.floor(model.centroids[j] + 0.5), 0, 255).astype(int)
        rows.append(
            (
                name_color(model.centroids[j]).name,
                "#{:02x}{:02x}{:02x}".format(*c),
                float(model.populations[j]) / total if total else 0.0,
            )
        )
    return rows
