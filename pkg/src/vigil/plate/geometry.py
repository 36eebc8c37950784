"""Contour tracing, polygon simplification, and 4-point rectification.

Contours are Moore-neighbor boundary traces (clockwise, 8-connected) of the
foreground components of a mask. Polygon simplification is iterative
Ramer-Douglas-Peucker over the closed ring, split at the point farthest from
the trace start so both chains have stable anchors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..imaging import BitMask, Frame, GrayFrame

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)

# clockwise in image coordinates (y down), starting east
_DIRS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


class DegenerateQuad(Exception):
    pass


@dataclass
class Contour:
    points: np.ndarray  # (n, 2) int, ordered (x, y) boundary pixels
    area: int  # enclosed component pixel count

    def perimeter(self) -> float:
        if len(self.points) < 2:
            return 0.0
        diffs = np.diff(np.vstack([self.points, self.points[:1]]), axis=0)
        return float(np.sqrt((diffs**2).sum(axis=1)).sum())


_DIR_INDEX = {d: i for i, d in enumerate(_DIRS)}


def _trace_boundary(component: np.ndarray, x0: int, y0: int) -> np.ndarray:
    """Moore boundary trace from the topmost-leftmost pixel, clockwise.

    The walk state is (pixel, backtrack direction) and its transition is
    deterministic, so the trace is run until a state repeats; the boundary
    ring is the cycle between the two occurrences. This stays correct for
    one-pixel-wide structures, where the walk legitimately revisits pixels.
    """
    h, w = component.shape

    def fg(x: int, y: int) -> bool:
        return 0 <= x < w and 0 <= y < h and component[y, x]

    # pretend we entered the start pixel from its (background) west neighbor
    cx, cy, bx, by = x0, y0, x0 - 1, y0
    seen: dict[tuple[int, int, int], int] = {}
    trail: list[tuple[int, int]] = []
    limit = 8 * h * w + 16
    cycle_start = 0
    for _ in range(limit):
        bd = _DIR_INDEX[(bx - cx, by - cy)]
        state = (cx, cy, bd)
        if state in seen:
            cycle_start = seen[state]
            break
        seen[state] = len(trail)
        trail.append((cx, cy))
        # scan the Moore neighborhood clockwise, starting just past the backtrack
        found = None
        last_bg = (bx, by)
        for step in range(1, 9):
            d = (bd + step) % 8
            nx, ny = cx + _DIRS[d][0], cy + _DIRS[d][1]
            if fg(nx, ny):
                found = (nx, ny)
                break
            last_bg = (nx, ny)
        if found is None:
            return np.array([(x0, y0)], dtype=int)  # isolated pixel
        bx, by = last_bg
        cx, cy = found
    return np.array(trail[cycle_start:], dtype=int)


def find_contours(mask: BitMask) -> list[Contour]:
    """Outer boundary of every foreground component, largest area first
    (ties by bbox (y, x)); contour area is the component's pixel count."""
    labels, n = ndimage.label(mask.bits, structure=_EIGHT_CONNECTED)
    if n == 0:
        return []
    counts = np.bincount(labels.ravel())
    slices = ndimage.find_objects(labels)
    order = sorted(
        range(1, n + 1),
        key=lambda i: (-int(counts[i]), slices[i - 1][0].start, slices[i - 1][1].start),
    )
    contours = []
    for i in order:
        ys, xs = slices[i - 1]
        sub = labels[ys, xs] == i
        flat = np.argmax(sub)  # first True in row-major scan: topmost-leftmost
        sy, sx = np.unravel_index(flat, sub.shape)
        pts = _trace_boundary(sub, int(sx), int(sy))
        pts[:, 0] += xs.start
        pts[:, 1] += ys.start
        contours.append(Contour(points=pts, area=int(counts[i])))
    return contours


def _point_segment_dist(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.sqrt(((pts - a) ** 2).sum(axis=1))
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.sqrt(((pts - proj) ** 2).sum(axis=1))


def _rdp_chain(points: np.ndarray, epsilon: float) -> list[int]:
    """Indices kept by Ramer-Douglas-Peucker on an open chain (iterative)."""
    n = len(points)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[n - 1] = True
    stack = [(0, n - 1)]
    pts = points.astype(np.float64)
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        d = _point_segment_dist(pts[i + 1 : j], pts[i], pts[j])
        k = int(np.argmax(d))
        if d[k] >= epsilon:
            mid = i + 1 + k
            keep[mid] = True
            stack.append((i, mid))
            stack.append((mid, j))
    return [int(i) for i in np.flatnonzero(keep)]


def approx_polygon(contour: Contour, epsilon: float) -> np.ndarray:
    """Simplify the closed boundary; output vertices are a subsequence of the
    input ring starting at its first point."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pts = contour.points
    n = len(pts)
    if n <= 2:
        return pts.copy()
    # split the ring at the point farthest from the start
    d0 = ((pts - pts[0]) ** 2).sum(axis=1)
    split = int(np.argmax(d0))
    if split == 0:
        return pts[:1].copy()
    chain1 = pts[: split + 1]
    chain2 = np.vstack([pts[split:], pts[:1]])
    keep1 = _rdp_chain(chain1, epsilon)
    keep2 = _rdp_chain(chain2, epsilon)
    idx = keep1[:-1] + [split + k for k in keep2[:-1]]
    # chain2 wraps: its last kept index maps back to 0 and is already present
    idx = [i % n for i in idx]
    return pts[sorted(set(idx))]


@dataclass
class Quad:
    """Convex quadrilateral, corners clockwise starting top-left."""

    corners: np.ndarray  # (4, 2) float64

    def __post_init__(self):
        self.corners = np.asarray(self.corners, dtype=np.float64)
        if self.corners.shape != (4, 2):
            raise ValueError(f"need 4 corner points, got {self.corners.shape}")

    @staticmethod
    def from_points(points: np.ndarray) -> "Quad":
        """Order arbitrary 4 points clockwise from top-left (min x+y)."""
        pts = np.asarray(points, dtype=np.float64)
        c = pts.mean(axis=0)
        ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
        pts = pts[np.argsort(ang)]  # ascending angle = clockwise when y is down
        start = int(np.argmin(pts.sum(axis=1)))
        return Quad(np.roll(pts, -start, axis=0))

    def is_convex(self) -> bool:
        crosses = []
        for i in range(4):
            a, b, c = self.corners[i], self.corners[(i + 1) % 4], self.corners[(i + 2) % 4]
            e1, e2 = b - a, c - b
            crosses.append(e1[0] * e2[1] - e1[1] * e2[0])
        return all(z > 0 for z in crosses) or all(z < 0 for z in crosses)

    def width(self) -> float:
        tl, tr, br, bl = self.corners
        return (np.linalg.norm(tr - tl) + np.linalg.norm(br - bl)) / 2

    def height(self) -> float:
        tl, tr, br, bl = self.corners
        return (np.linalg.norm(bl - tl) + np.linalg.norm(br - tr)) / 2

    def aspect(self) -> float:
        h = self.height()
        return self.width() / h if h > 0 else float("inf")


def perspective_map(quad: Quad, out_w: int, out_h: int) -> np.ndarray:
    """Homography H sending output pixel coords to source coords, with output
    corner pixels (0,0) .. (out_w-1, out_h-1) landing on the quad corners.
    Solved as the standard 8-unknown linear system."""
    dst = quad.corners
    src = np.array(
        [(0, 0), (out_w - 1, 0), (out_w - 1, out_h - 1), (0, out_h - 1)], dtype=np.float64
    )
    # reject near-collinear corner triples before solving
    for i in range(4):
        a, b, c = dst[i], dst[(i + 1) % 4], dst[(i + 2) % 4]
        cross = (b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0]
        if abs(cross) < 1e-9:
            raise DegenerateQuad("corner triple nearly collinear")
    rows = []
    rhs = []
    for (u, v), (x, y) in zip(src, dst):
        rows.append([u, v, 1, 0, 0, 0, -u * x, -v * x])
        rhs.append(x)
        rows.append([0, 0, 0, u, v, 1, -u * y, -v * y])
        rhs.append(y)
    try:
        p = np.linalg.solve(np.array(rows), np.array(rhs))
    except np.linalg.LinAlgError:
        raise DegenerateQuad("singular correspondence system")
    return np.array(
        [[p[0], p[1], p[2]], [p[3], p[4], p[5]], [p[6], p[7], 1.0]], dtype=np.float64
    )


def _sample_bilinear(arr: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    h, w = arr.shape[:2]
    xs = np.clip(xs, 0, w - 1)
    ys = np.clip(ys, 0, h - 1)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[..., None] if arr.ndim == 3 else xs - x0
    fy = (ys - y0)[..., None] if arr.ndim == 3 else ys - y0
    a = arr.astype(np.float64)
    top = a[y0, x0] * (1 - fx) + a[y0, x1] * fx
    bot = a[y1, x0] * (1 - fx) + a[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def _warp(arr: np.ndarray, quad: Quad, out_w: int, out_h: int) -> np.ndarray:
    H = perspective_map(quad, out_w, out_h)
    us, vs = np.meshgrid(np.arange(out_w, dtype=np.float64), np.arange(out_h, dtype=np.float64))
    denom = H[2, 0] * us + H[2, 1] * vs + H[2, 2]
    xs = (H[0, 0] * us + H[0, 1] * vs + H[0, 2]) / denom
    ys = (H[1, 0] * us + H[1, 1] * vs + H[1, 2]) / denom
    out = _sample_bilinear(arr, xs, ys)
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def rectify(gray: GrayFrame, quad: Quad, out_w: int = 240, out_h: int = 60) -> GrayFrame:
    """Map the quad onto an axis-aligned out_w x out_h canvas (bilinear)."""
    return GrayFrame(_warp(gray.pixels, quad, out_w, out_h))


def rectify_rgb(frame: Frame, quad: Quad, out_w: int = 240, out_h: int = 60) -> Frame:
    return Frame(_warp(frame.pixels, quad, out_w, out_h))
