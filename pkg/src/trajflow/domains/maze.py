"""Grid mazes: text format, collision oracle, and shortest-path experts.

Cell ``(r, c)`` covers ``[c, c+1] x [r, r+1]`` (times ``cell_size``), so a
state is ``(x, y) = (column, row)`` in continuous units with row 0 at the top
of the text file. A segment collides when it touches any occupied cell,
boundary included, or leaves the grid.
"""

from collections import deque
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..diffcore import SeededRng
from ..errors import ConfigError, GenerationError
from .dataset import Dataset

BUNDLED = ("single", "corridor", "open", "umaze", "medium")


@dataclass(frozen=True)
class MazeSpec:
    """``occupied[r, c]`` is True for walls. Start/goal regions are lists of
    ``(r, c)`` cells; every free cell is eligible when a region is unmarked."""

    occupied: np.ndarray
    start_cells: tuple
    goal_cells: tuple
    cell_size: float = 1.0
    name: str = ""

    @property
    def shape(self):
        return self.occupied.shape

    def free_cells(self):
        return [tuple(int(v) for v in rc) for rc in np.argwhere(~self.occupied)]

    def cell_of(self, point):
        x, y = np.asarray(point, dtype=np.float64) / self.cell_size
        return int(np.floor(y)), int(np.floor(x))

    def is_free_point(self, point):
        r, c = self.cell_of(point)
        rows, cols = self.shape
        return 0 <= r < rows and 0 <= c < cols and not self.occupied[r, c]

    def cell_center(self, cell):
        r, c = cell
        return np.array([c + 0.5, r + 0.5]) * self.cell_size

    def to_text(self):
        rows = []
        starts, goals = set(self.start_cells), set(self.goal_cells)
        for r in range(self.shape[0]):
            line = []
            for c in range(self.shape[1]):
                if self.occupied[r, c]:
                    line.append("#")
                elif (r, c) in starts:
                    line.append("S")
                elif (r, c) in goals:
                    line.append("G")
                else:
                    line.append(".")
            rows.append("".join(line))
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text, cell_size=1.0, name=""):
        lines = [ln.rstrip("\r") for ln in text.strip("\n").split("\n")]
        lines = [ln for ln in lines if ln.strip()]
        if not lines:
            raise ConfigError("maze text is empty")
        width = len(lines[0])
        if any(len(ln) != width for ln in lines):
            raise ConfigError("maze rows must all have the same width")
        occ = np.zeros((len(lines), width), dtype=bool)
        starts, goals = [], []
        for r, ln in enumerate(lines):
            for c, ch in enumerate(ln):
                if ch == "#":
                    occ[r, c] = True
                elif ch == "S":
                    starts.append((r, c))
                elif ch == "G":
                    goals.append((r, c))
                elif ch != ".":
                    raise ConfigError(f"maze row {r + 1}: unknown cell character {ch!r}")
        if occ.all():
            raise ConfigError("maze has no free cells")
        if cell_size <= 0:
            raise ConfigError("cell_size must be positive")
        free = [tuple(int(v) for v in rc) for rc in np.argwhere(~occ)]
        spec = cls(occ, tuple(starts or free), tuple(goals or free), float(cell_size), name)
        comp = _components(occ)
        if not {comp[s] for s in spec.start_cells} & {comp[g] for g in spec.goal_cells}:
            raise ConfigError("no start cell is connected to a goal cell")
        return spec


def load_maze(name_or_path, cell_size=1.0):
    """A bundled maze by name (see ``BUNDLED``) or a text file path."""
    if name_or_path in BUNDLED:
        text = resources.files(__package__).joinpath(f"mazes/{name_or_path}.txt").read_text()
        return MazeSpec.from_text(text, cell_size, name=name_or_path)
    try:
        with open(name_or_path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read maze file {name_or_path}: {exc}") from exc
    return MazeSpec.from_text(text, cell_size, name=str(name_or_path))


# -- grid search ---------------------------------------------------------------

_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def _components(occ):
    comp = {}
    label = 0
    for r, c in np.argwhere(~occ):
        start = (int(r), int(c))
        if start in comp:
            continue
        comp[start] = label
        queue = deque([start])
        while queue:
            cr, cc = queue.popleft()
            for dr, dc in _STEPS:
                nb = (cr + dr, cc + dc)
                if nb not in comp and 0 <= nb[0] < occ.shape[0] and 0 <= nb[1] < occ.shape[1] and not occ[nb]:
                    comp[nb] = label
                    queue.append(nb)
        label += 1
    return comp


def bfs_cells(maze, start, goal):
    """Shortest 4-connected cell path, or None if unreachable."""
    occ = maze.occupied
    prev = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == goal:
            path = []
            while cur is not None:
                path.append(cur)
                cur = prev[cur]
            return path[::-1]
        for dr, dc in _STEPS:
            nb = (cur[0] + dr, cur[1] + dc)
            if nb not in prev and 0 <= nb[0] < occ.shape[0] and 0 <= nb[1] < occ.shape[1] and not occ[nb]:
                prev[nb] = cur
                queue.append(nb)
    return None


# -- collision oracle ------------------------------------------------------------


def _wall_boxes(maze, inflate=0.0):
    cells = np.argwhere(maze.occupied).astype(np.float64)
    s = maze.cell_size
    lo = np.stack([cells[:, 1] * s - inflate, cells[:, 0] * s - inflate], axis=1)
    hi = lo + s + 2.0 * inflate
    return lo, hi


def _segments_hit_boxes(p, q, lo, hi):
    """Closed segment-vs-closed-box test: ``bool[S]`` for segments ``p[S]->q[S]``."""
    if lo.shape[0] == 0:
        return np.zeros(p.shape[0], dtype=bool)
    p = p[:, None, :]
    d = (q - p[:, 0, :])[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo[None] - p) / d
        t2 = (hi[None] - p) / d
    parallel = d == 0.0
    inside = (p >= lo[None]) & (p <= hi[None])
    tmin_ax = np.where(parallel, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
    tmax_ax = np.where(parallel, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
    tmin = tmin_ax.max(axis=2)
    tmax = tmax_ax.min(axis=2)
    hit = (tmin <= tmax) & (tmax >= 0.0) & (tmin <= 1.0)
    return hit.any(axis=1)


def segment_collisions(traj, maze):
    """``bool[H-1]``: which consecutive segments of ``traj`` collide.

    A single-state trajectory is treated as one degenerate segment.
    """
    x = np.asarray(traj, dtype=np.float64).reshape(-1, 2)
    if x.shape[0] == 1:
        x = np.concatenate([x, x])
    p, q = x[:-1], x[1:]
    lo, hi = _wall_boxes(maze)
    hit = _segments_hit_boxes(p, q, lo, hi)
    rows, cols = maze.shape
    extent = np.array([cols, rows]) * maze.cell_size
    out = (x < 0.0) | (x > extent) | ~np.isfinite(x)
    out = out.any(axis=1)
    return hit | out[:-1] | out[1:]


def first_collision(traj, maze):
    """Index of the first colliding segment, or None."""
    hits = np.flatnonzero(segment_collisions(traj, maze))
    return int(hits[0]) if hits.size else None


def collides(traj, maze):
    return first_collision(traj, maze) is not None


def line_of_sight(a, b, maze, clearance=0.0):
    """True when segment ``a -> b`` keeps ``clearance`` away from every wall
    (walls inflated into boxes, so the margin is in the max-norm)."""
    lo, hi = _wall_boxes(maze, clearance)
    return not _segments_hit_boxes(np.asarray([a], float), np.asarray([b], float), lo, hi)[0]


# -- expert paths ------------------------------------------------------------------


def string_pull(points, maze, clearance):
    """Greedy shortcutting: from each kept point jump to the farthest later
    point still in sight."""
    out = [points[0]]
    i = 0
    n = len(points)
    while i < n - 1:
        j = n - 1
        while j > i + 1 and not line_of_sight(points[i], points[j], maze, clearance):
            j -= 1
        out.append(points[j])
        i = j
    return np.asarray(out)


def resample_arclength(polyline, horizon):
    """``horizon`` points evenly spaced by arc length along ``polyline``."""
    poly = np.asarray(polyline, dtype=np.float64)
    if horizon < 1:
        raise ConfigError("horizon must be positive")
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] == 0.0:
        return np.repeat(poly[:1], horizon, axis=0)
    s = np.linspace(0.0, cum[-1], horizon)
    out = np.stack([np.interp(s, cum, poly[:, d]) for d in range(poly.shape[1])], axis=1)
    out[0], out[-1] = poly[0], poly[-1]
    return out


def expert_path(maze, start, goal, horizon, clearance=0.2):
    """Shortest route from ``start`` to ``goal`` with corners cut by line of
    sight, resampled to ``horizon`` states. Raises GenerationError when the
    goal cannot be reached."""
    start = np.asarray(start, dtype=np.float64)
    goal = np.asarray(goal, dtype=np.float64)
    for name, pt in (("start", start), ("goal", goal)):
        if not maze.is_free_point(pt):
            raise GenerationError(f"{name} {pt.tolist()} is not in a free cell")
    cells = bfs_cells(maze, maze.cell_of(start), maze.cell_of(goal))
    if cells is None:
        raise GenerationError(f"goal {goal.tolist()} unreachable from {start.tolist()}")
    pts = [start] + [maze.cell_center(c) for c in cells[1:-1]] + [goal]
    if len(cells) == 1:
        pts = [start, goal]
    route = string_pull(pts, maze, clearance * maze.cell_size)
    return resample_arclength(route, horizon)


def path_length(traj):
    return float(np.linalg.norm(np.diff(np.asarray(traj), axis=0), axis=1).sum())


def _sample_point(maze, cell, rng, jitter):
    off = rng.uniform(-jitter, jitter, size=2) if jitter > 0 else np.zeros(2)
    return maze.cell_center(cell) + off * maze.cell_size


def generate_maze_dataset(maze, n, horizon, seed, jitter=0.25, clearance=0.2, max_retries=20):
    """``n`` expert demonstrations between random start/goal points.

    Contexts are ``(start_x, start_y, goal_x, goal_y)``.

    Start and goal are drawn from the start/goal regions (uniform cell, then a
    uniform offset of at most ``jitter`` cells from its centre). Each item uses
    its own derived generator, so item ``i`` does not depend on ``n``.
    """
    if n < 0:
        raise ConfigError("n must be nonnegative")
    if jitter < 0 or (jitter > 0 and jitter + clearance > 0.5):
        raise ConfigError("jitter must leave at least `clearance` to the cell border")
    root = SeededRng(seed)
    traj = np.empty((n, horizon, 2))
    ctx = np.empty((n, 4))
    for i in range(n):
        rng = root.child("maze", i)
        for _ in range(max_retries):
            s_cell = maze.start_cells[rng.integers(len(maze.start_cells))]
            g_cell = maze.goal_cells[rng.integers(len(maze.goal_cells))]
            start = _sample_point(maze, s_cell, rng, jitter)
            goal = _sample_point(maze, g_cell, rng, jitter)
            try:
                path = expert_path(maze, start, goal, horizon, clearance)
            except GenerationError:
                continue
            break
        else:
            raise GenerationError(f"trajectory {i}: no reachable start/goal pair after {max_retries} tries")
        traj[i] = path
        ctx[i] = np.concatenate([start, goal])
    return Dataset(traj, ctx, {"maze": maze.name, "n": n})
