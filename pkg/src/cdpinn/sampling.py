"""Low-discrepancy time samples for the interior of the training domain."""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

MAX_LOG2_COUNT = 20


@dataclass(frozen=True, eq=False)
class TimeBatch:
    t_min: float
    t_max: float
    interior: np.ndarray
    log2_count: int

    def __eq__(self, other):
        if not isinstance(other, TimeBatch):
            return NotImplemented
        return (self.t_min, self.t_max, self.log2_count) == (other.t_min, other.t_max, other.log2_count) \
            and np.array_equal(self.interior, other.interior)

    def all_times(self):
        """``[t_min, t_max, *interior]``: the layout used by the training loop."""
        return np.concatenate(([self.t_min, self.t_max], self.interior))


def radical_inverse(indices, bits):
    """Base-2 radical inverse of non-negative integers below ``2**bits``."""
    idx = np.asarray(indices, dtype=np.uint64)
    rev = np.zeros_like(idx)
    for _ in range(bits):
        rev = (rev << np.uint64(1)) | (idx & np.uint64(1))
        idx = idx >> np.uint64(1)
    return rev.astype(np.float64) / float(2**bits)


def sobol_unit(log2_count):
    """First ``2**log2_count`` points of the 1-D Sobol sequence in (0, 1).

    In one dimension Sobol coincides with the van der Corput sequence.  Its
    first point is 0; it is moved to half the smallest stratum width so that
    every point is strictly interior.
    """
    if not isinstance(log2_count, (int, np.integer)) or not 0 <= log2_count <= MAX_LOG2_COUNT:
        raise ConfigError(f"log2_count must be in 0..{MAX_LOG2_COUNT}, got {log2_count!r}")
    n = 1 << int(log2_count)
    u = radical_inverse(np.arange(n), int(log2_count))
    u[0] = 0.5 / n
    return u


def sobol_interior(log2_count, t_min=0.0, t_max=1.0):
    t_min, t_max = float(t_min), float(t_max)
    if not (np.isfinite(t_min) and np.isfinite(t_max) and t_min < t_max):
        raise ConfigError(f"need finite t_min < t_max, got [{t_min}, {t_max}]")
    u = np.sort(sobol_unit(log2_count))
    pts = t_min + (t_max - t_min) * u
    pts.setflags(write=False)
    return TimeBatch(t_min, t_max, pts, int(log2_count))


def star_discrepancy(points):
    """Exact 1-D star discrepancy of points in [0, 1]."""
    x = np.sort(np.asarray(points, dtype=float))
    n = x.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - x), np.max(x - (i - 1) / n)))
