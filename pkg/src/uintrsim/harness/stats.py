"""Summary statistics for jitter and throughput."""
from dataclasses import dataclass, field
from fractions import Fraction

from ..platform import CORE_HZ

UNLOADED_FPS = 142


def summarize(xs):
    xs = sorted(xs)
    n = len(xs)
    if not n:
        raise ValueError('no samples')
    return {'n': n, 'min': xs[0], 'max': xs[-1], 'mean': sum(xs) / n,
            'p50': percentile(xs, 50), 'p99': percentile(xs, 99)}


def percentile(sorted_xs, p):
    """Nearest-rank percentile."""
    k = max(0, -(-p * len(sorted_xs) // 100) - 1)
    return sorted_xs[min(k, len(sorted_xs) - 1)]


@dataclass
class JitterStats:
    n: int
    half_period: float
    ptp: int
    deviations: list = field(repr=False, default_factory=list)

    @property
    def normalized(self):
        return self.ptp / self.half_period

    @classmethod
    def from_edges(cls, edges, fires, half_period):
        """Pair edge k with timer fire k; deviation = edge - fire."""
        n = min(len(edges), len(fires))
        dev = [edges[i] - fires[i] for i in range(n)]
        if not dev:
            return cls(0, half_period, 0, [])
        return cls(n, half_period, max(dev) - min(dev), dev)

    def percentiles(self):
        return summarize(self.deviations) if self.deviations else {}


@dataclass
class ThroughputStats:
    frames: Fraction
    window: int
    core_hz: int = CORE_HZ

    @property
    def fps(self):
        return float(self.frames * self.core_hz / self.window)

    @classmethod
    def from_cycles(cls, background_cycles, window, core_hz=CORE_HZ, unloaded_fps=UNLOADED_FPS):
        frame_cost = Fraction(core_hz, unloaded_fps)
        return cls(Fraction(background_cycles) / frame_cost, window, core_hz)
