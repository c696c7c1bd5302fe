"""General utility functions."""

import json
import logging
import random
import time
from contextlib import contextmanager
from typing import Iterable, List, Sequence, Tuple

import sympy

from .exactcalc import Chart, Rational, denominator, evaluate
from .errors import PoleError

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 5
DEFAULT_SEED = 0


def sample_points(
    chart: Chart,
    count: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    avoid: Iterable = (),
    spread: int = 3,
) -> List[Tuple[Rational, ...]]:
    """Deterministic rational points of ``chart`` where no scalar in ``avoid`` has a pole."""
    if chart.dim == 0:
        return [()]
    denominators = [denominator(s) for s in avoid]
    denominators = [d for d in denominators if d.free_symbols]
    rng = random.Random(seed)
    points: List[Tuple[Rational, ...]] = []
    seen = set()
    attempts = 0
    while len(points) < count:
        attempts += 1
        if attempts > 200 * count:
            raise PoleError(f"could not find {count} pole-free sample points on {chart.name!r}")
        point = tuple(
            Rational(rng.randint(-spread * 2, spread * 2), rng.choice((1, 1, 2))) for _ in range(chart.dim)
        )
        if point in seen:
            continue
        seen.add(point)
        if any(evaluate(d, chart, point) == 0 for d in denominators):
            logger.warning(f"skipping sample {tuple(str(v) for v in point)}: a denominator vanishes")
            continue
        points.append(point)
    logger.debug(f"sample points on {chart.name}: {[tuple(str(v) for v in p) for p in points]}")
    return points


def safe_points(chart: Chart, points: Sequence[Sequence], avoid: Iterable = ()) -> List[Tuple]:
    """The given points, raising PoleError on one that hits a denominator."""
    denominators = [denominator(s) for s in avoid]
    result = []
    for point in points:
        point = tuple(Rational(v) for v in point)
        for d in denominators:
            if d.free_symbols and evaluate(d, chart, point) == 0:
                raise PoleError(f"sample point {tuple(str(v) for v in point)} hits the pole {sympy.sstr(d)}")
        result.append(point)
    return result


def save_report(report: dict, output_file: str):
    """Write a JSON report with deterministic key order."""
    if not output_file:
        return
    with open(output_file, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True, ensure_ascii=False)
    logger.info(f"Saved report to {output_file}")


@contextmanager
def timed(label: str):
    """Yields a dict whose ``seconds`` entry is filled in on exit."""
    record = {"seconds": 0.0}
    start = time.perf_counter()
    try:
        yield record
    finally:
        record["seconds"] = time.perf_counter() - start
        logger.debug(f"{label} took {record['seconds']:.3f}s")
