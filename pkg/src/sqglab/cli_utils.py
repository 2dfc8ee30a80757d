from __future__ import annotations

import math
import sys

from loguru import logger

from . import corpus
from .dyadic import BesovSpec, DyadicFamily
from .errors import ConfigurationError
from .run_config import RunConfig
from .spectral import Grid, PhysicalField, SpectralField, forward
from .storage import load_snapshot

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | <cyan>{name}</cyan> - {message}"


def setup_logging(level: str = "INFO") -> None:
    """One stderr sink; stdout stays free for JSON output."""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=LOG_FORMAT)


def parse_exponent(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity", "+inf"):
        return math.inf
    try:
        return float(t)
    except ValueError:
        raise ConfigurationError(f"not an exponent: {text!r}") from None


def parse_besov(text: str) -> BesovSpec:
    """'s,p,m[,hom|inhom]' -> BesovSpec."""
    parts = [x.strip() for x in text.split(",") if x.strip()]
    if len(parts) not in (3, 4):
        raise ConfigurationError(f"--besov expects s,p,m[,hom|inhom], got {text!r}")
    kind = parts[3].lower() if len(parts) == 4 else "hom"
    if kind not in ("hom", "inhom"):
        raise ConfigurationError(f"--besov kind must be hom or inhom, got {parts[3]!r}")
    try:
        s = float(parts[0])
    except ValueError:
        raise ConfigurationError(f"bad regularity index in {text!r}") from None
    return BesovSpec(s, parse_exponent(parts[1]), parse_exponent(parts[2]), homogeneous=kind == "hom")


def parse_lp(text: str | None) -> tuple[float, ...]:
    if not text:
        return ()
    return tuple(parse_exponent(x) for x in text.split(",") if x.strip())


def initial_field(run: RunConfig, grid: Grid, fam: DyadicFamily, seed: int) -> SpectralField:
    init = run.initial
    params = init.params
    if init.kind == "modes":
        return forward(corpus.modes_field(grid, params["modes"]))
    if init.kind == "random_seeded":
        rng = corpus.make_rng(int(params.get("seed", seed)), int(params.get("stream", 0)))
        k_max = float(params.get("k_max", 4.0))
        if "target" in params:
            return corpus.small_data_field(grid, fam, rng, run.alpha, float(params["target"]), k_max=k_max)
        theta = corpus.random_field(grid, rng, k_max=k_max * grid.k_min, slope=float(params.get("slope", 2.0)))
        return theta * float(params.get("amplitude", 1.0))
    u, meta = load_snapshot(str(params["path"]))
    if u.grid != grid:
        raise ConfigurationError(
            f"snapshot grid (n={meta['n']}, length={meta['length']}) does not match the run (n={grid.n}, length={grid.length})"
        )
    return forward(PhysicalField(grid, u.values))
