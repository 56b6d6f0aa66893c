"""Deterministic generation of synthetic instances.

Assets are placed i.i.d. uniformly over the service area with a fixed,
versioned PRNG (numpy's PCG64), so a seed fully determines the instance.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import Asset, AssetType, GeneratorInfo, Instance

# Frozen PRNG identifier, stored alongside generated instances.
PRNG_ALGORITHM = "pcg64"

# Fleet defaults modeled on a small spraying drone: 5.5 L tank, 20 m/s,
# about 13 minutes of flight. The drone count defaults to 5 but is a free
# parameter, not a canonical value.
DEFAULT_CAPACITY = 5.5
DEFAULT_SPEED = 20.0
DEFAULT_ENDURANCE = 780.0
DEFAULT_NUM_DRONES = 5
DEFAULT_AREA = 1000.0


class DepotPlacement(Enum):
    CORNER = "corner"
    CENTER = "center"
    EXPLICIT = "explicit"


def default_catalog() -> tuple[AssetType, ...]:
    """The four built-in asset types.

    Demands and service times are tunable configuration defaults chosen
    well under the default tank capacity; they are not measured values.
    """
    return (
        AssetType(id=1, name="bench", demand=0.3, service_time=60.0),
        AssetType(id=2, name="wheelchair", demand=0.4, service_time=90.0),
        AssetType(id=3, name="ambulance", demand=1.2, service_time=240.0),
        AssetType(id=4, name="playground", demand=1.0, service_time=180.0),
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to generate one instance deterministically."""

    seed: int
    counts_per_type: tuple[tuple[AssetType, int], ...]
    area_width: float = DEFAULT_AREA
    area_height: float = DEFAULT_AREA
    depot: DepotPlacement = DepotPlacement.CORNER
    depot_x: float | None = None
    depot_y: float | None = None
    num_drones: int = DEFAULT_NUM_DRONES
    capacity: float = DEFAULT_CAPACITY
    speed: float = DEFAULT_SPEED
    endurance: float = DEFAULT_ENDURANCE

    def __post_init__(self):
        object.__setattr__(self, "counts_per_type",
                           tuple((t, int(c)) for t, c in self.counts_per_type))

    @property
    def total_assets(self) -> int:
        return sum(c for _, c in self.counts_per_type)


def demo_config(seed: int, **overrides) -> ScenarioConfig:
    """A ready-made configuration: 10 assets over the default catalog."""
    catalog = default_catalog()
    counts = ((catalog[0], 3), (catalog[1], 3), (catalog[2], 2), (catalog[3], 2))
    return ScenarioConfig(seed=seed, counts_per_type=counts, **overrides)


def spread_counts(catalog: tuple[AssetType, ...], n: int) -> tuple[tuple[AssetType, int], ...]:
    """Distribute n assets round-robin over the catalog, first types first."""
    base, extra = divmod(n, len(catalog))
    return tuple((t, base + (1 if i < extra else 0)) for i, t in enumerate(catalog))


def _depot_coords(config: ScenarioConfig) -> tuple[float, float]:
    if config.depot is DepotPlacement.CORNER:
        return 0.0, 0.0
    if config.depot is DepotPlacement.CENTER:
        return config.area_width / 2.0, config.area_height / 2.0
    if config.depot_x is None or config.depot_y is None:
        raise ValueError("explicit depot placement needs depot_x and depot_y")
    return config.depot_x, config.depot_y


def generate_instance(config: ScenarioConfig) -> Instance:
    """Draw an instance from the config; identical seeds give identical output.

    Asset ids are assigned in draw order, one type block after another in
    the order the config lists them.
    """
    if config.total_assets < 1:
        raise ValueError("scenario must place at least one asset")
    for t, c in config.counts_per_type:
        if c < 0:
            raise ValueError(f"negative count for asset type {t.name!r}")

    rng = np.random.Generator(np.random.PCG64(config.seed))
    depot_x, depot_y = _depot_coords(config)

    assets = []
    catalog: list[AssetType] = []
    next_id = 1
    for asset_type, count in config.counts_per_type:
        if all(t.id != asset_type.id for t in catalog):
            catalog.append(asset_type)
        for _ in range(count):
            x = float(rng.uniform(0.0, config.area_width))
            y = float(rng.uniform(0.0, config.area_height))
            assets.append(Asset(id=next_id, type_id=asset_type.id, x=x, y=y))
            next_id += 1

    return Instance(
        area_width=config.area_width,
        area_height=config.area_height,
        depot_x=depot_x,
        depot_y=depot_y,
        assets=tuple(assets),
        catalog=tuple(catalog),
        num_drones=config.num_drones,
        capacity=config.capacity,
        speed=config.speed,
        endurance=config.endurance,
        generator=GeneratorInfo(algorithm=PRNG_ALGORITHM, seed=config.seed),
    )
