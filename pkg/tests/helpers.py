"""Shared construction helpers and a small LP-text parser for round trips."""

from __future__ import annotations

import re

from droneroute.model import Asset, AssetType, Instance
from droneroute.scenario import ScenarioConfig, default_catalog, spread_counts


def build_instance(points, depot=(0.0, 0.0), num_drones=1, capacity=5.5,
                   speed=20.0, endurance=780.0, area=None):
    """An instance from raw (x, y, demand, service_time) tuples.

    One asset type is created per distinct (demand, service_time) pair.
    """
    types: dict[tuple, AssetType] = {}
    assets = []
    for k, (x, y, demand, service) in enumerate(points, start=1):
        key = (float(demand), float(service))
        if key not in types:
            types[key] = AssetType(id=len(types) + 1,
                                   name=f"type-{len(types) + 1}",
                                   demand=key[0], service_time=key[1])
        assets.append(Asset(id=k, type_id=types[key].id, x=float(x), y=float(y)))
    if area is None:
        width = max([a.x for a in assets] + [depot[0], 1.0])
        height = max([a.y for a in assets] + [depot[1], 1.0])
    else:
        width, height = area
    return Instance(area_width=width, area_height=height,
                    depot_x=float(depot[0]), depot_y=float(depot[1]),
                    assets=tuple(assets),
                    catalog=tuple(types.values()),
                    num_drones=num_drones, capacity=capacity, speed=speed,
                    endurance=endurance)


def random_instance(seed, n, m, **overrides):
    """A seeded default-catalog instance with n assets and m drones."""
    config = ScenarioConfig(seed=seed,
                            counts_per_type=spread_counts(default_catalog(), n),
                            num_drones=m, **overrides)
    from droneroute.scenario import generate_instance
    return generate_instance(config)


def sub_instance(instance, asset_ids, num_drones=1):
    """Relabel a subset of assets 1..k into a standalone instance."""
    chosen = sorted(asset_ids)
    assets = []
    for new_id, old_id in enumerate(chosen, start=1):
        old = instance.asset(old_id)
        assets.append(Asset(id=new_id, type_id=old.type_id, x=old.x, y=old.y))
    return Instance(area_width=instance.area_width,
                    area_height=instance.area_height,
                    depot_x=instance.depot_x, depot_y=instance.depot_y,
                    assets=tuple(assets), catalog=instance.catalog,
                    num_drones=num_drones, capacity=instance.capacity,
                    speed=instance.speed, endurance=instance.endurance)


_TERM = re.compile(r"([+-])\s+(\S+)\s+(\S+)")


def parse_lp(text: str):
    """Parse the LP dialect export_lp emits, for serialization round trips.

    Returns (objective, constraints, bounds, binaries) keyed by variable
    name strings; constraints map name -> (coeffs, op, rhs).
    """
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("\\")]
    section = None
    objective: dict[str, float] = {}
    constraints: dict[str, tuple[dict[str, float], str, float]] = {}
    bounds: dict[str, tuple[float, float]] = {}
    binaries: set[str] = set()
    current: dict[str, float] | None = None
    current_name = ""

    def finish_terms(body: str, target: dict[str, float]):
        normalized = body if body.lstrip().startswith(("+", "-")) else "+ " + body.lstrip()
        for sign, coef, var in _TERM.findall(normalized):
            target[var] = target.get(var, 0.0) + float(coef) * (1 if sign == "+" else -1)

    for line in lines:
        stripped = line.strip()
        if stripped in ("Minimize", "Subject To", "Bounds", "Binary", "End"):
            section = stripped
            current = None
            continue
        if section == "Minimize":
            body = stripped.partition(":")[2] if ":" in stripped else stripped
            finish_terms(body, objective)
        elif section == "Subject To":
            tail_match = re.search(r"(<=|=)\s+(\S+)$", stripped)
            if ":" in stripped:
                current_name, _, body = stripped.partition(":")
                current_name = current_name.strip()
                current = {}
            else:
                body = stripped
            assert current is not None
            if tail_match:
                body = body[:body.rindex(tail_match.group(0))]
                finish_terms(body, current)
                constraints[current_name] = (current, tail_match.group(1),
                                             float(tail_match.group(2)))
                current = None
            else:
                finish_terms(body, current)
        elif section == "Bounds":
            lo, _, rest = stripped.partition("<=")
            var, _, hi = rest.partition("<=")
            bounds[var.strip()] = (float(lo), float(hi))
        elif section == "Binary":
            binaries.update(stripped.split())
    return objective, constraints, bounds, binaries


def var_name(var) -> str:
    return f"{var[0]}_{'_'.join(str(k) for k in var[1:])}"
