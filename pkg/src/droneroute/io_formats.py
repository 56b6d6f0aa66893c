"""Durable interchange formats.

Instances and solutions serialize to a small JSON dialect with a frozen
field order and floats printed at 17 significant digits, which makes
parse(write(x)) == x bit-exact. A parser for the classic node-coordinate
CVRP benchmark layout is included for cross-validation against published
instances.
"""

from __future__ import annotations

import json
import math
import re

from .model import (Asset, AssetType, GeneratorInfo, Instance, Route,
                    Solution)

INSTANCE_SCHEMA = "drone-routing-instance/1"
SOLUTION_SCHEMA = "drone-routing-solution/1"


class FormatError(ValueError):
    """A malformed document; carries the offending path or line."""

    def __init__(self, message: str, path: str = "", line: int | None = None):
        loc = []
        if path:
            loc.append(f"at {path}")
        if line is not None:
            loc.append(f"line {line}")
        suffix = f" ({', '.join(loc)})" if loc else ""
        super().__init__(message + suffix)
        self.path = path
        self.line = line


def _fmt(value) -> str:
    if isinstance(value, bool) or value is None:
        raise FormatError(f"unsupported scalar {value!r}")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise FormatError(f"cannot serialize non-finite number {value!r}")
        return format(value, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    raise FormatError(f"unsupported scalar type {type(value).__name__}")


def _emit(value, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            return "{}"
        rows = [f'{pad}  {json.dumps(k)}: {_emit(v, indent + 1)}'
                for k, v in value.items()]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        rows = [f"{pad}  {_emit(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    return _fmt(value)


def _loads(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise FormatError("document root must be an object")
    return doc


def _need(obj: dict, key: str, kinds, path: str):
    here = f"{path}.{key}" if path else key
    if key not in obj:
        raise FormatError(f"missing required field", path=here)
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise FormatError(f"field has wrong type {type(value).__name__}",
                          path=here)
    return value


def write_instance(instance: Instance) -> str:
    doc = {
        "schema": INSTANCE_SCHEMA,
        "area": {"width": float(instance.area_width),
                 "height": float(instance.area_height)},
        "depot": {"x": float(instance.depot_x), "y": float(instance.depot_y)},
        "fleet": {"drones": instance.num_drones,
                  "capacity": float(instance.capacity),
                  "speed": float(instance.speed),
                  "endurance": float(instance.endurance)},
        "catalog": [{"id": t.id, "name": t.name, "demand": float(t.demand),
                     "service_time": float(t.service_time)}
                    for t in instance.catalog],
        "assets": [{"id": a.id, "type": a.type_id, "x": float(a.x),
                    "y": float(a.y)} for a in instance.assets],
    }
    if instance.generator is not None:
        doc["generator"] = {"algorithm": instance.generator.algorithm,
                            "seed": instance.generator.seed}
    return _emit(doc) + "\n"


def parse_instance(text: str) -> Instance:
    doc = _loads(text)
    schema = _need(doc, "schema", str, "")
    if schema != INSTANCE_SCHEMA:
        raise FormatError(f"unknown schema {schema!r}, expected "
                          f"{INSTANCE_SCHEMA!r}", path="schema")
    area = _need(doc, "area", dict, "")
    depot = _need(doc, "depot", dict, "")
    fleet = _need(doc, "fleet", dict, "")
    catalog_doc = _need(doc, "catalog", list, "")
    assets_doc = _need(doc, "assets", list, "")

    catalog = []
    for k, entry in enumerate(catalog_doc):
        path = f"catalog[{k}]"
        if not isinstance(entry, dict):
            raise FormatError("catalog entry must be an object", path=path)
        catalog.append(AssetType(
            id=_need(entry, "id", int, path),
            name=_need(entry, "name", str, path),
            demand=float(_need(entry, "demand", (int, float), path)),
            service_time=float(_need(entry, "service_time", (int, float), path))))
    assets = []
    for k, entry in enumerate(assets_doc):
        path = f"assets[{k}]"
        if not isinstance(entry, dict):
            raise FormatError("asset entry must be an object", path=path)
        assets.append(Asset(
            id=_need(entry, "id", int, path),
            type_id=_need(entry, "type", int, path),
            x=float(_need(entry, "x", (int, float), path)),
            y=float(_need(entry, "y", (int, float), path))))

    generator = None
    if "generator" in doc:
        gen = doc["generator"]
        if not isinstance(gen, dict):
            raise FormatError("generator must be an object", path="generator")
        generator = GeneratorInfo(
            algorithm=_need(gen, "algorithm", str, "generator"),
            seed=_need(gen, "seed", int, "generator"))

    return Instance(
        area_width=float(_need(area, "width", (int, float), "area")),
        area_height=float(_need(area, "height", (int, float), "area")),
        depot_x=float(_need(depot, "x", (int, float), "depot")),
        depot_y=float(_need(depot, "y", (int, float), "depot")),
        assets=tuple(assets),
        catalog=tuple(catalog),
        num_drones=_need(fleet, "drones", int, "fleet"),
        capacity=float(_need(fleet, "capacity", (int, float), "fleet")),
        speed=float(_need(fleet, "speed", (int, float), "fleet")),
        endurance=float(_need(fleet, "endurance", (int, float), "fleet")),
        generator=generator)


def write_solution(solution: Solution, instance: Instance,
                   solver_meta: dict | None = None) -> str:
    doc = {
        "schema": SOLUTION_SCHEMA,
        "method": solution.method,
        "total_cost": float(solution.total_cost),
        "routes": [{"drone": r.drone_id,
                    "stops": list(r.stops),
                    "load": float(r.load),
                    "duration": float(r.duration)} for r in solution.routes],
    }
    if solver_meta:
        doc["solver"] = dict(solver_meta)
    return _emit(doc) + "\n"


def parse_solution(text: str) -> tuple[Solution, dict]:
    """Returns the solution plus whatever solver metadata the file carried."""
    doc = _loads(text)
    schema = _need(doc, "schema", str, "")
    if schema != SOLUTION_SCHEMA:
        raise FormatError(f"unknown schema {schema!r}, expected "
                          f"{SOLUTION_SCHEMA!r}", path="schema")
    routes = []
    for k, entry in enumerate(_need(doc, "routes", list, "")):
        path = f"routes[{k}]"
        if not isinstance(entry, dict):
            raise FormatError("route entry must be an object", path=path)
        stops = _need(entry, "stops", list, path)
        if not all(isinstance(s, int) for s in stops):
            raise FormatError("stops must be asset ids", path=f"{path}.stops")
        routes.append(Route(
            drone_id=_need(entry, "drone", int, path),
            stops=tuple(stops),
            load=float(_need(entry, "load", (int, float), path)),
            duration=float(_need(entry, "duration", (int, float), path))))
    solution = Solution(routes=tuple(routes),
                        total_cost=float(_need(doc, "total_cost", (int, float), "")),
                        method=_need(doc, "method", str, ""))
    meta = doc.get("solver", {})
    if not isinstance(meta, dict):
        raise FormatError("solver metadata must be an object", path="solver")
    return solution, meta


_TRUCK_PATTERNS = (
    re.compile(r"-k(\d+)\b"),
    re.compile(r"(?:No of trucks|trucks|vehicles)\s*[:=]\s*(\d+)", re.IGNORECASE),
)


def parse_cvrplib(text: str, num_drones: int | None = None) -> Instance:
    """Read the classic node-coordinate CVRP benchmark layout.

    Costs become plain distances (speed fixed at 1, zero service times).
    The vehicle count comes from the name's -k suffix or the comment unless
    overridden. Only Euclidean edge weights are supported. Coordinates are
    translated, if needed, so the service area starts at the origin.
    """
    headers: dict[str, str] = {}
    coords: dict[int, tuple[float, float]] = {}
    demands: dict[int, float] = {}
    depot_ids: list[int] = []

    lines = text.splitlines()
    i = 0
    section = None
    while i < len(lines):
        raw = lines[i].strip()
        i += 1
        if not raw or raw == "EOF":
            section = None
            continue
        upper = raw.upper()
        if ":" in raw and not upper.endswith("SECTION"):
            key, _, value = raw.partition(":")
            headers[key.strip().upper()] = value.strip()
            section = None
            continue
        if upper.endswith("SECTION"):
            section = upper.split()[0]
            continue
        fields = raw.split()
        try:
            if section == "NODE_COORD_SECTION":
                coords[int(fields[0])] = (float(fields[1]), float(fields[2]))
            elif section == "DEMAND_SECTION":
                demands[int(fields[0])] = float(fields[1])
            elif section == "DEPOT_SECTION":
                node = int(fields[0])
                if node != -1:
                    depot_ids.append(node)
        except (IndexError, ValueError) as exc:
            raise FormatError(f"malformed {section or 'header'} entry: {raw!r}",
                              line=i) from exc

    edge_type = headers.get("EDGE_WEIGHT_TYPE", "EUC_2D").upper()
    if edge_type != "EUC_2D":
        raise FormatError(f"unsupported edge weight type {edge_type!r}; only "
                          "EUC_2D benchmark files are supported")
    if "DIMENSION" not in headers:
        raise FormatError("missing required field", path="DIMENSION")
    if "CAPACITY" not in headers:
        raise FormatError("missing required field", path="CAPACITY")
    dimension = int(headers["DIMENSION"])
    capacity = float(headers["CAPACITY"])
    if len(coords) != dimension:
        raise FormatError(f"NODE_COORD_SECTION has {len(coords)} entries, "
                          f"DIMENSION says {dimension}")

    if num_drones is None:
        for source in (headers.get("NAME", ""), headers.get("COMMENT", "")):
            for pattern in _TRUCK_PATTERNS:
                match = pattern.search(source)
                if match:
                    num_drones = int(match.group(1))
                    break
            if num_drones is not None:
                break
    if num_drones is None:
        raise FormatError("vehicle count not stated in the file; pass an "
                          "explicit override")

    depot_node = depot_ids[0] if depot_ids else 1
    min_x = min(x for x, _ in coords.values())
    min_y = min(y for _, y in coords.values())
    shift_x = -min_x if min_x < 0 else 0.0
    shift_y = -min_y if min_y < 0 else 0.0

    types: dict[float, AssetType] = {}
    assets = []
    next_id = 1
    for node in sorted(coords):
        if node == depot_node:
            continue
        demand = demands.get(node)
        if demand is None:
            raise FormatError(f"node {node} has no demand entry")
        if demand <= 0:
            raise FormatError(f"customer node {node} must have positive "
                              f"demand, got {demand:g}")
        if demand not in types:
            types[demand] = AssetType(id=len(types) + 1,
                                      name=f"demand-{demand:g}",
                                      demand=demand, service_time=0.0)
        x, y = coords[node]
        assets.append(Asset(id=next_id, type_id=types[demand].id,
                            x=x + shift_x, y=y + shift_y))
        next_id += 1

    depot_x = coords[depot_node][0] + shift_x
    depot_y = coords[depot_node][1] + shift_y
    width = max([a.x for a in assets] + [depot_x])
    height = max([a.y for a in assets] + [depot_y])

    return Instance(
        area_width=width, area_height=height,
        depot_x=depot_x, depot_y=depot_y,
        assets=tuple(assets),
        catalog=tuple(sorted(types.values(), key=lambda t: t.id)),
        num_drones=num_drones, capacity=capacity, speed=1.0,
        endurance=1e18,  # benchmarks carry no endurance notion; never warn
    )
