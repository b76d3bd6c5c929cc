"""Street-network geometry: polyline lengths, interval sampling, GeoJSON maps.

Coordinates are WGS84 (lon, lat) pairs throughout, matching GeoJSON order.
Positions between vertices are linearly interpolated in (lon, lat), which is
accurate to well under a metre at street scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

EARTH_RADIUS_M = 6_371_000.0

DEFAULT_QUALITY_EDGES = (1.0, 1.75, 2.5, 3.25, 4.0)
DEFAULT_CONTINUITY_EDGES = (0.0, 0.25, 0.5, 0.75, 1.0)


class MalformedNetwork(ValueError):
    """Street network input violates the expected GeoJSON layout."""


class UnknownSegment(KeyError):
    """A segment score references a segment with no known geometry."""


def _check_lonlat(lon: float, lat: float) -> None:
    if not (-180.0 <= lon <= 180.0 and -90.0 <= lat <= 90.0):
        raise MalformedNetwork(f"coordinate out of range: ({lon}, {lat})")


def haversine_m(a: Sequence[float], b: Sequence[float]) -> float:
    """Great-circle distance in metres between two (lon, lat) points."""
    lon1, lat1 = a
    lon2, lat2 = b
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    s = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(s)))


def initial_bearing_deg(a: Sequence[float], b: Sequence[float]) -> float:
    """Forward azimuth from a to b in degrees clockwise from north, in [0, 360)."""
    lon1, lat1 = math.radians(a[0]), math.radians(a[1])
    lon2, lat2 = math.radians(b[0]), math.radians(b[1])
    dlam = lon2 - lon1
    y = math.sin(dlam) * math.cos(lat2)
    x = math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlam)
    return math.degrees(math.atan2(y, x)) % 360.0


@dataclass
class StreetSegment:
    """One street segment: an identifier plus a lon/lat polyline."""

    segment_id: str
    polyline: tuple[tuple[float, float], ...]
    length_m: float = field(init=False)

    def __post_init__(self):
        pts = tuple((float(lon), float(lat)) for lon, lat in self.polyline)
        if len(pts) < 2:
            raise MalformedNetwork(f"segment {self.segment_id!r}: polyline needs >= 2 vertices")
        for lon, lat in pts:
            _check_lonlat(lon, lat)
        self.polyline = pts
        self.length_m = sum(haversine_m(pts[i], pts[i + 1]) for i in range(len(pts) - 1))


@dataclass(frozen=True)
class SamplePoint:
    """A capture point on a segment with the camera heading to use there."""

    point_id: str
    segment_id: str
    offset_m: float
    position: tuple[float, float]
    heading_deg: float


def _offsets(length_m: float, interval_m: float) -> list[float]:
    # 0, i, 2i, ... up to and including length when it is an exact multiple
    return [k * interval_m for k in range(int(length_m // interval_m) + 1)]


def sample_points(
    seg: StreetSegment,
    interval_m: float = 200.0,
    flip_heading: bool = False,
) -> list[SamplePoint]:
    """Capture points every ``interval_m`` metres along the segment.

    Points sit at offsets 0, i, 2i, ... <= length; the count is always
    floor(length / interval) + 1. Headings point +90 degrees clockwise from
    the local travel bearing (the building side); ``flip_heading`` selects
    the opposite (-90) side of the street.
    """
    if interval_m <= 0:
        raise ValueError("interval_m must be positive")
    side = -90.0 if flip_heading else 90.0

    if seg.length_m == 0.0:
        # degenerate polyline: all vertices coincide
        return [SamplePoint(f"{seg.segment_id}:0", seg.segment_id, 0.0, seg.polyline[0], 0.0)]

    pts = seg.polyline
    seg_lens = [haversine_m(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    cum = [0.0]
    for sl in seg_lens:
        cum.append(cum[-1] + sl)

    out: list[SamplePoint] = []
    for k, off in enumerate(_offsets(seg.length_m, interval_m)):
        # locate the sub-segment holding this offset
        i = len(seg_lens) - 1
        for j in range(len(seg_lens)):
            if off < cum[j + 1]:
                i = j
                break
        while seg_lens[i] == 0.0 and i > 0:
            i -= 1
        frac = 0.0 if seg_lens[i] == 0.0 else (off - cum[i]) / seg_lens[i]
        frac = min(max(frac, 0.0), 1.0)
        a, b = pts[i], pts[i + 1]
        pos = (a[0] + (b[0] - a[0]) * frac, a[1] + (b[1] - a[1]) * frac)
        heading = (initial_bearing_deg(a, b) + side) % 360.0
        out.append(SamplePoint(f"{seg.segment_id}:{k}", seg.segment_id, off, pos, heading))
    return out


def load_street_network(path) -> list[StreetSegment]:
    """Read a GeoJSON FeatureCollection of LineStrings with segment_id properties."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedNetwork(f"cannot read street network: {exc}") from exc
    if doc.get("type") != "FeatureCollection":
        raise MalformedNetwork("expected a GeoJSON FeatureCollection")
    segments = []
    for feat in doc.get("features", []):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "LineString":
            raise MalformedNetwork(f"unsupported geometry type: {geom.get('type')!r}")
        props = feat.get("properties") or {}
        seg_id = props.get("segment_id")
        if not seg_id:
            raise MalformedNetwork("feature missing segment_id property")
        coords = tuple((c[0], c[1]) for c in geom.get("coordinates", []))
        segments.append(StreetSegment(str(seg_id), coords))
    return segments


@dataclass(frozen=True)
class BinSpec:
    """Score-to-bin edges for map styling.

    Edges e0 < e1 < ... < en define bins [e0,e1), [e1,e2), ..., with the
    last bin closed at en. Values outside [e0, en] get no bin (null).
    """

    quality_edges: tuple[float, ...] = DEFAULT_QUALITY_EDGES
    continuity_edges: tuple[float, ...] = DEFAULT_CONTINUITY_EDGES

    def __post_init__(self):
        for edges in (self.quality_edges, self.continuity_edges):
            if len(edges) < 2 or any(a >= b for a, b in zip(edges, edges[1:])):
                raise ValueError(f"bin edges must be strictly increasing: {edges}")


def bin_index(value: float, edges: Sequence[float]) -> int | None:
    """Half-open interval lookup; the last bin also includes its upper edge."""
    if value < edges[0] or value > edges[-1]:
        return None
    for i in range(len(edges) - 2):
        if value < edges[i + 1]:
            return i
    return len(edges) - 2


def _sig9(x: float) -> float:
    """Round to at most 9 significant digits for stable serialization."""
    return float(f"{x:.9g}")


def export_geojson(scores, segments: Sequence[StreetSegment], bins: BinSpec | None = None) -> dict:
    """Build the evaluation map: one LineString feature per scored segment.

    Features carry quality_mean, continuity_share, n_images and their bin
    indices, ordered by segment_id so identical inputs serialize identically.
    """
    bins = bins or BinSpec()
    by_id = {s.segment_id: s for s in segments}
    features = []
    for score in sorted(scores, key=lambda s: s.segment_id):
        seg = by_id.get(score.segment_id)
        if seg is None:
            raise UnknownSegment(score.segment_id)
        props = {
            "segment_id": score.segment_id,
            "quality_mean": _sig9(score.quality_mean),
            "continuity_share": _sig9(score.continuity_share),
            "n_images": score.n_images,
            "quality_bin": bin_index(score.quality_mean, bins.quality_edges),
            "continuity_bin": bin_index(score.continuity_share, bins.continuity_edges),
        }
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[_sig9(lon), _sig9(lat)] for lon, lat in seg.polyline],
                },
                "properties": props,
            }
        )
    return {"type": "FeatureCollection", "features": features}


def geojson_dumps(doc: dict) -> str:
    """Compact, byte-stable GeoJSON serialization."""
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":"), allow_nan=False)
