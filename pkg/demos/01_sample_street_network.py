"""Sampling capture points along a street network.

Streets arrive as a GeoJSON FeatureCollection of LineStrings. Points are
placed every 200 m from the segment start, and each point carries the
camera heading: +90 degrees clockwise from the local travel bearing, so the
camera looks at the building side rather than down the street.
"""

from streetrate import geo

# Three toy streets: one straight north-south, one east-west, one L-shaped.
segments = [
    geo.StreetSegment("north-south", ((116.380, 39.900), (116.380, 39.904))),
    geo.StreetSegment("east-west", ((116.382, 39.900), (116.388, 39.900))),
    geo.StreetSegment("l-shaped", ((116.390, 39.900), (116.390, 39.902), (116.394, 39.902))),
]

for seg in segments:
    print(f"\n{seg.segment_id}: {seg.length_m:.1f} m, {len(seg.polyline)} vertices")
    points = geo.sample_points(seg, interval_m=200.0)
    print(f"  {len(points)} capture points (floor(L/200)+1 = {int(seg.length_m // 200) + 1})")
    for pt in points:
        lon, lat = pt.position
        print(
            f"  offset {pt.offset_m:6.1f} m  at ({lon:.5f}, {lat:.5f})  "
            f"camera heading {pt.heading_deg:6.2f} deg"
        )

# The other street side is one flag away.
flipped = geo.sample_points(segments[0], interval_m=200.0, flip_heading=True)
print(f"\nflip_heading=True turns {90.0:.0f} deg into {flipped[0].heading_deg:.0f} deg")
