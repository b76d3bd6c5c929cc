"""streetrate: rating the visual environment of streets from capture images.

Samples capture points along a street network, turns images into visual-word
features, trains linear SVM raters for qualification, facade quality (1-4)
and street-wall continuity, aggregates predictions per street segment,
exports GeoJSON evaluation maps, and validates machine scores against
on-site survey ratings. A small HTTP service plus browser UI collects the
human ratings the raters are trained on.
"""

__version__ = "0.1.0"
