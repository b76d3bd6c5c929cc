"""Screening, per-segment scores, and the GeoJSON evaluation map.

Unqualified images (streetscape rather than facade) are screened out first;
each street segment then gets the mean predicted quality of its remaining
images and the share predicted continuous. The map file carries one
LineString per scored segment with score and bin properties.
"""

import json

from _corpus import DEMO_DIR, corpus_features, corpus_paths

from streetrate import dataset, geo, pipeline
from streetrate.model import Hyperparams

paths = corpus_paths()
feats = corpus_features(paths)
images = dataset.read_manifest(paths["manifest"])
store = dataset.LabelStore(paths["labels"])

hyper = Hyperparams(lam=1e-4, epochs=30, seed=5, normalize="l2")
split_spec = pipeline.SplitSpec(per_class_dev=10, per_class_test=15, seed=11)

models = {}
for task in ("qualification", "quality", "continuity"):
    labels = dataset.resolve_labels(store, task)
    models[task], _, _ = pipeline.train_task(task, labels, feats, hyper, split_spec)

qualified, rejected = pipeline.screen_qualified(images, models["qualification"], feats)
print(f"screening: {len(qualified)} qualified, {len(rejected)} rejected "
      f"({100 * len(rejected) / len(images):.0f}% streetscape-like)")

scores = pipeline.score_segments(qualified, models["quality"], models["continuity"], feats)
print(f"\n{len(scores)} segment scores (sum of n_images = {sum(s.n_images for s in scores)}):")
for s in scores[:6]:
    print(f"  {s.segment_id}: quality {s.quality_mean:.2f}, continuous {s.continuity_share:.0%}, "
          f"{s.n_images} images")
print("  ...")

segments = geo.load_street_network(paths["network"])
doc = geo.export_geojson(scores, segments, geo.BinSpec())
out = DEMO_DIR / "map.geojson"
out.write_text(geo.geojson_dumps(doc) + "\n")
print(f"\nwrote {out} with {len(doc['features'])} features")
first = doc["features"][0]["properties"]
print("first feature properties:", json.dumps(first, indent=2))
