"""Validating machine scores against on-site survey opinion.

Survey responses (1-5 scale) are averaged per street segment and rank-
correlated with the machine scores over the segments both sides cover.
Spearman's r sidesteps the scale mismatch between the 1-4 machine quality
and the 1-5 survey ratings: only orderings are compared, never values.
"""

from _corpus import corpus_features, corpus_paths

from streetrate import dataset, pipeline
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

qualified, _ = pipeline.screen_qualified(images, models["qualification"], feats)
scores = pipeline.score_segments(qualified, models["quality"], models["continuity"], feats)

surveys = pipeline.read_survey_csv(paths["survey"])
print(f"{len(surveys)} survey responses over {len({r.segment_id for r in surveys})} segments")

reports = pipeline.validate_against_survey(scores, surveys)
for feature in ("quality", "continuity"):
    rep = reports[feature]
    print(f"  {feature:11s} spearman r = {rep.spearman_r:+.3f} over {rep.n_segments} segments")

print("\nAdding survey responses for segments the model never scored cannot")
print("move r: only the intersection of segments enters the correlation.")
