"""Training the three raters and reading their report tables.

Labeled images are split per class (dev/test sampled equally in every
class, remainder trains), one linear SVM is trained per task, and the
reports mirror the usual table layout: percentage columns for the two
binary raters, train/dev/test MSE for the 4-point quality rater.
"""

from _corpus import corpus_features, corpus_paths

from streetrate import dataset, metrics, pipeline
from streetrate.model import Hyperparams

paths = corpus_paths()
feats = corpus_features(paths)
store = dataset.LabelStore(paths["labels"])

hyper = Hyperparams(lam=1e-4, epochs=30, seed=5, normalize="l2")
split_spec = pipeline.SplitSpec(per_class_dev=10, per_class_test=15, seed=11)

for task in ("qualification", "quality", "continuity"):
    labels = dataset.resolve_labels(store, task)
    model, reports, split = pipeline.train_task(task, labels, feats, hyper, split_spec)
    print(f"\n=== {task} ({len(labels)} labeled images, "
          f"train/dev/test = {len(split.train_ids)}/{len(split.dev_ids)}/{len(split.test_ids)}) ===")
    print(metrics.classification_csv({f"{task}/{k}": v for k, v in reports.items()}), end="")
    if task == "quality":
        print(metrics.mse_csv({"bovw + svm": tuple(reports[k].mse for k in ("train", "dev", "test"))}), end="")

# Regularization can be tuned on the dev split without touching test:
labels = dataset.resolve_labels(store, "quality")
model, reports, _ = pipeline.train_task(
    "quality", labels, feats, hyper, split_spec, lam_grid=(1e-5, 1e-4, 1e-3)
)
print(f"\nlambda grid search picked lam={model.hyper.lam} (dev MSE {reports['dev'].mse:.3f})")
