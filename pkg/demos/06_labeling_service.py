"""The human-in-the-loop labeling service, driven by a scripted rater.

The service hands out one image at a time per rater (lowest unlabeled id
first, or the model's most uncertain image), records ratings in the
append-only store, and reports live class shares next to the published
reference distribution. The same API feeds the browser labeling UI.
"""

import threading
import time

import httpx
import uvicorn

from _corpus import DEMO_DIR, corpus_paths

from streetrate.labelsvc import create_app

paths = corpus_paths()
store_path = DEMO_DIR / "demo_labels.jsonl"
if store_path.exists():
    store_path.unlink()

app = create_app(manifest_path=paths["manifest"], label_store_path=store_path)
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=8901, log_level="error"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
base = "http://127.0.0.1:8901"
while not server.started:
    time.sleep(0.02)

print("tasks:", httpx.get(base + "/api/tasks").json())

# A scripted architectural student rates twelve facades on the 1-4 scale.
script = [3, 3, 2, 4, 1, 2, 3, 4, 2, 3, 3, 1]
for value in script:
    item = httpx.get(base + "/api/next", params={"task": "quality", "rater": "student-a"}).json()
    resp = httpx.post(base + "/api/labels", json={
        "image_id": item["image_id"], "task": "quality", "value": value, "rater_id": "student-a",
    })
    print(f"  rated {item['image_id']} -> {value} ({resp.status_code}), "
          f"progress {item['progress']['labeled']}/{item['progress']['total']}")

stats = httpx.get(base + "/api/stats", params={"task": "quality"}).json()
print("\nlive counts:   ", stats["counts"])
print("live shares:   ", {k: f"{v:.1f}%" for k, v in stats["shares"].items()})
print("reference:     ", {k: f"{v:.1f}%" for k, v in stats["reference_shares"].items()})

print(f"\nall ratings persisted to {store_path}")
server.should_exit = True
thread.join(timeout=5)
