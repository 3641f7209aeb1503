"""Spin up the validation API over a finished mock study and walk one
coder through the first queue items the way the browser UI does."""
import dataclasses
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from t2i_audit import StudyStore, build_design, load_config, pipeline
from t2i_audit.webapi import create_app

config = dataclasses.replace(load_config(), seed=7)
root = Path(tempfile.mkdtemp()) / "study"
store = StudyStore.open_or_init(root, config)
pipeline.stage_generate(store, config, build_design(config), mock=True, parallel=8)
pipeline.stage_code(store, config, mock=True)
pipeline.stage_consensus(store, config)
pipeline.stage_sample(store, config, budget=67)

app = create_app(store, config, token="demo-token")
client = TestClient(app)
client.headers["X-Study-Token"] = "demo-token"

client.post("/api/session", json={"coder_id": "demo-coder"})
scheme = client.get("/api/scheme").json()
print("dimensions served to the form:")
for dim in scheme["dimensions"]:
    bound = "unbounded" if dim["max"] is None else f"{dim['min']}..{dim['max']}"
    print(f"  {dim['id']:18s} {dim['kind']:7s} {bound}")

queue = client.get("/api/queue", params={"coder": "demo-coder"}).json()
print(f"\nqueue length: {len(queue)}; first entries:")
for entry in queue[:3]:
    print(f"  #{entry['position']:02d} {entry['priority']:6s} {entry['cell_id']}")

first = queue[0]
image = client.get(first["image_url"])
print(f"\nimage bytes for {first['cell_id']}: {len(image.content)} bytes "
      f"({image.headers['content-type']})")

submission = {"cell_id": first["cell_id"], "coder_id": "demo-coder",
              "political_symbols": 1, "cultural_symbols": 4,
              "flag_appearance": 0, "sovereignty": 0, "modernity": 2}
print("submit:", client.post("/api/codes", json=submission).json())
print("progress:", client.get("/api/progress").json()["overall"])

bad = dict(submission, modernity=9)
resp = client.post("/api/codes", json=bad)
print(f"out-of-range submission -> {resp.status_code}: {resp.json()['detail']}")
