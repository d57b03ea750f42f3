"""
Single-request latency and the HTTP service
===========================================

Per-stage timings for one request at a time, then the JSON service on an
ephemeral port using the bundled model.
"""

# %%
import json
import threading
import urllib.request
from importlib import resources

import wamm
from wamm import seedcorpus
from wamm.serve import make_server

ds = wamm.load_seed_corpus()
with resources.as_file(seedcorpus.seed_model_path()) as path:
    model = wamm.load_model(path)
    server = make_server(path, "127.0.0.1:0", workers=2)

rep = wamm.latency_bench(model, ds.texts, warmup=200, iters=2000)
for stage in ("normalize", "featurize", "predict", "end_to_end"):
    s = getattr(rep, stage)
    print(f"{stage:>10}  mean {s.mean_us:7.1f}us  p50 {s.p50_us:7.1f}us  p99 {s.p99_us:7.1f}us")

# %%
threading.Thread(target=server.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{server.server_address[1]}"


def post(path, body):
    req = urllib.request.Request(base + path, json.dumps(body).encode(),
                                 {"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.load(resp)


print(post("/classify", {"full_request": "GET /search?q=1' OR '1'='1 HTTP/1.1"}))
batch = post("/classify_batch", [{"full_request": t} for t in ds.texts[:20]])
print(batch["count"], "classified;", sum(r["blocked"] for r in batch["results"]), "blocked")
with urllib.request.urlopen(base + "/metrics") as resp:
    print(json.load(resp))
server.shutdown()
server.server_close()
