"""
Training and evaluating the boosted trees
=========================================

Stratified 80/20 split, class-balanced weights, early stopping on a
validation slice, then per-class metrics on the holdout.
"""

# %%
import time

import wamm

ds = wamm.load_seed_corpus()
train, test = wamm.stratified_split(ds, 0.8, seed=7)
weights = wamm.class_weights(train)
print({c.value: round(w, 3) for c, w in weights.items()})

# %%
pipe = wamm.FeaturePipeline.fit(train.texts, max_features=2000)
t0 = time.perf_counter()
model, log = wamm.train(pipe.matrix(train.texts), train.labels, weights, wamm.TrainConfig(seed=7), pipe)
print(f"{model.completed_rounds} rounds kept (best round {log.best_round}, "
      f"stopped early: {log.stopped_early}) in {time.perf_counter() - t0:.1f}s")
print("train loss", [round(x, 4) for x in log.train_losses[:5]], "...")

# %%
pred = model.predict(pipe.matrix(test.texts))
report = wamm.metrics(wamm.confusion(test.labels, pred, model.classes))
print(report.render())

# %%
# The model file is self-contained: trees, vocabulary and idf weights.
import tempfile
from pathlib import Path

with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "model.wamm"
    wamm.save_model(model, path)
    again = wamm.load_model(path)
    print(path.stat().st_size, "bytes;", "same predictions:",
          again.predict(again.pipeline.matrix(test.texts)) == pred)
