"""
From raw request to feature vector
==================================

Normalization, the sixteen handcrafted features, and the character n-gram
TF-IDF block.
"""

# %%
import numpy as np

import wamm

raw = "GET /item.php?id=1%2527%2520UNION%2520SELECT%2520password%2520FROM%2520users-- HTTP/1.1"
req = wamm.parse_request(raw)
for name, text in zip(("raw", "decoded once", "decoded twice"), req.variants):
    print(f"{name:>14}: {text}")

# %%
# Handcrafted statistics are computed on the raw text; the traversal flag also
# looks at the once-decoded form.
hf = wamm.extract_handcrafted(req)
for name, value in vars(hf).items():
    print(f"{name:>22} {value}")

# %%
# Entropy separates random-looking tokens from natural text.
for s in ("aaaaaaaa", "hello world", "Zx9#qL2!vR7&"):
    print(f"{s!r:>16} H={wamm.shannon_entropy(s):.3f} bits")

# %%
# TF-IDF over char 1-2-grams, vocabulary capped at 2000 terms by document frequency.
ds = wamm.load_seed_corpus()
pipe = wamm.FeaturePipeline.fit(ds.texts, max_features=2000)
vec = pipe.featurize(raw)
print("width", pipe.width, "non-zero tf-idf terms", len(vec.sparse_index))
# sparse indices are relative to the TF-IDF block, which follows the dense block
top = np.argsort(-vec.sparse_value)[:8]
terms = pipe.vectorizer.terms
print([(terms[vec.sparse_index[i]], round(float(vec.sparse_value[i]), 3)) for i in top])
