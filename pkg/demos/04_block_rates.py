"""
Signatures versus the model on encoded payloads
===============================================

A signature engine that matches the raw text only misses payloads once they
are double URL-encoded. Decoding restores most of it, and a model trained
with encoded variants blocks both suites. The training set has to encode
benign rows too: otherwise the model learns that encoding means attack.
"""

# %%
import wamm
from wamm import augment
from wamm.corpus import AttackClass, Dataset, LabeledRecord
from wamm.evaluate import render_block_rates

ds = wamm.load_seed_corpus()
train, test = wamm.stratified_split(ds, 0.8, seed=7)
ops = ["url_encode_all", "double_url_encode"]


def fit(train_set):
    pipe = wamm.FeaturePipeline.fit(train_set.texts, max_features=2000)
    model, _ = wamm.train(pipe.matrix(train_set.texts), train_set.labels, wamm.class_weights(train_set),
                          wamm.TrainConfig(seed=7), pipe)
    return model


attacks_only = fit(wamm.expand_dataset(train, ops, 1, seed=7))
with_benign = fit(wamm.expand_dataset(train, ops, 1, seed=7, include_normal=True))

# %%
attacks = [r for r in test.records if r.label.is_attack][:500]
plain = Dataset(tuple(attacks))
encoded = Dataset(tuple(LabeledRecord(augment.double_url_encode(r.full_request), r.label, r.record_id)
                        for r in attacks))
print(attacks[0].full_request)
print(encoded.records[0].full_request)

# %%
bank = wamm.default_bank()
for name, suite in (("plain", plain), ("double-encoded", encoded)):
    for raw_only in (True, False):
        mode = "raw text only" if raw_only else "raw and decoded text"
        print(f"\n{name}, rules matched on {mode}")
        print(render_block_rates(wamm.block_rate_table(suite, bank, with_benign, raw_only=raw_only)))

# %%
# False positives on double-encoded benign requests.
benign = [augment.double_url_encode(r.full_request) for r in test.records if r.label is AttackClass.NORMAL]
for name, model in (("attacks encoded only", attacks_only), ("benign encoded too", with_benign)):
    pred = model.predict(model.pipeline.matrix(benign))
    print(f"{name:>22}: {sum(p is not AttackClass.NORMAL for p in pred)}/{len(benign)} benign blocked")
print(f"{'rules with decoding':>22}: {sum(wamm.rule_block(bank, t)[0] for t in benign)}/{len(benign)} benign blocked")
