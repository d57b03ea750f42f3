import pytest

from wamm.corpus import AttackClass, class_distribution, save_dataset
from wamm.curation import flag_mislabeled
from wamm.fingerprints import default_bank
from wamm.model_io import dumps
from wamm.seedcorpus import DEFAULT_COUNTS, generate, seed_corpus_path, seed_model_path, train_seed_model


def test_bundled_corpus_regenerates(tmp_path, seed_ds):
    save_dataset(generate(), tmp_path / "seed.jsonl")
    assert (tmp_path / "seed.jsonl").read_bytes() == seed_corpus_path().read_bytes()
    assert class_distribution(seed_ds) == DEFAULT_COUNTS
    assert len(seed_ds) == 5000 and set(class_distribution(seed_ds)) == set(AttackClass)


def test_bundled_benign_is_clean(seed_ds):
    assert flag_mislabeled(seed_ds, default_bank()).total_flagged == 0


@pytest.mark.slow
def test_bundled_model_regenerates():
    model, _ = train_seed_model()
    assert dumps(model) == seed_model_path().read_bytes()
