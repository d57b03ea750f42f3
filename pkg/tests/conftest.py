import pytest

from wamm import corpus, features, gbdt, seedcorpus


@pytest.fixture(scope="session")
def seed_ds():
    return seedcorpus.load_seed_corpus()


@pytest.fixture(scope="session")
def small_model(seed_ds):
    """A quick model on a stratified slice of the seed corpus."""
    sub, _ = corpus.stratified_split(seed_ds, 0.3, seed=3)
    pipe = features.FeaturePipeline.fit(sub.texts, max_features=500)
    cfg = gbdt.TrainConfig(max_rounds=25, max_depth=4, early_stopping_patience=0)
    model, _ = gbdt.train(pipe.matrix(sub.texts), sub.labels, corpus.class_weights(sub), cfg, pipe)
    return model


@pytest.fixture(scope="session")
def small_model_path(small_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "small.wamm"
    small_model.save(path)
    return path


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
