"""End-to-end smoke tests for the Python bindings.

These do not retest the numerics (the C++ suites own that); they check that
the module imports, the main operations are callable from Python, and a
pure-Python adapter can drive the pipeline.
"""

import json

import pytest

import distcma


@pytest.fixture(scope="module")
def lexicon():
    return distcma.load_lexicon(str(distcma.seed_lexicon_path()))


@pytest.fixture(scope="module")
def dataset(lexicon):
    return distcma.generate_pairs(lexicon, 0, 8)


def test_version_and_constants():
    assert distcma.__version__ == "0.1.0"
    assert 0 < distcma.ODDS_EPSILON < 1e-3
    assert distcma.REFERENCE_PARAMS_CORRELATION == pytest.approx(0.649)
    assert len(distcma.reference_models()) == 6


def test_generated_dataset_shape(dataset):
    assert len(dataset) == 8
    for s in dataset:
        assert s.control.label == distcma.PairLabel.entailment
        assert all(
            iv.label == distcma.PairLabel.non_entailment for iv in s.interventions
        )
    text = distcma.dataset_to_jsonl(dataset)
    assert distcma.dataset_to_jsonl(distcma.dataset_from_jsonl(text)) == text


def test_toy_decomposition(dataset):
    toy = distcma.ToyModel(0)
    star = distcma.MediatorSpec([toy.star_coord()])
    for s in dataset:
        rec = distcma.natural_indirect_effect(
            toy,
            s.control,
            s.interventions[0],
            s.match_id,
            star,
            distcma.Alignment.min_length,
        )
        assert rec.te == pytest.approx(rec.nie + rec.nde, abs=1e-12)
        assert rec.nie == pytest.approx(rec.te, abs=1e-12)
        assert rec.nde == pytest.approx(0.0, abs=1e-12)


def test_neuron_sweep_ranks_star_first(dataset):
    toy = distcma.ToyModel(0)
    table = distcma.neuron_sweep(toy, dataset)
    ranked = sorted(table.entries, key=lambda e: abs(e.mean_nie), reverse=True)
    assert ranked[0].coord == toy.star_coord()


def test_run_te_writes_bundle(tmp_path):
    cfg = distcma.RunConfig()
    cfg.lexicon_path = str(distcma.seed_lexicon_path())
    cfg.model = "toy"
    cfg.pairs_per_group = 6
    cfg.out = str(tmp_path / "out")
    distcma.run_te(cfg)

    out = tmp_path / "out"
    for name in ("te_table.csv", "ttest.csv", "accuracy.csv", "run_manifest.json"):
        assert (out / name).is_file(), name
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["model"]["name"] == "toy"
    header = (out / "ttest.csv").read_text().splitlines()[0]
    assert header == "model,n,mean,sd,t,p,p_formatted,reject_h0,alpha,degenerate"


def test_python_adapter_drives_pipeline(dataset):
    class Constant(distcma.ModelAdapter):
        def meta(self):
            m = distcma.ModelMeta()
            m.name = "py-constant"
            m.n_layers = 1
            m.hidden_size = 1
            m.n_parameters = 1
            m.vocab_size = 1
            m.thread_safe = False
            return m

        def predict(self, pair):
            return distcma.LabelDistribution(0.5, 0.3, 0.2)

        def predict_with_capture(self, pair, spec):
            snap = distcma.ActivationSnapshot()
            snap.coords = spec.coords
            snap.seq_len = 1
            snap.values = [[0.0] for _ in spec.coords]
            return self.predict(pair), snap

        def predict_with_patch(self, pair, snapshot, alignment):
            return self.predict(pair)

    model = Constant()
    s = dataset[0]
    rec = distcma.total_effect(model, s.control, s.interventions[0], s.match_id)
    assert rec.te == 0.0

    acc = distcma.group_accuracy(model, dataset)
    assert acc.control_pct == 100.0
    assert acc.intervention_pct == 0.0

    table = distcma.neuron_sweep(model, dataset)
    assert len(table.entries) == 1
    assert table.entries[0].mean_nie == 0.0
