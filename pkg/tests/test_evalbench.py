import random

import pytest

from falcon.dataset import split_dataset
from falcon.evalbench import (
    AblationTable,
    ablation_configs,
    compute_metrics,
    evaluate_transfer,
    run_ablations,
)
from falcon.training import InteractionModel, TrainConfig, predict, pretrain_trajectory_extractor, train


def test_metrics_from_confusion_counts():
    preds = [1] * 3 + [1] + [0] + [0] * 5
    gold = [1] * 3 + [0] + [1] + [0] * 5
    report = compute_metrics(preds, gold)
    assert (report.tp, report.fp, report.fn, report.tn) == (3, 1, 1, 5)
    assert report.precision == pytest.approx(75.0)
    assert report.recall == pytest.approx(75.0)
    assert report.f1 == pytest.approx(75.0)
    assert report.accuracy == pytest.approx(80.0)
    assert report.formatted() == {"Acc": "80.00", "P": "75.00", "R": "75.00",
                                  "F1": "75.00"}


def test_all_correct_gives_100s():
    report = compute_metrics([1, 0, 1, 0], [1, 0, 1, 0])
    assert report.accuracy == report.precision == report.recall == 100.0
    assert report.f1 == pytest.approx(100.0)


def test_length_mismatch_is_error():
    with pytest.raises(ValueError, match="mismatch"):
        compute_metrics([1, 0], [1])


def test_undefined_precision_flagged_as_zero():
    report = compute_metrics([0, 0, 0], [1, 0, 1])
    assert report.precision == 0.0
    assert report.precision_undefined


def test_metrics_order_invariant():
    rng = random.Random(0)
    preds = [rng.randint(0, 1) for _ in range(50)]
    gold = [rng.randint(0, 1) for _ in range(50)]
    base = compute_metrics(preds, gold)
    order = list(range(50))
    rng.shuffle(order)
    shuffled = compute_metrics([preds[i] for i in order], [gold[i] for i in order])
    assert (base.tp, base.fp, base.fn, base.tn) == (
        shuffled.tp, shuffled.fp, shuffled.fn, shuffled.tn)


def test_ablation_grid_has_six_distinct_configs():
    base = TrainConfig(hidden_size=4)
    rows = ablation_configs(base)
    assert len(rows) == 6
    assert [name for name, _ in rows] == ["full", "wo_ft", "wo_mt", "wo_ft_mt",
                                          "wo_aw", "concat"]
    hashes = {cfg.config_hash() for _, cfg in rows}
    assert len(hashes) == 6
    # base config untouched
    assert base == TrainConfig(hidden_size=4)


def test_run_ablations_produces_six_reports(corpus):
    examples = split_dataset(corpus.examples[:40], seed=0)
    config = TrainConfig(hidden_size=4, max_epochs=1, learning_rate=5e-3, seed=2)
    extractor, _ = pretrain_trajectory_extractor(corpus.labeled_triples[:30],
                                                 config)
    table = run_ablations(examples, config, frozen_extractor=extractor,
                          dataset_id="fixture")
    assert len(table.rows) == 6
    assert len({row.config_hash for row in table.rows}) == 6
    csv_text = table.to_csv()
    assert csv_text.splitlines()[0] == "config,config_hash,seed,Acc,P,R,F1"
    assert len(csv_text.splitlines()) == 7
    assert isinstance(table, AblationTable)


@pytest.fixture(scope="module")
def trained(request):
    corpus = request.getfixturevalue("corpus")
    examples = split_dataset(corpus.examples, seed=0)
    config = TrainConfig(hidden_size=4, max_epochs=4, learning_rate=5e-3,
                         seed=5, ft=False)
    model = InteractionModel(config)
    train(model, examples, config)
    return model, examples


def test_transfer_on_identity_corpus_matches_compute_metrics(trained):
    model, examples = trained
    test_set = [ex for ex in examples if ex.split == "test"]
    report = evaluate_transfer(model, test_set)
    preds = predict(model, [ex.candidate for ex in test_set])
    direct = compute_metrics([p.label for p in preds],
                             [ex.y_inter for ex in test_set])
    assert report.to_json()["confusion"] == direct.to_json()["confusion"]


def test_transfer_matches_hand_scored_confusion(trained):
    model, examples = trained
    subset = [ex for ex in examples if ex.split == "val"][:20]
    report = evaluate_transfer(model, subset)
    # oracle: recount the confusion cell by cell
    preds = predict(model, [ex.candidate for ex in subset])
    tp = sum(1 for p, ex in zip(preds, subset) if p.label == 1 and ex.y_inter == 1)
    fp = sum(1 for p, ex in zip(preds, subset) if p.label == 1 and ex.y_inter == 0)
    fn = sum(1 for p, ex in zip(preds, subset) if p.label == 0 and ex.y_inter == 1)
    tn = sum(1 for p, ex in zip(preds, subset) if p.label == 0 and ex.y_inter == 0)
    assert (report.tp, report.fp, report.fn, report.tn) == (tp, fp, fn, tn)
