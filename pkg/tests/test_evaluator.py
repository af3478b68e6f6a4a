"""
Test du module d'évaluation (F-score, splits, rapports)
"""

import json
from dataclasses import replace

import numpy as np
import pytest

from src.modules.dataio import Dataset, DatasetKind, SyntheticSpec, VideoRecord, generate_synthetic
from src.modules.evaluator import (
    REPORT_FILE,
    RESULTS_FILE,
    SUMMARY_FILE,
    AblationRow,
    EvalConfig,
    VideoResult,
    aggregation_rule,
    cross_validate,
    evaluate_video,
    evaluate_videos,
    format_ablation,
    fscore,
    make_splits,
    predict_summary,
    report,
    run_ablation,
    write_ablation,
    write_report,
)
from src.modules.segment import SegmentConfig
from src.modules.summarize import SummaryConfig
from src.modules.trainer import TrainConfig, build_models, train
from src.utils.errors import ConfigurationError, DatasetValidationError, ShapeError
from src.utils.logger import log_section, read_jsonl, setup_logger

logger = setup_logger(__name__)


def _dummy_dataset(n_videos, name='target', prefix='video'):
    videos = [
        VideoRecord(id=f"{prefix}_{i:03d}", features=np.zeros((4, 2), dtype=np.float32), n_frames=4,
                    picks=np.arange(4, dtype=np.int32))
        for i in range(n_videos)
    ]
    return Dataset(name=name, kind=DatasetKind.SYNTHETIC, videos=videos)


def _renamed(dataset, prefix):
    return Dataset(name=prefix, kind=dataset.kind,
                   videos=[replace(v, id=f"{prefix}_{v.id}") for v in dataset.videos])


# ========================================
# F-SCORE
# ========================================
def test_fscore_hand_example():
    precision, recall, f = fscore([1, 1, 0, 0, 0, 0], [1, 0, 1, 1, 1, 0])
    assert precision == pytest.approx(0.5)
    assert recall == pytest.approx(0.25)
    assert f == pytest.approx(100 / 3, abs=1e-9)


def test_fscore_conventions():
    assert fscore([1, 0, 1], [1, 0, 1]) == (1.0, 1.0, pytest.approx(100.0))
    assert fscore([1, 0, 0], [0, 1, 1]) == (0.0, 0.0, 0.0)
    assert fscore([0, 0, 0], [0, 1, 1]) == (0.0, 0.0, 0.0)
    assert fscore([1, 1, 0], [0, 0, 0]) == (0.0, 0.0, 0.0)
    with pytest.raises(ShapeError):
        fscore([1, 0], [1, 0, 0])


def test_fscore_is_symmetric_and_bounded():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = rng.integers(0, 2, size=30)
        b = rng.integers(0, 2, size=30)
        f = fscore(a, b)[2]
        assert 0.0 <= f <= 100.0
        assert fscore(b, a)[2] == pytest.approx(f, abs=1e-12)


def test_user_aggregation_rules():
    pred = np.array([1, 1, 0, 0])
    users = np.array([[1, 1, 0, 0], [0, 0, 1, 1]])
    assert evaluate_video(pred, users, 'summe') == pytest.approx(100.0)
    assert evaluate_video(pred, users, 'tvsum') == pytest.approx(50.0)
    assert evaluate_video(pred, users, 'synthetic', 'max') == pytest.approx(100.0)
    assert aggregation_rule(DatasetKind.SYNTHETIC) == 'mean'
    with pytest.raises(DatasetValidationError):
        evaluate_video(pred, np.zeros((0, 4)), 'tvsum')


def test_max_aggregation_dominates_mean():
    rng = np.random.default_rng(5)
    for _ in range(200):
        n_users = int(rng.integers(1, 6))
        pred = rng.integers(0, 2, size=40)
        users = rng.integers(0, 2, size=(n_users, 40))
        assert evaluate_video(pred, users, 'summe') >= evaluate_video(pred, users, 'tvsum') - 1e-9


# ========================================
# SPLITS
# ========================================
def test_canonical_splits_partition_the_dataset():
    dataset = _dummy_dataset(25)
    splits = make_splits(dataset, 'canonical', n_repeats=5, seed=3)

    assert len(splits) == 5
    assert all(len(s.test_ids) == 5 for s in splits)
    tested = [vid for s in splits for vid in s.test_ids]
    assert sorted(tested) == dataset.ids
    for s in splits:
        assert set(s.train_ids).isdisjoint(s.test_ids)
        assert len(s.train_ids) + len(s.test_ids) == 25

    assert make_splits(dataset, 'canonical', 5, seed=3) == splits
    assert make_splits(dataset, 'canonical', 5, seed=4) != splits


def test_uneven_splits_cover_every_video():
    dataset = _dummy_dataset(7)
    splits = make_splits(dataset, n_repeats=3)
    assert sorted(len(s.test_ids) for s in splits) == [2, 2, 3]
    assert sorted(vid for s in splits for vid in s.test_ids) == dataset.ids


def test_augmented_and_transfer_splits():
    target = _dummy_dataset(6)
    auxiliary = _dummy_dataset(4, name='aux', prefix='aux')

    augmented = make_splits(target, 'augmented', 3, auxiliary=[auxiliary])
    for s in augmented:
        assert set(auxiliary.ids) <= set(s.train_ids)
        assert set(s.test_ids) <= set(target.ids)

    transfer = make_splits(target, 'transfer', auxiliary=[auxiliary])
    assert len(transfer) == 1
    assert transfer[0].train_ids == auxiliary.ids
    assert transfer[0].test_ids == target.ids


def test_split_errors():
    target = _dummy_dataset(4)
    with pytest.raises(ConfigurationError):
        make_splits(target, 'canonical', n_repeats=5)
    with pytest.raises(ConfigurationError):
        make_splits(target, 'transfer')
    with pytest.raises(ConfigurationError, match="video_000"):
        make_splits(target, 'augmented', 2, auxiliary=[_dummy_dataset(2)])
    with pytest.raises(ConfigurationError):
        make_splits(target, 'holdout')


def test_eval_config_validation():
    with pytest.raises(ConfigurationError):
        EvalConfig(n_repeats=1)
    with pytest.raises(ConfigurationError):
        EvalConfig(setting='holdout')


# ========================================
# RAPPORT
# ========================================
def _result(split, video_id, f):
    return VideoResult(split=split, video_id=video_id, precision=0.0, recall=0.0, fscore=f,
                       selected_frames=0, budget_frames=0)


def test_report_means_splits_then_folds():
    results = [_result(k, f"v{k}", f) for k, f in enumerate([40.0, 45.0, 50.0, 55.0, 60.0])]
    eval_report = report(results, n_splits=5)
    assert eval_report.split_fscores == [40.0, 45.0, 50.0, 55.0, 60.0]
    assert eval_report.final_fscore == pytest.approx(50.0)

    # moyenne par split d'abord : le split 0 pèse autant que le split 1
    unbalanced = report([_result(0, 'a', 10.0), _result(0, 'b', 30.0), _result(1, 'c', 80.0)])
    assert unbalanced.split_fscores == [20.0, 80.0]
    assert unbalanced.final_fscore == pytest.approx(50.0)


def test_report_errors():
    with pytest.raises(ConfigurationError):
        report([])
    with pytest.raises(ConfigurationError, match=r"\[1\]"):
        report([_result(0, 'a', 10.0), _result(2, 'b', 10.0)], n_splits=3)


def test_write_report(tmp_path):
    eval_report = report([_result(0, 'a', 40.0), _result(1, 'b', 60.0)], provenance={'eval_seed': 0})
    write_report(eval_report, tmp_path, run_config={'train': {'base_lr': 1e-4}})

    results = read_jsonl(tmp_path / RESULTS_FILE)
    assert [r['video_id'] for r in results] == ['a', 'b']
    assert results[0]['setting'] == 'canonical'
    assert 'final' in (tmp_path / SUMMARY_FILE).read_text()

    summary = json.loads((tmp_path / REPORT_FILE).read_text())
    assert summary['final_fscore'] == pytest.approx(50.0)
    assert summary['run_config']['train']['base_lr'] == 1e-4
    assert summary['provenance'] == {'eval_seed': 0}


# ========================================
# PRÉDICTION
# ========================================
def test_predict_summary_respects_budget(tiny_dataset, tiny_train_config):
    scorer, _ = build_models(tiny_train_config)
    for video in tiny_dataset.videos:
        selection = predict_summary(scorer, video, SummaryConfig(budget_ratio=0.15))
        assert selection.frame_mask.shape == (video.n_frames,)
        assert selection.selected_frames <= selection.budget_frames == int(np.floor(0.15 * video.n_frames))


def test_predict_summary_falls_back_to_kts(tiny_dataset, tiny_train_config):
    scorer, _ = build_models(tiny_train_config)
    video = replace(tiny_dataset.videos[0], change_points=None)
    selection = predict_summary(scorer, video, SummaryConfig(), SegmentConfig(max_segments=4))
    assert selection.frame_mask.shape == (video.n_frames,)
    assert selection.selected_frames <= selection.budget_frames


def test_evaluate_videos_requires_user_summaries(tiny_dataset, tiny_train_config):
    scorer, _ = build_models(tiny_train_config)
    video = replace(tiny_dataset.videos[0], user_summaries=None)
    with pytest.raises(DatasetValidationError):
        evaluate_videos(scorer, [video], tiny_dataset.kind)


# ========================================
# PROTOCOLE COMPLET
# ========================================
def test_cross_validate_retrains_per_split(tiny_dataset, tiny_train_config):
    log_section(logger, "Test validation croisée")
    eval_report, histories = cross_validate(tiny_dataset, tiny_train_config, EvalConfig(n_repeats=2))

    assert eval_report.n_splits == 2
    assert len(histories) == 2
    assert sorted(r.video_id for r in eval_report.results) == tiny_dataset.ids
    assert all(0.0 <= r.fscore <= 100.0 for r in eval_report.results)
    assert eval_report.final_fscore == pytest.approx(np.mean(eval_report.split_fscores))
    assert len(eval_report.provenance['splits']) == 2


def test_cross_validate_with_checkpoint_is_deterministic(tiny_dataset, tiny_train_config):
    checkpoint, _ = train(tiny_dataset.videos, tiny_train_config)
    first, histories = cross_validate(tiny_dataset, tiny_train_config, EvalConfig(n_repeats=3),
                                      checkpoint=checkpoint)
    second, _ = cross_validate(tiny_dataset, tiny_train_config, EvalConfig(n_repeats=3),
                               checkpoint=checkpoint)
    assert histories == []
    assert first.final_fscore == second.final_fscore


def test_cross_validate_transfer(tiny_dataset, tiny_train_config):
    auxiliary = _renamed(tiny_dataset, 'aux')
    eval_report, histories = cross_validate(tiny_dataset, tiny_train_config, EvalConfig(setting='transfer'),
                                            auxiliary=[auxiliary])
    assert eval_report.n_splits == 1
    assert len(eval_report.results) == len(tiny_dataset)
    assert eval_report.provenance['splits'][0]['train_ids'] == auxiliary.ids


# ========================================
# ABLATION
# ========================================
def test_ablation_table(tmp_path):
    rows = [
        AblationRow(label='Exp.1', flags=(False, False, False), seeds=[0, 1], fscores=[40.0, 42.0],
                    score_variances=[1e-4, 3e-4]),
        AblationRow(label='Exp.8', flags=(True, True, True), seeds=[0, 1], fscores=[50.0, 52.0],
                    score_variances=[2e-2, 4e-2]),
    ]
    assert rows[0].mean_fscore == pytest.approx(41.0)
    assert rows[1].mean_score_variance == pytest.approx(3e-2)

    table = format_ablation(rows)
    assert 'Exp.1' in table and 'Exp.8' in table
    assert '51.00' in table

    write_ablation(rows, tmp_path, run_config={'ablate': {'seeds': [0, 1]}})
    records = read_jsonl(tmp_path / 'ablation.jsonl')
    assert [r['label'] for r in records] == ['Exp.1', 'Exp.8']
    assert records[1]['variance_loss'] is True
    assert records[0]['run_config'] == {'ablate': {'seeds': [0, 1]}}


def test_run_ablation_rejects_unknown_experiment(tiny_dataset, tiny_train_config):
    with pytest.raises(ConfigurationError, match="Exp.9"):
        run_ablation(tiny_dataset, tiny_train_config, experiments=['Exp.1', 'Exp.9'])
    with pytest.raises(ConfigurationError):
        run_ablation(tiny_dataset, tiny_train_config, experiments=[])


@pytest.mark.slow
def test_full_model_beats_plain_lstm_on_most_seeds():
    """Exp.8 (tout activé) >= Exp.1 (tout désactivé) en F-score sur au moins 2 seeds sur 3"""
    log_section(logger, "Ablation directionnelle Exp.1 / Exp.8")
    dataset = generate_synthetic(SyntheticSpec(n_videos=8, min_steps=90, max_steps=110, feature_dim=32, seed=0))
    base = TrainConfig(max_epochs=20).for_feature_dim(32)

    rows = run_ablation(dataset, base, seeds=(0, 1, 2), eval_config=EvalConfig(n_repeats=2),
                        experiments=['Exp.1', 'Exp.8'])
    plain, full = rows
    assert (plain.label, full.label) == ('Exp.1', 'Exp.8')
    assert full.flags == (True, True, True)
    wins = sum(f_full >= f_plain for f_full, f_plain in zip(full.fscores, plain.fscores))
    assert wins >= 2
