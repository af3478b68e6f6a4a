"""
Test du module dataio : bundles, validation, générateur synthétique
"""

import json
from dataclasses import replace

import numpy as np
import pytest

from src.modules.dataio import (
    MANIFEST_NAME,
    Dataset,
    DatasetKind,
    SyntheticSpec,
    VideoRecord,
    generate_synthetic,
    load_dataset,
    validate,
    write_dataset,
)
from src.modules.segment import ShotSegmentation, to_original_frames
from src.utils.errors import ConfigurationError, DatasetFormatError, DatasetValidationError
from src.utils.logger import log_section, setup_logger
from src.utils.tensor_file import decode_tensor, encode_tensor, read_tensor, write_tensor

logger = setup_logger(__name__)


def _video(video_id='v0', n_steps=5, n_frames=10):
    return VideoRecord(
        id=video_id,
        features=np.ones((n_steps, 3), dtype=np.float32),
        n_frames=n_frames,
        picks=(np.arange(n_steps) * 2).astype(np.int32),
    )


def test_bundle_round_trip(tmp_path, tiny_dataset):
    """Écriture puis relecture : vidéos et métadonnées identiques"""
    log_section(logger, "Test round-trip bundle")
    path = write_dataset(tiny_dataset, tmp_path / 'bundle')
    loaded = load_dataset(path)

    assert loaded.name == tiny_dataset.name
    assert loaded.kind is DatasetKind.SYNTHETIC
    assert loaded.ids == tiny_dataset.ids
    assert loaded.videos == tiny_dataset.videos
    assert loaded.metadata == tiny_dataset.metadata


def test_two_video_bundle(tmp_path, tiny_spec):
    dataset = generate_synthetic(replace(tiny_spec, n_videos=2))
    loaded = load_dataset(write_dataset(dataset, tmp_path / 'two'))
    assert len(loaded) == 2
    assert validate(loaded) == []


def test_user_summaries_shape_echo(tmp_path):
    video = _video(n_steps=50, n_frames=100)
    video.user_summaries = np.zeros((3, 100), dtype=np.uint8)
    video.user_summaries[:, 10:30] = 1
    dataset = Dataset(name='shape', kind='tvsum', videos=[video])

    loaded = load_dataset(write_dataset(dataset, tmp_path / 'shape'))
    assert loaded.videos[0].user_summaries.shape == (3, 100)
    assert loaded.kind is DatasetKind.TVSUM


def test_written_twice_is_byte_identical(tmp_path, tiny_dataset):
    first = write_dataset(tiny_dataset, tmp_path / 'a')
    second = write_dataset(tiny_dataset, tmp_path / 'b')
    for path in sorted(first.glob('*.ten')):
        assert path.read_bytes() == (second / path.name).read_bytes()
    assert (first / MANIFEST_NAME).read_text() == (second / MANIFEST_NAME).read_text()


def test_empty_dataset_rejected(tmp_path):
    with pytest.raises(DatasetValidationError, match="empty dataset"):
        write_dataset(Dataset(name='empty', kind='synthetic', videos=[]), tmp_path / 'empty')


def test_missing_manifest(tmp_path):
    with pytest.raises(DatasetFormatError, match="manifest"):
        load_dataset(tmp_path)


@pytest.mark.parametrize('missing', ['id', 'n_frames'])
def test_manifest_entry_missing_key(bundle_dir, missing):
    manifest_path = bundle_dir / MANIFEST_NAME
    manifest = json.loads(manifest_path.read_text())
    del manifest['videos'][0][missing]
    manifest_path.write_text(json.dumps(manifest))

    with pytest.raises(DatasetFormatError, match=missing):
        load_dataset(bundle_dir)


def test_picks_not_increasing_names_video(bundle_dir, tiny_dataset):
    video = tiny_dataset.videos[1]
    picks = video.picks.copy()
    picks[[2, 3]] = picks[[3, 2]]
    write_tensor(bundle_dir / f"{video.id}.picks.ten", picks)

    with pytest.raises(DatasetValidationError) as excinfo:
        load_dataset(bundle_dir)
    violation = excinfo.value.violations[0]
    assert violation.video_id == video.id
    assert violation.field == 'picks'
    assert video.id in str(excinfo.value)


def test_missing_tensor_file(bundle_dir, tiny_dataset):
    (bundle_dir / f"{tiny_dataset.videos[0].id}.gtscore.ten").unlink()
    with pytest.raises(DatasetFormatError):
        load_dataset(bundle_dir)


def test_validate_reports_every_violation():
    bad = _video('bad')
    bad.gtscore = np.full(5, 1.5, dtype=np.float32)
    bad.user_summaries = np.full((1, 10), 2, dtype=np.uint8)
    bad.change_points = np.array([[0, 4], [3, 9]], dtype=np.int32)
    dataset = Dataset(name='bad', kind='summe', videos=[bad, _video('bad')])

    rules = {(v.video_id, v.field, v.rule) for v in validate(dataset)}
    assert ('bad', 'gtscore', "score out of [0,1]") in rules
    assert ('bad', 'user_summaries', "values not in {0,1}") in rules
    assert ('bad', 'change_points', "intervals overlap") in rules
    assert ('bad', 'id', "duplicate video id") in rules


def test_feature_dimension_must_agree():
    other = _video('v1')
    other.features = np.ones((5, 4), dtype=np.float32)
    violations = validate(Dataset(name='dims', kind='synthetic', videos=[_video('v0'), other]))
    assert any(v.field == 'features' for v in violations)


# ========================================
# CODEC .ten
# ========================================
def test_tensor_codec_is_little_endian_regardless_of_input_order():
    big = np.arange(6, dtype='>i4').reshape(2, 3)
    little = np.arange(6, dtype='<i4').reshape(2, 3)
    assert encode_tensor(big) == encode_tensor(little)

    decoded = decode_tensor(encode_tensor(big))
    assert decoded.dtype.isnative
    np.testing.assert_array_equal(decoded, little)


def test_tensor_codec_rejects_corruption(tmp_path):
    data = encode_tensor(np.zeros(4, dtype=np.float32))
    with pytest.raises(DatasetFormatError, match="magic"):
        decode_tensor(b'XXXX' + data[4:])
    with pytest.raises(DatasetFormatError, match="charge utile"):
        decode_tensor(data[:-1])
    with pytest.raises(DatasetFormatError):
        read_tensor(tmp_path / 'absent.ten')


# ========================================
# GÉNÉRATEUR SYNTHÉTIQUE
# ========================================
def test_synthetic_is_deterministic(tiny_spec):
    first, second = generate_synthetic(tiny_spec), generate_synthetic(tiny_spec)
    assert first.videos == second.videos
    assert first.metadata == second.metadata

    other = generate_synthetic(replace(tiny_spec, seed=1))
    assert not np.array_equal(other.videos[0].features, first.videos[0].features)


def test_synthetic_records_ground_truth(tiny_dataset):
    """Les change points stockés sont les frontières plantées ramenées aux frames originales"""
    assert validate(tiny_dataset) == []
    truth = tiny_dataset.metadata['ground_truth']
    for video in tiny_dataset.videos:
        planted = ShotSegmentation(np.array(truth[video.id]['segments']))
        expected = to_original_frames(planted, video.picks, video.n_frames)
        np.testing.assert_array_equal(video.change_points, expected.intervals)
        assert video.user_summaries.shape == (2, video.n_frames)


def test_synthetic_scores_follow_importance(tiny_dataset):
    truth = tiny_dataset.metadata['ground_truth']
    for video in tiny_dataset.videos:
        segments = np.array(truth[video.id]['segments'])
        important = np.array(truth[video.id]['important'], dtype=bool)
        lengths = segments[:, 1] - segments[:, 0] + 1
        flags = np.repeat(important, lengths)
        if flags.any() and (~flags).any():
            assert video.gtscore[flags].mean() > video.gtscore[~flags].mean()


def test_synthetic_spec_validation():
    with pytest.raises(ConfigurationError):
        SyntheticSpec(min_steps=10, max_steps=5)
    with pytest.raises(ConfigurationError):
        SyntheticSpec(min_steps=20, max_segments=12, min_segment_steps=4)


def test_manifest_is_json_document(bundle_dir):
    manifest = json.loads((bundle_dir / MANIFEST_NAME).read_text())
    assert manifest['kind'] == 'synthetic'
    assert {'features', 'picks'} <= set(manifest['videos'][0]['fields'])
