"""
Test de bout en bout de la CLI (synth -> train -> eval / ablate / plot)
"""

import json

import pytest

import main
from src.modules.dataio import load_dataset
from src.modules.trainer import PARAMS_FILE, TRAIN_LOG_FILE
from src.utils.logger import log_section, read_jsonl, setup_logger

logger = setup_logger(__name__)


@pytest.fixture
def tiny_overrides(tmp_path):
    """Surcharges pour un pipeline de quelques secondes"""
    return [
        f"--data.bundle={tmp_path / 'bundle'}",
        f"--data.output_dir={tmp_path / 'runs'}",
        "--synth.n_videos=4",
        "--synth.min_steps=24",
        "--synth.max_steps=28",
        "--synth.min_segments=3",
        "--synth.max_segments=4",
        "--synth.feature_dim=8",
        "--synth.n_users=2",
        "--train.max_epochs=1",
        "--csnet.hidden_dim=8",
        "--vaegan.hidden_dim=8",
        "--vaegan.latent_dim=4",
        "--vaegan.discriminator_dim=8",
        "--eval.n_repeats=2",
    ]


def test_synth_train_eval_pipeline(tmp_path, tiny_overrides):
    log_section(logger, "Test pipeline CLI")

    # 1. Bundle synthétique
    assert main.run_cli(['synth', *tiny_overrides]) == 0
    dataset = load_dataset(tmp_path / 'bundle')
    assert len(dataset) == 4
    assert dataset.metadata['run_config']['synth']['n_videos'] == 4

    # 2. Entraînement : le config résolu est recopié dans le checkpoint
    assert main.run_cli(['train', *tiny_overrides, '--train.base_lr=2e-4']) == 0
    checkpoint_dir = tmp_path / 'runs' / 'checkpoint'
    params = json.loads((checkpoint_dir / PARAMS_FILE).read_text())
    assert params['config']['base_lr'] == 2e-4
    assert params['config']['csnet']['input_dim'] == 8
    assert params['metadata']['run_config']['train']['base_lr'] == 2e-4
    assert len((checkpoint_dir / TRAIN_LOG_FILE).read_text().splitlines()) == 1
    assert (tmp_path / 'runs' / 'run_config.yaml').exists()

    # 3. Évaluation en réentraînant sur chaque split
    assert main.run_cli(['eval', *tiny_overrides]) == 0
    eval_dir = tmp_path / 'runs' / 'eval'
    report = json.loads((eval_dir / 'report.json').read_text())
    assert len(report['split_fscores']) == 2
    assert 0.0 <= report['final_fscore'] <= 100.0
    assert len((eval_dir / 'results.jsonl').read_text().splitlines()) == 4

    # 4. Évaluation du checkpoint figé
    assert main.run_cli(['eval', *tiny_overrides, f"--eval.checkpoint={checkpoint_dir}"]) == 0
    report = json.loads((eval_dir / 'report.json').read_text())
    assert report['provenance']['checkpoint'] == str(checkpoint_dir)

    # 5. Graphiques
    assert main.run_cli(['plot', *tiny_overrides]) == 0
    plots = tmp_path / 'runs' / 'plots'
    assert len(list(plots.glob('*.png'))) == 4
    assert len((plots / 'plot_series.jsonl').read_text().splitlines()) == 4


def test_ablate_writes_eight_rows(tmp_path, tiny_overrides):
    assert main.run_cli(['synth', *tiny_overrides]) == 0
    assert main.run_cli(['ablate', *tiny_overrides]) == 0

    records = read_jsonl(tmp_path / 'runs' / 'ablation' / 'ablation.jsonl')
    assert [r['label'] for r in records] == [f"Exp.{i}" for i in range(1, 9)]
    assert (records[0]['csnet'], records[0]['difference'], records[0]['variance_loss']) == (False, False, False)
    assert all(r['seeds'] == [0] for r in records)
    assert 'Exp.8' in (tmp_path / 'runs' / 'ablation' / 'ablation.txt').read_text()


def test_ablate_reduced_grid(tmp_path, tiny_overrides):
    assert main.run_cli(['synth', *tiny_overrides]) == 0
    assert main.run_cli(['ablate', *tiny_overrides, '--ablate.experiments=["Exp.1", "Exp.8"]']) == 0

    records = read_jsonl(tmp_path / 'runs' / 'ablation' / 'ablation.jsonl')
    assert [r['label'] for r in records] == ['Exp.1', 'Exp.8']
    assert records[1]['run_config']['ablate']['experiments'] == ['Exp.1', 'Exp.8']


def test_plot_without_checkpoint_exits_with_data_error(mocker, tmp_path, tiny_overrides):
    error = mocker.patch.object(main.logger, 'error')
    assert main.run_cli(['plot', *tiny_overrides]) == 2
    error.assert_called_once()
    assert "checkpoint not found" in error.call_args.args[0]


def test_missing_bundle_exits_with_data_error(mocker, tiny_overrides):
    error = mocker.patch.object(main.logger, 'error')
    assert main.run_cli(['train', *tiny_overrides]) == 2
    error.assert_called_once()


def test_incomplete_manifest_exits_with_data_error(mocker, tmp_path, tiny_overrides):
    assert main.run_cli(['synth', *tiny_overrides]) == 0
    manifest_path = tmp_path / 'bundle' / 'manifest.json'
    manifest = json.loads(manifest_path.read_text())
    del manifest['videos'][0]['n_frames']
    manifest_path.write_text(json.dumps(manifest))

    error = mocker.patch.object(main.logger, 'error')
    assert main.run_cli(['train', *tiny_overrides]) == 2
    assert "n_frames" in error.call_args.args[0]


def test_usage_errors_exit_with_one(mocker, tiny_overrides):
    error = mocker.patch.object(main.logger, 'error')
    assert main.run_cli(['summarize']) == 1
    assert main.run_cli([]) == 1
    assert main.run_cli(['train', '--train.colour=red']) == 1
    assert main.run_cli(['train', 'extra']) == 1
    assert main.run_cli(['train', '--config', 'absent.yaml']) == 1
    assert error.call_count == 5


def test_keyboard_interrupt_exits_with_130(mocker, tiny_overrides):
    mocker.patch.object(main.VidSumPipeline, 'synth', side_effect=KeyboardInterrupt)
    assert main.run_cli(['synth', *tiny_overrides]) == 130


def test_numeric_failure_exits_with_three(mocker, tiny_overrides):
    from src.utils.errors import NumericError
    mocker.patch.object(main.VidSumPipeline, 'synth', side_effect=NumericError("NaN", {'epoch': 0}))
    error = mocker.patch.object(main.logger, 'error')
    assert main.run_cli(['synth', *tiny_overrides]) == 3
    assert "epoch=0" in error.call_args.args[0]
