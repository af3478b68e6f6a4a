"""
Graphiques des scores prédits
Barres des scores par frame échantillonnée, plans sélectionnés, gtscore et
trace de l'attention de différence ; les séries sont aussi écrites en JSONL
"""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.modules.csnet import CSNet, score_video  # noqa: E402
from src.modules.dataio import VideoRecord  # noqa: E402
from src.modules.evaluator import predict_summary  # noqa: E402
from src.modules.segment import SegmentConfig  # noqa: E402
from src.modules.summarize import SummaryConfig  # noqa: E402
from src.utils import JsonlLog, setup_logger  # noqa: E402


logger = setup_logger(__name__)

SERIES_FILE = 'plot_series.jsonl'


@dataclass
class PlotConfig:
    """Options des graphiques"""
    checkpoint: Optional[str] = None     # None = <data.output_dir>/checkpoint
    max_videos: Optional[int] = None
    dpi: int = 100
    width: float = 10.0
    height: float = 6.0


@dataclass
class ScoreSeries:
    """Séries numériques d'un graphique"""
    video_id: str
    scores: List[float]
    selected: List[int]        # 1 si la frame échantillonnée est dans un plan choisi
    gtscore: Optional[List[float]]
    attention: Optional[List[float]]

    def to_record(self) -> Dict[str, Any]:
        return asdict(self)


def score_series(scorer: CSNet,
                 video: VideoRecord,
                 summary_config: Optional[SummaryConfig] = None,
                 segment_config: Optional[SegmentConfig] = None) -> ScoreSeries:
    """Scores, sélection (ramenée aux frames échantillonnées), gtscore et attention"""
    out = score_video(scorer, video.features)
    selection = predict_summary(scorer, video, summary_config, segment_config)
    selected = selection.frame_mask[np.asarray(video.picks, dtype=np.int64)]
    return ScoreSeries(
        video_id=video.id,
        scores=out.scores.tolist(),
        selected=selected.astype(int).tolist(),
        gtscore=None if video.gtscore is None else np.asarray(video.gtscore, dtype=float).tolist(),
        attention=None if out.attention is None else out.attention.tolist(),
    )


def plot_series(series: ScoreSeries, path: Union[str, Path], config: Optional[PlotConfig] = None) -> Path:
    """
    Trace les séries d'une vidéo dans un PNG

    Panneaux : scores prédits (plans choisis en couleur), gtscore, attention
    """
    config = config or PlotConfig()
    path = Path(path)
    panels = 1 + (series.gtscore is not None) + (series.attention is not None)
    fig, axes = plt.subplots(panels, 1, figsize=(config.width, config.height), sharex=True, squeeze=False)
    axes = axes[:, 0]
    steps = np.arange(len(series.scores))

    colors = np.where(np.asarray(series.selected) > 0, 'tab:red', 'tab:gray')
    axes[0].bar(steps, series.scores, width=1.0, color=colors)
    axes[0].set_ylabel('score prédit')
    axes[0].set_ylim(0, 1)
    axes[0].set_title(f"{series.video_id} (rouge = plans sélectionnés)")

    row = 1
    if series.gtscore is not None:
        axes[row].bar(steps, series.gtscore, width=1.0, color='tab:blue')
        axes[row].set_ylabel('gtscore')
        axes[row].set_ylim(0, 1)
        row += 1
    if series.attention is not None:
        axes[row].plot(steps, series.attention, color='tab:green')
        axes[row].set_ylabel('attention')
    axes[-1].set_xlabel('frame échantillonnée')

    fig.tight_layout()
    fig.savefig(path, dpi=config.dpi)
    plt.close(fig)
    return path


def write_plots(scorer: CSNet,
                videos: Sequence[VideoRecord],
                output_dir: Union[str, Path],
                plot_config: Optional[PlotConfig] = None,
                summary_config: Optional[SummaryConfig] = None,
                segment_config: Optional[SegmentConfig] = None,
                run_config: Optional[Dict[str, Any]] = None) -> List[Path]:
    """
    Un PNG par vidéo + plot_series.jsonl (une ligne par vidéo, config incluse)

    Returns:
        Chemins des PNG écrits
    """
    plot_config = plot_config or PlotConfig()
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    videos = list(videos)[:plot_config.max_videos]

    paths = []
    with JsonlLog(output_dir / SERIES_FILE) as series_log:
        for video in videos:
            series = score_series(scorer, video, summary_config, segment_config)
            paths.append(plot_series(series, output_dir / f"{video.id}.png", plot_config))
            series_log.write({**series.to_record(), 'run_config': run_config or {}})
    logger.info(f"📊 {len(paths)} graphique(s) écrit(s) dans {output_dir}")
    return paths


__all__ = [
    'PlotConfig',
    'ScoreSeries',
    'score_series',
    'plot_series',
    'write_plots',
]
