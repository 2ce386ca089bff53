"""Experiment orchestration: configuration, training from a corpus, the
gain/confidence sweep and its per-cell summary.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable

from . import network
from .audio import mix_stems
from .dataset import Corpus, Song, SongSpec
from .masking import db_to_gain, ideal_binary_mask, scaling_matrix, threshold_mask
from .metrics import ProjectionConfig, sar
from .network import MlpModel, PatchConfig, TrainConfig, TrainReport
from .remix import RemixRequest, apply_remix, baseline_pair
from .spectral import StftConfig, magnitude, stft

log = logging.getLogger(__name__)

CSV_HEADER = ("song_id", "gain_db", "alpha", "sar_db", "capped", "is_baseline")
DEFAULT_GAINS_DB = tuple(float(g) for g in [*range(-20, -4), *range(5, 21)])
DEFAULT_ALPHAS = (0.1, 0.3, 0.6, 0.9)


class ConfigError(ValueError):
    pass


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class CorpusConfig:
    n_train: int = 16
    n_test: int = 5
    base_seed: int = 1000
    template: SongSpec = field(default_factory=SongSpec)


@dataclass(frozen=True)
class ModelConfig:
    hidden_dims: tuple[int, ...] = (256,)


@dataclass(frozen=True)
class ExperimentConfig:
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    stft: StftConfig = field(default_factory=StftConfig)
    patch: PatchConfig = field(default_factory=PatchConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    gains_db: tuple[float, ...] = DEFAULT_GAINS_DB
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)

    def __post_init__(self):
        if not self.gains_db or not self.alphas:
            raise ConfigError("gain and alpha grids must be non-empty")
        for a in self.alphas:
            if not 0.0 <= a <= 1.0:
                raise ConfigError(f"alpha {a} outside [0, 1]")

    def layer_dims(self) -> list[int]:
        width = self.stft.bins * self.patch.T
        return [width, *self.model.hidden_dims, width]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["corpus"]["template"].pop("seed")
        d["model"]["hidden_dims"] = list(self.model.hidden_dims)
        d["patch"].pop("infer_hop")
        d["gains_db"] = list(self.gains_db)
        d["alphas"] = list(self.alphas)
        return d


def _build(cls, doc: Any, where: str, nested: dict | None = None, skip: tuple[str, ...] = ()):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    allowed = {f.name for f in fields(cls)} - set(skip)
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = dict(doc)
    for key, sub in (nested or {}).items():
        if key in kwargs:
            kwargs[key] = sub(kwargs[key], f"{where}.{key}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _model_config(doc: Any, where: str) -> ModelConfig:
    if isinstance(doc, dict) and "hidden_dims" in doc:
        doc = {**doc, "hidden_dims": tuple(int(h) for h in doc["hidden_dims"])}
    return _build(ModelConfig, doc, where)


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a config from its JSON form. Unknown keys are rejected at every level.

    ``projection.exclude_edge`` defaults to one STFT window when omitted.
    """
    nested = {
        "corpus": lambda d, w: _build(CorpusConfig, d, w, {
            "template": lambda t, w2: _build(SongSpec, t, w2, skip=("seed",)),
        }),
        "stft": lambda d, w: _build(StftConfig, d, w),
        "patch": lambda d, w: _build(PatchConfig, d, w, skip=("infer_hop",)),
        "model": _model_config,
        "train": lambda d, w: _build(TrainConfig, d, w),
        "projection": lambda d, w: _build(ProjectionConfig, d, w),
        "gains_db": lambda d, w: tuple(float(g) for g in d),
        "alphas": lambda d, w: tuple(float(a) for a in d),
    }
    cfg = _build(ExperimentConfig, doc, "config", nested)
    if "exclude_edge" not in doc.get("projection", {}):
        cfg = replace(cfg, projection=replace(cfg.projection, exclude_edge=cfg.stft.window_len))
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(doc)


def default_config() -> ExperimentConfig:
    return config_from_dict({})


# ---------------------------------------------------------------------------
# training


def song_patches(song: Song, cfg: ExperimentConfig, mode: str = "train") -> list[network.Patch]:
    bundle = mix_stems(song.stems)
    mix_mag = magnitude(stft(bundle.mixture, cfg.stft))
    mask = ideal_binary_mask(magnitude(stft(bundle.vocal_mix, cfg.stft)),
                             magnitude(stft(bundle.accompaniment_mix, cfg.stft)))
    return network.extract_patches(mix_mag, mask, cfg.patch, mode)


def train_model(corpus: Corpus, cfg: ExperimentConfig) -> tuple[MlpModel, TrainReport]:
    """Train a fresh network on the corpus' training songs.

    Held-out accuracy is measured on training-hop patches of the test songs.
    """
    patches = [p for song in corpus.train_songs for p in song_patches(song, cfg)]
    heldout = [p for song in corpus.test_songs for p in song_patches(song, cfg)]
    log.info("training on %d patches from %d songs", len(patches), len(corpus.train_songs))
    model = network.init_model(cfg.layer_dims(), cfg.train.seed)
    return network.train(model, patches, cfg.train, heldout=heldout)


# ---------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class SweepRecord:
    song_id: str
    gain_db: float
    alpha: float
    sar_db: float
    capped: bool
    is_baseline: bool


def _sweep_song(song: Song, model: MlpModel | None, cfg: ExperimentConfig) -> list[SweepRecord]:
    bundle = mix_stems(song.stems)
    spec = stft(bundle.mixture, cfg.stft)
    if model is None:
        field_values = ideal_binary_mask(magnitude(stft(bundle.vocal_mix, cfg.stft)),
                                         magnitude(stft(bundle.accompaniment_mix, cfg.stft)))
    else:
        field_values = network.predict_field(model, magnitude(spec), cfg.patch).values
    masks = {a: threshold_mask(field_values, a) for a in cfg.alphas if a > 0}
    records = []
    for gain_db in cfg.gains_db:
        g = db_to_gain(gain_db)
        estimate, reference = baseline_pair(bundle, g)
        res = sar(estimate, reference, cfg.projection)
        records.append(SweepRecord(song.song_id, gain_db, 0.0, res.sar_db, res.capped, True))
        for alpha, mask in masks.items():
            req = RemixRequest(bundle.mixture, scaling_matrix(mask, g), cfg.stft)
            res = sar(apply_remix(req, spec), reference, cfg.projection)
            records.append(SweepRecord(song.song_id, gain_db, alpha, res.sar_db, res.capped, False))
    return records


def run_sweep(corpus: Corpus, model: MlpModel | None, cfg: ExperimentConfig) -> list[SweepRecord]:
    """Evaluate every (gain, alpha) remix of every test song, plus baselines.

    The prediction field is computed once per song and reused across the
    grid. Passing ``model=None`` substitutes the ideal binary mask for the
    network's field (an upper-bound mask). An alpha of 0 in the grid is
    covered by the baseline row rather than evaluated separately.
    """
    if model is not None and model.layer_dims[0] != cfg.stft.bins * cfg.patch.T:
        raise SweepError(f"model input size {model.layer_dims[0]} does not match "
                         f"{cfg.stft.bins} bins x T={cfg.patch.T}")
    records: list[SweepRecord] = []
    for song in corpus.test_songs:
        try:
            records.extend(_sweep_song(song, model, cfg))
        except Exception as exc:
            raise SweepError(f"sweep failed on song {song.song_id}: {exc}") from exc
        log.info("swept %s", song.song_id)
    return sorted(records, key=lambda r: (r.song_id, r.gain_db, r.alpha))


def write_csv(records: Iterable[SweepRecord], out, cfg: ExperimentConfig | None = None) -> None:
    """Write records as CSV; the config, if given, goes in a leading ``#`` comment."""
    buf = io.StringIO()
    if cfg is not None:
        buf.write("# config: " + json.dumps(cfg.to_dict(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.song_id, f"{r.gain_db:.6f}", f"{r.alpha:.6f}", f"{r.sar_db:.6f}",
                    int(r.capped), int(r.is_baseline)])
    Path(out).write_text(buf.getvalue())


def read_csv(path) -> list[SweepRecord]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    rows = csv.DictReader(lines)
    return [SweepRecord(r["song_id"], float(r["gain_db"]), float(r["alpha"]), float(r["sar_db"]),
                        r["capped"] == "1", r["is_baseline"] == "1") for r in rows]


@dataclass(frozen=True)
class SummaryRow:
    gain_db: float
    alpha: float
    is_baseline: bool
    mean_sar_db: float
    ci95_half_width: float
    n: int


def summarize(records: Iterable[SweepRecord]) -> list[SummaryRow]:
    """Mean SAR across songs for each (gain, alpha) cell with a normal-theory 95% CI.

    The half-width is ``1.96 * s / sqrt(n)`` with ``s`` the sample standard
    deviation (n - 1 denominator), taken as zero for a single song.
    """
    cells: dict[tuple[float, float, bool], list[float]] = {}
    for r in records:
        cells.setdefault((r.gain_db, r.alpha, r.is_baseline), []).append(r.sar_db)
    if not cells:
        raise SweepError("no records to summarize")
    out = []
    for (gain_db, alpha, base), values in sorted(cells.items()):
        n = len(values)
        sd = statistics.stdev(values) if n > 1 else 0.0
        out.append(SummaryRow(gain_db, alpha, base, statistics.fmean(values),
                              1.96 * sd / math.sqrt(n), n))
    return out


def summary_table(rows: Iterable[SummaryRow]) -> dict[tuple[float, float], SummaryRow]:
    return {(r.gain_db, r.alpha): r for r in rows}


def write_summary_csv(rows: Iterable[SummaryRow], out) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gain_db", "alpha", "is_baseline", "mean_sar_db", "ci95_half_width", "n"])
    for r in rows:
        w.writerow([f"{r.gain_db:.6f}", f"{r.alpha:.6f}", int(r.is_baseline),
                    f"{r.mean_sar_db:.6f}", f"{r.ci95_half_width:.6f}", r.n])
    Path(out).write_text(buf.getvalue())
