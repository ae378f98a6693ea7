"""Flat ``key = value`` pipeline configuration.

Keys are dotted by section (``sbm.p_intra``, ``train.alpha`` ...).  Unknown
keys are rejected, and :func:`write_resolved` records every value actually
used so a run can be repeated from its output directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .cascades import SimConfig
from .errors import ConfigError, DataFormatError
from .graph import SbmConfig
from .io import atomic_write, write_csv
from .seeding import derive_seed
from .trainer import TrainConfig
from .virality.forest import ForestConfig
from .virality.predict import ViralityConfig


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default text); 0 means "derive automatically" where noted
SCHEMA: dict[str, tuple] = {
    "seed": (int, "0"),
    "sbm.n_communities": (int, "5"),
    "sbm.community_size": (int, "20"),
    "sbm.p_intra": (float, "0.2"),
    "sbm.p_inter": (float, "0.003"),
    "sim.edge_rate": (float, "1.0"),
    "sim.window": (float, "1.0"),
    "sim.target_size": (float, "0"),  # > 0: calibrate the window to this mean size
    "sim.calibration_trials": (int, "200"),
    "sim.n_cascades": (int, "100"),
    "sim.seeds_per_cascade": (int, "1"),
    "train.alpha": (float, "0.3"),
    "train.iterations": (int, "50"),
    "train.m": (int, "10"),
    "train.w": (float, "0"),  # 0: 1.5 / T
    "train.T": (float, "0"),  # 0: 3x the latest infection time
    "train.d": (int, "10"),
    "train.init_scale": (float, "0.1"),
    "train.decay": (float, "0.0"),
    "train.clip": (float, "1.0"),  # 0: no clipping
    "train.early_stop": (_bool, "true"),
    "parallel.workers": (int, "1"),
    "parallel.partition": (str, "block"),
    "parallel.timeout": (float, "60"),
    "eval.k": (int, "0"),  # 0: number of communities in the graph
    "eval.distance_rows": (int, "0"),  # 0: all nodes
    "virality.thetas": (_floats, "0.90,0.95,0.99"),
    "virality.taus": (_floats, ""),  # empty: a quarter of the longest cascade duration
    "virality.radii": (_floats, ""),  # empty: pairwise-distance quantiles
    "virality.folds": (int, "6"),
    "forest.n_trees": (int, "100"),
    "forest.max_depth": (int, "8"),
    "forest.min_leaf": (int, "1"),
    "forest.feature_subsample": (int, "0"),  # 0: ceil(sqrt(F))
    "bench.workers": (_ints, "1,2,4,8"),
    "bench.repeats": (int, "3"),
}

SEED_TAGS = ("graph-gen", "cascade-sim", "negatives", "init", "kmeans", "radii", "folds", "forest", "corpus")


@dataclass
class PipelineConfig:
    raw: dict[str, str] = field(default_factory=lambda: {k: v for k, (_, v) in SCHEMA.items()})

    def set(self, key: str, value, origin: str = "") -> None:
        if key not in SCHEMA:
            raise ConfigError(f"{origin}unknown config key {key!r}")
        text = str(value).strip()
        try:
            SCHEMA[key][0](text)
        except ValueError as e:
            raise ConfigError(f"{origin}bad value for {key}: {e}") from None
        self.raw[key] = text

    def __getitem__(self, key: str):
        return SCHEMA[key][0](self.raw[key])

    @property
    def seed(self) -> int:
        return self["seed"]

    def sbm(self) -> SbmConfig:
        return SbmConfig.equal_sizes(self["sbm.n_communities"], self["sbm.community_size"],
                                     self["sbm.p_intra"], self["sbm.p_inter"], self.seed)

    def sim(self, window: float | None = None) -> SimConfig:
        return SimConfig(self["sim.edge_rate"], window or self["sim.window"], self["sim.seeds_per_cascade"],
                         self["sim.n_cascades"], self.seed)

    def train(self) -> TrainConfig:
        return TrainConfig(alpha=self["train.alpha"], iterations=self["train.iterations"], m=self["train.m"],
                           w=self["train.w"] or None, T=self["train.T"] or None, d=self["train.d"],
                           init_scale=self["train.init_scale"], seed=self.seed, decay=self["train.decay"],
                           clip=self["train.clip"] or None, early_stop=self["train.early_stop"])

    def forest(self) -> ForestConfig:
        return ForestConfig(self["forest.n_trees"], self["forest.max_depth"], self["forest.min_leaf"],
                            self["forest.feature_subsample"] or None, self.seed)

    def virality(self, theta: float, tau: float) -> ViralityConfig:
        return ViralityConfig(theta, tau, self["virality.radii"] or None, self["virality.folds"], self.forest())

    def text(self) -> str:
        return "".join(f"{k} = {self.raw[k]}\n" for k in SCHEMA)


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    cfg = PipelineConfig()
    if path is not None:
        try:
            lines = Path(path).read_text().splitlines()
        except OSError as e:
            raise DataFormatError(f"cannot read: {e.strerror}", str(path), 0) from e
        for no, line in enumerate(lines, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataFormatError("expected 'key = value'", str(path), no)
            key, value = (x.strip() for x in line.split("=", 1))
            cfg.set(key, value, origin=f"{path}:{no}: ")
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg.set(key, value)
    return cfg


def write_resolved(cfg: PipelineConfig, out_dir, extra: dict | None = None) -> None:
    """``config.resolved`` (loadable by :func:`load_config`) plus ``seeds.csv``.

    ``extra`` holds values derived at run time, such as a calibrated window,
    and is appended as comments.
    """
    out_dir = Path(out_dir)
    with atomic_write(out_dir / "config.resolved") as fh:
        fh.write(cfg.text())
        for k, v in (extra or {}).items():
            fh.write(f"# derived {k} = {v!r}\n")
    write_csv(out_dir / "seeds.csv", ["tag", "master_seed", "stream_seed_entity0"],
              ((tag, cfg.seed, derive_seed(cfg.seed, tag, 0)) for tag in SEED_TAGS))
