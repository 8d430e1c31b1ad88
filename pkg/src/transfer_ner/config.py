"""Flat ``key = value`` experiment configuration.

Keys are dotted ``section.field`` names; ``#`` starts a comment. Every
section is a frozen dataclass whose defaults define the accepted keys and
their types, so a config file is validated completely before any work
starts::

    experiment.kind = transfer-exp
    experiment.seeds = 0,1,2
    synthetic.delta = 0.3
    transfer.sigma = 1.0
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import SplitSpec
from .cotrain import CotrainConfig
from .errors import ConfigError
from .neural import ActivationSpec, TrainConfig
from .synthetic import SyntheticSpec
from .transfer import KernelSpec, ReplicationSchedule


def _ints(text):
    return [int(x) for x in str(text).split(",") if x.strip()]


def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _names(text):
    return [x.strip() for x in str(text).split(",") if x.strip()]


@dataclass(frozen=True)
class ExperimentSection:
    kind: str = ""
    seeds: str = "0"
    name: str = "experiment"

    def seed_list(self):
        seeds = _ints(self.seeds)
        if not seeds:
            raise ConfigError("experiment.seeds is empty")
        return seeds


@dataclass(frozen=True)
class DataConfig:
    source: str = ""
    target_train: str = ""
    target_test: str = ""
    target_pool: str = ""
    embeddings: str = ""
    vocab_capacity: int = 13450
    embedding_dim: int = 50
    embedding_scale: float = 1.0     # range of fully random tables (no embedding file)
    filter_noise: bool = True
    target_labels: int = -1          # labeled target sentences to use; -1 keeps all

    @property
    def from_files(self):
        return any((self.source, self.target_train, self.target_test, self.target_pool))


@dataclass(frozen=True)
class TransferConfig:
    kernel: str = "rbf"
    sigma: float = 1.0
    degree: int = 2
    strategy: str = "replicate"
    n: int = 800
    schedule: str = "250:80,500:50,800:30,inf:1"
    scale_schedule: bool = True      # rescale band bounds to the source size
    summary: str = "mean"            # "mean" or "nearest"

    def __post_init__(self):
        self.kernel_spec()
        self.replication_schedule()
        if self.strategy not in ("replicate", "top_n"):
            raise ConfigError(f"unknown transfer strategy {self.strategy!r}")
        if self.summary not in ("mean", "nearest"):
            raise ConfigError(f"unknown source summary {self.summary!r}")

    def kernel_spec(self):
        return KernelSpec(self.kernel, self.sigma, self.degree)

    def replication_schedule(self):
        return ReplicationSchedule.parse(self.schedule)


@dataclass(frozen=True)
class BaselineConfig:
    hmm_kappa: float = 0.1
    crf_l2: float = 0.1
    crf_epochs: int = 20
    crf_learning_rate: float = 0.5
    crf_templates: str = "cur,prev,next,trans,bias"

    def __post_init__(self):
        if not self.hmm_kappa > 0:
            raise ConfigError("baselines.hmm_kappa must be positive")
        if self.crf_l2 < 0 or self.crf_learning_rate < 0 or self.crf_epochs < 1:
            raise ConfigError("invalid CRF training settings")


@dataclass(frozen=True)
class CotrainSection:
    k: int = 300
    max_iterations: int = 10
    sharing: str = "per_learner"
    include_transfer: bool = True    # train the ERNN learner on transferred instances too

    def cotrain_config(self, seed=0):
        return CotrainConfig(self.k, self.max_iterations, seed, self.sharing)


@dataclass(frozen=True)
class LearningCurveConfig:
    fractions: str = "0.2,0.4,0.6,0.8,1.0"
    folds: str = "5,3,3,1,1"
    models: str = "hmm,crf,rnn"

    def __post_init__(self):
        fr, fo = _floats(self.fractions), _ints(self.folds)
        if not fr or len(fr) != len(fo):
            raise ConfigError("learning_curve.fractions and .folds need the same non-zero length")
        if any(not 0 < f <= 1 for f in fr) or any(k < 1 for k in fo):
            raise ConfigError("fractions must be in (0, 1] and folds >= 1")
        for m in _names(self.models):
            if m not in ("hmm", "crf", "rnn", "ernn"):
                raise ConfigError(f"unknown model {m!r}")

    def cells(self):
        return list(zip(_floats(self.fractions), _ints(self.folds)))


VARIANTS = ("RNN_D_IT", "ERNN_IT", "RNN_L", "RNN_L_D_IT", "ERNN_L_IT")


@dataclass(frozen=True)
class TransferExpConfig:
    variants: str = ",".join(VARIANTS)

    def __post_init__(self):
        names = _names(self.variants)
        if not names:
            raise ConfigError("transfer_exp.variants is empty")
        for v in names:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}; expected one of {VARIANTS}")

    def variant_list(self):
        return _names(self.variants)


@dataclass(frozen=True)
class SweepConfig:
    grid: str = "0.5:0.5,0.75:0.25,0.25:0.75"
    corners: bool = True

    def points(self):
        pts = []
        try:
            for item in _names(self.grid):
                a, b = item.split(":")
                pts.append((float(a), float(b)))
        except ValueError:
            raise ConfigError(f"cannot parse sweep grid {self.grid!r}") from None
        if self.corners:
            for corner in ((1.0, 0.0), (0.0, 1.0)):
                if corner not in pts:
                    pts.append(corner)
        if not pts:
            raise ConfigError("empty activation sweep grid")
        return pts


SECTIONS = {
    "experiment": ExperimentSection,
    "synthetic": SyntheticSpec,
    "data": DataConfig,
    "split": SplitSpec,
    "transfer": TransferConfig,
    "train": TrainConfig,
    "activation": ActivationSpec,
    "baselines": BaselineConfig,
    "cotrain": CotrainSection,
    "learning_curve": LearningCurveConfig,
    "transfer_exp": TransferExpConfig,
    "sweep": SweepConfig,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    data: DataConfig = field(default_factory=DataConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    transfer: TransferConfig = field(default_factory=TransferConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    activation: ActivationSpec = field(default_factory=ActivationSpec)
    baselines: BaselineConfig = field(default_factory=BaselineConfig)
    cotrain: CotrainSection = field(default_factory=CotrainSection)
    learning_curve: LearningCurveConfig = field(default_factory=LearningCurveConfig)
    transfer_exp: TransferExpConfig = field(default_factory=TransferExpConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def to_text(self) -> str:
        lines = []
        for section in SECTIONS:
            obj = getattr(self, section)
            for f in dataclasses.fields(obj):
                value = getattr(obj, f.name)
                if isinstance(value, tuple):
                    value = ",".join(map(str, value))
                elif isinstance(value, bool):
                    value = "true" if value else "false"
                lines.append(f"{section}.{f.name} = {value}")
        return "\n".join(lines) + "\n"


def _coerce(text, default, key):
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(_names(text))
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {type(default).__name__}") from None


def parse_lines(lines, origin="<config>") -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def build_config(values: dict[str, str]) -> ExperimentConfig:
    grouped = {name: {} for name in SECTIONS}
    for key, text in values.items():
        section, _, name = key.partition(".")
        if section not in SECTIONS or not name:
            raise ConfigError(f"unknown config key {key!r}")
        defaults = {f.name: f.default for f in dataclasses.fields(SECTIONS[section])}
        if name not in defaults:
            raise ConfigError(f"unknown config key {key!r}")
        default = defaults[name]
        if default is dataclasses.MISSING:
            default = ""
        grouped[section][name] = _coerce(text, default, key)
    sections = {}
    for name, cls in SECTIONS.items():
        try:
            sections[name] = cls(**grouped[name])
        except ConfigError as exc:
            raise ConfigError(f"[{name}] {exc}") from None
    return ExperimentConfig(**sections)


def load_config(path=None, overrides=()) -> ExperimentConfig:
    """Read a config file (optional) and apply ``key=value`` overrides on top."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values.update(parse_lines(text.splitlines(), str(path)))
    values.update(parse_lines(overrides, "<override>"))
    return build_config(values)
