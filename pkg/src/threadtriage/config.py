"""Pipeline configuration: one INI file, one section per stage.

Every stochastic stage draws its seed from the single [learn] seed unless the
[synth] section pins its own. Relative paths resolve against the config
file's directory; omitted lexicon paths fall back to the compact dictionaries
shipped with the package.
"""

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import LabelingConfig
from .errors import ConfigError, DataError
from .features import AssemblyStrategy
from .synth import SynthConfig

_KNOWN_KEYS = {
    "paths": {
        "corpus", "category_lexicon", "sentiment_lexicon", "stopwords",
        "model_dir", "report_dir",
    },
    "labeling": {"tau", "prefer_manual"},
    "lda": {"n_topics", "alpha", "beta", "sweeps", "infer_sweeps", "exclude_boards"},
    "features": {"min_df", "strategy", "include_shared"},
    "learn": {"model", "reg_lambda", "svm_epochs", "folds", "seed", "repeats"},
    "synth": {
        "n_threads", "vocab_size", "n_planted_topics", "base_green_transition",
        "supportive_boost", "supportive_rate", "mean_replies", "label_noise", "seed",
    },
}


def builtin_data_path(name: str) -> Path:
    return Path(str(resources.files("threadtriage") / "data" / name))


@dataclass
class PipelineConfig:
    corpus_path: Path | None = None  # None: <out>/posts.jsonl
    category_lexicon: Path = field(default_factory=lambda: builtin_data_path("categories.dic"))
    sentiment_lexicon: Path = field(default_factory=lambda: builtin_data_path("sentiment.csv"))
    stopwords_path: Path = field(default_factory=lambda: builtin_data_path("stopwords.txt"))
    model_dir: Path | None = None  # None: <out>
    report_dir: Path | None = None  # None: <out>
    labeling: LabelingConfig = field(default_factory=LabelingConfig)
    lda_topics: int = 10
    lda_alpha: float | None = None  # None: 50 / n_topics
    lda_beta: float = 0.01
    lda_sweeps: int = 1000
    lda_infer_sweeps: int = 200
    exclude_boards: tuple[str, ...] = ("Hang out", "Introduction")
    min_df: int = 5
    strategy: AssemblyStrategy = AssemblyStrategy.SEPARATE_SYMMETRIC
    include_shared: bool = True
    model_kind: str = "logreg"
    reg_lambda: float = 0.1
    svm_epochs: int = 50
    folds: int = 5
    seed: int = 42
    repeats: int = 1
    synth: SynthConfig = field(default_factory=SynthConfig)

    def echo(self) -> dict:
        """Scalar view for reports; deliberately free of filesystem paths."""
        return {
            "labeling": {"tau": self.labeling.tau, "prefer_manual": self.labeling.prefer_manual},
            "lda": {
                "n_topics": self.lda_topics,
                "alpha": self.lda_alpha,
                "beta": self.lda_beta,
                "sweeps": self.lda_sweeps,
                "infer_sweeps": self.lda_infer_sweeps,
                "exclude_boards": list(self.exclude_boards),
            },
            "features": {
                "min_df": self.min_df,
                "strategy": self.strategy.value,
                "include_shared": self.include_shared,
            },
            "learn": {
                "model": self.model_kind,
                "reg_lambda": self.reg_lambda,
                "svm_epochs": self.svm_epochs,
                "folds": self.folds,
                "seed": self.seed,
                "repeats": self.repeats,
            },
            "synth": {
                "n_threads": self.synth.n_threads,
                "vocab_size": self.synth.vocab_size,
                "n_planted_topics": self.synth.n_planted_topics,
                "base_green_transition": self.synth.base_green_transition,
                "supportive_boost": self.synth.supportive_boost,
                "supportive_rate": self.synth.supportive_rate,
                "mean_replies": self.synth.mean_replies,
                "label_noise": self.synth.label_noise,
                "seed": self.synth.seed,
            },
        }


def _get(parser, section, key, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            return parser.getboolean(section, key)
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def load_config(path=None, seed_override: int | None = None) -> PipelineConfig:
    """Parse an INI config (or use the defaults when path is None)."""
    parser = configparser.ConfigParser(interpolation=None)
    base = Path(".")
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        base = path.parent
        for section in parser.sections():
            if section not in _KNOWN_KEYS:
                raise ConfigError(f"unknown config section [{section}]")
            unknown = set(parser.options(section)) - _KNOWN_KEYS[section]
            if unknown:
                raise ConfigError(
                    f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}"
                )

    def resolve(section, key):
        value = _get(parser, section, key, str, None)
        return None if value is None else (base / value).resolve()

    seed = _get(parser, "learn", "seed", int, 42)
    if seed_override is not None:
        seed = seed_override

    try:
        labeling = LabelingConfig(
            tau=_get(parser, "labeling", "tau", float, 0.7751),
            prefer_manual=_get(parser, "labeling", "prefer_manual", bool, True),
        )
        synth = SynthConfig(
            n_threads=_get(parser, "synth", "n_threads", int, 1000),
            vocab_size=_get(parser, "synth", "vocab_size", int, 180),
            n_planted_topics=_get(parser, "synth", "n_planted_topics", int, 3),
            base_green_transition=_get(parser, "synth", "base_green_transition", float, 0.15),
            supportive_boost=_get(parser, "synth", "supportive_boost", float, 0.80),
            supportive_rate=_get(parser, "synth", "supportive_rate", float, 0.50),
            mean_replies=_get(parser, "synth", "mean_replies", float, 5.0),
            label_noise=_get(parser, "synth", "label_noise", float, 0.05),
            seed=(
                seed_override
                if seed_override is not None
                else _get(parser, "synth", "seed", int, seed)
            ),
        )
    except DataError as exc:
        raise ConfigError(str(exc)) from exc

    strategy_raw = _get(parser, "features", "strategy", str, "separate_symmetric")
    try:
        strategy = AssemblyStrategy(strategy_raw)
    except ValueError:
        raise ConfigError(
            f"[features] strategy must be one of "
            f"{', '.join(s.value for s in AssemblyStrategy)}; got {strategy_raw!r}"
        )
    model_kind = _get(parser, "learn", "model", str, "logreg")
    if model_kind not in ("logreg", "svm", "majority"):
        raise ConfigError(f"[learn] model must be logreg, svm, or majority; got {model_kind!r}")

    exclude_raw = _get(parser, "lda", "exclude_boards", str, None)
    if exclude_raw is None:
        exclude_boards = ("Hang out", "Introduction")
    else:
        exclude_boards = tuple(
            b.strip() for b in exclude_raw.split(",") if b.strip()
        )

    alpha_raw = _get(parser, "lda", "alpha", str, None)
    if alpha_raw is None or alpha_raw.strip().lower() == "auto":
        lda_alpha = None
    else:
        try:
            lda_alpha = float(alpha_raw)
        except ValueError:
            raise ConfigError(f"[lda] alpha must be a number or 'auto'; got {alpha_raw!r}")

    cfg = PipelineConfig(
        corpus_path=resolve("paths", "corpus"),
        category_lexicon=resolve("paths", "category_lexicon")
        or builtin_data_path("categories.dic"),
        sentiment_lexicon=resolve("paths", "sentiment_lexicon")
        or builtin_data_path("sentiment.csv"),
        stopwords_path=resolve("paths", "stopwords") or builtin_data_path("stopwords.txt"),
        model_dir=resolve("paths", "model_dir"),
        report_dir=resolve("paths", "report_dir"),
        labeling=labeling,
        lda_topics=_get(parser, "lda", "n_topics", int, 10),
        lda_alpha=lda_alpha,
        lda_beta=_get(parser, "lda", "beta", float, 0.01),
        lda_sweeps=_get(parser, "lda", "sweeps", int, 1000),
        lda_infer_sweeps=_get(parser, "lda", "infer_sweeps", int, 200),
        exclude_boards=exclude_boards,
        min_df=_get(parser, "features", "min_df", int, 5),
        strategy=strategy,
        include_shared=_get(parser, "features", "include_shared", bool, True),
        model_kind=model_kind,
        reg_lambda=_get(parser, "learn", "reg_lambda", float, 0.1),
        svm_epochs=_get(parser, "learn", "svm_epochs", int, 50),
        folds=_get(parser, "learn", "folds", int, 5),
        seed=seed,
        repeats=_get(parser, "learn", "repeats", int, 1),
        synth=synth,
    )
    if cfg.lda_topics < 2:
        raise ConfigError("[lda] n_topics must be at least 2")
    if cfg.folds < 2:
        raise ConfigError("[learn] folds must be at least 2")
    if cfg.min_df < 1:
        raise ConfigError("[features] min_df must be at least 1")
    if cfg.repeats < 1:
        raise ConfigError("[learn] repeats must be at least 1")
    return cfg


def load_stopwords(path) -> frozenset[str]:
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().lower()
            if word and not word.startswith("#"):
                words.add(word)
    return frozenset(words)
