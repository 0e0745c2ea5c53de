"""One config file drives every command; env vars override paths and the port.

Schema (JSON, all sections optional unless a command needs them):

    {
      "seed": 0,
      "corpus": {"tokenizer": "whitespace" | "bpe",
                 "manifest": "corpus/manifest.json",
                 "vocab": "vocab.json", "merges": "merges.txt",   # bpe only
                 "max_context": 120},
      "generator": {<predictor descriptor>},
      "allowed": "eleven" | "five" | "three" | "continuous" | [values...],
      "service": {"port": 8625, "data_dir": "data",
                  "sets": [{"id": ..., "game": "top1" | "compare",
                            "split": "validation", "prompts": 40,
                            "candidates_per_prompt": 10, "seed": ...}]},
      "experiment": {"target": {<descriptor>}, "N": 120, "n": 10,
                     "mode": "monte_carlo" | "exhaustive",
                     "behavior": "optimal" | "naive_rational",
                     "noise_sigma": 0.0, "allowed": ..., "seed": ...}
    }

Environment overrides: LMGAME_PORT, LMGAME_DATA_DIR, LMGAME_MANIFEST,
LMGAME_VOCAB_FILE, LMGAME_MERGES_FILE.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from lmgame.corpus.bpe import ByteBpeTokenizer, Tokenizer, WhitespaceTokenizer
from lmgame.corpus.splits import CorpusSplit, build_splits, read_manifest_texts
from lmgame.corpus.vocab import Vocab, build_whitespace_vocab
from lmgame.elicitation import PRESETS, AllowedSet
from lmgame.predictors.base import Predictor
from lmgame.predictors.simple import PredictorDescriptor, build_predictor
from lmgame.simulation import ExperimentConfig


class ConfigError(ValueError):
    pass


_ENV_OVERRIDES = {
    "LMGAME_PORT": ("service", "port", int),
    "LMGAME_DATA_DIR": ("service", "data_dir", str),
    "LMGAME_MANIFEST": ("corpus", "manifest", str),
    "LMGAME_VOCAB_FILE": ("corpus", "vocab", str),
    "LMGAME_MERGES_FILE": ("corpus", "merges", str),
}


def load_config(path: str | Path, env: dict[str, str] | None = None) -> dict:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from None
    cfg.setdefault("_base_dir", str(path.parent))
    env = os.environ if env is None else env
    for var, (section, key, cast) in _ENV_OVERRIDES.items():
        if var in env:
            cfg.setdefault(section, {})[key] = cast(env[var])
    return cfg


def parse_allowed(spec, default: AllowedSet | None = None) -> AllowedSet | None:
    if spec is None:
        return default
    if isinstance(spec, str):
        if spec not in PRESETS:
            raise ConfigError(f"unknown allowed-set preset {spec!r}")
        return PRESETS[spec]
    return AllowedSet(tuple(float(v) for v in spec))


@dataclass
class Platform:
    """Materialized corpus + models shared by the CLI commands and the service."""

    base_dir: Path
    vocab: Vocab
    tokenizer: Tokenizer
    splits: dict[str, CorpusSplit]
    max_context: int
    seed: int
    generator: Predictor | None
    allowed: AllowedSet | None

    def split(self, name: str) -> CorpusSplit:
        if name not in self.splits:
            raise ConfigError(f"unknown split {name!r} (have {sorted(self.splits)})")
        return self.splits[name]


def build_platform(cfg: dict, need_generator: bool = False) -> Platform:
    base_dir = Path(cfg.get("_base_dir", "."))
    corpus_cfg = cfg.get("corpus")
    if not corpus_cfg or "manifest" not in corpus_cfg:
        raise ConfigError("config needs a corpus section with a manifest path")
    manifest = base_dir / corpus_cfg["manifest"]
    try:
        texts = read_manifest_texts(manifest)
    except (OSError, ValueError) as err:
        raise ConfigError(f"cannot read corpus manifest: {err}") from err
    kind = corpus_cfg.get("tokenizer", "whitespace")
    if kind == "bpe":
        for key in ("vocab", "merges"):
            if key not in corpus_cfg:
                raise ConfigError(f"bpe tokenizer needs corpus.{key}")
        vocab = Vocab.from_gpt2_files(
            base_dir / corpus_cfg["vocab"], base_dir / corpus_cfg["merges"]
        )
        tokenizer: Tokenizer = ByteBpeTokenizer(vocab)
    elif kind == "whitespace":
        vocab = build_whitespace_vocab([t for ts in texts.values() for t in ts])
        tokenizer = WhitespaceTokenizer(vocab)
    else:
        raise ConfigError(f"unknown tokenizer kind {kind!r}")
    splits = build_splits(texts, tokenizer)
    generator = None
    if "generator" in cfg:
        generator = build_predictor(
            PredictorDescriptor.from_json(cfg["generator"]),
            vocab_size=len(vocab),
            splits=splits,
            base_dir=base_dir,
        )
    elif need_generator:
        raise ConfigError("config needs a generator descriptor")
    return Platform(
        base_dir=base_dir,
        vocab=vocab,
        tokenizer=tokenizer,
        splits=splits,
        max_context=int(corpus_cfg.get("max_context", 120)),
        seed=int(cfg.get("seed", 0)),
        generator=generator,
        allowed=parse_allowed(cfg.get("allowed", "eleven")),
    )


def experiment_config(cfg: dict, platform: Platform, seed: int | None = None) -> ExperimentConfig:
    exp = cfg.get("experiment", {})
    return ExperimentConfig(
        N=int(exp.get("N", 120)),
        n=int(exp.get("n", 10)),
        seed=int(seed if seed is not None else exp.get("seed", platform.seed)),
        allowed=parse_allowed(exp.get("allowed"), platform.allowed),
        mode=exp.get("mode", "monte_carlo"),
        behavior=exp.get("behavior", "optimal"),
        noise_sigma=float(exp.get("noise_sigma", 0.0)),
        max_context=platform.max_context,
    )


def experiment_target(cfg: dict, platform: Platform) -> Predictor:
    exp = cfg.get("experiment", {})
    if "target" not in exp:
        raise ConfigError("config needs experiment.target descriptor")
    return build_predictor(
        PredictorDescriptor.from_json(exp["target"]),
        vocab_size=len(platform.vocab),
        splits=platform.splits,
        base_dir=platform.base_dir,
    )
