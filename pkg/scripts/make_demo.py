"""Write a ready-to-serve demo workspace (corpus + config) under ./demo/.

Usage: python3 scripts/make_demo.py [out_dir]
Then:  lmgame --config demo/lmgame.json serve
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

WORDS = (
    "the a fox dog cat bird runs sleeps jumps sees eats red blue old young "
    "quick lazy in on over under field house river tree morning evening "
    "quietly loudly again"
).split()


def markov_texts(n_docs: int, doc_len: int, seed: int, chain_seed: int = 7) -> list[str]:
    chain_rng = np.random.default_rng(chain_seed)
    k = len(WORDS)
    trans = chain_rng.dirichlet(np.full(k, 0.25), size=k)
    start = chain_rng.dirichlet(np.full(k, 0.5))
    rng = np.random.default_rng(seed)
    texts = []
    for _ in range(n_docs):
        idx = rng.choice(k, p=start)
        words = [WORDS[idx]]
        for _ in range(doc_len - 1):
            idx = rng.choice(k, p=trans[idx])
            words.append(WORDS[idx])
        texts.append(" ".join(words) + "\n")
    return texts


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo")
    corpus = out / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    (corpus / "train.txt").write_text("".join(markov_texts(120, 50, seed=11)), encoding="utf-8")
    (corpus / "val.txt").write_text("".join(markov_texts(60, 50, seed=23)), encoding="utf-8")
    (corpus / "manifest.json").write_text(
        json.dumps(
            {
                "splits": {
                    "train": [{"path": "train.txt", "records": True}],
                    "validation": [{"path": "val.txt", "records": True}],
                }
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    config = {
        "seed": 0,
        "corpus": {
            "tokenizer": "whitespace",
            "manifest": "corpus/manifest.json",
            "max_context": 120,
        },
        "generator": {
            "kind": "ngram",
            "parameters": {"order": 2, "smoothing_k": 0.5},
            "display_name": "reference-bigram",
        },
        "allowed": "eleven",
        "experiment": {
            "target": {
                "kind": "ngram",
                "parameters": {"order": 1, "smoothing_k": 1.0},
                "display_name": "unigram",
            },
            "N": 120,
            "n": 10,
            "seed": 0,
        },
        "service": {
            "port": 8625,
            "data_dir": "data",
            "sets": [
                {"id": "top1-main", "game": "top1", "prompts": 40, "split": "validation"},
                {
                    "id": "compare-main",
                    "game": "compare",
                    "prompts": 12,
                    "candidates_per_prompt": 10,
                    "split": "validation",
                },
            ],
        },
    }
    (out / "lmgame.json").write_text(json.dumps(config, indent=2), encoding="utf-8")
    print(f"demo workspace ready: lmgame --config {out / 'lmgame.json'} serve")


if __name__ == "__main__":
    main()
