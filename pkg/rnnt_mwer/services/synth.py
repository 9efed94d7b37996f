"""
Synthetic template task.

Every token owns a feature template held for a few frames; seeded Gaussian
noise is added on top. Confusability pulls paired templates towards each
other so a model cannot always separate the pair, which leaves room for
MWER training. Utterances are framed by one or two silence frames.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rnnt_mwer.core.config import SynthSpec
from rnnt_mwer.core.errors import InvalidArgumentError
from rnnt_mwer.models.vocab import Vocabulary
from rnnt_mwer.repositories.dataset import DatasetRepository, Utterance, VocabRepository

logger = logging.getLogger(__name__)

BLANK = "<blank>"
EOS = "<eos>"
MAX_VOCAB = 32


@dataclass(frozen=True, eq=False)
class SynthDataset:
    vocab: Vocabulary
    templates: np.ndarray
    train: list[Utterance]
    dev: list[Utterance]
    test: list[Utterance]


def _vocabulary(spec: SynthSpec) -> Vocabulary:
    words = [f"w{i}" for i in range(spec.vocab_size)]
    tokens = [BLANK, *words]
    if spec.eos:
        tokens.append(EOS)
    return Vocabulary(tokens=tokens, blank=BLANK, eos=EOS if spec.eos else None)


def _templates(rng: np.random.Generator, spec: SynthSpec) -> np.ndarray:
    """One unit-scale template per real token; pairs (0,1), (2,3), ... are blended."""
    templates = rng.normal(size=(spec.vocab_size, spec.feature_dim))
    for a in range(0, spec.vocab_size - 1, 2):
        b = a + 1
        templates[b] = (1.0 - spec.confusability) * templates[b] + spec.confusability * templates[a]
    return templates


def gen_synth(seed: int, spec: SynthSpec) -> SynthDataset:
    """Generate train/dev/test sets; identical output for identical (seed, spec)."""
    if spec.vocab_size < 2:
        raise InvalidArgumentError(f"synthetic task needs at least 2 real tokens, got {spec.vocab_size}")
    if spec.vocab_size + 1 + int(spec.eos) > MAX_VOCAB:
        raise InvalidArgumentError(f"vocabulary larger than {MAX_VOCAB} symbols")

    rng = np.random.default_rng(seed)
    vocab = _vocabulary(spec)
    templates = _templates(rng, spec)
    first_word = vocab.blank_id + 1

    utterances = []
    for n in range(spec.num_utts):
        length = int(rng.integers(spec.min_tokens, spec.max_tokens + 1))
        words = rng.integers(0, spec.vocab_size, size=length)
        frames = [np.zeros((int(rng.integers(1, 3)), spec.feature_dim))]
        for w in words:
            repeat = int(rng.integers(spec.min_frames_per_token, spec.max_frames_per_token + 1))
            frames.append(np.tile(templates[w], (repeat, 1)))
        frames.append(np.zeros((int(rng.integers(1, 3)), spec.feature_dim)))
        clean = np.concatenate(frames)
        features = clean + spec.noise * rng.normal(size=clean.shape)
        utterances.append(
            Utterance(
                id=f"utt{n:05d}",
                features=features,
                reference=tuple(int(w) + first_word for w in words),
            )
        )

    num_dev = int(round(spec.num_utts * spec.dev_fraction))
    num_test = int(round(spec.num_utts * spec.test_fraction))
    num_train = spec.num_utts - num_dev - num_test
    if num_train < 1:
        raise InvalidArgumentError("no utterances left for training")
    dataset = SynthDataset(
        vocab=vocab,
        templates=templates,
        train=utterances[:num_train],
        dev=utterances[num_train : num_train + num_dev],
        test=utterances[num_train + num_dev :],
    )
    logger.info(
        f"Generated {num_train} train, {num_dev} dev, {num_test} test utterances "
        f"over {spec.vocab_size} tokens (seed {seed})"
    )
    return dataset


def write_synth(dataset: SynthDataset, out_dir: Path | str) -> dict[str, Path]:
    """Write vocab.json and {train,dev,test}.jsonl. Returns the paths by name."""
    out = Path(out_dir)
    paths = {"vocab": out / "vocab.json"}
    VocabRepository(paths["vocab"]).save(dataset.vocab)
    for name in ("train", "dev", "test"):
        paths[name] = out / f"{name}.jsonl"
        DatasetRepository(paths[name], dataset.vocab).save(getattr(dataset, name))
    return paths
