import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from objects.datasets.images import ImageTensor, load_pgm, preprocess
from objects.datasets.synth import load_manifest
from objects.datasets.vocabulary import EOS_ID, PAD_ID, Vocabulary
from objects.errors import EmptyCorpusError


@dataclass(frozen=True)
class Sample:
    """One (image, prompt, report) triple; the target ends in EOS."""
    index: int
    image: ImageTensor
    prompt_ids: Tuple[int, ...]
    target_ids: Tuple[int, ...]
    caption: str


@dataclass
class Batch:
    images: np.ndarray      # (B, H, W, C)
    target_ids: np.ndarray  # (B, T), PAD-filled
    pad_mask: np.ndarray    # (B, T), True at padding
    indices: List[int]

    def __len__(self) -> int:
        return len(self.indices)


def truncate_report(ids: Sequence[int], max_report_len: int) -> List[int]:
    """Keep the first max_report_len - 1 content tokens and terminate with EOS."""
    content = list(ids)
    if content and content[-1] == EOS_ID:
        content = content[:-1]
    return content[:max_report_len - 1] + [EOS_ID]


def load_samples(data_dir: Union[str, os.PathLike], split: str, vocab: Vocabulary, prompt_text: str) -> List[Sample]:
    prompt_ids = tuple(vocab.encode(prompt_text))
    root = Path(data_dir)
    return [
        Sample(
            index=record.index,
            image=load_pgm(root / record.image_path),
            prompt_ids=prompt_ids,
            target_ids=tuple(vocab.encode(record.caption, add_eos=True)),
            caption=record.caption,
        )
        for record in load_manifest(data_dir, split)
    ]


def make_batches(
    samples: Sequence[Sample],
    batch_size: int,
    seed: int,
    max_report_len: int,
    image_size: int,
    epoch: int = 0,
    augment_rng: Optional[np.random.Generator] = None,
) -> Iterator[Batch]:
    """Seeded per-epoch shuffle; images resized (or augmented), targets truncated and PAD-filled."""
    if not samples:
        raise EmptyCorpusError("cannot batch an empty dataset")
    order = np.random.default_rng([seed, epoch]).permutation(len(samples))
    for start in range(0, len(order), batch_size):
        chosen = [samples[i] for i in order[start:start + batch_size]]
        images = np.stack([
            preprocess(s.image, image_size, rng=augment_rng, train=augment_rng is not None).pixels for s in chosen
        ])
        targets = [truncate_report(s.target_ids, max_report_len) for s in chosen]
        width = max(len(t) for t in targets)
        target_ids = np.full((len(chosen), width), PAD_ID, dtype=np.int64)
        for row, ids in enumerate(targets):
            target_ids[row, :len(ids)] = ids
        yield Batch(images=images, target_ids=target_ids, pad_mask=target_ids == PAD_ID,
                    indices=[s.index for s in chosen])
