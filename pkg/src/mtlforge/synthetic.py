"""Synthetic corpora for desk-scale experiments.

``keyword_tasks`` builds small classification tasks whose label is decided by
a single keyword.  ``templated_domain`` builds an unlabeled domain corpus plus
a labeled task over the same vocabulary.  In the domain corpus each polar word
appears next to context words of its own class.  The labeled task only ever
shows half of the polar words during training, so the held-out half can only
be classified through what MLM learned about their contexts.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Example, TaskDataset
from .numerics import Rng

FILLER = tuple(f"w{i}" for i in range(40))


def _sentence(rng: Rng, keyword: str, length: int, pool=FILLER) -> str:
    words = [pool[i] for i in rng.integers(0, len(pool), size=length - 1)]
    words.insert(int(rng.integers(0, length)), keyword)
    return " ".join(words)


def keyword_tasks(n_per_task: int = 64, seed: int = 0, length: int = 6) -> list[TaskDataset]:
    """Two binary tasks, each separable by which of its two keywords appears."""
    specs = {"alpha": (("neg", "bad"), ("pos", "good")), "beta": (("cold", "blue"), ("warm", "red"))}
    rng = Rng(seed).split("keyword-tasks")
    out = []
    for name, classes in specs.items():
        trng = rng.split(name)
        examples = [Example(f"{name}-{i}", _sentence(trng, classes[i % 2][1], length), classes[i % 2][0])
                    for i in range(n_per_task)]
        out.append(TaskDataset(name, tuple(c[0] for c in classes), examples))
    return out


@dataclass(frozen=True)
class DomainFixture:
    domain_texts: list[str]
    train: TaskDataset
    eval: TaskDataset
    seen_words: dict[str, tuple[str, ...]]
    unseen_words: dict[str, tuple[str, ...]]


def templated_domain(seed: int = 0, n_domain: int = 2000, n_train: int = 64, n_eval: int = 200,
                     n_polar: int = 12, n_context: int = 6, length: int = 6) -> DomainFixture:
    """Domain text and a labeled task where half the polar words are held out of training."""
    rng = Rng(seed).split("templated-domain")
    labels = ("neutral", "hostile")
    polar = {lab: tuple(f"{lab[0]}{i}" for i in range(n_polar)) for lab in labels}
    context = {lab: tuple(f"c{lab[0]}{i}" for i in range(n_context)) for lab in labels}
    half = n_polar // 2
    seen = {lab: words[:half] for lab, words in polar.items()}
    unseen = {lab: words[half:] for lab, words in polar.items()}

    drng = rng.split("domain")
    domain = []
    for i in range(n_domain):
        lab = labels[int(drng.integers(0, 2))]
        word = polar[lab][int(drng.integers(0, n_polar))]
        domain.append(_sentence(drng, word, length, context[lab]))

    def task(name, words, n, stream):
        trng = rng.split(stream)
        examples = []
        for i in range(n):
            lab = labels[i % 2]
            word = words[lab][int(trng.integers(0, len(words[lab])))]
            examples.append(Example(f"{name}-{i}", _sentence(trng, word, length), lab))
        return TaskDataset(name, labels, examples)

    return DomainFixture(domain, task("domain", seen, n_train, "train"), task("domain", unseen, n_eval, "eval"),
                         seen, unseen)
