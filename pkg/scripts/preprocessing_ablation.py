"""Preprocessing ablation: every masks / emoji / hashtags toggle combination.

Uses a synthetic social-media corpus where the label signal sometimes hides in
a hashtag or an emoji, and handles and links add vocabulary noise.  For each
toggle setting the corpus is normalized, a vocabulary is built, a toy encoder
is fine-tuned and its eval macro-F1 goes into the table.
"""

import argparse
from itertools import product

from mtlforge.corpus import Example, SplitSpec, TaskDataset, split_train_eval
from mtlforge.metrics import ablation_table
from mtlforge.model import EncoderConfig, ModelBundle
from mtlforge.numerics import Rng
from mtlforge.textnorm import EmojiTable, Lexicon, NormConfig, preprocess
from mtlforge.tokenizer import build_vocab
from mtlforge.training import MtlConfig, evaluate_task, finetune

# each row carries one cue: a plain word, a hashtag gluing that word to a random
# lexicon word, or one of many emoji whose names share a head word
WORDS = {"sexist": ("women", "girls"), "not sexist": ("game", "weather")}
EMOJI = {"sexist": tuple("\U0001F493\U0001F494\U0001F496\U0001F497\U0001F498\U0001F499\U0001F49A\U0001F49B\U0001F49C"
                         "\U0001F49D\U0001F5A4\U0001F90D\U0001F90E\U0001F9E1"),
         "not sexist": tuple(chr(c) for c in range(0x1F550, 0x1F568))}
FILLER = "today really just so very quite kind of the a and".split()


def raw_corpus(n, seed, suffixes):
    rng = Rng(seed).split("ablation-corpus")
    rows = []
    for i in range(n):
        label = ("not sexist", "sexist")[i % 2]
        words = [FILLER[j] for j in rng.integers(0, len(FILLER), size=4)]
        style = int(rng.integers(0, 3))
        word = WORDS[label][int(rng.integers(0, 2))]
        if style == 0:
            cue = word
        elif style == 1:
            cue = f"#{word}{suffixes[int(rng.integers(0, len(suffixes)))]}"
        else:
            cue = EMOJI[label][int(rng.integers(0, len(EMOJI[label])))]
        words.insert(int(rng.integers(0, 5)), cue)
        if rng.random() < 0.5:
            words.insert(0, f"@user{int(rng.integers(0, 10_000))}")
        if rng.random() < 0.3:
            words.append(f"https://t.co/{int(rng.integers(0, 10**8)):08d}")
        rows.append((f"r{i}", " ".join(words), label))
    return rows


def score(rows, norm, seed, epochs, lexicon, table):
    examples = [Example(rid, preprocess(text, norm, lexicon, table), label) for rid, text, label in rows]
    train, ev = split_train_eval(TaskDataset("edosA", ("not sexist", "sexist"), examples), SplitSpec(0.8, seed))
    vocab = build_vocab([e.text for e in train.examples], min_freq=8)
    bundle = ModelBundle(EncoderConfig(len(vocab), 32, 2, 2, 64, max_len=16, dropout=0.1),
                         {"edosA": train.label_set}, seed=seed)
    tuned, _ = finetune(bundle, train, MtlConfig(batch_size=16, ft_lr=1e-3, ft_epochs=epochs), vocab, seed)
    return evaluate_task(tuned, ev, vocab).macro_f1


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=600)
    parser.add_argument("--epochs", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    lexicon, table = Lexicon.default(), EmojiTable.default()
    suffixes = sorted(w for w in lexicon.counts if len(w) >= 4)
    rows = raw_corpus(args.n, args.seed, suffixes)
    results = []
    for masks, emoji, hashtags in product((True, False), repeat=3):
        norm = NormConfig(masks=masks, emoji=emoji, hashtags=hashtags)
        results.append((masks, emoji, hashtags, score(rows, norm, args.seed, args.epochs, lexicon, table)))
    print(ablation_table(results))


if __name__ == "__main__":
    main()
