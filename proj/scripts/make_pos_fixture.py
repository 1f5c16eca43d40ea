#!/usr/bin/env python3
"""Writes a synthetic tagged corpus, one sentence per line of word/TAG tokens.

The tag sequence follows a small hand-written tag bigram chain and words are
drawn from per-tag lexicons with Zipf-like weights, so the corpus has the
shape of a real POS corpus without shipping one.
"""

import argparse
import random

TAGS = {
    "DET": (["the", "a", "this", "that", "every", "some"], {"NOUN": 6, "ADJ": 3, "NUM": 1}),
    "ADJ": (["old", "green", "small", "quiet", "bright", "heavy", "early", "strange"], {"NOUN": 8, "ADJ": 1, "CONJ": 1}),
    "NOUN": (["dog", "river", "house", "letter", "city", "farmer", "song", "window", "road", "child", "market", "storm"],
             {"VERB": 5, "ADP": 3, ".": 3, "CONJ": 1, "NOUN": 1}),
    "VERB": (["saw", "made", "took", "found", "crossed", "wrote", "heard", "kept", "opened", "left"],
             {"DET": 5, "PRON": 2, "ADV": 2, "ADP": 2, ".": 1}),
    "ADP": (["in", "on", "near", "under", "with", "from", "across"], {"DET": 7, "PRON": 1, "NOUN": 2}),
    "PRON": (["she", "he", "they", "we", "it", "you"], {"VERB": 8, "ADV": 2}),
    "ADV": (["slowly", "never", "often", "then", "soon", "again"], {"VERB": 4, ".": 3, "ADP": 2}),
    "CONJ": (["and", "but", "or"], {"DET": 3, "PRON": 4, "ADJ": 1}),
    "NUM": (["two", "three", "ten", "forty"], {"NOUN": 6, "ADJ": 2}),
    ".": (["."], {}),
}
START = {"DET": 5, "PRON": 4, "ADV": 1}


def pick(rng, weights):
    items = sorted(weights.items())
    return rng.choices([k for k, _ in items], [w for _, w in items])[0]


def sentence(rng, max_len):
    tag = pick(rng, START)
    tokens = []
    while True:
        words = TAGS[tag][0]
        word = rng.choices(words, [1.0 / (r + 1) for r in range(len(words))])[0]
        tokens.append(f"{word}/{tag}")
        successors = TAGS[tag][1]
        if tag == "." or not successors:
            return tokens
        tag = pick(rng, successors) if len(tokens) < max_len - 1 else "."


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sentences", type=int, default=500)
    parser.add_argument("--max-length", type=int, default=40)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="data/pos_fixture.txt")
    args = parser.parse_args()
    rng = random.Random(args.seed)
    with open(args.out, "w", encoding="ascii") as f:
        for _ in range(args.sentences):
            f.write(" ".join(sentence(rng, args.max_length)) + "\n")


if __name__ == "__main__":
    main()
