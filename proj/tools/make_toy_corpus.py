#!/usr/bin/env python3
"""Generate the bundled toy review corpus (data/toy_reviews.jsonl).

Documents are drawn from a shared neutral vocabulary plus a class-specific
sentiment vocabulary, with some label noise in word choice so the task is
learnable but not trivial.
"""
import argparse
import json
import random

NEUTRAL = """film movie story plot actor actress scene director camera script
character ending music sound screen cast role dialogue picture cinema
minute hour time year audience viewer critic studio sequel drama comedy
action thriller romance effects production budget theatre ticket night
friend family city house road car water light dark voice face eyes hand
world life moment part line shot set editing pace tone style genre""".split()

POSITIVE = """brilliant wonderful superb moving delightful charming gripping
excellent masterful beautiful touching hilarious clever fresh stunning
memorable powerful elegant engaging inspired joyful radiant splendid
captivating heartfelt witty vivid triumphant sublime""".split()

NEGATIVE = """boring dull awful tedious clumsy bland lifeless painful weak
messy terrible forgettable predictable shallow annoying pointless silly
stale flat lazy confusing dreary incoherent sloppy tiresome wooden
hollow grating muddled vapid""".split()


def make_doc(rng, label):
    own, other = (POSITIVE, NEGATIVE) if label == 1 else (NEGATIVE, POSITIVE)
    length = rng.randint(25, 60)
    words = []
    for _ in range(length):
        u = rng.random()
        if u < 0.72:
            words.append(rng.choice(NEUTRAL))
        elif u < 0.92:
            words.append(rng.choice(own))
        else:
            words.append(rng.choice(other))
    return " ".join(words).capitalize() + "."


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="data/toy_reviews.jsonl")
    parser.add_argument("--per-class", type=int, default=600)
    parser.add_argument("--seed", type=int, default=20201)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    labels = [1] * args.per_class + [0] * args.per_class
    rng.shuffle(labels)
    with open(args.out, "w", encoding="utf-8") as f:
        for i, label in enumerate(labels):
            doc = {"id": f"toy{i:05d}", "text": make_doc(rng, label), "label": label}
            f.write(json.dumps(doc) + "\n")


if __name__ == "__main__":
    main()
