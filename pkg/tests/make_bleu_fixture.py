"""Regenerate fixtures/bleu_pairs.json from the test-side reference BLEU.

Run from the repository root:  python tests/make_bleu_fixture.py
The fixture is frozen; the library implementation must match it to 1e-9.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from reference import ref_bleu

VOCAB = (
    "the a of in on at table shows lists number numbers values students read "
    "pages books scored points how many much money need buy left fraction "
    "probability mean median mode average stem leaf plot price total school "
    "club fair library afternoon practice minutes walked biked survey counts"
).split()


def build_pairs() -> list[tuple[str, str]]:
    rng = random.Random(20240817)
    pairs: list[tuple[str, str]] = [
        ("the cat sat", "the cat sat down"),
        ("identical short sentence here.", "identical short sentence here."),
        ("alpha beta gamma delta", "epsilon zeta eta theta"),
        ("The Answer, is 42.", "the answer is 42."),
        ("a b c d e f g", "a b c d e f g h i j"),
    ]
    # one-token edits of longer sentences (near-duplicate regime)
    for _ in range(10):
        n = rng.randint(25, 60)
        tokens = [rng.choice(VOCAB) for _ in range(n)]
        reference = " ".join(tokens)
        edited = list(tokens)
        edited[rng.randrange(n)] = "zzz"
        pairs.append((" ".join(edited), reference))
    # partial overlaps of varying lengths
    for _ in range(25):
        n_ref = rng.randint(5, 30)
        n_cand = rng.randint(5, 30)
        reference_tokens = [rng.choice(VOCAB) for _ in range(n_ref)]
        candidate_tokens = []
        for i in range(n_cand):
            if rng.random() < 0.6 and i < n_ref:
                candidate_tokens.append(reference_tokens[i])
            else:
                candidate_tokens.append(rng.choice(VOCAB))
        pairs.append((" ".join(candidate_tokens), " ".join(reference_tokens)))
    # punctuation-heavy and currency-laden pairs
    for _ in range(10):
        n = rng.randint(8, 20)
        tokens = [rng.choice(VOCAB) for _ in range(n)]
        reference = " ".join(tokens) + "?"
        candidate = ", ".join(tokens[: n // 2]) + ". " + " ".join(tokens[n // 2 :]) + " ($1.25)"
        pairs.append((candidate, reference))
    return pairs[:50]


def main() -> None:
    pairs = build_pairs()
    assert len(pairs) == 50
    records = [
        {"candidate": cand, "reference": ref, "bleu": ref_bleu(cand, ref)}
        for cand, ref in pairs
    ]
    out = Path(__file__).parent / "fixtures" / "bleu_pairs.json"
    out.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(records)} pairs -> {out}")


if __name__ == "__main__":
    main()
