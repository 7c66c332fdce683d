"""Regenerate the bundled 20-sentence corpus and 50-word embedding file.

    python tools/make_synthetic.py src/ldner/data/synthetic
"""
import sys
from pathlib import Path

import numpy as np

LEXICON = {
    "corporation": ["google", "apple", "microsoft", "amazon", "intel"],
    "creative-work": ["hamlet", "inception", "titanic", "thriller", "avatar"],
    "group": ["nato", "unicef", "beatles", "lakers", "fifa"],
    "location": ["madrid", "barcelona", "cordoba", "paris", "london"],
    "person": ["obama", "john", "smith", "maria", "garcia"],
    "product": ["iphone", "android", "windows", "ak47", "glock"],
    "O": ["i", "visited", "with", "yesterday", "the", "love", "my", "went", "to",
          "bought", "a", "from", "watched", "saw", "met", "likes", "joined", "for",
          "and", "at"],
}

SENTENCES = """\
I visited Madrid with Obama yesterday
John Smith went to Barcelona
Maria Garcia bought a iPhone from Apple
I watched Inception with John
The Beatles visited London
I love my Android
Obama met the Lakers at Paris
Maria likes Titanic and Hamlet
I bought Windows from Microsoft
Smith joined UNICEF
I saw Avatar at Cordoba
Garcia went to Madrid for FIFA
I bought a Glock from Amazon
John watched Thriller yesterday
NATO met at London
I love Google and Intel
Maria Garcia visited Paris
The Lakers went to Barcelona
Obama likes my AK47
I saw John Smith at Cordoba
"""

MULTI = {("john", "smith"), ("maria", "garcia")}


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20)
    dim = 16
    centers = {c: rng.normal(size=dim) for c in LEXICON}
    rows = []
    for cat, words in LEXICON.items():
        for w in words:
            v = centers[cat] + 0.35 * rng.normal(size=dim)
            rows.append(w + " " + " ".join(f"{x:.6f}" for x in v))
    (out / "embeddings.txt").write_text("\n".join(rows) + "\n", encoding="utf-8")

    cat_of = {w: c for c, ws in LEXICON.items() for w in ws}
    lines = []
    for sent in SENTENCES.splitlines():
        toks = sent.split()
        prev = None
        for tok in toks:
            low = tok.lower()
            cat = cat_of[low]
            if cat == "O":
                tag = "O"
            elif prev is not None and (prev, low) in MULTI:
                tag = f"I-{cat}"
            else:
                tag = f"B-{cat}"
            lines.append(f"{tok}\t{tag}")
            prev = low
        lines.append("")
    (out / "corpus.conll").write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main(sys.argv[1])
