#!/usr/bin/env python3
"""Regenerate the bundled fixtures.

    python3 build_fixtures.py /path/to/wordnet/dict

Writes, next to this script:
  wordnet/index.noun, wordnet/data.noun  noun subset: every sense of the corpus
                                         vocabulary plus its hypernym closure
  corpus.jsonl                           100 captioned sentence pairs
  groundings.jsonl                       recorded grounding answers for the
                                         corpus (whole-sentence and per-word
                                         queries)
The output is deterministic.
"""

import json
import random
import re
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent

SUBJECTS = [
    ("A man", "Ein Mann"),
    ("A woman", "Eine Frau"),
    ("A young boy", "Ein kleiner Junge"),
    ("A little girl", "Ein kleines Mädchen"),
    ("A dog", "Ein Hund"),
    ("An old man", "Ein alter Mann"),
    ("A chef", "Ein Koch"),
    ("A musician", "Ein Musiker"),
    ("A child", "Ein Kind"),
    ("A skateboarder", "Ein Skateboarder"),
]

ACTIONS = [
    ("rides a bicycle", "fährt Fahrrad"),
    ("holds a red pepper", "hält eine rote Paprika"),
    ("throws a ball", "wirft einen Ball"),
    ("plays the guitar", "spielt Gitarre"),
    ("reads a book", "liest ein Buch"),
    ("wears a hat", "trägt einen Hut"),
    ("drives a sedan", "fährt eine Limousine"),
    ("walks a horse", "führt ein Pferd"),
    ("carries a basket of apples", "trägt einen Korb mit Äpfeln"),
    ("does a trick on a skateboard", "macht einen Trick auf einem Skateboard"),
    ("sits at a table", "sitzt an einem Tisch"),
    ("rides a mountain bike", "fährt ein Mountainbike"),
    ("cuts peppers in the kitchen", "schneidet Paprika in der Küche"),
    ("pets a cat", "streichelt eine Katze"),
    ("waits for a bus", "wartet auf einen Bus"),
]

PLACES = [
    ("on the beach", "am Strand"),
    ("in the park", "im Park"),
    ("near a lake", "an einem See"),
    ("on a busy street", "auf einer belebten Straße"),
    ("in front of a building", "vor einem Gebäude"),
    ("in the snow", "im Schnee"),
    ("", ""),
]

# sentences without concrete nouns, or with only abstract ones
SPECIALS = [
    ("It is as if they were there.", "Es ist, als ob sie da wären."),
    ("This is the idea of freedom.", "Das ist die Idee der Freiheit."),
    ("Everyone is happy now.", "Jetzt sind alle glücklich."),
    ("A moment of joy and hope.", "Ein Moment der Freude und Hoffnung."),
]

LABEL_LEMMAS = [
    "physical_entity", "object", "physical_object", "matter", "living_thing",
    "organism", "artifact", "abstraction", "abstract_entity",
    "psychological_feature", "cognition", "communication", "attribute",
    "measure", "entity",
]


def build_corpus(rng):
    combos = [(s, a, p) for s in SUBJECTS for a in ACTIONS for p in PLACES]
    rng.shuffle(combos)
    entries = []
    for i, (src, tgt) in enumerate(SPECIALS):
        entries.append((src, tgt))
    for s, a, p in combos[: 100 - len(SPECIALS)]:
        src = " ".join(x for x in (s[0], a[0], p[0]) if x) + "."
        tgt = " ".join(x for x in (s[1], a[1], p[1]) if x) + "."
        entries.append((src, tgt))
    rng.shuffle(entries)
    return [
        {"id": f"m30k-{i:03d}", "src": src, "tgt": tgt, "image": f"images/{1000 + i}.jpg"}
        for i, (src, tgt) in enumerate(entries)
    ]


def words(text):
    return re.findall(r"[A-Za-z]+", text)


def read_db(d):
    index, data, header = {}, {}, []
    for line in open(d / "index.noun", encoding="latin-1"):
        if line.startswith("  "):
            header.append(line)
            continue
        f = line.split()
        index[f[0]] = line
    for line in open(d / "data.noun", encoding="latin-1"):
        if line.startswith("  "):
            continue
        data[line[:8]] = line
    return index, data, header


def hypernyms(line):
    body = line.split("|")[0].split()
    w_cnt = int(body[3], 16)
    at = 4 + 2 * w_cnt
    p_cnt = int(body[at])
    ptrs = [body[at + 1 + 4 * k : at + 5 + 4 * k] for k in range(p_cnt)]
    return body, at, ptrs


def subset_line(line, keep):
    body, at, ptrs = hypernyms(line)
    gloss = line.split("|", 1)[1].strip() if "|" in line else ""
    kept = [p for p in ptrs if p[0] in ("@", "@i") and p[1] in keep]
    head = " ".join(body[:at])
    ptr_text = " ".join(" ".join(p) for p in kept)
    return f"{head} {len(kept):03d} {ptr_text} | {gloss}".replace("  ", " ") + "\n"


def build_wordnet(src_dir, corpus):
    index, data, header = read_db(src_dir)
    vocab = set()
    for e in corpus:
        for w in words(e["src"]):
            w = w.lower()
            for form in (w, w[:-1] if w.endswith("s") else None, w[:-2] if w.endswith("es") else None):
                if form and form in index:
                    vocab.add(form)
        toks = [w.lower() for w in words(e["src"])]
        for n in (2, 3):
            for k in range(len(toks) - n + 1):
                phrase = "_".join(toks[k : k + n])
                if phrase in index:
                    vocab.add(phrase)
    vocab.update(LABEL_LEMMAS)

    keep, stack = set(), []
    for lemma in vocab:
        f = index[lemma].split()
        n = int(f[2])
        stack.extend(f[-n:])
    while stack:
        off = stack.pop()
        if off in keep:
            continue
        keep.add(off)
        _, _, ptrs = hypernyms(data[off])
        stack.extend(p[1] for p in ptrs if p[0] in ("@", "@i"))

    out = HERE / "wordnet"
    out.mkdir(exist_ok=True)
    notice = [
        "  1 Subset of the WordNet 3.0 noun database, regenerated by build_fixtures.py.\n",
        "  2 WordNet 3.0 Copyright 2006 by Princeton University.  All rights reserved.\n",
        "  3 See LICENSE in this directory for the WordNet license.\n",
    ]
    with open(out / "index.noun", "w", encoding="latin-1") as fh:
        fh.writelines(notice)
        for lemma in sorted(vocab):
            fh.write(index[lemma])
    with open(out / "data.noun", "w", encoding="latin-1") as fh:
        fh.writelines(notice)
        for off in sorted(keep):
            fh.write(subset_line(data[off], keep))
    return vocab, len(keep)


def bbox(rng):
    x0, y0 = rng.uniform(0, 0.6), rng.uniform(0, 0.6)
    return [round(x0, 3), round(y0, 3), round(x0 + rng.uniform(0.1, 0.4), 3), round(y0 + rng.uniform(0.1, 0.4), 3)]


def score(rng):
    # roughly 70% confident, with some mass right around the 0.85 cut
    r = rng.random()
    if r < 0.1:
        return 0.85
    if r < 0.7:
        return round(rng.uniform(0.86, 0.99), 3)
    return round(rng.uniform(0.3, 0.849), 3)


def stop_words():
    path = HERE.parent / "data" / "stop_words.txt"
    return {l.strip() for l in open(path, encoding="utf-8") if l.strip() and not l.startswith("#")}


def build_groundings(corpus, vocab, rng):
    stops = stop_words()
    records = []
    for e in corpus:
        nouns = [
            w for w in words(e["src"])
            if w.lower() not in stops and (w.lower() in vocab or w.lower().rstrip("s") in vocab)
        ]
        dets = []
        for w in nouns:
            if rng.random() < 0.8:
                dets.append({"label": w.lower(), "score": score(rng), "bbox": bbox(rng)})
                if rng.random() < 0.2:
                    dets.append({"label": w.lower(), "score": score(rng), "bbox": bbox(rng)})
        records.append({"image": e["image"], "query": e["src"], "detections": dets})
        for w in dict.fromkeys(nouns):
            if rng.random() < 0.9:
                d = [{"label": w.lower(), "score": score(rng), "bbox": bbox(rng)}]
                records.append({"image": e["image"], "query": w, "detections": d})
    return records


def main():
    src_dir = Path(sys.argv[1])
    rng = random.Random(20240501)
    corpus = build_corpus(rng)
    vocab, n_synsets = build_wordnet(src_dir, corpus)
    groundings = build_groundings(corpus, vocab, rng)
    with open(HERE / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for e in corpus:
            fh.write(json.dumps(e, ensure_ascii=False) + "\n")
    with open(HERE / "groundings.jsonl", "w", encoding="utf-8") as fh:
        for r in groundings:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")
    print(f"{len(corpus)} entries, {len(vocab)} lemmas, {n_synsets} synsets, {len(groundings)} grounding records")


if __name__ == "__main__":
    main()
