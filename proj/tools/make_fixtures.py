#!/usr/bin/env python3
"""Regenerates the synthetic code-mixed fixtures under tests/data/.

Labels are keyed to marker words so a small model can memorize them.
Output is deterministic for a given --seed.
"""
import argparse
import csv
import random
from pathlib import Path

FILLER = [
    "yaar", "bhai", "aaj", "kal", "sab", "log", "dekho", "suno", "kya", "baat", "hai", "nahi",
    "ye", "woh", "news", "video", "post", "share", "karo", "please", "sach", "mein", "bilkul",
    "आज", "कल", "सब", "लोग", "देखो", "क्या", "बात", "है", "नहीं", "यह", "वो", "खबर", "वीडियो",
    "भाई", "यार", "अभी", "पूरा", "देश", "city", "market", "school", "online", "viral",
]

FAKE = {0: ["confirmed", "पुष्टि", "official"], 1: ["afwaah", "अफवाह", "jhooth"]}
HATE = {0: ["pyaar", "सम्मान", "shanti"], 1: ["nafrat", "घृणा", "gaddar"]}

TARGETS = ["individual", "organization", "religion", "none"]
SEVERITIES = ["low", "medium", "high", "none"]
TARGET_WORDS = {
    "individual": ["neta", "व्यक्ति", "actor"],
    "organization": ["party", "संगठन", "company"],
    "religion": ["dharm", "धर्म", "mandir"],
    "none": ["mausam", "मौसम", "cricket"],
}
SEVERITY_WORDS = {
    "low": ["thoda", "हल्का", "mild"],
    "medium": ["kaafi", "ज़्यादा", "serious"],
    "high": ["maaro", "ख़तरनाक", "violent"],
    "none": ["theek", "ठीक", "normal"],
}


def sentence(rng, markers):
    words = rng.sample(FILLER, rng.randint(3, 7))
    for m in markers:
        words.insert(rng.randint(0, len(words)), m)
    text = " ".join(words)
    if rng.random() < 0.2:
        text = text.replace(" ", "  ", 1)
    if rng.random() < 0.2:
        text += rng.choice(["!", "?", " !!", ", sach?", " 🙏"])
    return text


def task_a_rows(rng, n, offset):
    rows = []
    for i in range(n):
        fake, hate = i % 2, (i // 2) % 2
        markers = [rng.choice(FAKE[fake]), rng.choice(HATE[hate])]
        rows.append([str(offset + i), sentence(rng, markers), str(fake), str(hate)])
    return rows


def task_b_rows(rng, n, offset):
    rows = []
    for i in range(n):
        target, severity = TARGETS[i % 4], SEVERITIES[(i + i // 4) % 4]
        markers = [rng.choice(TARGET_WORDS[target]), rng.choice(SEVERITY_WORDS[severity])]
        rows.append([str(offset + i), sentence(rng, markers), target, severity])
    return rows


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "data"))
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    write_csv(out / "task_a_train.csv", ["id", "text", "fake", "hate"], task_a_rows(rng, 32, 1))
    write_csv(out / "task_a_val.csv", ["id", "text", "fake", "hate"], task_a_rows(rng, 12, 101))
    write_csv(out / "task_b_train.csv", ["id", "text", "target", "severity"], task_b_rows(rng, 32, 1))
    write_csv(out / "task_b_val.csv", ["id", "text", "target", "severity"], task_b_rows(rng, 12, 101))
    predict = [[r[0], r[1]] for r in task_a_rows(rng, 6, 201)]
    write_csv(out / "task_a_predict.csv", ["id", "text"], predict)

    markers = [w for group in (FAKE, HATE) for ws in group.values() for w in ws]
    markers += [w for group in (TARGET_WORDS, SEVERITY_WORDS) for ws in group.values() for w in ws]
    with open(out / "corpus_mixed.txt", "w", encoding="utf-8") as f:
        for _ in range(600):
            f.write(sentence(rng, rng.sample(markers, rng.randint(0, 3))) + "\n")


if __name__ == "__main__":
    main()
