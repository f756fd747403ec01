#!/usr/bin/env python3
"""Generate the small synthetic corpora under data/synthetic.

Everything is derived from a fixed seed, so rerunning reproduces the
committed files byte for byte.
"""

import argparse
import datetime as dt
import json
import pathlib
import random

NEUTRAL = [
    "went for a walk with the dog this morning",
    "does anyone know a good pasta recipe",
    "finished the last season of that show tonight",
    "my cat keeps knocking things off the table",
    "the weather was great so we had a picnic",
    "started learning the guitar again after years",
    "work was long but the team is nice",
    "reading a novel about a lighthouse keeper",
    "fixed the bike chain myself for once",
    "thinking about repainting the kitchen",
]

GAMBLING = [
    "lost my whole paycheck at the casino again",
    "one more bet and I will win it all back",
    "spent the night on online slots and cannot stop",
    "borrowed money from my sister to cover the betting losses",
    "I keep chasing losses on sports betting apps",
    "the poker site sent me another bonus and I took it",
    "hid the credit card statement from my partner, gambling debts",
    "deposited again, see (proof: https://example.com/slip/42)",
]

EATING = [
    "skipped breakfast and lunch again to keep my weight down",
    "I count every calorie and feel guilty after eating",
    "weighed myself three times today, the number scares me",
    "I feel fat and hate how my body and shape look",
    "ate a huge amount last night and felt completely out of control",
    "avoided dinner with friends because of food",
    "I want an empty stomach, fasting makes me feel in control",
    "made myself sick after eating, worried about gaining weight",
]


def stamp(t):
    return t.strftime("%Y-%m-%d %H:%M:%S")


def history(rng, subject, label, pool, risk_share, n_posts, start, span_days):
    posts = []
    for _ in range(n_posts):
        when = start + dt.timedelta(seconds=rng.randrange(span_days * 86400))
        text = rng.choice(pool) if rng.random() < risk_share else rng.choice(NEUTRAL)
        if rng.random() < 0.15:
            text += " more at www.example.org/thread"
        title = rng.choice(["", "", "update", "question", "vent"])
        posts.append({"date": stamp(when), "title": title, "text": text})
    posts.sort(key=lambda p: p["date"])
    return {"subject": subject, "label": label, "posts": posts}


def task1(rng, prefix, n_subjects, n_positive):
    start = dt.datetime(2022, 1, 1)
    rows = []
    for i in range(n_subjects):
        positive = i < n_positive
        rows.append(history(rng, f"{prefix}{i:03d}", 1 if positive else 0, GAMBLING,
                            0.6 if positive else 0.03, rng.randint(6, 18), start, 120))
    return sorted(rows, key=lambda r: r["subject"])


def task3(rng, n_subjects):
    start = dt.datetime(2023, 3, 1)
    rows, gold = [], []
    for i in range(n_subjects):
        share = rng.choice([0.0, 0.2, 0.5, 0.8])
        rows.append(history(rng, f"ed{i:03d}", None, EATING, share, rng.randint(5, 20), start, 45))
        base = int(round(share * 6))
        answers = [max(0, min(6, base + rng.randint(-2, 2))) for _ in range(22)]
        gold.append(f"ed{i:03d} " + " ".join(map(str, answers)))
    return rows, gold


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "synthetic"))
    ap.add_argument("--seed", type=int, default=20230905)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)
    write_jsonl(out / "task1_train.jsonl", task1(rng, "tr", 40, 12))
    write_jsonl(out / "task1_test.jsonl", task1(rng, "te", 20, 6))
    rows, gold = task3(rng, 12)
    write_jsonl(out / "task3_users.jsonl", rows)
    (out / "task3_gold.txt").write_text("\n".join(gold) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
