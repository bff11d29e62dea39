"""Regenerates annotated_50.csv and annotated_50_counts.tsv.

Scores are drawn on a 0.5 grid so every sweep threshold is hit exactly by
some rows; the counts file is a plain enumeration over the rows.
"""
import csv
import random
from pathlib import Path

HERE = Path(__file__).parent
TRAITS = ["agreeableness", "conscientiousness", "extraversion", "emotional_stability", "openness"]
THRESHOLDS = [2.5, 3.0, 3.5, 4.0, 4.5]
HIGH = {
    "agreeableness": "I always try to be kind and helpful",
    "conscientiousness": "I keep an organized schedule",
    "extraversion": "I love a party with lots of people and talk to everyone",
    "emotional_stability": "I stay calm and relaxed",
    "openness": "I am curious about new ideas and art",
}
LOW = {
    "agreeableness": "people can be rude and I answer harshly",
    "conscientiousness": "my room is a mess",
    "extraversion": "I prefer to stay quiet and alone",
    "emotional_stability": "I often feel anxious and worried",
    "openness": "I like my usual routine",
}


def main():
    rng = random.Random(7)
    grid = [1.0 + 0.5 * k for k in range(9)]
    rows = []
    for i in range(50):
        scores = {t: rng.choice(grid) for t in TRAITS}
        focus = TRAITS[i % 5]
        phrase = HIGH[focus] if scores[focus] > 3.0 else LOW[focus]
        rows.append({"text": f"Situation {i + 1}: {phrase}.", **scores})
    with open(HERE / "annotated_50.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["text"] + TRAITS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.1f}" if k != "text" else v) for k, v in r.items()})
    with open(HERE / "annotated_50_counts.tsv", "w") as f:
        f.write("trait\tthreshold\tpositives\tnegatives\n")
        for t in TRAITS:
            for th in THRESHOLDS:
                pos = sum(1 for r in rows if r[t] > th)
                f.write(f"{t}\t{th}\t{pos}\t{len(rows) - pos}\n")


if __name__ == "__main__":
    main()
