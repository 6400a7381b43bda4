"""Write a small synthetic oncology-style cohort used by the Cond_list tests.

Two binary outcomes (progression, death) depend on stage and first
treatment, so conditioned searches have something to find.

    python scripts/make_cohort.py tests/data/cohort.csv
"""

import csv
import random
import sys

STAGES = ["I", "II", "III", "IV"]
TREATMENTS = ["surgery", "chemotherapy", "radiotherapy", "immunotherapy"]
HISTOLOGY = ["adenocarcinoma", "squamous", "small-cell"]


def rows(n=200, seed=7):
    rng = random.Random(seed)
    for _ in range(n):
        stage = rng.choice(STAGES)
        treatment = rng.choice(TREATMENTS)
        histology = rng.choice(HISTOLOGY)
        smoker = rng.choice(["current", "former", "never"])
        sex = rng.choice(["F", "M"])
        age = rng.randint(38, 88)
        risk = STAGES.index(stage) * 0.2 + (0.25 if treatment == "chemotherapy" else 0.0)
        risk += 0.1 if smoker == "current" else 0.0
        progression = "YES" if rng.random() < 0.1 + risk else "NO"
        death = "YES" if rng.random() < (0.05 + risk * (1.2 if progression == "YES" else 0.5)) else "NO"
        yield [age, sex, smoker, stage, histology, treatment, progression, death]


def main(path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["age", "sex", "smoker", "stage", "histology", "first_treatment", "progression", "death"])
        w.writerows(rows())


if __name__ == "__main__":
    main(sys.argv[1])
