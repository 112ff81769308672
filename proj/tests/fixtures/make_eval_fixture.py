# Regenerates the evaluation fixture. The expected values are computed here
# with a direct per-point loop and frozen into eval_expected.txt.
import math
import random

rng = random.Random(20240611)
n, L = 40, 25
truth, preds = [], []
for i in range(n):
    y = sorted(rng.sample(range(L), rng.choice([0, 1, 2, 3, 5, 7])))
    truth.append(y)
    scored = rng.sample(range(L), rng.randint(0, 9))
    scores = {l: rng.choice([0.1, 0.2, 0.25, 0.5, 0.75, 1.0]) for l in scored}
    preds.append(scores)

with open("eval_test.txt", "w") as f:
    f.write(f"{n} 3 {L}\n")
    for y in truth:
        f.write(",".join(map(str, y)) + " 0:1.0\n" if y else " 0:1.0\n")

with open("eval_predictions.txt", "w") as f:
    for s in preds:
        ranked = sorted(s.items(), key=lambda kv: (-kv[1], kv[0]))
        f.write("\t".join(f"{l}:{v!r}" for l, v in ranked) + "\n")

def ranked(s):
    return [l for l, _ in sorted(s.items(), key=lambda kv: (-kv[1], kv[0]))]

out = []
for k in (1, 3, 5):
    p = 0.0
    for s, y in zip(preds, truth):
        p += sum(1 for l in ranked(s)[:k] if l in y) / k
    out.append(f"P@{k}={100 * p / n:.2f}")
for k in (1, 3, 5):
    g = 0.0
    for s, y in zip(preds, truth):
        if not y:
            continue
        dcg = sum(1 / math.log2(pos + 2) for pos, l in enumerate(ranked(s)[:k]) if l in y)
        ideal = sum(1 / math.log2(pos + 2) for pos in range(min(k, len(y))))
        g += dcg / ideal
    out.append(f"nDCG@{k}={100 * g / n:.2f}")
with open("eval_expected.txt", "w") as f:
    f.write("\n".join(out) + "\n")
