"""Slow, independent re-implementations used as test oracles.

Written with plain Python loops and ``math`` so they share no code path with
the vectorised package implementation.
"""
import itertools
import math


def sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))


def boundary_loss(probs, m, eps=1e-7):
    h, w = len(probs), len(probs[0])
    total = 0.0
    for i in range(h):
        for j in range(w):
            if m[i][j]:
                p = min(max(probs[i][j], eps), 1.0 - eps)
                total += m[i][j] * math.log(p)
    return -total / (h * w)


def dice_prime(p, g):
    num = sum(a * b for a, b in zip(p, g))
    den = sum(a * a + b * b for a, b in zip(p, g))
    gg = sum(b * b for b in g)
    excess = sum(max(a - b, 0.0) ** 2 for a, b in zip(p, g))
    return (1.0 - 2.0 * num / den) + excess / gg


def box_mask(x1, y1, x2, y2, h, w):
    return [[1 if (y1 <= i < y2 and x1 <= j < x2) else 0 for j in range(w)] for i in range(h)]


def col_max(grid):
    return [max(grid[i][j] for i in range(len(grid))) for j in range(len(grid[0]))]


def row_max(grid):
    return [max(row) for row in grid]


def puzzle_total(logits, m, box):
    """Boundary term plus both projected dice-with-penalty terms, all by loops."""
    h, w = len(logits), len(logits[0])
    probs = [[sigmoid(logits[i][j]) for j in range(w)] for i in range(h)]
    g = box_mask(*box, h, w)
    return boundary_loss(probs, m) + dice_prime(col_max(probs), col_max(g)) + dice_prime(row_max(probs), row_max(g))


def salience(x, r=0.5, lam=2, p=2):
    """Dilated-neighbourhood discrepancy with replicate padding; ``x[i][j]`` is a tuple of channels."""
    h, w = len(x), len(x[0])
    out = [[0.0] * w for _ in range(h)]
    for i in range(h):
        for j in range(w):
            s = 0.0
            for k1 in (-1, 0, 1):
                for k2 in (-1, 0, 1):
                    if k1 == 0 and k2 == 0:
                        continue
                    a = min(max(i + lam * k1, 0), h - 1)
                    b = min(max(j + lam * k2, 0), w - 1)
                    d = sum(abs(u - v) ** p for u, v in zip(x[a][b], x[i][j])) ** (1.0 / p)
                    s += math.exp(r * d) - 1.0
            out[i][j] = s
    return out


def mask_iou(a, b):
    inter = union = 0
    for ra, rb in zip(a, b):
        for u, v in zip(ra, rb):
            inter += bool(u) and bool(v)
            union += bool(u) or bool(v)
    return inter / union if union else 0.0


def exhaustive_best_matching(ious, threshold=0.5):
    """Best ``(count, total IoU)`` over every one-to-one assignment with IoU above threshold."""
    n_p = len(ious)
    n_g = len(ious[0]) if ious else 0
    best = (0, 0.0)
    for k in range(min(n_p, n_g) + 1):
        for preds in itertools.combinations(range(n_p), k):
            for gts in itertools.permutations(range(n_g), k):
                if all(ious[p][g] > threshold for p, g in zip(preds, gts)):
                    cand = (k, sum(ious[p][g] for p, g in zip(preds, gts)))
                    if cand[0] > best[0] or (cand[0] == best[0] and cand[1] > best[1] + 1e-12):
                        best = cand
    return best
