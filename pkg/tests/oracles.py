"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the code under test beyond plain data types.
"""

import itertools
import math

import numpy as np


def naive_matmul(a, b):
    n, m = len(a), len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(len(b)):
                s += a[i][t] * b[t][j]
            out[i][j] = s
    return np.array(out)


def naive_mlp(layers, x):
    """``layers`` is a list of (W, b, activation)."""
    h = np.asarray(x, dtype=float)
    for w, b, act in layers:
        h = naive_matmul(h.tolist(), w.tolist()) + b
        if act == "relu":
            h = np.where(h > 0, h, 0.0)
    return h


def pair_distances(z):
    b = len(z)
    d = np.zeros((b, b))
    for i in range(b):
        for j in range(b):
            d[i, j] = math.sqrt(sum((z[i][t] - z[j][t]) ** 2 for t in range(len(z[i]))))
    return d


def contrastive_by_pairs(z, labels, mode="full"):
    d = pair_distances(z)
    pos = [(i, j) for i in range(len(z)) for j in range(len(z)) if i != j and labels[i] == labels[j]]
    neg = [(i, j) for i in range(len(z)) for j in range(len(z)) if labels[i] != labels[j]]
    loss = 0.0
    if mode != "negative_only" and pos:
        loss += sum(d[i, j] for i, j in pos) / len(pos)
    if mode != "positive_only" and neg:
        loss -= sum(d[i, j] for i, j in neg) / len(neg)
    return loss


def central_difference(f, x, h=1e-5):
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + h
        fp = f(x)
        x[idx] = old - h
        fm = f(x)
        x[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def rel_error(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(1e-12, np.max(np.abs(a)), np.max(np.abs(b))))


def brute_force_assignment(m):
    """Best total over all injective row->column maps of a rectangular matrix."""
    m = np.asarray(m)
    r, c = m.shape
    best = 0
    if r <= c:
        for cols in itertools.permutations(range(c), r):
            best = max(best, sum(m[i, cols[i]] for i in range(r)))
    else:
        for rows in itertools.permutations(range(r), c):
            best = max(best, sum(m[rows[j], j] for j in range(c)))
    return best


def brute_force_nnc(q, q2):
    """Agreement under the best injective relabeling of ``q2`` onto ``q``."""
    a, b = sorted(set(q)), sorted(set(q2))
    best = 0
    targets = a + [None] * max(0, len(b) - len(a))
    for perm in itertools.permutations(targets, len(b)):
        mapping = dict(zip(b, perm))
        best = max(best, sum(1 for s, t in zip(q, q2) if mapping[t] == s))
    return best / len(q)


def adjacency_by_rule(a):
    """Dense O(K^2) evaluation of the three-clause adjacency rule."""
    k = len(a)
    g = np.zeros((k, k), dtype=bool)
    for i in range(k):
        for j in range(k):
            if i != j and (j == a[i] or a[j] == i or a[i] == a[j]):
                g[i, j] = True
    return g


def components_by_bfs(g):
    k = len(g)
    comp = [-1] * k
    n = 0
    for s in range(k):
        if comp[s] >= 0:
            continue
        comp[s] = n
        stack = [s]
        while stack:
            u = stack.pop()
            for v in range(k):
                if g[u, v] and comp[v] < 0:
                    comp[v] = n
                    stack.append(v)
        n += 1
    return comp, n


def brute_force_neighbors(c):
    k = len(c)
    out = []
    for i in range(k):
        best, best_j = math.inf, -1
        for j in range(k):
            if j == i:
                continue
            d = sum((c[i][t] - c[j][t]) ** 2 for t in range(len(c[i])))
            if d < best:
                best, best_j = d, j
        out.append(best_j)
    return out


def entropy_nmi(p, q):
    n = len(p)

    def h(labels):
        counts = {}
        for v in labels:
            counts[v] = counts.get(v, 0) + 1
        return -sum(c / n * math.log(c / n) for c in counts.values())

    joint = {}
    for a, b in zip(p, q):
        joint[(a, b)] = joint.get((a, b), 0) + 1
    pa = {a: sum(1 for v in p if v == a) / n for a in set(p)}
    pb = {b: sum(1 for v in q if v == b) / n for b in set(q)}
    mi = sum(c / n * math.log((c / n) / (pa[a] * pb[b])) for (a, b), c in joint.items())
    return mi / math.sqrt(h(p) * h(q))


def pairwise_f(pred, truth):
    n = len(pred)
    tp = fp = fn = 0
    for i in range(n):
        for j in range(i + 1, n):
            same_p, same_t = pred[i] == pred[j], truth[i] == truth[j]
            tp += same_p and same_t
            fp += same_p and not same_t
            fn += same_t and not same_p
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
