"""Independent brute-force references. Nothing here imports the package
internals it checks; everything is plain loops over Python lists."""

from fractions import Fraction
from itertools import combinations
import math

import numpy as np


def density(w, x, y):
    total = 0.0
    for i in x:
        for j in y:
            total += float(w[i][j])
    return total / (len(x) * len(y))


def common_neighbours(adj, a, y1, y2):
    """|N(y1) & N(y2)| inside ``a`` for a 0/1 matrix, by set intersection."""
    n1 = {x for x in a if adj[x][y1]}
    n2 = {x for x in a if adj[x][y2]}
    return len(n1 & n2)


def avg_degree(w, a, b):
    total = 0.0
    for i in a:
        for j in b:
            total += float(w[i][j])
    # every edge counted once from each side, divided by 2n
    return 2 * total / (2 * len(a))


def deviation(w, a, b, y1, y2):
    d = avg_degree(w, a, b)
    common = sum(float(w[x][y1]) * float(w[x][y2]) for x in a)
    return common - d * d / len(a)


def set_deviation(w, a, b, ys):
    total = 0.0
    for y1 in ys:
        for y2 in ys:
            if y1 != y2:
                total += deviation(w, a, b, y1, y2)
    return total / (len(ys) ** 2)


def witness_ok(w, a, b, a_prime, b_prime, eps):
    n = len(a)
    bound = eps**4 * n / 4
    if len(a_prime) < bound or len(b_prime) < bound or not a_prime or not b_prime:
        return False
    if not set(a_prime) <= set(a) or not set(b_prime) <= set(b):
        return False
    return abs(density(w, a_prime, b_prime) - density(w, a, b)) >= eps**4


def rand_index(s, t):
    n = len(s)
    agree = 0
    pairs = 0
    for i, j in combinations(range(n), 2):
        pairs += 1
        agree += (s[i] == s[j]) == (t[i] == t[j])
    return agree / pairs


def pri(s, truths):
    """Pair sum with p_ij the fraction of truths that join i and j."""
    n = len(s)
    total = 0.0
    pairs = 0
    for i, j in combinations(range(n), 2):
        pairs += 1
        p = sum(1 for t in truths if t[i] == t[j]) / len(truths)
        c = 1.0 if s[i] == s[j] else 0.0
        total += c * p + (1 - c) * (1 - p)
    return total / pairs


def vi(s, t):
    n = len(s)
    joint = {}
    for u, v in zip(s, t):
        joint[(u, v)] = joint.get((u, v), 0) + 1
    ps, pt = {}, {}
    for (u, v), c in joint.items():
        ps[u] = ps.get(u, 0) + c
        pt[v] = pt.get(v, 0) + c
    h = lambda counts: -sum(c / n * math.log2(c / n) for c in counts)
    hs, ht = h(ps.values()), h(pt.values())
    mi = sum(c / n * math.log2((c / n) / ((ps[u] / n) * (pt[v] / n))) for (u, v), c in joint.items())
    return hs + ht - 2 * mi


def least_b(epsilon, t):
    """Smallest b >= t with 4^b > 600 (eps^4/16)^-5, in exact integer arithmetic."""
    eps = Fraction(epsilon)
    rhs = 600 * (Fraction(16) / eps**4) ** 5
    b = 0
    while 4**b <= rhs:
        b += 1
    return max(b, t)


def purity(labels, truth):
    """Fraction of labelled vertices sharing their cluster's majority truth; unlabelled (<0) count as misses."""
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    hits = 0
    for c in set(labels.tolist()):
        if c < 0:
            continue
        members = truth[labels == c]
        hits += np.bincount(members).max()
    return hits / truth.size


def class_purity(classes, truth):
    truth = np.asarray(truth)
    hits = sum(np.bincount(truth[c]).max() for c in classes)
    return hits / sum(len(c) for c in classes)
