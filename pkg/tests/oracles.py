"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written as direct formula evaluation
with explicit loops, separate from the library's vectorized code paths.
"""

from __future__ import annotations

import math
import re

import numpy as np

_WORD = re.compile(r"\w+")


def _tokens(text):
    return _WORD.findall(text.lower())


def bm25_reference(query, document, corpus, k1=1.5, b=0.75):
    """Direct BM25 evaluation: idf = ln(1 + (N - df + 0.5) / (df + 0.5))."""
    corpus_tokens = [_tokens(d) for d in corpus]
    n_docs = len(corpus)
    avgdl = sum(len(t) for t in corpus_tokens) / n_docs
    doc_tokens = _tokens(document)
    dl = len(doc_tokens)
    score = 0.0
    for term in _tokens(query):
        f = doc_tokens.count(term)
        if f == 0:
            continue
        df = sum(1 for toks in corpus_tokens if term in toks)
        idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
        denom = f + k1 * (1.0 - b + b * dl / avgdl) if avgdl > 0 else f + k1
        score += idf * f * (k1 + 1.0) / denom
    return score


def softmax_reference(scores):
    """Scalar softmax with max shift."""
    m = max(scores)
    exps = [math.exp(s - m) for s in scores]
    total = sum(exps)
    return [e / total for e in exps]


def cosine_reference(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return dot / (na * nb)


def relevance_rule_reference(probs, threshold):
    """Direct re-evaluation of the margin rule.

    Returns (is_relevant, subgroup_index, margin); the winning stance is
    the first argmax, and a margin within 1e-12 of the threshold does not
    count as exceeding it.
    """
    j = 0
    for i in (1, 2):
        if probs[i] > probs[j]:
            j = i
    others = [probs[i] for i in range(3) if i != j]
    margin = probs[j] - max(others)
    return margin > threshold + 1e-12, j, margin


def greedy_kl_reference(candidates, k, v, epsilon=1e-6):
    """Re-simulation of the greedy KL selection.

    ``candidates`` is a list of (cid, subgroup_index, margin, order)
    tuples; returns the ordered list of (cid, kl) choices.  The KL is
    recomputed from scratch at every step by direct summation.
    """
    v_s = [x + epsilon for x in v]
    total = sum(v_s)
    v_s = [x / total for x in v_s]
    counts = [epsilon, epsilon, epsilon]
    remaining = list(candidates)
    chosen = []
    while len(chosen) < k and remaining:
        best_key = None
        best = None
        for cand in remaining:
            cid, sub, margin, order = cand
            u = list(counts)
            u[sub] += 1.0
            s = sum(u)
            u = [x / s for x in u]
            terms = [u[j] * np.log(u[j] / v_s[j]) for j in range(3)]
            d = (terms[0] + terms[1]) + terms[2]
            key = (d, -margin, order)
            if best_key is None or key < best_key:
                best_key, best = key, cand
        chosen.append((best[0], best_key[0]))
        counts[best[1]] += 1.0
        remaining.remove(best)
    return chosen


def macro_f1_reference(preds, golds):
    """Confusion-matrix macro F1 with the zero convention, by loops."""
    confusion = [[0] * 3 for _ in range(3)]
    for p, g in zip(preds, golds):
        confusion[g][p] += 1
    f1s = []
    for c in range(3):
        tp = confusion[c][c]
        n_pred = sum(confusion[r][c] for r in range(3))
        n_gold = sum(confusion[c][r] for r in range(3))
        precision = tp / n_pred if n_pred else 0.0
        recall = tp / n_gold if n_gold else 0.0
        f1s.append(2 * precision * recall / (precision + recall)
                   if precision + recall > 0 else 0.0)
    return f1s, sum(f1s) / 3.0


def forward_reference(imp, exp, params):
    """Scalar-loop forward pass through the two heads and output layer."""
    d_e = len(imp)
    d_d = params.d_d
    h = []
    for j in range(d_d):
        z = params.b_imp[j] + sum(imp[i] * params.w_imp[i, j] for i in range(d_e))
        h.append(max(z, 0.0))
    for j in range(d_d):
        z = params.b_exp[j] + sum(exp[i] * params.w_exp[i, j] for i in range(d_e))
        h.append(max(z, 0.0))
    logits = []
    for c in range(3):
        z = params.b_out[c] + sum(h[i] * params.w_out[i, c] for i in range(2 * d_d))
        logits.append(z)
    return softmax_reference(logits)


def pack_blocks(blocks):
    """Flatten named arrays into one vector plus a restore recipe."""
    names = list(blocks)
    vec = np.concatenate([blocks[n].ravel() for n in names])
    shapes = [(n, blocks[n].shape) for n in names]
    return vec, shapes


def unpack_into(vec, shapes, blocks):
    """Write a flat vector back into the named arrays in place."""
    offset = 0
    for name, shape in shapes:
        size = int(np.prod(shape)) if shape else 1
        blocks[name][...] = vec[offset:offset + size].reshape(shape)
        offset += size


def central_difference(f, x0, eps=1e-5):
    """Central finite-difference gradient of a scalar function."""
    grad = np.zeros_like(x0)
    for i in range(x0.size):
        plus = x0.copy()
        minus = x0.copy()
        plus[i] += eps
        minus[i] -= eps
        grad[i] = (f(plus) - f(minus)) / (2.0 * eps)
    return grad


def pairwise_max_cosine(source_vectors, eval_vectors):
    """Exhaustive max cosine of each source vector against all eval
    vectors, scalar arithmetic only."""
    out = []
    for sv in source_vectors:
        best = -1.0
        for ev in eval_vectors:
            best = max(best, cosine_reference(list(sv), list(ev)))
        out.append(best)
    return out
