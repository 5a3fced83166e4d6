"""Compensated summation helpers.

The moving-average sums that build fractional paths combine O(n^3) terms
of mixed magnitude, so plain left-to-right accumulation is not good
enough for the tight algebraic identities asserted elsewhere.  Strategy:
products are reduced in fixed-size chunks with numpy's pairwise
summation, and chunk partials are combined exactly (``math.fsum``) or
with Neumaier compensation when accumulating whole arrays.
"""

from __future__ import annotations

import math

import numpy as np

CHUNK = 4096


def compensated_dot(weights: np.ndarray, values: np.ndarray) -> float:
    """Accurate dot product: chunked pairwise partials combined exactly."""
    w = np.asarray(weights, dtype=float)
    v = np.asarray(values, dtype=float)
    if w.shape != v.shape:
        raise ValueError("weights and values must have identical shape")
    parts = [
        float(np.sum(w[i : i + CHUNK] * v[i : i + CHUNK]))
        for i in range(0, w.size, CHUNK)
    ]
    return math.fsum(parts)


def compensated_sum(values: np.ndarray) -> float:
    v = np.asarray(values, dtype=float)
    parts = [float(np.sum(v[i : i + CHUNK])) for i in range(0, v.size, CHUNK)]
    return math.fsum(parts)


def neumaier_add(total: np.ndarray, comp: np.ndarray, term: np.ndarray) -> None:
    """In-place compensated accumulation of ``term`` into ``total`` (+ ``comp``)."""
    t = total + term
    big = np.abs(total) >= np.abs(term)
    comp += np.where(big, (total - t) + term, (term - t) + total)
    total[...] = t


def compensated_matmul(weights: np.ndarray, columns: np.ndarray, chunk: int = CHUNK) -> np.ndarray:
    """``weights @ columns`` with Neumaier compensation across column chunks.

    Within a chunk the BLAS product is already accurate (<= ``chunk``
    terms); compensation removes the error of combining many chunks.
    """
    w = np.asarray(weights, dtype=float)
    c = np.asarray(columns, dtype=float)
    out = np.zeros((w.shape[0], c.shape[1]))
    comp = np.zeros_like(out)
    for k in range(0, w.shape[1], chunk):
        neumaier_add(out, comp, w[:, k : k + chunk] @ c[k : k + chunk, :])
    return out + comp
