"""Ranking metrics: Recall@K, NDCG@K, Spearman correlation, and the PRI bias score."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata


@dataclass
class EvalReport:
    recall: dict[int, float]
    ndcg: dict[int, float]
    pri: float | None
    users_evaluated: int
    users_skipped_pri: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {}
        for k in sorted(self.recall):
            out[f"recall_at_{k}"] = self.recall[k]
        for k in sorted(self.ndcg):
            out[f"ndcg_at_{k}"] = self.ndcg[k]
        out["pri"] = self.pri
        out["users_evaluated"] = self.users_evaluated
        out["users_skipped_pri"] = self.users_skipped_pri
        out["config"] = self.config
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def recall_at_k(
    rec_lists: Mapping[int, Sequence[int]],
    test_positives: Mapping[int, Sequence[int]],
    n_users: int,
) -> float:
    """Mean over all n_users of |R_u@K ∩ T_u| / |T_u|; empty-T_u users contribute 0."""
    if n_users < 1:
        raise ValueError("need at least one user")
    total = 0.0
    for u, positives in test_positives.items():
        if not positives:
            continue
        hits = len(set(rec_lists.get(u, ())) & set(positives))
        total += hits / len(positives)
    return total / n_users


def ndcg_at_k(
    rec_lists: Mapping[int, Sequence[int]],
    test_positives: Mapping[int, Sequence[int]],
    n_users: int,
    K: int,
) -> float:
    """Mean NDCG@K with binary relevance; IDCG uses min(|T_u|, K) leading ones."""
    if n_users < 1:
        raise ValueError("need at least one user")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    discounts = 1.0 / np.log2(np.arange(2, K + 2))
    total = 0.0
    for u, positives in test_positives.items():
        if not positives:
            continue
        pos = set(positives)
        rel = np.array([1.0 if v in pos else 0.0 for v in rec_lists.get(u, ())[:K]])
        dcg = float(np.sum(rel * discounts[: len(rel)]))
        ideal = min(len(pos), K)
        idcg = float(np.sum(discounts[:ideal]))
        total += dcg / idcg
    return total / n_users


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or len(xs) < 2:
        raise ValueError("spearman needs two equal-length vectors of length >= 2")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise ValueError("spearman is undefined for a constant vector")
    rx = rankdata(xs, method="average")
    ry = rankdata(ys, method="average")
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float(rx @ ry / np.sqrt((rx @ rx) * (ry @ ry)))


def avg_rank_quantiles(
    score_fn: Callable[[int], np.ndarray],
    positives: Mapping[int, Sequence[int]],
) -> dict[int, float]:
    """Average rank-position quantile of each item within the Pos_u sets containing it.

    Rank is 1-based among Pos_u under descending score (ties by ascending
    item index); quantile = rank / |Pos_u|. Users with fewer than two
    positives carry no ranking signal and are skipped.
    """
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for u, pos in positives.items():
        if len(pos) < 2:
            continue
        pos = sorted(set(pos))
        scores = score_fn(u)
        order = sorted(pos, key=lambda v: (-scores[v], v))
        n = len(order)
        for rank, v in enumerate(order, start=1):
            sums[v] = sums.get(v, 0.0) + rank / n
            counts[v] = counts.get(v, 0) + 1
    return {v: sums[v] / counts[v] for v in sums}


def pri(quantiles: Mapping[int, float], pop_counts: np.ndarray) -> float:
    """Negative Spearman correlation between item popularity and average rank quantile."""
    items = sorted(quantiles)
    if len(items) < 2:
        raise ValueError("PRI needs at least 2 items with rank quantiles")
    pops = [float(pop_counts[v]) for v in items]
    ranks = [quantiles[v] for v in items]
    return -spearman(pops, ranks)


def evaluate(
    score_fn: Callable[[int], np.ndarray],
    test_positives: Mapping[int, Sequence[int]],
    n_users: int,
    pop_counts: np.ndarray,
    k_values: Sequence[int] = (20, 50),
    exclude: Mapping[int, set[int]] | None = None,
    config: dict | None = None,
) -> EvalReport:
    """Run the full metric suite for one scorer against held-out positives.

    `exclude` maps users to training items removed from their candidate
    lists before ranking (PRI ranks only within Pos_u and ignores it).
    """
    from popsi.model import rank_items

    k_max = max(k_values)
    rec_lists: dict[int, list[int]] = {}
    for u in test_positives:
        excl = exclude.get(u, set()) if exclude else set()
        rec_lists[u] = rank_items(score_fn(u), u, k_max, excl).items

    recall = {k: recall_at_k({u: r[:k] for u, r in rec_lists.items()}, test_positives, n_users)
              for k in k_values}
    ndcg = {k: ndcg_at_k(rec_lists, test_positives, n_users, k) for k in k_values}

    quantiles = avg_rank_quantiles(score_fn, test_positives)
    n_pri_users = sum(1 for pos in test_positives.values() if len(pos) >= 2)
    skipped = len(test_positives) - n_pri_users
    try:
        pri_value = pri(quantiles, pop_counts)
    except ValueError:
        pri_value = None
    return EvalReport(recall, ndcg, pri_value, n_users, skipped, config or {})
