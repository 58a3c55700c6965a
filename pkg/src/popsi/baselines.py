"""ItemPop baseline and named ablation variants of the main model."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from popsi.data import HoldoutSets, InteractionTensor, SplitSpec, item_popularity, split_holdout
from popsi.linalg import SvdOptions
from popsi.metrics import EvalReport, evaluate
from popsi.model import RecommendationList, fit, rank_items, score_user

# variant name -> (use_si, use_pop); ItemPop has no fit flags
VARIANT_FLAGS = {
    "popsi_matrix": (False, False),
    "popsi_matrix_pop": (False, True),
    "popsi_tensor": (True, False),
    "popsi_full": (True, True),
}
VARIANT_NAMES = ("itempop",) + tuple(VARIANT_FLAGS)


def itempop_recommend(
    pop_counts: np.ndarray, u: int, K: int, exclude: set[int] = frozenset()
) -> RecommendationList:
    """Most-popular-first list, identical for every user before exclusion."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    return rank_items(np.asarray(pop_counts, dtype=float), u, K, exclude)


def train_item_sets(train: InteractionTensor) -> dict[int, set[int]]:
    """Per-user set of target-slice training items, for exclusion from ranked lists."""
    target = train.target.tocsr()
    out = {}
    for u in range(train.m1):
        row = target.indices[target.indptr[u] : target.indptr[u + 1]]
        if len(row):
            out[u] = set(row.tolist())
    return out


def run_variant(
    name: str,
    tensor: InteractionTensor,
    split: SplitSpec,
    r: int,
    p: float,
    k_values: Sequence[int] = (20, 50),
    svd_opts: SvdOptions | None = None,
    holdout: HoldoutSets | None = None,
    eval_positives: str = "test",
    exclude_train: bool = True,
) -> EvalReport:
    """Fit one named variant and evaluate it on the held-out positives."""
    if name not in VARIANT_NAMES:
        raise ValueError(f"unknown variant {name!r}; expected one of {VARIANT_NAMES}")
    if holdout is None:
        holdout = split_holdout(tensor, split)
    pop = item_popularity(holdout.train.target)
    positives = holdout.test_positives if eval_positives == "test" else holdout.val_positives
    exclude = train_item_sets(holdout.train) if exclude_train else None

    if name == "itempop":
        pop_f = pop.astype(float)
        score_fn = lambda u: pop_f
        use_si = use_pop = False
    else:
        use_si, use_pop = VARIANT_FLAGS[name]
        model = fit(
            holdout.train, r=r, p=p, use_si=use_si, use_pop=use_pop,
            opts=svd_opts or SvdOptions(rank=r, rng_seed=split.rng_seed),
            pop_counts=pop,
        )
        score_fn = lambda u: score_user(model, u)

    config = {
        "variant": name,
        "r": r,
        "p": p,
        "use_si": use_si,
        "use_pop": use_pop,
        "seed": split.rng_seed,
    }
    return evaluate(
        score_fn, positives, tensor.m1, pop, k_values, exclude=exclude, config=config
    )
