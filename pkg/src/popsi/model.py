"""Core algorithm: unfoldings, subspace estimation, popularity debias, per-slice cores, scoring."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from popsi.data import InteractionTensor
from popsi.linalg import (
    ORTHO_TOL,
    SvdOptions,
    orthonormalize,
    project_out,
    spmm,
    spmm_t,
    truncated_svd_left,
)

DEFAULT_RANK = 200
DEFAULT_POPULAR_FRACTION = 0.2


@dataclass
class PopularityFeatures:
    p: float
    popular: np.ndarray  # bool, length m2
    P: sp.csr_matrix  # m2 x 2 one-hot: column 0 popular, column 1 less popular


@dataclass
class FeatureSpaces:
    W: np.ndarray  # m1 x r, orthonormal columns
    H: np.ndarray  # m2 x r' (r' <= r after refinement)
    r: int
    debiased: bool = False


@dataclass
class PreferenceModel:
    spaces: FeatureSpaces
    cores: list[np.ndarray]  # one r x r' core per slice (single core when use_si is off)
    behavior_labels: list[str]
    p: float
    use_si: bool
    use_pop: bool


@dataclass
class RecommendationList:
    user: int
    items: list[int]
    scores: list[float]
    truncated: bool = False  # fewer than K candidates were available


def unfold(tensor: InteractionTensor, mode: int) -> sp.csr_matrix:
    """Mode-1 unfolding [X^1 ... X^n] (m1 x m2*n) or mode-2 [X^1T ... X^nT] (m2 x m1*n)."""
    if mode == 1:
        return sp.hstack(tensor.slices, format="csr")
    if mode == 2:
        return sp.hstack([s.T.tocsr() for s in tensor.slices], format="csr")
    raise ValueError(f"unfolding mode must be 1 or 2, got {mode}")


def refold(unfolded: sp.spmatrix, mode: int, dims: tuple[int, int, int]) -> list[sp.csr_matrix]:
    """Inverse of `unfold`; returns the frontal slices."""
    m1, m2, n = dims
    u = unfolded.tocsc()
    if mode == 1:
        return [u[:, k * m2 : (k + 1) * m2].tocsr() for k in range(n)]
    if mode == 2:
        return [u[:, k * m1 : (k + 1) * m1].T.tocsr() for k in range(n)]
    raise ValueError(f"unfolding mode must be 1 or 2, got {mode}")


def build_popularity_features(pop_counts: np.ndarray, p: float) -> PopularityFeatures:
    """Label the top ceil(p*m2) items by interaction count as popular; ties by item index."""
    if not 0 < p < 1:
        raise ValueError(f"popular fraction p must lie in (0,1), got {p}")
    m2 = len(pop_counts)
    order = np.lexsort((np.arange(m2), -np.asarray(pop_counts)))
    n_popular = int(np.ceil(p * m2))
    popular = np.zeros(m2, dtype=bool)
    popular[order[:n_popular]] = True
    rows = np.arange(m2)
    cols = np.where(popular, 0, 1)
    P = sp.csr_matrix((np.ones(m2), (rows, cols)), shape=(m2, 2))
    return PopularityFeatures(p, popular, P)


def estimate_subspaces(tensor: InteractionTensor, r: int, opts: SvdOptions) -> FeatureSpaces:
    """User/item bases from the dominant left singular subspaces of the two unfoldings."""
    w_opts = SvdOptions(
        rank=r,
        oversample=opts.oversample,
        power_iters=opts.power_iters,
        rng_seed=opts.rng_seed,
        tol=opts.tol,
        max_iters=opts.max_iters,
    )
    h_opts = SvdOptions(
        rank=r,
        oversample=opts.oversample,
        power_iters=opts.power_iters,
        rng_seed=opts.rng_seed + 1,
        tol=opts.tol,
        max_iters=opts.max_iters,
    )
    W = truncated_svd_left(unfold(tensor, 1), w_opts)
    H = truncated_svd_left(unfold(tensor, 2), h_opts)
    return FeatureSpaces(W, H, r, debiased=False)


def debias_item_space(spaces: FeatureSpaces, P: sp.spmatrix) -> FeatureSpaces:
    """Project the item basis onto the orthogonal complement of range(P), then re-orthonormalize.

    Repeats the projection if rounding reintroduces a popularity component,
    so the returned basis always satisfies max|P^T H| <= ORTHO_TOL.
    """
    H = spaces.H
    for _ in range(3):
        H = orthonormalize(project_out(H, P))
        if np.max(np.abs(spmm_t(P.tocsr(), H))) <= ORTHO_TOL:
            break
    else:
        raise RuntimeError("debias projection failed to reach orthogonality tolerance")
    return FeatureSpaces(spaces.W, H, spaces.r, debiased=True)


def fit(
    tensor: InteractionTensor,
    r: int = DEFAULT_RANK,
    p: float = DEFAULT_POPULAR_FRACTION,
    use_si: bool = True,
    use_pop: bool = True,
    opts: SvdOptions | None = None,
    pop_counts: np.ndarray | None = None,
    log: dict | None = None,
) -> PreferenceModel:
    """Full fitting pipeline; ablation flags drop side information and/or the debias step.

    `pop_counts` defaults to the column counts of the target slice of `tensor`
    (pass training counts explicitly when fitting on a split). When `log` is
    given it is filled with per-step timings and the refined width.
    """
    import time

    if opts is None:
        opts = SvdOptions(rank=r)
    if not use_si:
        tensor = InteractionTensor(
            tensor.m1, tensor.m2, [tensor.target], [tensor.behavior_labels[0]]
        )
    t0 = time.perf_counter()
    spaces = estimate_subspaces(tensor, r, opts)
    t1 = time.perf_counter()
    if use_pop:
        if pop_counts is None:
            pop_counts = np.asarray(tensor.target.sum(axis=0)).ravel()
        features = build_popularity_features(pop_counts, p)
        spaces = debias_item_space(spaces, features.P)
    t2 = time.perf_counter()
    cores = [spmm_t(Xk, spaces.W).T @ spaces.H for Xk in tensor.slices]
    t3 = time.perf_counter()
    if log is not None:
        log["r"] = r
        log["r_refined"] = spaces.H.shape[1]
        log["steps"] = {
            "subspace_svd_seconds": t1 - t0,
            "debias_seconds": (t2 - t1) if use_pop else None,
            "debias_skipped": not use_pop,
            "cores_seconds": t3 - t2,
        }
    return PreferenceModel(spaces, cores, list(tensor.behavior_labels), p, use_si, use_pop)


def score_user(model: PreferenceModel, u: int, k: int = 0) -> np.ndarray:
    """Row u of W W^T X^k H H^T, computed as (W_u S^k) H^T."""
    W = model.spaces.W
    if not 0 <= u < W.shape[0]:
        raise IndexError(f"user index {u} out of range [0, {W.shape[0]})")
    return (W[u] @ model.cores[k]) @ model.spaces.H.T


def top_k(
    model: PreferenceModel,
    u: int,
    K: int,
    exclude: set[int] | frozenset[int] = frozenset(),
) -> RecommendationList:
    """K highest-scoring items for user u; ties broken by ascending item index."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    scores = score_user(model, u)
    return rank_items(scores, u, K, exclude)


def rank_items(
    scores: np.ndarray, u: int, K: int, exclude: set[int] | frozenset[int] = frozenset()
) -> RecommendationList:
    m2 = len(scores)
    if exclude:
        mask = np.ones(m2, dtype=bool)
        mask[list(exclude)] = False
        candidates = np.where(mask)[0]
    else:
        candidates = np.arange(m2)
    # stable sort on descending score keeps ascending-index tie order
    order = candidates[np.argsort(-scores[candidates], kind="stable")]
    chosen = order[:K]
    return RecommendationList(
        user=u,
        items=chosen.tolist(),
        scores=scores[chosen].tolist(),
        truncated=len(chosen) < K,
    )


# --- model container: 8-byte magic, u32 version, JSON metadata, raw float64 arrays ---

MODEL_MAGIC = b"POPSIMDL"
MODEL_VERSION = 1


def save_model(model: PreferenceModel, path) -> None:
    meta = {
        "m1": model.spaces.W.shape[0],
        "m2": model.spaces.H.shape[0],
        "r": model.spaces.r,
        "r_refined": model.spaces.H.shape[1],
        "debiased": model.spaces.debiased,
        "p": model.p,
        "use_si": model.use_si,
        "use_pop": model.use_pop,
        "behavior_labels": model.behavior_labels,
        "n_cores": len(model.cores),
        "core_shapes": [list(c.shape) for c in model.cores],
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<I", MODEL_VERSION))
        f.write(struct.pack("<I", len(meta_bytes)))
        f.write(meta_bytes)
        for arr in [model.spaces.W, model.spaces.H, *model.cores]:
            f.write(np.ascontiguousarray(arr, dtype=np.float64).tobytes())


def load_model(path) -> PreferenceModel:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MODEL_MAGIC:
            raise ValueError(f"not a model file (bad magic {magic!r})")
        (version,) = struct.unpack("<I", f.read(4))
        if version != MODEL_VERSION:
            raise ValueError(f"unsupported model version {version}")
        (meta_len,) = struct.unpack("<I", f.read(4))
        meta = json.loads(f.read(meta_len))
        m1, m2 = meta["m1"], meta["m2"]
        r, rr = meta["r"], meta["r_refined"]

        def read_array(shape):
            count = int(np.prod(shape))
            buf = f.read(count * 8)
            return np.frombuffer(buf, dtype=np.float64).reshape(shape).copy()

        W = read_array((m1, r))
        H = read_array((m2, rr))
        cores = [read_array(tuple(s)) for s in meta["core_shapes"]]
    spaces = FeatureSpaces(W, H, meta["r"], debiased=meta["debiased"])
    return PreferenceModel(
        spaces, cores, meta["behavior_labels"], meta["p"], meta["use_si"], meta["use_pop"]
    )
