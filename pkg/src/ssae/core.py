"""The shrinking sparse autoencoder: forward pass, pruning, cost, gradient.

Three layers.  A sphered frame d (length N) is mapped to hidden
activations h = tanh(W1 d + b1) (length L), the L - K smallest-magnitude
activations are zeroed ("shrinking"), the survivors are rounded to a few
decimal places, and the output layer reconstructs
d_hat = tanh(W2 s + b2).

The training objective over T frames is

    (1/T) sum_u 0.5 * ||d_hat_u - d_u||^2
  + (gamma/T) sum_u sum_j log10(1 + h_uj^2)

where the penalty acts on the pre-shrink activations and nominates units
for pruning.  Backpropagation treats the pruning mask and the rounding as
fixed pieces of the forward pass: reconstruction error flows only into
the surviving units, rounding passes gradients through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SsaeParams",
    "SsaeGradient",
    "hidden_activation",
    "shrink",
    "shrink_mask",
    "round_code",
    "reconstruct",
    "cost",
    "gradient",
]

_LN10 = float(np.log(10.0))


@dataclass
class SsaeParams:
    """Weights and biases: w1 is (L, N), b1 (L,), w2 (N, L), b2 (N,)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise ValueError("weight matrices must be 2-D")
        L, N = self.w1.shape
        if self.w2.shape != (N, L):
            raise ValueError(
                f"w2 must be {(N, L)} to mirror w1 {self.w1.shape}, got {self.w2.shape}"
            )
        if self.b1.shape != (L,):
            raise ValueError(f"b1 must have shape ({L},), got {self.b1.shape}")
        if self.b2.shape != (N,):
            raise ValueError(f"b2 must have shape ({N},), got {self.b2.shape}")
        for name in ("w1", "b1", "w2", "b2"):
            if not np.isfinite(getattr(self, name)).all():
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def n_visible(self) -> int:
        return self.w1.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.w1.shape[0]

    def to_vector(self) -> np.ndarray:
        """Flatten all parameters into one vector (w1, b1, w2, b2 order)."""
        return np.concatenate(
            [self.w1.ravel(), self.b1, self.w2.ravel(), self.b2]
        )

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_visible: int, n_hidden: int) -> "SsaeParams":
        vec = np.asarray(vec, dtype=np.float64)
        N, L = n_visible, n_hidden
        expected = L * N + L + N * L + N
        if vec.shape != (expected,):
            raise ValueError(f"expected {expected} entries, got {vec.shape}")
        i = 0
        w1 = vec[i : i + L * N].reshape(L, N)
        i += L * N
        b1 = vec[i : i + L]
        i += L
        w2 = vec[i : i + N * L].reshape(N, L)
        i += N * L
        b2 = vec[i : i + N]
        return cls(w1=w1.copy(), b1=b1.copy(), w2=w2.copy(), b2=b2.copy())


@dataclass
class SsaeGradient:
    """Partial derivatives of the cost, shaped exactly like SsaeParams."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.w1.ravel(), self.b1, self.w2.ravel(), self.b2]
        )


def hidden_activation(params: SsaeParams, d: np.ndarray) -> np.ndarray:
    """Pre-shrink hidden activation h = tanh(W1 d + b1).

    Accepts a single frame (N,) or a batch (T, N); the hidden axis is last.
    """
    d = np.asarray(d, dtype=np.float64)
    if d.shape[-1] != params.n_visible:
        raise ValueError(
            f"frame length {d.shape[-1]} does not match n_visible {params.n_visible}"
        )
    return np.tanh(d @ params.w1.T + params.b1)


def shrink_mask(h: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the k largest-magnitude entries along the last axis.

    Ties keep the lower index (stable sort on descending magnitude).
    """
    h = np.asarray(h, dtype=np.float64)
    L = h.shape[-1]
    if not 1 <= k <= L:
        raise ValueError(f"k must be in [1, {L}], got {k}")
    mask = np.zeros(h.shape, dtype=bool)
    if k == L:
        mask[...] = True
        return mask
    order = np.argsort(-np.abs(h), axis=-1, kind="stable")
    np.put_along_axis(mask, order[..., :k], True, axis=-1)
    return mask


def shrink(h: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest-magnitude entries at their exact values, zero the rest."""
    h = np.asarray(h, dtype=np.float64)
    return np.where(shrink_mask(h, k), h, 0.0)


def round_code(s: np.ndarray, places: int = 3) -> np.ndarray:
    """Round each entry to `places` decimals, halves away from zero.

    Exact zeros stay zero, so the nonzero count never increases.
    """
    if places < 0:
        raise ValueError(f"places must be >= 0, got {places}")
    s = np.asarray(s, dtype=np.float64)
    f = 10.0 ** places
    return np.sign(s) * np.floor(np.abs(s) * f + 0.5) / f


def reconstruct(params: SsaeParams, s: np.ndarray) -> np.ndarray:
    """Output-layer reconstruction d_hat = tanh(W2 s + b2) from a sparse code."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape[-1] != params.n_hidden:
        raise ValueError(
            f"code length {s.shape[-1]} does not match n_hidden {params.n_hidden}"
        )
    return np.tanh(s @ params.w2.T + params.b2)


def _check_batch(params: SsaeParams, D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=np.float64)
    if D.ndim == 1:
        D = D[None, :]
    if D.ndim != 2 or D.shape[1] != params.n_visible:
        raise ValueError(
            f"expected frames of length {params.n_visible}, got shape {D.shape}"
        )
    if D.shape[0] == 0:
        raise ValueError("empty training batch")
    return D


def _forward(params, D, k, rounding_places):
    H = np.tanh(D @ params.w1.T + params.b1)
    mask = shrink_mask(H, k)
    S = np.where(mask, H, 0.0)
    if rounding_places is not None:
        S = round_code(S, rounding_places)
    D_hat = np.tanh(S @ params.w2.T + params.b2)
    return H, mask, S, D_hat


def cost(
    params: SsaeParams,
    D: np.ndarray,
    gamma: float,
    k: int,
    rounding_places: int | None = 3,
) -> float:
    """Mean reconstruction error plus the activation sparsity penalty.

    rounding_places=None skips code rounding; pass None when checking
    gradients against finite differences, since rounding is a staircase.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    D = _check_batch(params, D)
    T = D.shape[0]
    H, _, _, D_hat = _forward(params, D, k, rounding_places)
    recon = 0.5 * float(np.sum((D_hat - D) ** 2)) / T
    penalty = gamma * float(np.sum(np.log10(1.0 + H * H))) / T
    return recon + penalty


def gradient(
    params: SsaeParams,
    D: np.ndarray,
    gamma: float,
    k: int,
    rounding_places: int | None = 3,
) -> SsaeGradient:
    """Backpropagated gradient of cost(), averaged over the batch.

    The pruning mask is frozen from the forward pass, so reconstruction
    error reaches only the k surviving units of each frame; rounding is
    treated as the identity.  The penalty term
    d/dh log10(1 + h^2) = 2h / ((1 + h^2) ln 10) reaches every unit
    through the first-layer tanh derivative.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    D = _check_batch(params, D)
    T = D.shape[0]
    H, mask, S, D_hat = _forward(params, D, k, rounding_places)

    err = D_hat - D
    delta2 = err * (1.0 - D_hat * D_hat)           # (T, N)
    g_w2 = delta2.T @ S / T                        # (N, L)
    g_b2 = delta2.sum(axis=0) / T                  # (N,)

    back = delta2 @ params.w2                      # (T, L)
    dh = np.where(mask, back, 0.0)                 # pruned units get nothing
    dh = dh + gamma * (2.0 * H) / ((1.0 + H * H) * _LN10)
    delta1 = dh * (1.0 - H * H)                    # (T, L)
    g_w1 = delta1.T @ D / T                        # (L, N)
    g_b1 = delta1.sum(axis=0) / T                  # (L,)

    return SsaeGradient(w1=g_w1, b1=g_b1, w2=g_w2, b2=g_b2)
