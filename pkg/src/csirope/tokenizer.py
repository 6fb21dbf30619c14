"""3D patch tokenization and the three masking patterns.

A CSI array is zero-padded up to whole patches, cut into non-overlapping
(p_t, p_k, p_u) blocks in t-major order (then k, then u), and each block is
flattened to a real vector with real/imag interleaved per element. Every
token keeps its integer patch coordinate (t_m, k_m, u_m); a validity mask
marking padded elements travels with the grid so padding can be excluded
from losses and error metrics downstream.

Masking conventions: `random` draws floor(ratio * L) token ids without
replacement; `temporal` masks the last ceil(ratio * G_t) patch rows along t
(history first, predict the future), `frequency` analogously along k
(observe the lower band, extrapolate upward).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import ContractError
from .channel import CsiArray


@dataclass(frozen=True)
class PatchSpec:
    p_t: int = 4
    p_k: int = 4
    p_u: int = 4

    def __post_init__(self):
        if min(self.p_t, self.p_k, self.p_u) < 1:
            raise ContractError(f"patch extents must be >= 1, got {self}")

    @property
    def elements(self) -> int:
        return self.p_t * self.p_k * self.p_u

    @property
    def token_dim(self) -> int:
        return 2 * self.elements


@dataclass
class TokenGrid:
    """Patch tokens of one CSI array plus coordinates and padding mask."""

    tokens: np.ndarray  # (L, D_in) float64, real/imag interleaved
    coords: np.ndarray  # (L, 3) int patch indices
    grid_extents: tuple
    patch: PatchSpec
    source_extents: tuple
    valid: np.ndarray  # (L, D_in) bool, False on zero-padded elements

    @property
    def n_tokens(self) -> int:
        return self.tokens.shape[0]

    @property
    def token_dim(self) -> int:
        return self.tokens.shape[1]


@dataclass
class MaskSpec:
    """Disjoint masked/visible partition of the token ids of one grid."""

    kind: str
    ratio: float
    masked_ids: np.ndarray
    visible_ids: np.ndarray
    rng_seed: int | None = None

    def describe(self) -> str:
        return (
            f"kind={self.kind} ratio={self.ratio!r} seed={self.rng_seed}"
            f" masked={len(self.masked_ids)} visible={len(self.visible_ids)}"
        )


def grid_shape(extents, patch: PatchSpec) -> tuple:
    t, k, u = extents
    return (-(-t // patch.p_t), -(-k // patch.p_k), -(-u // patch.p_u))


def _to_patch_matrix(arr: np.ndarray, patch: PatchSpec, grid) -> np.ndarray:
    gt, gk, gu = grid
    blocks = arr.reshape(gt, patch.p_t, gk, patch.p_k, gu, patch.p_u)
    blocks = blocks.transpose(0, 2, 4, 1, 3, 5)
    return blocks.reshape(gt * gk * gu, patch.elements)


def tokenize(h, patch: PatchSpec = PatchSpec()) -> TokenGrid:
    """Cut a CSI array into patch tokens; non-divisible extents are zero-padded."""
    arr = h.h if isinstance(h, CsiArray) else np.asarray(h, dtype=np.complex128)
    if arr.ndim != 3:
        raise ContractError(f"expected a (T,K,U) array, got shape {arr.shape}")
    source = arr.shape
    grid = grid_shape(source, patch)
    padded_extents = (grid[0] * patch.p_t, grid[1] * patch.p_k, grid[2] * patch.p_u)
    padded = np.zeros(padded_extents, dtype=np.complex128)
    padded[: source[0], : source[1], : source[2]] = arr
    validity = np.zeros(padded_extents, dtype=bool)
    validity[: source[0], : source[1], : source[2]] = True

    complex_tokens = _to_patch_matrix(padded, patch, grid)
    tokens = np.empty((complex_tokens.shape[0], patch.token_dim))
    tokens[:, 0::2] = complex_tokens.real
    tokens[:, 1::2] = complex_tokens.imag
    valid = np.repeat(_to_patch_matrix(validity, patch, grid), 2, axis=1)

    ids = np.arange(complex_tokens.shape[0])
    coords = np.stack(np.unravel_index(ids, grid), axis=1)
    return TokenGrid(tokens, coords, grid, patch, source, valid)


def detokenize(grid: TokenGrid, tokens: np.ndarray | None = None, padded: bool = False) -> np.ndarray:
    """Inverse of tokenize; crops the zero padding unless padded=True."""
    tokens = grid.tokens if tokens is None else np.asarray(tokens)
    if tokens.shape != (grid.n_tokens, grid.token_dim):
        raise ContractError(
            f"tokens shape {tokens.shape} != grid ({grid.n_tokens}, {grid.token_dim})"
        )
    patch = grid.patch
    complex_tokens = tokens[:, 0::2] + 1j * tokens[:, 1::2]
    gt, gk, gu = grid.grid_extents
    blocks = complex_tokens.reshape(gt, gk, gu, patch.p_t, patch.p_k, patch.p_u)
    arr = blocks.transpose(0, 3, 1, 4, 2, 5).reshape(
        gt * patch.p_t, gk * patch.p_k, gu * patch.p_u
    )
    if padded:
        return arr
    t, k, u = grid.source_extents
    return arr[:t, :k, :u]


def element_region(grid: TokenGrid, token_ids: np.ndarray) -> np.ndarray:
    """Boolean (T,K,U) region covered by the given tokens, padding excluded."""
    marker = np.zeros((grid.n_tokens, grid.token_dim))
    marker[token_ids] = 1.0
    region = np.abs(detokenize(grid, marker)) > 0.5
    return region


def build_mask(grid: TokenGrid, kind: str, ratio: float, rng_seed: int = 0) -> MaskSpec:
    """Deterministic mask partition; see module docstring for conventions."""
    if not 0.0 < ratio < 1.0:
        raise ContractError(f"mask ratio must lie in (0,1), got {ratio}")
    n = grid.n_tokens
    ids = np.arange(n)
    if kind == "random":
        count = int(np.floor(ratio * n))
        if count < 1 or count >= n:
            raise ContractError(f"random mask of {count}/{n} tokens is degenerate")
        rng = np.random.default_rng(np.random.SeedSequence((rng_seed, n)))
        masked = np.sort(rng.choice(n, size=count, replace=False))
    elif kind in ("temporal", "frequency"):
        axis = 0 if kind == "temporal" else 1
        extent = grid.grid_extents[axis]
        rows = int(np.ceil(ratio * extent))
        if rows < 1 or rows >= extent:
            raise ContractError(
                f"{kind} mask of {rows}/{extent} patch rows is degenerate"
            )
        masked = ids[grid.coords[:, axis] >= extent - rows]
    else:
        raise ContractError(f"unknown mask kind {kind!r}")
    visible = np.setdiff1d(ids, masked)
    return MaskSpec(kind, ratio, masked, visible, rng_seed)
