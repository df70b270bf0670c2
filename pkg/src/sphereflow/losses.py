"""Similarity and sequence losses as pure value + gradient functions.

Latent vectors are plain 1D arrays; the ops validate finiteness and nonzero
norm at the boundary. Gradients are returned only for the branch arguments
(p); the target arguments (z) are contractually constant, which is what a
stop-gradient does in a training stack. Nothing here owns random state: the
augmentation scheduler consumes a caller-provided generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionMismatchError, InputError
from .geom import RotationSpec
from .rasters import FlowField
from .remap import rotate_flow

EXPONENT_CONVENTIONS = ("printed", "end-at-one")


def _latent(v, name):
    x = np.asarray(v, dtype=np.float64)
    if x.ndim != 1:
        raise InputError(f"{name} must be a 1D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name} has non-finite entries")
    n = np.linalg.norm(x)
    if n == 0.0:
        raise InputError(f"{name} has zero norm")
    return x, n


def neg_cosine(p, z) -> float:
    """Negative cosine similarity of two latent vectors, in [-1, 1]."""
    p, pn = _latent(p, "p")
    z, zn = _latent(z, "z")
    return float(-np.dot(p, z) / (pn * zn))


def neg_cosine_grad(p, z) -> np.ndarray:
    """Gradient of neg_cosine with respect to p (z held constant)."""
    p, pn = _latent(p, "p")
    z, zn = _latent(z, "z")
    u = p / pn
    w = z / zn
    return (np.dot(u, w) * u - w) / pn


def symmetrized_sim_loss(p_left, z_right, p_right, z_left) -> float:
    """Half the negative cosine of each cross pairing, summed."""
    return 0.5 * neg_cosine(p_left, z_right) + 0.5 * neg_cosine(p_right, z_left)


def symmetrized_sim_loss_grad(p_left, z_right, p_right, z_left):
    """Gradients w.r.t. (p_left, p_right); the z arguments are constants."""
    return (0.5 * neg_cosine_grad(p_left, z_right),
            0.5 * neg_cosine_grad(p_right, z_left))


def hybrid_loss(sim: float, flow: float) -> float:
    """Unweighted sum of the similarity and flow terms."""
    return sim + flow


@dataclass
class FlowSequence:
    """Ordered iterative predictions f_1..f_n, all with identical dims."""

    predictions: list

    def __post_init__(self):
        preds = [f if isinstance(f, FlowField) else FlowField(np.asarray(
            f, dtype=np.float64)) for f in self.predictions]
        if not preds:
            raise InputError("empty prediction sequence")
        shape = preds[0].data.shape
        for f in preds[1:]:
            if f.data.shape != shape:
                raise DimensionMismatchError("sequence dims differ")
        self.predictions = preds

    @property
    def n(self) -> int:
        return len(self.predictions)


def sequence_weights(n: int, gamma_base: float = 0.8,
                     convention: str = "printed") -> np.ndarray:
    """Per-iteration weights gamma^e(i) for i = 1..n.

    The printed convention uses e(i) = n - i - 1, which weights the final
    prediction by 1/gamma (1.25 at the default base); "end-at-one" uses
    e(i) = n - i so the last weight is exactly 1.
    """
    if convention not in EXPONENT_CONVENTIONS:
        raise ConfigError(f"unknown exponent convention {convention!r}")
    if n < 1:
        raise InputError("need at least one prediction")
    i = np.arange(1, n + 1, dtype=np.float64)
    e = n - i - 1.0 if convention == "printed" else n - i
    return gamma_base ** e


def sequence_flow_loss(seq, gt, r: RotationSpec, gamma_base: float = 0.8,
                       convention: str = "printed") -> float:
    """Weighted L1 distance of each prediction to the rotated ground truth.

    Per prediction: mean over valid pixels of |du| + |dv| against
    rotate_flow(gt, r), scaled by the sequence weight.
    """
    if not isinstance(seq, FlowSequence):
        seq = FlowSequence(seq)
    if not isinstance(gt, FlowField):
        gt = FlowField(np.asarray(gt, dtype=np.float64))
    target = rotate_flow(gt, r)
    if target.data.shape != seq.predictions[0].data.shape:
        raise DimensionMismatchError(
            f"gt dims {target.data.shape} do not match sequence "
            f"{seq.predictions[0].data.shape}")
    weights = sequence_weights(seq.n, gamma_base, convention)
    total = 0.0
    for f, wgt in zip(seq.predictions, weights):
        valid = np.ones(target.data.shape[:2], dtype=bool)
        if target.valid_mask is not None:
            valid &= target.valid_mask
        if f.valid_mask is not None:
            valid &= f.valid_mask
        if not valid.any():
            raise InputError("no valid pixels in sequence term")
        l1 = np.abs(target.data - f.data).sum(axis=-1)
        total += wgt * float(np.sum(l1[valid]) / np.count_nonzero(valid))
    return total


@dataclass(frozen=True)
class AugmentationPair:
    """Rotations for the two siamese branches; exactly one side is identity."""

    r1: RotationSpec
    r2: RotationSpec
    strategy: str

    def __post_init__(self):
        if self.strategy not in ("v1", "v2"):
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.r1.is_identity == self.r2.is_identity:
            raise InputError("exactly one branch rotation must be identity")


def _random_rotation(rng, angle_range):
    lo, hi = angle_range
    while True:
        r = RotationSpec(pitch=rng.uniform(lo, hi), roll=rng.uniform(lo, hi),
                         yaw=rng.uniform(lo, hi))
        if not r.is_identity:
            return r


def draw_augmentation(strategy: str, rng,
                      angle_range=(-math.pi, math.pi)) -> AugmentationPair:
    """Draw branch rotations: v1 always leaves the first branch unrotated,
    v2 picks the unrotated side uniformly per draw."""
    if strategy not in ("v1", "v2"):
        raise ConfigError(f"unknown strategy {strategy!r}")
    identity = RotationSpec(0.0, 0.0, 0.0)
    if strategy == "v1":
        return AugmentationPair(identity, _random_rotation(rng, angle_range),
                                "v1")
    left_identity = bool(rng.integers(0, 2))
    rot = _random_rotation(rng, angle_range)
    if left_identity:
        return AugmentationPair(identity, rot, "v2")
    return AugmentationPair(rot, identity, "v2")


def latent_channel_std(batch) -> np.ndarray:
    """Per-channel std of an L2-row-normalized latent batch.

    A healthy batch of spread-out unit latents concentrates near 1/sqrt(D);
    a collapsed batch reads near 0.
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2:
        raise InputError(f"batch must be (N, D), got shape {x.shape}")
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise InputError("zero-norm latent in batch")
    return np.std(x / norms, axis=0)
