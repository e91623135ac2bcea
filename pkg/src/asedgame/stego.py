"""Cost-based ternary embedding simulator and parametric adversarial embedding.

Messages are never actually coded: every element is changed by +1, 0 or -1
independently, with the probabilities that minimize expected distortion for the
requested payload (the usual payload-limited sender simulation).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from . import kernels

ENTROPY_TOL = 0.01
MAX_BISECTIONS = 60
COST_EPS = 0.1
WET = np.inf

HIGHPASS_3X3 = np.array([[-1.0, 2.0, -1.0], [2.0, -4.0, 2.0], [-1.0, 2.0, -1.0]])


class CapacityError(ValueError):
    """Requested payload exceeds what the available elements can carry."""


@dataclass(frozen=True, eq=False)
class CoverImage:
    """8-bit grayscale image, at least 8x8."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or min(px.shape) < 8:
            raise ValueError(f"cover must be a 2-D array of at least 8x8, got {px.shape}")
        if not np.all(np.isfinite(px)) or np.any(px != np.round(px)):
            raise ValueError("cover pixels must be integers")
        if px.min() < 0 or px.max() > 255:
            raise ValueError("cover pixels must lie in [0, 255]")
        px = px.astype(np.int16)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def shape(self) -> tuple:
        return self.pixels.shape

    def __array__(self, dtype=None, copy=None):
        return self.pixels.astype(dtype) if dtype is not None else self.pixels


def _pixels(img) -> np.ndarray:
    return img.pixels if isinstance(img, CoverImage) else np.asarray(img)


@dataclass(frozen=True, eq=False)
class CostMap:
    """Per-element costs of a +1 and of a -1 change (no change costs 0)."""

    rho_plus: np.ndarray
    rho_minus: np.ndarray

    def __post_init__(self):
        rp = np.ascontiguousarray(self.rho_plus, dtype=float)
        rm = np.ascontiguousarray(self.rho_minus, dtype=float)
        if rp.shape != rm.shape:
            raise ValueError("rho_plus and rho_minus shapes differ")
        for r in (rp, rm):
            if np.any(np.isnan(r)) or np.any(r < 0) or np.any(r == -np.inf):
                raise ValueError("costs must be nonnegative (or +inf for wet elements)")
        object.__setattr__(self, "rho_plus", rp)
        object.__setattr__(self, "rho_minus", rm)

    @property
    def shape(self) -> tuple:
        return self.rho_plus.shape

    def take(self, flat_idx) -> "CostMap":
        return CostMap(self.rho_plus.ravel()[flat_idx], self.rho_minus.ravel()[flat_idx])

    def capacity(self) -> float:
        """Largest payload in bits these elements can carry."""
        options = 1 + np.isfinite(self.rho_plus).astype(int) + np.isfinite(self.rho_minus).astype(int)
        return float(np.sum(np.log2(options)))


@dataclass(frozen=True, eq=False)
class ChangeProbabilities:
    pi_plus: np.ndarray
    pi_minus: np.ndarray

    @property
    def pi_zero(self) -> np.ndarray:
        return 1.0 - self.pi_plus - self.pi_minus

    def entropy(self) -> float:
        h = 0.0
        for p in (self.pi_plus, self.pi_minus, self.pi_zero):
            nz = p > 0
            h -= float(np.sum(p[nz] * np.log2(p[nz])))
        return h


@dataclass(frozen=True, eq=False)
class GroupSplit:
    common_indices: np.ndarray
    adjustable_indices: np.ndarray
    beta: float


def round_half_away(x: float) -> int:
    x = round(x, 9)
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def hp_reciprocal_costs(cover) -> CostMap:
    px = _pixels(cover).astype(float)
    resid = ndimage.correlate(px, HIGHPASS_3X3, mode="mirror")
    rho = 1.0 / (np.abs(resid) + COST_EPS)
    rho_plus = np.where(px >= 255, WET, rho)
    rho_minus = np.where(px <= 0, WET, rho)
    return CostMap(rho_plus, rho_minus)


COST_MODELS: dict[str, Callable] = {"hp-reciprocal": hp_reciprocal_costs}


def compute_costs(cover, model: str = "hp-reciprocal") -> CostMap:
    """Initial embedding costs; saturated pixels are wet in the blocked direction."""
    try:
        fn = COST_MODELS[model]
    except KeyError:
        raise ValueError(f"unknown cost model {model!r}; known: {sorted(COST_MODELS)}") from None
    return fn(cover)


def _probs(lam: float, costs: CostMap) -> ChangeProbabilities:
    if math.isinf(lam):
        z = np.zeros(costs.shape)
        return ChangeProbabilities(z, z.copy())
    pp, pm = kernels.ternary_probs(lam, costs.rho_plus, costs.rho_minus)
    return ChangeProbabilities(pp, pm)


def fit_lambda(costs: CostMap, target_bits: float) -> tuple[float, ChangeProbabilities]:
    """Find the Gibbs parameter whose change probabilities carry ``target_bits``.

    Bisection on lambda (entropy decreases monotonically in it), stopping once
    the total entropy is within ``ENTROPY_TOL`` bits or after ``MAX_BISECTIONS``
    steps. Zero payload maps to ``lambda = inf`` (no changes at all).
    """
    cap = costs.capacity()
    if target_bits < 0 or target_bits > cap + 1e-9:
        raise CapacityError(f"target {target_bits:.3f} bits outside [0, {cap:.3f}]")
    if target_bits == 0:
        return math.inf, _probs(math.inf, costs)
    rp, rm = costs.rho_plus, costs.rho_minus
    if kernels.ternary_entropy(0.0, rp, rm) - target_bits <= ENTROPY_TOL:
        return 0.0, _probs(0.0, costs)

    lo, hi = 0.0, 1.0
    while kernels.ternary_entropy(hi, rp, rm) > target_bits:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:  # pragma: no cover - only with degenerate all-zero costs
            break
    lam = hi
    for _ in range(MAX_BISECTIONS):
        lam = 0.5 * (lo + hi)
        h = kernels.ternary_entropy(lam, rp, rm)
        if abs(h - target_bits) <= ENTROPY_TOL:
            break
        if h > target_bits:
            lo = lam
        else:
            hi = lam
    return lam, _probs(lam, costs)


def _apply_changes(flat: np.ndarray, idx, probs: ChangeProbabilities, u: np.ndarray) -> None:
    pp = probs.pi_plus.ravel()
    pm = probs.pi_minus.ravel()
    delta = np.where(u < pp, 1, np.where(u < pp + pm, -1, 0))
    flat[idx] = np.clip(flat[idx] + delta, 0, 255)


def simulate_embedding(cover, costs: CostMap, target_bits: float, rng: np.random.Generator) -> np.ndarray:
    """Embed ``target_bits`` by independent +-1 changes at the optimal probabilities."""
    px = _pixels(cover)
    if costs.shape != px.shape:
        raise ValueError("cost map and cover shapes differ")
    u = rng.random(px.size)
    _, probs = fit_lambda(costs, target_bits)
    out = px.astype(np.int16).ravel().copy()
    _apply_changes(out, slice(None), probs, u)
    return out.reshape(px.shape)


def split_groups(n: int, beta: float, rng: np.random.Generator) -> GroupSplit:
    """Random partition into ``round(n (1 - beta))`` common and the remaining adjustable elements."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    l1 = round_half_away(n * (1.0 - beta))
    perm = rng.permutation(n)
    return GroupSplit(np.sort(perm[:l1]), np.sort(perm[l1:]), float(beta))


def modulate_costs(costs: CostMap, input_grad, scale: float = 2.0) -> CostMap:
    """Bias costs toward the direction that lowers the detector's loss.

    Where the negative gradient is positive, +1 becomes cheaper (divided by
    ``scale``) and -1 dearer (multiplied); the reverse where it is negative.
    Zero-gradient elements keep their costs.
    """
    g = -np.asarray(input_grad, dtype=float)
    if g.shape != costs.shape:
        raise ValueError("gradient and cost map shapes differ")
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient has non-finite entries")
    if not scale > 1:
        raise ValueError("scale must exceed 1")
    up = np.where(g > 0, 1.0 / scale, np.where(g < 0, scale, 1.0))
    down = np.where(g > 0, scale, np.where(g < 0, 1.0 / scale, 1.0))
    return CostMap(costs.rho_plus * up, costs.rho_minus * down)


def p_adv_emb(cover, beta: float, k_bits: float, detector, rng: np.random.Generator,
              cost_model: str = "hp-reciprocal", scale: float = 2.0,
              costs: Optional[CostMap] = None) -> np.ndarray:
    """Adversarial embedding with a fixed adjustable fraction ``beta``.

    A share ``1 - beta`` of the payload goes into the common group with the
    initial costs. The detector's gradient at that intermediate image (target
    label cover) then biases the adjustable group's costs before the rest of
    the payload is embedded there.
    """
    from .detector import input_gradient

    px = _pixels(cover)
    n = px.size
    if costs is None:
        costs = compute_costs(cover, cost_model)
    # one uniform per element: each element is embedded into exactly once
    u = rng.random(n)
    split = split_groups(n, beta, rng)
    adj = split.adjustable_indices
    k1 = round_half_away(k_bits * (1.0 - beta)) if adj.size else k_bits
    k2 = k_bits - k1

    out = px.astype(np.int16).ravel().copy()
    common = split.common_indices
    if common.size:
        _, probs = fit_lambda(costs.take(common), k1)
        _apply_changes(out, common, probs, u[common])
    elif k1 > 0:
        raise CapacityError("payload assigned to an empty common group")

    if adj.size == 0:
        if k2 > 1e-9:
            raise CapacityError("payload assigned to an empty adjustable group")
        return out.reshape(px.shape)

    z_c = out.reshape(px.shape)
    grad = input_gradient(detector, z_c, 0)
    biased = modulate_costs(costs, grad, scale)
    _, probs = fit_lambda(biased.take(adj), k2)
    _apply_changes(out, adj, probs, u[adj])
    return out.reshape(px.shape)


def adv_emb_minimal_beta(cover, k_bits: float, detector, delta_beta: float,
                         rng: np.random.Generator, **kwargs):
    """Smallest beta on the ``delta_beta`` ladder whose stego the detector calls cover.

    Returns ``(stego, beta)``; when no beta up to 1 works, returns the last
    attempt with ``beta=None``.
    """
    from .detector import forward

    if not delta_beta > 0:
        raise ValueError("delta_beta must be positive")
    costs = kwargs.pop("costs", None)
    if costs is None:
        costs = compute_costs(cover, kwargs.get("cost_model", "hp-reciprocal"))
    stego = None
    steps = int(math.floor(1.0 / delta_beta + 1e-9))
    for i in range(steps + 1):
        beta = min(1.0, round(i * delta_beta, 12))
        stego = p_adv_emb(cover, beta, k_bits, detector, rng, costs=costs, **kwargs)
        if forward(detector, stego) < 0.5:
            return stego, beta
    return stego, None


def synthetic_cover(rng: np.random.Generator, shape=(64, 64)) -> np.ndarray:
    """Smoothed-noise grayscale image with random texture scale, contrast and grain."""
    h, w = shape
    sigma = rng.uniform(1.5, 4.0)
    field = ndimage.gaussian_filter(rng.standard_normal((h + 16, w + 16)), sigma, mode="wrap")
    field = field[8:8 + h, 8:8 + w]
    field = (field - field.mean()) / (field.std() + 1e-12)
    img = rng.uniform(70, 180) + rng.uniform(15, 45) * field
    img += rng.uniform(0.0, 0.3) * rng.standard_normal(shape)
    return np.clip(np.round(img), 0, 255).astype(np.int16)


def read_pgm(path) -> CoverImage:
    from PIL import Image

    with Image.open(path) as im:
        if im.mode != "L":
            raise ValueError(f"{path}: expected 8-bit grayscale, got mode {im.mode}")
        return CoverImage(np.asarray(im, dtype=np.int16))


def write_pgm(path, image) -> None:
    from PIL import Image

    px = _pixels(image)
    Image.fromarray(np.asarray(px, dtype=np.uint8), mode="L").save(Path(path), format="PPM")
