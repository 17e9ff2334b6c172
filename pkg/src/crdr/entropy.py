"""Rate model for quantized latents: a fully factorized per-channel density.

Each latent channel gets a learned logistic distribution (location + scale);
the probability of an integer symbol is the density integrated over its unit
bin, CDF(s + 1/2) - CDF(s - 1/2). The same continuous model serves two
routes that must not be mixed up:

* training uses the continuous bin probabilities (differentiable),
* actual coding uses CDF tables quantized to 16-bit frequencies, so the
  encoder and decoder agree bit-exactly and never touch floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import torch
from torch import Tensor, nn

from .exceptions import DecodeError, EncodeError, ParameterError
from .rangecoder import TOTAL, RangeDecoder, RangeEncoder

LIKELIHOOD_FLOOR = 1e-9

#: logistic quantile beyond which tail mass < 1e-6 per side
TAIL_QUANTILE = math.log(1e6 - 1.0)

MAX_SYMBOLS_PER_CHANNEL = 4096


def bin_probability(symbols: Tensor, cdf: Callable[[Tensor], Tensor]) -> Tensor:
    """P(symbol) = CDF(s + 0.5) - CDF(s - 0.5), floored at 1e-9."""
    p = cdf(symbols + 0.5) - cdf(symbols - 0.5)
    return p.clamp_min(LIKELIHOOD_FLOOR)


def logistic_cdf(x: Tensor, loc: Tensor, scale: Tensor) -> Tensor:
    return torch.sigmoid((x - loc) / scale)


def likelihood(y_q: Tensor, loc: Tensor, scale: Tensor) -> Tensor:
    """Per-element bin probabilities of integer-valued ``y_q`` (B, C, h, w).

    ``loc`` and ``scale`` are per-channel (C,) logistic parameters.
    """
    if not torch.all(scale > 0):
        raise ParameterError("entropy model scale must be strictly positive")
    lv = loc.view(1, -1, 1, 1)
    sv = scale.view(1, -1, 1, 1)
    return bin_probability(y_q, lambda t: logistic_cdf(t, lv, sv))


def bits_from_probabilities(p: Tensor) -> Tensor:
    return -torch.log2(p).sum()


@dataclass(frozen=True)
class RateEstimate:
    bits: float
    bpp: float


def rate_estimate(y_q: Tensor, loc: Tensor, scale: Tensor, height: int, width: int) -> RateEstimate:
    bits = float(bits_from_probabilities(likelihood(y_q, loc, scale)))
    return RateEstimate(bits=bits, bpp=bits / (height * width))


class FactorizedEntropyModel(nn.Module):
    """Learned per-channel logistic density over quantized latent symbols."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.channels = channels
        self.loc = nn.Parameter(torch.zeros(channels))
        # softplus(raw) + floor keeps the scale strictly positive
        self.raw_scale = nn.Parameter(torch.zeros(channels))

    def scale(self) -> Tensor:
        return nn.functional.softplus(self.raw_scale) + 1e-6

    def likelihood(self, y_q: Tensor) -> Tensor:
        return likelihood(y_q, self.loc, self.scale())

    def bits(self, y_q: Tensor) -> Tensor:
        """Differentiable total bit estimate (training rate term)."""
        return bits_from_probabilities(self.likelihood(y_q))

    @torch.no_grad()
    def cdf_tables(self) -> list["CdfTable"]:
        loc = self.loc.detach().double().cpu().numpy()
        scale = self.scale().detach().double().cpu().numpy()
        return [build_cdf(float(l), float(s)) for l, s in zip(loc, scale)]


@dataclass(frozen=True)
class CdfTable:
    """Quantized coding table for one channel.

    ``cum`` has length (smax - smin + 2), starts at 0, ends at 2**16 and is
    strictly increasing (every symbol frequency >= 1).
    """

    smin: int
    smax: int
    cum: tuple[int, ...]

    def __post_init__(self) -> None:
        n = self.smax - self.smin + 1
        if n < 1 or len(self.cum) != n + 1:
            raise ParameterError("CDF table bounds inconsistent with table length")
        if self.cum[0] != 0 or self.cum[-1] != TOTAL:
            raise ParameterError("cumulative table must span [0, 2**16]")
        if any(b <= a for a, b in zip(self.cum, self.cum[1:])):
            raise ParameterError("cumulative table must be strictly increasing")

    @property
    def n_symbols(self) -> int:
        return self.smax - self.smin + 1

    def frequencies(self) -> list[int]:
        return [b - a for a, b in zip(self.cum, self.cum[1:])]


def quantize_pmf(p: np.ndarray, total: int = TOTAL) -> np.ndarray:
    """Quantize a pmf to integer frequencies summing to ``total``.

    Every symbol keeps frequency >= 1; the residual mass is distributed by
    largest remainder (ties broken toward lower index), so the result is
    deterministic.
    """
    k = len(p)
    if k > total:
        raise ParameterError("more symbols than available frequency mass")
    p = np.asarray(p, dtype=np.float64)
    p = p / p.sum()
    raw = p * (total - k)
    base = np.floor(raw).astype(np.int64) + 1
    deficit = total - int(base.sum())
    if deficit:
        remainders = raw - np.floor(raw)
        order = np.lexsort((np.arange(k), -remainders))
        base[order[:deficit]] += 1
    return base


def symbol_bounds(loc: float, scale: float) -> tuple[int, int]:
    half_width = max(1.0, TAIL_QUANTILE * scale)
    half_width = min(half_width, MAX_SYMBOLS_PER_CHANNEL / 2.0)
    smin = math.floor(loc - half_width)
    smax = math.ceil(loc + half_width)
    return smin, smax


def build_cdf(loc: float, scale: float, bounds: tuple[int, int] | None = None) -> CdfTable:
    """Quantized coding table for a logistic(loc, scale) channel."""
    if scale <= 0:
        raise ParameterError("entropy model scale must be strictly positive")
    smin, smax = bounds if bounds is not None else symbol_bounds(loc, scale)
    if smax < smin:
        raise ParameterError("empty symbol range")
    symbols = np.arange(smin, smax + 1, dtype=np.float64)
    upper = 1.0 / (1.0 + np.exp(-(symbols + 0.5 - loc) / scale))
    lower = 1.0 / (1.0 + np.exp(-(symbols - 0.5 - loc) / scale))
    pmf = np.maximum(upper - lower, LIKELIHOOD_FLOOR)
    freqs = quantize_pmf(pmf)
    cum = np.concatenate(([0], np.cumsum(freqs)))
    return CdfTable(smin=smin, smax=smax, cum=tuple(int(c) for c in cum))


def table_rate_bits(symbols: Sequence[int], table: CdfTable) -> float:
    """Ideal code length in bits under the quantized table's probabilities."""
    freqs = table.frequencies()
    bits = 0.0
    for s in symbols:
        bits += math.log2(TOTAL / freqs[s - table.smin])
    return bits


def clamp_symbols(y_q: np.ndarray, tables: Sequence[CdfTable]) -> np.ndarray:
    """Clip per-channel integer latents (C, h, w) into their coding bounds."""
    out = y_q.copy()
    for c, t in enumerate(tables):
        np.clip(out[c], t.smin, t.smax, out=out[c])
    return out


def encode_latent(y_q: np.ndarray, tables: Sequence[CdfTable]) -> bytes:
    """Range-code an integer latent (C, h, w), channel-major, one shared state."""
    channels = y_q.shape[0]
    if channels != len(tables):
        raise EncodeError("latent channel count does not match table count")
    enc = RangeEncoder()
    wrote = False
    for c in range(channels):
        t = tables[c]
        flat = y_q[c].ravel()
        if flat.size and (flat.min() < t.smin or flat.max() > t.smax):
            raise EncodeError(f"channel {c} has symbols outside [{t.smin}, {t.smax}]")
        for s in flat:
            enc.encode_symbol(t.cum, int(s) - t.smin)
            wrote = True
    return enc.finish() if wrote else b""


def decode_latent(data: bytes, tables: Sequence[CdfTable], shape: tuple[int, int, int]) -> np.ndarray:
    """Exact inverse of :func:`encode_latent` for a (C, h, w) latent."""
    channels, h, w = shape
    if channels != len(tables):
        raise DecodeError("latent channel count does not match table count")
    out = np.empty(shape, dtype=np.int64)
    if h * w == 0 or channels == 0:
        return out
    dec = RangeDecoder(data)
    for c in range(channels):
        t = tables[c]
        flat = out[c].reshape(-1)
        for i in range(h * w):
            flat[i] = dec.decode_symbol(t.cum) + t.smin
    return out
