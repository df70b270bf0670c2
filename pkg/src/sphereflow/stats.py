"""Dataset characterization: luminance, spectrum, derivative shape, flow.

Frames are converted to grayscale (BT.601) before anything else. Histograms
clip out-of-range samples into the edge bins so counts always sum to the
sample count. Kurtosis is the Pearson ratio mu4 / sigma^4, so a Gaussian
reads 3; constant inputs have no defined value and are reported as None.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .rasters import FlowField, to_gray

SPECTRUM_FIT_BAND = (0.02, 0.35)  # cycles/pixel

FLOW_BIN_EDGES = {
    "u": np.linspace(-50.0, 50.0, 101),
    "v": np.linspace(-50.0, 50.0, 101),
    "s": np.linspace(0.0, 50.0, 101),
    "theta": np.linspace(-math.pi, math.pi, 65),
    "du": np.linspace(-10.0, 10.0, 101),
    "dv": np.linspace(-10.0, 10.0, 101),
}


def _frame_list(frames):
    if isinstance(frames, np.ndarray) and frames.ndim in (2, 3):
        frames = [frames]
    out = [np.asarray(f) for f in frames]
    if not out or any(f.size == 0 for f in out):
        raise InputError("no frame data")
    return out


def _gray_255(frame):
    g = to_gray(frame)
    if frame.dtype == np.uint8:
        return g
    # float frames carry [0, 1] values
    return g * 255.0


def luminance_histogram(frames):
    """256-bin grayscale intensity counts pooled over all frames."""
    counts = np.zeros(256, dtype=np.int64)
    for frame in _frame_list(frames):
        g = np.rint(_gray_255(frame)).astype(np.int64)
        np.clip(g, 0, 255, out=g)
        counts += np.bincount(g.ravel(), minlength=256)
    return counts


def _centered_even_square(g, crop, allow_smaller):
    n = min(g.shape)
    if n < crop:
        if not allow_smaller:
            raise InputError(f"frame {g.shape} smaller than crop {crop}")
        crop = n - (n % 2)
    if crop < 8:
        raise InputError("frame too small for a spectrum estimate")
    r0 = (g.shape[0] - crop) // 2
    c0 = (g.shape[1] - crop) // 2
    return g[r0:r0 + crop, c0:c0 + crop], crop


def power_spectrum_slope(frames, crop: int = 512, allow_smaller: bool = True):
    """Radially averaged power spectrum of center crops, plus fitted slope.

    Each frame is mean-removed, Hann windowed and transformed; squared
    magnitudes are averaged over rings of integer radius (cycles per window)
    and across frames. The slope is a least-squares fit of log power against
    log frequency over the band 0.02 to 0.35 cycles/pixel.

    Returns (profile, slope); profile records frequencies in cycles/pixel,
    ring-averaged power and the crop actually used.
    """
    frames = _frame_list(frames)
    accum = None
    used = None
    for frame in frames:
        g, n = _centered_even_square(_gray_255(frame), crop, allow_smaller)
        if used is None:
            used = n
        elif n != used:
            raise InputError("frames disagree on usable crop size")
        g = g - g.mean()
        win = np.hanning(n)
        g = g * win[:, None] * win[None, :]
        power = np.abs(np.fft.fft2(g)) ** 2
        fx = np.fft.fftfreq(n) * n
        radius = np.rint(np.hypot(fx[:, None], fx[None, :])).astype(np.int64)
        ring = np.bincount(radius.ravel(), weights=power.ravel())
        ring_n = np.bincount(radius.ravel())
        prof = ring[:n // 2 + 1] / np.maximum(ring_n[:n // 2 + 1], 1)
        accum = prof if accum is None else accum + prof
    profile_power = accum / len(frames)
    freq = np.arange(profile_power.size) / used
    lo, hi = SPECTRUM_FIT_BAND
    sel = (freq >= lo) & (freq <= hi) & (profile_power > 0)
    if np.count_nonzero(sel) < 2:
        raise InputError("no usable frequency band for the slope fit")
    slope = float(np.polyfit(np.log10(freq[sel]),
                             np.log10(profile_power[sel]), 1)[0])
    profile = {"freq": freq, "power": profile_power, "crop_used": used,
               "fit_band": SPECTRUM_FIT_BAND}
    return profile, slope


def kurtosis(samples):
    """Pearson kurtosis mu4 / sigma^4; None when the variance vanishes."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise InputError("no samples")
    mean = x.mean()
    x = x - mean
    var = np.mean(x * x)
    # constant data leaves rounding residue, not an exact zero variance
    if var <= (1e-12 * max(1.0, abs(mean))) ** 2:
        return None
    return float(np.mean(x ** 4) / var ** 2)


def derivative_kurtosis(frames):
    """Kurtosis of spatial and temporal grayscale derivatives.

    Spatial pools interior central differences along both axes of every
    frame; temporal pools consecutive frame differences. Either value is
    None when undefined (constant input, or fewer than two frames for the
    temporal part).
    """
    grays = [_gray_255(f) for f in _frame_list(frames)]
    spatial = []
    for g in grays:
        if g.shape[1] >= 3:
            spatial.append(((g[:, 2:] - g[:, :-2]) / 2.0).ravel())
        if g.shape[0] >= 3:
            spatial.append(((g[2:, :] - g[:-2, :]) / 2.0).ravel())
    if not spatial:
        raise InputError("frames too small for spatial derivatives")
    spatial_k = kurtosis(np.concatenate(spatial))
    temporal_k = None
    if len(grays) >= 2:
        diffs = [(b - a).ravel() for a, b in zip(grays, grays[1:])]
        temporal_k = kurtosis(np.concatenate(diffs))
    return spatial_k, temporal_k


def _clipped_hist(values, edges):
    v = np.clip(values.ravel(), edges[0], edges[-1])
    counts, _ = np.histogram(v, bins=edges)
    return counts.astype(np.int64)


def flow_statistics(flows):
    """Histograms of flow components, speed, direction and flow derivatives.

    Direction is atan2(v, u) with the zero vector assigned direction 0.
    Returns {name: {"edges": array, "counts": array}} with the fixed bin
    edges from FLOW_BIN_EDGES.
    """
    if isinstance(flows, (FlowField, np.ndarray)):
        flows = [flows]
    arrays = []
    for f in flows:
        data = f.data if isinstance(f, FlowField) else np.asarray(
            f, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] != 2:
            raise InputError(f"flow must be (H, W, 2), got {data.shape}")
        arrays.append(data)
    if not arrays:
        raise InputError("no flow data")

    pools = {name: [] for name in FLOW_BIN_EDGES}
    for data in arrays:
        u, v = data[..., 0], data[..., 1]
        s = np.hypot(u, v)
        theta = np.arctan2(v, u)
        theta = np.where(s == 0.0, 0.0, theta)
        pools["u"].append(u.ravel())
        pools["v"].append(v.ravel())
        pools["s"].append(s.ravel())
        pools["theta"].append(theta.ravel())
        for name, comp in (("du", u), ("dv", v)):
            if comp.shape[1] >= 3:
                pools[name].append(((comp[:, 2:] - comp[:, :-2]) / 2).ravel())
            if comp.shape[0] >= 3:
                pools[name].append(((comp[2:, :] - comp[:-2, :]) / 2).ravel())

    out = {}
    for name, edges in FLOW_BIN_EDGES.items():
        if not pools[name]:
            continue
        out[name] = {"edges": edges.copy(),
                     "counts": _clipped_hist(np.concatenate(pools[name]), edges)}
    return out


@dataclass
class StatsReport:
    """Aggregated dataset statistics; every histogram conserves sample mass."""

    luminance_hist: np.ndarray
    spectrum_profile: dict
    spectrum_slope: float
    spatial_kurtosis: float | None
    temporal_kurtosis: float | None
    flow_hists: dict = field(default_factory=dict)
    kurtosis_convention: str = "pearson"

    def to_json(self, indent=None) -> str:
        def listify(x):
            return np.asarray(x).tolist()

        doc = {
            "luminance_hist": listify(self.luminance_hist),
            "power_spectrum": {
                "freq": listify(self.spectrum_profile["freq"]),
                "power": listify(self.spectrum_profile["power"]),
                "crop_used": self.spectrum_profile["crop_used"],
                "fit_band": list(self.spectrum_profile["fit_band"]),
                "slope": self.spectrum_slope,
            },
            "spatial_kurtosis": self.spatial_kurtosis,
            "temporal_kurtosis": self.temporal_kurtosis,
            "kurtosis_convention": self.kurtosis_convention,
            "flow_histograms": {
                name: {"edges": listify(h["edges"]),
                       "counts": listify(h["counts"])}
                for name, h in self.flow_hists.items()
            },
        }
        return json.dumps(doc, indent=indent)


def build_stats_report(frames, flows=None, crop: int = 512) -> StatsReport:
    """Run the full characterization over frames and optional flows."""
    lum = luminance_histogram(frames)
    profile, slope = power_spectrum_slope(frames, crop=crop)
    spatial_k, temporal_k = derivative_kurtosis(frames)
    flow_hists = flow_statistics(flows) if flows is not None else {}
    return StatsReport(luminance_hist=lum, spectrum_profile=profile,
                       spectrum_slope=slope, spatial_kurtosis=spatial_k,
                       temporal_kurtosis=temporal_k, flow_hists=flow_hists)
