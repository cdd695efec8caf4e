"""Piecewise-constant pulses on a uniform sample grid.

Samples sit at slot midpoints ``t_k = (k + 1/2) dt``. Amplitudes are
dimensionless; the Hamiltonian model owns the conversion to a Rabi rate.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BadShapeParams, ValidationError

DEFAULT_BOUNDS = (-1.0, 1.0)
UNIPOLAR_BOUNDS = (0.0, 1.0)
SHAPES = ("drag", "gaussian_square", "sine", "constant", "random")


@dataclass(frozen=True, eq=False)
class PulseProgram:
    dt: float
    labels: tuple
    amplitudes: np.ndarray  # (n_channels, n_slots)
    bounds: dict = field(default_factory=dict)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=float)
        if amps.ndim == 1:
            amps = amps[None, :]
        if amps.ndim != 2 or amps.shape[0] != len(self.labels):
            raise ValidationError(
                f"amplitudes shape {amps.shape} does not match {len(self.labels)} channel(s)")
        if amps.shape[1] < 1:
            raise ValidationError("a pulse needs at least one slot")
        if not np.all(np.isfinite(amps)):
            raise ValidationError("pulse samples must be finite")
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError(f"duplicate channel labels in {self.labels}")
        bounds = {lab: tuple(float(b) for b in self.bounds.get(lab, DEFAULT_BOUNDS))
                  for lab in self.labels}
        for i, lab in enumerate(self.labels):
            lo, hi = bounds[lab]
            if lo > hi:
                raise ValidationError(f"channel {lab}: lower bound {lo} above upper bound {hi}")
            if np.any(amps[i] < lo) or np.any(amps[i] > hi):
                raise ValidationError(f"channel {lab}: samples outside bounds [{lo}, {hi}]")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_slots(self):
        return self.amplitudes.shape[1]

    @property
    def n_channels(self):
        return self.amplitudes.shape[0]

    @property
    def duration(self):
        return self.n_slots * self.dt

    @property
    def channels(self):
        return tuple(zip(self.labels, self.amplitudes))

    def lower_upper(self):
        """Per-sample lower and upper bound arrays, shaped like ``amplitudes``."""
        lo = np.array([self.bounds[lab][0] for lab in self.labels])[:, None]
        hi = np.array([self.bounds[lab][1] for lab in self.labels])[:, None]
        shape = self.amplitudes.shape
        return np.broadcast_to(lo, shape).copy(), np.broadcast_to(hi, shape).copy()

    def clip(self, amps):
        lo, hi = self.lower_upper()
        return np.clip(np.reshape(amps, self.amplitudes.shape), lo, hi)

    def with_amplitudes(self, amps):
        """New program with the same grid and bounds; ``amps`` is clipped into bounds."""
        return PulseProgram(self.dt, self.labels, self.clip(amps), self.bounds)

    def channel(self, label):
        return self.amplitudes[self.labels.index(label)]

    def to_dict(self):
        return {
            "dt_ns": self.dt,
            "channels": [{"label": lab, "samples": [float(s) for s in amps]}
                         for lab, amps in self.channels],
            "bounds": {lab: [lo, hi] for lab, (lo, hi) in self.bounds.items()},
        }

    @classmethod
    def from_dict(cls, doc):
        try:
            labels = tuple(ch["label"] for ch in doc["channels"])
            samples = [ch["samples"] for ch in doc["channels"]]
            lengths = {len(s) for s in samples}
            if len(lengths) != 1:
                raise ValidationError("all channels must have the same number of samples")
            bounds = {lab: tuple(b) for lab, b in doc.get("bounds", {}).items()}
            return cls(float(doc["dt_ns"]), labels, np.array(samples, dtype=float), bounds)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed pulse document: {exc}") from None


@dataclass(frozen=True)
class ShapeSpec:
    """Analytic initial shape.

    ``sigma`` and ``width`` are in ns; ``None`` picks a default relative to the
    pulse duration (``T/6`` for DRAG, ``T/10`` edges for the Gaussian square,
    whose flat top then fills the rest). ``beta`` scales the DRAG quadrature.
    """

    kind: str = "drag"
    amplitude: float = 0.1
    sigma: float = None
    beta: float = 0.2
    width: float = None
    periods: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SHAPES:
            raise BadShapeParams(f"unknown shape {self.kind!r}; expected one of {SHAPES}")
        if self.sigma is not None and not self.sigma > 0:
            raise BadShapeParams(f"sigma must be positive, got {self.sigma}")
        if self.width is not None and self.width < 0:
            raise BadShapeParams(f"flat-top width must be non-negative, got {self.width}")


def slot_times(n_slots, dt):
    return (np.arange(n_slots) + 0.5) * dt


def _lifted_gaussian(t, center, sigma):
    g = np.exp(-0.5 * ((t - center) / sigma) ** 2)
    edge = np.exp(-0.5 * (center / sigma) ** 2)
    return (g - edge) / (1.0 - edge)


def _gaussian_square(t, total, sigma, width):
    rise = 0.5 * (total - width)
    out = np.ones_like(t)
    left = t < rise
    right = t > rise + width
    out[left] = np.exp(-0.5 * ((t[left] - rise) / sigma) ** 2)
    out[right] = np.exp(-0.5 * ((t[right] - rise - width) / sigma) ** 2)
    return out


def _quadrature_partner(label, labels):
    """Label of the Y channel paired with an X channel, if present."""
    if label.startswith("X"):
        partner = "Y" + label[1:]
        if partner in labels:
            return partner
    return None


def make_initial(shape, n_slots, dt, channels, bounds=None):
    """Sample ``shape`` on ``n_slots`` midpoints and clip into ``bounds``.

    ``bounds`` maps label to ``(lo, hi)``; missing labels get ``[-1, 1]``.
    DRAG puts the Gaussian on each ``X*`` channel and ``beta`` times its
    sigma-scaled derivative on the matching ``Y*`` channel.
    """
    if n_slots < 1:
        raise BadShapeParams(f"n_slots must be >= 1, got {n_slots}")
    channels = tuple(channels)
    bounds = {lab: tuple((bounds or {}).get(lab, DEFAULT_BOUNDS)) for lab in channels}
    for lab, (lo, hi) in bounds.items():
        span = hi - lo
        if shape.amplitude > hi + 0.1 * span or shape.amplitude < lo - 0.1 * span:
            raise BadShapeParams(
                f"amplitude {shape.amplitude} lies more than 10% outside bounds "
                f"[{lo}, {hi}] of channel {lab}")

    total = n_slots * dt
    t = slot_times(n_slots, dt)
    A = shape.amplitude
    amps = np.zeros((len(channels), n_slots))

    if shape.kind == "constant":
        amps[:] = A
    elif shape.kind == "sine":
        amps[:] = A * np.sin(2.0 * np.pi * shape.periods * t / total)
    elif shape.kind == "gaussian_square":
        sigma = shape.sigma or total / 10.0
        width = shape.width if shape.width is not None else max(total - 4.0 * sigma, 0.0)
        if width > total:
            raise BadShapeParams(f"flat-top width {width} exceeds pulse duration {total}")
        amps[:] = A * _gaussian_square(t, total, sigma, width)
    elif shape.kind == "drag":
        sigma = shape.sigma or total / 6.0
        g = _lifted_gaussian(t, 0.5 * total, sigma)
        quad = -shape.beta * (t - 0.5 * total) / sigma * np.exp(
            -0.5 * ((t - 0.5 * total) / sigma) ** 2)
        partners = {_quadrature_partner(lab, channels) for lab in channels} - {None}
        for i, lab in enumerate(channels):
            if lab in partners:
                amps[i] = A * quad
            else:
                amps[i] = A * g
    elif shape.kind == "random":
        rng = np.random.default_rng(shape.seed)
        for i, lab in enumerate(channels):
            lo, hi = bounds[lab]
            amps[i] = rng.uniform(max(lo, -abs(A)), min(hi, abs(A)), size=n_slots)

    lo = np.array([bounds[lab][0] for lab in channels])[:, None]
    hi = np.array([bounds[lab][1] for lab in channels])[:, None]
    return PulseProgram(dt, channels, np.clip(amps, lo, hi), bounds)


def resample(p, new_n_slots):
    """Nearest-neighbour resampling onto ``new_n_slots`` slots of the same ``dt``.

    Output slot ``k`` copies input slot ``floor(k * n / new_n)``, so the shape is
    stretched or compressed in time while staying piecewise constant.
    """
    if new_n_slots < 1:
        raise ValidationError(f"new_n_slots must be >= 1, got {new_n_slots}")
    src = (np.arange(new_n_slots) * p.n_slots) // new_n_slots
    return PulseProgram(p.dt, p.labels, p.amplitudes[:, src], p.bounds)
