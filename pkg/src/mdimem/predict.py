"""Prediction of the witness versus storage time.

Chain: memory parameters -> stored-photon signal probability -> signal to
noise ratio -> depolarizing strength ``p(t)`` -> ``<W>(t)``. A second route
evaluates the witness from measured process matrices.

Times are in microseconds throughout.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np
import yaml

from . import bsm as bsm_mod
from . import channels, game
from .errors import InvalidArgument, InvalidChi, UndefinedSNR

MODE_STRATEGIES = ("mean", "min", "per-mode")


@dataclass(frozen=True)
class MemoryParams:
    P_ph: float
    eta_opt: float
    eta_det: float
    eta_m0: tuple[float, float]
    tau_m: tuple[float, float]
    P_noise: float
    V: float

    def __post_init__(self):
        object.__setattr__(self, "eta_m0", tuple(float(v) for v in self.eta_m0))
        object.__setattr__(self, "tau_m", tuple(float(v) for v in self.tau_m))
        for name in ("P_ph", "eta_opt", "eta_det", "P_noise", "V"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidArgument(f"{name} must lie in [0, 1], got {v}")
        if len(self.eta_m0) != 2 or len(self.tau_m) != 2:
            raise InvalidArgument("eta_m0 and tau_m need one entry per spatial mode (2)")
        for v in self.eta_m0:
            if not 0.0 <= v <= 1.0:
                raise InvalidArgument(f"eta_m0 entries must lie in [0, 1], got {v}")
        for v in self.tau_m:
            if not v > 0:
                raise InvalidArgument(f"tau_m entries must be positive, got {v}")

    @classmethod
    def from_dict(cls, d: dict) -> "MemoryParams":
        fields = {"P_ph", "eta_opt", "eta_det", "eta_m0", "tau_m", "P_noise", "V"}
        unknown = set(d) - fields
        if unknown:
            raise InvalidArgument(f"unknown memory parameter(s): {', '.join(sorted(unknown))}")
        missing = fields - set(d)
        if missing:
            raise InvalidArgument(f"missing memory parameter(s): {', '.join(sorted(missing))}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eta_m0"] = list(self.eta_m0)
        d["tau_m"] = list(self.tau_m)
        return d


def default_config() -> dict:
    """The bundled fixture with the measured memory parameters."""
    text = resources.files("mdimem").joinpath("data/defaults.yaml").read_text()
    return yaml.safe_load(text)


def reference_params() -> MemoryParams:
    return MemoryParams.from_dict(default_config()["memory_params"])


def storage_efficiency(t: float, eta0: float, tau: float) -> float:
    """Retrieval efficiency after storing for ``t``: ``eta0 exp(-t²/τ²)``."""
    if t < 0:
        raise InvalidArgument(f"storage time must be nonnegative, got {t}")
    if tau <= 0:
        raise InvalidArgument("lifetime must be positive")
    return eta0 * math.exp(-(t * t) / (tau * tau))


def mode_efficiency(t: float, params: MemoryParams, strategy: str = "mean"):
    effs = [storage_efficiency(t, e, tau) for e, tau in zip(params.eta_m0, params.tau_m)]
    if strategy == "mean":
        return sum(effs) / len(effs)
    if strategy == "min":
        return min(effs)
    if strategy == "per-mode":
        return tuple(effs)
    raise InvalidArgument(f"unknown mode strategy {strategy!r}; expected one of {MODE_STRATEGIES}")


def signal_probability(t: float, params: MemoryParams, strategy: str = "mean"):
    eta = mode_efficiency(t, params, strategy)
    scale = params.P_ph * params.eta_opt * params.eta_det
    if isinstance(eta, tuple):
        return tuple(scale * e for e in eta)
    return scale * eta


def _p_from(signal: float, noise: float) -> float:
    if signal + noise <= 0:
        raise UndefinedSNR("signal and noise probabilities are both zero")
    return noise / (signal + noise)


def noise_strength(t: float, params: MemoryParams, strategy: str = "mean"):
    """Depolarizing strength with ``(1 - p)/p`` equal to the signal to noise ratio.

    With ``strategy="per-mode"`` a tuple with one strength per mode is returned.
    """
    sig = signal_probability(t, params, strategy)
    if isinstance(sig, tuple):
        return tuple(_p_from(s, params.P_noise) for s in sig)
    return _p_from(sig, params.P_noise)


@dataclass(frozen=True)
class CurvePoint:
    t_us: float
    witness: float
    lam: float
    p: float


def theory_curve(params: MemoryParams, times, include_bsm_noise: bool = False,
                 lambda_override: float | None = None, strategy: str = "mean") -> list[CurvePoint]:
    """Witness of the depolarizing memory model at each storage time."""
    times = [float(t) for t in times]
    if not times:
        raise InvalidArgument("time list is empty")
    if any(t < 0 for t in times):
        raise InvalidArgument("storage times must be nonnegative")
    if any(b < a for a, b in zip(times, times[1:])):
        raise InvalidArgument("storage times must be ascending")
    if strategy == "per-mode":
        raise InvalidArgument("theory_curve needs a scalar strength; use 'mean' or 'min'")
    if lambda_override is not None:
        lam = float(lambda_override)
    elif include_bsm_noise:
        lam = bsm_mod.lambda_from_visibility(params.V)
    else:
        lam = 0.0
    povm = bsm_mod.bsm_povm(lam)
    out = []
    for t in times:
        p = noise_strength(t, params, strategy)
        out.append(CurvePoint(t, game.exact_witness(channels.depolarizing(p), povm), lam, p))
    return out


def simulated_curve(chis, povm: bsm_mod.BsmModel) -> list[CurvePoint]:
    """Witness from a sequence of ``(t, chi)`` process matrices."""
    out = []
    for idx, (t, chi) in enumerate(chis):
        try:
            ch = channels.from_chi(chi, name=f"chi@{t}us")
        except InvalidChi as exc:
            raise InvalidChi(f"chi entry {idx} (t={t} us): {exc}", exc.min_eigenvalue) from None
        out.append(CurvePoint(float(t), game.exact_witness(ch, povm), povm.lam, float("nan")))
    return out


def simulated_curve_from_files(paths, povm: bsm_mod.BsmModel) -> list[CurvePoint]:
    chis = []
    for path in paths:
        chi, t = channels.read_chi(path)
        if t is None:
            raise InvalidArgument(f"{path}: chi file lacks storage_time_us")
        chis.append((t, chi))
    chis.sort(key=lambda item: item[0])
    return simulated_curve(chis, povm)


CURVE_HEADER = ["t_us", "witness", "lambda", "p"]


def curve_to_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for pt in points:
        w.writerow([repr(pt.t_us), repr(pt.witness), repr(pt.lam),
                    "" if np.isnan(pt.p) else repr(pt.p)])
    return buf.getvalue()
