"""Pulse optimization: exact-gradient GRAPE with L-BFGS-B, and SPSA.

The decision vector is the pulse amplitude matrix flattened channel-major,
in the model's control order.
"""

import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.optimize

from . import qmath
from .errors import (
    LineSearchFailure,
    NaNCost,
    OpenSystemExactGradientUnsupported,
    ValidationError,
)
from .propagate import aligned_amplitudes, closed_propagators, lindbladian, slot_hamiltonians
from .pulse import PulseProgram

log = logging.getLogger(__name__)

TERMINATIONS = ("target_reached", "grad_tol", "iter_limit", "line_search_failure")


@dataclass(frozen=True)
class SpsaParams:
    """Gain schedule ``a_k = a/(A+k+1)^alpha``, ``c_k = c/(k+1)^gamma``.

    ``a=None`` calibrates ``a`` so the first update moves each amplitude by
    about ``first_step``; ``A=None`` means ``0.1 * max_iters``.
    """

    a: float = None
    c: float = 0.01
    A: float = None
    alpha: float = 0.602
    gamma: float = 0.101
    first_step: float = 0.01
    n_calibration: int = 2


@dataclass(frozen=True)
class OptConfig:
    method: str = "lbfgsb"
    max_iters: int = 200
    fid_err_target: float = 1e-10
    grad_tol: float = 1e-9
    lbfgs_memory: int = 10
    max_line_search: int = 20
    spsa: SpsaParams = field(default_factory=SpsaParams)
    seed: int = 0
    max_evals: int = None
    fd_step: float = 1e-7

    def __post_init__(self):
        if self.method not in ("lbfgsb", "spsa"):
            raise ValidationError(f"unknown method {self.method!r}; expected lbfgsb or spsa")
        if not 0 < self.fid_err_target < 1:
            raise ValidationError("fid_err_target must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")


@dataclass(eq=False)
class OptResult:
    pulse: PulseProgram
    infidelity_trace: np.ndarray
    final_infidelity: float
    termination: str
    n_iters: int
    n_cost_evals: int
    n_grad_evals: int
    wall_time: float = 0.0
    message: str = ""
    method: str = "lbfgsb"

    def summary(self):
        return {
            "method": self.method,
            "final_infidelity": self.final_infidelity,
            "termination": self.termination,
            "n_iters": self.n_iters,
            "n_cost_evals": self.n_cost_evals,
            "n_grad_evals": self.n_grad_evals,
            "n_slots": self.pulse.n_slots,
            "dt_ns": self.pulse.dt,
            "duration_ns": self.pulse.duration,
            "message": self.message,
        }


def _fd_phase_kernel(w, dt):
    """Divided differences of ``exp(-i w dt)`` over eigenvalue pairs.

    ``G[a, b] = (e^{-i w_a dt} - e^{-i w_b dt}) / (w_a - w_b)``, with the
    diagonal limit ``-i dt e^{-i w_a dt}``; written through ``sinc`` so nearly
    degenerate pairs lose no precision.
    """
    wa = w[..., :, None]
    wb = w[..., None, :]
    half = 0.5 * dt * (wa - wb)
    return -1j * dt * np.exp(-0.5j * dt * (wa + wb)) * np.sinc(half / np.pi)


class Objective:
    """Gate-infidelity cost for one (model, target, grid); counts evaluations."""

    def __init__(self, model, target, pulse, fd_step=1e-7):
        self.model = model
        self.target = target
        self.dt = pulse.dt
        self.shape = (len(model.labels), pulse.n_slots)
        self.norm = target.norm
        self.w = target.embedded(model.dim)
        self.s_w_dag = qmath.dag(qmath.unitary_to_super(self.w))
        self.fd_step = fd_step
        self.n_cost = 0
        self.n_grad = 0

    def _check(self, value, amps):
        if not np.isfinite(value):
            raise NaNCost(
                f"cost evaluated to {value}; max |amplitude| = {np.max(np.abs(amps)):.3g}")
        return value

    def _amps(self, x):
        amps = np.reshape(x, self.shape)
        if not np.all(np.isfinite(amps)):
            raise NaNCost(f"non-finite amplitudes at flat index {np.flatnonzero(~np.isfinite(x))[:5]}")
        return amps

    def cost(self, x):
        amps = self._amps(x)
        self.n_cost += 1
        if self.model.is_open:
            s = scipy.linalg.expm(self.dt * lindbladian(self.model, slot_hamiltonians(self.model, amps)))
            val = 1.0 - np.real(np.trace(self.s_w_dag @ qmath.ordered_product(s))) / self.norm
        else:
            u, _, _ = closed_propagators(self.model, amps, self.dt)
            g = np.trace(qmath.dag(self.w) @ qmath.ordered_product(u))
            val = 1.0 - abs(g) ** 2 / self.norm
        return self._check(float(val), amps)

    def cost_and_grad(self, x):
        if self.model.is_open:
            return self._open_cost_and_fd_grad(x)
        return self._closed_cost_and_grad(x)

    def _closed_cost_and_grad(self, x):
        amps = self._amps(x)
        self.n_cost += 1
        self.n_grad += 1
        u, w, v = closed_propagators(self.model, amps, self.dt)
        d = self.model.dim
        fwd = qmath.prefix_products(u)
        bwd = qmath.suffix_products(u)
        eye = np.eye(d, dtype=complex)[None]
        before = np.concatenate([eye, fwd[:-1]])  # U_{k-1} ... U_0
        after = np.concatenate([bwd[1:], eye])  # U_M ... U_{k+1}
        g = np.trace(qmath.dag(self.w) @ bwd[0])
        b = before @ qmath.dag(self.w)[None] @ after
        vd = qmath.dag(v)
        b_eig = vd @ b @ v
        h_eig = np.einsum("kba,ibc,kcd->ikad", np.conj(v), self.model.control_ops, v)
        kern = _fd_phase_kernel(w, self.dt)
        # Tr(B dU) = sum_ab (V^dag B V)_ba G_ab (V^dag H_i V)_ab
        dg = np.einsum("kba,kab,ikab->ik", b_eig, kern, h_eig)
        val = 1.0 - abs(g) ** 2 / self.norm
        grad = -2.0 * np.real(np.conj(g) * dg) / self.norm
        self._check(float(val), amps)
        return float(val), grad

    def _open_cost_and_fd_grad(self, x):
        """Cost plus central finite differences, one slot perturbed at a time.

        Prefix and suffix products of the unperturbed slot propagators make
        each perturbed evaluation a single local product.
        """
        amps = self._amps(x)
        self.n_cost += 1
        self.n_grad += 1
        h = slot_hamiltonians(self.model, amps)
        gen = lindbladian(self.model, h)
        s = scipy.linalg.expm(self.dt * gen)
        n2 = s.shape[-1]
        fwd = qmath.prefix_products(s)
        bwd = qmath.suffix_products(s)
        eye = np.eye(n2, dtype=complex)[None]
        before = np.concatenate([eye, fwd[:-1]])
        after = np.concatenate([bwd[1:], eye])
        b = before @ self.s_w_dag[None] @ after
        val = 1.0 - np.real(np.trace(self.s_w_dag @ bwd[0])) / self.norm
        step = self.fd_step
        ctrl_super = qmath.commutator_super(self.model.control_ops)
        grad = np.empty(self.shape)
        for i in range(self.shape[0]):
            plus = scipy.linalg.expm(self.dt * (gen + step * ctrl_super[i]))
            minus = scipy.linalg.expm(self.dt * (gen - step * ctrl_super[i]))
            # Tr(B_k S_k) via elementwise product with the transpose
            fp = np.real(np.einsum("kab,kba->k", b, plus))
            fm = np.real(np.einsum("kab,kba->k", b, minus))
            grad[i] = -(fp - fm) / (2.0 * step * self.norm)
        self._check(float(val), amps)
        return float(val), grad


def grape_gradient(model, pulse, target):
    """Exact gradient of the gate infidelity w.r.t. every amplitude.

    Returns an ``(n_controls, n_slots)`` array in the pulse's channel order.
    """
    if model.is_open:
        raise OpenSystemExactGradientUnsupported(
            "exact gradients are closed-system only; open systems use finite differences")
    amps = aligned_amplitudes(model, pulse)
    obj = Objective(model, target, pulse)
    _, grad = obj.cost_and_grad(amps.ravel())
    order = [model.labels.index(lab) for lab in pulse.labels]
    return grad[order]


def _model_ordered_pulse(model, pulse):
    amps = aligned_amplitudes(model, pulse)
    return PulseProgram(pulse.dt, model.labels, amps, pulse.bounds)


def _to_pulse_order(template, model_pulse):
    order = [model_pulse.labels.index(lab) for lab in template.labels]
    return PulseProgram(template.dt, template.labels, model_pulse.amplitudes[order], template.bounds)


class _StopAtTarget(Exception):
    pass


def optimize_lbfgsb(model, pulse0, target, cfg=None):
    """Box-constrained L-BFGS-B on the gate infidelity from ``pulse0``.

    Stops once the infidelity drops below ``cfg.fid_err_target``, when the
    projected gradient falls under ``cfg.grad_tol``, or at ``cfg.max_iters``.
    The lowest-cost point seen is returned.
    """
    cfg = cfg or OptConfig()
    t0 = time.perf_counter()
    p0 = _model_ordered_pulse(model, pulse0)
    obj = Objective(model, target, p0, fd_step=cfg.fd_step)
    lo, hi = p0.lower_upper()
    x0 = p0.amplitudes.ravel().copy()
    best = {"f": np.inf, "x": x0}

    def fun(x):
        f, g = obj.cost_and_grad(x)
        if f < best["f"]:
            best["f"], best["x"] = f, x.copy()
        return f, g.ravel()

    f0, _ = fun(x0)
    trace = [f0]

    def finish(termination, message, n_iters):
        pulse = _to_pulse_order(pulse0, p0.with_amplitudes(best["x"]))
        log.info("lbfgsb: %s after %d iterations, infidelity %.3e",
                 termination, n_iters, best["f"])
        return OptResult(
            pulse=pulse,
            infidelity_trace=np.array(trace),
            final_infidelity=float(best["f"]),
            termination=termination,
            n_iters=n_iters,
            n_cost_evals=obj.n_cost,
            n_grad_evals=obj.n_grad,
            wall_time=time.perf_counter() - t0,
            message=message,
            method="lbfgsb",
        )

    if f0 < cfg.fid_err_target:
        return finish("target_reached", "initial pulse already meets the target", 0)

    def callback(intermediate_result):
        trace.append(float(intermediate_result.fun))
        if intermediate_result.fun < cfg.fid_err_target:
            raise StopIteration

    options = {
        "maxiter": cfg.max_iters,
        "maxcor": cfg.lbfgs_memory,
        "gtol": cfg.grad_tol,
        "ftol": 1e-16,
        "maxls": cfg.max_line_search,
    }
    if cfg.max_evals is not None:
        options["maxfun"] = cfg.max_evals
    res = scipy.optimize.minimize(
        fun, x0, jac=True, method="L-BFGS-B",
        bounds=scipy.optimize.Bounds(lo.ravel(), hi.ravel()),
        callback=callback, options=options,
    )
    message = str(res.message)
    n_iters = len(trace) - 1
    if best["f"] < cfg.fid_err_target:
        termination = "target_reached"
    elif res.get("status") == 1:
        termination = "iter_limit"
    elif "ABNORMAL" in message.upper():
        warnings.warn(f"L-BFGS-B line search failed: {message}", LineSearchFailure, stacklevel=2)
        termination = "line_search_failure"
    else:
        termination = "grad_tol"
    return finish(termination, message, n_iters)


def optimize_spsa(model, pulse0, target, cfg=None):
    """Simultaneous-perturbation stochastic approximation from ``pulse0``.

    Each iteration spends two cost evaluations on the gradient estimate and one
    on the updated point, which is what the best-so-far tracking uses.
    """
    cfg = cfg or OptConfig(method="spsa")
    t0 = time.perf_counter()
    sp = cfg.spsa
    rng = np.random.default_rng(cfg.seed)
    p0 = _model_ordered_pulse(model, pulse0)
    obj = Objective(model, target, p0)
    lo, hi = (b.ravel() for b in p0.lower_upper())
    u = p0.amplitudes.ravel().copy()
    n = u.size
    max_iters = cfg.max_iters
    if cfg.max_evals is not None:
        max_iters = min(max_iters, max((cfg.max_evals - 1 - 2 * sp.n_calibration) // 3, 1))
    big_a = sp.A if sp.A is not None else 0.1 * max_iters

    def rademacher():
        return rng.integers(0, 2, size=n) * 2.0 - 1.0

    def estimate(x, ck):
        delta = rademacher()
        fp = obj.cost(x + ck * delta)
        fm = obj.cost(x - ck * delta)
        return (fp - fm) / (2.0 * ck) * delta

    a = sp.a
    if a is None:
        mags = [np.mean(np.abs(estimate(u, sp.c))) for _ in range(sp.n_calibration)]
        mag = float(np.mean(mags))
        a = sp.first_step * (big_a + 1.0) ** sp.alpha / mag if mag > 0 else 1.0

    f = obj.cost(u)
    best_f, best_u = f, u.copy()
    trace = [f]
    termination = "iter_limit"
    k = 0
    for k in range(max_iters):
        if best_f < cfg.fid_err_target:
            termination = "target_reached"
            break
        ak = a / (big_a + k + 1.0) ** sp.alpha
        ck = sp.c / (k + 1.0) ** sp.gamma
        u = np.clip(u - ak * estimate(u, ck), lo, hi)
        f = obj.cost(u)
        trace.append(f)
        if f < best_f:
            best_f, best_u = f, u.copy()
    else:
        k = max_iters
        if best_f < cfg.fid_err_target:
            termination = "target_reached"
    pulse = _to_pulse_order(pulse0, p0.with_amplitudes(best_u))
    return OptResult(
        pulse=pulse,
        infidelity_trace=np.array(trace),
        final_infidelity=float(best_f),
        termination=termination,
        n_iters=k,
        n_cost_evals=obj.n_cost,
        n_grad_evals=0,
        wall_time=time.perf_counter() - t0,
        message=f"a={a:.6g}",
        method="spsa",
    )


def optimize(model, pulse0, target, cfg=None):
    cfg = cfg or OptConfig()
    if cfg.method == "spsa":
        return optimize_spsa(model, pulse0, target, cfg)
    return optimize_lbfgsb(model, pulse0, target, cfg)


def _run_restart(args):
    model, pulse0, target, cfg = args
    return optimize(model, pulse0, target, cfg)


def multi_start(model, starts, target, cfg=None, jobs=1):
    """Optimize from several initial pulses and keep the best result.

    Ties on final infidelity go to the earliest start, so the outcome does not
    depend on ``jobs``.
    """
    cfg = cfg or OptConfig()
    tasks = [(model, p, target, replace(cfg, seed=cfg.seed + i)) for i, p in enumerate(starts)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_restart, tasks))
    else:
        results = [_run_restart(t) for t in tasks]
    return min(enumerate(results), key=lambda ir: (ir[1].final_infidelity, ir[0]))[1]
