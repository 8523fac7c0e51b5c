"""Path simulation under the original and exponentially tilted laws.

Chains are vectorized across paths. The running vector norm is accumulated
through the cocycle identity log||G_n v|| = sum_k log||g_k (G_{k-1}.v)||,
never by forming G_n; the full product, when tracked, is renormalized every
few steps with the log factor carried separately so entries, norms and
spectral radii of G_n stay finite for any n.

Tilted chains draw each step from the kernel proportional to
p_g ||g v||^s r_s(g.v) and accumulate importance weights from the realized
per-step normalizer, which keeps E_Q[W h] = E[h] exact even though r_s
carries discretization error; the kappa-based theoretical weight is logged
separately as a diagnostic. The coefficient-mode kernel coincides with the
norm-mode kernel because the <f,.>^s factors cancel between r_{s,f} and the
step weight; only the weight bookkeeping differs.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ensemble import FiniteEnsemble
from .errors import (
    NonPositiveEntryError,
    WeightDegeneracyWarning,
    WrongTiltWarning,
)
from .geometry import SimplexPoint, batch_spectral_radius
from .grid import build_grid
from .ratefn import lyapunov_exponent
from .spectral import SpectralSolution
from .streams import RandomStream

RENORM_EVERY = 32


def _vec(x) -> np.ndarray:
    v = x.coords if isinstance(x, SimplexPoint) else np.asarray(x, dtype=float)
    if v.ndim != 1 or np.any(v < 0) or v.sum() <= 0:
        raise NonPositiveEntryError("need a nonnegative vector with positive sum")
    return v


@dataclass(frozen=True)
class PathObservables:
    """Terminal observables of a batch of product paths."""

    n: int
    count: int
    f: np.ndarray
    v: np.ndarray
    log_coeff: np.ndarray
    log_vecnorm: np.ndarray
    endpoint: np.ndarray
    log_matnorm: Optional[np.ndarray] = None
    log_entry11: Optional[np.ndarray] = None
    log_specrad: Optional[np.ndarray] = None

    @property
    def tracked(self) -> bool:
        return self.log_matnorm is not None


@dataclass(frozen=True)
class TiltedBatch(PathObservables):
    """Path observables plus importance weights under a tilted law."""

    s: float = 0.0
    mode: str = "norm"
    log_weight: np.ndarray = None
    log_weight_theory: np.ndarray = None

    def effective_sample_size(self) -> float:
        w = np.exp(self.log_weight - self.log_weight.max())
        return float(w.sum() ** 2 / (w * w).sum())


class _Product:
    """Renormalized running product with accumulated log scale."""

    def __init__(self, count, dim, renorm_every):
        self.y = np.broadcast_to(np.eye(dim), (count, dim, dim)).copy()
        self.log_scale = np.zeros(count)
        self.every = renorm_every
        self._pending = 0

    def step(self, sel):
        self.y = np.einsum("pij,pjk->pik", sel, self.y)
        self._pending += 1
        if self._pending >= self.every:
            self.flush()

    def flush(self):
        if self._pending == 0:
            return
        scale = self.y.sum(axis=(1, 2))
        self.y /= scale[:, None, None]
        self.log_scale += np.log(scale)
        self._pending = 0

    def observables(self):
        self.flush()
        log_mat = np.log(self.y.sum(axis=(1, 2))) + self.log_scale
        log_e11 = np.log(self.y[:, 0, 0]) + self.log_scale
        log_rho = np.log(batch_spectral_radius(self.y)) + self.log_scale
        return log_mat, log_e11, log_rho


def simulate_paths(
    ens: FiniteEnsemble,
    v,
    f,
    n: int,
    count: int,
    stream: RandomStream,
    track_product: bool = True,
    renorm_every: int = RENORM_EVERY,
    starts: Optional[np.ndarray] = None,
) -> PathObservables:
    """i.i.d. product paths G_n = g_n ... g_1 started at v (or a batch of starts).

    f and v may be any nonzero nonnegative vectors; unnormalized inputs shift
    the log observables by log||v|| through the cocycle.
    """
    vv, fv = _vec(v), _vec(f)
    gen = stream.generator
    if starts is not None:
        cur = np.array(starts, dtype=float)
        log_vn = np.zeros(count)
    else:
        cur = np.broadcast_to(vv / vv.sum(), (count, ens.dim)).copy()
        log_vn = np.full(count, math.log(vv.sum()))
    product = _Product(count, ens.dim, renorm_every) if track_product else None
    tensor = ens.atom_tensor
    for _ in range(n):
        idx = np.searchsorted(ens.cum_probs, gen.random(count), side="right")
        sel = tensor[idx]
        w = np.einsum("pij,pj->pi", sel, cur)
        nrm = w.sum(axis=1)
        cur = w / nrm[:, None]
        log_vn += np.log(nrm)
        if product is not None:
            product.step(sel)
    log_coeff = np.log(cur @ fv) + log_vn
    if product is not None:
        log_mat, log_e11, log_rho = product.observables()
    else:
        log_mat = log_e11 = log_rho = None
    return PathObservables(
        n=n, count=count, f=fv, v=vv,
        log_coeff=log_coeff, log_vecnorm=log_vn, endpoint=cur,
        log_matnorm=log_mat, log_entry11=log_e11, log_specrad=log_rho,
    )


def tilted_simulate(
    ens: FiniteEnsemble,
    sol: SpectralSolution,
    mode: str,
    v,
    n: int,
    count: int,
    stream: RandomStream,
    f=None,
    track_product: bool = False,
    renorm_every: int = RENORM_EVERY,
) -> TiltedBatch:
    """Paths under the tilted kernel of sol, with exact importance weights.

    mode is "norm" or "coefficient"; coefficient mode requires f (strictly
    positive when s < 0) and differs from norm mode only in which theoretical
    weight is logged, since the one-step kernels coincide identically.
    """
    if mode not in ("norm", "coefficient"):
        raise ValueError(f"unknown tilt mode {mode!r}")
    if mode == "coefficient" and f is None:
        raise ValueError("coefficient mode needs a reference direction f")
    vv = _vec(v)
    fv = _vec(f) if f is not None else np.ones(ens.dim)
    s = sol.s
    if mode == "coefficient" and s < 0 and fv.min() <= 0:
        raise NonPositiveEntryError("coefficient tilts with s < 0 need strictly positive f")
    gen = stream.generator
    tensor = ens.atom_tensor
    n_atoms = ens.n_atoms
    cur = np.broadcast_to(vv / vv.sum(), (count, ens.dim)).copy()
    log_vn = np.full(count, math.log(vv.sum()))
    log_w = np.zeros(count)
    product = _Product(count, ens.dim, renorm_every) if track_product else None
    v0_norm = cur[0].copy()

    dirs = np.empty((n_atoms, count, ens.dim))
    log_nrm = np.empty((n_atoms, count))
    scores = np.empty((n_atoms, count))
    rows = np.arange(count)
    for _ in range(n):
        for a in range(n_atoms):
            w = cur @ tensor[a].T
            nrm = w.sum(axis=1)
            dirs[a] = w / nrm[:, None]
            log_nrm[a] = np.log(nrm)
            scores[a] = ens.probs[a] * np.exp(s * log_nrm[a]) * sol.r_lookup(dirs[a])
        z = scores.sum(axis=0)
        cum = np.cumsum(scores, axis=0) / z
        idx = np.sum(gen.random(count)[None, :] > cum[:-1], axis=0) if n_atoms > 1 else np.zeros(
            count, dtype=np.intp
        )
        sel_log_nrm = log_nrm[idx, rows]
        r_sel = scores[idx, rows] / (ens.probs[idx] * np.exp(s * sel_log_nrm))
        log_w += np.log(z) - s * sel_log_nrm - np.log(r_sel)
        cur = dirs[idx, rows]
        log_vn += sel_log_nrm
        if product is not None:
            product.step(tensor[idx])

    log_coeff = np.log(cur @ fv) + log_vn
    # kappa-based weight of the change-of-measure identity, per mode
    r0 = float(sol.r_of(v0_norm[None, :])[0])
    r_end = sol.r_of(cur)
    log_vn_rel = log_vn - math.log(vv.sum())
    if mode == "coefficient":
        pair0 = float(fv @ v0_norm)
        theory = (
            n * sol.log_kappa
            + (math.log(r0) - s * math.log(pair0))
            - (np.log(r_end) - s * np.log(cur @ fv))
            - s * (np.log(cur @ fv) + log_vn_rel - math.log(pair0))
        )
    else:
        theory = n * sol.log_kappa + math.log(r0) - np.log(r_end) - s * log_vn_rel

    if product is not None:
        log_mat, log_e11, log_rho = product.observables()
    else:
        log_mat = log_e11 = log_rho = None
    batch = TiltedBatch(
        n=n, count=count, f=fv, v=vv,
        log_coeff=log_coeff, log_vecnorm=log_vn, endpoint=cur,
        log_matnorm=log_mat, log_entry11=log_e11, log_specrad=log_rho,
        s=s, mode=mode, log_weight=log_w, log_weight_theory=theory,
    )
    ess = batch.effective_sample_size()
    if ess < 0.01 * count:
        warnings.warn(
            f"effective sample size {ess:.1f} below 1% of {count}", WeightDegeneracyWarning
        )
    return batch


def enumerate_tilted(
    sol: SpectralSolution, v, n: int, mode: str = "norm", f=None
) -> list[tuple[tuple[int, ...], float, float]]:
    """Exact enumeration of the tilted chain: (atom sequence, Q-probability, log W).

    Uses the same realized-normalizer weights as tilted_simulate, so
    Q-probability * W recovers the untilted path probability identically.
    """
    ens = sol.ensemble
    vv = _vec(v)
    vv = vv / vv.sum()
    s = sol.s
    out = []
    stack = [((), vv, 1.0, 0.0)]
    for _ in range(n):
        nxt = []
        for seq, cur, qp, lw in stack:
            raw = ens.atom_tensor @ cur
            nrm = raw.sum(axis=1)
            dirs = raw / nrm[:, None]
            score = ens.probs * np.power(nrm, s) * sol.r_of(dirs)
            z = float(score.sum())
            for a in range(ens.n_atoms):
                step_w = z / (np.power(nrm[a], s) * float(sol.r_of(dirs[a][None, :])[0]))
                nxt.append((seq + (a,), dirs[a], qp * float(score[a]) / z, lw + math.log(step_w)))
        stack = nxt
    for seq, _, qp, lw in stack:
        out.append((seq, qp, lw))
    return out


@dataclass(frozen=True)
class DriftEstimates:
    """Asymptotic mean drifts with standard errors, all at the same n."""

    b_v: tuple[float, float]
    d_f: tuple[float, float]
    b_fv: tuple[float, float]
    A_fv: tuple[float, float]
    B_fv: tuple[float, float]
    m3: tuple[float, float]
    n_tail: int
    lambda1: float

    def identity_residual(self) -> tuple[float, float]:
        """B - (b(v) - A + d(f)) and its combined standard error."""
        gap = self.B_fv[0] - (self.b_v[0] - self.A_fv[0] + self.d_f[0])
        err = math.sqrt(self.B_fv[1] ** 2 + self.b_v[1] ** 2 + self.A_fv[1] ** 2 + self.d_f[1] ** 2)
        return gap, err


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def stationary_directions(
    ens: FiniteEnsemble,
    stream: RandomStream,
    chains: int,
    burn_in: int = 100,
    thinning: int = 10,
    samples_per_chain: int = 10,
    start=None,
) -> np.ndarray:
    """Directions ~ the invariant measure: burn-in then thinned chain states.

    Returns an array of shape (chains, samples_per_chain, d).
    """
    gen = stream.generator
    cur = np.broadcast_to(
        _vec(start) / _vec(start).sum() if start is not None else np.full(ens.dim, 1.0 / ens.dim),
        (chains, ens.dim),
    ).copy()
    tensor = ens.atom_tensor
    out = np.empty((chains, samples_per_chain, ens.dim))
    for k in range(burn_in + thinning * samples_per_chain):
        idx = np.searchsorted(ens.cum_probs, gen.random(chains), side="right")
        w = np.einsum("pij,pj->pi", tensor[idx], cur)
        cur = w / w.sum(axis=1, keepdims=True)
        if k >= burn_in and (k - burn_in + 1) % thinning == 0:
            out[:, (k - burn_in + 1) // thinning - 1] = cur
    return out


def estimate_drifts(
    ens: FiniteEnsemble,
    f,
    v,
    n_tail: int = 200,
    count: int = 20000,
    stream: Optional[RandomStream] = None,
    lambda1: Optional[float] = None,
    resolution: int = 256,
) -> DriftEstimates:
    """Monte Carlo estimates of the centering drifts and the third moment.

    b(v) and b(f,v) come from one batch at n_tail; A(f,v) is the exact
    one-step atom sum; B(f,v) mixes exact atom weights with per-atom b(f, g.v)
    batches; d(f) and the third-moment estimate use invariant-measure samples
    (burn-in 100, thinning 10).
    """
    if stream is None:
        stream = RandomStream(0)
    fv, vv = _vec(f), _vec(v)
    if lambda1 is None:
        lambda1 = lyapunov_exponent(ens, build_grid(ens.dim, resolution))

    batch = simulate_paths(ens, vv, fv, n_tail, count, stream.child(1), track_product=False)
    b_v = _mean_se(batch.log_vecnorm - n_tail * lambda1)
    b_fv = _mean_se(batch.log_coeff - math.log(fv @ vv) - n_tail * lambda1)

    raw = ens.atom_tensor @ vv
    a_fv = (float(ens.probs @ np.log(raw @ fv)) - lambda1, 0.0)

    b_parts, var_parts = [], []
    for a in range(ens.n_atoms):
        u = raw[a] / raw[a].sum()
        sub = simulate_paths(ens, u, fv, n_tail, count, stream.child(10 + a), track_product=False)
        vals = sub.log_coeff - math.log(fv @ u) - n_tail * lambda1
        b_parts.append(vals.mean())
        var_parts.append(vals.var(ddof=1) / vals.size)
    b_big = (
        float(ens.probs @ np.array(b_parts)),
        float(math.sqrt(ens.probs**2 @ np.array(var_parts))),
    )

    chains = max(count // 20, 64)
    nu_samples = stationary_directions(ens, stream.child(2), chains)
    pairings = np.log(nu_samples @ fv)
    chain_means = pairings.mean(axis=1)
    d_f = (float(chain_means.mean()), float(chain_means.std(ddof=1) / math.sqrt(chains)))

    starts = nu_samples[:, -1, :]
    m3_batch = simulate_paths(
        ens, np.full(ens.dim, 1.0 / ens.dim), fv, n_tail, chains,
        stream.child(3), track_product=False, starts=starts,
    )
    cubes = (m3_batch.log_coeff - n_tail * lambda1) ** 3
    m3 = (float(cubes.mean() / n_tail), float(cubes.std(ddof=1) / math.sqrt(chains) / n_tail))

    return DriftEstimates(
        b_v=b_v, d_f=d_f, b_fv=b_fv, A_fv=a_fv, B_fv=b_big, m3=m3,
        n_tail=n_tail, lambda1=lambda1,
    )


_OBSERVABLES = {
    "coefficient": "log_coeff",
    "vecnorm": "log_vecnorm",
    "matnorm": "log_matnorm",
    "entry11": "log_entry11",
    "specrad": "log_specrad",
}


def batch_observable(batch: PathObservables, name: str) -> np.ndarray:
    values = getattr(batch, _OBSERVABLES[name])
    if values is None:
        raise ValueError(f"batch was simulated without product tracking; {name} unavailable")
    return values


def is_probability(
    batch: TiltedBatch,
    threshold: float,
    tail: str = "upper",
    observable: Optional[str] = None,
) -> tuple[float, float]:
    """Self-normalized-free IS estimate of a tail probability with stderr.

    The indicator compares the mode's observable (log coefficient or log
    vector norm, overridable) against the threshold; weights make the
    estimator unbiased for the untilted law.
    """
    if tail not in ("upper", "lower"):
        raise ValueError("tail must be 'upper' or 'lower'")
    if observable is None:
        observable = "coefficient" if batch.mode == "coefficient" else "vecnorm"
    obs = batch_observable(batch, observable)
    hit = obs >= threshold if tail == "upper" else obs <= threshold
    rate = float(hit.mean())
    if rate < 0.05 or rate > 0.95:
        warnings.warn(
            f"indicator fires on {100 * rate:.1f}% of tilted paths; tilt likely mismatched",
            WrongTiltWarning,
        )
    y = np.exp(batch.log_weight) * hit
    return _mean_se(y)


def characteristic_decay_diagnostic(batches, t_values, q: float) -> dict:
    """|E exp(it (log||G_n v|| - n q))| tabulated over batches and t values.

    Under non-arithmeticity the modulus decays in n for every t != 0; lattice
    ensembles show flat rows at their resonant frequencies.
    """
    ts = np.asarray(t_values, dtype=float)
    ns = [b.n for b in batches]
    table = np.empty((len(batches), ts.size))
    for i, b in enumerate(batches):
        centered = b.log_vecnorm - b.n * q
        table[i] = np.abs(np.exp(1j * np.outer(ts, centered)).mean(axis=1))
    return {"n": ns, "t": ts.tolist(), "modulus": table}


def dump_batch_csv(batch: PathObservables, path) -> None:
    """One row per path; column order:
    n, log_coeff, log_vecnorm, log_matnorm, log_entry11, log_specrad,
    endpoint coords, log_weight.
    """
    d = batch.endpoint.shape[1]
    nan = np.full(batch.count, np.nan)
    log_w = batch.log_weight if isinstance(batch, TiltedBatch) else np.zeros(batch.count)
    cols = [
        np.full(batch.count, batch.n),
        batch.log_coeff,
        batch.log_vecnorm,
        batch.log_matnorm if batch.tracked else nan,
        batch.log_entry11 if batch.tracked else nan,
        batch.log_specrad if batch.tracked else nan,
    ] + [batch.endpoint[:, i] for i in range(d)] + [log_w]
    header = ["n", "log_coeff", "log_vecnorm", "log_matnorm", "log_entry11", "log_specrad"] + [
        f"v_{i + 1}" for i in range(d)
    ] + ["log_weight"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*cols):
            writer.writerow([f"{x:.17g}" for x in row])
