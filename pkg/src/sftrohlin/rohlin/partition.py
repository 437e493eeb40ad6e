"""Rohlin partitions of unity with towers of heights ``m`` and ``m + 1``.

Starting from a cyclic stack ``e_0..e_{Nm-1}`` (``N = n l``) with a partial
isometry ``p_0`` from ``e = 1 - sum e_i`` into ``e_0``:

* ``p_k = alpha^k(p_0)``, snapped to domain ``e`` and range inside ``e_k``;
* ``q_k = l^(-1/2) sum_j p_{jmn+k}`` for ``k < mn``;
* ``e_{0,k} = sum_j e_{jm+k} - sum_{j<n} q_{jm+k} q_{jm+k}*``;
* inside ``D = C*(q_0..q_{mn-1}) = M_{mn+1}`` the cyclic unitary
  ``u = e + sum q_{k+1} q_k*`` is deformed into ``v`` of order ``mn + 1``,
  and ``e_{1,k} = sum_j (Ad v)^(j(m+1)+k)(r)`` for a rank-one ``r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from ..af_algebra import AlgebraElement, commutator, op_norm, shift_auto, to_common
from ..config import DEFAULT_CONFIG, RunConfig
from ..errors import InputError, PreconditionError, ResourceCapError, VerificationError
from ..perturbation import norm, norm_bound, snap_partial_isometry
from ..sft_core import Interval, TransitionMatrix
from .model import as_dense
from .stack import StackData, model_shape_from_tower, model_stack, stack_from_tower
from .tower import build_tower

PARTITION_TOL = 1e-9
BOUND_SLACK = 1e-9


@dataclass
class RohlinPartition:
    """Towers ``[[e_{0,0}..e_{0,m-1}], [e_{1,0}..e_{1,m}]]`` of projections under ``alpha``.

    ``window`` is the window hull of the algebra elements the towers are
    built from, after any decoupling shift; probes supported on windows
    disjoint from it commute with every element exactly.
    """

    towers: list
    alpha: Callable
    window: Interval | None = None

    @property
    def heights(self) -> list[int]:
        return [len(t) for t in self.towers]

    def elements(self) -> list:
        return [x for t in self.towers for x in t]


@dataclass
class RohlinReport:
    m: int
    verdict: bool
    epsilon: float
    measured: dict
    bounds: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    violated: list = field(default_factory=list)
    partition: RohlinPartition | None = None
    bound_limited: bool = False
    achieved_epsilon: float | None = None
    notes: list = field(default_factory=list)

    @property
    def heights(self) -> tuple[int, int]:
        return (self.m, self.m + 1)

    def to_json(self) -> dict:
        def tag(x):
            if isinstance(x, float):
                return {"float": x, "tol": PARTITION_TOL}
            if isinstance(x, dict):
                return {k: tag(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [tag(v) for v in x]
            return x

        return {
            "heights": list(self.heights),
            "verdict": self.verdict,
            "epsilon": tag(float(self.epsilon)),
            "achieved_epsilon": tag(None if self.achieved_epsilon is None else float(self.achieved_epsilon)),
            "bound_limited": self.bound_limited,
            "violated": list(self.violated),
            "measured": tag(self.measured),
            "bounds": tag(self.bounds),
            "params": self.params,
            "notes": list(self.notes),
        }

    def table(self) -> str:
        lines = [f"Rohlin partition, tower heights {self.m} and {self.m + 1}"]
        lines += [f"  {k} = {v}" for k, v in self.params.items() if not isinstance(v, (dict, list))]
        lines.append(f"  {'quantity':<32} {'measured':>14} {'bound':>14}")
        for k, v in self.measured.items():
            if isinstance(v, (int, float)):
                b = self.bounds.get(k)
                lines.append(f"  {k:<32} {v:>14.6g} {'' if b is None else format(b, '>14.6g')}")
        lines.append(f"  epsilon {self.epsilon:.6g}; achieved {self.achieved_epsilon}; "
                     f"bound-limited {self.bound_limited}")
        lines.append(f"  verdict: {'true' if self.verdict else 'false'}"
                     + (f" (violated: {', '.join(self.violated)})" if self.violated else ""))
        return "\n".join(lines)


# ---------------------------------------------------------------- verification


def _probe_commutators(part: RohlinPartition, F: Sequence) -> tuple[float, list]:
    worst, notes = 0.0, []
    elems = part.elements()
    for idx, x in enumerate(F):
        if isinstance(x, AlgebraElement):
            if part.window is None or not x.window.disjoint(part.window):
                notes.append(f"probe {idx}: window {x.window.as_tuple()} not disjoint from the partition's "
                             "generators; commutator not certified")
                worst = math.inf
            continue
        x = np.asarray(x)
        worst = max([worst] + [norm(x @ y - y @ x) for y in elems])
    return worst, notes


def _measure_partition(part: RohlinPartition, F: Sequence) -> tuple[dict, list]:
    elems = part.elements()
    if not elems:
        raise InputError("empty partition")
    one = np.eye(elems[0].shape[0])
    measured = {
        "partition_defect": norm_bound(one - sum(elems), PARTITION_TOL),
        "projection": max(max(norm_bound(x @ x - x, PARTITION_TOL), norm_bound(x - x.conj().T, PARTITION_TOL))
                          for x in elems),
    }
    for t, tower in enumerate(part.towers):
        h = len(tower)
        measured[f"advance_tower_{t}"] = max(norm(part.alpha(tower[k]) - tower[(k + 1) % h]) for k in range(h))
    measured["commutator"], notes = _probe_commutators(part, F)
    return measured, notes


def _violations(measured: dict, epsilon: float) -> list[str]:
    violated = [k for k in ("partition_defect", "projection") if not measured[k] < PARTITION_TOL]
    violated += [k for k, v in measured.items()
                 if (k.startswith("advance_tower") or k == "commutator") and not v < epsilon]
    return violated


def verify_rohlin_partition(part: RohlinPartition, epsilon: float, F: Sequence = ()) -> RohlinReport:
    """Measure a candidate partition against the Rohlin conditions at ``epsilon``.

    Dense probes are commuted directly.  Probes given as algebra elements
    count as commuting exactly when their window misses the partition's
    window, and as uncertified otherwise.
    """
    measured, notes = _measure_partition(part, F)
    violated = _violations(measured, epsilon)
    return RohlinReport(len(part.towers[0]), not violated, epsilon, measured, violated=violated,
                        partition=part, notes=notes)


# ---------------------------------------------------------------- construction


def _spectral_match(src_angles: Sequence[float], count: int) -> list[int]:
    """Target index ``s`` (angle ``2 pi s / count``) for each source, in increasing angular order."""
    order = sorted(range(len(src_angles)), key=lambda i: (round(src_angles[i] % (2 * math.pi), 12), i))
    out = [0] * len(src_angles)
    for s, i in enumerate(order):
        out[i] = s
    return out


def _equal(x, y) -> bool:
    d = x - y
    return (d.count_nonzero() == 0) if sp.issparse(d) else not np.any(d)


def _snap_sequence(sd: StackData, e: np.ndarray, p0: np.ndarray, count: int, exact: bool) -> list:
    """``p_k = alpha(p_{k-1})``, snapped unless ``alpha`` moves the stack exactly."""
    ps = [p0]
    rank = int(round(e.diagonal().sum().real))
    for k in range(1, count):
        x = sd.alpha(ps[-1])
        if not exact:
            x = sd.e[k] @ x @ e
            U = np.linalg.svd(x)[0]
            x = snap_partial_isometry(x, e, U[:, :rank] @ U[:, :rank].conj().T)
        ps.append(x)
    return ps


def refine_to_rohlin_partition(sd: StackData, m: int, n: int, ell: int, F: Sequence = (),
                               window: Interval | None = None) -> RohlinReport:
    """Partition of unity with towers of heights ``m`` and ``m + 1`` from a stack of length ``n l m``.

    Every measured quantity is compared with the corresponding bound from
    the construction; exceeding one by more than 1e-9 raises
    :class:`VerificationError`.  The verdict is evaluated at the smallest
    epsilon the measurements support.
    """
    if m < 1 or n < 1:
        raise InputError("m and n must be positive")
    if n % (m + 1) != 1 % (m + 1):
        raise PreconditionError(f"need n = 1 mod m+1, got n = {n}, m = {m}")
    if ell <= 4:
        raise PreconditionError(f"need ell > 4, got {ell}")
    N = n * ell
    L = N * m
    if sd.length != L:
        raise PreconditionError(f"stack length {sd.length} != n l m = {L}")
    if not sd.is_model:
        raise PreconditionError("partitions are built on dense model stacks")
    mn = m * n
    alpha = sd.alpha
    es = list(sd.e)
    dim = sd.model.dim
    e = sd.model.identity() - sum(es)
    exact = _equal(alpha(e), e) and all(_equal(alpha(es[i]), es[(i + 1) % L]) for i in range(L))
    p0 = sd.p
    if not exact:
        # the snapping route works on dense matrices
        es, e, p0 = [as_dense(x) for x in es], as_dense(e), as_dense(p0)
    stack_defect = 0.0 if exact else max(norm(alpha(es[i]) - es[(i + 1) % L]) for i in range(L))
    comp = np.flatnonzero(e.diagonal().real > 0.5)
    c = len(comp)
    if not (_equal(p0.conj().T @ p0, e) and _equal(es[0] @ p0, p0)):
        raise PreconditionError("p_0 must map 1 - sum e_i isometrically into e_0")
    ps = _snap_sequence(sd, e, p0, L, exact)
    qs = [sum(ps[j * mn + k] for j in range(ell)) / math.sqrt(ell) for k in range(mn)]
    # each q_k vanishes off the columns of e
    qcols = [as_dense(q[:, comp]) for q in qs]

    e0 = []
    for k in range(m):
        x = as_dense(sum(es[j * m + k] for j in range(N)))
        for j in range(n):
            y = qcols[j * m + k]
            x = x - y @ y.conj().T
        e0.append(x)

    # D = M_{mn+1}: index 0 is e, index k+1 is q_k q_k*
    Y = np.concatenate([np.eye(dim)[:, comp]] + qcols, axis=1)
    dim_D = mn + 1

    def embed(A):
        return Y @ np.kron(A, np.eye(c)) @ Y.conj().T

    U_D = np.zeros((dim_D, dim_D))
    U_D[0, 0] = 1.0
    for k in range(mn):
        U_D[1 + (k + 1) % mn, 1 + k] = 1.0
    # eigenvectors: xi_e (eigenvalue 1) and Fourier vectors of the mn-cycle
    omega = np.exp(2j * math.pi / mn)
    vecs = [np.eye(dim_D)[:, 0].astype(complex)]
    angles = [0.0]
    for j in range(mn):
        z = np.zeros(dim_D, dtype=complex)
        z[1:] = omega ** (-j * np.arange(mn)) / math.sqrt(mn)
        vecs.append(z)
        angles.append(2 * math.pi * j / mn)
    W = np.stack(vecs, axis=1)
    eig_residual = norm(U_D @ W - W @ np.diag(np.exp(1j * np.array(angles))))
    targets = _spectral_match(angles, dim_D)
    mu = np.exp(2j * math.pi / dim_D)
    V_D = W @ np.diag(mu ** np.array(targets)) @ W.conj().T
    # v-eigenbasis by target index; b_s = sum_t mu^(-ts) y_t / sqrt(mn+1) is cycled by v
    Yv = W[:, np.argsort(targets)]
    b0 = Yv.sum(axis=1) / math.sqrt(dim_D)
    r_D = np.outer(b0, b0.conj())
    M = (mn + 1) // (m + 1)
    e1_D = []
    for k in range(m + 1):
        x = np.zeros((dim_D, dim_D), dtype=complex)
        for j in range(M):
            t = j * (m + 1) + k
            Vt = np.linalg.matrix_power(V_D, t)
            x = x + Vt @ r_D @ Vt.conj().T
        e1_D.append(x)
    e1 = [embed(x) for x in e1_D]
    u = embed(U_D)
    v = embed(V_D)

    part = RohlinPartition([e0, e1], alpha, window)
    pm, notes = _measure_partition(part, F)

    tol = PARTITION_TOL
    cyc = max(norm_bound(as_dense(alpha(qs[k]) - qs[(k + 1) % mn]), tol) for k in range(mn))
    ad_u = max(norm_bound((u @ qcols[k]) @ u[:, comp].conj().T - as_dense(qs[(k + 1) % mn]), tol)
               for k in range(mn))
    one_D = embed(np.eye(dim_D))
    measured = {
        "partition_defect": pm["partition_defect"],
        "projection": pm["projection"],
        "input_stack_defect": stack_defect,
        "alpha(q_k)-q_k+1": cyc,
        "advance_e0": pm["advance_tower_0"],
        "advance_e1": pm["advance_tower_1"],
        "alpha|D-Ad u|D": max(cyc, norm_bound(as_dense(alpha(e) - e), tol)),
        "Ad u(q_k)-q_k+1": ad_u,
        "u-v": norm(U_D - V_D),
        "v^(mn+1)-1": norm(np.linalg.matrix_power(V_D, dim_D) - np.eye(dim_D)),
        "eigenvector_residual": eig_residual,
        "u unitary in D": norm_bound(u @ u.conj().T - one_D, tol),
        "v unitary in D": norm_bound(v @ v.conj().T - one_D, tol),
        "commutator": pm["commutator"],
    }
    rt = math.sqrt(ell)
    bounds = {
        "alpha(q_k)-q_k+1": 3 / rt,
        "advance_e0": 7 * n / rt,
        "advance_e1": 3 * (mn + 1) ** 2 / rt + 4 * math.pi / mn,
        "alpha|D-Ad u|D": 3 * (mn + 1) ** 2 / rt,
        "u-v": 2 * math.pi / mn,
        "sharp_cyclic_stack": 1 / ell + 1 / rt,
    }
    for k in ("alpha(q_k)-q_k+1", "advance_e0", "advance_e1", "alpha|D-Ad u|D", "u-v"):
        if measured[k] > bounds[k] + BOUND_SLACK:
            raise VerificationError(f"{k} = {measured[k]:.6g} exceeds its bound {bounds[k]:.6g}", norm=measured[k])
    for k in ("partition_defect", "projection", "Ad u(q_k)-q_k+1", "v^(mn+1)-1", "eigenvector_residual",
              "u unitary in D", "v unitary in D"):
        if measured[k] > PARTITION_TOL:
            raise VerificationError(f"{k} off by {measured[k]:.3g}", norm=measured[k])

    achieved = max(measured["advance_e0"], measured["advance_e1"], measured["commutator"]) * (1 + 1e-9) + 1e-12
    violated = _violations(pm, achieved)
    params = {"m": m, "n": n, "ell": ell, "N": N, "stack_length": L, "D_dim": dim_D,
              "model_dim": int(dim), "complement_rank": c, "spectral_targets": targets}
    return RohlinReport(m, not violated, achieved, measured, bounds, params, violated, part,
                        achieved_epsilon=achieved, notes=notes)


# ---------------------------------------------------------------- commutation


def asymptotic_commutation_check(x: AlgebraElement, y: AlgebraElement, n_max: int) -> list[tuple[int, float]]:
    """``(n, ||[alpha^n(x), y]||)`` for ``-n_max <= n <= n_max``."""
    out = []
    for k in range(-n_max, n_max + 1):
        a, b = to_common(shift_auto(x, k), y)
        out.append((k, op_norm(commutator(a, b))))
    return out


# ---------------------------------------------------------------- pipeline


def choose_parameters(m: int, epsilon: float, level_dim: int, complement_dim: int,
                      config: RunConfig | None = None) -> dict:
    """``n`` and ``l`` from ``n > 8 pi/(m eps)``, ``l > 36 (mn+1)^4/eps^2``, clamped to the caps."""
    config = config or DEFAULT_CONFIG
    if not epsilon > 0:
        raise InputError("epsilon must be positive")
    n_req = int(8 * math.pi / (m * epsilon)) + 1
    n_req += (1 - n_req) % (m + 1)
    n = n_req
    while n > config.max_n:
        n -= m + 1
    if n < 1:
        raise ResourceCapError(f"no n = 1 mod {m + 1} below cap {config.max_n}", required=n_req, cap=config.max_n)
    ell_req = int(36 * (m * n_req + 1) ** 4 / epsilon ** 2) + 1
    ell_fit = (config.max_model_dim - complement_dim) // (n * m * level_dim)
    ell = min(ell_req, config.max_ell, ell_fit)
    if ell <= 4:
        raise ResourceCapError(f"model dimension cap {config.max_model_dim} leaves l = {ell} <= 4",
                               required=5 * n * m * level_dim + complement_dim, cap=config.max_model_dim)
    return {"n": n, "ell": ell, "n_required": n_req, "ell_required": ell_req,
            "bound_limited": n < n_req or ell < ell_req}


def default_probes(T, config: RunConfig | None = None) -> list[AlgebraElement]:
    config = config or DEFAULT_CONFIG
    rng = np.random.default_rng(config.seed)
    return [AlgebraElement.random(T, Interval(0, 1), rng) for _ in range(3)]


def rohlin_pipeline(T, m: int, epsilon: float = 0.5, F: Sequence | None = None,
                    config: RunConfig | None = None, n: int | None = None, ell: int | None = None) -> RohlinReport:
    """Tower, concrete stack, decoupling shift, and partition, with every step verified.

    The long cyclic stack is realized in the permutation model whose level
    and complement dimensions approximate the tower's measure ratio; probes
    in ``F`` are algebra elements and are decoupled by shifting the concrete
    generators past their windows.
    """
    config = config or DEFAULT_CONFIG
    T = TransitionMatrix.of(T)
    if m < 1:
        raise InputError("m must be >= 1")
    F = default_probes(T, config) if F is None else list(F)
    tw = build_tower(T, m, config)
    sd = stack_from_tower(tw, m, config)
    D, c = model_shape_from_tower(tw)
    choice = choose_parameters(m, epsilon, D, c, config)
    if n is not None:
        choice["n"] = n
    if ell is not None:
        choice["ell"] = ell
    n_, ell_ = choice["n"], choice["ell"]

    J = reduce(Interval.hull, [x.window for x in sd.e] + [sd.p.window, sd.q.window])
    H = reduce(Interval.hull, [x.window for x in F]) if F else None
    shift = max(0, J.b - H.a + 1) if H is not None else 0
    J_shifted = J.shift(-shift)
    if H is not None and not J_shifted.disjoint(H):
        raise VerificationError("decoupling shift failed to separate windows")

    model = model_stack(n_ * ell_ * m, D, c, cyclic=True, max_dim=config.max_model_dim)
    report = refine_to_rohlin_partition(model, m, n_, ell_, F, window=J_shifted)
    report.epsilon = epsilon
    report.bound_limited = choice["bound_limited"]
    report.verdict = report.verdict and report.achieved_epsilon <= epsilon
    if report.achieved_epsilon > epsilon and "epsilon" not in report.violated:
        report.violated.append("epsilon")
    report.params.update({
        "matrix": T.to_json(),
        "n_required": choice["n_required"], "ell_required": choice["ell_required"],
        "level_dim": D, "complement_dim": c,
        "tower": {"seed": list(tw.seed), "N": tw.N, "base_window": list(tw.base.window.as_tuple()),
                  "fixed_class": tw.info.get("fixed_class", {}).get("rule")},
        "stack_window": list(J.as_tuple()), "decoupling_shift": shift,
        "shifted_window": list(J_shifted.as_tuple()),
        "probe_window": None if H is None else list(H.as_tuple()),
    })
    report.notes.append("commutators with the probes vanish exactly: after the shift the generators' window "
                        "is disjoint from the probes' window, and later powers of alpha move it further away")
    return report
