"""Two-way full-duplex channel model.

Conventions: all gains (eta, beta) are linear inside this module; dB
conversion happens only at config boundaries via db_to_linear/linear_to_db.
Rates are log base 2 (bits per channel use). Node indices are 1 and 2.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import sample_complex_gaussian

PSD_TOL = 1e-8
TRACE_TOL = 1e-8


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass
class FdChannelModel:
    """Channel matrices, gains and budgets of a two-node FD link.

    H is a dict keyed by (i, j) with N x M arrays: H[(i, j)] carries the
    transmission from node i's transmitter to node j's receiver, so
    H[(1, 1)], H[(2, 2)] are the self-interference channels. eta holds the
    matching linear power gains, beta the transmit front-end noise level,
    P the per-node power budgets {1: P1, 2: P2}.
    """

    H: dict
    eta: dict
    beta: float
    P: dict
    M: int = field(init=False)
    N: int = field(init=False)

    def __post_init__(self):
        shapes = {k: np.asarray(v).shape for k, v in self.H.items()}
        if set(self.H) != {(1, 1), (1, 2), (2, 1), (2, 2)}:
            raise ValueError("H must contain the four links (i,j)")
        if len(set(shapes.values())) != 1:
            raise ValueError(f"channel matrices disagree in shape: {shapes}")
        self.N, self.M = next(iter(shapes.values()))
        self.H = {k: np.asarray(v, dtype=complex) for k, v in self.H.items()}
        if any(e <= 0 for e in self.eta.values()):
            raise ValueError("all eta must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if any(p <= 0 for p in self.P.values()):
            raise ValueError("power budgets must be positive")

    def gamma(self, i):
        """Direct-to-self-interference gain ratio eta_ji / eta_ii."""
        j = other(i)
        return self.eta[(j, i)] / self.eta[(i, i)]

    def h(self, i, j):
        """MISO channel vector h = H^H (requires N = 1): the 1 x M channel
        matrix acts as h^H, so the scalar received signal is h^H s."""
        if self.N != 1:
            raise ValueError("vector channels only defined for N = 1")
        return self.H[(i, j)].conj().ravel()


def other(i):
    return 2 if i == 1 else 1


def check_covariance(Q, power_budget):
    """Validate numerical PSD-ness and the trace budget of a strategy Q."""
    Q = np.asarray(Q, dtype=complex)
    tr = float(np.trace(Q).real)
    min_eig = float(np.min(np.linalg.eigvalsh((Q + Q.conj().T) / 2)))
    if min_eig < -PSD_TOL * max(tr, 1.0):
        raise ValueError(f"Q is not PSD (min eigenvalue {min_eig:.3e})")
    if tr > power_budget * (1 + TRACE_TOL):
        raise ValueError(f"trace(Q) = {tr:.6g} exceeds budget {power_budget}")
    return Q


def check_profile(ch, profile):
    Q1, Q2 = profile
    check_covariance(Q1, ch.P[1])
    check_covariance(Q2, ch.P[2])
    return np.asarray(Q1, dtype=complex), np.asarray(Q2, dtype=complex)


def interference_covariance(ch, i, Q_i):
    """Covariance Sigma_i = I + beta eta_ii H_ii diag(Q_i) H_ii^H of the
    noise-plus-residual-self-interference seen at receiver i."""
    Q_i = np.asarray(Q_i, dtype=complex)
    if Q_i.shape != (ch.M, ch.M):
        raise ValueError(f"Q has shape {Q_i.shape}, expected ({ch.M},{ch.M})")
    Hii = ch.H[(i, i)]
    D = np.diag(np.diag(Q_i).real)
    return np.eye(ch.N) + ch.beta * ch.eta[(i, i)] * (Hii @ D @ Hii.conj().T)


def achievable_rate(ch, i, profile):
    """Rate of the transmission from node i to node j (bits/channel use):
    log2 det(I + eta_ij H_ij^H Sigma_j^-1 H_ij Q_i)."""
    Q = {1: profile[0], 2: profile[1]}
    j = other(i)
    Sigma_j = interference_covariance(ch, j, Q[j])
    Hij = ch.H[(i, j)]
    W = ch.eta[(i, j)] * Hij.conj().T @ np.linalg.solve(Sigma_j, Hij)
    sign, logdet = np.linalg.slogdet(np.eye(ch.M) + W @ Q[i])
    return max(float(logdet / np.log(2.0)), 0.0)


def miso_rate(ch, i, profile):
    """Single-receive-antenna rate
    log2(1 + eta_ij |h_ij|_Q / (1 + beta eta_jj h_jj^H diag(Q_j) h_jj))."""
    if ch.N != 1:
        raise ValueError("miso_rate requires N = 1")
    Q = {1: np.asarray(profile[0], dtype=complex),
         2: np.asarray(profile[1], dtype=complex)}
    j = other(i)
    h_ij = ch.h(i, j)
    h_jj = ch.h(j, j)
    signal = ch.eta[(i, j)] * float((h_ij.conj() @ Q[i] @ h_ij).real)
    self_noise = ch.beta * ch.eta[(j, j)] * float(
        (h_jj.conj() * np.diag(Q[j]).real * h_jj).sum().real)
    return float(np.log2(1.0 + signal / (1.0 + self_noise)))


def sample_channel(M, N, eta, beta, P, rng, symmetric=False):
    """Random Rayleigh-fading channel model; deterministic per generator
    state. With symmetric=True, H12 = H21 and H11 = H22."""
    H11 = sample_complex_gaussian(N, M, rng)
    H12 = sample_complex_gaussian(N, M, rng)
    if symmetric:
        H22, H21 = H11, H12
    else:
        H21 = sample_complex_gaussian(N, M, rng)
        H22 = sample_complex_gaussian(N, M, rng)
    H = {(1, 1): H11, (1, 2): H12, (2, 1): H21, (2, 2): H22}
    return FdChannelModel(H=H, eta=dict(eta), beta=float(beta), P=dict(P))


def _waterfill_capacity(gains, P):
    """max sum log2(1 + g_k p_k) subject to sum p_k <= P, p >= 0.

    Exact piecewise-linear water level over the positive gains; returns
    (capacity_bits, powers aligned with gains).
    """
    g = np.asarray(gains, dtype=float)
    p = np.zeros_like(g)
    pos = np.where(g > 0)[0]
    if pos.size == 0:
        return 0.0, p
    inv = 1.0 / g[pos]
    order = np.argsort(inv)
    inv_sorted = inv[order]
    k = pos.size
    while k > 0:
        mu = (P + inv_sorted[:k].sum()) / k
        if mu > inv_sorted[k - 1]:
            break
        k -= 1
    alloc = np.maximum(mu - inv_sorted[:k], 0.0)
    p_pos = np.zeros(pos.size)
    p_pos[order[:k]] = alloc
    p[pos] = p_pos
    cap = float(np.log2(1.0 + g[pos] * p_pos).sum())
    return cap, p


def one_way_capacity(ch, i):
    """Half-duplex capacity of the i -> j link against thermal noise only:
    max over trace(Q) <= P_i of log2 det(I + eta_ij H_ij Q H_ij^H)."""
    j = other(i)
    Hij = ch.H[(i, j)]
    G = ch.eta[(i, j)] * (Hij.conj().T @ Hij)
    gains = np.linalg.eigvalsh((G + G.conj().T) / 2)
    cap, _ = _waterfill_capacity(np.maximum(gains, 0.0), ch.P[i])
    return cap


def tdma_sum_rate(ch):
    """Half-duplex TDMA baseline: equal time split, full per-slot power,
    no self-interference."""
    return 0.5 * one_way_capacity(ch, 1) + 0.5 * one_way_capacity(ch, 2)


def region_sample(ch, profiles):
    """Rate pairs (R1, R2) for each strategy profile, order preserved."""
    out = []
    for prof in profiles:
        check_profile(ch, prof)
        out.append((achievable_rate(ch, 1, prof), achievable_rate(ch, 2, prof)))
    return out


def simulate_frame(ch, profile, s1, s2, rng):
    """One symbol-level channel use.

    s_i are the intended transmit M-vectors (already beamformed). Returns a
    dict with the front-end noise draws e, thermal noise n and
    post-cancellation received signals y per node:
    y_i = sqrt(eta_ji) H_ji s_j + sqrt(eta_ii) H_ii e_i + n_i.
    """
    Q = {1: np.asarray(profile[0], dtype=complex),
         2: np.asarray(profile[1], dtype=complex)}
    s = {1: np.asarray(s1, dtype=complex), 2: np.asarray(s2, dtype=complex)}
    e, n, y = {}, {}, {}
    for i in (1, 2):
        std = np.sqrt(ch.beta * np.maximum(np.diag(Q[i]).real, 0.0))
        e[i] = std * (rng.normal(scale=np.sqrt(0.5), size=ch.M)
                      + 1j * rng.normal(scale=np.sqrt(0.5), size=ch.M))
        n[i] = (rng.normal(scale=np.sqrt(0.5), size=ch.N)
                + 1j * rng.normal(scale=np.sqrt(0.5), size=ch.N))
    for i in (1, 2):
        j = other(i)
        y[i] = (np.sqrt(ch.eta[(j, i)]) * ch.H[(j, i)] @ s[j]
                + np.sqrt(ch.eta[(i, i)]) * ch.H[(i, i)] @ e[i] + n[i])
    return {"s": s, "e": e, "n": n, "y": y}


def _complex_to_pairs(A):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(A, dtype=complex)]


def _pairs_to_complex(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def channel_to_dict(ch):
    """JSON-shaped representation: dimensions, row-major [re, im] entries,
    gains in dB."""
    return {
        "M": ch.M,
        "N": ch.N,
        "H": {f"{i}{j}": _complex_to_pairs(ch.H[(i, j)])
              for (i, j) in sorted(ch.H)},
        "eta_db": {f"{i}{j}": float(linear_to_db(ch.eta[(i, j)]))
                   for (i, j) in sorted(ch.eta)},
        "beta_db": None if ch.beta == 0 else float(linear_to_db(ch.beta)),
        "P": {str(i): float(ch.P[i]) for i in (1, 2)},
    }


def channel_from_dict(d):
    H = {(int(k[0]), int(k[1])): _pairs_to_complex(v) for k, v in d["H"].items()}
    eta = {(int(k[0]), int(k[1])): float(db_to_linear(v))
           for k, v in d["eta_db"].items()}
    beta = 0.0 if d["beta_db"] is None else float(db_to_linear(d["beta_db"]))
    P = {int(k): float(v) for k, v in d["P"].items()}
    return FdChannelModel(H=H, eta=eta, beta=beta, P=P)


def save_channel(ch, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(channel_to_dict(ch), f, indent=1)


def load_channel(path):
    with open(path, encoding="utf-8") as f:
        return channel_from_dict(json.load(f))
