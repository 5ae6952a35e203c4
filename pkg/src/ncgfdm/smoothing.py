"""Smooth-signal machinery for time-domain N-continuous GFDM.

A smooth correction w_i, built from V+1 basis signals, is added to each
block so that the stream and its first V derivatives are continuous across
block boundaries.  Derivatives are spectral: bin l differentiates by
(j*2*pi*l/N)**v with signed bin frequency, i.e. the derivative of the
band-limited interpolation of the block.

The basis signals are derivative kernels anchored at the continuity point
n = -n_cp (the first CP sample): basis order v is the v-th spectral
derivative of the order-0 kernel, whose spectrum is the aliased prototype
spectrum and is therefore flat for every roll-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBasisError, ParameterError
from .modem import TimeBlock, add_cyclic_prefix
from .params import WaveformParams, derivative_factors, signed_bins
from .prototype import PrototypeFilter, TransmitterMatrix

#: Condition limit for the boundary system solve.
BASIS_CONDITION_LIMIT = 1e12

#: Build-time tolerance for the structural identities of the constraint set.
BUILD_IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class BasisSet:
    """Sampled basis signals and their boundary derivative values.

    Attributes
    ----------
    Q_full : (N + n_cp, V+1) complex
        Basis columns q_0..q_V sampled on n = -n_cp .. N-1.
    Q : (N, V+1) complex
        Body rows (n = 0..N-1) of the same columns; this is the view used in
        all matrix identities.  The CP rows of Q_full repeat the last n_cp
        body rows because the basis signals are N-periodic.
    F0 : (N,) complex
        Spectrum of the order-0 basis signal (flat for the raised-cosine
        prototype).
    boundary_values : (2V+1,) complex
        f_v(-n_cp) for v = 0..2V; these fill the boundary Gram matrix.
    """

    Q_full: np.ndarray
    Q: np.ndarray
    F0: np.ndarray
    boundary_values: np.ndarray
    V: int
    n_cp: int

    @property
    def N(self) -> int:
        return self.Q.shape[0]

    def extended_column(self, order: int) -> np.ndarray:
        """Basis signal of the given derivative order sampled on n = -n_cp..N-1.

        Orders up to 2V are meaningful (they appear in the boundary Gram
        matrix); higher orders are synthesised on demand.
        """
        N, n_cp = self.N, self.n_cp
        spec = derivative_factors(N, order) * self.F0 * np.exp(
            2j * np.pi * np.arange(N) * n_cp / N
        )
        body = np.fft.ifft(spec)
        return np.concatenate([body[N - n_cp:], body]) if n_cp else body


def build_basis(g: PrototypeFilter, params: WaveformParams) -> BasisSet:
    """Construct the basis set from the prototype filter.

    The order-0 signal is the prototype summed over all K subcarrier
    modulations, which collapses to a K-decimated pulse; order v applies the
    spectral derivative factor v times.  Columns are phase-shifted so the
    kernels are anchored at n = -n_cp.
    """
    N, n_cp, V = params.N, params.n_cp, params.V
    n = np.arange(N)
    # sum over subcarrier modulations: exp(+j*2*pi*k*n/K) summed over k is the
    # geometric comb K * [n ≡ 0 (mod K)]
    comb = np.zeros(N)
    comb[::params.K] = params.K
    f0 = g.samples * comb
    F0 = np.fft.fft(f0)
    anchor = np.exp(2j * np.pi * n * n_cp / N)
    cols = [np.fft.ifft(derivative_factors(N, v) * F0 * anchor) for v in range(V + 1)]
    Q = np.stack(cols, axis=1)
    Q_full = np.concatenate([Q[N - n_cp:], Q], axis=0) if n_cp else Q
    lt = signed_bins(N)
    boundary = np.array(
        [np.sum((2j * np.pi * lt / N) ** v * F0) / N for v in range(2 * V + 1)]
    )
    return BasisSet(Q_full=Q_full, Q=Q, F0=F0, boundary_values=boundary, V=V, n_cp=n_cp)


@dataclass(frozen=True)
class ConstraintMatrices:
    """Precomputed matrices of the boundary-continuity system.

    P_f     : (V+1, V+1) Gram matrix of basis boundary derivatives,
              P_f[a, b] = f_{a+b}(-n_cp); symmetric by construction.
    P_1     : (V+1, N) map from a block's data grid to the derivatives of its
              body at the block end (n = N).
    P_2     : (V+1, N) same map evaluated at the block start (n = -n_cp).
    B       : (V+1, N) spectral differentiation rows (j*2*pi*l/N)**v / N.
    G       : (N, N) DFT of the transmitter matrix, G = F A.
    phi     : (N,) diagonal of the CP phase matrix, exp(-j*2*pi*n_cp*l/N).
    P_w     : (N, N) decoding matrix Q P_f^-1 P_2 used by the recovery receiver.
    P_tilde : (N, N) A^-1 P_w; idempotent for every roll-off, Hermitian only
              when the transmitter matrix is unitary (beta = 0).
    P_hat   : (N, N) A^-1 Q P_f^-1 P_1; propagates the previous block's
              contribution in the power recursion.
    """

    P_f: np.ndarray
    P_f_inv: np.ndarray
    P_1: np.ndarray
    P_2: np.ndarray
    B: np.ndarray
    G: np.ndarray
    phi: np.ndarray
    P_w: np.ndarray
    P_tilde: np.ndarray
    P_hat: np.ndarray
    Q: np.ndarray
    A_inv: np.ndarray
    cond_P_f: float
    build_residuals: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.G.shape[0]

    @property
    def V(self) -> int:
        return self.P_f.shape[0] - 1

    @property
    def Phi(self) -> np.ndarray:
        """Materialised N x N diagonal CP phase matrix."""
        return np.diag(self.phi)


def build_constraints(
    tm: TransmitterMatrix,
    basis: BasisSet,
    params: WaveformParams,
    verify: bool = True,
) -> ConstraintMatrices:
    """Assemble the constraint matrices for a fixed (K, M, V, n_cp, beta).

    With ``verify`` the structural identities that hold for every roll-off
    (P_2 A^-1 Q = P_f, idempotency of P_tilde, P_2 P_tilde = P_2) are checked
    at build time to 1e-9 relative Frobenius; the Hermitian property of
    P_tilde holds only at beta = 0 and is left to the audit report.
    """
    N, V, n_cp = params.N, params.V, params.n_cp
    lt = signed_bins(N)
    U = np.stack([(2j * np.pi * lt / N) ** v for v in range(V + 1)], axis=1)
    B = U.T / N
    G = np.fft.fft(tm.A, axis=0)
    phi = np.exp(-2j * np.pi * n_cp * np.arange(N) / N)
    P_1 = B @ G
    P_2 = B @ (phi[:, None] * G)
    bd = basis.boundary_values
    P_f = np.array([[bd[a + b] for b in range(V + 1)] for a in range(V + 1)])
    cond = float(np.linalg.cond(P_f))
    if not np.isfinite(cond) or cond > BASIS_CONDITION_LIMIT:
        raise DegenerateBasisError(V, params.beta, cond)
    P_f_inv = np.linalg.inv(P_f)
    Q = basis.Q
    P_w = Q @ (P_f_inv @ P_2)
    P_tilde = tm.A_inv @ P_w
    P_hat = tm.A_inv @ (Q @ (P_f_inv @ P_1))
    residuals = {}
    if verify:
        residuals["p2_ainv_q_equals_pf"] = _rel(P_2 @ (tm.A_inv @ Q), P_f)
        residuals["p_tilde_idempotent"] = _rel(P_tilde @ P_tilde, P_tilde)
        residuals["p2_p_tilde_equals_p2"] = _rel(P_2 @ P_tilde, P_2)
        bad = {k: v for k, v in residuals.items() if v > BUILD_IDENTITY_TOL}
        if bad:
            raise DegenerateBasisError(V, params.beta, max(bad.values()))
    return ConstraintMatrices(
        P_f=P_f, P_f_inv=P_f_inv, P_1=P_1, P_2=P_2, B=B, G=G, phi=phi,
        P_w=P_w, P_tilde=P_tilde, P_hat=P_hat, Q=Q, A_inv=tm.A_inv,
        cond_P_f=cond, build_residuals=residuals,
    )


def _rel(x: np.ndarray, y: np.ndarray) -> float:
    ny = np.linalg.norm(y)
    return float(np.linalg.norm(x - y) / (ny if ny > 0 else 1.0))


def make_smoother(params: WaveformParams, verify: bool = True):
    """Convenience constructor: prototype, transmitter matrix, basis, constraints."""
    from .prototype import build_prototype_rc, build_transmitter_matrix

    g = build_prototype_rc(params)
    tm = build_transmitter_matrix(g, params)
    basis = build_basis(g, params)
    cm = build_constraints(tm, basis, params, verify=verify)
    return g, tm, basis, cm


def solve_coefficients(
    cm: ConstraintMatrices,
    d_prev: np.ndarray,
    w_prev: np.ndarray,
    d_cur: np.ndarray,
) -> np.ndarray:
    """Coefficients of the smooth signal for one block.

    Solves P_f b = P_1 d_prev + P_1 A^-1 w_prev - P_2 d_cur: the basis
    boundary derivatives must bridge the gap between the previous smoothed
    block's end and the current block's start.  The first block of a stream
    uses d_prev = 0 and w_prev = 0.
    """
    rhs = cm.P_1 @ d_prev + cm.P_1 @ (cm.A_inv @ w_prev) - cm.P_2 @ d_cur
    return np.linalg.solve(cm.P_f, rhs)


@dataclass(frozen=True)
class SmoothedBlockRecord:
    """One smoothed block: emitted samples plus the smoothing bookkeeping.

    x_bar  : CP-prefixed smoothed block (the smoothed body keeps the true
             cyclic-prefix property because the basis signals are N-periodic).
    w_full : smooth signal on n = -n_cp..N-1.
    w      : body part (n = 0..N-1) of the smooth signal.
    b      : coefficient vector of length V+1.
    d_bar  : effective data A^-1 x_bar_body = d + A^-1 w.
    """

    x_bar: TimeBlock
    w_full: np.ndarray
    w: np.ndarray
    b: np.ndarray
    d_bar: np.ndarray

    @property
    def block_index(self) -> int:
        return self.x_bar.block_index


def smooth_stream(
    tm: TransmitterMatrix,
    cm: ConstraintMatrices,
    basis: BasisSet,
    grids,
    zero_first: bool = False,
) -> list[SmoothedBlockRecord]:
    """Smooth a stream of data grids, carrying the w recursion across blocks.

    ``zero_first`` leaves the first block unsmoothed (w_0 = 0), the
    convention used by the closed-form power analysis; the default applies
    the recursion from block 0 with d_prev = w_prev = 0, which smooths the
    leading edge of the stream as well.
    """
    grids = list(grids)
    if not grids:
        raise ParameterError("smooth_stream requires at least one data grid")
    N, n_cp = cm.N, basis.n_cp
    out = []
    d_prev = np.zeros(N, dtype=complex)
    w_prev = np.zeros(N, dtype=complex)
    for i, d in enumerate(grids):
        d = np.asarray(d, dtype=complex)
        if i == 0 and zero_first:
            b = np.zeros(cm.V + 1, dtype=complex)
        else:
            b = solve_coefficients(cm, d_prev, w_prev, d)
        w_full = basis.Q_full @ b
        w = basis.Q @ b
        body = tm.A @ d + w
        rec = SmoothedBlockRecord(
            x_bar=add_cyclic_prefix(body, n_cp, block_index=i),
            w_full=w_full, w=w, b=b, d_bar=d + cm.A_inv @ w,
        )
        out.append(rec)
        d_prev, w_prev = d, w
    return out


def block_boundary_derivatives(body: np.ndarray, v_max: int, n_cp: int):
    """Spectral derivatives of a block's band-limited interpolation.

    Returns (at_start, at_end): arrays of the 0..v_max-th derivatives
    evaluated at n = -n_cp (the first CP sample) and n = N (one step past
    the body, i.e. the periodic wrap to n = 0).
    """
    N = body.size
    X = np.fft.fft(body)
    lt = signed_bins(N)
    start_phase = np.exp(-2j * np.pi * lt * n_cp / N)
    at_start = np.empty(v_max + 1, dtype=complex)
    at_end = np.empty(v_max + 1, dtype=complex)
    for v in range(v_max + 1):
        DX = (2j * np.pi * lt / N) ** v * X
        at_start[v] = np.sum(DX * start_phase) / N
        at_end[v] = np.sum(DX) / N
    return at_start, at_end


def continuity_residual(
    record_prev: SmoothedBlockRecord,
    record_cur: SmoothedBlockRecord,
    basis: BasisSet,
    v: int,
) -> float:
    """|d^v x_prev(N) - d^v x_cur(-n_cp)| from the emitted body samples.

    Both sides are evaluated by spectral differentiation of the full
    smoothed blocks, so the residual measures what the emitted samples
    actually achieve; it is driven to zero for v <= V and is not required to
    vanish for v > V.
    """
    _, prev_end = block_boundary_derivatives(record_prev.x_bar.body, v, basis.n_cp)
    cur_start, _ = block_boundary_derivatives(record_cur.x_bar.body, v, basis.n_cp)
    return float(np.abs(prev_end[v] - cur_start[v]))
