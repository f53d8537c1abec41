"""Transport machinery for linear ODE systems w' = M(x, lam) w.

Two devices keep long integrations of the linearized systems cheap and
stiffness-proof:

* second exterior power: a 2-plane of solutions of the 4-dim system is
  carried as a single 6-vector of Pluecker coordinates, so the stiff
  fast/slow splitting inside the plane cancels out of the transport;
* lambda-polynomial RK4 ladders: for M affine in lam the one-step RK4
  propagator is a degree-4 matrix polynomial in lam.  Its coefficients
  are recovered exactly by DFT interpolation at the fifth roots of
  unity and precomputed once per grid, after which a whole contour of
  lam values reuses the same ladder of real matrices.

Growth is removed by per-step max-norm rescaling; the rescale factors
are positive reals, so the accumulated exponent never touches the
phase and the reconstructed value mantissa * exp(exponent) stays an
analytic function of lam.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

# signs of e_I ^ e_J = sign * e_0123 for complementary index pairs;
# PAIR_DUAL[p] is the complementary pair position
PAIR_DUAL = (5, 4, 3, 2, 1, 0)
PAIR_SIGN = (1.0, -1.0, 1.0, 1.0, -1.0, 1.0)


def _lift_tensor() -> np.ndarray:
    # derivation lift: d/dt (v ^ w) = Av ^ w + v ^ Aw, as a (6,6) matrix
    # acting on Pluecker coordinates; T contracts against A entrywise
    T = np.zeros((6, 6, 4, 4))
    for P, (i, j) in enumerate(PAIRS):
        for Q, (k, l) in enumerate(PAIRS):
            if j == l:
                T[P, Q, i, k] += 1.0
            if j == k:
                T[P, Q, i, l] -= 1.0
            if i == k:
                T[P, Q, j, l] += 1.0
            if i == l:
                T[P, Q, j, k] -= 1.0
    return T


_LIFT = _lift_tensor()


def lift2(A: np.ndarray) -> np.ndarray:
    """Derivation lift of A to the second exterior power; batched."""
    return np.einsum("pqab,...ab->...pq", _LIFT, A)


def compound2_mult(M: np.ndarray) -> np.ndarray:
    """Multiplicative second compound: (C w)(v1^v2) = Mv1 ^ Mv2.

    Entries are the 2x2 minors of M; batched over leading axes.
    """
    M = np.asarray(M)
    C = np.empty(M.shape[:-2] + (6, 6), dtype=M.dtype)
    for P, (i, j) in enumerate(PAIRS):
        for Q, (k, l) in enumerate(PAIRS):
            C[..., P, Q] = (M[..., i, k] * M[..., j, l]
                            - M[..., i, l] * M[..., j, k])
    return C


def wedge2(V: np.ndarray) -> np.ndarray:
    """Pluecker coordinates of the column pair of V with shape (..., 4, 2)."""
    V = np.asarray(V)
    out = np.empty(V.shape[:-2] + (6,), dtype=V.dtype)
    for P, (i, j) in enumerate(PAIRS):
        out[..., P] = V[..., i, 0] * V[..., j, 1] - V[..., j, 0] * V[..., i, 1]
    return out


def pairing(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Top-degree pairing <w ^ v> / e_0123 of two bivectors.

    For w = wedge2(columns 1,2) and v = wedge2(columns 3,4) this equals
    det of the 4x4 matrix of all four columns.
    """
    w = np.asarray(w)
    v = np.asarray(v)
    acc = 0.0
    for P in range(6):
        acc = acc + PAIR_SIGN[P] * w[..., P] * v[..., PAIR_DUAL[P]]
    return acc


# ---------------------------------------------------------------------------
# lambda-polynomial RK4 ladders


@dataclass
class CoefficientLadder:
    """Precomputed RK4 one-step propagators as polynomials in lam.

    coeffs[k, n] is the k-th polynomial coefficient (6x6 real) of the
    step x[n] -> x[n+1]; Phi_n(lam) = sum_k coeffs[k, n] lam^k.
    """
    xs: np.ndarray                 # (n+1,) node positions, any direction
    coeffs: np.ndarray             # (5, n, m, m)

    @property
    def nsteps(self) -> int:
        return len(self.xs) - 1


def build_ladder(matrix_fn: Callable[[np.ndarray, complex], np.ndarray],
                 xs: np.ndarray) -> CoefficientLadder:
    """Assemble the polynomial ladder for w' = M(x, lam) w over nodes xs.

    matrix_fn(x_array, lam) must return the batched matrix and be affine
    in lam with real coefficient parts (M = M0(x) + lam M1).
    """
    xs = np.asarray(xs, dtype=float)
    h = np.diff(xs)
    mids = 0.5 * (xs[:-1] + xs[1:])
    M0_nodes = matrix_fn(xs, 0.0)
    M1 = matrix_fn(xs[:1], 1.0)[0] - M0_nodes[0]     # constant in x
    M0_mid = matrix_fn(mids, 0.0)
    m = M0_nodes.shape[-1]
    Ma0, Mm0, Mb0 = M0_nodes[:-1], M0_mid, M0_nodes[1:]

    # exact degree-4 polynomial recovery: evaluate the one-step RK4
    # propagator at the fifth roots of unity, inverse DFT the results
    roots = np.exp(2j * np.pi * np.arange(5) / 5.0)
    n = len(h)
    phis = np.empty((5, n, m, m), dtype=complex)
    I = np.eye(m)
    hh = h[:, None, None]
    for v, lam in enumerate(roots):
        Ma = Ma0 + lam * M1
        Mm = Mm0 + lam * M1
        Mb = Mb0 + lam * M1
        k1 = Ma
        k2 = Mm + 0.5 * hh * (Mm @ k1)
        k3 = Mm + 0.5 * hh * (Mm @ k2)
        k4 = Mb + hh * (Mb @ k3)
        phis[v] = I + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # inverse DFT; the node set is closed under conjugation and the
    # propagator has real polynomial coefficients, so imag parts are noise
    dft = np.exp(-2j * np.pi * np.outer(np.arange(5), np.arange(5)) / 5.0) / 5.0
    coeffs = np.einsum("kv,vnab->knab", dft, phis)
    return CoefficientLadder(xs=xs, coeffs=np.ascontiguousarray(coeffs.real))


def sweep(ladder: CoefficientLadder, w0: np.ndarray,
          lams: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Propagate w0 through every step of the ladder for a batch of lams.

    w0: (nlam, m) start vectors; returns (mantissas (nlam, m), exponents
    (nlam,)) with true solution = mantissa * exp(exponent).
    """
    lams = np.asarray(lams, dtype=complex)
    w = np.array(w0, dtype=complex, copy=True)
    expo = np.zeros(len(lams))
    # initial rescale so every lane starts O(1)
    r = np.max(np.abs(w), axis=1)
    if np.any(r == 0.0):
        raise ValueError("zero initial compound vector in sweep")
    w /= r[:, None]
    expo += np.log(r)

    C0, C1, C2, C3, C4 = ladder.coeffs
    lam_col = lams[:, None, None]
    for n in range(ladder.nsteps):
        phi = C4[n] * lam_col
        phi += C3[n]
        phi *= lam_col
        phi += C2[n]
        phi *= lam_col
        phi += C1[n]
        phi *= lam_col
        phi += C0[n]
        w = np.einsum("nab,nb->na", phi, w)
        r = np.max(np.abs(w), axis=1)
        if np.any(r == 0.0) or not np.all(np.isfinite(r)):
            raise FloatingPointError("compound sweep lost the solution "
                                     f"at step {n} (x = {ladder.xs[n + 1]:g})")
        w /= r[:, None]
        expo += np.log(r)
    return w, expo


# ---------------------------------------------------------------------------
# direct (non-compound) column transport, for cross-checks


def transport_columns(matrix_fn: Callable[[np.ndarray, complex], np.ndarray],
                      xs: np.ndarray, V0: np.ndarray, lam: complex,
                      renorm_every: int = 8) -> np.ndarray:
    """RK4-transport a column block V0 of w' = M(x, lam) w along xs.

    QR-renormalizes every few steps, so only the spanned subspace is
    meaningful on return (orthonormal basis).  Diagnostic-grade path.
    """
    xs = np.asarray(xs, dtype=float)
    V = np.array(V0, dtype=complex, copy=True)
    mids = 0.5 * (xs[:-1] + xs[1:])
    Mn = matrix_fn(xs, lam)
    Mm = matrix_fn(mids, lam)
    for n in range(len(xs) - 1):
        h = xs[n + 1] - xs[n]
        k1 = Mn[n] @ V
        k2 = Mm[n] @ (V + 0.5 * h * k1)
        k3 = Mm[n] @ (V + 0.5 * h * k2)
        k4 = Mn[n + 1] @ (V + h * k3)
        V = V + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (n + 1) % renorm_every == 0:
            V, _ = np.linalg.qr(V)
    V, _ = np.linalg.qr(V)
    return V


def reconstruct_plane(w: np.ndarray) -> Tuple[np.ndarray, float]:
    """Orthonormal basis of the 2-plane with Pluecker coordinates w.

    The plane is the null space of v |-> v ^ w (a 4x4 map into the
    third exterior power).  Returns (basis (4, 2), decomposability):
    the score is sigma_2 / sigma_1 of that map and vanishes exactly
    when w is a pure wedge.
    """
    w = np.asarray(w, dtype=complex)
    T = np.zeros((4, 4), dtype=complex)
    # column a: coefficients of e_a ^ w on the basis e_{rst}, r<s<t,
    # indexed by the missing coordinate m
    for P, (i, j) in enumerate(PAIRS):
        for a in range(4):
            if a == i or a == j:
                continue
            trip = (a, i, j)
            m = ({0, 1, 2, 3} - set(trip)).pop()
            srt = tuple(sorted(trip))
            # parity of the permutation taking (a, i, j) to sorted order
            perm = [trip.index(t) for t in srt]
            sign = 1.0 if perm in ([0, 1, 2], [1, 2, 0], [2, 0, 1]) else -1.0
            T[m, a] += sign * w[P]
    U, sig, Vh = np.linalg.svd(T)
    basis = Vh[2:, :].conj().T
    score = sig[2] / sig[1] if sig[1] > 0 else np.inf
    return basis, float(score)


def subspace_angle(P: np.ndarray, Q: np.ndarray) -> float:
    """Largest principal angle between the column spans (orthonormalized).

    Uses cos from P^H Q and sin from the complementary projection, so
    tiny angles are resolved to machine precision instead of sqrt(eps).
    """
    P, _ = np.linalg.qr(np.asarray(P, dtype=complex))
    Q, _ = np.linalg.qr(np.asarray(Q, dtype=complex))
    c = float(np.min(np.linalg.svd(P.conj().T @ Q, compute_uv=False)))
    s = float(np.max(np.linalg.svd(Q - P @ (P.conj().T @ Q),
                                   compute_uv=False)))
    return float(np.arctan2(s, min(c, 1.0)))
