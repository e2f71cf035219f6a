"""RK4 shooting with parity boundary conditions for the scaled box problem.

The equation psi'' = -(E' - V(u)) psi is integrated as the first-order pair
psi' = phi, phi' = -(E' - V) psi. Because V is even, even states satisfy
phi(0) = 0 and odd states psi(0) = 0, so only the half box [-L, 0] is ever
integrated.

Eigenvalues are located with the Pruefer phase of the shooting solution:
the number of zeros of psi on (-L, 0) together with the quadrant of
(psi(0), phi(0)) counts how many eigenvalues of each parity lie below a
trial energy. That count is monotone in E', so it brackets every level,
including tunnelling multiplets whose midpoint function never changes
sign in double precision. Simple brackets are then refined by bisection on
the midpoint value; multiplets by bisection on the count.

Eigenfunctions are assembled by integrating inward from both ends of the
half box and matching near the amplitude maximum, which keeps each piece
in its numerically stable direction. When the two pieces never overlap
reliably, the state belongs to a tunnelling pair whose splitting is below
double precision; such pairs are built from the two localized lobes and
ordered by node count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as const

from .errors import (FitError, InvalidBracketError, NumericOverflowError, ScanError,
                     SpectrumOrderError)
from .params import ScaledSystem
from .quadrature import simpson_weights

OVERFLOW_GUARD = 1e150
EVEN, ODD = "even", "odd"

# An integration piece is trusted until its envelope has fallen this many
# e-folds below its running maximum.
_TRUST_EFOLDS = 12.0
_SCAN_CHUNK = 8192
_ASSEMBLY_CHUNK = 64


def parity_of(n: int) -> str:
    return EVEN if n % 2 == 0 else ODD


@dataclass
class ShootingState:
    """Shooting solution at one point; actual values are ``(psi, phi) * exp(log_scale)``."""

    psi: float
    phi: float
    log_scale: float = 0.0

    @property
    def values(self):
        s = math.exp(self.log_scale)
        return self.psi * s, self.phi * s


@dataclass
class EigenPair:
    n: int
    parity: str
    E_prime: float
    E_physical: float  # eV
    psi_samples: np.ndarray = field(repr=False)
    K: float  # 1/m
    E_joule: float = float("nan")
    nodes: int = -1
    paired: bool = False  # member of an unresolved tunnelling pair


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    parity: str
    multiplicity: int
    first: int  # index of the first member within its parity sector

    @property
    def sign_change(self) -> bool:
        """True when the midpoint function changes sign across the bracket."""
        return self.multiplicity % 2 == 1

    def global_indices(self):
        offset = 0 if self.parity == EVEN else 1
        return [2 * j + offset for j in range(self.first, self.first + self.multiplicity)]


@dataclass(frozen=True)
class QuadraticFit:
    a0: float
    a1: float
    a2: float
    rms_residual: float

    def __call__(self, n):
        n = np.asarray(n, dtype=float)
        return self.a0 + self.a1 * n + self.a2 * n**2


# ---------------------------------------------------------------- stepping

def rk4_step(state: ShootingState, u: float, h: float, E_prime: float,
             sys: ScaledSystem) -> ShootingState:
    """One classical RK4 step of (psi, phi) from u to u + h."""
    v0, vm, v1 = (float(v) for v in sys.potential(np.array([u, u + 0.5 * h, u + h])))
    psi, phi = state.psi, state.phi
    q0, qm, q1 = v0 - E_prime, vm - E_prime, v1 - E_prime
    k1p, k1f = phi, q0 * psi
    k2p, k2f = phi + 0.5 * h * k1f, qm * (psi + 0.5 * h * k1p)
    k3p, k3f = phi + 0.5 * h * k2f, qm * (psi + 0.5 * h * k2p)
    k4p, k4f = phi + h * k3f, q1 * (psi + h * k3p)
    psi = psi + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
    phi = phi + h / 6 * (k1f + 2 * k2f + 2 * k3f + k4f)
    if not (math.isfinite(psi) and math.isfinite(phi)):
        raise NumericOverflowError(f"non-finite shooting state at u={u + h!r}")
    log_scale = state.log_scale
    m = max(abs(psi), abs(phi))
    if m > OVERFLOW_GUARD or 0 < m < 1 / OVERFLOW_GUARD:
        psi, phi, log_scale = psi / m, phi / m, log_scale + math.log(m)
    return ShootingState(psi, phi, log_scale)


def _half_grid_potential(sys: ScaledSystem) -> np.ndarray:
    """V on the half-step grid u_i = i h / 2, i = -2N..2N (index shifted by 2N)."""
    i = np.arange(-2 * sys.n_half, 2 * sys.n_half + 1)
    return sys.potential(i * (0.5 * sys.h))


class _Propagation:
    """Vectorised RK4 sweep over the half box for an array of energies."""

    def __init__(self, sys: ScaledSystem, E, Vh=None):
        self.sys = sys
        self.E = np.atleast_1d(np.asarray(E, dtype=float))
        self.Vh = _half_grid_potential(sys) if Vh is None else Vh

    def run(self, direction: int, parity=None, store=False, start=None, init=None):
        """Integrate from the wall (direction=+1) or from the midpoint (-1).

        Returns final (psi, phi, log_scale, zeros) where ``zeros`` counts sign
        changes of psi (forward sweeps only). With ``store`` the trajectories
        are returned as well, indexed by grid position j = 0..N over [-L, 0]
        (entries not swept are left uninitialised). ``start`` and ``init``
        override the starting grid index and (psi, phi) there.
        """
        N, h, E, Vh = self.sys.n_half, self.sys.h, self.E, self.Vh
        M = E.size
        if direction > 0:
            psi, phi = np.zeros(M), np.ones(M)
            start = 0 if start is None else start
            j_range = range(start, N)
        else:
            even = np.asarray(parity) == EVEN if parity is not None else np.ones(M, bool)
            even = np.broadcast_to(even, (M,))
            psi = np.where(even, 1.0, 0.0)
            phi = np.where(even, 0.0, 1.0)
            start = N if start is None else start
            j_range = range(start, 0, -1)
        if init is not None:
            psi = np.broadcast_to(np.asarray(init[0], dtype=float), (M,)).copy()
            phi = np.broadcast_to(np.asarray(init[1], dtype=float), (M,)).copy()
        step = h * direction
        half = 0.5 * step
        sixth = step / 6.0
        logs = np.zeros(M)
        zeros = np.zeros(M, dtype=np.int64)
        positive = np.ones(M, dtype=bool)
        if store:
            P = np.empty((N + 1, M))
            F = np.empty((N + 1, M))
            S = np.empty((N + 1, M))
            P[start], F[start], S[start] = psi, phi, logs
        for j in j_range:
            i = 2 * j  # half-grid index of u_j
            q0 = Vh[i] - E
            qm = Vh[i + direction] - E
            q1 = Vh[i + 2 * direction] - E
            k1f = q0 * psi
            k2p = phi + half * k1f
            k2f = qm * (psi + half * phi)
            k3p = phi + half * k2f
            k3f = qm * (psi + half * k2p)
            k4p = phi + step * k3f
            k4f = q1 * (psi + step * k3p)
            psi = psi + sixth * (phi + 2 * k2p + 2 * k3p + k4p)
            phi = phi + sixth * (k1f + 2 * k2f + 2 * k3f + k4f)
            m = np.maximum(np.abs(psi), np.abs(phi))
            out = (m > OVERFLOW_GUARD) | (m < 1 / OVERFLOW_GUARD)
            if out.any():
                out &= m > 0
                s = np.where(out, m, 1.0)
                psi = psi / s
                phi = phi / s
                logs = logs + np.log(s)
            if direction > 0:
                now = psi > 0
                zeros += now != positive
                positive = now
            if store:
                jn = j + direction
                P[jn], F[jn], S[jn] = psi, phi, logs
        if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(phi))):
            raise NumericOverflowError("non-finite shooting state")
        if store:
            return psi, phi, logs, zeros, (P, F, S)
        return psi, phi, logs, zeros


def _sector_counts(psi, phi, zeros):
    """Number of even and odd eigenvalues below the shooting energy."""
    sign = np.where(zeros % 2 == 0, 1.0, -1.0)
    n_odd = zeros.copy()
    n_even = zeros + (sign * phi < 0)
    return n_even, n_odd


def _map_chunks(fn, items, threads):
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def count_below(E, sys: ScaledSystem, threads: int = 1, Vh=None):
    """Numbers of even and odd eigenvalues strictly below each energy in ``E``."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    Vh = _half_grid_potential(sys) if Vh is None else Vh
    chunks = [E[i:i + _SCAN_CHUNK] for i in range(0, E.size, _SCAN_CHUNK)]

    def work(chunk):
        psi, phi, _, zeros = _Propagation(sys, chunk, Vh).run(+1)
        return _sector_counts(psi, phi, zeros)

    parts = _map_chunks(work, chunks, threads)
    if not parts:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def shoot_to_midpoint(E_prime: float, sys: ScaledSystem):
    """(psi(0), phi(0)) of the solution started at u=-L with psi=0, phi=1."""
    psi, phi, logs, _ = _Propagation(sys, [E_prime]).run(+1)
    scale = np.exp(logs[0])
    return float(psi[0] * scale), float(phi[0] * scale)


def _midpoint_values(E, sys, Vh=None):
    psi, phi, _, _ = _Propagation(sys, E, Vh).run(+1)
    return psi, phi


# ---------------------------------------------------------------- spectrum search

def scan_spectrum(E_min: float, E_max: float, step: float, sys: ScaledSystem,
                  threads: int = 1) -> list[Bracket]:
    """Bracket every eigenvalue in [E_min, E_max] on a uniform E' grid.

    A bracket is emitted for each grid interval and parity sector whose
    eigenvalue count increases; ``multiplicity`` is the increase. A
    multiplicity of 1 coincides with a sign change of psi(0) (odd) or
    phi(0) (even). Brackets are ordered by the global index of their first
    member, so parities alternate.
    """
    if not step > 0:
        raise ScanError(f"scan step must be positive, got {step!r}")
    if E_max <= E_min:
        return []
    n_steps = max(1, int(math.ceil((E_max - E_min) / step - 1e-9)))
    grid = E_min + step * np.arange(n_steps + 1)
    grid[-1] = min(grid[-1], E_max) if n_steps > 1 else E_max
    n_even, n_odd = count_below(grid, sys, threads)
    brackets = []
    for parity, counts in ((EVEN, n_even), (ODD, n_odd)):
        d = np.diff(counts)
        if np.any(d < 0):
            k = int(np.argmax(d < 0))
            raise ScanError(
                f"{parity} eigenvalue count decreases between E'={grid[k]:.6g} and "
                f"{grid[k + 1]:.6g}; the grid step h={sys.h} does not resolve this range")
        for k in np.flatnonzero(d):
            brackets.append(Bracket(float(grid[k]), float(grid[k + 1]), parity,
                                    int(d[k]), int(counts[k])))
    brackets.sort(key=lambda b: b.global_indices()[0])
    return brackets


def _bisect_midpoint(lo, hi, parity, sys, tol, Vh=None):
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    odd = np.broadcast_to(np.asarray(parity) == ODD, lo.shape)

    def f(E):
        psi, phi = _midpoint_values(E, sys, Vh)
        return np.where(odd, psi, phi)

    f_lo, f_hi = f(lo), f(hi)
    bad = np.sign(f_lo) * np.sign(f_hi) > 0
    if np.any(bad):
        k = int(np.argmax(bad))
        raise InvalidBracketError(
            f"no sign change of the {'odd' if odd[k] else 'even'} midpoint function in "
            f"[{lo[k]!r}, {hi[k]!r}]")
    s_lo = np.sign(f_lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        active = (hi - lo > tol) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        fm = f(mid)
        left = np.sign(fm) == s_lo
        lo = np.where(active & left, mid, lo)
        hi = np.where(active & ~left, mid, hi)
    return 0.5 * (lo + hi)


def _bisect_count(lo, hi, parity, target, sys, tol, Vh=None):
    """Smallest E' at which the sector count reaches ``target`` (vectorised)."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    odd = np.broadcast_to(np.asarray(parity) == ODD, lo.shape)
    target = np.broadcast_to(np.asarray(target), lo.shape)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        active = (hi - lo > tol) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        psi, phi, _, zeros = _Propagation(sys, mid, Vh).run(+1)
        ne, no = _sector_counts(psi, phi, zeros)
        reached = np.where(odd, no, ne) >= target
        hi = np.where(active & reached, mid, hi)
        lo = np.where(active & ~reached, mid, lo)
    return 0.5 * (lo + hi)


def refine_eigenvalue(bracket, parity: str | None = None, sys: ScaledSystem | None = None,
                      tol: float | None = None) -> float:
    """Bisect the midpoint function psi(0) (odd) or phi(0) (even) inside ``bracket``.

    ``bracket`` is a :class:`Bracket` or a ``(lo, hi)`` pair. Iteration stops
    once the bracket is narrower than ``tol`` (default: the system's
    ``E_prime_resolution``); ``tol=0`` runs to machine precision.
    """
    if isinstance(bracket, Bracket):
        lo, hi = bracket.lo, bracket.hi
        parity = parity or bracket.parity
    else:
        lo, hi = bracket
    tol = sys.E_prime_resolution if tol is None else tol
    return float(_bisect_midpoint([lo], [hi], parity, sys, tol)[0])


def staged_refinement(bracket, parity: str, sys: ScaledSystem, resolution: float = 1e-10,
                      divisions: int = 10) -> float:
    """Refine by rescanning with ten-fold smaller steps until ``resolution``.

    Reproduces the staged grid search; kept as an independent check of
    :func:`refine_eigenvalue`.
    """
    lo, hi = (bracket.lo, bracket.hi) if isinstance(bracket, Bracket) else bracket
    odd = parity == ODD
    while hi - lo > resolution:
        grid = np.linspace(lo, hi, divisions + 1)
        psi, phi = _midpoint_values(grid, sys)
        f = psi if odd else phi
        k = np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) <= 0)
        if k.size == 0:
            raise InvalidBracketError(f"no sign change in [{lo!r}, {hi!r}]")
        lo, hi = grid[k[0]], grid[k[0] + 1]
        if not (lo < hi):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- eigenfunctions

@dataclass
class _Pieces:
    """Half-box eigenfunction candidate for one (E', parity)."""

    half: np.ndarray | None  # matched half-box samples, or None if split
    left: tuple | None = None  # raw inward trajectories of a split state
    right: tuple | None = None
    gap: tuple | None = None  # (end of trusted left piece, start of trusted right piece)


def _envelope(P, F, S, E, V):
    kappa2 = np.maximum(np.abs(E - V), 1.0)
    r = np.sqrt(P**2 + F**2 / kappa2)
    with np.errstate(divide="ignore"):
        return np.log(r) + S


def _materialize(mant, log_scale):
    """mant * exp(log_scale) rescaled so the largest magnitude is O(1)."""
    with np.errstate(divide="ignore"):
        mag = np.log(np.abs(mant)) + log_scale
    ref = np.max(mag[np.isfinite(mag)])
    return mant * np.exp(log_scale - ref)


def _trusted_extent(env):
    """Number of leading samples before the envelope drops too far below its maximum."""
    drop = np.maximum.accumulate(env) - env
    bad = np.flatnonzero(drop > _TRUST_EFOLDS)
    return int(bad[0]) if bad.size else env.size


def _match(E, left, right, V):
    """Join an inward-from-left and an inward-from-right trajectory.

    Returns the joined samples, or ``None`` plus the trusted extents when the
    two pieces never overlap in their trusted ranges.
    """
    PL, FL, SL = left
    PR, FR, SR = right
    envL = _envelope(PL, FL, SL, E, V)
    envR = _envelope(PR, FR, SR, E, V)
    nL = _trusted_extent(envL)  # left piece trusted on j < nL
    first_right = PL.size - _trusted_extent(envR[::-1])  # right piece trusted on j >= this
    if first_right > nL - 2:
        return None, (nL, first_right)
    j = np.arange(first_right, nL)
    score = np.minimum(envL[j] - envL[:nL].max(), envR[j] - envR[first_right:].max())
    m = int(j[np.argmax(score)])
    k2 = max(abs(E - V[m]), 1.0)
    c = (PL[m] * PR[m] + FL[m] * FR[m] / k2) / (PR[m] ** 2 + FR[m] ** 2 / k2)
    mant = np.concatenate([PL[:m + 1], c * PR[m + 1:]])
    logs = np.concatenate([SL[:m + 1], SR[m + 1:] + (SL[m] - SR[m])])
    return _materialize(mant, logs), None


def _half_pieces(E, parity, sys: ScaledSystem, Vh=None):
    """Two-sided integration and matching for arrays of energies/parities."""
    Vh = _half_grid_potential(sys) if Vh is None else Vh
    V = Vh[:2 * sys.n_half + 1:2]  # potential on grid points j = 0..N
    E = np.asarray(E, dtype=float)
    parity = np.asarray(parity)
    prop = _Propagation(sys, E, Vh)
    *_, left = prop.run(+1, store=True)
    *_, right = prop.run(-1, parity=parity, store=True)
    out = []
    for i in range(E.size):
        li = tuple(a[:, i] for a in left)
        ri = tuple(a[:, i] for a in right)
        half, gap = _match(E[i], li, ri, V)
        if half is None:
            out.append(_Pieces(None, li, ri, gap))
        else:
            if parity[i] == ODD:
                half[-1] = 0.0
            out.append(_Pieces(half))
    return out


def _wkb_tail(value, E, V, h):
    """Decaying WKB continuation exp(-int kappa) sqrt(kappa_0/kappa) from one sample.

    ``V`` starts at the sample the tail leaves from; the tail stops at the
    first classical turning point.
    """
    kappa = np.sqrt(np.maximum(V - E, 0.0))
    tail = np.zeros(V.size)
    tail[0] = value
    if kappa[0] == 0.0:
        return tail
    inside = np.flatnonzero(kappa <= 0.0)
    stop = inside[0] if inside.size else V.size
    k = kappa[:stop]
    phase = np.concatenate([[0.0], np.cumsum(0.5 * (k[1:] + k[:-1]) * h)])
    tail[:stop] = value * np.exp(-phase) * np.sqrt(k[0] / k)
    return tail


def _split_lobes(E, parity, pieces: _Pieces, sys: ScaledSystem, Vh):
    """Localized lobes of a tunnelling-pair state.

    The half box is cut at the potential maximum between the trusted pieces.
    Each side is rebuilt by integrating inward from the cut, starting on the
    decaying branch (psi'/psi = -+kappa), and is continued through the
    barrier by its WKB tail, so the lobes overlap smoothly under the barrier.
    """
    V = Vh[:2 * sys.n_half + 1:2]
    nL, first_right = pieces.gap
    lo, hi = min(nL, first_right), max(nL, first_right)
    b = lo + int(np.argmax(V[lo:hi + 1])) if hi > lo else lo
    kappa_b = math.sqrt(max(V[b] - E, 1.0))
    prop = _Propagation(sys, [E], Vh)
    *_, back = prop.run(-1, store=True, start=b, init=(1.0, -kappa_b))
    *_, fwd = prop.run(+1, store=True, start=b, init=(1.0, kappa_b))
    left_piece = tuple(a[:b + 1] for a in pieces.left)
    back_piece = tuple(a[:b + 1, 0] for a in back)
    fwd_piece = tuple(a[b:, 0] for a in fwd)
    right_piece = tuple(a[b:] for a in pieces.right)
    lobes = []
    for (lp, rp, Vs, offset) in ((left_piece, back_piece, V[:b + 1], 0),
                                 (fwd_piece, right_piece, V[b:], b)):
        joined, _ = _match(E, lp, rp, Vs)
        if joined is None:
            raise SpectrumOrderError(
                f"a lobe of the tunnelling pair at E'={E!r} is itself unresolved")
        lobe = np.zeros(sys.n_half + 1)
        lobe[offset:offset + joined.size] = joined
        lobes.append(lobe)
    left, right = lobes
    left[b:] = _wkb_tail(left[b], E, V[b:], sys.h)
    right[:b + 1] = _wkb_tail(right[b], E, V[b::-1], sys.h)[::-1]
    if parity == ODD:
        right[-1] = 0.0
    return left, right


def _mirror(half, parity):
    s = 1.0 if parity == EVEN else -1.0
    full = np.concatenate([half, s * half[-2::-1]])
    full[0] = full[-1] = 0.0
    return full


def count_nodes(psi) -> int:
    """Interior sign changes, ignoring exact zeros."""
    psi = np.asarray(psi)
    nz = psi[psi != 0]
    return int(np.count_nonzero(np.signbit(nz[1:]) != np.signbit(nz[:-1])))


def _normalized(full, w):
    full = full / math.sqrt(float(w @ full**2))
    lead = np.flatnonzero(np.abs(full) > 1e-3 * np.abs(full).max())[0]
    return -full if full[lead] < 0 else full


def _physical(sys: ScaledSystem, E_prime):
    if sys.V0 is None or sys.mass is None or sys.A == 0:
        return float("nan"), float("nan"), float("nan")
    E_J = float(sys.to_physical(E_prime))
    K = math.sqrt(2 * sys.mass * E_J) / const.hbar if E_J > 0 else float("nan")
    return E_J / const.e, E_J, K


def assemble_eigenpair(n: int, E_prime: float, parity: str, sys: ScaledSystem,
                       species=None, field=None) -> EigenPair:
    """Eigenfunction for a refined, isolated eigenvalue.

    The half-box solution is mirrored with the parity sign, pinned to zero at
    +-L and Simpson-normalised. ``species``/``field`` are accepted for
    interface symmetry; the physical scale is carried by ``sys``.
    """
    pieces = _half_pieces([E_prime], [parity], sys)[0]
    if pieces.half is None:
        raise SpectrumOrderError(
            f"state n={n} at E'={E_prime!r} is one of a tunnelling pair that double "
            "precision cannot split; build it with solve_spectrum")
    w = simpson_weights(2 * sys.n_half + 1, sys.h)
    psi = _normalized(_mirror(pieces.half, parity), w)
    nodes = count_nodes(psi)
    if nodes != n:
        raise SpectrumOrderError(
            f"eigenfunction at E'={E_prime!r} has {nodes} nodes but index n={n}; "
            "an eigenvalue was skipped or mis-ordered")
    E_eV, E_J, K = _physical(sys, E_prime)
    return EigenPair(n, parity, float(E_prime), E_eV, psi, K, E_J, nodes)


# ---------------------------------------------------------------- full solve

@dataclass
class Basis:
    """Set of eigenpairs sampled on the system grid (rows of ``psi``)."""

    system: ScaledSystem
    E_prime: np.ndarray
    psi: np.ndarray = field(repr=False)
    parity: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    paired: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.u = self.system.grid
        self.weights = simpson_weights(self.u.size, self.system.h)

    def __len__(self):
        return self.E_prime.size

    @property
    def E_joule(self) -> np.ndarray:
        return self.system.to_physical(self.E_prime)

    @property
    def E_eV(self) -> np.ndarray:
        return self.E_joule / const.e

    @property
    def K(self) -> np.ndarray:
        return np.sqrt(2 * self.system.mass * self.E_joule) / const.hbar

    def __getitem__(self, n) -> EigenPair:
        E_eV, E_J, K = _physical(self.system, self.E_prime[n])
        return EigenPair(int(n), str(self.parity[n]), float(self.E_prime[n]), E_eV,
                         self.psi[n], K, E_J, int(self.nodes[n]), bool(self.paired[n]))

    def pairs(self):
        return [self[n] for n in range(len(self))]

    def truncated(self, n_states: int) -> "Basis":
        return Basis(self.system, self.E_prime[:n_states], self.psi[:n_states],
                     self.parity[:n_states], self.nodes[:n_states], self.paired[:n_states])

    def gram(self) -> np.ndarray:
        return (self.psi * self.weights) @ self.psi.T


def default_scan_limit(sys: ScaledSystem, n_states: int) -> float:
    """Initial upper E' for a scan expected to hold ``n_states`` levels.

    Uses the quadratic level law E ~ a0 + a1 n + a2 n^2 (eV) reported for the
    electron configuration, padded by 10%, when the system has a physical
    scale; otherwise the free-box estimate above the potential maximum.
    """
    free = ((n_states + 1) * math.pi / (2 * sys.L)) ** 2 + (sys.A if sys.include_potential else 0)
    try:
        unit_eV = sys.energy_unit / const.e
    except Exception:
        return 1.1 * free
    reported = (3.75e-3 + 3.415e-5 * n_states + 2.0297e-7 * n_states**2) / unit_eV
    return 1.1 * max(reported, free) if sys.include_potential else 1.1 * free


def solve_spectrum(sys: ScaledSystem, n_states: int, step: float = 0.5,
                   E_max: float | None = None, threads: int = 1) -> Basis:
    """Lowest ``n_states`` eigenpairs of the scaled box problem."""
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    requested = n_states
    Vh = _half_grid_potential(sys)
    E_min = float(min(0.0, Vh.min()))
    E_max = default_scan_limit(sys, requested + 2) if E_max is None else E_max
    while True:
        while sum(int(c[0]) for c in count_below([E_max], sys, Vh=Vh)) < requested + 2:
            E_max *= 1.5
        brackets = scan_spectrum(E_min, E_max, step, sys, threads)
        # solve whole brackets: extend the cut until no multiplet straddles it
        n_states = requested
        while True:
            extended = max([n_states] + [b.global_indices()[-1] + 1 for b in brackets
                                         if b.global_indices()[0] < n_states])
            if extended == n_states:
                break
            n_states = extended
        found = sum(b.multiplicity for b in brackets)
        if found >= n_states:
            break
        E_max *= 1.5

    # one refinement job per state
    jobs = []  # (n, parity, lo, hi, sector index, simple)
    for b in brackets:
        for k, n in enumerate(b.global_indices()):
            if n < n_states:
                jobs.append((n, b.parity, b.lo, b.hi, b.first + k, b.multiplicity == 1))
    jobs.sort()
    if len(jobs) < n_states:
        raise ScanError(f"scan found {len(jobs)} states below E'={E_max:.6g}, "
                        f"need {n_states}")
    E = np.empty(n_states)
    simple = [j for j in jobs if j[5]]
    multi = [j for j in jobs if not j[5]]

    def refine_simple(chunk):
        return _bisect_midpoint([j[2] for j in chunk], [j[3] for j in chunk],
                                [j[1] for j in chunk], sys, 0.0, Vh)

    def refine_multi(chunk):
        return _bisect_count([j[2] for j in chunk], [j[3] for j in chunk],
                             [j[1] for j in chunk], [j[4] + 1 for j in chunk], sys, 0.0, Vh)

    for group, fn in ((simple, refine_simple), (multi, refine_multi)):
        chunks = [group[i:i + 256] for i in range(0, len(group), 256)]
        for chunk, values in zip(chunks, _map_chunks(fn, chunks, threads)):
            for job, value in zip(chunk, values):
                E[job[0]] = value
    return _build_basis(sys, E, Vh, threads).truncated(requested)


def _build_basis(sys: ScaledSystem, E: np.ndarray, Vh, threads: int) -> Basis:
    n_states = E.size
    parity = np.array([parity_of(n) for n in range(n_states)])
    order = list(range(n_states))
    chunks = [order[i:i + _ASSEMBLY_CHUNK] for i in range(0, n_states, _ASSEMBLY_CHUNK)]
    pieces = []
    for part in _map_chunks(lambda c: _half_pieces(E[c], parity[c], sys, Vh), chunks, threads):
        pieces.extend(part)

    w = simpson_weights(2 * sys.n_half + 1, sys.h)
    psi = np.empty((n_states, w.size))
    paired = np.zeros(n_states, dtype=bool)
    for n, p in enumerate(pieces):
        if p.half is not None:
            psi[n] = _normalized(_mirror(p.half, parity[n]), w)

    split = [n for n, p in enumerate(pieces) if p.half is None]
    done = set()
    for n in split:
        if n in done:
            continue
        partner = n + 2
        if (partner >= n_states or partner in done or pieces[partner].half is not None
                or abs(E[partner] - E[n]) > 1e-6 * max(1.0, abs(E[n]))):
            raise SpectrumOrderError(
                f"state n={n} at E'={E[n]!r} could not be matched or paired with a "
                "same-parity partner; the grid or precision does not resolve this level")
        left, right = _split_lobes(E[n], parity[n], pieces[n], sys, Vh)
        a = _normalized(_mirror(left, parity[n]), w)
        b = _normalized(_mirror(right, parity[n]), w)
        plus, minus = (a + b) / math.sqrt(2), (a - b) / math.sqrt(2)
        if count_nodes(plus) > count_nodes(minus):
            plus, minus = minus, plus
        psi[n], psi[partner] = _normalized(plus, w), _normalized(minus, w)
        paired[n] = paired[partner] = True
        done.update((n, partner))

    nodes = np.array([count_nodes(row) for row in psi])
    bad = np.flatnonzero(nodes != np.arange(n_states))
    if bad.size:
        n = int(bad[0])
        raise SpectrumOrderError(
            f"eigenfunction n={n} (E'={E[n]!r}) has {nodes[n]} nodes; "
            "an eigenvalue was skipped or mis-ordered")
    return Basis(sys, E, psi, parity, nodes, paired)


def fit_quadratic(pairs) -> QuadraticFit:
    """Least-squares E_n = a0 + a1 n + a2 n^2 over physical eigenvalues (eV)."""
    if isinstance(pairs, Basis):
        n, E = np.arange(len(pairs), dtype=float), pairs.E_eV
    else:
        n = np.array([p.n for p in pairs], dtype=float)
        E = np.array([p.E_physical for p in pairs], dtype=float)
    if n.size < 3:
        raise FitError(f"need at least 3 eigenpairs, got {n.size}")
    X = np.vander(n, 3, increasing=True)
    if np.linalg.matrix_rank(X) < 3:
        raise FitError("degenerate design matrix (fewer than 3 distinct n)")
    coef, *_ = np.linalg.lstsq(X, E, rcond=None)
    rms = float(np.sqrt(np.mean((X @ coef - E) ** 2)))
    return QuadraticFit(*map(float, coef), rms)


def square_well_coefficient(sys: ScaledSystem) -> float:
    """pi^2 hbar^2 / (8 m l^2) in eV for the physical half width l = L / alpha."""
    half_width = sys.L / sys.alpha
    return math.pi**2 * const.hbar**2 / (8 * sys.mass * half_width**2) / const.e


def square_well_ratio(fit: QuadraticFit, sys: ScaledSystem) -> float:
    """Bare-box level coefficient relative to the fitted linear coefficient."""
    return square_well_coefficient(sys) / fit.a1
