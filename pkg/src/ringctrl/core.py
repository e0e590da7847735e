"""Domain types, ring index arithmetic, gauge transforms and reconstruction.

Everything downstream derives from a single complex amplitude vector
``a = x + i y`` living on the N sites of the ring: the wave function, the
nearest-neighbor couplings and the Hamiltonian matrix are all algebraic
images of it.  Sites are numbered 1..N in documentation and formulas;
storage is 0-based.  The ring closes antiperiodically: continuing past the
seam flips the sign, ``a_{N+1} = -a_1`` and ``a_0 = -a_N``.
"""

import numpy as np
from dataclasses import dataclass

from .config import RingConfig, ConvergenceError

SITE_GAUGE = "site"
Q_GAUGE = "q_transformed"
_GAUGES = (SITE_GAUGE, Q_GAUGE)


def _as_vector(v, name):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    return arr


@dataclass
class LaxEigenvector:
    """Real and imaginary parts of the amplitude vector ``a = x + i y``.

    A valid state is normalized componentwise, <x|x> = <y|y> = 1/2, and the
    two parts are orthogonal, <x|y> = 0 (together: <a|a> = 1, <a*|a> = 0).
    Validity is not enforced on construction; use :meth:`defects` /
    :meth:`require_valid` where the tolerance matters.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = _as_vector(self.x, "x")
        self.y = _as_vector(self.y, "y")
        if self.x.shape != self.y.shape:
            raise ValueError(f"x and y must match, got {self.x.shape} vs {self.y.shape}")

    @property
    def n_sites(self) -> int:
        return self.x.size

    def as_complex(self) -> np.ndarray:
        return self.x + 1j * self.y

    @classmethod
    def from_complex(cls, a) -> "LaxEigenvector":
        a = np.asarray(a, dtype=complex)
        return cls(a.real.copy(), a.imag.copy())

    def as_real_pair(self) -> np.ndarray:
        """Stacked real state vector (x_1..x_N, y_1..y_N) used by the integrator."""
        return np.concatenate([self.x, self.y])

    @classmethod
    def from_real_pair(cls, z) -> "LaxEigenvector":
        z = np.asarray(z, dtype=float)
        n = z.size // 2
        return cls(z[:n].copy(), z[n:].copy())

    def defects(self):
        """(|<x|x> - 1/2|, |<y|y> - 1/2|, |<x|y>|)."""
        return (
            abs(self.x @ self.x - 0.5),
            abs(self.y @ self.y - 0.5),
            abs(self.x @ self.y),
        )

    def require_valid(self, tol: float = 1e-10):
        dx, dy, dxy = self.defects()
        if max(dx, dy, dxy) > tol:
            raise ValueError(
                "eigenvector invariants violated: "
                f"|<x|x>-1/2|={dx:.3e}, |<y|y>-1/2|={dy:.3e}, |<x|y>|={dxy:.3e} "
                f"(tolerance {tol:.1e})"
            )
        return self

    def copy(self) -> "LaxEigenvector":
        return LaxEigenvector(self.x.copy(), self.y.copy())


@dataclass
class CouplingProfile:
    """Nearest-neighbor couplings at one instant.

    Entry m (1-based, m = 1..N-1) is the coupling of the (m, m+1) link;
    entry N is the seam coupling (N, 1).  Units of energy.
    """

    j: np.ndarray

    def __post_init__(self):
        self.j = _as_vector(self.j, "j")
        if not np.all(np.isfinite(self.j)):
            raise ValueError("couplings must be finite")

    @property
    def n_sites(self) -> int:
        return self.j.size

    @property
    def norm_sq(self) -> float:
        """Sum of squared couplings; conserved along optimal trajectories."""
        return float(self.j @ self.j)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq))


@dataclass
class WaveFunction:
    """Single-excitation amplitudes with their gauge tag."""

    amplitudes: np.ndarray
    gauge: str = Q_GAUGE

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != 1:
            raise ValueError("amplitudes must be a 1-D vector")
        if self.gauge not in _GAUGES:
            raise ValueError(f"unknown gauge {self.gauge!r}")

    @property
    def n_sites(self) -> int:
        return self.amplitudes.size

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm_defect(self) -> float:
        return abs(float(self.populations().sum()) - 1.0)


def ring_neighbor(m: int, direction: int, config: RingConfig):
    """Neighbor of site ``m`` (1-based) in ``direction`` (+1 right, -1 left).

    Returns ``(index, sign)``: the wrapped 1-based site index and the
    antiperiodic sign factor, -1 exactly when the seam between sites N and 1
    is crossed (``a_{N+1} = -a_1`` and ``a_0 = -a_N``).
    """
    n = config.n_sites
    if not 1 <= m <= n:
        raise ValueError(f"site index {m} out of range 1..{n}")
    if direction == 1:
        return (1, -1) if m == n else (m + 1, 1)
    if direction == -1:
        return (n, -1) if m == 1 else (m - 1, 1)
    raise ValueError(f"direction must be +1 or -1, got {direction!r}")


def antiperiodic_shift(v: np.ndarray, k: int = 1) -> np.ndarray:
    """Vector of neighbor values ``v'_m = v_{m+k}`` under the antiperiodic
    continuation ``v_{m+N} = -v_m``.

    The |k| entries that wrap past the seam carry the flipped sign.  This is
    the vectorized form of :func:`ring_neighbor` applied to amplitudes.
    """
    v = np.asarray(v)
    n = v.size
    k = int(k) % (2 * n)  # continuation has period 2N
    sign = 1.0
    if k >= n:
        k -= n
        sign = -1.0
    w = np.roll(v, -k)
    if k:
        w[-k:] = -w[-k:]
    return sign * w


def q_transform(v, direction: str = "forward") -> np.ndarray:
    """Diagonal gauge transform with entries i^(m-1) on site m.

    ``forward`` multiplies component m by i^(m-1), ``inverse`` by i^(1-m);
    the two compose to the identity.  In the transformed frame the
    nearest-neighbor Hamiltonian becomes purely imaginary.
    """
    v = np.asarray(v)
    phases = np.array([1.0, 1.0j, -1.0, -1.0j])[np.arange(v.size) % 4]
    if direction == "forward":
        return v * phases
    if direction == "inverse":
        return v * phases.conj()
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def wavefunction_from_lax(a: LaxEigenvector, gauge: str = Q_GAUGE, *,
                          tol: float = 1e-8) -> WaveFunction:
    """Wave function encoded by the eigenvector: psi = (a + a*)/sqrt(2).

    In the q gauge this is purely real, psi_m = sqrt(2) x_m.  The site gauge
    applies the forward Q dressing, psi_m = i^(m-1) sqrt(2) x_m; this is the
    phase convention under which the real site-basis Hamiltonian produced by
    :func:`hamiltonian_matrix` generates the correct transport (the two
    choices of dressing direction differ by a sign of all couplings).
    Normalization holds exactly when <x|x> = 1/2.
    """
    if gauge not in _GAUGES:
        raise ValueError(f"unknown gauge {gauge!r}")
    nx = a.x @ a.x
    if abs(nx - 0.5) > tol:
        raise ValueError(
            f"|<x|x> - 1/2| = {abs(nx - 0.5):.3e} exceeds tolerance {tol:.1e}; "
            "wave function would not be normalized"
        )
    psi_q = np.sqrt(2.0) * a.x.astype(complex)
    if gauge == Q_GAUGE:
        return WaveFunction(psi_q, Q_GAUGE)
    return WaveFunction(q_transform(psi_q, "forward"), SITE_GAUGE)


def couplings_from_lax(a: LaxEigenvector, config: RingConfig) -> CouplingProfile:
    """Couplings J_{m,m+1} = 2 L0 (x_{m+1} y_m - x_m y_{m+1}).

    The seam entry J_{N,1} uses the antiperiodically continued amplitudes
    (x_{N+1}, y_{N+1}) = (-x_1, -y_1), i.e. both factors carry the seam sign.
    """
    if a.n_sites != config.n_sites:
        raise ValueError(f"state has {a.n_sites} sites, config has {config.n_sites}")
    xp = antiperiodic_shift(a.x, 1)
    yp = antiperiodic_shift(a.y, 1)
    j = 2.0 * config.lax_scale * (xp * a.y - a.x * yp)
    return CouplingProfile(j)


def hamiltonian_matrix(j: CouplingProfile, gauge: str = SITE_GAUGE,
                       config: RingConfig = None) -> np.ndarray:
    """Hermitian traceless N x N Hamiltonian for a coupling profile.

    Site gauge: real symmetric, H[m, m+1] = H[m+1, m] = J_{m,m+1} and
    H[1, N] = H[N, 1] = J_{N,1}.

    Q gauge: purely imaginary, H[m, m+1] = i J_{m,m+1} in the bulk while the
    seam entry is H[N, 1] = -i J_{N,1}.  The extra seam sign is the
    antiperiodic twist expressed as a matrix element; with it the q-gauge
    matrix coincides with the nearest-neighbor part of the rank-2 operator
    L0 (|a><a| - |a*><a*|), which is what drives the reduced dynamics.
    """
    jv = j.j if isinstance(j, CouplingProfile) else _as_vector(j, "j")
    n = jv.size
    h = np.zeros((n, n), dtype=complex)
    rows = np.arange(n - 1)
    if gauge == SITE_GAUGE:
        h[rows, rows + 1] = jv[:-1]
        h[rows + 1, rows] = jv[:-1]
        h[n - 1, 0] = jv[-1]
        h[0, n - 1] = jv[-1]
    elif gauge == Q_GAUGE:
        h[rows, rows + 1] = 1j * jv[:-1]
        h[rows + 1, rows] = -1j * jv[:-1]
        h[n - 1, 0] = -1j * jv[-1]
        h[0, n - 1] = 1j * jv[-1]
    else:
        raise ValueError(f"unknown gauge {gauge!r}")
    return h


def hermitian_defect(m: np.ndarray) -> float:
    """Max absolute deviation of a matrix from its conjugate transpose."""
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def partial_theta(p: float, q: float, tol: float = 1e-16,
                  max_terms: int = 10**6) -> float:
    """Partial theta sum over m >= 0 of p^m q^(m^2), truncated when the next
    term drops below ``tol`` in magnitude.

    Converges for any finite p when 0 < q < 1 because the q^(m^2) factor
    eventually dominates.  The ``max_terms`` guard cannot trigger for valid
    q; it exists to fail loudly instead of spinning on bad input.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q!r}")
    if not np.isfinite(p):
        raise ValueError(f"p must be finite, got {p!r}")
    total = 0.0
    term = 1.0  # m = 0
    m = 0
    while abs(term) >= tol:
        total += term
        term *= p * q ** (2 * m + 1)  # ratio of consecutive terms
        m += 1
        if m > max_terms:
            raise ConvergenceError(
                f"partial theta sum did not converge within {max_terms} terms"
            )
    return total


def _symmetrize(x: np.ndarray, y: np.ndarray):
    """Project onto the exact mirror symmetry of the traveling solution:
    x even, y odd about the middle site, and renormalize to 1/2 each."""
    x = 0.5 * (x + x[::-1])
    y = 0.5 * (y - y[::-1])
    x = x * np.sqrt(0.5 / (x @ x))
    nrm = y @ y
    if nrm > 0:
        y = y * np.sqrt(0.5 / nrm)
    return x, y


def initial_guess_fit(config: RingConfig) -> LaxEigenvector:
    """Analytic envelope guess for the traveling-wave solution (odd N).

    x is a localized bump, exp(-2 Theta_p(zeta^2, 1/e)) with
    zeta = m - (N+1)/2, and y is an antisymmetric kink with non-decaying
    tails, tanh(0.8 zeta) times a fitted even profile.  Both are normalized
    numerically to <x|x> = <y|y> = 1/2 and projected onto exact mirror
    symmetry; no closed-form normalization constants are used.
    """
    config.require_odd()
    n = config.n_sites
    zeta = np.arange(1, n + 1, dtype=float) - (n + 1) / 2.0
    q = 1.0 / np.e
    x = np.array([np.exp(-2.0 * partial_theta(z * z, q)) for z in zeta])
    y = np.tanh(0.8 * zeta) * (
        0.14853
        + np.exp(-1.38 - 0.3 * zeta**2 - 0.08 * zeta**4
                 + 0.009 * zeta**6 - 0.00028 * zeta**8)
    )
    x, y = _symmetrize(x, y)
    return LaxEigenvector(x, y)


def random_symmetric_guess(config: RingConfig, seed: int) -> LaxEigenvector:
    """Seeded random state with the solver's symmetry (x even, y odd) and
    exact normalization; used for the ``random`` guess mode."""
    config.require_odd()
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(config.n_sites)
    y = rng.standard_normal(config.n_sites)
    x, y = _symmetrize(x, y)
    return LaxEigenvector(x, y)
