"""Post-solution physics diagnostics.

All diagnostics work on a sampled :class:`~ringctrl.dynamics.Trajectory` of
the converged solution: the conserved coupling norm and its product with the
transfer time (the speed-limit figure), the traveling-wave overlay between a
single site's time series and the spatial profiles, the instantaneous
spectrum with its overlap decomposition, and the geometric phase accumulated
over a full ring transit.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from .core import Q_GAUGE, hamiltonian_matrix
from .dynamics import Trajectory


@dataclass
class SpeedLimitResult:
    """Conserved coupling norm along the trajectory."""

    j0: float
    j0_tau: float
    times: np.ndarray
    coupling_norms: np.ndarray  # sqrt(sum J^2) at every sample

    @property
    def max_rel_variation(self) -> float:
        ref = self.coupling_norms[0]
        if ref == 0.0:
            return float(np.max(np.abs(self.coupling_norms)))
        return float(np.max(np.abs(self.coupling_norms - ref)) / ref)


def speed_limit(trajectory: Trajectory, tau: Optional[float] = None) -> SpeedLimitResult:
    """Coupling-norm series and the scale-invariant product J0 tau.

    J0 is the root of the total squared coupling at t = 0; the series must
    be constant along a true solution (its relative variation is the
    reported diagnostic).
    """
    if tau is None:
        tau = trajectory.config.transfer_time
    js = trajectory.couplings()
    norms = np.sqrt(np.sum(js * js, axis=1))
    j0 = float(norms[0])
    return SpeedLimitResult(j0=j0, j0_tau=j0 * float(tau), times=trajectory.times,
                            coupling_norms=norms)


@dataclass
class TravelingWaveReport:
    max_error: float
    per_quantity: dict  # name -> max error
    site: int
    n_compared: int


def traveling_wave_check(
    trajectory: Trajectory,
    *,
    site: Optional[int] = None,
    quantities: Sequence[str] = ("x", "y"),
) -> TravelingWaveReport:
    """Overlay one site's time series on the spatial profiles.

    A traveling wave satisfies v_m(t* + (s - m) tau) = v_s(t* ... ), i.e. the
    series at site s, shifted by whole periods, reproduces the profile at
    every site and intermediate time.  The trajectory must be uniformly
    sampled with an integer number of samples per period and cover at least
    one period; comparisons use only exact grid points (no interpolation).
    Returns the worst absolute discrepancy.

    ``site`` is 1-based and defaults to N.  Quantities: "x", "y", "psi2"
    (site populations) or "j" (couplings).
    """
    cfg = trajectory.config
    n = cfg.n_sites
    tau = cfg.transfer_time
    s = n if site is None else int(site)
    if not 1 <= s <= n:
        raise ValueError(f"site {s} out of range 1..{n}")
    times = trajectory.times
    if len(times) < 3:
        raise ValueError("trajectory too short for a profile comparison")
    dt = times[1] - times[0]
    if np.max(np.abs(np.diff(times) - dt)) > 1e-9 * tau:
        raise ValueError("traveling-wave check needs uniform sampling")
    per = tau / dt
    k_per = int(round(per))
    if abs(per - k_per) > 1e-6 or k_per < 8:
        raise ValueError(
            "sampling grid must contain an integer (and not too small) number "
            f"of samples per period; got tau/dt = {per:.6g}"
        )
    n_periods = (len(times) - 1) // k_per
    if n_periods < 1:
        raise ValueError("trajectory must cover at least one period")

    fields = {}
    for q in quantities:
        if q == "x":
            fields[q] = trajectory.xs
        elif q == "y":
            fields[q] = trajectory.ys
        elif q == "psi2":
            fields[q] = 2.0 * trajectory.xs**2
        elif q == "j":
            fields[q] = trajectory.couplings()
        else:
            raise ValueError(f"unknown quantity {q!r}")

    per_quantity = {q: 0.0 for q in quantities}
    n_compared = 0
    s0 = s - 1
    for jj in range(k_per + 1):          # profile times t* within one period
        for m0 in range(n):              # profile site (0-based)
            shift = s0 - m0
            idx = shift * k_per + jj     # series index of t = (s - m) tau + t*
            if not 0 <= idx < len(times):
                continue
            n_compared += 1
            for q in quantities:
                err = float(abs(fields[q][jj, m0] - fields[q][idx, s0]))
                if err > per_quantity[q]:
                    per_quantity[q] = err
    return TravelingWaveReport(
        max_error=max(per_quantity.values()),
        per_quantity=per_quantity,
        site=s,
        n_compared=n_compared,
    )


@dataclass
class SpectrumSample:
    """Instantaneous spectrum and overlap decomposition at one time."""

    time: float
    eigenvalues: np.ndarray          # ascending
    overlap_coeffs: np.ndarray       # c_k = <eigvec_k | psi>

    @property
    def overlap_sq_sum(self) -> float:
        return float(np.sum(np.abs(self.overlap_coeffs) ** 2))

    @property
    def chiral_symmetry_defect(self) -> float:
        """Max |E_k + E_{n-1-k}|: zero for a spectrum symmetric about 0."""
        return float(np.max(np.abs(self.eigenvalues + self.eigenvalues[::-1])))

    @property
    def max_overlap_sq(self) -> float:
        return float(np.max(np.abs(self.overlap_coeffs) ** 2))


def _fix_eigvec_phases(vec: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real
    positive (deterministic output regardless of LAPACK's phase choice)."""
    k = np.argmax(np.abs(vec), axis=0)
    ph = vec[k, np.arange(vec.shape[1])]
    ph = ph / np.abs(ph)
    return vec / ph[None, :]


def instantaneous_spectrum(trajectory: Trajectory):
    """Diagonalize the q-gauge Hamiltonian at every sample and expand the
    wave function in the instantaneous eigenbasis.

    Eigenvalues come out ascending; eigenvector phases are fixed
    deterministically.  No continuity tracking across times is attempted --
    each sample stands alone.
    """
    cfg = trajectory.config
    js = trajectory.couplings()
    psis = trajectory.wavefunctions_q()
    out = []
    for i, t in enumerate(trajectory.times):
        h = hamiltonian_matrix(js[i], Q_GAUGE, cfg)
        ev, vec = np.linalg.eigh(h)
        vec = _fix_eigvec_phases(vec)
        psi = psis[i].astype(complex)
        psi /= np.linalg.norm(psi)  # expand the normalized physical state
        c = vec.conj().T @ psi
        out.append(SpectrumSample(time=float(t), eigenvalues=ev, overlap_coeffs=c))
    return out


@dataclass
class PhaseResult:
    """Geometric phase of the cyclic ring transit.

    ``aa_phase`` = ``winding_phase`` + ``dynamical_integral`` reduced to
    (-pi, pi].  ``winding_phase`` is the measured closure phase
    arg <psi(0)|psi(T)>; ``closure_defect`` is how far psi(T) is from
    e^{i phi} psi(0); ``winding_mismatch`` compares the measured phi with the
    expected winding.
    """

    winding_phase: float
    dynamical_integral: float
    aa_phase: float
    closure_defect: float
    winding_mismatch: float
    expectation_imag_max: float


def _wrap_angle(a: float) -> float:
    w = (a + np.pi) % (2.0 * np.pi) - np.pi
    return np.pi if w == -np.pi else w


def circular_distance(a: float, b: float) -> float:
    """Distance between two angles on the circle."""
    return abs(_wrap_angle(a - b))


def aa_phase_from_samples(
    times: np.ndarray,
    psis: np.ndarray,
    couplings: np.ndarray,
    config,
    winding: float = np.pi,
    *,
    gauge: str = Q_GAUGE,
    closure_tol: float = 1e-3,
) -> PhaseResult:
    """Geometric phase from sampled wave functions and couplings.

    ``psis`` has one (complex) wave function per row in the given gauge,
    ``couplings`` one profile per row.  Invariant under a uniform global
    phase of all psi samples: the closure phase and the energy expectations
    are both phase-blind.
    """
    times = np.asarray(times, dtype=float)
    psis = np.asarray(psis, dtype=complex)
    overlap = complex(np.vdot(psis[0], psis[-1]))
    phi = float(np.angle(overlap))
    closure = float(np.linalg.norm(psis[-1] - np.exp(1j * phi) * psis[0]))
    if closure > closure_tol:
        raise ValueError(
            f"trajectory does not close: defect {closure:.3e} "
            f"(tolerance {closure_tol:.1e})"
        )

    expect = np.empty(len(times))
    worst_imag = 0.0
    for i in range(len(times)):
        h = hamiltonian_matrix(couplings[i], gauge, config)
        val = complex(np.vdot(psis[i], h @ psis[i]))
        expect[i] = val.real
        worst_imag = max(worst_imag, abs(val.imag))
    integral = float(simpson(expect, x=times))

    gamma = _wrap_angle(phi + integral)
    return PhaseResult(
        winding_phase=phi,
        dynamical_integral=integral,
        aa_phase=float(gamma),
        closure_defect=closure,
        winding_mismatch=circular_distance(phi, winding),
        expectation_imag_max=float(worst_imag),
    )


def aa_phase(
    trajectory: Trajectory,
    winding: float = np.pi,
    *,
    closure_tol: float = 1e-3,
) -> PhaseResult:
    """Geometric phase gamma = phi + integral of <psi|H|psi> dt over a closed
    trajectory (composite Simpson quadrature on the trajectory samples).

    ``phi`` is measured from the endpoint overlap; the trajectory must close
    up to a global phase (``closure_defect`` beyond ``closure_tol`` raises).
    For the ring soliton over one full transit the wave function returns to
    minus itself (phi = pi) while the energy expectation vanishes
    identically, so gamma = pi.  ``winding`` is the expected phi, reported
    against the measured one.
    """
    return aa_phase_from_samples(
        trajectory.times,
        trajectory.wavefunctions_q().astype(complex),
        trajectory.couplings(),
        trajectory.config,
        winding,
        gauge=Q_GAUGE,
        closure_tol=closure_tol,
    )
