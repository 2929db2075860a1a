"""Independent ground truth: dense diagonalization and one-qubit closed forms.

The one-qubit model: Hamiltonian X + Z (ground energy -sqrt(2)), a single
Ry(theta) preparation, post-processing f = diag(1 - r, 1 + r), and one noise
channel applied to the prepared state.  Every quantity in
:class:`OneQubitRecord` is a closed form transcribed from the analytic
solution of that model; each is cross-checked against direct 2x2 dense algebra
in the test suite before being trusted as an oracle.

Conventions for the records
---------------------------
* depolarizing: r_neural is the leading-order optimum sqrt(2) p; E_neural is
  the exact energy at that r (the pair is exactly consistent).  The true
  argmin differs from sqrt(2) p at O(p^2) and lowers the energy only at
  O(p^4); :func:`one_qubit_neural_optimum` returns it when needed.
* amplitude damping: E_neural is the exact optimum; r_neural is the exact
  argmin (root of a quadratic).  The joint optimum is a boundary limit
  (theta -> 0, r -> 1) where the energy and both observables recover their
  noise-free values exactly; the stored parameters are those limits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliSum, dense

SQRT2 = np.sqrt(2.0)
THETA0 = np.arctan(1.0 + SQRT2)  # noiseless optimum, approx 1.178


def exact_ground_energy(h: PauliSum) -> float:
    """Smallest eigenvalue of the dense realization (n <= 12)."""
    return float(np.linalg.eigvalsh(dense(h))[0])


@dataclass(frozen=True)
class OneQubitRecord:
    channel: str
    strength: float
    theta0: float
    e_baseline: float
    e_neural: float
    e_joint: float
    r_neural: float
    r_joint: float
    theta_joint: float
    dev_baseline: tuple   # (X deviation, Z deviation) from -1/sqrt(2)
    dev_neural: tuple
    dev_joint: tuple

    def energies(self) -> dict:
        return {"baseline": self.e_baseline, "neural": self.e_neural, "joint": self.e_joint}


def one_qubit_rho(theta: float, channel: str, strength: float) -> np.ndarray:
    """Noisy 2x2 state of the Ry circuit: the dense-algebra side of the oracle."""
    psi = np.array([np.cos(theta), -np.sin(theta)], dtype=complex)
    rho = np.outer(psi, psi.conj())
    if channel == "depolarizing":
        return (1 - strength) * rho + strength * np.eye(2) / 2
    if channel == "amplitude_damping":
        g = strength
        k0 = np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=complex)
        k1 = np.array([[0, np.sqrt(g)], [0, 0]], dtype=complex)
        return k0 @ rho @ k0.conj().T + k1 @ rho @ k1.conj().T
    raise ValueError(f"unknown channel {channel!r}")


def one_qubit_energy(rho: np.ndarray, r: float) -> float:
    """Tr(f rho f H)/Tr(f rho f) with f = diag(1-r, 1+r), H = X + Z."""
    h = np.array([[1, 1], [1, -1]], dtype=complex)
    f = np.diag([1 - r, 1 + r]).astype(complex)
    a = f @ rho @ f
    return float(np.real(np.trace(a @ h) / np.trace(a)))


def one_qubit_neural_optimum(rho: np.ndarray) -> tuple[float, float]:
    """Exact argmin over r of :func:`one_qubit_energy` for a fixed 2x2 state.

    The stationarity condition is quadratic in r; the root continuously
    connected to r = 0 is returned together with its energy.
    """
    a = float(np.real(rho[0, 0]))
    c = float(np.real(rho[1, 1]))
    b = float(np.real(rho[0, 1]))
    qa = 2 * a * c + b * (a - c)
    qb = -2 * b * (a + c)
    qc = b * (a - c) - 2 * a * c
    disc = qb * qb - 4 * qa * qc
    roots = [(-qb + s * np.sqrt(disc)) / (2 * qa) for s in (+1, -1)]
    r = min(roots, key=abs)
    return float(r), one_qubit_energy(rho, float(r))


def one_qubit_closed_forms(channel: str, strength: float) -> OneQubitRecord:
    """Closed-form energies, parameters and observable deviations.

    Deviations are measured from the noise-free value -1/sqrt(2); baseline and
    depolarizing entries are exact, the amplitude-damping neural deviations are
    the leading-order coefficients times the strength.
    """
    if not 0.0 <= strength <= 0.5:
        raise ValueError("strength must lie in [0, 0.5]")
    if channel == "depolarizing":
        p = strength
        e_base = -SQRT2 * (1 - p)
        r_n = SQRT2 * p
        e_n = -SQRT2 * (1 + p) / (1 + 2 * p)
        root = np.sqrt(2 - 2 * p + p * p)
        r_j = 1.0 / (1 - p + root)
        e_j = -root
        dev_base = (p / SQRT2, p / SQRT2)
        x_n = -(p - 1) * (2 * p * p - 1) / (SQRT2 * (2 * p + 1))
        z_n = (p * (2 * (p - 1) * p - 3) - 1) / (SQRT2 * (2 * p + 1))
        dev_n = (x_n + 1 / SQRT2, z_n + 1 / SQRT2)
        x_j = -(1 - p) ** 2 / root
        z_j = -1.0 / root
        dev_j = (x_j + 1 / SQRT2, z_j + 1 / SQRT2)
        return _record(channel, p, THETA0, e_base, e_n, e_j, r_n, r_j,
                       np.pi / 4, dev_base, dev_n, dev_j)
    if channel == "amplitude_damping":
        g = strength
        e_base = 0.5 * ((2 + SQRT2) * g - SQRT2 * (np.sqrt(1 - g) + 1))
        e_n = -np.sqrt(1.0 / ((3 + 2 * SQRT2) * g + 1.0) + 1.0)
        r_n, _ = one_qubit_neural_optimum(one_qubit_rho(THETA0, channel, g))
        e_j = -SQRT2
        dev_base = (1 / SQRT2 - np.sqrt(1 - g) / SQRT2, (1 + 1 / SQRT2) * g)
        coef = (4 + 3 * SQRT2) / 8
        dev_n = (3 * coef * g, -coef * g)
        dev_j = (0.0, 0.0)
        return _record(channel, g, THETA0, e_base, e_n, e_j, r_n, 1.0,
                       0.0, dev_base, dev_n, dev_j)
    raise ValueError(f"unknown channel {channel!r}")


def _record(channel, strength, theta0, e_base, e_n, e_j, r_n, r_j, theta_j,
            dev_base, dev_n, dev_j) -> OneQubitRecord:
    f = float
    return OneQubitRecord(channel, f(strength), f(theta0), f(e_base), f(e_n),
                          f(e_j), f(r_n), f(r_j), f(theta_j),
                          (f(dev_base[0]), f(dev_base[1])),
                          (f(dev_n[0]), f(dev_n[1])), (f(dev_j[0]), f(dev_j[1])))


# Leading-order retraining-gain laws of the one-qubit model.
def gain_neural_leading(channel: str, strength: float) -> float:
    if channel == "depolarizing":
        return -2 * SQRT2 * strength ** 2
    return -(121 + 84 * SQRT2) / (16 * SQRT2) * strength ** 2


def gain_joint_leading(channel: str, strength: float) -> float:
    if channel == "depolarizing":
        return -(SQRT2 / 2) * strength
    return -(1 + 3 / (2 * SQRT2)) * strength


def one_qubit_observables(rho: np.ndarray, r: float) -> tuple[float, float]:
    """(<X>, <Z>) on the post-processed effective state."""
    f = np.diag([1 - r, 1 + r]).astype(complex)
    a = f @ rho @ f
    a = a / np.trace(a)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    return float(np.real(np.trace(a @ x))), float(np.real(np.trace(a @ z)))
