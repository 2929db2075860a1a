"""Statevector and density-matrix simulation of layered circuits with noise.

Bit/qubit ordering: qubit 0 is the leftmost character of a bitstring, and the
basis index of |s> is sum_i s_i * 2**(n-1-i) (qubit 0 = most significant bit).

Gate conventions follow the layer notation used throughout: every
parameterized layer entry is the exponential ``exp(+i theta G)`` of its
generator, e.g. a ZZ layer is ``prod_i exp(i theta_i Z_i Z_{i+1})`` and an Ry
layer is ``prod_i exp(i theta_i Y_i)`` (so ``Ry(theta)|0> = (cos, -sin)``).

Noise channels attach after each two-qubit gate, acting independently on each
touched qubit.  Measurement-block gates appended by the estimator are flagged
noise-exempt so that sampling stays an unbiased estimate of the noisy-state
expectation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DENSITY_QUBITS = 12
MAX_STATE_QUBITS = 20

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)
_CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_CXMAT = _CX
_CY = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, -1j], [0, 0, 1j, 0]], dtype=complex
)
# Singlet preparation on a pair: |00> -> (|01> - |10>)/sqrt(2).
_SINGLET = np.array(
    [[0, 0, 1, 0],
     [1 / np.sqrt(2), 1 / np.sqrt(2), 0, 0],
     [-1 / np.sqrt(2), 1 / np.sqrt(2), 0, 0],
     [0, 0, 0, 1]], dtype=complex
)

_GEN2 = {"ZZ": np.kron(_Z, _Z), "XX": np.kron(_X, _X), "YY": np.kron(_Y, _Y), "SWAP": _SWAP}
_GEN1 = {"Rx": _X, "Ry": _Y, "Rz": _Z, "Rzi": _Z}

ROTATION_LAYERS = ("Rx", "Ry", "Rz")
CHAIN_LAYERS = ("ZZ", "XX", "YY", "SWAP")
# ZZcx realizes exp(i theta ZZ) as CX (I x exp(i theta Z)) CX: the native-gate
# compilation used on hardware-compatible circuits, so each bond carries two
# noisy entangling gates instead of one
DECOMPOSED_LAYERS = ("ZZcx",)
FIXED_LAYERS = ("H", "Singlet")


@dataclass(frozen=True)
class AnsatzSpec:
    """Layered circuit description, e.g. ``AnsatzSpec(5, ["H", "ZZ", "Rx"])``."""

    n: int
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        for name in self.layers:
            if name not in ROTATION_LAYERS + CHAIN_LAYERS + DECOMPOSED_LAYERS \
                    + FIXED_LAYERS:
                raise ValueError(f"unknown layer {name!r}")
        if "Singlet" in self.layers and self.n % 2:
            raise ValueError("Singlet layer requires an even qubit count")

    @property
    def n_params(self) -> int:
        total = 0
        for name in self.layers:
            if name in ROTATION_LAYERS:
                total += self.n
            elif name in CHAIN_LAYERS + DECOMPOSED_LAYERS:
                total += self.n - 1
        return total

    @classmethod
    def parse(cls, n: int, text: str) -> "AnsatzSpec":
        """Parse list notation like ``[H, ZZ(t1), Rx(t2)]`` (angle labels ignored)."""
        body = text.strip()
        if body.startswith("[") and body.endswith("]"):
            body = body[1:-1]
        layers = []
        for item in body.split(","):
            name = item.strip().split("(")[0].strip()
            if name:
                layers.append(name)
        return cls(n, layers)


@dataclass(frozen=True)
class Gate:
    """One concrete gate: a unitary bound to an ordered qubit tuple."""

    name: str
    qubits: tuple
    matrix: np.ndarray
    noisy: bool = True            # noise channels attach only to noisy two-qubit gates
    param_index: int | None = None  # position in the flat parameter vector

    @property
    def is_two_qubit(self) -> bool:
        return len(self.qubits) == 2

    def generator(self) -> np.ndarray:
        if self.name in _GEN1:
            return _GEN1[self.name]
        if self.name in _GEN2:
            return _GEN2[self.name]
        raise ValueError(f"gate {self.name!r} has no rotation generator")


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple

    def extended(self, gates) -> "Circuit":
        return Circuit(self.n, self.gates + tuple(gates))


@dataclass(frozen=True)
class NoiseModel:
    """Single-qubit channel attached after each two-qubit gate on each touched qubit."""

    kind: str = "none"
    strength: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "depolarizing", "amplitude_damping", "dephasing"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError("noise strength must lie in [0, 1]")

    def kraus(self) -> list[np.ndarray]:
        p = self.strength
        if self.kind == "none":
            return [_I.copy()]
        if self.kind == "depolarizing":
            # rho -> (1-p) rho + p I/2, i.e. Bloch shrink by exactly (1-p)
            return [np.sqrt(1 - 0.75 * p) * _I, np.sqrt(p / 4) * _X,
                    np.sqrt(p / 4) * _Y, np.sqrt(p / 4) * _Z]
        if self.kind == "amplitude_damping":
            return [np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex),
                    np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex)]
        # pure dephasing: rho -> (1-p) rho + p Z rho Z
        return [np.sqrt(1 - p) * _I, np.sqrt(p) * _Z]


def rotation_gate(generator: np.ndarray, theta: float) -> np.ndarray:
    """exp(+i theta G) for an involutory generator G."""
    dim = generator.shape[0]
    return np.cos(theta) * np.eye(dim, dtype=complex) + 1j * np.sin(theta) * generator


def build_circuit(spec: AnsatzSpec, params) -> Circuit:
    """Bind a flat parameter vector to the layered ansatz."""
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params,):
        raise ValueError(f"expected {spec.n_params} parameters, got {params.shape}")
    n = spec.n
    gates = []
    k = 0
    for name in spec.layers:
        if name == "H":
            gates += [Gate("H", (i,), _H) for i in range(n)]
        elif name == "Singlet":
            gates += [Gate("Singlet", (i, i + 1), _SINGLET) for i in range(0, n - 1, 2)]
        elif name in ROTATION_LAYERS:
            for i in range(n):
                gates.append(Gate(name, (i,), rotation_gate(_GEN1[name], params[k]),
                                  param_index=k))
                k += 1
        elif name == "ZZcx":
            for i in range(n - 1):
                gates.append(Gate("CX", (i, i + 1), _CXMAT))
                gates.append(Gate("Rzi", (i + 1,), rotation_gate(_Z, params[k]),
                                  param_index=k))
                gates.append(Gate("CX", (i, i + 1), _CXMAT))
                k += 1
        else:
            for i in range(n - 1):
                gates.append(Gate(name, (i, i + 1),
                                  rotation_gate(_GEN2[name], params[k]),
                                  param_index=k))
                k += 1
    return Circuit(n, tuple(gates))


def _apply_unitary_state(psi: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    k = len(gate.qubits)
    g = gate.matrix.reshape((2,) * (2 * k))
    psi = psi.reshape((2,) * n)
    psi = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), list(gate.qubits)))
    order = list(gate.qubits) + [q for q in range(n) if q not in gate.qubits]
    return np.moveaxis(psi, list(range(n)), order).reshape(-1)

def _apply_left(rho_t: np.ndarray, mat: np.ndarray, qubits, n: int) -> np.ndarray:
    # rho tensor has 2n axes: ket axes 0..n-1, bra axes n..2n-1
    k = len(qubits)
    g = mat.reshape((2,) * (2 * k))
    rho_t = np.tensordot(g, rho_t, axes=(list(range(k, 2 * k)), list(qubits)))
    order = list(qubits) + [a for a in range(2 * n) if a not in qubits]
    return np.moveaxis(rho_t, list(range(2 * n)), order)


def _channel_superop(kraus) -> np.ndarray:
    """(2,2,2,2) tensor S[a,b,c,d] = sum_k K[a,c] conj(K[b,d]) acting on a
    (ket, bra) axis pair."""
    s = np.zeros((2, 2, 2, 2), dtype=complex)
    for k in kraus:
        s += np.einsum("ac,bd->abcd", k, k.conj())
    return s


def _apply_superop(rho_t: np.ndarray, sop: np.ndarray, q: int, n: int) -> np.ndarray:
    rho_t = np.tensordot(sop, rho_t, axes=([2, 3], [q, n + q]))
    order = [q, n + q] + [a for a in range(2 * n) if a not in (q, n + q)]
    return np.moveaxis(rho_t, list(range(2 * n)), order)


def apply_channel(rho: "DensityMatrix", noise: NoiseModel, qubits) -> "DensityMatrix":
    """Apply the model's single-qubit Kraus maps to each listed qubit."""
    n = rho.n
    t = rho.data.reshape((2,) * (2 * n))
    sop = _channel_superop(noise.kraus())
    for q in qubits:
        t = _apply_superop(t, sop, q, n)
    return DensityMatrix(n, t.reshape(2 ** n, 2 ** n))


def depolarize_global(rho: "DensityMatrix", p: float) -> "DensityMatrix":
    """Composed whole-register depolarizing: rho -> (1-p) rho + p I/2^n."""
    dim = 2 ** rho.n
    return DensityMatrix(rho.n, (1 - p) * rho.data + p * np.eye(dim) / dim)


@dataclass
class StateVector:
    n: int
    data: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.abs(self.data) ** 2


@dataclass
class DensityMatrix:
    n: int
    data: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.data)).clip(min=0.0)

    def validate(self, tol: float = 1e-10):
        if abs(np.trace(self.data) - 1.0) > tol:
            raise ValueError("trace differs from one")
        if np.max(np.abs(self.data - self.data.conj().T)) > tol:
            raise ValueError("not Hermitian")
        if np.linalg.eigvalsh(self.data).min() < -1e-8:
            raise ValueError("negative eigenvalue")
        return self


def run_state(c: Circuit) -> StateVector:
    """|psi> = U |0...0> on the noise-free path."""
    if c.n > MAX_STATE_QUBITS:
        raise ValueError(f"statevector capped at {MAX_STATE_QUBITS} qubits")
    psi = np.zeros(2 ** c.n, dtype=complex)
    psi[0] = 1.0
    for g in c.gates:
        psi = _apply_unitary_state(psi, g, c.n)
    return StateVector(c.n, psi)


def run_density(c: Circuit, noise: NoiseModel | None = None) -> DensityMatrix:
    """Apply gates as rho -> G rho G† with the channel after noisy two-qubit gates."""
    noise = noise or NoiseModel()
    if c.n > MAX_DENSITY_QUBITS:
        raise ValueError(f"density simulation capped at {MAX_DENSITY_QUBITS} qubits")
    n = c.n
    t = np.zeros((2,) * (2 * n), dtype=complex)
    t[(0,) * (2 * n)] = 1.0
    sop = _channel_superop(noise.kraus()) if noise.kind != "none" else None
    for g in c.gates:
        t = _apply_left(t, g.matrix, g.qubits, n)
        t = _apply_left(t, g.matrix.conj(), [q + n for q in g.qubits], n)
        if sop is not None and g.is_two_qubit and g.noisy:
            for q in g.qubits:
                t = _apply_superop(t, sop, q, n)
    return DensityMatrix(n, t.reshape(2 ** n, 2 ** n))


# ---------------------------------------------------------------------------
# full-matrix fast path (small n): gate conjugation and channels act directly
# on the (2^n, 2^n) array, which keeps per-call overhead far below the tensor
# path for the parameter-shift sweeps of training
# ---------------------------------------------------------------------------

def _mat_left(mat: np.ndarray, g: np.ndarray, qubits, n: int) -> np.ndarray:
    """Left-multiply an embedded gate: G @ mat, gate on adjacent qubits."""
    dim = mat.shape[0]
    q0 = qubits[0]
    k = len(qubits)
    if any(qubits[i + 1] != qubits[i] + 1 for i in range(k - 1)):
        raise ValueError("fast path requires adjacent qubit tuples")
    pre = 2 ** q0
    mid = 2 ** k
    post = dim // (pre * mid)
    r = mat.reshape(pre, mid, post * dim)
    r = np.swapaxes(r, 0, 1).reshape(mid, pre * post * dim)
    out = (g @ r).reshape(mid, pre, post * dim)
    return np.swapaxes(out, 0, 1).reshape(dim, dim)


def _mat_conjugate(mat: np.ndarray, g: np.ndarray, qubits, n: int) -> np.ndarray:
    """G mat G† for Hermitian mat."""
    a = _mat_left(mat, g, qubits, n)
    return _mat_left(a.conj().T, g, qubits, n).conj().T


def _mat_channel(mat: np.ndarray, noise: NoiseModel, q: int, n: int,
                 adjoint: bool = False) -> np.ndarray:
    """Single-qubit channel (or its Heisenberg adjoint) on a full matrix."""
    p = noise.strength
    kind = noise.kind
    if kind == "none" or p == 0.0:
        return mat
    dim = mat.shape[0]
    pre, post = 2 ** q, dim // 2 ** (q + 1)
    r = mat.reshape(pre, 2, post, pre, 2, post)
    if kind == "dephasing":
        out = (1 - p) * r
        out[:, 0, :, :, 0, :] += p * r[:, 0, :, :, 0, :]
        out[:, 1, :, :, 1, :] += p * r[:, 1, :, :, 1, :]
        out[:, 0, :, :, 1, :] -= p * r[:, 0, :, :, 1, :]
        out[:, 1, :, :, 0, :] -= p * r[:, 1, :, :, 0, :]
        return out.reshape(dim, dim)
    if kind == "depolarizing":
        out = (1 - p) * r
        if not adjoint:
            tr = 0.5 * (r[:, 0, :, :, 0, :] + r[:, 1, :, :, 1, :])
            out[:, 0, :, :, 0, :] += p * tr
            out[:, 1, :, :, 1, :] += p * tr
        else:
            # adjoint of rho -> (1-p) rho + p I/2 Tr_q: M -> (1-p) M + p/2 (Tr_q M) I
            tr = 0.5 * (r[:, 0, :, :, 0, :] + r[:, 1, :, :, 1, :])
            out[:, 0, :, :, 0, :] += p * tr
            out[:, 1, :, :, 1, :] += p * tr
        return out.reshape(dim, dim)
    # amplitude damping
    g = p
    sq = np.sqrt(1 - g)
    out = np.empty_like(r)
    if not adjoint:
        out[:, 0, :, :, 0, :] = r[:, 0, :, :, 0, :] + g * r[:, 1, :, :, 1, :]
        out[:, 0, :, :, 1, :] = sq * r[:, 0, :, :, 1, :]
        out[:, 1, :, :, 0, :] = sq * r[:, 1, :, :, 0, :]
        out[:, 1, :, :, 1, :] = (1 - g) * r[:, 1, :, :, 1, :]
    else:
        out[:, 0, :, :, 0, :] = r[:, 0, :, :, 0, :]
        out[:, 0, :, :, 1, :] = sq * r[:, 0, :, :, 1, :]
        out[:, 1, :, :, 0, :] = sq * r[:, 1, :, :, 0, :]
        out[:, 1, :, :, 1, :] = (1 - g) * r[:, 1, :, :, 1, :] + g * r[:, 0, :, :, 0, :]
    return out.reshape(dim, dim)


def forward_trajectory(c: Circuit, noise: NoiseModel | None = None) -> list[np.ndarray]:
    """States before each gate plus the final state: length len(gates) + 1."""
    noise = noise or NoiseModel()
    if c.n > MAX_DENSITY_QUBITS:
        raise ValueError(f"density simulation capped at {MAX_DENSITY_QUBITS} qubits")
    dim = 2 ** c.n
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    out = [rho]
    for g in c.gates:
        rho = _mat_conjugate(rho, g.matrix, g.qubits, c.n)
        if noise.kind != "none" and g.is_two_qubit and g.noisy:
            for q in g.qubits:
                rho = _mat_channel(rho, noise, q, c.n)
        out.append(rho)
    return out


def backward_observables(c: Circuit, noise: NoiseModel | None,
                         obs: np.ndarray) -> list[np.ndarray]:
    """Channel-adjointed Heisenberg observables, one entry per gate.

    Entry k is the observable just after gate k's unitary (with gate k's own
    channels already absorbed), so Tr(state_after_gate_k_unitary * entry_k)
    equals the final expectation.  That is exactly what a shifted
    re-evaluation of gate k needs.
    """
    noise = noise or NoiseModel()
    m = obs
    out: list[np.ndarray] = [None] * len(c.gates)
    for k in range(len(c.gates) - 1, -1, -1):
        g = c.gates[k]
        if noise.kind != "none" and g.is_two_qubit and g.noisy:
            for q in reversed(g.qubits):
                m = _mat_channel(m, noise, q, c.n, adjoint=True)
        out[k] = m
        m = _mat_left(_mat_left(m.conj().T, g.matrix.conj().T, g.qubits, c.n).conj().T,
                      g.matrix.conj().T, g.qubits, c.n)
    return out


def shift_expectations(c: Circuit, prefix: list[np.ndarray],
                       effectives: list[list[np.ndarray]],
                       n_params: int) -> np.ndarray:
    """Parameter-shift traces Tr(rho(theta_j +- pi/4) O) for each observable.

    ``prefix`` comes from :func:`forward_trajectory` and each entry of
    ``effectives`` from :func:`backward_observables` for the same circuit.
    Returns shape (n_observables, n_params, 2) with columns (+pi/4, -pi/4);
    identical values to rebuilding and rerunning the shifted circuits, at a
    cost independent of the parameter count.
    """
    vals = np.zeros((len(effectives), n_params, 2))
    for k, g in enumerate(c.gates):
        j = g.param_index
        if j is None:
            continue
        shift = rotation_gate(g.generator(), np.pi / 4)  # G(theta+pi/4) = shift @ G(theta)
        base = _mat_conjugate(prefix[k], g.matrix, g.qubits, c.n)
        for col, mat in enumerate((shift, shift.conj().T)):
            shifted = _mat_conjugate(base, mat, g.qubits, c.n)
            for i, eff in enumerate(effectives):
                vals[i, j, col] = np.vdot(eff[k], shifted).real
    return vals


def index_to_bits(idx: int, n: int) -> str:
    return format(idx, f"0{n}b")


def bits_to_index(s: str) -> int:
    return int(s, 2)


def sample(c: Circuit, noise: NoiseModel | None, shots: int, seed: int) -> list[str]:
    """Seeded i.i.d. computational-basis draws from the (noisy) output state."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = run_density(c, noise).probabilities()
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    idx = rng.choice(probs.size, size=shots, p=probs)
    return [index_to_bits(int(i), c.n) for i in idx]


def sample_indices(c: Circuit, noise: NoiseModel | None, shots: int, seed: int) -> np.ndarray:
    """Same draws as :func:`sample` but as basis indices (bulk interface)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = run_density(c, noise).probabilities()
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    return rng.choice(probs.size, size=shots, p=probs)


def dump_bitstrings(path, strings, seed: int, shots: int):
    with open(path, "w") as fh:
        fh.write(f"# seed={seed} shots={shots}\n")
        for s in strings:
            fh.write(s + "\n")


def load_bitstrings(path) -> tuple[list[str], dict]:
    meta: dict = {}
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                for part in line[1:].split():
                    if "=" in part:
                        k, v = part.split("=")
                        meta[k] = int(v)
            elif line:
                out.append(line)
    return out, meta
