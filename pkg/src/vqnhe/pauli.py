"""Symbolic Pauli-string algebra.

Weighted Pauli strings (:class:`PauliTerm`, :class:`PauliSum`) carry the target
Hamiltonian, its gauge-transformed version and the involutory generators used
for the transformation.  Conjugation by ``exp(i tau G)`` with ``G**2 = I`` is
done symbolically, so a transformed Hamiltonian stays a polynomial-size sum.

Conjugation orientation
-----------------------
A :class:`TransformSpec` with factors ``(G_k, tau_k)`` realizes

    H' = W H W†,   W = prod_k exp(i tau_k G_k),   W† = prod_k exp(-i conj(tau_k) G_k)

This is the orientation under which a single-qubit Y rotation maps -X to
``-cos(2 tau) X - sin(2 tau) Z``; see :data:`CONJUGATION`.  For complex tau the
adjoint uses the conjugated angle, so W is no longer unitary and the paired
normalization operator ``W† W`` (:func:`norm_operator`) becomes nontrivial.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Orientation constant: transform_hamiltonian(h, t) == W h W† with W = prod exp(+i tau G).
CONJUGATION = "W H Wdag"

# Threshold below which merged coefficients are dropped (and tiny imaginary
# parts of near-real sums are zeroed).
COEFF_TOL = 1e-12

_PAULIS = ("I", "X", "Y", "Z")

_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Single-qubit products: (a, b) -> (phase, c) with a*b = phase * c.
_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("Y", "I"): (1, "Y"), ("Z", "I"): (1, "Z"),
    ("X", "X"): (1, "I"), ("Y", "Y"): (1, "I"), ("Z", "Z"): (1, "I"),
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}

MAX_DENSE_QUBITS = 12


@dataclass(frozen=True)
class PauliTerm:
    """A single weighted Pauli string, e.g. ``(0.5+0j) * XZI``."""

    coefficient: complex
    ops: str

    def __post_init__(self):
        if any(c not in _PAULIS for c in self.ops):
            raise ValueError(f"invalid Pauli ops string {self.ops!r}")

    @property
    def n(self) -> int:
        return len(self.ops)

    def is_identity(self) -> bool:
        return set(self.ops) <= {"I"}

    def __repr__(self) -> str:
        return f"{self.coefficient:+g}*{self.ops}"


def pauli_mul(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Operator product of two Pauli terms, phase folded into the coefficient."""
    if a.n != b.n:
        raise ValueError(f"qubit-count mismatch: {a.n} vs {b.n}")
    phase = a.coefficient * b.coefficient
    ops = []
    for x, y in zip(a.ops, b.ops):
        ph, c = _MUL[(x, y)]
        phase *= ph
        ops.append(c)
    return PauliTerm(phase, "".join(ops))


class PauliSum:
    """A weighted sum of Pauli strings over a common qubit count."""

    def __init__(self, terms, n: int | None = None):
        terms = list(terms)
        if not terms and n is None:
            raise ValueError("empty PauliSum requires an explicit qubit count")
        self.n = n if n is not None else terms[0].n
        for t in terms:
            if t.n != self.n:
                raise ValueError(f"term {t!r} has {t.n} qubits, expected {self.n}")
        self.terms = terms

    @classmethod
    def from_ops(cls, items, n: int | None = None) -> "PauliSum":
        """Build from ``(coefficient, ops)`` pairs."""
        return cls([PauliTerm(complex(c), ops) for c, ops in items], n=n)

    @classmethod
    def identity(cls, n: int, coefficient: complex = 1.0) -> "PauliSum":
        return cls([PauliTerm(complex(coefficient), "I" * n)])

    def normalized(self) -> "PauliSum":
        """Merge duplicate strings, prune tiny coefficients, zero tiny imag parts."""
        acc: dict[str, complex] = {}
        for t in self.terms:
            acc[t.ops] = acc.get(t.ops, 0.0) + t.coefficient
        out = []
        for ops in sorted(acc):
            c = acc[ops]
            if abs(c.imag) < COEFF_TOL:
                c = complex(c.real, 0.0)
            if abs(c) > COEFF_TOL:
                out.append(PauliTerm(c, ops))
        return PauliSum(out, n=self.n)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n != self.n:
            raise ValueError("qubit-count mismatch")
        return PauliSum(self.terms + other.terms, n=self.n)

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            if other.n != self.n:
                raise ValueError("qubit-count mismatch")
            prods = [pauli_mul(a, b) for a in self.terms for b in other.terms]
            return PauliSum(prods, n=self.n).normalized()
        return PauliSum([PauliTerm(t.coefficient * other, t.ops) for t in self.terms], n=self.n)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return " ".join(repr(t) for t in self.terms) or f"0*{'I' * self.n}"

    def is_identity(self, tol: float = COEFF_TOL) -> bool:
        s = self.normalized()
        return (len(s.terms) == 1 and s.terms[0].is_identity()
                and abs(s.terms[0].coefficient - 1.0) < tol)

    def serialize(self) -> str:
        """Lines of ``coeff_re coeff_im OPSTRING``."""
        return "\n".join(
            f"{t.coefficient.real!r} {t.coefficient.imag!r} {t.ops}" for t in self.terms
        )

    @classmethod
    def parse(cls, text: str) -> "PauliSum":
        terms = []
        for line in text.splitlines():
            line = line.replace("−", "-").strip()
            if not line or line.startswith("#"):
                continue
            re_s, im_s, ops = line.split()
            terms.append(PauliTerm(complex(float(re_s), float(im_s)), ops))
        return cls(terms)


@dataclass(frozen=True)
class TransformSpec:
    """Ordered involutory generators with (possibly complex) angles."""

    factors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for gen, _tau in self.factors:
            if not _is_involutory(gen):
                raise ValueError(f"generator is not involutory: {gen!r}")

    @property
    def n(self) -> int | None:
        return self.factors[0][0].n if self.factors else None

    def is_unitary(self, tol: float = COEFF_TOL) -> bool:
        return all(abs(complex(tau).imag) < tol for _gen, tau in self.factors)

    def with_angles(self, taus) -> "TransformSpec":
        if len(taus) != len(self.factors):
            raise ValueError("angle count mismatch")
        return TransformSpec(tuple((g, complex(t)) for (g, _), t in zip(self.factors, taus)))


def _is_involutory(gen: PauliSum) -> bool:
    if gen.n <= 8:
        m = dense(gen)
        return bool(np.max(np.abs(m @ m - np.eye(2 ** gen.n))) < 1e-12)
    return (gen * gen).is_identity()


def conjugate(q: PauliSum, t: TransformSpec) -> PauliSum:
    """Apply every factor of ``t`` in order: q -> W q W†."""
    out = q
    for gen, tau in t.factors:
        out = _apply_factor(out, gen, tau)
    return out.normalized()


def _apply_factor(q: PauliSum, gen: PauliSum, tau: complex) -> PauliSum:
    """exp(i tau G) q exp(-i conj(tau) G) for involutory G.

    Split q = q_c + q_a into G-commuting / G-anticommuting parts via
    q_c = (q + G q G)/2, q_a = (q - G q G)/2.  Then

        q_c -> q_c [cosh(2 Im tau) - sinh(2 Im tau) G]
        q_a -> q_a [cos(2 Re tau)  - i sin(2 Re tau) G]

    which reduces to the familiar cos/sin rotation for real tau and to a
    cosh/sinh mixture when the exponentials fail to cancel on the commuting
    part (complex angle).
    """
    tau = complex(tau)
    gqg = (gen * (q * gen)).normalized()
    q_comm = (0.5 * (q + gqg)).normalized()
    q_anti = (0.5 * (q + (-1.0) * gqg)).normalized()
    re2, im2 = 2.0 * tau.real, 2.0 * tau.imag
    parts = []
    if q_comm.terms:
        parts.append(np.cosh(im2) * q_comm)
        if abs(im2) > 0:
            parts.append((-np.sinh(im2)) * (q_comm * gen))
    if q_anti.terms:
        parts.append(np.cos(re2) * q_anti)
        parts.append((-1j * np.sin(re2)) * (q_anti * gen))
    total = PauliSum([], n=q.n)
    for p in parts:
        total = total + p
    return total.normalized()


def transform_hamiltonian(h: PauliSum, t: TransformSpec) -> PauliSum:
    """Gauge-transformed Hamiltonian H' = W H W†, tracked as a Pauli sum."""
    return conjugate(h, t)


def norm_operator(t: TransformSpec) -> PauliSum:
    """W† W as a Pauli sum (identity when every angle is real).

    Factors commute with themselves, so W†W = prod_k exp(i(tau_k - conj tau_k) G_k)
    = prod_k [cosh(2 Im tau_k) - sinh(2 Im tau_k) G_k].
    """
    if t.n is None:
        raise ValueError("empty transform has no qubit count")
    out = PauliSum.identity(t.n)
    for gen, tau in t.factors:
        im2 = 2.0 * complex(tau).imag
        factor = np.cosh(im2) * PauliSum.identity(t.n) + (-np.sinh(im2)) * gen
        out = out * factor
    return out.normalized()


def dense(p: PauliSum | PauliTerm, n: int | None = None) -> np.ndarray:
    """Kronecker-product matrix realization (oracle support, n <= 12)."""
    if isinstance(p, PauliTerm):
        p = PauliSum([p])
    if n is not None and n != p.n:
        raise ValueError("qubit-count mismatch")
    if p.n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense realization capped at {MAX_DENSE_QUBITS} qubits, got {p.n}")
    dim = 2 ** p.n
    out = np.zeros((dim, dim), dtype=complex)
    for t in p.terms:
        m = np.array([[1.0 + 0j]])
        for c in t.ops:
            m = np.kron(m, _MATS[c])
        out += t.coefficient * m
    return out


def single_site(op: str, i: int, n: int, coefficient: complex = 1.0) -> PauliTerm:
    ops = ["I"] * n
    ops[i] = op
    return PauliTerm(complex(coefficient), "".join(ops))


def two_site(op: str, i: int, j: int, n: int, coefficient: complex = 1.0) -> PauliTerm:
    ops = ["I"] * n
    ops[i] = op
    ops[j] = op
    return PauliTerm(complex(coefficient), "".join(ops))


def tfim(n: int) -> PauliSum:
    """Open-boundary transverse-field Ising chain: sum Z_i Z_{i+1} - sum X_i."""
    terms = [two_site("Z", i, i + 1, n) for i in range(n - 1)]
    terms += [single_site("X", i, n, -1.0) for i in range(n)]
    return PauliSum(terms).normalized()


def heisenberg(n: int) -> PauliSum:
    """Open-boundary isotropic Heisenberg chain: sum (XX + YY + ZZ)."""
    terms = [two_site(op, i, i + 1, n) for i in range(n - 1) for op in ("X", "Y", "Z")]
    return PauliSum(terms).normalized()


def swap_generator(i: int, j: int, n: int) -> PauliSum:
    """SWAP_{ij} expanded as (II + XX + YY + ZZ)/2: involutory, non-Pauli."""
    terms = [PauliTerm(0.5, "I" * n)]
    terms += [two_site(op, i, j, n, 0.5) for op in ("X", "Y", "Z")]
    return PauliSum(terms)


def local_transform(op: str, n: int, taus=None) -> TransformSpec:
    """Per-qubit single-Pauli rotation family, W = prod_i exp(i tau_i P_i)."""
    taus = [0.0] * n if taus is None else list(taus)
    if len(taus) != n:
        raise ValueError("need one angle per qubit")
    return TransformSpec(tuple(
        (PauliSum([single_site(op, i, n)]), complex(t)) for i, t in enumerate(taus)
    ))


def swap_half_layer(n: int, taus=None) -> TransformSpec:
    """Parameterized SWAP on disjoint pairs (0,1), (2,3), ...: the half layer."""
    pairs = [(i, i + 1) for i in range(0, n - 1, 2)]
    taus = [0.0] * len(pairs) if taus is None else list(taus)
    if len(taus) != len(pairs):
        raise ValueError(f"need {len(pairs)} angles")
    return TransformSpec(tuple(
        (swap_generator(i, j, n), complex(t)) for (i, j), t in zip(pairs, taus)
    ))
