"""Energy estimation with classical post-processing, exact and sampled.

Exact mode evaluates Tr(f rho f† H') / Tr(f rho f† W†W) from a density
matrix.  Sampled mode implements the bitstring protocol: diagonal Pauli terms
are read off computational-basis samples of the bare circuit U, while a term
containing X or Y gets a measurement block V (controlled flips anchored on the
sign qubit plus a basis change) appended to U, and each sample contributes

    (1 - 2 s_q) * prod_{i in Z} (1 - 2 s_i) * conj(f(a)) * f(b)

where a is the sample with the sign-qubit bit forced to 0 and b is the sample
flipped on every X/Y position with the sign-qubit bit forced to 1.  The shared
denominator is the sample mean of |f|^2 over the bare-circuit group.  Both
sums are normalized per shot before the ratio is taken.

Measurement blocks are appended noise-exempt: the protocol estimates the
post-processed expectation of the noisy state produced by U itself.

Pauli terms are estimated independently and reduced in normalized term order,
so results are reproducible bit-for-bit regardless of any outer parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical_models import PostProcessor
from .pauli import PauliSum, PauliTerm, TransformSpec, dense, norm_operator, transform_hamiltonian
from .simulator import Circuit, Gate, NoiseModel, _CX, _CY, _H, sample_indices

_POPCOUNT: dict[int, np.ndarray] = {}


def _popcount_table(n: int) -> np.ndarray:
    if n not in _POPCOUNT:
        idx = np.arange(2 ** n, dtype=np.int64)
        _POPCOUNT[n] = ((idx[:, None] >> np.arange(n)) & 1).sum(axis=1)
    return _POPCOUNT[n]


_RX_MINUS = np.array([[1, -1j], [-1j, 1]], dtype=complex) / np.sqrt(2)  # exp(-i pi/4 X)


def sign_qubit(term: PauliTerm) -> int:
    """Smallest qubit index hosting X or Y; -1 for diagonal terms."""
    for i, c in enumerate(term.ops):
        if c in ("X", "Y"):
            return i
    return -1


def flip_indices(term: PauliTerm) -> tuple:
    return tuple(i for i, c in enumerate(term.ops) if c in ("X", "Y"))


def flipped_partner(s: str, term: PauliTerm) -> str:
    """s with bits flipped on every X/Y position of the term."""
    out = list(s)
    for i in flip_indices(term):
        out[i] = "1" if out[i] == "0" else "0"
    return "".join(out)


def build_measurement_block(term: PauliTerm, alt_basis: bool = False) -> list[Gate]:
    """Measurement block V for an off-diagonal Pauli term.

    Control-X from the sign qubit to every other X position, control-Y to
    every Y position, then H (sign operator X) or exp(-i pi/4 X) (sign
    operator Y) on the sign qubit.

    ``alt_basis`` swaps the final basis change, reading the quadrature
    component instead; a complex-valued post-processor needs both readings
    for an unbiased estimate (sesquilinear pairing), while a real one only
    uses the principal block.
    """
    q = sign_qubit(term)
    if q < 0:
        raise ValueError("diagonal term has no measurement block; use the direct path")
    gates = []
    for i, c in enumerate(term.ops):
        if i == q:
            continue
        if c == "X":
            gates.append(Gate("CX", (q, i), _CX, noisy=False))
        elif c == "Y":
            gates.append(Gate("CY", (q, i), _CY, noisy=False))
    x_basis = (term.ops[q] == "X") != alt_basis
    basis = _H if x_basis else _RX_MINUS
    gates.append(Gate("H" if x_basis else "RxM", (q,), basis, noisy=False))
    return gates


@dataclass(frozen=True)
class TermPlan:
    """How one Pauli term is measured."""

    ops: str
    diagonal: bool
    sign_qubit: int = -1
    flip_mask: tuple = ()


def build_plan(h: PauliSum) -> list[TermPlan]:
    plans = []
    for t in h.normalized().terms:
        q = sign_qubit(t)
        if q < 0:
            plans.append(TermPlan(t.ops, True))
        else:
            plans.append(TermPlan(t.ops, False, q, flip_indices(t)))
    return plans


@dataclass
class SampleSet:
    """Seeded bitstring groups: one base group plus one group per off-diagonal term.

    ``alt_groups`` holds the quadrature-basis readings needed only by
    complex-valued post-processors.
    """

    n: int
    shots: int
    seed: int
    base: np.ndarray                  # basis-index codes from U
    term_groups: dict                 # ops string -> basis-index codes from U V_term
    alt_groups: dict = None

    def __post_init__(self):
        if self.alt_groups is None:
            self.alt_groups = {}

    @classmethod
    def from_circuit(cls, circuit: Circuit, noise: NoiseModel | None, h: PauliSum,
                     shots: int, seed: int, extra_ops=(),
                     dual_basis: bool = False) -> "SampleSet":
        """Sample every measurement group needed for ``h`` (plus ``extra_ops``)."""
        h = h.normalized()
        wanted: list[str] = []
        for t in h.terms:
            if sign_qubit(t) >= 0 and t.ops not in wanted:
                wanted.append(t.ops)
        for ops in extra_ops:
            if sign_qubit(PauliTerm(1.0, ops)) >= 0 and ops not in wanted:
                wanted.append(ops)
        base = sample_indices(circuit, noise, shots, _group_seed(seed, 0))
        groups = {}
        alt = {}
        for gid, ops in enumerate(sorted(wanted), start=1):
            block = build_measurement_block(PauliTerm(1.0, ops))
            groups[ops] = sample_indices(circuit.extended(block), noise, shots,
                                         _group_seed(seed, 2 * gid))
            if dual_basis:
                block = build_measurement_block(PauliTerm(1.0, ops), alt_basis=True)
                alt[ops] = sample_indices(circuit.extended(block), noise, shots,
                                          _group_seed(seed, 2 * gid + 1))
        return cls(circuit.n, shots, seed, base, groups, alt)

    def base_strings(self) -> list[str]:
        return [format(int(i), f"0{self.n}b") for i in self.base]

    def subset(self, indices) -> "SampleSet":
        """Restrict every group to the given positions (disjoint-group resampling)."""
        groups = {ops: codes[indices] for ops, codes in self.term_groups.items()}
        alt = {ops: codes[indices] for ops, codes in self.alt_groups.items()}
        return SampleSet(self.n, len(self.base[indices]), self.seed,
                         self.base[indices], groups, alt)

    def save(self, directory):
        import os
        os.makedirs(directory, exist_ok=True)
        from .simulator import dump_bitstrings
        dump_bitstrings(os.path.join(directory, "base.txt"), self.base_strings(),
                        self.seed, self.shots)
        for suffix, groups in (("", self.term_groups), (".alt", self.alt_groups)):
            for ops, codes in groups.items():
                strings = [format(int(i), f"0{self.n}b") for i in codes]
                dump_bitstrings(os.path.join(directory, f"term_{ops}{suffix}.txt"),
                                strings, self.seed, self.shots)

    @classmethod
    def load(cls, directory) -> "SampleSet":
        import os
        from .simulator import load_bitstrings
        strings, meta = load_bitstrings(os.path.join(directory, "base.txt"))
        n = len(strings[0])
        base = np.array([int(s, 2) for s in strings], dtype=np.int64)
        groups: dict = {}
        alt: dict = {}
        for name in sorted(os.listdir(directory)):
            if not (name.startswith("term_") and name.endswith(".txt")):
                continue
            stem = name[len("term_"):-len(".txt")]
            ss, _ = load_bitstrings(os.path.join(directory, name))
            codes = np.array([int(s, 2) for s in ss], dtype=np.int64)
            if stem.endswith(".alt"):
                alt[stem[:-len(".alt")]] = codes
            else:
                groups[stem] = codes
        return cls(n, meta.get("shots", len(base)), meta.get("seed", 0), base,
                   groups, alt)


def _group_seed(seed: int, gid: int) -> int:
    return (int(seed) * 1_000_003 + gid) % (2 ** 63)


def _compress(codes: np.ndarray):
    return np.unique(codes, return_counts=True)


def sampled_num_den(h: PauliSum, samples: SampleSet, f: PostProcessor):
    """(numerator, denominator) of the sampled ratio, each a per-shot mean.

    The numerator alone is what a term-coefficient derivative needs, since the
    denominator carries no dependence on the transformed observable.
    """
    e, num, den, _, _ = _sampled_core(h, samples, f, want_grad=False)
    return num, den


def energy_sampled(h: PauliSum, samples: SampleSet, f: PostProcessor,
                   return_fgrad: bool = False):
    """Estimate the post-processed energy of ``h`` from a :class:`SampleSet`.

    With ``return_fgrad`` also returns the Wirtinger half-derivative vector
    dE/df(s) over all basis strings (samples held fixed), suitable for
    :meth:`PostProcessor.backprop_all`.
    """
    e, _num, _den, g, _ = _sampled_core(h, samples, f, want_grad=return_fgrad)
    if return_fgrad:
        return e, g
    return e


def _sampled_core(h: PauliSum, samples: SampleSet, f: PostProcessor,
                  want_grad: bool):
    h = h.normalized()
    n = samples.n
    fvals = np.asarray(f.evaluate_all(), dtype=complex)
    complex_f = bool(np.max(np.abs(fvals.imag)) > 1e-15)
    pop = _popcount_table(n)

    ucodes, ucounts = _compress(samples.base)
    wbase = ucounts / ucounts.sum()
    fb = fvals[ucodes]
    den = float(np.sum(wbase * np.abs(fb) ** 2))
    if den <= 1e-300:
        raise ZeroDivisionError("vanishing estimator denominator (degenerate post-processor)")

    gA = np.zeros(2 ** n, dtype=complex)  # d(raw)/d f(s)
    gB = np.zeros(2 ** n, dtype=complex)  # d(raw)/d conj(f(s))
    num_total = 0.0 + 0.0j
    for plan, term in zip(build_plan(h), h.terms):
        c = term.coefficient
        if plan.diagonal:
            zmask = _zmask(term, n)
            if zmask == 0:
                num_total += c * den  # identity string: contributes its coefficient
                if want_grad:
                    np.add.at(gA, ucodes, c * wbase * np.conj(fb))
                    np.add.at(gB, ucodes, c * wbase * fb)
                continue
            z = 1.0 - 2.0 * (pop[ucodes & zmask] % 2)
            num_total += c * np.sum(wbase * np.abs(fb) ** 2 * z)
            if want_grad:
                np.add.at(gA, ucodes, c * wbase * z * np.conj(fb))
                np.add.at(gB, ucodes, c * wbase * z * fb)
        else:
            if term.ops not in samples.term_groups:
                raise KeyError(f"no sample group for term {term.ops}")
            blocks = [(samples.term_groups[term.ops], c)]
            if complex_f:
                # quadrature reading: Re(E_X) - Im(E_Y) for an X sign operator,
                # Re(E_Y) + Im(E_X) for Y; folded in as coefficients +-i
                if term.ops not in samples.alt_groups:
                    raise KeyError(
                        f"complex post-processing needs the quadrature sample "
                        f"group for term {term.ops}")
                kappa = 1j if term.ops[plan.sign_qubit] == "X" else -1j
                blocks.append((samples.alt_groups[term.ops], c * kappa))
            q = plan.sign_qubit
            qbit = 1 << (n - 1 - q)
            zmask = _zmask(term, n)
            xy_mask = 0
            for i in plan.flip_mask:
                xy_mask |= 1 << (n - 1 - i)
            for raw_codes, coeff in blocks:
                codes, counts = _compress(raw_codes)
                w = counts / counts.sum()
                sgn = 1.0 - 2.0 * ((codes & qbit) > 0).astype(float)
                if zmask:
                    sgn = sgn * (1.0 - 2.0 * (pop[codes & zmask] % 2))
                a_codes = codes & ~qbit
                b_codes = (codes ^ xy_mask) | qbit
                fa = fvals[a_codes]
                fbv = fvals[b_codes]
                num_total += coeff * np.sum(w * sgn * np.conj(fa) * fbv)
                if want_grad:
                    np.add.at(gA, b_codes, coeff * w * sgn * np.conj(fa))
                    np.add.at(gB, a_codes, coeff * w * sgn * fbv)

    energy = float(np.real(num_total)) / den
    if not want_grad:
        return energy, float(np.real(num_total)), den, None, None
    # quotient rule: raw = num/den with den = sum w |f|^2 over the base group
    np.add.at(gA, ucodes, -num_total / den * wbase * np.conj(fb))
    np.add.at(gB, ucodes, -num_total / den * wbase * fb)
    g = 0.5 * (gA + np.conj(gB)) / den
    return energy, float(np.real(num_total)), den, g, None


def _zmask(term: PauliTerm, n: int) -> int:
    m = 0
    for i, c in enumerate(term.ops):
        if c == "Z":
            m |= 1 << (n - 1 - i)
    return m


def exact_ratio(rho_data: np.ndarray, fvals: np.ndarray, hmat: np.ndarray,
                omat: np.ndarray | None = None):
    """(energy, numerator, denominator) of Tr(f rho f† H) / Tr(f rho f† Om)."""
    A = rho_data * np.outer(fvals, np.conj(fvals))
    num = float(np.real(np.trace(A @ hmat)))
    den = float(np.real(np.trace(A @ omat) if omat is not None else np.trace(A)))
    if abs(den) < 1e-14:
        raise ZeroDivisionError("vanishing estimator denominator (degenerate post-processor)")
    return num / den, num, den


def exact_fgrad(rho_data: np.ndarray, fvals: np.ndarray, hmat: np.ndarray,
                omat: np.ndarray | None = None) -> np.ndarray:
    """Wirtinger half-derivative dE/df(s) of the exact ratio."""
    e, _num, den = exact_ratio(rho_data, fvals, hmat, omat)
    fc = np.conj(fvals)
    gN = (rho_data * hmat.T) @ fc
    if omat is not None:
        gD = (rho_data * omat.T) @ fc
    else:
        gD = np.diag(rho_data) * fc
    return (gN - e * gD) / den


def energy_exact(rho, f: PostProcessor, h: PauliSum,
                 t: TransformSpec | None = None) -> float:
    """Exact post-processed energy, optionally under a gauge transformation.

    For a unitary transform the denominator is Tr(f rho f†); a complex-angle
    transform contributes its W†W expansion instead.
    """
    hp = transform_hamiltonian(h, t) if t is not None and t.factors else h
    omat = None
    if t is not None and t.factors and not t.is_unitary():
        omat = dense(norm_operator(t))
    fvals = np.asarray(f.evaluate_all(), dtype=complex)
    e, _, _ = exact_ratio(rho.data, fvals, dense(hp), omat)
    return e


def expectation(rho, h: PauliSum) -> float:
    """Plain Tr(rho H)."""
    return float(np.real(np.trace(rho.data @ dense(h))))


def p_eff(e_noise: float, e_noiseless: float) -> float:
    """Overall effective depolarizing strength 1 - E_noise / E_noiseless."""
    if e_noiseless == 0:
        raise ZeroDivisionError("noiseless energy is zero")
    return 1.0 - e_noise / e_noiseless
