"""Sparse multimode Fock-space states and passive linear optics.

A pure state is a mapping from occupation tuples (ordered as the register
labels) to amplitudes in the normalized number basis. Mixed states are
weighted ensembles of such vectors. Linear maps act by substituting each
input creation operator with a superposition of output creation operators,
so the representation is exact up to the register's photon caps.
"""

from __future__ import annotations

import itertools
import math
from operator import itemgetter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

Amplitudes = dict[tuple[int, ...], complex]

UNITARITY_TOL = 1e-12


class TruncationError(RuntimeError):
    """A non-zero amplitude would exceed the register's photon caps."""


class ModeError(ValueError):
    """A mode label is unknown, duplicated or used in the wrong role."""


@dataclass(frozen=True)
class ModeRegister:
    """Ordered mode labels with per-mode and total photon caps.

    ``mode_cap=None`` means a single mode may hold up to ``total_cap``
    photons, which makes truncation lossless for any photon-number
    conserving evolution of states within the total cap.
    """

    labels: tuple[str, ...]
    total_cap: int = 6
    mode_cap: Optional[int] = None

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise ModeError(f"duplicate mode labels in {self.labels}")
        if self.total_cap < 0 or (self.mode_cap is not None and self.mode_cap < 0):
            raise ModeError("photon caps must be non-negative")

    @property
    def per_mode_cap(self) -> int:
        return self.total_cap if self.mode_cap is None else self.mode_cap

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ModeError(f"unknown mode {label!r}; register has {self.labels}") from None

    def indices(self, labels: Iterable[str]) -> list[int]:
        return [self.index(label) for label in labels]

    def __len__(self) -> int:
        return len(self.labels)

    def check(self, occ: tuple[int, ...]) -> None:
        if sum(occ) > self.total_cap or max(occ, default=0) > self.per_mode_cap:
            raise TruncationError(
                f"occupation {occ} exceeds caps (mode {self.per_mode_cap}, total {self.total_cap})"
            )


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Passive mode transformation ``b = U a`` from ``inputs`` to ``outputs``.

    Output labels take the register positions of the input labels; modes
    not listed are untouched.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    matrix: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        U = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", U)
        k = len(self.inputs)
        if len(self.outputs) != k or U.shape != (k, k):
            raise ModeError(f"map over {k} modes needs a {k}x{k} matrix, got {U.shape}")
        if len(set(self.inputs)) != k or len(set(self.outputs)) != k:
            raise ModeError("map labels must be unique")
        if not np.allclose(U.conj().T @ U, np.eye(k), rtol=0.0, atol=UNITARITY_TOL):
            raise ValueError("linear map is not unitary")

    def expand(self, sub_occ: tuple[int, ...]) -> Amplitudes:
        """Image of one input number state, over the output modes."""
        hit = self._cache.get(sub_occ)
        if hit is not None:
            return hit
        k = len(self.inputs)
        poly: dict[tuple[int, ...], complex] = {(0,) * k: 1.0 / math.sqrt(math.prod(math.factorial(n) for n in sub_occ))}
        for i, n in enumerate(sub_occ):
            column = [(j, self.matrix[j, i]) for j in range(k) if self.matrix[j, i] != 0]
            for _ in range(n):
                nxt: dict[tuple[int, ...], complex] = {}
                for mono, c in poly.items():
                    for j, u in column:
                        m = list(mono)
                        m[j] += 1
                        key = tuple(m)
                        nxt[key] = nxt.get(key, 0.0) + c * u
                poly = nxt
        out = {}
        for mono, c in poly.items():
            amp = c * math.sqrt(math.prod(math.factorial(n) for n in mono))
            if amp != 0:
                out[mono] = amp
        self._cache[sub_occ] = out
        return out


def beam_splitter(inputs: Sequence[str], outputs: Sequence[str], reflectivity: float) -> LinearMap:
    """Two-mode splitter sending input 0 to ``sqrt(R)`` out0 + ``sqrt(1-R)`` out1."""
    r, t = math.sqrt(reflectivity), math.sqrt(1.0 - reflectivity)
    return LinearMap(tuple(inputs), tuple(outputs), np.array([[r, -t], [t, r]]))


def balanced_splitter(inputs: Sequence[str], outputs: Sequence[str]) -> LinearMap:
    """50/50 splitter: out0 ~ in0 + in1, out1 ~ in0 - in1."""
    s = 1.0 / math.sqrt(2.0)
    return LinearMap(tuple(inputs), tuple(outputs), np.array([[s, s], [s, -s]]))


@dataclass(frozen=True)
class HeraldPattern:
    """Required click count per detector; detectors not named must stay dark."""

    clicks: Mapping[str, int]

    def __post_init__(self) -> None:
        for label, k in self.clicks.items():
            if k < 0:
                raise ModeError(f"negative click count for {label}")

    @classmethod
    def coincidence(cls, first: str, second: str) -> "HeraldPattern":
        return cls({first: 1, second: 1})

    @property
    def total_clicks(self) -> int:
        return sum(self.clicks.values())


@dataclass
class FockEnsemble:
    """Weighted mixture of normalized pure states over ``register``.

    ``discarded`` tracks weight removed from the mixture (for instance
    branches that failed a herald) so that ``total_weight + discarded``
    accounts for the original probability mass.
    """

    register: ModeRegister
    components: list[tuple[float, Amplitudes]]
    discarded: float = 0.0

    @property
    def total_weight(self) -> float:
        return math.fsum(w for w, _ in self.components)

    def normalized(self) -> "FockEnsemble":
        total = self.total_weight
        if total <= 0.0:
            raise ZeroDivisionError("ensemble has zero weight")
        return FockEnsemble(self.register, [(w / total, s) for w, s in self.components], 0.0)

    def basis(self) -> list[tuple[int, ...]]:
        seen: dict[tuple[int, ...], None] = {}
        for _, s in self.components:
            for occ in s:
                seen.setdefault(occ, None)
        return sorted(seen)

    def density_matrix(self) -> tuple[list[tuple[int, ...]], np.ndarray]:
        basis = self.basis()
        A = self._amplitude_matrix(basis)
        return basis, A.T @ A.conj()

    def _amplitude_matrix(self, basis: list[tuple[int, ...]]) -> np.ndarray:
        pos = {occ: i for i, occ in enumerate(basis)}
        A = np.zeros((len(self.components), len(basis)), dtype=complex)
        for r, (w, s) in enumerate(self.components):
            sw = math.sqrt(w)
            for occ, amp in s.items():
                A[r, pos[occ]] = sw * amp
        return A

    def compress(self, rel_cutoff: float = 1e-15) -> "FockEnsemble":
        """Replace the components by the eigen-decomposition of the mixture.

        Eigenvalues below ``rel_cutoff`` times the largest are dropped and
        their weight is added to ``discarded``.
        """
        if not self.components:
            return self
        basis = self.basis()
        A = self._amplitude_matrix(basis)
        _, s, vh = np.linalg.svd(A, full_matrices=False)
        weights = s**2
        top = weights.max()
        kept: list[tuple[float, Amplitudes]] = []
        dropped = 0.0
        for w, row in zip(weights, vh):
            if w <= rel_cutoff * top:
                dropped += w
                continue
            vec = row.conj()
            kept.append((float(w), {basis[i]: complex(vec[i]) for i in np.flatnonzero(np.abs(vec) > 0.0)}))
        return FockEnsemble(self.register, kept, self.discarded + dropped)

    def population(self, predicate) -> float:
        """Weight of the number states whose occupation satisfies ``predicate``."""
        total = 0.0
        for w, s in self.components:
            total += w * sum(abs(a) ** 2 for occ, a in s.items() if predicate(occ))
        return total

    def overlap(self, target: Amplitudes) -> float:
        """Expectation of the projector onto the normalized ``target`` vector."""
        total = 0.0
        for w, s in self.components:
            amp = sum(np.conj(c) * s.get(occ, 0.0) for occ, c in target.items())
            total += w * abs(amp) ** 2
        return total

    def relabel(self, mapping: Mapping[str, str]) -> "FockEnsemble":
        labels = tuple(mapping.get(label, label) for label in self.register.labels)
        reg = ModeRegister(labels, self.register.total_cap, self.register.mode_cap)
        return FockEnsemble(reg, list(self.components), self.discarded)


def number_state(register: ModeRegister, occupations: Mapping[str, int]) -> Amplitudes:
    occ = [0] * len(register)
    for label, n in occupations.items():
        occ[register.index(label)] = n
    key = tuple(occ)
    register.check(key)
    return {key: 1.0}


def normalize(state: Amplitudes) -> tuple[float, Amplitudes]:
    """Return the squared norm and the normalized state."""
    n2 = math.fsum(abs(a) ** 2 for a in state.values())
    if n2 == 0.0:
        return 0.0, {}
    s = 1.0 / math.sqrt(n2)
    return n2, {k: a * s for k, a in state.items()}


def tensor(first: FockEnsemble, second: FockEnsemble) -> FockEnsemble:
    """Product ensemble over the concatenated registers."""
    labels = first.register.labels + second.register.labels
    mode_cap = None
    if first.register.mode_cap is not None and second.register.mode_cap is not None:
        mode_cap = max(first.register.mode_cap, second.register.mode_cap)
    reg = ModeRegister(labels, first.register.total_cap + second.register.total_cap, mode_cap)
    comps = []
    for w1, s1 in first.components:
        for w2, s2 in second.components:
            comps.append((w1 * w2, {o1 + o2: a1 * a2 for o1, a1 in s1.items() for o2, a2 in s2.items()}))
    w1, w2 = first.total_weight, second.total_weight
    discarded = first.discarded * (w2 + second.discarded) + second.discarded * w1
    return FockEnsemble(reg, comps, discarded)


def add_vacuum_modes(ens: FockEnsemble, labels: Sequence[str]) -> FockEnsemble:
    reg = ModeRegister(ens.register.labels + tuple(labels), ens.register.total_cap, ens.register.mode_cap)
    pad = (0,) * len(labels)
    comps = [(w, {occ + pad: a for occ, a in s.items()}) for w, s in ens.components]
    return FockEnsemble(reg, comps, ens.discarded)


def apply_map(ens: FockEnsemble, lmap: LinearMap) -> FockEnsemble:
    """Evolve every component through a passive linear map."""
    reg = ens.register
    idx = reg.indices(lmap.inputs)
    others = set(reg.labels) - set(lmap.inputs)
    clash = others.intersection(lmap.outputs)
    if clash:
        raise ModeError(f"output labels {sorted(clash)} already present in the register")
    labels = list(reg.labels)
    for i, out in zip(idx, lmap.outputs):
        labels[i] = out
    new_reg = ModeRegister(tuple(labels), reg.total_cap, reg.mode_cap)

    comps = []
    for w, s in ens.components:
        out: Amplitudes = {}
        for occ, amp in s.items():
            sub = tuple(occ[i] for i in idx)
            base = list(occ)
            for image, c in lmap.expand(sub).items():
                for i, n in zip(idx, image):
                    base[i] = n
                key = tuple(base)
                out[key] = out.get(key, 0.0) + amp * c
        out = {k: a for k, a in out.items() if abs(a) > 0.0}
        if new_reg.mode_cap is not None:
            for key in out:
                new_reg.check(key)
        comps.append((w, out))
    return FockEnsemble(new_reg, comps, ens.discarded)


def click_probability(photons: int, clicks: int, eta: float) -> float:
    """Probability that ``photons`` impinging on one detector yield ``clicks`` counts."""
    if clicks > photons:
        return 0.0
    return math.comb(photons, clicks) * eta**clicks * (1.0 - eta) ** (photons - clicks)


def _split(ens: FockEnsemble, labels: Sequence[str]):
    reg = ens.register
    idx = reg.indices(labels)
    if len(set(idx)) != len(idx):
        raise ModeError(f"duplicate modes in {labels}")
    keep = [i for i in range(len(reg)) if i not in idx]
    new_reg = ModeRegister(tuple(reg.labels[i] for i in keep), reg.total_cap, reg.mode_cap)
    return idx, keep, new_reg


def _getter(idx: list[int]):
    if len(idx) == 1:
        i = idx[0]
        return lambda occ: (occ[i],)
    if not idx:
        return lambda occ: ()
    return itemgetter(*idx)


def _grouped(state: Amplitudes, idx: list[int], keep: list[int]) -> dict[tuple[int, ...], Amplitudes]:
    get_m, get_r = _getter(idx), _getter(keep)
    groups: dict[tuple[int, ...], Amplitudes] = {}
    for occ, amp in state.items():
        g = groups.setdefault(get_m(occ), {})
        r = get_r(occ)
        g[r] = g.get(r, 0.0) + amp
    return groups


def trace_out(ens: FockEnsemble, labels: Sequence[str]) -> FockEnsemble:
    """Partial trace over the named modes."""
    idx, keep, new_reg = _split(ens, labels)
    comps = []
    for w, s in ens.components:
        for part in _grouped(s, idx, keep).values():
            n2, vec = normalize(part)
            if n2 > 0.0:
                comps.append((w * n2, vec))
    return FockEnsemble(new_reg, comps, ens.discarded)


def detect(
    ens: FockEnsemble,
    detector_modes: Sequence[str],
    eta_d: float,
    pattern: HeraldPattern,
) -> tuple[FockEnsemble, float]:
    """Condition on a click pattern of number-resolving detectors with efficiency ``eta_d``.

    Every detector in ``detector_modes`` must show exactly the clicks the
    pattern requires (zero when unnamed); photons missed by a detector are
    allowed. Returns the normalized conditional ensemble over the remaining
    modes and the pattern probability relative to the ensemble weight.
    """
    unknown = set(pattern.clicks) - set(detector_modes)
    if unknown:
        raise ModeError(f"pattern names non-detector modes {sorted(unknown)}")
    idx, keep, new_reg = _split(ens, detector_modes)
    want = tuple(pattern.clicks.get(label, 0) for label in detector_modes)

    comps = []
    for w, s in ens.components:
        for m, part in _grouped(s, idx, keep).items():
            pk = math.prod(click_probability(n, k, eta_d) for n, k in zip(m, want))
            if pk == 0.0:
                continue
            n2, vec = normalize(part)
            if n2 > 0.0:
                comps.append((w * pk * n2, vec))
    total = ens.total_weight
    cond = FockEnsemble(new_reg, comps, 0.0)
    prob = cond.total_weight / total if total > 0.0 else 0.0
    if prob > 0.0:
        cond = cond.normalized()
    return cond, prob


def click_distribution(
    ens: FockEnsemble, detector_modes: Sequence[str], eta_d: float
) -> dict[tuple[int, ...], float]:
    """Probability of every joint click record on ``detector_modes``, relative to the ensemble weight."""
    idx, _, _ = _split(ens, detector_modes)
    get = _getter(idx)
    total = ens.total_weight
    out: dict[tuple[int, ...], float] = {}
    if total <= 0.0:
        return out
    for w, s in ens.components:
        marginal: dict[tuple[int, ...], float] = {}
        for occ, amp in s.items():
            m = get(occ)
            marginal[m] = marginal.get(m, 0.0) + abs(amp) ** 2
        for m, pm in marginal.items():
            for ks in itertools.product(*(range(n + 1) for n in m)):
                pk = math.prod(click_probability(n, k, eta_d) for n, k in zip(m, ks))
                out[ks] = out.get(ks, 0.0) + w * pm * pk / total
    return dict(sorted(out.items()))


def apply_loss(ens: FockEnsemble, label: str, eta: float) -> FockEnsemble:
    """Transmit one mode with efficiency ``eta``.

    This is the reduced action of a splitter with transmission ``eta``
    coupling the mode to a vacuum loss mode that is then traced out: ``k``
    lost photons out of ``n`` contribute amplitude
    ``sqrt(C(n, k) eta^(n-k) (1-eta)^k)`` to a separate mixture component.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmission must lie in [0, 1], got {eta}")
    i = ens.register.index(label)
    comps = []
    for w, s in ens.components:
        branches: dict[int, Amplitudes] = {}
        for occ, amp in s.items():
            n = occ[i]
            for k in range(n + 1):
                f = math.comb(n, k) * eta ** (n - k) * (1.0 - eta) ** k
                if f == 0.0:
                    continue
                o = list(occ)
                o[i] = n - k
                key = tuple(o)
                b = branches.setdefault(k, {})
                b[key] = b.get(key, 0.0) + amp * math.sqrt(f)
        for part in branches.values():
            n2, vec = normalize(part)
            if n2 > 0.0:
                comps.append((w * n2, vec))
    return FockEnsemble(ens.register, comps, ens.discarded)
