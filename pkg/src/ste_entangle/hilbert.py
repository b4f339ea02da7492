"""Basis bookkeeping for two two-level atoms coupled to one Fock mode.

The interaction conserves the total excitation number
``N = a^dagger a + (number of excited atoms)``, so every evolution started from a
product state ``|atoms> (x) |n>`` stays inside a block of dimension at most 4.

Atomic basis ordering is fixed to ``(EE, EG, GE, GG)`` everywhere; within a
block the photon index ascends along that ordering.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class AtomBasisLabel(enum.IntEnum):
    """Two-atom product basis states; the integer value is the matrix index."""

    EE = 0
    EG = 1
    GE = 2
    GG = 3

    @property
    def excited(self) -> int:
        """Number of excited atoms in this product state."""
        return {0: 2, 1: 1, 2: 1, 3: 0}[int(self)]

    @classmethod
    def parse(cls, value: "str | int | AtomBasisLabel") -> "AtomBasisLabel":
        if isinstance(value, AtomBasisLabel):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown atomic state {value!r}; expected one of ee, eg, ge, gg") from None
        return cls(value)


@dataclass(frozen=True)
class CouplingParams:
    """Driving coupling ``g_drv`` and stimulated-emission coupling ``g_stm`` (hbar = 1).

    ``g`` and ``gamma`` are the combinations the propagator is written in:
    ``g = g_drv + g_stm`` and ``gamma = (g_drv - g_stm) / g``.
    """

    g_drv: float = 1.0
    g_stm: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.g_drv) and self.g_drv > 0):
            raise ValueError(f"g_drv must be positive, got {self.g_drv!r}")
        if not (math.isfinite(self.g_stm) and self.g_stm >= 0):
            raise ValueError(f"g_stm must be non-negative, got {self.g_stm!r}")

    @classmethod
    def from_gamma(cls, gamma: float, g_drv: float = 1.0) -> "CouplingParams":
        """Build parameters from the asymmetry ``gamma`` in (-1, 1] at fixed ``g_drv``."""
        if not (-1.0 < gamma <= 1.0):
            raise ValueError(f"gamma must lie in (-1, 1], got {gamma!r}")
        return cls(g_drv=g_drv, g_stm=g_drv * (1.0 - gamma) / (1.0 + gamma))

    @property
    def g(self) -> float:
        return self.g_drv + self.g_stm

    @property
    def gamma(self) -> float:
        return (self.g_drv - self.g_stm) / (self.g_drv + self.g_stm)


@dataclass(frozen=True)
class ExcitationBlock:
    """Invariant subspace of fixed total excitation number.

    Attributes
    ----------
    total_excitation : int
        ``N = photons + excited atoms`` shared by every member.
    basis : tuple of (AtomBasisLabel, int)
        Members in ``(EE, EG, GE, GG)`` order. Labels that would need a
        negative photon number are left out, so blocks near the vacuum
        have fewer than four states.
    """

    total_excitation: int
    basis: tuple[tuple[AtomBasisLabel, int], ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, label: AtomBasisLabel, photons: int) -> int:
        return self.basis.index((AtomBasisLabel(label), photons))

    def __contains__(self, item: object) -> bool:
        return item in self.basis


def block_with_excitation(total_excitation: int) -> ExcitationBlock:
    if total_excitation < 0:
        raise ValueError("total excitation must be non-negative")
    members = tuple(
        (label, total_excitation - label.excited)
        for label in AtomBasisLabel
        if total_excitation - label.excited >= 0
    )
    return ExcitationBlock(total_excitation, members)


def block_for(initial_atoms: AtomBasisLabel | str, n: int) -> ExcitationBlock:
    """Return the excitation block containing ``|initial_atoms> (x) |n>``."""
    if n < 0:
        raise ValueError(f"photon number must be non-negative, got {n}")
    label = AtomBasisLabel.parse(initial_atoms)
    return block_with_excitation(n + label.excited)


def build_block_hamiltonian(params: CouplingParams, block: ExcitationBlock) -> np.ndarray:
    """Interaction Hamiltonian restricted to ``block`` (real symmetric).

    One atom de-exciting while the other stays excited couples with
    ``(g_drv + g_stm) sqrt(m + 1)``; de-exciting while the other is in the
    ground state couples with ``(g_drv - g_stm) sqrt(m + 1)``, where ``m`` is
    the photon number before emission. There is no direct EG-GE element.
    """
    up = params.g_drv + params.g_stm
    down = params.g_drv - params.g_stm
    h = np.zeros((block.dim, block.dim))
    for i, (label_i, m_i) in enumerate(block.basis):
        for j, (label_j, m_j) in enumerate(block.basis):
            if m_j != m_i + 1:
                continue
            if label_i is AtomBasisLabel.EE and label_j in (AtomBasisLabel.EG, AtomBasisLabel.GE):
                h[i, j] = h[j, i] = up * math.sqrt(m_i + 1)
            elif label_i in (AtomBasisLabel.EG, AtomBasisLabel.GE) and label_j is AtomBasisLabel.GG:
                h[i, j] = h[j, i] = down * math.sqrt(m_i + 1)
    return h
