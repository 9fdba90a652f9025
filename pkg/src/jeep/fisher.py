"""Per-coefficient 2x2 Fisher information matrices of the change rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jpeg import DCT_MATRIX, QuantTable, from_vectors, tile_table, to_vectors
from .side_info import WetMask

_DCT_4 = DCT_MATRIX**4
_DCT_2 = DCT_MATRIX**2


@dataclass
class FisherField:
    """Entries ``I+``, ``I-`` and ``I+-`` of ``[[I+, I+-], [I+-, I-]]`` per coefficient.

    The matrices follow the usual steganographic normalisation, which is twice
    the Hessian of the pixel-domain KL divergence at zero change rates; see
    :meth:`kl_hessian`. A blocked direction carries ``+inf`` in its diagonal
    entry and ``0`` in ``cross``. ``det``, when known in closed form, avoids
    the cancellation in ``plus * minus - cross**2``.
    """

    plus: np.ndarray
    minus: np.ndarray
    cross: np.ndarray
    det: np.ndarray | None = None

    @property
    def shape(self):
        return self.plus.shape

    def kl_hessian(self) -> "FisherField":
        det = None if self.det is None else self.det / 4.0
        return FisherField(self.plus / 2.0, self.minus / 2.0, self.cross / 2.0, det)

    def determinant(self) -> np.ndarray:
        if self.det is not None:
            return self.det
        return self.plus * self.minus - self.cross**2

    def max_eigenvalue(self) -> np.ndarray:
        half_trace = (self.plus + self.minus) / 2.0
        with np.errstate(invalid="ignore"):
            return half_trace + np.hypot((self.plus - self.minus) / 2.0, self.cross)

    def min_eigenvalue(self) -> np.ndarray:
        """Smaller eigenvalue as ``det / lambda_max``, free of the trace-radius cancellation."""
        top = self.max_eigenvalue()
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(top > 0, self.determinant() / np.where(top > 0, top, 1.0), top)

    def with_wet(self, mask: WetMask) -> "FisherField":
        plus = np.where(mask.plus, np.inf, self.plus)
        minus = np.where(mask.minus, np.inf, self.minus)
        cross = np.where(mask.any, 0.0, self.cross)
        # a wet direction leaves a 1x1 (or empty) problem; no 2x2 determinant
        return FisherField(plus, minus, cross)


def fisher_base(quant: QuantTable, var: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(I_kl, iota_kl)`` planes.

    ``I_kl = q^4 sum_ij f^4 / sigma^4`` and ``iota_kl = 2 q^2 sum_ij f^2 / sigma^2``,
    the sums running over the pixels of the coefficient's own block.
    """
    var = np.asarray(var, dtype=np.float64)
    if np.any(~np.isfinite(var)) or np.any(var <= 0):
        raise ValueError("pixel variances must be positive and finite")
    q = tile_table(quant.steps.astype(np.float64), var.shape)
    inv = to_vectors(1.0 / var)
    info = from_vectors((inv**2) @ _DCT_4.T) * q**4
    iota = 2.0 * from_vectors(inv @ _DCT_2.T) * q**2
    return info, iota


def _modulation(u):
    u = np.asarray(u, dtype=np.float64)
    return (1.0 - 2.0 * u) ** 2, (1.0 + 2.0 * u) ** 2


def fisher_realistic(info: np.ndarray, u: np.ndarray, mask: WetMask | None = None) -> FisherField:
    """Fisher matrices for an attacker who sees residual variances but not ``E[eta]``.

    These are rank one: ``I+ I- = (I+-)^2``.
    """
    a, c = _modulation(u)
    field = FisherField(a * a * info, c * c * info, a * c * info, np.zeros(np.shape(info)))
    return field.with_wet(mask) if mask is not None else field


def fisher_omniscient(info: np.ndarray, iota: np.ndarray, u: np.ndarray, mask: WetMask | None = None) -> FisherField:
    """Fisher matrices for an attacker who also knows the precover and ``E[eta]``."""
    a, c = _modulation(u)
    # (a^2 I + iota)(c^2 I + iota) - (a c I - iota)^2 = iota I (a + c)^2
    det = iota * info * (a + c) ** 2
    field = FisherField(a * a * info + iota, c * c * info + iota, a * c * info - iota, det)
    return field.with_wet(mask) if mask is not None else field
