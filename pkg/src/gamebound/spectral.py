"""Spectra of non-symmetric Jacobians and every condition-number formula.

The eigenvalue engine is LAPACK's Hessenberg-reduction + Francis-QR path
(via numpy); this module wraps it with the contracts the rest of the package
relies on (conjugate-pair closure, trace/determinant identities, failure
mapping) and adds the block spectral bounds and the closed-form condition
numbers used by the lower bounds.
"""

from __future__ import annotations

import cmath
import weakref
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateBoundsError,
    DimensionError,
    SpectralFailureError,
    UndefinedKappaError,
    UnsupportedArityError,
    ValidationError,
)
from .games import QuadraticGame

# Largest matrix order the dense solver accepts.
MAX_ORDER = 4096
# kappa is undefined when min |sigma| <= this fraction of max |sigma|.
KAPPA_SINGULAR_TOL = 1e-10


@dataclass(frozen=True)
class ComplexSpectrum:
    """Full eigenvalue multiset of a real matrix with its modulus extremes."""

    eigenvalues: np.ndarray
    max_modulus: float
    min_modulus: float

    @classmethod
    def from_eigenvalues(cls, values) -> "ComplexSpectrum":
        values = np.asarray(values, dtype=complex).reshape(-1)
        values.setflags(write=False)
        moduli = np.abs(values)
        return cls(
            eigenvalues=values,
            max_modulus=float(moduli.max()) if values.size else 0.0,
            min_modulus=float(moduli.min()) if values.size else 0.0,
        )


@dataclass(frozen=True)
class BlockSpectralBounds:
    """The six constants bounding the block spectra of a 2-player Jacobian."""

    mu1: float
    mu2: float
    mu12: float
    L1: float
    L2: float
    L12: float

    def __post_init__(self):
        for name, lo, hi in (
            ("1", self.mu1, self.L1),
            ("2", self.mu2, self.L2),
            ("12", self.mu12, self.L12),
        ):
            if lo < 0 or hi < 0:
                raise ValidationError(f"block bounds mu{name}/L{name} must be >= 0")
            if lo > hi * (1 + 1e-12) + 1e-15:
                raise ValidationError(f"mu{name}={lo} exceeds L{name}={hi}")


@dataclass(frozen=True)
class SpectralCase:
    """Discriminants and closed-form eigenvalue pairs of the 4x4 hard pattern."""

    delta_mu: float
    delta_L: float
    lambda_mu_plus: complex
    lambda_mu_minus: complex
    lambda_L_plus: complex
    lambda_L_minus: complex


def eigenvalues(A) -> ComplexSpectrum:
    """Full spectrum of a square real matrix of order <= 4096."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"eigenvalues needs a square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_ORDER:
        raise ValidationError(f"matrix order {A.shape[0]} exceeds limit {MAX_ORDER}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix contains non-finite entries")
    try:
        values = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise SpectralFailureError(f"QR iteration failed to converge: {exc}") from exc
    return ComplexSpectrum.from_eigenvalues(values)


# Per-game spectrum cache. Hard-instance constructors preload it with exact
# closed forms so desk-scale instances never need a dense O(n^3) eigensolve.
_GAME_SPECTRA: "weakref.WeakKeyDictionary[QuadraticGame, ComplexSpectrum]" = (
    weakref.WeakKeyDictionary()
)


def game_spectrum(game: QuadraticGame) -> ComplexSpectrum:
    """Spectrum of the game Jacobian, cached per game instance."""
    spectrum = _GAME_SPECTRA.get(game)
    if spectrum is None:
        spectrum = eigenvalues(game.A)
        _GAME_SPECTRA[game] = spectrum
    return spectrum


def cache_game_spectrum(game: QuadraticGame, values) -> ComplexSpectrum:
    """Preload the spectrum cache with analytically known eigenvalues."""
    values = np.asarray(values, dtype=complex).reshape(-1)
    if values.shape != (game.d,):
        raise DimensionError(
            f"expected {game.d} eigenvalues for a {game.d}x{game.d} Jacobian, "
            f"got {values.shape[0]}"
        )
    spectrum = ComplexSpectrum.from_eigenvalues(values)
    _GAME_SPECTRA[game] = spectrum
    return spectrum


def block_spectral_bounds(game: QuadraticGame) -> BlockSpectralBounds:
    """Exact block spectral bounds of a 2-player game.

    mu_i/L_i are the extreme moduli of the symmetric diagonal blocks; the
    coupling bounds come through the Gram matrix of the smaller side so that
    only genuine rank deficiency reports mu12 = 0.
    """
    if game.n != 2:
        raise UnsupportedArityError(
            f"block spectral bounds are defined for 2-player games, got n={game.n}"
        )
    s1 = np.abs(scipy.linalg.eigvalsh(game.block(1, 1)))
    s2 = np.abs(scipy.linalg.eigvalsh(game.block(2, 2)))
    M = game.block(1, 2)
    gram = M @ M.T if M.shape[0] <= M.shape[1] else M.T @ M
    gram_eigs = np.clip(scipy.linalg.eigvalsh(gram), 0.0, None)
    return BlockSpectralBounds(
        mu1=float(s1.min()),
        mu2=float(s2.min()),
        mu12=float(np.sqrt(gram_eigs.min())),
        L1=float(s1.max()),
        L2=float(s2.max()),
        L12=float(np.sqrt(gram_eigs.max())),
    )


def kappa_jacobian(game: QuadraticGame) -> float:
    """Condition number max|sigma(A)| / min|sigma(A)|."""
    spectrum = game_spectrum(game)
    if spectrum.min_modulus <= KAPPA_SINGULAR_TOL * spectrum.max_modulus:
        raise UndefinedKappaError(
            f"kappa undefined: min modulus {spectrum.min_modulus:.3e} is "
            f"negligible against max modulus {spectrum.max_modulus:.3e}"
        )
    return spectrum.max_modulus / spectrum.min_modulus


def _discriminants(bounds: BlockSpectralBounds) -> tuple[float, float]:
    delta_mu = (bounds.mu1 - bounds.mu2) ** 2 - 4.0 * bounds.mu12**2
    delta_L = (bounds.L1 - bounds.L2) ** 2 - 4.0 * bounds.L12**2
    return delta_mu, delta_L


def kappa_table1(bounds: BlockSpectralBounds) -> tuple[float, str]:
    """Condition-number cell selected by the signs of the two discriminants.

    Returns (value, case). The value is the exact kappa of the 4x4 hard
    pattern when both discriminants are negative (case "exact"); in the other
    three cases it is only a lower bound on that kappa (cases "mu-real",
    "L-real", "both-real", naming which eigenvalue pairs are real).
    """
    mu1, mu2, mu12 = bounds.mu1, bounds.mu2, bounds.mu12
    L1, L2, L12 = bounds.L1, bounds.L2, bounds.L12
    delta_mu, delta_L = _discriminants(bounds)
    d_mu = mu1 * mu2 + mu12**2
    d_L = L1 * L2 + L12**2
    if delta_mu < 0:
        if d_mu <= 0:
            raise DegenerateBoundsError("mu1*mu2 + mu12^2 must be positive")
        if delta_L < 0:
            return float(np.sqrt(d_L / d_mu)), "exact"
        return float(0.5 * (L1 + L2 + np.sqrt(delta_L)) / np.sqrt(d_mu)), "L-real"
    denom = mu1 + mu2 - np.sqrt(delta_mu)
    if denom <= 0:
        raise DegenerateBoundsError("mu1 + mu2 - sqrt(delta_mu) must be positive")
    if delta_L < 0:
        return float(2.0 * np.sqrt(d_L) / denom), "mu-real"
    return float((L1 + L2 + np.sqrt(delta_L)) / denom), "both-real"


def kappa_domino_basic(bounds: BlockSpectralBounds) -> float:
    """L12 / sqrt(mu1 mu2); undefined when either mu vanishes."""
    prod = bounds.mu1 * bounds.mu2
    if prod <= 0:
        raise UndefinedKappaError("L12/sqrt(mu1 mu2) undefined: mu1*mu2 = 0")
    return bounds.L12 / float(np.sqrt(prod))


def kappa_domino_improved(bounds: BlockSpectralBounds) -> float:
    """sqrt((L12^2 + mu1 mu2) / (mu12^2 + mu1 mu2)); >= 1 when L12 >= mu12."""
    denom = bounds.mu12**2 + bounds.mu1 * bounds.mu2
    if denom <= 0:
        raise DegenerateBoundsError("mu12^2 + mu1*mu2 must be positive")
    return float(np.sqrt((bounds.L12**2 + bounds.mu1 * bounds.mu2) / denom))


def toeplitz_symbol_range(a0: float, a1: float) -> tuple[float, float]:
    """Essential range of the bidiagonal Gram symbol 2 a0 a1 cos(t) + a0^2 + a1^2.

    These are the exact spectrum bounds of the infinite operator M M':
    ((|a0| - |a1|)^2, (|a0| + |a1|)^2).
    """
    lo = (abs(a0) - abs(a1)) ** 2
    hi = (abs(a0) + abs(a1)) ** 2
    return float(lo), float(hi)


def spectral_case(bounds: BlockSpectralBounds) -> SpectralCase:
    """Closed-form eigenvalues of the 4x4 hard pattern built from the bounds."""
    delta_mu, delta_L = _discriminants(bounds)
    root_mu = cmath.sqrt(((bounds.mu1 - bounds.mu2) / 2.0) ** 2 - bounds.mu12**2)
    root_L = cmath.sqrt(((bounds.L1 - bounds.L2) / 2.0) ** 2 - bounds.L12**2)
    mid_mu = (bounds.mu1 + bounds.mu2) / 2.0
    mid_L = (bounds.L1 + bounds.L2) / 2.0
    return SpectralCase(
        delta_mu=float(delta_mu),
        delta_L=float(delta_L),
        lambda_mu_plus=mid_mu + root_mu,
        lambda_mu_minus=mid_mu - root_mu,
        lambda_L_plus=mid_L + root_L,
        lambda_L_minus=mid_L - root_L,
    )
