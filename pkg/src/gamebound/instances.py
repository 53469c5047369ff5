"""Worst-case game constructions with closed-form solutions and rate constants.

Two families:

* Truncated bidiagonal ("domino") min-max instances whose stationary solution
  is a geometric profile c * chi^i; any method that activates at most one new
  coordinate per step from zero initialization keeps distance at least
  chi^(t+1) times the initial distance.
* The 4x4 block pattern realizing prescribed block spectral bounds with
  known eigenvalue pairs, replicated to any size.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from dataclasses import dataclass

from .errors import ValidationError
from .games import QuadraticGame, build_game, game_to_json
from .spectral import BlockSpectralBounds, cache_game_spectrum, spectral_case

# Truncation dimensions below this make the boundary defect non-negligible.
MIN_DIM = 8


@dataclass(frozen=True, eq=False)
class DominoInstance:
    """Truncated bidiagonal counterexample with its closed-form solution.

    The solution profile is x*_i = c1 * chi^i, y*_i = c2 * chi^i (1-based i);
    truncation leaves a single audited defect in the last x-row of the vector
    field, of magnitude |a1 c c2 chi^(dim+1)|.
    """

    kind: str
    a0: float
    a1: float
    c: float
    d1_coeff: float
    d2_coeff: float
    mu1: float
    mu2: float
    mu12: float
    L12: float
    dim: int
    chi: float
    c1: float
    c2: float
    kappa: float
    game: QuadraticGame
    x_star: np.ndarray
    y_star: np.ndarray

    @property
    def w_star(self) -> np.ndarray:
        return np.concatenate([self.x_star, self.y_star])

    @property
    def boundary_defect(self) -> float:
        """Magnitude of the one truncated term in v(w*)."""
        return abs(self.a1 * self.c * self.c2) * self.chi ** (self.dim + 1)


@dataclass(frozen=True, eq=False)
class PSCLI2Instance:
    """Block-diagonal replication of the 4x4 hard pattern.

    The Jacobian's spectrum is exactly the four closed-form eigenvalue pairs,
    each with multiplicity block_dim.
    """

    mu1: float
    L1: float
    mu2: float
    L2: float
    mu12: float
    L12: float
    block_dim: int
    game: QuadraticGame

    @property
    def bounds(self) -> BlockSpectralBounds:
        return BlockSpectralBounds(
            mu1=self.mu1, mu2=self.mu2, mu12=self.mu12,
            L1=self.L1, L2=self.L2, L12=self.L12,
        )


def _bidiagonal(a0: float, a1: float, m: int) -> np.ndarray:
    M = np.zeros((m, m))
    np.fill_diagonal(M, a0)
    np.fill_diagonal(M[:, 1:], a1)
    return M


def _chi_root(mu_prod: float, c: float, a0: float, a1: float) -> float:
    """The |chi| < 1 root of a0 a1 chi^2 + (mu1 mu2 / c^2 + a0^2 + a1^2) chi + a0 a1.

    Uses the cancellation-free form 2|a0 a1| / (K + sqrt(K^2 - 4 a0^2 a1^2));
    the two roots multiply to 1, so this is always the inner one.
    """
    q = mu_prod / (c * c)
    K = q + a0 * a0 + a1 * a1
    disc = K * K - 4.0 * (a0 * a1) ** 2
    chi = 2.0 * abs(a0 * a1) / (K + np.sqrt(disc))
    return float(chi if a0 * a1 < 0 else -chi)


def _domino_spectrum(mu1, mu2, c, a0, a1, m) -> np.ndarray:
    """Exact Jacobian spectrum of the truncated instance.

    By the Schur complement against the scalar diagonal blocks, eigenvalues
    solve (la - mu1)(la - mu2) = -c^2 s for each eigenvalue s of the truncated
    Gram matrix M M' (tridiagonal: diagonal a0^2 + a1^2 with last entry a0^2,
    off-diagonal a0 a1).
    """
    diag = np.full(m, a0 * a0 + a1 * a1)
    diag[-1] = a0 * a0
    if m > 1 and a0 * a1 != 0.0:
        gram = scipy.linalg.eigvalsh_tridiagonal(diag, np.full(m - 1, a0 * a1))
    else:
        gram = diag
    gram = np.clip(gram, 0.0, None)
    mid = (mu1 + mu2) / 2.0
    root = np.sqrt(((mu1 - mu2) / 2.0) ** 2 - c * c * gram + 0j)
    return np.concatenate([mid + root, mid - root])


def _build_domino(kind, mu1, mu2, c, a0, a1, mu12, L12, kappa, chi, dim):
    d1, d2 = 0.0, 1.0
    M = _bidiagonal(a0, a1, dim)
    e1 = np.zeros(dim)
    e1[0] = 1.0
    game = build_game(
        dims=(dim, dim),
        blocks={
            (1, 1): mu1 * np.eye(dim),
            (1, 2): c * M,
            (2, 1): -c * M.T,
            (2, 2): mu2 * np.eye(dim),
        },
        offsets={1: -d1 * e1, 2: -d2 * e1},
    )
    cache_game_spectrum(game, _domino_spectrum(mu1, mu2, c, a0, a1, dim))
    powers = chi ** np.arange(1, dim + 1)
    if a1 != 0.0:
        # Both boundary rows solved for the geometric amplitudes: with d1 = 0
        # the x-row also enforces the interior relation, so the profile is an
        # exact stationary point of the untruncated operator.
        lhs = np.array(
            [
                [mu1 * chi, c * (a0 * chi + a1 * chi * chi)],
                [a0 * c * chi, -mu2 * chi],
            ]
        )
        c1, c2 = np.linalg.solve(lhs, np.array([d1, -d2]))
        x_star = c1 * powers
        y_star = c2 * powers
    else:
        # Diagonal coupling: the solution lives on the first coordinate only.
        denom = (a0 * c) ** 2 + mu1 * mu2
        c1 = -a0 * c * d2 / denom
        c2 = mu1 * d2 / denom
        x_star = np.zeros(dim)
        y_star = np.zeros(dim)
        x_star[0] = c1
        y_star[0] = c2
    x_star.setflags(write=False)
    y_star.setflags(write=False)
    return DominoInstance(
        kind=kind,
        a0=float(a0),
        a1=float(a1),
        c=float(c),
        d1_coeff=d1,
        d2_coeff=d2,
        mu1=float(mu1),
        mu2=float(mu2),
        mu12=float(mu12),
        L12=float(L12),
        dim=int(dim),
        chi=float(chi),
        c1=float(c1),
        c2=float(c2),
        kappa=float(kappa),
        game=game,
        x_star=x_star,
        y_star=y_star,
    )


def domino_basic(mu1: float, mu2: float, c: float, dim: int) -> DominoInstance:
    """Hard instance with coupling bounds (0, 2c): a0 = 1, a1 = -1.

    chi = 1 - 2 / (sqrt(kappa^2 + 1) + 1) with kappa = 2c / sqrt(mu1 mu2).
    """
    if mu1 <= 0 or mu2 <= 0 or c <= 0:
        raise ValidationError("mu1, mu2 and c must be positive")
    if dim < MIN_DIM:
        raise ValidationError(f"dim must be >= {MIN_DIM}, got {dim}")
    kappa = 2.0 * c / float(np.sqrt(mu1 * mu2))
    chi = _chi_root(mu1 * mu2, c, 1.0, -1.0)
    return _build_domino(
        "domino-basic", mu1, mu2, c, 1.0, -1.0,
        mu12=0.0, L12=2.0 * c, kappa=kappa, chi=chi, dim=dim,
    )


def domino_improved(
    mu1: float, mu2: float, mu12: float, L12: float, dim: int
) -> DominoInstance:
    """Hard instance realizing coupling bounds (mu12, L12) exactly.

    a0 = (L12 + mu12)/2, a1 = (mu12 - L12)/2, c = 1;
    chi = (sqrt(dL) - sqrt(dmu)) / (sqrt(dL) + sqrt(dmu)) = 1 - 2/(kappa + 1)
    with dmu = mu1 mu2 + mu12^2, dL = mu1 mu2 + L12^2, kappa = sqrt(dL/dmu).
    """
    if mu1 <= 0 or mu2 <= 0:
        raise ValidationError("mu1 and mu2 must be positive")
    if not 0 <= mu12 <= L12 or L12 <= 0:
        raise ValidationError("need 0 <= mu12 <= L12 with L12 > 0")
    if dim < MIN_DIM:
        raise ValidationError(f"dim must be >= {MIN_DIM}, got {dim}")
    a0 = (L12 + mu12) / 2.0
    a1 = (mu12 - L12) / 2.0
    d_mu = mu1 * mu2 + mu12 * mu12
    d_L = mu1 * mu2 + L12 * L12
    kappa = float(np.sqrt(d_L / d_mu))
    chi = float((np.sqrt(d_L) - np.sqrt(d_mu)) / (np.sqrt(d_L) + np.sqrt(d_mu)))
    return _build_domino(
        "domino-improved", mu1, mu2, 1.0, a0, a1,
        mu12=float(mu12), L12=float(L12), kappa=kappa, chi=chi, dim=dim,
    )


def pscli2_instance(
    mu1: float,
    L1: float,
    mu2: float,
    L2: float,
    mu12: float,
    L12: float,
    block_dim: int = 1,
    *,
    b=None,
) -> PSCLI2Instance:
    """Assemble the 4x4 hard pattern, replicated block_dim times per player.

    Player 1 owns diag(mu1, L1, ...), player 2 diag(mu2, L2, ...), coupled by
    diag(mu12, L12, ...). The offset defaults to zero (rate bounds are
    initialization-driven); pass ``b`` for stationary-point tests.
    """
    values = (mu1, L1, mu2, L2, mu12, L12)
    if any(not np.isfinite(v) or v < 0 for v in values):
        raise ValidationError(f"all six block bounds must be >= 0, got {values}")
    if block_dim < 1:
        raise ValidationError(f"block_dim must be >= 1, got {block_dim}")
    case = spectral_case(
        BlockSpectralBounds(mu1=mu1, mu2=mu2, mu12=mu12, L1=L1, L2=L2, L12=L12)
    )
    lams = np.array(
        [case.lambda_mu_plus, case.lambda_mu_minus,
         case.lambda_L_plus, case.lambda_L_minus]
    )
    moduli = np.abs(lams)
    if moduli.min() <= 1e-12 * max(moduli.max(), 1.0):
        raise ValidationError("requested bounds produce a singular Jacobian")
    s1 = np.diag(np.tile([mu1, L1], block_dim)).astype(float)
    s2 = np.diag(np.tile([mu2, L2], block_dim)).astype(float)
    coupling = np.diag(np.tile([mu12, L12], block_dim)).astype(float)
    offsets = None
    if b is not None:
        b = np.asarray(b, dtype=float).reshape(-1)
        if b.shape != (4 * block_dim,):
            raise ValidationError(f"b must have length {4 * block_dim}")
        offsets = {1: b[: 2 * block_dim], 2: b[2 * block_dim:]}
    game = build_game(
        dims=(2 * block_dim, 2 * block_dim),
        blocks={(1, 1): s1, (1, 2): coupling, (2, 1): -coupling.T, (2, 2): s2},
        offsets=offsets,
    )
    return PSCLI2Instance(
        mu1=float(mu1), L1=float(L1), mu2=float(mu2), L2=float(L2),
        mu12=float(mu12), L12=float(L12), block_dim=int(block_dim), game=game,
    )


def distance_lower_bound(instance: DominoInstance, t: int) -> float:
    """chi^(t+1) times the zero-initialization distance ||w*||."""
    if t < 0:
        raise ValidationError(f"iteration t must be >= 0, got {t}")
    return float(instance.chi ** (t + 1) * np.linalg.norm(instance.w_star))


def domino_sparsity_horizon(assumption: str, t: int) -> int:
    """Largest per-player index that may be nonzero at step t from zero init.

    Both span assumptions admit the same bound: components beyond t + 1 are
    untouched (the two-step case activates y one step earlier but never
    reaches past t + 1).
    """
    if assumption not in ("one-step", "two-step"):
        raise ValidationError(
            f"assumption must be 'one-step' or 'two-step', got {assumption!r}"
        )
    if t < 0:
        raise ValidationError(f"iteration t must be >= 0, got {t}")
    return t + 1


class BandedDominoOps:
    """O(d) vector-field evaluations exploiting the bidiagonal coupling."""

    def __init__(self, instance: DominoInstance):
        self.instance = instance
        self.m = instance.dim
        self._b1 = instance.game.b[: self.m]
        self._b2 = instance.game.b[self.m:]

    def _coupling(self, y: np.ndarray) -> np.ndarray:
        # (M y)_i = a0 y_i + a1 y_{i+1}
        inst = self.instance
        out = inst.a0 * y
        if inst.a1 != 0.0:
            out[:-1] += inst.a1 * y[1:]
        return inst.c * out

    def _coupling_t(self, x: np.ndarray) -> np.ndarray:
        # (M' x)_i = a0 x_i + a1 x_{i-1}
        inst = self.instance
        out = inst.a0 * x
        if inst.a1 != 0.0:
            out[1:] += inst.a1 * x[:-1]
        return inst.c * out

    def field(self, w: np.ndarray) -> np.ndarray:
        inst = self.instance
        x, y = w[: self.m], w[self.m:]
        v1 = inst.mu1 * x + self._coupling(y) + self._b1
        v2 = -self._coupling_t(x) + inst.mu2 * y + self._b2
        return np.concatenate([v1, v2])

    def block_field(self, i: int, w: np.ndarray) -> np.ndarray:
        inst = self.instance
        x, y = w[: self.m], w[self.m:]
        if i == 1:
            return inst.mu1 * x + self._coupling(y) + self._b1
        if i == 2:
            return -self._coupling_t(x) + inst.mu2 * y + self._b2
        raise ValidationError(f"player index {i} out of range for 2 players")


def banded_ops(instance: DominoInstance) -> BandedDominoOps:
    """Fast vector-field ops for run()/step() on a domino instance."""
    return BandedDominoOps(instance)


# ---------------------------------------------------------------------------
# Serialization: game JSON plus an "analysis" side-object for reproducibility.
# ---------------------------------------------------------------------------

def domino_to_json(instance: DominoInstance) -> dict:
    obj = game_to_json(instance.game)
    obj["analysis"] = {
        "kind": instance.kind,
        "a0": instance.a0,
        "a1": instance.a1,
        "c": instance.c,
        "c1": instance.c1,
        "c2": instance.c2,
        "chi": instance.chi,
        "kappa": instance.kappa,
        "mu1": instance.mu1,
        "mu2": instance.mu2,
        "mu12": instance.mu12,
        "L12": instance.L12,
        "dim": instance.dim,
    }
    return obj


def pscli2_to_json(instance: PSCLI2Instance) -> dict:
    obj = game_to_json(instance.game)
    case = spectral_case(instance.bounds)
    obj["analysis"] = {
        "kind": "pscli2",
        "mu1": instance.mu1,
        "L1": instance.L1,
        "mu2": instance.mu2,
        "L2": instance.L2,
        "mu12": instance.mu12,
        "L12": instance.L12,
        "block_dim": instance.block_dim,
        "delta_mu": case.delta_mu,
        "delta_L": case.delta_L,
    }
    return obj


def instance_from_json(obj: dict):
    """Rebuild a hard instance from its analysis side-object, or None."""
    analysis = obj.get("analysis")
    if not analysis:
        return None
    kind = analysis.get("kind")
    if kind == "domino-basic":
        return domino_basic(
            analysis["mu1"], analysis["mu2"], analysis["c"], analysis["dim"]
        )
    if kind == "domino-improved":
        return domino_improved(
            analysis["mu1"], analysis["mu2"], analysis["mu12"],
            analysis["L12"], analysis["dim"],
        )
    if kind == "pscli2":
        return pscli2_instance(
            analysis["mu1"], analysis["L1"], analysis["mu2"], analysis["L2"],
            analysis["mu12"], analysis["L12"], analysis["block_dim"],
        )
    return None
