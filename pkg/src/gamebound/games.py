"""Quadratic n-player games: assembly, vector fields, stationary points.

A quadratic game is fully described by its Jacobian ``A`` (block structure:
symmetric diagonal blocks, arbitrary off-diagonal coupling) and an affine
offset ``b``; the joint dynamics follow the vector field ``v(w) = A w + b``.
Two-player zero-sum (min-max) problems embed as the special case with
antisymmetric coupling.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionError,
    NotMinMaxError,
    SingularJacobianError,
    ValidationError,
)

# Entrywise tolerance when checking structural identities on blocks.
BLOCK_TOL = 1e-12
# Eigenvalue floor accepted as "PSD" for the S_i of a min-max problem.
PSD_TOL = 1e-10
# LU pivot threshold, relative to ||A||_inf.
PIVOT_REL_TOL = 1e-12
# Stationary-point residual bound, relative to 1 + ||b||.
RESIDUAL_REL_TOL = 1e-8


def _as_matrix(value, name: str) -> np.ndarray:
    m = np.array(value, dtype=float)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be a 2-d matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} contains non-finite entries")
    return m


def _as_vector(value, name: str) -> np.ndarray:
    v = np.array(value, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} contains non-finite entries")
    return v


@dataclass(frozen=True, eq=False)
class QuadraticGame:
    """Immutable quadratic game with Jacobian ``A`` and offset ``b``.

    Diagonal blocks are symmetrized at construction, which preserves the
    dynamics (w'Sw == w'((S+S')/2)w); afterwards each diagonal block equals
    its own transpose exactly.
    """

    dims: tuple[int, ...]
    A: np.ndarray
    b: np.ndarray
    block_index: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d <= 0 for d in dims):
            raise ValidationError(f"player dims must be positive, got {dims}")
        A = _as_matrix(self.A, "A")
        d = sum(dims)
        if A.shape != (d, d):
            raise DimensionError(
                f"A has shape {A.shape}, expected ({d}, {d}) from dims {dims}"
            )
        b = np.zeros(d) if self.b is None else _as_vector(self.b, "b")
        if b.shape != (d,):
            raise DimensionError(f"b has length {b.shape[0]}, expected {d}")
        starts = (0, *np.cumsum(dims).tolist())
        for i in range(len(dims)):
            sl = slice(starts[i], starts[i + 1])
            block = A[sl, sl]
            A[sl, sl] = (block + block.T) / 2.0
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "block_index", starts)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def d(self) -> int:
        return self.block_index[-1]

    def player_slice(self, i: int) -> slice:
        """Index slice of player ``i`` (1-based) inside a joint vector."""
        if not 1 <= i <= self.n:
            raise DimensionError(f"player index {i} out of range 1..{self.n}")
        return slice(self.block_index[i - 1], self.block_index[i])

    def block(self, i: int, j: int) -> np.ndarray:
        """Block (i, j) of the Jacobian, players 1-based."""
        return self.A[self.player_slice(i), self.player_slice(j)]


@dataclass(frozen=True, eq=False)
class MinMaxProblem:
    """Min-max problem min_x max_y x'My + x'S1 x/2 - y'S2 y/2 + x'b1 - y'b2 + c.

    S1 and S2 must be symmetric and PSD up to tolerance; the constant c never
    enters the dynamics and is only stored.
    """

    M: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        M = _as_matrix(self.M, "M")
        S1 = _as_matrix(self.S1, "S1")
        S2 = _as_matrix(self.S2, "S2")
        d1, d2 = M.shape
        for name, S, dim in (("S1", S1, d1), ("S2", S2, d2)):
            if S.shape != (dim, dim):
                raise DimensionError(f"{name} has shape {S.shape}, expected ({dim}, {dim})")
            scale = max(1.0, float(np.abs(S).max(initial=0.0)))
            if np.abs(S - S.T).max(initial=0.0) > BLOCK_TOL * scale:
                raise ValidationError(f"{name} is not symmetric")
            if S.size and scipy.linalg.eigvalsh(S).min() < -PSD_TOL:
                raise NotMinMaxError(f"{name} is not PSD within tolerance {PSD_TOL}")
        b1 = _as_vector(self.b1, "b1")
        b2 = _as_vector(self.b2, "b2")
        if b1.shape != (d1,) or b2.shape != (d2,):
            raise DimensionError("b1/b2 lengths do not match M's shape")
        S1 = (S1 + S1.T) / 2.0
        S2 = (S2 + S2.T) / 2.0
        for arr in (M, S1, S2, b1, b2):
            arr.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "S1", S1)
        object.__setattr__(self, "S2", S2)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "b2", b2)
        object.__setattr__(self, "c", float(self.c))

    @property
    def d1(self) -> int:
        return self.M.shape[0]

    @property
    def d2(self) -> int:
        return self.M.shape[1]


@dataclass(frozen=True)
class StationaryPoint:
    """Solution of A w* = -b with its residual and a condition estimate."""

    w_star: np.ndarray
    residual: float
    solver_condition_estimate: float


def build_game(dims, blocks, offsets=None) -> QuadraticGame:
    """Assemble a game from per-player dimensions and 1-based block/offset maps.

    ``blocks`` maps (i, j) to a d_i x d_j matrix; ``offsets`` maps i to a
    d_i vector. Missing entries default to zero. Diagonal blocks are
    symmetrized.
    """
    dims = tuple(int(d) for d in dims)
    if not dims or any(d <= 0 for d in dims):
        raise ValidationError(f"player dims must be positive, got {dims}")
    n = len(dims)
    starts = (0, *np.cumsum(dims).tolist())
    d = starts[-1]
    A = np.zeros((d, d))
    for key, value in (blocks or {}).items():
        i, j = key
        if not (1 <= i <= n and 1 <= j <= n):
            raise DimensionError(f"block key {key} out of range for {n} players")
        m = _as_matrix(value, f"block {key}")
        if m.shape != (dims[i - 1], dims[j - 1]):
            raise DimensionError(
                f"block {key} has shape {m.shape}, expected ({dims[i-1]}, {dims[j-1]})"
            )
        A[starts[i - 1]:starts[i], starts[j - 1]:starts[j]] = m
    b = np.zeros(d)
    for i, value in (offsets or {}).items():
        if not 1 <= i <= n:
            raise DimensionError(f"offset key {i} out of range for {n} players")
        v = _as_vector(value, f"offset {i}")
        if v.shape != (dims[i - 1],):
            raise DimensionError(
                f"offset {i} has length {v.shape[0]}, expected {dims[i-1]}"
            )
        b[starts[i - 1]:starts[i]] = v
    return QuadraticGame(dims=dims, A=A, b=b)


def vector_field(game: QuadraticGame, w) -> np.ndarray:
    """Evaluate v(w) = A w + b."""
    w = _as_vector(w, "w")
    if w.shape != (game.d,):
        raise DimensionError(f"w has length {w.shape[0]}, expected {game.d}")
    return game.A @ w + game.b


def stationary_point(game: QuadraticGame) -> StationaryPoint:
    """Solve A w* = -b by partial-pivot LU with one step of iterative refinement.

    Raises SingularJacobianError naming the failing pivot when any pivot falls
    below PIVOT_REL_TOL * ||A||_inf.
    """
    A, b = game.A, game.b
    norm_inf = float(np.abs(A).sum(axis=1).max()) if game.d else 0.0
    with warnings.catch_warnings():
        # Singularity is detected by our own pivot check below.
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    threshold = PIVOT_REL_TOL * max(norm_inf, np.finfo(float).tiny)
    bad = np.flatnonzero(pivots < threshold)
    if bad.size:
        k = int(bad[0])
        raise SingularJacobianError(
            f"singular Jacobian: pivot {k} has magnitude {pivots[k]:.3e} "
            f"< {threshold:.3e}",
            pivot_index=k,
        )
    w = scipy.linalg.lu_solve((lu, piv), -b, check_finite=False)
    # One refinement step: w += A^{-1} (-b - A w).
    r = -b - A @ w
    w = w + scipy.linalg.lu_solve((lu, piv), r, check_finite=False)
    residual = float(np.linalg.norm(A @ w + b))
    bound = RESIDUAL_REL_TOL * (1.0 + float(np.linalg.norm(b)))
    if residual > bound:
        raise SingularJacobianError(
            f"stationary-point residual {residual:.3e} exceeds {bound:.3e}; "
            "Jacobian is too ill-conditioned",
            pivot_index=int(np.argmin(pivots)),
        )
    norm_1 = float(np.abs(A).sum(axis=0).max()) if game.d else 0.0
    gecon = scipy.linalg.get_lapack_funcs("gecon", (A,))
    rcond, _ = gecon(lu, norm_1)
    cond = float(1.0 / rcond) if rcond > 0 else float("inf")
    return StationaryPoint(w_star=w, residual=residual, solver_condition_estimate=cond)


def minmax_to_game(problem: MinMaxProblem) -> QuadraticGame:
    """Cast a min-max problem as the 2-player game with Jacobian [[S1, M], [-M', S2]].

    The constant c is dropped; it never affects the vector field.
    """
    return build_game(
        dims=(problem.d1, problem.d2),
        blocks={
            (1, 1): problem.S1,
            (1, 2): problem.M,
            (2, 1): -problem.M.T,
            (2, 2): problem.S2,
        },
        offsets={1: problem.b1, 2: problem.b2},
    )


def game_to_minmax(game: QuadraticGame) -> MinMaxProblem:
    """Read a 2-player game back into min-max form (c = 0).

    Requires antisymmetric coupling (block (2,1) == -block(1,2)') and PSD
    diagonal blocks; raises NotMinMaxError otherwise.
    """
    if game.n != 2:
        raise NotMinMaxError(f"min-max form needs exactly 2 players, got {game.n}")
    M = game.block(1, 2)
    M21 = game.block(2, 1)
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if np.abs(M21 + M.T).max(initial=0.0) > BLOCK_TOL * scale:
        raise NotMinMaxError("coupling blocks are not antisymmetric: A21 != -A12'")
    sl1, sl2 = game.player_slice(1), game.player_slice(2)
    return MinMaxProblem(
        M=M,
        S1=game.block(1, 1),
        S2=game.block(2, 2),
        b1=game.b[sl1],
        b2=game.b[sl2],
        c=0.0,
    )


# ---------------------------------------------------------------------------
# JSON game format: {"dims": [...], "blocks": {"i,j": [[...]]},
# "offsets": {"i": [...]}} with 1-based player indices; omitted entries are
# zero. The writer emits keys in lexicographic order so files are byte-stable.
# ---------------------------------------------------------------------------

def game_to_json(game: QuadraticGame) -> dict:
    blocks = {}
    for i in range(1, game.n + 1):
        for j in range(1, game.n + 1):
            block = game.block(i, j)
            if np.any(block != 0.0):
                blocks[f"{i},{j}"] = block.tolist()
    offsets = {}
    for i in range(1, game.n + 1):
        part = game.b[game.player_slice(i)]
        if np.any(part != 0.0):
            offsets[str(i)] = part.tolist()
    return {"dims": list(game.dims), "blocks": blocks, "offsets": offsets}


def game_from_json(obj: dict) -> QuadraticGame:
    try:
        dims = obj["dims"]
    except KeyError as exc:
        raise ValidationError("game JSON is missing 'dims'") from exc
    blocks = {}
    for key, value in obj.get("blocks", {}).items():
        try:
            i, j = (int(part) for part in key.split(","))
        except ValueError as exc:
            raise ValidationError(f"bad block key {key!r}; expected 'i,j'") from exc
        blocks[(i, j)] = value
    offsets = {}
    for key, value in obj.get("offsets", {}).items():
        try:
            offsets[int(key)] = value
        except ValueError as exc:
            raise ValidationError(f"bad offset key {key!r}; expected 'i'") from exc
    return build_game(dims, blocks, offsets)


def dump_json(obj: dict) -> str:
    """Serialize with sorted keys; byte-stable for identical inputs."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def save_game(game: QuadraticGame, path, analysis: dict | None = None) -> None:
    obj = game_to_json(game)
    if analysis is not None:
        obj["analysis"] = analysis
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_json(obj))


def load_game(path) -> QuadraticGame:
    with open(path, "r", encoding="utf-8") as fh:
        return game_from_json(json.load(fh))
