"""First-order methods on quadratic games as stationary linear iterations.

Every method here updates with a fixed linear rule
``w_t = sum_i C_i(A) w_{t-p+i} + N(A) b`` (a p-SCLI-n method: order-p
stationary canonical linear iteration for n-player games). The module exposes
both the coefficient-matrix view (for consistency checks and the asymptotic
rate via the characteristic polynomial's root radius) and fast structured
steppers (for trajectories).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .games import QuadraticGame, stationary_point
from .spectral import eigenvalues, game_spectrum

VARIANTS = (
    "simultaneous-gd",
    "alternating-gd",
    "momentum-gd",
    "negative-momentum-gd",
    "extragradient",
    "stochastic-gd",
)
_MOMENTUM_VARIANTS = ("momentum-gd", "negative-momentum-gd")

# Entrywise tolerance for the consistency identity sum(C_i) = I + N A.
CONSISTENCY_TOL = 1e-10
# A trajectory is declared diverged once ||w_t|| > this factor * (1 + ||w_0||).
DIVERGENCE_FACTOR = 1e12


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean multiplicative gradient noise, entrywise uniform on [-s, s].

    Fresh matrices A_w and N_w are drawn each step (A_w first, then N_w) and
    perturb the field to (A + A_w) w + (I + N_w) b; both have zero mean, so
    expected iterates follow the noiseless recursion.
    """

    scale: float
    seed: int

    def __post_init__(self):
        if not np.isfinite(self.scale) or self.scale < 0:
            raise ValidationError(f"noise scale must be >= 0, got {self.scale}")
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class PSCLIMethod:
    """A method described by its variant, step sizes, momentum and noise.

    ``eta`` is either one shared step size or a per-player tuple; momentum
    variants carry a scalar ``beta`` (negative for negative momentum) and have
    lift order p = 2, all others p = 1.
    """

    variant: str
    eta: float | tuple[float, ...]
    beta: float | None = None
    noise: NoiseModel | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(
                f"unknown variant {self.variant!r}; expected one of {VARIANTS}"
            )
        if isinstance(self.eta, (tuple, list, np.ndarray)):
            eta = tuple(float(e) for e in self.eta)
            if not eta:
                raise ValidationError("eta tuple must not be empty")
        else:
            eta = float(self.eta)
        values = eta if isinstance(eta, tuple) else (eta,)
        if any(not np.isfinite(e) or e <= 0 for e in values):
            raise ValidationError(f"step sizes must be positive, got {eta}")
        object.__setattr__(self, "eta", eta)
        if self.variant in _MOMENTUM_VARIANTS:
            if self.beta is None or not np.isfinite(self.beta):
                raise ValidationError(f"{self.variant} requires a finite beta")
            if self.variant == "momentum-gd" and self.beta < 0:
                raise ValidationError("momentum-gd requires beta >= 0")
            if self.variant == "negative-momentum-gd" and self.beta >= 0:
                raise ValidationError("negative-momentum-gd requires beta < 0")
            object.__setattr__(self, "beta", float(self.beta))
        elif self.beta is not None:
            raise ValidationError(f"{self.variant} does not take a beta")
        if self.variant == "stochastic-gd":
            if self.noise is None:
                raise ValidationError("stochastic-gd requires a NoiseModel")
        elif self.noise is not None:
            raise ValidationError(f"{self.variant} does not take a NoiseModel")

    @property
    def p(self) -> int:
        return 2 if self.variant in _MOMENTUM_VARIANTS else 1

    def describe(self) -> dict:
        desc = {"variant": self.variant, "p": self.p, "eta": self.eta}
        if self.beta is not None:
            desc["beta"] = self.beta
        if self.noise is not None:
            desc["noise"] = {"scale": self.noise.scale, "seed": self.noise.seed}
        return desc


@dataclass(frozen=True)
class CoefficientForm:
    """Coefficient matrices C_0..C_{p-1} and inversion matrix N, all d x d."""

    C: tuple[np.ndarray, ...]
    N: np.ndarray


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Iterates w_0..w_T with distances to the stationary point."""

    iterates: np.ndarray
    distances: np.ndarray
    method: PSCLIMethod
    game: QuadraticGame
    w_star: np.ndarray
    diverged: bool = False

    @property
    def steps(self) -> int:
        return self.iterates.shape[0] - 1


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    reason: str | None
    rho: float
    identity_gap: float

    def __bool__(self) -> bool:
        return self.consistent


@dataclass(frozen=True)
class TuneResult:
    eta: float
    rho: float
    convergent: bool


def _eta_vector(method: PSCLIMethod, game: QuadraticGame) -> np.ndarray:
    """Per-coordinate step sizes (the diagonal of the eta matrix)."""
    if isinstance(method.eta, tuple):
        if len(method.eta) != game.n:
            raise DimensionError(
                f"eta has {len(method.eta)} entries for {game.n} players"
            )
        return np.repeat(np.asarray(method.eta, dtype=float), game.dims)
    return np.full(game.d, float(method.eta))


def _shared_eta(method: PSCLIMethod) -> float | None:
    if isinstance(method.eta, tuple):
        first = method.eta[0]
        return first if all(e == first for e in method.eta) else None
    return method.eta


def coefficient_form(method: PSCLIMethod, game: QuadraticGame) -> CoefficientForm:
    """Materialize the update rule's coefficient and inversion matrices.

    The stochastic variant exposes its expected coefficients, which coincide
    with plain simultaneous GD because the noise has zero mean.
    """
    A = game.A
    d = game.d
    eye = np.eye(d)
    eta = _eta_vector(method, game)
    eta_A = eta[:, None] * A
    variant = method.variant
    if variant in ("simultaneous-gd", "stochastic-gd"):
        return CoefficientForm(C=(eye - eta_A,), N=-np.diag(eta))
    if variant in _MOMENTUM_VARIANTS:
        beta = method.beta
        c1 = eye - eta_A + beta * eye
        c0 = -beta * eye
        return CoefficientForm(C=(c0, c1), N=-np.diag(eta))
    if variant == "extragradient":
        c0 = eye - eta_A + eta_A @ eta_A
        n_mat = -(eye - eta_A) * eta[None, :]
        return CoefficientForm(C=(c0,), N=n_mat)
    if variant == "alternating-gd":
        # One Gauss-Seidel pass: (I + eta L) w_t = (I - eta (D + U)) w_{t-1} - eta b
        # with A = D + L + U split into block diagonal / strictly lower / upper.
        lower = np.zeros_like(A)
        for i in range(1, game.n + 1):
            sl = game.player_slice(i)
            lower[sl, : sl.start] = A[sl, : sl.start]
        eta_lower = eta[:, None] * lower
        rest = eta_A - eta_lower
        c0 = np.linalg.solve(eye + eta_lower, eye - rest)
        n_mat = -np.linalg.solve(eye + eta_lower, np.diag(eta))
        return CoefficientForm(C=(c0,), N=n_mat)
    raise ValidationError(f"unknown variant {variant!r}")


class DenseFieldOps:
    """Vector-field evaluations backed by the dense Jacobian."""

    def __init__(self, game: QuadraticGame):
        self.game = game

    def field(self, w: np.ndarray) -> np.ndarray:
        return self.game.A @ w + self.game.b

    def block_field(self, i: int, w: np.ndarray) -> np.ndarray:
        sl = self.game.player_slice(i)
        return self.game.A[sl] @ w + self.game.b[sl]


def _make_stepper(method: PSCLIMethod, game: QuadraticGame, ops=None):
    """Compile the one-step update w_{t} = f(history, rng) for a method."""
    if ops is None:
        ops = DenseFieldOps(game)
    eta = _eta_vector(method, game)
    variant = method.variant

    if variant == "simultaneous-gd":
        def step_fn(history, rng):
            w = history[-1]
            return w - eta * ops.field(w)
    elif variant in _MOMENTUM_VARIANTS:
        beta = method.beta

        def step_fn(history, rng):
            prev, last = history[-2], history[-1]
            return last - eta * ops.field(last) + beta * (last - prev)
    elif variant == "extragradient":
        def step_fn(history, rng):
            w = history[-1]
            half = w - eta * ops.field(w)
            return w - eta * ops.field(half)
    elif variant == "alternating-gd":
        slices = [game.player_slice(i) for i in range(1, game.n + 1)]

        def step_fn(history, rng):
            w = history[-1].copy()
            for i, sl in enumerate(slices, start=1):
                w[sl] -= eta[sl] * ops.block_field(i, w)
            return w
    elif variant == "stochastic-gd":
        scale = method.noise.scale
        b = game.b
        d = game.d

        def step_fn(history, rng):
            if rng is None:
                raise ValidationError("stochastic-gd needs an rng state")
            w = history[-1]
            a_noise = rng.uniform(-scale, scale, size=(d, d))
            n_noise = rng.uniform(-scale, scale, size=(d, d))
            return w - eta * (ops.field(w) + a_noise @ w + n_noise @ b)
    else:
        raise ValidationError(f"unknown variant {variant!r}")
    return step_fn


def step(method: PSCLIMethod, game: QuadraticGame, history, rng=None) -> np.ndarray:
    """Apply one update given the last p iterates (chronological order)."""
    history = [np.asarray(h, dtype=float).reshape(-1) for h in history]
    if len(history) != method.p:
        raise DimensionError(
            f"history holds {len(history)} vectors, expected p={method.p}"
        )
    for h in history:
        if h.shape != (game.d,):
            raise DimensionError(f"history vector length {h.shape[0]} != d={game.d}")
    return _make_stepper(method, game)(history, rng)


def run(
    method: PSCLIMethod,
    game: QuadraticGame,
    w0,
    T: int,
    *,
    ops=None,
    w_star=None,
    rng=None,
) -> Trajectory:
    """Iterate the method for T steps and track distances to the stationary point.

    ``w0`` is a single seed vector (duplicated for p = 2) or a sequence of p
    seeds. A trajectory whose norm exceeds 1e12 * (1 + ||w_0||) is halted and
    flagged diverged; that is a result, not an error.
    """
    if T < 1:
        raise ValidationError(f"step count T must be >= 1, got {T}")
    p = method.p
    w0_arr = np.asarray(w0, dtype=float)
    if w0_arr.ndim == 1:
        seeds = [w0_arr.copy() for _ in range(p)]
    else:
        if w0_arr.shape[0] != p:
            raise DimensionError(f"expected {p} seed vectors, got {w0_arr.shape[0]}")
        seeds = [w0_arr[k].copy() for k in range(p)]
    for s in seeds:
        if s.shape != (game.d,):
            raise DimensionError(f"seed length {s.shape[0]} != d={game.d}")
    if w_star is None:
        w_star = stationary_point(game).w_star
    else:
        w_star = np.asarray(w_star, dtype=float).reshape(-1)
    if rng is None and method.noise is not None:
        rng = np.random.default_rng(method.noise.seed)

    step_fn = _make_stepper(method, game, ops)
    limit = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(seeds[0])))
    iterates = list(seeds[: min(p, T + 1)])
    diverged = False
    history = list(seeds)
    for _ in range(len(iterates), T + 1):
        w = step_fn(history, rng)
        iterates.append(w)
        history = history[1:] + [w] if p > 1 else [w]
        if float(np.linalg.norm(w)) > limit:
            diverged = True
            break
    stack = np.array(iterates)
    distances = np.linalg.norm(stack - w_star[None, :], axis=1)
    stack.setflags(write=False)
    distances.setflags(write=False)
    return Trajectory(
        iterates=stack,
        distances=distances,
        method=method,
        game=game,
        w_star=w_star,
        diverged=diverged,
    )


def consistency_check(method: PSCLIMethod, game: QuadraticGame) -> ConsistencyResult:
    """Check sum(C_i) = I + N A entrywise and root radius < 1.

    Both conditions together are equivalent to convergence to the stationary
    point for every offset b.
    """
    cf = coefficient_form(method, game)
    lhs = sum(cf.C)
    rhs = np.eye(game.d) + cf.N @ game.A
    gap = float(np.abs(lhs - rhs).max())
    rho = asymptotic_rate(method, game)
    if gap > CONSISTENCY_TOL:
        return ConsistencyResult(
            False,
            f"coefficient identity fails: max |sum C_i - (I + N A)| = {gap:.3e}",
            rho,
            gap,
        )
    if not rho < 1.0:
        return ConsistencyResult(
            False, f"root radius {rho:.6g} >= 1", rho, gap
        )
    return ConsistencyResult(True, None, rho, gap)


def _symbol_root_radius(method: PSCLIMethod, lam: np.ndarray) -> float:
    """Root radius via the per-eigenvalue scalar symbol (shared scalar eta).

    With one shared step size every coefficient matrix is a polynomial in A,
    so the characteristic polynomial factors over sigma(A) and its root radius
    is the max over eigenvalues of the scalar recurrence's root modulus.
    """
    eta = _shared_eta(method)
    x = eta * lam
    variant = method.variant
    if variant in ("simultaneous-gd", "stochastic-gd"):
        return float(np.abs(1.0 - x).max())
    if variant == "extragradient":
        return float(np.abs(1.0 - x + x * x).max())
    if variant in _MOMENTUM_VARIANTS:
        b = method.beta
        mid = 1.0 - x + b
        root = np.sqrt(mid * mid - 4.0 * b + 0j)
        plus = np.abs((mid + root) / 2.0)
        minus = np.abs((mid - root) / 2.0)
        return float(np.maximum(plus, minus).max())
    raise ValidationError(f"no scalar symbol for variant {variant!r}")


def companion_matrix(cf: CoefficientForm) -> np.ndarray:
    """Block companion linearization of w_t = sum_i C_i w_{t-p+i}.

    Top block row holds C_{p-1}, ..., C_0; identity blocks sit on the first
    subdiagonal. Its spectrum equals the root set of the characteristic
    matrix polynomial I z^p - sum_i C_i z^i.
    """
    p = len(cf.C)
    d = cf.C[0].shape[0]
    comp = np.zeros((p * d, p * d))
    for k in range(p):
        comp[:d, k * d:(k + 1) * d] = cf.C[p - 1 - k]
    for k in range(1, p):
        comp[k * d:(k + 1) * d, (k - 1) * d:k * d] = np.eye(d)
    return comp


def asymptotic_rate(method: PSCLIMethod, game: QuadraticGame) -> float:
    """Exact asymptotic linear rate: root radius of the characteristic polynomial.

    Computed from the scalar symbol over sigma(A) when a shared step size
    makes the coefficients polynomials in A, otherwise from the spectral
    radius of the block companion matrix.
    """
    eta = _shared_eta(method)
    if eta is not None and method.variant != "alternating-gd":
        return _symbol_root_radius(method, game_spectrum(game).eigenvalues)
    cf = coefficient_form(method, game)
    comp = cf.C[0] if len(cf.C) == 1 else companion_matrix(cf)
    return eigenvalues(comp).max_modulus


_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, a: float, b: float, rtol: float) -> tuple[float, float]:
    """Golden-section minimum of f on [a, b] to relative bracket width rtol."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rtol * b:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def tune_step_size(
    method: PSCLIMethod,
    game: QuadraticGame,
    grid_resolution: int = 32,
    *,
    eta_rtol: float = 1e-12,
) -> TuneResult:
    """Minimize the asymptotic rate over a shared step size.

    Seeds a log-spaced grid on (0, 2^p / max|sigma(A)|] (the consistency range
    for the inversion scale), then refines each seed's bracket by golden
    section. Returns the best (eta, rho); ``convergent`` is False when no
    step size achieves rho < 1, which is a report, not an error.
    """
    if grid_resolution < 8:
        raise ValidationError(f"grid_resolution must be >= 8, got {grid_resolution}")
    if method.noise is not None:
        raise ValidationError("tune_step_size handles deterministic methods only")
    top = game_spectrum(game).max_modulus
    if top <= 0:
        raise ValidationError("cannot tune on a zero Jacobian")
    eta_hi = (2.0**method.p) / top

    def rate(eta: float) -> float:
        return asymptotic_rate(dataclasses.replace(method, eta=float(eta)), game)

    grid = np.geomspace(eta_hi * 1e-6, eta_hi, grid_resolution)
    best_eta, best_rho = float(grid[0]), rate(float(grid[0]))
    for idx, seed in enumerate(grid):
        value = rate(float(seed))
        if value < best_rho:
            best_eta, best_rho = float(seed), value
        lo = float(grid[idx - 1]) if idx > 0 else float(seed) / 2.0
        hi = float(grid[idx + 1]) if idx + 1 < grid.size else eta_hi
        x, fx = _golden_min(rate, lo, hi, eta_rtol)
        if fx < best_rho:
            best_eta, best_rho = float(x), float(fx)
    return TuneResult(eta=best_eta, rho=best_rho, convergent=best_rho < 1.0)


def save_trajectory_csv(trajectory: Trajectory, path) -> None:
    """Write the trajectory as CSV: header t,dist,w_0,...,w_{d-1}."""
    d = trajectory.iterates.shape[1]
    header = "t,dist," + ",".join(f"w_{k}" for k in range(d))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for t in range(trajectory.iterates.shape[0]):
            row = [str(t), repr(float(trajectory.distances[t]))]
            row.extend(repr(float(x)) for x in trajectory.iterates[t])
            fh.write(",".join(row) + "\n")
