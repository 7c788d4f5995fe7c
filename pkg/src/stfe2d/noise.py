"""Spectral conservative noise: trigonometric modes, decay schedules, and
reproducible per-mode Gaussian increments.

The driving noise has two components (one per spatial direction), each a
mode sum  sum_{k,l} lambda_kl g_kl beta_kl  over the product trigonometric
basis

    g_k(x) = sqrt(2/L) * { cos(2 pi k x / L)   k >= 1
                           1/sqrt(2)           k == 0
                           sin(2 pi k x / L)   k <= -1 }

(eigenfunctions of the periodic 1D Laplacian), evaluated nodally on the
grid.  The mode set active at mesh size h is {|k|, |l| <= C_trunc * h^(-eps/2)},
capped per axis; the sets are nested as h decreases.

Gaussian increments are produced by a counter-based generator: a 64-bit
mix (splitmix64 finalizer) keyed by (seed, component, k, l) and evaluated
at a per-draw counter, pushed through Box-Muller.  A draw is a pure
function of its key and counter, so values are independent of evaluation
order and of the truncation-set size, and re-invocation reproduces them
bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import Field, Grid
from .material import AssumptionError

U64 = np.uint64

#: attempts (step-size halvings) addressable inside one step's counter slot
ATTEMPT_SLOTS = 64

STRAT_SYMMETRY_ERROR = "Stratonovich mode requires symmetric lambda"


class NoiseConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# decay schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerLawSchedule:
    """lambda_kl = lambda0 * (1 + k^2 + l^2)^(-s/2), identical for both components.

    s > 3 keeps sum lambda^2 * (k^2+l^2)^2 finite (colored noise with
    second-derivative margin); symmetric in sign and component, so it is
    admissible for Stratonovich runs.
    """

    lambda0: float = 0.1
    s: float = 4.0

    def __post_init__(self):
        if self.lambda0 < 0.0:
            raise NoiseConfigError(f"lambda0 = {self.lambda0:g} must be nonnegative")
        if not (self.s > 3.0):
            raise AssumptionError(
                f"(B3) violated: power-law decay exponent s = {self.s:g} must exceed 3 "
                "for colored noise with W^(2,inf)-summable modes")

    def lambda_xy(self, k: int, l: int) -> tuple[float, float]:
        lam = self.lambda0 * (1.0 + k * k + l * l) ** (-self.s / 2.0)
        return lam, lam

    @property
    def symmetric(self) -> bool:
        return True


@dataclass(frozen=True)
class TableSchedule:
    """Explicit decay table {(k, l): (lambda_x, lambda_y)}; zero off-table."""

    table: tuple  # tuple of ((k, l), (lx, ly)) pairs, hashable form

    @classmethod
    def from_dict(cls, d: dict) -> "TableSchedule":
        items = []
        for (k, l), lam in sorted(d.items()):
            if np.isscalar(lam):
                lam = (float(lam), float(lam))
            lx, ly = float(lam[0]), float(lam[1])
            if lx < 0 or ly < 0:
                raise NoiseConfigError(f"negative decay coefficient at mode ({k}, {l})")
            items.append(((int(k), int(l)), (lx, ly)))
        return cls(tuple(items))

    def _dict(self):
        cached = getattr(self, "_lookup", None)
        if cached is None:
            cached = dict(self.table)
            object.__setattr__(self, "_lookup", cached)
        return cached

    def lambda_xy(self, k: int, l: int) -> tuple[float, float]:
        return self._dict().get((k, l), (0.0, 0.0))

    @property
    def symmetric(self) -> bool:
        d = self._dict()
        keys = set(d) | {(-k, l) for k, l in d} | {(k, -l) for k, l in d}
        for k, l in keys:
            lx, ly = d.get((k, l), (0.0, 0.0))
            if lx != ly:
                return False
            for kk, ll in ((-k, l), (k, -l)):
                ox, oy = d.get((kk, ll), (0.0, 0.0))
                if (ox, oy) != (lx, ly):
                    return False
        return True


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    schedule: PowerLawSchedule | TableSchedule
    trunc_C: float = 1.0
    mode_cap: int = 64
    seed: int = 0
    interpretation: str = "ito"

    def __post_init__(self):
        if self.trunc_C <= 0.0:
            raise NoiseConfigError(f"trunc_C = {self.trunc_C:g} must be positive")
        if self.mode_cap < 0:
            raise NoiseConfigError("mode_cap must be nonnegative")
        if not (0 <= self.seed < 2**64):
            raise NoiseConfigError("seed must fit in 64 bits")
        if self.interpretation not in ("ito", "stratonovich"):
            raise NoiseConfigError(f"unknown interpretation {self.interpretation!r}")
        if self.interpretation == "stratonovich" and not self.schedule.symmetric:
            raise NoiseConfigError(STRAT_SYMMETRY_ERROR)

    def with_seed(self, seed: int) -> "NoiseModel":
        return NoiseModel(self.schedule, self.trunc_C, self.mode_cap, seed,
                          self.interpretation)

    def lambda_arrays(self, modes: Sequence[tuple[int, int]]):
        lx = np.array([self.schedule.lambda_xy(k, l)[0] for k, l in modes])
        ly = np.array([self.schedule.lambda_xy(k, l)[1] for k, l in modes])
        return lx, ly


def truncation_radius(model: NoiseModel, h: float, eps: float) -> int:
    """Largest admissible |k| (= |l|): min(trunc_C * h^(-eps/2), mode_cap)."""
    if not (h > 0.0):
        raise ValueError("mesh size must be positive")
    bound = model.trunc_C * h ** (-eps / 2.0)
    # guard against 3.9999... artifacts of the fractional power
    return min(int(np.floor(bound * (1.0 + 1e-12) + 1e-12)), model.mode_cap)


def truncation_set(model: NoiseModel, h: float, eps: float) -> list[tuple[int, int]]:
    """Active modes {(k,l): |k|,|l| <= radius}, lexicographically ordered.

    The radius grows monotonically as h decreases, so the sets are nested.
    """
    r = truncation_radius(model, h, eps)
    return [(k, l) for k in range(-r, r + 1) for l in range(-r, r + 1)]


# ---------------------------------------------------------------------------
# basis
# ---------------------------------------------------------------------------

def basis_1d(k: int, coords: np.ndarray, L: float) -> np.ndarray:
    scale = np.sqrt(2.0 / L)
    if k >= 1:
        return scale * np.cos(2.0 * np.pi * k * coords / L)
    if k == 0:
        return np.full_like(coords, 1.0 / np.sqrt(L))
    return scale * np.sin(2.0 * np.pi * k * coords / L)


def basis_eval(k: int, l: int, grid: Grid) -> Field:
    """Nodal interpolant of the product mode g_k(x) g_l(y)."""
    x = grid.hx * np.arange(grid.nx)
    y = grid.hy * np.arange(grid.ny)
    return Field(grid, np.outer(basis_1d(l, y, grid.Ly), basis_1d(k, x, grid.Lx)))


def basis_fields(grid: Grid, modes: Sequence[tuple[int, int]]) -> np.ndarray:
    """Stacked nodal basis values, shape (n_modes, ny, nx)."""
    out = np.empty((len(modes), grid.ny, grid.nx))
    for m, (k, l) in enumerate(modes):
        out[m] = basis_eval(k, l, grid).values
    return out


# ---------------------------------------------------------------------------
# counter-based Gaussian streams
# ---------------------------------------------------------------------------

def _mix64(x):
    # modular 64-bit wraparound is the intended mixing semantics
    with np.errstate(over="ignore"):
        x = (x ^ (x >> U64(30))) * U64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> U64(27))) * U64(0x94D049BB133111EB)
        return x ^ (x >> U64(31))


def mode_keys(seed: int, component: int, modes: Sequence[tuple[int, int]]) -> np.ndarray:
    """64-bit stream key per (seed, component, k, l); component 0 = x, 1 = y."""
    ks = np.array([k for k, _ in modes], dtype=np.int64)
    ls = np.array([l for _, l in modes], dtype=np.int64)
    with np.errstate(over="ignore"):
        x = _mix64(U64(seed) + U64(0x9E3779B97F4A7C15))
        x = _mix64(x ^ (U64(component) + U64(0xD1B54A32D192ED03)))
        x = _mix64(x + (ks + np.int64(2**31)).astype(np.uint64) * U64(0x8CB92BA72F3D8DD7))
        x = _mix64(x + (ls + np.int64(2**31)).astype(np.uint64) * U64(0xA24BAED4963EE407))
    return x


def standard_normals(keys: np.ndarray, counters) -> np.ndarray:
    """One N(0,1) draw per (key, counter) pair via Box-Muller; broadcasts."""
    keys = np.asarray(keys, dtype=np.uint64)
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = c * U64(2) + U64(0x632BE59BD9B4E019)
        x1 = _mix64(keys ^ _mix64(base))
        x2 = _mix64(keys ^ _mix64(base + U64(1)))
    u1 = ((x1 >> U64(11)).astype(np.float64) + 1.0) * 2.0**-53  # (0, 1]
    u2 = (x2 >> U64(11)).astype(np.float64) * 2.0**-53          # [0, 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def step_counter(step: int, attempt: int = 0) -> int:
    """Counter slot for the given accepted-step index and halving attempt."""
    if not (0 <= attempt < ATTEMPT_SLOTS):
        raise ValueError(f"attempt index {attempt} out of range")
    return step * ATTEMPT_SLOTS + attempt


@dataclass(frozen=True)
class Increments:
    """Per-mode Brownian increments for one step attempt (variance dt each)."""

    modes: tuple
    dwx: np.ndarray
    dwy: np.ndarray
    step: int
    attempt: int
    dt: float


def sample_increments(model: NoiseModel, modes: Sequence[tuple[int, int]],
                      step: int, dt: float, attempt: int = 0) -> Increments:
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    ctr = step_counter(step, attempt)
    sd = np.sqrt(dt)
    zx = standard_normals(mode_keys(model.seed, 0, modes), ctr)
    zy = standard_normals(mode_keys(model.seed, 1, modes), ctr)
    return Increments(tuple(modes), sd * zx, sd * zy, step, attempt, dt)


# ---------------------------------------------------------------------------
# Stratonovich correction constant
# ---------------------------------------------------------------------------

def strat_constant(model: NoiseModel, Lx: float, Ly: float) -> float:
    """Ito-correction coefficient of the Stratonovich noise, closed form.

    Requires component-equal, sign-symmetric decay; then the pointwise
    noise intensity  sum lambda_kl^2 g_kl(x,y)^2  is constant in space and
    equals

        (lambda_00^2 + 4 sum_{k,l>=1} lambda_kl^2
         + 2 sum_{k>=1} (lambda_k0^2 + lambda_0k^2)) / (Lx Ly),

    summed over the representable modes (|k|, |l| <= mode_cap); the sign
    classes are folded into the coefficients 4 and 2.
    """
    if not model.schedule.symmetric:
        raise NoiseConfigError(STRAT_SYMMETRY_ERROR)
    cap = model.mode_cap
    lam2 = lambda k, l: model.schedule.lambda_xy(k, l)[0] ** 2
    total = lam2(0, 0)
    total += 2.0 * sum(lam2(k, 0) for k in range(1, cap + 1))
    total += 2.0 * sum(lam2(0, l) for l in range(1, cap + 1))
    total += 4.0 * sum(lam2(k, l)
                       for k in range(1, cap + 1) for l in range(1, cap + 1))
    return total / (Lx * Ly)


def b3star_monitor(model: NoiseModel, h: float, eps: float) -> float:
    """Truncated third-derivative load: sum (lx^2+ly^2) h^eps (|k|^3+|l|^3)^2.

    Surrogate for the W^(3,inf) mass of the active modes; should stay
    bounded along mesh refinement for an admissible schedule.
    """
    modes = truncation_set(model, h, eps)
    lx, ly = model.lambda_arrays(modes)
    ks = np.array([abs(k) for k, _ in modes], dtype=float)
    ls = np.array([abs(l) for _, l in modes], dtype=float)
    return float(h**eps * ((lx**2 + ly**2) * (ks**3 + ls**3) ** 2).sum())
