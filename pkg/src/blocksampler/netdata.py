"""Network and covariate data: file I/O, synthetic generators, edge masking."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dists import logistic, make_rng

# block parameters of the two simulation scenarios: (within, between)
SCENARIO_PARAMS = {
    1: {"p": (0.1, 0.7), "psi": (0.1, 0.2), "r": (5.0, 3.0)},
    2: {"p": (0.1, 0.7), "lam": (3.0, 1.5)},
}
K_TRUE = 3


class DataError(ValueError):
    pass


def check_adjacency(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DataError(f"adjacency must be square, got shape {A.shape}")
    if np.any(np.diag(A) != 0):
        i = int(np.nonzero(np.diag(A))[0][0])
        raise DataError(f"self-loop: nonzero diagonal at node {i + 1}")
    asym = np.argwhere(A != A.T)
    if asym.size:
        i, j = asym[0]
        raise DataError(f"asymmetric entry at ({i + 1}, {j + 1}): {A[i, j]} != {A[j, i]}")
    if np.any(A < 0) or np.any(A != np.floor(A)):
        raise DataError("edge weights must be nonnegative integers")
    return A.astype(np.int64)


def _parse_weight(text: str, where: str) -> int:
    try:
        val = float(text)
    except ValueError as exc:
        raise DataError(f"non-numeric weight {text!r} at {where}") from exc
    if val < 0 or val != math.floor(val):
        raise DataError(f"weight {text!r} at {where} is not a nonnegative integer")
    return int(val)


def load_adjacency(path, fmt: str = "edge-list", n: int | None = None) -> np.ndarray:
    """Read an adjacency matrix from a dense CSV or an ``i,j,w`` edge list (1-based ids)."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if fmt in ("dense", "dense-csv"):
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        A = np.array([[_parse_weight(c, f"row {a + 1}") for c in r] for a, r in enumerate(rows)])
        return check_adjacency(A)
    if fmt not in ("edge-list", "edge-list-csv"):
        raise DataError(f"unknown adjacency format {fmt!r}")
    if rows and [c.strip() for c in rows[0][:3]] == ["i", "j", "w"]:
        rows = rows[1:]
    edges = []
    for line, r in enumerate(rows, start=2):
        i, j = int(r[0]), int(r[1])
        w = _parse_weight(r[2], f"line {line}")
        if i == j:
            raise DataError(f"self-loop at node {i} (line {line})")
        if i < 1 or j < 1:
            raise DataError(f"node ids are 1-based (line {line})")
        edges.append((i, j, w))
    size = n or max((max(i, j) for i, j, _ in edges), default=0)
    A = np.zeros((size, size), dtype=np.int64)
    for i, j, w in edges:
        if A[i - 1, j - 1] not in (0, w):
            raise DataError(f"conflicting weights for pair ({i}, {j})")
        A[i - 1, j - 1] = A[j - 1, i - 1] = w
    return check_adjacency(A)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def save_adjacency(path, A, fmt: str = "edge-list"):
    A = check_adjacency(A)
    with Path(path).open("w", newline="") as fh:
        wr = csv.writer(fh)
        if fmt in ("dense", "dense-csv"):
            wr.writerows(A.tolist())
            return
        wr.writerow(["i", "j", "w"])
        for i, j in zip(*np.triu_indices(A.shape[0], 1)):
            if A[i, j]:
                wr.writerow([i + 1, j + 1, int(A[i, j])])


@dataclass
class CovariateTensor:
    """Pairwise covariates ``Y[i, j]`` (symmetric, zero on the diagonal)."""

    Y: np.ndarray
    names: list[str] = field(default_factory=list)
    center: np.ndarray | None = None
    scale: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def q(self) -> int:
        return self.Y.shape[2]

    def pairs(self) -> np.ndarray:
        """``(n(n-1)/2, q)`` rows in upper-triangle order."""
        return self.Y[np.triu_indices(self.n, 1)]

    def standardized(self, skip: tuple[int, ...] = ()) -> "CovariateTensor":
        """Per-column mean 0, sd 1 over unordered pairs; ``skip`` lists untouched columns."""
        rows = self.pairs()
        center = rows.mean(axis=0)
        scale = rows.std(axis=0, ddof=1) if rows.shape[0] > 1 else np.ones(self.q)
        const = ~(scale > 0)
        # constant columns (an intercept, say) pass through unchanged
        center = np.where(const, 0.0, center)
        scale = np.where(const, 1.0, scale)
        for s in skip:
            center[s], scale[s] = 0.0, 1.0
        return from_pairs((rows - center) / scale, self.n, self.names, center=center, scale=scale)

    def with_intercept(self) -> "CovariateTensor":
        rows = np.column_stack([np.ones(self.pairs().shape[0]), self.pairs()])
        center = None if self.center is None else np.concatenate([[0.0], self.center])
        scale = None if self.scale is None else np.concatenate([[1.0], self.scale])
        return from_pairs(rows, self.n, ["intercept"] + list(self.names), center, scale)


def from_pairs(rows, n: int, names=None, center=None, scale=None) -> CovariateTensor:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    iu = np.triu_indices(n, 1)
    Y = np.zeros((n, n, rows.shape[1]))
    Y[iu] = rows
    Y[(iu[1], iu[0])] = rows
    names = list(names) if names else [f"y{s + 1}" for s in range(rows.shape[1])]
    return CovariateTensor(Y, names, center, scale)


def load_covariates(path, n: int, q: int | None = None, standardize: bool = False) -> CovariateTensor:
    """Read long-format covariates ``i,j,y1..yq``; every unordered pair must appear."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names = [h.strip() for h in header[2:]]
        if q is None:
            q = len(names)
        if len(names) != q:
            raise DataError(f"expected {q} covariate columns, found {len(names)}")
        Y = np.full((n, n, q), np.nan)
        for line, r in enumerate(reader, start=2):
            if not r:
                continue
            i, j = int(r[0]) - 1, int(r[1]) - 1
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise DataError(f"invalid pair ({i + 1}, {j + 1}) on line {line}")
            vals = np.array([float(v) for v in r[2:2 + q]])
            if not np.all(np.isfinite(vals)):
                raise DataError(f"non-finite covariate on line {line}")
            if not np.all(np.isnan(Y[i, j])) and not np.array_equal(Y[i, j], vals):
                raise DataError(f"duplicate pair ({min(i, j) + 1}, {max(i, j) + 1}) with conflicting values")
            Y[i, j] = Y[j, i] = vals
    iu = np.triu_indices(n, 1)
    missing = np.isnan(Y[iu]).any(axis=1)
    if missing.any():
        pairs = [(int(a) + 1, int(b) + 1) for a, b in zip(iu[0][missing], iu[1][missing])]
        raise DataError(f"missing covariates for pairs {pairs[:10]}{' ...' if len(pairs) > 10 else ''}")
    Y[np.arange(n), np.arange(n)] = 0.0
    cov = CovariateTensor(Y, names)
    return cov.standardized() if standardize else cov


def save_covariates(path, cov: CovariateTensor):
    iu = np.triu_indices(cov.n, 1)
    with Path(path).open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["i", "j"] + list(cov.names))
        for i, j, row in zip(iu[0], iu[1], cov.pairs()):
            wr.writerow([i + 1, j + 1] + [repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# synthetic data


@dataclass
class GroundTruth:
    z_true: np.ndarray  # 0-based labels
    K_true: int
    params: dict = field(default_factory=dict)


def scenario_block_params(scenario: int, K: int = K_TRUE) -> dict[str, np.ndarray]:
    if scenario not in SCENARIO_PARAMS:
        raise DataError(f"unknown scenario {scenario}")
    eye = np.eye(K, dtype=bool)
    return {key: np.where(eye, within, between) for key, (within, between) in SCENARIO_PARAMS[scenario].items()}


def _symmetric_from_upper(n, values, dtype=np.int64):
    iu = np.triu_indices(n, 1)
    A = np.zeros((n, n), dtype=dtype)
    A[iu] = values
    return A + A.T


def generate_scenario(scenario: int, n: int, seed: int) -> tuple[np.ndarray, GroundTruth]:
    """Simulate one network from Scenario 1 (ZINB) or Scenario 2 (ZIP), K_true = 3."""
    if n < K_TRUE:
        raise DataError(f"need n >= {K_TRUE}")
    params = scenario_block_params(scenario)
    rng = make_rng(seed)
    z = rng.choice(K_TRUE, size=n, p=np.full(K_TRUE, 1.0 / K_TRUE))
    iu = np.triu_indices(n, 1)
    zi, zj = z[iu[0]], z[iu[1]]
    npairs = zi.shape[0]
    structural = rng.random(npairs) < params["p"][zi, zj]
    if scenario == 1:
        counts = rng.negative_binomial(params["r"][zi, zj], params["psi"][zi, zj])
    else:
        counts = rng.poisson(params["lam"][zi, zj])
    a = np.where(structural, 0, counts)
    return _symmetric_from_upper(n, a), GroundTruth(z, K_TRUE, params)


def generate_czinb_network(
    n: int,
    q: int,
    K: int,
    beta1,
    beta2,
    r: float,
    seed: int,
    covariate_law: str = "normal",
    intercept: bool = False,
):
    """Simulate a covariate ZINB network.

    ``beta1`` (for psi) and ``beta2`` (for p) are ``K x K x q`` tensors
    symmetric in the block indices.  Covariates are i.i.d. standard normal
    (``covariate_law="normal"``) or uniform on (-1, 1) (``"uniform"``); with
    ``intercept=True`` the first of the q columns is a constant 1.
    """
    beta1 = np.asarray(beta1, dtype=float)
    beta2 = np.asarray(beta2, dtype=float)
    for b in (beta1, beta2):
        if b.shape != (K, K, q):
            raise DataError(f"coefficient tensor must have shape {(K, K, q)}, got {b.shape}")
        if not np.allclose(b, b.transpose(1, 0, 2)):
            raise DataError("coefficient tensors must be symmetric in (l, m)")
    rng = make_rng(seed)
    z = rng.integers(0, K, size=n)
    iu = np.triu_indices(n, 1)
    m = iu[0].shape[0]
    if covariate_law == "normal":
        rows = rng.standard_normal((m, q))
    elif covariate_law == "uniform":
        rows = rng.uniform(-1.0, 1.0, (m, q))
    else:
        raise DataError(f"unknown covariate law {covariate_law!r}")
    if intercept:
        rows[:, 0] = 1.0
    zi, zj = z[iu[0]], z[iu[1]]
    psi = logistic(np.einsum("pq,pq->p", rows, beta1[zi, zj]))
    p = logistic(np.einsum("pq,pq->p", rows, beta2[zi, zj]))
    psi = np.clip(psi, 1e-12, 1.0)
    structural = rng.random(m) < p
    counts = rng.negative_binomial(r, psi)
    a = np.where(structural, 0, counts)
    cov = from_pairs(rows, n)
    truth = GroundTruth(z, K, {"beta1": beta1, "beta2": beta2, "r": r})
    return _symmetric_from_upper(n, a), cov, truth


def linkpred_coefficients() -> tuple[np.ndarray, np.ndarray]:
    """Two blocks, q = 3 (intercept + two covariates), strong covariate effects on p.

    Within block 1 the zero-inflation logit rises with the first covariate,
    within block 2 with the second; between blocks both lower it.
    """
    beta1 = np.zeros((2, 2, 3))
    beta2 = np.zeros((2, 2, 3))
    beta1[0, 0] = [-1.5, 0.5, 0.0]
    beta1[1, 1] = [-1.5, 0.0, 0.5]
    beta1[0, 1] = beta1[1, 0] = [-0.5, -0.5, 0.0]
    beta2[0, 0] = [-1.0, 3.5, 0.0]
    beta2[1, 1] = [-1.0, 0.0, 3.5]
    beta2[0, 1] = beta2[1, 0] = [1.0, -3.0, -3.0]
    return beta1, beta2


def generate_linkpred_network(n: int = 60, seed: int = 0, r: float = 2.0):
    """Synthetic covariate network used when no real link-prediction data are supplied."""
    beta1, beta2 = linkpred_coefficients()
    return generate_czinb_network(n, 3, 2, beta1, beta2, r, seed, intercept=True)


# ---------------------------------------------------------------------------
# masking


@dataclass
class MaskSet:
    pairs: np.ndarray  # (m, 2) 0-based, i < j
    original: np.ndarray

    def __len__(self):
        return self.pairs.shape[0]

    def restore(self, A_train) -> np.ndarray:
        A = np.array(A_train, copy=True)
        if len(self):
            A[self.pairs[:, 0], self.pairs[:, 1]] = self.original
            A[self.pairs[:, 1], self.pairs[:, 0]] = self.original
        return A


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def mask_nonzero(A, fraction: float, seed) -> tuple[np.ndarray, MaskSet]:
    """Zero out ``round(fraction * #nonzero pairs)`` randomly chosen nonzero pairs."""
    if not 0.0 <= fraction < 1.0:
        raise DataError(f"mask fraction {fraction} outside [0, 1)")
    A = check_adjacency(A)
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    iu = np.triu_indices(A.shape[0], 1)
    nz = np.nonzero(A[iu] > 0)[0]
    count = round_half_up(fraction * nz.size)
    chosen = np.sort(rng.choice(nz, size=count, replace=False)) if count else np.array([], dtype=np.int64)
    pairs = np.column_stack([iu[0][chosen], iu[1][chosen]]).astype(np.int64)
    original = A[pairs[:, 0], pairs[:, 1]] if count else np.array([], dtype=np.int64)
    A_train = A.copy()
    A_train[pairs[:, 0], pairs[:, 1]] = 0
    A_train[pairs[:, 1], pairs[:, 0]] = 0
    return A_train, MaskSet(pairs, original)


def save_mask(path, mask: MaskSet):
    with Path(path).open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["i", "j", "original"])
        for (i, j), v in zip(mask.pairs, mask.original):
            wr.writerow([int(i) + 1, int(j) + 1, int(v)])


def load_mask(path) -> MaskSet:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    pairs = np.array([[int(r["i"]) - 1, int(r["j"]) - 1] for r in rows], dtype=np.int64).reshape(-1, 2)
    original = np.array([int(r["original"]) for r in rows], dtype=np.int64)
    return MaskSet(pairs, original)


def save_labels(path, z, header: str = "label"):
    with Path(path).open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["node", header])
        for i, c in enumerate(np.asarray(z)):
            wr.writerow([i + 1, int(c) + 1])


def load_labels(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([int(r[1]) - 1 for r in rows[1:]], dtype=np.int64)
