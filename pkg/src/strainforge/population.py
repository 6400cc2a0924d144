"""Monte Carlo ensembles of SiV splittings and calibration fits.

Two ensemble generators mirror the two experimental situations: before
film deposition the strain is a random intrinsic tensor, after deposition
it is the deterministic film-induced field sampled over the implantation
position distribution (optionally combined with the intrinsic tensor).

Sampling is counter based per sample index, so an ensemble is a pure
function of (inputs, seed): results are bit-identical for any thread
count or chunking. Calibration inverts the monotone map from model scale
(intrinsic sigma, or film stress) to ensemble mean under common random
numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .core import (
    ORIENTATIONS,
    DefectOrientation,
    Frame,
    SivParameters,
    StrainTensor,
)
from .errors import DegenerateGeometry, EmptyRequest, Infeasible
from .mechanics import CRYSTAL_FROM_BEAM, LayerStack, StrainField, solve_beam_state

__all__ = [
    "IntrinsicStrainModel",
    "PositionDistribution",
    "EmitterSample",
    "EmitterSamples",
    "EnsembleSummary",
    "EnsembleResult",
    "sample_pre_deposition",
    "sample_post_deposition",
    "calibrate_sigma",
    "calibrate_film_stress",
    "summarize",
]

_ROTS = np.ascontiguousarray(np.stack([o.rotation for o in ORIENTATIONS]))


@dataclass(frozen=True)
class IntrinsicStrainModel:
    """IID zero-mean normal distribution for each strain component."""

    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ValueError("sigma must be finite and >= 0")


@dataclass(frozen=True)
class PositionDistribution:
    """Implantation position model: uniform mask aperture laterally,
    normal straggle in depth (rejected back into the substrate)."""

    aperture_x_nm: float = 60.0
    aperture_y_nm: float = 60.0
    depth_mean_nm: float = 35.0
    depth_straggle_nm: float = 10.0

    def __post_init__(self):
        if not (self.aperture_x_nm > 0 and self.aperture_y_nm > 0):
            raise ValueError("aperture dimensions must be positive")
        if not self.depth_mean_nm > 0:
            raise ValueError("depth_mean_nm must be positive")
        if not self.depth_straggle_nm >= 0:
            raise ValueError("depth_straggle_nm must be >= 0")


@dataclass(frozen=True)
class EmitterSample:
    """One Monte Carlo draw."""

    x_nm: float
    y_nm: float
    depth_nm: float
    orientation: DefectOrientation
    strain: StrainTensor
    gss_ghz: float


class EmitterSamples:
    """Columnar store of emitter draws; behaves like a sequence of
    EmitterSample. Arrays are the authoritative representation."""

    def __init__(self, x_nm, y_nm, depth_nm, orientation_id, eps_crystal, gss_ghz):
        self.x_nm = x_nm
        self.y_nm = y_nm
        self.depth_nm = depth_nm
        self.orientation_id = orientation_id
        self.eps_crystal = eps_crystal  # (n, 6): xx yy zz xy yz zx
        self.gss_ghz = gss_ghz

    def __len__(self) -> int:
        return len(self.gss_ghz)

    def __getitem__(self, i: int) -> EmitterSample:
        e = self.eps_crystal[i]
        return EmitterSample(
            x_nm=float(self.x_nm[i]),
            y_nm=float(self.y_nm[i]),
            depth_nm=float(self.depth_nm[i]),
            orientation=ORIENTATIONS[int(self.orientation_id[i])],
            strain=StrainTensor(
                eps_xx=e[0], eps_yy=e[1], eps_zz=e[2],
                eps_xy=e[3], eps_yz=e[4], eps_zx=e[5],
                frame=Frame.CRYSTAL,
            ),
            gss_ghz=float(self.gss_ghz[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


@dataclass(frozen=True)
class EnsembleSummary:
    mean_ghz: float
    std_ghz: float
    sem_ghz: float
    n: int
    hist_edges_ghz: np.ndarray
    hist_density: np.ndarray
    ecdf_values_ghz: np.ndarray
    ecdf_fractions: np.ndarray


@dataclass(frozen=True)
class EnsembleResult:
    samples: EmitterSamples
    summary: EnsembleSummary


def summarize(values, bins="fd") -> EnsembleSummary:
    """Mean, sample std (n-1), SEM, density histogram, and empirical CDF."""
    if isinstance(values, EmitterSamples):
        data = np.asarray(values.gss_ghz, dtype=float)
    else:
        data = np.asarray(values, dtype=float).ravel()
    n = data.size
    if n == 0:
        raise EmptyRequest("cannot summarize an empty sample set")
    mean = float(np.mean(data))
    std = float(np.std(data, ddof=1)) if n > 1 else 0.0
    sem = std / math.sqrt(n)
    edges = np.histogram_bin_edges(data, bins=bins)
    density, edges = np.histogram(data, bins=edges, density=True)
    sorted_vals = np.sort(data)
    fractions = np.arange(1, n + 1, dtype=float) / n
    return EnsembleSummary(
        mean_ghz=mean,
        std_ghz=std,
        sem_ghz=sem,
        n=n,
        hist_edges_ghz=edges,
        hist_density=density,
        ecdf_values_ghz=sorted_vals,
        ecdf_fractions=fractions,
    )


def _alloc(n: int):
    return (
        np.empty(n),                 # gss
        np.empty((n, 6)),            # eps crystal
        np.empty(n, dtype=np.int64),  # orientation id
        np.zeros(n),                 # x
        np.zeros(n),                 # y
        np.zeros(n),                 # depth
    )


def sample_pre_deposition(
    n: int,
    model: IntrinsicStrainModel,
    params: SivParameters,
    seed: int,
    *,
    sample_frame: str = "defect",
    threads: int | None = None,
    bins="fd",
) -> EnsembleResult:
    """Ensemble of emitters carrying only random intrinsic strain.

    Each sample draws six iid Normal(0, sigma^2) components (in the defect
    frame by default, or the crystal frame via ``sample_frame``) plus a
    uniform orientation, recorded for schema uniformity.
    """
    if n < 1:
        raise EmptyRequest("n must be >= 1")
    if sample_frame not in ("defect", "crystal"):
        raise ValueError("sample_frame must be 'defect' or 'crystal'")
    gss, eps, ori, x, y, depth = _alloc(n)
    root = _kernels.seed_root(seed)
    lam = params.lambda_so_ghz
    d, f = params.d_ghz_per_strain, params.f_ghz_per_strain
    crystal = sample_frame == "crystal"

    def block(lo, hi):
        _kernels.sample_pre_block(
            gss, eps, ori, lo, hi, root, model.sigma, d, f, lam, _ROTS, crystal
        )

    _kernels.run_blocks(n, block, threads)
    samples = EmitterSamples(x, y, depth, ori, eps, gss)
    return EnsembleResult(samples=samples, summary=summarize(samples, bins=bins))


def sample_post_deposition(
    n: int,
    pos: PositionDistribution,
    field: StrainField,
    params: SivParameters,
    *,
    include_intrinsic: bool = False,
    intrinsic: IntrinsicStrainModel | None = None,
    seed: int,
    threads: int | None = None,
    bins="fd",
) -> EnsembleResult:
    """Ensemble of emitters in the film-induced strain field.

    Each sample draws an implantation position (rejected until it lands
    inside the substrate), evaluates the depth-dependent beam strain, maps
    it through a uniformly drawn <111> orientation, optionally adds an
    intrinsic random tensor, and computes the splitting.
    """
    if n < 1:
        raise EmptyRequest("n must be >= 1")
    if include_intrinsic and intrinsic is None:
        raise ValueError("include_intrinsic requires an IntrinsicStrainModel")
    gss, eps, ori, x, y, depth = _alloc(n)
    root = _kernels.seed_root(seed)
    cs = field.cross_section
    poly_y = np.ascontiguousarray(cs.vertices_nm[:, 0])
    poly_z = np.ascontiguousarray(cs.vertices_nm[:, 1])
    sigma_i = intrinsic.sigma if include_intrinsic else 0.0

    def block(lo, hi):
        return _kernels.sample_post_block(
            gss, eps, ori, x, y, depth, lo, hi, root,
            poly_y, poly_z, cs.z_top_nm,
            field.membrane_strain, field.curvature_per_nm,
            field.neutral_axis_depth_nm, field.biaxiality_factor,
            field.nu_substrate,
            pos.aperture_x_nm, pos.aperture_y_nm,
            pos.depth_mean_nm, pos.depth_straggle_nm,
            CRYSTAL_FROM_BEAM, _ROTS,
            include_intrinsic, sigma_i,
            params.d_ghz_per_strain, params.f_ghz_per_strain,
            params.lambda_so_ghz,
        )

    n_fail = _kernels.run_blocks(n, block, threads)
    if n_fail:
        raise DegenerateGeometry(
            f"{n_fail} samples failed substrate containment after "
            f"{_kernels.MAX_POSITION_ATTEMPTS} attempts each"
        )
    samples = EmitterSamples(x, y, depth, ori, eps, gss)
    return EnsembleResult(samples=samples, summary=summarize(samples, bins=bins))


def _monotone_root(f, target, lo, hi, f_lo, f_hi, tol, max_iter=80):
    """Root of monotone f - target on [lo, hi] by Illinois regula falsi."""
    g_lo = f_lo - target
    g_hi = f_hi - target
    if abs(g_lo) <= tol:
        return lo
    if abs(g_hi) <= tol:
        return hi
    side = 0
    x = lo
    for _ in range(max_iter):
        x = (lo * g_hi - hi * g_lo) / (g_hi - g_lo)
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        gx = f(x) - target
        if abs(gx) <= tol:
            return x
        if gx > 0:
            hi, g_hi = x, gx
            if side == 1:
                g_lo *= 0.5
            side = 1
        else:
            lo, g_lo = x, gx
            if side == -1:
                g_hi *= 0.5
            side = -1
        if hi - lo <= 1e-14 * max(abs(hi), 1.0):
            break
    return x


def calibrate_sigma(
    target_mean_ghz: float,
    n: int,
    seed: int,
    params: SivParameters | None = None,
    *,
    tol_ghz: float = 0.05,
    sample_frame: str = "defect",
    threads: int | None = None,
) -> float:
    """Intrinsic sigma whose fixed-seed ensemble mean hits the target.

    The mean is continuous and strictly increasing in sigma under common
    random numbers, so a bracketing root find converges cleanly. Raises
    Infeasible for targets below the spin-orbit floor.
    """
    params = params or SivParameters()
    lam = params.lambda_so_ghz
    if target_mean_ghz < lam:
        raise Infeasible(
            f"target mean {target_mean_ghz} GHz is below the floor {lam} GHz"
        )
    if target_mean_ghz <= lam * (1.0 + 1e-12):
        return 0.0

    def mean_at(sigma):
        res = sample_pre_deposition(
            n, IntrinsicStrainModel(sigma), params, seed,
            sample_frame=sample_frame, threads=threads,
        )
        return res.summary.mean_ghz

    lo, f_lo = 0.0, lam
    hi = 1e-5
    f_hi = mean_at(hi)
    while f_hi < target_mean_ghz:
        lo, f_lo = hi, f_hi
        hi *= 2.0
        if hi > 1e-2:
            raise Infeasible("target mean unreachable within the small-strain regime")
        f_hi = mean_at(hi)
    return _monotone_root(mean_at, target_mean_ghz, lo, hi, f_lo, f_hi, tol_ghz)


def calibrate_film_stress(
    target_mean_ghz: float,
    stack: LayerStack,
    pos: PositionDistribution,
    params: SivParameters | None = None,
    n: int = 100_000,
    seed: int = 0,
    *,
    include_intrinsic: bool = False,
    intrinsic: IntrinsicStrainModel | None = None,
    tol_ghz: float = 0.05,
    threads: int | None = None,
) -> float:
    """Equivalent film stress (MPa) whose post-deposition ensemble mean
    hits the target, by the same monotone root find as calibrate_sigma."""
    params = params or SivParameters()
    lam = params.lambda_so_ghz
    if target_mean_ghz < lam:
        raise Infeasible(
            f"target mean {target_mean_ghz} GHz is below the floor {lam} GHz"
        )

    def mean_at(stress_mpa):
        trial = replace(stack, film=replace(stack.film, intrinsic_stress_mpa=stress_mpa))
        field = solve_beam_state(trial)
        res = sample_post_deposition(
            n, pos, field, params,
            include_intrinsic=include_intrinsic, intrinsic=intrinsic,
            seed=seed, threads=threads,
        )
        return res.summary.mean_ghz

    lo = 0.0
    f_lo = mean_at(0.0)
    if target_mean_ghz <= f_lo + tol_ghz:
        if target_mean_ghz >= f_lo - tol_ghz:
            return 0.0
        raise Infeasible(
            "target mean lies below the zero-stress ensemble mean"
        )
    hi = 500.0
    f_hi = mean_at(hi)
    while f_hi < target_mean_ghz:
        lo, f_lo = hi, f_hi
        hi *= 2.0
        if hi > 1e6:
            raise Infeasible("target mean unreachable at physical film stresses")
        f_hi = mean_at(hi)
    return _monotone_root(mean_at, target_mean_ghz, lo, hi, f_lo, f_hi, tol_ghz)
