"""Domain types, tolerances and config validation shared across the package."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np


Array = np.ndarray


class DimerDefectError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(DimerDefectError):
    pass


class OverlappingResonators(ConfigError):
    pass


class ZeroMaterialParameter(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class MathematicalRefusal(DimerDefectError):
    """The input lies in a set the formulas exclude (bands, W, degeneracies)."""


class NumericalFailure(DimerDefectError):
    """An iterative or accelerated computation did not reach its tolerance."""


@dataclass(frozen=True)
class Tolerances:
    """Every numerical threshold used by the library, in one place."""

    lattice_sum: float = 1e-12
    band: float = 1e-6
    w_set: float = 1e-10
    design: float = 1e-8
    root: float = 1e-10
    singular: float = 1e-13
    term_budget: int = 100_000


TOL = Tolerances()


@dataclass(frozen=True)
class Lattice:
    period: float = 1.0
    dimension: int = 1

    def __post_init__(self) -> None:
        if not (self.period > 0 and math.isfinite(self.period)):
            raise ConfigError(f"lattice period must be positive, got {self.period}")
        if self.dimension != 1:
            raise ConfigError("only one-dimensional lattices are implemented")

    @property
    def dual_period(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def brillouin_measure(self) -> float:
        return 2.0 * math.pi / self.period


@dataclass(frozen=True)
class Geometry:
    """Spherical resonators of one fundamental cell; centers are 3-vectors."""

    centers: tuple[tuple[float, float, float], ...]
    radii: tuple[float, ...]

    @property
    def resonators_per_cell(self) -> int:
        return len(self.radii)

    @property
    def volumes(self) -> Array:
        r = np.asarray(self.radii, dtype=float)
        return 4.0 / 3.0 * np.pi * r**3

    @property
    def axis_positions(self) -> Array:
        return np.array([c[0] for c in self.centers], dtype=float)

    def is_collinear(self) -> bool:
        return all(c[1] == 0.0 and c[2] == 0.0 for c in self.centers)


@dataclass(frozen=True)
class MaterialSpec:
    """Per-resonator complex parameters V_i = delta_i * v_i**2."""

    V: tuple[complex, ...]

    def __post_init__(self) -> None:
        for i, v in enumerate(self.V):
            if v == 0:
                raise ZeroMaterialParameter(f"material parameter V[{i}] is zero")
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ConfigError(f"material parameter V[{i}] is not finite")

    @property
    def array(self) -> Array:
        return np.asarray(self.V, dtype=complex)

    def scaled(self, factor: complex) -> "MaterialSpec":
        return MaterialSpec(tuple(complex(factor * v) for v in self.V))


@dataclass(frozen=True)
class DefectSpec:
    """Finite map (cell, resonator) -> defect parameter V_def."""

    entries: Mapping[tuple[int, int], complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, v in self.entries.items():
            if v == 0:
                raise ZeroMaterialParameter(f"defect parameter at {key} is zero")

    def relative(self, material: MaterialSpec) -> dict[tuple[int, int], complex]:
        """Relative perturbations x = V_def / V - 1 for each defected site."""
        V = material.V
        return {key: complex(v / V[key[1]] - 1.0) for key, v in self.entries.items()}

    def scaled(self, factor: complex) -> "DefectSpec":
        return DefectSpec({k: complex(factor * v) for k, v in self.entries.items()})

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class TemporalProfile:
    omega_minus: complex
    omega_plus: complex

    def __post_init__(self) -> None:
        check_frequency(self.omega_minus)
        check_frequency(self.omega_plus)
        if self.omega_minus == 0:
            raise ZeroFrequency("omega_minus must be non-zero")

    @property
    def b(self) -> complex:
        return self.omega_plus / self.omega_minus


class ZeroFrequency(MathematicalRefusal):
    pass


def check_frequency(omega: complex) -> complex:
    omega = complex(omega)
    if not (math.isfinite(omega.real) and math.isfinite(omega.imag)):
        raise ConfigError(f"frequency {omega} is not finite")
    return omega


@dataclass(frozen=True)
class Problem:
    """Validated, immutable problem descriptor."""

    lattice: Lattice
    geometry: Geometry
    material: MaterialSpec
    defects: DefectSpec = field(default_factory=DefectSpec)

    def is_pt_symmetric(self) -> bool:
        return is_pt_symmetric(self.geometry, self.material)


def is_pt_symmetric(geometry: Geometry, material: MaterialSpec) -> bool:
    if geometry.resonators_per_cell != 2:
        return False
    v1, v2 = material.V
    return v2 == v1.conjugate() and geometry.radii[0] == geometry.radii[1]


def validate_config(
    geometry: Geometry,
    lattice: Lattice,
    material: MaterialSpec,
    defects: DefectSpec | None = None,
) -> Problem:
    """Check every type invariant and return a :class:`Problem`.

    Raises OverlappingResonators, ZeroMaterialParameter or DimensionMismatch.
    """
    n = len(geometry.radii)
    if len(geometry.centers) != n:
        raise DimensionMismatch(f"{len(geometry.centers)} centers but {n} radii")
    if len(material.V) != n:
        raise DimensionMismatch(f"{len(material.V)} material parameters but {n} resonators")
    if n == 0:
        raise DimensionMismatch("geometry has no resonators")
    L = lattice.period
    for i, (c, r) in enumerate(zip(geometry.centers, geometry.radii)):
        if len(c) != 3:
            raise DimensionMismatch(f"center {i} is not a 3-vector")
        if not r > 0:
            raise ConfigError(f"radius {i} must be positive")
        if not 0.0 <= c[0] < L:
            raise ConfigError(f"center {i} has first coordinate {c[0]} outside [0, {L})")
    centers = np.asarray(geometry.centers, dtype=float)
    radii = np.asarray(geometry.radii, dtype=float)
    # translates beyond |m| = 1 + 2 max(R)/L cannot reach the reference cell
    reach = 1 + int(math.ceil(2 * radii.max() / L))
    for i in range(n):
        for j in range(n):
            for m in range(-reach, reach + 1):
                if i == j and m == 0:
                    continue
                shift = centers[j] + np.array([m * L, 0.0, 0.0])
                gap = float(np.linalg.norm(centers[i] - shift))
                if gap <= radii[i] + radii[j]:
                    raise OverlappingResonators(
                        f"resonator {i} and translate {m} of resonator {j}: "
                        f"center distance {gap:.6g} <= {radii[i] + radii[j]:.6g}"
                    )
    defects = defects if defects is not None else DefectSpec()
    for (cell, res) in defects.entries:
        if not 0 <= res < n:
            raise DimensionMismatch(f"defect resonator index {res} out of range")
    return Problem(lattice=lattice, geometry=geometry, material=material, defects=defects)


# --- config files -------------------------------------------------------------

def parse_complex(value: Any) -> complex:
    """Accept [re, im] pairs, plain numbers, or strings such as '1.2-0.4i'."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"complex pair must have two entries: {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, str):
        text = value.strip().replace(" ", "").replace("i", "j")
        try:
            return complex(text)
        except ValueError as exc:
            raise ConfigError(f"cannot parse complex number {value!r}") from exc
    raise ConfigError(f"cannot parse complex number {value!r}")


def complex_pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def format_complex(z: complex) -> str:
    z = complex(z)
    sign = "-" if z.imag < 0 or (z.imag == 0 and math.copysign(1, z.imag) < 0) else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def problem_from_dict(data: Mapping[str, Any]) -> Problem:
    try:
        lattice = Lattice(period=float(data.get("lattice", {}).get("period", 1.0)))
        geo = data["geometry"]
        centers = tuple(tuple(float(x) for x in c) for c in geo["centers"])
        radii = tuple(float(r) for r in geo["radii"])
        material = MaterialSpec(tuple(parse_complex(v) for v in data["material"]["V"]))
        entries = {}
        for d in data.get("defects", []):
            entries[(int(d["cell"]), int(d["resonator"]))] = parse_complex(d["V_def"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return validate_config(Geometry(centers, radii), lattice, material, DefectSpec(entries))


def problem_to_dict(problem: Problem) -> dict[str, Any]:
    return {
        "lattice": {"period": problem.lattice.period},
        "geometry": {
            "centers": [list(c) for c in problem.geometry.centers],
            "radii": list(problem.geometry.radii),
        },
        "material": {"V": [complex_pair(v) for v in problem.material.V]},
        "defects": [
            {"cell": cell, "resonator": res, "V_def": complex_pair(v)}
            for (cell, res), v in sorted(problem.defects.entries.items())
        ],
    }


def load_config(path: str | Path) -> Problem:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return problem_from_dict(data)


def reference_dimer(
    V: Sequence[complex] = (1 + 0.6j, 1 - 0.6j),
    radius: float = 0.15,
    period: float = 1.0,
) -> Problem:
    """The symmetric dimer used throughout: R = 0.15, centers 0.25 and 0.75."""
    geometry = Geometry(
        centers=((0.25 * period, 0.0, 0.0), (0.75 * period, 0.0, 0.0)),
        radii=(radius, radius),
    )
    return validate_config(geometry, Lattice(period), MaterialSpec(tuple(complex(v) for v in V)))
