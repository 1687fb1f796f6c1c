"""Turn a validated :class:`ExperimentConfig` into meshes, fields and models."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from apps.core.constants import MODEL_ERICKSEN, MODEL_STANDARD, MODEL_UNIAXIAL
from apps.core.exceptions import ConfigError, CouplingError, FieldError
from apps.couplings.anchoring import Anchoring, AnchoringParams, TensorAnchoring
from apps.couplings.electric import ElectricCoupling, ElectricParams
from apps.couplings.phase_field import (
    AffineShape,
    NodalSignedDistance,
    PhaseFieldColloid,
    SphereShape,
    build_phase_field,
)
from apps.energy.model import EnergyModel
from apps.fem.quadrature import LumpedMass, lumped_mass
from apps.fields.decompose import uniaxial_compose
from apps.fields.fields import BoundaryData
from apps.flow.config import FlowConfig
from apps.meshes.generators import generate_crisscross_2d, generate_kuhn_3d
from apps.meshes.io import load_mesh, mesh_with_spherical_hole
from apps.meshes.mesh import SimplicialMesh
from apps.potentials.tensor import LdgBulkPotential
from apps.potentials.wells import DoubleWell, get_well
from apps.standard_ldg.params import LdgElasticParams
from apps.standard_ldg.scheme import LdgProblem

from . import forms as config_forms
from .forms import ExperimentConfig
from .profiles import evaluate_profile

logger = logging.getLogger(__name__)

DEFAULT_WELLS = {
    MODEL_ERICKSEN: "ericksen",
    MODEL_UNIAXIAL: "uniaxial",
    MODEL_STANDARD: "uniaxial",
}


@dataclass(frozen=True, eq=False)
class BuiltExperiment:
    """Everything a run needs.

    ``model`` is the constrained energy; for the standard model it is the
    uniaxial companion used by ``init.source = uniaxial`` and is None
    otherwise. ``problem`` is set for the standard model only.
    """

    config: ExperimentConfig
    mesh: SimplicialMesh
    mass: LumpedMass
    well: DoubleWell
    boundary: BoundaryData
    s0: np.ndarray
    n0: np.ndarray
    flow: FlowConfig
    colloid: Optional[PhaseFieldColloid] = None
    model: Optional[EnergyModel] = None
    problem: Optional[LdgProblem] = None
    q0: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.mesh.dim


def _bounds(bbox: Optional[Sequence[float]]):
    if bbox is None:
        return None
    return tuple((bbox[i], bbox[i + 1]) for i in range(0, len(bbox), 2))


def build_mesh(config: ExperimentConfig) -> SimplicialMesh:
    section = config["mesh"]
    generator = section["generator"]
    if generator == config_forms.GENERATOR_CRISSCROSS:
        n = section["n"]
        return generate_crisscross_2d(n, n, bbox=_bounds(section.get("bbox")))
    if generator == config_forms.GENERATOR_KUHN:
        n = section["n"]
        return generate_kuhn_3d(n, n, n, bbox=_bounds(section.get("bbox")))
    path = Path(section["path"])
    if section.get("hole_center") is not None:
        audited = mesh_with_spherical_hole(path, section["hole_center"], section["hole_radius"])
        return audited.mesh
    return load_mesh(path)


def check_labels(config: ExperimentConfig, mesh: SimplicialMesh) -> None:
    """Every boundary label the file names must exist on the mesh."""
    for key, labels in (
        ("bc.degree.labels", config["bc"].get("degree_labels") or ()),
        ("bc.director.labels", config["bc"].get("director_labels") or ()),
        ("ldg.surface_labels", config["ldg"].get("surface_labels") or ()),
    ):
        for label in labels:
            if label not in mesh.labels:
                raise config.error(key, f"missing label {label!r}; the mesh has {', '.join(mesh.labels)}.")


def build_well(config: ExperimentConfig, dim: int) -> DoubleWell:
    section = config["well"]
    name = section.get("name") or DEFAULT_WELLS[config.model]
    well = get_well(name, eta_b=section.get("eta_b"), dim=dim)
    expected = MODEL_ERICKSEN if config.model == MODEL_ERICKSEN else MODEL_UNIAXIAL
    if well.model != expected:
        raise config.error("well.name", f"the {name} well belongs to the {well.model} model.")
    return well


def _profile(config: ExperimentConfig, section: str, mesh: SimplicialMesh, rng) -> Optional[np.ndarray]:
    data = config[section]
    name = data.get("director_profile")
    if not name:
        return None
    try:
        return evaluate_profile(name, mesh, config_forms.profile_params(data), rng)
    except ConfigError as exc:
        key = (exc.key or f"{section}.director.profile").replace("bc.", f"{section}.", 1)
        raise config.error(key, exc.detail)


def build_boundary(config: ExperimentConfig, mesh: SimplicialMesh, well: DoubleWell, rng) -> Tuple[BoundaryData, np.ndarray]:
    """Dirichlet data and the boundary director profile on every node."""
    bc = config["bc"]
    directions = _profile(config, "bc", mesh, rng)
    if directions is None:
        directions = evaluate_profile("uniform", mesh, {}, rng)
    g = bc.get("degree_value")
    g = well.s_star if g is None else g
    degree_nodes = mesh.boundary_nodes(bc.get("degree_labels") or ())
    director_nodes = mesh.boundary_nodes(bc.get("director_labels") or ())
    try:
        boundary = BoundaryData(
            degree_nodes=degree_nodes,
            degree_values=np.full(degree_nodes.size, g),
            director_nodes=director_nodes,
            director_values=directions[director_nodes],
        )
    except FieldError as exc:
        raise config.error("bc.director.profile", str(exc))
    return boundary, directions


def build_initial(config: ExperimentConfig, mesh: SimplicialMesh, well: DoubleWell, rng) -> Tuple[np.ndarray, np.ndarray]:
    init = config["init"]
    value = init.get("degree_value")
    s0 = np.full(mesh.n_nodes, well.s_star if value is None else value)
    n0 = _profile(config, "init", mesh, rng)
    if n0 is None:
        n0 = evaluate_profile("uniform", mesh, {}, rng)
    return s0, n0


def _shapes(config: ExperimentConfig, dim: int) -> List:
    section = config["colloid"]
    shape = section["shape"]
    if shape == config_forms.SHAPE_NODAL:
        return [NodalSignedDistance()]
    center = section["center"]
    if len(center) % dim:
        raise config.error("colloid.center", f"centers need {dim} coordinates each.")
    spheres = [SphereShape(center=tuple(center[i:i + dim]), radius=section["radius"]) for i in range(0, len(center), dim)]
    if shape == config_forms.SHAPE_SPHERE:
        return spheres
    matrix = np.asarray(section["matrix"], dtype=float)
    if matrix.size != dim * dim or len(section["offset"]) != dim:
        raise config.error("colloid.matrix", f"affine colloids need a {dim}x{dim} matrix and a {dim}-vector offset.")
    return [AffineShape(reference=s, matrix=matrix.reshape(dim, dim), offset=np.asarray(section["offset"])) for s in spheres]


def build_colloid(config: ExperimentConfig, mesh: SimplicialMesh) -> Optional[PhaseFieldColloid]:
    if not config.present("colloid"):
        return None
    try:
        return build_phase_field(mesh, _shapes(config, mesh.dim), config["colloid"]["eps"])
    except CouplingError as exc:
        raise config.error("colloid.shape", str(exc))


def build_electric(config: ExperimentConfig, mesh: SimplicialMesh, mass: LumpedMass) -> Optional[ElectricCoupling]:
    if not config.present("electric"):
        return None
    section = config["electric"]
    if len(section["field"]) != mesh.dim:
        raise config.error("electric.field", f"the field needs {mesh.dim} components.")
    try:
        params = ElectricParams(
            field=np.asarray(section["field"], dtype=float),
            k_ext=section["k_ext"],
            eps_parallel=section["eps_parallel"],
            eps_perp=section["eps_perp"],
        )
    except CouplingError as exc:
        raise config.error("electric.field", str(exc))
    return ElectricCoupling(params=params, mass=mass)


def build_anchoring(
    config: ExperimentConfig, colloid: Optional[PhaseFieldColloid], well: DoubleWell, mass: LumpedMass
) -> Optional[Anchoring]:
    if colloid is None or not config.present("anchoring"):
        if colloid is not None:
            logger.warning("Colloid without anchoring weights has no effect on the energy.")
        return None
    section = config["anchoring"]
    params = AnchoringParams(
        s_star=well.s_star if section.get("s_star") is None else section["s_star"],
        k_normal=section.get("k_normal") or 0.0,
        k_planar_1=section.get("k_planar_1") or 0.0,
        k_planar_2=section.get("k_planar_2") or 0.0,
    )
    return Anchoring(colloid=colloid, params=params, mass=mass)


def build_energy_model(
    config: ExperimentConfig,
    mesh: SimplicialMesh,
    well: DoubleWell,
    mass: LumpedMass,
    colloid: Optional[PhaseFieldColloid],
) -> EnergyModel:
    model = MODEL_UNIAXIAL if config.model == MODEL_STANDARD else config.model
    kappa = config["model"].get("kappa")
    return EnergyModel.build(
        mesh,
        model,
        well,
        kappa=1.0 if kappa is None else kappa,
        anchoring=build_anchoring(config, colloid, well, mass),
        electric=build_electric(config, mesh, mass),
        mass=mass,
    )


def build_ldg_problem(
    config: ExperimentConfig,
    mesh: SimplicialMesh,
    well: DoubleWell,
    mass: LumpedMass,
    boundary: BoundaryData,
    directions: np.ndarray,
    colloid: Optional[PhaseFieldColloid],
) -> LdgProblem:
    """Q_D = s_D (n (x) n - I/d) on the director labels; Q_Gamma from the same profile."""
    section = config["ldg"]
    params = LdgElasticParams(**{
        name: section[key]
        for name, key in (("L1", "l1"), ("L2", "l2"), ("L3", "l3"), ("eta_b", "eta_b"), ("eta_gamma", "eta_gamma"))
        if section.get(key) is not None
    })
    potential = LdgBulkPotential(**{
        name: section[name.lower()] for name in ("K", "A", "B", "C", "D") if section.get(name.lower()) is not None
    })
    g = config["bc"].get("degree_value")
    g = well.s_star if g is None else g
    nodes = boundary.director_nodes
    surface = None
    if params.eta_gamma > 0.0:
        surface = uniaxial_compose(np.full(mesh.n_nodes, g), directions).components
    anchoring = None
    if colloid is not None and config.present("anchoring"):
        anch = config["anchoring"]
        anchoring = TensorAnchoring(
            colloid=colloid,
            s_star=well.s_star if anch.get("s_star") is None else anch["s_star"],
            k_normal=anch.get("k_normal") or 0.0,
            mass=mass,
        )
    return LdgProblem(
        mesh=mesh,
        params=params,
        potential=potential,
        dirichlet_nodes=nodes,
        dirichlet_values=uniaxial_compose(np.full(nodes.size, g), boundary.director_values).components,
        surface_labels=section.get("surface_labels") or (),
        surface_tensor=surface,
        anchoring=anchoring,
        electric=build_electric(config, mesh, mass),
        allow_non_coercive=bool(section.get("allow_non_coercive")),
    )


def build_experiment(config: ExperimentConfig) -> BuiltExperiment:
    """Build mesh, data and models; labels and dimensions are checked here.

    Raises:
        ConfigError: a referenced label or a vector length does not fit the mesh.
        OSError, MeshError: the mesh file cannot be read.
    """
    mesh = build_mesh(config)
    check_labels(config, mesh)
    rng = np.random.default_rng(config["init"].get("seed") or 0)
    mass = lumped_mass(mesh)
    well = build_well(config, mesh.dim)
    boundary, directions = build_boundary(config, mesh, well, rng)
    s0, n0 = build_initial(config, mesh, well, rng)
    s0, n0 = boundary.apply(s0, n0)
    colloid = build_colloid(config, mesh)
    flow = config.flow_config()

    model = None
    problem = None
    q0 = None
    if config.model == MODEL_STANDARD:
        problem = build_ldg_problem(config, mesh, well, mass, boundary, directions, colloid)
        q0 = problem.impose(uniaxial_compose(s0, n0).components)
        if config["init"].get("source") == config_forms.SOURCE_UNIAXIAL:
            model = build_energy_model(config, mesh, well, mass, colloid)
    else:
        model = build_energy_model(config, mesh, well, mass, colloid)

    logger.info("Built %s experiment on %s with %s well (s* = %.6g).", config.model, mesh, well.name, well.s_star)
    return BuiltExperiment(
        config=config,
        mesh=mesh,
        mass=mass,
        well=well,
        boundary=boundary,
        s0=s0,
        n0=n0,
        flow=flow,
        colloid=colloid,
        model=model,
        problem=problem,
        q0=q0,
    )
