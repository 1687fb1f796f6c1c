"""Canned experiment files.

The Saturn-ring entries need an externally generated mesh of the prism
[-0.25 sqrt 2, 0.75 sqrt 2]^2 x [-3, 3] with the spherical hole cut out;
point ``mesh.path`` at it with ``--set``.
"""
from __future__ import annotations

from typing import Dict, Tuple

from apps.core.exceptions import ConfigError

from .configfile import ConfigFile, parse_config

_FACES_XY = "xmin, xmax, ymin, ymax"

ERK_PLUS3_DEFECT = f"""\
# Ericksen model, degree +3 point defect splitting into three +1 defects.
model = ericksen
model.kappa = 1.0
mesh.generator = crisscross_2d
mesh.n = 64
well.name = ericksen
well.eta_b = 1.0
flow.dt = 0.1
flow.stop_tol = 1e-8
flow.max_steps = 2000
bc.degree.labels = {_FACES_XY}
bc.director.labels = {_FACES_XY}
bc.director.profile = point_defect
bc.director.degree = 3
bc.director.center = 0.3, 0.6
init.director.profile = uniform
init.director.direction = 1, 0
output.snapshot_every = 100
report.minima_below = 0.03
"""

UNI_HALF_DEFECT_2D = f"""\
# Uniaxial model, planar +1/2 point defect.
model = uniaxial_ldg
mesh.generator = crisscross_2d
mesh.n = 32
well.name = uniaxial
well.eta_b = 0.0625
flow.dt = 1e-3
flow.stop_tol = 1e-8
flow.max_steps = 3000
bc.degree.labels = {_FACES_XY}
bc.director.labels = {_FACES_XY}
bc.director.profile = point_defect
bc.director.degree = 0.5
bc.director.center = 0.5, 0.5
init.director.profile = uniform
output.snapshot_every = 200
report.loops = 0.5 0.5 0.3
report.minima_below = 0.1
"""

UNI_LINE_DEFECT = f"""\
# Uniaxial model, rotating +1/2 defect giving a non-orientable line defect.
model = uniaxial_ldg
mesh.generator = kuhn_3d
mesh.n = 16
well.name = uniaxial
well.eta_b = 0.0625
flow.dt = 1e-3
flow.stop_tol = 1e-6
flow.max_steps = 2000
bc.degree.labels = {_FACES_XY}
bc.director.labels = {_FACES_XY}
bc.director.profile = twisted_half_defect
bc.director.centers = 0.3, 0.3, 0.7, 0.7
bc.director.twist = 3.141592653589793
init.director.profile = twisted_half_defect
init.director.centers = 0.5, 0.5, 0.5, 0.5
init.director.twist = 3.141592653589793
output.snapshot_every = 100
report.loops = z 0.2 0.5 0.5 0.35; z 0.5 0.5 0.5 0.35; z 0.8 0.5 0.5 0.35
"""

LDG_LINE_DEFECT = f"""\
# Standard one-constant model started from the uniaxial line defect.
model = standard_ldg
mesh.generator = kuhn_3d
mesh.n = 16
well.name = uniaxial
well.eta_b = 0.0625
flow.dt = 0.01
flow.stop_tol = 1e-6
flow.max_steps = 2000
bc.degree.labels = {_FACES_XY}
bc.director.labels = {_FACES_XY}
bc.director.profile = twisted_half_defect
bc.director.centers = 0.3, 0.3, 0.7, 0.7
bc.director.twist = 3.141592653589793
init.source = uniaxial
init.uniaxial_dt = 1e-3
init.director.profile = twisted_half_defect
init.director.centers = 0.5, 0.5, 0.5, 0.5
init.director.twist = 3.141592653589793
ldg.l1 = 1.0
ldg.eta_b = 0.0625
output.snapshot_every = 100
report.loops = z 0.2 0.5 0.5 0.35; z 0.5 0.5 0.5 0.35; z 0.8 0.5 0.5 0.35
"""

ERK_SATURN_RING = """\
# Ericksen model around a spherical hole, poles flipped across z = 0.
model = ericksen
model.kappa = 1.0
mesh.generator = file
mesh.path = saturn_ring.msh
mesh.hole_center = 0.35355339059327379, 0.35355339059327379, 0
mesh.hole_radius = 0.20011122
well.name = ericksen
well.eta_b = 1.0
flow.dt = 0.1
flow.stop_tol = 1e-6
flow.max_steps = 1000
bc.degree.labels = inclusion, outer
bc.director.labels = inclusion, outer
bc.director.profile = pole_interpolation
bc.director.center = 0.35355339059327379, 0.35355339059327379, 0
bc.director.width = 3
init.director.profile = split_poles
init.director.center = 0.35355339059327379, 0.35355339059327379, 0
output.snapshot_every = 50
"""

UNI_SATURN_RING = """\
# Uniaxial model around a spherical hole with normal anchoring.
model = uniaxial_ldg
mesh.generator = file
mesh.path = saturn_ring.msh
mesh.hole_center = 0.35355339059327379, 0.35355339059327379, 0
mesh.hole_radius = 0.20011122
well.name = saturn
well.eta_b = 0.0625
flow.dt = 1e-3
flow.stop_tol = 1e-6
flow.max_steps = 2000
bc.degree.labels = inclusion, outer
bc.director.labels = inclusion, outer
bc.director.profile = inclusion_normal
bc.director.center = 0.35355339059327379, 0.35355339059327379, 0
bc.director.direction = 0, 0, 1
init.director.profile = uniform
init.director.direction = 0, 0, 1
output.snapshot_every = 100
"""

_COLLOID = f"""\
mesh.generator = kuhn_3d
mesh.n = 32
well.name = saturn
well.eta_b = 0.0625
flow.dt = 1e-2
flow.stop_tol = 1e-6
flow.max_steps = 1000
flow.cfl_mode = warn
bc.degree.labels = {_FACES_XY}
bc.director.labels = {_FACES_XY}
bc.director.profile = uniform
bc.director.direction = 0, 0, 1
init.director.profile = uniform
init.director.direction = 0, 0, 1
colloid.shape = sphere
colloid.center = 0.5, 0.5, 0.5
colloid.radius = 0.2
colloid.eps = 0.06
anchoring.k_normal = 10
output.snapshot_every = 50
"""

UNI_COLLOID_PHASE_FIELD = (
    "# Uniaxial model, Saturn ring around a phase-field colloid.\n"
    "model = uniaxial_ldg\n" + _COLLOID
)

UNI_COLLOID_ELECTRIC = (
    "# Phase-field colloid under a strong field along y.\n"
    "model = uniaxial_ldg\n" + _COLLOID + """\
electric.field = 0, 1, 0
electric.k_ext = 160
electric.eps_parallel = 2.3333333333333335
electric.eps_perp = 0.33333333333333331
"""
)

LDG_VS_UNIAXIAL = f"""\
# Standard model started from the uniaxial Saturn ring; reports both energies.
model = standard_ldg
mesh.generator = kuhn_3d
mesh.n = 16
well.name = saturn
well.eta_b = 0.25
flow.dt = 0.01
flow.stop_tol = 1e-6
flow.max_steps = 1000
bc.degree.labels = {_FACES_XY}
bc.director.labels = {_FACES_XY}
bc.director.profile = uniform
bc.director.direction = 0, 0, 1
init.source = uniaxial
init.uniaxial_dt = 1e-2
init.director.profile = uniform
init.director.direction = 0, 0, 1
colloid.shape = sphere
colloid.center = 0.5, 0.5, 0.5
colloid.radius = 0.2
colloid.eps = 0.12
anchoring.k_normal = 10
ldg.l1 = 1.0
ldg.eta_b = 0.25
output.snapshot_every = 100
"""

EXPERIMENTS: Dict[str, Tuple[str, str]] = {
    "erk_plus3_defect": ("Ericksen +3 point defect on the unit square", ERK_PLUS3_DEFECT),
    "uni_half_defect_2d": ("Uniaxial +1/2 point defect on the unit square", UNI_HALF_DEFECT_2D),
    "uni_line_defect": ("Uniaxial non-orientable line defect in the unit cube", UNI_LINE_DEFECT),
    "ldg_line_defect": ("Standard model line defect from the uniaxial minimizer", LDG_LINE_DEFECT),
    "erk_saturn_ring": ("Ericksen model around a spherical hole", ERK_SATURN_RING),
    "uni_saturn_ring": ("Uniaxial Saturn ring around a spherical hole", UNI_SATURN_RING),
    "uni_colloid_phase_field": ("Uniaxial Saturn ring around a phase-field colloid", UNI_COLLOID_PHASE_FIELD),
    "uni_colloid_electric": ("Phase-field colloid with an electric field along y", UNI_COLLOID_ELECTRIC),
    "ldg_vs_uniaxial": ("Standard against uniaxial model on a phase-field colloid", LDG_VS_UNIAXIAL),
}


def list_experiments() -> Tuple[str, ...]:
    return tuple(EXPERIMENTS)


def describe_experiment(name: str) -> str:
    return EXPERIMENTS[name][0]


def canned_config(name: str) -> ConfigFile:
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; see list_experiments.")
    return parse_config(EXPERIMENTS[name][1], source=f"<{name}>")
