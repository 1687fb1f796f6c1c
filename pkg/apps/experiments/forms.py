"""Validation of experiment files, one form per dotted section."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple, Type

from django import forms

from apps.core.constants import MODEL_CHOICES, MODEL_ERICKSEN, MODEL_STANDARD
from apps.core.exceptions import ConfigError
from apps.fields.defects import LoopSpec
from apps.flow.config import CFL_REFUSE, CFL_WARN, FlowConfig
from apps.potentials.wells import PRESETS

from .configfile import ConfigFile, serialize_config, split_key
from .profiles import PROFILE_CHOICES

GENERATOR_CRISSCROSS = "crisscross_2d"
GENERATOR_KUHN = "kuhn_3d"
GENERATOR_FILE = "file"

SOURCE_PROFILE = "profile"
SOURCE_UNIAXIAL = "uniaxial"

SHAPE_SPHERE = "sphere"
SHAPE_AFFINE = "affine"
SHAPE_NODAL = "nodal"


class VectorField(forms.CharField):
    """Comma-separated floats, returned as a tuple."""

    def __init__(self, *, lengths: Optional[Tuple[int, ...]] = None, **kwargs):
        self.lengths = lengths
        kwargs.setdefault("required", False)
        super().__init__(**kwargs)

    def to_python(self, value):
        value = super().to_python(value)
        if value in self.empty_values:
            return None
        try:
            parts = tuple(float(p) for p in value.split(",") if p.strip())
        except ValueError:
            raise forms.ValidationError("expected comma-separated numbers.")
        if self.lengths and len(parts) not in self.lengths:
            allowed = " or ".join(str(n) for n in self.lengths)
            raise forms.ValidationError(f"expected {allowed} numbers, got {len(parts)}.")
        return parts


class LabelListField(forms.CharField):
    def __init__(self, **kwargs):
        kwargs.setdefault("required", False)
        super().__init__(**kwargs)

    def to_python(self, value):
        value = super().to_python(value)
        if value in self.empty_values:
            return ()
        return tuple(p.strip() for p in value.split(",") if p.strip())


def parse_loops(text: str) -> Tuple[LoopSpec, ...]:
    """``axis level cx cy half_width`` entries separated by ``;``; 2D loops omit axis and level."""
    loops = []
    for chunk in text.split(";"):
        tokens = chunk.split()
        if not tokens:
            continue
        if len(tokens) == 3:
            tokens = ["z", "0"] + tokens
        if len(tokens) != 5 or tokens[0] not in ("x", "y", "z"):
            raise forms.ValidationError(f"loop {chunk.strip()!r} must read 'axis level cx cy half_width'.")
        try:
            level, cx, cy, half = (float(t) for t in tokens[1:])
        except ValueError:
            raise forms.ValidationError(f"loop {chunk.strip()!r} has a non-numeric entry.")
        if half <= 0.0:
            raise forms.ValidationError("loop half width must be positive.")
        loops.append(LoopSpec(center=(cx, cy), half_width=half, axis=tokens[0], level=level))
    return tuple(loops)


class ModelSectionForm(forms.Form):
    name = forms.ChoiceField(choices=MODEL_CHOICES)
    kappa = forms.FloatField(required=False)

    def clean(self):
        cleaned = super().clean()
        name = cleaned.get("name")
        kappa = cleaned.get("kappa")
        if kappa is None:
            return cleaned
        if name and name != MODEL_ERICKSEN:
            self.add_error("kappa", "κ fixed to (d−1)/d for this model; remove model.kappa.")
        elif kappa <= 0.0:
            self.add_error("kappa", "κ must be positive.")
        return cleaned


class MeshForm(forms.Form):
    generator = forms.ChoiceField(choices=[
        (GENERATOR_CRISSCROSS, "Criss-cross triangles"),
        (GENERATOR_KUHN, "Kuhn tetrahedra"),
        (GENERATOR_FILE, "Mesh file"),
    ])
    n = forms.IntegerField(required=False, min_value=1)
    bbox = VectorField(lengths=(4, 6))
    path = forms.CharField(required=False)
    hole_center = VectorField(lengths=(2, 3))
    hole_radius = forms.FloatField(required=False)

    def clean(self):
        cleaned = super().clean()
        generator = cleaned.get("generator")
        if generator == GENERATOR_FILE and not cleaned.get("path"):
            self.add_error("path", "a mesh file path is required for generator = file.")
        if generator in (GENERATOR_CRISSCROSS, GENERATOR_KUHN) and not cleaned.get("n"):
            self.add_error("n", "the number of cells per side is required for generated meshes.")
        bbox = cleaned.get("bbox")
        if bbox is not None and generator in (GENERATOR_CRISSCROSS, GENERATOR_KUHN):
            if len(bbox) != (4 if generator == GENERATOR_CRISSCROSS else 6):
                self.add_error("bbox", "bbox needs lo, hi for every axis of the generated mesh.")
        has_center = cleaned.get("hole_center") is not None
        has_radius = cleaned.get("hole_radius") is not None
        if has_center != has_radius:
            self.add_error("hole_radius" if has_center else "hole_center", "hole_center and hole_radius go together.")
        if has_radius and cleaned["hole_radius"] <= 0.0:
            self.add_error("hole_radius", "the hole radius must be positive.")
        if has_center and generator != GENERATOR_FILE:
            self.add_error("hole_center", "spherical holes need a mesh file.")
        return cleaned


class WellForm(forms.Form):
    name = forms.ChoiceField(required=False, choices=[(k, k) for k in PRESETS])
    eta_b = forms.FloatField(required=False)

    def clean_eta_b(self):
        eta_b = self.cleaned_data.get("eta_b")
        if eta_b is not None and eta_b <= 0.0:
            raise forms.ValidationError("η_B must be positive.")
        return eta_b


class FlowForm(forms.Form):
    dt = forms.FloatField(required=False)
    stop_tol = forms.FloatField(required=False)
    max_steps = forms.IntegerField(required=False, min_value=1)
    cfl_constant = forms.FloatField(required=False)
    cfl_mode = forms.ChoiceField(required=False, choices=[(CFL_REFUSE, "Refuse"), (CFL_WARN, "Warn only")])
    tau = forms.FloatField(required=False)
    sigma_reg = forms.FloatField(required=False)
    cg_tol = forms.FloatField(required=False)
    cg_max_iter = forms.IntegerField(required=False, min_value=1)
    monotonicity_tol = forms.FloatField(required=False)
    check_monotonicity = forms.NullBooleanField(required=False)


class DirectorProfileForm(forms.Form):
    director_profile = forms.ChoiceField(required=False, choices=PROFILE_CHOICES)
    director_direction = VectorField(lengths=(2, 3))
    director_center = VectorField(lengths=(2, 3))
    director_degree = forms.FloatField(required=False)
    director_centers = VectorField(lengths=(4,))
    director_twist = forms.FloatField(required=False)
    director_width = forms.FloatField(required=False)

    def profile_params(self) -> Dict[str, Any]:
        return profile_params(self.cleaned_data)


def profile_params(section: Dict[str, Any]) -> Dict[str, Any]:
    return {
        name: section.get(f"director_{name}")
        for name in ("direction", "center", "degree", "centers", "twist", "width")
    }


class BoundaryForm(DirectorProfileForm):
    degree_labels = LabelListField()
    degree_value = forms.FloatField(required=False)
    director_labels = LabelListField()

    def clean(self):
        cleaned = super().clean()
        if cleaned.get("director_labels") and not cleaned.get("director_profile"):
            self.add_error("director_profile", "a director profile is required on Dirichlet labels.")
        return cleaned


class InitForm(DirectorProfileForm):
    degree_value = forms.FloatField(required=False)
    source = forms.ChoiceField(required=False, choices=[
        (SOURCE_PROFILE, "Analytic profile"),
        (SOURCE_UNIAXIAL, "Uniaxial minimizer"),
    ])
    seed = forms.IntegerField(required=False, min_value=0)
    uniaxial_dt = forms.FloatField(required=False)

    def clean(self):
        cleaned = super().clean()
        if cleaned.get("uniaxial_dt") is not None:
            if cleaned.get("source") != SOURCE_UNIAXIAL:
                self.add_error("uniaxial_dt", "only used with init.source = uniaxial.")
            elif cleaned["uniaxial_dt"] <= 0.0:
                self.add_error("uniaxial_dt", "the time step must be positive.")
        return cleaned


class ColloidForm(forms.Form):
    shape = forms.ChoiceField(required=False, choices=[
        (SHAPE_SPHERE, "Spheres"),
        (SHAPE_AFFINE, "Affine image of a sphere"),
        (SHAPE_NODAL, "Signed distance from the mesh file"),
    ])
    center = VectorField()
    radius = forms.FloatField(required=False)
    eps = forms.FloatField()
    matrix = VectorField(lengths=(4, 9))
    offset = VectorField(lengths=(2, 3))

    def clean(self):
        cleaned = super().clean()
        shape = cleaned.get("shape") or SHAPE_SPHERE
        cleaned["shape"] = shape
        if cleaned.get("eps") is not None and cleaned["eps"] <= 0.0:
            self.add_error("eps", "the phase-field thickness must be positive.")
        if shape in (SHAPE_SPHERE, SHAPE_AFFINE):
            if cleaned.get("center") is None:
                self.add_error("center", "sphere colloids need a center.")
            radius = cleaned.get("radius")
            if radius is None or radius <= 0.0:
                self.add_error("radius", "sphere colloids need a positive radius.")
        if shape == SHAPE_AFFINE and (cleaned.get("matrix") is None or cleaned.get("offset") is None):
            self.add_error("matrix", "affine colloids need matrix and offset.")
        return cleaned


class AnchoringForm(forms.Form):
    k_normal = forms.FloatField(required=False, min_value=0.0)
    k_planar_1 = forms.FloatField(required=False, min_value=0.0)
    k_planar_2 = forms.FloatField(required=False, min_value=0.0)
    s_star = forms.FloatField(required=False)


class ElectricForm(forms.Form):
    field = VectorField(lengths=(2, 3), required=True)
    k_ext = forms.FloatField(min_value=0.0)
    eps_parallel = forms.FloatField()
    eps_perp = forms.FloatField()


class LdgForm(forms.Form):
    l1 = forms.FloatField(required=False)
    l2 = forms.FloatField(required=False)
    l3 = forms.FloatField(required=False)
    eta_b = forms.FloatField(required=False)
    eta_gamma = forms.FloatField(required=False, min_value=0.0)
    surface_labels = LabelListField()
    allow_non_coercive = forms.NullBooleanField(required=False)
    k = forms.FloatField(required=False)
    a = forms.FloatField(required=False)
    b = forms.FloatField(required=False)
    c = forms.FloatField(required=False)
    d = forms.FloatField(required=False)

    def clean(self):
        cleaned = super().clean()
        if (cleaned.get("eta_gamma") or 0.0) > 0.0 and not cleaned.get("surface_labels"):
            self.add_error("surface_labels", "surface anchoring needs at least one boundary label.")
        return cleaned


class OutputForm(forms.Form):
    dir = forms.CharField(required=False)
    snapshot_every = forms.IntegerField(required=False, min_value=0)
    csv_every = forms.IntegerField(required=False, min_value=1)


class ReportForm(forms.Form):
    loops = forms.CharField(required=False)
    minima_below = forms.FloatField(required=False)

    def clean_loops(self):
        text = self.cleaned_data.get("loops") or ""
        loops = parse_loops(text)
        return "; ".join(f"{l.axis} {l.level!r} {l.center[0]!r} {l.center[1]!r} {l.half_width!r}" for l in loops)


SECTION_FORMS: Dict[str, Type[forms.Form]] = {
    "model": ModelSectionForm,
    "mesh": MeshForm,
    "well": WellForm,
    "flow": FlowForm,
    "bc": BoundaryForm,
    "init": InitForm,
    "colloid": ColloidForm,
    "anchoring": AnchoringForm,
    "electric": ElectricForm,
    "ldg": LdgForm,
    "output": OutputForm,
    "report": ReportForm,
}

# Sections that may be left out entirely.
OPTIONAL_SECTIONS = ("colloid", "anchoring", "electric", "ldg")


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    source: ConfigFile
    sections: Dict[str, Dict[str, Any]]
    name: str = ""

    @property
    def model(self) -> str:
        return self.sections["model"]["name"]

    def __getitem__(self, section: str) -> Dict[str, Any]:
        return self.sections.get(section, {})

    def present(self, section: str) -> bool:
        return bool(self.source.keys_in(section))

    def error(self, key: str, message: str) -> ConfigError:
        return self.source.error(key, message)

    def flow_config(self) -> FlowConfig:
        overrides = {k: v for k, v in self["flow"].items() if v not in (None, "")}
        try:
            return FlowConfig.from_settings(**overrides)
        except ConfigError as exc:
            raise ConfigError(exc.detail, key=exc.key, line=self.source.line_of(exc.key or ""))

    def canonical(self) -> Dict[str, Any]:
        """Cleaned values of the keys present in the file, in file order."""
        out: Dict[str, Any] = {}
        for key in self.source.values:
            section, field = split_key(key)
            out[key] = self.sections[section][field]
        return out

    def canonical_text(self) -> str:
        return serialize_config(self.canonical())


def _form_error(config: ConfigFile, section: str, form: forms.Form) -> ConfigError:
    field, errors = next(iter(form.errors.items()))
    message = " ".join(str(e) for e in errors)
    if field == forms.forms.NON_FIELD_ERRORS:
        keys = config.keys_in(section)
        key = keys[0] if keys else section
    else:
        key = next(
            (k for k in config.values if split_key(k) == (section, field)),
            "model" if (section, field) == ("model", "name") else f"{section}.{field}",
        )
    return config.error(key, message)


def _cross_check(config: ConfigFile, sections: Dict[str, Dict[str, Any]]) -> None:
    model = sections["model"]["name"]
    if model != MODEL_STANDARD:
        keys = config.keys_in("ldg")
        if keys:
            raise config.error(keys[0], "ldg.* keys apply to the standard model only.")
        if sections["init"].get("source") == SOURCE_UNIAXIAL:
            raise config.error("init.source", "init.source = uniaxial needs model = standard_ldg.")
    if config.keys_in("anchoring") and not config.keys_in("colloid"):
        raise config.error(config.keys_in("anchoring")[0], "anchoring needs a colloid section.")
    if model == MODEL_STANDARD and (sections["anchoring"].get("k_planar_1") or sections["anchoring"].get("k_planar_2")):
        raise config.error("anchoring.k_planar_1", "the standard model supports normal colloid anchoring only.")


def validate_config(config: ConfigFile, name: str = "") -> ExperimentConfig:
    """Type every key and run the cross-section checks.

    Raises:
        ConfigError: naming the key and its line.
    """
    for key in config.values:
        section, field = split_key(key)
        form_cls = SECTION_FORMS.get(section)
        if form_cls is None:
            raise config.error(key, f"unknown section {section!r}.")
        if field not in form_cls.base_fields:
            raise config.error(key, "unknown key.")

    sections: Dict[str, Dict[str, Any]] = {}
    for section, form_cls in SECTION_FORMS.items():
        data = config.section(section)
        if section in OPTIONAL_SECTIONS and not data:
            sections[section] = {}
            continue
        form = form_cls(data=data)
        if not form.is_valid():
            raise _form_error(config, section, form)
        sections[section] = dict(form.cleaned_data)
    _cross_check(config, sections)
    experiment = ExperimentConfig(source=config, sections=sections, name=name)
    experiment.flow_config()
    return experiment
