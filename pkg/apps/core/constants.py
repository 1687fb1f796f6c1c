import math

MODEL_ERICKSEN = "ericksen"
MODEL_UNIAXIAL = "uniaxial_ldg"
MODEL_STANDARD = "standard_ldg"

MODEL_CHOICES = (
    (MODEL_ERICKSEN, "One-constant Ericksen"),
    (MODEL_UNIAXIAL, "Uniaxially constrained Landau-deGennes"),
    (MODEL_STANDARD, "Standard Landau-deGennes"),
)


def sphere_measure(dim: int) -> float:
    """|S^{d-1}|: circumference of the unit circle or area of the unit sphere."""
    if dim == 2:
        return 2.0 * math.pi
    if dim == 3:
        return 4.0 * math.pi
    raise ValueError(f"Unsupported dimension {dim}.")


# Process exit codes of the management commands.
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3
EXIT_IO_ERROR = 4
