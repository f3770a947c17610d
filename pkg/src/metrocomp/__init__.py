"""metrocomp: multiparameter quantum estimation bounds and compatibility."""

from .tolerances import DEFAULT, Tolerances
from .errors import (
    MetrocompError,
    ValidationError,
    DimensionMismatchError,
    NumericalFailureError,
    UnsaturableDirectionError,
    UnidentifiableParametersError,
    InfeasibleConstraintsError,
)
from .operators import (
    HermitianOperator,
    DensityMatrix,
    Povm,
    KrausChannel,
    ParametricModel,
    apply_channel,
    finite_diff_derivs,
    eigh,
)
from .estimation import (
    SldSet,
    FisherMatrix,
    CompatibilityReport,
    classical_fisher,
    povm_fisher,
    sld,
    model_slds,
    qfi_matrix,
    qfi_cr_bound,
    compatibility_check,
)
from .holevo import (
    HolevoSolution,
    qfi_optimal_x,
    qfi_bound_via_minimization,
    holevo_bound,
    equality_iff_commutation_test,
)

__version__ = "0.1.0"
