"""gamebound: quadratic games, linear iterative methods, and rate lower bounds."""

from .errors import (
    DegenerateBoundsError,
    DimensionError,
    GameboundError,
    InsufficientDataError,
    NotMinMaxError,
    SingularJacobianError,
    SpectralFailureError,
    UndefinedKappaError,
    UnsupportedArityError,
    ValidationError,
)
from .games import (
    MinMaxProblem,
    QuadraticGame,
    StationaryPoint,
    build_game,
    game_from_json,
    game_to_json,
    game_to_minmax,
    load_game,
    minmax_to_game,
    save_game,
    stationary_point,
    vector_field,
)
from .instances import (
    DominoInstance,
    PSCLI2Instance,
    banded_ops,
    distance_lower_bound,
    domino_basic,
    domino_improved,
    domino_sparsity_horizon,
    domino_to_json,
    instance_from_json,
    pscli2_instance,
    pscli2_to_json,
)
from .methods import (
    CoefficientForm,
    NoiseModel,
    PSCLIMethod,
    Trajectory,
    TuneResult,
    asymptotic_rate,
    coefficient_form,
    consistency_check,
    run,
    save_trajectory_csv,
    step,
    tune_step_size,
)
from .ratelab import (
    BoundEntry,
    RateFit,
    RateReport,
    certify,
    certify_domino,
    check_domino_sparsity,
    estimate_rate,
    evaluate_bounds,
    pscli_lower_bound,
    random_minmax_game,
    search_violations,
)
from .spectral import (
    BlockSpectralBounds,
    ComplexSpectrum,
    SpectralCase,
    block_spectral_bounds,
    eigenvalues,
    game_spectrum,
    kappa_domino_basic,
    kappa_domino_improved,
    kappa_jacobian,
    kappa_table1,
    spectral_case,
    toeplitz_symbol_range,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
