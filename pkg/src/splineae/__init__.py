"""Autoencoders as continuous piecewise-affine operators: exact per-region
affine maps, Lie-group regularizers with closed-form strength solves, input
space partition diagnostics, and a seeded Adam trainer behind a CLI."""

__version__ = "0.1.0"

from .cpa import (
    AffineMap,
    ae_jacobian,
    biorthogonality_residual,
    compose,
    cor1_conditions,
    decoder_affine,
    decoder_tangent,
    encoder_affine,
    hessian_energy,
    projection_view,
    reconstruct_from_affine,
    region_affine_record,
    region_code,
)
from .data import (
    DatasetTable,
    SplitData,
    denormalize,
    gen_control_chart,
    load_csv,
    normalize,
    split_dataset,
)
from .errors import (
    ConfigError,
    ContractError,
    DegenerateError,
    DivergenceError,
    IngestionError,
    NumericError,
    ShapeError,
    SingularSystemError,
    SplineaeError,
)
from .liegroup import (
    GeneratorSet,
    OrbitSpec,
    first_order_transform,
    gen_orbit_dataset,
    generators_from_dict,
    generators_to_dict,
    init_generators,
    make_named_generator,
    matrix_exp,
    orbit_point,
)
from .network import (
    AEModel,
    ForwardTrace,
    Layer,
    LayerSpec,
    RegionCode,
    decode,
    encode,
    forward,
    forward_batch,
    init_model,
    model_from_dict,
    model_to_dict,
    stage_on_tape,
)
from .numerics import (
    Node,
    Tape,
    backward,
    cholesky_solve,
    finite_difference_jacobian,
    make_rng,
    matmul,
)
from .partition import (
    BallCountReport,
    NeighborPair,
    RadiusEstimate,
    RegionSample,
    count_regions_in_ball,
    estimate_region_radius,
    export_decoder_surface,
    rasterize_partition_2d,
    sample_neighbor_pair,
    sample_region,
)
from .regularizers import (
    EpsilonSolve,
    RegConfig,
    corrupt,
    draw_theta,
    hoc_penalty,
    hoc_terms,
    reg_first_order,
    reg_order_k_interpolant,
    reg_second_order,
    solve_epsilon_first,
    solve_epsilon_second,
)
from .trainer import (
    AdamState,
    RunRecord,
    SuiteEntry,
    SuiteRow,
    TrainConfig,
    adam_step,
    loss,
    run_suite,
    train,
)
