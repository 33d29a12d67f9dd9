"""simlab: compressed-classifier adversarial fragility simulations."""

from .attacks import (
    Perturbation,
    attack_size_bound,
    effective_distance,
    min_norm_perturbation,
    targeted_attack,
    untargeted_attack,
)
from .codebook import Codebook, CodebookConfig, Codeword, PackingError, build_codebook, synthesize
from .compressor import (
    REJECT,
    ClassifierDecision,
    CompressedCodewordClassifier,
    LinearCompressor,
    classify,
    classify_batch,
    compress,
    sample_compressor,
)
from .detection import DetectionVerdict, detect, detection_roc, guarantee_radius
from .pipeline import (
    AttackResult,
    PipelineConfig,
    PipelineTrial,
    awgn_channel,
    build_world,
    inject_attack,
    measured_snr_db,
    rho_max,
    run_pipeline,
    synth_waveform,
)
from .ratio import (
    DifferentiableMap,
    RatioReport,
    average_case_rate,
    finite_difference_jacobian,
    fragility_ratio,
    worst_case_rate,
)
from .robustness import (
    RobustnessEstimate,
    TailCheckReport,
    ball_membership_band_check,
    estimate_robustness,
    misdirection_rate,
    projection_tail_check,
    sample_sphere,
)

__version__ = "0.1.0"
