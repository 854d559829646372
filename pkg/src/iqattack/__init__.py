"""Query-based black-box attacks on no-reference image quality models.

The attack perturbs an image inside its just-noticeable-difference box,
walking an adaptive ladder of score boundaries with HVS-guided directions,
and the harness measures the damage to score/MOS correlation alongside the
invisibility of the perturbation.
"""

from .boundary import (
    AttackConfig,
    AttackOutcome,
    IntensityLadder,
    Side,
    attack_many,
    is_success,
    run_attack,
    side_of,
    success_threshold,
)
from .directions import (
    Direction,
    TextureBank,
    combined_mask,
    default_texture_bank,
    make_texture_donor,
    sample_orthogonal_direction,
    sample_texture_direction,
)
from .geometry import (
    ProjectedFrame,
    StepContext,
    StepResult,
    arc_point,
    project_orthogonal_direction,
    project_primary_direction,
    search_arc,
    single_step_attack,
)
from .harness import (
    CampaignConfig,
    CampaignReport,
    DatasetManifest,
    emit_report,
    load_dataset,
    run_campaign,
)
from .jnd import JndBox, contains, jnd_box, jnd_threshold
from .metrics import krocc, mae, plcc, psnr, srocc, ssim
from .oracle import (
    BudgetExceededError,
    OracleHandle,
    OracleUnavailableError,
    make_oracle,
    noise_backend,
    sharpness_backend,
)

__version__ = "0.1.0"
