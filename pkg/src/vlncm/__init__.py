"""vlncm: desk-scale zero-shot navigation with collision mitigation.

Simulator (floorplans, depth panoramas, collision-checked motion),
perception (polar occupancy masks from depth), language (instruction to
attention spots), the navigation agent with baselines and ablations, and
an evaluation harness reporting SR / SPL / collision rate.
"""

__version__ = "0.1.0"

from .world import (  # noqa: F401
    AGENT_RADIUS,
    D_MAX,
    STEP_DISTANCE,
    TURN_DEGREES,
    Episode,
    Floorplan,
    Landmark,
    Pose,
    raycast,
    render_depth_panorama,
    step_forward,
    turn,
    visible_landmarks,
)
from .perception import (  # noqa: F401
    OccupancyMask,
    depth_to_occupancy,
    emit_omp_dataset,
    max_free_distance,
    oracle_occupancy,
    swept_oracle_occupancy,
)
from .language import (  # noqa: F401
    AttentionSpotSequence,
    MockSpotParser,
    RemoteSpotParser,
    cached,
    mock_parse,
    parse_instruction,
)
from .policy import (  # noqa: F401
    AgentConfig,
    MockSimilarityScorer,
    RemoteSimilarityScorer,
    Waypoint,
    decompose,
    plan_waypoint,
    run_agent,
    select_view,
    update_progress,
)
from .evalharness import (  # noqa: F401
    EpisodeResult,
    MetricsSummary,
    compute_spl,
    judge_success,
    run_suite,
    write_report,
)
from .worldgen import GenerationSpec, generate_batch, generate_world  # noqa: F401
from .planning import NoPathError, shortest_path  # noqa: F401
