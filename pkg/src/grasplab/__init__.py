"""grasplab: a planar grasp-learning lab with rigid and soft fingers and objects.

Typical use::

    from grasplab import desk_preset, dataset_setups, collect
    ds = collect(dataset_setups(scale=0.1)["2Finger-RigidSoft"])
"""

from .bench import (
    BenchReport,
    ExperimentSpec,
    Metrics,
    RECIPES,
    compute_mpph,
    emit_report,
    recipe,
    run_ablation,
    run_clutter_removal,
    run_single_object_eval,
)
from .collect import CollectConfig, Dataset, GraspRecord, collect, dataset_setups, load_dataset, mix, save_dataset
from .config import Preset, desk_preset, get_preset, paper_preset
from .errors import GraspLabError
from .gripper import GripperSpec, InteractionClass, classify_interaction, make_gripper
from .kernels import BACKEND
from .oracle import GraspConfig, GraspEvaluator, GraspOutcome, brute_force_success_map, execute_grasp
from .policy import (
    DensePolicy,
    GraspProposal,
    HeuristicPolicy,
    OraclePolicy,
    RandomPolicy,
    SampledPolicy,
    dense_policy,
    heuristic_policy,
    random_policy,
    sampled_policy,
)
from .render import CameraModel, camera_for, render
from .scene import Circle, ConvexPolygon, Ellipse, Material, ObjectModel, Pose2D, Rect, Scene, Workspace, place_randomly

__version__ = "0.1.0"
