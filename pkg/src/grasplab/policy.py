"""Grasp-selection strategies.

Every policy returns a :class:`GraspProposal` whose angle is a bin centre.
Ties between equally scored candidates go to the lowest ``(row, col, bin)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, NoForeground
from .geometry import min_area_rect
from .gripper import GripperSpec
from .learn import ModelParams, angle_to_bin, bin_to_angle, dense_predict, predict_q
from .oracle import DEFAULT_ORACLE, GraspConfig, OracleConfig, brute_force_success_map, grid_centres, bin_angles
from .render import (
    CameraModel,
    extract_patch,
    foreground_mask,
    pixel_to_world,
    rescale_for_net,
)
from .scene import Scene, Workspace

N_BINS = 18
SQUARE_TIE_REL = 0.02


@dataclass(frozen=True)
class GraspProposal:
    u: GraspConfig
    score: float
    source: str  # Random | Heuristic | LearnedSampled | LearnedDense | Oracle

    @property
    def bin(self):
        return angle_to_bin(self.u.phi)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _clamp_to(ws: Workspace, x, y):
    return min(max(x, ws.x0), ws.x1), min(max(y, ws.y0), ws.y1)


def random_policy(workspace: Workspace, seed, n_bins=N_BINS) -> GraspProposal:
    """Uniform centre over the workspace and uniform angle bin.

    ``seed`` is an int or a ``numpy.random.Generator`` (stream position matters).
    """
    rng = _rng(seed)
    x = float(rng.uniform(workspace.x0, workspace.x1))
    y = float(rng.uniform(workspace.y0, workspace.y1))
    b = int(rng.integers(n_bins))
    return GraspProposal(GraspConfig(x, y, bin_to_angle(b, n_bins)), 1.0, "Random")


def heuristic_policy(image, camera: CameraModel, n_bins=N_BINS) -> GraspProposal:
    """Minimum-area box of the largest foreground blob; close across its short side."""
    mask = foreground_mask(image)
    if not mask.any():
        raise NoForeground("image has no foreground pixels")
    labels, n = ndimage.label(mask)  # default structure is 4-connected
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    sizes[0] = 0
    target = int(np.argmax(sizes))
    rows, cols = np.nonzero(labels == target)
    # pixel corners, so even a one-pixel blob has a well defined box
    px = np.concatenate([cols, cols + 1, cols, cols + 1]).astype(np.float64)
    py = np.concatenate([rows, rows, rows + 1, rows + 1]).astype(np.float64)
    wx, wy = pixel_to_world(camera, (px, py))
    rect = min_area_rect(np.column_stack([wx, wy]))
    if abs(rect.width - rect.height) <= SQUARE_TIE_REL * max(rect.width, rect.height):
        b = 0
    else:
        b = angle_to_bin(rect.short_axis % math.pi, n_bins)
    cx, cy = rect.center
    return GraspProposal(GraspConfig(float(cx), float(cy), bin_to_angle(b, n_bins)), 1.0, "Heuristic")


def _lex_argmax(scores):
    """Flat index of the first maximum; callers order candidates lexicographically."""
    return int(np.argmax(scores))


def sample_region(image, crop: int, full_image=False):
    """Candidate patch-centre pixels: the foreground dilated by ``crop / 2``, or everything."""
    h, w = image.shape[:2]
    if full_image:
        return np.ones((h, w), dtype=bool)
    mask = foreground_mask(image)
    if not mask.any():
        raise NoForeground("image has no foreground pixels")
    return ndimage.maximum_filter(mask, size=crop + 1, mode="constant", cval=False)


def sampled_policy(params: ModelParams, image, camera: CameraModel, n_samples: int, seed, crop: int,
                   full_image=False, return_all=False):
    """Score ``n_samples`` random window centres on every bin; return the best."""
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    rng = _rng(seed)
    region = sample_region(image, crop, full_image)
    rr, cc = np.nonzero(region)
    pick = rng.integers(len(rr), size=n_samples)
    centres = np.column_stack([rr[pick], cc[pick]])
    return score_centres(params, image, camera, centres, crop, "LearnedSampled", return_all)


def score_centres(params, image, camera, centres, crop, source="LearnedSampled", return_all=False):
    """Evaluate all bins at integer ``(row, col)`` window centres and pick the best."""
    centres = np.asarray(centres, dtype=np.int64).reshape(-1, 2)
    order = np.lexsort((centres[:, 1], centres[:, 0]))
    centres = centres[order]
    s = params.net.input_size
    patches = np.stack([extract_patch(image, (int(c), int(r)), crop, s) for r, c in centres])
    q = np.atleast_2d(predict_q(params, patches))
    k = _lex_argmax(q.ravel())
    i, b = divmod(k, q.shape[1])
    r, c = centres[i]
    x, y = pixel_to_world(camera, (float(c), float(r)))
    prop = GraspProposal(GraspConfig(float(x), float(y), bin_to_angle(int(b), q.shape[1])), float(q[i, b]), source)
    return (prop, centres, q) if return_all else prop


def dense_grid(params: ModelParams, image_shape, crop: int):
    """Original-image ``(row, col)`` window centres of every dense cell, plus the grid shape."""
    s = params.net.input_size
    stride = params.net.total_stride * crop / s
    offset = params.net.offset * crop / s
    h, w = image_shape[:2]
    n_r = params.net.output_size((h * s) // crop)
    n_c = params.net.output_size((w * s) // crop)
    return offset + stride * np.arange(n_r), offset + stride * np.arange(n_c)


def dense_policy(params: ModelParams, image, camera: CameraModel, crop: int, return_map=False):
    """One fully-convolutional pass over the rescaled image, global argmax over (cell, bin)."""
    scaled = rescale_for_net(image, crop, params.net.input_size)
    scores, _, _ = dense_predict(params, scaled)
    k = _lex_argmax(scores.ravel())
    i, j, b = np.unravel_index(k, scores.shape)
    rows, cols = dense_grid(params, image.shape, crop)
    x, y = pixel_to_world(camera, (float(cols[j]), float(rows[i])))
    x, y = _clamp_to(Workspace(camera.x0, camera.y0, camera.x0 + camera.width / camera.scale,
                               camera.y0 + camera.height / camera.scale), x, y)
    prop = GraspProposal(GraspConfig(float(x), float(y), bin_to_angle(int(b), scores.shape[2])),
                         float(scores[i, j, b]), "LearnedDense")
    return (prop, scores) if return_map else prop


def oracle_policy(scene: Scene, gripper: GripperSpec, config: OracleConfig = DEFAULT_ORACLE, step=4.0,
                  n_bins=N_BINS):
    """Cheating policy: first successful grasp found by exhaustive search around each object.

    Objects are visited in scene order; each gets a ``step``-mm grid over its
    bounding box, searched with :func:`brute_force_success_map`.
    """
    ws = scene.workspace
    for fp in scene.footprints:
        x0, y0, x1, y1 = fp.bbox()
        x0, y0 = max(x0, ws.x0), max(y0, ws.y0)
        x1, y1 = min(x1, ws.x1), min(y1, ws.y1)
        nx = max(1, int(math.ceil((x1 - x0) / step)))
        ny = max(1, int(math.ceil((y1 - y0) / step)))
        m = brute_force_success_map(scene, gripper, (nx, ny), n_bins, config, region=(x0, y0, x1, y1))
        hits = np.argwhere(m)
        if len(hits):
            # prefer the cell nearest the object centre, then lowest index
            xs, ys = grid_centres((x0, y0, x1, y1), nx, ny)
            d = (xs[hits[:, 0]] - fp.cx) ** 2 + (ys[hits[:, 1]] - fp.cy) ** 2
            i, j, k = hits[int(np.argmin(d))]
            return GraspProposal(GraspConfig(float(xs[i]), float(ys[j]), float(bin_angles(n_bins)[k])), 1.0, "Oracle")
    return None


# --- policy objects used by the harness -----------------------------------------


class Policy:
    """``propose(image, camera, scene, rng) -> GraspProposal``; only the oracle reads ``scene``."""

    name = "policy"

    def propose(self, image, camera, scene, rng):
        raise NotImplementedError


class RandomPolicy(Policy):
    name = "random"

    def __init__(self, n_bins=N_BINS):
        self.n_bins = n_bins

    def propose(self, image, camera, scene, rng):
        return random_policy(scene.workspace, rng, self.n_bins)


class HeuristicPolicy(Policy):
    name = "heuristic"

    def propose(self, image, camera, scene, rng):
        return heuristic_policy(image, camera)


class DensePolicy(Policy):
    name = "dense"

    def __init__(self, params, crop):
        self.params = params
        self.crop = crop

    def propose(self, image, camera, scene, rng):
        return dense_policy(self.params, image, camera, self.crop)


class SampledPolicy(Policy):
    name = "sampled"

    def __init__(self, params, crop, n_samples=1000, full_image=False):
        self.params = params
        self.crop = crop
        self.n_samples = n_samples
        self.full_image = full_image

    def propose(self, image, camera, scene, rng):
        return sampled_policy(self.params, image, camera, self.n_samples, rng, self.crop, self.full_image)


class OraclePolicy(Policy):
    name = "oracle"

    def __init__(self, gripper, config: OracleConfig = DEFAULT_ORACLE, step=4.0):
        self.gripper = gripper
        self.config = config
        self.step = step

    def propose(self, image, camera, scene, rng):
        prop = oracle_policy(scene, self.gripper, self.config, self.step)
        if prop is None:  # nothing graspable: spend the attempt at the first object
            fp = scene.footprints[0]
            prop = GraspProposal(GraspConfig(fp.cx, fp.cy, bin_to_angle(0)), 0.0, "Oracle")
        return prop
