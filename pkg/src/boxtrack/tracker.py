"""Multi-object track lifecycle on top of the single-target filter.

Each frame is one tick: predict every live track, associate predictions
with the frame's detections by 1 - IoU (optionally pre-gated by Mahalanobis
distance), update matched tracks, spawn tentative tracks for unmatched
detections and retire tracks that have coasted too long.  During miss
frames a track coasts on prediction only; there is no measurement, so there
is no update.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import kalman
from .association import CHI2_GATE_95_4DOF, CostMatrix, iou_cost_matrix, solve_assignment
from .errors import NonPositiveSize, OutOfOrderFrame
from .models import build_model
from .state import (
    BoundingBox,
    Detection,
    GaussianState,
    NoiseParams,
    Parameterization,
    from_state,
    to_measurement,
)


class TrackStatus(Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DELETED = "deleted"


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker settings.  Defaults: dt = 1 frame, IoU threshold 0.3,
    max_age 5, min_hits 3, unit process and measurement sigmas."""

    param: Parameterization = Parameterization.CXCYWH
    noise: NoiseParams = field(default_factory=NoiseParams)
    iou_threshold: float = 0.3
    max_age: int = 5
    min_hits: int = 3
    use_mahalanobis_gate: bool = False
    emit_tentative: bool = False
    velocity_prior_scale: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold must be in [0, 1], got {self.iou_threshold}")
        if self.max_age < 1:
            raise ValueError(f"max_age must be >= 1, got {self.max_age}")
        if self.min_hits < 1:
            raise ValueError(f"min_hits must be >= 1, got {self.min_hits}")


@dataclass
class Track:
    """Internal per-target record: filter state plus lifecycle counters."""

    track_id: int
    state: GaussianState
    hits: int = 1
    misses: int = 0
    status: TrackStatus = TrackStatus.TENTATIVE
    history: list[tuple[int, BoundingBox]] = field(default_factory=list)
    ever_confirmed: bool = False


class EmittedTrack(NamedTuple):
    track_id: int
    box: BoundingBox
    status: TrackStatus


@dataclass(frozen=True)
class TrackHistory:
    """Per-frame boxes of one track, recorded on measurement updates only
    (coasted frames are never part of the history)."""

    track_id: int
    entries: tuple[tuple[int, BoundingBox], ...]


class Tracker:
    """Tracking-by-detection over one sequence.

    A tracker instance holds mutable per-sequence state and is meant to be
    stepped frame by frame in nondecreasing frame order; run one instance
    per sequence.
    """

    def __init__(self, config: TrackerConfig = None):
        self.config = config if config is not None else TrackerConfig()
        self._model = build_model(self.config.param, self.config.noise)
        self._tracks: list[Track] = []
        self._next_id = 1
        self._last_frame: int | None = None

    def step(self, detections: list[Detection], frame: int | None = None) -> list[EmittedTrack]:
        """Advance one frame and return the currently reported tracks.

        The frame index is taken from the detections (which must all share
        one frame) or from ``frame`` when the detection list is empty.  A
        gap in frame indices is coasted internally, one prediction-only tick
        per skipped frame.  Raises OutOfOrderFrame when the frame index
        decreases.
        """
        frames = {d.frame for d in detections}
        if len(frames) > 1:
            raise ValueError(f"detections span multiple frames: {sorted(frames)}")
        if frames:
            det_frame = frames.pop()
            if frame is not None and frame != det_frame:
                raise ValueError(f"frame argument {frame} disagrees with detections ({det_frame})")
            frame = det_frame
        elif frame is None:
            frame = 1 if self._last_frame is None else self._last_frame + 1
        frame = int(frame)

        if self._last_frame is not None:
            if frame < self._last_frame:
                raise OutOfOrderFrame(f"frame {frame} after frame {self._last_frame}")
            for gap_frame in range(self._last_frame + 1, frame):
                self._tick(gap_frame, [])
        result = self._tick(frame, list(detections))
        self._last_frame = frame
        return result

    def flush(self) -> list[TrackHistory]:
        """Histories of every track that was ever confirmed, by id.
        Idempotent; the tracker can keep stepping afterwards."""
        return [
            TrackHistory(t.track_id, tuple(t.history))
            for t in self._tracks
            if t.ever_confirmed
        ]

    # -- one frame ---------------------------------------------------------

    def _tick(self, frame: int, detections: list[Detection]) -> list[EmittedTrack]:
        cfg = self.config
        model = self._model

        live = [t for t in self._tracks if t.status is not TrackStatus.DELETED]
        for track in live:
            track.state = kalman.predict(track.state, model.F, model.Q)
            if not self._decodes_to_box(track):
                track.status = TrackStatus.DELETED
        live = [t for t in live if t.status is not TrackStatus.DELETED]

        assignment = self._associate(live, detections)

        for ti, dj in assignment.matches:
            track, det = live[ti], detections[dj]
            z = to_measurement(det.box, cfg.param)
            track.state, _ = kalman.update(track.state, z, model.H, model.R)
            track.hits += 1
            track.misses = 0
            if track.status is TrackStatus.TENTATIVE and track.hits >= cfg.min_hits:
                track.status = TrackStatus.CONFIRMED
                track.ever_confirmed = True
            if self._decodes_to_box(track):
                track.history.append((frame, from_state(track.state.mean, cfg.param)))
            else:
                track.status = TrackStatus.DELETED

        for ti in assignment.unmatched_tracks:
            track = live[ti]
            track.misses += 1
            if track.misses > cfg.max_age:
                track.status = TrackStatus.DELETED

        for dj in assignment.unmatched_detections:
            self._spawn(frame, detections[dj])

        emitted = []
        for track in self._tracks:
            if track.status is TrackStatus.DELETED:
                continue
            if track.status is TrackStatus.TENTATIVE and not cfg.emit_tentative:
                continue
            emitted.append(
                EmittedTrack(track.track_id, from_state(track.state.mean, cfg.param), track.status)
            )
        return emitted

    def _associate(self, live: list[Track], detections: list[Detection]):
        cfg = self.config
        track_boxes = [from_state(t.state.mean, cfg.param) for t in live]
        det_boxes = [d.box for d in detections]
        gate = None
        if cfg.use_mahalanobis_gate and live and detections:
            gate = np.ones((len(live), len(detections)), dtype=bool)
            for i, track in enumerate(live):
                for j, det in enumerate(detections):
                    z = to_measurement(det.box, cfg.param)
                    d2 = kalman.gating_distance(track.state, z, self._model.H, self._model.R)
                    gate[i, j] = d2 <= CHI2_GATE_95_4DOF
        costs = iou_cost_matrix(track_boxes, det_boxes, gate)
        return solve_assignment(costs, max_cost=1.0 - cfg.iou_threshold)

    def _spawn(self, frame: int, det: Detection) -> None:
        cfg = self.config
        z = to_measurement(det.box, cfg.param)
        state = kalman.initiate(z, cfg.param, cfg.noise, cfg.velocity_prior_scale)
        track = Track(track_id=self._next_id, state=state)
        self._next_id += 1
        if track.hits >= cfg.min_hits:
            track.status = TrackStatus.CONFIRMED
            track.ever_confirmed = True
        track.history.append((frame, from_state(state.mean, cfg.param)))
        self._tracks.append(track)

    def _decodes_to_box(self, track: Track) -> bool:
        try:
            from_state(track.state.mean, self.config.param)
            return True
        except NonPositiveSize:
            return False
