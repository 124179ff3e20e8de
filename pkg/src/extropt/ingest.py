"""End-to-end ingest: raw signal directory -> labeled-extrusion table."""

from __future__ import annotations

import numpy as np

from .errors import CurationError
from .labeling import label_extrusions
from .signals import load_signals, resample_locf, segment_extrusions


def ingest_directory(data_dir):
    """Curate, segment and label every extrusion found under ``data_dir``.

    Returns the labeled table plus a diagnostics dict (segment counts,
    class frequencies, discarded edges).
    """
    raw, manifest = load_signals(data_dir)
    roles = manifest.roles()
    for s in raw:
        if s.timestamps.size == 0:
            raise CurationError(f"signal {s.name!r} has no samples")
    t0 = max(float(np.floor(s.timestamps[0])) for s in raw)
    t1 = max(float(np.floor(s.timestamps[-1])) for s in raw)
    frame = resample_locf(raw, (t0, t1))
    segments = segment_extrusions(
        frame,
        roles.commander,
        product_column=roles.product,
        die_column=roles.die,
    )
    commander = frame.columns[roles.commander]
    table, diagnostics = label_extrusions(
        frame, segments, {s.name: s for s in raw}, roles
    )
    diagnostics["discarded_leading_active"] = int(commander[0] > 0)
    return table, diagnostics
