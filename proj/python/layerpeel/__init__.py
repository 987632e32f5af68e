"""Layer-by-layer decomposition of flat-color vector drawings.

Images are numpy arrays of shape (H, W, 4), dtype uint8, RGBA.
"""

import json
from dataclasses import dataclass

from ._layerpeel import (
    BoxOutOfRange,
    DanglingEdge,
    DimensionMismatch,
    EmptyBox,
    EmptyCloud,
    EmptyDocument,
    Error,
    InvalidJson,
    LayoutMismatch,
    MalformedXml,
    MissingTag,
    SchemaViolation,
    SvgDoc,
    UnsupportedFeature,
    canonical_graph,
    chamfer_distance,
    diff_mask,
    drop_paths,
    filter_by_path_count,
    joint_mask,
    mse,
    non_occluded_nodes,
    normalize_viewbox,
    parse_box_response,
    parse_svg,
    parse_tagged_response,
    path_irregularity,
    rasterize,
    topmost_set,
)
from . import _layerpeel


@dataclass
class PeelResult:
    termination: str
    manifest: dict
    steps: list
    final_svg: str


def peel_oracle(doc, resolution=512, rho=20, max_iterations=50, epsilon=1.0, seed=0):
    """Peel `doc` with the geometry oracle standing in for both models."""
    manifest, steps, final_svg = _layerpeel.peel_oracle_json(
        doc, resolution, rho, max_iterations, epsilon, seed
    )
    manifest = json.loads(manifest)
    return PeelResult(
        termination=manifest["termination"],
        manifest=manifest,
        steps=[json.loads(s) for s in steps],
        final_svg=final_svg,
    )


def build_triplets(doc, svg_id, resolution=512):
    """(record dict, src image, tar image) per removal step."""
    return [
        (json.loads(t["record"]), t["src"], t["tar"])
        for t in _layerpeel.build_triplets(doc, svg_id, resolution)
    ]


__all__ = [name for name in dir() if not name.startswith("_")]
