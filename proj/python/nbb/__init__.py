"""Sparse cross-domain correspondence with neural best buddies."""

from ._nbb import (
    Buddy,
    Coord,
    DocumentError,
    Point,
    Pyramid,
    Region,
    WeightError,
    Weights,
    align_pair,
    build_pyramid,
    common_appearance,
    evaluate_pck,
    find_nbbs,
    load_weights,
    match,
    match_document,
    mls_map,
    normalize_activations,
    num_threads,
    random_weights,
    run_nbb,
    save_weights,
    select_top_k,
    set_num_threads,
    warp_image,
)

__all__ = [
    "Buddy",
    "Coord",
    "DocumentError",
    "Point",
    "Pyramid",
    "Region",
    "WeightError",
    "Weights",
    "align_pair",
    "build_pyramid",
    "common_appearance",
    "evaluate_pck",
    "find_nbbs",
    "load_weights",
    "match",
    "match_document",
    "mls_map",
    "normalize_activations",
    "num_threads",
    "random_weights",
    "run_nbb",
    "save_weights",
    "select_top_k",
    "set_num_threads",
    "warp_image",
]
