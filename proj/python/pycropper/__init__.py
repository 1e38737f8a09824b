"""Python surface of the cropping pipeline's C++ core."""

from _cropper import (
    AspectRatio,
    CoordSpace,
    CropBox,
    CropperError,
    EmbeddingStore,
    HashEmbeddingProvider,
    ScoredId,
    acc_kn,
    area_fraction,
    clamp_and_validate,
    convert,
    cosine,
    default_config,
    displacement,
    extract_crop,
    iou,
    make_box,
    make_test_image,
    parse_response,
    pcc,
    pixel_digest,
    ratio_of,
    srcc,
)

__all__ = [
    "AspectRatio",
    "CoordSpace",
    "CropBox",
    "CropperError",
    "EmbeddingStore",
    "HashEmbeddingProvider",
    "ScoredId",
    "acc_kn",
    "area_fraction",
    "clamp_and_validate",
    "convert",
    "cosine",
    "default_config",
    "displacement",
    "extract_crop",
    "iou",
    "make_box",
    "make_test_image",
    "parse_response",
    "pcc",
    "pixel_digest",
    "ratio_of",
    "srcc",
]
