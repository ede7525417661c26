"""radbar: two-stage binary-code image retrieval.

Images are annotated with two compact codes: a thresholded activation
vector (CNNC) for coarse candidate selection and a Radon barcode (RBC)
for re-ranking. Retrieval is Hamming-distance search over both, evaluated
with a position-weighted hierarchical label error, with optional ROI
localization in the returned images by cross-correlation.
"""

from .barcode import (
    ActivationVector,
    BitCode,
    CodeKind,
    CodeMismatchError,
    ProjectionVector,
    binarize_activations,
    binarize_projection,
    fallback_descriptor,
    generate_barcodes,
    hamming,
    radon_barcode,
    radon_projection,
)
from .imagecore import (
    GrayImage,
    ImageFormatError,
    PixelGrid,
    Roi,
    crop,
    decode_grayscale,
    downsample,
    encode_pgm,
    load_grayscale,
    mean_subtract,
    save_pgm,
)
from .irma import (
    CardinalityTable,
    EvaluationReport,
    IrmaCode,
    IrmaCodeError,
    build_cardinalities,
    irma_error,
    parse_irma,
    total_error,
)
from .retrieval import (
    Candidate,
    Hit,
    IndexConfig,
    IndexEntry,
    RbcMode,
    RetrievalIndex,
    RetrievalResult,
    Split,
    build_index,
    retrieve,
    stage1_candidates,
    stage2_rerank,
)
from .roimatch import (
    CorrelationMap,
    RoiMatch,
    RoiMatchFailure,
    best_match,
    cross_correlate,
    roi_match,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationVector",
    "BitCode",
    "Candidate",
    "CardinalityTable",
    "CodeKind",
    "CodeMismatchError",
    "CorrelationMap",
    "EvaluationReport",
    "GrayImage",
    "Hit",
    "ImageFormatError",
    "IndexConfig",
    "IndexEntry",
    "IrmaCode",
    "IrmaCodeError",
    "PixelGrid",
    "ProjectionVector",
    "RbcMode",
    "RetrievalIndex",
    "RetrievalResult",
    "Roi",
    "RoiMatch",
    "RoiMatchFailure",
    "Split",
    "best_match",
    "binarize_activations",
    "binarize_projection",
    "build_cardinalities",
    "build_index",
    "crop",
    "cross_correlate",
    "decode_grayscale",
    "downsample",
    "encode_pgm",
    "fallback_descriptor",
    "generate_barcodes",
    "hamming",
    "irma_error",
    "load_grayscale",
    "mean_subtract",
    "parse_irma",
    "radon_barcode",
    "radon_projection",
    "retrieve",
    "roi_match",
    "save_pgm",
    "stage1_candidates",
    "stage2_rerank",
    "total_error",
]
