"""Exhaustive isomorph-free search for partitioned partial linear spaces.

The package enumerates 0/1 matrices with constant row weight 3, no zero
column, pairwise row intersections of size at most 1, and rows grouped
into at most four classes of pairwise disjoint rows. A linear-algebra
filter keeps only matrices whose anchored GF(2) row span has minimum
weight 5. Enumeration proceeds row by row with canonical representatives
deduplicating isomorphic branches.
"""

from .config import (
    Configuration,
    column_type_of,
    compute_signature,
    from_labeled_rows,
    normalize_layout,
    pack_key,
    parse_text,
    replicate,
    serialize_text,
    unpack_key,
)
from .errors import (
    ColumnRangeError,
    HeaderError,
    InvalidConfigurationError,
    NotACosetError,
    ParseError,
    PartitionMismatchError,
    RowWeightError,
    StageOverflowError,
    TooLargeError,
    ZeroColumnError,
)
from .canon import (
    brute_force_canonical,
    canonical_form,
    canonical_form_fixed_classes,
    canonical_key,
)
from .gf2code import (
    SpanReport,
    embed,
    goodness_measure,
    is_n1l,
    is_n1l_incremental,
    span_min_weight,
)
from .perm4 import (
    CosetHandle,
    Perm4,
    apply_to_signature,
    apply_to_type,
    compose,
    identify_coset,
    inverse,
    subgroup_census,
)
from .sigcanon import (
    SignatureCanonResult,
    canonicalize_signature,
    canonicalize_signature_grouped,
)
from .validity import is_valid_n1_prime, max_rows_for_cols

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "CosetHandle",
    "Perm4",
    "SignatureCanonResult",
    "SpanReport",
    "apply_to_signature",
    "apply_to_type",
    "brute_force_canonical",
    "canonical_form",
    "canonical_form_fixed_classes",
    "canonical_key",
    "canonicalize_signature",
    "canonicalize_signature_grouped",
    "column_type_of",
    "compose",
    "compute_signature",
    "embed",
    "from_labeled_rows",
    "goodness_measure",
    "identify_coset",
    "inverse",
    "is_n1l",
    "is_n1l_incremental",
    "is_valid_n1_prime",
    "max_rows_for_cols",
    "normalize_layout",
    "pack_key",
    "parse_text",
    "replicate",
    "serialize_text",
    "span_min_weight",
    "subgroup_census",
    "unpack_key",
    "ColumnRangeError",
    "HeaderError",
    "InvalidConfigurationError",
    "NotACosetError",
    "ParseError",
    "PartitionMismatchError",
    "RowWeightError",
    "StageOverflowError",
    "TooLargeError",
    "ZeroColumnError",
    "__version__",
]
