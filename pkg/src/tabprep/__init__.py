"""Two-pass columnar preprocessing engine for DLRM-style tabular datasets."""

from .errors import (
    ArityError,
    BadMagic,
    ConfigError,
    DecodeError,
    DuplicateWithinPart,
    FieldOverflow,
    FormatError,
    InvalidByte,
    MissingEntry,
    OutOfRangeValue,
    ProtocolError,
    RowCountMismatch,
    ServerError,
    ShortRead,
    TabprepError,
    VersionMismatch,
    VocabError,
)
from .schema import (
    CRITEO_SCHEMA,
    ColumnKind,
    DatasetSchema,
    DecodedRecord,
    N_COLUMNS,
    N_DENSE,
    N_SPARSE,
    PipelineConfig,
    RecordBatch,
    TransformedBatch,
    TransformedRecord,
    config_from_mapping,
    load_config_file,
    validate_config,
)
from .ops import dense_transform, log_transform, modulus_reduce, negatives_to_zero
from .vocab import VocabTable, Vocabulary, first_appearance_unique
from .decoder import StreamDecoder, decode_buffer, decode_file, iter_decode_file
from .datagen import SyntheticSpec, generate, write_text
from .engine import (
    ColumnwiseEngine,
    PipelineResult,
    RowwiseEngine,
    RunStats,
    run_pipeline,
)
from .io_formats import (
    iter_read_records,
    load_vocabulary,
    read_records,
    save_vocabulary,
    write_records,
)
from .preprocessor import TabularPreprocessor
from .net import ClientStats, PreprocessServer, client_send, serve

__version__ = "0.1.0"

__all__ = [
    "ArityError",
    "BadMagic",
    "ClientStats",
    "ColumnKind",
    "ColumnwiseEngine",
    "ConfigError",
    "CRITEO_SCHEMA",
    "DatasetSchema",
    "DecodeError",
    "DecodedRecord",
    "DuplicateWithinPart",
    "FieldOverflow",
    "FormatError",
    "InvalidByte",
    "MissingEntry",
    "N_COLUMNS",
    "N_DENSE",
    "N_SPARSE",
    "OutOfRangeValue",
    "PipelineConfig",
    "ProtocolError",
    "RecordBatch",
    "RowCountMismatch",
    "ServerError",
    "ShortRead",
    "StreamDecoder",
    "TabprepError",
    "TransformedBatch",
    "TransformedRecord",
    "VersionMismatch",
    "VocabError",
    "VocabTable",
    "Vocabulary",
    "config_from_mapping",
    "decode_buffer",
    "decode_file",
    "dense_transform",
    "iter_decode_file",
    "load_config_file",
    "log_transform",
    "modulus_reduce",
    "negatives_to_zero",
    "validate_config",
    "PipelineResult",
    "PreprocessServer",
    "RowwiseEngine",
    "RunStats",
    "SyntheticSpec",
    "TabularPreprocessor",
    "client_send",
    "first_appearance_unique",
    "generate",
    "iter_read_records",
    "load_vocabulary",
    "read_records",
    "run_pipeline",
    "save_vocabulary",
    "serve",
    "write_records",
    "write_text",
    "__version__",
]
