from .formats import (write_pfm, read_pfm, write_flo, read_flo,
                      write_ply_points, read_ply_points, write_png, read_png)
from .layout import (SequenceLayout, write_frame, write_sequence_metadata,
                     write_ct_metadata, read_sequence, SequenceReader,
                     write_manifest, validate_against_manifest, MODALITY_DIRS)

__all__ = [
    "write_pfm", "read_pfm", "write_flo", "read_flo",
    "write_ply_points", "read_ply_points", "write_png", "read_png",
    "SequenceLayout", "write_frame", "write_sequence_metadata",
    "write_ct_metadata", "read_sequence", "SequenceReader", "write_manifest",
    "validate_against_manifest", "MODALITY_DIRS",
]
