from .dataset import (
    Dataset,
    ExperimentSplit,
    SubjectSet,
    concat_datasets,
    make_split,
    random_bisect,
    sample_attacker_set,
    sample_subjects,
    soft_relabel,
)
from .idx import (
    DATA_DIR_ENV,
    load_idx_dataset,
    parse_idx,
    resolve_data_path,
    serialize_idx,
)
from .synth import blob_centers, nearest_center_accuracy, synth_blob_pair, synth_blobs

__all__ = [
    "DATA_DIR_ENV",
    "Dataset",
    "ExperimentSplit",
    "SubjectSet",
    "blob_centers",
    "concat_datasets",
    "load_idx_dataset",
    "make_split",
    "nearest_center_accuracy",
    "parse_idx",
    "random_bisect",
    "resolve_data_path",
    "sample_attacker_set",
    "sample_subjects",
    "serialize_idx",
    "soft_relabel",
    "synth_blob_pair",
    "synth_blobs",
]
