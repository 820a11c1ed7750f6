from .base import Dataset, DatasetConfig, BaseLoader, BlobsLoader, IdxLoader, get_loader
from .idx_parser import IdxFormatError, load_idx, load_idx_images, load_idx_labels, write_idx
from .blobs import blob_centres, gen_blobs, gen_blobs_test
from .sampler import (LabelledSubset, DualBatch, DualRng, DualSampler,
                      stratified_subset, sample_dual)
from .augment import AugmentationConfig, augment
