"""Dance-video keypoint pipeline: ensemble filtering, dancer tracking,
annotation selection, outlier rejection, curve interpolation, and the
evaluation-metric suite for dance-motion data."""

__version__ = "0.1.0"
