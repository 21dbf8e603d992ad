"""Exception hierarchy.

Detection failures carry a snake_case ``status`` string that the CLI and the
benchmark write into their outputs.
"""


class PupilLocError(Exception):
    status = "error"


class EmptyRegion(PupilLocError, ValueError):
    status = "empty_region"


class DetectionError(PupilLocError):
    """An algorithm could not produce an estimate for the given ROI."""

    status = "detection_error"


class RegionTooSmall(DetectionError, ValueError):
    status = "region_too_small"


class NoCandidatePixels(DetectionError):
    status = "no_candidate_pixels"


class NoDarkPixels(DetectionError):
    status = "no_dark_pixels"


class NoBoundaries(DetectionError):
    status = "no_boundaries"


class NoFlankingPair(DetectionError):
    status = "no_flanking_pair"


class NoVotes(DetectionError):
    status = "no_votes"


class NoSecondLine(DetectionError):
    status = "no_second_line"


class DegenerateTruth(PupilLocError, ValueError):
    status = "degenerate_truth"


class RoiOutOfBounds(PupilLocError, ValueError):
    status = "roi_out_of_bounds"


class InvalidSpec(PupilLocError, ValueError):
    status = "invalid_spec"


class NoEvaluatedRecords(PupilLocError):
    status = "no_evaluated_records"


class DatasetError(PupilLocError, OSError):
    """Base for problems with on-disk inputs; always names the file."""

    status = "dataset_error"

    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class MissingAnnotation(DatasetError):
    status = "missing_annotation"


class MalformedEyeFile(DatasetError):
    status = "malformed_eye_file"


class MalformedPgm(DatasetError):
    status = "malformed_pgm"
