"""Error types raised by the toolkit.

Every failure mode that callers may want to catch individually gets its own
class. The CLI maps these onto exit code 1 (computation errors) or 2 (usage
and input errors) and a machine-parsable JSON blob on stderr.
"""


class WavestereoError(Exception):
    """Base class for all toolkit errors."""

    #: CLI exit code category: 1 = computation failed, 2 = bad usage/input.
    exit_code = 1

    def payload(self):
        """Extra key/value pairs for the CLI error JSON."""
        return {}


class InputError(WavestereoError):
    """Bad input data or arguments (CLI exit code 2)."""

    exit_code = 2


# ---------------------------------------------------------------- file I/O

class MalformedHeader(InputError):
    def __init__(self, message, offset=None):
        super().__init__(message if offset is None
                         else f"{message} (byte offset {offset})")
        self.offset = offset

    def payload(self):
        return {} if self.offset is None else {"offset": self.offset}


class UnsupportedChannels(InputError):
    """Color PFM ('PF') or other channel layouts we do not handle."""


class DimensionOverflow(InputError):
    """Declared image dimensions are nonpositive or absurdly large."""


class TruncatedPayload(InputError):
    def __init__(self, message, offset=None):
        super().__init__(message if offset is None
                         else f"{message} (byte offset {offset})")
        self.offset = offset

    def payload(self):
        return {} if self.offset is None else {"offset": self.offset}


class MissingKey(InputError):
    def __init__(self, key):
        super().__init__(f"calibration file is missing key {key!r}")
        self.key = key

    def payload(self):
        return {"key": self.key}


class ReflectionNotAllowed(InputError):
    """Rotation matrix has determinant -1 (a reflection, not a rotation)."""


class NonuniformSampling(InputError):
    """Series CSV time column is not uniformly sampled."""


# ---------------------------------------------------------------- geometry

class NonpositiveDisparity(InputError):
    pass


class NonpositiveDepth(InputError):
    pass


class DimensionMismatch(InputError):
    pass


# ------------------------------------------------------------------ oracle

class DispersionNoConvergence(WavestereoError):
    pass


class RayMiss(WavestereoError):
    """A camera ray left the simulated extent without striking the surface."""


class ProbeOutsideExtent(InputError):
    pass


class SteepnessExceeded(InputError):
    """Requested wave steepness H/lambda is beyond the breaking limit."""


# ----------------------------------------------------------------- matcher

class BadMatchParams(InputError):
    pass


class AllMasked(WavestereoError):
    """Every pixel of an ingested disparity map failed validation."""


# -------------------------------------------------------------- adaptation

class DegenerateRange(InputError):
    """Constant relative-depth grid cannot be min-max normalized."""


class BadRange(InputError):
    """Interval endpoints are missing, inverted, or nonpositive."""


# ----------------------------------------------------------- reconstruction

class EmptyCloud(InputError):
    pass


class TooFewPoints(InputError):
    pass


class ConsensusFailure(WavestereoError):
    """RANSAC could not find a plane with the required inlier fraction."""


class DegenerateOrientation(WavestereoError):
    """Fitted plane is parallel to the optical axis; no world frame exists."""


class ProbeStarved(WavestereoError):
    """Too many consecutive frames had no points near the probe."""


class TooFewCrossings(WavestereoError):
    """Series has fewer than two mean up-crossings; no complete wave."""


class ZeroVariance(InputError):
    pass


class DegenerateSpread(InputError):
    pass


# ----------------------------------------------------------------- metrics

class NoValidPixels(InputError):
    pass


class EmptyEdgeSet(WavestereoError):
    """No edge pixels survived thresholding; Hausdorff distance undefined."""
