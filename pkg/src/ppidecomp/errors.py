"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: bad input data is an ``InputError``
(exit 2), a mathematical verdict failure is a ``PredicateError`` (exit 1),
and everything else that indicates an internal inconsistency exits 3.
"""


class PPIDecompError(Exception):
    """Base class for all library errors."""


class InputError(PPIDecompError):
    """Malformed input: non-finite entries, bad shapes, unparsable JSON."""


class DimensionMismatchError(InputError):
    """Operands live in different ambient spaces."""


class ConsistencyError(PPIDecompError):
    """Caller-supplied structures violate a documented precondition
    (e.g. frames that are not pairwise orthogonal)."""


class PredicateError(PPIDecompError):
    """The input fails a required mathematical predicate (not a partial
    isometry, not power partial, family not star-commuting).  Carries the
    offending report when one exists."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DecompositionError(PPIDecompError):
    """The decomposition could not be completed to tolerance; carries
    diagnostics so the failure can be inspected."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DegeneracyError(DecompositionError):
    """Numerical degeneracy: a frame that must be orthonormal drifted
    beyond the defensive re-orthonormalization threshold."""


class FormViolationError(DecompositionError):
    """A compressed operator is not of the required identity-tensor form;
    carries the measured defect."""

    def __init__(self, message, defect=None, diagnostics=None):
        super().__init__(message, diagnostics)
        self.defect = defect
