"""Exception types shared across the package."""


class TabAttackError(Exception):
    """Base class for all package-specific errors."""


class ConstraintSyntaxError(TabAttackError):
    """Lexical or grammatical error in constraint source, with position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnknownFeatureError(ConstraintSyntaxError):
    """A constraint references a feature name not present in the schema."""

    def __init__(self, name: str, line: int, column: int):
        super().__init__(f"unknown feature name {name!r}", line, column)
        self.feature_name = name


class ConstraintLinkError(TabAttackError):
    """Constraint set cannot be linked (duplicate names, bad parameters, ...)."""


class CircularAssignmentError(ConstraintLinkError):
    """Assignment constraints form a dependency cycle and cannot be repaired."""


class ConstraintEvalError(TabAttackError):
    """Hard evaluation failure inside a numeric expression (division by zero)."""

    def __init__(self, message: str, constraint_name: str | None = None):
        self.constraint_name = constraint_name
        if constraint_name is not None:
            message = f"constraint {constraint_name!r}: {message}"
        super().__init__(message)


class AccessLevelError(TabAttackError):
    """An attack requested a capability its model-access level does not grant."""


class ConfigError(TabAttackError):
    """Invalid or inconsistent run configuration."""


class DataError(TabAttackError):
    """Dataset loading or validation failure."""


class TrainingDivergedError(TabAttackError):
    """Training produced a non-finite loss."""
