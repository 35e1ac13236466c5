"""
This module defines the `ScoreFamily` model and the enumerations describing it.

A score family is a validated description of a b-homogeneous, strictly consistent
scoring function: which functional it elicits, its homogeneity degree, its level
parameter and its constants. Evaluation lives in `services.score_service`.

Classes:
    ScoreKind: Enumeration of the supported score families.
    ActionDomain: Enumeration of admissible prediction/observation domains.
    ScoreConstants: Constants d, d1, d2, c0, c1 of the families.
    ScoreFamily: Represents an immutable, validated scoring-function description.
"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from helpers.errors import BadConstant, RangeError, UnsupportedDegree


class ScoreKind(str, Enum):
    """
    Enumeration for the functional a score family elicits.

    Attributes:
        MEAN_PATTON (str): Patton family for the mean.
        VAR_HOMOGENEOUS (str): Homogeneous generalised pinball loss for VaR.
        EXPECTILE (str): Asymmetrically weighted Patton score for the tau-expectile.
        VAR_ES_JOINT (str): Joint score for the (VaR, ES) pair.
    """
    MEAN_PATTON = "mean"
    VAR_HOMOGENEOUS = "var"
    EXPECTILE = "expectile"
    VAR_ES_JOINT = "vares"


class ActionDomain(str, Enum):
    """
    Enumeration for the admissible region of predictions and observations.

    Attributes:
        ALL_REALS (str): Any finite value.
        POSITIVE_REALS (str): Strictly positive values only (for the joint
            (VaR, ES) score the restriction applies to the ES coordinate).
    """
    ALL_REALS = "AllReals"
    POSITIVE_REALS = "PositiveReals"


class ScoreConstants(BaseModel):
    """
    Constants of the homogeneous score families.

    Attributes:
        d (float): Scale of g for VaR scores with b <= 0.
        d1 (float): Scale of the positive branch of g / G1.
        d2 (float): Scale of the negative branch of g / G1.
        c0 (float): Additive constant of G1 and the ES primitive.
        c1 (float): Scale of the ES primitive.
    """
    model_config = ConfigDict(frozen=True)

    d: float = 1.0
    d1: float = 1.0
    d2: float = 1.0
    c0: float = 0.0
    c1: float = 1.0


class ScoreFamily(BaseModel):
    """
    Represents a validated scoring-function family.

    Attributes:
        kind (ScoreKind): Functional elicited by the family.
        b (float): Homogeneity degree, S(cz, cy) = c^b S(z, y).
        alpha (Optional[float]): VaR / ES level in (0, 1).
        tau (Optional[float]): Expectile level in (0, 1).
        constants (ScoreConstants): Family constants.
        dim (int): Prediction dimension, 2 for the (VaR, ES) pair and 1 otherwise.
        action_domain (ActionDomain): Admissible region of (z, y).
    """
    model_config = ConfigDict(frozen=True)

    kind: ScoreKind
    b: float
    alpha: Optional[float] = None
    tau: Optional[float] = None
    constants: ScoreConstants = Field(default_factory=ScoreConstants)
    dim: Optional[int] = Field(None, ge=1, le=2)
    action_domain: Optional[ActionDomain] = None

    @model_validator(mode="before")
    @classmethod
    def fill_derived(cls, data):
        """
        Derive dim and action_domain from kind and b when they are not given.
        """
        if isinstance(data, dict) and "kind" in data and "b" in data:
            data = dict(data)
            kind = ScoreKind(data["kind"])
            data.setdefault("dim", 2 if kind == ScoreKind.VAR_ES_JOINT else 1)
            data.setdefault("action_domain", expected_domain(kind, float(data["b"])))
        return data

    @model_validator(mode="after")
    def validate_family(self):
        """
        Check level ranges, constants, supported degrees and derived fields.

        Returns:
            ScoreFamily: The validated family.

        Raises:
            RangeError: If alpha or tau is missing or outside (0, 1).
            BadConstant: If d, d1, d2 or c1 violate their sign constraints.
            UnsupportedDegree: For the (VaR, ES) score with b in {0} or [1, inf).
            ValueError: If dim or action_domain contradict the kind.
        """
        needs_alpha = self.kind in (ScoreKind.VAR_HOMOGENEOUS, ScoreKind.VAR_ES_JOINT)
        if needs_alpha and not _is_level(self.alpha):
            raise RangeError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.kind == ScoreKind.EXPECTILE and not _is_level(self.tau):
            raise RangeError(f"tau must lie in (0, 1), got {self.tau}")

        constants = self.constants
        if constants.c1 <= 0 or constants.d <= 0:
            raise BadConstant("c1 and d must be strictly positive")
        if constants.d1 < 0 or constants.d2 < 0:
            raise BadConstant("d1 and d2 must be nonnegative")
        if self.kind == ScoreKind.VAR_HOMOGENEOUS and self.b > 0 and (
                constants.d1 <= 0 or constants.d2 <= 0):
            raise BadConstant("d1 and d2 must be strictly positive for VaR scores")

        if self.kind == ScoreKind.VAR_ES_JOINT and (self.b == 0 or self.b >= 1):
            raise UnsupportedDegree(
                f"no positively homogeneous (VaR, ES) score of degree b={self.b}")

        expected_dim = 2 if self.kind == ScoreKind.VAR_ES_JOINT else 1
        if self.dim != expected_dim:
            raise ValueError(f"dim must be {expected_dim} for kind {self.kind.value}")
        if self.action_domain != expected_domain(self.kind, self.b):
            raise ValueError(f"action_domain must be {expected_domain(self.kind, self.b).value}")
        return self

    @property
    def level(self) -> Optional[float]:
        """
        Level parameter of the family (alpha or tau), if any.
        """
        return self.tau if self.kind == ScoreKind.EXPECTILE else self.alpha

    @property
    def zero_at_truth(self) -> bool:
        """
        Whether S(y, y) = 0 holds for the family.
        """
        return self.kind != ScoreKind.VAR_ES_JOINT

    @property
    def kinked(self) -> bool:
        """
        Whether dS/dz jumps at z = y (indicator-based scores).
        """
        return self.kind in (ScoreKind.VAR_HOMOGENEOUS, ScoreKind.VAR_ES_JOINT)


def expected_domain(kind: ScoreKind, b: float) -> ActionDomain:
    """
    Action domain implied by the family kind and degree.

    Args:
        kind (ScoreKind): Family kind.
        b (float): Homogeneity degree.

    Returns:
        ActionDomain: AllReals for VaR with b > 0 and for the squared-error members
        (b = 2) of the mean and expectile families, PositiveReals otherwise. For the
        (VaR, ES) pair only the ES coordinate is restricted.
    """
    if kind == ScoreKind.VAR_HOMOGENEOUS and b > 0:
        return ActionDomain.ALL_REALS
    if kind in (ScoreKind.MEAN_PATTON, ScoreKind.EXPECTILE) and b == 2:
        return ActionDomain.ALL_REALS
    return ActionDomain.POSITIVE_REALS


def _is_level(value: Optional[float]) -> bool:
    return value is not None and 0.0 < value < 1.0
