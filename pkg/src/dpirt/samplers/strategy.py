"""Sampling-strategy matrix: parameterization x constraint x algorithm x ability model.

A strategy is one cell of the non-HMC part of the matrix; invalid
combinations are rejected at construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..errors import ValidationError
from ..model import ModelKind, Parameterization


class ConstraintMode(str, Enum):
    ABILITIES = "abilities"
    ITEMS = "items"
    NONE = "none"


class Algorithm(str, Enum):
    MH_CONJUGATE = "mh"
    CENTERED = "centered"


class AbilityModel(str, Enum):
    PARAMETRIC = "parametric"
    SEMIPARAMETRIC = "semiparametric"


@dataclass(frozen=True)
class StrategyConfig:
    kind: ModelKind = ModelKind.TWO_PL
    parameterization: Parameterization = Parameterization.IRT
    constraint: ConstraintMode = ConstraintMode.NONE
    algorithm: Algorithm = Algorithm.MH_CONJUGATE
    ability_model: AbilityModel = AbilityModel.PARAMETRIC

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "parameterization", Parameterization(self.parameterization))
        object.__setattr__(self, "constraint", ConstraintMode(self.constraint))
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "ability_model", AbilityModel(self.ability_model))
        if self.algorithm is Algorithm.CENTERED:
            if self.parameterization is not Parameterization.SI:
                raise ValidationError("the centered sampler requires the slope-intercept parameterization")
            if self.constraint is ConstraintMode.ITEMS:
                raise ValidationError("the centered sampler is not available with in-model item constraints")
            if self.kind is ModelKind.ONE_PL:
                raise ValidationError("the centered sampler proposes discriminations, which the 1PL fixes at 1")
        if self.constraint is ConstraintMode.ABILITIES:
            if self.ability_model is not AbilityModel.PARAMETRIC:
                raise ValidationError("constrained abilities require the parametric ability model")

    @property
    def label(self) -> str:
        return "-".join(
            (
                self.ability_model.value,
                self.kind.value,
                self.parameterization.value,
                self.constraint.value,
                self.algorithm.value,
            )
        )

    def describe(self) -> dict:
        return {
            "kind": self.kind.value,
            "parameterization": self.parameterization.value,
            "constraint": self.constraint.value,
            "algorithm": self.algorithm.value,
            "ability_model": self.ability_model.value,
        }

    @classmethod
    def from_dict(cls, spec: dict) -> "StrategyConfig":
        known = {"kind", "parameterization", "constraint", "algorithm", "ability_model"}
        unknown = set(spec) - known
        if unknown:
            raise ValidationError(f"unknown strategy keys: {sorted(unknown)}")
        try:
            return cls(**spec)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc


def table_strategies(kind=ModelKind.TWO_PL) -> list[StrategyConfig]:
    """All non-HMC cells of the strategy matrix for the given model kind."""
    cells = []
    for ability_model in AbilityModel:
        for parameterization in Parameterization:
            for constraint in ConstraintMode:
                for algorithm in Algorithm:
                    try:
                        cells.append(
                            StrategyConfig(
                                kind=kind,
                                parameterization=parameterization,
                                constraint=constraint,
                                algorithm=algorithm,
                                ability_model=ability_model,
                            )
                        )
                    except ValidationError:
                        continue
    return cells
