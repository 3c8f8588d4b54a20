"""Constraint-mode toggles shared by the LP engine and the auditors."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class IR(str, enum.Enum):
    EXPOST = "expost"
    INTERIM = "interim"


class Payments(str, enum.Enum):
    FREE = "free"
    NONNEG = "nonneg"


class IC(str, enum.Enum):
    BAYESIAN = "bic"
    DOMINANT = "dsic"


@dataclass(frozen=True)
class ConstraintMode:
    ir: IR = IR.EXPOST
    payments: Payments = Payments.NONNEG
    ic: IC = IC.BAYESIAN

    def __post_init__(self):
        object.__setattr__(self, "ir", IR(self.ir))
        object.__setattr__(self, "payments", Payments(self.payments))
        object.__setattr__(self, "ic", IC(self.ic))

    @classmethod
    def parse(cls, ir: str = "expost", payments: str = "nonneg", ic: str = "bic") -> "ConstraintMode":
        return cls(IR(ir), Payments(payments), IC(ic))

    def replace(self, **kw) -> "ConstraintMode":
        d = {"ir": self.ir, "payments": self.payments, "ic": self.ic}
        d.update(kw)
        return ConstraintMode(**d)

    def label(self) -> str:
        return f"{self.ir.value}/{self.payments.value}/{self.ic.value}"

    def to_dict(self) -> dict:
        return {"ir": self.ir.value, "payments": self.payments.value, "ic": self.ic.value}


DEFAULT_MODE = ConstraintMode()
