"""Campaign cost arithmetic in exact decimal dollars.

Money is decimal fixed-point (cents), never binary floats: the headline
totals must reproduce to the cent.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

CENT = Decimal("0.01")


@dataclass(frozen=True)
class CostParams:
    """Pay rates and campaign shape. Defaults match the benchmark campaign."""

    per_annotation_fee: Decimal = Decimal("0.06")
    survey_fee: Decimal = Decimal("0.06")
    training_fee_per_doc: Decimal = Decimal("0.06")
    training_docs: int = 4
    redundancy: int = 15

    def __post_init__(self) -> None:
        fees = (self.per_annotation_fee, self.survey_fee, self.training_fee_per_doc)
        if any(f < 0 for f in fees):
            raise ValueError("fees must be non-negative")
        if self.training_docs < 0 or self.redundancy < 0:
            raise ValueError("counts must be non-negative")


def training_cost_per_worker(params: CostParams) -> Decimal:
    """Survey fee plus the fee for each required training document."""
    return params.survey_fee + params.training_docs * params.training_fee_per_doc


def per_abstract_cost(params: CostParams) -> Decimal:
    """Annotation cost of one fully redundant document."""
    return params.redundancy * params.per_annotation_fee


def campaign_cost(
    params: CostParams, trained_workers: int, paid_documents: int
) -> Decimal:
    """Total campaign cost.

    ``paid_documents`` excludes the training documents; their pay sits in the
    per-worker training term.
    """
    if trained_workers < 0 or paid_documents < 0:
        raise ValueError("counts must be non-negative")
    total = (
        trained_workers * training_cost_per_worker(params)
        + paid_documents * per_abstract_cost(params)
    )
    return total.quantize(CENT)


def cost_breakdown(
    params: CostParams, trained_workers: int, paid_documents: int
) -> dict[str, str | int]:
    """Flat record for reports: each money field rendered to the cent."""
    training = (trained_workers * training_cost_per_worker(params)).quantize(CENT)
    annotation = (paid_documents * per_abstract_cost(params)).quantize(CENT)
    return {
        "trained_workers": trained_workers,
        "paid_documents": paid_documents,
        "training_cost": str(training),
        "annotation_cost": str(annotation),
        "per_abstract_cost": str(per_abstract_cost(params).quantize(CENT)),
        "total": str((training + annotation).quantize(CENT)),
    }
