# src/selection/interpretation.py
from typing import TYPE_CHECKING, Optional

from src.selection.model import InterpretationThresholds, Verdict

if TYPE_CHECKING:
    from src.selection.model import SelectionReport

MESSAGES = {
    "flexible": "Гибкое семейство (нейросетевое) перспективно: ослабление границ дерева улучшает точность.",
    "rigid": "Жёсткое семейство (деревья) достаточно: ослабление границ дерева не даёт выигрыша.",
    "equivalent": "Семейства почти равноценны: стоит учитывать интерпретируемость.",
}


def interpret(report: "SelectionReport",
              thresholds: Optional[InterpretationThresholds] = None) -> Verdict:
    """
    Вердикт по γ*, флагу улучшения и согласию Ā[γ*].

    - улучшение и γ* < high_gamma -> flexible (с примечанием, если согласие высокое)
    - улучшение и γ* >= high_gamma -> equivalent
    - нет улучшения и Ā[γ*] >= high_agreement -> equivalent
    - иначе -> rigid
    """
    thresholds = thresholds or report.thresholds
    high_gamma = report.gamma_star >= thresholds.high_gamma
    high_agreement = report.agreement_at_star >= thresholds.high_agreement

    note = None
    if report.improvement and not high_gamma:
        kind = "flexible"
        if high_agreement:
            note = (
                f"Согласие с деревом при γ*={report.gamma_star:g} всё ещё высокое "
                f"(κ={report.agreement_at_star:.3f}): лучшая NDT остаётся близкой к дереву."
            )
    elif report.improvement or high_agreement:
        kind = "equivalent"
    else:
        kind = "rigid"

    return Verdict(
        kind=kind,
        message=MESSAGES[kind],
        note=note,
        gamma_star=report.gamma_star,
        improvement=report.improvement,
        agreement_at_star=report.agreement_at_star,
        performance_diff=report.performance_diff,
        thresholds=thresholds,
    )
