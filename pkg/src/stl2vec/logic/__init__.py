from .ast import (TRUE, Always, And, Eventually, Formula, Interval,
                  LinearPredicate, Not, Or, Pred, TrueFormula, Until,
                  always, eventually, formula_dim, horizon, pred, pretty,
                  rect_region, until)
from .parse import ParseError, parse
from .semantics import (TRUE_ROBUSTNESS, HorizonError, Trajectory, as_states,
                        robustness, robustness_signal, satisfies)

__all__ = [
    "TRUE", "Always", "And", "Eventually", "Formula", "Interval",
    "LinearPredicate", "Not", "Or", "Pred", "TrueFormula", "Until",
    "always", "eventually", "formula_dim", "horizon", "pred", "pretty",
    "rect_region", "until", "ParseError", "parse", "TRUE_ROBUSTNESS",
    "HorizonError", "Trajectory", "as_states", "robustness",
    "robustness_signal", "satisfies",
]
