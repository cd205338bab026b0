"""Check a resonator family against reference frequencies with one capacitance discount.

Every simulated capacitance is multiplied by ``gamma``, bounded by
``(2/pi)^2`` (a distributed half-wave line) and 1 (a lumped element). The best
``gamma`` minimizes the summed squared relative frequency error.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

from .circuit import COMMON, DIFFERENTIAL, build_matrices, eigenmodes, mode_splitting, modes_by_label
from .constants import GAMMA_MAX, GAMMA_MIN
from ._search import golden_section
from .errors import InvalidParameterError

GAMMA_TOL = 1e-5


@dataclass
class ModeRow:
    name: str
    label: str
    predicted: float
    reference: float

    @property
    def rel_error(self):
        return (self.predicted - self.reference) / self.reference


@dataclass
class SplittingRow:
    name: str
    exact: float
    approx: float


@dataclass
class VerificationReport:
    gamma_star: float
    modes: list
    splittings: list = field(default_factory=list)
    objective: float = 0.0
    multiple_minima: bool = False

    @property
    def max_abs_error(self):
        return max(abs(r.rel_error) for r in self.modes)

    @property
    def rms_error(self):
        return math.sqrt(sum(r.rel_error**2 for r in self.modes) / len(self.modes))

    def as_dict(self):
        return {
            "gamma_star": self.gamma_star,
            "objective": self.objective,
            "multiple_minima": self.multiple_minima,
            "summary": {"max_abs_rel_error": self.max_abs_error, "rms_rel_error": self.rms_error},
            "modes": [
                {
                    "name": r.name,
                    "label": r.label,
                    "predicted_ghz": r.predicted / 1e9,
                    "reference_ghz": r.reference / 1e9,
                    "rel_error": r.rel_error,
                }
                for r in self.modes
            ],
            "splittings": [
                {"name": s.name, "exact_mhz": s.exact / 1e6, "approx_mhz": s.approx / 1e6} for s in self.splittings
            ],
        }


def _predict_one(design, gamma, discount_feedline):
    mats = build_matrices(design, include_feedline=True, gamma=gamma, discount_feedline=discount_feedline)
    by = modes_by_label(eigenmodes(mats))
    return design.name, by[COMMON], by[DIFFERENTIAL]


def predict_family(designs, gamma, discount_feedline=True, workers=None):
    """``(name, common_mode, differential_mode)`` for each design."""
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(lambda d: _predict_one(d, gamma, discount_feedline), designs))
    return [_predict_one(d, gamma, discount_feedline) for d in designs]


def _rows(designs, reference, gamma, discount_feedline):
    rows = []
    for name, com, diff in predict_family(designs, gamma, discount_feedline):
        for mode in (com, diff):
            key = (name, mode.label)
            if key in reference:
                rows.append(ModeRow(name, mode.label, mode.frequency, reference[key]))
    return rows


def _objective(designs, reference, gamma, discount_feedline):
    return sum(r.rel_error**2 for r in _rows(designs, reference, gamma, discount_feedline))


def fit_gamma(designs, reference, discount_feedline=True, tol=GAMMA_TOL):
    """Fit the single capacitance discount to ``reference``.

    ``reference`` maps ``(name, label)`` to a frequency in Hz. Golden-section
    search over the admissible interval; ``multiple_minima`` is set when an
    interval endpoint beats the interior minimum found.
    """
    if len(reference) < 2:
        raise InvalidParameterError("need at least two reference frequencies")
    names = {d.name for d in designs}
    unknown = sorted({k for k in reference if k[0] not in names or k[1] not in (COMMON, DIFFERENTIAL)})
    if unknown:
        raise InvalidParameterError(f"reference entries do not match any design mode: {unknown}")

    def obj(g):
        return _objective(designs, reference, g, discount_feedline)

    g_star, f_star = golden_section(obj, GAMMA_MIN, GAMMA_MAX, tol)
    f_lo, f_hi = obj(GAMMA_MIN), obj(GAMMA_MAX)
    multiple = False
    # the search can stall next to an endpoint; accept the endpoint if it is better
    for g_end, f_end in ((GAMMA_MIN, f_lo), (GAMMA_MAX, f_hi)):
        if f_end < f_star:
            if abs(g_end - g_star) > 10 * tol:
                multiple = True
            g_star, f_star = g_end, f_end
    rows = _rows(designs, reference, g_star, discount_feedline)
    report = VerificationReport(g_star, rows, splitting_report(designs, g_star, discount_feedline), f_star, multiple)
    return report


def splitting_report(designs, gamma, discount_feedline=True):
    """Exact and small-coupling common-minus-differential splittings per design."""
    out = []
    for d in designs:
        exact, approx = mode_splitting(d, gamma, include_feedline=True, discount_feedline=discount_feedline)
        out.append(SplittingRow(d.name, exact, approx))
    return out


def reference_from_family(designs, gamma, discount_feedline=True):
    """Model-generated reference map, for self-consistency checks."""
    ref = {}
    for name, com, diff in predict_family(designs, gamma, discount_feedline):
        ref[(name, COMMON)] = com.frequency
        ref[(name, DIFFERENTIAL)] = diff.frequency
    return ref


def predicted_table(designs, gamma, discount_feedline=True):
    """Flat rows (name, label, frequency, impedance) for output."""
    rows = []
    for name, com, diff in predict_family(designs, gamma, discount_feedline):
        for m in (com, diff):
            rows.append((name, m.label, m.frequency, m.impedance if m.impedance is not None else float("nan")))
    return rows

