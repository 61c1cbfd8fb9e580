from enum import Enum

class SurfaceKind(Enum):
    TRIANGLE = "triangle"  # Triangle delimited by the street borders
    CIRCUMCIRCLE = "circumcircle"  # Circumcircle of that triangle

class CrossingDirection(Enum):
    LEFT_RIGHT = "left-right"
    TOP_BOTTOM = "top-bottom"
    BOTH = "both-required"

class AdoptionCurve(Enum):
    LOGISTIC_SATURATING = "logistic-saturating"  # Early adopters then slow growth
    LINEAR_RAMP = "linear-ramp"

class RemainderPolicy(Enum):
    FINAL_MONTH = "final-month"  # Remainder bought in the last month of a phase
    FLOOR = "floor"  # Monthly floor only, remainder never bought

class OpexStart(Enum):
    PURCHASE_MONTH = "purchase-month"  # OPEX on end-of-month stock
    NEXT_MONTH = "next-month"  # OPEX on previous month's stock
