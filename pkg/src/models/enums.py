from enum import Enum


class KernelFamily(str, Enum):
    ANISOTROPIC_GEOMETRIC = "anisotropic_geometric"
    TENSORIZED = "tensorized"


class BasisKind(str, Enum):
    NONE = "none"  # Simple Kriging, p = 0
    CONSTANT = "constant"  # Ordinary Kriging, p = 1
    AFFINE = "affine"  # p = r + 1
    CUSTOM = "custom"


class Parametrization(str, Enum):
    THETA = "theta"  # correlation lengths
    MU = "mu"  # inverse correlation lengths


class ExistenceVerdict(str, Enum):
    GUARANTEED_ALMOST_SURELY = "guaranteed_almost_surely"
    NOT_GUARANTEED = "not_guaranteed"


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_NEEDED = "not_needed"


class ChecklistRule(str, Enum):
    GENERAL = "nu>1, n>r+p+2, assumptions 1 and 2"
    ORDINARY_ROUGH = "constant basis, 1<nu<2, n>r+3"
    ORDINARY_SMOOTH = "constant basis, 2<nu<3, n>(r+1)(r/2+2)"
    DEGREE_ONE = "degree<=1 basis, 2<nu<3, n>r(r+1)/2+2r+3"
    NO_CONSTANT_ROUGH = "0<nu<1, n>p+1, no constant in span(H), assumption 1"


class Method(str, Enum):
    TRUE = "true"
    MLE = "mle"
    MAP = "map"
    FPD = "fpd"


class GeneratorKernel(str, Enum):
    MATERN = "matern"
    SQUARED_EXPONENTIAL = "squared_exponential"


class BenchFunction(str, Enum):
    ACKLEY = "ackley"
    RASTRIGIN = "rastrigin"


class BenchScale(str, Enum):
    DESK = "desk"  # 50 designs x 200 test points
    FULL = "full"  # 500 designs x 1000 test points
