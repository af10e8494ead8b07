"""Exception hierarchy for mixreg."""


class MixregError(Exception):
    """Base class for all mixreg errors."""


class SingularGram(MixregError):
    """Gram matrix of concentration vectors is (numerically) singular."""


class SingularDesign(MixregError):
    """Weighted design moment matrix is too ill-conditioned to invert."""


class InvalidParams(MixregError):
    """Parameter vector violates positivity constraints (sigma2 or Sigma)."""


class SingularHessian(MixregError):
    """Log-likelihood Hessian cannot support a Newton step."""


class SingularInfo(MixregError):
    """Empirical information matrix cannot be inverted on the needed block."""


class SingularCovariance(MixregError):
    """Covariance/shape matrix is singular."""


class DegenerateComponent(MixregError):
    """An EM component received (numerically) zero posterior mass."""


class UnsupportedDim(MixregError):
    """Operation only defined for a specific dimension (e.g. d=2 plots)."""
