"""Error metrics used to compare surrogates."""
import numpy as np

from .._normal import norm_cdf, norm_pdf, norm_ppf


def relative_mse(y_true, y_pred):
    """Mean squared error divided by the (population) variance of ``y_true``."""
    y_true = np.asarray(y_true, dtype=float).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=float).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise ValueError("shape mismatch")
    var = float(np.var(y_true))
    if var == 0.0:
        raise ValueError("validation responses have zero variance")
    return float(np.mean((y_true - y_pred) ** 2) / var)


def rmse(model, validation_set):
    """Relative mean squared error of ``model`` on ``(x_val, y_val)``."""
    x_val, y_val = validation_set
    return relative_mse(y_val, model.predict(x_val))


def rrie(beta_hat, beta_ref):
    """Relative reliability-index error ``|beta_hat - beta_ref| / beta_ref``."""
    if not beta_ref > 0:
        raise ValueError("beta_ref must be positive")
    return abs(float(beta_hat) - float(beta_ref)) / float(beta_ref)


def noise_tolerance(beta_ref, cov=1e-3, gamma=0.01):
    """RRIE below which the deviation is explained by sampling noise alone.

    One-sided test at level ``gamma`` with ``sigma_beta ~ c Phi(-b) / phi(b)``.
    """
    if not beta_ref > 0:
        raise ValueError("beta_ref must be positive")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    z = float(norm_ppf(1.0 - gamma))
    return z * cov * float(norm_cdf(-beta_ref)) / (beta_ref * float(norm_pdf(beta_ref)))
