"""Compare reverse-mode gradients against central finite differences."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import GradientMismatch


@dataclass
class GradCheckReport:
    max_rel_error: float
    checked: int
    worst: tuple = ()
    per_parameter: dict = field(default_factory=dict)

    def __str__(self):
        name, idx = self.worst if self.worst else ("-", ())
        return (f"max_rel_error={self.max_rel_error:.3e} checked={self.checked} "
                f"worst={name}{[int(i) for i in idx]}")


def relative_error(a, b, floor=1e-8):
    return abs(a - b) / max(abs(a), abs(b), floor)


def grad_check(model, x, targets, tolerance=1e-4, coords_per_param=20, h=1e-5,
               seed=0, raise_on_fail=True):
    """Check every parameter of ``model`` on a random subset of coordinates.

    ``model`` must expose ``parameters`` and ``loss(x, targets)`` returning a
    scalar :class:`~smearnet.engine.tensor.Tensor`. All parameters must be
    float64; float32 central differences are too noisy to be meaningful.

    Raises
    ------
    GradientMismatch
        If the largest relative error exceeds ``tolerance`` and
        ``raise_on_fail`` is set.
    """
    params = list(model.parameters)
    if any(p.dtype != np.float64 for p in params):
        raise TypeError("grad_check requires a float64 model")
    rng = np.random.default_rng(seed)

    for p in params:
        p.zero_grad()
    model.loss(x, targets).backward()
    analytic = {p.name: p.grad.copy() for p in params}

    def f():
        return float(model.loss(x, targets).data)

    report = GradCheckReport(max_rel_error=0.0, checked=0)
    for p in params:
        n = p.data.size
        picks = rng.choice(n, size=min(n, coords_per_param), replace=False)
        flat = p.data.reshape(-1)
        worst = 0.0
        for i in picks:
            orig = flat[i]
            flat[i] = orig + h
            up = f()
            flat[i] = orig - h
            down = f()
            flat[i] = orig
            numeric = (up - down) / (2 * h)
            err = relative_error(analytic[p.name].reshape(-1)[i], numeric)
            report.checked += 1
            worst = max(worst, err)
            if err > report.max_rel_error:
                report.max_rel_error = err
                report.worst = (p.name, np.unravel_index(i, p.shape))
        report.per_parameter[p.name] = worst

    if raise_on_fail and report.max_rel_error > tolerance:
        raise GradientMismatch(f"gradient check failed: {report}")
    return report
