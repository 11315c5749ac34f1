import numpy as np

from moedistill.autograd import tensor


def finite_diff_check(f, params, step=1e-6, samples=None, seed=0,
                      floor=1e-12):
    """Compare analytic gradients of ``f()`` with central differences.

    `f` takes no arguments and returns a scalar Tensor built from `params`
    (it is re-evaluated after every perturbation, so it must be
    deterministic).  Returns the maximum over the checked coordinates of
    ``|analytic - numeric| / max(|analytic|, floor)``.  With `samples` set,
    that many coordinates are drawn uniformly over all parameters.
    """
    loss = f()
    tensor.backward(loss, leaves=params)
    analytic = [p.grad.copy() for p in params]

    coords = [(i, j) for i, p in enumerate(params) for j in range(p.size)]
    if samples is not None and samples < len(coords):
        rng = np.random.default_rng(seed)
        picked = rng.choice(len(coords), size=samples, replace=False)
        coords = [coords[k] for k in sorted(picked)]

    worst = 0.0
    for i, j in coords:
        flat = params[i].data.flat
        original = flat[j]
        flat[j] = original + step
        with tensor.no_grad():
            plus = f().item()
        flat[j] = original - step
        with tensor.no_grad():
            minus = f().item()
        flat[j] = original
        numeric = (plus - minus) / (2.0 * step)
        grad = analytic[i].reshape(-1)[j]
        error = abs(grad - numeric) / max(abs(grad), floor)
        worst = max(worst, error)
    return worst
