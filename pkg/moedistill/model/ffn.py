from moedistill.autograd import functional as F
from moedistill.autograd.tensor import as_tensor
from moedistill import exception


def ffn_forward(a, w1, b1, w2, b2):
    """Two-layer feed-forward network: GELU(A W1 + b1) W2 + b2.

    Residual and layer norm are applied by the caller.
    """
    a, w1, b1, w2, b2 = [as_tensor(t) for t in (a, w1, b1, w2, b2)]
    d, hidden = w1.shape
    if (a.shape[-1] != d or b1.shape != (hidden,) or
            w2.shape != (hidden, d) or b2.shape != (d,)):
        raise exception.ShapeMismatch(
            op="ffn", shapes=[a.shape, w1.shape, b1.shape, w2.shape, b2.shape])
    h = F.gelu(a @ w1 + b1)
    return h @ w2 + b2
