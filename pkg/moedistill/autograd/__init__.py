from moedistill.autograd.tensor import backward  # noqa
from moedistill.autograd.tensor import no_grad  # noqa
from moedistill.autograd.tensor import Tensor  # noqa
