"""Layer-wise distillation losses."""

import dataclasses

import numpy as np

from moedistill.autograd import functional as F
from moedistill.autograd import tensor
from moedistill import exception

ALL = "all"
LAST = "last"
SKIP = "skip"
LAYER_SETS = (ALL, LAST, SKIP)

NORMALIZATION_TOLERANCE = 1e-6


def select_layers(layer_set, layers):
    """Indices of the hidden states X^0..X^layers that are matched."""
    if layer_set == ALL:
        return list(range(layers + 1))
    if layer_set == LAST:
        return [layers]
    if layer_set == SKIP:
        return list(range(0, layers + 1, 2))
    raise exception.InvalidChoice(field="layer_set", value=layer_set,
                                  choices=", ".join(LAYER_SETS))


def loss_trm(student_layers, teacher_layers, mask, layer_set=ALL):
    """Sum over the selected layers of the masked hidden-state MSE."""
    student = getattr(student_layers, "hidden_states", student_layers)
    teacher = getattr(teacher_layers, "hidden_states", teacher_layers)
    if len(student) != len(teacher):
        raise exception.ShapeMismatch(op="loss_trm",
                                      shapes=[len(student), len(teacher)])
    selected = select_layers(layer_set, len(student) - 1)
    if not selected:
        raise exception.EmptyLayerSet()
    total = None
    for layer in selected:
        term = F.masked_mse(student[layer], tensor.as_tensor(
            teacher[layer]).detach(), mask)
        total = term if total is None else total + term
    return total


def _check_normalized(p):
    error = float(np.abs(p.data.sum(axis=-1) - 1.0).max())
    if error > NORMALIZATION_TOLERANCE:
        raise exception.NotNormalized(max_error=error)


def loss_pred(p_student, p_teacher):
    """Symmetric KL, ``(KL(p || p_tea) + KL(p_tea || p)) / 2``."""
    p_student = tensor.as_tensor(p_student)
    p_teacher = tensor.as_tensor(p_teacher)
    _check_normalized(p_student)
    _check_normalized(p_teacher)
    return (F.kl_div(p_student, p_teacher) +
            F.kl_div(p_teacher, p_student)) * 0.5


def loss_distill(trm, pred):
    return trm + pred


@dataclasses.dataclass
class DistillBatchLoss(object):
    """Losses of one batch; ``total`` keeps the graph for backward."""

    ce: float
    trm: float
    pred: float
    total: tensor.Tensor

    @property
    def value(self):
        return self.total.item()

    def record(self):
        return {"ce": self.ce, "trm": self.trm, "pred": self.pred,
                "total": self.value}


def batch_loss(student_logits, student_layers, teacher_logits,
               teacher_layers, labels, mask, lambda_distill=1.0,
               layer_set=ALL):
    """``CE + lambda * (L_trm + L_pred)``.

    With ``lambda_distill == 0`` the distillation terms are still reported
    but stay out of the graph, so ``total`` is the cross-entropy node.
    """
    ce = F.cross_entropy(student_logits, labels)

    def _distill():
        trm = loss_trm(student_layers, teacher_layers, mask, layer_set)
        pred = loss_pred(F.softmax(student_logits),
                         F.softmax(tensor.as_tensor(teacher_logits).detach()))
        return trm, pred

    if not lambda_distill:
        with tensor.no_grad():
            trm, pred = _distill()
        return DistillBatchLoss(ce.item(), trm.item(), pred.item(), ce)
    trm, pred = _distill()
    total = ce + loss_distill(trm, pred) * lambda_distill
    return DistillBatchLoss(ce.item(), trm.item(), pred.item(), total)
