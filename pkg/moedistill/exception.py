import logging

logger = logging.getLogger(__name__)


class MoEDistillException(Exception):
    msg_fmt = "An unknown exception occurred."

    def __init__(self, message=None, **kwargs):
        self.kwargs = kwargs

        if not message:
            try:
                message = self.msg_fmt % kwargs
            except Exception:
                # kwargs doesn't match a variable in the message
                # log the issue and the kwargs
                logger.exception('Exception in string format operation')
                for name, value in kwargs.items():
                    logger.error("%s: %s" % (name, value))
                raise

        super(MoEDistillException, self).__init__(message)


class TensorError(MoEDistillException):
    msg_fmt = "An unknown exception occurred in a tensor operation."


class ShapeMismatch(TensorError):
    msg_fmt = "Shape mismatch in '%(op)s': %(shapes)s."


class NonFiniteValue(TensorError):
    msg_fmt = "Non-finite value produced by '%(op)s'."


class GraphError(TensorError):
    msg_fmt = "Invalid use of the computation graph."


class NonScalarLoss(GraphError):
    msg_fmt = "backward() needs a scalar loss, got shape %(shape)s."


class GraphConsumed(GraphError):
    msg_fmt = ("Graph already consumed by a previous backward(); "
               "run the forward pass again.")


class ModelError(MoEDistillException):
    msg_fmt = "An unknown exception occurred in the model."


class InvalidModelConfig(ModelError):
    msg_fmt = "Invalid model configuration: %(reason)s."


class SequenceTooLong(ModelError):
    msg_fmt = "Sequence length %(length)d exceeds max_seq_len %(max_len)d."


class UnknownToken(ModelError):
    msg_fmt = ("Token id %(token_id)d outside vocabulary of size "
               "%(vocab_size)d.")


class ImportanceError(MoEDistillException):
    msg_fmt = "An unknown exception occurred while scoring neurons."


class EmptyDataset(ImportanceError):
    msg_fmt = "Cannot score neurons over an empty dataset."


class AlreadyAdapted(ImportanceError):
    msg_fmt = "Model has no dense FFN layers (already adapted to experts)."


class NeuronOutOfRange(ImportanceError):
    msg_fmt = "Neuron %(j)d out of range for FFN width %(size)d."


class AdaptationError(MoEDistillException):
    msg_fmt = "Cannot adapt FFN into experts: %(reason)s."


class AdapterNotFound(AdaptationError):
    msg_fmt = "Cannot find adaptation strategy '%(adapter)s'."


class UnknownRoutingStrategy(AdaptationError):
    msg_fmt = "Routing strategy '%(strategy)s' not known."


class EmptyVocabulary(AdaptationError):
    msg_fmt = "Cannot build a routing table over an empty vocabulary."


class DistillError(MoEDistillException):
    msg_fmt = "An unknown exception occurred during distillation."


class EmptyLayerSet(DistillError):
    msg_fmt = "No layers selected for transformer-layer distillation."


class NotNormalized(DistillError):
    msg_fmt = ("Prediction rows are not probability vectors "
               "(max deviation %(max_error)g).")


class TrainingDiverged(DistillError):
    msg_fmt = ("Training diverged in phase '%(phase)s' at epoch %(epoch)d, "
               "step %(step)d (ce=%(ce)s, trm=%(trm)s, pred=%(pred)s).")


class DataError(MoEDistillException):
    msg_fmt = "An unknown exception occurred while reading data."


class EmptyCorpus(DataError):
    msg_fmt = "Cannot build a vocabulary from an empty corpus."


class MalformedLine(DataError):
    msg_fmt = "Malformed line %(line)d in '%(path)s'."


class UnknownLabel(DataError):
    msg_fmt = "Label '%(label)s' not in the frozen label set."


class VocabTooSmall(DataError):
    msg_fmt = ("Vocabulary of %(available)d types cannot hold %(needed)d "
               "signal tokens plus background tokens.")


class InvalidRunConfig(MoEDistillException):
    msg_fmt = "Invalid run configuration."


class MissingSection(InvalidRunConfig):
    msg_fmt = "Missing '%(section)s' section in run configuration."


class InvalidChoice(InvalidRunConfig):
    msg_fmt = ("Invalid value '%(value)s' for '%(field)s' "
               "(choose from %(choices)s).")


class PathNotFound(InvalidRunConfig):
    msg_fmt = "Path '%(path)s' does not exist."


class MissingArtifact(MoEDistillException):
    msg_fmt = "Missing %(artifact)s: '%(path)s' not found."


class CheckpointError(MoEDistillException):
    msg_fmt = "An unknown exception occurred with the checkpoint."


class BadMagic(CheckpointError):
    msg_fmt = "Not a checkpoint file (bad magic %(magic)r)."


class UnsupportedVersion(CheckpointError):
    msg_fmt = "Checkpoint format version %(version)d is not supported."


class CorruptCheckpoint(CheckpointError):
    msg_fmt = "Corrupt checkpoint: %(reason)s."


class UnknownChartType(MoEDistillException):
    msg_fmt = "Unknown chart type '%(chart)s'."


class ClassNotFound(MoEDistillException):
    msg_fmt = "Class %(class_name)s could not be found: %(exception)s."
