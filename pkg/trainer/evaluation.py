import numpy as np

from data.base import Dataset
from nn.tensor import Tensor, no_grad
from .model import TwinModel


def predict(model: TwinModel, images: np.ndarray, batch_size: int = 1024) -> np.ndarray:
    """Argmax class per sample in eval mode; ties go to the lowest class index."""
    was_training = model.training
    model.eval()
    dtype = model.parameters(trainable_only=False)[0].dtype
    out = []
    try:
        with no_grad():
            for start in range(0, images.shape[0], batch_size):
                chunk = np.asarray(images[start:start + batch_size], dtype=dtype)
                _, logits = model(Tensor(chunk.reshape(chunk.shape[0], -1)))
                out.append(np.argmax(logits.data, axis=1))
    finally:
        model.train(was_training)
    return np.concatenate(out)


def evaluate_accuracy(model: TwinModel, test_set: Dataset, batch_size: int = 1024) -> float:
    if len(test_set) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    return float(np.mean(predict(model, test_set.images, batch_size) == test_set.labels))
