"""
A small convolutional binary classifier with hand-written forward and
backward passes.

The network is:

    conv3x3(3 -> width) -> ReLU -> avg-pool(pool) -> conv3x3(width -> width)
        -> ReLU -> global average pool -> dense(width -> 2)

Inputs are shifted by `INPUT_CENTER` first, so mid-gray is zero. Both
convolutions are zero-padded so that they preserve spatial size. Parameters
are stored as 32-bit floats; all computation happens in 64 bits.
"""


from typing import Callable, Dict, Tuple, Union

import numpy as np
from pydantic import validator
from pydantic.dataclasses import dataclass

from ..image import NUM_CHANNELS, Image
from ..labels import Label

_KERNEL = 3

INPUT_CENTER = 0.5

PARAMETER_NAMES = (
    "conv1_w",
    "conv1_b",
    "conv2_w",
    "conv2_b",
    "dense_w",
    "dense_b",
)
"""
Parameter names, in serialization order.
"""

Parameters = Dict[str, np.ndarray]


class ModelInputError(ValueError):
    """
    Raised when an input does not match what the model expects.
    """


@dataclass(frozen=True)
class Architecture:
    """
    Describes a member of the classifier family.

    Attributes:
        width: Number of channels in both convolutional layers.
        pool: Side length of the average pooling window.

    """

    width: int = 8
    pool: int = 2

    @validator("width", "pool")
    def is_positive(cls, value: int) -> int:
        assert value >= 1, "Architecture dimensions must be positive."
        return value

    def parameter_shapes(self) -> Dict[str, Tuple[int, ...]]:
        """
        Returns:
            The shape of every parameter array, keyed by name.

        """
        return {
            "conv1_w": (_KERNEL, _KERNEL, NUM_CHANNELS, self.width),
            "conv1_b": (self.width,),
            "conv2_w": (_KERNEL, _KERNEL, self.width, self.width),
            "conv2_b": (self.width,),
            "dense_w": (self.width, len(Label)),
            "dense_b": (len(Label),),
        }


def _conv_forward(
    x: np.ndarray, weights: np.ndarray, bias: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Zero-padded 3x3 convolution over a batch.

    Args:
        x: The `(N, H, W, C_in)` input.
        weights: The `(3, 3, C_in, C_out)` kernel.
        bias: The `(C_out,)` bias.

    Returns:
        The `(N, H, W, C_out)` output, and the extracted patches, which the
        backward pass needs.

    """
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    patches = np.lib.stride_tricks.sliding_window_view(
        padded, (_KERNEL, _KERNEL), axis=(1, 2)
    )
    out = np.einsum("nhwcij,ijco->nhwo", patches, weights) + bias
    return out, patches


def _conv_backward(
    d_out: np.ndarray, patches: np.ndarray, weights: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Backward pass of `_conv_forward`.

    Returns:
        Gradients with respect to the input, the weights, and the bias.

    """
    d_weights = np.einsum("nhwcij,nhwo->ijco", patches, d_out)
    d_bias = d_out.sum(axis=(0, 1, 2))

    num, height, width, _ = d_out.shape
    d_padded = np.zeros((num, height + 2, width + 2, weights.shape[2]))
    for i in range(_KERNEL):
        for j in range(_KERNEL):
            d_padded[:, i : i + height, j : j + width, :] += np.einsum(
                "nhwo,co->nhwc", d_out, weights[i, j]
            )
    return d_padded[:, 1:-1, 1:-1, :], d_weights, d_bias


def _pool_forward(x: np.ndarray, pool: int) -> np.ndarray:
    num, height, width, channels = x.shape
    out_h, out_w = height // pool, width // pool
    cropped = x[:, : out_h * pool, : out_w * pool, :]
    return cropped.reshape(num, out_h, pool, out_w, pool, channels).mean(
        axis=(2, 4)
    )


def _pool_backward(
    d_out: np.ndarray, pool: int, input_shape: Tuple[int, ...]
) -> np.ndarray:
    spread = np.repeat(np.repeat(d_out, pool, axis=1), pool, axis=2)
    d_input = np.zeros(input_shape)
    d_input[:, : spread.shape[1], : spread.shape[2], :] = spread / (
        pool * pool
    )
    return d_input


class Classifier:
    """
    A binary Fake/Real classifier. Instances are immutable; training
    produces new instances.
    """

    def __init__(self, architecture: Architecture, parameters: Parameters):
        """
        Args:
            architecture: The architecture.
            parameters: The parameter arrays, keyed by name. They are
                converted to (and stored as) 32-bit floats.

        """
        expected = architecture.parameter_shapes()
        if set(parameters) != set(expected):
            raise ModelInputError(
                f"Expected parameters {sorted(expected)}, "
                f"got {sorted(parameters)}."
            )

        stored = {}
        for name, shape in expected.items():
            array = np.asarray(parameters[name], dtype=np.float32)
            if array.shape != shape:
                raise ModelInputError(
                    f"Parameter {name} should have shape {shape}, "
                    f"got {array.shape}."
                )
            if not np.all(np.isfinite(array)):
                raise ModelInputError(f"Parameter {name} is not finite.")
            array = array.copy()
            array.flags.writeable = False
            stored[name] = array

        self.__architecture = architecture
        self.__parameters = stored
        self.__compute = {k: v.astype(np.float64) for k, v in stored.items()}

    @classmethod
    def zeros(
        cls, architecture: Architecture = Architecture()
    ) -> "Classifier":
        """
        Creates a classifier whose parameters are all zero.

        Args:
            architecture: The architecture to use.

        Returns:
            The classifier.

        """
        return cls(
            architecture,
            {
                name: np.zeros(shape)
                for name, shape in architecture.parameter_shapes().items()
            },
        )

    @classmethod
    def initialize(
        cls, architecture: Architecture, rng: np.random.Generator
    ) -> "Classifier":
        """
        Creates a classifier with He-initialized weights and zero biases.

        Args:
            architecture: The architecture to use.
            rng: The random source.

        Returns:
            The classifier.

        """
        parameters = {}
        for name, shape in architecture.parameter_shapes().items():
            if name.endswith("_b"):
                parameters[name] = np.zeros(shape)
            else:
                fan_in = int(np.prod(shape[:-1]))
                parameters[name] = rng.normal(
                    scale=np.sqrt(2.0 / fan_in), size=shape
                )
        return cls(architecture, parameters)

    @property
    def architecture(self) -> Architecture:
        return self.__architecture

    @property
    def parameters(self) -> Parameters:
        """
        Returns:
            Read-only views of the stored 32-bit parameters.

        """
        return dict(self.__parameters)

    def __check_input(self, x: np.ndarray) -> np.ndarray:
        if x.ndim == 3:
            x = x[np.newaxis]
        if x.ndim != 4 or x.shape[3] != NUM_CHANNELS:
            raise ModelInputError(
                f"Expected (H, W, {NUM_CHANNELS}) images, got {x.shape}."
            )
        if x.shape[1] < self.__architecture.pool or (
            x.shape[2] < self.__architecture.pool
        ):
            raise ModelInputError(
                f"Images of shape {x.shape[1:]} are smaller than the "
                f"pooling window {self.__architecture.pool}."
            )
        return x.astype(np.float64, copy=False)

    def __forward(self, x: np.ndarray) -> Tuple[np.ndarray, Dict]:
        """
        Runs the forward pass and keeps everything the backward pass needs.

        Args:
            x: A `(N, H, W, 3)` batch.

        Returns:
            The `(N, 2)` logits and the cache.

        """
        params = self.__compute
        pool = self.__architecture.pool

        conv1, patches1 = _conv_forward(
            x - INPUT_CENTER, params["conv1_w"], params["conv1_b"]
        )
        relu1 = np.maximum(conv1, 0.0)
        pooled = _pool_forward(relu1, pool)
        conv2, patches2 = _conv_forward(
            pooled, params["conv2_w"], params["conv2_b"]
        )
        relu2 = np.maximum(conv2, 0.0)
        features = relu2.mean(axis=(1, 2))
        logits = features @ params["dense_w"] + params["dense_b"]

        cache = dict(
            input_shape=x.shape,
            patches1=patches1,
            conv1=conv1,
            relu1_shape=relu1.shape,
            patches2=patches2,
            conv2=conv2,
            features=features,
        )
        return logits, cache

    def __backward(
        self, d_logits: np.ndarray, cache: Dict
    ) -> Tuple[np.ndarray, Parameters]:
        """
        Backpropagates gradients with respect to the logits.

        Args:
            d_logits: The `(N, 2)` upstream gradient.
            cache: The cache from `__forward`.

        Returns:
            The gradient with respect to the input batch, and with respect
            to every parameter.

        """
        params = self.__compute
        pool = self.__architecture.pool

        grads = {
            "dense_w": cache["features"].T @ d_logits,
            "dense_b": d_logits.sum(axis=0),
        }
        d_features = d_logits @ params["dense_w"].T

        conv2 = cache["conv2"]
        spatial = conv2.shape[1] * conv2.shape[2]
        d_relu2 = np.broadcast_to(
            d_features[:, np.newaxis, np.newaxis, :] / spatial, conv2.shape
        )
        d_conv2 = d_relu2 * (conv2 > 0.0)
        d_pooled, grads["conv2_w"], grads["conv2_b"] = _conv_backward(
            d_conv2, cache["patches2"], params["conv2_w"]
        )

        d_relu1 = _pool_backward(d_pooled, pool, cache["relu1_shape"])
        d_conv1 = d_relu1 * (cache["conv1"] > 0.0)
        d_input, grads["conv1_w"], grads["conv1_b"] = _conv_backward(
            d_conv1, cache["patches1"], params["conv1_w"]
        )
        return d_input, grads

    def forward(self, x: np.ndarray) -> np.ndarray:
        """
        Computes logits.

        Args:
            x: A single `(H, W, 3)` image or a `(N, H, W, 3)` batch.

        Returns:
            A `(2,)` logit pair for a single image, or `(N, 2)` for a batch.

        """
        batch = self.__check_input(x)
        logits, _ = self.__forward(batch)
        return logits[0] if x.ndim == 3 else logits

    def backward(
        self,
        x: np.ndarray,
        d_logits: Union[
            np.ndarray, Callable[[np.ndarray], np.ndarray], None
        ] = None,
    ) -> Tuple[np.ndarray, np.ndarray, Parameters]:
        """
        Runs a forward pass and backpropagates a logit gradient.

        Args:
            x: A single image or a batch.
            d_logits: Gradient of some scalar with respect to the logits,
                with the same leading shape as the logits, or a function
                computing it from the logits. If it is None, the gradients
                are zero.

        Returns:
            The logits, the gradient with respect to `x`, and the gradients
            with respect to every parameter.

        """
        batch = self.__check_input(x)
        logits, cache = self.__forward(batch)
        if d_logits is None:
            d_logits = np.zeros_like(logits)
        elif callable(d_logits):
            d_logits = d_logits(logits[0] if x.ndim == 3 else logits)
        d_input, grads = self.__backward(
            np.reshape(d_logits, logits.shape), cache
        )

        if x.ndim == 3:
            return logits[0], d_input[0], grads
        return logits, d_input, grads


def predict(model: Classifier, x: Image) -> Label:
    """
    Args:
        model: The classifier.
        x: The image.

    Returns:
        The predicted label. Ties go to `FAKE`.

    """
    logits = model.forward(x)
    return Label(int(np.argmax(logits)))
