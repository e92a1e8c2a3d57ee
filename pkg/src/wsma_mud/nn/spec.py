"""Layer descriptors, network topologies and shape inference.

Tensors are channels-last: dense activations are ``(batch, features)``,
convolutional activations ``(batch, height, width, channels)``.
"""

from dataclasses import dataclass

from ..errors import DimensionError

FCNN_WIDTHS = {
    2: (201, 351, 263),
    4: (201, 351, 651, 573, 341, 263),
}

# (filters, filter_h, filter_w, repeats) exactly as tabulated for the 2D-CNN
CNN_STACKS = {
    2: ((65, 2, 2, 2), (37, 1, 2, 5)),
    4: ((193, 2, 2, 4), (64, 1, 2, 4)),
}


@dataclass(frozen=True)
class Dense:
    units: int
    kind = "dense"


@dataclass(frozen=True)
class BatchNorm:
    kind = "batch_norm"


@dataclass(frozen=True)
class ReLU:
    kind = "relu"


@dataclass(frozen=True)
class Conv2D:
    """Valid-padding, stride-1 2D convolution spanning all input channels."""

    filters: int
    filter_h: int
    filter_w: int
    stride_h: int = 1
    stride_w: int = 1
    padding: str = "valid"
    kind = "conv2d"

    def __post_init__(self):
        if (self.stride_h, self.stride_w) != (1, 1) or self.padding != "valid":
            raise ValueError("only stride 1 with valid padding is supported")


@dataclass(frozen=True)
class Flatten:
    kind = "flatten"


@dataclass(frozen=True)
class Head:
    activation: str  # "softmax" | "sigmoid"
    kind = "head"

    def __post_init__(self):
        if self.activation not in ("softmax", "sigmoid"):
            raise ValueError(f"unknown head activation {self.activation!r}")


LAYER_TYPES = {cls.kind: cls for cls in (Dense, BatchNorm, ReLU, Conv2D, Flatten, Head)}


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        self.shapes()  # validates

    def shapes(self):
        """Per-sample activation shape before the first layer and after each layer."""
        shape = self.input_shape
        out = [shape]
        for i, layer in enumerate(self.layers):
            if layer.kind == "dense":
                if len(shape) != 1:
                    raise DimensionError(f"layer {i}: dense layer needs a flat input, got {shape}")
                shape = (layer.units,)
            elif layer.kind == "conv2d":
                if len(shape) != 3:
                    raise DimensionError(f"layer {i}: conv2d needs (h, w, c) input, got {shape}")
                h, w, _ = shape
                ho, wo = h - layer.filter_h + 1, w - layer.filter_w + 1
                if ho < 1 or wo < 1:
                    raise DimensionError(
                        f"layer {i}: ({layer.filter_h},{layer.filter_w}) filter does not fit "
                        f"input {shape} under valid padding")
                shape = (ho, wo, layer.filters)
            elif layer.kind == "flatten":
                n = 1
                for d in shape:
                    n *= d
                shape = (n,)
            elif layer.kind == "head":
                if i != len(self.layers) - 1:
                    raise DimensionError("the head must be the last layer")
                if len(shape) != 1:
                    raise DimensionError("the head needs a flat input")
            out.append(shape)
        if not self.layers or self.layers[-1].kind != "head":
            raise DimensionError("network must end with a softmax or sigmoid head")
        return out

    @property
    def output_size(self):
        return self.shapes()[-1][0]

    @property
    def head(self):
        return self.layers[-1].activation

    def to_dict(self):
        layers = []
        for layer in self.layers:
            d = {"kind": layer.kind}
            d.update({k: v for k, v in layer.__dict__.items()})
            layers.append(d)
        return {"input_shape": list(self.input_shape), "layers": layers}

    @classmethod
    def from_dict(cls, d):
        layers = []
        for item in d["layers"]:
            item = dict(item)
            layers.append(LAYER_TYPES[item.pop("kind")](**item))
        return cls(input_shape=tuple(d["input_shape"]), layers=tuple(layers))


def _fc_blocks(widths):
    layers = []
    for w in widths:
        layers += [Dense(w), BatchNorm(), ReLU()]
    return layers


def build_fcnn_spec(K, n_label, input_len, head="softmax", widths=None):
    """Fully-connected classifier: (Dense, BN, ReLU) blocks, then Dense + head.

    Hidden widths default to the published ones for ``K`` in {2, 4}; pass
    ``widths`` for any other configuration.
    """
    if widths is None:
        if K not in FCNN_WIDTHS:
            raise ValueError(f"no default FC-NN widths for K={K}; pass widths explicitly")
        widths = FCNN_WIDTHS[K]
    layers = _fc_blocks(widths) + [Dense(n_label), Head(head)]
    return NetworkSpec(input_shape=(int(input_len),), layers=tuple(layers))


def build_cnn_spec(K, n_label, input_shape, head="softmax", stack="corrected", convs=None):
    """2D-CNN classifier: (Conv2D, BN, ReLU) blocks, Flatten, Dense + head.

    ``stack="tabulated"`` uses the tabulated conv stack verbatim and raises
    :class:`DimensionError` when it does not fit ``input_shape``.
    ``stack="corrected"`` keeps the tabulated filter counts and sizes but
    truncates each group of repeated convs to the number that still fits,
    e.g. two (2,2) and two (1,2) convs for K=2 on a 12x5 input. ``convs``
    overrides both with an explicit list of ``(filters, filter_h, filter_w)``.
    """
    input_shape = tuple(input_shape)
    if len(input_shape) == 2:
        input_shape = input_shape + (1,)
    if convs is None:
        if K not in CNN_STACKS:
            raise ValueError(f"no default 2D-CNN stack for K={K}; pass convs explicitly")
        convs = []
        h, w = input_shape[:2]
        for filters, fh, fw, repeats in CNN_STACKS[K]:
            for _ in range(repeats):
                if stack == "corrected" and (h - fh + 1 < 1 or w - fw + 1 < 1):
                    break
                convs.append((filters, fh, fw))
                h, w = h - fh + 1, w - fw + 1
        if stack not in ("tabulated", "corrected"):
            raise ValueError(f"unknown stack {stack!r}")
    layers = []
    for filters, fh, fw in convs:
        layers += [Conv2D(filters, fh, fw), BatchNorm(), ReLU()]
    layers += [Flatten(), Dense(n_label), Head(head)]
    return NetworkSpec(input_shape=input_shape, layers=tuple(layers))
