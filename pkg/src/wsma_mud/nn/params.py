"""Parameter storage and initialization.

All trainable tensors live in one contiguous float64 buffer; ``params[name]``
returns a view into it. Batch-norm running statistics are kept separately
since they are not trained by gradient descent.
"""

import numpy as np


def parameter_shapes(spec):
    """Ordered ``(name, shape)`` of every trainable tensor."""
    shapes = spec.shapes()
    out = []
    for i, layer in enumerate(spec.layers):
        fan = shapes[i]
        if layer.kind == "dense":
            out += [(f"{i}.W", (fan[0], layer.units)), (f"{i}.b", (layer.units,))]
        elif layer.kind == "conv2d":
            out += [(f"{i}.W", (layer.filter_h, layer.filter_w, fan[-1], layer.filters)),
                    (f"{i}.b", (layer.filters,))]
        elif layer.kind == "batch_norm":
            out += [(f"{i}.gamma", (fan[-1],)), (f"{i}.beta", (fan[-1],))]
    return out


class FlatTensors:
    """Named views into one flat float64 buffer."""

    def __init__(self, shapes, flat=None):
        self.shapes = list(shapes)
        size = sum(int(np.prod(s)) for _, s in self.shapes)
        self.flat = np.zeros(size) if flat is None else flat
        if self.flat.shape != (size,):
            raise ValueError(f"flat buffer has {self.flat.size} entries, expected {size}")
        self.views = {}
        offset = 0
        for name, shape in self.shapes:
            n = int(np.prod(shape))
            self.views[name] = self.flat[offset:offset + n].reshape(shape)
            offset += n

    def __getitem__(self, name):
        return self.views[name]

    def __contains__(self, name):
        return name in self.views

    def keys(self):
        return self.views.keys()

    def items(self):
        return self.views.items()

    def zeros_like(self):
        return FlatTensors(self.shapes)


class NetworkParameters(FlatTensors):
    """Weights, biases, BN scale/shift plus BN running statistics.

    ``version`` is bumped whenever the trainable values change, which lets
    :func:`~wsma_mud.nn.engine.backward` reject caches from older forwards.
    """

    def __init__(self, spec, flat=None, bn_state=None):
        super().__init__(parameter_shapes(spec), flat)
        self.bn_state = {}
        shapes = spec.shapes()
        for i, layer in enumerate(spec.layers):
            if layer.kind == "batch_norm":
                c = shapes[i][-1]
                self.bn_state[f"{i}.running_mean"] = np.zeros(c)
                self.bn_state[f"{i}.running_var"] = np.ones(c)
        if bn_state is not None:
            for k, v in bn_state.items():
                self.bn_state[k][...] = v
        self.version = 0

    def copy(self, spec):
        return NetworkParameters(spec, self.flat.copy(), {k: v.copy() for k, v in self.bn_state.items()})


def init_parameters(spec, stream):
    """He-normal weights (variance 2/fan_in), zero biases, unit BN scale."""
    params = NetworkParameters(spec)
    for name, shape in params.shapes:
        if name.endswith(".W"):
            fan_in = int(np.prod(shape[:-1]))
            params[name][...] = stream.rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
        elif name.endswith(".gamma"):
            params[name][...] = 1.0
    return params
