"""B-spline Kolmogorov-Arnold layers and TSMixer-style forecasters in numpy."""

from .kan import KanLayerParams, TwoDepthKan, kan_init, kan_layer_backward, kan_layer_forward
from .mixer import ForecastModel, ModelConfig
from .spline import KnotGrid, basis_derivatives, basis_values, make_grid
from .training import TrainConfig, TrainHistory, WindowedDataset, evaluate, gradient_check, train

__version__ = "0.1.0"
