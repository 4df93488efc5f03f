"""From-scratch numerical kernel: dense and LSTM layers, exact gradients, Adam, MSE."""

from holab.nn.layers import DenseLayer, LstmLayer, lstm_cell_step, lstm_forward
from holab.nn.losses import mse, mse_grad
from holab.nn.optim import Adam, adam_step
from holab.nn.gradcheck import numeric_gradients

__all__ = [
    "DenseLayer",
    "LstmLayer",
    "lstm_cell_step",
    "lstm_forward",
    "mse",
    "mse_grad",
    "Adam",
    "adam_step",
    "numeric_gradients",
]
