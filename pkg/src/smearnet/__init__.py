"""Blood-smear leukemia classification from preprocessing to metrics.

Submodules
----------
imageio     decode/encode PNG, BMP and PPM; dataset scanning; exact dedup
preprocess  nearest resize, 3x3 median and sharpen filters, tensor conversion
augment     seeded flips, shifts, zooms and shears with nearest sampling
engine      numpy tensors with reverse-mode gradients, optimizers, grad checks
models      the basic CNN, AlexNet-with-sigmoid and Thanh-style networks
trainkit    splitting, the training loop and checkpoints
evalkit     confusion matrix, precision/recall/F1/support, curve export
"""

__version__ = "0.1.0"
