"""Denoising-autoencoder pre-training with randomized stochastic gradients."""
