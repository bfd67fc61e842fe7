"""Counterfactual interventions, dual-pass causal prediction, and the
causal training objectives.

The causal prediction is the factual prediction minus the prediction
obtained after replacing the history-trajectory feature with an imposed
value, with parameters, latent noise, and interaction clues shared
between the two passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import SceneWindow, to_relative
from .errors import ContractError
from .grad import (
    Array,
    clamped_log,
    constant,
    cumsum,
    mean,
    relu,
    reshape,
    sigmoid,
    slice_axis,
    sub,
    sum_,
    matmul,
    add,
    ParameterStore,
    uniform_init,
)
from .models import GaussianParams, STGATModel, STGCNNModel

INTERVENTION_MODES = ("zero", "mean", "random")
PHASES = ("train", "eval")


@dataclass
class InterventionSpec:
    """How to construct the replacement feature for the counterfactual pass.

    `random` draws i.i.d. uniform values in [-half_width, half_width] during
    training and collapses to the distribution's expectation (a zero array)
    at evaluation. `mean` maintains an exponential moving average of batch
    feature means, updated in the train phase and frozen at evaluation.
    """

    mode: str = "zero"
    phase: str = "train"
    half_width: float = 0.1
    mean_decay: float = 0.99
    running_mean: np.ndarray | None = None
    rng: np.random.Generator | None = None

    def validate(self) -> None:
        if self.mode not in INTERVENTION_MODES:
            raise ContractError(f"unknown intervention mode '{self.mode}'")
        if self.phase not in PHASES:
            raise ContractError(f"unknown phase '{self.phase}'")
        if self.half_width <= 0:
            raise ContractError("half width must be positive")
        if not 0.0 < self.mean_decay < 1.0:
            raise ContractError("mean decay must lie in (0, 1)")

    def eval_clone(self) -> "InterventionSpec":
        return replace(self, phase="eval")


def make_intervention(spec: InterventionSpec, factual_feature: np.ndarray) -> np.ndarray:
    """Replacement feature of the same shape as `factual_feature`."""
    spec.validate()
    feature = np.asarray(factual_feature, dtype=np.float64)
    if spec.mode == "zero":
        return np.zeros_like(feature)
    if spec.mode == "random":
        if spec.phase == "eval":
            return np.zeros_like(feature)
        if spec.rng is None:
            raise ContractError("random intervention in train phase needs an rng")
        return spec.rng.uniform(-spec.half_width, spec.half_width, feature.shape)
    # mean mode: per-pedestrian feature averaged over the batch axis
    if spec.phase == "train":
        batch_mean = feature.mean(axis=0)
        if spec.running_mean is None:
            spec.running_mean = batch_mean
        else:
            if spec.running_mean.shape != batch_mean.shape:
                raise ContractError(
                    f"running mean shape {spec.running_mean.shape} does not "
                    f"match feature shape {batch_mean.shape}")
            spec.running_mean = (spec.mean_decay * spec.running_mean
                                 + (1.0 - spec.mean_decay) * batch_mean)
    elif spec.running_mean is None:
        raise ContractError(
            "mean intervention is uninitialized: no train-phase update has run")
    return np.broadcast_to(spec.running_mean, feature.shape).copy()


@dataclass
class PredictionBundle:
    """Factual, counterfactual, and causal predictions of one window.

    All three live in the model's output space (per-step displacements;
    distribution means for the Gaussian head). `causal` is exactly
    `factual - counterfactual`, which `check_subtraction` asserts.
    """

    factual: Array
    counterfactual: Array | None
    causal: Array | None
    anchor: np.ndarray                      # (N, 2) last observed positions
    factual_gaussian: GaussianParams | None = None
    causal_gaussian: GaussianParams | None = None

    @property
    def prediction(self) -> Array:
        """The trainable/evaluable output: causal when present, else factual."""
        return self.causal if self.causal is not None else self.factual

    @property
    def prediction_gaussian(self) -> GaussianParams | None:
        if self.causal is not None:
            return self.causal_gaussian
        return self.factual_gaussian

    def check_subtraction(self, tol: float = 1e-6) -> float:
        if self.counterfactual is None or self.causal is None:
            raise ContractError("bundle has no counterfactual pass")
        gap = np.max(np.abs(self.factual.data - self.counterfactual.data
                            - self.causal.data))
        if gap >= tol:
            raise ContractError(f"subtraction identity violated: max gap {gap}")
        return float(gap)


def factual_predict(model, window: SceneWindow, z: np.ndarray | None = None,
                    blocks: list[int] | None = None) -> PredictionBundle:
    """Single factual pass (the non-causal baseline's prediction)."""
    anchor = window.obs[:, -1].copy()
    if isinstance(model, STGATModel):
        out = model.forward(window, z=z, blocks=blocks)
        return PredictionBundle(out, None, None, anchor)
    gauss = model.forward(window, blocks=blocks)
    return PredictionBundle(gauss.mu, None, None, anchor, factual_gaussian=gauss)


def causal_predict(model, window: SceneWindow, spec: InterventionSpec,
                   z: np.ndarray | None = None,
                   blocks: list[int] | None = None) -> PredictionBundle:
    """Dual-pass prediction with shared parameters and shared latent noise.

    The intervention attaches at the family's documented point: the motion
    encoder's output feature for the recurrent family; the node input
    features (adjacency untouched) for the graph-convolution family.
    """
    anchor = window.obs[:, -1].copy()
    if isinstance(model, STGATModel):
        motion, interaction = model.encode(window, blocks=blocks)
        replacement = make_intervention(spec, motion.data)
        out_f = model.decode(motion, interaction, z, window)
        out_cf = model.decode(constant(replacement), interaction, z, window)
        return PredictionBundle(out_f, out_cf, sub(out_f, out_cf), anchor)
    if isinstance(model, STGCNNModel):
        adjacency = model.adjacency(window, blocks=blocks)
        nodes = model.node_features(window)
        replacement = make_intervention(spec, nodes)
        out_f = model.forward(window, adjacency=adjacency)
        out_cf = model.forward(window, node_override=constant(replacement),
                               adjacency=adjacency)
        if model.config.output_mode == "point":
            return PredictionBundle(out_f, out_cf, sub(out_f, out_cf), anchor)
        causal_mu = sub(out_f.mu, out_cf.mu)
        causal_gauss = GaussianParams(mu=causal_mu, sigma=out_f.sigma, rho=out_f.rho)
        return PredictionBundle(
            out_f.mu, out_cf.mu, causal_mu, anchor,
            factual_gaussian=out_f, causal_gaussian=causal_gauss)
    raise ContractError(f"unsupported model type {type(model).__name__}")


# ---------------------------------------------------------------------------
# objectives

def _decode_grad(displacements: Array, anchor: np.ndarray) -> Array:
    """Differentiable cumulative decode from the last observed positions."""
    return add(cumsum(displacements, axis=1), constant(anchor[:, None, :]))


def l2_loss(y_future: np.ndarray, displacements: Array, anchor: np.ndarray) -> Array:
    """Mean squared Euclidean error of the decoded prediction, averaged
    over pedestrians and steps."""
    y_future = np.asarray(y_future, dtype=np.float64)
    if y_future.shape != displacements.shape:
        raise ContractError(
            f"ground truth {y_future.shape} does not match prediction "
            f"{displacements.shape}")
    decoded = _decode_grad(displacements, anchor)
    diff = sub(decoded, constant(y_future))
    return mean(sum_(diff * diff, axis=2))


def causal_l2_loss(y_future: np.ndarray, bundle: PredictionBundle) -> Array:
    return l2_loss(y_future, bundle.prediction, bundle.anchor)


def future_displacements(y_future: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    """Ground-truth per-step displacements implied by future positions."""
    anchored = np.concatenate([anchor[:, None, :], np.asarray(y_future)], axis=1)
    return to_relative(anchored)


LOG_2PI = math.log(2.0 * math.pi)


def nll_loss(y_future: np.ndarray, gauss: GaussianParams, anchor: np.ndarray) -> Array:
    """Mean negative log-density of the ground truth under the per-step
    bivariate Gaussians (displacement space)."""
    gauss.validate()
    target = future_displacements(y_future, anchor)
    if target.shape != gauss.mu.shape:
        raise ContractError(
            f"ground truth {target.shape} does not match Gaussian means "
            f"{gauss.mu.shape}")
    norm = sub(constant(target), gauss.mu) / gauss.sigma
    dx = slice_axis(norm, 2, 0, 1)
    dy = slice_axis(norm, 2, 1, 2)
    rho = gauss.rho
    one_minus_r2 = sub(constant(np.ones(rho.shape)), rho * rho)
    quad = dx * dx - 2.0 * rho * dx * dy + dy * dy
    log_sx = clamped_log(slice_axis(gauss.sigma, 2, 0, 1))
    log_sy = clamped_log(slice_axis(gauss.sigma, 2, 1, 2))
    nll = (LOG_2PI + log_sx + log_sy + 0.5 * clamped_log(one_minus_r2)
           + quad / (2.0 * one_minus_r2))
    return mean(nll)


def causal_nll_loss(y_future: np.ndarray, bundle: PredictionBundle) -> Array:
    gauss = bundle.prediction_gaussian
    if gauss is None:
        raise ContractError("bundle carries no Gaussian parameters")
    return nll_loss(y_future, gauss, bundle.anchor)


def variety_loss(y_future: np.ndarray, bundles: list[PredictionBundle]) -> Array:
    """Minimum reconstruction loss over noise-conditioned predictions."""
    if not bundles:
        raise ContractError("variety loss requires at least one sample")
    losses = [causal_l2_loss(y_future, b) for b in bundles]
    best = int(np.argmin([ls.data for ls in losses]))
    return losses[best]


# ---------------------------------------------------------------------------
# adversarial objective

class Discriminator:
    """Small feed-forward scorer over a flattened displacement trajectory."""

    def __init__(self, store: ParameterStore, input_dim: int, hidden: int):
        self.store = store
        self.input_dim = input_dim
        self.hidden = hidden

    @classmethod
    def init(cls, rng: np.random.Generator, steps: int = 12, hidden: int = 32) -> "Discriminator":
        input_dim = steps * 2
        store = ParameterStore()
        store.add("disc.w1", uniform_init(rng, (input_dim, hidden), input_dim))
        store.add("disc.b1", np.zeros(hidden))
        store.add("disc.w2", uniform_init(rng, (hidden, 1), hidden))
        store.add("disc.b2", np.zeros(1))
        return cls(store, input_dim, hidden)

    def score(self, flat: Array) -> Array:
        """(N, input_dim) -> (N, 1) in (0, 1)."""
        s = self.store
        h = relu(add(matmul(flat, s["disc.w1"]), s["disc.b1"]))
        return sigmoid(add(matmul(h, s["disc.w2"]), s["disc.b2"]))


def gan_step_losses(disc: Discriminator, y_future: np.ndarray,
                    bundle: PredictionBundle) -> tuple[Array, Array]:
    """(generator loss, discriminator loss) for one window.

    The discriminator sees ground-truth vs predicted displacement
    trajectories; the generator term is the non-saturating form added to
    the reconstruction loss. The two losses are meant for disjoint
    parameter sets: step the predictor on the first, the scorer on the
    second.
    """
    n = bundle.prediction.shape[0]
    real = future_displacements(y_future, bundle.anchor).reshape(n, -1)
    fake_data = bundle.prediction.data.reshape(n, -1)
    d_real = disc.score(constant(real))
    d_fake_detached = disc.score(constant(fake_data))
    disc_loss = sub(constant(0.0), mean(clamped_log(d_real))
                    + mean(clamped_log(1.0 - d_fake_detached)))
    fake = reshape(bundle.prediction, (n, disc.input_dim))
    d_fake = disc.score(fake)
    gen_loss = causal_l2_loss(y_future, bundle) - mean(clamped_log(d_fake))
    return gen_loss, disc_loss
