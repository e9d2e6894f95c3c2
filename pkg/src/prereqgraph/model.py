"""Encoders (GCN / relational GCN, optional variational heads), decoders
(inner product, bilinear) and the training losses.

The encoder is two layers: relu after the first, no activation on the
second. Variational models share the first layer and run two parallel
second layers for the posterior mean and log standard deviation; the
latent sample uses the reparameterization trick. The bilinear decoder
scores an ordered pair as sigmoid(z_i . (R z_j)) with a full trainable R,
which is what carries prerequisite direction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from prereqgraph import autodiff as ad
from prereqgraph.autodiff import Tensor
from prereqgraph.errors import FormatError, ValidationError

SCORE_EPS = 1e-7


@dataclass(frozen=True)
class EncoderConfig:
    variant: str = "rgcn"  # "gcn" | "rgcn"
    variational: bool = True
    hidden_dim: int = 32
    latent_dim: int = 16
    num_relations: int = 2
    diagonal_decoder: bool = False

    def __post_init__(self):
        if self.variant not in ("gcn", "rgcn"):
            raise ValidationError(f"unknown encoder variant {self.variant!r}")
        if self.hidden_dim < 1 or self.latent_dim < 1:
            raise ValidationError("hidden_dim and latent_dim must be >= 1")
        if not 1 <= self.num_relations <= 3:
            raise ValidationError("num_relations must be in 1..3")


@dataclass
class LatentState:
    z: Tensor
    mu: Tensor | None = None
    log_sigma: Tensor | None = None


@dataclass
class ModelState:
    config: EncoderConfig
    in_dim: int
    params: dict[str, Tensor] = field(default_factory=dict)

    def parameters(self) -> list[Tensor]:
        return [self.params[name] for name in sorted(self.params)]


def init_model(config: EncoderConfig, in_dim: int, rng: np.random.Generator) -> ModelState:
    """Glorot-uniform initialization of every trainable matrix."""
    h, d = config.hidden_dim, config.latent_dim
    params: dict[str, Tensor] = {}

    def layer(prefix: str, rows: int, cols: int):
        if config.variant == "gcn":
            params[f"{prefix}.w"] = ad.glorot(rows, cols, rng)
        else:
            for r in range(config.num_relations):
                params[f"{prefix}.w_rel{r}"] = ad.glorot(rows, cols, rng)
            params[f"{prefix}.w_self"] = ad.glorot(rows, cols, rng)

    layer("layer0", in_dim, h)
    if config.variational:
        layer("layer1_mu", h, d)
        layer("layer1_sigma", h, d)
    else:
        layer("layer1", h, d)
    if config.diagonal_decoder:
        params["decoder.r_diag"] = Tensor(rng.standard_normal((1, d)), requires_grad=True)
    else:
        params["decoder.r"] = ad.glorot(d, d, rng)
    return ModelState(config, in_dim, params)


def gcn_layer(adj: np.ndarray, h: Tensor, w: Tensor, activate: bool) -> Tensor:
    """One propagation step: relu(A h w), or A h w on the output layer."""
    out = ad.matmul(ad.constant(adj), ad.matmul(h, w))
    return ad.relu(out) if activate else out


def rgcn_layer(adjs: list[np.ndarray], h: Tensor, w_rel: list[Tensor],
               w_self: Tensor, activate: bool) -> Tensor:
    """Relational propagation: sigma((1/M) sum_rel (A_rel h W_rel + h W_0))
    with M = number of weight matrices in the layer (relations + self)."""
    if len(adjs) != len(w_rel):
        raise ValidationError(
            f"{len(adjs)} adjacencies but {len(w_rel)} relation weights"
        )
    m = len(w_rel) + 1
    total = None
    for adj, w in zip(adjs, w_rel):
        term = ad.add(
            ad.matmul(ad.constant(adj), ad.matmul(h, w)), ad.matmul(h, w_self)
        )
        total = term if total is None else ad.add(total, term)
    out = ad.scalar_mul(total, 1.0 / m)
    return ad.relu(out) if activate else out


def _layer(state: ModelState, prefix: str, adjs: list[np.ndarray], h: Tensor,
           activate: bool) -> Tensor:
    if state.config.variant == "gcn":
        if len(adjs) != 1:
            raise ValidationError("gcn variant expects a single (union) adjacency")
        return gcn_layer(adjs[0], h, state.params[f"{prefix}.w"], activate)
    w_rel = [
        state.params[f"{prefix}.w_rel{r}"] for r in range(state.config.num_relations)
    ]
    return rgcn_layer(adjs, h, w_rel, state.params[f"{prefix}.w_self"], activate)


def encode(adjs: list[np.ndarray], x: np.ndarray, state: ModelState, seed: int,
           log_sigma_cap: float | None = None) -> LatentState:
    """Two-layer encode of node features into the latent state.

    Deterministic models return z only. Variational models share the
    first layer, produce mu and log_sigma from parallel second layers and
    sample z via the reparameterization trick under the seed.
    log_sigma_cap clamps log_sigma from above (cap <= -40 recovers the
    noise-free deterministic forward).
    """
    if x.shape[1] != state.in_dim:
        raise ValidationError(f"feature dim {x.shape[1]} != model in_dim {state.in_dim}")
    h1 = _layer(state, "layer0", adjs, ad.constant(x), activate=True)
    if not state.config.variational:
        return LatentState(z=_layer(state, "layer1", adjs, h1, activate=False))
    mu = _layer(state, "layer1_mu", adjs, h1, activate=False)
    log_sigma = _layer(state, "layer1_sigma", adjs, h1, activate=False)
    if log_sigma_cap is not None:
        log_sigma = ad.clip(log_sigma, -1e30, log_sigma_cap)
    z = ad.gaussian_sample(mu, log_sigma, seed)
    return LatentState(z=z, mu=mu, log_sigma=log_sigma)


def decode_inner_product(z: Tensor) -> Tensor:
    """sigmoid(z z^T); symmetric by construction."""
    return ad.sigmoid(ad.matmul(z, ad.transpose(z)))


def decode_bilinear(z: Tensor, state: ModelState) -> Tensor:
    """sigmoid(z R z^T): score(i, j) = sigmoid(z_i . (R z_j)).

    With a non-symmetric R, score(i, j) != score(j, i) in general; the
    diagonal-decoder ablation constrains R to a diagonal (and therefore
    symmetric) form.
    """
    if state.config.diagonal_decoder:
        scaled = ad.scale_cols(z, state.params["decoder.r_diag"])
        return ad.sigmoid(ad.matmul(scaled, ad.transpose(z)))
    r = state.params["decoder.r"]
    if r.shape != (z.shape[1], z.shape[1]):
        raise ValidationError(f"decoder R shape {r.shape} != latent dim {z.shape[1]}")
    return ad.sigmoid(ad.matmul(ad.matmul(z, r), ad.transpose(z)))


def kl_loss(mu: Tensor, log_sigma: Tensor) -> Tensor:
    """KL(N(mu, diag(sigma^2)) || N(0, I)) summed over nodes and
    dimensions, scaled by 1/N (node count)."""
    n = mu.shape[0]
    terms = ad.add(
        ad.add(ad.exp(ad.scalar_mul(log_sigma, 2.0)), ad.elementwise_mul(mu, mu)),
        ad.scalar_mul(log_sigma, -2.0),
    )
    terms = ad.add_scalar(terms, -1.0)
    return ad.scalar_mul(ad.tensor_sum(terms), 0.5 / n)


def reconstruction_loss(scores: Tensor, pos_pairs, neg_pairs) -> Tensor:
    """Mean binary cross-entropy: positive pairs labeled 1, sampled
    negative pairs labeled 0; scores clamped into (0, 1)."""
    pos_pairs = np.asarray(pos_pairs, dtype=np.intp)
    neg_pairs = np.asarray(neg_pairs, dtype=np.intp)
    if pos_pairs.size == 0 or neg_pairs.size == 0:
        raise ValidationError("reconstruction_loss needs non-empty pair lists")
    s_pos = ad.clip(
        ad.gather_pairs(scores, pos_pairs[:, 0], pos_pairs[:, 1]), SCORE_EPS, 1.0 - SCORE_EPS
    )
    s_neg = ad.clip(
        ad.gather_pairs(scores, neg_pairs[:, 0], neg_pairs[:, 1]), SCORE_EPS, 1.0 - SCORE_EPS
    )
    loss_pos = ad.tensor_sum(ad.log(s_pos))
    loss_neg = ad.tensor_sum(ad.log(ad.add_scalar(ad.scalar_mul(s_neg, -1.0), 1.0)))
    total = ad.add(loss_pos, loss_neg)
    return ad.scalar_mul(total, -1.0 / (len(pos_pairs) + len(neg_pairs)))


def total_loss(scores: Tensor, pos_pairs, neg_pairs,
               latent: LatentState) -> tuple[Tensor, float, float]:
    """Reconstruction plus (for variational models) the KL term.

    Returns (loss tensor, reconstruction value, kl value)."""
    recon = reconstruction_loss(scores, pos_pairs, neg_pairs)
    if latent.mu is None:
        return recon, recon.item(), 0.0
    kl = kl_loss(latent.mu, latent.log_sigma)
    return ad.add(recon, kl), recon.item(), kl.item()


def latent_mean(adjs: list[np.ndarray], x: np.ndarray, state: ModelState) -> np.ndarray:
    """Deterministic latent for inference: mu for variational models, z
    otherwise."""
    latent = encode(adjs, x, state, seed=0, log_sigma_cap=None)
    return (latent.mu if latent.mu is not None else latent.z).values


def score_pairs(z: np.ndarray, state: ModelState, pairs) -> np.ndarray:
    """Decoder probabilities for ordered node pairs, outside the tape."""
    pairs = np.asarray(pairs, dtype=np.intp)
    if state.config.diagonal_decoder:
        r = np.diag(state.params["decoder.r_diag"].values[0])
    else:
        r = state.params["decoder.r"].values
    logits = np.einsum("ij,jk,ik->i", z[pairs[:, 0]], r, z[pairs[:, 1]])
    return _stable_sigmoid(logits)


def _stable_sigmoid(logits: np.ndarray) -> np.ndarray:
    out = np.empty_like(logits, dtype=np.float64)
    pos = logits >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-logits[pos]))
    ex = np.exp(logits[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# --- checkpoint round trip ---------------------------------------------------

def save_checkpoint(state: ModelState, path):
    meta = {
        "in_dim": state.in_dim,
        "config": {
            "variant": state.config.variant,
            "variational": state.config.variational,
            "hidden_dim": state.config.hidden_dim,
            "latent_dim": state.config.latent_dim,
            "num_relations": state.config.num_relations,
            "diagonal_decoder": state.config.diagonal_decoder,
        },
    }
    arrays = {f"param/{name}": t.values for name, t in state.params.items()}
    np.savez(path, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_checkpoint(path) -> ModelState:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"checkpoint {path} does not exist")
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        params = {
            name[len("param/"):]: Tensor(data[name], requires_grad=True)
            for name in data.files
            if name.startswith("param/")
        }
    config = EncoderConfig(**meta["config"])
    return ModelState(config, meta["in_dim"], params)
