"""The ACT network: CVAE chunk encoder, visually conditioned policy decoder,
and the reconstruction + KL training loss.

The chunk encoder sees only the action chunk and proprioception (never
images). The policy decoder consumes both camera streams (prompts are baked
into the front one), proprioception and the latent sample, and emits a
normalized k x 4 action chunk through learned query tokens.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..episodes import NormStats
from ..tensor import (
    Tensor,
    add,
    clip,
    concat,
    exp,
    mul,
    reshape,
    sub,
    sum_of_squares,
    tsum,
)
from ..tensor.checkpoint import load_checkpoint, save_checkpoint
from ..tensor.core import linear
from .layers import (
    Affine,
    ConvStack,
    DecoderLayer,
    EncoderLayer,
    Params,
    stack_batch,
    tile_rows,
)

LOGVAR_CLAMP = 10.0


@dataclass
class ModelConfig:
    d_model: int = 64
    heads: int = 4
    encoder_layers: int = 3
    decoder_layers: int = 2
    cvae_layers: int = 2
    ff_width: int = 256
    z_dim: int = 16
    chunk_size: int = 20
    action_dim: int = 4
    image_res: int = 96
    cnn_channels: tuple = (8, 16, 32, 64)

    def __post_init__(self):
        if self.d_model % self.heads:
            raise ValueError(f"d_model {self.d_model} not divisible by heads {self.heads}")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")

    def to_json(self):
        d = self.__dict__.copy()
        d["cnn_channels"] = list(self.cnn_channels)
        return d

    @staticmethod
    def from_json(doc):
        doc = dict(doc)
        doc["cnn_channels"] = tuple(doc["cnn_channels"])
        return ModelConfig(**doc)


@dataclass
class LatentPosterior:
    mu: Tensor
    logvar: Tensor


@dataclass
class LossBreakdown:
    l_reconst: float
    l_reg: float
    beta: float
    total: Tensor

    @property
    def total_value(self):
        return float(self.total.data)


@dataclass
class AttentionRecord:
    encoder: list = field(default_factory=list)        # per layer (B, H, T, T)
    decoder_cross: list = field(default_factory=list)  # per layer (B, H, k, T)


class ActModel:
    def __init__(self, config, seed=0):
        self.config = config
        c = config
        p = Params(np.random.default_rng([int(seed), 9000]))
        self.params = p

        # CVAE chunk encoder
        self.cvae_cls = p.weight("cvae.cls", (1, c.d_model), c.d_model)
        self.cvae_prop = p.weight("cvae.prop.w", (c.action_dim, c.d_model), c.action_dim)
        self.cvae_prop_b = p.const("cvae.prop.b", np.zeros(c.d_model))
        self.cvae_act = p.weight("cvae.act.w", (c.action_dim, c.d_model), c.action_dim)
        self.cvae_act_b = p.const("cvae.act.b", np.zeros(c.d_model))
        self.cvae_pos = p.weight("cvae.pos", (c.chunk_size + 2, c.d_model), c.d_model)
        self.cvae_layers = [
            EncoderLayer(p, f"cvae.layer{i}", c.d_model, c.heads, c.ff_width)
            for i in range(c.cvae_layers)
        ]
        self.cvae_ln = Affine(p, "cvae.ln", c.d_model)
        self.latent_head_w = p.weight("cvae.latent.w", (c.d_model, 2 * c.z_dim), c.d_model)
        self.latent_head_b = p.const("cvae.latent.b", np.zeros(2 * c.z_dim))

        # policy decoder
        self.cnn = ConvStack(p, "cnn", c.cnn_channels, c.d_model)
        tokens_per_cam = (c.image_res // 16) ** 2
        self.tokens_per_cam = tokens_per_cam
        self.vis_pos = p.weight("vis_pos", (tokens_per_cam, c.d_model), c.d_model)
        self.cam_embed = p.weight("cam_embed", (2, c.d_model), c.d_model)
        self.z_proj = p.weight("z_proj.w", (c.z_dim, c.d_model), c.z_dim)
        self.z_proj_b = p.const("z_proj.b", np.zeros(c.d_model))
        self.prop_proj = p.weight("prop_proj.w", (c.action_dim, c.d_model), c.action_dim)
        self.prop_proj_b = p.const("prop_proj.b", np.zeros(c.d_model))
        self.lead_pos = p.weight("lead_pos", (2, c.d_model), c.d_model)
        self.enc_layers = [
            EncoderLayer(p, f"enc.layer{i}", c.d_model, c.heads, c.ff_width)
            for i in range(c.encoder_layers)
        ]
        self.enc_ln = Affine(p, "enc.ln", c.d_model)
        self.queries = p.weight("queries", (c.chunk_size, c.d_model), c.d_model)
        self.dec_layers = [
            DecoderLayer(p, f"dec.layer{i}", c.d_model, c.heads, c.ff_width)
            for i in range(c.decoder_layers)
        ]
        self.dec_ln = Affine(p, "dec.ln", c.d_model)
        self.head_w = p.weight("head.w", (c.d_model, c.action_dim), c.d_model)
        self.head_b = p.const("head.b", np.zeros(c.action_dim))

    def parameters(self):
        return self.params.values()

    def named_parameters(self):
        return self.params.items()

    def zero_grads(self):
        for t in self.parameters():
            t.zero_grad()

    # ------------------------------------------------------------------
    def encode(self, chunk, proprio):
        """q(z | a_{t:t+k}, proprio): normalized inputs -> LatentPosterior."""
        c = self.config
        chunk = chunk if isinstance(chunk, Tensor) else Tensor(chunk)
        proprio = proprio if isinstance(proprio, Tensor) else Tensor(proprio)
        if chunk.shape[-2:] != (c.chunk_size, c.action_dim):
            raise ValueError(f"chunk shape {chunk.shape}, expected (*, {c.chunk_size}, {c.action_dim})")
        B = chunk.shape[0]
        cls = tile_rows(self.cvae_cls, B)                                  # (B, 1, d)
        prop = reshape(linear(proprio, self.cvae_prop, self.cvae_prop_b), (B, 1, c.d_model))
        acts = linear(chunk, self.cvae_act, self.cvae_act_b)               # (B, k, d)
        x = add(concat([cls, prop, acts], axis=1), self.cvae_pos)
        for layer in self.cvae_layers:
            x = layer(x)
        x = self.cvae_ln(x)
        latent = linear(x[:, 0], self.latent_head_w, self.latent_head_b)  # (B, 2z)
        mu = latent[:, : c.z_dim]
        logvar = clip(latent[:, c.z_dim:], -LOGVAR_CLAMP, LOGVAR_CLAMP)
        return LatentPosterior(mu=mu, logvar=logvar)

    def reparameterize(self, posterior, rng=None, eps=None):
        """z = mu + exp(logvar/2) * eps; gradient reaches mu/logvar only."""
        if eps is None:
            eps = rng.standard_normal(posterior.mu.shape)
        sigma = exp(mul(posterior.logvar, 0.5))
        return add(posterior.mu, mul(sigma, Tensor(eps)))

    def prior_z(self, batch):
        return Tensor(np.zeros((batch, self.config.z_dim)))

    # ------------------------------------------------------------------
    def decode(self, front, hand, proprio, z, record_attention=False):
        """pi(a_hat | I_vp, hand, proprio, z) -> ((B, k, 4) chunk, AttentionRecord)."""
        c = self.config
        front = front if isinstance(front, Tensor) else Tensor(front)
        hand = hand if isinstance(hand, Tensor) else Tensor(hand)
        proprio = proprio if isinstance(proprio, Tensor) else Tensor(proprio)
        z = z if isinstance(z, Tensor) else Tensor(z)
        if front.shape != hand.shape or front.shape[1:] != (c.image_res, c.image_res, 3):
            raise ValueError(f"image shapes {front.shape}/{hand.shape}, "
                             f"expected (*, {c.image_res}, {c.image_res}, 3)")
        B = front.shape[0]
        if z.shape != (B, c.z_dim):
            raise ValueError(f"z shape {z.shape}, expected ({B}, {c.z_dim})")

        from ..tensor import transpose as ttranspose
        both = concat([front, hand], axis=0)                   # (2B, H, W, 3)
        both = ttranspose(both, (0, 3, 1, 2))                  # NCHW
        feats = self.cnn(both)                                 # (2B, 36, d)
        vis = add(feats, self.vis_pos)
        front_toks = add(vis[:B], reshape(self.cam_embed[0:1], (1, 1, c.d_model)))
        hand_toks = add(vis[B:], reshape(self.cam_embed[1:2], (1, 1, c.d_model)))

        z_tok = reshape(linear(z, self.z_proj, self.z_proj_b), (B, 1, c.d_model))
        p_tok = reshape(linear(proprio, self.prop_proj, self.prop_proj_b), (B, 1, c.d_model))
        lead = add(concat([z_tok, p_tok], axis=1), self.lead_pos)

        x = concat([lead, front_toks, hand_toks], axis=1)      # (B, 2 + 72, d)
        record = AttentionRecord() if record_attention else None
        for layer in self.enc_layers:
            x = layer(x, record=record.encoder if record else None)
        memory = self.enc_ln(x)

        q = tile_rows(self.queries, B)
        for layer in self.dec_layers:
            q = layer(q, memory, record=record.decoder_cross if record else None)
        out = linear(self.dec_ln(q), self.head_w, self.head_b)  # (B, k, 4)
        return out, record

    # ------------------------------------------------------------------
    def loss(self, pred, target, pad_mask, posterior, beta):
        """MSE over unmasked (step, dim) entries + beta * Gaussian KL."""
        target = np.asarray(target, dtype=np.float64)
        pad_mask = np.asarray(pad_mask, dtype=bool)
        if pred.shape != target.shape:
            raise ValueError(f"pred {pred.shape} vs target {target.shape}")
        if pad_mask.shape != target.shape[:-1]:
            raise ValueError(f"pad_mask {pad_mask.shape} vs target {target.shape}")
        valid = ~pad_mask
        n_valid = int(valid.sum())
        if n_valid == 0:
            raise ValueError("all chunk positions masked")
        w = valid[..., None].astype(np.float64)
        diff = mul(sub(pred, Tensor(target)), Tensor(w))
        l_rec = mul(sum_of_squares(diff), 1.0 / (n_valid * target.shape[-1]))

        mu, logvar = posterior.mu, posterior.logvar
        B = mu.shape[0]
        kl_terms = sub(sub(add(mul(mu, mu), exp(logvar)), 1.0), logvar)
        l_reg = mul(tsum(kl_terms), 0.5 / B)
        total = add(l_rec, mul(l_reg, beta))
        return LossBreakdown(
            l_reconst=float(l_rec.data), l_reg=float(l_reg.data), beta=float(beta), total=total,
        )

    # ------------------------------------------------------------------
    def save(self, path, norm_stats=None, optimizer=None, train_meta=None):
        extra = {
            "model_config": self.config.to_json(),
            "norm_stats": norm_stats.to_json() if norm_stats else None,
            "train": train_meta or {},
        }
        save_checkpoint(path, [(n, t.data) for n, t in self.named_parameters()],
                        optimizer=optimizer, extra=extra)

    @staticmethod
    def load(path):
        params, optimizer, extra = load_checkpoint(path)
        config = ModelConfig.from_json(extra["model_config"])
        model = ActModel(config, seed=0)
        named = dict(model.named_parameters())
        if [n for n, _ in params] != list(named.keys()):
            raise ValueError(f"{path}: parameter names do not match this model configuration")
        for n, a in params:
            if named[n].data.shape != a.shape:
                raise ValueError(f"{path}: shape mismatch for {n}")
            named[n].data = a
        stats = NormStats.from_json(extra["norm_stats"]) if extra.get("norm_stats") else None
        return model, stats, optimizer, extra.get("train", {})
