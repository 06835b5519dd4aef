"""
Encodeur-décodeur multimodal jouet (pre-LN) avec têtes MLM et RPP
"""
import math
from typing import List, Optional

import torch
import torch.nn as nn
import torch.nn.functional as F

from app.core.exceptions import ShapeError
from app.inputs.collate import MultimodalBatch
from app.inputs.tokenizer import EOS_ID, PAD_ID
from app.models.training import N_SEGMENTS, ModelConfig


def _masked_value(scores: torch.Tensor) -> float:
    return torch.finfo(scores.dtype).min


class MultiHeadAttention(nn.Module):
    """Attention multi-têtes avec masque de clés et masque causal optionnels"""

    def __init__(self, d_model: int, n_heads: int, dropout: float):
        super().__init__()
        self.n_heads = n_heads
        self.head_dim = d_model // n_heads
        self.query = nn.Linear(d_model, d_model)
        self.key = nn.Linear(d_model, d_model)
        self.value = nn.Linear(d_model, d_model)
        self.output = nn.Linear(d_model, d_model)
        self.dropout = nn.Dropout(dropout)

    def _heads(self, x: torch.Tensor) -> torch.Tensor:
        batch, length, _ = x.shape
        return x.view(batch, length, self.n_heads, self.head_dim).transpose(1, 2)

    def forward(
            self,
            x: torch.Tensor,
            memory: torch.Tensor,
            key_mask: Optional[torch.Tensor] = None,
            causal: bool = False
    ) -> torch.Tensor:
        batch, q_len, d_model = x.shape
        q, k, v = self._heads(self.query(x)), self._heads(self.key(memory)), self._heads(self.value(memory))

        scores = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        if key_mask is not None:
            scores = scores.masked_fill(~key_mask[:, None, None, :], _masked_value(scores))
        if causal:
            future = torch.ones(q_len, k.shape[2], dtype=torch.bool, device=x.device).triu(1)
            scores = scores.masked_fill(future, _masked_value(scores))

        weights = self.dropout(torch.softmax(scores, dim=-1))
        out = (weights @ v).transpose(1, 2).reshape(batch, q_len, d_model)
        return self.output(out)


class FeedForward(nn.Module):

    def __init__(self, d_model: int, d_ff: int, dropout: float):
        super().__init__()
        self.fc_in = nn.Linear(d_model, d_ff)
        self.fc_out = nn.Linear(d_ff, d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc_out(self.dropout(F.gelu(self.fc_in(x))))


class EncoderLayer(nn.Module):

    def __init__(self, config: ModelConfig):
        super().__init__()
        eps = config.layer_norm_eps
        self.self_attn_norm = nn.LayerNorm(config.d_model, eps=eps)
        self.self_attn = MultiHeadAttention(config.d_model, config.n_heads, config.dropout)
        self.ffn_norm = nn.LayerNorm(config.d_model, eps=eps)
        self.ffn = FeedForward(config.d_model, config.d_ff, config.dropout)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        h = self.self_attn_norm(x)
        x = x + self.dropout(self.self_attn(h, h, key_mask=mask))
        return x + self.dropout(self.ffn(self.ffn_norm(x)))


class DecoderLayer(nn.Module):

    def __init__(self, config: ModelConfig):
        super().__init__()
        eps = config.layer_norm_eps
        self.self_attn_norm = nn.LayerNorm(config.d_model, eps=eps)
        self.self_attn = MultiHeadAttention(config.d_model, config.n_heads, config.dropout)
        self.cross_attn_norm = nn.LayerNorm(config.d_model, eps=eps)
        self.cross_attn = MultiHeadAttention(config.d_model, config.n_heads, config.dropout)
        self.ffn_norm = nn.LayerNorm(config.d_model, eps=eps)
        self.ffn = FeedForward(config.d_model, config.d_ff, config.dropout)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, y: torch.Tensor, memory: torch.Tensor, memory_mask: torch.Tensor) -> torch.Tensor:
        h = self.self_attn_norm(y)
        y = y + self.dropout(self.self_attn(h, h, causal=True))
        y = y + self.dropout(self.cross_attn(self.cross_attn_norm(y), memory, key_mask=memory_mask))
        return y + self.dropout(self.ffn(self.ffn_norm(y)))


class MLMHead(nn.Module):
    """dense → GELU → LayerNorm, la projection finale est la table d'embedding partagée"""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.dense = nn.Linear(config.d_model, config.d_model)
        self.norm = nn.LayerNorm(config.d_model, eps=config.layer_norm_eps)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.norm(F.gelu(self.dense(x)))


class RPPHead(nn.Module):
    """
    Scoreur bilinéaire de rang faible sur les paires (scene token, objet)

    logit[i, j, c] = <U_c h_i, V_c h_j> + a_c·h_i + b_c + w_c·h_j
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.n_classes = config.n_rpp_classes
        self.rank = config.rpp_rank
        width = self.n_classes * self.rank
        self.norm = nn.LayerNorm(config.d_model, eps=config.layer_norm_eps)
        self.scene_proj = nn.Linear(config.d_model, width)
        self.object_proj = nn.Linear(config.d_model, width)
        self.scene_linear = nn.Linear(config.d_model, self.n_classes)
        self.object_linear = nn.Linear(config.d_model, self.n_classes, bias=False)

    def forward(self, scene_states: torch.Tensor, object_states: torch.Tensor) -> torch.Tensor:
        batch, n_st, _ = scene_states.shape
        n_obj = object_states.shape[1]
        h_scene = self.norm(scene_states)
        h_object = self.norm(object_states)
        s = self.scene_proj(h_scene).view(batch, n_st, self.n_classes, self.rank)
        o = self.object_proj(h_object).view(batch, n_obj, self.n_classes, self.rank)
        pair = torch.einsum("bicr,bjcr->bijc", s, o)
        return pair + self.scene_linear(h_scene)[:, :, None, :] + self.object_linear(h_object)[:, None, :, :]


class SceneTextSeq2Seq(nn.Module):
    """
    Encodeur de fusion [texte | objets | scene tokens] et décodeur génératif

    La tête LM (et MLM) réutilise la table d'embedding des tokens.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d = config.d_model

        self.token_embedding = nn.Embedding(config.vocab_size, d)
        self.text_position = nn.Embedding(config.max_text_len, d)
        self.decoder_position = nn.Embedding(config.max_dec_len, d)
        self.segment_embedding = nn.Embedding(N_SEGMENTS, d)
        self.object_projection = nn.Linear(config.d_feat + 4, d)
        self.scene_projection = nn.Linear(config.d_feat + 4, d)

        self.encoder_layers = nn.ModuleList(EncoderLayer(config) for _ in range(config.n_layers_enc))
        self.decoder_layers = nn.ModuleList(DecoderLayer(config) for _ in range(config.n_layers_dec))
        self.memory_norm = nn.LayerNorm(d, eps=config.layer_norm_eps)
        self.final_norm = nn.LayerNorm(d, eps=config.layer_norm_eps)

        self.mlm_head = MLMHead(config)
        self.rpp_head = RPPHead(config)
        self.apply(self._init_weights)

    @staticmethod
    def _init_weights(module: nn.Module) -> None:
        if isinstance(module, (nn.Linear, nn.Embedding)):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)
        if isinstance(module, nn.Linear) and module.bias is not None:
            nn.init.zeros_(module.bias)

    @torch.no_grad()
    def identity_init_(self) -> "SceneTextSeq2Seq":
        """Annuler les projections de sortie des blocs résiduels (encode == embed)"""
        for layer in list(self.encoder_layers) + list(self.decoder_layers):
            for attn in (getattr(layer, "self_attn"), getattr(layer, "cross_attn", None)):
                if attn is not None:
                    attn.output.weight.zero_()
                    attn.output.bias.zero_()
            layer.ffn.fc_out.weight.zero_()
            layer.ffn.fc_out.bias.zero_()
        return self

    # ============================================
    # ENCODEUR
    # ============================================

    def _check_batch(self, batch: MultimodalBatch) -> None:
        config = self.config
        if batch.text_length > config.max_text_len:
            raise ShapeError(f"Texte trop long: {batch.text_length} > {config.max_text_len}")
        if batch.n_objects + batch.n_scene > 0 and batch.d_feat != config.d_feat:
            raise ShapeError(f"D_feat du batch {batch.d_feat} ≠ {config.d_feat}")
        if batch.attention_mask.shape != (batch.batch_size, batch.total_length):
            raise ShapeError(f"attention_mask de forme {tuple(batch.attention_mask.shape)}")
        if batch.token_ids.numel() and int(batch.token_ids.max()) >= config.vocab_size:
            raise ShapeError("Id de token hors vocabulaire")

    def _project_regions(
            self,
            projection: nn.Linear,
            features: torch.Tensor,
            boxes: torch.Tensor,
            dtype: torch.dtype
    ) -> torch.Tensor:
        """[feature | boîte] → d_model; aucune région donne [B × 0 × d_model]"""
        if features.shape[1] == 0:
            return features.new_zeros((features.shape[0], 0, self.config.d_model), dtype=dtype)
        return projection(torch.cat([features, boxes], dim=-1).to(dtype))

    def embed(self, batch: MultimodalBatch) -> torch.Tensor:
        """Embeddings [B × L × d_model], positions paddées à zéro"""
        self._check_batch(batch)
        dtype = self.token_embedding.weight.dtype
        positions = torch.arange(batch.text_length, device=batch.token_ids.device)

        text = (
            self.token_embedding(batch.token_ids)
            + self.segment_embedding(batch.segment_ids)
            + self.text_position(positions)[None]
        )
        objects = self._project_regions(self.object_projection, batch.obj_features, batch.obj_boxes, dtype)
        scene = self._project_regions(self.scene_projection, batch.scene_features, batch.scene_boxes, dtype)
        embeddings = torch.cat([text, objects, scene], dim=1)
        return embeddings * batch.attention_mask[..., None].to(dtype)

    def encode(self, batch: MultimodalBatch, embeddings: Optional[torch.Tensor] = None) -> torch.Tensor:
        """Pile d'auto-attention masquée; embeddings fournis pour les vues perturbées"""
        x = self.embed(batch) if embeddings is None else embeddings
        if x.shape[:2] != batch.attention_mask.shape or x.shape[-1] != self.config.d_model:
            raise ShapeError(f"Embeddings de forme {tuple(x.shape)}")
        mask = batch.attention_mask
        for layer in self.encoder_layers:
            x = layer(x, mask)
        return x * mask[..., None].to(x.dtype)

    # ============================================
    # DÉCODEUR
    # ============================================

    def decode_logits(
            self,
            encoder_states: torch.Tensor,
            decoder_input_ids: torch.Tensor,
            encoder_mask: torch.Tensor
    ) -> torch.Tensor:
        """Logits [B × L_dec × vocab] (attention causale + attention croisée)"""
        dec_len = decoder_input_ids.shape[1]
        if dec_len > self.config.max_dec_len:
            raise ShapeError(f"Décodeur trop long: {dec_len} > {self.config.max_dec_len}")
        if encoder_states.shape[:2] != encoder_mask.shape or encoder_states.shape[-1] != self.config.d_model:
            raise ShapeError(f"États encodeur de forme {tuple(encoder_states.shape)}")
        if decoder_input_ids.shape[0] != encoder_states.shape[0]:
            raise ShapeError("Tailles de batch différentes entre encodeur et décodeur")

        memory = self.memory_norm(encoder_states)
        positions = torch.arange(dec_len, device=decoder_input_ids.device)
        y = self.token_embedding(decoder_input_ids) + self.decoder_position(positions)[None]
        for layer in self.decoder_layers:
            y = layer(y, memory, encoder_mask)
        return F.linear(self.final_norm(y), self.token_embedding.weight)

    @torch.no_grad()
    def greedy_decode(
            self,
            encoder_states: torch.Tensor,
            encoder_mask: torch.Tensor,
            max_len: int,
            start_id: int = PAD_ID,
            eos_id: int = EOS_ID
    ) -> List[List[int]]:
        """
        Décodage argmax jusqu'à EOS ou max_len (borné par max_dec_len)

        Returns:
            Ids générés par ligne, sans EOS
        """
        if max_len < 1:
            raise ShapeError(f"max_len doit être ≥ 1 (reçu {max_len})")
        max_len = min(max_len, self.config.max_dec_len)
        batch = encoder_states.shape[0]

        ids = torch.full((batch, 1), start_id, dtype=torch.long, device=encoder_states.device)
        finished = [False] * batch
        outputs: List[List[int]] = [[] for _ in range(batch)]
        for _ in range(max_len):
            logits = self.decode_logits(encoder_states, ids, encoder_mask)[:, -1]
            next_ids = logits.argmax(dim=-1)
            for b, token_id in enumerate(next_ids.tolist()):
                if finished[b]:
                    continue
                if token_id == eos_id:
                    finished[b] = True
                else:
                    outputs[b].append(token_id)
            if all(finished) or ids.shape[1] >= self.config.max_dec_len:
                break
            ids = torch.cat([ids, next_ids[:, None]], dim=1)
        return outputs

    # ============================================
    # TÊTES AUXILIAIRES
    # ============================================

    def mlm_logits(self, encoder_states: torch.Tensor, text_length: int) -> torch.Tensor:
        return F.linear(self.mlm_head(encoder_states[:, :text_length]), self.token_embedding.weight)

    def rpp_logits(self, encoder_states: torch.Tensor, n_scene: int, n_objects: int) -> torch.Tensor:
        """Logits [B × N_st × N_obj × 11]; scene tokens en fin de séquence, objets juste avant"""
        length = encoder_states.shape[1]
        if n_scene + n_objects > length:
            raise ShapeError(f"{n_scene} scene tokens + {n_objects} objets > longueur {length}")
        scene_start = length - n_scene
        scene = encoder_states[:, scene_start:]
        objects = encoder_states[:, scene_start - n_objects:scene_start]
        return self.rpp_head(scene, objects)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters() if p.requires_grad)
