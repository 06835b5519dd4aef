from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
import torch

from app.core.exceptions import HeterogeneityError
from app.inputs.builder import EncodedSample
from app.inputs.masking import IGNORE_INDEX
from app.inputs.tokenizer import PAD_ID


@dataclass
class MultimodalBatch:
    """
    Entrée encodeur sérialisée [texte | objets | scene tokens] et cibles

    Les masques valent True aux positions réelles; les labels valent
    IGNORE_INDEX sur le padding.
    """

    token_ids: torch.Tensor             # [B, L_text] long
    segment_ids: torch.Tensor           # [B, L_text] long
    text_mask: torch.Tensor             # [B, L_text] bool
    obj_features: torch.Tensor          # [B, N_obj, D_feat]
    obj_boxes: torch.Tensor             # [B, N_obj, 4]
    obj_mask: torch.Tensor              # [B, N_obj] bool
    scene_features: torch.Tensor        # [B, N_st, D_feat]
    scene_boxes: torch.Tensor           # [B, N_st, 4]
    scene_mask: torch.Tensor            # [B, N_st] bool
    attention_mask: torch.Tensor        # [B, L_text + N_obj + N_st] bool
    mlm_labels: torch.Tensor            # [B, L_text] long
    rpp_labels: torch.Tensor            # [B, N_st, N_obj] long
    decoder_target_ids: torch.Tensor    # [B, L_dec] long
    sample_ids: List[str] = field(default_factory=list)
    target_indices: List[Optional[int]] = field(default_factory=list)
    vocab_size: int = 0

    @property
    def batch_size(self) -> int:
        return int(self.token_ids.shape[0])

    @property
    def text_length(self) -> int:
        return int(self.token_ids.shape[1])

    @property
    def n_objects(self) -> int:
        return int(self.obj_features.shape[1])

    @property
    def n_scene(self) -> int:
        return int(self.scene_features.shape[1])

    @property
    def total_length(self) -> int:
        return self.text_length + self.n_objects + self.n_scene

    @property
    def d_feat(self) -> int:
        return int(self.obj_features.shape[2])

    def decoder_input_ids(self, start_id: int = PAD_ID) -> torch.Tensor:
        """Cibles décalées à droite (teacher forcing), start token en tête"""
        targets = self.decoder_target_ids.masked_fill(self.decoder_target_ids == IGNORE_INDEX, PAD_ID)
        start = torch.full_like(targets[:, :1], start_id)
        return torch.cat([start, targets[:, :-1]], dim=1)

    def to(self, device: Optional[torch.device] = None, dtype: Optional[torch.dtype] = None) -> "MultimodalBatch":
        """Copie sur un device, les tenseurs flottants convertis en dtype"""
        changes = {}
        for name in ("obj_features", "obj_boxes", "scene_features", "scene_boxes"):
            changes[name] = getattr(self, name).to(device=device, dtype=dtype)
        for name in (
                "token_ids", "segment_ids", "text_mask", "obj_mask", "scene_mask",
                "attention_mask", "mlm_labels", "rpp_labels", "decoder_target_ids",
        ):
            changes[name] = getattr(self, name).to(device=device)
        return replace(self, **changes)

    def split_rows(self) -> List[EncodedSample]:
        """Dé-padder: reconstruire les lignes d'origine"""
        rows = []
        for b in range(self.batch_size):
            n_text = int(self.text_mask[b].sum())
            n_obj = int(self.obj_mask[b].sum())
            n_st = int(self.scene_mask[b].sum())
            target = self.decoder_target_ids[b]
            n_dec = int((target != IGNORE_INDEX).sum())
            rows.append(EncodedSample(
                token_ids=self.token_ids[b, :n_text].tolist(),
                segment_ids=self.segment_ids[b, :n_text].tolist(),
                mlm_labels=self.mlm_labels[b, :n_text].tolist(),
                obj_features=self.obj_features[b, :n_obj].cpu().numpy(),
                obj_boxes=self.obj_boxes[b, :n_obj].cpu().numpy(),
                scene_features=self.scene_features[b, :n_st].cpu().numpy(),
                scene_boxes=self.scene_boxes[b, :n_st].cpu().numpy(),
                rpp_labels=self.rpp_labels[b, :n_st, :n_obj].cpu().numpy(),
                decoder_target_ids=target[:n_dec].tolist(),
                vocab_size=self.vocab_size,
                sample_id=self.sample_ids[b] if self.sample_ids else "",
                target_index=self.target_indices[b] if self.target_indices else None,
            ))
        return rows


def _pad_matrix(values: Sequence[Sequence[int]], width: int, fill: int) -> torch.Tensor:
    out = torch.full((len(values), width), fill, dtype=torch.long)
    for b, row in enumerate(values):
        if row:
            out[b, :len(row)] = torch.as_tensor(row, dtype=torch.long)
    return out


def _pad_regions(arrays: Sequence[np.ndarray], width: int, depth: int) -> torch.Tensor:
    out = torch.zeros((len(arrays), width, depth), dtype=torch.float32)
    for b, array in enumerate(arrays):
        if array.shape[0]:
            out[b, :array.shape[0]] = torch.from_numpy(np.ascontiguousarray(array, dtype=np.float32))
    return out


def _lengths_mask(lengths: Sequence[int], width: int) -> torch.Tensor:
    positions = torch.arange(width).unsqueeze(0)
    return positions < torch.as_tensor(lengths, dtype=torch.long).unsqueeze(1)


def collate(rows: Sequence[EncodedSample]) -> MultimodalBatch:
    """
    Empiler des lignes en un MultimodalBatch paddé

    Chaque axe (texte, objets, scene tokens, décodeur) est paddé au maximum
    du batch; l'ordre des lignes est conservé.

    Raises:
        HeterogeneityError: Aucune ligne, D_feat ou vocabulaire différents
    """
    if not rows:
        raise HeterogeneityError("Aucune ligne à assembler")

    vocab_sizes = {row.vocab_size for row in rows}
    if len(vocab_sizes) > 1:
        raise HeterogeneityError(f"Vocabulaires différents: {sorted(vocab_sizes)}")
    with_regions = [row for row in rows if row.n_objects + row.n_scene > 0]
    d_feats = {row.d_feat for row in with_regions}
    if len(d_feats) > 1:
        raise HeterogeneityError(f"D_feat différents: {sorted(d_feats)}")
    d_feat = d_feats.pop() if d_feats else rows[0].d_feat

    text_lengths = [row.text_length for row in rows]
    n_objects = [row.n_objects for row in rows]
    n_scene = [row.n_scene for row in rows]
    max_text, max_obj, max_st = max(text_lengths), max(n_objects), max(n_scene)
    max_dec = max(len(row.decoder_target_ids) for row in rows)

    rpp_labels = torch.full((len(rows), max_st, max_obj), IGNORE_INDEX, dtype=torch.long)
    for b, row in enumerate(rows):
        if row.rpp_labels.size:
            rpp_labels[b, :row.n_scene, :row.n_objects] = torch.from_numpy(
                row.rpp_labels.astype(np.int64)
            )

    text_mask = _lengths_mask(text_lengths, max_text)
    obj_mask = _lengths_mask(n_objects, max_obj)
    scene_mask = _lengths_mask(n_scene, max_st)

    return MultimodalBatch(
        token_ids=_pad_matrix([row.token_ids for row in rows], max_text, PAD_ID),
        segment_ids=_pad_matrix([row.segment_ids for row in rows], max_text, 0),
        text_mask=text_mask,
        obj_features=_pad_regions([row.obj_features for row in rows], max_obj, d_feat),
        obj_boxes=_pad_regions([row.obj_boxes for row in rows], max_obj, 4),
        obj_mask=obj_mask,
        scene_features=_pad_regions([row.scene_features for row in rows], max_st, d_feat),
        scene_boxes=_pad_regions([row.scene_boxes for row in rows], max_st, 4),
        scene_mask=scene_mask,
        attention_mask=torch.cat([text_mask, obj_mask, scene_mask], dim=1),
        mlm_labels=_pad_matrix([row.mlm_labels for row in rows], max_text, IGNORE_INDEX),
        rpp_labels=rpp_labels,
        decoder_target_ids=_pad_matrix([row.decoder_target_ids for row in rows], max_dec, IGNORE_INDEX),
        sample_ids=[row.sample_id for row in rows],
        target_indices=[row.target_index for row in rows],
        vocab_size=rows[0].vocab_size
    )
