import math
from typing import Dict, Sequence

import numpy as np

from app.models.enums import RelationClass
from app.models.sample import BoundingBox


# Secteurs de 45° dans le sens horaire (y vers le bas), à partir de la droite
DIRECTION_SECTORS = (
    RelationClass.RIGHT,
    RelationClass.LOWER_RIGHT,
    RelationClass.BELOW,
    RelationClass.LOWER_LEFT,
    RelationClass.LEFT,
    RelationClass.UPPER_LEFT,
    RelationClass.ABOVE,
    RelationClass.UPPER_RIGHT,
)

OPPOSITE: Dict[RelationClass, RelationClass] = {
    DIRECTION_SECTORS[k]: DIRECTION_SECTORS[(k + 4) % 8] for k in range(8)
}


def direction_sector(theta_deg: float) -> int:
    """Index de secteur k = floor(((θ + 22.5) mod 360) / 45)"""
    return int(((theta_deg + 22.5) % 360.0) // 45.0) % 8


def compute_rpp_label(scene_box: BoundingBox, object_box: BoundingBox) -> RelationClass:
    """
    Classe de position relative entre un scene token et un objet

    Priorité: INSIDE > CONTAINS > OVERLAP > direction du centre de l'objet
    vu depuis le centre du scene token. Un contact sans aire commune
    compte comme disjoint.
    """
    if object_box.contains(scene_box):
        return RelationClass.INSIDE
    if scene_box.contains(object_box):
        return RelationClass.CONTAINS
    if scene_box.intersection_area(object_box) > 0.0:
        return RelationClass.OVERLAP

    scene_cx, scene_cy = scene_box.center
    object_cx, object_cy = object_box.center
    theta = math.degrees(math.atan2(object_cy - scene_cy, object_cx - scene_cx))
    return DIRECTION_SECTORS[direction_sector(theta)]


def rpp_label_matrix(
        scene_boxes: Sequence[BoundingBox],
        object_boxes: Sequence[BoundingBox]
) -> np.ndarray:
    """Matrice [N_st × N_obj] des classes pour toutes les paires"""
    labels = np.zeros((len(scene_boxes), len(object_boxes)), dtype=np.int64)
    for i, scene_box in enumerate(scene_boxes):
        for j, object_box in enumerate(object_boxes):
            labels[i, j] = int(compute_rpp_label(scene_box, object_box))
    return labels
