"""scene-text-vqa - Pré-entraînement multimodal, fine-tuning adversarial et correction floue pour TextVQA"""

__version__ = "1.0.0"
__author__ = "Sarobidy Sitraka"
__description__ = "Modèle séquence-à-séquence multimodal pour les questions sur le texte des images"
