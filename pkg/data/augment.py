"""Random image augmentations for the augmentation-alignment loss.

Images are single-channel ``(N, H, W)`` arrays in [0, 1]. Each image draws
its own random ops. Vector datasets only receive Gaussian noise.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from PIL import Image, ImageFilter


@dataclass
class AugmentationConfig:
    resize_crop: bool = True
    horizontal_flip: bool = True
    jitter: bool = True
    grayscale: bool = True
    blur: bool = True
    solarize: bool = True
    gaussian_noise: bool = True

    crop_scale: Tuple[float, float] = (0.8, 1.0)
    flip_p: float = 0.5
    jitter_strength: float = 0.4
    jitter_p: float = 0.8
    grayscale_p: float = 0.2
    blur_sigma: Tuple[float, float] = (0.1, 2.0)
    blur_p: float = 0.5
    solarize_threshold: float = 0.5
    solarize_p: float = 0.2
    noise_sigma: float = 0.1

    def __post_init__(self):
        lo, hi = self.crop_scale
        if not 0.0 < lo <= hi <= 1.0:
            raise ValueError(f"augment.crop_scale must satisfy 0 < lo <= hi <= 1, got {self.crop_scale}")
        lo, hi = self.blur_sigma
        if not 0.0 < lo <= hi:
            raise ValueError(f"augment.blur_sigma must satisfy 0 < lo <= hi, got {self.blur_sigma}")
        for key in ("flip_p", "jitter_p", "grayscale_p", "blur_p", "solarize_p", "solarize_threshold"):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ValueError(f"augment.{key} must lie in [0, 1], got {getattr(self, key)}")
        if not 0.0 <= self.jitter_strength < 1.0:
            raise ValueError(f"augment.jitter_strength must lie in [0, 1), got {self.jitter_strength}")
        if self.noise_sigma < 0:
            raise ValueError(f"augment.noise_sigma must be non-negative, got {self.noise_sigma}")

    @classmethod
    def disabled(cls) -> "AugmentationConfig":
        return cls(resize_crop=False, horizontal_flip=False, jitter=False, grayscale=False,
                   blur=False, solarize=False, gaussian_noise=False)


def _resize_crop(img: np.ndarray, scale: Tuple[float, float], rng: np.random.Generator) -> np.ndarray:
    h, w = img.shape
    side = np.sqrt(rng.uniform(*scale))
    ch, cw = max(1, int(round(h * side))), max(1, int(round(w * side)))
    top = int(rng.integers(0, h - ch + 1))
    left = int(rng.integers(0, w - cw + 1))
    pil = Image.fromarray(img.astype(np.float32))
    out = pil.resize((w, h), Image.BILINEAR, box=(left, top, left + cw, top + ch))
    return np.asarray(out, dtype=np.float64)


def _jitter(img: np.ndarray, strength: float, rng: np.random.Generator) -> np.ndarray:
    brightness = rng.uniform(1.0 - strength, 1.0 + strength)
    contrast = rng.uniform(1.0 - strength, 1.0 + strength)
    img = img * brightness
    return (img - img.mean()) * contrast + img.mean()


def _blur(img: np.ndarray, sigma: Tuple[float, float], rng: np.random.Generator) -> np.ndarray:
    pixels = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    pil = Image.fromarray(pixels).filter(ImageFilter.GaussianBlur(radius=rng.uniform(*sigma)))
    return np.asarray(pil, dtype=np.float64) / 255.0


def _augment_image(img: np.ndarray, cfg: AugmentationConfig, flip_allowed: bool,
                   rng: np.random.Generator) -> np.ndarray:
    if cfg.resize_crop:
        img = _resize_crop(img, cfg.crop_scale, rng)
    if cfg.horizontal_flip and flip_allowed and rng.random() < cfg.flip_p:
        img = img[:, ::-1]
    if cfg.jitter and rng.random() < cfg.jitter_p:
        img = _jitter(img, cfg.jitter_strength, rng)
    # Single-channel images are already grey; only the draw is consumed.
    if cfg.grayscale:
        rng.random()
    if cfg.blur and rng.random() < cfg.blur_p:
        img = _blur(np.clip(img, 0.0, 1.0), cfg.blur_sigma, rng)
    if cfg.solarize and rng.random() < cfg.solarize_p:
        img = np.where(img >= cfg.solarize_threshold, 1.0 - img, img)
    if cfg.gaussian_noise and cfg.noise_sigma > 0:
        img = img + rng.normal(0.0, cfg.noise_sigma, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def augment(images: np.ndarray, cfg: AugmentationConfig, rng: np.random.Generator,
            flip_allowed: bool = False) -> np.ndarray:
    """Independently augmented copy of ``images`` with the same shape."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 3:
        return np.stack([_augment_image(img, cfg, flip_allowed, rng) for img in images])
    if images.ndim != 2:
        raise ValueError(f"expected (N, H, W) images or (N, D) vectors, got shape {images.shape}")
    if cfg.gaussian_noise and cfg.noise_sigma > 0:
        return images + rng.normal(0.0, cfg.noise_sigma, size=images.shape)
    return images.copy()
