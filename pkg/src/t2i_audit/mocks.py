"""Deterministic offline providers.

The mock world has a ground truth: every cell gets biased-by-construction
codes (English-core countries skew political/flag-heavy and modern, other
countries skew cultural and less modern, with concept-specific twists for
festivals, cities and women). Mock coders observe that truth through
cell-specific noise, so cross-coder disagreement (entropy) rises exactly
where consensus accuracy falls - which is what the quality layer is
supposed to detect.

Everything derives from (cell_id, coder_id, seed) through SHA-256, so runs
with the same seed are byte-identical.
"""
from __future__ import annotations

import hashlib
import io
import json

import numpy as np
from PIL import Image

from .design import (CONCEPT_NATIONAL_IDENTITY, REGION_WEST, ModelSpec,
                     StudyCell, StudyConfig, VlmCoderSpec)

DIMENSIONS = ("political_symbols", "cultural_symbols", "flag_appearance", "sovereignty", "modernity")

MOCK_PATTERN_SIZE = 64  # small fixtures by default; strict mode renders full size


def _rng(*parts: object) -> np.random.Generator:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def mock_ground_truth(cell: StudyCell, config: StudyConfig) -> dict[str, int]:
    """The codes a perfect coder would assign to this cell's mock image."""
    country = config.country(cell.country)
    concept = config.concept(cell.concept)
    rng = _rng(config.seed, cell.cell_id, "truth")

    if country.english_core:
        political = int(rng.integers(1, 4))      # 1..3
        cultural = int(rng.integers(1, 4))
        flag = int(rng.integers(2, 5))           # 2..4
        sovereignty = 1
        modernity = int(rng.integers(4, 6))      # 4..5
    elif country.region == REGION_WEST:
        political = int(rng.integers(0, 2))
        cultural = int(rng.integers(2, 5))
        flag = int(rng.integers(0, 2))
        sovereignty = int(rng.random() < 0.45)
        modernity = int(rng.integers(3, 6))
    else:
        political = int(rng.random() < 0.15)
        cultural = int(rng.integers(3, 8))
        flag = 0 if rng.random() < 0.9 else 1
        sovereignty = int(rng.random() < 0.2)
        modernity = int(rng.integers(2, 4))

    if cell.concept == "festivals":
        if country.region == REGION_WEST:
            political += 2
            flag = min(4, flag + 1)
            sovereignty = 1
        else:
            cultural += 3
            modernity = max(1, modernity - 1)
    elif cell.concept == "cities":
        # urban scenes converge: both regions look comparably modern/cultural
        political = min(political, 1)
        cultural = 3 + int(rng.integers(0, 2))
        flag = min(flag, 1)
        modernity = 3 + int(rng.integers(0, 2))
    elif cell.concept == "women" and country.region != REGION_WEST:
        cultural += 1
        modernity = max(1, modernity - 1)
    elif concept.category == CONCEPT_NATIONAL_IDENTITY and country.english_core:
        flag = 4
        political += 1

    return {
        "political_symbols": political,
        "cultural_symbols": cultural,
        "flag_appearance": flag,
        "sovereignty": sovereignty,
        "modernity": modernity,
    }


def mock_difficulty(cell: StudyCell, config: StudyConfig) -> float:
    """How noisy coders are on this cell, in [0, 1]; most cells are easy."""
    rng = _rng(config.seed, cell.cell_id, "difficulty")
    return float(rng.beta(1.1, 2.6))


_SYMBOL_POOL_POLITICAL = ("flag", "government building", "monument", "portrait", "banner")
_SYMBOL_POOL_CULTURAL = ("traditional dress", "temple", "lantern", "calligraphy",
                         "street food", "folk instrument", "festival mask")


def _perturb(value: int, lo: int, hi: int | None, p_move: float,
             rng: np.random.Generator) -> int:
    if rng.random() >= p_move:
        return value
    step = int(rng.integers(1, 3)) * (1 if rng.random() < 0.5 else -1)
    moved = value + step
    if hi is not None:
        moved = min(hi, moved)
    return max(lo, moved)


class MockImageProvider:
    """Solid-pattern placeholder images keyed to (cell_id, seed)."""

    def __init__(self, model: ModelSpec, config: StudyConfig):
        self.model = model
        self.config = config

    def generate(self, cell: StudyCell, prompt: str) -> tuple[bytes, dict[str, str]]:
        size = self.config.image_size if self.config.mock_strict_size else MOCK_PATTERN_SIZE
        rng = _rng(self.config.seed, cell.cell_id, self.model.id, "pixels")
        base = tuple(int(v) for v in rng.integers(0, 256, size=3))
        stripe = tuple(int(v) for v in rng.integers(0, 256, size=3))
        img = Image.new("RGB", (size, size), base)
        px = img.load()
        band = max(2, size // 8)
        for y in range(size):
            if (y // band) % 2 == 1:
                for x in range(size):
                    px[x, y] = stripe
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue(), {
            "mock": "true",
            "pattern_size": str(size),
            "seed": str(self.config.seed),
        }


class MockVlmCoder:
    """Noisy deterministic observer of the mock ground truth."""

    def __init__(self, coder: VlmCoderSpec, config: StudyConfig):
        self.coder = coder
        self.config = config

    def code(self, cell: StudyCell, image_bytes: bytes, prompt_text: str) -> str:
        truth = mock_ground_truth(cell, self.config)
        difficulty = mock_difficulty(cell, self.config)
        rng = _rng(self.config.seed, cell.cell_id, self.coder.id, "codes")
        p_move = 0.85 * difficulty

        codes = {
            "political_symbols": _perturb(truth["political_symbols"], 0, None, p_move, rng),
            "cultural_symbols": _perturb(truth["cultural_symbols"], 0, None, p_move, rng),
            "flag_appearance": _perturb(truth["flag_appearance"], 0, 4, p_move, rng),
            "sovereignty": truth["sovereignty"] if rng.random() >= p_move * 0.6
                           else 1 - truth["sovereignty"],
            "modernity": _perturb(truth["modernity"], 1, 5, p_move, rng),
        }
        confidence = float(np.clip(0.95 - 0.55 * difficulty - 0.08 * rng.random(), 0.05, 0.98))
        pol_n = min(codes["political_symbols"], len(_SYMBOL_POOL_POLITICAL))
        cul_n = min(codes["cultural_symbols"], len(_SYMBOL_POOL_CULTURAL))
        doc = {
            **codes,
            "political_symbols_list": list(_SYMBOL_POOL_POLITICAL[:pol_n]),
            "cultural_symbols_list": list(_SYMBOL_POOL_CULTURAL[:cul_n]),
            "reasoning": f"mock coding of {cell.cell_id} by {self.coder.id}",
            "confidence": round(confidence, 3),
        }
        text = json.dumps(doc)
        # a slice of responses arrives wrapped in prose/fences, like real APIs
        wrap = rng.random()
        if wrap < 0.10:
            return f"Here is the coding you asked for:\n```json\n{text}\n```\nLet me know if anything is unclear."
        if wrap < 0.15:
            return f"```\n{text}\n```"
        return text


def build_mock_providers(config: StudyConfig) -> tuple[dict, dict]:
    images = {m.id: MockImageProvider(m, config) for m in config.models}
    coders = {c.id: MockVlmCoder(c, config) for c in config.coders}
    return images, coders
