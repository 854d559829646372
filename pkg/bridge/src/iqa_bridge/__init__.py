"""Scoring service exposing deep NR-IQA models behind a small HTTP protocol."""

from .conformance import ConformanceReport, conformance_check
from .lpips import PerceptualDistance
from .models import ModelSpec, ScoringModel
from .service import build_app

__version__ = "0.1.0"
