"""Structural and functional similarity of a variant page to its original.

Scoring is DOM-derived and deterministic: text token overlap, image URL
overlap, tag histogram cosine, and static preservation of interactive
elements with resolvable handler names. There is no rendering and no script
execution.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from . import jsscan, pagemodel
from .archive import ArchivedPage, is_js_content_type
from .pagemodel import KIND_IMAGE, KIND_SCRIPT_INLINE, ResourceGraph

DEFAULT_WEIGHTS = (0.5, 0.3, 0.2)  # text, image, element; must sum to 1


@dataclass
class SimilarityScores:
    structural: float
    text_sim: float
    image_sim: float
    element_sim: float
    functional: float | None = None

    @property
    def components(self) -> tuple[float, float, float]:
        return (self.text_sim, self.image_sim, self.element_sim)


def _text_tokens(graph: ResourceGraph) -> Counter:
    tokens: Counter = Counter()
    for block in graph.text_blocks:
        tokens.update(block.text.split())
    return tokens


def _image_urls(graph: ResourceGraph) -> set[str]:
    return {res.url for res in graph.resources if res.kind == KIND_IMAGE}


def multiset_jaccard(a: Counter, b: Counter) -> float:
    """Sum of per-token minima over per-token maxima; 1.0 when both empty."""
    union = sum((a | b).values())
    if union == 0:
        return 1.0
    return sum((a & b).values()) / union


def set_jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def histogram_cosine(a: dict[str, int], b: dict[str, int]) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    dot = sum(count * b.get(tag, 0) for tag, count in a.items())
    norm_a = math.sqrt(sum(count * count for count in a.values()))
    norm_b = math.sqrt(sum(count * count for count in b.values()))
    return min(1.0, dot / (norm_a * norm_b))  # clamp rounding dust


def structural_similarity(
    original: ResourceGraph,
    variant: ResourceGraph,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
) -> SimilarityScores:
    """Weighted text/image/element completeness of the variant, each
    component in [0, 1]."""
    w_text, w_image, w_element = weights
    if abs(w_text + w_image + w_element - 1.0) > 1e-9:
        raise ValueError("similarity weights must sum to 1")
    text_sim = multiset_jaccard(_text_tokens(original), _text_tokens(variant))
    image_sim = set_jaccard(_image_urls(original), _image_urls(variant))
    element_sim = histogram_cosine(original.tag_histogram, variant.tag_histogram)
    return SimilarityScores(
        structural=w_text * text_sim + w_image * image_sim + w_element * element_sim,
        text_sim=text_sim,
        image_sim=image_sim,
        element_sim=element_sim,
    )


def _retained_script_texts(page: ArchivedPage, graph: ResourceGraph) -> list[str]:
    texts = []
    for ex in page.exchanges.values():
        if is_js_content_type(ex.content_type):
            try:
                texts.append(ex.body.decode("utf-8"))
            except UnicodeDecodeError:
                texts.append(ex.body.decode("latin-1"))
    for res in graph.resources:
        if res.kind == KIND_SCRIPT_INLINE and res.inline_text:
            texts.append(res.inline_text)
    return texts


def functional_similarity(original_page: ArchivedPage, variant_page: ArchivedPage) -> float:
    """Fraction of the original's interactive elements preserved by the
    variant: the identity key must still exist and every handler name must
    still be defined at top level in some retained script. 1.0 when the
    original has no interactive elements."""
    original_graph = pagemodel.parse_page(original_page)
    variant_graph = pagemodel.parse_page(variant_page)
    return functional_similarity_graphs(original_graph, variant_page, variant_graph)


def functional_similarity_graphs(
    original_graph: ResourceGraph,
    variant_page: ArchivedPage,
    variant_graph: ResourceGraph,
) -> float:
    originals = original_graph.interactive_elements
    if not originals:
        return 1.0
    variant_keys = {el.identity_key for el in variant_graph.interactive_elements}
    defined: set[str] = set()
    for text in _retained_script_texts(variant_page, variant_graph):
        defined |= jsscan.top_level_defined_names(text)
    preserved = 0
    for el in originals:
        if el.identity_key not in variant_keys:
            continue
        if all(name in defined for name in el.handler_fn_names):
            preserved += 1
    return preserved / len(originals)


def score_pages(
    original_page: ArchivedPage,
    variant_page: ArchivedPage,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
) -> SimilarityScores:
    """Structural and functional scores for a (original, variant) pair."""
    original_graph = pagemodel.parse_page(original_page)
    variant_graph = pagemodel.parse_page(variant_page)
    scores = structural_similarity(original_graph, variant_graph, weights)
    scores.functional = functional_similarity_graphs(original_graph, variant_page, variant_graph)
    return scores


def scores_to_dict(scores: SimilarityScores) -> dict:
    return {
        "structural": scores.structural,
        "functional": scores.functional,
        "text_sim": scores.text_sim,
        "image_sim": scores.image_sim,
        "element_sim": scores.element_sim,
    }
