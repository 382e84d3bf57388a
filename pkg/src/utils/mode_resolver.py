"""
Training-mode resolver with alias and fuzzy matching
Maps user-supplied mode strings ("BF+RA", "full", "baseline + ra", ...) onto the
four canonical acquisition modes used by the trainer.
"""

import logging
from difflib import SequenceMatcher
from typing import Dict, Optional

logger = logging.getLogger(__name__)

CANONICAL_MODES = ("baseline", "baseline+bf", "baseline+ra", "baseline+bf+ra")
FLAG_TOKENS = ("baseline", "bf", "ra")
FUZZY_WORDS = {"baseline": "baseline", "black-first": "bf", "reference-aware": "ra"}


class ModeResolver:
    def __init__(self):
        self.alternative_mappings: Dict[str, str] = {
            "full": "baseline+bf+ra",
            "proposed": "baseline+bf+ra",
            "bf+ra": "baseline+bf+ra",
            "ra+bf": "baseline+bf+ra",
            "bf": "baseline+bf",
            "black-first": "baseline+bf",
            "ra": "baseline+ra",
            "reference-aware": "baseline+ra",
            "base": "baseline",
            "plain": "baseline",
        }

    def normalize_input(self, text: str) -> str:
        """Lowercase, drop whitespace and order the +-separated flags"""
        if not text:
            return ""

        normalized = "".join(text.lower().split())
        parts = [p for p in normalized.split("+") if p]
        if not parts:
            return ""
        flags = sorted(p for p in parts if p != "baseline")
        if "baseline" in parts:
            return "+".join(["baseline"] + flags)
        return "+".join(flags)

    def resolve(self, mode: str) -> Optional[str]:
        """
        Resolve a mode string to its canonical form

        Args:
            mode: user-supplied mode name

        Returns:
            One of CANONICAL_MODES or None
        """
        normalized = self.normalize_input(mode)
        if not normalized:
            return None

        if normalized in CANONICAL_MODES:
            return normalized

        if normalized in self.alternative_mappings:
            canonical = self.alternative_mappings[normalized]
            logger.debug("mode alias %s -> %s", mode, canonical)
            return canonical

        best_match = self._fuzzy_match(normalized)
        if best_match:
            logger.info("mode %r interpreted as %r", mode, best_match)
        return best_match

    def _fuzzy_match(self, query: str, threshold: float = 0.85, margin: float = 0.05) -> Optional[str]:
        """
        Repair misspelled long words token by token

        Short flags (bf, ra) must be spelled exactly; a token close to two words
        within margin is ambiguous and rejects the whole query.
        """
        repaired = []
        for token in query.split("+"):
            if token in FLAG_TOKENS:
                repaired.append(token)
                continue
            scores = sorted(
                ((SequenceMatcher(None, token, word).ratio(), flag) for word, flag in FUZZY_WORDS.items()),
                reverse=True,
            )
            best_score, best_flag = scores[0]
            if best_score < threshold:
                return None
            if len(scores) > 1 and scores[1][0] >= best_score - margin and scores[1][1] != best_flag:
                logger.debug("mode token %r is ambiguous", token)
                return None
            repaired.append(best_flag)

        candidate = self.normalize_input("+".join(repaired))
        if candidate in CANONICAL_MODES:
            return candidate
        return self.alternative_mappings.get(candidate)

    def require(self, mode: str) -> str:
        resolved = self.resolve(mode)
        if resolved is None:
            raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(CANONICAL_MODES)}")
        return resolved


# Singleton instance
_resolver_instance: Optional[ModeResolver] = None


def get_mode_resolver() -> ModeResolver:
    """Get or create singleton mode resolver instance"""
    global _resolver_instance

    if _resolver_instance is None:
        _resolver_instance = ModeResolver()

    return _resolver_instance
