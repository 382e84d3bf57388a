import logging
from typing import Optional

from src.config.settings import LOG_LEVEL

_configured = False


def setup_logging(level: Optional[str] = None) -> None:
    """Configure the root logger once; later calls only adjust the level."""
    global _configured

    resolved = (level or LOG_LEVEL).upper()
    if not _configured:
        logging.basicConfig(
            level=resolved,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        _configured = True
    else:
        logging.getLogger().setLevel(resolved)
