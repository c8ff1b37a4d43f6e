"""
Main launcher for the magnon gadget lab.
Usage: python main.py <subcommand> [--config FILE] [--key VALUE ...]
"""

import logging
import sys
from pathlib import Path

# Add current directory to Python path for imports
sys.path.insert(0, str(Path(__file__).parent))

from settings import settings

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(settings.LOG_FILE, encoding="utf-8"),
        logging.StreamHandler(sys.stdout)
    ]
)

logger = logging.getLogger(__name__)


def main() -> int:
    """Application entry point."""
    from cli import main as cli_main

    logger.info(f"{settings.APP_TITLE} v{settings.APP_VERSION}")
    try:
        return cli_main()
    except KeyboardInterrupt:
        logger.info("Interrupted, stopping")
        return 130


if __name__ == "__main__":
    sys.exit(main())
