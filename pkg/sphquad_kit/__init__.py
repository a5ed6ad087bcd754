import logging
import os

from sphquad_kit.errors import SphQuadKitError
from sphquad_kit.langchain import create_sphquad_tools
from sphquad_kit.toolkit import SphQuadKit

logging.basicConfig(level=os.getenv("SPHQUAD_LOG_LEVEL", "INFO").upper(),
                    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")

__all__ = ["SphQuadKit", "SphQuadKitError", "create_sphquad_tools"]
