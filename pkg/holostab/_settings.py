"""
This module contains the object that carries process-wide defaults read from the
environment (or a ``.env`` file in the working directory).
"""

import logging
import os
from pathlib import Path
from typing import Optional, Union

from dotenv import load_dotenv

load_dotenv()


# pylint: disable=too-few-public-methods
class Settings:
    """
    Environment-backed defaults shared by the benchmark, ingest and CLI layers.

    Attributes:
        threads (int): Worker cap for parallel benchmark instances and shortest-path
            sweeps (HOLOSTAB_THREADS, default 1).
        log_level (str): Logging level name (HOLOSTAB_LOG_LEVEL, default WARNING).
        data_dir (Path): Directory searched for transportation datasets
            (HOLOSTAB_DATA_DIR, default ./data).
    """

    __threads = os.getenv("HOLOSTAB_THREADS", "1")
    __log_level = os.getenv("HOLOSTAB_LOG_LEVEL", "WARNING")
    __data_dir = os.getenv("HOLOSTAB_DATA_DIR", "data")

    def __init__(
        self,
        threads: Optional[int] = None,
        log_level: Optional[str] = None,
        data_dir: Optional[Union[str, Path]] = None,
    ):
        """
        Initialize the Settings instance.

        Args:
            threads (int, optional): Worker cap; falls back to HOLOSTAB_THREADS.
            log_level (str, optional): Level name; falls back to HOLOSTAB_LOG_LEVEL.
            data_dir (str | Path, optional): Dataset directory; falls back to HOLOSTAB_DATA_DIR.

        Raises:
            RuntimeError: If the thread count is not a positive integer or the level name
            is unknown to the logging module.
        """
        if threads is None:
            try:
                threads = int(os.getenv("HOLOSTAB_THREADS", self.__threads))
            except ValueError as exc:
                raise RuntimeError("HOLOSTAB_THREADS must be a positive integer") from exc

        if not log_level:
            log_level = os.getenv("HOLOSTAB_LOG_LEVEL", self.__log_level)

        if data_dir is None:
            data_dir = os.getenv("HOLOSTAB_DATA_DIR", self.__data_dir)

        if threads < 1:
            raise RuntimeError("HOLOSTAB_THREADS must be a positive integer")

        level = logging.getLevelName(str(log_level).upper())
        if not isinstance(level, int):
            raise RuntimeError(f"Unknown log level {log_level!r}")

        self.threads = threads
        self.log_level = str(log_level).upper()
        self.data_dir = Path(data_dir)

    def configure_logging(self) -> None:
        """Configure the root logger at the selected level."""
        logging.basicConfig(
            level=self.log_level,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
