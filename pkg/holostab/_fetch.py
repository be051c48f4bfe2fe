"""
This module downloads public transportation datasets in TNTP format.
"""

import logging
from pathlib import Path
from typing import Dict, Union

import requests

from holostab._exceptions import DownloadError
from holostab._utils.files import atomic_write_text

logger = logging.getLogger(__name__)

TNTP_BASE_URL = "https://raw.githubusercontent.com/bstabler/TransportationNetworks/master"
TIMEOUT_SECS = 30


def _get(url: str) -> str:
    """
    Fetch a text resource.

    Raises:
        DownloadError: The request failed or returned an error status.
    """
    try:
        response = requests.get(url, timeout=TIMEOUT_SECS)
    except requests.RequestException as exc:
        raise DownloadError(url, None, str(exc)) from exc

    try:
        response.raise_for_status()
    except requests.HTTPError as exc:
        # keep the server body for the caller
        raise DownloadError(url, response.status_code, response.text) from exc

    return response.text


def fetch_tntp(name: str, dest: Union[str, Path]) -> Dict[str, Path]:
    """
    Download ``<name>_net.tntp`` and ``<name>_trips.tntp`` of a network.

    Args:
        name (str): Network directory in the TransportationNetworks repository,
            e.g. ``"Anaheim"``.
        dest (str | Path): Directory the files are written to.

    Returns:
        dict: Paths of the written files under the keys ``net`` and ``trips``.

    Raises:
        DownloadError: A file could not be retrieved.
    """
    dest = Path(dest)
    written = {}
    for role in ("net", "trips"):
        filename = f"{name}_{role}.tntp"
        url = f"{TNTP_BASE_URL}/{name}/{filename}"
        logger.info("Downloading %s", url)
        written[role] = atomic_write_text(dest / filename, _get(url))
    return written
