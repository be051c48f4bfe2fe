"""
DownloadError module

This module provides the DownloadError class, raised when a public dataset
cannot be retrieved over HTTP.

Classes:
    DownloadError
"""

from holostab._exceptions.errors import HolostabError


class DownloadError(HolostabError):
    """
    Represents a failed dataset download.

    Attributes:
        url (str): The URL that was requested.
        status_code (int): The HTTP status code of the response, or None when the
            request never produced one (timeouts, DNS failures).
        response_text (str): The text associated with the error response.
    """

    def __init__(self, url, status_code, response_text):
        self.url = url
        self.status_code = status_code
        self.response_text = response_text
        super().__init__(f"HTTP Error {status_code} for {url}: {response_text}")
