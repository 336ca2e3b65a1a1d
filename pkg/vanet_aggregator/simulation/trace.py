#!/usr/bin/env python3
"""
Trace output: one tab-separated line per simulation event,
``time_ms  kind  node  packet_hex``.
"""

from typing import TextIO

from vanet_aggregator.packets import Packet, encode


class TraceWriter:
    """Writes trace lines to a text stream; a writer without stream is a no-op."""

    def __init__(self, stream: TextIO | None = None):
        self._stream = stream

    @property
    def enabled(self) -> bool:
        return self._stream is not None

    def write(self, time_ms: int, kind: str, node: object = "-", packet: Packet | bytes | None = None) -> None:
        if self._stream is None:
            return
        if packet is None:
            payload = ""
        elif isinstance(packet, bytes):
            payload = packet.hex()
        else:
            payload = encode(packet).hex()
        self._stream.write(f"{time_ms}\t{kind}\t{node}\t{payload}\n")
