"""Newline-delimited TCP services: sensor ingest on one port, queries on another.

Every received line gets exactly one reply line (blank lines get none).
Connections are handled on their own daemon threads and share one runtime.
"""
from __future__ import annotations

import logging
import socket
import threading

logger = logging.getLogger("score")

MAX_LINE_BYTES = 4096


class LineServer:
    """Threaded TCP acceptor that feeds each text line to ``handler``."""

    def __init__(self, name, handler, host="127.0.0.1", port=0):
        self.name = name
        self.handler = handler
        self.host = host
        self.port = port
        self._sock = None
        self._accept_thread = None
        self._running = False
        self._conns = set()
        self._conns_lock = threading.Lock()

    @property
    def address(self):
        return self._sock.getsockname()[:2] if self._sock is not None else (self.host, self.port)

    def start(self):
        if self._running:
            return self
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((self.host, self.port))
        sock.listen(16)
        sock.settimeout(1.0)  # lets the accept loop notice stop()
        self._sock = sock
        self._running = True
        self._accept_thread = threading.Thread(target=self._accept_loop, name=f"{self.name}-accept", daemon=True)
        self._accept_thread.start()
        logger.info("%s service listening on %s:%s", self.name, *self.address)
        return self

    def stop(self):
        if not self._running:
            return
        self._running = False
        with self._conns_lock:
            for conn in list(self._conns):
                try:
                    conn.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=5)
        logger.info("%s service stopped", self.name)

    def _accept_loop(self):
        while self._running:
            try:
                conn, peer = self._sock.accept()
            except TimeoutError:
                continue
            except OSError:
                if self._running:
                    logger.error("%s accept failed", self.name, exc_info=True)
                break
            conn.settimeout(None)
            with self._conns_lock:
                self._conns.add(conn)
            threading.Thread(
                target=self._serve_connection,
                args=(conn, peer),
                name=f"{self.name}-conn",
                daemon=True,
            ).start()

    def _serve_connection(self, conn, peer):
        logger.debug("%s: connection from %s:%s", self.name, *peer[:2])
        try:
            with conn, conn.makefile("rb") as reader:
                while self._running:
                    raw = reader.readline(MAX_LINE_BYTES + 1)
                    if not raw:
                        break
                    if len(raw) > MAX_LINE_BYTES and not raw.endswith(b"\n"):
                        # oversized line: answer once for the whole line
                        while True:
                            rest = reader.readline(MAX_LINE_BYTES)
                            if not rest or rest.endswith(b"\n"):
                                break
                    reply = self._reply(raw.decode("utf-8", errors="replace").rstrip("\r\n"))
                    if reply is not None:
                        conn.sendall((reply + "\n").encode("utf-8"))
        except OSError as exc:
            logger.debug("%s: connection %s:%s closed: %s", self.name, peer[0], peer[1], exc)
        finally:
            with self._conns_lock:
                self._conns.discard(conn)

    def _reply(self, line):
        try:
            return self.handler(line)
        except Exception:
            logger.exception("%s: handler failed on %r", self.name, line[:120])
            return "ERR internal"


def ingest_handler(runtime):
    def handle(line):
        if not line.strip():
            return None
        return runtime.ingest_ack(line)
    return handle


def ingest_server(runtime, host="127.0.0.1", port=0):
    return LineServer("ingest", ingest_handler(runtime), host=host, port=port)


def query_server(runtime, host="127.0.0.1", port=0):
    return LineServer("query", runtime.handle_query_line, host=host, port=port)
