"""TCP fan-out of newline-delimited records.

The publisher never blocks on the network: every client owns a bounded
byte queue drained by its own writer thread, and a client that falls more
than the buffer limit behind is dropped so the tracking loop keeps pace.
"""

from __future__ import annotations

import logging
import socket
import threading
from collections import deque

log = logging.getLogger(__name__)

DEFAULT_MAX_BUFFERED = 1 << 20  # bytes queued per client before it is dropped


class _Client:
    def __init__(self, conn: socket.socket, limit: int):
        self.conn = conn
        self.limit = limit
        self.queue: deque[bytes] = deque()
        self.buffered = 0
        self.cond = threading.Condition()
        self.alive = True
        self.finishing = False
        self.thread = threading.Thread(target=self._write_loop, daemon=True)
        self.thread.start()

    def enqueue(self, payload: bytes) -> bool:
        with self.cond:
            if not self.alive:
                return False
            if self.buffered + len(payload) > self.limit:
                # slow consumer: drop it rather than stall the producer
                self.alive = False
                self.cond.notify()
                self._close_socket()
                return False
            self.queue.append(payload)
            self.buffered += len(payload)
            self.cond.notify()
            return True

    def _write_loop(self):
        while True:
            with self.cond:
                while self.alive and not self.queue and not self.finishing:
                    self.cond.wait()
                if not self.alive or (self.finishing and not self.queue):
                    break
                payload = self.queue.popleft()
                self.buffered -= len(payload)
            try:
                self.conn.sendall(payload)
            except OSError:
                with self.cond:
                    self.alive = False
                break
        self._close_socket()

    def _close_socket(self):
        try:
            self.conn.close()
        except OSError:
            pass

    def finish(self, timeout: float):
        with self.cond:
            self.finishing = True
            self.cond.notify()
        self.thread.join(timeout)
        with self.cond:
            self.alive = False
            self.cond.notify()
        self._close_socket()


class StreamServer:
    """Accepts clients and fans published lines out to all of them.

    A client receives every record published after it connected, in order
    and with no gaps, unless it is dropped for falling behind.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 max_buffered: int = DEFAULT_MAX_BUFFERED):
        self._limit = max_buffered
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen()
        self._lock = threading.Lock()
        self._clients: list[_Client] = []
        self._closing = False
        self._acceptor = threading.Thread(target=self._accept_loop, daemon=True)
        self._acceptor.start()

    @property
    def address(self) -> tuple[str, int]:
        name = self._listener.getsockname()
        return name[0], name[1]

    def _accept_loop(self):
        while True:
            try:
                conn, peer = self._listener.accept()
            except OSError:
                break
            if self._closing:
                conn.close()
                break
            log.info("stream client connected: %s:%s", *peer[:2])
            with self._lock:
                self._clients.append(_Client(conn, self._limit))

    def publish(self, line: bytes) -> None:
        """Queue one already-terminated line for every connected client."""
        with self._lock:
            targets = list(self._clients)
        dropped = [c for c in targets if not c.enqueue(line)]
        if dropped:
            with self._lock:
                self._clients = [c for c in self._clients if c not in dropped]
            log.info("dropped %d slow stream client(s)", len(dropped))

    def client_count(self) -> int:
        with self._lock:
            return len(self._clients)

    def close(self, flush_timeout: float = 2.0) -> None:
        """Stop accepting, flush what each client has queued, disconnect."""
        self._closing = True
        try:
            self._listener.close()
        except OSError:
            pass
        with self._lock:
            clients = list(self._clients)
            self._clients = []
        for client in clients:
            client.finish(flush_timeout)
