"""Connections between endpoints and the wire format for base values.

Labels and strings are a 4-byte big-endian length followed by UTF-8 bytes,
ints are 8-byte big-endian two's complement, bools one byte (0 or 1) and
unit values take no bytes.
"""
from __future__ import annotations

import queue
import socket
import struct
import threading
import time

from ..core.errors import RuntimeViolation

DEFAULT_TIMEOUT = 10.0
QUEUE_BOUND = 1024

_INT = struct.Struct(">q")
_LEN = struct.Struct(">I")


def encode_int(v: int) -> bytes:
    return _INT.pack(v)


def encode_bool(v: bool) -> bytes:
    return b"\x01" if v else b"\x00"


def encode_string(v: str) -> bytes:
    data = v.encode("utf-8")
    return _LEN.pack(len(data)) + data


def encode_unit(v=None) -> bytes:
    return b""


ENCODERS = {"int": encode_int, "bool": encode_bool, "string": encode_string, "unit": encode_unit}


def encode(base: str, v) -> bytes:
    return ENCODERS[base](v)


def _deser(detail: str) -> RuntimeViolation:
    return RuntimeViolation("Deserialization", None, detail)


class Connection:
    """Typed send and receive primitives over per-peer FIFO byte streams.

    Subclasses provide `_send(peer, data)` and `_recv(peer, n)`. Every label
    sent or received is appended to `log` as `(direction, peer, label)`.
    """

    def __init__(self, role: str = ""):
        self.role = role
        self.log: list[tuple[str, str, str]] = []

    def _send(self, peer: str, data: bytes) -> None:
        raise NotImplementedError

    def _recv(self, peer: str, n: int) -> bytes:
        raise NotImplementedError

    def close(self) -> None:
        pass

    # typed primitives
    def send_int(self, peer: str, v: int) -> None:
        if isinstance(v, bool) or not isinstance(v, int):
            raise TypeError(f"int payload expected, got {v!r}")
        try:
            self._send(peer, encode_int(v))
        except struct.error as e:
            raise RuntimeViolation("Deserialization", None, f"int {v} does not fit in 64 bits") from e

    def recv_int(self, peer: str) -> int:
        return _INT.unpack(self._recv(peer, 8))[0]

    def send_bool(self, peer: str, v: bool) -> None:
        if not isinstance(v, bool):
            raise TypeError(f"bool payload expected, got {v!r}")
        self._send(peer, encode_bool(v))

    def recv_bool(self, peer: str) -> bool:
        b = self._recv(peer, 1)
        if b not in (b"\x00", b"\x01"):
            raise _deser(f"invalid bool byte {b!r} from {peer}")
        return b == b"\x01"

    def send_string(self, peer: str, v: str) -> None:
        if not isinstance(v, str):
            raise TypeError(f"string payload expected, got {v!r}")
        self._send(peer, encode_string(v))

    def recv_string(self, peer: str) -> str:
        (n,) = _LEN.unpack(self._recv(peer, 4))
        data = self._recv(peer, n) if n else b""
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise _deser(f"invalid UTF-8 from {peer}: {e}") from e

    def send_unit(self, peer: str, v=None) -> None:
        pass

    def recv_unit(self, peer: str) -> None:
        return None

    def send_label(self, peer: str, label: str) -> None:
        self.send_string(peer, label)
        self.log.append(("!", peer, label))

    def recv_label(self, peer: str) -> str:
        label = self.recv_string(peer)
        self.log.append(("?", peer, label))
        return label

    def send_value(self, peer: str, base: str, v) -> None:
        getattr(self, f"send_{base}")(peer, v)

    def recv_value(self, peer: str, base: str):
        return getattr(self, f"recv_{base}")(peer)

    @property
    def messages_sent(self) -> int:
        return sum(1 for d, _, _ in self.log if d == "!")


# ---------------------------------------------------------------------------
# In-memory


class _Pipe:
    """One direction between two endpoints: a bounded queue of byte chunks."""

    def __init__(self, bound: int):
        self.q: queue.Queue = queue.Queue(maxsize=bound)
        self.buf = bytearray()
        self.closed = False


_CLOSED = object()


class MemoryConnection(Connection):
    def __init__(self, role: str, network: "MemoryNetwork", timeout: float):
        super().__init__(role)
        self.network = network
        self.timeout = timeout

    def _pipe(self, src: str, dst: str) -> _Pipe:
        return self.network.pipe(src, dst)

    def _send(self, peer: str, data: bytes) -> None:
        if not data:
            return
        p = self._pipe(self.role, peer)
        if p.closed:
            raise RuntimeViolation("PeerClosed", None, f"connection to {peer} is closed")
        try:
            p.q.put(bytes(data), timeout=self.timeout)
        except queue.Full as e:
            raise RuntimeViolation("PeerClosed", None, f"sending to {peer} timed out") from e

    def _recv(self, peer: str, n: int) -> bytes:
        p = self._pipe(peer, self.role)
        deadline = time.monotonic() + self.timeout
        while len(p.buf) < n:
            left = deadline - time.monotonic()
            if left <= 0:
                raise RuntimeViolation("PeerClosed", None, f"receiving from {peer} timed out")
            try:
                chunk = p.q.get(timeout=left)
            except queue.Empty:
                continue
            if chunk is _CLOSED:
                p.closed = True
                raise RuntimeViolation("PeerClosed", None, f"{peer} closed the connection")
            p.buf.extend(chunk)
        out = bytes(p.buf[:n])
        del p.buf[:n]
        return out

    def close(self) -> None:
        for peer in self.network.roles:
            if peer != self.role:
                p = self._pipe(self.role, peer)
                if not p.closed:
                    p.closed = True
                    try:
                        p.q.put_nowait(_CLOSED)
                    except queue.Full:
                        pass


class MemoryNetwork:
    """Bounded FIFO pipes between every pair of roles in one process."""

    def __init__(self, roles, bound: int = QUEUE_BOUND, timeout: float = DEFAULT_TIMEOUT):
        self.roles = tuple(roles)
        self.bound = bound
        self.timeout = timeout
        self._pipes: dict[tuple[str, str], _Pipe] = {}
        self._lock = threading.Lock()

    def pipe(self, src: str, dst: str) -> _Pipe:
        with self._lock:
            p = self._pipes.get((src, dst))
            if p is None:
                p = self._pipes[(src, dst)] = _Pipe(self.bound)
            return p

    def connection(self, role: str) -> MemoryConnection:
        return MemoryConnection(role, self, self.timeout)


# ---------------------------------------------------------------------------
# TCP


class TcpConnection(Connection):
    """One TCP socket per peer."""

    def __init__(self, role: str, sockets: dict[str, socket.socket], timeout: float = DEFAULT_TIMEOUT):
        super().__init__(role)
        self.sockets = sockets
        self.timeout = timeout
        self._files = {}
        for peer, s in sockets.items():
            s.settimeout(timeout)
            s.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self._files[peer] = s.makefile("rb")

    def _sock(self, peer: str) -> socket.socket:
        s = self.sockets.get(peer)
        if s is None:
            raise RuntimeViolation("PeerClosed", None, f"no connection to {peer}")
        return s

    def _send(self, peer: str, data: bytes) -> None:
        if not data:
            return
        try:
            self._sock(peer).sendall(data)
        except OSError as e:
            raise RuntimeViolation("PeerClosed", None, f"sending to {peer} failed: {e}") from e

    def _recv(self, peer: str, n: int) -> bytes:
        self._sock(peer)
        try:
            data = self._files[peer].read(n)
        except OSError as e:
            raise RuntimeViolation("PeerClosed", None, f"receiving from {peer} failed: {e}") from e
        if len(data) < n:
            raise RuntimeViolation("PeerClosed", None, f"{peer} closed the connection")
        return data

    def close(self) -> None:
        for f in self._files.values():
            f.close()
        for s in self.sockets.values():
            try:
                s.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            s.close()


def _hello(s: socket.socket, role: str) -> None:
    s.sendall(encode_string(role))


def _recv_exact(s: socket.socket, n: int) -> bytes:
    # Unbuffered so that protocol bytes after the greeting stay in the socket.
    out = bytearray()
    while len(out) < n:
        chunk = s.recv(n - len(out))
        if not chunk:
            raise RuntimeViolation("PeerClosed", None, "peer closed during greeting")
        out.extend(chunk)
    return bytes(out)


def _read_hello(s: socket.socket) -> str:
    (n,) = _LEN.unpack(_recv_exact(s, 4))
    return _recv_exact(s, n).decode("utf-8")


def tcp_listen(role: str, peers, host: str = "127.0.0.1", port: int = 0,
               timeout: float = DEFAULT_TIMEOUT, ready=None) -> TcpConnection:
    """Accept one connection from each peer; peers announce their role first.

    `ready`, if given, is called with the bound port before accepting.
    """
    peers = set(peers)
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(len(peers))
    srv.settimeout(timeout)
    if ready is not None:
        ready(srv.getsockname()[1])
    socks = {}
    try:
        while peers - set(socks):
            try:
                s, _ = srv.accept()
            except socket.timeout as e:
                raise RuntimeViolation("PeerClosed", None, f"no connection from {sorted(peers - set(socks))}") from e
            s.settimeout(timeout)
            who = _read_hello(s)
            if who not in peers:
                s.close()
                continue
            socks[who] = s
    finally:
        srv.close()
    return TcpConnection(role, socks, timeout)


def tcp_connect(role: str, addresses: dict[str, tuple[str, int]], timeout: float = DEFAULT_TIMEOUT,
                retry_for: float = 5.0) -> TcpConnection:
    """Connect to each peer's listening address, retrying refused connections briefly."""
    socks = {}
    for peer, addr in addresses.items():
        deadline = time.monotonic() + retry_for
        while True:
            try:
                s = socket.create_connection(addr, timeout=timeout)
                break
            except ConnectionRefusedError as e:
                if time.monotonic() > deadline:
                    raise RuntimeViolation("PeerClosed", None, f"{peer} refused the connection at {addr}") from e
                time.sleep(0.05)
        _hello(s, role)
        socks[peer] = s
    return TcpConnection(role, socks, timeout)


def tcp_pair(a: str, b: str, timeout: float = DEFAULT_TIMEOUT) -> tuple[TcpConnection, TcpConnection]:
    """Two connected endpoints over loopback, for same-process tests."""
    port_box: list[int] = []
    ready = threading.Event()
    result: dict = {}

    def serve():
        try:
            result["a"] = tcp_listen(a, [b], port=0, timeout=timeout,
                                     ready=lambda p: (port_box.append(p), ready.set()))
        except Exception as e:  # pragma: no cover - surfaced below
            result["err"] = e
            ready.set()

    th = threading.Thread(target=serve, daemon=True)
    th.start()
    ready.wait(timeout)
    if "err" in result:
        raise result["err"]
    cb = tcp_connect(b, {a: ("127.0.0.1", port_box[0])}, timeout)
    th.join(timeout)
    if "err" in result:
        raise result["err"]
    return result["a"], cb


def free_port(host: str = "127.0.0.1") -> int:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.bind((host, 0))
        return s.getsockname()[1]

