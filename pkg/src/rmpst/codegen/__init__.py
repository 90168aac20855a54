"""Endpoint execution: generated APIs, the runtime interpreter, verified choosers and transports."""
from .chooser import Case, GuardedChooser, chooser_callbacks
from .generate import generate, load_generated, py_expr
from .runtime import run_endpoint
from .transport import Connection, MemoryNetwork, TcpConnection, tcp_connect, tcp_listen, tcp_pair

__all__ = ["Case", "GuardedChooser", "chooser_callbacks", "generate", "load_generated", "py_expr", "run_endpoint",
           "Connection", "MemoryNetwork", "TcpConnection", "tcp_connect", "tcp_listen", "tcp_pair"]
