"""One PingPong endpoint over TCP, for running the two roles in separate processes.

B listens and prints `READY <port>` once bound; A connects. Each side prints
a JSON summary line when the protocol ends.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

from ..codegen.runtime import run_endpoint
from ..codegen.transport import tcp_connect, tcp_listen
from ..core.context import GlobalContext
from ..simulate import machines_for
from .. import corpus
from .pingpong import Player


def run_role(role: str, protocol: str = "pingpong1", rounds: int = 10, host: str = "127.0.0.1", port: int = 0,
             timeout: float = 30.0, ready=None) -> dict:
    machines, _ = machines_for(GlobalContext(), corpus.load(protocol))
    m = machines[role]
    player = Player(m, rounds if role == "A" else None)
    if role == "B":
        conn = tcp_listen("B", ["A"], host, port, timeout, ready=ready)
    else:
        conn = tcp_connect("A", {"B": (host, port)}, timeout)
    t0 = time.perf_counter()
    try:
        final = run_endpoint(m, player.callbacks(), conn)
    finally:
        conn.close()
    return {"role": role, "sent": conn.messages_sent, "received": len(conn.log) - conn.messages_sent,
            "last": player.last, "elapsed": round(time.perf_counter() - t0, 4),
            "final": {k: getattr(final, k) for k in final.__slots__}}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python3 -m rmpst.strategies.pingpong_tcp")
    ap.add_argument("--role", choices=("A", "B"), required=True)
    ap.add_argument("--protocol", default="pingpong1", choices=("pingpong1", "pingpong2", "pingpong3"))
    ap.add_argument("--rounds", type=int, default=10)
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=0)
    ap.add_argument("--timeout", type=float, default=30.0)
    args = ap.parse_args(argv)

    def ready(port):
        print(f"READY {port}", flush=True)

    summary = run_role(args.role, args.protocol, args.rounds, args.host, args.port, args.timeout, ready)
    print(json.dumps(summary), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
