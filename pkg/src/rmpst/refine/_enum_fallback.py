"""Numpy evaluator for the bounded validity check, used when the compiled kernel is absent."""
from __future__ import annotations

import numpy as np

CHUNK = 1 << 20


def _run(code: np.ndarray, env: list[np.ndarray]) -> np.ndarray:
    stack: list[np.ndarray] = []
    for pc in range(len(code) // 2):
        op, arg = int(code[2 * pc]), int(code[2 * pc + 1])
        if op == 0:
            stack.append(np.int64(arg))
        elif op == 1:
            stack.append(env[arg])
        elif op == 2:
            stack.append(-stack.pop())
        elif op == 3:
            stack.append((stack.pop() == 0).astype(np.int64))
        else:
            b = stack.pop()
            a = stack.pop()
            if op == 4:
                r = a + b
            elif op == 5:
                r = a - b
            elif op == 6:
                r = a * b
            elif op == 7:
                r = a == b
            elif op == 8:
                r = a != b
            elif op == 9:
                r = a < b
            elif op == 10:
                r = a <= b
            elif op == 11:
                r = a > b
            elif op == 12:
                r = a >= b
            elif op == 13:
                r = (a != 0) & (b != 0)
            else:
                r = (a != 0) | (b != 0)
            stack.append(np.asarray(r, dtype=np.int64))
    return stack[0]


def find_falsifying(code, values, offsets, sizes, stack_depth) -> int:
    """Same contract and visiting order as the compiled kernel."""
    code = np.asarray(code, dtype=np.int64)
    values = np.asarray(values, dtype=np.int64)
    sizes = [int(s) for s in sizes]
    if any(s == 0 for s in sizes):
        return -1
    total = int(np.prod(sizes, dtype=np.int64)) if sizes else 1
    if not sizes:
        return -1 if int(_run(code, [])) != 0 else 0
    for start in range(0, total, CHUNK):
        lin = np.arange(start, min(total, start + CHUNK), dtype=np.int64)
        idx = np.unravel_index(lin, sizes)
        env = [values[int(offsets[i]) + idx[i]] for i in range(len(sizes))]
        res = np.broadcast_to(_run(code, env), lin.shape)
        bad = np.flatnonzero(res == 0)
        if bad.size:
            return int(lin[bad[0]])
    return -1
