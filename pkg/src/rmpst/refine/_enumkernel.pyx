# Compiled evaluator for the bounded validity check.
#
# A formula is a postfix program of (opcode, argument) pairs over int64
# values; booleans are 0/1. Assignments are visited in odometer order with
# the last variable varying fastest, the same order as the numpy fallback.
from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, free

cdef enum:
    MAX_VARS = 64


cdef inline int64_t _eval(const int64_t[:] code, int64_t n, int64_t* env, int64_t* stack) noexcept nogil:
    cdef int64_t pc = 0, sp = 0, op, arg, a, b
    while pc < n:
        op = code[2 * pc]
        arg = code[2 * pc + 1]
        pc += 1
        if op == 0:
            stack[sp] = arg
            sp += 1
        elif op == 1:
            stack[sp] = env[arg]
            sp += 1
        elif op == 2:
            stack[sp - 1] = -stack[sp - 1]
        elif op == 3:
            stack[sp - 1] = 1 if stack[sp - 1] == 0 else 0
        else:
            sp -= 1
            b = stack[sp]
            a = stack[sp - 1]
            if op == 4:
                a = a + b
            elif op == 5:
                a = a - b
            elif op == 6:
                a = a * b
            elif op == 7:
                a = 1 if a == b else 0
            elif op == 8:
                a = 1 if a != b else 0
            elif op == 9:
                a = 1 if a < b else 0
            elif op == 10:
                a = 1 if a <= b else 0
            elif op == 11:
                a = 1 if a > b else 0
            elif op == 12:
                a = 1 if a >= b else 0
            elif op == 13:
                a = 1 if (a != 0 and b != 0) else 0
            else:
                a = 1 if (a != 0 or b != 0) else 0
            stack[sp - 1] = a
    return stack[0]


def find_falsifying(const int64_t[:] code, const int64_t[:] values, const int64_t[:] offsets,
                    const int64_t[:] sizes, int64_t stack_depth):
    """Linear index of the first assignment making the program false, or -1."""
    cdef int64_t nvars = sizes.shape[0]
    cdef int64_t n = code.shape[0] // 2
    cdef int64_t idx[MAX_VARS]
    cdef int64_t env[MAX_VARS]
    cdef int64_t i, k, linear = 0
    cdef int64_t result = -1
    if nvars > MAX_VARS:
        raise ValueError("too many variables for the compiled kernel")
    for i in range(nvars):
        if sizes[i] == 0:
            return -1
        idx[i] = 0
        env[i] = values[offsets[i]]
    cdef int64_t* stack = <int64_t*> malloc(sizeof(int64_t) * (stack_depth + 1))
    if stack == NULL:
        raise MemoryError()
    try:
        with nogil:
            while True:
                if _eval(code, n, env, stack) == 0:
                    result = linear
                    break
                linear += 1
                k = nvars - 1
                while k >= 0:
                    idx[k] += 1
                    if idx[k] < sizes[k]:
                        env[k] = values[offsets[k] + idx[k]]
                        break
                    idx[k] = 0
                    env[k] = values[offsets[k]]
                    k -= 1
                if k < 0:
                    break
    finally:
        free(stack)
    return result
