"""Wengert-list reverse-mode autodiff.

A :class:`Tape` records primitive applications in execution order, so the
list is topologically sorted by construction. :class:`Var` is a handle to one
recorded value. Primitives called on plain ndarrays skip recording entirely,
which is how inference runs without a tape.
"""

import numpy as np

from ..errors import ShapeError, UsageError

LEAF = "leaf"
CONST = "const"


class Node:
    __slots__ = ("op", "inputs", "attrs", "name")

    def __init__(self, op, inputs=(), attrs=None, name=None):
        self.op = op
        self.inputs = inputs
        self.attrs = attrs or {}
        self.name = name

    def __repr__(self):
        return f"Node({self.op!r}, inputs={self.inputs}, name={self.name!r})"


class Tape:
    """Recorded computation: nodes, their values, and backward caches."""

    def __init__(self):
        self.nodes = []
        self.values = []
        self._saved = []
        self.leaves = {}
        self.output = None
        self.consumed = False

    def __len__(self):
        return len(self.nodes)

    def _push(self, node, value, saved=None):
        self.nodes.append(node)
        self.values.append(value)
        self._saved.append(saved)
        return Var(self, len(self.nodes) - 1)

    def leaf(self, name, value):
        if name in self.leaves:
            raise UsageError(f"duplicate leaf name {name!r}")
        value = np.asarray(value, dtype=np.float64)
        var = self._push(Node(LEAF, name=name), value)
        self.leaves[name] = var.index
        return var

    def const(self, value):
        return self._push(Node(CONST), np.asarray(value, dtype=np.float64))

    def record(self, op, args, attrs):
        from .ops import PRIMITIVES

        prim = PRIMITIVES[op]
        idx = []
        for a in args:
            if isinstance(a, Var):
                if a.tape is not self:
                    raise UsageError(f"{op}: operands belong to different tapes")
                idx.append(a.index)
            else:
                idx.append(self.const(a).index)
        vals = [self.values[i] for i in idx]
        out, saved = prim.forward(*vals, **attrs)
        return self._push(Node(op, tuple(idx), attrs), out, saved)

    def replay(self):
        """Re-evaluate every node from the leaf and constant values."""
        from .ops import PRIMITIVES

        vals = []
        for node, stored in zip(self.nodes, self.values):
            if node.op in (LEAF, CONST):
                vals.append(stored)
            else:
                out, _ = PRIMITIVES[node.op].forward(*(vals[i] for i in node.inputs), **node.attrs)
                vals.append(out)
        return vals


class Var:
    """Handle to a value recorded on a tape."""

    __slots__ = ("tape", "index")
    __array_priority__ = 1000

    def __init__(self, tape, index):
        self.tape = tape
        self.index = index

    @property
    def value(self):
        return self.tape.values[self.index]

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(#{self.index}, op={self.tape.nodes[self.index].op!r}, shape={self.shape})"

    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops

        return ops.add(ops.neg(self), other)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops

        return ops.neg(self)


def record_forward(expr, leaves):
    """Evaluate ``expr(**leaf_vars)`` on a fresh tape.

    Returns ``(value, tape)`` where ``value`` is the output ndarray.
    """
    tape = Tape()
    handles = {name: tape.leaf(name, val) for name, val in leaves.items()}
    out = expr(**handles)
    if not isinstance(out, Var):
        out = tape.const(out)
    tape.output = out.index
    return out.value, tape


def backward(tape, seed_grad=None):
    """Reverse sweep from ``tape.output``; returns ``{leaf_name: gradient}``.

    A tape can be swept once; a second call raises :class:`UsageError`.
    """
    from .ops import PRIMITIVES

    if tape.consumed:
        raise UsageError("tape already consumed by a previous backward pass")
    if tape.output is None:
        raise UsageError("tape has no recorded output")
    out_val = tape.values[tape.output]
    if seed_grad is None:
        seed_grad = np.ones_like(out_val)
    seed_grad = np.asarray(seed_grad, dtype=np.float64)
    if seed_grad.shape != out_val.shape:
        raise ShapeError(f"backward: seed shape {seed_grad.shape} != output shape {out_val.shape}")
    tape.consumed = True

    grads = [None] * len(tape.nodes)
    grads[tape.output] = seed_grad
    for i in range(tape.output, -1, -1):
        g = grads[i]
        if g is None:
            continue
        node = tape.nodes[i]
        if node.op in (LEAF, CONST):
            continue
        ins = [tape.values[j] for j in node.inputs]
        in_grads = PRIMITIVES[node.op].backward(g, ins, tape.values[i], tape._saved[i], **node.attrs)
        for j, gj in zip(node.inputs, in_grads):
            if gj is None or tape.nodes[j].op == CONST:
                continue
            grads[j] = gj if grads[j] is None else grads[j] + gj
        # free intermediates as we go; the tape is single-use
        tape._saved[i] = None
        grads[i] = None

    return {
        name: (grads[idx] if grads[idx] is not None else np.zeros_like(tape.values[idx]))
        for name, idx in tape.leaves.items()
    }
