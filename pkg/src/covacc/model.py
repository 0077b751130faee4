"""Interconnected discrete-time plant and the covert injector acting on one node.

The plant is a directed network of linear subsystems

    x_i(k+1) = A_i x_i(k) + B_i u_i(k) + sum over inbound neighbors j of A_ij x_j(k)
    y_i(k)   = C_i x_i(k)

updated synchronously: every next state is computed from the common
pre-step snapshot, which makes the network exactly the stacked global
linear system.

The attacker owns one node.  It keeps a private replica of that node's
model, feeds the replica with whatever it injects at the actuator, and
subtracts the replica's output from the node's measurements.  The node's
own measurements therefore evolve as if nothing had been injected, which
is what makes the attack covert and local detection impossible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigurationError


def _matrix(value, label: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if arr.ndim != 2:
        raise ConfigurationError(f"{label}: expected a matrix, got ndim={arr.ndim}")
    return arr


def _vector(value, dim: int, label: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.shape != (dim,):
        raise ConfigurationError(f"{label}: expected length {dim}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Subsystem:
    """One node of the network."""

    index: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    x0: np.ndarray = None

    def __post_init__(self):
        tag = f"subsystem {self.index}"
        A = _matrix(self.A, f"{tag}.A")
        if A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise ConfigurationError(f"{tag}.A: expected square, got {A.shape}")
        n = A.shape[0]
        B = _matrix(self.B, f"{tag}.B")
        if B.shape[0] != n or B.shape[1] < 1:
            raise ConfigurationError(f"{tag}.B: expected {n} rows, got {B.shape}")
        C = _matrix(self.C, f"{tag}.C")
        if C.shape[1] != n or C.shape[0] < 1:
            raise ConfigurationError(f"{tag}.C: expected {n} columns, got {C.shape}")
        x0 = np.zeros(n) if self.x0 is None else _vector(self.x0, n, f"{tag}.x0")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "x0", x0)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class Topology:
    """Directed neighbor structure with one coupling block per inbound edge.

    ``neighbors[i]`` lists the nodes whose states feed node i;
    ``coupling[(i, j)]`` is the block applied to x_j inside node i's update.
    Edges are directed: j feeding i says nothing about i feeding j.
    """

    n_nodes: int
    neighbors: Mapping[int, tuple]
    coupling: Mapping[tuple, np.ndarray]

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ConfigurationError(f"topology: n_nodes must be positive, got {self.n_nodes}")
        nodes = set(range(1, self.n_nodes + 1))
        neighbors = {}
        for i in sorted(self.neighbors):
            if i not in nodes:
                raise ConfigurationError(f"topology.neighbors: node {i} out of range 1..{self.n_nodes}")
            seen = []
            for j in self.neighbors[i]:
                j = int(j)
                if j not in nodes:
                    raise ConfigurationError(
                        f"topology.neighbors[{i}]: neighbor {j} out of range 1..{self.n_nodes}"
                    )
                if j == i:
                    raise ConfigurationError(f"topology.neighbors[{i}]: self-loop not allowed")
                if j in seen:
                    raise ConfigurationError(f"topology.neighbors[{i}]: duplicate neighbor {j}")
                seen.append(j)
            neighbors[i] = tuple(seen)
        if set(neighbors) != nodes:
            missing = sorted(nodes - set(neighbors))
            raise ConfigurationError(f"topology.neighbors: missing entries for nodes {missing}")
        coupling = {}
        for key in self.coupling:
            i, j = int(key[0]), int(key[1])
            if j not in neighbors.get(i, ()):
                raise ConfigurationError(
                    f"topology.coupling[({i},{j})]: ({i},{j}) is not an edge of the neighbor sets"
                )
            coupling[(i, j)] = _matrix(self.coupling[key], f"topology.coupling[({i},{j})]")
        for i, nbrs in neighbors.items():
            for j in nbrs:
                if (i, j) not in coupling:
                    raise ConfigurationError(f"topology.coupling: no block for edge ({i},{j})")
        object.__setattr__(self, "neighbors", neighbors)
        object.__setattr__(self, "coupling", coupling)

    def inbound(self, i: int) -> tuple:
        """Nodes whose states feed node i, in declaration order."""
        return self.neighbors[i]

    def sources(self, i: int) -> tuple:
        """Nodes that receive node i's state through their own coupling, ascending."""
        return tuple(sorted(j for j in self.neighbors if i in self.neighbors[j]))

    def outbound_stack(self, i: int, state_dim: int) -> np.ndarray:
        """Vertical stack of the blocks through which node i's state reaches others.

        Rows follow ``sources(i)`` order.  Empty (0 x state_dim) when nobody
        listens to node i.
        """
        blocks = [self.coupling[(j, i)] for j in self.sources(i)]
        if not blocks:
            return np.zeros((0, state_dim))
        return np.vstack(blocks)

    def one_way_pairs(self) -> list:
        """Directed edges whose reverse edge is absent."""
        return [
            (i, j)
            for i in sorted(self.neighbors)
            for j in self.neighbors[i]
            if i not in self.neighbors[j]
        ]


@dataclass
class AttackerState:
    """Covert injector pinned to one node.

    ``signal`` gives the injected actuator input as a function of the step
    index; it is ignored before ``onset``.  ``state`` is the private
    replica state, held at zero until the attack starts.
    """

    target: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    onset: int
    signal: Callable[[int], np.ndarray]
    state: np.ndarray = None

    def __post_init__(self):
        tag = f"attacker on node {self.target}"
        self.A = _matrix(self.A, f"{tag}: A")
        n = self.A.shape[0]
        self.B = _matrix(self.B, f"{tag}: B")
        self.C = _matrix(self.C, f"{tag}: C")
        if self.A.shape != (n, n) or self.B.shape[0] != n or self.C.shape[1] != n:
            raise ConfigurationError(f"{tag}: inconsistent model dimensions")
        if self.onset < 0:
            raise ConfigurationError(f"{tag}: onset must be non-negative, got {self.onset}")
        self.state = np.zeros(n) if self.state is None else _vector(self.state, n, f"{tag}: state")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def injected(self, k: int) -> np.ndarray:
        """Injected input at step k, identically zero before onset."""
        if k < self.onset:
            return np.zeros(self.m)
        return _vector(self.signal(k), self.m, f"attacker signal at step {k}")

    def output_mask(self) -> np.ndarray:
        """The replica output currently being subtracted from the measurements."""
        return self.C @ self.state


def step_plant(
    subsystems: Mapping[int, Subsystem],
    topology: Topology,
    states: Mapping[int, np.ndarray],
    inputs: Mapping[int, np.ndarray],
) -> dict:
    """Advance every node one step from the common snapshot.

    ``inputs`` holds the actuator inputs actually applied (injection
    included, if any).  Returns the next states keyed by node.
    """
    nxt = {}
    for i in sorted(subsystems):
        sub = subsystems[i]
        u = _vector(inputs[i], sub.m, f"input of node {i}")
        x = sub.A @ states[i] + sub.B @ u
        for j in topology.inbound(i):
            x = x + topology.coupling[(i, j)] @ states[j]
        nxt[i] = x
    return nxt


def step_attacker(attacker: AttackerState, u: np.ndarray, k: int):
    """Apply the injection at step k.

    Returns (applied input, output mask, next replica state).  The caller
    stores the next replica state back; before onset the input passes
    through untouched and the replica stays at rest.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if k < attacker.onset:
        return u.copy(), np.zeros(attacker.C.shape[0]), np.zeros(attacker.n)
    inj = attacker.injected(k)
    mask = attacker.C @ attacker.state
    state_next = attacker.A @ attacker.state + attacker.B @ inj
    return u + inj, mask, state_next


def measured_output(subsystem: Subsystem, x: np.ndarray, output_mask: np.ndarray = None) -> np.ndarray:
    """Measurement leaving the node: C x, minus the attacker's mask when present."""
    y = subsystem.C @ np.asarray(x, dtype=float)
    if output_mask is None:
        return y
    return y - np.asarray(output_mask, dtype=float)
