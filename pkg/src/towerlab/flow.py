"""Exact integer max-flow (Dinic) with insertion-ordered, deterministic traversal."""

from __future__ import annotations

from collections import deque


class FlowNetwork:
    def __init__(self):
        self._index: dict = {}
        self._adj: list = []
        # edge arrays: head, residual capacity, original capacity
        self._to: list = []
        self._cap: list = []
        self._orig: list = []

    def node(self, key) -> int:
        idx = self._index.get(key)
        if idx is None:
            idx = len(self._adj)
            self._index[key] = idx
            self._adj.append([])
        return idx

    def add_edge(self, u, v, cap: int) -> int:
        """Add a directed arc and return its id (for :meth:`flow`)."""
        if cap < 0:
            raise ValueError("capacity must be nonnegative")
        a, b = self.node(u), self.node(v)
        eid = len(self._to)
        self._to += [b, a]
        self._cap += [cap, 0]
        self._orig += [cap, 0]
        self._adj[a].append(eid)
        self._adj[b].append(eid + 1)
        return eid

    def flow(self, eid: int) -> int:
        return self._orig[eid] - self._cap[eid]

    def max_flow(self, source, sink, limit: int | None = None) -> int:
        if source not in self._index or sink not in self._index:
            return 0
        s, t = self._index[source], self._index[sink]
        to, cap, adj = self._to, self._cap, self._adj
        total = 0
        while limit is None or total < limit:
            level = [-1] * len(adj)
            level[s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for e in adj[u]:
                    if cap[e] > 0 and level[to[e]] < 0:
                        level[to[e]] = level[u] + 1
                        queue.append(to[e])
            if level[t] < 0:
                break
            pointer = [0] * len(adj)

            def push(u, pushed):
                # iterative DFS along level graph
                stack = [(u, pushed)]
                path = []
                while stack:
                    node, amount = stack[-1]
                    if node == t:
                        flow = amount
                        for e in path:
                            cap[e] -= flow
                            cap[e ^ 1] += flow
                        return flow
                    advanced = False
                    while pointer[node] < len(adj[node]):
                        e = adj[node][pointer[node]]
                        v = to[e]
                        if cap[e] > 0 and level[v] == level[node] + 1:
                            stack.append((v, min(amount, cap[e])))
                            path.append(e)
                            advanced = True
                            break
                        pointer[node] += 1
                    if not advanced:
                        stack.pop()
                        if path:
                            path.pop()
                        level[node] = -1
                        if stack:
                            pointer[stack[-1][0]] += 1
                return 0

            while True:
                room = None if limit is None else limit - total
                got = push(s, room if room is not None else float("inf"))
                if not got:
                    break
                total += int(got)
                if limit is not None and total >= limit:
                    break
        return total
