"""CDCL SAT core: watched literals, VSIDS, Luby restarts, LBD-based cleanup.

Literals are ints: variable v as v<<1, its negation v<<1|1.  The solver is
written for tight Python inner loops (local aliasing, no per-literal objects)
rather than elegance; it routinely handles the few-hundred-thousand-clause
instances the route encodings produce.
"""

from __future__ import annotations

from heapq import heappush, heappop

UNDEF = 2


def _luby(i: int) -> int:
    k = 1
    while (1 << (k + 1)) <= i + 1:
        k += 1
    while (1 << k) - 1 != i + 1:
        i = i - (1 << k) + 1
        k = 1
        while (1 << (k + 1)) <= i + 1:
            k += 1
    return 1 << (k - 1)


class Sat:
    def __init__(self):
        self.clauses = []  # list[list[int]] | None when deleted
        self.learnt_info = {}  # clause idx -> lbd
        self.watches = []  # per literal: list of [cref, blocker]
        self.assigns = []  # per var: 0 | 1 | UNDEF
        self.level = []
        self.reason = []
        self.phase = []
        self.activity = []
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.heap = []
        self.var_inc = 1.0
        self.ok = True
        self.n_conflicts = 0
        self.max_learnts = 20000

    def new_var(self) -> int:
        v = len(self.assigns)
        self.assigns.append(UNDEF)
        self.level.append(0)
        self.reason.append(-1)
        self.phase.append(0)
        self.activity.append(0.0)
        self.watches.append([])
        self.watches.append([])
        return v

    def value(self, lit: int) -> int:
        a = self.assigns[lit >> 1]
        return a if a == UNDEF else a ^ (lit & 1)

    def add_clause(self, lits) -> bool:
        """Add a problem clause at decision level 0."""
        if not self.ok:
            return False
        out = []
        seen = set()
        for lit in lits:
            if lit in seen:
                continue
            if lit ^ 1 in seen:
                return True  # tautology
            a = self.assigns[lit >> 1]
            if a != UNDEF and self.level[lit >> 1] == 0:
                if a ^ (lit & 1) == 1:
                    return True  # satisfied at root
                continue  # false at root: drop literal
            seen.add(lit)
            out.append(lit)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            self._enqueue(out[0], -1)
            self.ok = self.propagate() == -1
            return self.ok
        cref = len(self.clauses)
        self.clauses.append(out)
        self.watches[out[0] ^ 1].append([cref, out[1]])
        self.watches[out[1] ^ 1].append([cref, out[0]])
        return True

    def _enqueue(self, lit: int, reason: int) -> None:
        v = lit >> 1
        self.assigns[v] = 1 - (lit & 1)
        self.phase[v] = 1 - (lit & 1)
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def propagate(self) -> int:
        """Unit propagation; returns a conflicting clause index or -1."""
        assigns = self.assigns
        clauses = self.clauses
        watches = self.watches
        trail = self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            false_lit = p ^ 1
            ws = watches[p]  # clauses watching the literal that just went false
            j = 0
            i = 0
            n = len(ws)
            while i < n:
                entry = ws[i]
                i += 1
                cref = entry[0]
                c = clauses[cref]
                if c is None:
                    continue  # deleted clause, drop the watch
                blocker = entry[1]
                b = assigns[blocker >> 1]
                if b != UNDEF and b ^ (blocker & 1) == 1:
                    ws[j] = entry
                    j += 1
                    continue
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                fv = assigns[first >> 1]
                if fv != UNDEF and fv ^ (first & 1) == 1:
                    entry[1] = first
                    ws[j] = entry
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    av = assigns[lk >> 1]
                    if av == UNDEF or av ^ (lk & 1) == 1:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk ^ 1].append([cref, first])
                        break
                else:
                    entry[1] = first
                    ws[j] = entry
                    j += 1
                    if fv != UNDEF:  # conflict
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        self.qhead = len(trail)
                        return cref
                    v = first >> 1
                    assigns[v] = 1 - (first & 1)
                    self.phase[v] = assigns[v]
                    self.level[v] = len(self.trail_lim)
                    self.reason[v] = cref
                    trail.append(first)
            del ws[j:]
        return -1

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            inv = 1e-100
            for i in range(len(self.activity)):
                self.activity[i] *= inv
            self.var_inc *= inv
        heappush(self.heap, (-self.activity[v], v))

    def _analyze(self, confl: int):
        seen = bytearray(len(self.assigns))
        learnt = [0]
        counter = 0
        p = -1
        index = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        while True:
            c = self.clauses[confl]
            start = 1 if p != -1 else 0
            for q in c[start:]:
                v = q >> 1
                if not seen[v] and self.level[v] > 0:
                    seen[v] = 1
                    self._bump(v)
                    if self.level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[index] >> 1]:
                index -= 1
            p = self.trail[index]
            index -= 1
            v = p >> 1
            seen[v] = 0
            counter -= 1
            if counter == 0:
                break
            confl = self.reason[v]
        learnt[0] = p ^ 1

        # cheap minimization: drop literals implied by the rest via their reason
        keep = [learnt[0]]
        for q in learnt[1:]:
            r = self.reason[q >> 1]
            if r == -1:
                keep.append(q)
                continue
            if any(not seen[x >> 1] and self.level[x >> 1] > 0
                   for x in self.clauses[r] if x != (q ^ 1)):
                keep.append(q)
        learnt = keep

        if len(learnt) == 1:
            bt = 0
        else:
            levels = [self.level[q >> 1] for q in learnt[1:]]
            bt = max(levels)
            m = levels.index(bt)
            learnt[1], learnt[m + 1] = learnt[m + 1], learnt[1]
        lbd = len({self.level[q >> 1] for q in learnt})
        return learnt, bt, lbd

    def _backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        bound = self.trail_lim[lvl]
        heap = self.heap
        activity = self.activity
        for lit in reversed(self.trail[bound:]):
            v = lit >> 1
            self.assigns[v] = UNDEF
            heappush(heap, (-activity[v], v))
        del self.trail[bound:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _decide(self) -> int:
        heap = self.heap
        assigns = self.assigns
        while heap:
            _, v = heappop(heap)
            if assigns[v] == UNDEF:
                return v
        for v in range(len(assigns)):
            if assigns[v] == UNDEF:
                return v
        return -1

    def _reduce_db(self) -> None:
        """At level 0: drop the worse half of learnt clauses by LBD."""
        items = sorted(self.learnt_info.items(), key=lambda kv: -kv[1])
        for cref, lbd in items[: len(items) // 2]:
            if lbd <= 2:
                continue
            self.clauses[cref] = None
            del self.learnt_info[cref]
        self.max_learnts = int(self.max_learnts * 1.3)

    def solve(self) -> bool:
        if not self.ok:
            return False
        if self.propagate() != -1:
            self.ok = False
            return False
        for v in range(len(self.assigns)):
            if self.assigns[v] == UNDEF:
                heappush(self.heap, (-self.activity[v], v))
        restart_idx = 0
        budget = _luby(restart_idx) * 128
        conflicts_here = 0
        while True:
            confl = self.propagate()
            if confl != -1:
                self.n_conflicts += 1
                conflicts_here += 1
                if not self.trail_lim:
                    self.ok = False
                    return False
                learnt, bt, lbd = self._analyze(confl)
                self._backtrack(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], -1)
                else:
                    cref = len(self.clauses)
                    self.clauses.append(learnt)
                    self.learnt_info[cref] = lbd
                    self.watches[learnt[0] ^ 1].append([cref, learnt[1]])
                    self.watches[learnt[1] ^ 1].append([cref, learnt[0]])
                    self._enqueue(learnt[0], cref)
                self.var_inc *= 1.052
            else:
                if conflicts_here >= budget:
                    restart_idx += 1
                    budget = _luby(restart_idx) * 128
                    conflicts_here = 0
                    self._backtrack(0)
                    if len(self.learnt_info) > self.max_learnts:
                        self._reduce_db()
                    continue
                v = self._decide()
                if v == -1:
                    return True
                self.trail_lim.append(len(self.trail))
                self._enqueue((v << 1) | (1 - self.phase[v]), -1)

    def model(self):
        return [a == 1 for a in self.assigns]

    def reset_to_root(self) -> None:
        """Backtrack fully so new clauses can be added between solves."""
        self._backtrack(0)
