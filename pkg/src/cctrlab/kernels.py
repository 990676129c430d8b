"""Compiled inner loops shared by the deck, barrier and coupling code.

Decks are held as two int64 arrays kept in sync: ``order[p]`` is the label at
0-based position ``p`` and ``pos[label]`` its position (``pos[0]`` unused).
All randomness is drawn by the caller and passed in, so every kernel is a
deterministic function of its inputs.
"""
import numpy as np
from numba import njit

NONE, TAG_A, TAG_ALPHA, TAG_ASTAR, TAG_B, TAG_BETA = 0, 1, 2, 3, 4, 5


@njit(cache=True, nogil=True)
def moving_label(t, n):
    return (t - 1) % n + 1


@njit(cache=True, nogil=True)
def move_card(order, pos, label, slot):
    """Remove ``label`` and reinsert it with ``slot`` remaining cards to its left."""
    p = pos[label]
    if slot >= p:
        for k in range(p, slot):
            c = order[k + 1]
            order[k] = c
            pos[c] = k
    else:
        for k in range(p, slot, -1):
            c = order[k - 1]
            order[k] = c
            pos[c] = k
    order[slot] = label
    pos[label] = slot


@njit(cache=True, nogil=True)
def run_steps(order, pos, t0, slots):
    n = order.shape[0]
    for k in range(slots.shape[0]):
        move_card(order, pos, moving_label(t0 + k, n), slots[k])


@njit(cache=True, nogil=True)
def label_slot(pos, label, x):
    """Slot index in the reduced deck for label coupling with drawn label ``x``."""
    if x == label:
        return 0
    px = pos[x]
    if px > pos[label]:
        px -= 1
    return px + 1


@njit(cache=True, nogil=True)
def barrier_move(order, pos, gap, label, slot):
    """One barrier step; returns (new_gap, went_left).

    A card dropped into the barrier's own gap keeps its previous side.
    """
    was_left = pos[label] < gap
    if was_left:
        gap -= 1
    went_left = slot < gap or (slot == gap and was_left)
    move_card(order, pos, label, slot)
    if went_left:
        gap += 1
    return gap, went_left


@njit(cache=True, nogil=True)
def barrier_run(order, pos, gap, t0, slots, gaps_out, left_out):
    n = order.shape[0]
    for k in range(slots.shape[0]):
        gap, went = barrier_move(order, pos, gap, moving_label(t0 + k, n), slots[k])
        gaps_out[k] = gap
        left_out[k] = went
    return gap


@njit(cache=True, nogil=True)
def startup_build(probs, side_u, slot_u, order, pos, gaps_out, left_out):
    """Place cards 1..n one at a time, card t left of the barrier w.p. probs[t-1].

    Within the chosen side the card goes to a uniform slot of that side.
    Returns the final barrier gap.
    """
    n = probs.shape[0]
    left = 0
    for t in range(1, n + 1):
        size = t - 1
        if side_u[t - 1] < probs[t - 1]:
            s = int(slot_u[t - 1] * (left + 1))
            if s > left:
                s = left
            left_flag = True
        else:
            right = size - left
            s = left + int(slot_u[t - 1] * (right + 1))
            if s > size:
                s = size
            left_flag = False
        for k in range(size, s, -1):
            c = order[k - 1]
            order[k] = c
            pos[c] = k
        order[s] = t
        pos[t] = s
        if left_flag:
            left += 1
        gaps_out[t - 1] = left
        left_out[t - 1] = left_flag
    return left


@njit(cache=True, nogil=True)
def inversions(seq):
    """Inversion count by bottom-up merge sort (seq is not modified)."""
    n = seq.shape[0]
    a = seq.copy()
    buf = np.empty_like(a)
    count = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[i] <= a[j]:
                    buf[k] = a[i]
                    i += 1
                else:
                    buf[k] = a[j]
                    count += mid - i
                    j += 1
                k += 1
            while i < mid:
                buf[k] = a[i]
                i += 1
                k += 1
            while j < hi:
                buf[k] = a[j]
                j += 1
                k += 1
        a, buf = buf, a
        width *= 2
    return count


@njit(cache=True, nogil=True)
def kendall_distance(order_x, pos_y):
    """Pairs ordered differently in two decks: inversions of y-positions read along x."""
    n = order_x.shape[0]
    rel = np.empty(n, dtype=np.int64)
    for p in range(n):
        rel[p] = pos_y[order_x[p]]
    return inversions(rel)


@njit(cache=True, nogil=True)
def lcs_length(u, v):
    """Longest common subsequence length, two-row dynamic programme."""
    m = v.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(u.shape[0]):
        ui = u[i]
        cur[0] = 0
        for j in range(m):
            if ui == v[j]:
                cur[j + 1] = prev[j] + 1
            elif prev[j + 1] >= cur[j]:
                cur[j + 1] = prev[j + 1]
            else:
                cur[j + 1] = cur[j]
        prev, cur = cur, prev
    return prev[m]


@njit(cache=True, nogil=True)
def barrier_insertion_distance(order1, gap1, order2, gap2):
    n = order1.shape[0]
    keep = lcs_length(order1[:gap1], order2[:gap2]) + lcs_length(order1[gap1:], order2[gap2:])
    return n - keep


@njit(cache=True, nogil=True)
def label_coupled_barrier_run(o1, p1, g1, o2, p2, g2, t0, labels, bdiff_ok, check_each):
    """Label-coupled barrier steps on two configurations; returns (g1, g2).

    With ``check_each`` the barrier displacement |g1 - g2| is compared against
    the insertion distance after every step and the result stored in bdiff_ok.
    """
    n = o1.shape[0]
    for k in range(labels.shape[0]):
        lab = moving_label(t0 + k, n)
        x = labels[k]
        g1, _ = barrier_move(o1, p1, g1, lab, label_slot(p1, lab, x))
        g2, _ = barrier_move(o2, p2, g2, lab, label_slot(p2, lab, x))
        if check_each:
            d = barrier_insertion_distance(o1, g1, o2, g2)
            bdiff_ok[k] = abs(g1 - g2) <= d
    return g1, g2


@njit(cache=True, nogil=True)
def _between(pos, u, v, c):
    lo = min(pos[u], pos[v])
    hi = max(pos[u], pos[v])
    return lo < pos[c] < hi


@njit(cache=True, nogil=True)
def three_stage(ox, px, oy, py, tags, i, j, draws, stage1_ok, history):
    """Run the three-stage coupled round on decks differing by swapping i and j.

    Stage 1 (cards 1..i-1) uses position coupling with slot ``draws[t-1]``;
    stages 2 and 3 use label coupling with label ``draws[t-1] + 1``. Tags follow
    the group of the card the moved card lands next to. Returns (count_A, count_B).
    ``history[t]`` receives the group of the card moved at time t (0 none,
    1 joined A, 2 joined B); pass an array of length 1 to skip recording.
    """
    n = ox.shape[0]
    if i == 1:
        stage1_ok[0] = _stage1_structure(ox, px, oy, py, tags, i, j)
    for t in range(1, n + 1):
        lab = t
        tags[lab] = NONE
        if t < i:
            s = draws[t - 1]
            move_card(ox, px, lab, s)
            move_card(oy, py, lab, s)
            if _between(px, i, j, lab):
                tags[lab] = TAG_A
        else:
            x = draws[t - 1] + 1
            sx = label_slot(px, lab, x)
            sy = label_slot(py, lab, x)
            move_card(ox, px, lab, sx)
            move_card(oy, py, lab, sy)
            if x != lab:
                tx = tags[x]
                if t < j:
                    if tx == TAG_A or tx == TAG_ALPHA:
                        tags[lab] = TAG_ALPHA
                    elif x == j or tx == TAG_B:
                        tags[lab] = TAG_B
                else:
                    if tx == TAG_A or tx == TAG_ALPHA or tx == TAG_ASTAR:
                        tags[lab] = TAG_ASTAR
                    elif tx == TAG_B or tx == TAG_BETA:
                        tags[lab] = TAG_BETA
        if history.shape[0] > n:
            tg = tags[lab]
            if tg == TAG_A or tg == TAG_ALPHA or tg == TAG_ASTAR:
                history[t] = 1
            elif tg == TAG_B or tg == TAG_BETA:
                history[t] = 2
            else:
                history[t] = 0
        if t == i - 1:
            stage1_ok[0] = _stage1_structure(ox, px, oy, py, tags, i, j)
    count_a = 0
    count_b = 0
    for c in range(1, n + 1):
        if tags[c] == TAG_A or tags[c] == TAG_ALPHA or tags[c] == TAG_ASTAR:
            count_a += 1
        elif tags[c] == TAG_B or tags[c] == TAG_BETA:
            count_b += 1
    return count_a, count_b


@njit(cache=True, nogil=True)
def _stage1_structure(ox, px, oy, py, tags, i, j):
    """Decks agree except i, j swapped, with only a-tagged cards between them."""
    n = ox.shape[0]
    if px[i] != py[j] or px[j] != py[i] or px[i] > px[j]:
        return False
    for p in range(n):
        c = ox[p]
        if c == i or c == j:
            continue
        if oy[p] != c:
            return False
        inside = px[i] < p < px[j]
        if inside != (tags[c] == TAG_A):
            return False
    return True


@njit(cache=True, nogil=True)
def counter_chain(n, i, j, draws):
    """The (A, B) counter chain alone, driven by uniform integers in 0..n-1."""
    a = 0
    b = 0
    for t in range(1, n + 1):
        u = draws[t - 1]
        if t < i:
            if u < a + 1:
                a += 1
        elif t < j:
            if u < a:
                a += 1
            elif u < a + b + 1:
                b += 1
        else:
            if u < a:
                a += 1
            elif u < a + b:
                b += 1
    return a, b
