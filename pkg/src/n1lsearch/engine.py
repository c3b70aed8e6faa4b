"""Compiled stage executor.

Mirrors the pure stage logic (extension enumeration, span filter,
canonicalization, deduplication) with numba kernels over packed records,
so large stages run at machine speed. Key sets must match the pure
implementation exactly; the equivalence is enforced by tests.

Record format: one configuration per row of a uint32 array with
``2 + max_rows`` words. Word 0 holds r, c and the first two part sizes
(one byte each, little end first), word 1 the remaining two part sizes,
and words 2.. hold the row masks in class-block order, zero padded.
This is a fixed-width unpacking of the canonical key bytes.

Span filter: a configuration passes when its anchored row span (rows
plus the anchor word) has no nonzero word of weight 4 or less. For a
certified parent this reduces to a coset distance question for the one
new word w: the child fails iff some parent-span word x has
weight(w + x) <= 4, i.e. iff the syndrome of w with respect to a parity
check of the parent span is a sum of at most 4 parity-check columns.
Each parent therefore builds, once, a table of all sums of 1..4 columns
of its parity check (tagged with the fewest columns used); each
candidate row then needs one table probe. Fresh columns shift the
budget: a candidate appending f fresh columns fails iff its old-column
syndrome is reachable with at most 4-f columns (the fresh positions
force f error bits), and a zero syndrome with f >= 1 is an immediate
failure (the fresh columns alone form a light word).

The canonical labeling is the same two-layer scheme as canon.py: rank
the 24 class permutations by the signature they induce, and for each
maximizer run the cell-refinement search for the greatest row-major
matrix. All of it is inlined here in iterative form.
"""

from __future__ import annotations

import struct
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from pathlib import Path

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.extending import intrinsic

from .config import pack_key
from .errors import StageOverflowError
from .perm4 import ELEMENTS, TYPE_ORDER, _SIG_DEST, inverse
from .search import (
    ARCHIVE_MAGIC,
    SEED,
    BoundedSearchReport,
    CountsTable,
    SearchLimits,
    StageStore,
)

__all__ = [
    "keys_to_records",
    "record_to_key",
    "records_to_keys",
    "counts_by_c_records",
    "pack_records_archive",
    "stage_records",
    "stage_child_keys",
    "run_search_engine",
    "run_bounded_search_engine",
]

# Engine-internal ceilings (word widths, scratch sizes). Runs beyond these
# need the pure implementation.
MAX_ENGINE_ROWS = 25
MAX_ENGINE_COLS = 26

_SIG_DEST_T = np.array(_SIG_DEST, dtype=np.int64)
_PERM_IMG_T = np.array([e.images for e in ELEMENTS], dtype=np.int64)
_PERM_INV_T = np.array([inverse(e).images for e in ELEMENTS], dtype=np.int64)
_TYPE_POS_T = np.full(16, -1, dtype=np.int64)
for _pos, _t in enumerate(TYPE_ORDER):
    _TYPE_POS_T[_t] = _pos


@intrinsic
def _popcount64(typingctx, x):
    sig = types.int64(types.int64)

    def codegen(context, builder, signature, args):
        fn = builder.module.declare_intrinsic("llvm.ctpop", [ir.IntType(64)])
        return builder.call(fn, [args[0]])

    return sig, codegen


_HASH_K = np.int64(-7046029254386353131)  # golden-ratio multiplier, wraps mod 2**64
_STAB_BITS = 16
_STAB_MASK = (1 << _STAB_BITS) - 1
_VAL_MASK = (1 << 27) - 1


@njit(cache=True, nogil=True)
def _stage_chunk(
    parents,
    p0,
    p1,
    max_cols,
    fresh_limit,
    n1l_on,
    sig_dest,
    perm_img,
    perm_inv,
    type_pos,
    out,
):
    """Process parents[p0:p1]; returns (out buffer, emitted record count).

    The out buffer is grown (reallocated) as needed and returned, so the
    caller must keep the returned reference.
    """
    rec_words = parents.shape[1]
    n_out = 0

    # per-parent scratch
    rows_p = np.empty(32, np.int64)
    cls_p = np.empty(32, np.int64)
    parts_p = np.empty(4, np.int64)
    cmask = np.empty(4, np.int64)
    pairmask = np.empty(32, np.int64)
    bas = np.empty(32, np.int64)
    pivbit = np.empty(32, np.int64)
    syn = np.empty(32, np.int64)
    # sums of up to 4 of the n_len <= 31 parity-check columns
    vals = np.empty(37000, np.int64)
    vcnt = np.empty(37000, np.int64)
    stab = np.full(1 << _STAB_BITS, -1, np.int64)
    cand_list = np.empty(4096, np.int64)
    # per-child scratch
    rows_c = np.empty(32, np.int64)
    cls_c = np.empty(32, np.int64)
    parts_c = np.empty(4, np.int64)
    cm2 = np.empty(4, np.int64)
    sig = np.empty(15, np.int64)
    sig_a = np.empty(15, np.int64)
    sig_best = np.empty(15, np.int64)
    ach = np.empty(24, np.int64)
    parts_rel = np.empty(4, np.int64)
    cm_rel = np.empty(4, np.int64)
    rows_rel = np.empty(32, np.int64)
    cls_rel = np.empty(32, np.int64)
    st_c = np.empty(5, np.int64)
    posmask = np.empty(15, np.int64)
    cells = np.empty((28, 32), np.int64)
    ncell = np.empty(28, np.int64)
    ties = np.empty((28, 12), np.int64)
    ntie = np.empty(28, np.int64)
    tie_i = np.empty(28, np.int64)
    lvl_k = np.empty(28, np.int64)
    phase = np.empty(28, np.int64)
    placed = np.empty(28, np.int64)
    left = np.empty(4, np.int64)
    prof_best = np.empty(32, np.int64)
    prof_tmp = np.empty(32, np.int64)
    best_rows = np.empty(28, np.int64)
    cand_rows = np.empty(28, np.int64)
    parts_best = np.empty(4, np.int64)

    epoch = np.int64(0)

    for pi in range(p0, p1):
        w0 = np.int64(parents[pi, 0])
        w1 = np.int64(parents[pi, 1])
        r_p = w0 & 0xFF
        c = (w0 >> 8) & 0xFF
        parts_p[0] = (w0 >> 16) & 0xFF
        parts_p[1] = (w0 >> 24) & 0xFF
        parts_p[2] = w1 & 0xFF
        parts_p[3] = (w1 >> 8) & 0xFF
        idx = 0
        for k in range(4):
            cmask[k] = 0
            for _ in range(parts_p[k]):
                m = np.int64(parents[pi, 2 + idx])
                rows_p[idx] = m
                cls_p[idx] = k
                cmask[k] |= m
                idx += 1

        # column pair conflicts: pairmask[j] has bit j2 iff some row holds j and j2
        for j in range(c):
            pairmask[j] = 0
        for i2 in range(r_p):
            t = rows_p[i2]
            while t != 0:
                lb = t & (-t)
                pairmask[_popcount64(lb - 1)] |= rows_p[i2] ^ lb
                t ^= lb

        s_ready = False
        max_f = max_cols - c
        if fresh_limit < max_f:
            max_f = fresh_limit
        if max_f < 0:
            max_f = 0

        seen_empty = False
        for k in range(4):
            if parts_p[k] == 0:
                if seen_empty:
                    continue
                seen_empty = True
            avail = ((np.int64(1) << c) - 1) & ~cmask[k]
            for f in range(max_f + 1):
                need = 3 - f
                cf = c + f
                fresh_mask = ((np.int64(1) << f) - 1) << c
                ncand = 0
                if need == 0:
                    cand_list[0] = 0
                    ncand = 1
                elif need == 1:
                    for a in range(c):
                        if (avail >> a) & 1:
                            cand_list[ncand] = np.int64(1) << a
                            ncand += 1
                elif need == 2:
                    for a in range(c):
                        if not ((avail >> a) & 1):
                            continue
                        for b in range(a + 1, c):
                            if not ((avail >> b) & 1):
                                continue
                            if (pairmask[a] >> b) & 1:
                                continue
                            cand_list[ncand] = (np.int64(1) << a) | (np.int64(1) << b)
                            ncand += 1
                else:
                    for a in range(c):
                        if not ((avail >> a) & 1):
                            continue
                        for b in range(a + 1, c):
                            if not ((avail >> b) & 1):
                                continue
                            if (pairmask[a] >> b) & 1:
                                continue
                            pm = pairmask[a] | pairmask[b]
                            for d2 in range(b + 1, c):
                                if not ((avail >> d2) & 1):
                                    continue
                                if (pm >> d2) & 1:
                                    continue
                                cand_list[ncand] = (
                                    (np.int64(1) << a)
                                    | (np.int64(1) << b)
                                    | (np.int64(1) << d2)
                                )
                                ncand += 1

                for t2 in range(ncand):
                    body_old = cand_list[t2]
                    mask = body_old | fresh_mask

                    if n1l_on:
                        if not s_ready:
                            # parity-check columns of the parent span
                            n_len = c + 5
                            nb = 0
                            for i2 in range(r_p + 1):
                                if i2 == r_p:
                                    v = np.int64(0b11111) << c
                                else:
                                    v = (
                                        rows_p[i2]
                                        | (np.int64(1) << (c + cls_p[i2]))
                                        | (np.int64(1) << (c + 4))
                                    )
                                for b2 in range(nb):
                                    if v & pivbit[b2]:
                                        v ^= bas[b2]
                                if v != 0:
                                    bas[nb] = v
                                    pivbit[nb] = v & (-v)
                                    nb += 1
                            # sort by pivot bit, then full back-elimination
                            for b2 in range(1, nb):
                                vv = bas[b2]
                                pp = pivbit[b2]
                                b3 = b2 - 1
                                while b3 >= 0 and pivbit[b3] > pp:
                                    bas[b3 + 1] = bas[b3]
                                    pivbit[b3 + 1] = pivbit[b3]
                                    b3 -= 1
                                bas[b3 + 1] = vv
                                pivbit[b3 + 1] = pp
                            for b2 in range(nb):
                                for b3 in range(nb):
                                    if b3 != b2 and (bas[b3] & pivbit[b2]) != 0:
                                        bas[b3] ^= bas[b2]
                            pall = np.int64(0)
                            for b2 in range(nb):
                                pall |= pivbit[b2]
                            m_dim = n_len - nb
                            if m_dim > 27:
                                raise RuntimeError("span filter: syndrome space too wide")
                            need_v = (
                                n_len
                                + n_len * (n_len - 1) // 2
                                + n_len * (n_len - 1) * (n_len - 2) // 6
                                + n_len * (n_len - 1) * (n_len - 2) * (n_len - 3) // 24
                            )
                            if need_v > vals.shape[0]:
                                raise RuntimeError("span filter: sum table too small")
                            mm = 0
                            for j in range(n_len):
                                if (pall >> j) & 1:
                                    syn[j] = 0
                                else:
                                    syn[j] = np.int64(1) << mm
                                    mm += 1
                            for b2 in range(nb):
                                v = bas[b2]
                                s2 = np.int64(0)
                                mm = 0
                                for j in range(n_len):
                                    if (pall >> j) & 1:
                                        continue
                                    if (v >> j) & 1:
                                        s2 |= np.int64(1) << mm
                                    mm += 1
                                syn[_popcount64(pivbit[b2] - 1)] = s2
                            # all sums of 1..4 parity-check columns
                            nv = 0
                            for a1 in range(n_len):
                                v1 = syn[a1]
                                vals[nv] = v1
                                vcnt[nv] = 1
                                nv += 1
                                for a2 in range(a1 + 1, n_len):
                                    v2 = v1 ^ syn[a2]
                                    vals[nv] = v2
                                    vcnt[nv] = 2
                                    nv += 1
                                    for a3 in range(a2 + 1, n_len):
                                        v3 = v2 ^ syn[a3]
                                        vals[nv] = v3
                                        vcnt[nv] = 3
                                        nv += 1
                                        for a4 in range(a3 + 1, n_len):
                                            vals[nv] = v3 ^ syn[a4]
                                            vcnt[nv] = 4
                                            nv += 1
                            epoch += 1
                            etag = epoch << 30
                            for t3 in range(nv):
                                val = vals[t3]
                                mc = vcnt[t3]
                                slot = ((val * _HASH_K) >> 37) & _STAB_MASK
                                while True:
                                    e = stab[slot]
                                    if (e >> 30) != epoch:
                                        stab[slot] = etag | (mc << 27) | val
                                        break
                                    if (e & _VAL_MASK) == val:
                                        if ((e >> 27) & 7) > mc:
                                            stab[slot] = etag | (mc << 27) | val
                                        break
                                    slot = (slot + 1) & _STAB_MASK
                            s_ready = True

                        sg = syn[c + k] ^ syn[c + 4]
                        tb = body_old
                        while tb != 0:
                            lb = tb & (-tb)
                            sg ^= syn[_popcount64(lb - 1)]
                            tb ^= lb
                        if sg == 0:
                            if f >= 1:
                                continue
                        else:
                            slot = ((sg * _HASH_K) >> 37) & _STAB_MASK
                            viol = False
                            while True:
                                e = stab[slot]
                                if (e >> 30) != epoch:
                                    break
                                if (e & _VAL_MASK) == sg:
                                    if ((e >> 27) & 7) <= 4 - f:
                                        viol = True
                                    break
                                slot = (slot + 1) & _STAB_MASK
                            if viol:
                                continue

                    # assemble child (new row at the end of class k's block)
                    rc = r_p + 1
                    ins = 0
                    for kk in range(k + 1):
                        ins += parts_p[kk]
                    for i2 in range(ins):
                        rows_c[i2] = rows_p[i2]
                        cls_c[i2] = cls_p[i2]
                    rows_c[ins] = mask
                    cls_c[ins] = k
                    for i2 in range(ins, r_p):
                        rows_c[i2 + 1] = rows_p[i2]
                        cls_c[i2 + 1] = cls_p[i2]
                    for kk in range(4):
                        parts_c[kk] = parts_p[kk]
                        cm2[kk] = cmask[kk]
                    parts_c[k] += 1
                    cm2[k] |= mask

                    # signature and its maximizing class permutations
                    for p2 in range(15):
                        sig[p2] = 0
                    for j in range(cf):
                        t3 = 0
                        for kk in range(4):
                            t3 |= ((cm2[kk] >> j) & 1) << kk
                        sig[type_pos[t3]] += 1
                    na = 0
                    for a2 in range(24):
                        for p2 in range(15):
                            sig_a[sig_dest[a2, p2]] = sig[p2]
                        if na == 0:
                            for p2 in range(15):
                                sig_best[p2] = sig_a[p2]
                            ach[0] = a2
                            na = 1
                        else:
                            cmp2 = 0
                            for p2 in range(15):
                                if sig_a[p2] != sig_best[p2]:
                                    cmp2 = 1 if sig_a[p2] > sig_best[p2] else -1
                                    break
                            if cmp2 > 0:
                                for p2 in range(15):
                                    sig_best[p2] = sig_a[p2]
                                ach[0] = a2
                                na = 1
                            elif cmp2 == 0:
                                ach[na] = a2
                                na += 1

                    st_c[0] = 0
                    for kk in range(4):
                        st_c[kk + 1] = st_c[kk] + parts_c[kk]

                    first_ach = True
                    for t4 in range(na):
                        a2 = ach[t4]
                        for kk in range(4):
                            parts_rel[perm_img[a2, kk]] = parts_c[kk]
                            cm_rel[perm_img[a2, kk]] = cm2[kk]
                        idx2 = 0
                        for knew in range(4):
                            ko = perm_inv[a2, knew]
                            for i2 in range(st_c[ko], st_c[ko + 1]):
                                rows_rel[idx2] = rows_c[i2]
                                cls_rel[idx2] = knew
                                idx2 += 1

                        # initial cells: columns grouped by type, fixed type order
                        for p2 in range(15):
                            posmask[p2] = 0
                        for j in range(cf):
                            t3 = 0
                            for kk in range(4):
                                t3 |= ((cm_rel[kk] >> j) & 1) << kk
                            posmask[type_pos[t3]] |= np.int64(1) << j
                        nc0 = 0
                        for p2 in range(15):
                            if posmask[p2] != 0:
                                cells[0, nc0] = posmask[p2]
                                nc0 += 1
                        ncell[0] = nc0
                        placed[0] = 0
                        for kk in range(4):
                            left[kk] = parts_rel[kk]
                        best_len = 0
                        lvl = 0
                        phase[0] = 0
                        while lvl >= 0:
                            if phase[lvl] == 0:
                                phase[lvl] = 1
                                if lvl == rc:
                                    lvl -= 1
                                    continue
                                kcur = 0
                                while left[kcur] == 0:
                                    kcur += 1
                                lvl_k[lvl] = kcur
                                nt = 0
                                for i2 in range(rc):
                                    if ((placed[lvl] >> i2) & 1) or cls_rel[i2] != kcur:
                                        continue
                                    for cj in range(ncell[lvl]):
                                        prof_tmp[cj] = _popcount64(
                                            rows_rel[i2] & cells[lvl, cj]
                                        )
                                    if nt == 0:
                                        for cj in range(ncell[lvl]):
                                            prof_best[cj] = prof_tmp[cj]
                                        ties[lvl, 0] = i2
                                        nt = 1
                                    else:
                                        cmp2 = 0
                                        for cj in range(ncell[lvl]):
                                            if prof_tmp[cj] != prof_best[cj]:
                                                cmp2 = (
                                                    1
                                                    if prof_tmp[cj] > prof_best[cj]
                                                    else -1
                                                )
                                                break
                                        if cmp2 > 0:
                                            for cj in range(ncell[lvl]):
                                                prof_best[cj] = prof_tmp[cj]
                                            ties[lvl, 0] = i2
                                            nt = 1
                                        elif cmp2 == 0:
                                            ties[lvl, nt] = i2
                                            nt += 1
                                rb = np.int64(0)
                                off = 0
                                for cj in range(ncell[lvl]):
                                    rb |= ((np.int64(1) << prof_best[cj]) - 1) << off
                                    off += _popcount64(cells[lvl, cj])
                                if lvl < best_len:
                                    d3 = rb ^ best_rows[lvl]
                                    if d3 != 0:
                                        lo = d3 & (-d3)
                                        if rb & lo:
                                            best_rows[lvl] = rb
                                            best_len = lvl + 1
                                        else:
                                            lvl -= 1
                                            continue
                                else:
                                    best_rows[lvl] = rb
                                    best_len = lvl + 1
                                left[kcur] -= 1
                                ntie[lvl] = nt
                                tie_i[lvl] = 0
                            else:
                                if tie_i[lvl] >= ntie[lvl]:
                                    left[lvl_k[lvl]] += 1
                                    lvl -= 1
                                    continue
                                i2 = ties[lvl, tie_i[lvl]]
                                tie_i[lvl] += 1
                                rw = rows_rel[i2]
                                nc2 = 0
                                for cj in range(ncell[lvl]):
                                    cm3 = cells[lvl, cj]
                                    it3 = cm3 & rw
                                    if it3 != 0:
                                        cells[lvl + 1, nc2] = it3
                                        nc2 += 1
                                    rs3 = cm3 & ~rw
                                    if rs3 != 0:
                                        cells[lvl + 1, nc2] = rs3
                                        nc2 += 1
                                ncell[lvl + 1] = nc2
                                placed[lvl + 1] = placed[lvl] | (np.int64(1) << i2)
                                phase[lvl + 1] = 0
                                lvl += 1

                        if first_ach:
                            for i2 in range(rc):
                                cand_rows[i2] = best_rows[i2]
                            for kk in range(4):
                                parts_best[kk] = parts_rel[kk]
                            first_ach = False
                        else:
                            for i2 in range(rc):
                                d3 = best_rows[i2] ^ cand_rows[i2]
                                if d3 != 0:
                                    lo = d3 & (-d3)
                                    if best_rows[i2] & lo:
                                        for i3 in range(rc):
                                            cand_rows[i3] = best_rows[i3]
                                        for kk in range(4):
                                            parts_best[kk] = parts_rel[kk]
                                    break

                    # emit
                    if n_out >= out.shape[0]:
                        out2 = np.zeros((out.shape[0] * 2, rec_words), np.uint32)
                        for i2 in range(n_out):
                            for w2 in range(rec_words):
                                out2[i2, w2] = out[i2, w2]
                        out = out2
                    out[n_out, 0] = rc | (cf << 8) | (parts_best[0] << 16) | (
                        parts_best[1] << 24
                    )
                    out[n_out, 1] = parts_best[2] | (parts_best[3] << 8)
                    for i2 in range(rc):
                        out[n_out, 2 + i2] = cand_rows[i2]
                    for w2 in range(2 + rc, rec_words):
                        out[n_out, w2] = 0
                    n_out += 1

    return out, n_out


@njit(cache=True)
def _store_insert(buf, m, start, recs, n0, index, mask, grow_at):
    """Insert buf[start:m] into the store; returns (count, next unprocessed)."""
    rec_words = recs.shape[1]
    n = n0
    i = start
    while i < m:
        if n >= grow_at or n >= recs.shape[0]:
            return n, i
        h = np.uint64(1469598103934665603)
        for w in range(rec_words):
            h = (h ^ np.uint64(buf[i, w])) * np.uint64(1099511628211)
        slot = np.int64(h & np.uint64(mask))
        while True:
            j = index[slot]
            if j < 0:
                index[slot] = n
                for w in range(rec_words):
                    recs[n, w] = buf[i, w]
                n += 1
                break
            same = True
            for w in range(rec_words):
                if recs[j, w] != buf[i, w]:
                    same = False
                    break
            if same:
                break
            slot = (slot + 1) & mask
        i += 1
    return n, i


@njit(cache=True)
def _store_rehash(recs, n, index, mask):
    for i in range(n):
        h = np.uint64(1469598103934665603)
        for w in range(recs.shape[1]):
            h = (h ^ np.uint64(recs[i, w])) * np.uint64(1099511628211)
        slot = np.int64(h & np.uint64(mask))
        while index[slot] >= 0:
            slot = (slot + 1) & mask
        index[slot] = i


class RecordStore:
    """Open-addressing dedupe store over fixed-width records.

    Full records are kept and compared, so hash collisions can never
    merge distinct configurations.
    """

    def __init__(
        self,
        rec_words: int,
        *,
        initial_cap: int = 1 << 12,
        max_keys: int | None = None,
        budget_bytes: int | None = None,
    ):
        self.rec_words = rec_words
        self.recs = np.zeros((initial_cap, rec_words), np.uint32)
        self.n = 0
        bits = 14
        self.index = np.full(1 << bits, -1, np.int64)
        self.max_keys = max_keys
        self.budget_bytes = budget_bytes

    @property
    def nbytes(self) -> int:
        return self.recs.nbytes + self.index.nbytes

    def _check_limits(self):
        if self.max_keys is not None and self.n > self.max_keys:
            raise StageOverflowError(
                f"stage store exceeded {self.max_keys} keys"
            )
        if self.budget_bytes is not None and self.nbytes > self.budget_bytes:
            raise StageOverflowError(
                f"stage store exceeded memory budget of {self.budget_bytes} bytes"
            )

    def _check_projected(self, extra: int) -> None:
        """Fail before any growth allocation that would exceed the budget."""
        if self.budget_bytes is not None and self.nbytes + extra > self.budget_bytes:
            raise StageOverflowError(
                f"stage store exceeded memory budget of {self.budget_bytes} bytes"
            )

    def insert_batch(self, buf: np.ndarray, m: int) -> None:
        pos = 0
        while pos < m:
            mask = self.index.shape[0] - 1
            grow_at = (self.index.shape[0] * 3) // 5
            self.n, pos = _store_insert(
                buf, m, pos, self.recs, self.n, self.index, mask, grow_at
            )
            self._check_limits()
            if pos < m:
                if self.n >= grow_at:
                    self._check_projected(2 * self.index.nbytes)
                    new_index = np.full(self.index.shape[0] * 2, -1, np.int64)
                    _store_rehash(self.recs, self.n, new_index, new_index.shape[0] - 1)
                    self.index = new_index
                if self.n >= self.recs.shape[0]:
                    self._check_projected(2 * self.recs.nbytes)
                    new_recs = np.zeros(
                        (self.recs.shape[0] * 2, self.rec_words), np.uint32
                    )
                    new_recs[: self.n] = self.recs[: self.n]
                    self.recs = new_recs
                self._check_limits()

    def view(self) -> np.ndarray:
        return self.recs[: self.n]


def keys_to_records(keys, rec_words: int) -> np.ndarray:
    arr = np.zeros((len(keys), rec_words), np.uint32)
    for i, kb in enumerate(keys):
        r, c = kb[0], kb[1]
        if 2 + r > rec_words:
            raise ValueError(f"record width {rec_words} too small for r={r}")
        arr[i, 0] = r | (c << 8) | (kb[2] << 16) | (kb[3] << 24)
        arr[i, 1] = kb[4] | (kb[5] << 8)
        rb = (c + 7) // 8
        for t in range(r):
            arr[i, 2 + t] = int.from_bytes(kb[6 + t * rb : 6 + (t + 1) * rb], "little")
    return arr


def record_to_key(rec) -> bytes:
    w0 = int(rec[0])
    w1 = int(rec[1])
    r = w0 & 0xFF
    c = (w0 >> 8) & 0xFF
    rb = (c + 7) // 8
    head = bytes(
        [r, c, (w0 >> 16) & 0xFF, (w0 >> 24) & 0xFF, w1 & 0xFF, (w1 >> 8) & 0xFF]
    )
    return head + b"".join(int(rec[2 + t]).to_bytes(rb, "little") for t in range(r))


def records_to_keys(recs: np.ndarray) -> list[bytes]:
    return [record_to_key(recs[i]) for i in range(recs.shape[0])]


def counts_by_c_records(recs: np.ndarray) -> dict[int, int]:
    if recs.shape[0] == 0:
        return {}
    cvals = (recs[:, 0].astype(np.int64) >> 8) & 0xFF
    binc = np.bincount(cvals)
    return {int(c): int(n) for c, n in enumerate(binc) if n}


def _key_byte_columns(sub: np.ndarray, r: int, c: int) -> np.ndarray:
    """Byte matrix (key_len, n) of the canonical key bytes of each record."""
    w0 = sub[:, 0].astype(np.int64)
    w1 = sub[:, 1].astype(np.int64)
    rb = (c + 7) // 8
    cols = np.empty((6 + r * rb, sub.shape[0]), np.uint8)
    cols[0] = w0 & 0xFF
    cols[1] = (w0 >> 8) & 0xFF
    cols[2] = (w0 >> 16) & 0xFF
    cols[3] = (w0 >> 24) & 0xFF
    cols[4] = w1 & 0xFF
    cols[5] = (w1 >> 8) & 0xFF
    idx = 6
    for t in range(r):
        w = sub[:, 2 + t].astype(np.int64)
        for b in range(rb):
            cols[idx] = (w >> (8 * b)) & 0xFF
            idx += 1
    return cols


def pack_records_archive(recs: np.ndarray, r: int) -> bytes:
    """Same bytes as StageStore.pack for the equivalent key set."""
    n = recs.shape[0]
    if n == 0:
        return StageStore(r).pack()
    cvals = (recs[:, 0].astype(np.int64) >> 8) & 0xFF
    out = [ARCHIVE_MAGIC, struct.pack("<BBHI", r, int(cvals.max()), 0, n)]
    for c in sorted(set(cvals.tolist())):
        sub = recs[cvals == c]
        cols = _key_byte_columns(sub, r, c)
        key_len = cols.shape[0]
        order = np.lexsort(cols[::-1])
        chunk = np.empty((key_len + 2, sub.shape[0]), np.uint8)
        chunk[0] = key_len & 0xFF
        chunk[1] = key_len >> 8
        chunk[2:] = cols[:, order]
        out.append(chunk.T.tobytes())
    return b"".join(out)


def _run_chunks(
    parents: np.ndarray,
    store: RecordStore,
    *,
    max_cols: int,
    fresh_limit: int,
    n1l_filter: bool,
    threads: int,
    progress=None,
    chunk: int = 2048,
) -> None:
    n_par = parents.shape[0]
    rec_words = parents.shape[1]
    spans = [(a, min(a + chunk, n_par)) for a in range(0, n_par, chunk)]
    args = (max_cols, fresh_limit, 1 if n1l_filter else 0,
            _SIG_DEST_T, _PERM_IMG_T, _PERM_INV_T, _TYPE_POS_T)
    done_parents = 0
    if threads <= 1:
        out = np.zeros((1 << 13, rec_words), np.uint32)
        for a, b in spans:
            out, m = _stage_chunk(parents, a, b, *args, out)
            store.insert_batch(out, m)
            done_parents += b - a
            if progress is not None and len(spans) > 1:
                progress(
                    f"  parents {done_parents}/{n_par}, stored {store.n}"
                )
        return
    pending = list(reversed(spans))
    futures = {}
    with ThreadPoolExecutor(max_workers=threads) as ex:
        while pending or futures:
            while pending and len(futures) < threads:
                a, b = pending.pop()
                buf = np.zeros((1 << 13, rec_words), np.uint32)
                futures[ex.submit(_stage_chunk, parents, a, b, *args, buf)] = (a, b)
            done, _ = wait(list(futures), return_when=FIRST_COMPLETED)
            for fut in done:
                a, b = futures.pop(fut)
                out, m = fut.result()
                store.insert_batch(out, m)
                done_parents += b - a
                if progress is not None and len(spans) > 1:
                    progress(
                        f"  parents {done_parents}/{n_par}, stored {store.n}"
                    )


def stage_records(
    parents: np.ndarray,
    *,
    max_cols: int,
    fresh_limit: int,
    n1l_filter: bool,
    threads: int = 1,
    max_store_keys: int | None = None,
    budget_bytes: int | None = None,
    progress=None,
) -> np.ndarray:
    """One stage over packed parent records; returns deduplicated children."""
    rec_words = parents.shape[1]
    store = RecordStore(
        rec_words, max_keys=max_store_keys, budget_bytes=budget_bytes
    )
    if parents.shape[0]:
        r_p = int(parents[0, 0]) & 0xFF
        if r_p + 1 > MAX_ENGINE_ROWS or max_cols > MAX_ENGINE_COLS:
            raise ValueError("engine limits exceeded; use the pure search")
        _run_chunks(
            parents,
            store,
            max_cols=max_cols,
            fresh_limit=fresh_limit,
            n1l_filter=n1l_filter,
            threads=threads,
            progress=progress,
        )
    return store.view()


def stage_child_keys(
    parent_keys: list[bytes],
    *,
    max_cols: int,
    fresh_limit: int = 3,
    n1l_filter: bool = True,
    threads: int = 1,
    max_store_keys: int | None = None,
    progress=None,
) -> list[bytes]:
    """Key-level stage interface, matching the pure run_stage key set."""
    if not parent_keys:
        return []
    r_p = parent_keys[0][0]
    recs = keys_to_records(parent_keys, 2 + r_p + 1)
    children = stage_records(
        recs,
        max_cols=max_cols,
        fresh_limit=fresh_limit,
        n1l_filter=n1l_filter,
        threads=threads,
        max_store_keys=max_store_keys,
        progress=progress,
    )
    return sorted(records_to_keys(children))


def _write_records_archive(
    archive_dir, recs: np.ndarray, r: int, archive_rows=None
) -> None:
    if archive_dir is None:
        return
    if archive_rows is not None and r not in archive_rows:
        return
    path = Path(archive_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / f"stage-r{r:02d}.n1larc").write_bytes(pack_records_archive(recs, r))


def run_search_engine(
    limits: SearchLimits,
    *,
    threads: int = 1,
    archive_dir=None,
    archive_rows=None,
    max_store_keys: int | None = None,
    progress=None,
) -> CountsTable:
    """Array-native counterpart of run_search (same results, same archives)."""
    if limits.mode != "full":
        raise ValueError("run_search_engine requires mode='full'")
    rec_words = 2 + limits.max_rows
    table = CountsTable()
    parents = keys_to_records([pack_key(SEED)], rec_words)
    _write_records_archive(archive_dir, parents, 1, archive_rows)
    for r in range(2, limits.max_rows + 1):
        try:
            recs = stage_records(
                parents,
                max_cols=limits.max_cols,
                fresh_limit=limits.fresh_limit,
                n1l_filter=limits.n1l_filter,
                threads=threads,
                max_store_keys=max_store_keys,
                progress=progress,
            )
        except StageOverflowError as exc:
            exc.completed_counts = dict(table.counts)
            raise
        _write_records_archive(archive_dir, recs, r, archive_rows)
        by_c = counts_by_c_records(recs)
        for c, n in by_c.items():
            table.counts[(r, c)] = n
        if progress is not None:
            progress(f"stage r={r}: {recs.shape[0]} classes, by c: {by_c}")
        parents = recs
        if recs.shape[0] == 0:
            break
    return table


def run_bounded_search_engine(
    seed: StageStore,
    limits: SearchLimits,
    *,
    threads: int = 1,
    archive_dir=None,
    max_store_keys: int | None = None,
    budget_bytes: int | None = None,
    progress=None,
) -> BoundedSearchReport:
    """Array-native counterpart of run_bounded_search."""
    if limits.mode != "bounded":
        raise ValueError("run_bounded_search_engine requires mode='bounded'")
    rec_words = 2 + limits.max_rows
    report = BoundedSearchReport()
    parents = keys_to_records(sorted(seed.keys), rec_words)
    for r in range(seed.r + 1, limits.max_rows + 1):
        try:
            recs = stage_records(
                parents,
                max_cols=limits.max_cols,
                fresh_limit=limits.fresh_limit,
                n1l_filter=limits.n1l_filter,
                threads=threads,
                max_store_keys=max_store_keys,
                budget_bytes=budget_bytes,
                progress=progress,
            )
        except (StageOverflowError, MemoryError) as exc:
            report.aborted = True
            report.aborted_at_r = r
            report.reason = str(exc) or type(exc).__name__
            return report
        if recs.shape[0] == 0:
            break
        by_c = counts_by_c_records(recs)
        report.bounds[r] = min(by_c)
        if limits.keep_c_min_count is not None:
            kept_c = sorted(by_c)[: limits.keep_c_min_count]
            cvals = (recs[:, 0].astype(np.int64) >> 8) & 0xFF
            keep_mask = np.isin(cvals, np.array(kept_c, np.int64))
            recs = recs[keep_mask]
        _write_records_archive(archive_dir, recs, r)
        if progress is not None:
            progress(
                f"bounded stage r={r}: by c {by_c}, bound {report.bounds[r]}, "
                f"parents kept {recs.shape[0]}"
            )
        parents = recs
    return report
