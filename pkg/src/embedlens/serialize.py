"""Bit-exact array <-> JSON codec used by session files and model documents.

Arrays travel as base-64 little-endian raw bytes plus an explicit shape, so
round-trips are exact and independent of the host's decimal formatting.
"""

import base64

import numpy as np


def encode_array(a):
    a = np.ascontiguousarray(a)
    if a.dtype == np.float64:
        kind = "f8"
    elif a.dtype == np.int64:
        kind = "i8"
    else:
        a = a.astype(np.int64) if a.dtype.kind in "iu" else a.astype(np.float64)
        kind = "i8" if a.dtype == np.int64 else "f8"
    return {
        "dtype": kind,
        "shape": list(a.shape),
        "data": base64.b64encode(a.astype("<" + kind).tobytes()).decode("ascii"),
    }


def decode_array(doc):
    raw = base64.b64decode(doc["data"])
    a = np.frombuffer(raw, dtype="<" + doc["dtype"]).copy()
    return a.reshape(doc["shape"]).astype(doc["dtype"])


def encode_optional(a):
    return None if a is None else encode_array(a)


def decode_optional(doc):
    return None if doc is None else decode_array(doc)
