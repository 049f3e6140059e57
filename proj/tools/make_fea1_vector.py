#!/usr/bin/env python3
# tools/make_fea1_vector.py

# Copyright 2026  The kws-engine Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

"""Writes the shared FEA1 byte-level test vector with an independent encoder.

Record k (0-based) has id RECORDS[k][0], T x D = RECORDS[k][1:3], frame shift
RECORDS[k][3] and value (t * D + d) * 0.25 - k, all exact in float32.
"""
import struct
import sys

RECORDS = [
    ("utt_a", 3, 2, 0.01),
    ("spk1-utté", 1, 5, 0.02),  # non-ASCII id: length counts UTF-8 bytes
    ("z", 4, 1, 0.02),
]


def encode():
    out = bytearray(b"FEA1")
    out += struct.pack("<II", 1, len(RECORDS))
    for k, (uid, rows, cols, shift) in enumerate(RECORDS):
        raw = uid.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<IIf", rows, cols, shift)
        for t in range(rows):
            for d in range(cols):
                out += struct.pack("<f", (t * cols + d) * 0.25 - k)
    return bytes(out)


if __name__ == "__main__":
    path = sys.argv[1] if len(sys.argv) > 1 else "tests/data/fea1_vector.bin"
    with open(path, "wb") as f:
        f.write(encode())
