#!/usr/bin/env python3
"""Regenerate src/mesh/mc_tables.inc from the topology-resolving marching
cubes lookup tables distributed with scikit-image."""
import base64
import sys

import numpy as np
from skimage.measure import _marching_cubes_lewiner_luts as luts


def decode(entry):
    shape, text = entry
    raw = base64.decodebytes(text.encode("ascii"))
    return np.frombuffer(raw, dtype=np.int8).reshape(shape)


def emit(name, arr, out):
    dims = "".join(f"[{d}]" for d in arr.shape)
    flat = arr.reshape(-1)
    out.write(f"inline constexpr std::int8_t {name}{dims} = {{\n")
    row = arr.shape[-1]
    for i in range(0, flat.size, row):
        out.write("    " + ", ".join(str(int(v)) for v in flat[i:i + row]) + ",\n")
    out.write("};\n\n")


def main(path):
    names = sorted(n for n in dir(luts) if n.isupper() and n != "THE_LUTS")
    with open(path, "w") as out:
        out.write("// Generated by scripts/gen_mc_tables.py. Do not edit.\n")
        out.write("// Case, test and tiling tables of the topology-resolving marching cubes\n")
        out.write("// (Lewiner et al. 2003), as distributed with scikit-image.\n\n")
        for n in names:
            emit(n.lower(), decode(getattr(luts, n)), out)


if __name__ == "__main__":
    main(sys.argv[1])
