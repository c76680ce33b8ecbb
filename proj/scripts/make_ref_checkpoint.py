#!/usr/bin/env python3
"""Reference writer for the checkpoint binary format.

Produces tests/data/ref_checkpoint.ckpt with deterministic parameter
values, independently of the C++ writer, and prints the FNV-1a checksum
the loader tests pin. Format:

  "DCNN" | u32 version=1 | u64 arch_len + arch JSON | u64 array count |
  per array: u32 name_len, name, u8 flags (1=trainable, 2=running stat),
  u32 rank, u32 dims[rank], u64 numel, f32 data[numel]   (little-endian)
"""
import json
import struct
import sys

ARCH = {
    "preset": "fixture",
    "input_shape": [3, 4, 4],
    "num_classes": 2,
    "logits": "fc",
    "output": "out",
    "features": "gap",
    "layers": [
        {"name": "input", "kind": "input"},
        {"name": "conv", "kind": "conv2d", "inputs": ["input"],
         "out_channels": 2, "kernel": 1, "stride": 1, "padding": "same"},
        {"name": "bn", "kind": "batch_norm", "inputs": ["conv"]},
        {"name": "act", "kind": "relu", "inputs": ["bn"]},
        {"name": "gap", "kind": "global_avg_pool", "inputs": ["act"]},
        {"name": "fc", "kind": "dense", "inputs": ["gap"], "units": 2},
        {"name": "out", "kind": "softmax", "inputs": ["fc"]},
    ],
}


def ramp(n, scale, offset):
    return [offset + scale * i for i in range(n)]


# name -> (flags, dims, values); map order (sorted by name) must match the
# C++ ParamStore iteration order for the checksum to line up.
PARAMS = {
    "conv.w": (1, [2, 3, 1, 1], ramp(6, 0.125, -0.25)),
    "conv.b": (1, [2], [0.5, -0.5]),
    "bn.gamma": (1, [2], [1.0, 1.25]),
    "bn.beta": (0, [2], [0.0, -0.125]),
    "fc.w": (1, [2, 2], ramp(4, 0.25, -0.375)),
    "fc.b": (1, [2], [0.0625, -0.0625]),
}
STATS = {
    "bn.running_mean": [0.25, -0.25],
    "bn.running_var": [1.5, 0.75],
}


def put_array(out, name, flags, dims, values):
    out += struct.pack("<I", len(name)) + name.encode()
    out += struct.pack("<B", flags)
    out += struct.pack("<I", len(dims))
    for d in dims:
        out += struct.pack("<I", d)
    out += struct.pack("<Q", len(values))
    for v in values:
        out += struct.pack("<f", v)
    return out


def fnv64(data, h=0xCBF29CE484222325):
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def main(path):
    arch = json.dumps(ARCH, indent=2)
    out = b"DCNN" + struct.pack("<I", 1)
    out += struct.pack("<Q", len(arch)) + arch.encode()
    out += struct.pack("<Q", len(PARAMS) + len(STATS))
    for name, (flags, dims, values) in PARAMS.items():
        out = put_array(out, name, flags, dims, values)
    for name, values in STATS.items():
        out = put_array(out, name, 2, [len(values)], values)
    with open(path, "wb") as f:
        f.write(out)

    # checksum over sorted (name, 0x00, f32le payload), FNV-1a 64
    h = 0xCBF29CE484222325
    for name in sorted(PARAMS):
        _, _, values = PARAMS[name]
        h = fnv64(name.encode() + b"\x00", h)
        h = fnv64(b"".join(struct.pack("<f", v) for v in values), h)
    print(f"fixture: {path}")
    print(f"param_checksum: 0x{h:016x}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/ref_checkpoint.ckpt")
