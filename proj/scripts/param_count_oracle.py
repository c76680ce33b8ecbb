#!/usr/bin/env python3
"""Independent per-layer parameter arithmetic for the model presets.

Sums conv (out*in*k*k + out), dense (in*out + out) and batch-norm
(2 * channels) parameter counts layer by layer, without touching the C++
implementation. The totals are frozen into the unit tests as regression
constants.
"""


def conv(cin, cout, k):
    return cout * cin * k * k + cout


def bn(c):
    return 2 * c


def dense(fin, fout):
    return fin * fout + fout


def diacnn(net_width, num_classes):
    total = conv(3, net_width, 3) + bn(net_width)
    cin = net_width
    for stage in range(3):
        width = net_width * (2 ** stage)
        for block in range(3):
            stride2 = stage > 0 and block == 0
            total += conv(cin, width, 3) + bn(width)      # conv1
            total += conv(width, width, 3) + bn(width)    # conv2
            if stride2:
                total += conv(cin, width, 1) + bn(width)  # projection skip
            cin = width
    total += dense(cin, num_classes)
    return total


def baseline_cnn(h, w, num_classes):
    total = 0
    cin = 3
    for f in (8, 16, 32, 64, 128):
        total += conv(cin, f, 3) + bn(f)
        cin = f
        h //= 2
        w //= 2
    feat = cin * h * w
    for units in (64, 32, 16):
        total += dense(feat, units)
        feat = units
    total += dense(feat, num_classes)
    return total


def inception_module(cin, b1, b3, b5, cout, final_bn):
    t = conv(cin, b1, 1) + bn(b1)
    t += conv(cin, b3, 3) + bn(b3)
    t += conv(cin, b5, 5) + bn(b5)
    concat = b1 + b3 + b5 + cin  # pool branch passes cin through
    t += conv(concat, cout, 1)
    if final_bn:
        t += bn(cout)
    return t


def mini_inception(num_classes):
    c = 16
    total = conv(3, c, 3) + conv(3, c, 5)  # stem branches
    total += bn(c)                          # stem.post.bn
    for _ in range(2):                      # residual inception blocks
        total += inception_module(c, 8, 8, 8, c, final_bn=True)
    total += inception_module_reduction(c, 8, 8, 8, 32)
    total += bn(32)                         # reduce.post.bn
    total += conv(32, 16, 3) + dense(16, num_classes)  # aux head
    total += dense(32, num_classes)         # main head
    return total


def inception_module_reduction(cin, b1, b3, b5, cout):
    t = conv(cin, b1, 1) + bn(b1)
    t += conv(cin, b3, 3) + bn(b3)
    t += conv(cin, b5, 5) + bn(b5)
    concat = cin + b1 + b3 + b5
    return t + conv(concat, cout, 1)


if __name__ == "__main__":
    print("diacnn(16, 2)       =", diacnn(16, 2))
    print("diacnn(12, 2)       =", diacnn(12, 2))
    print("diacnn(16, 8)       =", diacnn(16, 8))
    print("baseline(32x32, 2)  =", baseline_cnn(32, 32, 2))
    print("baseline(224x224,8) =", baseline_cnn(224, 224, 8))
    print("mini_inception(2)   =", mini_inception(2))
