#!/usr/bin/env python3
"""Ishigami function over stdin: one line of three coordinates in, one value out.

Reads until EOF, so it serves both the oneshot and the streaming protocol.
Optional arguments a and b override the defaults 7 and 0.1.
"""
import math
import sys

a = float(sys.argv[1]) if len(sys.argv) > 1 else 7.0
b = float(sys.argv[2]) if len(sys.argv) > 2 else 0.1

for line in sys.stdin:
    x1, x2, x3 = (float(t) for t in line.split())
    y = math.sin(x1) + a * math.sin(x2) ** 2 + b * x3 ** 4 * math.sin(x1)
    sys.stdout.write("%.17g\n" % y)
    sys.stdout.flush()
