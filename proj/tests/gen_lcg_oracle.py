"""Writes the first 1000 LCG iterates from seeds 0 and 1 as a C++ include.

Python integers are unbounded, so the product is formed exactly and reduced
with an explicit modulus, independently of the C++ wraparound arithmetic.
"""

A = 1664525
C = 1013904223
MOD = 2**32
COUNT = 1000


def iterates(seed):
    out = []
    for _ in range(COUNT):
        seed = (A * seed + C) % MOD
        out.append(seed)
    return out


def main():
    lines = ["// Generated by gen_lcg_oracle.py; do not edit."]
    for seed in (0, 1):
        vals = iterates(seed)
        lines.append(f"inline constexpr std::uint32_t kLcgFrom{seed}[{COUNT}] = {{")
        for i in range(0, COUNT, 8):
            lines.append("  " + ", ".join(f"{v}u" for v in vals[i:i + 8]) + ",")
        lines.append("};")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
