#!/usr/bin/env python3
"""A gallery of kernels on both sides of the positive-definiteness line.

Positive definiteness of the (two-sided) kernel is exactly the absence of
profitable round trips.  Three instructive families:

* the nonsymmetric exponential exp(-tJ) for a Jordan block J = [[b, 1],
  [0, b]] flips from admissible to manipulable at b = 1/2;
* a kernel can be nonnegative, nonincreasing and convex yet still fail --
  symmetry is essential; the failure hides at very low frequencies and
  needs hundreds of trades to monetize;
* linear (capped) decay is only admissible in its proportional symmetric
  form, where all entries hit zero at the same time.
"""

from crossimpact import (
    ClampedExpKernel,
    JordanExpKernel,
    Linear2x2Kernel,
    check_shape_properties,
    classify_positive_definite,
    cost,
    search_violation,
)


def show(title, kernel):
    report = classify_positive_definite(kernel)
    line = f"{title:45s} -> {report.verdict}"
    if report.witness is not None:
        w = report.witness
        value = cost(kernel, w.grid, w.trades)
        line += f" (round trip of {w.grid.n} trades earns {-value:.3e})"
    print(line)
    return report


def main():
    print("== nonsymmetric exponential decay ==")
    for b in (0.40, 0.49, 0.50, 0.60):
        show(f"exp(-tJ), J = [[{b}, 1], [0, {b}]]", JordanExpKernel(b))

    print("\n== convex but asymmetric: the shape checks all pass... ==")
    kernel = ClampedExpKernel()
    shape = check_shape_properties(kernel, t_max=20.0)
    print(
        f"nonnegative={shape.nonnegative.value} "
        f"nonincreasing={shape.nonincreasing.value} convex={shape.convex.value} "
        f"(all sampled verdicts)"
    )
    print("...yet a long, patient round trip is profitable:")
    witness = search_violation(kernel, span_max=400.0, n_max=400, budget=5_000, seed=0)
    value = cost(kernel, witness.grid, witness.trades)
    print(
        f"found {witness.grid.n} trades over a span of {witness.grid.span:.0f} "
        f"with cost {value:.3e} < 0"
    )

    print("\n== linear decay ==")
    show(
        "proportional symmetric (all kinks align)",
        Linear2x2Kernel(2.0, 1.6, 1.6, 2.4, 1.0, 0.8, 0.8, 1.2),
    )
    show(
        "same matrices, off-diagonal kink moved",
        Linear2x2Kernel(2.0, 1.2, 1.2, 2.4, 1.0, 0.8, 0.8, 1.2),
    )


if __name__ == "__main__":
    main()
