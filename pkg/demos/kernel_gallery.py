#!/usr/bin/env python3
"""Tour of the decay-kernel families and their transformations.

A decay kernel G(t) is a matrix-valued function: entry (i, j) is the price
impact on asset i, a lag t after trading one unit of asset j.  This script
builds one member of each family, evaluates it, and runs the structure and
shape checks that decide how well-behaved liquidation will be.
"""

import numpy as np

from crossimpact import (
    CrossExpKernel,
    DiagCongruenceKernel,
    ExpDecay,
    GaussianSquared,
    LinearPolya,
    MatrixExpKernel,
    MatrixFunctionKernel,
    PermanentKernel,
    PlusTemporaryKernel,
    ScalarTimesMatrixKernel,
    check_shape_properties,
    check_structure,
)


def describe(name, kernel):
    ts = np.linspace(0.0, 6.0, 25)
    symmetric, commuting = check_structure(kernel, ts)
    report = check_shape_properties(kernel, t_max=6.0)
    flags = "".join(
        mark if getattr(report, prop).value else "-"
        for prop, mark in [("nonnegative", "N"), ("nonincreasing", "I"), ("convex", "C")]
    )
    print(
        f"{name:34s} K={kernel.dimension}  symmetric={str(symmetric):5s} "
        f"commuting={str(commuting):5s}  shape[NIC]={flags}"
    )
    print(f"{'':36s}G(0)   = {np.round(kernel.at(0.0), 4).tolist()}")
    print(f"{'':36s}G(1.5) = {np.round(kernel.at(1.5), 4).tolist()}")


def main():
    q = np.array([[np.cos(0.5), -np.sin(0.5)], [np.sin(0.5), np.cos(0.5)]])

    describe("matrix exponential exp(-tB)", MatrixExpKernel([[1.0, 0.3], [0.3, 2.0]]))
    describe(
        "matrix function exp(-(tB)^2)",
        MatrixFunctionKernel([[1.0, 0.3], [0.3, 2.0]], GaussianSquared()),
    )
    describe(
        "rotated diagonal decays",
        DiagCongruenceKernel(q, [ExpDecay(0.7), LinearPolya(1.5, 0.4)]),
    )
    describe("symmetric cross-exponential", CrossExpKernel(1.0, 1.8, 0.3))
    describe("separable g(t) * L", ScalarTimesMatrixKernel(ExpDecay(1.0), [[2.0, 0.5], [0.5, 1.0]]))
    describe("permanent impact", PermanentKernel([[2.0, 0.5], [0.5, 1.0]]))
    describe(
        "with a temporary spike at lag 0",
        PlusTemporaryKernel([[0.5, 0.0], [0.0, 0.5]], CrossExpKernel(1.0, 1.8, 0.3)),
    )

    print("\nthe two-sided extension mirrors by transposition:")
    kernel = MatrixExpKernel([[1.0, 0.3], [0.3, 2.0]])
    print(f"tilde(+1) = {np.round(kernel.tilde(1.0), 4).tolist()}")
    print(f"tilde(-1) = {np.round(kernel.tilde(-1.0), 4).tolist()} (its transpose)")


if __name__ == "__main__":
    main()
