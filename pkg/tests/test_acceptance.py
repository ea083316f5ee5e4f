"""Acceptance criteria 1 to 11, each at its stated tolerance.

Every test prints one PASS/FAIL line; the lines are repeated in the
terminal summary under "acceptance criteria". A criterion passes only when
all of its checks pass. Companion checks that help diagnose a failure are
reported in the line but do not change the verdict.
"""


from medialmap import suites


def verdict(log, number, title, checks, companions=()):
    ok = all(c.passed for c in checks)
    failed = [c for c in checks if not c.passed]
    worst = failed[0] if failed else min(checks, key=lambda c: c.slack)
    line = (f"criterion {number}: {'PASS' if ok else 'FAIL'} {title} "
            f"({sum(c.passed for c in checks)}/{len(checks)} checks; "
            f"{'first failure' if failed else 'tightest'} {worst.name} "
            f"measured={worst.measured:.4g} bound={worst.bound:.4g})")
    if companions:
        line += f" [companions {sum(c.passed for c in companions)}/{len(companions)} pass]"
    print(line)
    for c in checks + list(companions):
        print("   ", c.line())
    log.append(line)
    return ok, failed


def check(log, number, title, checks, companions=()):
    ok, failed = verdict(log, number, title, checks, companions)
    assert ok, "; ".join(c.line() for c in failed)


def test_criterion_01_two_point_exactness(acceptance_log):
    check(acceptance_log, 1, "two-point exactness", suites.check_two_point_exactness())


def test_criterion_02_interval_complement(acceptance_log):
    check(acceptance_log, 2, "interval-complement sharpness", suites.check_interval_complement())


def test_criterion_03_four_point_heights(acceptance_log):
    check(acceptance_log, 3, "four-point heights and slabs", suites.check_four_point())


def test_criterion_04_staircase(acceptance_log):
    check(acceptance_log, 4, "staircase plateau and thresholds", suites.check_staircase())


def test_criterion_05_backend_equivalence(acceptance_log):
    check(acceptance_log, 5, "opening vs iterative backends", suites.check_backends(seed=0))


def test_criterion_06_universal_bounds(acceptance_log):
    check(acceptance_log, 6, "universal bounds", suites.check_universal_bounds())


def test_criterion_07_gradient(acceptance_log):
    check(acceptance_log, 7, "gradient inequality and Lipschitz bound", suites.check_gradient(),
          companions=suites.check_gradient(step_cells=3))


def test_criterion_08_support(acceptance_log):
    check(acceptance_log, 8, "support and halving",
          suites.check_support() + suites.check_halving())


def test_criterion_09_stability(acceptance_log):
    checks = (suites.check_stability_pairs(seed=0) + suites.check_stability_example(seed=0)
              + suites.check_parallel_lines())
    check(acceptance_log, 9, "Hausdorff stability", checks)


def test_criterion_10_limit(acceptance_log):
    check(acceptance_log, 10, "limit theorem probe", suites.check_limit(seed=0))


def test_criterion_11_performance(acceptance_log):
    check(acceptance_log, 11, "opening performance", suites.check_performance(seed=0))
