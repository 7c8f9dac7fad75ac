"""Regenerate the bundled reference matrices under src/coposlab/data/.

The three matrices are the published rationalized instances this package
verifies exactly: the 5x5 doubly nonnegative compression A5 (entries in
Q(sqrt2)), the Gram matrix B of its cosine series certificate, and the
copositive matrix C separated from A5.  Run from the repository root:

    python scripts/build_reference_data.py
"""

from fractions import Fraction as F
from pathlib import Path

from coposlab.numerics import QSqrt2, SymMatrix, matrix_dumps

R = lambda p, q=1: QSqrt2(F(p, q), F(0))
S = lambda p, q=1: QSqrt2(F(0), F(p, q))
M = lambda p1, q1, p2, q2: QSqrt2(F(p1, q1), F(p2, q2))


def a5() -> SymMatrix:
    rows = [[None] * 5 for _ in range(5)]
    rows[0][0] = R(1)
    rows[0][1] = S(16, 27)
    rows[0][2] = S(1, 123)
    rows[0][3] = S(1, 294)          # 1/(147 sqrt2) = sqrt2/294
    rows[0][4] = S(5, 21)
    rows[1][1] = R(124, 123)
    rows[1][2] = R(1577, 2646)
    rows[1][3] = R(212, 861)
    rows[1][4] = R(1205, 8526)
    rows[2][2] = R(26, 21)
    rows[2][3] = R(572, 783)
    rows[2][4] = M(-2413803, 3254580, 1777340, 3254580)
    rows[3][3] = M(814317, 3254580, 1777340, 3254580)
    rows[3][4] = R(16, 27)
    rows[4][4] = R(1)
    for i in range(5):
        for j in range(i):
            rows[i][j] = rows[j][i]
    return SymMatrix(rows, "exact")


def gram_b() -> SymMatrix:
    rows = [[None] * 4 for _ in range(4)]
    rows[0][0] = R(9, 22)
    rows[0][1] = R(7, 37)
    rows[0][2] = R(-3, 22)
    rows[0][3] = R(-206923, 5678316)
    rows[1][1] = M(336929, 243540, -88867, 162729)
    rows[1][2] = R(2210, 28971)
    rows[1][3] = M(-200129, 487080, 88867, 325458)  # 88867/(162729 sqrt2) = 88867 sqrt2/325458
    rows[2][2] = M(46466763, 35800380, -19550740, 35800380)
    rows[2][3] = R(4, 29)
    rows[3][3] = M(-2440263, 1627290, 1777340, 1627290)
    for i in range(4):
        for j in range(i):
            rows[i][j] = rows[j][i]
    return SymMatrix(rows, "exact")


def cop_c() -> SymMatrix:
    rows = [
        [F(17), F(-91, 5), F(33, 2), F(38, 3), F(-36, 5)],
        [F(-91, 5), F(59, 3), F(-53, 4), F(8), F(33, 4)],
        [F(33, 2), F(-53, 4), F(39, 4), F(-13, 2), F(8)],
        [F(38, 3), F(8), F(-13, 2), F(16, 3), F(-13, 3)],
        [F(-36, 5), F(33, 4), F(8), F(-13, 3), F(1373628701, 353935575)],
    ]
    return SymMatrix(rows, "exact")


def main():
    out = Path(__file__).resolve().parent.parent / "src" / "coposlab" / "data"
    out.mkdir(parents=True, exist_ok=True)
    for name, m in (("paper_A5", a5()), ("paper_B", gram_b()), ("paper_C", cop_c())):
        path = out / f"{name}.json"
        path.write_text(matrix_dumps(m) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
