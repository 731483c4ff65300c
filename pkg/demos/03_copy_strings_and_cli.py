"""
From copy strings to linear programs, and the command line
==========================================================

A copy string is parsed into steps, each step yields symmetry identifications
and independence equations, and these shape the constraint matrix.  The same
pipeline is available as the ``benson-entropy`` command.
"""

import os
import tempfile

from benson_entropy import cli, parse
from benson_entropy import entropy_model as em

prog = parse("rs=cd:ab;t=(cr):ab;u=t:acs")
for step in prog.steps:
    print(f"copy {''.join(''.join(i) for i in step.items)} over {{{','.join(step.over)}}}"
          f" -> {','.join(step.targets)}")
print("variables:", "".join(prog.variables))

# equations of the first step alone
eqs = em.copy_equations(parse("r=c:ab"))
names = "abcdr"


def label(mask):
    return "".join(ch for k, ch in enumerate(names) if mask >> k & 1)


print("\nsymmetries of r=c:ab:", ", ".join(f"H({label(a)})=H({label(b)})"
                                          for a, b in eqs.identifications[:4]), "...")
for row in eqs.independence:
    terms = " ".join(f"{c:+d}H({label(k)})" for k, c in sorted(row.items(), key=lambda t: -t[0]))
    print("independence:", terms, "= 0")

print("\nproblem sizes (rows x columns):")
for s in ["r=c:ab;s=r:ac;t=r:ad", "rs=cd:ab;t=r:ad;u=s:adt", "rs=cd:ab;t=a:bcs;u=(cs):abrt"]:
    n, m = em.build_problem(s).size
    print(f"  {s:32s} {m:4d} x {n}")

# the command line: solve, then independently re-verify every inequality.
# Equivalent shell commands:
#   benson-entropy solve --copy 'r=c:ab;s=r:ac;t=r:ad' --out zy.txt --stats zy.csv
#   benson-entropy verify --inequalities zy.txt --copy 'r=c:ab;s=r:ac;t=r:ad'
with tempfile.TemporaryDirectory() as tmp:
    out, stats = os.path.join(tmp, "zy.txt"), os.path.join(tmp, "zy.csv")
    code = cli.main(["solve", "--copy", "r=c:ab;s=r:ac;t=r:ad", "--out", out, "--stats", stats])
    print("\nsolve exit code", code)
    print(open(out).read().rstrip())
    print(open(stats).read().rstrip())
    code = cli.main(["verify", "--inequalities", out, "--copy", "r=c:ab;s=r:ac;t=r:ad"])
    print("verify exit code", code)
