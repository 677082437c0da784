"""Reference subdivision matrix sections and limit exponents."""
from fractions import Fraction

import numpy as np


def _parse(rows, exact=True):
    conv = Fraction if exact else float
    width = max(len(r) for r in rows)
    out = []
    for r in rows:
        vals = [conv(v) if v else conv(0) for v in r]
        out.append(vals + [conv(0)] * (width - len(vals)))
    return np.array(out, dtype=object if exact else float)


# rows -6..3, columns -3..0
BSPLINE2 = _parse([
    ["1/4"], ["3/4"], ["3/4", "1/4"], ["1/4", "3/4"], ["", "5/6", "1/6"], ["", "1/3", "2/3"],
    ["", "", "3/4", "1/4"], ["", "", "1/4", "3/4"], ["", "", "", "3/4"], ["", "", "", "1/4"],
])

_DD_TOP = [["-1/16"], ["0"], ["9/16", "-1/16"], ["1", "0"], ["9/16", "9/16", "-1/16"], ["0", "1", "0"],
           ["-1/16", "9/16", "9/16", "-1/16"], ["", "0", "1", "0"]]
_DD_BOTTOM = [["", "", "", "-1/16", "9/16", "9/16", "-1/16"], ["", "", "", "", "0", "1", "0"],
              ["", "", "", "", "-1/16", "9/16", "9/16"], ["", "", "", "", "", "0", "1"],
              ["", "", "", "", "", "-1/16", "9/16"], ["", "", "", "", "", "", "0"],
              ["", "", "", "", "", "", "-1/16"]]

# rows -9..9, columns -3..3
DD4 = _parse(_DD_TOP + [["", "-5/64", "5/8", "15/32", "-1/64"], ["", "", "0", "1", "0"],
                        ["", "", "-1/5", "3/4", "1/2", "-1/20"], ["", "", "", "0", "1", "0"]] + _DD_BOTTOM)

POLYHARMONIC = _parse(_DD_TOP + [["", "-1/24", "19/36", "13/24", "-1/36"], ["", "", "0", "1", "0"],
                                 ["", "", "-1/9", "7/12", "11/18", "-1/12"], ["", "", "", "0", "1", "0"]]
                      + _DD_BOTTOM)

_a, _b, _q = "0.1662", "0.3338", "0.2500"
BUHMANN = _parse([
    [_a], ["0"], [_b, _a], ["1", "0"], [_b, _b, _a], ["0", "1", "0"], [_a, _b, _b, _a], ["", "0", "1", "0"],
    ["", _a, _b, _b, _a], ["", "", "0", "1", "0"], ["", "", _q, _q, _q, _q], ["", "", "", "0", "1", "0"],
    ["", "", "", _q, _q, _q, _q], ["", "", "", "", "0", "1", "0"], ["", "", "", "", _q, _q, _q],
    ["", "", "", "", "", "0", "1"], ["", "", "", "", "", _q, _q], ["", "", "", "", "", "", "0"],
    ["", "", "", "", "", "", _q],
], exact=False)

# r*_16 of zeta_-2..zeta_2
R_STAR_16 = {
    "dd4": [2.0, 2.0, 2.0, 2.0, 2.0],
    "buhmann": [0.4576, 0.3829, 0.3822, 0.3058, 0.3058],
    "polyharmonic": [1.7632] * 5,
}
