"""Exact bivariate polynomials in (theta, eps)."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Mapping


class BivarPoly:
    """Finitely supported map ``(deg_theta, deg_eps) -> coefficient``.

    Coefficients are kept exact (int or Fraction); zero entries are dropped.
    """

    __slots__ = ("_c",)

    def __init__(self, coefficients: Mapping[tuple[int, int], Rational] | None = None):
        self._c = {k: v for k, v in (coefficients or {}).items() if v != 0}

    @classmethod
    def theta(cls) -> "BivarPoly":
        return cls({(1, 0): 1})

    @classmethod
    def eps(cls) -> "BivarPoly":
        return cls({(0, 1): 1})

    @classmethod
    def const(cls, value) -> "BivarPoly":
        return cls({(0, 0): value})

    @property
    def coefficients(self) -> dict[tuple[int, int], Rational]:
        return dict(self._c)

    def __eq__(self, other):
        if not isinstance(other, BivarPoly):
            return NotImplemented
        return self._c == other._c

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    def __add__(self, other: "BivarPoly") -> "BivarPoly":
        out = dict(self._c)
        for k, v in other._c.items():
            out[k] = out.get(k, 0) + v
        return BivarPoly(out)

    def __neg__(self):
        return BivarPoly({k: -v for k, v in self._c.items()})

    def __sub__(self, other: "BivarPoly") -> "BivarPoly":
        return self + (-other)

    def __mul__(self, other) -> "BivarPoly":
        if not isinstance(other, BivarPoly):
            return BivarPoly({k: v * other for k, v in self._c.items()})
        out: dict[tuple[int, int], Rational] = {}
        for (i1, j1), a in self._c.items():
            for (i2, j2), b in other._c.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0) + a * b
        return BivarPoly(out)

    __rmul__ = __mul__

    def d_theta(self) -> "BivarPoly":
        return BivarPoly({(i - 1, j): i * v for (i, j), v in self._c.items() if i > 0})

    def is_zero(self) -> bool:
        return not self._c

    def degree(self) -> tuple[int, int]:
        if not self._c:
            return (0, 0)
        return max(i for i, _ in self._c), max(j for _, j in self._c)

    def __call__(self, theta: float, eps: float) -> float:
        total = 0.0
        for (i, j), v in self._c.items():
            total += float(v) * theta ** i * eps ** j
        return total

    def divide_theta_one_minus_theta(self) -> "BivarPoly":
        """Exact quotient by ``theta (1 - theta)``; raises if not divisible."""
        if any(i == 0 for i, _ in self._c):
            raise ValueError("polynomial does not vanish at theta = 0")
        shifted = {(i - 1, j): v for (i, j), v in self._c.items()}
        # divide by (1 - theta) column by column: p = (1 - theta) q  =>  q_i = p_i + q_{i-1}
        out: dict[tuple[int, int], Rational] = {}
        for j in sorted({j for _, j in shifted}):
            column = {i: v for (i, jj), v in shifted.items() if jj == j}
            top = max(column)
            q_prev = 0
            for i in range(top + 1):
                q_i = column.get(i, 0) + q_prev
                if i == top:
                    if q_i != 0:
                        raise ValueError("polynomial does not vanish at theta = 1")
                    break
                out[(i, j)] = q_i
                q_prev = q_i
        return BivarPoly(out)

    def format(self) -> str:
        if not self._c:
            return "0"
        terms = []
        for (i, j) in sorted(self._c, key=lambda k: (k[1], k[0])):
            v = self._c[(i, j)]
            mono = "".join(
                part for part in (
                    "" if i == 0 else ("θ" if i == 1 else f"θ^{i}"),
                    "" if j == 0 else ("ε" if j == 1 else f"ε^{j}"),
                ) if part
            )
            mag = abs(v)
            coeff = "" if (mag == 1 and mono) else str(mag)
            terms.append(("-" if v < 0 else "+", coeff + mono))
        sign, first = terms[0]
        text = ("-" if sign == "-" else "") + first
        for sign, body in terms[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"BivarPoly({self.format()})"


def as_fraction(value: float | str) -> Fraction:
    return Fraction(str(value)) if isinstance(value, float) else Fraction(value)
