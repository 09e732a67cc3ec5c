"""Exact fixed-point arithmetic for money, volumes and quantities.

All monetary/quantity values are signed 64-bit integers scaled by 10^4.
Keeping the arithmetic in integers makes the incremental views and the
batch oracle agree bit-for-bit, which the differential tests rely on.
"""

SCALE = 10_000
ONE = SCALE

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class FixedPointOverflowError(ArithmeticError):
    """A fixed-point value left the signed 64-bit range."""


def check64(value: int) -> int:
    """Return `value` unchanged, or raise if it does not fit in 64 bits."""
    if value < INT64_MIN or value > INT64_MAX:
        raise FixedPointOverflowError(f"fixed-point value out of 64-bit range: {value}")
    return value


def fp_mul(a: int, b: int) -> int:
    """Multiply two scaled values, renormalizing to one SCALE factor.

    Renormalization uses floor division; every consumer (incremental view
    and oracle alike) goes through this helper so both sides truncate
    identically.
    """
    return check64((a * b) // SCALE)


def fp_div_by_count(total: int, count: int) -> int:
    """Scaled total divided by a plain count (used for derived averages)."""
    if count <= 0:
        raise ZeroDivisionError("average over empty group")
    return total // count


def parse_fixed(text: str) -> int:
    """Parse a decimal string into a scaled integer, exactly.

    Accepts an optional sign, an integer part, and at most four fractional
    digits. Anything else (exponents, extra precision, stray characters)
    is rejected to keep CSV round trips lossless.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty fixed-point literal")
    sign = 1
    if s[0] in "+-":
        if s[0] == "-":
            sign = -1
        s = s[1:]
    int_part, dot, frac_part = s.partition(".")
    if not int_part and not frac_part:
        raise ValueError(f"malformed fixed-point literal: {text!r}")
    if int_part and not int_part.isdigit():
        raise ValueError(f"malformed fixed-point literal: {text!r}")
    if frac_part and not frac_part.isdigit():
        raise ValueError(f"malformed fixed-point literal: {text!r}")
    if len(frac_part) > 4:
        raise ValueError(f"more than 4 fractional digits: {text!r}")
    whole = int(int_part) if int_part else 0
    frac = int(frac_part.ljust(4, "0")) if frac_part else 0
    return check64(sign * (whole * SCALE + frac))


def format_fixed(value: int) -> str:
    """Render a scaled integer as a decimal string (inverse of parse_fixed)."""
    sign = "-" if value < 0 else ""
    mag = abs(value)
    whole, frac = divmod(mag, SCALE)
    if frac == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{str(frac).zfill(4).rstrip('0')}"
