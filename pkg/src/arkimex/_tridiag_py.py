"""Pure-Python tridiagonal LU with partial pivoting (fallback kernel).

Same algorithm and argument conventions as ``_tridiag_ext``: the arrays are
overwritten in place, ``ipiv[i]`` is ``i`` or ``i + 1``, and the return
value of ``gttrf`` is 0 or the 1-based index of the first zero pivot.
"""


def gttrf(dl, d, du, du2, ipiv):
    n = d.shape[0]
    for i in range(n - 2):
        du2[i] = 0.0
    for i in range(n):
        ipiv[i] = i
    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
            if d[i] != 0.0:
                fact = dl[i] / d[i]
                dl[i] = fact
                d[i + 1] -= fact * du[i]
        else:
            fact = d[i] / dl[i]
            d[i] = dl[i]
            dl[i] = fact
            temp = du[i]
            du[i] = d[i + 1]
            d[i + 1] = temp - fact * d[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
            ipiv[i] = i + 1
    for i in range(n):
        if d[i] == 0.0:
            return i + 1
    return 0


def gttrs(dl, d, du, du2, ipiv, b):
    n = d.shape[0]
    for i in range(n - 1):
        if ipiv[i] == i:
            b[i + 1] -= dl[i] * b[i]
        else:
            temp = b[i]
            b[i] = b[i + 1]
            b[i + 1] = temp - dl[i] * b[i]
    b[n - 1] /= d[n - 1]
    if n > 1:
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i]
