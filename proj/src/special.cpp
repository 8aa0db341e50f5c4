#include "l1/special.hpp"

#include <cmath>
#include <numbers>

namespace l1 {

namespace {

using C = std::complex<double>;

// Maclaurin series; fine while |z|² is moderate.
C erf_series(C z) {
    const C z2 = z * z;
    C term = z, sum = z;
    for (int n = 1; n < 400; ++n) {
        term *= -z2 / static_cast<double>(n);
        const C add = term / static_cast<double>(2 * n + 1);
        sum += add;
        if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return 2.0 / std::sqrt(std::numbers::pi) * sum;
}

// Laplace continued fraction for erfc, Re z > 0, evaluated by modified Lentz.
C erfc_cf(C z) {
    const double tiny = 1e-300;
    C f = z, Cc = z, D = 0.0;
    for (int n = 1; n < 5000; ++n) {
        const double a = n / 2.0;
        D = z + a * D;
        if (std::abs(D) < tiny) D = tiny;
        Cc = z + a / Cc;
        if (std::abs(Cc) < tiny) Cc = tiny;
        D = 1.0 / D;
        const C delta = Cc * D;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-z * z) / std::sqrt(std::numbers::pi) / f;
}

}  // namespace

C erfc_c(C z) {
    if (z.real() < 0) return 2.0 - erfc_c(-z);
    const double r = std::abs(z);
    // The series loses about |z|²·log10(e) digits only when Re z² > 0.
    if (r < 2.5 || (r < 5.5 && z.real() < 0.35 * r)) return 1.0 - erf_series(z);
    return erfc_cf(z);
}

C erf_c(C z) {
    if (std::abs(z) < 2.5) return erf_series(z);
    return 1.0 - erfc_c(z);
}

double chi_bump(double s) {
    const double a = std::abs(s);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    const double u = a - 1.0;
    return 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

}  // namespace l1
