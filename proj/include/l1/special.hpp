#pragma once
// Complex error function and the bump profile used by windowed normalizers.

#include <complex>

namespace l1 {

std::complex<double> erfc_c(std::complex<double> z);
std::complex<double> erf_c(std::complex<double> z);

// C² step: 1 on [0,1], 1 - 10u³ + 15u⁴ - 6u⁵ with u = |s|-1 on [1,2], 0 beyond.
double chi_bump(double s);

}  // namespace l1
