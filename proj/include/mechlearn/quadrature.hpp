#pragma once

#include <array>
#include <cstddef>

namespace mechlearn {

namespace detail {
// 15-point Gauss-Legendre rule on [-1, 1] (positive half; rule is symmetric).
inline constexpr std::array<double, 8> kGl15Nodes = {
    0.0000000000000000, 0.2011940939974345, 0.3941513470775634, 0.5709721726085388,
    0.7244177313601701, 0.8482065834104272, 0.9372733924007060, 0.9879925180204854};
inline constexpr std::array<double, 8> kGl15Weights = {
    0.2025782419255613, 0.1984314853271116, 0.1861610000155622, 0.1662692058169939,
    0.1395706779261543, 0.1071592204671719, 0.0703660474881081, 0.0307532419961173};
}  // namespace detail

/// Single-panel 15-point Gauss-Legendre quadrature of f over [a, b].
template <class F>
double integrate_panel(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = detail::kGl15Weights[0] * f(mid);
    for (std::size_t i = 1; i < detail::kGl15Nodes.size(); ++i) {
        const double dx = half * detail::kGl15Nodes[i];
        sum += detail::kGl15Weights[i] * (f(mid - dx) + f(mid + dx));
    }
    return sum * half;
}

/// Composite Gauss-Legendre quadrature with `panels` equal panels.
template <class F>
double integrate(F&& f, double a, double b, int panels = 64) {
    if (!(b > a)) return 0.0;
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        sum += integrate_panel(f, a + p * h, a + (p + 1) * h);
    }
    return sum;
}

}  // namespace mechlearn
