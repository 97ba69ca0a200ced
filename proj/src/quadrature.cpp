#include "spdelab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace spdelab {

namespace {

// 8-point Gauss-Legendre nodes/weights on [-1,1].
constexpr double kNodes[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr double kWeights[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

}  // namespace

double gauss_composite(const std::function<double(double)>& f, double a, double b,
                       int panels) {
    const double width = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double mid = lo + 0.5 * width;
        double panel = 0.0;
        for (int i = 0; i < 8; ++i)
            panel += kWeights[i] * f(mid + 0.5 * width * kNodes[i]);
        sum += 0.5 * width * panel;
    }
    return sum;
}

QuadratureResult graded_integral(const std::function<double(double)>& f, double T,
                                 double sigma, double rel_tol) {
    if (sigma < 0.0 || sigma >= 1.0)
        throw std::invalid_argument("graded_integral: sigma must lie in [0,1)");
    const double m = 1.0 / (1.0 - sigma);
    // t = u^m, dt = m u^{m-1} du, u in (0, T^{1/m}]
    auto g = [&](double u) {
        const double t = std::pow(u, m);
        return f(t) * m * std::pow(u, m - 1.0);
    };
    const double U = std::pow(T, 1.0 - sigma);

    QuadratureResult res;
    int panels = 64;
    double prev = gauss_composite(g, 0.0, U, panels);
    for (int iter = 0; iter < 8; ++iter) {
        panels *= 2;
        const double cur = gauss_composite(g, 0.0, U, panels);
        res.value = cur;
        res.error_estimate = std::abs(cur - prev);
        const double scale = std::max(std::abs(cur), 1e-300);
        if (res.error_estimate <= rel_tol * scale) return res;
        prev = cur;
    }
    res.converged = false;
    return res;
}

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& f, double a, double fa,
                   double b, double fb, double m, double fm, double whole, double tol,
                   int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    if (depth > 40 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = simpson(a, fa, b, fb, fm);
    return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 0);
}

}  // namespace spdelab
