#pragma once

// Reference statistics for oracle checks, independent of the library's
// incomplete-beta implementation: the t tail probability comes from adaptive
// Simpson quadrature of the density, the standard error from the brute-force
// formula.

#include <cmath>
#include <span>

namespace quackstore {
namespace reference {

inline double TDensity(double x, double df) {
	double c = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) -
	           0.5 * std::log(df * 3.14159265358979323846);
	return std::exp(c - (df + 1) / 2 * std::log1p(x * x / df));
}

inline double Simpson(double a, double b, double fa, double fm, double fb) {
	return (b - a) / 6 * (fa + 4 * fm + fb);
}

inline double AdaptiveSimpson(double a, double b, double fa, double fm, double fb, double whole,
                              double df, double tol, int depth) {
	double m = (a + b) / 2;
	double lm = (a + m) / 2;
	double rm = (m + b) / 2;
	double flm = TDensity(lm, df);
	double frm = TDensity(rm, df);
	double left = Simpson(a, m, fa, flm, fm);
	double right = Simpson(m, b, fm, frm, fb);
	if (depth <= 0 || std::fabs(left + right - whole) < 15 * tol) {
		return left + right + (left + right - whole) / 15;
	}
	return AdaptiveSimpson(a, m, fa, flm, fm, left, df, tol / 2, depth - 1) +
	       AdaptiveSimpson(m, b, fm, frm, fb, right, df, tol / 2, depth - 1);
}

inline double UpperTail(double t, uint64_t df_int) {
	double df = static_cast<double>(df_int);
	if (t < 0) {
		return 1.0 - UpperTail(-t, df_int);
	}
	double fa = TDensity(0, df);
	double fb = TDensity(t, df);
	double fm = TDensity(t / 2, df);
	double whole = Simpson(0, t, fa, fm, fb);
	double integral = t == 0 ? 0 : AdaptiveSimpson(0, t, fa, fm, fb, whole, df, 1e-14, 60);
	return 0.5 - integral;
}

inline double Stderr(std::span<const double> xs) {
	double m = 0;
	for (double x : xs) {
		m += x;
	}
	m /= static_cast<double>(xs.size());
	double ss = 0;
	for (double x : xs) {
		ss += (x - m) * (x - m);
	}
	return std::sqrt(ss / static_cast<double>(xs.size() - 1)) /
	       std::sqrt(static_cast<double>(xs.size()));
}

} // namespace reference
} // namespace quackstore
