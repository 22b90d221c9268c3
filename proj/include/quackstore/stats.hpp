#pragma once

#include "quackstore/common.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace quackstore {

inline double Mean(std::span<const double> xs) {
	double sum = 0;
	for (double x : xs) {
		sum += x;
	}
	return sum / static_cast<double>(xs.size());
}

// Sample standard deviation (n-1 denominator).
inline double SampleStddev(std::span<const double> xs) {
	if (xs.size() < 2) {
		throw ContractViolation("sample stddev needs at least 2 samples");
	}
	double m = Mean(xs);
	double ss = 0;
	for (double x : xs) {
		ss += (x - m) * (x - m);
	}
	return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double StandardError(std::span<const double> xs) {
	if (xs.size() < 2) {
		throw ContractViolation("standard error needs at least 2 samples");
	}
	return SampleStddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

namespace detail {

inline double BetaContinuedFraction(double a, double b, double x) {
	constexpr int kMaxIter = 300;
	constexpr double kEps = 3e-16;
	constexpr double kTiny = 1e-300;
	double qab = a + b;
	double qap = a + 1.0;
	double qam = a - 1.0;
	double c = 1.0;
	double d = 1.0 - qab * x / qap;
	if (std::fabs(d) < kTiny) {
		d = kTiny;
	}
	d = 1.0 / d;
	double h = d;
	for (int m = 1; m <= kMaxIter; m++) {
		int m2 = 2 * m;
		double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
		d = 1.0 + aa * d;
		if (std::fabs(d) < kTiny) {
			d = kTiny;
		}
		c = 1.0 + aa / c;
		if (std::fabs(c) < kTiny) {
			c = kTiny;
		}
		d = 1.0 / d;
		h *= d * c;
		aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
		d = 1.0 + aa * d;
		if (std::fabs(d) < kTiny) {
			d = kTiny;
		}
		c = 1.0 + aa / c;
		if (std::fabs(c) < kTiny) {
			c = kTiny;
		}
		d = 1.0 / d;
		double del = d * c;
		h *= del;
		if (std::fabs(del - 1.0) < kEps) {
			break;
		}
	}
	return h;
}

} // namespace detail

inline double RegularizedIncompleteBeta(double a, double b, double x) {
	if (x <= 0.0) {
		return 0.0;
	}
	if (x >= 1.0) {
		return 1.0;
	}
	double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
	               b * std::log(1.0 - x);
	double bt = std::exp(ln_bt);
	if (x < (a + 1.0) / (a + b + 2.0)) {
		return bt * detail::BetaContinuedFraction(a, b, x) / a;
	}
	return 1.0 - bt * detail::BetaContinuedFraction(b, a, 1.0 - x) / b;
}

// P(T_df > t), the one-sided upper tail of Student's t distribution.
inline double StudentTUpperTail(double t, uint64_t df) {
	if (std::isinf(t)) {
		return t > 0 ? 0.0 : 1.0;
	}
	double d = static_cast<double>(df);
	double x = d / (d + t * t);
	double half_tail = 0.5 * RegularizedIncompleteBeta(d / 2.0, 0.5, x);
	return t >= 0 ? half_tail : 1.0 - half_tail;
}

struct TTestResult {
	double t_statistic = 0;
	uint64_t degrees_of_freedom = 0;
	double p_value_one_sided = 1;
};

// Paired one-sided t-test on d_i = a_i - b_i, testing mean(d) > 0 against the
// upper tail. Zero-variance differences with nonzero mean follow the infinite-t
// convention (p = 0 when mean > 0, p = 1 when mean < 0); identically-zero
// differences leave t undefined and are rejected.
inline TTestResult PairedTTest(std::span<const double> a, std::span<const double> b) {
	if (a.size() != b.size()) {
		throw ContractViolation("paired t-test requires equal-length samples");
	}
	size_t n = a.size();
	if (n < 2) {
		throw ContractViolation("paired t-test needs at least 2 pairs");
	}
	std::vector<double> d(n);
	for (size_t i = 0; i < n; i++) {
		d[i] = a[i] - b[i];
	}
	double mean_d = Mean(d);
	double sd = SampleStddev(d);
	TTestResult result;
	result.degrees_of_freedom = n - 1;
	if (sd == 0.0) {
		if (mean_d == 0.0) {
			throw ContractViolation("t statistic undefined: zero variance and zero mean");
		}
		result.t_statistic = mean_d > 0 ? std::numeric_limits<double>::infinity()
		                                : -std::numeric_limits<double>::infinity();
		result.p_value_one_sided = mean_d > 0 ? 0.0 : 1.0;
		return result;
	}
	result.t_statistic = mean_d * std::sqrt(static_cast<double>(n)) / sd;
	result.p_value_one_sided = StudentTUpperTail(result.t_statistic, result.degrees_of_freedom);
	return result;
}

} // namespace quackstore
