#include "quackstore/stats.hpp"

#include "stats_reference.hpp"

#include <gtest/gtest.h>

#include <random>

namespace quackstore {
namespace {

double ReferenceUpperTail(double t, uint64_t df) {
	return reference::UpperTail(t, df);
}

double ReferenceStderr(std::span<const double> xs) {
	return reference::Stderr(xs);
}

TEST(StandardErrorTest, WorkedExamples) {
	std::vector<double> a {2, 4, 6};
	EXPECT_NEAR(StandardError(a), 2.0 / std::sqrt(3.0), 1e-12);
	EXPECT_NEAR(StandardError(a), 1.1547, 1e-4);

	std::vector<double> constant {7.5, 7.5, 7.5};
	EXPECT_EQ(StandardError(constant), 0.0);

	std::vector<double> pair {0, 1};
	EXPECT_NEAR(StandardError(pair), 0.5, 1e-12);
}

TEST(StandardErrorTest, RejectsTooFewSamples) {
	std::vector<double> one {3.0};
	EXPECT_THROW(StandardError(one), ContractViolation);
	EXPECT_THROW(StandardError(std::vector<double> {}), ContractViolation);
}

TEST(PairedTTestTest, WorkedExample) {
	// d = [1, 2, 3]: t = 2 * sqrt(3), df = 2, one-sided p ~ 0.0371
	std::vector<double> a {2, 4, 6};
	std::vector<double> b {1, 2, 3};
	TTestResult r = PairedTTest(a, b);
	EXPECT_NEAR(r.t_statistic, 3.4641016151377544, 1e-12);
	EXPECT_EQ(r.degrees_of_freedom, 2u);
	EXPECT_NEAR(r.p_value_one_sided, 0.0371, 1e-4);
	EXPECT_NEAR(r.p_value_one_sided, ReferenceUpperTail(r.t_statistic, 2), 1e-12);
}

TEST(PairedTTestTest, ConstantNonzeroDifferencesGiveInfiniteT) {
	std::vector<double> a {6, 6, 6, 6};
	std::vector<double> b {1, 1, 1, 1};
	TTestResult r = PairedTTest(a, b);
	EXPECT_TRUE(std::isinf(r.t_statistic));
	EXPECT_GT(r.t_statistic, 0);
	EXPECT_EQ(r.p_value_one_sided, 0.0);

	TTestResult neg = PairedTTest(b, a);
	EXPECT_TRUE(std::isinf(neg.t_statistic));
	EXPECT_LT(neg.t_statistic, 0);
	EXPECT_EQ(neg.p_value_one_sided, 1.0);
}

TEST(PairedTTestTest, IdenticalSamplesAreUndefined) {
	std::vector<double> a {1, 2, 3};
	EXPECT_THROW(PairedTTest(a, a), ContractViolation);
}

TEST(PairedTTestTest, RejectsBadShapes) {
	std::vector<double> a {1, 2, 3};
	std::vector<double> b {1, 2};
	EXPECT_THROW(PairedTTest(a, b), ContractViolation);
	std::vector<double> one {1};
	EXPECT_THROW(PairedTTest(one, one), ContractViolation);
}

TEST(PairedTTestTest, AgreesWithQuadratureReference) {
	std::mt19937_64 rng(7);
	std::uniform_int_distribution<int> size_dist(2, 30);
	std::normal_distribution<double> value_dist(0.0, 5.0);
	std::uniform_real_distribution<double> shift_dist(-3.0, 3.0);
	for (int iter = 0; iter < 100; iter++) {
		int n = size_dist(rng);
		double shift = shift_dist(rng);
		std::vector<double> a(n), b(n);
		for (int i = 0; i < n; i++) {
			b[i] = value_dist(rng);
			a[i] = b[i] + shift + value_dist(rng);
		}
		TTestResult r;
		try {
			r = PairedTTest(a, b);
		} catch (const ContractViolation &) {
			continue; // zero-variance draw
		}
		if (std::isinf(r.t_statistic)) {
			continue;
		}
		double ref = ReferenceUpperTail(r.t_statistic, r.degrees_of_freedom);
		double tol = 1e-9 * std::max(std::fabs(ref), 1e-30);
		EXPECT_NEAR(r.p_value_one_sided, ref, std::max(tol, 1e-14))
		    << "t=" << r.t_statistic << " df=" << r.degrees_of_freedom;

		double se_ref = ReferenceStderr(a);
		EXPECT_NEAR(StandardError(a), se_ref, 1e-9 * std::max(se_ref, 1e-30));
	}
}

TEST(PairedTTestTest, PMonotoneDecreasingInT) {
	double prev = 1.0;
	for (double t = 0; t < 10; t += 0.5) {
		double p = StudentTUpperTail(t, 9);
		EXPECT_LE(p, prev);
		prev = p;
	}
}

} // namespace
} // namespace quackstore
