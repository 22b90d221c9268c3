#pragma once

#include "quackstore/engine.hpp"
#include "quackstore/stats.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

namespace quackstore {

// Synthetic scan table: scale factor 1 is 150000 rows (TPC-H customer
// cardinality), each row a fixed-size record whose bytes derive from the row
// index and seed, packed densely into 256 KB blocks.
struct Workload {
	double scale_factor = 1.0;
	uint32_t row_size_bytes = 200;

	static constexpr uint64_t kRowsPerScaleFactor = 150000;

	uint64_t rows() const {
		return static_cast<uint64_t>(std::llround(scale_factor * kRowsPerScaleFactor));
	}
	uint64_t rows_per_block() const {
		return kDataBlockSize / row_size_bytes;
	}
	uint64_t block_count() const {
		uint64_t rpb = rows_per_block();
		return (rows() + rpb - 1) / rpb;
	}
};

inline Workload MakeWorkload(double scale_factor, uint32_t row_size_bytes = 200) {
	Workload w {scale_factor, row_size_bytes};
	if (!(scale_factor > 0) || w.rows() < 1) {
		throw ContractViolation("scale factor must produce at least one row");
	}
	if (row_size_bytes == 0 || row_size_bytes > kDataBlockSize) {
		throw ContractViolation("row size must be in (0, block size]");
	}
	return w;
}

inline void FillRow(std::span<u8> out, uint64_t seed, uint64_t row_index) {
	StoreLE64(out.data(), row_index);
	uint64_t x = HashCombine(seed, row_index);
	for (size_t pos = 8; pos + 8 <= out.size(); pos += 8) {
		x = SplitMix64(x);
		StoreLE64(out.data() + pos, x);
	}
	for (size_t pos = out.size() & ~size_t(7); pos < out.size(); pos++) {
		out[pos] = u8(row_index);
	}
}

inline uint64_t RowDigest(std::span<const u8> row) {
	return Fnv1a64(row.data(), row.size());
}

// The XOR fold over all row digests; order-independent, so parallel scan tasks
// can combine freely. Computable without touching storage, which is how a scan
// validates data integrity against the generation-time value.
inline uint64_t ExpectedScanChecksum(const Workload &workload, uint64_t seed) {
	std::vector<u8> row(workload.row_size_bytes);
	uint64_t checksum = 0;
	for (uint64_t r = 0; r < workload.rows(); r++) {
		FillRow(row, seed, r);
		checksum ^= RowDigest(row);
	}
	return checksum;
}

inline uint64_t ScanRangeSize(uint64_t blocks, uint32_t workers) {
	uint64_t granularity = 4ULL * std::max(workers, 1u);
	return std::max<uint64_t>(1, (blocks + granularity - 1) / granularity);
}

struct GenerateResult {
	uint64_t block_count = 0;
	uint64_t checksum = 0;
	Scheduler::RunStats stats;
};

// Packs the workload's rows into data blocks through the engine's write path and
// checkpoints. Requires a freshly formatted device so dataset block ids are
// 0..block_count-1.
inline GenerateResult GenerateDataset(Engine &engine, double scale_factor, uint64_t seed) {
	Workload workload = MakeWorkload(scale_factor, 200);
	uint64_t blocks = workload.block_count();
	if (blocks > UsableDataBlocks(engine.geometry())) {
		throw IoError("device full: dataset needs " + std::to_string(blocks) + " blocks, have " +
		              std::to_string(UsableDataBlocks(engine.geometry())));
	}
	for (uint64_t i = 0; i < blocks; i++) {
		uint64_t id = engine.manager().AllocateBlock();
		if (id != i) {
			throw ContractViolation("generate requires a freshly formatted device");
		}
	}
	uint64_t rows = workload.rows();
	uint64_t rpb = workload.rows_per_block();
	uint32_t row_size = workload.row_size_bytes;
	std::atomic<uint64_t> checksum {0};
	uint64_t range = ScanRangeSize(blocks, engine.workers());
	std::vector<TaskAction> tasks;
	for (uint64_t first = 0; first < blocks; first += range) {
		uint64_t last = std::min(first + range, blocks);
		tasks.push_back([&, first, last](SimContext &ctx) {
			DmaBuffer buf(kDataBlockSize, engine.geometry().lba_size_bytes);
			uint64_t local = 0;
			for (uint64_t b = first; b < last; b++) {
				std::memset(buf.data(), 0, buf.size());
				uint64_t row_begin = b * rpb;
				uint64_t row_end = std::min(row_begin + rpb, rows);
				for (uint64_t r = row_begin; r < row_end; r++) {
					std::span<u8> row(buf.data() + (r - row_begin) * row_size, row_size);
					FillRow(row, seed, r);
					local ^= RowDigest(row);
				}
				engine.strategy().WriteBlock(ctx, b, buf);
			}
			checksum.fetch_xor(local, std::memory_order_relaxed);
		});
	}
	GenerateResult result;
	result.stats = engine.RunTasks(std::move(tasks), engine.workers());
	engine.Checkpoint();
	result.block_count = blocks;
	result.checksum = checksum.load();
	return result;
}

struct ScanResult {
	uint64_t checksum = 0;
	sim_time_t duration_ns = 0;
	double host_seconds = 0;

	double duration_us() const {
		return static_cast<double>(duration_ns) / 1000.0;
	}
};

// Schedules one task per contiguous block range, reads every block through the
// engine's strategy and folds the row digests. The fold must equal the
// generation-time checksum or the scan fails with a corruption error.
inline ScanResult RunScan(Engine &engine, double scale_factor, uint64_t seed, uint32_t workers,
                          std::optional<uint64_t> expected_checksum = std::nullopt) {
	Workload workload = MakeWorkload(scale_factor, 200);
	uint64_t blocks = workload.block_count();
	uint64_t rows = workload.rows();
	uint64_t rpb = workload.rows_per_block();
	uint32_t row_size = workload.row_size_bytes;
	uint64_t expected = expected_checksum ? *expected_checksum
	                                      : ExpectedScanChecksum(workload, seed);
	engine.BeginMeasuredRun();
	std::atomic<uint64_t> checksum {0};
	uint64_t range = ScanRangeSize(blocks, workers);
	std::vector<TaskAction> tasks;
	for (uint64_t first = 0; first < blocks; first += range) {
		uint64_t last = std::min(first + range, blocks);
		tasks.push_back([&, first, last](SimContext &ctx) {
			DmaBuffer buf(kDataBlockSize, engine.geometry().lba_size_bytes);
			uint64_t local = 0;
			for (uint64_t b = first; b < last; b++) {
				engine.strategy().ReadBlock(ctx, b, buf);
				uint64_t row_begin = b * rpb;
				uint64_t row_end = std::min(row_begin + rpb, rows);
				for (uint64_t r = row_begin; r < row_end; r++) {
					local ^= RowDigest(
					    std::span<const u8>(buf.data() + (r - row_begin) * row_size, row_size));
				}
			}
			checksum.fetch_xor(local, std::memory_order_relaxed);
		});
	}
	Scheduler::RunStats stats = engine.RunTasks(std::move(tasks), workers);
	ScanResult result;
	result.checksum = checksum.load();
	result.duration_ns = stats.makespan_ns;
	result.host_seconds = stats.host_seconds;
	if (result.checksum != expected) {
		throw CorruptionError("scan checksum mismatch: data corruption detected");
	}
	return result;
}

struct BenchSample {
	std::string strategy;
	bool passthrough = false;
	double scale_factor = 0;
	uint32_t rep = 0;
	double duration_us = 0;

	bool operator==(const BenchSample &) const = default;
};

struct BenchSummary {
	std::string strategy;
	bool passthrough = false;
	double scale_factor = 0;
	double mean_us = 0;
	double stderr_us = 0;
	bool has_ttest = false;
	double t_stat = 0;
	double p_value = 0;

	bool operator==(const BenchSummary &) const = default;
};

struct BenchReport {
	std::vector<BenchSample> samples;
	std::vector<BenchSummary> summaries;

	bool operator==(const BenchReport &) const = default;

	std::vector<double> SamplesFor(const std::string &strategy, bool passthrough,
	                               double scale_factor) const {
		std::vector<double> out;
		for (const BenchSample &s : samples) {
			if (s.strategy == strategy && s.passthrough == passthrough &&
			    s.scale_factor == scale_factor) {
				out.push_back(s.duration_us);
			}
		}
		return out;
	}

	const BenchSummary *SummaryFor(const std::string &strategy, bool passthrough,
	                               double scale_factor) const {
		for (const BenchSummary &s : summaries) {
			if (s.strategy == strategy && s.passthrough == passthrough &&
			    s.scale_factor == scale_factor) {
				return &s;
			}
		}
		return nullptr;
	}
};

namespace detail {

inline std::string FormatDouble(double v) {
	char buf[64];
	auto res = std::to_chars(buf, buf + sizeof(buf), v);
	return std::string(buf, res.ptr);
}

inline double ParseDouble(const std::string &s) {
	double v = 0;
	auto res = std::from_chars(s.data(), s.data() + s.size(), v);
	if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
		throw IoError("invalid number in CSV: '" + s + "'");
	}
	return v;
}

inline std::vector<std::string> SplitCsvLine(const std::string &line) {
	std::vector<std::string> fields;
	std::string field;
	for (char c : line) {
		if (c == ',') {
			fields.push_back(field);
			field.clear();
		} else if (c != '\r') {
			field += c;
		}
	}
	fields.push_back(field);
	return fields;
}

} // namespace detail

inline constexpr const char *kCsvHeader =
    "kind,strategy,passthrough,scale_factor,rep,duration_us,mean_us,stderr_us,t_stat,p_value";

// Sample rows fill rep and duration_us; summary rows fill the aggregate columns,
// with t_stat/p_value left empty where no test applies.
inline void EmitCsv(const BenchReport &report, std::ostream &out) {
	out << kCsvHeader << "\n";
	for (const BenchSample &s : report.samples) {
		out << "sample," << s.strategy << "," << (s.passthrough ? "true" : "false") << ","
		    << detail::FormatDouble(s.scale_factor) << "," << s.rep << ","
		    << detail::FormatDouble(s.duration_us) << ",,,,\n";
	}
	for (const BenchSummary &s : report.summaries) {
		out << "summary," << s.strategy << "," << (s.passthrough ? "true" : "false") << ","
		    << detail::FormatDouble(s.scale_factor) << ",,," << detail::FormatDouble(s.mean_us)
		    << "," << detail::FormatDouble(s.stderr_us) << ",";
		if (s.has_ttest) {
			out << detail::FormatDouble(s.t_stat) << "," << detail::FormatDouble(s.p_value);
		} else {
			out << ",";
		}
		out << "\n";
	}
}

inline void EmitCsv(const BenchReport &report, const std::string &path) {
	std::ofstream out(path);
	if (!out) {
		throw IoError("cannot write CSV file " + path);
	}
	EmitCsv(report, out);
	if (!out) {
		throw IoError("short write on CSV file " + path);
	}
}

inline BenchReport ParseCsvReport(std::istream &in) {
	std::string line;
	if (!std::getline(in, line) || detail::SplitCsvLine(line) != detail::SplitCsvLine(kCsvHeader)) {
		throw IoError("CSV header does not match the report schema");
	}
	BenchReport report;
	while (std::getline(in, line)) {
		if (line.empty()) {
			continue;
		}
		auto f = detail::SplitCsvLine(line);
		if (f.size() != 10) {
			throw IoError("CSV row with wrong field count");
		}
		bool passthrough = f[2] == "true";
		if (f[0] == "sample") {
			BenchSample s;
			s.strategy = f[1];
			s.passthrough = passthrough;
			s.scale_factor = detail::ParseDouble(f[3]);
			s.rep = static_cast<uint32_t>(std::stoul(f[4]));
			s.duration_us = detail::ParseDouble(f[5]);
			report.samples.push_back(std::move(s));
		} else if (f[0] == "summary") {
			BenchSummary s;
			s.strategy = f[1];
			s.passthrough = passthrough;
			s.scale_factor = detail::ParseDouble(f[3]);
			s.mean_us = detail::ParseDouble(f[6]);
			s.stderr_us = detail::ParseDouble(f[7]);
			if (!f[8].empty()) {
				s.has_ttest = true;
				s.t_stat = detail::ParseDouble(f[8]);
				s.p_value = detail::ParseDouble(f[9]);
			}
			report.summaries.push_back(std::move(s));
		} else {
			throw IoError("unknown CSV row kind: " + f[0]);
		}
	}
	return report;
}

inline BenchReport ParseCsvReport(const std::string &path) {
	std::ifstream in(path);
	if (!in) {
		throw IoError("cannot read CSV file " + path);
	}
	return ParseCsvReport(in);
}

struct BenchOptions {
	std::vector<double> scale_factors {0.01, 0.1, 1.0};
	uint32_t repetitions = 10;
	uint64_t seed = 42;
	uint32_t workers = 8;
	LatencyModel latency;                          // per-sf/rep seeds derive from `seed`
	sim_time_t overhead_ns = Micros(10);           // software stack, no passthrough
	sim_time_t passthrough_overhead_ns = Micros(4); // with passthrough
};

inline uint64_t CapacityForBlocks(uint64_t blocks, const DeviceGeometry &geometry) {
	return DataRegionBase(geometry) + blocks * kDataBlockSize;
}

namespace detail {

inline EngineConfig BenchEngineConfig(const BenchOptions &options, StrategyKind kind,
                                      double scale_factor, uint64_t rep_seed,
                                      sim_time_t overhead_ns) {
	EngineConfig config;
	DeviceGeometry geom;
	geom.lba_size_bytes = config.lba_size_bytes;
	geom.mdts_bytes = config.mdts_bytes;
	config.capacity_bytes =
	    std::max<uint64_t>(64ULL << 20,
	                       CapacityForBlocks(MakeWorkload(scale_factor).block_count(), geom));
	config.latency = options.latency;
	config.latency.rng_seed = rep_seed;
	config.latency.per_command_overhead_ns = overhead_ns;
	config.strategy.kind = kind;
	config.strategy.pool_size = 0; // one queue per worker
	config.workers = options.workers;
	return config;
}

inline BenchSummary Summarize(const std::string &strategy, bool passthrough, double sf,
                              std::span<const double> samples) {
	BenchSummary s;
	s.strategy = strategy;
	s.passthrough = passthrough;
	s.scale_factor = sf;
	s.mean_us = Mean(samples);
	s.stderr_us = StandardError(samples);
	return s;
}

// Experiment-level convention for identical paired runs: zero differences carry
// no evidence against the null, so report p = 1 instead of the undefined t.
inline void AttachTTest(BenchSummary &summary, std::span<const double> a,
                        std::span<const double> b) {
	summary.has_ttest = true;
	try {
		TTestResult r = PairedTTest(a, b);
		summary.t_stat = r.t_statistic;
		summary.p_value = r.p_value_one_sided;
	} catch (const ContractViolation &) {
		summary.t_stat = 0;
		summary.p_value = 1;
	}
}

} // namespace detail

// Experiment 1: the same thread-owned-queues scan with the stock software-stack
// overhead vs the passthrough overhead, paired per repetition. The t-test is
// one-sided against "no passthrough is at least as fast".
inline BenchReport ExperimentPassthrough(const BenchOptions &options) {
	if (options.repetitions < 2) {
		throw ContractViolation("paired t-test needs at least 2 repetitions");
	}
	BenchReport report;
	for (double sf : options.scale_factors) {
		std::vector<double> slow, fast;
		for (uint32_t rep = 0; rep < options.repetitions; rep++) {
			uint64_t rep_seed = options.seed + rep;
			Engine engine(detail::BenchEngineConfig(options, StrategyKind::AsyncThreadQueues, sf,
			                                        rep_seed, options.overhead_ns));
			engine.Format();
			GenerateResult dataset = GenerateDataset(engine, sf, rep_seed);
			engine.SetPerCommandOverhead(options.overhead_ns);
			ScanResult a = RunScan(engine, sf, rep_seed, options.workers, dataset.checksum);
			engine.SetPerCommandOverhead(options.passthrough_overhead_ns);
			ScanResult b = RunScan(engine, sf, rep_seed, options.workers, dataset.checksum);
			slow.push_back(a.duration_us());
			fast.push_back(b.duration_us());
			report.samples.push_back({"async-thread", false, sf, rep, a.duration_us()});
			report.samples.push_back({"async-thread", true, sf, rep, b.duration_us()});
		}
		report.summaries.push_back(detail::Summarize("async-thread", false, sf, slow));
		BenchSummary pt = detail::Summarize("async-thread", true, sf, fast);
		detail::AttachTTest(pt, slow, fast);
		report.summaries.push_back(std::move(pt));
	}
	return report;
}

struct CompareConfig {
	StrategyKind kind;
	bool passthrough;
};

inline const std::vector<CompareConfig> &CompareConfigs() {
	static const std::vector<CompareConfig> configs = {
	    {StrategyKind::FileBaseline, false},     {StrategyKind::SyncDirect, false},
	    {StrategyKind::AsyncSingleQueue, false}, {StrategyKind::AsyncQueuePool, false},
	    {StrategyKind::AsyncThreadQueues, false}, {StrategyKind::AsyncThreadQueues, true},
	};
	return configs;
}

// Experiment 2: every strategy against the file baseline, paired across
// strategies by per-repetition seeds. Each non-baseline summary carries a
// one-sided t-test against "the baseline is not slower".
inline BenchReport ExperimentCompare(const BenchOptions &options) {
	if (options.repetitions < 2) {
		throw ContractViolation("paired t-test needs at least 2 repetitions");
	}
	BenchReport report;
	for (double sf : options.scale_factors) {
		std::vector<std::vector<double>> samples(CompareConfigs().size());
		for (uint32_t rep = 0; rep < options.repetitions; rep++) {
			uint64_t rep_seed = options.seed + rep;
			for (size_t c = 0; c < CompareConfigs().size(); c++) {
				const CompareConfig &cfg = CompareConfigs()[c];
				sim_time_t overhead =
				    cfg.passthrough ? options.passthrough_overhead_ns : options.overhead_ns;
				Engine engine(
				    detail::BenchEngineConfig(options, cfg.kind, sf, rep_seed, overhead));
				engine.Format();
				GenerateResult dataset = GenerateDataset(engine, sf, rep_seed);
				ScanResult r = RunScan(engine, sf, rep_seed, options.workers, dataset.checksum);
				samples[c].push_back(r.duration_us());
				report.samples.push_back(
				    {StrategyName(cfg.kind), cfg.passthrough, sf, rep, r.duration_us()});
			}
		}
		for (size_t c = 0; c < CompareConfigs().size(); c++) {
			const CompareConfig &cfg = CompareConfigs()[c];
			BenchSummary s =
			    detail::Summarize(StrategyName(cfg.kind), cfg.passthrough, sf, samples[c]);
			if (c != 0) {
				detail::AttachTTest(s, samples[0], samples[c]);
			}
			report.summaries.push_back(std::move(s));
		}
	}
	return report;
}

inline void PrintReport(const BenchReport &report, std::ostream &out) {
	out << "strategy        passthrough  sf        mean_us        stderr_us      t_stat      "
	       "p_value\n";
	char line[256];
	for (const BenchSummary &s : report.summaries) {
		if (s.has_ttest) {
			std::snprintf(line, sizeof(line), "%-15s %-12s %-9g %-14.3f %-14.3f %-11.4g %-10.4g\n",
			              s.strategy.c_str(), s.passthrough ? "true" : "false", s.scale_factor,
			              s.mean_us, s.stderr_us, s.t_stat, s.p_value);
		} else {
			std::snprintf(line, sizeof(line), "%-15s %-12s %-9g %-14.3f %-14.3f %-11s %-10s\n",
			              s.strategy.c_str(), s.passthrough ? "true" : "false", s.scale_factor,
			              s.mean_us, s.stderr_us, "-", "-");
		}
		out << line;
	}
}

} // namespace quackstore
