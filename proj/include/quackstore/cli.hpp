#pragma once

#include "quackstore/bench.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace quackstore {
namespace cli {

inline uint64_t DefaultSeed() {
	if (const char *env = std::getenv("QUACKSTORE_SEED")) {
		char *end = nullptr;
		uint64_t v = std::strtoull(env, &end, 10);
		if (end && *end == '\0') {
			return v;
		}
		throw IoError("QUACKSTORE_SEED is not an integer");
	}
	return 42;
}

// Accepts plain bytes or KiB/MiB/GiB (and K/M/G) suffixes.
inline uint64_t ParseSize(const std::string &text) {
	size_t pos = 0;
	uint64_t value = std::stoull(text, &pos);
	std::string suffix = text.substr(pos);
	if (suffix.empty() || suffix == "B") {
		return value;
	}
	if (suffix == "K" || suffix == "KiB") {
		return value << 10;
	}
	if (suffix == "M" || suffix == "MiB") {
		return value << 20;
	}
	if (suffix == "G" || suffix == "GiB") {
		return value << 30;
	}
	throw IoError("unknown size suffix: " + suffix);
}

struct CommonFlags {
	std::string image;
	std::string strategy = "async-thread";
	uint32_t workers = 8;
	uint32_t queue_depth = 64;
	uint32_t pool_size = 0;
	bool no_drain = false;
	bool passthrough = false;
	double base_latency_us = 100;
	double jitter_us = 20;
	double overhead_us = 10;
	double passthrough_overhead_us = 4;
	uint64_t seed = 0;
};

inline EngineConfig BuildEngineConfig(const CommonFlags &flags, uint64_t capacity) {
	EngineConfig config;
	config.capacity_bytes = capacity;
	config.image_path = flags.image;
	config.workers = flags.workers;
	config.latency.base_latency_ns = static_cast<sim_time_t>(flags.base_latency_us * 1000);
	config.latency.jitter_range_ns = static_cast<sim_time_t>(flags.jitter_us * 1000);
	config.latency.per_command_overhead_ns = static_cast<sim_time_t>(
	    (flags.passthrough ? flags.passthrough_overhead_us : flags.overhead_us) * 1000);
	config.latency.rng_seed = flags.seed;
	config.strategy.kind = ParseStrategyName(flags.strategy);
	config.strategy.queue_depth = flags.queue_depth;
	config.strategy.pool_size = flags.pool_size;
	config.strategy.drain_after_block = !flags.no_drain;
	return config;
}

inline uint64_t ImageCapacity(const std::string &path) {
	namespace fs = std::filesystem;
	if (!fs::exists(path)) {
		throw IoError("missing device image: " + path + " (run format first)");
	}
	return fs::file_size(path);
}

inline DatabaseHeader LoadHeaderOrUsageError(Engine &engine) {
	try {
		return engine.LoadHeader();
	} catch (const CorruptionError &e) {
		// An unformatted or foreign image is a usage error, not data corruption.
		throw IoError(e.what());
	}
}

inline void AddLatencyFlags(CLI::App *cmd, CommonFlags &flags) {
	cmd->add_option("--base-latency-us", flags.base_latency_us, "device base latency (us)");
	cmd->add_option("--jitter-us", flags.jitter_us, "completion jitter half-width (us)");
	cmd->add_option("--overhead-us", flags.overhead_us, "per-command software overhead (us)");
	cmd->add_option("--pt-overhead-us", flags.passthrough_overhead_us,
	                "per-command overhead with passthrough (us)");
	cmd->add_option("--seed", flags.seed, "RNG seed (default: QUACKSTORE_SEED or 42)");
}

inline std::vector<std::vector<double>> ReadNumericCsv(const std::string &path,
                                                       size_t expect_columns) {
	std::ifstream in(path);
	if (!in) {
		throw IoError("cannot read CSV file " + path);
	}
	std::string line;
	if (!std::getline(in, line)) {
		throw IoError("empty CSV file " + path);
	}
	std::vector<std::vector<double>> columns(expect_columns);
	size_t row = 1;
	while (std::getline(in, line)) {
		row++;
		if (line.empty()) {
			continue;
		}
		auto fields = detail::SplitCsvLine(line);
		if (fields.size() != expect_columns) {
			throw IoError("CSV row " + std::to_string(row) + " has " +
			              std::to_string(fields.size()) + " fields, expected " +
			              std::to_string(expect_columns));
		}
		for (size_t c = 0; c < expect_columns; c++) {
			columns[c].push_back(detail::ParseDouble(fields[c]));
		}
	}
	return columns;
}

inline int Run(int argc, const char *const *argv) {
	CLI::App app {"quackstore: block storage on a simulated NVMe device, with five I/O "
	              "strategies and a benchmark harness"};
	app.require_subcommand(1);

	CommonFlags flags;
	flags.seed = DefaultSeed();

	// format
	auto *format_cmd = app.add_subcommand("format", "create and format a device image");
	std::string capacity_text = "64MiB";
	uint64_t lba_size = 512;
	uint64_t mdts = 131072;
	format_cmd->add_option("--image", flags.image, "device image path")->required();
	format_cmd->add_option("--capacity", capacity_text, "device capacity (e.g. 64MiB)");
	format_cmd->add_option("--lba", lba_size, "logical block size in bytes");
	format_cmd->add_option("--mdts", mdts, "maximum data transfer size in bytes");

	// generate
	auto *generate_cmd = app.add_subcommand("generate", "generate the scan dataset");
	double sf = 1.0;
	generate_cmd->add_option("--image", flags.image, "device image path")->required();
	generate_cmd->add_option("--sf", sf, "scale factor (150000 rows per unit)")->required();
	generate_cmd->add_option("--strategy", flags.strategy, "I/O strategy name");
	generate_cmd->add_option("--workers", flags.workers, "worker threads");
	AddLatencyFlags(generate_cmd, flags);

	// scan
	auto *scan_cmd = app.add_subcommand("scan", "scan the dataset and report latency");
	scan_cmd->add_option("--image", flags.image, "device image path")->required();
	scan_cmd->add_option("--sf", sf, "scale factor the dataset was generated with")->required();
	scan_cmd->add_option("--strategy", flags.strategy,
	                     "file, sync, async-single, async-pool or async-thread");
	scan_cmd->add_option("--workers", flags.workers, "worker threads");
	scan_cmd->add_option("--queue-depth", flags.queue_depth, "command queue depth");
	scan_cmd->add_option("--pool-size", flags.pool_size, "queue pool size (0 = workers)");
	scan_cmd->add_flag("--no-drain", flags.no_drain, "skip drain-after-block (hazard mode)");
	scan_cmd->add_flag("--passthrough", flags.passthrough, "use the passthrough overhead");
	AddLatencyFlags(scan_cmd, flags);

	// bench passthrough|compare
	auto *bench_cmd = app.add_subcommand("bench", "run the paper's experiments at desk scale");
	bench_cmd->require_subcommand(1);
	BenchOptions bench;
	bench.seed = flags.seed;
	std::string out_csv;
	auto add_bench_flags = [&](CLI::App *cmd) {
		cmd->add_option("--sf", bench.scale_factors, "scale factors")->delimiter(',');
		cmd->add_option("--reps", bench.repetitions, "repetitions per configuration");
		cmd->add_option("--workers", bench.workers, "worker threads");
		cmd->add_option("--seed", bench.seed, "base seed (rep r uses seed+r)");
		cmd->add_option("--out", out_csv, "write the report as CSV");
		cmd->add_option("--base-latency-us", flags.base_latency_us, "device base latency (us)");
		cmd->add_option("--jitter-us", flags.jitter_us, "completion jitter half-width (us)");
		cmd->add_option("--overhead-us", flags.overhead_us, "per-command overhead (us)");
		cmd->add_option("--pt-overhead-us", flags.passthrough_overhead_us,
		                "per-command overhead with passthrough (us)");
	};
	auto *bench_pt = bench_cmd->add_subcommand(
	    "passthrough", "experiment 1: passthrough vs no passthrough (async-thread)");
	add_bench_flags(bench_pt);
	auto *bench_cmp =
	    bench_cmd->add_subcommand("compare", "experiment 2: all strategies vs the file baseline");
	add_bench_flags(bench_cmp);

	// race-demo
	auto *race_cmd =
	    app.add_subcommand("race-demo", "dependent-task write race on the no-drain queue pool");
	double race_jitter_us = 100;
	uint32_t trials = 1000;
	bool race_no_drain = false;
	uint64_t race_seed = flags.seed;
	race_cmd->add_option("--jitter", race_jitter_us, "completion jitter half-width (us)");
	race_cmd->add_option("--trials", trials, "seeded trials");
	race_cmd->add_flag("--no-drain", race_no_drain, "disable drain-after-block (hazard mode)");
	race_cmd->add_option("--seed", race_seed, "base seed (trial t uses seed+t)");

	// stats ttest|stderr
	auto *stats_cmd = app.add_subcommand("stats", "statistics over CSV input");
	stats_cmd->require_subcommand(1);
	std::string stats_csv;
	auto *stats_ttest =
	    stats_cmd->add_subcommand("ttest", "paired one-sided t-test over a two-column CSV (a,b)");
	stats_ttest->add_option("--csv", stats_csv, "input CSV with header and columns a,b")
	    ->required();
	auto *stats_stderr =
	    stats_cmd->add_subcommand("stderr", "standard error of a one-column CSV (x)");
	stats_stderr->add_option("--csv", stats_csv, "input CSV with header and column x")->required();

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		int code = app.exit(e);
		return code == 0 ? 0 : 1;
	}

	try {
		if (*format_cmd) {
			uint64_t capacity = ParseSize(capacity_text);
			EngineConfig config = BuildEngineConfig(flags, capacity);
			config.lba_size_bytes = lba_size;
			config.mdts_bytes = mdts;
			config.strategy.kind = StrategyKind::SyncDirect;
			Engine engine(config);
			engine.Format();
			engine.Close();
			std::cout << "formatted " << flags.image << ": capacity " << capacity << " B, "
			          << UsableDataBlocks(engine.geometry()) << " data blocks of " << kDataBlockSize
			          << " B\n";
			return 0;
		}
		if (*generate_cmd) {
			Engine engine(BuildEngineConfig(flags, ImageCapacity(flags.image)));
			LoadHeaderOrUsageError(engine);
			GenerateResult result = GenerateDataset(engine, sf, flags.seed);
			engine.Close();
			std::cout << "generated sf " << sf << ": " << MakeWorkload(sf).rows() << " rows in "
			          << result.block_count << " blocks, checksum " << std::hex << result.checksum
			          << std::dec << "\n";
			return 0;
		}
		if (*scan_cmd) {
			Engine engine(BuildEngineConfig(flags, ImageCapacity(flags.image)));
			DatabaseHeader header = LoadHeaderOrUsageError(engine);
			Workload workload = MakeWorkload(sf);
			if (engine.strategy().kind() != StrategyKind::FileBaseline &&
			    header.max_block < workload.block_count()) {
				throw IoError("image holds " + std::to_string(header.max_block) +
				              " blocks but sf " + std::to_string(sf) + " needs " +
				              std::to_string(workload.block_count()) + "; generate first");
			}
			ScanResult result = RunScan(engine, sf, flags.seed, flags.workers);
			std::cout << "scan sf " << sf << " strategy " << flags.strategy << ": duration "
			          << result.duration_us() << " us (simulated I/O), host compute "
			          << result.host_seconds * 1000 << " ms, checksum " << std::hex
			          << result.checksum << std::dec << "\n";
			return 0;
		}
		if (*bench_pt || *bench_cmp) {
			bench.latency.base_latency_ns = static_cast<sim_time_t>(flags.base_latency_us * 1000);
			bench.latency.jitter_range_ns = static_cast<sim_time_t>(flags.jitter_us * 1000);
			bench.overhead_ns = static_cast<sim_time_t>(flags.overhead_us * 1000);
			bench.passthrough_overhead_ns =
			    static_cast<sim_time_t>(flags.passthrough_overhead_us * 1000);
			BenchReport report =
			    *bench_pt ? ExperimentPassthrough(bench) : ExperimentCompare(bench);
			PrintReport(report, std::cout);
			if (!out_csv.empty()) {
				EmitCsv(report, out_csv);
				std::cout << "wrote " << out_csv << "\n";
			}
			return 0;
		}
		if (*race_cmd) {
			RaceSweepResult result =
			    RaceSweep(static_cast<sim_time_t>(race_jitter_us * 1000), !race_no_drain, trials,
			              race_seed);
			if (result.inversions == 0) {
				std::cout << "Consistent " << result.consistent << "/" << trials << "\n";
			} else {
				std::cout << "InversionDetected " << result.inversions << "/" << trials
				          << " (Consistent " << result.consistent << "/" << trials << ")\n";
			}
			return 0;
		}
		if (*stats_ttest) {
			auto columns = ReadNumericCsv(stats_csv, 2);
			TTestResult r = PairedTTest(columns[0], columns[1]);
			std::cout << "t " << detail::FormatDouble(r.t_statistic) << ", df "
			          << r.degrees_of_freedom << ", one-sided p "
			          << detail::FormatDouble(r.p_value_one_sided) << "\n";
			return 0;
		}
		if (*stats_stderr) {
			auto columns = ReadNumericCsv(stats_csv, 1);
			std::cout << "stderr " << detail::FormatDouble(StandardError(columns[0])) << "\n";
			return 0;
		}
	} catch (const CorruptionError &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 2;
	} catch (const ContractViolation &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 2;
	} catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 1;
	}
	return 1;
}

} // namespace cli
} // namespace quackstore
