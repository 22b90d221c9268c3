#pragma once

#include "quackstore/scheduler.hpp"

#include <filesystem>
#include <fstream>

namespace quackstore {

struct EngineConfig {
	uint64_t capacity_bytes = 64ULL << 20;
	uint64_t lba_size_bytes = 512;
	uint64_t mdts_bytes = 131072;
	LatencyModel latency;
	StrategyConfig strategy;
	uint32_t workers = std::max(std::thread::hardware_concurrency(), 1u);
	std::string image_path; // device image, or the baseline file; empty = in-memory
};

inline uint64_t HashFileToCapacity(const std::string &path, uint64_t capacity) {
	std::vector<u8> bytes(capacity, 0);
	std::ifstream in(path, std::ios::binary);
	if (in) {
		in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(capacity));
	}
	return Fnv1a64(bytes.data(), bytes.size());
}

// Storage engine: a simulated device (or baseline file), the block layout
// manager, and the configured I/O strategy. Metadata operations run as
// single-task scheduler runs so they work identically under every strategy,
// including thread-owned queues.
class Engine {
public:
	explicit Engine(EngineConfig config) : config_(std::move(config)) {
		geometry_.lba_size_bytes = config_.lba_size_bytes;
		geometry_.mdts_bytes = config_.mdts_bytes;
		if (config_.strategy.kind == StrategyKind::FileBaseline) {
			if (config_.image_path.empty()) {
				config_.image_path = TempBaselinePath();
				owns_temp_file_ = true;
			}
			config_.strategy.file_path = config_.image_path;
			if (config_.capacity_bytes == 0 ||
			    config_.capacity_bytes % geometry_.lba_size_bytes != 0) {
				throw IoError("device capacity is not a multiple of the LBA size");
			}
			geometry_.lba_count = config_.capacity_bytes / geometry_.lba_size_bytes;
		} else {
			device_ = config_.image_path.empty()
			              ? Device::OpenMemory(config_.capacity_bytes, geometry_, config_.latency)
			              : Device::OpenImage(config_.image_path, config_.capacity_bytes, geometry_,
			                                  config_.latency);
			geometry_ = device_->geometry();
		}
		strategy_ = MakeStrategy(device_.get(), geometry_, config_.strategy, config_.workers);
		manager_ = std::make_unique<BlockManager>(geometry_);
	}

	~Engine() {
		try {
			Close();
		} catch (...) {
		}
	}

	Engine(const Engine &) = delete;
	Engine &operator=(const Engine &) = delete;

	void Close() {
		if (closed_) {
			return;
		}
		closed_ = true;
		SimContext ctx;
		strategy_->Shutdown(ctx);
		if (device_) {
			device_->Close();
		}
		if (owns_temp_file_) {
			std::error_code ec;
			std::filesystem::remove(config_.image_path, ec);
		}
	}

	const EngineConfig &config() const {
		return config_;
	}
	const DeviceGeometry &geometry() const {
		return geometry_;
	}
	Device *device() {
		return device_.get();
	}
	IoStrategy &strategy() {
		return *strategy_;
	}
	BlockManager &manager() {
		return *manager_;
	}
	uint32_t workers() const {
		return config_.workers;
	}

	void Format() {
		RunSingle([this](SimContext &ctx) { manager_->Format(ctx, *strategy_); });
	}

	DatabaseHeader LoadHeader() {
		DatabaseHeader header;
		RunSingle([&](SimContext &ctx) { header = manager_->LoadHeader(ctx, *strategy_); });
		return header;
	}

	void Checkpoint(const std::vector<DirtyBlock> &dirty = {}) {
		RunSingle([&](SimContext &ctx) { manager_->Checkpoint(ctx, *strategy_, dirty); });
	}

	// Runs the given actions as independent tasks on a fresh worker pool. Worker
	// clocks continue from the engine's epoch so simulated time never moves
	// backwards across runs; the returned makespan is this run's duration.
	Scheduler::RunStats RunTasks(std::vector<TaskAction> actions, uint32_t worker_count,
	                             AssignmentMode mode = AssignmentMode::Striped) {
		Scheduler scheduler(strategy_.get(), mode, sim_epoch_);
		for (auto &action : actions) {
			scheduler.SubmitTask({}, std::move(action));
		}
		Scheduler::RunStats stats = scheduler.RunToCompletion(worker_count);
		sim_time_t run_end = std::max(stats.makespan_ns, sim_epoch_);
		stats.makespan_ns = run_end - sim_epoch_;
		sim_epoch_ = run_end;
		return stats;
	}

	Scheduler::RunStats RunSingle(TaskAction action) {
		std::vector<TaskAction> actions;
		actions.push_back(std::move(action));
		return RunTasks(std::move(actions), 1);
	}

	// Passthrough mode is a smaller per-command overhead on the same device.
	void SetPerCommandOverhead(sim_time_t overhead_ns) {
		if (!device_) {
			return;
		}
		LatencyModel model = device_->latency();
		model.per_command_overhead_ns = overhead_ns;
		device_->SetLatencyModel(model);
	}

	// Resets run-scoped jitter state so a repeated workload sees the same
	// completion schedule; call before each measured run.
	void BeginMeasuredRun() {
		if (device_) {
			device_->ResetJitterOccurrences();
		}
	}

	uint64_t ImageHash() const {
		if (device_) {
			return device_->ImageHash();
		}
		return HashFileToCapacity(config_.image_path, config_.capacity_bytes);
	}

	// The simulated instant the engine's last run finished.
	sim_time_t sim_epoch() const {
		return sim_epoch_;
	}

private:
	static std::string TempBaselinePath() {
		static std::atomic<uint64_t> counter {0};
		auto dir = std::filesystem::temp_directory_path();
		return (dir / ("quackstore-baseline-" + std::to_string(::getpid()) + "-" +
		               std::to_string(counter.fetch_add(1)) + ".db"))
		    .string();
	}

	EngineConfig config_;
	DeviceGeometry geometry_;
	std::unique_ptr<Device> device_;
	std::unique_ptr<IoStrategy> strategy_;
	std::unique_ptr<BlockManager> manager_;
	sim_time_t sim_epoch_ = 0;
	bool owns_temp_file_ = false;
	bool closed_ = false;
};

} // namespace quackstore
