#pragma once

#include "quackstore/io_strategy.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <functional>
#include <optional>
#include <thread>

namespace quackstore {

enum class TaskState : u8 { Blocked = 0, Queued = 1, Running = 2, Done = 3 };

enum class TaskEvent : u8 { Submitted = 0, Queued = 1, Started = 2, Done = 3 };

struct TaskEventRecord {
	uint64_t seq;
	uint64_t task_id;
	TaskEvent event;
};

using TaskAction = std::function<void(SimContext &)>;

// How ready tasks are handed to workers. GlobalFifo is the default: one shared
// queue popped in FIFO order. Striped pre-assigns ready tasks round-robin to
// worker-private FIFO queues, which makes a run's task-to-worker partition (and
// so its simulated makespan) independent of thread wakeup races; benchmarks use
// it so paired measurements stay deterministic.
enum class AssignmentMode : u8 { GlobalFifo = 0, Striped = 1 };

// FIFO task scheduler with dependency tracking. A task is enqueued only once all
// of its dependencies are Done. Worker virtual clocks are propagated across
// dependencies: a task starts no earlier (in simulated time) than the latest
// done-time of its dependencies.
class Scheduler {
public:
	// Worker clocks start at start_time; callers that reuse one device across
	// several runs pass the previous run's end so simulated time stays monotone.
	explicit Scheduler(IoStrategy *strategy = nullptr,
	                   AssignmentMode mode = AssignmentMode::GlobalFifo,
	                   sim_time_t start_time = 0)
	    : strategy_(strategy), mode_(mode), start_time_(start_time), makespan_(start_time) {
	}

	uint64_t SubmitTask(const std::vector<uint64_t> &deps, TaskAction action) {
		std::lock_guard<std::mutex> guard(mutex_);
		uint64_t id = tasks_.size();
		for (uint64_t dep : deps) {
			if (dep >= id) {
				// Dependencies must name already-submitted tasks, which also makes
				// dependency cycles unrepresentable.
				throw ContractViolation("task dependency " + std::to_string(dep) +
				                        " does not exist (cycle or unknown id)");
			}
		}
		tasks_.push_back(Task {});
		Task &task = tasks_.back();
		task.action = std::move(action);
		task.remaining_deps = 0;
		LogLocked(id, TaskEvent::Submitted);
		for (uint64_t dep : deps) {
			if (tasks_[dep].state != TaskState::Done) {
				task.remaining_deps++;
				tasks_[dep].dependents.push_back(id);
			} else {
				task.dep_finish_vt = std::max(task.dep_finish_vt, tasks_[dep].done_vt);
			}
		}
		if (task.remaining_deps == 0) {
			EnqueueLocked(id);
		} else {
			task.state = TaskState::Blocked;
		}
		ready_cv_.notify_all();
		return id;
	}

	// Pops the next ready task for the given worker slot and marks it Running.
	// Returns nothing when no task is currently ready.
	std::optional<uint64_t> PopReady(uint32_t worker_slot) {
		std::lock_guard<std::mutex> guard(mutex_);
		return PopReadyLocked(worker_slot);
	}

	// Marks a Running task Done and enqueues every dependent whose dependencies
	// are now all Done. Returns the newly enqueued ids in FIFO order.
	std::vector<uint64_t> MarkDone(uint64_t task_id, sim_time_t done_vt = 0) {
		std::vector<uint64_t> newly_queued;
		{
			std::lock_guard<std::mutex> guard(mutex_);
			Task &task = tasks_.at(task_id);
			if (task.state != TaskState::Running) {
				throw ContractViolation(task.state == TaskState::Done
				                            ? "double completion of task " + std::to_string(task_id)
				                            : "mark_done on a task that is not running");
			}
			task.state = TaskState::Done;
			task.done_vt = done_vt;
			done_count_++;
			LogLocked(task_id, TaskEvent::Done);
			for (uint64_t dep_id : task.dependents) {
				Task &dependent = tasks_[dep_id];
				dependent.dep_finish_vt = std::max(dependent.dep_finish_vt, done_vt);
				if (--dependent.remaining_deps == 0) {
					EnqueueLocked(dep_id);
					newly_queued.push_back(dep_id);
				}
			}
		}
		ready_cv_.notify_all();
		return newly_queued;
	}

	struct RunStats {
		sim_time_t makespan_ns = 0;
		double host_seconds = 0;
	};

	// Runs every submitted task to completion on worker_count threads. In
	// thread-queue mode each worker creates its device queue before its task loop
	// and drains and terminates it afterwards.
	RunStats RunToCompletion(uint32_t worker_count) {
		if (worker_count == 0) {
			throw ContractViolation("worker_count must be at least 1");
		}
		{
			std::lock_guard<std::mutex> guard(mutex_);
			if (mode_ == AssignmentMode::Striped) {
				striped_ready_.resize(worker_count);
				// tasks queued before the pool size was known sit in the global
				// queue; stripe them now
				while (!ready_.empty()) {
					striped_ready_[next_stripe_++ % worker_count].push_back(ready_.front());
					ready_.pop_front();
				}
			}
		}
		auto wall_start = std::chrono::steady_clock::now();
		std::vector<std::thread> workers;
		workers.reserve(worker_count);
		for (uint32_t i = 0; i < worker_count; i++) {
			workers.emplace_back([this, i] { WorkerLoop(i); });
		}
		for (auto &w : workers) {
			w.join();
		}
		RunStats stats;
		stats.host_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
		                                                   wall_start)
		                         .count();
		{
			std::lock_guard<std::mutex> guard(mutex_);
			if (failure_) {
				std::rethrow_exception(failure_);
			}
			stats.makespan_ns = makespan_;
		}
		return stats;
	}

	TaskState state(uint64_t task_id) const {
		std::lock_guard<std::mutex> guard(mutex_);
		return tasks_.at(task_id).state;
	}
	sim_time_t done_vt(uint64_t task_id) const {
		std::lock_guard<std::mutex> guard(mutex_);
		return tasks_.at(task_id).done_vt;
	}
	size_t task_count() const {
		std::lock_guard<std::mutex> guard(mutex_);
		return tasks_.size();
	}
	std::vector<TaskEventRecord> EventLog() const {
		std::lock_guard<std::mutex> guard(mutex_);
		return event_log_;
	}

private:
	struct Task {
		TaskAction action;
		TaskState state = TaskState::Blocked;
		uint32_t remaining_deps = 0;
		std::vector<uint64_t> dependents;
		sim_time_t dep_finish_vt = 0;
		sim_time_t done_vt = 0;
	};

	void EnqueueLocked(uint64_t id) {
		tasks_[id].state = TaskState::Queued;
		LogLocked(id, TaskEvent::Queued);
		if (mode_ == AssignmentMode::Striped && !striped_ready_.empty()) {
			striped_ready_[next_stripe_++ % striped_ready_.size()].push_back(id);
		} else {
			ready_.push_back(id);
		}
	}

	std::optional<uint64_t> PopReadyLocked(uint32_t worker_slot) {
		std::deque<uint64_t> *queue = &ready_;
		if (mode_ == AssignmentMode::Striped && worker_slot < striped_ready_.size()) {
			queue = &striped_ready_[worker_slot];
		}
		if (queue->empty()) {
			return std::nullopt;
		}
		uint64_t id = queue->front();
		queue->pop_front();
		tasks_[id].state = TaskState::Running;
		LogLocked(id, TaskEvent::Started);
		return id;
	}

	void LogLocked(uint64_t task_id, TaskEvent event) {
		event_log_.push_back(TaskEventRecord {next_event_seq_++, task_id, event});
	}

	bool AllDoneLocked() const {
		return done_count_ == tasks_.size() || failure_ != nullptr;
	}

	void WorkerLoop(uint32_t worker_index) {
		SimContext ctx;
		ctx.now = start_time_;
		ctx.actor_id = worker_index + 1;
		try {
			if (strategy_) {
				strategy_->BeginWorker(ctx, worker_index);
			}
			for (;;) {
				std::optional<uint64_t> task_id;
				{
					std::unique_lock<std::mutex> lock(mutex_);
					ready_cv_.wait(lock, [&] {
						return AllDoneLocked() || PeekReadyLocked(worker_index);
					});
					if (AllDoneLocked()) {
						break;
					}
					task_id = PopReadyLocked(worker_index);
					if (!task_id) {
						continue;
					}
					ctx.AdvanceTo(tasks_[*task_id].dep_finish_vt);
				}
				TaskAction *action;
				{
					std::lock_guard<std::mutex> guard(mutex_);
					action = &tasks_[*task_id].action;
				}
				(*action)(ctx);
				MarkDone(*task_id, ctx.now);
				{
					std::lock_guard<std::mutex> guard(mutex_);
					makespan_ = std::max(makespan_, ctx.now);
				}
			}
			if (strategy_) {
				strategy_->EndWorker(ctx);
				std::lock_guard<std::mutex> guard(mutex_);
				makespan_ = std::max(makespan_, ctx.now);
			}
		} catch (...) {
			{
				std::lock_guard<std::mutex> guard(mutex_);
				if (!failure_) {
					failure_ = std::current_exception();
				}
			}
			ready_cv_.notify_all();
			if (strategy_) {
				try {
					strategy_->EndWorker(ctx);
				} catch (...) {
					// teardown failure after a task failure: keep the first error
				}
			}
		}
	}

	bool PeekReadyLocked(uint32_t worker_slot) const {
		if (mode_ == AssignmentMode::Striped && worker_slot < striped_ready_.size()) {
			return !striped_ready_[worker_slot].empty();
		}
		return !ready_.empty();
	}

	IoStrategy *strategy_;
	AssignmentMode mode_;
	mutable std::mutex mutex_;
	std::condition_variable ready_cv_;
	// deque: stable element references while tasks are submitted mid-run
	std::deque<Task> tasks_;
	std::deque<uint64_t> ready_;
	std::vector<std::deque<uint64_t>> striped_ready_;
	size_t next_stripe_ = 0;
	size_t done_count_ = 0;
	uint64_t next_event_seq_ = 0;
	std::vector<TaskEventRecord> event_log_;
	std::exception_ptr failure_;
	sim_time_t start_time_ = 0;
	sim_time_t makespan_ = 0;
};

enum class RaceOutcome : u8 { Consistent = 0, InversionDetected = 1 };

// Two dependent tasks write version-stamped payloads to the same block through a
// queue pool. Task 2 only runs after Task 1 is marked done; without a drain the
// device may still complete Task 1's commands after Task 2's, leaving stale data.
inline RaceOutcome RaceDemo(sim_time_t jitter_ns, bool drain_enabled, uint64_t seed) {
	DeviceGeometry geometry;
	uint64_t capacity = DataRegionBase(geometry) + kDataBlockSize;
	LatencyModel latency;
	latency.jitter_range_ns = jitter_ns;
	latency.rng_seed = seed;
	auto device = Device::OpenMemory(capacity, geometry, latency);
	geometry = device->geometry();

	StrategyConfig config;
	config.kind = StrategyKind::AsyncQueuePool;
	config.pool_size = 2;
	config.drain_after_block = drain_enabled;
	auto strategy = MakeStrategy(device.get(), geometry, config, 2);

	SimContext main_ctx;
	BlockManager manager(geometry);
	manager.Format(main_ctx, *strategy);
	uint64_t block = manager.AllocateBlock();

	auto fill_payload = [&](DmaBuffer &buf, uint64_t version) {
		for (uint64_t i = 0; i < buf.size(); i += 8) {
			StoreLE64(buf.data() + i, HashCombine(HashCombine(seed, version), i));
		}
	};

	Scheduler scheduler(strategy.get(), AssignmentMode::GlobalFifo, main_ctx.now);
	uint64_t t1 = scheduler.SubmitTask({}, [&](SimContext &ctx) {
		DmaBuffer buf(kDataBlockSize, geometry.lba_size_bytes);
		fill_payload(buf, 1);
		strategy->WriteBlock(ctx, block, buf);
	});
	scheduler.SubmitTask({t1}, [&](SimContext &ctx) {
		DmaBuffer buf(kDataBlockSize, geometry.lba_size_bytes);
		fill_payload(buf, 2);
		strategy->WriteBlock(ctx, block, buf);
	});
	scheduler.RunToCompletion(2);
	strategy->Shutdown(main_ctx);

	// Read the block back synchronously and compare against Task 2's payload.
	StrategyConfig sync_config;
	sync_config.kind = StrategyKind::SyncDirect;
	SyncDirectStrategy reader(*device, sync_config);
	DmaBuffer got(kDataBlockSize, geometry.lba_size_bytes);
	reader.ReadBlock(main_ctx, block, got);
	DmaBuffer want(kDataBlockSize, geometry.lba_size_bytes);
	fill_payload(want, 2);
	bool is_task2 = std::memcmp(got.data(), want.data(), kDataBlockSize) == 0;
	return is_task2 ? RaceOutcome::Consistent : RaceOutcome::InversionDetected;
}

struct RaceSweepResult {
	uint32_t consistent = 0;
	uint32_t inversions = 0;
};

inline RaceSweepResult RaceSweep(sim_time_t jitter_ns, bool drain_enabled, uint32_t trials,
                                 uint64_t base_seed) {
	RaceSweepResult result;
	for (uint32_t trial = 0; trial < trials; trial++) {
		if (RaceDemo(jitter_ns, drain_enabled, base_seed + trial) == RaceOutcome::Consistent) {
			result.consistent++;
		} else {
			result.inversions++;
		}
	}
	return result;
}

} // namespace quackstore
