#pragma once

#include "quackstore/block_layout.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace quackstore {

enum class StrategyKind : u8 {
	FileBaseline = 0,
	SyncDirect = 1,
	AsyncSingleQueue = 2,
	AsyncQueuePool = 3,
	AsyncThreadQueues = 4,
};

inline const char *StrategyName(StrategyKind kind) {
	switch (kind) {
	case StrategyKind::FileBaseline:
		return "file";
	case StrategyKind::SyncDirect:
		return "sync";
	case StrategyKind::AsyncSingleQueue:
		return "async-single";
	case StrategyKind::AsyncQueuePool:
		return "async-pool";
	case StrategyKind::AsyncThreadQueues:
		return "async-thread";
	}
	return "?";
}

inline StrategyKind ParseStrategyName(const std::string &name) {
	if (name == "file") {
		return StrategyKind::FileBaseline;
	}
	if (name == "sync") {
		return StrategyKind::SyncDirect;
	}
	if (name == "async-single") {
		return StrategyKind::AsyncSingleQueue;
	}
	if (name == "async-pool") {
		return StrategyKind::AsyncQueuePool;
	}
	if (name == "async-thread") {
		return StrategyKind::AsyncThreadQueues;
	}
	throw IoError("unknown strategy name: " + name +
	              " (expected file, sync, async-single, async-pool or async-thread)");
}

inline bool IsAsync(StrategyKind kind) {
	return kind == StrategyKind::AsyncSingleQueue || kind == StrategyKind::AsyncQueuePool ||
	       kind == StrategyKind::AsyncThreadQueues;
}

struct StrategyConfig {
	StrategyKind kind = StrategyKind::AsyncThreadQueues;
	uint32_t pool_size = 0; // 0 = one queue per worker
	uint32_t queue_depth = 64;
	bool drain_after_block = true;
	// Virtual cost of claiming a wrapper (lock plus pool bookkeeping) and of
	// probing an unavailable slot; the queue-management overhead the locked
	// designs pay and thread-owned queues avoid.
	sim_time_t lock_cost_ns = Micros(6);
	sim_time_t probe_cost_ns = 200;
	std::string file_path; // FileBaseline backing file
};

// Submit with full-queue absorption: poke for due completions, or wait (in
// simulated time) for the next one, then retry. QueueFull never escapes.
inline void SubmitWithRetry(SimContext &ctx, CommandQueue &queue, const NvmeCommand &cmd) {
	while (queue.Submit(ctx, cmd) == SubmitResult::QueueFull) {
		if (queue.Poke(ctx, 1) == 0) {
			ctx.AdvanceTo(queue.NextCompletionTime());
			queue.Poke(ctx, 1);
		}
	}
}

// Mutex-guarded command queue. The mutex serializes physical access; busy_until
// serializes the same critical sections on the simulated clock, so contention is
// visible in measured (simulated) durations.
class QueueWrapper {
public:
	QueueWrapper(Device &device, uint32_t depth, sim_time_t lock_cost_ns)
	    : lock_cost_ns_(lock_cost_ns) {
		queue_ = device.CreateQueue(depth, [this](const Completion &c) {
			inflight_.fetch_sub(1, std::memory_order_relaxed);
			if (c.status != CompletionStatus::Success) {
				RecordError(c.status);
			}
		});
	}

	CommandQueue &queue() {
		return *queue_;
	}
	uint32_t inflight() const {
		return inflight_.load(std::memory_order_relaxed);
	}
	sim_time_t busy_until() const {
		return busy_until_.load(std::memory_order_relaxed);
	}
	CompletionStatus error() const {
		return static_cast<CompletionStatus>(error_.load(std::memory_order_relaxed));
	}
	void ClearError() {
		error_.store(0, std::memory_order_relaxed);
	}

	void Acquire(SimContext &ctx) {
		access_lock_.lock();
		ctx.AdvanceTo(busy_until_.load(std::memory_order_relaxed));
		ctx.Advance(lock_cost_ns_);
		queue_->SetOwner(std::this_thread::get_id());
	}

	// Claim without the simulated-time serialization: the mutex alone guards the
	// queue and the claimer pays only the lock cost. Pool wrappers are claimed
	// this way; per-worker virtual clocks drift apart, and stamping one worker's
	// release time into another worker's wait would serialize queues that a real
	// pool hands out independently.
	bool TryAcquireReal(SimContext &ctx) {
		if (!access_lock_.try_lock()) {
			return false;
		}
		ctx.Advance(lock_cost_ns_);
		queue_->SetOwner(std::this_thread::get_id());
		return true;
	}

	void Release(SimContext &ctx) {
		busy_until_.store(ctx.now, std::memory_order_relaxed);
		queue_->ClearOwner();
		access_lock_.unlock();
	}

	// Locked submit: the mutex is held across the submission and any full-queue
	// poking, and inflight is kept by the completion callback.
	void Submit(SimContext &ctx, const NvmeCommand &cmd) {
		Acquire(ctx);
		inflight_.fetch_add(1, std::memory_order_relaxed);
		SubmitWithRetry(ctx, *queue_, cmd);
		Release(ctx);
	}

	void Drain(SimContext &ctx) {
		Acquire(ctx);
		queue_->Drain(ctx);
		Release(ctx);
	}

	void RecordError(CompletionStatus status) {
		u8 expected = 0;
		error_.compare_exchange_strong(expected, static_cast<u8>(status));
	}

private:
	std::mutex access_lock_;
	std::atomic<sim_time_t> busy_until_ {0};
	std::unique_ptr<CommandQueue> queue_;
	std::atomic<uint32_t> inflight_ {0};
	std::atomic<u8> error_ {0};
	sim_time_t lock_cost_ns_;
};

inline void ThrowOnError(CompletionStatus status) {
	switch (status) {
	case CompletionStatus::Success:
		return;
	case CompletionStatus::OutOfRange:
		throw IoError("device reported out-of-range command");
	case CompletionStatus::DeviceError:
		throw IoError("device error");
	}
}

// Runtime-selectable I/O discipline. Block reads and writes present a blocking
// contract: when the call returns the transfer is complete, unless
// drain-after-block was disabled (the hazard mode), in which case writes return
// after submission.
class IoStrategy : public RangeIo {
public:
	IoStrategy(DeviceGeometry geometry, StrategyConfig config)
	    : geometry_(geometry), config_(config) {
	}

	StrategyKind kind() const {
		return config_.kind;
	}
	const StrategyConfig &config() const {
		return config_;
	}
	const DeviceGeometry &geometry() const {
		return geometry_;
	}

	void SetDrainAfterBlock(bool enabled) {
		if (!IsAsync(config_.kind)) {
			throw ContractViolation("drain-after-block only applies to async strategies");
		}
		config_.drain_after_block = enabled;
	}
	bool drain_after_block() const {
		return config_.drain_after_block;
	}

	void ReadBlock(SimContext &ctx, uint64_t block_id, DmaBuffer &buffer) {
		CheckBlockBuffer(buffer);
		ReadRange(ctx, BlockOffset(block_id, geometry_), kDataBlockSize, buffer);
	}
	void WriteBlock(SimContext &ctx, uint64_t block_id, DmaBuffer &buffer) {
		CheckBlockBuffer(buffer);
		WriteRange(ctx, BlockOffset(block_id, geometry_), kDataBlockSize, buffer);
	}

	// Worker lifecycle hooks; only the thread-owned-queues strategy needs them.
	virtual void BeginWorker(SimContext &ctx, uint32_t worker_index) {
		(void)ctx;
		(void)worker_index;
	}
	virtual void EndWorker(SimContext &ctx) {
		(void)ctx;
	}

	// Drains and releases every queue the strategy still holds.
	virtual void Shutdown(SimContext &ctx) {
		(void)ctx;
	}

protected:
	void CheckBlockBuffer(const DmaBuffer &buffer) const {
		if (buffer.size() != kDataBlockSize) {
			throw ContractViolation("block I/O requires a buffer of exactly " +
			                        std::to_string(kDataBlockSize) + " bytes");
		}
	}

	DeviceGeometry geometry_;
	StrategyConfig config_;
};

// Baseline: the block layout lives in an ordinary (sparse) host file and all I/O
// goes through buffered POSIX calls. Stands in for stock DuckDB in benchmarks.
class FileBaselineStrategy : public IoStrategy {
public:
	FileBaselineStrategy(DeviceGeometry geometry, StrategyConfig config)
	    : IoStrategy(geometry, config) {
		if (config_.file_path.empty()) {
			throw ContractViolation("file baseline requires a file path");
		}
		fd_ = ::open(config_.file_path.c_str(), O_RDWR | O_CREAT, 0644);
		if (fd_ < 0) {
			throw IoError("cannot open baseline file " + config_.file_path);
		}
	}
	~FileBaselineStrategy() override {
		if (fd_ >= 0) {
			::close(fd_);
		}
	}

	// The baseline has no simulated device, so the measured wall time of each
	// syscall is charged to the caller's clock; durations stay comparable with
	// the simulated strategies.
	void ReadRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	               DmaBuffer &buffer) override {
		CheckRange(byte_offset, length, buffer);
		auto start = std::chrono::steady_clock::now();
		ssize_t n = ::pread(fd_, buffer.data(), length, static_cast<off_t>(byte_offset));
		ChargeWallTime(ctx, start);
		if (n < 0) {
			throw IoError("pread failed on baseline file");
		}
		// holes and reads past EOF are zero-filled, matching a zeroed device
		if (static_cast<uint64_t>(n) < length) {
			std::memset(buffer.data() + n, 0, length - n);
		}
	}

	void WriteRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	                DmaBuffer &buffer) override {
		CheckRange(byte_offset, length, buffer);
		auto start = std::chrono::steady_clock::now();
		ssize_t n = ::pwrite(fd_, buffer.data(), length, static_cast<off_t>(byte_offset));
		ChargeWallTime(ctx, start);
		if (n < 0 || static_cast<uint64_t>(n) != length) {
			throw IoError("pwrite failed on baseline file");
		}
	}

	void Flush(SimContext &ctx) override {
		(void)ctx;
		if (::fsync(fd_) != 0) {
			throw IoError("fsync failed on baseline file");
		}
	}

private:
	static void ChargeWallTime(SimContext &ctx,
	                           std::chrono::steady_clock::time_point start) {
		auto elapsed = std::chrono::steady_clock::now() - start;
		ctx.Advance(static_cast<sim_time_t>(
		    std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count()));
	}

	void CheckRange(uint64_t byte_offset, uint64_t length, const DmaBuffer &buffer) const {
		if (length == 0) {
			throw ContractViolation("zero-length I/O rejected");
		}
		if (byte_offset + length > geometry_.CapacityBytes()) {
			throw ContractViolation("range exceeds device capacity");
		}
		if (length > buffer.size()) {
			throw ContractViolation("transfer exceeds buffer");
		}
	}

	int fd_ = -1;
};

// One blocking device command per MDTS chunk.
class SyncDirectStrategy : public IoStrategy {
public:
	SyncDirectStrategy(Device &device, StrategyConfig config)
	    : IoStrategy(device.geometry(), config), device_(device) {
	}

	void ReadRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	               DmaBuffer &buffer) override {
		RunSync(ctx, byte_offset, length, buffer, Opcode::Read);
	}
	void WriteRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	                DmaBuffer &buffer) override {
		RunSync(ctx, byte_offset, length, buffer, Opcode::Write);
	}
	void Flush(SimContext &ctx) override {
		(void)ctx; // every command already completed
	}

private:
	void RunSync(SimContext &ctx, uint64_t byte_offset, uint64_t length, DmaBuffer &buffer,
	             Opcode opcode) {
		uint64_t lba_size = geometry_.lba_size_bytes;
		uint64_t buffer_pos = 0;
		for (const ChunkRange &chunk : MapRangeToCommands(byte_offset, length, geometry_)) {
			NvmeCommand cmd;
			cmd.opcode = opcode;
			cmd.start_lba = chunk.start_lba;
			cmd.lba_count = chunk.lba_count;
			cmd.buffer = &buffer;
			cmd.buffer_offset = buffer_pos;
			ThrowOnError(device_.SyncCommand(ctx, cmd).status);
			buffer_pos += chunk.lba_count * lba_size;
		}
	}

	Device &device_;
};

// One shared queue behind one mutex; the lock is held across all of a block's
// submissions plus the drain, so block operations from different threads fully
// serialize. The strictest reading of the single-queue design.
class AsyncSingleQueueStrategy : public IoStrategy {
public:
	AsyncSingleQueueStrategy(Device &device, StrategyConfig config)
	    : IoStrategy(device.geometry(), config),
	      wrapper_(device, config.queue_depth, config.lock_cost_ns) {
	}

	void ReadRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	               DmaBuffer &buffer) override {
		RunLocked(ctx, byte_offset, length, buffer, Opcode::Read, /*drain=*/true);
	}
	void WriteRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	                DmaBuffer &buffer) override {
		RunLocked(ctx, byte_offset, length, buffer, Opcode::Write, config_.drain_after_block);
	}
	void Flush(SimContext &ctx) override {
		wrapper_.Drain(ctx);
		CheckErrors();
	}
	void Shutdown(SimContext &ctx) override {
		wrapper_.Acquire(ctx);
		wrapper_.queue().Drain(ctx);
		wrapper_.queue().Terminate(ctx);
		wrapper_.Release(ctx);
	}

	QueueWrapper &wrapper() {
		return wrapper_;
	}

private:
	void RunLocked(SimContext &ctx, uint64_t byte_offset, uint64_t length, DmaBuffer &buffer,
	               Opcode opcode, bool drain) {
		uint64_t lba_size = geometry_.lba_size_bytes;
		wrapper_.Acquire(ctx);
		uint64_t buffer_pos = 0;
		for (const ChunkRange &chunk : MapRangeToCommands(byte_offset, length, geometry_)) {
			NvmeCommand cmd;
			cmd.opcode = opcode;
			cmd.start_lba = chunk.start_lba;
			cmd.lba_count = chunk.lba_count;
			cmd.buffer = &buffer;
			cmd.buffer_offset = buffer_pos;
			SubmitWithRetry(ctx, wrapper_.queue(), cmd);
			buffer_pos += chunk.lba_count * lba_size;
		}
		if (drain) {
			wrapper_.queue().Drain(ctx);
		}
		wrapper_.Release(ctx);
		if (drain) {
			CheckErrors();
		}
	}

	void CheckErrors() {
		CompletionStatus status = wrapper_.error();
		if (status != CompletionStatus::Success) {
			wrapper_.ClearError();
			ThrowOnError(status);
		}
	}

	QueueWrapper wrapper_;
};

// Ordered pool of mutex-guarded queues. Every submission scans from index 0 for
// the first wrapper that is neither in use nor full, which biases load toward the
// low-index queues.
class AsyncQueuePoolStrategy : public IoStrategy {
public:
	AsyncQueuePoolStrategy(Device &device, StrategyConfig config, uint32_t pool_size)
	    : IoStrategy(device.geometry(), config) {
		if (pool_size == 0) {
			throw ContractViolation("queue pool requires at least one queue");
		}
		wrappers_.reserve(pool_size);
		for (uint32_t i = 0; i < pool_size; i++) {
			wrappers_.push_back(
			    std::make_unique<QueueWrapper>(device, config.queue_depth, config.lock_cost_ns));
		}
	}

	size_t pool_size() const {
		return wrappers_.size();
	}
	QueueWrapper &wrapper(size_t index) {
		return *wrappers_[index];
	}

	// First-available scan from index 0: skip wrappers that are in use (mutex
	// held) or full. Returns holding the wrapper's lock, with room for at least
	// one submission. When a full pass finds nothing, wait (in simulated time)
	// for the earliest completion to free capacity, then rescan.
	size_t AcquireFirstAvailable(SimContext &ctx) {
		for (;;) {
			for (size_t i = 0; i < wrappers_.size(); i++) {
				QueueWrapper &w = *wrappers_[i];
				if (!w.TryAcquireReal(ctx)) {
					ctx.Advance(config_.probe_cost_ns);
					continue;
				}
				CommandQueue &q = w.queue();
				if (q.outstanding() >= q.depth()) {
					q.Poke(ctx, q.depth()); // deliver anything already due
				}
				if (q.outstanding() < q.depth()) {
					return i;
				}
				w.Release(ctx);
				ctx.Advance(config_.probe_cost_ns);
			}
			sim_time_t wake = kSimNever;
			for (const auto &w : wrappers_) {
				wake = std::min(wake, w->queue().NextCompletionTime());
			}
			if (wake != kSimNever) {
				ctx.AdvanceTo(wake);
			}
		}
	}

	// First-available single-command submission. Returns the index the command
	// landed on.
	size_t PoolSubmit(SimContext &ctx, const NvmeCommand &cmd) {
		size_t i = AcquireFirstAvailable(ctx);
		QueueWrapper &w = *wrappers_[i];
		SubmitWithRetry(ctx, w.queue(), cmd);
		w.Release(ctx);
		return i;
	}

	void ReadRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	               DmaBuffer &buffer) override {
		RunPooled(ctx, byte_offset, length, buffer, Opcode::Read, /*drain=*/true);
	}
	void WriteRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	                DmaBuffer &buffer) override {
		RunPooled(ctx, byte_offset, length, buffer, Opcode::Write, config_.drain_after_block);
	}
	void Flush(SimContext &ctx) override {
		for (auto &w : wrappers_) {
			w->Drain(ctx);
		}
		CheckErrors();
	}
	void Shutdown(SimContext &ctx) override {
		for (auto &w : wrappers_) {
			w->Acquire(ctx);
			w->queue().Drain(ctx);
			w->queue().Terminate(ctx);
			w->Release(ctx);
		}
	}

private:
	// With drain-after-block on, the whole block rides one wrapper: claim the
	// first available queue, submit every chunk, drain it, release. Without the
	// drain (hazard mode), each command independently takes the first available
	// queue, exactly the submission path whose missing drain the race demo probes.
	void RunPooled(SimContext &ctx, uint64_t byte_offset, uint64_t length, DmaBuffer &buffer,
	               Opcode opcode, bool drain) {
		uint64_t lba_size = geometry_.lba_size_bytes;
		uint64_t buffer_pos = 0;
		ChunkPlan plan = MapRangeToCommands(byte_offset, length, geometry_);
		if (drain) {
			size_t i = AcquireFirstAvailable(ctx);
			QueueWrapper &w = *wrappers_[i];
			for (const ChunkRange &chunk : plan) {
				NvmeCommand cmd;
				cmd.opcode = opcode;
				cmd.start_lba = chunk.start_lba;
				cmd.lba_count = chunk.lba_count;
				cmd.buffer = &buffer;
				cmd.buffer_offset = buffer_pos;
				SubmitWithRetry(ctx, w.queue(), cmd);
				buffer_pos += chunk.lba_count * lba_size;
			}
			w.queue().Drain(ctx);
			w.Release(ctx);
			CheckErrors();
			return;
		}
		for (const ChunkRange &chunk : plan) {
			NvmeCommand cmd;
			cmd.opcode = opcode;
			cmd.start_lba = chunk.start_lba;
			cmd.lba_count = chunk.lba_count;
			cmd.buffer = &buffer;
			cmd.buffer_offset = buffer_pos;
			PoolSubmit(ctx, cmd);
			buffer_pos += chunk.lba_count * lba_size;
		}
	}

	void CheckErrors() {
		for (auto &w : wrappers_) {
			CompletionStatus status = w->error();
			if (status != CompletionStatus::Success) {
				w->ClearError();
				ThrowOnError(status);
			}
		}
	}

	std::vector<std::unique_ptr<QueueWrapper>> wrappers_;
};

namespace detail {
inline thread_local CommandQueue *tls_worker_queue = nullptr;
} // namespace detail

// One queue per worker thread, created before the worker's task loop and
// terminated after it. No locks: the queue is confined to its owning thread.
class AsyncThreadQueuesStrategy : public IoStrategy {
public:
	AsyncThreadQueuesStrategy(Device &device, StrategyConfig config)
	    : IoStrategy(device.geometry(), config), device_(device) {
	}

	void BeginWorker(SimContext &ctx, uint32_t worker_index) override {
		(void)ctx;
		if (detail::tls_worker_queue) {
			throw ContractViolation("worker queue already initialized on this thread");
		}
		auto queue = device_.CreateQueue(config_.queue_depth, [this](const Completion &c) {
			if (c.status != CompletionStatus::Success) {
				u8 expected = 0;
				error_.compare_exchange_strong(expected, static_cast<u8>(c.status));
			}
		});
		queue->SetOwner(std::this_thread::get_id());
		detail::tls_worker_queue = queue.get();
		std::lock_guard<std::mutex> guard(mutex_);
		if (queues_.size() <= worker_index) {
			queues_.resize(worker_index + 1);
		}
		queues_[worker_index] = std::move(queue);
	}

	void EndWorker(SimContext &ctx) override {
		CommandQueue *queue = detail::tls_worker_queue;
		if (!queue) {
			return;
		}
		queue->Drain(ctx);
		queue->Terminate(ctx);
		detail::tls_worker_queue = nullptr;
		std::lock_guard<std::mutex> guard(mutex_);
		for (auto &slot : queues_) {
			if (slot.get() == queue) {
				slot.reset();
				break;
			}
		}
	}

	// The queue owned by the calling worker thread. There is no fallback: calling
	// from a thread without an initialized queue is an error.
	CommandQueue &ThreadQueue() {
		if (!detail::tls_worker_queue) {
			throw ContractViolation("thread-owned queue requested from a non-worker thread");
		}
		return *detail::tls_worker_queue;
	}

	void ReadRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	               DmaBuffer &buffer) override {
		RunOwned(ctx, byte_offset, length, buffer, Opcode::Read, /*drain=*/true);
	}
	void WriteRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	                DmaBuffer &buffer) override {
		RunOwned(ctx, byte_offset, length, buffer, Opcode::Write, config_.drain_after_block);
	}

	// Drains the calling worker's own queue; earlier workers drained theirs when
	// they exited.
	void Flush(SimContext &ctx) override {
		if (detail::tls_worker_queue) {
			detail::tls_worker_queue->Drain(ctx);
			CheckErrors();
		}
	}

	void Shutdown(SimContext &ctx) override {
		EndWorker(ctx);
	}

private:
	void RunOwned(SimContext &ctx, uint64_t byte_offset, uint64_t length, DmaBuffer &buffer,
	              Opcode opcode, bool drain) {
		CommandQueue &queue = ThreadQueue();
		uint64_t lba_size = geometry_.lba_size_bytes;
		uint64_t buffer_pos = 0;
		for (const ChunkRange &chunk : MapRangeToCommands(byte_offset, length, geometry_)) {
			NvmeCommand cmd;
			cmd.opcode = opcode;
			cmd.start_lba = chunk.start_lba;
			cmd.lba_count = chunk.lba_count;
			cmd.buffer = &buffer;
			cmd.buffer_offset = buffer_pos;
			SubmitWithRetry(ctx, queue, cmd);
			buffer_pos += chunk.lba_count * lba_size;
		}
		if (drain) {
			queue.Drain(ctx);
			CheckErrors();
		}
	}

	void CheckErrors() {
		u8 status = error_.load(std::memory_order_relaxed);
		if (status != 0) {
			error_.store(0, std::memory_order_relaxed);
			ThrowOnError(static_cast<CompletionStatus>(status));
		}
	}

	Device &device_;
	std::mutex mutex_;
	std::vector<std::unique_ptr<CommandQueue>> queues_;
	std::atomic<u8> error_ {0};
};

inline std::unique_ptr<IoStrategy> MakeStrategy(Device *device, DeviceGeometry geometry,
                                                const StrategyConfig &config,
                                                uint32_t worker_count) {
	switch (config.kind) {
	case StrategyKind::FileBaseline:
		return std::make_unique<FileBaselineStrategy>(geometry, config);
	case StrategyKind::SyncDirect:
		return std::make_unique<SyncDirectStrategy>(*device, config);
	case StrategyKind::AsyncSingleQueue:
		return std::make_unique<AsyncSingleQueueStrategy>(*device, config);
	case StrategyKind::AsyncQueuePool: {
		uint32_t size = config.pool_size ? config.pool_size : std::max(worker_count, 1u);
		return std::make_unique<AsyncQueuePoolStrategy>(*device, config, size);
	}
	case StrategyKind::AsyncThreadQueues:
		return std::make_unique<AsyncThreadQueuesStrategy>(*device, config);
	}
	throw ContractViolation("unknown strategy kind");
}

} // namespace quackstore
