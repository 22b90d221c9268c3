#pragma once

#include "quackstore/common.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <thread>
#include <unordered_map>
#include <vector>

namespace quackstore {

struct DeviceGeometry {
	uint64_t lba_size_bytes = 512;
	uint64_t lba_count = 0;
	uint64_t mdts_bytes = 131072;

	uint64_t CapacityBytes() const {
		return lba_count * lba_size_bytes;
	}
	uint64_t MdtsLbas() const {
		return mdts_bytes / lba_size_bytes;
	}
};

// base_latency + jitter model the device; per_command_overhead models the software
// stack between the caller and the device and is charged to the submitting actor's
// clock. A smaller overhead is how passthrough mode is expressed.
struct LatencyModel {
	sim_time_t base_latency_ns = Micros(100);
	sim_time_t jitter_range_ns = Micros(20);
	sim_time_t per_command_overhead_ns = Micros(10);
	uint64_t rng_seed = 42;
};

enum class Opcode : u8 { Read = 0, Write = 1 };

enum class CompletionStatus : u8 { Success = 0, OutOfRange = 1, DeviceError = 2 };

class DmaBuffer {
public:
	DmaBuffer() = default;
	DmaBuffer(uint64_t length, uint64_t alignment) : size_(length), alignment_(alignment) {
		data_ = static_cast<u8 *>(std::aligned_alloc(alignment, length));
		if (!data_) {
			throw std::bad_alloc();
		}
		std::memset(data_, 0, length);
	}
	~DmaBuffer() {
		std::free(data_);
	}
	DmaBuffer(DmaBuffer &&other) noexcept
	    : data_(other.data_), size_(other.size_), alignment_(other.alignment_) {
		other.data_ = nullptr;
		other.size_ = 0;
	}
	DmaBuffer &operator=(DmaBuffer &&other) noexcept {
		if (this != &other) {
			std::free(data_);
			data_ = other.data_;
			size_ = other.size_;
			alignment_ = other.alignment_;
			other.data_ = nullptr;
			other.size_ = 0;
		}
		return *this;
	}
	DmaBuffer(const DmaBuffer &) = delete;
	DmaBuffer &operator=(const DmaBuffer &) = delete;

	u8 *data() {
		return data_;
	}
	const u8 *data() const {
		return data_;
	}
	uint64_t size() const {
		return size_;
	}
	uint64_t alignment() const {
		return alignment_;
	}
	std::span<u8> Span() {
		return {data_, size_};
	}
	std::span<const u8> Span() const {
		return {data_, size_};
	}

private:
	u8 *data_ = nullptr;
	uint64_t size_ = 0;
	uint64_t alignment_ = 0;
};

struct NvmeCommand {
	uint64_t command_id = 0; // assigned by the device at submission
	Opcode opcode = Opcode::Read;
	uint64_t start_lba = 0;
	uint64_t lba_count = 0;
	DmaBuffer *buffer = nullptr;
	uint64_t buffer_offset = 0;
	uint64_t user_tag = 0;
};

struct Completion {
	uint64_t command_id = 0;
	CompletionStatus status = CompletionStatus::Success;
	uint64_t user_tag = 0;
	sim_time_t completion_time = 0;
};

enum class LogEvent : u8 {
	SyncCommand = 0,
	Submit = 1,
	Deliver = 2,
	DrainBegin = 3,
	DrainEnd = 4,
	QueueCreate = 5,
	QueueTerminate = 6,
};

struct CommandLogEntry {
	uint64_t seq = 0;
	LogEvent event = LogEvent::SyncCommand;
	Opcode opcode = Opcode::Read;
	uint64_t start_lba = 0;
	uint64_t lba_count = 0;
	uint64_t queue_id = 0; // 0 = sync path
	uint32_t actor_id = 0;
	sim_time_t submit_time = 0;
	sim_time_t completion_time = 0;
	CompletionStatus status = CompletionStatus::Success;
};

enum class SubmitResult : u8 { Accepted = 0, QueueFull = 1 };

class CommandQueue;

class Device {
	friend class CommandQueue;

public:
	// In-memory backing: contents live for the Device's lifetime only.
	static std::unique_ptr<Device> OpenMemory(uint64_t capacity_bytes, DeviceGeometry geometry,
	                                          LatencyModel latency) {
		return std::unique_ptr<Device>(new Device(capacity_bytes, geometry, latency, ""));
	}

	// File-backed: the image is a raw little-endian LBA array of exactly capacity_bytes,
	// loaded at open and written back on Flush()/close.
	static std::unique_ptr<Device> OpenImage(const std::string &path, uint64_t capacity_bytes,
	                                         DeviceGeometry geometry, LatencyModel latency) {
		return std::unique_ptr<Device>(new Device(capacity_bytes, geometry, latency, path));
	}

	~Device() {
		try {
			Close();
		} catch (...) {
			// destructor must not throw; an explicit Close() surfaces flush errors
		}
	}

	const DeviceGeometry &geometry() const {
		return geometry_;
	}
	const LatencyModel &latency() const {
		return latency_;
	}
	void SetLatencyModel(const LatencyModel &model) {
		std::lock_guard<std::mutex> guard(mutex_);
		latency_ = model;
	}

	DmaBuffer AllocDmaBuffer(uint64_t length_bytes) const {
		if (length_bytes == 0) {
			throw ContractViolation("alloc_dma_buffer: length must be positive");
		}
		uint64_t lba = geometry_.lba_size_bytes;
		uint64_t rounded = (length_bytes + lba - 1) / lba * lba;
		return DmaBuffer(rounded, lba);
	}

	Completion SyncCommand(SimContext &ctx, NvmeCommand cmd) {
		CheckOpen();
		ValidateShape(cmd);
		cmd.command_id = next_command_id_.fetch_add(1, std::memory_order_relaxed);
		ctx.Advance(latency_.per_command_overhead_ns);
		std::lock_guard<std::mutex> guard(mutex_);
		CompletionStatus status = ClassifyLocked(cmd);
		sim_time_t comp_time = ctx.now + DeviceDelayLocked(cmd);
		uint64_t seq = next_apply_seq_++;
		if (status == CompletionStatus::Success) {
			if (cmd.opcode == Opcode::Write) {
				ApplyWriteLocked(cmd, comp_time, seq);
			} else {
				CopyOutLocked(cmd);
			}
		}
		ctx.AdvanceTo(comp_time);
		AppendLogLocked({0, LogEvent::SyncCommand, cmd.opcode, cmd.start_lba, cmd.lba_count, 0,
		                 ctx.actor_id, ctx.now, comp_time, status});
		return Completion {cmd.command_id, status, cmd.user_tag, comp_time};
	}

	std::unique_ptr<CommandQueue> CreateQueue(uint32_t depth,
	                                          std::function<void(const Completion &)> callback);

	void Close() {
		bool expected = false;
		if (!closed_.compare_exchange_strong(expected, true)) {
			return;
		}
		FlushImage();
	}
	bool closed() const {
		return closed_.load();
	}

	// Persist the backing image without closing (file-backed devices only).
	void Flush() {
		std::lock_guard<std::mutex> guard(mutex_);
		FlushImageLocked();
	}

	// After `commands` more commands, every subsequent command completes with
	// DeviceError and is not applied. Used for checkpoint fault injection.
	void FailAfterCommands(uint64_t commands) {
		std::lock_guard<std::mutex> guard(mutex_);
		fault_budget_ = commands;
	}
	void ClearFault() {
		std::lock_guard<std::mutex> guard(mutex_);
		fault_budget_.reset();
	}

	// Clears the per-(opcode, lba) occurrence counters that key jitter draws, so a
	// repeated workload observes the same completion schedule as its first run.
	void ResetJitterOccurrences() {
		std::lock_guard<std::mutex> guard(mutex_);
		occurrence_.clear();
	}

	std::vector<CommandLogEntry> CommandLog() const {
		std::lock_guard<std::mutex> guard(mutex_);
		return log_;
	}
	void ClearCommandLog() {
		std::lock_guard<std::mutex> guard(mutex_);
		log_.clear();
	}

	uint64_t AccessViolationCount() const {
		return access_violations_.load();
	}

	uint64_t ImageHash() const {
		std::lock_guard<std::mutex> guard(mutex_);
		return Fnv1a64(data_.data(), data_.size());
	}

	// Test hook: raw view of the backing store (no simulated-time accounting).
	std::vector<u8> SnapshotRange(uint64_t offset, uint64_t length) const {
		std::lock_guard<std::mutex> guard(mutex_);
		if (offset + length > data_.size()) {
			throw ContractViolation("snapshot range beyond capacity");
		}
		return std::vector<u8>(data_.begin() + offset, data_.begin() + offset + length);
	}

private:
	Device(uint64_t capacity_bytes, DeviceGeometry geometry, LatencyModel latency,
	       std::string image_path)
	    : geometry_(geometry), latency_(latency), image_path_(std::move(image_path)) {
		if (geometry_.lba_size_bytes == 0) {
			throw ContractViolation("lba_size must be positive");
		}
		if (geometry_.mdts_bytes == 0 || geometry_.mdts_bytes % geometry_.lba_size_bytes != 0) {
			throw ContractViolation("mdts must be a positive multiple of lba_size");
		}
		if (capacity_bytes == 0 || capacity_bytes % geometry_.lba_size_bytes != 0) {
			throw IoError("device capacity is not a multiple of the LBA size");
		}
		geometry_.lba_count = capacity_bytes / geometry_.lba_size_bytes;
		data_.assign(capacity_bytes, 0);
		lww_time_.assign(geometry_.lba_count, 0);
		lww_seq_.assign(geometry_.lba_count, 0);
		if (!image_path_.empty()) {
			LoadImage(capacity_bytes);
		}
	}

	void LoadImage(uint64_t capacity_bytes) {
		namespace fs = std::filesystem;
		if (!fs::exists(image_path_)) {
			return; // fresh image, materialized on flush
		}
		auto size = fs::file_size(image_path_);
		if (size != capacity_bytes) {
			throw IoError("image file size " + std::to_string(size) +
			              " does not match device capacity " + std::to_string(capacity_bytes));
		}
		std::ifstream in(image_path_, std::ios::binary);
		if (!in) {
			throw IoError("cannot read image file " + image_path_);
		}
		in.read(reinterpret_cast<char *>(data_.data()), static_cast<std::streamsize>(data_.size()));
		if (!in) {
			throw IoError("short read on image file " + image_path_);
		}
	}

	void FlushImage() {
		std::lock_guard<std::mutex> guard(mutex_);
		FlushImageLocked();
	}

	void FlushImageLocked() {
		if (image_path_.empty()) {
			return;
		}
		std::ofstream out(image_path_, std::ios::binary | std::ios::trunc);
		if (!out) {
			throw IoError("cannot write image file " + image_path_);
		}
		out.write(reinterpret_cast<const char *>(data_.data()),
		          static_cast<std::streamsize>(data_.size()));
		if (!out) {
			throw IoError("short write on image file " + image_path_);
		}
	}

	void CheckOpen() const {
		if (closed_.load()) {
			throw IoError("device is closed");
		}
	}

	// Shape violations are caller bugs, not device errors.
	void ValidateShape(const NvmeCommand &cmd) const {
		uint64_t lba_size = geometry_.lba_size_bytes;
		if (cmd.lba_count == 0) {
			throw ContractViolation("command with zero lba_count");
		}
		if (cmd.lba_count * lba_size > geometry_.mdts_bytes) {
			throw ContractViolation("command exceeds MDTS");
		}
		if (!cmd.buffer) {
			throw ContractViolation("command without buffer");
		}
		if (cmd.buffer_offset % lba_size != 0) {
			throw ContractViolation("buffer offset not LBA-aligned");
		}
		if (cmd.buffer_offset + cmd.lba_count * lba_size > cmd.buffer->size()) {
			throw ContractViolation("command transfer exceeds buffer");
		}
	}

	CompletionStatus ClassifyLocked(const NvmeCommand &cmd) {
		if (cmd.start_lba + cmd.lba_count > geometry_.lba_count) {
			return CompletionStatus::OutOfRange;
		}
		if (fault_budget_.has_value()) {
			if (*fault_budget_ == 0) {
				return CompletionStatus::DeviceError;
			}
			--*fault_budget_;
		}
		return CompletionStatus::Success;
	}

	// Device-side delay: base latency plus a jitter draw keyed by the command's
	// identity (seed, opcode, lba, occurrence), so identical workloads observe
	// identical schedules regardless of thread interleaving.
	sim_time_t DeviceDelayLocked(const NvmeCommand &cmd) {
		i64 jitter = 0;
		if (latency_.jitter_range_ns > 0) {
			uint64_t key = (cmd.start_lba << 1) | static_cast<uint64_t>(cmd.opcode);
			uint32_t occ = occurrence_[key]++;
			uint64_t h = SplitMix64(latency_.rng_seed ^ SplitMix64(HashCombine(key, occ)));
			i64 range = static_cast<i64>(latency_.jitter_range_ns);
			jitter = static_cast<i64>(h % (2 * static_cast<uint64_t>(range) + 1)) - range;
		}
		i64 delay = static_cast<i64>(latency_.base_latency_ns) + jitter;
		return delay > 0 ? static_cast<sim_time_t>(delay) : 0;
	}

	void ApplyWriteLocked(const NvmeCommand &cmd, sim_time_t comp_time, uint64_t seq) {
		uint64_t lba_size = geometry_.lba_size_bytes;
		const u8 *src = cmd.buffer->data() + cmd.buffer_offset;
		// Last-writer-wins by (completion_time, submission seq): the backing store
		// always reflects the command that completed last in simulated time, even
		// when payloads are staged here at submission.
		for (uint64_t i = 0; i < cmd.lba_count; i++) {
			uint64_t lba = cmd.start_lba + i;
			if (comp_time > lww_time_[lba] ||
			    (comp_time == lww_time_[lba] && seq >= lww_seq_[lba])) {
				std::memcpy(data_.data() + lba * lba_size, src + i * lba_size, lba_size);
				lww_time_[lba] = comp_time;
				lww_seq_[lba] = seq;
			}
		}
	}

	void CopyOutLocked(const NvmeCommand &cmd) {
		uint64_t lba_size = geometry_.lba_size_bytes;
		std::memcpy(cmd.buffer->data() + cmd.buffer_offset, data_.data() + cmd.start_lba * lba_size,
		            cmd.lba_count * lba_size);
	}

	void AppendLogLocked(CommandLogEntry entry) {
		entry.seq = next_log_seq_++;
		log_.push_back(entry);
	}

	void RecordAccessViolation() {
		access_violations_.fetch_add(1, std::memory_order_relaxed);
	}

	DeviceGeometry geometry_;
	LatencyModel latency_;
	std::string image_path_;
	std::vector<u8> data_;
	std::vector<sim_time_t> lww_time_;
	std::vector<uint64_t> lww_seq_;
	std::unordered_map<uint64_t, uint32_t> occurrence_;
	std::optional<uint64_t> fault_budget_;
	std::vector<CommandLogEntry> log_;
	uint64_t next_log_seq_ = 0;
	uint64_t next_apply_seq_ = 1;
	std::atomic<uint64_t> next_command_id_ {1};
	std::atomic<uint64_t> next_queue_id_ {1};
	std::atomic<uint64_t> access_violations_ {0};
	std::atomic<bool> closed_ {false};
	mutable std::mutex mutex_;
};

// Combined submission/completion queue. Not internally synchronized: exactly one
// thread may call Submit/Poke/Drain at a time (lock it via QueueWrapper or own it
// per thread). Violations are detected and counted, and an owner token, when set,
// is asserted on every access.
class CommandQueue {
public:
	CommandQueue(Device &device, uint64_t id, uint32_t depth,
	             std::function<void(const Completion &)> callback)
	    : device_(device), id_(id), depth_(depth), callback_(std::move(callback)) {
	}

	CommandQueue(const CommandQueue &) = delete;
	CommandQueue &operator=(const CommandQueue &) = delete;

	~CommandQueue() {
		// Queues should be drained and terminated explicitly; tolerate teardown of
		// an already-terminated queue.
	}

	uint64_t id() const {
		return id_;
	}
	uint32_t depth() const {
		return depth_;
	}
	uint32_t outstanding() const {
		return outstanding_.load(std::memory_order_relaxed);
	}
	bool terminated() const {
		return terminated_;
	}

	void SetOwner(std::thread::id owner) {
		owner_ = owner;
	}
	void ClearOwner() {
		owner_.reset();
	}

	SubmitResult Submit(SimContext &ctx, NvmeCommand cmd) {
		AccessGuard guard(*this);
		CheckLive();
		if (outstanding_.load(std::memory_order_relaxed) >= depth_) {
			return SubmitResult::QueueFull;
		}
		device_.ValidateShape(cmd);
		cmd.command_id = device_.next_command_id_.fetch_add(1, std::memory_order_relaxed);
		ctx.Advance(device_.latency_.per_command_overhead_ns);
		sim_time_t comp_time;
		CompletionStatus status;
		{
			std::lock_guard<std::mutex> dev_guard(device_.mutex_);
			status = device_.ClassifyLocked(cmd);
			comp_time = ctx.now + device_.DeviceDelayLocked(cmd);
			uint64_t seq = device_.next_apply_seq_++;
			if (status == CompletionStatus::Success && cmd.opcode == Opcode::Write) {
				device_.ApplyWriteLocked(cmd, comp_time, seq);
			}
			device_.AppendLogLocked({0, LogEvent::Submit, cmd.opcode, cmd.start_lba, cmd.lba_count,
			                         id_, ctx.actor_id, ctx.now, comp_time, status});
			pending_.push(Pending {comp_time, seq, cmd, status});
		}
		outstanding_.fetch_add(1, std::memory_order_relaxed);
		return SubmitResult::Accepted;
	}

	// Delivers up to max_completions completions that are due at the caller's
	// current simulated time, in completion-time order.
	size_t Poke(SimContext &ctx, size_t max_completions) {
		AccessGuard guard(*this);
		CheckLive();
		size_t delivered = 0;
		while (delivered < max_completions && !pending_.empty() &&
		       pending_.top().comp_time <= ctx.now) {
			DeliverTop(ctx);
			delivered++;
		}
		return delivered;
	}

	// Blocks (in simulated time) until every outstanding command has completed.
	void Drain(SimContext &ctx) {
		AccessGuard guard(*this);
		CheckLive();
		{
			std::lock_guard<std::mutex> dev_guard(device_.mutex_);
			device_.AppendLogLocked(
			    {0, LogEvent::DrainBegin, Opcode::Read, 0, 0, id_, ctx.actor_id, ctx.now, 0,
			     CompletionStatus::Success});
		}
		while (!pending_.empty()) {
			ctx.AdvanceTo(pending_.top().comp_time);
			DeliverTop(ctx);
		}
		{
			std::lock_guard<std::mutex> dev_guard(device_.mutex_);
			device_.AppendLogLocked(
			    {0, LogEvent::DrainEnd, Opcode::Read, 0, 0, id_, ctx.actor_id, ctx.now, 0,
			     CompletionStatus::Success});
		}
	}

	sim_time_t NextCompletionTime() const {
		return pending_.empty() ? kSimNever : pending_.top().comp_time;
	}

	void Terminate(SimContext &ctx) {
		AccessGuard guard(*this);
		CheckLive();
		if (outstanding_.load(std::memory_order_relaxed) != 0) {
			throw ContractViolation("terminate_queue with outstanding commands; drain first");
		}
		terminated_ = true;
		std::lock_guard<std::mutex> dev_guard(device_.mutex_);
		device_.AppendLogLocked({0, LogEvent::QueueTerminate, Opcode::Read, 0, 0, id_,
		                         ctx.actor_id, ctx.now, 0, CompletionStatus::Success});
	}

private:
	struct Pending {
		sim_time_t comp_time;
		uint64_t seq;
		NvmeCommand cmd;
		CompletionStatus status;
		bool operator>(const Pending &other) const {
			return comp_time != other.comp_time ? comp_time > other.comp_time : seq > other.seq;
		}
	};

	struct AccessGuard {
		explicit AccessGuard(CommandQueue &queue) : queue(queue) {
			if (queue.owner_.has_value() && *queue.owner_ != std::this_thread::get_id()) {
				throw ContractViolation("queue accessed by a thread that does not own it");
			}
			if (queue.accessors_.fetch_add(1, std::memory_order_acq_rel) != 0) {
				queue.device_.RecordAccessViolation();
			}
		}
		~AccessGuard() {
			queue.accessors_.fetch_sub(1, std::memory_order_acq_rel);
		}
		CommandQueue &queue;
	};

	void CheckLive() const {
		if (terminated_) {
			throw ContractViolation("operation on terminated queue");
		}
		if (device_.closed()) {
			throw IoError("device is closed");
		}
	}

	void DeliverTop(SimContext &ctx) {
		Pending p = pending_.top();
		pending_.pop();
		{
			std::lock_guard<std::mutex> dev_guard(device_.mutex_);
			if (p.status == CompletionStatus::Success && p.cmd.opcode == Opcode::Read) {
				device_.CopyOutLocked(p.cmd);
			}
			device_.AppendLogLocked({0, LogEvent::Deliver, p.cmd.opcode, p.cmd.start_lba,
			                         p.cmd.lba_count, id_, ctx.actor_id, ctx.now, p.comp_time,
			                         p.status});
		}
		outstanding_.fetch_sub(1, std::memory_order_relaxed);
		if (callback_) {
			callback_(Completion {p.cmd.command_id, p.status, p.cmd.user_tag, p.comp_time});
		}
	}

	Device &device_;
	uint64_t id_;
	uint32_t depth_;
	std::function<void(const Completion &)> callback_;
	std::priority_queue<Pending, std::vector<Pending>, std::greater<Pending>> pending_;
	std::atomic<uint32_t> outstanding_ {0};
	std::atomic<int> accessors_ {0};
	std::optional<std::thread::id> owner_;
	bool terminated_ = false;
};

inline std::unique_ptr<CommandQueue> Device::CreateQueue(
    uint32_t depth, std::function<void(const Completion &)> callback) {
	CheckOpen();
	if (depth == 0) {
		throw ContractViolation("queue depth must be at least 1");
	}
	uint64_t id = next_queue_id_.fetch_add(1, std::memory_order_relaxed);
	{
		std::lock_guard<std::mutex> guard(mutex_);
		AppendLogLocked({0, LogEvent::QueueCreate, Opcode::Read, 0, 0, id, 0, 0, 0,
		                 CompletionStatus::Success});
	}
	return std::make_unique<CommandQueue>(*this, id, depth, std::move(callback));
}

} // namespace quackstore
